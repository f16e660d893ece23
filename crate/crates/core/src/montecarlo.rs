//! Seeded Monte Carlo for European and discretely monitored Asian calls
//! under GBM and exponential variance-Gamma dynamics.
//!
//! Every path draws from its own ChaCha8 stream, keyed by the seed and the
//! path index, and paths are accumulated in fixed-size chunks merged in
//! chunk order. Results therefore depend on `(seed, n_paths)` only, never on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::domain::{MCResult, Market, ModelParams, Schedule};
use crate::error::{PricingError, Result};
use crate::levy_fft::{vg_omega, VgParams};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 2_000_000,
            seed: 20_130_607,
            antithetic: false,
            workers: 0,
        }
    }
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(PricingError::BadSimConfig(
                "n_paths must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = Open01.sample(rng);
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// Exact one-period log-price stepping for a model.
#[derive(Debug, Clone, Copy)]
enum Stepper {
    Gbm {
        drift: f64,
        vol: f64,
    },
    Vg {
        drift: f64,
        theta: f64,
        sigma: f64,
        clock: Gamma<f64>,
    },
}

impl Stepper {
    fn new(model: &ModelParams, rate: f64, dt: f64) -> Result<Self> {
        match *model {
            ModelParams::BlackScholes { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(PricingError::NonPositiveSigma(sigma));
                }
                Ok(Self::Gbm {
                    drift: (rate - 0.5 * sigma * sigma) * dt,
                    vol: sigma * dt.sqrt(),
                })
            }
            ModelParams::VarianceGamma { sigma, nu, theta } => {
                let omega = vg_omega(sigma, nu, theta)?;
                let clock = Gamma::new(dt / nu, nu)
                    .map_err(|e| PricingError::BadSimConfig(format!("gamma clock: {e}")))?;
                Ok(Self::Vg {
                    drift: (rate + omega) * dt,
                    theta,
                    sigma,
                    clock,
                })
            }
        }
    }

    /// Log-return over one period; `flip` negates the Gaussian draw.
    #[inline]
    fn log_return(&self, rng: &mut ChaCha8Rng, flip: bool) -> f64 {
        let sign = if flip { -1.0 } else { 1.0 };
        match *self {
            Self::Gbm { drift, vol } => drift + sign * vol * std_normal(rng),
            Self::Vg {
                drift,
                theta,
                sigma,
                clock,
            } => {
                let g = clock.sample(rng);
                drift + theta * g + sign * sigma * g.sqrt() * std_normal(rng)
            }
        }
    }
}

/// Fixing simulator for one model, market and schedule.
struct PathGenerator {
    stepper: Stepper,
    spot: f64,
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl PathGenerator {
    fn new(model: &ModelParams, market: &Market, dt: f64, seed: u64) -> Result<Self> {
        market.validate()?;
        if !(dt > 0.0) {
            return Err(PricingError::BadSchedule(format!(
                "period must be positive, got {dt}"
            )));
        }
        Ok(Self {
            stepper: Stepper::new(model, market.rate, dt)?,
            spot: market.spot,
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        })
    }

    fn fill(&self, path: u64, flip: bool, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(path);
        let mut log_s = self.spot.ln();
        for x in out.iter_mut() {
            log_s += self.stepper.log_return(&mut rng, flip);
            *x = log_s.exp();
        }
    }
}

/// Running mean and centred sum of squares (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Self) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Simulates `n_obs` fixings `period` apart per path and averages the
/// `n_outputs` statistics that `stats` writes for each path. With
/// antithetic sampling each path index contributes the mean of the path and
/// its mirror (Gaussian draws negated).
fn simulate<F>(
    model: &ModelParams,
    market: &Market,
    period: f64,
    n_obs: usize,
    sim: &SimConfig,
    n_outputs: usize,
    stats: F,
) -> Result<Vec<MCResult>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    sim.validate()?;
    if n_obs == 0 {
        return Err(PricingError::BadSchedule("n_obs must be at least 1".into()));
    }
    let generator = PathGenerator::new(model, market, period, sim.seed)?;
    let n_chunks = sim.n_paths.div_ceil(CHUNK);

    let run_chunk = |c: usize| {
        let mut acc = vec![Moments::default(); n_outputs];
        let mut path = vec![0.0; n_obs];
        let mut out = vec![0.0; n_outputs];
        let mut mirror = vec![0.0; n_outputs];
        let end = ((c + 1) * CHUNK).min(sim.n_paths);
        for p in c * CHUNK..end {
            generator.fill(p as u64, false, &mut path);
            stats(&path, &mut out);
            if sim.antithetic {
                generator.fill(p as u64, true, &mut path);
                stats(&path, &mut mirror);
                for (o, m) in out.iter_mut().zip(&mirror) {
                    *o = 0.5 * (*o + m);
                }
            }
            for (a, &o) in acc.iter_mut().zip(&out) {
                a.push(o);
            }
        }
        acc
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sim.workers)
        .build()
        .map_err(|e| PricingError::BadSimConfig(format!("thread pool: {e}")))?;
    let partials: Vec<Vec<Moments>> =
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect());

    let mut total = vec![Moments::default(); n_outputs];
    for chunk in &partials {
        for (t, m) in total.iter_mut().zip(chunk) {
            t.merge(m);
        }
    }
    let results: Vec<MCResult> = total
        .iter()
        .map(|m| MCResult {
            estimate: m.mean,
            std_error: m.std_error(),
            n_paths: sim.n_paths,
            seed: sim.seed,
        })
        .collect();
    if let Some(bad) = results.iter().find(|r| !r.estimate.is_finite()) {
        return Err(PricingError::NonFinite(format!(
            "Monte Carlo estimate {}",
            bad.estimate
        )));
    }
    Ok(results)
}

/// Streams GBM fixing vectors `S_i = S_{i-1} exp((r - sigma^2/2) tau + sigma sqrt(tau) Z)`
/// into `stats`, returning the Monte Carlo mean of each statistic.
pub fn simulate_gbm_fixings<F>(
    market: &Market,
    sigma: f64,
    schedule: &Schedule,
    sim: &SimConfig,
    n_outputs: usize,
    stats: F,
) -> Result<Vec<MCResult>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let model = ModelParams::BlackScholes { sigma };
    simulate(
        &model,
        market,
        schedule.tau,
        schedule.n_obs,
        sim,
        n_outputs,
        stats,
    )
}

/// Streams variance-Gamma fixing vectors. Each period adds
/// `(r + omega) tau + theta g + sigma sqrt(g) Z` to the log price, with
/// `g ~ Gamma(shape tau/nu, scale nu)`.
pub fn simulate_vg_fixings<F>(
    market: &Market,
    params: VgParams,
    schedule: &Schedule,
    sim: &SimConfig,
    n_outputs: usize,
    stats: F,
) -> Result<Vec<MCResult>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let model = ModelParams::VarianceGamma {
        sigma: params.sigma,
        nu: params.nu,
        theta: params.theta,
    };
    model.validate()?;
    simulate(
        &model,
        market,
        schedule.tau,
        schedule.n_obs,
        sim,
        n_outputs,
        stats,
    )
}

fn check_model_for_mc(model: &ModelParams) -> Result<()> {
    match model {
        // a zero volatility is a legitimate degenerate path model here
        ModelParams::BlackScholes { sigma } if *sigma == 0.0 => Ok(()),
        m => m.validate(),
    }
}

/// Discounted Asian call payoffs `e^{-rT} ((1/N) sum S_{T_i} - E)^+` for
/// several strikes from one set of paths.
pub fn mc_asian_prices(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    strikes: &[f64],
    sim: &SimConfig,
) -> Result<Vec<MCResult>> {
    check_model_for_mc(model)?;
    schedule.validate()?;
    let df = (-market.rate * schedule.maturity()).exp();
    let n = schedule.n_obs as f64;
    simulate(
        model,
        market,
        schedule.tau,
        schedule.n_obs,
        sim,
        strikes.len(),
        |path, out| {
            let avg = path.iter().sum::<f64>() / n;
            for (o, k) in out.iter_mut().zip(strikes) {
                *o = df * (avg - k).max(0.0);
            }
        },
    )
}

pub fn mc_asian_price(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    strike: f64,
    sim: &SimConfig,
) -> Result<MCResult> {
    Ok(mc_asian_prices(model, market, schedule, &[strike], sim)?[0])
}

/// Discounted European call payoffs at maturity `tau` for several strikes.
pub fn mc_european_prices(
    model: &ModelParams,
    market: &Market,
    tau: f64,
    strikes: &[f64],
    sim: &SimConfig,
) -> Result<Vec<MCResult>> {
    check_model_for_mc(model)?;
    let df = (-market.rate * tau).exp();
    simulate(model, market, tau, 1, sim, strikes.len(), |path, out| {
        for (o, k) in out.iter_mut().zip(strikes) {
            *o = df * (path[0] - k).max(0.0);
        }
    })
}

pub fn mc_european_price(
    model: &ModelParams,
    market: &Market,
    tau: f64,
    strike: f64,
    sim: &SimConfig,
) -> Result<MCResult> {
    Ok(mc_european_prices(model, market, tau, &[strike], sim)?[0])
}

/// Draws `n` clock increments from a fresh stream; exposed for checks of
/// the gamma parameterization.
pub fn sample_gamma_clock(params: VgParams, dt: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let clock = Gamma::new(dt / params.nu, params.nu)
        .map_err(|e| PricingError::BadSimConfig(format!("gamma clock: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| clock.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::european::bs_call;

    const R: f64 = 0.05;

    fn market() -> Market {
        Market::new(100.0, R)
    }

    fn vg() -> ModelParams {
        ModelParams::VarianceGamma {
            sigma: 0.3,
            nu: 0.3,
            theta: -0.1,
        }
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let s = Schedule::from_days(10, 1.0, 365);
        let model = ModelParams::BlackScholes { sigma: 0.0 };
        let r = mc_asian_price(&model, &market(), &s, 95.0, &SimConfig::new(5000, 1)).unwrap();
        let avg = (1..=10).map(|i| 100.0 * (R * s.time(i)).exp()).sum::<f64>() / 10.0;
        let exact = (-R * s.maturity()).exp() * (avg - 95.0);
        assert!((r.estimate - exact).abs() < 1e-10);
        assert!(r.std_error < 1e-12);
    }

    #[test]
    fn gbm_terminal_moments() {
        let s = Schedule::new(4, 0.25);
        let sim = SimConfig::new(100_000, 7);
        let sigma = 0.2;
        let r = simulate_gbm_fixings(&market(), sigma, &s, &sim, 2, |p, out| {
            out[0] = p[3];
            out[1] = (p[3] / 100.0).ln();
        })
        .unwrap();
        let forward = 100.0 * (R * 1.0).exp();
        assert!(r[0].z_score(forward).abs() < 4.0, "{:?}", r[0]);
        let mean_log = (R - 0.5 * sigma * sigma) * 1.0;
        assert!(r[1].z_score(mean_log).abs() < 4.0, "{:?}", r[1]);
    }

    #[test]
    fn gbm_log_variance() {
        let s = Schedule::new(1, 0.5);
        let sim = SimConfig::new(100_000, 11);
        let sigma = 0.3;
        let mean_log = (R - 0.5 * sigma * sigma) * 0.5;
        let r = simulate_gbm_fixings(&market(), sigma, &s, &sim, 1, |p, out| {
            let x = (p[0] / 100.0).ln() - mean_log;
            out[0] = x * x;
        })
        .unwrap();
        assert!(r[0].z_score(sigma * sigma * 0.5).abs() < 4.0, "{:?}", r[0]);
    }

    #[test]
    fn vg_discounted_price_is_a_martingale() {
        let tau = 90.0 / 365.0;
        let r = mc_european_price(&vg(), &market(), tau, 0.0, &SimConfig::new(100_000, 3)).unwrap();
        assert!(r.z_score(100.0).abs() < 4.0, "{r:?}");
    }

    #[test]
    fn zero_strike_call_is_the_spot() {
        let model = ModelParams::BlackScholes { sigma: 0.2 };
        let r = mc_european_price(&model, &market(), 0.5, 0.0, &SimConfig::new(50_000, 5)).unwrap();
        assert!(r.z_score(100.0).abs() < 4.0, "{r:?}");
    }

    #[test]
    fn vg_approaches_gbm_as_nu_vanishes() {
        let tau = 90.0 / 365.0;
        let model = ModelParams::VarianceGamma {
            sigma: 0.2,
            nu: 1e-5,
            theta: 0.0,
        };
        let r =
            mc_european_price(&model, &market(), tau, 100.0, &SimConfig::new(100_000, 9)).unwrap();
        let exact = bs_call(100.0, 100.0, R, 0.2, tau).unwrap();
        assert!(r.z_score(exact).abs() < 4.0, "{r:?} vs {exact}");
    }

    #[test]
    fn gamma_clock_moments() {
        let params = VgParams::new(0.3, 0.3, -0.1);
        let dt = 1.0 / 365.0;
        let n = 200_000;
        let g = sample_gamma_clock(params, dt, n, 42).unwrap();
        let mean = g.iter().sum::<f64>() / n as f64;
        let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (params.nu * dt / n as f64).sqrt();
        assert!(g.iter().all(|&x| x >= 0.0));
        assert!((mean - dt).abs() < 4.0 * se, "{mean} vs {dt}");
        assert!((var / (params.nu * dt) - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let s = Schedule::from_days(20, 1.0, 365);
        let strikes = [90.0, 100.0, 110.0];
        let run = |workers| {
            let sim = SimConfig {
                workers,
                ..SimConfig::new(3 * CHUNK + 17, 123)
            };
            mc_asian_prices(&vg(), &market(), &s, &strikes, &sim).unwrap()
        };
        let base = run(1);
        for workers in [2, 4, 8] {
            let other = run(workers);
            for (a, b) in base.iter().zip(&other) {
                assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
                assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
            }
        }
    }

    #[test]
    fn standard_error_shrinks_like_root_n() {
        let model = ModelParams::BlackScholes { sigma: 0.2 };
        let s = Schedule::from_days(5, 1.0, 365);
        let se = |n| {
            mc_asian_price(&model, &market(), &s, 100.0, &SimConfig::new(n, 1))
                .unwrap()
                .std_error
        };
        let ratio = se(160_000) / se(40_000);
        assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn antithetic_pairs_reduce_error() {
        let model = ModelParams::BlackScholes { sigma: 0.2 };
        let s = Schedule::from_days(5, 1.0, 365);
        let plain = SimConfig::new(40_000, 1);
        let anti = SimConfig {
            antithetic: true,
            ..plain
        };
        let a = mc_asian_price(&model, &market(), &s, 100.0, &plain).unwrap();
        let b = mc_asian_price(&model, &market(), &s, 100.0, &anti).unwrap();
        assert!(b.std_error < a.std_error);
        assert!((a.estimate - b.estimate).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn rejects_empty_runs_and_bad_models() {
        let s = Schedule::from_days(5, 1.0, 365);
        let model = ModelParams::BlackScholes { sigma: 0.2 };
        let err = mc_asian_price(&model, &market(), &s, 100.0, &SimConfig::new(0, 1)).unwrap_err();
        assert_eq!(err.name(), "BadSimConfig");
        let bad = ModelParams::BlackScholes { sigma: -0.1 };
        assert!(mc_asian_price(&bad, &market(), &s, 100.0, &SimConfig::new(10, 1)).is_err());
    }
}
