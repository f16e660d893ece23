//! Arithmetic Asian calls by backward recursion on normalized curves.
//!
//! `A_ell(w)` is the price of an Asian call on the average of `ell`
//! remaining fixings, for unit spot, strike `w`, one period before the first
//! of those fixings. Conditioning on the first fixing and expanding the
//! continuation value through European prices gives
//!
//! ```text
//! A_ell(w) = (ell-1)/ell * A_{ell-1}((w ell - e^{r tau}) / (e^{r tau} (ell-1)))
//!          + int_0^inf  w^2 ell / (K^3 (ell-1)) * A''_{ell-1}((w ell - K) / (K (ell-1))) * phi(1, K) dK
//! ```
//!
//! starting from `A_1(w) = c(1, w)` for `w > 0` and `1 - e^{-r tau} w` for
//! `w <= 0`. Curves are sampled on a uniform `w` grid, second derivatives
//! come from finite differences, and the strike integral runs over a
//! truncated `K` grid with composite Simpson.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    sure_exercise_value, validate, GridSpec, Market, ModelParams, NormalizedCurve, PhiCurve,
    Schedule, UniformGrid,
};
use crate::error::{PricingError, Result};
use crate::european::EuropeanPricer;
use crate::interp::{Interpolation, UniformInterpolant};
use crate::levy_fft::FftConfig;
use crate::quad::simpson_weights;

/// Finite-difference formula for `d^2 A / dw^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `(A[i-1] - 2 A[i] + A[i+1]) / h^2`, second order.
    ThreePoint,
    /// `(-A[i-2] + 16 A[i-1] - 30 A[i] + 16 A[i+1] - A[i+2]) / (12 h^2)`,
    /// fourth order; three-point next to the ends.
    #[default]
    FivePoint,
}

/// Numerical knobs of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub stencil: Stencil,
    /// Use the analytic sure-exercise branch left of the `w` grid and zero
    /// right of it. When off, leaving the grid is an error.
    #[serde(default = "yes")]
    pub extrapolate: bool,
    /// Floor negative second differences at zero. Off by default: on a
    /// variance-Gamma curve the clipped ringing accumulates as positive mass.
    #[serde(default)]
    pub clamp_negative_second_deriv: bool,
    /// Shift the strike grid so the forward `e^{r tau}` is a Simpson panel
    /// boundary; see [`align_panels`].
    #[serde(default = "yes")]
    pub align_strike_grid: bool,
}

fn yes() -> bool {
    true
}

impl RecursionConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            interpolation: Interpolation::default(),
            stencil: Stencil::default(),
            extrapolate: true,
            clamp_negative_second_deriv: false,
            align_strike_grid: true,
        }
    }

    pub fn for_model(model: &ModelParams) -> Self {
        Self::new(GridSpec::default_for(model))
    }
}

/// European pricer for one period of `tau` years: closed form for
/// Black-Scholes, FFT curve for variance-Gamma.
pub fn european_pricer(
    model: &ModelParams,
    rate: f64,
    tau: f64,
    fft: &FftConfig,
) -> Result<Arc<dyn EuropeanPricer>> {
    model.validate()?;
    Ok(match *model {
        ModelParams::BlackScholes { sigma } => {
            Arc::new(crate::european::BlackScholesPricer::new(rate, sigma, tau))
        }
        ModelParams::VarianceGamma { sigma, nu, theta } => {
            Arc::new(crate::levy_fft::FftPricer::variance_gamma(
                fft,
                crate::levy_fft::VgParams::new(sigma, nu, theta),
                rate,
                tau,
            )?)
        }
    })
}

/// `A_1` sampled on `w_grid`: the pricer's unit-spot call at strike `w`.
pub fn base_curve(pricer: &dyn EuropeanPricer, w_grid: UniformGrid) -> Result<NormalizedCurve> {
    let values = w_grid
        .points()
        .map(|w| {
            if w <= 0.0 {
                Ok(sure_exercise_value(1, pricer.rate(), pricer.tau(), w))
            } else {
                pricer.call(1.0, w)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalizedCurve {
        ell: 1,
        w_grid,
        values,
        second_derivs: Vec::new(),
        truncation_estimate: 0.0,
    })
}

/// Fills `second_derivs` by finite differences of `values`.
///
/// Interior points use `stencil`; the first and last points use the
/// one-sided second-order formula `(2 f0 - 5 f1 + 4 f2 - f3) / h^2`.
pub fn second_derivative(
    curve: NormalizedCurve,
    stencil: Stencil,
    clamp_negative: bool,
) -> Result<NormalizedCurve> {
    differentiate(curve, stencil, clamp_negative, None)
}

/// Like [`second_derivative`], but the end points use three-point
/// differences against `ghosts`, the curve's values one step beyond each
/// end. The recursion passes its own extrapolation here, which keeps the
/// end values consistent with what the next step reads off the grid; the
/// one-sided formula amplifies noise twelvefold and, once clamped, feeds
/// spurious mass back through the kernel.
pub fn second_derivative_with_ghosts(
    curve: NormalizedCurve,
    stencil: Stencil,
    clamp_negative: bool,
    ghosts: (f64, f64),
) -> Result<NormalizedCurve> {
    differentiate(curve, stencil, clamp_negative, Some(ghosts))
}

fn differentiate(
    mut curve: NormalizedCurve,
    stencil: Stencil,
    clamp_negative: bool,
    ghosts: Option<(f64, f64)>,
) -> Result<NormalizedCurve> {
    let f = &curve.values;
    let n = f.len();
    if n < 5 {
        return Err(PricingError::GridTooCoarse(n));
    }
    let h2 = curve.w_grid.step * curve.w_grid.step;
    let mut d2 = vec![0.0; n];
    match ghosts {
        Some((left, right)) => {
            d2[0] = (left - 2.0 * f[0] + f[1]) / h2;
            d2[n - 1] = (f[n - 2] - 2.0 * f[n - 1] + right) / h2;
        }
        None => {
            d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            d2[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        }
    }
    for i in 1..n - 1 {
        let three = (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2;
        d2[i] = match stencil {
            Stencil::FivePoint if i >= 2 && i + 2 < n => {
                (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                    / (12.0 * h2)
            }
            _ => three,
        };
    }
    if clamp_negative {
        let mut clamped = 0.0;
        for x in d2.iter_mut().filter(|x| **x < 0.0) {
            clamped -= *x;
            *x = 0.0;
        }
        if clamped > 0.0 {
            log::debug!(
                "ell={}: clamped negative second-derivative mass {:e}",
                curve.ell,
                clamped * curve.w_grid.step
            );
        }
    }
    curve.second_derivs = d2;
    Ok(curve)
}

/// Shifts `grid` by at most one step so that `anchor` falls on a boundary
/// between Simpson panels. `phi(1, K)` has a slope jump at the forward, and
/// Simpson's rule loses its order on a panel that straddles a kink.
pub fn align_panels(grid: UniformGrid, anchor: f64) -> UniformGrid {
    if !grid.contains(anchor) {
        return grid;
    }
    let panel = 2.0 * grid.step;
    let mut start = anchor - ((anchor - grid.start) / panel).round() * panel;
    if start <= 0.0 {
        start += panel;
    }
    UniformGrid::new(start, grid.step, grid.intervals)
}

/// `phi(1, K)` on the strike grid.
pub fn phi_curve(pricer: &dyn EuropeanPricer, k_grid: UniformGrid) -> Result<PhiCurve> {
    let phi_values = k_grid
        .points()
        .map(|k| pricer.phi(1.0, k))
        .collect::<Result<Vec<_>>>()?;
    let kmin = k_grid.start;
    let ratio = phi_values[0] / (kmin * kmin * kmin);
    if ratio > 1e-6 {
        log::warn!("phi(1, {kmin}) / K^3 = {ratio:e}: the 1/K^3 kernel is not negligible at k_min");
    }
    Ok(PhiCurve { k_grid, phi_values })
}

/// A sampled curve made evaluable on the whole real line.
struct CurveView<'a> {
    curve: &'a NormalizedCurve,
    values: UniformInterpolant,
    second: UniformInterpolant,
    rate: f64,
    tau: f64,
    extrapolate: bool,
}

impl<'a> CurveView<'a> {
    fn new(curve: &'a NormalizedCurve, rate: f64, tau: f64, cfg: &RecursionConfig) -> Result<Self> {
        if !curve.has_second_derivs() {
            return Err(PricingError::Domain(format!(
                "curve for ell={} has no second derivatives",
                curve.ell
            )));
        }
        Ok(Self {
            curve,
            values: UniformInterpolant::new(
                curve.w_grid,
                curve.values.clone(),
                Interpolation::MonotoneCubic,
            ),
            second: UniformInterpolant::new(
                curve.w_grid,
                curve.second_derivs.clone(),
                cfg.interpolation,
            ),
            rate,
            tau,
            extrapolate: cfg.extrapolate,
        })
    }

    fn out_of_grid(&self, w: f64) -> PricingError {
        PricingError::StrikeOutOfGrid {
            w,
            w_max: self.curve.w_grid.end(),
        }
    }

    fn value(&self, w: f64) -> Result<f64> {
        let g = &self.curve.w_grid;
        if w <= 0.0 || (w < g.start && self.extrapolate) {
            return Ok(sure_exercise_value(self.curve.ell, self.rate, self.tau, w));
        }
        if w > g.end() && self.extrapolate {
            return Ok(0.0);
        }
        self.values.eval(w).ok_or_else(|| self.out_of_grid(w))
    }

    #[inline]
    fn second(&self, w: f64) -> Result<f64> {
        let g = &self.curve.w_grid;
        if w <= 0.0 {
            return Ok(0.0);
        }
        if g.contains(w) {
            return Ok(self.second.eval_inside(w));
        }
        if self.extrapolate {
            Ok(0.0)
        } else {
            Err(self.out_of_grid(w))
        }
    }
}

/// Per-strike quantities of the integral that do not depend on `w`.
struct StrikeTable {
    inv_k: Vec<f64>,
    /// Simpson weight * phi(1, K) / K^3
    weighted_phi: Vec<f64>,
    phi_ends: (f64, f64),
    k_ends: (f64, f64),
}

impl StrikeTable {
    fn new(phi: &PhiCurve) -> Result<Self> {
        let weights = simpson_weights(&phi.k_grid)?;
        let inv_k = phi.k_grid.points().map(|k| 1.0 / k).collect();
        let weighted_phi = phi
            .k_grid
            .points()
            .zip(&weights)
            .zip(&phi.phi_values)
            .map(|((k, w), p)| w * p / (k * k * k))
            .collect();
        Ok(Self {
            inv_k,
            weighted_phi,
            phi_ends: (phi.phi_values[0], *phi.phi_values.last().unwrap()),
            k_ends: (phi.k_grid.start, phi.k_grid.end()),
        })
    }
}

/// `A_ell(w)` from the view of `A_{ell-1}`.
fn step_value(prev: &CurveView<'_>, strikes: &StrikeTable, w: f64) -> Result<f64> {
    let ell = prev.curve.ell as f64 + 1.0;
    let m = ell - 1.0;
    let growth = (prev.rate * prev.tau).exp();
    let first = (m / ell) * prev.value((w * ell - growth) / (growth * m))?;

    let scaled = w * ell / m;
    let inv_m = 1.0 / m;
    let mut integral = 0.0;
    for (inv_k, q) in strikes.inv_k.iter().zip(&strikes.weighted_phi) {
        if *q == 0.0 {
            continue;
        }
        let d2 = prev.second(scaled * inv_k - inv_m)?;
        integral += q * d2;
    }
    let value = first + w * w * ell / m * integral;
    if !value.is_finite() {
        return Err(PricingError::NonFinite(format!(
            "A_{} at w={w} is {value}",
            prev.curve.ell + 1
        )));
    }
    Ok(value.max(0.0))
}

/// One recursion step: samples `A_ell` on `w_grid` from `A_{ell-1}` (which
/// must carry second derivatives). The result has no second derivatives yet.
pub fn recursion_step(
    prev: &NormalizedCurve,
    phi: &PhiCurve,
    rate: f64,
    tau: f64,
    w_grid: UniformGrid,
    cfg: &RecursionConfig,
) -> Result<NormalizedCurve> {
    let view = CurveView::new(prev, rate, tau, cfg)?;
    let strikes = StrikeTable::new(phi)?;
    step_on_grid(&view, &strikes, w_grid)
}

fn step_on_grid(
    view: &CurveView<'_>,
    strikes: &StrikeTable,
    w_grid: UniformGrid,
) -> Result<NormalizedCurve> {
    let values = (0..w_grid.len())
        .into_par_iter()
        .map(|i| step_value(view, strikes, w_grid.point(i)))
        .collect::<Result<Vec<_>>>()?;

    let ell = view.curve.ell + 1;
    let m = (ell - 1) as f64;
    let kernel_sup = {
        let d2_max = view
            .curve
            .second_derivs
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        let w_max = w_grid.end();
        let k3 = strikes.k_ends.0.powi(3);
        w_max * w_max * ell as f64 / (m * k3) * d2_max
    };
    let truncation_estimate = (strikes.phi_ends.0 + strikes.phi_ends.1) * kernel_sup;

    Ok(NormalizedCurve {
        ell,
        w_grid,
        values,
        second_derivs: Vec::new(),
        truncation_estimate,
    })
}

/// Second derivatives as the engine takes them: with extrapolation on, the
/// ends see the same analytic/zero continuation that [`CurveView`] uses.
fn differentiate_for(
    curve: NormalizedCurve,
    cfg: &RecursionConfig,
    rate: f64,
    tau: f64,
) -> Result<NormalizedCurve> {
    if !cfg.extrapolate {
        return second_derivative(curve, cfg.stencil, cfg.clamp_negative_second_deriv);
    }
    let g = curve.w_grid;
    let left = sure_exercise_value(curve.ell, rate, tau, g.start - g.step);
    second_derivative_with_ghosts(
        curve,
        cfg.stencil,
        cfg.clamp_negative_second_deriv,
        (left, 0.0),
    )
}

/// Recursion driver for one model, rate and period. Curves are built lazily
/// and cached, so pricing many strikes or maturities reuses the work.
pub struct AsianEngine {
    pricer: Arc<dyn EuropeanPricer>,
    cfg: RecursionConfig,
    w_grid: UniformGrid,
    strikes: StrikeTable,
    phi: PhiCurve,
    curves: Vec<NormalizedCurve>,
}

impl AsianEngine {
    /// Engine over `pricer`, whose maturity is the observation period.
    pub fn new(pricer: Arc<dyn EuropeanPricer>, cfg: RecursionConfig) -> Result<Self> {
        let (mut grid, w_grid, mut k_grid) = cfg.grid.snap()?;
        if cfg.align_strike_grid {
            k_grid = align_panels(k_grid, (pricer.rate() * pricer.tau()).exp());
            grid.k_min = k_grid.start;
            grid.k_max = k_grid.end();
        }
        let cfg = RecursionConfig { grid, ..cfg };
        let phi = phi_curve(pricer.as_ref(), k_grid)?;
        let strikes = StrikeTable::new(&phi)?;
        let base = differentiate_for(
            base_curve(pricer.as_ref(), w_grid)?,
            &cfg,
            pricer.rate(),
            pricer.tau(),
        )?;
        Ok(Self {
            pricer,
            cfg,
            w_grid,
            strikes,
            phi,
            curves: vec![base],
        })
    }

    /// Engine for `model` with period `tau`.
    pub fn for_model(
        model: &ModelParams,
        rate: f64,
        tau: f64,
        cfg: RecursionConfig,
        fft: &FftConfig,
    ) -> Result<Self> {
        Self::new(european_pricer(model, rate, tau, fft)?, cfg)
    }

    pub fn rate(&self) -> f64 {
        self.pricer.rate()
    }

    pub fn tau(&self) -> f64 {
        self.pricer.tau()
    }

    pub fn config(&self) -> &RecursionConfig {
        &self.cfg
    }

    pub fn pricer(&self) -> &dyn EuropeanPricer {
        self.pricer.as_ref()
    }

    pub fn phi(&self) -> &PhiCurve {
        &self.phi
    }

    /// The sampled curve `A_ell`, with second derivatives.
    pub fn curve(&mut self, ell: usize) -> Result<&NormalizedCurve> {
        if ell == 0 {
            return Err(PricingError::BadSchedule("ell must be at least 1".into()));
        }
        while self.curves.len() < ell {
            let prev = self.curves.last().expect("base curve present");
            let view = CurveView::new(prev, self.rate(), self.tau(), &self.cfg)?;
            let next = step_on_grid(&view, &self.strikes, self.w_grid)?;
            let next = differentiate_for(next, &self.cfg, self.rate(), self.tau())?;
            log::trace!(
                "built A_{} (truncation estimate {:e})",
                next.ell,
                next.truncation_estimate
            );
            self.curves.push(next);
        }
        Ok(&self.curves[ell - 1])
    }

    fn check_strike(&self, w: f64) -> Result<()> {
        if !(w > 0.0 && w <= self.w_grid.end()) || !w.is_finite() {
            return Err(PricingError::StrikeOutOfGrid {
                w,
                w_max: self.w_grid.end(),
            });
        }
        Ok(())
    }

    /// `A_ell(w)` at any real `w`. The last step is evaluated at `w` itself
    /// rather than interpolated from the sampled curve.
    pub fn normalized_value(&mut self, ell: usize, w: f64) -> Result<f64> {
        if ell == 0 {
            return Err(PricingError::BadSchedule("ell must be at least 1".into()));
        }
        if w <= 0.0 {
            return Ok(sure_exercise_value(ell, self.rate(), self.tau(), w));
        }
        if ell == 1 {
            return self.pricer.call(1.0, w);
        }
        let (rate, tau, cfg) = (self.rate(), self.tau(), self.cfg);
        self.curve(ell - 1)?;
        let view = CurveView::new(&self.curves[ell - 2], rate, tau, &cfg)?;
        step_value(&view, &self.strikes, w)
    }

    /// `dA_ell/dw` at `w` by central differences with the grid step.
    pub fn normalized_slope(&mut self, ell: usize, w: f64) -> Result<f64> {
        let h = self.w_grid.step;
        let up = self.normalized_value(ell, w + h)?;
        let down = self.normalized_value(ell, w - h)?;
        Ok((up - down) / (2.0 * h))
    }

    /// Price at spot `spot` of an `n_obs`-fixing Asian call with strike
    /// `strike`: `spot * A_N(strike / spot)`.
    pub fn price(&mut self, spot: f64, n_obs: usize, strike: f64) -> Result<f64> {
        let w = strike / spot;
        self.check_strike(w)?;
        Ok(spot * self.normalized_value(n_obs, w)?)
    }

    /// Spot delta `A_N(w) - w A_N'(w)` at `w = strike / spot`.
    pub fn delta(&mut self, spot: f64, n_obs: usize, strike: f64) -> Result<f64> {
        let w = strike / spot;
        self.check_strike(w)?;
        let a = self.normalized_value(n_obs, w)?;
        let slope = self.normalized_slope(n_obs, w)?;
        Ok(a - w * slope)
    }

    /// Price after `fixings.len()` of the `n_obs` fixings have been
    /// observed, one period before the next fixing, with `spot` the current
    /// price. The remaining average is another Asian call with strike
    /// `E_n = (N E - sum fixings) / (N - n)`, scaled by `(N - n) / N`.
    pub fn seasoned_price(
        &mut self,
        spot: f64,
        n_obs: usize,
        strike: f64,
        fixings: &[f64],
    ) -> Result<f64> {
        let n = fixings.len();
        if n >= n_obs {
            return Err(PricingError::BadFixings(format!(
                "{n} fixings supplied for {n_obs} observation dates; at least one must remain"
            )));
        }
        if let Some(bad) = fixings.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(PricingError::BadFixings(format!(
                "fixing {bad} is not positive"
            )));
        }
        let remaining = n_obs - n;
        let observed: f64 = fixings.iter().sum();
        let reduced_strike = (n_obs as f64 * strike - observed) / remaining as f64;
        let w = reduced_strike / spot;
        let scale = remaining as f64 / n_obs as f64 * spot;
        if w <= 0.0 {
            return Ok(scale * sure_exercise_value(remaining, self.rate(), self.tau(), w));
        }
        self.check_strike(w)?;
        Ok(scale * self.normalized_value(remaining, w)?)
    }
}

fn engine_for(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    cfg: &RecursionConfig,
    fft: &FftConfig,
) -> Result<AsianEngine> {
    let v = validate(*model, *market, *schedule, cfg.grid)?;
    AsianEngine::for_model(
        &v.model,
        v.market.rate,
        v.schedule.tau,
        RecursionConfig {
            grid: v.grid,
            ..*cfg
        },
        fft,
    )
}

/// Recursion price of the Asian call at time zero, one period before the
/// first fixing.
pub fn price(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    strike: f64,
    cfg: &RecursionConfig,
    fft: &FftConfig,
) -> Result<f64> {
    engine_for(model, market, schedule, cfg, fft)?.price(market.spot, schedule.n_obs, strike)
}

/// Spot delta of [`price`].
pub fn delta(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    strike: f64,
    cfg: &RecursionConfig,
    fft: &FftConfig,
) -> Result<f64> {
    engine_for(model, market, schedule, cfg, fft)?.delta(market.spot, schedule.n_obs, strike)
}

/// See [`AsianEngine::seasoned_price`].
pub fn seasoned_price(
    model: &ModelParams,
    market: &Market,
    schedule: &Schedule,
    strike: f64,
    fixings: &[f64],
    cfg: &RecursionConfig,
    fft: &FftConfig,
) -> Result<f64> {
    engine_for(model, market, schedule, cfg, fft)?.seasoned_price(
        market.spot,
        schedule.n_obs,
        strike,
        fixings,
    )
}

/// `E[g(S_tau)]` from European prices:
/// `g(e^{r tau} S) + e^{r tau} int g''(K) phi(S, K) dK`, with the integral
/// truncated to `k_grid` (absolute strikes) and done by Simpson.
pub fn expect_via_options<G>(
    g_second_deriv: G,
    g_at_forward: f64,
    pricer: &dyn EuropeanPricer,
    spot: f64,
    k_grid: &UniformGrid,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let weights = simpson_weights(k_grid)?;
    let mut integral = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let k = k_grid.point(i);
        let g2 = g_second_deriv(k);
        if g2 != 0.0 {
            integral += w * g2 * pricer.phi(spot, k)?;
        }
    }
    Ok(g_at_forward + (pricer.rate() * pricer.tau()).exp() * integral)
}
