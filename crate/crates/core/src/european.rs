//! European option prices: the closed-form Black-Scholes call and its
//! strike/spot partials, put-call parity, and the out-of-the-money selector
//! `phi` that the Asian recursion integrates against.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{PricingError, Result};

/// Below this total volatility the lognormal collapses to its forward.
const MIN_TOTAL_VOL: f64 = 1e-12;

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// European call and put prices for a fixed model, rate and time to
/// maturity, as functions of spot and strike.
pub trait EuropeanPricer: Send + Sync {
    fn rate(&self) -> f64;
    fn tau(&self) -> f64;

    fn call(&self, spot: f64, strike: f64) -> Result<f64>;

    fn put(&self, spot: f64, strike: f64) -> Result<f64> {
        let c = self.call(spot, strike)?;
        Ok(put_from_call(c, spot, strike, self.rate(), self.tau()))
    }

    /// Out-of-the-money price: the put for strikes at or below the forward
    /// `e^{r tau} x`, the call above it.
    fn phi(&self, spot: f64, strike: f64) -> Result<f64> {
        if !(strike > 0.0) {
            return Err(PricingError::Domain(format!(
                "phi needs a positive strike, got {strike}"
            )));
        }
        if strike <= (self.rate() * self.tau()).exp() * spot {
            self.put(spot, strike)
        } else {
            self.call(spot, strike)
        }
    }
}

/// See [`EuropeanPricer::phi`].
pub fn phi(spot: f64, strike: f64, pricer: &dyn EuropeanPricer) -> Result<f64> {
    pricer.phi(spot, strike)
}

fn check_inputs(x: f64, k: f64, sigma: f64, tau: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(PricingError::Domain(format!(
            "spot must be positive, got {x}"
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PricingError::Domain(format!(
            "time to maturity must be positive, got {tau}"
        )));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(PricingError::Domain(format!(
            "strike must be nonnegative, got {k}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(PricingError::NonPositiveSigma(sigma));
    }
    Ok(())
}

fn d1_d2(x: f64, k: f64, r: f64, sigma: f64, tau: f64) -> (f64, f64) {
    let vol = sigma * tau.sqrt();
    let d1 = ((x / k).ln() + (r + 0.5 * sigma * sigma) * tau) / vol;
    (d1, d1 - vol)
}

/// Black-Scholes call `x N(d1) - K e^{-r tau} N(d2)`.
///
/// A zero strike returns the spot; a vanishing total volatility returns the
/// discounted deterministic payoff.
pub fn bs_call(x: f64, k: f64, r: f64, sigma: f64, tau: f64) -> Result<f64> {
    check_inputs(x, k, sigma, tau)?;
    if k == 0.0 {
        return Ok(x);
    }
    let df = (-r * tau).exp();
    if sigma * tau.sqrt() < MIN_TOTAL_VOL {
        return Ok((x - k * df).max(0.0));
    }
    let (d1, d2) = d1_d2(x, k, r, sigma, tau);
    Ok((x * norm_cdf(d1) - k * df * norm_cdf(d2)).max(0.0))
}

/// Black-Scholes put `K e^{-r tau} N(-d2) - x N(-d1)`.
pub fn bs_put(x: f64, k: f64, r: f64, sigma: f64, tau: f64) -> Result<f64> {
    check_inputs(x, k, sigma, tau)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let df = (-r * tau).exp();
    if sigma * tau.sqrt() < MIN_TOTAL_VOL {
        return Ok((k * df - x).max(0.0));
    }
    let (d1, d2) = d1_d2(x, k, r, sigma, tau);
    Ok((k * df * norm_cdf(-d2) - x * norm_cdf(-d1)).max(0.0))
}

/// Put from call by parity, `p = c - x + K e^{-r tau}`, floored at zero.
pub fn put_from_call(call: f64, x: f64, k: f64, r: f64, tau: f64) -> f64 {
    let p = call - x + k * (-r * tau).exp();
    if p < -1e-8 {
        log::debug!("parity put {p:e} floored at zero (x={x}, K={k})");
    }
    p.max(0.0)
}

/// Spot and strike partials of the Black-Scholes call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsGreeks {
    /// dc/dx = N(d1)
    pub delta: f64,
    /// dc/dK = -e^{-r tau} N(d2)
    pub dstrike: f64,
    /// d2c/dx2 = N'(d1) / (x sigma sqrt(tau))
    pub gamma: f64,
    /// d2c/dK2 = e^{-r tau} N'(d2) / (K sigma sqrt(tau))
    pub dstrike2: f64,
    /// d2c/dxdK = -N'(d1) / (K sigma sqrt(tau))
    pub cross: f64,
}

pub fn bs_greeks(x: f64, k: f64, r: f64, sigma: f64, tau: f64) -> Result<BsGreeks> {
    check_inputs(x, k, sigma, tau)?;
    if k == 0.0 {
        return Err(PricingError::Domain("greeks need a positive strike".into()));
    }
    let (d1, d2) = d1_d2(x, k, r, sigma, tau);
    let df = (-r * tau).exp();
    let vol = sigma * tau.sqrt();
    Ok(BsGreeks {
        delta: norm_cdf(d1),
        dstrike: -df * norm_cdf(d2),
        gamma: norm_pdf(d1) / (x * vol),
        dstrike2: df * norm_pdf(d2) / (k * vol),
        cross: -norm_pdf(d1) / (k * vol),
    })
}

/// Closed-form Black-Scholes pricer for one maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackScholesPricer {
    pub rate: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl BlackScholesPricer {
    pub fn new(rate: f64, sigma: f64, tau: f64) -> Self {
        Self { rate, sigma, tau }
    }
}

impl EuropeanPricer for BlackScholesPricer {
    fn rate(&self) -> f64 {
        self.rate
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn call(&self, spot: f64, strike: f64) -> Result<f64> {
        bs_call(spot, strike, self.rate, self.sigma, self.tau)
    }

    // Closed form rather than parity: deep out-of-the-money puts would
    // otherwise be lost to cancellation.
    fn put(&self, spot: f64, strike: f64) -> Result<f64> {
        bs_put(spot, strike, self.rate, self.sigma, self.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::UniformGrid;
    use crate::quad::simpson;
    use proptest::prelude::*;

    const R: f64 = 0.05;
    const DAY: f64 = 1.0 / 365.0;
    const T90: f64 = 90.0 / 365.0;

    #[test]
    fn zero_strike_call_is_spot() {
        assert_eq!(bs_call(100.0, 0.0, R, 0.2, T90).unwrap(), 100.0);
        assert!((bs_call(100.0, 1e-9, R, 0.2, T90).unwrap() - 100.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_limit() {
        let c = bs_call(100.0, 110.0, R, 1e-8, T90).unwrap();
        assert!(c.abs() < 1e-12);
        let c = bs_call(100.0, 90.0, R, 1e-15, T90).unwrap();
        assert!((c - (100.0 - 90.0 * (-R * T90).exp())).abs() < 1e-12);
    }

    #[test]
    fn atm_call_and_put_match_reference() {
        // 40-digit reference evaluation of the same formulas.
        let c = bs_call(100.0, 100.0, R, 0.2, T90).unwrap();
        assert!((c - 4.579_032_085_233_792).abs() < 1e-10, "{c}");
        let p = bs_put(100.0, 100.0, R, 0.2, T90).unwrap();
        assert!((p - 3.353_724_161_303_682).abs() < 1e-10, "{p}");
    }

    #[test]
    fn parity_put_examples() {
        assert_eq!(put_from_call(100.0, 100.0, 0.0, R, T90), 0.0);
        let fwd_strike = 100.0 * (R * T90).exp();
        assert!((put_from_call(7.5, 100.0, fwd_strike, R, T90) - 7.5).abs() < 1e-12);
        let p = put_from_call(4.578, 100.0, 100.0, R, T90);
        assert!((p - 3.352_692_076_069_893).abs() < 1e-10, "{p}");
    }

    #[test]
    fn phi_branches() {
        let bs = BlackScholesPricer::new(R, 0.2, DAY);
        let fwd = (R * DAY).exp();
        let at_fwd = bs.phi(1.0, fwd).unwrap();
        let call = bs.call(1.0, fwd).unwrap();
        assert!((at_fwd - call).abs() < 1e-14);

        assert!(bs.phi(1.0, 0.01).unwrap() < 1e-12);

        let atm = bs.phi(1.0, 1.0).unwrap();
        assert!((atm - 0.004_107_882_635_153_283).abs() < 1e-13, "{atm}");
        let approx = 0.2 * (DAY / (2.0 * PI)).sqrt();
        assert!((atm - approx).abs() < 1e-4);

        assert!(bs.phi(1.0, 0.0).is_err());
        assert!(bs.phi(1.0, -1.0).is_err());
    }

    #[test]
    fn phi_is_continuous_at_forward() {
        let bs = BlackScholesPricer::new(R, 0.2, T90);
        let kf = (R * T90).exp();
        for eps in [1e-4, 1e-6, 1e-8] {
            let gap = (bs.phi(1.0, kf - eps).unwrap() - bs.phi(1.0, kf + eps).unwrap()).abs();
            assert!(gap < 2.0 * eps, "eps {eps}: gap {gap}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bs_call(0.0, 1.0, R, 0.2, 1.0).is_err());
        assert!(bs_call(1.0, 1.0, R, 0.2, 0.0).is_err());
        assert_eq!(
            bs_call(1.0, 1.0, R, -0.2, 1.0).unwrap_err().name(),
            "NonPositiveSigma"
        );
    }

    #[test]
    fn deep_itm_delta_tends_to_one() {
        let g = bs_greeks(100.0, 1e-6, R, 0.2, T90).unwrap();
        assert!((g.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greeks_match_finite_differences_on_lattice() {
        let (sigma, tau) = (0.2, T90);
        let c = |x: f64, k: f64| bs_call(x, k, R, sigma, tau).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let x = 80.0 + 2.0 * i as f64;
            for j in 0..20 {
                let k = 80.0 + 2.0 * j as f64;
                let g = bs_greeks(x, k, R, sigma, tau).unwrap();
                let hx = 1e-4 * x;
                let hk = 1e-4 * x;
                let fd = [
                    (c(x + hx, k) - c(x - hx, k)) / (2.0 * hx),
                    (c(x, k + hk) - c(x, k - hk)) / (2.0 * hk),
                    (c(x + hx, k) - 2.0 * c(x, k) + c(x - hx, k)) / (hx * hx),
                    (c(x, k + hk) - 2.0 * c(x, k) + c(x, k - hk)) / (hk * hk),
                    (c(x + hx, k + hk) - c(x + hx, k - hk) - c(x - hx, k + hk) + c(x - hx, k - hk))
                        / (4.0 * hx * hk),
                ];
                let an = [g.delta, g.dstrike, g.gamma, g.dstrike2, g.cross];
                for (a, f) in an.iter().zip(fd) {
                    let rel = (a - f).abs() / a.abs().max(1e-3);
                    worst = worst.max(rel);
                }
            }
        }
        assert!(worst <= 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn strike_density_integrates_to_discount_factor() {
        let (sigma, tau) = (0.2, T90);
        let grid = UniformGrid::new(1e-6, (4.0 - 1e-6) / 40_000.0, 40_000);
        let mass = simpson(&grid, |k| {
            bs_greeks(1.0, k, R, sigma, tau).unwrap().dstrike2
        })
        .unwrap();
        assert!((mass - (-R * tau).exp()).abs() < 1e-6, "{mass}");
    }

    proptest! {
        #[test]
        fn parity_holds(x in 10.0f64..200.0, k in 1.0f64..300.0, sigma in 0.05f64..1.0, tau in 0.01f64..3.0) {
            let c = bs_call(x, k, R, sigma, tau).unwrap();
            let p = bs_put(x, k, R, sigma, tau).unwrap();
            let resid = c - p - x + k * (-R * tau).exp();
            prop_assert!(resid.abs() < 1e-10 * x.max(k), "residual {}", resid);
        }

        #[test]
        fn call_is_decreasing_and_convex_in_strike(x in 50.0f64..150.0, sigma in 0.05f64..0.8, tau in 0.01f64..2.0) {
            let ks: Vec<f64> = (0..60).map(|i| 40.0 + 3.0 * i as f64).collect();
            let cs: Vec<f64> = ks.iter().map(|&k| bs_call(x, k, R, sigma, tau).unwrap()).collect();
            for w in cs.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            for w in cs.windows(3) {
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10);
            }
        }
    }
}
