//! Value types shared by the pricing modules and the validation that
//! turns user input into a [`ValidatedConfig`].
//!
//! Everything here is immutable once built. Grids are snapped so that each
//! range splits into an even number of steps, which composite Simpson needs.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Risk-neutral dynamics of the underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModelParams {
    /// Geometric Brownian motion with annualized volatility `sigma`.
    #[serde(rename = "bs")]
    BlackScholes { sigma: f64 },
    /// Exponential variance-Gamma: Brownian motion with drift `theta` and
    /// volatility `sigma` run on a Gamma clock of variance rate `nu`.
    #[serde(rename = "vg")]
    VarianceGamma { sigma: f64, nu: f64, theta: f64 },
}

impl ModelParams {
    pub fn sigma(&self) -> f64 {
        match *self {
            Self::BlackScholes { sigma } | Self::VarianceGamma { sigma, .. } => sigma,
        }
    }

    pub fn is_variance_gamma(&self) -> bool {
        matches!(self, Self::VarianceGamma { .. })
    }

    /// Checks the parameter invariants of the model.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::BlackScholes { sigma } => check_sigma(sigma),
            Self::VarianceGamma { sigma, nu, theta } => {
                check_sigma(sigma)?;
                if !theta.is_finite() {
                    return Err(PricingError::NonFiniteInput("theta"));
                }
                if !nu.is_finite() {
                    return Err(PricingError::NonFiniteInput("nu"));
                }
                if nu <= 0.0 {
                    return Err(PricingError::NonPositiveNu(nu));
                }
                let base = vg_log_argument(sigma, nu, theta);
                if base <= 0.0 {
                    return Err(PricingError::VgInadmissible(base));
                }
                Ok(())
            }
        }
    }
}

/// `1 - theta*nu - sigma^2*nu/2`, the argument of the log in the VG drift
/// correction. Must be positive.
pub fn vg_log_argument(sigma: f64, nu: f64, theta: f64) -> f64 {
    1.0 - theta * nu - 0.5 * sigma * sigma * nu
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() {
        return Err(PricingError::NonFiniteInput("sigma"));
    }
    if sigma <= 0.0 {
        return Err(PricingError::NonPositiveSigma(sigma));
    }
    Ok(())
}

/// Spot and continuously compounded short rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Market {
    pub spot: f64,
    pub rate: f64,
}

impl Market {
    pub fn new(spot: f64, rate: f64) -> Self {
        Self { spot, rate }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.spot.is_finite() {
            return Err(PricingError::NonFiniteInput("spot"));
        }
        if self.spot <= 0.0 {
            return Err(PricingError::NonPositiveSpot(self.spot));
        }
        if !self.rate.is_finite() {
            return Err(PricingError::NonFiniteInput("rate"));
        }
        Ok(())
    }
}

pub const DEFAULT_DAYS_PER_YEAR: u32 = 365;

/// `n_obs` equally spaced observation dates, `tau` years apart, the first
/// one `tau` after today.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_obs: usize,
    pub tau: f64,
    pub days_per_year: u32,
}

impl Schedule {
    pub fn new(n_obs: usize, tau: f64) -> Self {
        Self {
            n_obs,
            tau,
            days_per_year: DEFAULT_DAYS_PER_YEAR,
        }
    }

    /// Schedule whose period is given in days under an ACT/`days_per_year`
    /// convention.
    pub fn from_days(n_obs: usize, period_days: f64, days_per_year: u32) -> Self {
        Self {
            n_obs,
            tau: period_days / f64::from(days_per_year.max(1)),
            days_per_year,
        }
    }

    /// Observation time `T_n = n * tau`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn maturity(&self) -> f64 {
        self.time(self.n_obs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_obs == 0 {
            return Err(PricingError::BadSchedule("n_obs must be at least 1".into()));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(PricingError::BadSchedule(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.days_per_year == 0 {
            return Err(PricingError::BadSchedule(
                "days_per_year must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// An equispaced set of abscissae `start + i*step`, `i = 0..=intervals`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub intervals: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, intervals: usize) -> Self {
        Self {
            start,
            step,
            intervals,
        }
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> f64 {
        self.point(self.intervals)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end()
    }
}

/// Strike grids of the recursion: normalized strikes `w` on which the
/// curves are sampled, and strikes `K` over which the integral runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub w_min: f64,
    pub w_max: f64,
    pub w_step: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
}

impl GridSpec {
    /// w in [0.0025, 2] by 0.0025, K in [0.01, 2] by 0.001.
    pub fn black_scholes_default() -> Self {
        Self {
            w_min: 0.0025,
            w_max: 2.0,
            w_step: 0.0025,
            k_min: 0.01,
            k_max: 2.0,
            k_step: 0.001,
        }
    }

    /// w in [0.005, 2] by 0.005, K in [0.1, 2] by 0.001.
    pub fn variance_gamma_default() -> Self {
        Self {
            w_min: 0.005,
            w_max: 2.0,
            w_step: 0.005,
            k_min: 0.1,
            k_max: 2.0,
            k_step: 0.001,
        }
    }

    pub fn default_for(model: &ModelParams) -> Self {
        match model {
            ModelParams::BlackScholes { .. } => Self::black_scholes_default(),
            ModelParams::VarianceGamma { .. } => Self::variance_gamma_default(),
        }
    }

    /// Same ranges with both steps halved.
    pub fn refined(&self) -> Self {
        Self {
            w_step: self.w_step / 2.0,
            k_step: self.k_step / 2.0,
            ..*self
        }
    }

    /// Validates the bounds and snaps both upper bounds so each range holds
    /// an even number of steps. Each bound moves by at most one step.
    pub fn snap(&self) -> Result<(Self, UniformGrid, UniformGrid)> {
        let w = snap_range("w", self.w_min, self.w_max, self.w_step)?;
        let k = snap_range("k", self.k_min, self.k_max, self.k_step)?;
        let spec = Self {
            w_min: w.start,
            w_max: w.end(),
            w_step: w.step,
            k_min: k.start,
            k_max: k.end(),
            k_step: k.step,
        };
        Ok((spec, w, k))
    }
}

fn snap_range(name: &str, lo: f64, hi: f64, step: f64) -> Result<UniformGrid> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(PricingError::BadGrid(format!(
            "{name} grid has non-finite bounds"
        )));
    }
    if lo <= 0.0 {
        return Err(PricingError::BadGrid(format!(
            "{name}_min must be positive, got {lo}"
        )));
    }
    if hi <= lo {
        return Err(PricingError::BadGrid(format!(
            "{name}_max ({hi}) must exceed {name}_min ({lo})"
        )));
    }
    if step <= 0.0 {
        return Err(PricingError::BadGrid(format!(
            "{name}_step must be positive, got {step}"
        )));
    }
    let exact = (hi - lo) / step;
    // Nearest even count; the extra tolerance keeps already-snapped ranges
    // fixed despite rounding in (hi - lo) / step.
    let nearest = exact.round();
    let count = if (exact - nearest).abs() < 1e-9 && (nearest as u64).is_multiple_of(2) {
        nearest
    } else {
        2.0 * (exact / 2.0).round()
    };
    let intervals = (count.max(2.0)) as usize;
    Ok(UniformGrid::new(lo, step, intervals))
}

/// Inputs after validation, with snapped grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedConfig {
    pub model: ModelParams,
    pub market: Market,
    pub schedule: Schedule,
    pub grid: GridSpec,
    pub w_grid: UniformGrid,
    pub k_grid: UniformGrid,
}

/// Checks all invariants and snaps the grids. Idempotent: validating the
/// returned parts again yields the same config.
pub fn validate(
    model: ModelParams,
    market: Market,
    schedule: Schedule,
    grid: GridSpec,
) -> Result<ValidatedConfig> {
    model.validate()?;
    market.validate()?;
    schedule.validate()?;
    let (grid, w_grid, k_grid) = grid.snap()?;
    Ok(ValidatedConfig {
        model,
        market,
        schedule,
        grid,
        w_grid,
        k_grid,
    })
}

/// Forward value of the arithmetic average of `ell` fixings for unit spot,
/// discounted to today: `e^{-r ell tau} (1/ell) sum_{i=1..ell} e^{r i tau}`.
pub fn discounted_forward_average(ell: usize, rate: f64, tau: f64) -> f64 {
    let sum: f64 = (1..=ell)
        .map(|i| (rate * tau * (i as f64 - ell as f64)).exp())
        .sum();
    sum / ell as f64
}

/// Value of an `ell`-fixing Asian call with unit spot and strike `w` when
/// exercise is certain: `e^{-r ell tau} ((1/ell) sum e^{r i tau} - w)`.
pub fn sure_exercise_value(ell: usize, rate: f64, tau: f64, w: f64) -> f64 {
    discounted_forward_average(ell, rate, tau) - (-rate * ell as f64 * tau).exp() * w
}

/// Sampled normalized Asian curve `A_ell(w)`: the price of an `ell`-fixing
/// arithmetic Asian call for unit spot and strike `w`, one period before the
/// first remaining fixing.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCurve {
    pub ell: usize,
    pub w_grid: UniformGrid,
    pub values: Vec<f64>,
    /// d^2 A / dw^2 on `w_grid`; empty until computed.
    pub second_derivs: Vec<f64>,
    /// Rough bound on the integrand mass dropped by truncating the strike
    /// integral to the K grid (zero for the base curve).
    pub truncation_estimate: f64,
}

/// A violated curve invariant, reported by [`NormalizedCurve::check_invariants`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurveViolation {
    pub ell: usize,
    pub index: usize,
    pub w: f64,
    pub kind: &'static str,
    pub amount: f64,
}

impl NormalizedCurve {
    pub fn has_second_derivs(&self) -> bool {
        self.second_derivs.len() == self.values.len()
    }

    /// Checks nonnegativity, monotonicity, convexity and the no-arbitrage
    /// band `max(0, F - e^{-r ell tau} w) <= A <= F` where `F` is the
    /// discounted forward average. Returns every violation found.
    pub fn check_invariants(
        &self,
        rate: f64,
        tau: f64,
        tol: CurveTolerances,
    ) -> Vec<CurveViolation> {
        let mut out = Vec::new();
        let fwd = discounted_forward_average(self.ell, rate, tau);
        let mut push = |index: usize, kind, amount| {
            out.push(CurveViolation {
                ell: self.ell,
                index,
                w: self.w_grid.point(index),
                kind,
                amount,
            })
        };
        for (i, &a) in self.values.iter().enumerate() {
            let w = self.w_grid.point(i);
            if a < 0.0 {
                push(i, "negative", -a);
            }
            let lower = sure_exercise_value(self.ell, rate, tau, w).max(0.0);
            if a < lower - tol.bounds {
                push(i, "below lower bound", lower - a);
            }
            if a > fwd + tol.bounds {
                push(i, "above upper bound", a - fwd);
            }
            if i > 0 && a > self.values[i - 1] + tol.monotone {
                push(i, "increasing", a - self.values[i - 1]);
            }
            if i > 0 && i + 1 < self.values.len() {
                let d2 = self.values[i + 1] - 2.0 * a + self.values[i - 1];
                if d2 < -tol.convexity {
                    push(i, "concave", -d2);
                }
            }
        }
        out
    }
}

/// Tolerances for [`NormalizedCurve::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveTolerances {
    pub monotone: f64,
    pub convexity: f64,
    pub bounds: f64,
}

impl Default for CurveTolerances {
    fn default() -> Self {
        Self {
            monotone: 1e-9,
            convexity: 1e-6,
            bounds: 1e-9,
        }
    }
}

/// One-period out-of-the-money option prices `phi(1, K)` on the K grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiCurve {
    pub k_grid: UniformGrid,
    pub phi_values: Vec<f64>,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl MCResult {
    /// Distance to `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.estimate).abs() / self.std_error
    }
}
