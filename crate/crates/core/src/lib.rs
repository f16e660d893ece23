//! Prices of discretely monitored arithmetic Asian calls from European
//! option prices, by a backward recursion over normalized price curves.
//!
//! * [`european`]: Black-Scholes closed form, parity and the OTM selector.
//! * [`levy_fft`]: variance-Gamma calls by FFT inversion of the dampened price.
//! * [`recursion`]: the Asian recursion, deltas and seasoned options.
//! * [`montecarlo`]: seeded Monte Carlo reference prices.

// `!(x > 0.0)` is how inputs reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod domain;
pub mod error;
pub mod european;
pub mod interp;
pub mod levy_fft;
pub mod montecarlo;
pub mod quad;
pub mod recursion;

pub use domain::{
    validate, GridSpec, MCResult, Market, ModelParams, NormalizedCurve, PhiCurve, Schedule,
    UniformGrid, ValidatedConfig,
};
pub use error::{PricingError, Result};
pub use european::{BlackScholesPricer, EuropeanPricer};
pub use levy_fft::{FftConfig, FftPricer, VgParams};
pub use montecarlo::SimConfig;
pub use recursion::{AsianEngine, RecursionConfig, Stencil};
