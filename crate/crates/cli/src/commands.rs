use std::sync::Arc;

use asianrec::montecarlo::{mc_asian_prices, mc_european_prices};
use asianrec::recursion::european_pricer;
use asianrec::{validate, AsianEngine, EuropeanPricer, MCResult, RecursionConfig, ValidatedConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct PriceRow {
    pub strike: f64,
    pub price: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub strike: f64,
    pub price: f64,
    pub delta: f64,
    pub mc_price: Option<f64>,
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub strike: f64,
    pub mc_price: f64,
    pub mc_se: f64,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EuropeanRow {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
    pub parity_residual: f64,
    pub mc_price: Option<f64>,
    pub mc_se: Option<f64>,
}

fn check_strikes(strikes: &[f64]) -> Result<(), CliError> {
    if strikes.is_empty() {
        return Err(CliError::Config("strikes list is empty".into()));
    }
    if let Some(k) = strikes.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(CliError::Config(format!("strike {k} is not positive")));
    }
    Ok(())
}

fn validated(cfg: &RunConfig) -> Result<ValidatedConfig, CliError> {
    let schedule = cfg.schedule.schedule()?;
    let v = validate(cfg.model, cfg.market, schedule, cfg.grid_spec())?;
    cfg.fft.validate()?;
    Ok(v)
}

fn engine(cfg: &RunConfig, v: &ValidatedConfig) -> Result<AsianEngine, CliError> {
    let rc = RecursionConfig {
        grid: v.grid,
        ..cfg.recursion_config()
    };
    Ok(AsianEngine::for_model(
        &v.model,
        v.market.rate,
        v.schedule.tau,
        rc,
        &cfg.fft,
    )?)
}

fn mc(cfg: &RunConfig, v: &ValidatedConfig, strikes: &[f64]) -> Result<Vec<MCResult>, CliError> {
    cfg.mc.validate()?;
    Ok(mc_asian_prices(
        &v.model,
        &v.market,
        &v.schedule,
        strikes,
        &cfg.mc,
    )?)
}

pub fn price(cfg: &RunConfig, strike: f64, with_delta: bool) -> Result<PriceRow, CliError> {
    check_strikes(&[strike])?;
    let v = validated(cfg)?;
    let mut e = engine(cfg, &v)?;
    let (spot, n) = (v.market.spot, v.schedule.n_obs);
    let price = e.price(spot, n, strike)?;
    let delta = if with_delta {
        Some(e.delta(spot, n, strike)?)
    } else {
        None
    };
    Ok(PriceRow {
        strike,
        price,
        delta,
    })
}

pub fn table(cfg: &RunConfig, with_mc: bool) -> Result<Vec<TableRow>, CliError> {
    check_strikes(&cfg.strikes)?;
    let v = validated(cfg)?;
    let mc_results = if with_mc {
        Some(mc(cfg, &v, &cfg.strikes)?)
    } else {
        None
    };
    let mut e = engine(cfg, &v)?;
    let (spot, n) = (v.market.spot, v.schedule.n_obs);
    cfg.strikes
        .iter()
        .enumerate()
        .map(|(i, &strike)| {
            let m = mc_results.as_ref().map(|r| r[i]);
            Ok(TableRow {
                strike,
                price: e.price(spot, n, strike)?,
                delta: e.delta(spot, n, strike)?,
                mc_price: m.map(|m| m.estimate),
                mc_se: m.map(|m| m.std_error),
            })
        })
        .collect()
}

pub fn monte_carlo(cfg: &RunConfig) -> Result<Vec<McRow>, CliError> {
    check_strikes(&cfg.strikes)?;
    let v = validated(cfg)?;
    let results = mc(cfg, &v, &cfg.strikes)?;
    Ok(cfg
        .strikes
        .iter()
        .zip(results)
        .map(|(&strike, r)| McRow {
            strike,
            mc_price: r.estimate,
            mc_se: r.std_error,
            n_paths: r.n_paths,
            seed: r.seed,
        })
        .collect())
}

/// European calls and puts expiring at the last fixing date.
pub fn european(cfg: &RunConfig, with_mc: bool) -> Result<Vec<EuropeanRow>, CliError> {
    check_strikes(&cfg.strikes)?;
    let v = validated(cfg)?;
    let (spot, rate) = (v.market.spot, v.market.rate);
    let maturity = v.schedule.maturity();
    let pricer: Arc<dyn EuropeanPricer> = european_pricer(&v.model, rate, maturity, &cfg.fft)?;
    let mc_results = if with_mc {
        cfg.mc.validate()?;
        Some(mc_european_prices(
            &v.model,
            &v.market,
            maturity,
            &cfg.strikes,
            &cfg.mc,
        )?)
    } else {
        None
    };
    let df = (-rate * maturity).exp();
    cfg.strikes
        .iter()
        .enumerate()
        .map(|(i, &strike)| {
            let call = pricer.call(spot, strike)?;
            let put = pricer.put(spot, strike)?;
            let m = mc_results.as_ref().map(|r| r[i]);
            Ok(EuropeanRow {
                strike,
                call,
                put,
                parity_residual: (call - put - spot + strike * df).abs(),
                mc_price: m.map(|m| m.estimate),
                mc_se: m.map(|m| m.std_error),
            })
        })
        .collect()
}
