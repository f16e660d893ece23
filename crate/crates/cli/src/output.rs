//! CSV and JSON renderings of command results. CSV prices carry four
//! decimals; JSON keeps full precision.

use serde::Serialize;

use crate::commands::{EuropeanRow, McRow, PriceRow, TableRow};
use crate::config::OutputFormat;

pub const TABLE_HEADER: &str = "strike,price,delta,mc_price,mc_se";
pub const MC_HEADER: &str = "strike,mc_price,mc_se,n_paths,seed";
pub const EUROPEAN_HEADER: &str = "strike,call,put,parity_residual,mc_price,mc_se";

fn opt(x: Option<f64>, decimals: usize) -> String {
    x.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}

fn json<T: Serialize + ?Sized>(rows: &T) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn price(row: &PriceRow, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(row),
        OutputFormat::Csv => match row.delta {
            Some(d) => format!("{:.4}\n{d:.4}\n", row.price),
            None => format!("{:.4}\n", row.price),
        },
    }
}

pub fn table(rows: &[TableRow], format: OutputFormat) -> String {
    if format == OutputFormat::Json {
        return json(rows);
    }
    let mut out = format!("{TABLE_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{},{}\n",
            r.strike,
            r.price,
            r.delta,
            opt(r.mc_price, 4),
            opt(r.mc_se, 6)
        ));
    }
    out
}

pub fn monte_carlo(rows: &[McRow], format: OutputFormat) -> String {
    if format == OutputFormat::Json {
        return json(rows);
    }
    let mut out = format!("{MC_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.6},{},{}\n",
            r.strike, r.mc_price, r.mc_se, r.n_paths, r.seed
        ));
    }
    out
}

pub fn european(rows: &[EuropeanRow], format: OutputFormat) -> String {
    if format == OutputFormat::Json {
        return json(rows);
    }
    let mut out = format!("{EUROPEAN_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.3e},{},{}\n",
            r.strike,
            r.call,
            r.put,
            r.parity_residual,
            opt(r.mc_price, 4),
            opt(r.mc_se, 6)
        ));
    }
    out
}
