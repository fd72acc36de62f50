//! Log-log rate fits over sweep rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sweep::SweepRow;
use crate::error::{Result, ZoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XField {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "d")]
    D,
}

impl std::str::FromStr for XField {
    type Err = ZoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(XField::T),
            "d" | "D" => Ok(XField::D),
            _ => Err(ZoError::Config(format!("fit field must be T or d, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for two points.
    pub stderr: f64,
    pub n_points: usize,
}

/// Mean of `final_gap` and its standard error, per distinct `x`, in
/// increasing `x`.
pub fn mean_gap_by(rows: &[SweepRow], x: XField) -> Vec<(f64, f64, f64)> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = match x {
            XField::T => r.t,
            XField::D => r.d as u64,
        };
        groups.entry(key).or_default().push(r.final_gap);
    }
    groups
        .into_iter()
        .map(|(k, g)| {
            let n = g.len() as f64;
            let mean = g.iter().sum::<f64>() / n;
            let se = if g.len() > 1 {
                (g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            (k as f64, mean, se)
        })
        .collect()
}

/// Least-squares fit of `log y` on `log x`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(ZoError::Contract("x and y lengths differ".into()));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0)) {
        return Err(ZoError::Data(format!("cannot take the log of non-positive gap {y}")));
    }
    if xs.iter().any(|x| !(*x > 0.0)) {
        return Err(ZoError::Data("x values must be positive".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if lx.len() < 2 || sxx == 0.0 {
        return Err(ZoError::Data("need at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult { slope, intercept, stderr, n_points: lx.len() })
}

/// Slope of `log(mean gap)` against `log x`.
pub fn fit_rate(rows: &[SweepRow], x: XField) -> Result<FitResult> {
    let pts = mean_gap_by(rows, x);
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    fit_log_log(&xs, &ys)
}
