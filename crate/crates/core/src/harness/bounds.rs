//! Minimax lower-bound reference values for zero-order optimisation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundKind {
    /// ℓq-ball, ℓ2-Lipschitz class, two evaluations per round.
    L2,
    /// As `L2` with `m` evaluations per round.
    L2Multi,
    /// ℓ1-ball, ℓ∞-Lipschitz class.
    Linf,
}

impl std::str::FromStr for LowerBoundKind {
    type Err = ZoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(LowerBoundKind::L2),
            "l2_multi" | "l2-multi" => Ok(LowerBoundKind::L2Multi),
            "linf" | "l_inf" => Ok(LowerBoundKind::Linf),
            _ => Err(ZoError::Config(format!("unknown bound {s:?}; use l2, l2_multi or linf"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundQuery {
    pub bound: LowerBoundKind,
    pub d: usize,
    pub t: u64,
    pub q: f64,
    pub r: f64,
    pub l: f64,
    pub m: usize,
}

/// * ℓ2: `(1/12)(1 − 1/q)·LR/√T·min{d^{1−1/q}, T^{1−1/q}}`
/// * ℓ2-multi: `(1/10)(1 − 1/q)·LR/√(mT)·min{d^{1−1/q}, T^{1−1/q}}`
/// * ℓ∞: `(1/24)·LR/√T·min{√(T/log 3T), √(d/log 3d)}`
///
/// The ℓ2 bounds are vacuous at `q = 1`; they return 0 with a warning.
pub fn lower_bound_value(q: &LowerBoundQuery) -> Result<f64> {
    if q.d == 0 || q.t == 0 || q.m == 0 {
        return Err(ZoError::Config("d, T and m must be at least 1".into()));
    }
    if !(q.r > 0.0 && q.l > 0.0) {
        return Err(ZoError::Config("R and L must be positive".into()));
    }
    let (d, t) = (q.d as f64, q.t as f64);
    match q.bound {
        LowerBoundKind::L2 | LowerBoundKind::L2Multi => {
            if !(q.q >= 1.0) {
                return Err(ZoError::Config(format!("q must be >= 1, got {}", q.q)));
            }
            if q.q == 1.0 {
                log::warn!("the l2 lower bound is vacuous at q = 1");
                return Ok(0.0);
            }
            let e = 1.0 - 1.0 / q.q;
            let core = e * q.l * q.r * d.powf(e).min(t.powf(e));
            Ok(match q.bound {
                LowerBoundKind::L2 => core / (12.0 * t.sqrt()),
                _ => core / (10.0 * (q.m as f64 * t).sqrt()),
            })
        }
        LowerBoundKind::Linf => {
            let a = (t / (3.0 * t).ln()).sqrt();
            let b = (d / (3.0 * d).ln()).sqrt();
            Ok(q.l * q.r / (24.0 * t.sqrt()) * a.min(b))
        }
    }
}
