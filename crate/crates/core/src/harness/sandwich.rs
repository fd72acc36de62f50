//! Lower bound ≤ measured gap ≤ upper bound on the Gaussian linear instance.

use serde::{Deserialize, Serialize};

use super::bounds::{lower_bound_value, LowerBoundKind, LowerBoundQuery};
use super::config::{ProblemSpec, SweepConfig};
use super::fit::{mean_gap_by, XField};
use super::sweep::{row_seed, run_sweep};
use crate::error::{Result, ZoError};
use crate::optimizer::{theorem1_bound, ScheduleFamily};

/// Slack on the lower side for Monte-Carlo noise in the measured mean.
pub const LOWER_SLACK: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub d: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub m: usize,
    pub alpha_mult: f64,
    pub replications: usize,
    pub measured_mean_gap: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    /// `None` when `T < 3`, where the bound formulas degenerate.
    pub ok: Option<bool>,
}

/// Run the sweep and compare each grid point's mean gap (over replications,
/// each with its own sign vector) against the lower bound for the ball
/// radius and the smooth-case upper bound for the run's constants.
pub fn sandwich_report(cfg: &SweepConfig, workers: usize) -> Result<Vec<SandwichRow>> {
    let (q, radius, lipschitz) = match cfg.problem {
        ProblemSpec::GaussianLinear { q, radius, lipschitz, .. } => (q, radius, lipschitz),
        _ => {
            return Err(ZoError::Config(
                "sandwich reports need problem.kind = \"gaussian_linear\"".into(),
            ))
        }
    };
    if cfg.schedule.family != ScheduleFamily::Smooth {
        return Err(ZoError::Config("sandwich reports need schedule.family = \"smooth\"".into()));
    }
    if cfg.replications < 20 {
        return Err(ZoError::Config(format!(
            "sandwich reports need at least 20 replications, got {}",
            cfg.replications
        )));
    }
    let rows = run_sweep(cfg, workers)?;
    let mut out = Vec::new();
    for p in cfg.grid_points() {
        let sel = &rows[p.index * cfg.replications..(p.index + 1) * cfg.replications];
        let (_, mean, se) = mean_gap_by(sel, XField::T)[0];
        let bound = if q == 1.0 {
            LowerBoundKind::Linf
        } else if p.m > 1 {
            LowerBoundKind::L2Multi
        } else {
            LowerBoundKind::L2
        };
        let lower = lower_bound_value(&LowerBoundQuery {
            bound,
            d: p.d,
            t: p.t,
            q,
            r: radius,
            l: lipschitz,
            m: p.m,
        })?;
        let schedule = cfg.setup(&p, row_seed(cfg.master_seed, p.index, 0))?.schedule;
        let upper = theorem1_bound(&schedule, p.t)?;
        let ok = (p.t >= 3).then_some(LOWER_SLACK * lower <= mean && mean <= upper);
        out.push(SandwichRow {
            d: p.d,
            t: p.t,
            m: p.m,
            alpha_mult: p.alpha,
            replications: cfg.replications,
            measured_mean_gap: mean,
            stderr: se,
            lower,
            upper,
            ok,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, ProxGeometry};
    use crate::optimizer::Schedule;
    use crate::problems::make_gaussian_linear;
    use crate::estimators::EstimatorConfig;
    use crate::smoothing::SmoothingKind;

    fn cfg(t: &str, reps: usize, kind: &str) -> SweepConfig {
        SweepConfig::from_toml_str(&format!(
            r#"
master_seed = 3
replications = {reps}
[problem]
kind = "{kind}"
[estimator]
kind = "two_point"
dist = "sphere"
[schedule]
family = "smooth"
[grid]
d = [4]
T = [{t}]
"#
        ))
        .unwrap()
    }

    #[test]
    fn t_one_reports_without_verdict() {
        let r = sandwich_report(&cfg("1", 20, "gaussian_linear"), 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].ok, None);
        // the averaged iterate at T = 1 is the origin: gap = δ·R·√d with δ = 1/6
        assert!((r[0].measured_mean_gap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(sandwich_report(&cfg("10", 20, "quadratic"), 1), Err(ZoError::Config(_))));
        assert!(matches!(sandwich_report(&cfg("10", 5, "gaussian_linear"), 1), Err(ZoError::Config(_))));
    }

    /// The upper bound dominates the lower bound wherever both apply.
    #[test]
    fn upper_dominates_lower_over_grid() {
        for d in [1usize, 2, 4, 8, 32, 128] {
            for t in [3u64, 10, 100, 10_000, 1_000_000] {
                for (alpha, u) in [(1.0, 1.0), (0.25, 0.1), (4.0, 2.0)] {
                    let p = make_gaussian_linear(d, 1.0, t, 2.0, 1.0, vec![1.0; d]).unwrap();
                    let dom = Domain::l2(1.0, d).unwrap();
                    let est = EstimatorConfig::TwoPoint { dist: SmoothingKind::SphereSqrtD };
                    let s = Schedule::for_setup(ScheduleFamily::Smooth, alpha, u, &p, &ProxGeometry::Euclidean, &dom, &est).unwrap();
                    let upper = theorem1_bound(&s, t).unwrap();
                    let lower = lower_bound_value(&LowerBoundQuery {
                        bound: LowerBoundKind::L2,
                        d,
                        t,
                        q: 2.0,
                        r: 1.0,
                        l: 1.0,
                        m: 1,
                    })
                    .unwrap();
                    assert!(upper >= lower, "d={d} T={t}");
                }
            }
        }
    }
}
