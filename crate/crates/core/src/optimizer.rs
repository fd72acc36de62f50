//! Stochastic mirror descent with zero-order (or full-information) gradients.
//!
//! Schedules:
//!
//! * `Smooth`: `α_t = αR/(2L√s·√t)`, `u_t = u·L√s/(L1·M·t)`.
//! * `SmoothAveraged` (m-point estimator): `α_t = αR/(2L·max{√(s/m), 1}·√t)`,
//!   `u_t = u·L/(L1·M·t)`.
//! * `NonSmooth`: `α_t = αR/(L√(d·log 2d)·√t)`, `u₁ = uR/t`, `u₂ = uR/(d²t²)`.
//! * `FullInfo`: `α_t = α/√t`.
//!
//! Perturbation sizes never drop below `u_floor = 1e-10·R`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::estimators::{EstimatorConfig, EstimatorState, Perturbation};
use crate::geometry::{md_step, Domain, ProxGeometry};
use crate::problems::Problem;
use crate::rng::{stream, tag};
use crate::smoothing::{geometry_constants, SmoothingDistribution};
use crate::vector::all_finite;

pub const U_FLOOR_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleFamily {
    Smooth,
    SmoothAveraged,
    NonSmooth,
    FullInfo,
}

impl ScheduleFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ScheduleFamily::Smooth => "smooth",
            ScheduleFamily::SmoothAveraged => "smooth_averaged",
            ScheduleFamily::NonSmooth => "non_smooth",
            ScheduleFamily::FullInfo => "full_info",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub r: f64,
    pub l: f64,
    pub l1: Option<f64>,
    pub s_d: Option<f64>,
    pub moment_m: Option<f64>,
    pub d: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub family: ScheduleFamily,
    pub alpha_mult: f64,
    pub u_mult: f64,
    pub constants: ScheduleConstants,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub u: Option<Perturbation>,
}

fn required(x: Option<f64>, what: &str) -> Result<f64> {
    x.ok_or_else(|| ZoError::Config(format!("schedule needs {what}")))
}

impl Schedule {
    /// Derive the constants from the problem, geometry and estimator, and
    /// check that the four are mutually consistent.
    pub fn for_setup(
        family: ScheduleFamily,
        alpha_mult: f64,
        u_mult: f64,
        problem: &dyn Problem,
        geom: &ProxGeometry,
        dom: &Domain,
        est: &EstimatorConfig,
    ) -> Result<Schedule> {
        est.validate()?;
        let d = problem.dim();
        let r = dom.effective_radius(geom)?;
        let lip = problem.lipschitz();
        let compatible = matches!(
            (family, est),
            (ScheduleFamily::Smooth, EstimatorConfig::TwoPoint { .. } | EstimatorConfig::TwoPointAvg { .. })
                | (ScheduleFamily::SmoothAveraged, EstimatorConfig::TwoPointAvg { .. })
                | (ScheduleFamily::NonSmooth, EstimatorConfig::DoubleSmoothed { .. })
                | (ScheduleFamily::FullInfo, EstimatorConfig::FullInfo)
        );
        if !compatible {
            return Err(ZoError::Config(format!(
                "schedule {} cannot drive estimator {}",
                family.label(),
                est.label()
            )));
        }
        let (s_d, moment_m) = match family {
            ScheduleFamily::Smooth | ScheduleFamily::SmoothAveraged => {
                if lip.l1.is_none() {
                    return Err(ZoError::Config(format!(
                        "smooth schedules need a gradient Lipschitz constant; {} is non-smooth",
                        problem.name()
                    )));
                }
                let dist = SmoothingDistribution::new(est.direction_kind().unwrap(), d)?;
                let gc = geometry_constants(&dist, geom)?;
                (Some(gc.s_d), Some(gc.moment_m))
            }
            _ => (None, None),
        };
        let s = Schedule {
            family,
            alpha_mult,
            u_mult,
            constants: ScheduleConstants { r, l: lip.l, l1: lip.l1, s_d, moment_m, d, m: est.m() },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        for (name, v) in [("alpha_mult", self.alpha_mult), ("u_mult", self.u_mult), ("R", c.r), ("L", c.l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ZoError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.family == ScheduleFamily::NonSmooth && c.d < 2 {
            return Err(ZoError::Config("the non-smooth schedule needs d >= 2".into()));
        }
        Ok(())
    }

    pub fn u_floor(&self) -> f64 {
        U_FLOOR_REL * self.constants.r
    }
}

pub fn schedule_at(s: &Schedule, t: u64) -> Result<StepSizes> {
    if t == 0 {
        return Err(ZoError::Contract("iterations are numbered from 1".into()));
    }
    s.validate()?;
    let c = &s.constants;
    let tf = t as f64;
    let sq = tf.sqrt();
    let floor = s.u_floor();
    let (alpha, u) = match s.family {
        ScheduleFamily::Smooth => {
            let sd = required(c.s_d, "s(d)")?;
            let m = required(c.moment_m, "M")?;
            let l1 = required(c.l1, "L1")?;
            let alpha = s.alpha_mult * c.r / (2.0 * c.l * sd.sqrt() * sq);
            let u = if l1 > 0.0 { s.u_mult * c.l * sd.sqrt() / (l1 * m * tf) } else { floor };
            (alpha, Some(Perturbation::Single(u.max(floor))))
        }
        ScheduleFamily::SmoothAveraged => {
            let sd = required(c.s_d, "s(d)")?;
            let m = required(c.moment_m, "M")?;
            let l1 = required(c.l1, "L1")?;
            let spread = (sd / c.m as f64).sqrt().max(1.0);
            let alpha = s.alpha_mult * c.r / (2.0 * c.l * spread * sq);
            let u = if l1 > 0.0 { s.u_mult * c.l / (l1 * m * tf) } else { floor };
            (alpha, Some(Perturbation::Single(u.max(floor))))
        }
        ScheduleFamily::NonSmooth => {
            let d = c.d as f64;
            let alpha = s.alpha_mult * c.r / (c.l * (d * (2.0 * d).ln()).sqrt() * sq);
            let u1 = s.u_mult * c.r / tf;
            let u2 = s.u_mult * c.r / (d * d * tf * tf);
            (alpha, Some(Perturbation::Double(u1.max(floor), u2.max(floor))))
        }
        ScheduleFamily::FullInfo => (s.alpha_mult / sq, None),
    };
    Ok(StepSizes { alpha, u })
}

/// `2RL√s/√T·max{α,1/α} + α·u²·RL√s/T + u·RL√s·log(2T)/T`.
pub fn theorem1_bound(s: &Schedule, t: u64) -> Result<f64> {
    if s.family != ScheduleFamily::Smooth {
        return Err(ZoError::Config(format!(
            "the smooth-case bound needs the smooth schedule, got {}",
            s.family.label()
        )));
    }
    if t == 0 {
        return Err(ZoError::Contract("T must be at least 1".into()));
    }
    let c = &s.constants;
    let k = c.r * c.l * required(c.s_d, "s(d)")?.sqrt();
    let (a, u, tf) = (s.alpha_mult, s.u_mult, t as f64);
    Ok(2.0 * k / tf.sqrt() * a.max(1.0 / a) + a * u * u * k / tf + u * k * (2.0 * tf).ln() / tf)
}

/// Shape of the non-smooth bound with its universal constant set to 1:
/// `max{α,1/α}·RL√(d·log 2d)/√T + u·RL√d·log(2T)/T`.
pub fn theorem2_bound_shape(s: &Schedule, t: u64) -> Result<f64> {
    if s.family != ScheduleFamily::NonSmooth {
        return Err(ZoError::Config(format!(
            "the non-smooth bound needs the non-smooth schedule, got {}",
            s.family.label()
        )));
    }
    if t < 3 {
        return Err(ZoError::Contract(format!("the non-smooth bound needs T >= 3, got {t}")));
    }
    let c = &s.constants;
    let (a, u, tf, d) = (s.alpha_mult, s.u_mult, t as f64, c.d as f64);
    let rl = c.r * c.l;
    Ok(a.max(1.0 / a) * rl * (d * (2.0 * d).ln()).sqrt() / tf.sqrt() + u * rl * d.sqrt() * (2.0 * tf).ln() / tf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: u64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub seed: u64,
    pub iterations: u64,
    pub trace: Vec<TracePoint>,
    pub final_avg_iterate: Vec<f64>,
    pub final_gap: f64,
    pub evaluations_total: u64,
    pub wall_time_s: f64,
}

/// `{1, 2, 4, …} ∪ {T}`.
pub fn trace_grid(t_max: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(1u64), |&t| t.checked_mul(2))
        .take_while(|&t| t <= t_max)
        .collect();
    if grid.last() != Some(&t_max) {
        grid.push(t_max);
    }
    grid
}

fn same_domain(a: &Domain, b: &Domain) -> bool {
    a.ball == b.ball && a.dim == b.dim && (a.radius - b.radius).abs() <= 1e-12 * a.radius.max(1.0)
}

/// Run `T` mirror-descent steps from the origin and report the gap of the
/// averaged iterate `θ̂(T) = (1/T)·Σ θ_t`.
pub fn run(
    problem: &dyn Problem,
    geom: &ProxGeometry,
    dom: &Domain,
    est: &EstimatorConfig,
    sched: &Schedule,
    t_max: u64,
    seed: u64,
) -> Result<RunRecord> {
    run_with_observer(problem, geom, dom, est, sched, t_max, seed, |_, _| {})
}

/// [`run`], calling `observe(t, θ_t)` on every iterate.
#[allow(clippy::too_many_arguments)]
pub fn run_with_observer<O>(
    problem: &dyn Problem,
    geom: &ProxGeometry,
    dom: &Domain,
    est: &EstimatorConfig,
    sched: &Schedule,
    t_max: u64,
    seed: u64,
    mut observe: O,
) -> Result<RunRecord>
where
    O: FnMut(u64, &[f64]),
{
    let start = Instant::now();
    if t_max == 0 {
        return Err(ZoError::Config("T must be at least 1".into()));
    }
    if !same_domain(dom, &problem.domain()) {
        return Err(ZoError::Config(format!(
            "domain {} ball of radius {} does not match the problem's {} ball of radius {}",
            dom.label(),
            dom.radius,
            problem.domain().label(),
            problem.domain().radius
        )));
    }
    let expected = Schedule::for_setup(sched.family, sched.alpha_mult, sched.u_mult, problem, geom, dom, est)?;
    if expected.family != sched.family {
        return Err(ZoError::Config("schedule family mismatch".into()));
    }
    let d = problem.dim();
    let mut data = stream(seed, tag::DATA);
    let mut pert = stream(seed, tag::PERTURB);
    let mut state = EstimatorState::new(est, d)?;
    let mut x = vec![0.0; problem.sample_dim()];
    let mut theta = dom.origin();
    let mut avg = vec![0.0; d];
    let grid = trace_grid(t_max);
    let mut next_trace = 0;
    let mut trace = Vec::with_capacity(grid.len());
    let mut evaluations = 0u64;

    for t in 1..=t_max {
        observe(t, &theta);
        let w = 1.0 / t as f64;
        avg.iter_mut().zip(&theta).for_each(|(a, th)| *a += w * (th - *a));
        if grid[next_trace] == t {
            trace.push(TracePoint { t, gap: problem.gap(&avg) });
            next_trace += 1;
        }
        let steps = schedule_at(sched, t)?;
        problem.sample_into(&mut data, &mut x);
        let g = match steps.u {
            None => problem
                .subgrad(&theta, &x)
                .ok_or_else(|| ZoError::Config(format!("problem {} has no subgradient oracle", problem.name())))?,
            Some(u) => {
                let est = state.estimate(|p| problem.eval(p, &x), &theta, u, &mut pert)?;
                est.g
            }
        };
        evaluations += est.evaluations_per_step() as u64;
        if !all_finite(&g) {
            return Err(ZoError::Numerical {
                message: "non-finite gradient estimate".into(),
                iteration: Some(t as usize),
                residual: None,
            });
        }
        theta = md_step(geom, dom, &theta, &g, steps.alpha).map_err(|e| match e {
            ZoError::Numerical { message, residual, .. } => ZoError::Numerical {
                message,
                iteration: Some(t as usize),
                residual,
            },
            other => other,
        })?;
        if !all_finite(&theta) {
            return Err(ZoError::Numerical {
                message: "non-finite iterate".into(),
                iteration: Some(t as usize),
                residual: None,
            });
        }
    }
    let final_gap = trace.last().map(|p| p.gap).unwrap_or(f64::NAN);
    Ok(RunRecord {
        config_digest: String::new(),
        seed,
        iterations: t_max,
        trace,
        final_avg_iterate: avg,
        final_gap,
        evaluations_total: evaluations,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
