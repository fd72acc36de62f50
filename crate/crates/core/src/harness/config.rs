//! Sweep configuration, read from TOML. Unknown keys are errors.
//!
//! ```toml
//! master_seed = 7
//! replications = 20
//!
//! [problem]
//! kind = "constrained_quadratic"
//! radius = 1.0
//! center_norm = 3.0
//! noise = 6.0
//!
//! [estimator]
//! kind = "two_point"
//! dist = "sphere"
//!
//! [schedule]
//! family = "smooth"
//!
//! [grid]
//! d = [8]
//! T = [100, 1000, 10000]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ZoError};
use crate::estimators::EstimatorConfig;
use crate::geometry::{Ball, Domain, ProxGeometry};
use crate::optimizer::{Schedule, ScheduleFamily};
use crate::problems::{
    make_constrained_norm, make_constrained_quadratic, make_l1_median, make_nonsmooth_norm,
    make_positive_part_quadratic, make_smooth_quadratic, random_sign_vector, GaussianLinear,
    HardInstanceParams, Problem,
};
use crate::smoothing::SmoothingKind;
use crate::vector::unit_diagonal;

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn l2_ball() -> Ball {
    Ball::L2
}

/// Problem family and its parameters. Dimension-dependent quantities are
/// fixed per grid point: quadratic and norm centers are
/// `center_norm·𝟙/√d` (so `‖c‖₂ = center_norm` for every `d`), and `noise`
/// is the total noise level `σ√d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    GaussianLinear {
        #[serde(default = "one")]
        lipschitz: f64,
        #[serde(default = "two")]
        q: f64,
        #[serde(default = "one")]
        radius: f64,
        /// Override of `σ²`; marks the instance non-canonical.
        #[serde(default)]
        sigma2: Option<f64>,
        /// Override of `δ`; marks the instance non-canonical.
        #[serde(default)]
        delta: Option<f64>,
    },
    L1Median {
        #[serde(default = "one")]
        lipschitz: f64,
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    Quadratic {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "l2_ball")]
        ball: Ball,
        #[serde(default)]
        center_norm: f64,
        #[serde(default)]
        noise: f64,
    },
    ConstrainedQuadratic {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "l2_ball")]
        ball: Ball,
        center_norm: f64,
        #[serde(default)]
        noise: f64,
    },
    Norm {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "l2_ball")]
        ball: Ball,
        #[serde(default)]
        center_norm: f64,
        #[serde(default = "one")]
        lipschitz: f64,
        #[serde(default)]
        noise: f64,
    },
    ConstrainedNorm {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "l2_ball")]
        ball: Ball,
        center_norm: f64,
        #[serde(default = "one")]
        lipschitz: f64,
        #[serde(default)]
        noise: f64,
    },
    PositivePartQuadratic {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "l2_ball")]
        ball: Ball,
    },
}

/// Estimator family; `m` for the averaged estimator comes from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    TwoPoint { dist: SmoothingKind },
    TwoPointAvg { dist: SmoothingKind },
    DoubleSmoothed { dist1: SmoothingKind, dist2: SmoothingKind },
    FullInfo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySpec {
    Euclidean,
    /// `p = 1 + 1/log(2d)` over the ℓ1 ball.
    Pnorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub family: ScheduleFamily,
    #[serde(default = "one")]
    pub u_mult: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: Vec<usize>,
    #[serde(rename = "T")]
    pub t: Vec<u64>,
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// Use `m = d` at every grid point (overrides `m`).
    #[serde(default)]
    pub m_equals_d: bool,
}

fn default_m() -> Vec<usize> {
    vec![1]
}
fn default_alpha() -> Vec<f64> {
    vec![1.0]
}
fn default_geometry() -> GeometrySpec {
    GeometrySpec::Euclidean
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub master_seed: u64,
    pub replications: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Write measured wall time instead of 0 (breaks byte-identical CSVs).
    #[serde(default)]
    pub record_timing: bool,
    /// Scale the full-information step by `R/(√2·L)`, the choice that
    /// minimises its bound `R²/(2α) + αL²` per unit `1/√T`.
    #[serde(default)]
    pub calibrate_full_info: bool,
    #[serde(default = "default_geometry")]
    pub geometry: GeometrySpec,
    pub problem: ProblemSpec,
    pub estimator: EstimatorSpec,
    pub schedule: ScheduleSpec,
    pub grid: GridSpec,
}

/// One `(d, T, m, α)` point of the grid, in nesting order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub d: usize,
    pub t: u64,
    pub m: usize,
    pub alpha: f64,
}

/// Everything needed to execute one grid point.
pub struct Setup {
    pub problem: Box<dyn Problem>,
    pub geometry: ProxGeometry,
    pub domain: Domain,
    pub estimator: EstimatorConfig,
    pub schedule: Schedule,
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(s).map_err(|e| ZoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(ZoError::Config("replications: must be at least 1".into()));
        }
        let g = &self.grid;
        if g.d.is_empty() {
            return Err(ZoError::Config("grid.d: must not be empty".into()));
        }
        if g.t.is_empty() {
            return Err(ZoError::Config("grid.T: must not be empty".into()));
        }
        if g.m.is_empty() {
            return Err(ZoError::Config("grid.m: must not be empty".into()));
        }
        if g.alpha.is_empty() {
            return Err(ZoError::Config("grid.alpha: must not be empty".into()));
        }
        if g.d.contains(&0) {
            return Err(ZoError::Config("grid.d: dimensions must be at least 1".into()));
        }
        if g.t.contains(&0) {
            return Err(ZoError::Config("grid.T: horizons must be at least 1".into()));
        }
        if g.m.contains(&0) {
            return Err(ZoError::Config("grid.m: must be at least 1".into()));
        }
        if g.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(ZoError::Config("grid.alpha: multipliers must be positive".into()));
        }
        if !(self.schedule.u_mult > 0.0 && self.schedule.u_mult.is_finite()) {
            return Err(ZoError::Config("schedule.u_mult: must be positive".into()));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<GridPoint> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &d in &g.d {
            for &t in &g.t {
                let ms: Vec<usize> = if g.m_equals_d { vec![d] } else { g.m.clone() };
                for m in ms {
                    for &alpha in &g.alpha {
                        out.push(GridPoint { index: out.len(), d, t, m, alpha });
                    }
                }
            }
        }
        out
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form of the
    /// config, excluding the output path and the timing flag.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.record_timing = false;
        let json = serde_json::to_vec(&c).expect("config serialises");
        let h = Sha256::digest(&json);
        hex::encode(h)[..16].to_string()
    }

    pub fn estimator_at(&self, m: usize) -> EstimatorConfig {
        match self.estimator {
            EstimatorSpec::TwoPoint { dist } => EstimatorConfig::TwoPoint { dist },
            EstimatorSpec::TwoPointAvg { dist } => EstimatorConfig::TwoPointAvg { dist, m },
            EstimatorSpec::DoubleSmoothed { dist1, dist2 } => EstimatorConfig::DoubleSmoothed { dist1, dist2 },
            EstimatorSpec::FullInfo => EstimatorConfig::FullInfo,
        }
    }

    /// Build the problem, geometry and schedule of one grid point;
    /// `row_seed` draws the sign vector of the hard instances.
    pub fn setup(&self, p: &GridPoint, row_seed: u64) -> Result<Setup> {
        let problem = build_problem(&self.problem, p.d, p.t, row_seed)?;
        let domain = problem.domain();
        let geometry = match self.geometry {
            GeometrySpec::Euclidean => ProxGeometry::Euclidean,
            GeometrySpec::Pnorm => ProxGeometry::pnorm_for_dim(p.d),
        };
        let estimator = self.estimator_at(p.m);
        let mut schedule = Schedule::for_setup(
            self.schedule.family,
            p.alpha,
            self.schedule.u_mult,
            problem.as_ref(),
            &geometry,
            &domain,
            &estimator,
        )?;
        if self.calibrate_full_info && schedule.family == ScheduleFamily::FullInfo {
            let c = schedule.constants;
            schedule.alpha_mult *= c.r / (2f64.sqrt() * c.l);
        }
        Ok(Setup { problem, geometry, domain, estimator, schedule })
    }
}

fn scaled_center(d: usize, norm: f64) -> Vec<f64> {
    unit_diagonal(d).iter().map(|x| norm * x).collect()
}

fn per_coordinate(noise: f64, d: usize) -> f64 {
    noise / (d as f64).sqrt()
}

pub fn build_problem(spec: &ProblemSpec, d: usize, t: u64, row_seed: u64) -> Result<Box<dyn Problem>> {
    Ok(match *spec {
        ProblemSpec::GaussianLinear { lipschitz, q, radius, sigma2, delta } => {
            let v = random_sign_vector(d, row_seed);
            let mut params = HardInstanceParams::canonical(d, lipschitz, t, q, v);
            let canonical = sigma2.is_none() && delta.is_none();
            if let Some(s) = sigma2 {
                params.sigma2 = s;
            }
            if let Some(dl) = delta {
                params.delta = dl;
            }
            Box::new(GaussianLinear::from_params(params, radius, canonical)?)
        }
        ProblemSpec::L1Median { lipschitz, p, sigma, radius } => {
            let v = random_sign_vector(d, row_seed);
            Box::new(make_l1_median(d, lipschitz, p, t, sigma, radius, v)?)
        }
        ProblemSpec::Quadratic { radius, ball, center_norm, noise } => Box::new(make_smooth_quadratic(
            scaled_center(d, center_norm),
            per_coordinate(noise, d),
            Domain::new(ball, radius, d)?,
        )?),
        ProblemSpec::ConstrainedQuadratic { radius, ball, center_norm, noise } => {
            Box::new(make_constrained_quadratic(
                scaled_center(d, center_norm),
                per_coordinate(noise, d),
                Domain::new(ball, radius, d)?,
            )?)
        }
        ProblemSpec::Norm { radius, ball, center_norm, lipschitz, noise } => Box::new(make_nonsmooth_norm(
            scaled_center(d, center_norm),
            lipschitz,
            per_coordinate(noise, d),
            Domain::new(ball, radius, d)?,
        )?),
        ProblemSpec::ConstrainedNorm { radius, ball, center_norm, lipschitz, noise } => {
            Box::new(make_constrained_norm(
                scaled_center(d, center_norm),
                lipschitz,
                per_coordinate(noise, d),
                Domain::new(ball, radius, d)?,
            )?)
        }
        ProblemSpec::PositivePartQuadratic { radius, ball } => {
            Box::new(make_positive_part_quadratic(Domain::new(ball, radius, d)?)?)
        }
    })
}
