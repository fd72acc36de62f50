//! Zero-order gradient estimators and Monte-Carlo probes of their bias and
//! second moment.
//!
//! Estimators take the objective as a closure `θ ↦ F(θ; x)` with the sample
//! `x` already bound, so every evaluation in one estimate sees the same `x`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::geometry::ProxGeometry;
use crate::problems::{NormTag, Problem};
use crate::rng::{chunk_stream, tag};
use crate::smoothing::{geometry_constants, SmoothingDistribution, SmoothingKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    TwoPoint { dist: SmoothingKind },
    TwoPointAvg { dist: SmoothingKind, m: usize },
    DoubleSmoothed { dist1: SmoothingKind, dist2: SmoothingKind },
    FullInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradEstimate {
    pub g: Vec<f64>,
    pub evaluations_used: usize,
}

/// Perturbation size for one estimate: `u`, or `(u1, u2)` for the
/// double-smoothed estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    Single(f64),
    Double(f64, f64),
}

/// Supported `(μ₁, μ₂)` pairs for the double-smoothed estimator.
pub fn valid_double_pair(dist1: SmoothingKind, dist2: SmoothingKind) -> bool {
    use SmoothingKind::*;
    matches!(
        (dist1, dist2),
        (Gaussian, Gaussian) | (BallSqrtDPlus2, BallSqrtDPlus2) | (BallSqrtDPlus2, SphereSqrtD)
    )
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorConfig::TwoPointAvg { m: 0, .. } => {
                Err(ZoError::Config("two_point_avg needs m >= 1".into()))
            }
            EstimatorConfig::DoubleSmoothed { dist1, dist2 } if !valid_double_pair(dist1, dist2) => {
                Err(ZoError::Config(format!(
                    "unsupported double-smoothing pair ({}, {}); use (gaussian, gaussian), (ball, ball) or (ball, sphere)",
                    dist1.label(),
                    dist2.label()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Function evaluations per step, or subgradient calls for `FullInfo`.
    pub fn evaluations_per_step(&self) -> usize {
        match *self {
            EstimatorConfig::TwoPoint { .. } | EstimatorConfig::DoubleSmoothed { .. } => 2,
            EstimatorConfig::TwoPointAvg { m, .. } => m + 1,
            EstimatorConfig::FullInfo => 1,
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            EstimatorConfig::TwoPointAvg { m, .. } => m,
            _ => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorConfig::TwoPoint { dist } => format!("two_point[{}]", dist.label()),
            EstimatorConfig::TwoPointAvg { dist, m } => format!("two_point_avg[{},m={m}]", dist.label()),
            EstimatorConfig::DoubleSmoothed { dist1, dist2 } => {
                format!("double_smoothed[{},{}]", dist1.label(), dist2.label())
            }
            EstimatorConfig::FullInfo => "full_info".into(),
        }
    }

    /// Smoothing law of the directions `Z` (`Z₂` for double smoothing).
    pub fn direction_kind(&self) -> Option<SmoothingKind> {
        match *self {
            EstimatorConfig::TwoPoint { dist } | EstimatorConfig::TwoPointAvg { dist, .. } => Some(dist),
            EstimatorConfig::DoubleSmoothed { dist2, .. } => Some(dist2),
            EstimatorConfig::FullInfo => None,
        }
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ZoError::ProblemEval(format!("objective returned {v}")))
    }
}

fn check_u(name: &str, u: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(ZoError::Contract(format!("{name} must be positive, got {u}")));
    }
    Ok(())
}

fn shifted(theta: &[f64], u: f64, z: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(theta.iter().zip(z).map(|(t, zi)| t + u * zi));
}

/// `g = (F(θ + uZ) − F(θ))/u · Z`.
pub fn estimate_two_point<F>(mut f: F, theta: &[f64], u: f64, z: &[f64]) -> Result<GradEstimate>
where
    F: FnMut(&[f64]) -> f64,
{
    check_u("u", u)?;
    let base = finite(f(theta))?;
    let mut p = Vec::with_capacity(theta.len());
    shifted(theta, u, z, &mut p);
    let c = (finite(f(&p))? - base) / u;
    Ok(GradEstimate { g: z.iter().map(|zi| c * zi).collect(), evaluations_used: 2 })
}

/// `g = (1/m) Σᵢ (F(θ + uZᵢ) − F(θ))/u · Zᵢ`, with `F(θ)` evaluated once.
pub fn estimate_two_point_avg<F, Z>(mut f: F, theta: &[f64], u: f64, zs: &[Z]) -> Result<GradEstimate>
where
    F: FnMut(&[f64]) -> f64,
    Z: AsRef<[f64]>,
{
    check_u("u", u)?;
    if zs.is_empty() {
        return Err(ZoError::Contract("need at least one direction".into()));
    }
    let base = finite(f(theta))?;
    let m = zs.len() as f64;
    let mut g = vec![0.0; theta.len()];
    let mut p = Vec::with_capacity(theta.len());
    for z in zs {
        let z = z.as_ref();
        shifted(theta, u, z, &mut p);
        let c = (finite(f(&p))? - base) / (u * m);
        g.iter_mut().zip(z).for_each(|(gi, zi)| *gi += c * zi);
    }
    Ok(GradEstimate { g, evaluations_used: zs.len() + 1 })
}

/// `g = (F(θ + u₁Z₁ + u₂Z₂) − F(θ + u₁Z₁))/u₂ · Z₂`.
pub fn estimate_double_smoothed<F>(
    mut f: F,
    theta: &[f64],
    u1: f64,
    u2: f64,
    z1: &[f64],
    z2: &[f64],
) -> Result<GradEstimate>
where
    F: FnMut(&[f64]) -> f64,
{
    check_u("u2", u2)?;
    if !(u1 >= 0.0 && u1.is_finite()) {
        return Err(ZoError::Contract(format!("u1 must be non-negative, got {u1}")));
    }
    let mut a = Vec::with_capacity(theta.len());
    shifted(theta, u1, z1, &mut a);
    let mut b = Vec::with_capacity(theta.len());
    shifted(&a, u2, z2, &mut b);
    let c = (finite(f(&b))? - finite(f(&a))?) / u2;
    Ok(GradEstimate { g: z2.iter().map(|zi| c * zi).collect(), evaluations_used: 2 })
}

/// Sampler plus direction buffers for repeated estimates at one dimension.
#[derive(Clone, Debug)]
pub struct EstimatorState {
    cfg: EstimatorConfig,
    first: Option<SmoothingDistribution>,
    second: Option<SmoothingDistribution>,
    zs: Vec<Vec<f64>>,
    z2: Vec<f64>,
}

impl EstimatorState {
    pub fn new(cfg: &EstimatorConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let mk = |k| SmoothingDistribution::new(k, dim);
        let (first, second, m) = match *cfg {
            EstimatorConfig::TwoPoint { dist } => (Some(mk(dist)?), None, 1),
            EstimatorConfig::TwoPointAvg { dist, m } => (Some(mk(dist)?), None, m),
            EstimatorConfig::DoubleSmoothed { dist1, dist2 } => (Some(mk(dist1)?), Some(mk(dist2)?), 1),
            EstimatorConfig::FullInfo => (None, None, 0),
        };
        Ok(EstimatorState {
            cfg: *cfg,
            first,
            second,
            zs: vec![vec![0.0; dim]; m],
            z2: vec![0.0; dim],
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Draw fresh directions from `rng` and form one estimate.
    pub fn estimate<F, R>(&mut self, f: F, theta: &[f64], u: Perturbation, rng: &mut R) -> Result<GradEstimate>
    where
        F: FnMut(&[f64]) -> f64,
        R: Rng + ?Sized,
    {
        let Some(first) = self.first else {
            return Err(ZoError::Config("the full-information estimator uses subgradients, not function values".into()));
        };
        for z in self.zs.iter_mut() {
            first.sample_into(rng, z);
        }
        match (self.cfg, u) {
            (EstimatorConfig::TwoPoint { .. }, Perturbation::Single(u)) => {
                estimate_two_point(f, theta, u, &self.zs[0])
            }
            (EstimatorConfig::TwoPointAvg { .. }, Perturbation::Single(u)) => {
                estimate_two_point_avg(f, theta, u, &self.zs)
            }
            (EstimatorConfig::DoubleSmoothed { .. }, Perturbation::Double(u1, u2)) => {
                self.second.unwrap().sample_into(rng, &mut self.z2);
                estimate_double_smoothed(f, theta, u1, u2, &self.zs[0], &self.z2)
            }
            (cfg, u) => Err(ZoError::Config(format!(
                "perturbation {u:?} does not match estimator {}",
                cfg.label()
            ))),
        }
    }
}

/// Result of [`bias_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasProbe {
    pub n: usize,
    /// `‖mean(g) − ∇f(θ)‖*`.
    pub bias_norm: f64,
    /// `√(Σⱼ Var(gⱼ)/N)`, the size of the Monte-Carlo error in the mean.
    pub stderr: f64,
    /// `u·L1·½·E[‖Z‖²‖Z‖*]`; `None` without a smoothness constant or
    /// closed-form moment.
    pub lemma_bound: Option<f64>,
    /// Empirical `E‖g‖*²`.
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    /// `2·s(d)·E‖∇F‖*² + ½u²·L1²·M²`; `None` for double smoothing.
    pub second_moment_bound: Option<f64>,
    /// Double smoothing only: `E‖g‖₂² / (L²·d·(√(u₂/u₁)·d + log 2d))`.
    pub ratio: Option<f64>,
}

const PROBE_CHUNK: usize = 2048;

struct ProbeChunk {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    m2: f64,
    m2_sq: f64,
}

/// Monte-Carlo bias and second moment of `est` at `θ`, compared in the dual
/// norm of the problem's geometry. Runs in fixed chunks with per-chunk
/// streams, so the result does not depend on the number of threads.
pub fn bias_probe(
    problem: &dyn Problem,
    est: &EstimatorConfig,
    theta: &[f64],
    u: Perturbation,
    n: usize,
    seed: u64,
) -> Result<BiasProbe> {
    if n < 10_000 {
        return Err(ZoError::Contract(format!("bias probe needs N >= 10000, got {n}")));
    }
    if matches!(est, EstimatorConfig::FullInfo) {
        return Err(ZoError::Config("bias probe needs a zero-order estimator".into()));
    }
    let grad = problem
        .exact_grad(theta)
        .ok_or_else(|| ZoError::Config(format!("problem {} has no exact gradient", problem.name())))?;
    let d = problem.dim();
    if theta.len() != d {
        return Err(ZoError::Contract("probe point has the wrong dimension".into()));
    }
    let norm_tag = problem.norm_tag();
    let chunks = n.div_ceil(PROBE_CHUNK);
    let parts: Vec<Result<ProbeChunk>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut data = chunk_stream(seed, tag::DATA, c as u64);
            let mut pert = chunk_stream(seed, tag::PERTURB, c as u64);
            let mut state = EstimatorState::new(est, d)?;
            let mut x = vec![0.0; problem.sample_dim()];
            let mut acc = ProbeChunk { sum: vec![0.0; d], sum_sq: vec![0.0; d], m2: 0.0, m2_sq: 0.0 };
            for _ in 0..PROBE_CHUNK.min(n - c * PROBE_CHUNK) {
                problem.sample_into(&mut data, &mut x);
                let g = state.estimate(|t| problem.eval(t, &x), theta, u, &mut pert)?.g;
                for j in 0..d {
                    acc.sum[j] += g[j];
                    acc.sum_sq[j] += g[j] * g[j];
                }
                let q = norm_tag.dual_norm(&g).powi(2);
                acc.m2 += q;
                acc.m2_sq += q * q;
            }
            Ok(acc)
        })
        .collect();
    let mut total = ProbeChunk { sum: vec![0.0; d], sum_sq: vec![0.0; d], m2: 0.0, m2_sq: 0.0 };
    for p in parts {
        let p = p?;
        for j in 0..d {
            total.sum[j] += p.sum[j];
            total.sum_sq[j] += p.sum_sq[j];
        }
        total.m2 += p.m2;
        total.m2_sq += p.m2_sq;
    }
    let nf = n as f64;
    let mean: Vec<f64> = total.sum.iter().map(|s| s / nf).collect();
    let var_sum: f64 = (0..d).map(|j| (total.sum_sq[j] / nf - mean[j] * mean[j]).max(0.0)).sum();
    let diff: Vec<f64> = mean.iter().zip(&grad).map(|(a, b)| a - b).collect();
    let second_moment = total.m2 / nf;
    let m2_var = (total.m2_sq / nf - second_moment * second_moment).max(0.0);

    let lip = problem.lipschitz();
    let geom = match norm_tag {
        NormTag::L2 => ProxGeometry::Euclidean,
        NormTag::L1Geometry => ProxGeometry::pnorm_for_dim(d),
    };
    let (lemma_bound, second_moment_bound, ratio) = match (*est, u) {
        (EstimatorConfig::DoubleSmoothed { .. }, Perturbation::Double(u1, u2)) => {
            let df = d as f64;
            let l2 = lip.l * lip.l;
            let denom = l2 * df * ((u2 / u1).sqrt() * df + (2.0 * df).ln());
            let m2 = if norm_tag == NormTag::L2 {
                second_moment
            } else {
                // ratio is stated for the Euclidean norm
                mean_sq_l2(&total, nf)
            };
            (None, None, Some(m2 / denom))
        }
        (_, Perturbation::Single(u)) => {
            let kind = est.direction_kind().unwrap();
            let dist = SmoothingDistribution::new(kind, d)?;
            let cross = mixed_moment(&dist, norm_tag);
            let lemma = match (lip.l1, cross) {
                (Some(l1), Some(c)) => Some(u * l1 * 0.5 * c),
                _ => None,
            };
            let bound = match (geometry_constants(&dist, &geom), lip.l1) {
                (Ok(gc), Some(l1)) => {
                    let g2 = problem.grad_second_moment(theta).unwrap_or(lip.l * lip.l);
                    Some(2.0 * gc.s_d * g2 + 0.5 * u * u * l1 * l1 * gc.moment_m * gc.moment_m)
                }
                _ => None,
            };
            (lemma, bound, None)
        }
        (cfg, u) => {
            return Err(ZoError::Config(format!(
                "perturbation {u:?} does not match estimator {}",
                cfg.label()
            )))
        }
    };
    Ok(BiasProbe {
        n,
        bias_norm: norm_tag.dual_norm(&diff),
        stderr: (var_sum / nf).sqrt(),
        lemma_bound,
        second_moment,
        second_moment_stderr: (m2_var / nf).sqrt(),
        second_moment_bound,
        ratio,
    })
}

fn mean_sq_l2(total: &ProbeChunk, nf: f64) -> f64 {
    total.sum_sq.iter().sum::<f64>() / nf
}

/// `E[‖Z‖²‖Z‖*]` in the norm pair of `tag`, when known in closed form.
fn mixed_moment(dist: &SmoothingDistribution, tag: NormTag) -> Option<f64> {
    let d = dist.dim as f64;
    match tag {
        NormTag::L2 => Some(dist.theory_moment(3)),
        NormTag::L1Geometry => match dist.kind {
            SmoothingKind::Hypercube => Some(d * d),
            _ => None,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedValue {
    pub value: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of `f_u(θ) = E[f(θ + uZ)]`.
pub fn estimate_smoothed_value<F>(
    f: F,
    theta: &[f64],
    u: f64,
    dist: SmoothingKind,
    n: usize,
    seed: u64,
) -> Result<SmoothedValue>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n < 1000 {
        return Err(ZoError::Contract(format!("smoothed value needs N >= 1000, got {n}")));
    }
    if !matches!(dist, SmoothingKind::Gaussian | SmoothingKind::BallSqrtDPlus2) {
        return Err(ZoError::Config("smoothed value needs gaussian or ball smoothing".into()));
    }
    let z = SmoothingDistribution::new(dist, theta.len())?;
    let chunks = n.div_ceil(PROBE_CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_stream(seed, tag::PERTURB, c as u64);
            let mut buf = vec![0.0; theta.len()];
            let mut p = Vec::with_capacity(theta.len());
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..PROBE_CHUNK.min(n - c * PROBE_CHUNK) {
                z.sample_into(&mut rng, &mut buf);
                shifted(theta, u, &buf, &mut p);
                let v = f(&p);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok(SmoothedValue { value: mean, stderr: (var / nf).sqrt() })
}
