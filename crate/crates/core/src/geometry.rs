//! Proximal geometries and the constrained mirror-descent step.
//!
//! Two proximal functions are supported:
//!
//! * `Euclidean`: `ψ(θ) = ½‖θ‖₂²`, 1-strongly convex in `ℓ2`, dual norm `ℓ2`.
//! * `PNorm { p }`: `ψ(θ) = ‖θ‖ₚ² / (2(p−1))`, 1-strongly convex in `ℓp` for
//!   `p ∈ (1, 2]`. With `p = 1 + 1/log(2d)` it is the ℓ1/ℓ∞ geometry used
//!   with hypercube smoothing; gradients are then measured in `ℓ∞`.
//!
//! Feasible sets are ℓ2- and ℓ1-balls centred at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::vector::{all_finite, dot, norm1, norm2, norm_inf, norm_p, sign};

/// Bisection tolerance on the ℓ1 multiplier of the p-norm mirror step.
const MULTIPLIER_TOL: f64 = 1e-12;
const MAX_BISECTION_ITERS: usize = 200;
/// Stationarity tolerance of the p-norm step, relative to `max(1, ‖w‖∞)`.
const STEP_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxGeometry {
    Euclidean,
    PNorm { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ball {
    L1,
    L2,
}

/// Ball `{θ ∈ ℝ^dim : ‖θ‖_q ≤ radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub ball: Ball,
    pub radius: f64,
    pub dim: usize,
}

impl ProxGeometry {
    /// The p-norm geometry with `p = 1 + 1/log(2d)`.
    ///
    /// For `d = 1` that formula gives `p > 2`, where `ψ` stops being
    /// 1-strongly convex; `p` is capped at 2 (all norms coincide in 1-D).
    pub fn pnorm_for_dim(d: usize) -> Self {
        let p = 1.0 + 1.0 / (2.0 * d as f64).ln();
        ProxGeometry::PNorm { p: p.min(2.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProxGeometry::Euclidean => Ok(()),
            ProxGeometry::PNorm { p } if p > 1.0 && p <= 2.0 => Ok(()),
            ProxGeometry::PNorm { p } => Err(ZoError::Config(format!(
                "p-norm geometry needs p in (1, 2], got {p}"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProxGeometry::Euclidean => "euclidean",
            ProxGeometry::PNorm { .. } => "pnorm",
        }
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        match *self {
            ProxGeometry::Euclidean => 0.5 * dot(x, x),
            ProxGeometry::PNorm { p } => {
                let n = norm_p(x, p);
                n * n / (2.0 * (p - 1.0))
            }
        }
    }

    /// `∇ψ(x)`. For the p-norm geometry the gradient at 0 is the zero vector.
    pub fn grad_psi(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            ProxGeometry::Euclidean => x.to_vec(),
            ProxGeometry::PNorm { p } => {
                let n = norm_p(x, p);
                if n == 0.0 {
                    return vec![0.0; x.len()];
                }
                // sign(x_j)|x_j|^{p-1} ‖x‖^{2-p} / (p-1), written as n·(|x_j|/n)^{p-1}
                x.iter()
                    .map(|&xj| sign(xj) * n * (xj.abs() / n).powf(p - 1.0) / (p - 1.0))
                    .collect()
            }
        }
    }

    /// Inverse of the link: `∇ψ*(w)`, so that `grad_psi(grad_psi_conj(w)) = w`.
    pub fn grad_psi_conj(&self, w: &[f64]) -> Vec<f64> {
        match *self {
            ProxGeometry::Euclidean => w.to_vec(),
            ProxGeometry::PNorm { p } => {
                let q = p / (p - 1.0);
                let n = norm_p(w, q);
                if n == 0.0 {
                    return vec![0.0; w.len()];
                }
                w.iter()
                    .map(|&wj| sign(wj) * (p - 1.0) * n * (wj.abs() / n).powf(q - 1.0))
                    .collect()
            }
        }
    }

    /// Norm in which `ψ` is 1-strongly convex (`ℓ2`, or `ℓp`).
    pub fn primal_norm(&self, x: &[f64]) -> f64 {
        match *self {
            ProxGeometry::Euclidean => norm2(x),
            ProxGeometry::PNorm { p } => norm_p(x, p),
        }
    }

    /// Norm in which gradients are measured: `ℓ2`, or `ℓ∞` for the ℓ1 geometry.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        dual_norm(self, v)
    }
}

pub fn dual_norm(geom: &ProxGeometry, v: &[f64]) -> f64 {
    match geom {
        ProxGeometry::Euclidean => norm2(v),
        ProxGeometry::PNorm { .. } => norm_inf(v),
    }
}

impl Domain {
    pub fn new(ball: Ball, radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ZoError::Config(format!("domain radius must be positive, got {radius}")));
        }
        if dim == 0 {
            return Err(ZoError::Config("domain dimension must be at least 1".into()));
        }
        Ok(Domain { ball, radius, dim })
    }

    pub fn l2(radius: f64, dim: usize) -> Result<Self> {
        Self::new(Ball::L2, radius, dim)
    }

    pub fn l1(radius: f64, dim: usize) -> Result<Self> {
        Self::new(Ball::L1, radius, dim)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.ball {
            Ball::L1 => norm1(x),
            Ball::L2 => norm2(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.norm(x) <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    pub fn label(&self) -> &'static str {
        match self.ball {
            Ball::L1 => "l1",
            Ball::L2 => "l2",
        }
    }

    /// Euclidean projection onto the ball.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self.ball {
            Ball::L1 => project_l1(v, self.radius),
            Ball::L2 => project_l2(v, self.radius),
        }
    }

    /// Radius `R` with `D(θ*, θ) ≤ ½R²` on the domain.
    ///
    /// Euclidean: the diameter bound `2·radius` (both balls sit inside the
    /// ℓ2-ball of that radius). p-norm over the ℓ1 ball: `D ≤ 2r²/(p−1)`, so
    /// `R = 2r/√(p−1)`, which is `2r·√log(2d)` at the default `p`.
    pub fn effective_radius(&self, geom: &ProxGeometry) -> Result<f64> {
        check_pairing(geom, self)?;
        Ok(match *geom {
            ProxGeometry::Euclidean => 2.0 * self.radius,
            ProxGeometry::PNorm { p } => 2.0 * self.radius / (p - 1.0).sqrt(),
        })
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

fn check_pairing(geom: &ProxGeometry, dom: &Domain) -> Result<()> {
    geom.validate()?;
    match (geom, dom.ball) {
        (ProxGeometry::PNorm { .. }, Ball::L2) => Err(ZoError::Config(
            "the p-norm geometry is only supported over the l1 ball".into(),
        )),
        _ => Ok(()),
    }
}

fn check_vectors(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(ZoError::Contract(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if !all_finite(x) || !all_finite(y) {
        return Err(ZoError::Input("non-finite vector entry".into()));
    }
    Ok(())
}

/// `D_ψ(x, y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩`.
pub fn bregman_divergence(geom: &ProxGeometry, x: &[f64], y: &[f64]) -> Result<f64> {
    check_vectors(x, y)?;
    if let ProxGeometry::Euclidean = geom {
        return Ok(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
    }
    let gy = geom.grad_psi(y);
    let lin: f64 = gy.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok(geom.psi(x) - geom.psi(y) - lin)
}

pub fn project_l2(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !all_finite(v) {
        return Err(ZoError::Input("non-finite vector entry".into()));
    }
    let n = norm2(v);
    if n <= radius {
        Ok(v.to_vec())
    } else {
        let s = radius / n;
        Ok(v.iter().map(|x| x * s).collect())
    }
}

/// Euclidean projection onto `{θ : ‖θ‖₁ ≤ radius}` by the sort-and-threshold
/// method. Points already inside are returned unchanged.
pub fn project_l1(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !all_finite(v) {
        return Err(ZoError::Input("non-finite vector entry".into()));
    }
    if !(radius > 0.0) {
        return Err(ZoError::Contract(format!("radius must be positive, got {radius}")));
    }
    if norm1(v) <= radius {
        return Ok(v.to_vec());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    // stable, descending
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (j + 1) as f64;
        if m - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| sign(x) * (x.abs() - tau).max(0.0)).collect())
}

/// One mirror-descent step:
/// `argmin_{θ ∈ dom} ⟨g, θ⟩ + D_ψ(θ, θ_t)/α`.
pub fn md_step(
    geom: &ProxGeometry,
    dom: &Domain,
    theta: &[f64],
    g: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_pairing(geom, dom)?;
    check_vectors(theta, g)?;
    if theta.len() != dom.dim {
        return Err(ZoError::Contract(format!(
            "iterate has dimension {}, domain has {}",
            theta.len(),
            dom.dim
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ZoError::Contract(format!("step size must be positive, got {alpha}")));
    }
    match geom {
        ProxGeometry::Euclidean => {
            let y: Vec<f64> = theta.iter().zip(g).map(|(t, gi)| t - alpha * gi).collect();
            dom.project(&y)
        }
        ProxGeometry::PNorm { .. } => pnorm_l1_step(geom, dom.radius, theta, g, alpha),
    }
}

fn soft_threshold(w: &[f64], lambda: f64) -> Vec<f64> {
    w.iter().map(|&x| sign(x) * (x.abs() - lambda).max(0.0)).collect()
}

/// Dual-averaging form of the p-norm step: `w = ∇ψ(θ_t) − αg`, and the
/// constrained solution is `∇ψ*(soft(w, λ))` for the smallest multiplier
/// `λ ≥ 0` that makes it feasible.
fn pnorm_l1_step(
    geom: &ProxGeometry,
    radius: f64,
    theta: &[f64],
    g: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let w: Vec<f64> = geom
        .grad_psi(theta)
        .iter()
        .zip(g)
        .map(|(a, gi)| a - alpha * gi)
        .collect();
    let free = geom.grad_psi_conj(&w);
    if norm1(&free) <= radius {
        return Ok(free);
    }
    let mut lo = 0.0;
    let mut hi = norm_inf(&w);
    let mut best = vec![0.0; w.len()];
    let mut converged = false;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let cand = geom.grad_psi_conj(&soft_threshold(&w, mid));
        if norm1(&cand) <= radius {
            hi = mid;
            best = cand;
        } else {
            lo = mid;
        }
        if hi - lo <= MULTIPLIER_TOL * hi.max(1.0) {
            converged = true;
            break;
        }
    }
    let lambda = hi;
    let residual = pnorm_step_residual(geom, &best, &w, lambda);
    let scale = norm_inf(&w).max(1.0);
    if !converged || residual > STEP_RESIDUAL_TOL * scale {
        return Err(ZoError::Numerical {
            message: "p-norm mirror step did not converge".into(),
            iteration: None,
            residual: Some(residual),
        });
    }
    Ok(best)
}

/// Stationarity residual `‖∇ψ(θ) − w + λs‖∞` with `s ∈ ∂‖θ‖₁`.
fn pnorm_step_residual(geom: &ProxGeometry, theta: &[f64], w: &[f64], lambda: f64) -> f64 {
    let gp = geom.grad_psi(theta);
    gp.iter()
        .zip(w)
        .zip(theta)
        .map(|((gj, wj), tj)| {
            let s = if *tj != 0.0 {
                sign(*tj)
            } else if lambda > 0.0 {
                (wj / lambda).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            (gj - wj + lambda * s).abs()
        })
        .fold(0.0, f64::max)
}
