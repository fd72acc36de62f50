//! Benchmark objectives `f(θ) = E[F(θ; X)]` with exact values and optima.
//!
//! Every problem records the feasible set its optimum refers to; the driver
//! refuses to run a problem over a different domain, so reported gaps are
//! always measured against a true minimum.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::geometry::{Ball, Domain};
use crate::rng::{stream, tag};
use crate::vector::{dot, norm1, norm2, norm_inf, norm_p, sign};

/// Norm in which the problem's Lipschitz constant is stated: gradients in
/// `ℓ2`, or in `ℓ∞` for the ℓ1 geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    L2,
    L1Geometry,
}

impl NormTag {
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            NormTag::L2 => norm2(v),
            NormTag::L1Geometry => norm_inf(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub theta: Vec<f64>,
    pub value: f64,
}

/// `L` bounds `E‖∂F(θ;X)‖*²` by `L²`; `l1` is the Lipschitz constant of the
/// gradient, `None` for non-smooth problems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lipschitz {
    pub l: f64,
    pub l1: Option<f64>,
}

pub trait Problem: Send + Sync {
    /// Family key, as used in configs and CSV rows.
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// Length of one sample `X`.
    fn sample_dim(&self) -> usize;
    fn sample_into(&self, rng: &mut dyn RngCore, x: &mut [f64]);
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64;
    fn subgrad(&self, theta: &[f64], x: &[f64]) -> Option<Vec<f64>>;
    fn f_exact(&self, theta: &[f64]) -> f64;
    fn optimum(&self) -> &Optimum;
    /// Feasible set over which `optimum` is the minimum.
    fn domain(&self) -> Domain;
    fn lipschitz(&self) -> Lipschitz;
    fn norm_tag(&self) -> NormTag;
    /// `∇f(θ)`, for problems where it exists everywhere.
    fn exact_grad(&self, _theta: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// `E‖∇F(θ;X)‖*²` in closed form, where available.
    fn grad_second_moment(&self, _theta: &[f64]) -> Option<f64> {
        None
    }
    /// False when default parameters were overridden.
    fn canonical(&self) -> bool {
        true
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut x = vec![0.0; self.sample_dim()];
        self.sample_into(rng, &mut x);
        x
    }

    fn gap(&self, theta: &[f64]) -> f64 {
        self.f_exact(theta) - self.optimum().value
    }
}

fn fill_normal(rng: &mut dyn RngCore, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi = rng.sample(StandardNormal);
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(ZoError::Config("problem dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(ZoError::Config(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

fn check_sign_vector(v: &[f64], d: usize) -> Result<()> {
    if v.len() != d || v.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(ZoError::Config(format!("v must be a sign vector of length {d}")));
    }
    Ok(())
}

/// Uniform draw from `{−1, 1}^d` on the sign-vector stream of `seed`.
pub fn random_sign_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, tag::SIGN_VECTOR);
    (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Conjugate exponent, with `1 ↦ ∞` and `∞ ↦ 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn ball_for_exponent(q: f64) -> Option<Ball> {
    if q == 2.0 {
        Some(Ball::L2)
    } else if q == 1.0 {
        Some(Ball::L1)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Gaussian linear hard instance

/// Parameters of the Gaussian linear family `X ~ N(δv, σ²I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceParams {
    pub d: usize,
    pub l: f64,
    pub t: u64,
    pub q: f64,
    pub v: Vec<f64>,
    pub sigma2: f64,
    pub delta: f64,
}

impl HardInstanceParams {
    /// `σ² = 8L²/(9d)`, `δ² = (L²/9)·min{1/T, 1/d}`.
    pub fn canonical(d: usize, l: f64, t: u64, q: f64, v: Vec<f64>) -> Self {
        let df = d as f64;
        let sigma2 = 8.0 * l * l / (9.0 * df);
        let delta = (l * l / 9.0 * (1.0 / t as f64).min(1.0 / df)).sqrt();
        HardInstanceParams { d, l, t, q, v, sigma2, delta }
    }
}

#[derive(Clone, Debug)]
pub struct GaussianLinear {
    params: HardInstanceParams,
    radius: f64,
    sigma: f64,
    optimum: Optimum,
    canonical: bool,
}

/// `F(θ;x) = ⟨θ,x⟩`, `X ~ N(δv, σ²I)`, minimised over the `ℓq` ball of
/// radius `radius`: `θ* = −R·d^{−1/q}·v`, `f* = −δR·d^{1−1/q}`.
pub fn make_gaussian_linear(
    d: usize,
    l: f64,
    t: u64,
    q: f64,
    radius: f64,
    v: Vec<f64>,
) -> Result<GaussianLinear> {
    check_dim(d)?;
    let params = HardInstanceParams::canonical(d, l, t, q, v);
    GaussianLinear::from_params(params, radius, true)
}

impl GaussianLinear {
    /// Build from explicit parameters; `canonical = false` marks overrides.
    pub fn from_params(params: HardInstanceParams, radius: f64, canonical: bool) -> Result<Self> {
        let d = params.d;
        check_dim(d)?;
        check_positive("L", params.l)?;
        check_positive("radius", radius)?;
        if params.t == 0 {
            return Err(ZoError::Config("T must be at least 1".into()));
        }
        if !(params.q >= 1.0) {
            return Err(ZoError::Config(format!("q must be >= 1, got {}", params.q)));
        }
        if ball_for_exponent(params.q).is_none() {
            return Err(ZoError::Config(format!(
                "gaussian_linear needs q in {{1, 2}} to define a feasible ball, got {}",
                params.q
            )));
        }
        check_sign_vector(&params.v, d)?;
        if !(params.sigma2 >= 0.0 && params.delta >= 0.0) {
            return Err(ZoError::Config("sigma2 and delta must be non-negative".into()));
        }
        let df = d as f64;
        let scale = radius * df.powf(-1.0 / params.q);
        let theta: Vec<f64> = params.v.iter().map(|s| -scale * s).collect();
        let value = -params.delta * radius * df.powf(1.0 - 1.0 / params.q);
        Ok(GaussianLinear {
            sigma: params.sigma2.sqrt(),
            optimum: Optimum { theta, value },
            params,
            radius,
            canonical,
        })
    }

    pub fn params(&self) -> &HardInstanceParams {
        &self.params
    }
}

impl Problem for GaussianLinear {
    fn name(&self) -> &'static str {
        "gaussian_linear"
    }
    fn dim(&self) -> usize {
        self.params.d
    }
    fn sample_dim(&self) -> usize {
        self.params.d
    }
    fn sample_into(&self, rng: &mut dyn RngCore, x: &mut [f64]) {
        fill_normal(rng, x);
        for (xi, vi) in x.iter_mut().zip(&self.params.v) {
            *xi = self.params.delta * vi + self.sigma * *xi;
        }
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        dot(theta, x)
    }
    fn subgrad(&self, _theta: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }
    fn f_exact(&self, theta: &[f64]) -> f64 {
        self.params.delta * dot(theta, &self.params.v)
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
    fn domain(&self) -> Domain {
        Domain {
            ball: ball_for_exponent(self.params.q).unwrap(),
            radius: self.radius,
            dim: self.params.d,
        }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l: self.params.l, l1: Some(0.0) }
    }
    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }
    fn exact_grad(&self, _theta: &[f64]) -> Option<Vec<f64>> {
        Some(self.params.v.iter().map(|s| self.params.delta * s).collect())
    }
    fn grad_second_moment(&self, _theta: &[f64]) -> Option<f64> {
        Some((self.params.delta.powi(2) + self.params.sigma2) * self.params.d as f64)
    }
    fn canonical(&self) -> bool {
        self.canonical
    }
}

// ---------------------------------------------------------------------------
// ℓ1-median instance

#[derive(Clone, Debug)]
pub struct L1Median {
    d: usize,
    l: f64,
    p: f64,
    sigma: f64,
    radius: f64,
    v: Vec<f64>,
    l_d: f64,
    delta: f64,
    optimum: Optimum,
}

/// `F(θ;W) = L_d‖θ − δv‖₁ + W`, `W ~ N(0, σ²)`, with `L_d = L·d^{−1/p}` and
/// `δ = min{R·d^{−1/q}, σ/(2L_d√T)}`. Subgradients have `ℓp` norm exactly
/// `L`. Supported exponents: `p = 2` (ℓ2 ball) and `p = ∞` (ℓ1 ball).
pub fn make_l1_median(
    d: usize,
    l: f64,
    p: f64,
    t: u64,
    sigma: f64,
    radius: f64,
    v: Vec<f64>,
) -> Result<L1Median> {
    check_dim(d)?;
    check_positive("L", l)?;
    check_positive("radius", radius)?;
    check_sign_vector(&v, d)?;
    if t == 0 {
        return Err(ZoError::Config("T must be at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ZoError::Config(format!("sigma must be non-negative, got {sigma}")));
    }
    if !(p == 2.0 || p.is_infinite() && p > 0.0) {
        return Err(ZoError::Config(format!(
            "l1_median supports p = 2 or p = inf, got {p}"
        )));
    }
    let df = d as f64;
    let q = conjugate(p);
    let l_d = l * df.powf(-1.0 / p);
    let delta = (radius * df.powf(-1.0 / q)).min(sigma / (2.0 * l_d * (t as f64).sqrt()));
    let theta = v.iter().map(|s| delta * s).collect();
    Ok(L1Median {
        d,
        l,
        p,
        sigma,
        radius,
        v,
        l_d,
        delta,
        optimum: Optimum { theta, value: 0.0 },
    })
}

impl L1Median {
    pub fn l_d(&self) -> f64 {
        self.l_d
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Problem for L1Median {
    fn name(&self) -> &'static str {
        "l1_median"
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn sample_dim(&self) -> usize {
        1
    }
    fn sample_into(&self, rng: &mut dyn RngCore, x: &mut [f64]) {
        let w: f64 = rng.sample(StandardNormal);
        x[0] = self.sigma * w;
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.f_exact(theta) + x[0]
    }
    fn subgrad(&self, theta: &[f64], _x: &[f64]) -> Option<Vec<f64>> {
        Some(
            theta
                .iter()
                .zip(&self.v)
                .map(|(t, s)| self.l_d * sign(t - self.delta * s))
                .collect(),
        )
    }
    fn f_exact(&self, theta: &[f64]) -> f64 {
        self.l_d
            * theta
                .iter()
                .zip(&self.v)
                .map(|(t, s)| (t - self.delta * s).abs())
                .sum::<f64>()
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
    fn domain(&self) -> Domain {
        Domain {
            ball: ball_for_exponent(conjugate(self.p)).unwrap(),
            radius: self.radius,
            dim: self.d,
        }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l: self.l, l1: None }
    }
    fn norm_tag(&self) -> NormTag {
        if self.p == 2.0 {
            NormTag::L2
        } else {
            NormTag::L1Geometry
        }
    }
}

// ---------------------------------------------------------------------------
// Smooth quadratic

/// Largest `‖θ − c‖₂` over the domain.
fn max_distance(dom: &Domain, c: &[f64]) -> f64 {
    let r = dom.radius;
    match dom.ball {
        Ball::L2 => r + norm2(c),
        // attained at the vertex ±r·e_i farthest from c
        Ball::L1 => (dot(c, c) + r * r + 2.0 * r * norm_inf(c)).sqrt(),
    }
}

#[derive(Clone, Debug)]
pub struct Quadratic {
    dom: Domain,
    center: Vec<f64>,
    sigma: f64,
    optimum: Optimum,
    l: f64,
}

/// `F(θ;X) = ½‖θ − θ* + σX‖₂² − ½σ²d`, `X ~ N(0, I)`, so that
/// `f(θ) = ½‖θ − θ*‖₂²` exactly. `θ*` must lie in `dom`.
pub fn make_smooth_quadratic(theta_star: Vec<f64>, sigma: f64, dom: Domain) -> Result<Quadratic> {
    if !dom.contains(&theta_star) {
        return Err(ZoError::Config("quadratic minimiser lies outside the domain".into()));
    }
    make_constrained_quadratic(theta_star, sigma, dom)
}

/// As [`make_smooth_quadratic`] with an arbitrary center `c`; the
/// constrained minimiser is the Euclidean projection of `c` onto `dom` and
/// `f* = ½ dist(c, dom)²`.
pub fn make_constrained_quadratic(center: Vec<f64>, sigma: f64, dom: Domain) -> Result<Quadratic> {
    check_dim(dom.dim)?;
    if center.len() != dom.dim {
        return Err(ZoError::Config(format!(
            "center has dimension {}, domain has {}",
            center.len(),
            dom.dim
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ZoError::Config(format!("sigma must be non-negative, got {sigma}")));
    }
    let theta = dom.project(&center)?;
    let dist2: f64 = theta.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
    let l = max_distance(&dom, &center) + sigma * (dom.dim as f64).sqrt();
    Ok(Quadratic {
        optimum: Optimum { theta, value: 0.5 * dist2 },
        dom,
        center,
        sigma,
        l,
    })
}

impl Problem for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.dom.dim
    }
    fn sample_dim(&self) -> usize {
        if self.sigma > 0.0 {
            self.dom.dim
        } else {
            0
        }
    }
    fn sample_into(&self, rng: &mut dyn RngCore, x: &mut [f64]) {
        fill_normal(rng, x);
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        if x.is_empty() {
            return self.f_exact(theta);
        }
        let s = self.sigma;
        let sq: f64 = theta
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((t, c), xi)| {
                let r = t - c + s * xi;
                r * r
            })
            .sum();
        0.5 * sq - 0.5 * s * s * self.dom.dim as f64
    }
    fn subgrad(&self, theta: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        let s = self.sigma;
        Some(
            theta
                .iter()
                .zip(&self.center)
                .enumerate()
                .map(|(i, (t, c))| t - c + if x.is_empty() { 0.0 } else { s * x[i] })
                .collect(),
        )
    }
    fn f_exact(&self, theta: &[f64]) -> f64 {
        0.5 * theta
            .iter()
            .zip(&self.center)
            .map(|(t, c)| (t - c) * (t - c))
            .sum::<f64>()
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
    fn domain(&self) -> Domain {
        self.dom
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l: self.l, l1: Some(1.0) }
    }
    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }
    fn exact_grad(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(theta.iter().zip(&self.center).map(|(t, c)| t - c).collect())
    }
    fn grad_second_moment(&self, theta: &[f64]) -> Option<f64> {
        Some(2.0 * self.f_exact(theta) + self.sigma * self.sigma * self.dom.dim as f64)
    }
}

// ---------------------------------------------------------------------------
// Non-smooth norm

#[derive(Clone, Debug)]
pub struct NormObjective {
    dom: Domain,
    center: Vec<f64>,
    l: f64,
    sigma: f64,
    optimum: Optimum,
}

/// `F(θ;X) = L‖θ − θ*‖₂ + σ⟨θ, X⟩`, `X ~ N(0, I)`, so `f(θ) = L‖θ − θ*‖₂`.
/// `θ*` must lie in `dom`.
pub fn make_nonsmooth_norm(
    theta_star: Vec<f64>,
    l: f64,
    sigma: f64,
    dom: Domain,
) -> Result<NormObjective> {
    if !dom.contains(&theta_star) {
        return Err(ZoError::Config("norm minimiser lies outside the domain".into()));
    }
    make_constrained_norm(theta_star, l, sigma, dom)
}

/// As [`make_nonsmooth_norm`] with an arbitrary center; the constrained
/// minimiser is the Euclidean projection of the center onto `dom`.
pub fn make_constrained_norm(
    center: Vec<f64>,
    l: f64,
    sigma: f64,
    dom: Domain,
) -> Result<NormObjective> {
    check_dim(dom.dim)?;
    check_positive("L", l)?;
    if center.len() != dom.dim {
        return Err(ZoError::Config(format!(
            "center has dimension {}, domain has {}",
            center.len(),
            dom.dim
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ZoError::Config(format!("sigma must be non-negative, got {sigma}")));
    }
    let theta = dom.project(&center)?;
    let dist = norm2(&crate::vector::sub(&theta, &center));
    Ok(NormObjective {
        optimum: Optimum { theta, value: l * dist },
        dom,
        center,
        l,
        sigma,
    })
}

impl Problem for NormObjective {
    fn name(&self) -> &'static str {
        "norm"
    }
    fn dim(&self) -> usize {
        self.dom.dim
    }
    fn sample_dim(&self) -> usize {
        if self.sigma > 0.0 {
            self.dom.dim
        } else {
            0
        }
    }
    fn sample_into(&self, rng: &mut dyn RngCore, x: &mut [f64]) {
        fill_normal(rng, x);
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        let noise = if x.is_empty() { 0.0 } else { self.sigma * dot(theta, x) };
        self.f_exact(theta) + noise
    }
    fn subgrad(&self, theta: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        let diff = crate::vector::sub(theta, &self.center);
        let n = norm2(&diff);
        let scale = if n > 0.0 { self.l / n } else { 0.0 };
        Some(
            diff.iter()
                .enumerate()
                .map(|(i, di)| scale * di + if x.is_empty() { 0.0 } else { self.sigma * x[i] })
                .collect(),
        )
    }
    fn f_exact(&self, theta: &[f64]) -> f64 {
        self.l * norm2(&crate::vector::sub(theta, &self.center))
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
    fn domain(&self) -> Domain {
        self.dom
    }
    /// `E‖∂F‖₂² = L² + σ²d`.
    fn lipschitz(&self) -> Lipschitz {
        let d = self.dom.dim as f64;
        Lipschitz { l: (self.l * self.l + self.sigma * self.sigma * d).sqrt(), l1: None }
    }
    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }
}

// ---------------------------------------------------------------------------
// Piecewise quadratic

/// `f(θ) = ½‖max(θ, 0)‖₂²`: smooth (`L1 = 1`) but not quadratic, so the
/// two-point estimator has a smoothing bias of order `u` at the kink.
/// Noise-free; minimised by any `θ ≤ 0`, in particular the origin.
#[derive(Clone, Debug)]
pub struct PositivePartQuadratic {
    dom: Domain,
    optimum: Optimum,
}

pub fn make_positive_part_quadratic(dom: Domain) -> Result<PositivePartQuadratic> {
    check_dim(dom.dim)?;
    Ok(PositivePartQuadratic {
        optimum: Optimum { theta: dom.origin(), value: 0.0 },
        dom,
    })
}

impl Problem for PositivePartQuadratic {
    fn name(&self) -> &'static str {
        "positive_part_quadratic"
    }
    fn dim(&self) -> usize {
        self.dom.dim
    }
    fn sample_dim(&self) -> usize {
        0
    }
    fn sample_into(&self, _rng: &mut dyn RngCore, _x: &mut [f64]) {}
    fn eval(&self, theta: &[f64], _x: &[f64]) -> f64 {
        self.f_exact(theta)
    }
    fn subgrad(&self, theta: &[f64], _x: &[f64]) -> Option<Vec<f64>> {
        self.exact_grad(theta)
    }
    fn f_exact(&self, theta: &[f64]) -> f64 {
        0.5 * theta.iter().map(|t| t.max(0.0).powi(2)).sum::<f64>()
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
    fn domain(&self) -> Domain {
        self.dom
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l: max_distance(&self.dom, &self.dom.origin()), l1: Some(1.0) }
    }
    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }
    fn exact_grad(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(theta.iter().map(|t| t.max(0.0)).collect())
    }
    fn grad_second_moment(&self, theta: &[f64]) -> Option<f64> {
        Some(2.0 * self.f_exact(theta))
    }
}

// ---------------------------------------------------------------------------
// One-vector optimisation gap

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnevecGap {
    pub val_a: f64,
    pub val_b: f64,
    pub required_gap: f64,
    pub holds: bool,
}

/// Compares `min ⟨𝟙,θ⟩` over the unit `ℓq` ball (`−d^{1−1/q}`) with the same
/// problem restricted to the last `d − i` coordinates (`−(d−i)^{1−1/q}`), and
/// checks the separation `(1 − 1/q)·i/d^{1/q}`.
pub fn onevec_gap(d: usize, q: f64, i: usize) -> Result<OnevecGap> {
    if d == 0 || i == 0 || i > d {
        return Err(ZoError::Contract(format!("need 1 <= i <= d, got i={i}, d={d}")));
    }
    if !(q >= 1.0) {
        return Err(ZoError::Contract(format!("need q >= 1, got {q}")));
    }
    let inv_q = 1.0 / q;
    let df = d as f64;
    let val_a = -df.powf(1.0 - inv_q);
    let rest = (d - i) as f64;
    let val_b = if d == i { 0.0 } else { -rest.powf(1.0 - inv_q) };
    let required_gap = (1.0 - inv_q) * i as f64 / df.powf(inv_q);
    let slack = 1e-12 * val_a.abs().max(1.0);
    Ok(OnevecGap {
        val_a,
        val_b,
        required_gap,
        holds: val_a <= val_b - required_gap + slack,
    })
}

/// `ℓp` norm helper exposed for subgradient-norm checks.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        norm1(v)
    } else {
        norm_p(v, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chunk_stream;

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    fn random_point(dom: &Domain, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, tag::DIAGNOSTIC);
        let raw: Vec<f64> = (0..dom.dim).map(|_| rng.random_range(-1.0..1.0) * dom.radius).collect();
        dom.project(&raw).unwrap()
    }

    fn check_unbiased(p: &dyn Problem, seed: u64) {
        let dom = p.domain();
        for k in 0..5 {
            let theta = random_point(&dom, seed + k);
            let mut rng = chunk_stream(seed, tag::DATA, k);
            let vals: Vec<f64> = (0..100_000)
                .map(|_| {
                    let x = p.sample(&mut rng);
                    p.eval(&theta, &x)
                })
                .collect();
            let (m, se) = mean_and_stderr(&vals);
            let f = p.f_exact(&theta);
            assert!((m - f).abs() <= 4.0 * se + 1e-12, "{}: mean {m} vs f {f} (se {se})", p.name());
        }
    }

    fn check_optimum(p: &dyn Problem, seed: u64) {
        let opt = p.optimum();
        assert_eq!(p.f_exact(&opt.theta), opt.value, "{}", p.name());
        let dom = p.domain();
        assert!(dom.contains(&opt.theta));
        let mut rng = stream(seed, tag::DIAGNOSTIC);
        for _ in 0..1000 {
            let pert: Vec<f64> = opt
                .theta
                .iter()
                .map(|t| t + rng.random_range(-0.3..0.3) * dom.radius)
                .collect();
            let cand = dom.project(&pert).unwrap();
            assert!(p.f_exact(&cand) >= opt.value - 1e-12, "{}", p.name());
        }
    }

    fn l2(r: f64, d: usize) -> Domain {
        Domain::l2(r, d).unwrap()
    }

    #[test]
    fn gaussian_linear_examples() {
        let v = vec![1.0, -1.0, 1.0, 1.0];
        let p = make_gaussian_linear(4, 1.0, 100, 2.0, 1.0, v).unwrap();
        assert!((p.params().sigma2 - 8.0 / 36.0).abs() < 1e-15);
        assert!((p.params().delta - 1.0 / 30.0).abs() < 1e-15);
        assert!((p.optimum().value + 2.0 / 30.0).abs() < 1e-15);
        let budget = (p.params().delta.powi(2) + p.params().sigma2) * 4.0;
        assert!((budget - 0.89333).abs() < 1e-4 && budget <= 1.0);
    }

    #[test]
    fn hard_instance_budget() {
        for d in [1usize, 2, 8, 64] {
            for t in [1u64, 10, 10_000] {
                let h = HardInstanceParams::canonical(d, 2.0, t, 2.0, vec![1.0; d]);
                assert!((h.delta.powi(2) + h.sigma2) * d as f64 <= 4.0 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn gaussian_linear_moment_budget_empirical() {
        let d = 8;
        let p = make_gaussian_linear(d, 1.0, 100, 2.0, 1.0, random_sign_vector(d, 3)).unwrap();
        let mut rng = stream(5, tag::DATA);
        let sq: Vec<f64> = (0..100_000)
            .map(|_| {
                let x = p.sample(&mut rng);
                dot(&x, &x)
            })
            .collect();
        let (m, se) = mean_and_stderr(&sq);
        assert!(m <= 1.0 + 4.0 * se, "E|X|^2 = {m}");
    }

    #[test]
    fn l1_median_examples() {
        let v = vec![1.0, -1.0, 1.0, -1.0];
        let p = make_l1_median(4, 1.0, 2.0, 100, 1.0, 1.0, v.clone()).unwrap();
        assert!((p.l_d() - 0.5).abs() < 1e-15);
        assert_eq!(p.f_exact(&p.optimum().theta), 0.0);
        let above: Vec<f64> = v.iter().map(|s| p.delta() * s + 0.1).collect();
        let g = p.subgrad(&above, &[0.0]).unwrap();
        assert!(g.iter().all(|&x| x == 0.5));
        assert!((lp_norm(&g, 2.0) - 1.0).abs() < 1e-15);
        let inf = make_l1_median(4, 1.0, f64::INFINITY, 100, 1.0, 1.0, v).unwrap();
        assert_eq!(inf.l_d(), 1.0);
        assert_eq!(inf.domain().ball, Ball::L1);
        assert!(make_l1_median(4, 1.0, 3.0, 100, 1.0, 1.0, vec![1.0; 4]).is_err());
    }

    #[test]
    fn quadratic_examples() {
        let dom = l2(10.0, 2);
        let p = make_smooth_quadratic(vec![1.0, -2.0], 0.5, dom).unwrap();
        assert_eq!(p.f_exact(&[1.0, -2.0]), 0.0);
        let g = p.exact_grad(&[4.0, 2.0]).unwrap();
        assert_eq!(norm2(&g), 5.0);
        assert!(make_smooth_quadratic(vec![20.0, 0.0], 0.5, dom).is_err());
        let c = make_constrained_quadratic(vec![3.0, 4.0], 0.0, l2(1.0, 2)).unwrap();
        assert!((c.optimum().value - 8.0).abs() < 1e-12);
        assert!((c.lipschitz().l - 6.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_centred_noise_mean_is_zero() {
        let p = make_smooth_quadratic(vec![0.0; 3], 1.5, l2(1.0, 3)).unwrap();
        let mut rng = stream(1, tag::DATA);
        let vals: Vec<f64> = (0..100_000).map(|_| p.eval(&[0.0; 3], &p.sample(&mut rng))).collect();
        let (m, se) = mean_and_stderr(&vals);
        assert!(m.abs() <= 4.0 * se);
    }

    #[test]
    fn norm_examples() {
        let p = make_nonsmooth_norm(vec![0.1, 0.2], 2.0, 0.0, l2(1.0, 2)).unwrap();
        assert_eq!(p.f_exact(&[0.1, 0.2]), 0.0);
        let g = p.subgrad(&[0.5, -0.3], &[]).unwrap();
        assert!((norm2(&g) - 2.0).abs() < 1e-12);
        assert_eq!(p.subgrad(&[0.1, 0.2], &[]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn unbiased_and_optimal() {
        let d = 5;
        let probs: Vec<Box<dyn Problem>> = vec![
            Box::new(make_gaussian_linear(d, 1.0, 100, 2.0, 1.0, random_sign_vector(d, 1)).unwrap()),
            Box::new(make_gaussian_linear(d, 1.0, 100, 1.0, 1.0, random_sign_vector(d, 2)).unwrap()),
            Box::new(make_l1_median(d, 1.0, 2.0, 100, 0.5, 1.0, random_sign_vector(d, 3)).unwrap()),
            Box::new(make_l1_median(d, 1.0, f64::INFINITY, 100, 0.5, 1.0, random_sign_vector(d, 4)).unwrap()),
            Box::new(make_smooth_quadratic(vec![0.1; d], 0.7, l2(1.0, d)).unwrap()),
            Box::new(make_constrained_quadratic(vec![2.0; d], 0.7, l2(1.0, d)).unwrap()),
            Box::new(make_constrained_quadratic(vec![0.5, -2.0, 0.1, 0.0, 1.0], 0.3, Domain::l1(1.0, d).unwrap()).unwrap()),
            Box::new(make_nonsmooth_norm(vec![-0.2; d], 1.0, 0.4, l2(1.0, d)).unwrap()),
            Box::new(make_constrained_norm(vec![1.0; d], 1.0, 0.4, l2(1.0, d)).unwrap()),
            Box::new(make_positive_part_quadratic(l2(1.0, d)).unwrap()),
        ];
        for (k, p) in probs.iter().enumerate() {
            check_unbiased(p.as_ref(), 100 + k as u64);
            check_optimum(p.as_ref(), 200 + k as u64);
        }
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let d = 4;
        let smooth: Vec<Box<dyn Problem>> = vec![
            Box::new(make_smooth_quadratic(vec![0.1, -0.2, 0.3, 0.0], 0.5, l2(1.0, d)).unwrap()),
            Box::new(make_gaussian_linear(d, 1.0, 100, 2.0, 1.0, random_sign_vector(d, 9)).unwrap()),
            Box::new(make_positive_part_quadratic(l2(1.0, d)).unwrap()),
        ];
        let theta = [0.3, -0.4, 0.2, 0.5];
        let h = 1e-6;
        for p in &smooth {
            let mut rng = stream(4, tag::DATA);
            let n = 100_000;
            let mut mean = vec![0.0; d];
            for _ in 0..n {
                let g = p.subgrad(&theta, &p.sample(&mut rng)).unwrap();
                mean.iter_mut().zip(&g).for_each(|(m, gi)| *m += gi / n as f64);
            }
            let exact = p.exact_grad(&theta).unwrap();
            for j in 0..d {
                let mut a = theta.to_vec();
                let mut b = theta.to_vec();
                a[j] += h;
                b[j] -= h;
                let fd = (p.f_exact(&a) - p.f_exact(&b)) / (2.0 * h);
                assert!((fd - exact[j]).abs() < 1e-4, "{} coord {j}", p.name());
                // sampled subgradients average to the gradient (noise sd ≤ 0.5/√n)
                assert!((mean[j] - exact[j]).abs() < 4.0 * 0.5 / (n as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn subgradient_norm_bounded_by_l() {
        let d = 6;
        let p = make_l1_median(d, 2.0, 2.0, 50, 1.0, 1.0, random_sign_vector(d, 1)).unwrap();
        let theta = vec![0.3; d];
        let g = p.subgrad(&theta, &[0.0]).unwrap();
        assert!(lp_norm(&g, 2.0) <= 2.0 + 1e-12);
        let q = make_constrained_norm(vec![1.0; d], 1.5, 0.5, l2(1.0, d)).unwrap();
        let mut rng = stream(8, tag::DATA);
        let n = 50_000;
        let m2 = (0..n)
            .map(|_| {
                let g = q.subgrad(&theta, &q.sample(&mut rng)).unwrap();
                dot(&g, &g)
            })
            .sum::<f64>()
            / n as f64;
        let l = q.lipschitz().l;
        assert!(m2 <= l * l * 1.02, "{m2} vs {}", l * l);
    }

    #[test]
    fn onevec_examples() {
        let g = onevec_gap(4, 2.0, 2).unwrap();
        assert!((g.val_a + 2.0).abs() < 1e-12);
        assert!((g.val_b + 2f64.sqrt()).abs() < 1e-12);
        assert!((g.required_gap - 0.5).abs() < 1e-12);
        assert!(g.holds);
        let g = onevec_gap(9, 1.0, 3).unwrap();
        assert_eq!(g.required_gap, 0.0);
        assert!(g.holds);
        let g = onevec_gap(16, 2.0, 16).unwrap();
        assert_eq!(g.val_b, 0.0);
        assert!((g.required_gap - 2.0).abs() < 1e-12);
        assert!(g.holds);
        assert!(matches!(onevec_gap(4, 2.0, 5), Err(ZoError::Contract(_))));
    }

    #[test]
    fn onevec_full_grid() {
        for d in 2..=64 {
            for q in [1.0, 1.5, 2.0, 4.0, 64.0] {
                for i in 1..=d {
                    assert!(onevec_gap(d, q, i).unwrap().holds, "d={d} q={q} i={i}");
                }
            }
        }
    }

    #[test]
    fn sign_vectors_are_deterministic() {
        let a = random_sign_vector(16, 42);
        assert_eq!(a, random_sign_vector(16, 42));
        assert!(a.iter().all(|&s| s == 1.0 || s == -1.0));
        assert_ne!(a, random_sign_vector(16, 43));
    }
}
