//! Perturbation distributions with identity second moment, their norm
//! moments in closed form, and the constants `s(d)` and `M` that drive the
//! smooth-case schedules.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, ZoError};
use crate::geometry::ProxGeometry;
use crate::rng::{chunk_stream, tag};
use crate::vector::norm2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingKind {
    Gaussian,
    #[serde(alias = "ball")]
    BallSqrtDPlus2,
    #[serde(alias = "sphere")]
    SphereSqrtD,
    Hypercube,
}

impl SmoothingKind {
    pub fn label(&self) -> &'static str {
        match self {
            SmoothingKind::Gaussian => "gaussian",
            SmoothingKind::BallSqrtDPlus2 => "ball",
            SmoothingKind::SphereSqrtD => "sphere",
            SmoothingKind::Hypercube => "hypercube",
        }
    }
}

/// `Z` with `E[ZZᵀ] = I`: standard Gaussian, uniform on the ball of radius
/// `√(d+2)`, uniform on the sphere of radius `√d`, or uniform on `{−1,1}^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingDistribution {
    pub kind: SmoothingKind,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    /// `s(d)` with `E[⟨g,Z⟩²‖Z‖*²] ≤ s(d)‖g‖²`.
    pub s_d: f64,
    /// `M = √E[‖Z‖⁴‖Z‖*²]`.
    pub moment_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostics {
    pub kind: SmoothingKind,
    pub dim: usize,
    pub k: u32,
    pub n: usize,
    pub empirical_kth_moment: f64,
    pub stderr: f64,
    pub theory_kth_moment: f64,
    /// `max_ij |Ê[ZZᵀ] − I|`.
    pub cov_deviation: f64,
    /// `max_j |Ê[Z_j]| · √N`, the largest coordinate mean in standard errors.
    pub max_mean_z: f64,
}

impl SmoothingDistribution {
    pub fn new(kind: SmoothingKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ZoError::Config("smoothing dimension must be at least 1".into()));
        }
        Ok(SmoothingDistribution { kind, dim })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        self.sample_into(rng, &mut z);
        z
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let d = self.dim as f64;
        match self.kind {
            SmoothingKind::Gaussian => fill_gaussian(rng, out),
            SmoothingKind::SphereSqrtD => {
                unit_direction(rng, out);
                let s = d.sqrt();
                out.iter_mut().for_each(|x| *x *= s);
            }
            SmoothingKind::BallSqrtDPlus2 => {
                unit_direction(rng, out);
                let u: f64 = rng.random();
                let s = (d + 2.0).sqrt() * u.powf(1.0 / d);
                out.iter_mut().for_each(|x| *x *= s);
            }
            SmoothingKind::Hypercube => {
                for x in out.iter_mut() {
                    *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
        }
    }

    /// `E‖Z‖₂^k` in closed form.
    pub fn theory_moment(&self, k: u32) -> f64 {
        theory_moment(self, k)
    }
}

fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        fill_gaussian(rng, out);
        let n = norm2(out);
        if n > 0.0 {
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
    }
}

pub fn theory_moment(dist: &SmoothingDistribution, k: u32) -> f64 {
    let d = dist.dim as f64;
    let k = k as f64;
    match dist.kind {
        SmoothingKind::Gaussian => {
            (0.5 * k * 2f64.ln() + ln_gamma(0.5 * k + 0.5 * d) - ln_gamma(0.5 * d)).exp()
        }
        SmoothingKind::BallSqrtDPlus2 => (d + 2.0).powf(0.5 * k) * d / (d + k),
        SmoothingKind::SphereSqrtD | SmoothingKind::Hypercube => d.powf(0.5 * k),
    }
}

pub fn geometry_constants(
    dist: &SmoothingDistribution,
    geom: &ProxGeometry,
) -> Result<GeometryConstants> {
    let d = dist.dim as f64;
    let (s_d, moment_m) = match (dist.kind, geom) {
        (SmoothingKind::SphereSqrtD, ProxGeometry::Euclidean) => (d, d.powf(1.5)),
        (SmoothingKind::Hypercube, ProxGeometry::PNorm { .. }) => (d, d * d),
        (SmoothingKind::Gaussian, ProxGeometry::Euclidean) => {
            (d + 4.0, theory_moment(dist, 6).sqrt())
        }
        (SmoothingKind::BallSqrtDPlus2, ProxGeometry::Euclidean) => {
            (d + 2.0, theory_moment(dist, 6).sqrt())
        }
        (kind, g) => {
            return Err(ZoError::Config(format!(
                "unsupported smoothing/geometry pairing: {} with {}",
                kind.label(),
                g.label()
            )))
        }
    };
    Ok(GeometryConstants { s_d, moment_m })
}

/// Whether `s(d)` for this law is a choice of this implementation rather
/// than a constant fixed by the analysis.
pub fn s_d_implementation_defined(kind: SmoothingKind) -> bool {
    matches!(kind, SmoothingKind::Gaussian | SmoothingKind::BallSqrtDPlus2)
}

const CHUNK: usize = 4096;

struct ChunkStats {
    sum_k: Vec<f64>,
    sum_k2: Vec<f64>,
    mean: Vec<f64>,
    /// Upper triangle of `Σ zzᵀ`, row-major.
    second: Vec<f64>,
}

impl ChunkStats {
    fn new(nk: usize, d: usize) -> Self {
        ChunkStats {
            sum_k: vec![0.0; nk],
            sum_k2: vec![0.0; nk],
            mean: vec![0.0; d],
            second: vec![0.0; d * (d + 1) / 2],
        }
    }

    fn merge(&mut self, o: &ChunkStats) {
        for (a, b) in [
            (&mut self.sum_k, &o.sum_k),
            (&mut self.sum_k2, &o.sum_k2),
            (&mut self.mean, &o.mean),
            (&mut self.second, &o.second),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

/// Monte-Carlo moments over `n` draws. Draws are generated in fixed chunks
/// with per-chunk streams, so the result is independent of the thread count.
pub fn moment_diagnostics(
    dist: &SmoothingDistribution,
    k: u32,
    n: usize,
    seed: u64,
) -> Result<MomentDiagnostics> {
    Ok(moment_diagnostics_multi(dist, &[k], n, seed)?.remove(0))
}

/// [`moment_diagnostics`] for several `k` from one set of draws.
pub fn moment_diagnostics_multi(
    dist: &SmoothingDistribution,
    ks: &[u32],
    n: usize,
    seed: u64,
) -> Result<Vec<MomentDiagnostics>> {
    if n < 1000 {
        return Err(ZoError::Contract(format!("moment diagnostics need N >= 1000, got {n}")));
    }
    if ks.is_empty() {
        return Err(ZoError::Contract("no moment orders requested".into()));
    }
    let d = dist.dim;
    let parts: Vec<ChunkStats> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_stream(seed, tag::DIAGNOSTIC, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let mut st = ChunkStats::new(ks.len(), d);
            let mut z = vec![0.0; d];
            for _ in 0..len {
                dist.sample_into(&mut rng, &mut z);
                let r = norm2(&z);
                for (i, &k) in ks.iter().enumerate() {
                    let v = r.powi(k as i32);
                    st.sum_k[i] += v;
                    st.sum_k2[i] += v * v;
                }
                let mut idx = 0;
                for i in 0..d {
                    st.mean[i] += z[i];
                    for j in i..d {
                        st.second[idx] += z[i] * z[j];
                        idx += 1;
                    }
                }
            }
            st
        })
        .collect();
    let mut total = ChunkStats::new(ks.len(), d);
    for p in &parts {
        total.merge(p);
    }
    let nf = n as f64;
    let mut cov_dev: f64 = 0.0;
    let mut idx = 0;
    for i in 0..d {
        for j in i..d {
            let target = if i == j { 1.0 } else { 0.0 };
            cov_dev = cov_dev.max((total.second[idx] / nf - target).abs());
            idx += 1;
        }
    }
    let max_mean_z = total
        .mean
        .iter()
        .map(|m| (m / nf).abs() * nf.sqrt())
        .fold(0.0, f64::max);
    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mean_k = total.sum_k[i] / nf;
            let var_k = (total.sum_k2[i] / nf - mean_k * mean_k).max(0.0);
            MomentDiagnostics {
                kind: dist.kind,
                dim: d,
                k,
                n,
                empirical_kth_moment: mean_k,
                stderr: (var_k / nf).sqrt(),
                theory_kth_moment: theory_moment(dist, k),
                cov_deviation: cov_dev,
                max_mean_z,
            }
        })
        .collect())
}
