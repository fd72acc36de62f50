//! Monte-Carlo checks of the smoothing lemmas behind the non-smooth analysis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::estimators::valid_double_pair;
use crate::rng::{chunk_stream, derive_seed, tag};
use crate::smoothing::{SmoothingDistribution, SmoothingKind};
use crate::vector::norm2;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub dist1: SmoothingKind,
    pub dist2: SmoothingKind,
    pub d: usize,
    pub u: f64,
    pub n: usize,
    /// `sup_a [P̂(‖Z₁ + uZ₂‖ ≤ a) − P̂(‖Z₁‖ ≤ a)]`; theory says `≤ 0`.
    pub max_cdf_violation: f64,
    /// `2·√(log N / N)`.
    pub noise_band: f64,
}

/// Draw `n` pairs `(‖Z₁ + uZ₂‖, ‖Z₁‖)` sharing `Z₁`, in chunk order.
fn paired_norms(
    z1: &SmoothingDistribution,
    z2: &SmoothingDistribution,
    u: f64,
    n: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let d = z1.dim;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_stream(seed, tag::DIAGNOSTIC, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let (mut a, mut b) = (Vec::with_capacity(len), Vec::with_capacity(len));
            let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
            for _ in 0..len {
                z1.sample_into(&mut rng, &mut x);
                z2.sample_into(&mut rng, &mut y);
                b.push(norm2(&x));
                x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi += u * yi);
                a.push(norm2(&x));
            }
            (a, b)
        })
        .collect();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (pa, pb) in parts {
        a.extend(pa);
        b.extend(pb);
    }
    (a, b)
}

/// `sup_x [F_a(x) − F_b(x)]` over all sample points, for sorted inputs.
pub fn max_cdf_excess(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max(i as f64 / na - j as f64 / nb);
    }
    best
}

/// Empirical check that `‖Z₁ + uZ₂‖` stochastically dominates `‖Z₁‖`.
pub fn dominance_check(
    dist1: SmoothingKind,
    dist2: SmoothingKind,
    u: f64,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<DominanceResult> {
    if !valid_double_pair(dist1, dist2) {
        return Err(ZoError::Config(format!(
            "unsupported smoothing pair ({}, {})",
            dist1.label(),
            dist2.label()
        )));
    }
    if n < 100_000 {
        return Err(ZoError::Contract(format!("dominance check needs N >= 100000, got {n}")));
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(ZoError::Contract(format!("u must be non-negative, got {u}")));
    }
    let z1 = SmoothingDistribution::new(dist1, d)?;
    let z2 = SmoothingDistribution::new(dist2, d)?;
    let (mut a, mut b) = paired_norms(&z1, &z2, u, n, seed);
    a.par_sort_unstable_by(f64::total_cmp);
    b.par_sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    Ok(DominanceResult {
        dist1,
        dist2,
        d,
        u,
        n,
        max_cdf_violation: max_cdf_excess(&a, &b),
        noise_band: 2.0 * (nf.ln() / nf).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub u: f64,
    pub d: usize,
    /// Empirical `E|h(Z₁ + uZ₂) − h(Z₁)|^k` with `h = ‖·‖₂`.
    pub moment: f64,
    pub stderr: f64,
    /// `u^k·[u·d^{k/2} + 1 + log^{k/2}(d + 2k)]`.
    pub normalizer: f64,
    /// `moment / normalizer`; `None` at `u = 0`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzTable {
    pub k: u32,
    pub rows: Vec<LipschitzRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio`; bounded if the normaliser captures the
    /// dependence on `u` and `d`.
    pub spread: f64,
}

/// Moments of `|‖Z₁ + uZ₂‖ − ‖Z₁‖|` for `(Z₁, Z₂)` = (ball, sphere),
/// normalised by the lemma's rate, over a `u × d` grid.
pub fn lipschitz_diff_moment_check(
    k: u32,
    u_grid: &[f64],
    d_grid: &[usize],
    n: usize,
    seed: u64,
) -> Result<LipschitzTable> {
    if k == 0 {
        return Err(ZoError::Contract("k must be at least 1".into()));
    }
    if u_grid.is_empty() || d_grid.is_empty() {
        return Err(ZoError::Config("u and d grids must not be empty".into()));
    }
    if n < 1000 {
        return Err(ZoError::Contract(format!("need N >= 1000, got {n}")));
    }
    let kf = k as f64;
    let mut rows = Vec::new();
    for (di, &d) in d_grid.iter().enumerate() {
        let z1 = SmoothingDistribution::new(SmoothingKind::BallSqrtDPlus2, d)?;
        let z2 = SmoothingDistribution::new(SmoothingKind::SphereSqrtD, d)?;
        for (ui, &u) in u_grid.iter().enumerate() {
            if !(u >= 0.0 && u.is_finite()) {
                return Err(ZoError::Contract(format!("u must be non-negative, got {u}")));
            }
            let cell_seed = derive_seed(seed, di as u64, ui as u64);
            let (a, b) = paired_norms(&z1, &z2, u, n, cell_seed);
            let vals: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs().powi(k as i32)).collect();
            let nf = n as f64;
            let mean = vals.iter().sum::<f64>() / nf;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let df = d as f64;
            let normalizer = u.powf(kf) * (u * df.powf(kf / 2.0) + 1.0 + (df + 2.0 * kf).ln().powf(kf / 2.0));
            rows.push(LipschitzRow {
                u,
                d,
                moment: mean,
                stderr: (var / nf).sqrt(),
                normalizer,
                ratio: (u > 0.0).then(|| mean / normalizer),
            });
        }
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NAN, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::NAN, f64::min);
    Ok(LipschitzTable { k, rows, max_ratio, min_ratio, spread: max_ratio / min_ratio })
}
