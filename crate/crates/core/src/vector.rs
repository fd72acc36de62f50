//! Small dense-vector helpers on slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖a‖_p` for `p >= 1`, including `p = ∞`. Scaled by the largest entry to
/// avoid overflow for large `p`.
pub fn norm_p(a: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return norm_inf(a);
    }
    if p == 1.0 {
        return norm1(a);
    }
    if p == 2.0 {
        return norm2(a);
    }
    let m = norm_inf(a);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = a.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unit vector `(1, …, 1)/√d`.
pub fn unit_diagonal(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}
