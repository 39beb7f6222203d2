//! Partition-of-unity trapezoid rule on the two charts, corrected to
//! integrate low-degree polynomials in ξ exactly.

use nalgebra::{DMatrix, DVector};

use super::{Atlas, ScalarField, BLEND_OUTER};
use crate::error::{Error, Result};

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth blend in coordinate radius: 1 inside r = 0.8, 0 outside r = 1.25,
/// and χ(r) + χ(1/r) = 1 so the two charts share the sphere exactly.
pub fn blend(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return 1.0;
    }
    let t = 0.5 * r2.ln() / BLEND_OUTER.ln();
    let (a, b) = (bump(1.0 - t), bump(1.0 + t));
    a / (a + b)
}

pub fn in_support(x: &[f64]) -> bool {
    x.iter().map(|v| v * v).sum::<f64>() < BLEND_OUTER * BLEND_OUTER
}

/// Γ(k/2) for positive integer k.
fn gamma_half(k: usize) -> f64 {
    let (mut v, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while 2.0 * x < k as f64 {
        v *= x;
        x += 1.0;
    }
    v
}

/// ∫_{Sⁿ} ξ^α dA for a multi-index α over n+1 ambient coordinates.
pub fn sphere_moment(alpha: &[usize]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let num: f64 = alpha.iter().map(|&a| gamma_half(a + 1)).product();
    2.0 * num / gamma_half(alpha.iter().map(|a| a + 1).sum())
}

/// All multi-indices over `vars` variables with total degree `deg`.
pub fn multi_indices(vars: usize, deg: usize) -> Vec<Vec<usize>> {
    if vars == 1 {
        return vec![vec![deg]];
    }
    (0..=deg)
        .rev()
        .flat_map(|a| {
            multi_indices(vars - 1, deg - a).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

pub(crate) fn weights(atlas: &Atlas) -> Result<(Vec<f64>, usize)> {
    let n = atlas.n;
    let h = atlas.h;
    let support: Vec<usize> = atlas.support().collect();
    let mut w0 = vec![0.0; atlas.len()];
    for &q in &support {
        w0[q] = blend(atlas.coord(q)) * h.powi(n as i32) * (n as f64 * atlas.conformal_log(q)).exp();
    }
    let live: Vec<usize> = support.into_iter().filter(|&q| w0[q] > 0.0).collect();
    let cap = if n == 2 { 8 } else { 6 };
    let mut deg = cap.min(((live.len() as f64 / 4.0).sqrt() as usize).max(1));
    let alphas = loop {
        let mut al = multi_indices(n + 1, deg);
        al.extend(multi_indices(n + 1, deg - 1));
        if live.len() >= 2 * al.len() {
            break al;
        }
        if deg == 1 {
            return Err(Error::Config("too few quadrature nodes".into()));
        }
        deg -= 1;
    };
    let m = alphas.len();

    // w = w0 + D^{1/2} Q R^{-T} (b − M w0), the correction of least
    // w0-weighted norm, from B = D^{1/2} Mᵀ = QR.
    let mut b_mat = DMatrix::zeros(live.len(), m);
    let mut resid = DVector::from_iterator(m, alphas.iter().map(|a| sphere_moment(a)));
    for (row, &q) in live.iter().enumerate() {
        let xi = atlas.sphere_point(q);
        let sw = w0[q].sqrt();
        for (col, a) in alphas.iter().enumerate() {
            let mono: f64 = xi.iter().zip(a).map(|(x, &p)| x.powi(p as i32)).product();
            b_mat[(row, col)] = sw * mono;
            resid[col] -= w0[q] * mono;
        }
    }
    let qr = b_mat.qr();
    let r = qr.r();
    let z = r
        .transpose()
        .solve_lower_triangular(&resid)
        .ok_or_else(|| Error::Config("degenerate quadrature moment system".into()))?;
    let corr = qr.q() * z;
    let mut w = w0;
    for (row, &q) in live.iter().enumerate() {
        w[q] += w[q].sqrt() * corr[row];
    }
    Ok((w, deg))
}

impl Atlas {
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        assert_eq!(f.rank, 0);
        self.weights().iter().zip(&f.values).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_closed_form() {
        let pi = std::f64::consts::PI;
        assert!((sphere_moment(&[0, 0, 0]) - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_moment(&[0, 0, 2]) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((sphere_moment(&[0, 0, 0, 0]) - 2.0 * pi * pi).abs() < 1e-13);
        assert_eq!(sphere_moment(&[1, 0, 2]), 0.0);
        assert_eq!(multi_indices(3, 2).len(), 6);
    }

    #[test]
    fn blend_is_a_partition() {
        for r in [0.5, 0.8, 0.9, 1.0, 1.1, 1.25, 1.3] {
            let s = blend(&[r, 0.0]) + blend(&[1.0 / r, 0.0]);
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_eq!(blend(&[0.5, 0.0]), 1.0);
        assert_eq!(blend(&[1.3, 0.0]), 0.0);
    }
}
