//! Elementary symmetric polynomials of principal curvatures, the Gårding
//! cone Γ₂ and the Newton–Maclaurin chain behind the mean-curvature bound.
//!
//! All functions are symmetric in their argument, so the order of the
//! entries of a spectrum never matters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal curvatures at one point, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(pub Vec<f64>);

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Spectrum(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mean_curvature(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|l| l * l).sum()
    }

    pub fn sigma(&self, k: usize) -> Result<f64> {
        elementary_symmetric(k, &self.0)
    }
}

/// P_k(λ): sum over increasing k-tuples of products, with P₀ = 1.
pub fn elementary_symmetric(k: usize, lambda: &[f64]) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return Err(Error::IndexOutOfRange {
            what: "k",
            index: k,
            limit: n,
        });
    }
    Ok(all_elementary(lambda)[k])
}

/// Returns [P₀, P₁, …, P_n] via the product expansion of Π(1 + λ_i t).
pub fn all_elementary(lambda: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; lambda.len() + 1];
    e[0] = 1.0;
    for (m, &l) in lambda.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += l * e[k - 1];
        }
    }
    e
}

/// P_{k,i}(λ): P_k with the i-th entry (zero based) replaced by 0.
pub fn truncated_symmetric(k: usize, i: usize, lambda: &[f64]) -> Result<f64> {
    let n = lambda.len();
    if i >= n {
        return Err(Error::IndexOutOfRange {
            what: "i",
            index: i,
            limit: n,
        });
    }
    if k > n {
        return Err(Error::IndexOutOfRange {
            what: "k",
            index: k,
            limit: n,
        });
    }
    if k == n {
        return Ok(0.0);
    }
    let reduced: Vec<f64> = lambda
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &l)| l)
        .collect();
    Ok(all_elementary(&reduced)[k])
}

/// Verdict of the Γ₂ membership test together with the values it was based on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeVerdict {
    pub inside: bool,
    pub p1: f64,
    pub p2: f64,
}

/// Γ₂ = {P₁ > 0, P₂ > 0}, the component of {P₂ > 0} containing the positive cone.
pub fn gamma2_contains(lambda: &[f64]) -> ConeVerdict {
    let e = all_elementary(lambda);
    let p1 = e.get(1).copied().unwrap_or(0.0);
    let p2 = e.get(2).copied().unwrap_or(0.0);
    ConeVerdict {
        inside: p1 > 0.0 && p2 > 0.0,
        p1,
        p2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonMaclaurinGap {
    /// H|A|² − tr A³ − (2/n) P₁P₂; nonnegative on Γ₂.
    pub gap: f64,
    /// Σ_i P_{1,i} λ_i².
    pub truncated_sum: f64,
    /// P₁P₂ − 3P₃.
    pub newton_form: f64,
}

impl NewtonMaclaurinGap {
    pub fn identity_residual(&self) -> f64 {
        self.truncated_sum - self.newton_form
    }
}

pub fn newton_maclaurin_gap(lambda: &[f64]) -> NewtonMaclaurinGap {
    let n = lambda.len();
    let e = all_elementary(lambda);
    let p1 = e[1];
    let p2 = if n >= 2 { e[2] } else { 0.0 };
    let p3 = if n >= 3 { e[3] } else { 0.0 };
    let s2: f64 = lambda.iter().map(|l| l * l).sum();
    let s3: f64 = lambda.iter().map(|l| l * l * l).sum();
    let truncated_sum = lambda.iter().map(|&l| (p1 - l) * l * l).sum();
    NewtonMaclaurinGap {
        gap: p1 * s2 - s3 - 2.0 / n as f64 * p1 * p2,
        truncated_sum,
        newton_form: p1 * p2 - 3.0 * p3,
    }
}

/// Linearization of σ₂: F^{ij} = H g^{ij} − A^{ij}, indices raised with `g`.
pub fn sigma2_linearization(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ginv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric {
            node: 0,
            detail: "metric is not positive definite".into(),
        })?
        .inverse();
    let h = (&ginv * a).trace();
    let a_up = &ginv * a * &ginv;
    Ok(ginv * h - a_up)
}

/// √P₂, the concave operator of the σ₂ equation on Γ₂.
pub fn sqrt_sigma2(lambda: &[f64]) -> f64 {
    let e = all_elementary(lambda);
    e.get(2).copied().unwrap_or(0.0).max(0.0).sqrt()
}
