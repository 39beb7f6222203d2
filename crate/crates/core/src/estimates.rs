//! Curvature window, a priori bounds and the small-sphere obstruction,
//! evaluated on computed surfaces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::curvature::Connection;
use crate::geometry::SurfaceGeometry;
use crate::grid::diameter::geodesic_diameter;
use crate::grid::{Atlas, ScalarField};
use crate::symmetric::gamma2_contains;

/// Absolute and relative slack allowed in every flag.
pub const FLAG_ABS_TOL: f64 = 1e-8;
pub const FLAG_REL_TOL: f64 = 1e-6;

fn within(value: f64, bound: f64) -> bool {
    value <= bound + FLAG_ABS_TOL + FLAG_REL_TOL * bound.abs()
}

/// ψ_ρ = ρ⁻²n(n−1) − R.
pub fn psi(r: &ScalarField, rho: f64, n: usize) -> ScalarField {
    let top = (n * (n - 1)) as f64 / (rho * rho);
    r.map(|v| top - v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowVerdict {
    pub holds: bool,
    /// min (R − ρ⁻²n(n−2))
    pub lower_margin: f64,
    /// min (ρ⁻²n(n−1) − R)
    pub upper_margin: f64,
}

/// ρ⁻²n(n−2) < R < ρ⁻²n(n−1) at every value of `r`.
pub fn curvature_window(r: impl IntoIterator<Item = f64>, rho: f64, n: usize) -> WindowVerdict {
    let nf = n as f64;
    let (lo, hi) = (nf * (nf - 2.0) / (rho * rho), nf * (nf - 1.0) / (rho * rho));
    let (mut lower, mut upper) = (f64::INFINITY, f64::INFINITY);
    for v in r {
        lower = lower.min(v - lo);
        upper = upper.min(hi - v);
    }
    WindowVerdict {
        holds: lower > 0.0 && upper > 0.0,
        lower_margin: lower,
        upper_margin: upper,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoRange {
    /// Exclusive lower end (0 for n = 2).
    pub lower: f64,
    /// Exclusive upper end ρ₀; 0 when the range is empty.
    pub upper: f64,
    pub empty: bool,
    pub explanation: String,
}

/// Open interval of radii ρ for which the window holds for the given R.
pub fn rho_max(r_min: f64, r_max: f64, n: usize) -> RhoRange {
    let nf = n as f64;
    let empty = |why: String| RhoRange {
        lower: 0.0,
        upper: 0.0,
        empty: true,
        explanation: why,
    };
    if !(r_min.is_finite() && r_max.is_finite()) {
        return empty("scalar curvature is not finite".into());
    }
    if r_min <= 0.0 {
        return empty(format!(
            "min R = {r_min} ≤ 0: the window needs R > ρ⁻²n(n−2) ≥ 0 for every ρ"
        ));
    }
    let upper = (nf * (nf - 1.0) / r_max).sqrt();
    let lower = if n >= 3 { (nf * (nf - 2.0) / r_min).sqrt() } else { 0.0 };
    if lower >= upper {
        return empty(format!(
            "R varies too much: need ρ > {lower} and ρ < {upper}, which is impossible"
        ));
    }
    RhoRange {
        lower,
        upper,
        empty: false,
        explanation: format!("window holds for {lower} < ρ < {upper}"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanCurvatureBound {
    /// Supremum over nodes of the right-hand side of the H² bound.
    pub c: f64,
    pub max_h2: f64,
    pub max_norm_a2: f64,
    pub slack: f64,
    pub holds: bool,
    pub rhs: ScalarField,
}

/// H² ≤ (n−1)⁻¹(ρ⁻² − ψ/n)⁻¹[½ΔR − ψ² + nρ⁻²ψ], checked conservatively as
/// max H² ≤ max RHS over the grid.
pub fn mean_curvature_bound(atlas: &Atlas, s: &SurfaceGeometry) -> Result<MeanCurvatureBound> {
    let n = s.n;
    let nf = n as f64;
    let k = 1.0 / (s.rho * s.rho);
    let psi_f = psi(&s.scalar_curvature, s.rho, n);
    let support: Vec<usize> = atlas.support().collect();
    for &q in &support {
        let p = psi_f.values[q];
        if !(p > 0.0) {
            return Err(Error::Hypothesis(format!("ψ > 0 fails at node {q} (ψ = {p:.6e})")));
        }
        if !(k - p / nf > 0.0) {
            return Err(Error::Hypothesis(format!(
                "ρ⁻² − ψ/n > 0 fails at node {q} (value {:.6e})",
                k - p / nf
            )));
        }
        if !gamma2_contains(s.lambda.at(q)).inside {
            return Err(Error::Hypothesis(format!("surface is not admissible at node {q}")));
        }
    }
    let conn = Connection::new(atlas, &s.g);
    let lap_r = conn.laplacian(atlas, &s.scalar_curvature);
    let rhs = ScalarField::scalar(
        n,
        (0..atlas.len())
            .map(|q| {
                let p = psi_f.values[q];
                (0.5 * lap_r.values[q] - p * p + nf * k * p) / ((nf - 1.0) * (k - p / nf))
            })
            .collect(),
    );
    let c = support.iter().map(|&q| rhs.values[q]).fold(f64::NEG_INFINITY, f64::max);
    let max_h2 = support.iter().map(|&q| s.h.values[q].powi(2)).fold(0.0, f64::max);
    let max_norm_a2 = support.iter().map(|&q| s.norm_a2.values[q]).fold(0.0, f64::max);
    Ok(MeanCurvatureBound {
        c,
        max_h2,
        max_norm_a2,
        slack: c - max_h2,
        holds: within(max_h2, c),
        rhs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltBound {
    pub basepoint: usize,
    pub tau_at_basepoint: f64,
    /// max |A| over the grid.
    pub c_h: f64,
    pub diameter: f64,
    pub c_tau: f64,
    pub max_tau: f64,
    pub max_abs_eta: f64,
    pub eta_bound: f64,
    pub holds: bool,
}

/// Tolerance on τ(p) = 1 for a normalized surface.
pub const NORMALIZED_TOL: f64 = 1e-8;

/// max τ ≤ exp(max|A| · diam) and |η| ≤ ρ√(C_τ² − 1), for a surface
/// normalized so that τ(p) = 1.
pub fn tilt_bound(atlas: &Atlas, s: &SurfaceGeometry, basepoint: usize) -> Result<TiltBound> {
    if basepoint >= atlas.len() {
        return Err(Error::IndexOutOfRange {
            what: "basepoint",
            index: basepoint,
            limit: atlas.len(),
        });
    }
    let tp = s.tau.values[basepoint];
    if (tp - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::NotNormalized { tau: tp });
    }
    let support: Vec<usize> = atlas.support().collect();
    let c_h = support.iter().map(|&q| s.norm_a2.values[q].sqrt()).fold(0.0, f64::max);
    let diameter = geodesic_diameter(atlas, &s.g)?;
    let c_tau = (c_h * diameter).exp();
    let max_tau = support.iter().map(|&q| s.tau.values[q]).fold(0.0, f64::max);
    let max_abs_eta = support.iter().map(|&q| s.eta.values[q].abs()).fold(0.0, f64::max);
    let eta_bound = s.rho * (c_tau * c_tau - 1.0).max(0.0).sqrt();
    Ok(TiltBound {
        basepoint,
        tau_at_basepoint: tp,
        c_h,
        diameter,
        c_tau,
        max_tau,
        max_abs_eta,
        eta_bound,
        holds: within(max_tau, c_tau) && within(max_abs_eta, eta_bound),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Obstruction {
    /// n ≥ 3: no real principal curvatures can satisfy the Gauss equation.
    Impossible,
    /// n = 2: the only candidates have P₂ < 0, outside Γ₂.
    Inadmissible,
    /// r ≥ ρ: the obstruction does not apply.
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub verdict: Obstruction,
    pub n: usize,
    pub r: f64,
    pub rho: f64,
    /// λ_iλ_j forced for every pair by the Gauss equation: ρ⁻² − r⁻².
    pub required_product: f64,
    /// P₂ of any candidate spectrum (n = 2 only).
    pub p2: Option<f64>,
    pub explanation: String,
}

/// A round sphere of radius r < ρ has no admissible isometric embedding as
/// a spacelike hypersurface of S^{n,1}_ρ: the Gauss equation forces
/// λ_iλ_j = ρ⁻² − r⁻² < 0 for all i ≠ j.
pub fn nonexistence_certificate(r: f64, rho: f64, n: usize) -> Result<Certificate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Config(format!("sphere radius must be positive (got {r})")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Config(format!("rho must be positive (got {rho})")));
    }
    if n < 2 {
        return Err(Error::Config(format!("dimension must be at least 2 (got {n})")));
    }
    let product = rho.powi(-2) - r.powi(-2);
    let (verdict, p2, explanation) = if r >= rho {
        (
            Obstruction::NotApplicable,
            None,
            format!("r = {r} ≥ ρ = {rho}: the products λ_iλ_j = {product} are not forced negative"),
        )
    } else if n >= 3 {
        (
            Obstruction::Impossible,
            None,
            format!(
                "every pair needs λ_iλ_j = {product} < 0; with three eigenvalues two share a sign, \
                 so some product is ≥ 0"
            ),
        )
    } else {
        (
            Obstruction::Inadmissible,
            Some(product),
            format!("λ₁λ₂ = P₂ = {product} < 0, so the spectrum lies outside Γ₂"),
        )
    };
    Ok(Certificate {
        verdict,
        n,
        r,
        rho,
        required_product: product,
        p2,
        explanation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub rho: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub window: WindowVerdict,
    pub rho_range: RhoRange,
    pub admissible: bool,
    pub mean_curvature: Option<MeanCurvatureBoundSummary>,
    pub tilt: Option<TiltBound>,
    pub verdict: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanCurvatureBoundSummary {
    pub c: f64,
    pub max_h2: f64,
    pub max_norm_a2: f64,
    pub slack: f64,
    pub holds: bool,
}

impl From<&MeanCurvatureBound> for MeanCurvatureBoundSummary {
    fn from(b: &MeanCurvatureBound) -> Self {
        MeanCurvatureBoundSummary {
            c: b.c,
            max_h2: b.max_h2,
            max_norm_a2: b.max_norm_a2,
            slack: b.slack,
            holds: b.holds,
        }
    }
}

/// Collects every estimate that applies; hypotheses that fail are recorded
/// as notes and make the verdict false.
pub fn estimate_report(atlas: &Atlas, s: &SurfaceGeometry, basepoint: Option<usize>) -> Result<EstimateReport> {
    let support: Vec<usize> = atlas.support().collect();
    let r_vals: Vec<f64> = support.iter().map(|&q| s.scalar_curvature.values[q]).collect();
    let psi_vals: Vec<f64> = psi(&s.scalar_curvature, s.rho, s.n).values;
    let psi_min = support.iter().map(|&q| psi_vals[q]).fold(f64::INFINITY, f64::min);
    let psi_max = support.iter().map(|&q| psi_vals[q]).fold(f64::NEG_INFINITY, f64::max);
    let window = curvature_window(r_vals.iter().copied(), s.rho, s.n);
    let r_min = r_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = r_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho_range = rho_max(r_min, r_max, s.n);
    let admissible = support.iter().all(|&q| gamma2_contains(s.lambda.at(q)).inside);
    let mut notes = Vec::new();
    if !window.holds {
        notes.push("curvature window fails".to_string());
    }
    let mean_curvature = match mean_curvature_bound(atlas, s) {
        Ok(b) => Some(MeanCurvatureBoundSummary::from(&b)),
        Err(e) if e.is_hypothesis() => {
            notes.push(format!("mean-curvature bound not applicable: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let tilt = match basepoint {
        Some(p) => match tilt_bound(atlas, s, p) {
            Ok(t) => Some(t),
            Err(e) if e.is_hypothesis() => {
                notes.push(format!("tilt bound not applicable: {e}"));
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    let verdict = window.holds
        && admissible
        && mean_curvature.as_ref().is_some_and(|m| m.holds)
        && tilt.as_ref().is_none_or(|t| t.holds)
        && !(basepoint.is_some() && tilt.is_none());
    Ok(EstimateReport {
        n: s.n,
        rho: s.rho,
        psi_min,
        psi_max,
        window,
        rho_range,
        admissible,
        mean_curvature,
        tilt,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_examples() {
        let w = curvature_window([1.5728955], 1.0, 2);
        assert!(w.holds);
        let w = curvature_window([2.0], 1.0, 2);
        assert!(!w.holds);
        assert_eq!(w.upper_margin, 0.0);
    }

    #[test]
    fn rho_examples() {
        let r = rho_max(2.0, 2.0, 2);
        assert!((r.upper - 1.0).abs() < 1e-15 && !r.empty);
        let r = rho_max(6.0, 6.0, 3);
        assert!((r.lower - 0.5f64.sqrt()).abs() < 1e-15 && (r.upper - 1.0).abs() < 1e-15);
        assert!(rho_max(-0.1, 3.0, 3).empty);
    }

    #[test]
    fn certificate_examples() {
        let c = nonexistence_certificate(0.5, 1.0, 3).unwrap();
        assert_eq!(c.verdict, Obstruction::Impossible);
        assert_eq!(c.required_product, -3.0);
        let c = nonexistence_certificate(0.9, 1.0, 2).unwrap();
        assert_eq!(c.verdict, Obstruction::Inadmissible);
        assert!((c.p2.unwrap() + 0.2345679012345679).abs() < 1e-15);
        let c = nonexistence_certificate(1.0, 1.0, 3).unwrap();
        assert_eq!(c.verdict, Obstruction::NotApplicable);
        assert!(nonexistence_certificate(-1.0, 1.0, 2).is_err());
    }
}
