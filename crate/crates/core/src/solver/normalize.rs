//! Lorentz normalization: move a graph by an ambient isometry so that the
//! normal at a basepoint is −E₀, then re-read it as a graph on the atlas.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{point_geometry, principal_curvatures_at, GraphFunction, NodeJet};
use crate::grid::{sphere_jet, Atlas, ScalarField};
use crate::minkowski::{inner, LorentzTransform};
use crate::preset::Jet;

/// Search interval for the new graph height.
const HEIGHT_BOUND: f64 = 40.0;

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationReport {
    pub basepoint: usize,
    pub rapidity: f64,
    /// Unit spatial direction of the boost.
    pub direction: Vec<f64>,
    pub tau_before: f64,
    pub tau_after: f64,
    pub eta_after: f64,
    /// max |⟨LX, LX⟩ − ρ²| over nodes.
    pub hyperboloid_defect: f64,
    pub isometry_defect: f64,
    /// max |Lν(p) + E₀|
    pub normal_defect: f64,
    /// Principal curvatures at p before, and from the transformed frame.
    pub spectrum_before: Vec<f64>,
    pub spectrum_ambient: Vec<f64>,
    /// Principal curvatures at p of the regridded graph.
    pub spectrum_after: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub f: GraphFunction,
    pub transform: LorentzTransform,
    pub report: NormalizationReport,
}

fn node_point(atlas: &Atlas, jet: &Jet, rho: f64, q: usize) -> crate::geometry::PointGeometry {
    let nj = NodeJet {
        u: jet.u.values[q],
        du: jet.du.at(q),
        d2u: jet.d2u.at(q),
        conf: (2.0 * atlas.conformal_log(q)).exp(),
    };
    let (dxi, _) = sphere_jet(atlas.chart_of(q), atlas.coord(q));
    point_geometry(rho, &nj, &atlas.sphere_point(q), &dxi)
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / s).collect()
}

/// Boost taking ν(p) to −E₀ followed by the rotation that returns the
/// image of X(p) to its original direction ξ_p.
pub fn normalizing_transform(nu: &[f64], x: &[f64], xi: &[f64]) -> (LorentzTransform, f64, Vec<f64>) {
    let d = nu.len();
    let tau = -nu[0];
    let spatial = &nu[1..];
    let sn = spatial.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (boost, rapidity, dir) = if sn < 1e-15 {
        (LorentzTransform::identity(d), 0.0, vec![0.0; d - 1])
    } else {
        let dir: Vec<f64> = spatial.iter().map(|v| v / sn).collect();
        let a = tau.max(1.0).acosh();
        (LorentzTransform::boost(&dir, a), a, dir)
    };
    let bx = boost.apply(x);
    let rot = LorentzTransform::rotation(&normalize(&bx[1..]), xi);
    (rot.compose(&boost), rapidity, dir)
}

/// Lorentz-normalizes the graph at node `p`: afterwards τ(p) = 1 and
/// η(p) = 0, and the surface is re-read as a graph on the same atlas.
pub fn lorentz_normalize(atlas: &Atlas, f: &GraphFunction, p: usize) -> Result<Normalization> {
    if p >= atlas.len() {
        return Err(Error::IndexOutOfRange {
            what: "basepoint",
            index: p,
            limit: atlas.len(),
        });
    }
    let rho = f.rho;
    let jet = f.jet(atlas);
    let (margin, node) = crate::geometry::spacelike_margin_of(&jet, atlas);
    if !(margin > 0.0) {
        return Err(Error::NotSpacelike { node, margin });
    }
    let pg = node_point(atlas, &jet, rho, p);
    let xi_p = atlas.sphere_point(p);
    let (l, rapidity, direction) = normalizing_transform(&pg.nu, &pg.x, &xi_p);
    let linv = l.inverse();

    // new height v at ξ: L⁻¹(ρ sinh v, ρ cosh v ξ) must lie on the old graph
    let n = atlas.n;
    let residual = |v: f64, xi: &[f64]| {
        let mut y = vec![rho * v.sinh()];
        y.extend(xi.iter().map(|c| rho * v.cosh() * c));
        let q = linv.apply(&y);
        let zeta = normalize(&q[1..]);
        (q[0] / rho).asinh() - atlas.interpolate(&f.u, &zeta)
    };
    let solved: Vec<Option<f64>> = (0..atlas.len())
        .into_par_iter()
        .map(|q| {
            let xi = atlas.sphere_point(q);
            let (mut lo, mut hi) = (-HEIGHT_BOUND, HEIGHT_BOUND);
            let (flo, fhi) = (residual(lo, &xi), residual(hi, &xi));
            if !(flo < 0.0 && fhi > 0.0) {
                return None;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if residual(mid, &xi) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        })
        .collect();
    let bad: Vec<usize> = solved.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(q, _)| q).collect();
    if !bad.is_empty() {
        return Err(Error::Reparametrization { nodes: bad });
    }
    let u = ScalarField::scalar(n, solved.into_iter().map(Option::unwrap).collect());
    let g = GraphFunction::new(u, rho)?;

    let jet2 = g.jet(atlas);
    let pg2 = node_point(atlas, &jet2, rho, p);
    let spectrum_before = principal_curvatures_at(&pg.g, &pg.a)?;
    let spectrum_after = principal_curvatures_at(&pg2.g, &pg2.a)?;
    // transformed frame: g from L X_i, A = ⟨Lν, L ∂ᵢ∂ⱼX⟩ = ⟨ν, ∂ᵢ∂ⱼX⟩
    let d = n + 2;
    let lt: Vec<Vec<f64>> = (0..n).map(|i| l.apply(&pg.tangents[i * d..(i + 1) * d])).collect();
    let g_amb: Vec<f64> = (0..n * n).map(|k| inner(&lt[k / n], &lt[k % n])).collect();
    let spectrum_ambient = principal_curvatures_at(&g_amb, &pg.a)?;
    let lnu = l.apply(&pg.nu);
    let normal_defect = lnu
        .iter()
        .enumerate()
        .map(|(k, v)| (v + if k == 0 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let x_all = crate::geometry::embed(atlas, f);
    let hyperboloid_defect = (0..atlas.len())
        .map(|q| {
            let lx = l.apply(x_all.at(q));
            (inner(&lx, &lx) - rho * rho).abs()
        })
        .fold(0.0, f64::max);
    Ok(Normalization {
        f: g,
        report: NormalizationReport {
            basepoint: p,
            rapidity,
            direction,
            tau_before: pg.tau,
            tau_after: pg2.tau,
            eta_after: pg2.eta,
            hyperboloid_defect,
            isometry_defect: l.isometry_defect(),
            normal_defect,
            spectrum_before,
            spectrum_ambient,
            spectrum_after,
        },
        transform: l,
    })
}
