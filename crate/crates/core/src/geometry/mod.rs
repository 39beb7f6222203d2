//! Spacelike graphs in S^{n,1}_ρ ⊂ R^{n+1,1}.
//!
//! Conventions: X(ξ) = (ρ sinh u, ρ cosh u ξ), E_r = (cosh u, sinh u ξ),
//! ν = −(cosh u E_r + Du)/√(cosh²u − |Du|²_σ) with ⟨ν, ν⟩ = −1,
//! τ = ⟨ν, E₀⟩ ≥ 1, η = −⟨X, E₀⟩ = ρ sinh u and A_ij = ⟨ν, ∂_i∂_j X⟩.

pub mod curvature;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{sphere_jet, Atlas, ScalarField, Sym2Field, TensorField};
use crate::minkowski;
use crate::preset::{Jet, Preset};

/// Graph function u over the atlas with de Sitter radius ρ.
#[derive(Debug, Clone)]
pub struct GraphFunction {
    pub u: ScalarField,
    pub rho: f64,
    pub n: usize,
}

impl GraphFunction {
    pub fn new(u: ScalarField, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive (got {rho})")));
        }
        if u.rank != 0 {
            return Err(Error::Config("graph function must be a scalar field".into()));
        }
        let n = u.n;
        Ok(GraphFunction { u, rho, n })
    }

    pub fn from_preset(atlas: &Atlas, preset: &Preset, rho: f64) -> Result<Self> {
        Self::new(preset.sample(atlas), rho)
    }

    /// Finite-difference jet (u, Du, D²u).
    pub fn jet(&self, atlas: &Atlas) -> Jet {
        Jet::from_field(atlas, &self.u)
    }
}

/// Per-node vectors of R^{n+1,1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbientField {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl AmbientField {
    pub fn at(&self, q: usize) -> &[f64] {
        &self.values[q * self.dim..(q + 1) * self.dim]
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.dim
    }
}

/// Everything the geometry needs at one node: u, its σ-covariant derivatives
/// and the chart data of the sphere.
#[derive(Debug, Clone, Copy)]
pub struct NodeJet<'a> {
    pub u: f64,
    pub du: &'a [f64],
    pub d2u: &'a [f64],
    /// e^{2φ}: σ_ij = e^{2φ} δ_ij.
    pub conf: f64,
}

/// Spacelike margin W = cosh²u − |Du|²_σ, mean curvature and |A|², from
/// the jet alone. `None` when W ≤ 0.
pub fn curvature_traces(rho: f64, j: &NodeJet) -> Option<(f64, f64, f64)> {
    let n = j.du.len();
    let ch = j.u.cosh();
    let du2: f64 = j.du.iter().map(|v| v * v).sum::<f64>() / j.conf;
    let w = ch * ch - du2;
    if !(w > 0.0) {
        return None;
    }
    let tau = ch * ch / w.sqrt();
    let ginv = metric_inverse(rho, j);
    let mut s = vec![0.0; n * n];
    // S = g⁻¹A
    let a = shape_tensor(rho, tau, j);
    for i in 0..n {
        for k in 0..n {
            s[i * n + k] = (0..n).map(|m| ginv[i * n + m] * a[m * n + k]).sum();
        }
    }
    let h: f64 = (0..n).map(|i| s[i * n + i]).sum();
    let mut a2 = 0.0;
    for i in 0..n {
        for k in 0..n {
            a2 += s[i * n + k] * s[k * n + i];
        }
    }
    Some((w, h, a2))
}

/// (g, A) at a node from the jet alone. `None` when W ≤ 0.
pub fn fundamental_forms(rho: f64, j: &NodeJet) -> Option<(Vec<f64>, Vec<f64>)> {
    let ch = j.u.cosh();
    let du2: f64 = j.du.iter().map(|v| v * v).sum::<f64>() / j.conf;
    let w = ch * ch - du2;
    if !(w > 0.0) {
        return None;
    }
    Some((induced(rho, j), shape_tensor(rho, ch * ch / w.sqrt(), j)))
}

fn shape_tensor(rho: f64, tau: f64, j: &NodeJet) -> Vec<f64> {
    let n = j.du.len();
    let (ch, sh) = (j.u.cosh(), j.u.sinh());
    let th = sh / ch;
    let f = rho * tau / ch;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let s = if i == k { j.conf } else { 0.0 };
            a[i * n + k] = f * (j.d2u[i * n + k] - 2.0 * th * j.du[i] * j.du[k] + sh * ch * s);
        }
    }
    a
}

fn induced(rho: f64, j: &NodeJet) -> Vec<f64> {
    let n = j.du.len();
    let c2 = j.u.cosh().powi(2);
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let s = if i == k { j.conf } else { 0.0 };
            g[i * n + k] = rho * rho * (c2 * s - j.du[i] * j.du[k]);
        }
    }
    g
}

/// Sherman–Morrison inverse of g = ρ²(cosh²u e^{2φ} I − Du Duᵀ).
fn metric_inverse(rho: f64, j: &NodeJet) -> Vec<f64> {
    let n = j.du.len();
    let a = j.u.cosh().powi(2) * j.conf;
    let p2: f64 = j.du.iter().map(|v| v * v).sum();
    let mut gi = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let d = if i == k { 1.0 } else { 0.0 };
            gi[i * n + k] = (d + j.du[i] * j.du[k] / (a - p2)) / (a * rho * rho);
        }
    }
    gi
}

/// Eigenvalues of A relative to g (ascending).
pub fn principal_curvatures_at(g: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    let n = (g.len() as f64).sqrt() as usize;
    let gm = DMatrix::from_row_slice(n, n, g);
    let chol = gm.cholesky().ok_or_else(|| Error::DegenerateMetric {
        node: 0,
        detail: "metric is not positive definite".into(),
    })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::DegenerateMetric {
        node: 0,
        detail: "singular Cholesky factor".into(),
    })?;
    let am = DMatrix::from_row_slice(n, n, a);
    let m = &linv * am * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    /// X_i = ∂_i X, stored row-wise (n rows of n+2 entries).
    pub tangents: Vec<f64>,
    pub nu: Vec<f64>,
    pub tau: f64,
    pub eta: f64,
    pub g: Vec<f64>,
    pub a: Vec<f64>,
    pub margin: f64,
}

/// Pointwise geometry at a node in chart coordinates; `xi`, `dxi` are the
/// sphere point and its coordinate derivatives.
pub fn point_geometry(rho: f64, j: &NodeJet, xi: &[f64], dxi: &[Vec<f64>]) -> PointGeometry {
    let n = j.du.len();
    let d = n + 2;
    let (ch, sh) = (j.u.cosh(), j.u.sinh());
    let mut x = vec![rho * sh];
    x.extend(xi.iter().map(|v| rho * ch * v));

    let mut tangents = vec![0.0; n * d];
    for i in 0..n {
        tangents[i * d] = rho * ch * j.du[i];
        for a in 0..=n {
            tangents[i * d + 1 + a] = rho * sh * j.du[i] * xi[a] + rho * ch * dxi[i][a];
        }
    }

    let du2: f64 = j.du.iter().map(|v| v * v).sum::<f64>() / j.conf;
    let margin = ch * ch - du2;
    let sw = margin.max(0.0).sqrt();
    // σ-gradient of u as an ambient vector: σ^{ik} u_k ∂_i ξ
    let mut grad = vec![0.0; d];
    for i in 0..n {
        for a in 0..=n {
            grad[1 + a] += j.du[i] / j.conf * dxi[i][a];
        }
    }
    let mut nu = vec![0.0; d];
    nu[0] = -(ch * ch) / sw;
    for a in 0..=n {
        nu[1 + a] = -(ch * sh * xi[a] + grad[1 + a]) / sw;
    }
    let tau = ch * ch / sw;
    let g = induced(rho, j);
    let a = shape_tensor(rho, tau, j);
    PointGeometry {
        x,
        tangents,
        nu,
        tau,
        eta: rho * sh,
        g,
        a,
        margin,
    }
}

/// Geometry of a graph sampled on an atlas.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub rho: f64,
    pub n: usize,
    pub jet: Jet,
    pub x: AmbientField,
    pub tangents: AmbientField,
    pub nu: AmbientField,
    pub tau: ScalarField,
    pub eta: ScalarField,
    pub g: Sym2Field,
    pub a: Sym2Field,
    /// Principal curvatures, n per node, ascending.
    pub lambda: TensorField,
    pub h: ScalarField,
    pub norm_a2: ScalarField,
    pub scalar_curvature: ScalarField,
    pub margin: ScalarField,
}

/// Minimum of cosh²u − |Du|²_σ over all nodes, and where it occurs.
pub fn spacelike_margin_of(jet: &Jet, atlas: &Atlas) -> (f64, usize) {
    (0..atlas.len())
        .map(|q| {
            let ch = jet.u.values[q].cosh();
            let conf = (2.0 * atlas.conformal_log(q)).exp();
            let du2: f64 = jet.du.at(q).iter().map(|v| v * v).sum::<f64>() / conf;
            (ch * ch - du2, q)
        })
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

impl SurfaceGeometry {
    pub fn new(atlas: &Atlas, f: &GraphFunction) -> Result<Self> {
        Self::from_jet(atlas, &f.jet(atlas), f.rho)
    }

    pub fn from_preset(atlas: &Atlas, preset: &Preset, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive (got {rho})")));
        }
        Self::from_jet(atlas, &preset.jet(atlas), rho)
    }

    pub fn from_jet(atlas: &Atlas, jet: &Jet, rho: f64) -> Result<Self> {
        let n = atlas.n;
        let len = atlas.len();
        let (worst, node) = spacelike_margin_of(jet, atlas);
        if !(worst > 0.0) {
            return Err(Error::NotSpacelike { node, margin: worst });
        }
        let pts: Vec<(PointGeometry, Vec<f64>)> = (0..len)
            .into_par_iter()
            .map(|q| {
                let nj = NodeJet {
                    u: jet.u.values[q],
                    du: jet.du.at(q),
                    d2u: jet.d2u.at(q),
                    conf: (2.0 * atlas.conformal_log(q)).exp(),
                };
                let (dxi, _) = sphere_jet(atlas.chart_of(q), atlas.coord(q));
                let p = point_geometry(rho, &nj, &atlas.sphere_point(q), &dxi);
                let lam = principal_curvatures_at(&p.g, &p.a).map_err(|e| match e {
                    Error::DegenerateMetric { detail, .. } => Error::DegenerateMetric { node: q, detail },
                    other => other,
                })?;
                Ok((p, lam))
            })
            .collect::<Result<_>>()?;

        let d = n + 2;
        let collect_amb = |f: &dyn Fn(&PointGeometry) -> &[f64], dim: usize| AmbientField {
            dim,
            values: pts.iter().flat_map(|(p, _)| f(p).to_vec()).collect(),
        };
        let scalar = |f: &dyn Fn(&PointGeometry, &[f64]) -> f64| {
            TensorField::scalar(n, pts.iter().map(|(p, l)| f(p, l)).collect())
        };
        let sym = |f: &dyn Fn(&PointGeometry) -> &[f64]| TensorField {
            n,
            rank: 2,
            values: pts.iter().flat_map(|(p, _)| f(p).to_vec()).collect(),
        };
        let rc = n as f64 * (n as f64 - 1.0) / (rho * rho);
        Ok(SurfaceGeometry {
            rho,
            n,
            jet: jet.clone(),
            x: collect_amb(&|p| &p.x, d),
            tangents: collect_amb(&|p| &p.tangents, n * d),
            nu: collect_amb(&|p| &p.nu, d),
            tau: scalar(&|p, _| p.tau),
            eta: scalar(&|p, _| p.eta),
            g: sym(&|p| &p.g),
            a: sym(&|p| &p.a),
            lambda: TensorField {
                n,
                rank: 1,
                values: pts.iter().flat_map(|(_, l)| l.clone()).collect(),
            },
            h: scalar(&|_, l| l.iter().sum()),
            norm_a2: scalar(&|_, l| l.iter().map(|v| v * v).sum()),
            scalar_curvature: scalar(&|_, l| {
                let h: f64 = l.iter().sum();
                l.iter().map(|v| v * v).sum::<f64>() - h * h + rc
            }),
            margin: scalar(&|p, _| p.margin),
        })
    }

    /// Largest violation of ⟨X,X⟩ = ρ², ⟨ν,X_i⟩ = 0, ⟨ν,ν⟩ = −1.
    pub fn frame_defect(&self) -> f64 {
        let n = self.n;
        let d = n + 2;
        (0..self.x.nodes())
            .map(|q| {
                let x = self.x.at(q);
                let nu = self.nu.at(q);
                let mut m = (minkowski::inner(x, x) - self.rho * self.rho).abs() / (self.rho * self.rho);
                m = m.max((minkowski::inner(nu, nu) + 1.0).abs());
                let t = self.tangents.at(q);
                for i in 0..n {
                    m = m.max(minkowski::inner(nu, &t[i * d..(i + 1) * d]).abs());
                }
                m
            })
            .fold(0.0, f64::max)
    }

    pub fn nodes(&self) -> usize {
        self.tau.values.len()
    }

    /// Inverse metric at a node.
    pub fn g_inv(&self, q: usize) -> Vec<f64> {
        let n = self.n;
        let m = DMatrix::from_row_slice(n, n, self.g.at(q));
        let inv = m.try_inverse().expect("metric checked positive definite");
        (0..n * n).map(|k| inv[(k / n, k % n)]).collect()
    }
}

/// Ambient embedding only.
pub fn embed(atlas: &Atlas, f: &GraphFunction) -> AmbientField {
    let d = f.n + 2;
    let mut values = Vec::with_capacity(atlas.len() * d);
    for q in 0..atlas.len() {
        let u = f.u.values[q];
        values.push(f.rho * u.sinh());
        values.extend(atlas.sphere_point(q).iter().map(|v| f.rho * u.cosh() * v));
    }
    AmbientField { dim: d, values }
}

pub fn induced_metric(atlas: &Atlas, f: &GraphFunction) -> Sym2Field {
    let jet = f.jet(atlas);
    TensorField::from_fn(atlas.n, 2, atlas.len(), |q, out| {
        let nj = NodeJet {
            u: jet.u.values[q],
            du: jet.du.at(q),
            d2u: jet.d2u.at(q),
            conf: (2.0 * atlas.conformal_log(q)).exp(),
        };
        out.copy_from_slice(&induced(f.rho, &nj));
    })
}

/// min over nodes of cosh²u − |Du|²_σ.
pub fn spacelike_margin(atlas: &Atlas, f: &GraphFunction) -> f64 {
    spacelike_margin_of(&f.jet(atlas), atlas).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_graph_closed_forms() {
        let a = Atlas::new(2, 16).unwrap();
        let s = SurfaceGeometry::from_preset(&a, &Preset::Constant(0.5), 1.0).unwrap();
        let c: f64 = 0.5;
        for q in 0..a.len() {
            assert!((s.tau.values[q] - c.cosh()).abs() < 1e-14);
            assert!((s.eta.values[q] - c.sinh()).abs() < 1e-14);
            for l in s.lambda.at(q) {
                assert!((l - c.tanh()).abs() < 1e-13);
            }
            assert!((s.scalar_curvature.values[q] - 2.0 / c.cosh().powi(2)).abs() < 1e-13);
        }
        assert!(s.frame_defect() < 1e-13);
    }

    #[test]
    fn traces_agree_with_eigenvalues() {
        let a = Atlas::new(2, 16).unwrap();
        let p: Preset = "bump:0.3,0.2+random:5,0.1,3".parse().unwrap();
        let s = SurfaceGeometry::from_preset(&a, &p, 1.3).unwrap();
        for q in (0..a.len()).step_by(7) {
            let nj = NodeJet {
                u: s.jet.u.values[q],
                du: s.jet.du.at(q),
                d2u: s.jet.d2u.at(q),
                conf: (2.0 * a.conformal_log(q)).exp(),
            };
            let (w, h, a2) = curvature_traces(1.3, &nj).unwrap();
            assert!((w - s.margin.values[q]).abs() < 1e-13);
            assert!((h - s.h.values[q]).abs() < 1e-12);
            assert!((a2 - s.norm_a2.values[q]).abs() < 1e-12);
        }
        assert!(s.frame_defect() < 1e-12);
    }
}
