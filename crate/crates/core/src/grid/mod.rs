//! Two-chart stereographic discretization of the round sphere (Sⁿ, σ).
//!
//! Each chart is a uniform Cartesian grid on the cube [−L, L]ⁿ. Nodes outside
//! the coordinate ball of radius `r_recv` are *receivers*: their values are
//! never computed locally but interpolated from the other chart through the
//! inversion x ↦ x/|x|². Every other node has a full centered stencil, so
//! derivatives at non-receivers are always of the nominal order.

mod calculus;
pub mod diameter;
mod field;
pub mod io;
mod quadrature;
pub mod stencil;

pub use field::{CovectorField, ScalarField, Sym2Field, TensorField};
pub use quadrature::{blend, multi_indices, sphere_moment};

use serde::Serialize;

use crate::error::{Error, Result};
use stencil::{lagrange_line, line_stencils, LineStencil};

/// Inner edge of the partition-of-unity blend; the outer edge is its inverse.
pub const BLEND_INNER: f64 = 0.8;
pub const BLEND_OUTER: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    North,
    South,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::North => Chart::South,
            Chart::South => Chart::North,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Chart::North => 1.0,
            Chart::South => -1.0,
        }
    }
}

/// Transition map between the charts; an involution.
pub fn invert(x: &[f64]) -> Vec<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    x.iter().map(|v| v / r2).collect()
}

/// Unit vector ξ ∈ R^{n+1} for chart coordinates `x`.
pub fn chart_to_sphere(chart: Chart, x: &[f64]) -> Vec<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s = 1.0 + r2;
    let mut xi: Vec<f64> = x.iter().map(|v| 2.0 * v / s).collect();
    xi.push(chart.sign() * (1.0 - r2) / s);
    xi
}

/// Chart coordinates of ξ; `None` at the antipode of the chart center.
pub fn sphere_to_chart(chart: Chart, xi: &[f64]) -> Option<Vec<f64>> {
    let n = xi.len() - 1;
    let denom = 1.0 + chart.sign() * xi[n];
    if denom <= 1e-300 {
        return None;
    }
    Some(xi[..n].iter().map(|v| v / denom).collect())
}

/// First and second coordinate derivatives of ξ: `d1[i][a] = ∂_i ξ^a`,
/// `d2[i][j][a] = ∂_i∂_j ξ^a`.
pub fn sphere_jet(chart: Chart, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let n = x.len();
    let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    let (s2, s3) = (s * s, s * s * s);
    let sg = chart.sign();
    let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut d1 = vec![vec![0.0; n + 1]; n];
    let mut d2 = vec![vec![vec![0.0; n + 1]; n]; n];
    for i in 0..n {
        for a in 0..n {
            d1[i][a] = 2.0 * kd(a, i) / s - 4.0 * x[a] * x[i] / s2;
        }
        d1[i][n] = -sg * 4.0 * x[i] / s2;
        for j in 0..n {
            for a in 0..n {
                d2[i][j][a] = -4.0 * (kd(a, i) * x[j] + kd(a, j) * x[i] + kd(i, j) * x[a]) / s2
                    + 16.0 * x[a] * x[i] * x[j] / s3;
            }
            d2[i][j][n] = sg * (-4.0 * kd(i, j) / s2 + 16.0 * x[i] * x[j] / s3);
        }
    }
    (d1, d2)
}

/// log of the conformal factor: σ = e^{2φ} δ with e^φ = 2/(1+|x|²).
pub fn conformal_log(x: &[f64]) -> f64 {
    (2.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>())).ln()
}

/// Interpolation recipe for one receiver node.
#[derive(Debug, Clone)]
pub(crate) struct Receiver {
    pub node: usize,
    pub donors: Vec<(usize, f64)>,
    /// J^a_i = ∂y^a/∂x^i stored as `jac[a * n + i]`.
    pub jac: Vec<f64>,
    /// φ of the source chart at the image point.
    pub phi_src: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AtlasParams {
    pub n: usize,
    pub resolution: usize,
    pub order: usize,
    pub interp_width: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub receiver_radius: f64,
    pub moment_degree: usize,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    pub n: usize,
    pub res: usize,
    /// Finite-difference accuracy order.
    pub order: usize,
    pub interp_width: usize,
    /// Half side of the coordinate cube of each chart.
    pub half_width: f64,
    pub h: f64,
    pub r_recv: f64,
    nodes_per_chart: usize,
    coords: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    is_receiver: Vec<bool>,
    receivers: Vec<Receiver>,
    lines: Vec<LineStencil>,
    weights: Vec<f64>,
    moment_degree: usize,
}

impl Atlas {
    /// Builds the atlas with fourth-order differences.
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        Self::with_order(n, resolution, 4)
    }

    pub fn with_order(n: usize, res: usize, order: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Config(format!(
                "full grids support n = 2 or 3 (got {n}); use the axisymmetric path for larger n"
            )));
        }
        if order != 2 && order != 4 {
            return Err(Error::Config(format!("order must be 2 or 4 (got {order})")));
        }
        if res < 16 {
            return Err(Error::Config(format!("resolution must be at least 16 (got {res})")));
        }
        let (q, h, r_recv) = [order + 2, order]
            .iter()
            .filter_map(|&q| layout(n, res, order, q).map(|(h, r)| (q, h, r)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| {
                Error::Config(format!(
                    "resolution {res} is below the stencil width needed for the chart overlap"
                ))
            })?;
        let half_width = h * (res - 1) as f64 / 2.0;
        let npc = res.pow(n as u32);
        let total = 2 * npc;

        let mut coords = vec![0.0; total * n];
        let mut phi = vec![0.0; total];
        let mut dphi = vec![0.0; total * n];
        let mut is_receiver = vec![false; total];
        for node in 0..total {
            let mut rem = node % npc;
            let x = &mut coords[node * n..(node + 1) * n];
            for xk in x.iter_mut() {
                *xk = -half_width + (rem % res) as f64 * h;
                rem /= res;
            }
            let r2: f64 = x.iter().map(|v| v * v).sum();
            phi[node] = (2.0 / (1.0 + r2)).ln();
            for k in 0..n {
                dphi[node * n + k] = -2.0 * x[k] / (1.0 + r2);
            }
            is_receiver[node] = r2.sqrt() > r_recv;
        }

        let mut atlas = Atlas {
            n,
            res,
            order,
            interp_width: q,
            half_width,
            h,
            r_recv,
            nodes_per_chart: npc,
            coords,
            phi,
            dphi,
            is_receiver,
            receivers: Vec::new(),
            lines: line_stencils(res, h, order),
            weights: Vec::new(),
            moment_degree: 0,
        };
        atlas.receivers = atlas.build_receivers()?;
        let (w, deg) = quadrature::weights(&atlas)?;
        atlas.weights = w;
        atlas.moment_degree = deg;
        Ok(atlas)
    }

    fn build_receivers(&self) -> Result<Vec<Receiver>> {
        let n = self.n;
        let q = self.interp_width;
        let mut out = Vec::new();
        for node in 0..self.len() {
            if !self.is_receiver[node] {
                continue;
            }
            let x = self.coord(node);
            let y = invert(x);
            let src = self.chart_of(node).other();
            let lines: Vec<(usize, Vec<f64>)> = y
                .iter()
                .map(|&yk| lagrange_line((yk + self.half_width) / self.h, q, self.res))
                .collect();
            let mut donors = Vec::with_capacity(q.pow(n as u32));
            for m in 0..q.pow(n as u32) {
                let mut rem = m;
                let mut w = 1.0;
                let mut flat = 0;
                let mut stride = 1;
                for (start, lw) in &lines {
                    let k = rem % q;
                    rem /= q;
                    w *= lw[k];
                    flat += (start + k) * stride;
                    stride *= self.res;
                }
                let donor = self.node_index(src, flat);
                if self.is_receiver[donor] {
                    return Err(Error::Config(format!(
                        "receiver {node} draws from receiver {donor}; overlap too thin"
                    )));
                }
                donors.push((donor, w));
            }
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let mut jac = vec![0.0; n * n];
            for a in 0..n {
                for i in 0..n {
                    let d = if a == i { r2 } else { 0.0 };
                    jac[a * n + i] = (d - 2.0 * x[a] * x[i]) / (r2 * r2);
                }
            }
            out.push(Receiver {
                node,
                donors,
                jac,
                phi_src: conformal_log(&y),
            });
        }
        Ok(out)
    }

    pub fn params(&self) -> AtlasParams {
        AtlasParams {
            n: self.n,
            resolution: self.res,
            order: self.order,
            interp_width: self.interp_width,
            half_width: self.half_width,
            spacing: self.h,
            receiver_radius: self.r_recv,
            moment_degree: self.moment_degree,
        }
    }

    /// Total number of nodes over both charts.
    pub fn len(&self) -> usize {
        2 * self.nodes_per_chart
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes_per_chart(&self) -> usize {
        self.nodes_per_chart
    }

    pub fn node_index(&self, chart: Chart, flat: usize) -> usize {
        match chart {
            Chart::North => flat,
            Chart::South => self.nodes_per_chart + flat,
        }
    }

    pub fn chart_of(&self, node: usize) -> Chart {
        if node < self.nodes_per_chart {
            Chart::North
        } else {
            Chart::South
        }
    }

    /// Grid indices (i_1, …, i_n) of a node within its chart.
    pub fn grid_index(&self, node: usize) -> Vec<usize> {
        let mut rem = node % self.nodes_per_chart;
        (0..self.n)
            .map(|_| {
                let k = rem % self.res;
                rem /= self.res;
                k
            })
            .collect()
    }

    pub fn coord(&self, node: usize) -> &[f64] {
        &self.coords[node * self.n..(node + 1) * self.n]
    }

    pub fn sphere_point(&self, node: usize) -> Vec<f64> {
        chart_to_sphere(self.chart_of(node), self.coord(node))
    }

    pub fn is_receiver(&self, node: usize) -> bool {
        self.is_receiver[node]
    }

    pub fn conformal_log(&self, node: usize) -> f64 {
        self.phi[node]
    }

    pub fn conformal_grad(&self, node: usize) -> &[f64] {
        &self.dphi[node * self.n..(node + 1) * self.n]
    }

    /// Round metric σ_ij at a node.
    pub fn sigma(&self, node: usize) -> Vec<f64> {
        let n = self.n;
        let e2 = (2.0 * self.phi[node]).exp();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            s[i * n + i] = e2;
        }
        s
    }

    pub fn sigma_field(&self) -> Sym2Field {
        TensorField::from_fn(self.n, 2, self.len(), |q, out| out.copy_from_slice(&self.sigma(q)))
    }

    /// Christoffel symbols Γ^k_ij of σ, stored as `gamma[(k * n + i) * n + j]`.
    pub fn christoffel(&self, node: usize) -> Vec<f64> {
        let n = self.n;
        let d = self.conformal_grad(node);
        let mut g = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if k == i {
                        v += d[j];
                    }
                    if k == j {
                        v += d[i];
                    }
                    if i == j {
                        v -= d[k];
                    }
                    g[(k * n + i) * n + j] = v;
                }
            }
        }
        g
    }

    /// Quadrature weight of a node (zero outside the blend support).
    pub fn weight(&self, node: usize) -> f64 {
        self.weights[node]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes carrying quadrature weight: the ones whose values count in norms.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&q| quadrature::in_support(self.coord(q)))
    }

    pub fn receiver_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.receivers.iter().map(|r| r.node)
    }

    /// Interpolation rows: (receiver, [(donor, weight)]).
    pub fn interpolation_rows(&self) -> impl Iterator<Item = (usize, &[(usize, f64)])> + '_ {
        self.receivers.iter().map(|r| (r.node, r.donors.as_slice()))
    }

    pub fn lines(&self) -> &[LineStencil] {
        &self.lines
    }

    /// Scalar field sampled from a function of ξ.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        TensorField::scalar(self.n, (0..self.len()).map(|q| f(&self.sphere_point(q))).collect())
    }

    /// Value of a scalar field at an arbitrary sphere point, by tensor
    /// Lagrange interpolation in the chart whose center is nearer.
    pub fn interpolate(&self, f: &ScalarField, xi: &[f64]) -> f64 {
        let n = self.n;
        let chart = if xi[n] >= 0.0 { Chart::North } else { Chart::South };
        let x = sphere_to_chart(chart, xi).expect("nearer chart always covers the point");
        let q = self.interp_width;
        let lines: Vec<(usize, Vec<f64>)> = x
            .iter()
            .map(|&xk| lagrange_line((xk + self.half_width) / self.h, q, self.res))
            .collect();
        let mut acc = 0.0;
        for m in 0..q.pow(n as u32) {
            let mut rem = m;
            let mut w = 1.0;
            let mut flat = 0;
            let mut stride = 1;
            for (start, lw) in &lines {
                let k = rem % q;
                rem /= q;
                w *= lw[k];
                flat += (start + k) * stride;
                stride *= self.res;
            }
            acc += w * f.values[self.node_index(chart, flat)];
        }
        acc
    }

    /// Overwrites receiver values by transfer from the other chart.
    ///
    /// Components are rescaled by e^{−rφ} before interpolation so that
    /// constant multiples of σ transfer exactly, then pulled back by the
    /// Jacobian of the inversion.
    pub fn exchange(&self, t: &mut TensorField) {
        let n = self.n;
        let r = t.rank;
        let s = t.stride();
        let mut buf = vec![0.0; s];
        let mut out = vec![0.0; s];
        let updates: Vec<(usize, Vec<f64>)> = self
            .receivers
            .iter()
            .map(|rc| {
                buf.iter_mut().for_each(|v| *v = 0.0);
                for &(d, w) in &rc.donors {
                    let scale = w * (-(r as f64) * self.phi[d]).exp();
                    for (b, v) in buf.iter_mut().zip(t.at(d)) {
                        *b += scale * v;
                    }
                }
                pull_back(&buf, &rc.jac, n, r, &mut out);
                let e = (r as f64 * rc.phi_src).exp();
                (rc.node, out.iter().map(|v| v * e).collect())
            })
            .collect();
        for (node, vals) in updates {
            t.at_mut(node).copy_from_slice(&vals);
        }
    }
}

/// out_{i1..ir} = J^{a1}_{i1} ⋯ J^{ar}_{ir} t_{a1..ar}
fn pull_back(t: &[f64], jac: &[f64], n: usize, rank: usize, out: &mut [f64]) {
    let mut cur = t.to_vec();
    let mut next = vec![0.0; cur.len()];
    let total = cur.len();
    // contract one slot at a time
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        for (idx, nv) in next.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            let base = idx - i * stride;
            let mut acc = 0.0;
            for a in 0..n {
                acc += jac[a * n + i] * cur[base + a * stride];
            }
            *nv = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    out[..total].copy_from_slice(&cur);
}

/// Spacing and receiver radius for interpolation width `q`; `None` if the
/// overlap cannot be made wide enough.
fn layout(n: usize, res: usize, order: usize, q: usize) -> Option<(f64, f64)> {
    let pad = (order / 2 + 1) as f64;
    let reach = |h: f64| q as f64 / 2.0 * h * (n as f64).sqrt();
    let radius = |h: f64| {
        let a = reach(h);
        BLEND_OUTER.max((a + (a * a + 4.0).sqrt()) / 2.0)
    };
    let cells = (res - 1) as f64;
    let mut h = 2.0 * BLEND_OUTER / (cells - 2.0 * pad);
    if h <= 0.0 {
        return None;
    }
    for _ in 0..500 {
        let next = 2.0 * (radius(h) + pad * h) / cells;
        if !next.is_finite() || next > 10.0 {
            return None;
        }
        if (next - h).abs() < 1e-15 {
            h = next;
            break;
        }
        h = next;
    }
    let r = radius(h);
    // fixed point reached and consistent
    if (2.0 * (r + pad * h) / cells - h).abs() > 1e-12 {
        return None;
    }
    Some((h, r))
}
