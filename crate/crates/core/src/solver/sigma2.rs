//! Damped Newton for 2P₂(λ[u]) = ψ on the atlas.
//!
//! Unknowns are the nodal values of u in both charts. Interior rows carry
//! the curvature equation; receiver rows carry the interpolation constraint
//! that ties the charts together. The Jacobian is assembled exactly from
//! the stencils and solved by sparse LU.

use std::collections::BTreeMap;

use faer::sparse::linalg::solvers::SpSolver;
use faer::sparse::SparseColMat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{curvature_traces, fundamental_forms, induced_metric, principal_curvatures_at, GraphFunction, NodeJet};
use crate::geometry::curvature::invert;
use crate::grid::{Atlas, ScalarField, Sym2Field, TensorField};
use crate::preset::Jet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Target for max |2P₂ − ψ| (and the interpolation rows).
    pub tolerance: f64,
    /// Largest accepted max |δu| in one step.
    pub max_step: f64,
    /// Sufficient-decrease constant of the backtracking search.
    pub armijo: f64,
    pub backtrack: f64,
    pub min_damping: f64,
    /// ε_adm: every accepted iterate has P₁, P₂ > ε_adm.
    pub admissibility_margin: f64,
    /// Accepted iterates have cosh²u − |Du|² above this.
    pub spacelike_floor: f64,
    /// Relative residual allowed in the linear solve before refinement.
    pub linear_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            tolerance: 1e-10,
            max_step: 0.25,
            armijo: 1e-4,
            backtrack: 0.5,
            min_damping: 1.0 / 1024.0,
            admissibility_margin: 1e-8,
            spacelike_floor: 1e-8,
            linear_tolerance: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("tolerance", self.tolerance),
            ("max_step", self.max_step),
            ("armijo", self.armijo),
            ("min_damping", self.min_damping),
            ("admissibility_margin", self.admissibility_margin),
            ("spacelike_floor", self.spacelike_floor),
            ("linear_tolerance", self.linear_tolerance),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive (got {v})")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config(format!("backtrack must lie in (0, 1) (got {})", self.backtrack)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_inf: f64,
    /// Step length used to reach this iterate (0 for the initial guess).
    pub damping: f64,
    #[serde(rename = "minP1")]
    pub min_p1: f64,
    #[serde(rename = "minP2")]
    pub min_p2: f64,
    pub margin: f64,
    /// min over nodes of the smallest eigenvalue of F^{ij} relative to g.
    pub min_ellipticity: f64,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: ScalarField,
    pub residual: ScalarField,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct Sigma2Solution {
    pub f: GraphFunction,
    pub state: SolverState,
}

/// Pointwise summary of an iterate over the equation rows.
#[derive(Debug, Clone, Copy)]
struct Feasibility {
    min_p1: f64,
    min_p2: f64,
    margin: f64,
}

fn node_jet<'a>(atlas: &Atlas, jet: &'a Jet, q: usize) -> NodeJet<'a> {
    NodeJet {
        u: jet.u.values[q],
        du: jet.du.at(q),
        d2u: jet.d2u.at(q),
        conf: (2.0 * atlas.conformal_log(q)).exp(),
    }
}

/// 2P₂ = H² − |A|² at every node of a jet; NaN where the jet is not spacelike.
pub fn two_p2(atlas: &Atlas, jet: &Jet, rho: f64) -> ScalarField {
    let v = (0..atlas.len())
        .into_par_iter()
        .map(|q| match curvature_traces(rho, &node_jet(atlas, jet, q)) {
            Some((_, h, a2)) => h * h - a2,
            None => f64::NAN,
        })
        .collect();
    ScalarField::scalar(atlas.n, v)
}

/// ψ = ρ⁻²n(n−1) − R for a target scalar curvature, checked against the
/// window ρ⁻²n(n−2) < R < ρ⁻²n(n−1).
pub fn psi_from_metric(r_target: &ScalarField, rho: f64, n: usize) -> Result<ScalarField> {
    if !(rho > 0.0) {
        return Err(Error::Config("rho must be positive".into()));
    }
    let w = crate::estimates::curvature_window(r_target.values.iter().copied(), rho, n);
    if !w.holds {
        return Err(Error::Hypothesis(format!(
            "curvature window fails (lower margin {:.6e}, upper margin {:.6e})",
            w.lower_margin, w.upper_margin
        )));
    }
    Ok(crate::estimates::psi(r_target, rho, n))
}

/// Pointwise |g[u] − g_t| measured in g_t.
pub fn isometric_residual(atlas: &Atlas, f: &GraphFunction, g_target: &Sym2Field) -> ScalarField {
    let n = atlas.n;
    let g = induced_metric(atlas, f);
    TensorField::from_fn(n, 0, atlas.len(), |q, out| {
        let gt = g_target.at(q);
        let gi = invert(gt, n);
        let d: Vec<f64> = g.at(q).iter().zip(gt).map(|(a, b)| a - b).collect();
        // tr(G⁻¹ D G⁻¹ D)
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                m[i * n + k] = (0..n).map(|l| gi[i * n + l] * d[l * n + k]).sum();
            }
        }
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += m[i * n + k] * m[k * n + i];
            }
        }
        out[0] = s.max(0.0).sqrt();
    })
}

struct Problem<'a> {
    atlas: &'a Atlas,
    psi: &'a ScalarField,
    rho: f64,
    rows: Vec<usize>,
    receivers: Vec<(usize, Vec<(usize, f64)>)>,
}

impl<'a> Problem<'a> {
    fn new(atlas: &'a Atlas, psi: &'a ScalarField, rho: f64) -> Self {
        Problem {
            atlas,
            psi,
            rho,
            rows: (0..atlas.len()).filter(|&q| !atlas.is_receiver(q)).collect(),
            receivers: atlas.interpolation_rows().map(|(q, d)| (q, d.to_vec())).collect(),
        }
    }

    /// Residual vector (2P₂ − ψ on equation rows, interpolation defect on
    /// receivers) and feasibility, or `None` if some row is not spacelike.
    fn evaluate(&self, u: &ScalarField) -> (Jet, Vec<f64>, Option<Feasibility>) {
        let jet = Jet::from_field(self.atlas, u);
        let mut r = vec![0.0; self.atlas.len()];
        let vals: Vec<Option<(f64, f64, f64, f64)>> = self
            .rows
            .par_iter()
            .map(|&q| {
                curvature_traces(self.rho, &node_jet(self.atlas, &jet, q)).map(|(w, h, a2)| {
                    let p2 = 0.5 * (h * h - a2);
                    (w, h, p2, 2.0 * p2 - self.psi.values[q])
                })
            })
            .collect();
        let mut feas = Some(Feasibility {
            min_p1: f64::INFINITY,
            min_p2: f64::INFINITY,
            margin: f64::INFINITY,
        });
        for (&q, v) in self.rows.iter().zip(&vals) {
            match (v, feas.as_mut()) {
                (Some((w, h, p2, res)), Some(f)) => {
                    r[q] = *res;
                    f.min_p1 = f.min_p1.min(*h);
                    f.min_p2 = f.min_p2.min(*p2);
                    f.margin = f.margin.min(*w);
                }
                (None, _) => {
                    r[q] = f64::NAN;
                    feas = None;
                }
                (Some((_, _, _, res)), None) => r[q] = *res,
            }
        }
        for (q, donors) in &self.receivers {
            r[*q] = u.values[*q] - donors.iter().map(|&(d, w)| w * u.values[d]).sum::<f64>();
        }
        (jet, r, feas)
    }

    /// Smallest eigenvalue of F = H g⁻¹ − g⁻¹Ag⁻¹ relative to g, i.e.
    /// min_i (H − λ_i), over equation rows.
    fn min_ellipticity(&self, jet: &Jet) -> f64 {
        self.rows
            .par_iter()
            .map(|&q| {
                let nj = node_jet(self.atlas, jet, q);
                match fundamental_forms(self.rho, &nj).and_then(|(g, a)| principal_curvatures_at(&g, &a).ok()) {
                    Some(l) => {
                        let h: f64 = l.iter().sum();
                        h - l.last().copied().unwrap_or(0.0)
                    }
                    None => f64::NAN,
                }
            })
            .reduce(|| f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) })
    }

    /// Sparse Jacobian of the residual at the jet of u.
    fn jacobian(&self, jet: &Jet) -> Result<SparseColMat<usize, f64>> {
        let atlas = self.atlas;
        let n = atlas.n;
        let rho = self.rho;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let rows: Vec<Vec<(usize, usize, f64)>> = self
            .rows
            .par_iter()
            .map(|&q| {
                let nj = node_jet(atlas, jet, q);
                let phi = |u: f64, du: &[f64], d2u: &[f64]| {
                    let j = NodeJet { u, du, d2u, conf: nj.conf };
                    curvature_traces(rho, &j).map(|(_, h, a2)| h * h - a2).unwrap_or(f64::NAN)
                };
                let step = |x: f64| 1e-6 * x.abs().max(1.0);
                let (du0, d2u0) = (nj.du.to_vec(), nj.d2u.to_vec());
                let e = step(nj.u);
                let a0 = (phi(nj.u + e, &du0, &d2u0) - phi(nj.u - e, &du0, &d2u0)) / (2.0 * e);
                let mut ak = vec![0.0; n];
                for (k, a) in ak.iter_mut().enumerate() {
                    let e = step(du0[k]);
                    let (mut p, mut m) = (du0.clone(), du0.clone());
                    p[k] += e;
                    m[k] -= e;
                    *a = (phi(nj.u, &p, &d2u0) - phi(nj.u, &m, &d2u0)) / (2.0 * e);
                }
                let mut bij = Vec::with_capacity(pairs.len());
                for &(i, j) in &pairs {
                    let e = step(d2u0[i * n + j]);
                    let (mut p, mut m) = (d2u0.clone(), d2u0.clone());
                    for (a, b) in [(i, j), (j, i)] {
                        p[a * n + b] = d2u0[i * n + j] + e;
                        m[a * n + b] = d2u0[i * n + j] - e;
                    }
                    bij.push((phi(nj.u, &du0, &p) - phi(nj.u, &du0, &m)) / (2.0 * e));
                }
                // D²u_ij = ∂_ij u − Γ^k_ij ∂_k u
                let gam = atlas.christoffel(q);
                let mut c1 = ak.clone();
                for (&(i, j), &b) in pairs.iter().zip(&bij) {
                    for (k, c) in c1.iter_mut().enumerate() {
                        *c -= b * gam[(k * n + i) * n + j];
                    }
                }
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                *acc.entry(q).or_default() += a0;
                for (k, &c) in c1.iter().enumerate() {
                    for (s, w) in atlas.stencil_d1(q, k) {
                        *acc.entry(s).or_default() += c * w;
                    }
                }
                for (&(i, j), &b) in pairs.iter().zip(&bij) {
                    for (s, w) in atlas.stencil_d2(q, i, j) {
                        *acc.entry(s).or_default() += b * w;
                    }
                }
                acc.into_iter().map(|(s, v)| (q, s, v)).collect()
            })
            .collect();
        let mut trip: Vec<(usize, usize, f64)> = rows.into_iter().flatten().collect();
        if trip.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::Linear("non-finite Jacobian entry".into()));
        }
        for (q, donors) in &self.receivers {
            trip.push((*q, *q, 1.0));
            for &(d, w) in donors {
                trip.push((*q, d, -w));
            }
        }
        let len = atlas.len();
        SparseColMat::try_new_from_triplets(len, len, &trip).map_err(|e| Error::Linear(format!("{e:?}")))
    }
}

fn apply(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        for (i, v) in a.row_indices_of_col(j).zip(a.values_of_col(j)) {
            y[i] += v * xj;
        }
    }
    y
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves J δ = b with one step of iterative refinement.
fn linear_solve(j: &SparseColMat<usize, f64>, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let lu = j.sp_lu().map_err(|e| Error::Linear(format!("{e:?}")))?;
    let mut x = b.to_vec();
    lu.solve_in_place(faer::col::from_slice_mut(&mut x));
    let bn = l2(b).max(f64::MIN_POSITIVE);
    for _ in 0..2 {
        let r: Vec<f64> = apply(j, &x).iter().zip(b).map(|(a, b)| b - a).collect();
        if l2(&r) <= tol * bn {
            return Ok(x);
        }
        let mut c = r;
        lu.solve_in_place(faer::col::from_slice_mut(&mut c));
        x.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    let r: Vec<f64> = apply(j, &x).iter().zip(b).map(|(a, b)| b - a).collect();
    if l2(&r) <= tol * bn && x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Linear(format!("relative residual {:.3e} after refinement", l2(&r) / bn)))
    }
}

/// Constant solution of 2P₂ = ψ for constant ψ: u = artanh(ρ√(ψ/(n(n−1)))).
pub fn constant_branch(psi: f64, rho: f64, n: usize) -> Option<f64> {
    let t = rho * (psi / (n * (n - 1)) as f64).sqrt();
    (psi > 0.0 && t < 1.0).then(|| t.atanh())
}

/// Default initial guess: the constant branch for the mean of ψ.
pub fn default_initial_guess(atlas: &Atlas, psi: &ScalarField, rho: f64) -> Result<GraphFunction> {
    let rows: Vec<usize> = atlas.support().collect();
    let mean = rows.iter().map(|&q| psi.values[q] * atlas.weight(q)).sum::<f64>()
        / rows.iter().map(|&q| atlas.weight(q)).sum::<f64>();
    let c = constant_branch(mean, rho, atlas.n)
        .ok_or_else(|| Error::Hypothesis(format!("no constant solution for mean ψ = {mean}")))?;
    GraphFunction::new(ScalarField::scalar(atlas.n, vec![c; atlas.len()]), rho)
}

/// Damped Newton for 2P₂(λ[u]) = ψ starting from `u0`.
pub fn solve_sigma2(
    atlas: &Atlas,
    psi: &ScalarField,
    rho: f64,
    u0: &GraphFunction,
    cfg: &SolverConfig,
) -> Result<Sigma2Solution> {
    cfg.validate()?;
    let n = atlas.n;
    if !(rho > 0.0) {
        return Err(Error::Config("rho must be positive".into()));
    }
    if psi.values.len() != atlas.len() || u0.u.values.len() != atlas.len() {
        return Err(Error::Config("field sizes do not match the atlas".into()));
    }
    let upper = n as f64 / (rho * rho);
    for q in (0..atlas.len()).filter(|&q| !atlas.is_receiver(q)) {
        let p = psi.values[q];
        if !(p > 0.0 && p < upper) {
            return Err(Error::Hypothesis(format!(
                "need 0 < ψ < nρ⁻² = {upper}, but ψ = {p} at node {q}"
            )));
        }
    }

    let prob = Problem::new(atlas, psi, rho);
    let mut u = u0.u.clone();
    let (mut jet, mut r, feas) = prob.evaluate(&u);
    let Some(mut feas) = feas else {
        let (margin, node) = crate::geometry::spacelike_margin_of(&jet, atlas);
        return Err(Error::NotSpacelike { node, margin });
    };
    if feas.min_p1 <= cfg.admissibility_margin || feas.min_p2 <= cfg.admissibility_margin {
        return Err(Error::Admissibility(format!(
            "initial guess outside Γ₂ (min P₁ = {:.3e}, min P₂ = {:.3e})",
            feas.min_p1, feas.min_p2
        )));
    }
    let record = |iter: usize, r: &[f64], damping: f64, f: &Feasibility, ell: f64| IterationRecord {
        iter,
        residual_inf: inf_norm(r),
        damping,
        min_p1: f.min_p1,
        min_p2: f.min_p2,
        margin: f.margin,
        min_ellipticity: ell,
    };
    let mut history = vec![record(0, &r, 0.0, &feas, prob.min_ellipticity(&jet))];

    for iter in 1..=cfg.max_iterations {
        if inf_norm(&r) <= cfg.tolerance {
            break;
        }
        let jac = prob.jacobian(&jet)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = linear_solve(&jac, &rhs, cfg.linear_tolerance)?;
        let big = inf_norm(&delta);
        let mut t = if big > cfg.max_step { cfg.max_step / big } else { 1.0 };
        let r0 = l2(&r);
        let accepted = loop {
            let trial = u.zip_with(&ScalarField::scalar(n, delta.clone()), |a, d| a + t * d);
            let (tj, tr, tf) = prob.evaluate(&trial);
            if let Some(f) = tf {
                let ok = f.margin > cfg.spacelike_floor
                    && f.min_p1 > cfg.admissibility_margin
                    && f.min_p2 > cfg.admissibility_margin
                    && l2(&tr) <= (1.0 - cfg.armijo * t) * r0;
                if ok {
                    break Some((trial, tj, tr, f, t));
                }
            }
            t *= cfg.backtrack;
            if t < cfg.min_damping {
                break None;
            }
        };
        let Some((nu, nj, nr, nf, t)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: inf_norm(&r),
                reason: format!(
                    "line search stalled (min P₁ {:.3e}, min P₂ {:.3e}, margin {:.3e}, |δ| {:.3e})",
                    feas.min_p1, feas.min_p2, feas.margin, big
                ),
            });
        };
        u = nu;
        jet = nj;
        r = nr;
        feas = nf;
        let ell = prob.min_ellipticity(&jet);
        if !(ell > 0.0) {
            return Err(Error::Admissibility(format!(
                "linearized operator lost ellipticity at iteration {iter} (min eigenvalue {ell:.3e})"
            )));
        }
        history.push(record(iter, &r, t, &feas, ell));
    }
    let res = inf_norm(&r);
    if !(res <= cfg.tolerance) {
        return Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
            residual: res,
            reason: "iteration limit reached".into(),
        });
    }
    let f = GraphFunction::new(u.clone(), rho)?;
    Ok(Sigma2Solution {
        f,
        state: SolverState {
            u,
            residual: ScalarField::scalar(n, r),
            history,
        },
    })
}
