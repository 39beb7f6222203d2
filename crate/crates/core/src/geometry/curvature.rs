//! Curvature of the induced metric, both from the Gauss equation and
//! intrinsically from finite differences of g.
//!
//! Sign convention: R_ijij is the sectional curvature, so a round sphere of
//! radius a has R_ijkl = a⁻²(g_ik g_jl − g_il g_jk).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::grid::{Atlas, ScalarField, Sym2Field, TensorField};

fn idx4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// R_ijkl = A_il A_jk − A_ik A_jl + ρ⁻²(g_ik g_jl − g_il g_jk).
pub fn gauss_riemann(g: &[f64], a: &[f64], rho: f64) -> Vec<f64> {
    let n = (g.len() as f64).sqrt() as usize;
    let k = rho.powi(-2);
    let mut r = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                for l in 0..n {
                    r[idx4(n, i, j, p, l)] = a[i * n + l] * a[j * n + p] - a[i * n + p] * a[j * n + l]
                        + k * (g[i * n + p] * g[j * n + l] - g[i * n + l] * g[j * n + p]);
                }
            }
        }
    }
    r
}

/// Ric_ik = g^{jl} R_ijkl.
pub fn ricci(riem: &[f64], ginv: &[f64]) -> Vec<f64> {
    let n = (ginv.len() as f64).sqrt() as usize;
    let mut ric = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..n {
                    s += ginv[j * n + l] * riem[idx4(n, i, j, k, l)];
                }
            }
            ric[i * n + k] = s;
        }
    }
    ric
}

pub fn scalar_from_ricci(ric: &[f64], ginv: &[f64]) -> f64 {
    ric.iter().zip(ginv).map(|(a, b)| a * b).sum()
}

/// Riemann, Ricci and scalar curvature assembled from the Gauss equation.
pub fn curvature_tensors(g: &[f64], a: &[f64], rho: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = (g.len() as f64).sqrt() as usize;
    let ginv = invert(g, n);
    let riem = gauss_riemann(g, a, rho);
    let ric = ricci(&riem, &ginv);
    let s = scalar_from_ricci(&ric, &ginv);
    (riem, ric, s)
}

pub fn invert(m: &[f64], n: usize) -> Vec<f64> {
    let inv = DMatrix::from_row_slice(n, n, m)
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    (0..n * n).map(|k| inv[(k / n, k % n)]).collect()
}

/// Levi-Civita connection of g written as ∇ = D + C, where D is the
/// σ-connection and C^m_ij the difference tensor (stored `[m][i][j]`).
#[derive(Debug, Clone)]
pub struct Connection {
    pub g: Sym2Field,
    pub ginv: Sym2Field,
    pub c: TensorField,
}

impl Connection {
    /// C from finite differences of the given metric field.
    pub fn new(atlas: &Atlas, g: &Sym2Field) -> Self {
        let n = atlas.n;
        let dg = atlas.covariant_derivative(g);
        let ginv = TensorField::from_fn(n, 2, atlas.len(), |q, out| out.copy_from_slice(&invert(g.at(q), n)));
        let mut c = TensorField::zeros(n, 3, atlas.len());
        c.values.par_chunks_mut(n * n * n).enumerate().for_each(|(q, out)| {
            let d = dg.at(q);
            let gi = ginv.at(q);
            // D_k g_ij at d[(k*n+i)*n+j]
            let dd = |k: usize, i: usize, j: usize| d[(k * n + i) * n + j];
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += gi[m * n + l] * (dd(i, j, l) + dd(j, i, l) - dd(l, i, j));
                        }
                        out[(m * n + i) * n + j] = 0.5 * s;
                    }
                }
            }
        });
        Connection { g: g.clone(), ginv, c }
    }

    /// ∇T for a covariant tensor field (derivative index first).
    pub fn nabla(&self, atlas: &Atlas, t: &TensorField) -> TensorField {
        let n = atlas.n;
        let r = t.rank;
        let s = t.stride();
        let mut out = atlas.covariant_derivative(t);
        out.values.par_chunks_mut(n * s).enumerate().for_each(|(q, o)| {
            let c = self.c.at(q);
            let tq = t.at(q);
            for k in 0..n {
                for comp in 0..s {
                    let mut v = 0.0;
                    for slot in 0..r {
                        let stride = n.pow((r - 1 - slot) as u32);
                        let i = (comp / stride) % n;
                        let base = comp - i * stride;
                        for m in 0..n {
                            v += c[(m * n + k) * n + i] * tq[base + m * stride];
                        }
                    }
                    o[k * s + comp] -= v;
                }
            }
        });
        out
    }

    /// ∇²f for a scalar field.
    pub fn hessian(&self, atlas: &Atlas, f: &ScalarField) -> Sym2Field {
        let df = atlas.gradient(f);
        self.nabla(atlas, &df)
    }

    /// Δ_g f = g^{ij} ∇²_ij f.
    pub fn laplacian(&self, atlas: &Atlas, f: &ScalarField) -> ScalarField {
        let h = self.hessian(atlas, f);
        self.trace(&h)
    }

    /// g-trace over the first two slots of a tensor of rank ≥ 2.
    pub fn trace(&self, t: &TensorField) -> TensorField {
        let n = t.n;
        let rest = n.pow(t.rank as u32 - 2);
        TensorField::from_fn(n, t.rank - 2, t.nodes(), |q, out| {
            let gi = self.ginv.at(q);
            let tq = t.at(q);
            for (c, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += gi[i * n + j] * tq[(i * n + j) * rest + c];
                    }
                }
                *o = s;
            }
        })
    }

    /// Intrinsic R_ijkl of g (sectional-curvature sign), from derivatives of C.
    pub fn riemann(&self, atlas: &Atlas) -> TensorField {
        let n = atlas.n;
        let len = atlas.len();
        // lower C with σ so that it is an honest covariant 3-tensor
        let low = TensorField::from_fn(n, 3, len, |q, out| {
            let e = (2.0 * atlas.conformal_log(q)).exp();
            for (o, v) in out.iter_mut().zip(self.c.at(q)) {
                *o = e * v;
            }
        });
        let dlow = atlas.covariant_derivative(&low);
        let mut out = TensorField::zeros(n, 4, len);
        out.values.par_chunks_mut(n.pow(4)).enumerate().for_each(|(q, o)| {
            let einv = (-2.0 * atlas.conformal_log(q)).exp();
            let sig = 1.0 / einv;
            let c = self.c.at(q);
            let dc = dlow.at(q);
            let g = self.g.at(q);
            let cc = |m: usize, i: usize, j: usize| c[(m * n + i) * n + j];
            // D_i C^m_jk = σ^{mm} D_i C_{mjk}
            let dcu = |i: usize, m: usize, j: usize, k: usize| einv * dc[idx4(n, i, m, j, k)];
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            // standard-sign R^m_ijk
            let rstd = |m: usize, i: usize, j: usize, k: usize| {
                let mut v = delta(m, i) * sig * delta(j, k) - delta(m, j) * sig * delta(i, k);
                v += dcu(i, m, j, k) - dcu(j, m, i, k);
                for p in 0..n {
                    v += cc(m, i, p) * cc(p, j, k) - cc(m, j, p) * cc(p, i, k);
                }
                v
            };
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for m in 0..n {
                            let r = rstd(m, i, j, k);
                            for l in 0..n {
                                o[idx4(n, i, j, k, l)] -= g[l * n + m] * r;
                            }
                        }
                    }
                }
            }
        });
        out
    }

    /// Scalar curvature g^{ik} g^{jl} R_ijkl.
    pub fn scalar(&self, riem: &TensorField) -> ScalarField {
        let n = riem.n;
        TensorField::from_fn(n, 0, riem.nodes(), |q, out| {
            let gi = self.ginv.at(q);
            let r = riem.at(q);
            let ric = ricci(r, gi);
            out[0] = scalar_from_ricci(&ric, gi);
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_from_gauss() {
        // umbilic: A = λ g, sectional curvature ρ⁻² − λ²
        let g = [2.0, 0.0, 0.0, 2.0];
        let a: Vec<f64> = g.iter().map(|v| 0.3 * v).collect();
        let (riem, ric, s) = curvature_tensors(&g, &a, 1.0);
        let k = 1.0 - 0.09;
        assert!((riem[idx4(2, 0, 1, 0, 1)] - k * 4.0).abs() < 1e-14);
        assert!((ric[0] - k * 2.0).abs() < 1e-14);
        assert!((s - 2.0 * k).abs() < 1e-14);
    }
}
