//! σ-covariant differentiation on the atlas.

use rayon::prelude::*;

use super::{Atlas, CovectorField, ScalarField, Sym2Field, TensorField};

impl Atlas {
    fn axis_stride(&self, k: usize) -> usize {
        self.res.pow(k as u32)
    }

    /// Weights of ∂_k at `node` as (neighbor, weight) pairs.
    pub fn stencil_d1(&self, node: usize, k: usize) -> Vec<(usize, f64)> {
        let idx = self.grid_index(node);
        let st = &self.lines[idx[k]];
        let stride = self.axis_stride(k);
        let base = node - idx[k] * stride;
        st.d1
            .iter()
            .enumerate()
            .map(|(m, &w)| (base + (st.start + m) * stride, w))
            .collect()
    }

    /// Weights of ∂_k∂_l at `node`.
    pub fn stencil_d2(&self, node: usize, k: usize, l: usize) -> Vec<(usize, f64)> {
        if k == l {
            let idx = self.grid_index(node);
            let st = &self.lines[idx[k]];
            let stride = self.axis_stride(k);
            let base = node - idx[k] * stride;
            return st
                .d2
                .iter()
                .enumerate()
                .map(|(m, &w)| (base + (st.start + m) * stride, w))
                .collect();
        }
        let mut out = Vec::new();
        for (a, wa) in self.stencil_d1(node, k) {
            for (b, wb) in self.stencil_d1(a, l) {
                out.push((b, wa * wb));
            }
        }
        out
    }

    /// Coordinate partials ∂_k f (and ∂_k∂_l f when `second`) of a nodal
    /// array. Receivers are left at zero.
    fn partials(&self, f: &[f64], second: bool) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let len = self.len();
        let mut g = vec![0.0; len * n];
        let mut hs = if second { vec![0.0; len * n * n] } else { Vec::new() };
        let apply = |st: &[(usize, f64)]| st.iter().map(|&(j, w)| w * f[j]).sum::<f64>();
        g.par_chunks_mut(n).enumerate().for_each(|(q, out)| {
            if self.is_receiver(q) {
                return;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o = apply(&self.stencil_d1(q, k));
            }
        });
        if second {
            hs.par_chunks_mut(n * n).enumerate().for_each(|(q, out)| {
                if self.is_receiver(q) {
                    return;
                }
                for k in 0..n {
                    for l in k..n {
                        let v = apply(&self.stencil_d2(q, k, l));
                        out[k * n + l] = v;
                        out[l * n + k] = v;
                    }
                }
            });
        }
        (g, hs)
    }

    /// Df and D²f of a scalar field, with receivers filled by exchange.
    pub fn differentiate(&self, f: &ScalarField) -> (CovectorField, Sym2Field) {
        assert_eq!(f.rank, 0);
        let n = self.n;
        let (g, hs) = self.partials(&f.values, true);
        let mut df = TensorField { n, rank: 1, values: g };
        let mut d2 = TensorField { n, rank: 2, values: hs };
        d2.values.par_chunks_mut(n * n).enumerate().for_each(|(q, out)| {
            if self.is_receiver(q) {
                return;
            }
            let gam = self.christoffel(q);
            let d = &df.values[q * n..(q + 1) * n];
            for i in 0..n {
                for j in 0..n {
                    let mut c = 0.0;
                    for k in 0..n {
                        c += gam[(k * n + i) * n + j] * d[k];
                    }
                    out[i * n + j] -= c;
                }
            }
        });
        self.exchange(&mut df);
        self.exchange(&mut d2);
        (df, d2)
    }

    pub fn gradient(&self, f: &ScalarField) -> CovectorField {
        assert_eq!(f.rank, 0);
        let (g, _) = self.partials(&f.values, false);
        let mut df = TensorField { n: self.n, rank: 1, values: g };
        self.exchange(&mut df);
        df
    }

    /// σ-covariant derivative D T of a covariant tensor field; the new
    /// (derivative) index comes first.
    ///
    /// Partials are taken of e^{−rφ}T and corrected analytically, so fields
    /// that are constant multiples of σ differentiate to rounding level.
    pub fn covariant_derivative(&self, t: &TensorField) -> TensorField {
        let n = self.n;
        let r = t.rank;
        let s = t.stride();
        let len = self.len();
        let rf = r as f64;
        let mut partial = vec![0.0; len * n * s];
        let mut comp = vec![0.0; len];
        for c in 0..s {
            for q in 0..len {
                comp[q] = (-rf * self.phi[q]).exp() * t.values[q * s + c];
            }
            let (g, _) = self.partials(&comp, false);
            for q in 0..len {
                for k in 0..n {
                    partial[(q * n + k) * s + c] = g[q * n + k];
                }
            }
        }
        let mut out = TensorField { n, rank: r + 1, values: partial };
        out.values.par_chunks_mut(n * s).enumerate().for_each(|(q, o)| {
            if self.is_receiver(q) {
                return;
            }
            let e = (rf * self.phi[q]).exp();
            let dphi = self.conformal_grad(q);
            let tq = &t.values[q * s..(q + 1) * s];
            let gam = self.christoffel(q);
            for k in 0..n {
                for c in 0..s {
                    let mut v = e * o[k * s + c] + rf * dphi[k] * tq[c];
                    // subtract Γ^m_{k i_slot} T_{..m..} for each slot
                    for slot in 0..r {
                        let stride = n.pow((r - 1 - slot) as u32);
                        let i = (c / stride) % n;
                        let base = c - i * stride;
                        for m in 0..n {
                            v -= gam[(m * n + k) * n + i] * tq[base + m * stride];
                        }
                    }
                    o[k * s + c] = v;
                }
            }
        });
        self.exchange(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::grid::Atlas;

    #[test]
    fn constants_differentiate_to_zero() {
        let a = Atlas::new(2, 24).unwrap();
        let f = a.sample(|_| 3.7);
        let (d, d2) = a.differentiate(&f);
        assert!(d.values.iter().all(|v| v.abs() < 1e-12));
        assert!(d2.values.iter().all(|v| v.abs() < 1e-11));
        let ds = a.covariant_derivative(&a.sigma_field());
        let m = ds.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(m < 1e-12, "{m}");
    }
}
