//! Minkowski space R^{n+1,1}, timelike slot first, signature (−, +, …, +).

use nalgebra::{DMatrix, DVector};

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// E₀ = (1, 0, …, 0).
pub fn e0(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    v
}

/// A linear isometry of R^{n+1,1} stored as a matrix acting on columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzTransform {
    pub matrix: DMatrix<f64>,
}

impl LorentzTransform {
    pub fn identity(dim: usize) -> Self {
        LorentzTransform {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Boost of rapidity `rapidity` in the plane of E₀ and the unit spatial
    /// direction `dir` (length n+1): E₀ ↦ cosh·E₀ + sinh·dir.
    pub fn boost(dir: &[f64], rapidity: f64) -> Self {
        let dim = dir.len() + 1;
        let (c, s) = (rapidity.cosh(), rapidity.sinh());
        let mut m = DMatrix::identity(dim, dim);
        m[(0, 0)] = c;
        for a in 0..dir.len() {
            m[(a + 1, 0)] = s * dir[a];
            m[(0, a + 1)] = s * dir[a];
            for b in 0..dir.len() {
                m[(a + 1, b + 1)] += (c - 1.0) * dir[a] * dir[b];
            }
        }
        LorentzTransform { matrix: m }
    }

    /// Spatial rotation taking the unit vector `from` to `to` in their common
    /// plane (identity on the orthogonal complement).
    pub fn rotation(from: &[f64], to: &[f64]) -> Self {
        let k = from.len();
        let dim = k + 1;
        let mut m = DMatrix::identity(dim, dim);
        let f = DVector::from_column_slice(from);
        let t = DVector::from_column_slice(to);
        let c = f.dot(&t).clamp(-1.0, 1.0);
        let w = &t - &f * c;
        let wn = w.norm();
        if wn < 1e-15 {
            if c < 0.0 {
                // antipodal: rotate by π in a plane containing `from`
                let mut e = DVector::zeros(k);
                let j = (0..k).min_by(|&a, &b| from[a].abs().total_cmp(&from[b].abs())).unwrap();
                e[j] = 1.0;
                let e = &e - &f * f.dot(&e);
                let e = e.normalize();
                for a in 0..k {
                    for b in 0..k {
                        m[(a + 1, b + 1)] -= 2.0 * (f[a] * f[b] + e[a] * e[b]);
                    }
                }
            }
            return LorentzTransform { matrix: m };
        }
        let w = w / wn;
        let s = wn;
        // R = I + (c−1)(ffᵀ + wwᵀ) + s(wfᵀ − fwᵀ)
        for a in 0..k {
            for b in 0..k {
                m[(a + 1, b + 1)] += (c - 1.0) * (f[a] * f[b] + w[a] * w[b]) + s * (w[a] * f[b] - f[a] * w[b]);
            }
        }
        LorentzTransform { matrix: m }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// self ∘ other
    pub fn compose(&self, other: &LorentzTransform) -> Self {
        LorentzTransform {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// Inverse via η Lᵀ η.
    pub fn inverse(&self) -> Self {
        let dim = self.matrix.nrows();
        let mut m = self.matrix.transpose();
        for i in 0..dim {
            for j in 0..dim {
                if (i == 0) != (j == 0) {
                    m[(i, j)] = -m[(i, j)];
                }
            }
        }
        LorentzTransform { matrix: m }
    }

    /// max |LᵀηL − η|
    pub fn isometry_defect(&self) -> f64 {
        let dim = self.matrix.nrows();
        let mut eta = DMatrix::identity(dim, dim);
        eta[(0, 0)] = -1.0;
        (self.matrix.transpose() * &eta * &self.matrix - eta).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_is_an_isometry() {
        let b = LorentzTransform::boost(&[0.6, 0.0, 0.8], 0.7);
        assert!(b.isometry_defect() < 1e-14);
        let v = [0.3, 1.0, -2.0, 0.5];
        let w = b.apply(&v);
        assert!((inner(&v, &v) - inner(&w, &w)).abs() < 1e-13);
        let back = b.inverse().apply(&w);
        for (x, y) in v.iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
        let e = b.apply(&e0(4));
        assert!((e[0] - 0.7f64.cosh()).abs() < 1e-15);
        assert!((e[3] - 0.8 * 0.7f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn rotation_maps_from_to() {
        let f = [0.0, 0.6, 0.8];
        let t = [1.0, 0.0, 0.0];
        let r = LorentzTransform::rotation(&f, &t);
        assert!(r.isometry_defect() < 1e-14);
        let out = r.apply(&[0.0, 0.0, 0.6, 0.8]);
        assert!((out[1] - 1.0).abs() < 1e-14 && out[2].abs() < 1e-14 && out[3].abs() < 1e-14);
        let r = LorentzTransform::rotation(&t, &[-1.0, 0.0, 0.0]);
        assert!(r.isometry_defect() < 1e-14);
        assert!((r.apply(&[0.0, 1.0, 0.0, 0.0])[1] + 1.0).abs() < 1e-14);
    }
}
