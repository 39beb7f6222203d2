//! One-dimensional finite-difference and interpolation weights on uniform grids.

/// Fornberg's recursion: weights `w[m][j]` such that
/// `f^(m)(z) ≈ Σ_j w[m][j] f(x[j])` for every `m ≤ order`.
pub fn fornberg(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let np = x.len();
    let mut c = vec![vec![0.0; np]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative weights for one grid line: first index of the stencil and
/// weights of the first and second derivative.
#[derive(Debug, Clone)]
pub struct LineStencil {
    pub start: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Stencils of accuracy order `p` for every node of a line of `res` nodes with spacing `h`.
/// Centered where possible, shifted inward at the ends.
pub fn line_stencils(res: usize, h: f64, p: usize) -> Vec<LineStencil> {
    // p+1 points give order p for d1 and (centered) d2; one-sided d2 needs p+2.
    let width = p + 2;
    let half = p / 2;
    (0..res)
        .map(|i| {
            let (start, len) = if i >= half && i + half < res {
                (i - half, p + 1)
            } else if i < half {
                (0, width)
            } else {
                (res - width, width)
            };
            let pts: Vec<f64> = (0..len).map(|k| (start + k) as f64 - i as f64).collect();
            let w = fornberg(0.0, &pts, 2);
            LineStencil {
                start,
                d1: w[1].iter().map(|v| v / h).collect(),
                d2: w[2].iter().map(|v| v / (h * h)).collect(),
            }
        })
        .collect()
}

/// Lagrange interpolation at `z` (in grid-index units) using `q` consecutive
/// nodes of a line of `res` nodes. Returns the first node and the weights.
pub fn lagrange_line(z: f64, q: usize, res: usize) -> (usize, Vec<f64>) {
    let base = (z - (q as f64 - 1.0) / 2.0).round();
    let start = base.clamp(0.0, (res - q) as f64) as usize;
    let pts: Vec<f64> = (0..q).map(|k| (start + k) as f64).collect();
    let w = fornberg(z, &pts, 0);
    (start, w.into_iter().next().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_centered_weights() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_exact_on_polynomials() {
        let h = 0.1;
        for p in [2, 4] {
            let st = line_stencils(12, h, p);
            for (i, s) in st.iter().enumerate() {
                let x0 = i as f64 * h;
                // degree p polynomial: exact for d1 and d2 when the stencil has p+1 points
                let f = |x: f64| (x - 0.3).powi(p as i32) + 2.0 * x;
                let df = |x: f64| p as f64 * (x - 0.3).powi(p as i32 - 1) + 2.0;
                let d2f = |x: f64| (p * (p - 1)) as f64 * (x - 0.3).powi(p as i32 - 2);
                let mut a = 0.0;
                let mut b = 0.0;
                for (k, (w1, w2)) in s.d1.iter().zip(&s.d2).enumerate() {
                    let v = f((s.start + k) as f64 * h);
                    a += w1 * v;
                    b += w2 * v;
                }
                assert!((a - df(x0)).abs() < 1e-9, "p={p} i={i}");
                assert!((b - d2f(x0)).abs() < 1e-7, "p={p} i={i}");
            }
        }
    }

    #[test]
    fn lagrange_reproduces_quintics() {
        let (s, w) = lagrange_line(7.3, 6, 20);
        assert_eq!(s, 5);
        let f = |x: f64| x.powi(5) - 3.0 * x * x;
        let v: f64 = w.iter().enumerate().map(|(k, w)| w * f((s + k) as f64)).sum();
        assert!((v - f(7.3)).abs() < 1e-8 * f(7.3).abs());
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
