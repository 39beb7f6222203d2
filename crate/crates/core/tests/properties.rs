use desitter::estimates::{curvature_window, nonexistence_certificate, rho_max, Obstruction};
use desitter::symmetric::{
    elementary_symmetric, gamma2_contains, newton_maclaurin_gap, sigma2_linearization, sqrt_sigma2, truncated_symmetric,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=6).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

/// v + c·1 with c past the larger root of σ₂(v + c·1), which puts the shift
/// in Γ₂; `d` controls the distance from the boundary.
fn shift_into_cone(v: &[f64], d: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let s1: f64 = v.iter().sum();
    let s2 = elementary_symmetric(2, v).unwrap();
    let (a, b) = (n * (n - 1.0) / 2.0, (n - 1.0) * s1);
    let c = (-b + (b * b - 4.0 * a * s2).max(0.0).sqrt()) / (2.0 * a);
    v.iter().map(|x| x + c + d).collect()
}

fn admissible_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-3.0f64..3.0, n), 1e-3f64..3.0)
        .prop_map(|(v, d)| shift_into_cone(&v, d))
        .prop_filter("in Γ₂", |l| gamma2_contains(l).inside)
}

fn admissible() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=6).prop_flat_map(admissible_of)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn symmetric_outputs_ignore_order(l in spectrum(), seed in any::<u64>()) {
        let mut p = l.clone();
        let k = (seed as usize) % p.len();
        p.rotate_left(k);
        p.reverse();
        for j in 0..=l.len() {
            prop_assert!(close(elementary_symmetric(j, &l).unwrap(), elementary_symmetric(j, &p).unwrap()));
        }
        prop_assert_eq!(gamma2_contains(&l).inside, gamma2_contains(&p).inside);
        prop_assert!(close(newton_maclaurin_gap(&l).gap, newton_maclaurin_gap(&p).gap));
        prop_assert!(close(sqrt_sigma2(&l), sqrt_sigma2(&p)));
    }

    #[test]
    fn cone_verdict_scale_invariant(l in spectrum(), t in 1e-3f64..1e3) {
        let s: Vec<f64> = l.iter().map(|v| v * t).collect();
        prop_assert_eq!(gamma2_contains(&l).inside, gamma2_contains(&s).inside);
    }

    #[test]
    fn truncation_removes_one_entry(l in spectrum(), i in 0usize..6, k in 0usize..=6) {
        let (i, k) = (i % l.len(), k % (l.len() + 1));
        let mut z = l.clone();
        z[i] = 0.0;
        prop_assert!(close(truncated_symmetric(k, i, &l).unwrap(), elementary_symmetric(k, &z).unwrap()));
    }

    #[test]
    fn gap_nonnegative_on_cone(l in admissible()) {
        let g = newton_maclaurin_gap(&l);
        prop_assert!(g.gap >= -1e-12 * (1.0 + g.truncated_sum.abs()));
    }

    #[test]
    fn sqrt_p2_concave_on_cone(
        (a, b) in (2usize..=6).prop_flat_map(|n| (admissible_of(n), admissible_of(n))),
        t in 0.0f64..1.0,
    ) {
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        prop_assert!(sqrt_sigma2(&m) >= t * sqrt_sigma2(&a) + (1.0 - t) * sqrt_sigma2(&b) - 1e-12);
    }

    #[test]
    fn linearization_positive_on_cone(l in admissible(), entries in prop::collection::vec(-1.0f64..1.0, 36)) {
        let n = l.len();
        // g = LLᵀ with L lower triangular, A = L diag(λ) Lᵀ
        let lower = DMatrix::from_fn(n, n, |i, j| {
            if i == j { 1.0 + entries[i * 6 + j].abs() } else if i > j { entries[i * 6 + j] } else { 0.0 }
        });
        let g = &lower * lower.transpose();
        let a = &lower * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(l.clone())) * lower.transpose();
        let f = sigma2_linearization(&a, &g).unwrap();
        let f = (&f + f.transpose()) * 0.5;
        prop_assert!(f.cholesky().is_some());
    }

    #[test]
    fn window_and_cone_agree(l in spectrum(), rho in 0.2f64..5.0) {
        // R from the Gauss equation: ρ⁻²n(n−1) − 2P₂
        let n = l.len();
        let p2 = elementary_symmetric(2, &l).unwrap();
        let r = (n * (n - 1)) as f64 / (rho * rho) - 2.0 * p2;
        let w = curvature_window([r], rho, n);
        if w.holds && l.iter().sum::<f64>() > 0.0 {
            prop_assert!(gamma2_contains(&l).inside);
        }
    }

    #[test]
    fn window_scaling_covariance(r in -5.0f64..10.0, rho in 0.2f64..3.0, t in 0.1f64..10.0, n in 2usize..5) {
        let a = curvature_window([r], rho, n);
        let b = curvature_window([r / (t * t)], t * rho, n);
        let edge = a.lower_margin.abs().min(a.upper_margin.abs());
        prop_assume!(edge > 1e-9);
        prop_assert_eq!(a.holds, b.holds);
    }

    #[test]
    fn rho_range_scales(r in 0.1f64..10.0, spread in 0.0f64..0.3, t in 0.1f64..10.0, n in 2usize..5) {
        let a = rho_max(r, r * (1.0 + spread), n);
        let b = rho_max(r / (t * t), r * (1.0 + spread) / (t * t), n);
        prop_assert_eq!(a.empty, b.empty);
        prop_assert!((b.upper - t * a.upper).abs() <= 1e-12 * b.upper.max(1.0));
    }

    #[test]
    fn small_spheres_never_admissible(r in 0.01f64..0.999, rho_scale in 1.0f64..3.0, n in 2usize..6) {
        let rho = r * rho_scale.max(1.0 + 1e-3);
        let c = nonexistence_certificate(r, rho, n).unwrap();
        prop_assert!(c.required_product < 0.0);
        let want = if n == 2 { Obstruction::Inadmissible } else { Obstruction::Impossible };
        prop_assert_eq!(c.verdict, want);
    }
}
