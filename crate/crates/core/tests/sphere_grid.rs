use std::f64::consts::PI;

use desitter::grid::diameter::geodesic_diameter;
use desitter::grid::Atlas;

fn laplacian_error(atlas: &Atlas, f: impl Fn(&[f64]) -> f64, eig: f64) -> f64 {
    let u = atlas.sample(&f);
    let (_, d2) = atlas.differentiate(&u);
    let n = atlas.n;
    atlas
        .support()
        .map(|q| {
            let inv = (-2.0 * atlas.conformal_log(q)).exp();
            let lap: f64 = (0..n).map(|i| d2.at(q)[i * n + i]).sum::<f64>() * inv;
            (lap - eig * u.values[q]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn area_is_exact_at_every_resolution() {
    for res in [16, 20, 32, 47, 64] {
        let a = Atlas::new(2, res).unwrap();
        let one = a.sample(|_| 1.0);
        assert!((a.integrate(&one) - 4.0 * PI).abs() < 1e-8, "res {res}");
        let z = a.sample(|xi| xi[2]);
        assert!(a.integrate(&z).abs() < 1e-10);
        let z2 = a.sample(|xi| xi[2] * xi[2]);
        assert!((a.integrate(&z2) - 4.0 * PI / 3.0).abs() < 1e-8);
    }
}

#[test]
fn three_sphere_volume() {
    let a = Atlas::new(3, 32).unwrap();
    let one = a.sample(|_| 1.0);
    assert!((a.integrate(&one) - 2.0 * PI * PI).abs() < 1e-6);
}

#[test]
fn smooth_nonpolynomial_integral() {
    // ∫ e^{ξ₃} over S² = 2π (e − 1/e)
    let a = Atlas::new(2, 48).unwrap();
    let f = a.sample(|xi| xi[2].exp());
    let exact = 2.0 * PI * (1f64.exp() - (-1f64).exp());
    assert!((a.integrate(&f) - exact).abs() < 1e-8);
}

#[test]
fn harmonics_are_eigenfunctions_at_fourth_order() {
    let l1 = |xi: &[f64]| xi[2];
    let l2 = |xi: &[f64]| xi[0] * xi[1] + 0.5 * (3.0 * xi[2] * xi[2] - 1.0);
    let mut errs = Vec::new();
    for res in [32, 64] {
        let a = Atlas::new(2, res).unwrap();
        let e1 = laplacian_error(&a, l1, -2.0);
        let e2 = laplacian_error(&a, l2, -6.0);
        errs.push((a.h, e1, e2));
    }
    let (h0, a0, b0) = errs[0];
    let (h1, a1, b1) = errs[1];
    let s1 = (a0 / a1).ln() / (h0 / h1).ln();
    let s2 = (b0 / b1).ln() / (h0 / h1).ln();
    assert!(a1 < 1e-4 && b1 < 1e-3, "{errs:?}");
    assert!(s1 > 3.5 && s2 > 3.5, "slopes {s1} {s2}");
}

#[test]
fn second_order_option() {
    let a = Atlas::with_order(2, 48, 2).unwrap();
    let e = laplacian_error(&a, |xi| xi[2], -2.0);
    assert!(e < 1e-2);
}

#[test]
fn round_diameter() {
    let a = Atlas::new(2, 64).unwrap();
    let d = geodesic_diameter(&a, &a.sigma_field()).unwrap();
    assert!((d - PI).abs() < 0.05 * PI, "{d}");
    let c: f64 = 0.5;
    let s = (2.0 * c.cosh()).powi(2);
    let g = a.sigma_field().map(|v| v * s);
    let d2 = geodesic_diameter(&a, &g).unwrap();
    assert!((d2 - 2.0 * PI * c.cosh()).abs() < 0.05 * 2.0 * PI * c.cosh());
    assert!((d2 / d - 2.0 * c.cosh()).abs() < 1e-12);
}

#[test]
fn degenerate_metric_rejected() {
    let a = Atlas::new(2, 16).unwrap();
    let g = a.sigma_field().map(|v| -v);
    assert!(geodesic_diameter(&a, &g).is_err());
}
