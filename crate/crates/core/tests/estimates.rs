use desitter::estimates::{
    curvature_window, estimate_report, mean_curvature_bound, nonexistence_certificate, rho_max, tilt_bound, Obstruction,
};
use desitter::grid::{Atlas, Chart};
use desitter::preset::Preset;
use desitter::solver::lorentz_normalize;
use desitter::{Error, GraphFunction, SurfaceGeometry};

fn center(atlas: &Atlas) -> usize {
    let mid = atlas.res / 2;
    let flat = (0..atlas.n).map(|k| mid * atlas.res.pow(k as u32)).sum();
    atlas.node_index(Chart::North, flat)
}

#[test]
fn lemma_saturates_on_umbilic() {
    let atlas = Atlas::new(2, 64).unwrap();
    let s = SurfaceGeometry::from_preset(&atlas, &Preset::Constant(0.5), 1.0).unwrap();
    let b = mean_curvature_bound(&atlas, &s).unwrap();
    let exact = 4.0 * 0.5f64.tanh().powi(2);
    assert!((b.c - exact).abs() < 1e-8, "{}", b.c - exact);
    assert!((b.max_h2 - exact).abs() < 1e-8);
    assert!(b.holds);
}

#[test]
fn lemma_holds_with_slack_on_perturbations() {
    let atlas = Atlas::new(2, 48).unwrap();
    for spec in ["bump:0.5,0.05", "constant:0.6+random:3,0.05,3", "constant:0.4+random:11,0.08,2"] {
        let p: Preset = spec.parse().unwrap();
        let s = SurfaceGeometry::from_preset(&atlas, &p, 1.0).unwrap();
        let b = mean_curvature_bound(&atlas, &s).unwrap();
        eprintln!("{spec}: C {} max H² {} slack {}", b.c, b.max_h2, b.slack);
        assert!(b.holds && b.slack > 0.0, "{spec}");
    }
}

#[test]
fn lemma_rejects_equator() {
    let atlas = Atlas::new(2, 24).unwrap();
    let s = SurfaceGeometry::from_preset(&atlas, &Preset::Equator, 1.0).unwrap();
    assert!(matches!(mean_curvature_bound(&atlas, &s), Err(Error::Hypothesis(_))));
}

#[test]
fn rho_zero_for_unit_sphere() {
    // unit round S² has R = 2
    let r = rho_max(2.0, 2.0, 2);
    assert!((r.upper - 1.0).abs() <= 1e-10);
}

#[test]
fn round_three_spheres_window_sweep() {
    for k in 0..50 {
        let r = 0.5 + 1.5 * k as f64 / 49.0;
        let scal = 6.0 / (r * r);
        let w = curvature_window([scal], 1.0, 3);
        let r2 = r * r;
        assert_eq!(w.holds, 1.0 < r2 && r2 < 2.0, "r = {r}");
    }
}

#[test]
fn certificates() {
    for r in [0.3, 0.5, 0.9] {
        let c3 = nonexistence_certificate(r, 1.0, 3).unwrap();
        assert_eq!(c3.verdict, Obstruction::Impossible);
        let c2 = nonexistence_certificate(r, 1.0, 2).unwrap();
        assert_eq!(c2.verdict, Obstruction::Inadmissible);
        assert_eq!(c2.p2.unwrap(), 1.0 - 1.0 / (r * r));
    }
}

#[test]
fn tilt_bound_after_normalization() {
    let atlas = Atlas::new(2, 32).unwrap();
    let p = center(&atlas);
    for spec in ["constant:0.5", "bump:0.4,0.1", "constant:0.5+random:5,0.1,3"] {
        let pre: Preset = spec.parse().unwrap();
        let f = GraphFunction::from_preset(&atlas, &pre, 1.0).unwrap();
        let s = SurfaceGeometry::new(&atlas, &f).unwrap();
        assert!(matches!(tilt_bound(&atlas, &s, p), Err(Error::NotNormalized { .. })));
        let nz = lorentz_normalize(&atlas, &f, p).unwrap();
        let s2 = SurfaceGeometry::new(&atlas, &nz.f).unwrap();
        let t = tilt_bound(&atlas, &s2, p).unwrap();
        eprintln!("{spec}: {t:?}");
        assert!(t.holds);
        assert!((t.tau_at_basepoint - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn report_bundles_everything() {
    let atlas = Atlas::new(2, 32).unwrap();
    let s = SurfaceGeometry::from_preset(&atlas, &Preset::Constant(0.5), 1.0).unwrap();
    let r = estimate_report(&atlas, &s, None).unwrap();
    assert!(r.verdict && r.window.holds && r.admissible);
    assert!((r.psi_min - 0.4271045).abs() < 1e-7);
    let r = estimate_report(&atlas, &s, Some(center(&atlas))).unwrap();
    assert!(!r.verdict && r.tilt.is_none());
}
