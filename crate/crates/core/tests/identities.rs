use desitter::grid::Atlas;
use desitter::preset::Preset;
use desitter::verify::{refinement_study, Suite, Workspace};

fn constant_residuals(c: f64, tol: f64) {
    let atlas = Atlas::new(2, 48).unwrap();
    let jet = Preset::Constant(c).jet(&atlas);
    let ws = Workspace::new(&atlas, &jet, 1.0).unwrap();
    for suite in Suite::IDENTITIES {
        for r in ws.run(suite) {
            assert!(r.norm_inf <= tol, "{} = {:e} for u ≡ {c}", r.identity, r.norm_inf);
        }
    }
}

#[test]
fn equator_residuals_vanish() {
    constant_residuals(0.0, 1e-10);
}

#[test]
fn constant_graph_residuals_vanish() {
    constant_residuals(0.5, 1e-9);
}

#[test]
fn bump_converges_at_design_order() {
    let p: Preset = "bump:0.3,0.1".parse().unwrap();
    let reps = refinement_study(&p, 1.0, 2, &[32, 48, 64], 4, &Suite::ALL).unwrap();
    for r in &reps {
        eprintln!("{:18} {:?} slope {:?}", r.identity, r.norm_inf, r.slope);
    }
    for r in &reps {
        let s = r.slope.unwrap();
        assert!(s >= 1.5, "{} slope {s}", r.identity);
        assert!(r.monotone_decreasing(), "{} {:?}", r.identity, r.norm_inf);
    }
}
