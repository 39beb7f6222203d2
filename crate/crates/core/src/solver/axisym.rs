//! Rotationally symmetric isometric embeddings of (S², ds² + φ(s)²dθ²)
//! into S^{2,1}_ρ by shooting.
//!
//! The meridian is X(s) = (ρ sinh u, ρ cosh u (sin Θ, 0, cos Θ)) rotated
//! about the polar axis. Unit speed is built in through a rapidity β:
//! ρu′ = sinh β, ρ cosh u Θ′ = cosh β. Differentiating the constraint
//! ρ cosh u sin Θ = φ twice gives a first-order system for (u, Θ, β).
//! Pole heights are fixed equal, which removes the boost along the axis.

use serde::Serialize;

use crate::error::{Error, Result};

/// Warped-product profile φ on [0, L] with φ(0) = φ(L) = 0.
pub trait Profile {
    fn length(&self) -> f64;
    /// (φ, φ′, φ″) at arclength s.
    fn eval(&self, s: f64) -> (f64, f64, f64);
}

/// Round sphere of radius r: φ(s) = r sin(s/r).
#[derive(Debug, Clone, Copy)]
pub struct RoundProfile {
    pub r: f64,
}

impl Profile for RoundProfile {
    fn length(&self) -> f64 {
        std::f64::consts::PI * self.r
    }

    fn eval(&self, s: f64) -> (f64, f64, f64) {
        let t = s / self.r;
        (self.r * t.sin(), t.cos(), -t.sin() / self.r)
    }
}

/// The same profile read from the far pole.
struct Reversed<'a, P: Profile + ?Sized>(&'a P);

impl<P: Profile + ?Sized> Profile for Reversed<'_, P> {
    fn length(&self) -> f64 {
        self.0.length()
    }

    fn eval(&self, s: f64) -> (f64, f64, f64) {
        let (f, d1, d2) = self.0.eval(self.0.length() - s);
        (f, -d1, d2)
    }
}

#[derive(Debug, Clone)]
pub struct AxisymConfig {
    /// RK4 steps per half meridian.
    pub steps: usize,
    /// Closure tolerance on max(|Δu|, |ΔΘ|, |Δβ|) at the midpoint.
    pub tolerance: f64,
    pub max_secant: usize,
    /// Start of integration away from each pole.
    pub pole_offset: f64,
}

impl Default for AxisymConfig {
    fn default() -> Self {
        AxisymConfig {
            steps: 4000,
            tolerance: 1e-8,
            max_secant: 40,
            pole_offset: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meridian {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    /// Polar angle of the radial direction.
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    /// η = ρ sinh u.
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisymSolution {
    pub rho: f64,
    pub pole_height: f64,
    pub closure_defect: f64,
    /// max |ρ cosh u sin Θ − φ| along the meridian.
    pub constraint_defect: f64,
    pub secant_iterations: usize,
    pub meridian: Meridian,
}

type State = [f64; 3];

fn rhs<P: Profile + ?Sized>(p: &P, rho: f64, s: f64, y: &State) -> State {
    let [u, th, b] = *y;
    let (ch, sh) = (u.cosh(), u.sinh());
    let (cb, sb) = (b.cosh(), b.sinh());
    let (ct, st) = (th.cos(), th.sin());
    let (_, _, f2) = p.eval(s);
    let lam = ct * sb + sh * st * cb;
    let q = -st * cb * cb / (rho * ch) + ch * st * sb * sb / rho + sh * ct * cb * sb / (rho * ch);
    // λ vanishes identically on the totally geodesic slice u = β = 0
    let db = if lam == 0.0 { 0.0 } else { (f2 - q) / lam };
    [sb / rho, cb / (rho * ch), db]
}

/// Leading-order data at the pole: β ≈ β₁ s with
/// β₁ = √(ρ⁻² − K) − tanh(u₀)/ρ, where K = −φ‴(0) is the pole curvature.
fn pole_start(u0: f64, rho: f64, k: f64, s: f64) -> Option<State> {
    let disc = rho.powi(-2) - k;
    if disc < -1e-10 * rho.powi(-2) {
        return None;
    }
    let disc = disc.max(0.0);
    let b1 = disc.sqrt() - u0.tanh() / rho;
    Some([u0 + b1 * s * s / (2.0 * rho), s / (rho * u0.cosh()), b1 * s])
}

fn pole_curvature<P: Profile + ?Sized>(p: &P) -> f64 {
    // K = −lim φ″/φ, with one Richardson step
    let e = 1e-3 * p.length();
    let k = |s: f64| {
        let (f, _, f2) = p.eval(s);
        -f2 / f
    };
    (4.0 * k(e) - k(2.0 * e)) / 3.0
}

fn integrate<P: Profile + ?Sized>(
    p: &P,
    rho: f64,
    u0: f64,
    k: f64,
    cfg: &AxisymConfig,
    keep: bool,
) -> Option<(State, Vec<(f64, State)>)> {
    let s0 = cfg.pole_offset * p.length();
    let mut y = pole_start(u0, rho, k, s0)?;
    let end = 0.5 * p.length();
    let h = (end - s0) / cfg.steps as f64;
    let mut s = s0;
    let mut path = Vec::new();
    if keep {
        path.push((s, y));
    }
    for _ in 0..cfg.steps {
        let k1 = rhs(p, rho, s, &y);
        let y2: State = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = rhs(p, rho, s + 0.5 * h, &y2);
        let y3: State = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = rhs(p, rho, s + 0.5 * h, &y3);
        let y4: State = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = rhs(p, rho, s + h, &y4);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += h;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if keep {
            path.push((s, y));
        }
    }
    Some((y, path))
}

/// Midpoint mismatch (Δu, ΔΘ, Δβ) for pole height u₀.
fn mismatch<P: Profile + ?Sized>(p: &P, rho: f64, u0: f64, kn: f64, ks: f64, cfg: &AxisymConfig) -> Option<State> {
    let (a, _) = integrate(p, rho, u0, kn, cfg, false)?;
    let (b, _) = integrate(&Reversed(p), rho, u0, ks, cfg, false)?;
    Some([a[0] - b[0], a[1] - (std::f64::consts::PI - b[1]), a[2] + b[2]])
}

fn defect(m: &State) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Shooting solve for the meridian of an axisymmetric embedding.
///
/// Fails with a non-convergence error when the two halves cannot be
/// matched; for round spheres of radius r < ρ this happens already at the
/// pole, where the required rapidity is imaginary.
pub fn solve_axisymmetric(profile: &dyn Profile, rho: f64, cfg: &AxisymConfig) -> Result<AxisymSolution> {
    if !(rho > 0.0) {
        return Err(Error::Config("rho must be positive".into()));
    }
    let l = profile.length();
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Config(format!("profile length must be positive (got {l})")));
    }
    let (f0, d0, _) = profile.eval(0.0);
    let (fl, dl, _) = profile.eval(l);
    if f0.abs() > 1e-12 || fl.abs() > 1e-10 || (d0 - 1.0).abs() > 1e-10 || (dl + 1.0).abs() > 1e-10 {
        return Err(Error::Config(
            "profile must satisfy φ(0) = φ(L) = 0 and φ′(0) = 1 = −φ′(L)".into(),
        ));
    }
    let kn = pole_curvature(profile);
    let ks = pole_curvature(&Reversed(profile));
    let kmax = kn.max(ks);
    if kmax > rho.powi(-2) * (1.0 + 1e-10) {
        return Err(Error::NonConvergence {
            iterations: 0,
            residual: f64::INFINITY,
            reason: format!(
                "nonexistence suspected: pole curvature {kmax:.10} exceeds ρ⁻² = {:.10}, so the \
                 principal curvatures there would need λ₁λ₂ = ρ⁻² − K < 0",
                rho.powi(-2)
            ),
        });
    }
    let t0 = rho * (rho.powi(-2) - kn.max(0.0).min(rho.powi(-2))).sqrt();
    let mut x0 = if t0 < 1.0 { t0.atanh() } else { 1.0 };
    let fail = |it: usize, res: f64, why: &str| Error::NonConvergence {
        iterations: it,
        residual: res,
        reason: format!("nonexistence suspected: {why}"),
    };
    let mut m0 = mismatch(profile, rho, x0, kn, ks, cfg).ok_or_else(|| fail(0, f64::INFINITY, "integration broke down"))?;
    let mut x1 = x0 + 1e-3;
    let mut iters = 0;
    let mut best = (x0, m0);
    while defect(&best.1) > cfg.tolerance && iters < cfg.max_secant {
        iters += 1;
        let m1 = mismatch(profile, rho, x1, kn, ks, cfg)
            .ok_or_else(|| fail(iters, defect(&best.1), "integration broke down"))?;
        if defect(&m1) < defect(&best.1) {
            best = (x1, m1);
        }
        let slope = (m1[1] - m0[1]) / (x1 - x0);
        if !(slope.is_finite() && slope != 0.0) {
            break;
        }
        let x2 = x1 - m1[1] / slope;
        (x0, m0, x1) = (x1, m1, x2);
    }
    let closure = defect(&best.1);
    if !(closure <= cfg.tolerance) {
        return Err(fail(iters, closure, "midpoint matching did not close"));
    }
    let u0 = best.0;
    let (_, north) = integrate(profile, rho, u0, kn, cfg, true).expect("integrated before");
    let (_, south) = integrate(&Reversed(profile), rho, u0, ks, cfg, true).expect("integrated before");
    let mut m = Meridian {
        s: vec![],
        u: vec![],
        theta: vec![],
        beta: vec![],
        eta: vec![],
    };
    let mut push = |s: f64, y: State| {
        m.s.push(s);
        m.u.push(y[0]);
        m.theta.push(y[1]);
        m.beta.push(y[2]);
        m.eta.push(rho * y[0].sinh());
    };
    for &(s, y) in &north {
        push(s, y);
    }
    for &(s, y) in south.iter().rev().skip(1) {
        push(l - s, [y[0], std::f64::consts::PI - y[1], -y[2]]);
    }
    let constraint_defect = m
        .s
        .iter()
        .zip(m.u.iter().zip(&m.theta))
        .map(|(&s, (&u, &t))| (rho * u.cosh() * t.sin() - profile.eval(s).0).abs())
        .fold(0.0, f64::max);
    Ok(AxisymSolution {
        rho,
        pole_height: u0,
        closure_defect: closure,
        constraint_defect,
        secant_iterations: iters,
        meridian: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn umbilic_profiles_close() {
        for c in [0.0, 0.5] {
            let p = RoundProfile { r: f64::cosh(c) };
            let s = solve_axisymmetric(&p, 1.0, &AxisymConfig::default()).unwrap();
            assert!(s.closure_defect <= 1e-8);
            let err = s.meridian.u.iter().map(|u| (u - c).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "c = {c}: {err}");
            assert!(s.constraint_defect < 1e-8);
        }
    }

    struct Wobbly {
        r: f64,
        e: f64,
    }

    impl Profile for Wobbly {
        fn length(&self) -> f64 {
            std::f64::consts::PI * self.r
        }

        // φ = r sin t (1 + e sin²t), t = s/r
        fn eval(&self, s: f64) -> (f64, f64, f64) {
            let (r, e) = (self.r, self.e);
            let t = s / r;
            let (st, ct) = t.sin_cos();
            let f = r * (st + e * st.powi(3));
            let f1 = ct + 3.0 * e * st * st * ct;
            let f2 = (-st + 3.0 * e * (2.0 * st * ct * ct - st.powi(3))) / r;
            (f, f1, f2)
        }
    }

    #[test]
    fn non_round_profile_closes() {
        let p = Wobbly { r: 1.4, e: 0.05 };
        let s = solve_axisymmetric(&p, 1.0, &AxisymConfig::default()).unwrap();
        assert!(s.closure_defect <= 1e-8);
        assert!(s.constraint_defect < 1e-7, "{}", s.constraint_defect);
        let spread = s.meridian.u.iter().fold(0.0f64, |a, b| a.max(*b)) - s.meridian.u.iter().fold(9.0f64, |a, b| a.min(*b));
        assert!(spread > 1e-3);
    }

    #[test]
    fn small_sphere_fails() {
        let e = solve_axisymmetric(&RoundProfile { r: 0.9 }, 1.0, &AxisymConfig::default()).unwrap_err();
        assert!(matches!(e, Error::NonConvergence { .. }));
        assert!(e.to_string().contains("nonexistence suspected"));
    }
}
