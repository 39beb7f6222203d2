//! Discrete residuals of the structure equations of a spacelike graph, and
//! refinement studies of their convergence.
//!
//! Each residual mixes finite-difference derivatives of computed fields with
//! pointwise closed forms, so that on smooth data it measures truncation
//! error of the grid and vanishes to rounding on constant graphs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::curvature::{gauss_riemann, Connection};
use crate::geometry::SurfaceGeometry;
use crate::grid::{Atlas, ScalarField, TensorField};
use crate::preset::{Jet, Preset};

/// Anything that can produce an exact or discrete jet on a given atlas.
pub trait JetSource {
    fn jet_on(&self, atlas: &Atlas) -> Result<Jet>;
}

impl JetSource for Preset {
    fn jet_on(&self, atlas: &Atlas) -> Result<Jet> {
        Ok(self.jet(atlas))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    FirstOrder,
    SecondOrder,
    GaussCodazzi,
    Simons,
    /// ⟨X_i, X_j⟩ = g_ij and the Gauss formula, from differences of X itself.
    Embedding,
}

impl Suite {
    /// The structure equations proper.
    pub const IDENTITIES: [Suite; 4] = [Suite::FirstOrder, Suite::SecondOrder, Suite::GaussCodazzi, Suite::Simons];
    pub const ALL: [Suite; 5] = [
        Suite::FirstOrder,
        Suite::SecondOrder,
        Suite::GaussCodazzi,
        Suite::Simons,
        Suite::Embedding,
    ];

    pub fn parse(s: &str) -> Result<Suite> {
        match s {
            "first" | "first_order" => Ok(Suite::FirstOrder),
            "second" | "second_order" => Ok(Suite::SecondOrder),
            "gauss_codazzi" | "gauss" | "codazzi" => Ok(Suite::GaussCodazzi),
            "simons" => Ok(Suite::Simons),
            "embedding" => Ok(Suite::Embedding),
            other => Err(Error::Config(format!("unknown identity suite '{other}'"))),
        }
    }
}

/// Pointwise residual magnitude of one identity on one atlas.
#[derive(Debug, Clone)]
pub struct IdentityResidual {
    pub identity: &'static str,
    pub field: ScalarField,
    pub norm_inf: f64,
    pub norm_l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub norm_inf: Vec<f64>,
    pub norm_l2: Vec<f64>,
    pub resolutions: Vec<usize>,
    pub spacing: Vec<f64>,
    /// Least-squares slope of log ‖r‖_∞ against log h; needs ≥ 3 resolutions.
    pub slope: Option<f64>,
    pub warnings: Vec<String>,
}

impl ResidualReport {
    pub fn monotone_decreasing(&self) -> bool {
        self.norm_inf.windows(2).all(|w| w[1] < w[0])
    }
}

/// Contract every slot of `t` with g^{..} and pair with `t` again.
fn g_norm(ginv: &[f64], t: &[f64], n: usize, rank: usize) -> f64 {
    let mut cur = t.to_vec();
    let mut next = vec![0.0; cur.len()];
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        for (idx, nv) in next.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            let base = idx - i * stride;
            *nv = (0..n).map(|a| ginv[i * n + a] * cur[base + a * stride]).sum();
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.iter().zip(t).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

fn summarize(atlas: &Atlas, identity: &'static str, field: ScalarField) -> IdentityResidual {
    let norm_inf = atlas.support().map(|q| field.values[q]).fold(0.0, f64::max);
    let sq = field.map(|v| v * v);
    let norm_l2 = atlas.integrate(&sq).max(0.0).sqrt();
    IdentityResidual {
        identity,
        field,
        norm_inf,
        norm_l2,
    }
}

fn per_node(atlas: &Atlas, f: impl Fn(usize) -> f64 + Sync + Send) -> ScalarField {
    use rayon::prelude::*;
    TensorField::scalar(atlas.n, (0..atlas.len()).into_par_iter().map(f).collect())
}

/// Shared fields for all residuals on one atlas.
pub struct Workspace<'a> {
    pub atlas: &'a Atlas,
    pub surf: SurfaceGeometry,
    pub conn: Connection,
    pub ginv: TensorField,
    /// ∇η from finite differences of η.
    pub deta: TensorField,
}

impl<'a> Workspace<'a> {
    pub fn new(atlas: &'a Atlas, jet: &Jet, rho: f64) -> Result<Self> {
        let surf = SurfaceGeometry::from_jet(atlas, jet, rho)?;
        let conn = Connection::new(atlas, &surf.g);
        let ginv = conn.ginv.clone();
        let deta = atlas.gradient(&surf.eta);
        Ok(Workspace {
            atlas,
            surf,
            conn,
            ginv,
            deta,
        })
    }

    fn raise(&self, q: usize, v: &[f64]) -> Vec<f64> {
        let n = self.atlas.n;
        let gi = self.ginv.at(q);
        (0..n).map(|i| (0..n).map(|j| gi[i * n + j] * v[j]).sum()).collect()
    }

    /// (A²)_ij = A_ik g^{kl} A_lj
    fn a_squared(&self, q: usize) -> Vec<f64> {
        let n = self.atlas.n;
        let a = self.surf.a.at(q);
        let gi = self.ginv.at(q);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += a[i * n + k] * gi[k * n + l] * a[l * n + j];
                    }
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    pub fn first_order(&self) -> Vec<IdentityResidual> {
        let atlas = self.atlas;
        let s = &self.surf;
        let n = atlas.n;
        let d = n + 2;
        let rho2 = s.rho * s.rho;
        let mut out = Vec::new();

        // ∇_iη + ⟨E₀, X_i⟩, with ⟨E₀, X_i⟩ = −X_i⁰
        let f = per_node(atlas, |q| {
            let t = s.tangents.at(q);
            let r: Vec<f64> = (0..n).map(|i| self.deta.at(q)[i] - t[i * d]).collect();
            g_norm(self.ginv.at(q), &r, n, 1)
        });
        out.push(summarize(atlas, "eta_gradient", f));

        // ∇_iτ − A_i^j ∇_jη
        let dtau = atlas.gradient(&s.tau);
        let f = per_node(atlas, |q| {
            let a = s.a.at(q);
            let up = self.raise(q, &exact_deta(s, atlas, q));
            let r: Vec<f64> = (0..n)
                .map(|i| dtau.at(q)[i] - (0..n).map(|j| a[i * n + j] * up[j]).sum::<f64>())
                .collect();
            g_norm(self.ginv.at(q), &r, n, 1)
        });
        out.push(summarize(atlas, "tau_gradient", f));

        // τ² − 1 − ρ⁻²η² − |∇η|²
        let f = per_node(atlas, |q| {
            let (tau, eta) = (s.tau.values[q], s.eta.values[q]);
            let de = self.deta.at(q);
            let up = self.raise(q, de);
            let grad2: f64 = de.iter().zip(&up).map(|(a, b)| a * b).sum();
            (tau * tau - 1.0 - eta * eta / rho2 - grad2).abs()
        });
        out.push(summarize(atlas, "tilt_height_norm", f));

        // E₀ + ∇^kη X_k + τν + ρ⁻²ηX
        let f = per_node(atlas, |q| {
            let up = self.raise(q, self.deta.at(q));
            let (x, nu, t) = (s.x.at(q), s.nu.at(q), s.tangents.at(q));
            let (tau, eta) = (s.tau.values[q], s.eta.values[q]);
            (0..d)
                .map(|a| {
                    let mut v = if a == 0 { 1.0 } else { 0.0 };
                    v += (0..n).map(|k| up[k] * t[k * d + a]).sum::<f64>();
                    v += tau * nu[a] + eta / rho2 * x[a];
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        });
        out.push(summarize(atlas, "e0_decomposition", f));
        out
    }

    pub fn second_order(&self) -> Vec<IdentityResidual> {
        let atlas = self.atlas;
        let s = &self.surf;
        let n = atlas.n;
        let rho2 = s.rho * s.rho;
        let mut out = Vec::new();

        // ∇²η − (τA − ρ⁻²ηg)
        let h_eta = self.conn.hessian(atlas, &s.eta);
        let f = per_node(atlas, |q| {
            let (tau, eta) = (s.tau.values[q], s.eta.values[q]);
            let (a, g) = (s.a.at(q), s.g.at(q));
            let r: Vec<f64> = (0..n * n)
                .map(|k| h_eta.at(q)[k] - tau * a[k] + eta / rho2 * g[k])
                .collect();
            g_norm(self.ginv.at(q), &r, n, 2)
        });
        out.push(summarize(atlas, "eta_hessian", f));

        // ∇²τ − (∇^kη ∇_kA + τA² − ρ⁻²ηA)
        let h_tau = self.conn.hessian(atlas, &s.tau);
        let na = self.conn.nabla(atlas, &s.a);
        let f = per_node(atlas, |q| {
            let (tau, eta) = (s.tau.values[q], s.eta.values[q]);
            let a = s.a.at(q);
            let a2 = self.a_squared(q);
            let up = self.raise(q, self.deta.at(q));
            let nq = na.at(q);
            let r: Vec<f64> = (0..n * n)
                .map(|ij| {
                    let grad: f64 = (0..n).map(|k| up[k] * nq[k * n * n + ij]).sum();
                    h_tau.at(q)[ij] - grad - tau * a2[ij] + eta / rho2 * a[ij]
                })
                .collect();
            g_norm(self.ginv.at(q), &r, n, 2)
        });
        out.push(summarize(atlas, "tau_hessian", f));

        out
    }

    pub fn gauss_codazzi(&self) -> Vec<IdentityResidual> {
        let atlas = self.atlas;
        let s = &self.surf;
        let n = atlas.n;
        let mut out = Vec::new();
        let na = self.conn.nabla(atlas, &s.a);
        let f = per_node(atlas, |q| {
            let t = na.at(q);
            let r: Vec<f64> = (0..n * n * n)
                .map(|kij| {
                    let (k, i, j) = (kij / (n * n), (kij / n) % n, kij % n);
                    t[kij] - t[(i * n + k) * n + j]
                })
                .collect();
            g_norm(self.ginv.at(q), &r, n, 3)
        });
        out.push(summarize(atlas, "codazzi", f));

        let riem = self.conn.riemann(atlas);
        let f = per_node(atlas, |q| {
            let rhs = gauss_riemann(s.g.at(q), s.a.at(q), s.rho);
            let r: Vec<f64> = riem.at(q).iter().zip(&rhs).map(|(a, b)| a - b).collect();
            g_norm(self.ginv.at(q), &r, n, 4)
        });
        out.push(summarize(atlas, "gauss", f));
        out
    }

    pub fn simons(&self) -> IdentityResidual {
        let atlas = self.atlas;
        let s = &self.surf;
        let n = atlas.n;
        let nn = n * n;
        let rho2 = s.rho * s.rho;
        let na = self.conn.nabla(atlas, &s.a);
        let nna = self.conn.nabla(atlas, &na);
        let lap_a = self.conn.trace(&nna);
        let h_h = self.conn.hessian(atlas, &s.h);
        let f = per_node(atlas, |q| {
            let (a, g) = (s.a.at(q), s.g.at(q));
            let a2 = self.a_squared(q);
            let (h, na2) = (s.h.values[q], s.norm_a2.values[q]);
            let r: Vec<f64> = (0..nn)
                .map(|ij| {
                    let lhs = lap_a.at(q)[ij] - h_h.at(q)[ij];
                    let rhs = na2 * a[ij] - h * a2[ij] + (n as f64 * a[ij] - h * g[ij]) / rho2;
                    lhs - rhs
                })
                .collect();
            g_norm(self.ginv.at(q), &r, n, 2)
        });
        summarize(atlas, "simons", f)
    }

    pub fn embedding(&self) -> Vec<IdentityResidual> {
        let atlas = self.atlas;
        let s = &self.surf;
        let n = atlas.n;
        let d = n + 2;
        let rho2 = s.rho * s.rho;
        let mut out = Vec::new();

        // ⟨X_i, X_j⟩ from differentiated embedding against g
        let dx: Vec<TensorField> = (0..d)
            .map(|a| {
                let comp = TensorField::scalar(n, (0..atlas.len()).map(|q| s.x.at(q)[a]).collect());
                atlas.gradient(&comp)
            })
            .collect();
        let f = per_node(atlas, |q| {
            let mut r = s.g.at(q).to_vec();
            for i in 0..n {
                for j in 0..n {
                    let xi: Vec<f64> = dx.iter().map(|c| c.at(q)[i]).collect();
                    let xj: Vec<f64> = dx.iter().map(|c| c.at(q)[j]).collect();
                    r[i * n + j] -= crate::minkowski::inner(&xi, &xj);
                }
            }
            g_norm(self.ginv.at(q), &r, n, 2)
        });
        out.push(summarize(atlas, "isometry", f));

        // Gauss formula: ∂_i∂_j X − Γ^k_ij X_k + A_ij ν + ρ⁻² g_ij X = 0
        let d2x: Vec<TensorField> = (0..d)
            .map(|a| {
                let comp = TensorField::scalar(n, (0..atlas.len()).map(|q| s.x.at(q)[a]).collect());
                atlas.differentiate(&comp).1
            })
            .collect();
        let f = per_node(atlas, |q| {
            let c = self.conn.c.at(q);
            let t = s.tangents.at(q);
            let (x, nu, a, g) = (s.x.at(q), s.nu.at(q), s.a.at(q), s.g.at(q));
            let gi = self.ginv.at(q);
            let comps: Vec<Vec<f64>> = (0..d)
                .map(|b| {
                    (0..n * n)
                        .map(|ij| {
                            let (i, j) = (ij / n, ij % n);
                            let mut v = d2x[b].at(q)[ij];
                            for k in 0..n {
                                v -= c[(k * n + i) * n + j] * t[k * d + b];
                            }
                            v + a[ij] * nu[b] + g[ij] / rho2 * x[b]
                        })
                        .collect()
                })
                .collect();
            comps.iter().map(|r| g_norm(gi, r, n, 2).powi(2)).sum::<f64>().sqrt()
        });
        out.push(summarize(atlas, "gauss_formula", f));
        out
    }

    pub fn run(&self, suite: Suite) -> Vec<IdentityResidual> {
        match suite {
            Suite::FirstOrder => self.first_order(),
            Suite::SecondOrder => self.second_order(),
            Suite::GaussCodazzi => self.gauss_codazzi(),
            Suite::Simons => vec![self.simons()],
            Suite::Embedding => self.embedding(),
        }
    }
}

/// ∇η = ρ cosh u Du from the jet.
fn exact_deta(s: &SurfaceGeometry, _atlas: &Atlas, q: usize) -> Vec<f64> {
    let u = s.jet.u.values[q];
    s.jet.du.at(q).iter().map(|v| s.rho * u.cosh() * v).collect()
}

pub fn verify_first_order(atlas: &Atlas, jet: &Jet, rho: f64) -> Result<Vec<IdentityResidual>> {
    Ok(Workspace::new(atlas, jet, rho)?.first_order())
}

pub fn verify_second_order(atlas: &Atlas, jet: &Jet, rho: f64) -> Result<Vec<IdentityResidual>> {
    Ok(Workspace::new(atlas, jet, rho)?.second_order())
}

pub fn verify_gauss_codazzi(atlas: &Atlas, jet: &Jet, rho: f64) -> Result<Vec<IdentityResidual>> {
    Ok(Workspace::new(atlas, jet, rho)?.gauss_codazzi())
}

pub fn verify_simons(atlas: &Atlas, jet: &Jet, rho: f64) -> Result<IdentityResidual> {
    Ok(Workspace::new(atlas, jet, rho)?.simons())
}

/// Least-squares slope of log y against log x.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(1e-300).ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the chosen suites at each resolution and fits convergence slopes.
pub fn refinement_study(
    source: &dyn JetSource,
    rho: f64,
    n: usize,
    resolutions: &[usize],
    order: usize,
    suites: &[Suite],
) -> Result<Vec<ResidualReport>> {
    if resolutions.is_empty() {
        return Err(Error::Config("at least one resolution is required".into()));
    }
    let mut reports: Vec<ResidualReport> = Vec::new();
    for &res in resolutions {
        let atlas = Atlas::with_order(n, res, order)?;
        let jet = source.jet_on(&atlas)?;
        let ws = Workspace::new(&atlas, &jet, rho)?;
        for &suite in suites {
            for r in ws.run(suite) {
                let rep = match reports.iter_mut().find(|x| x.identity == r.identity) {
                    Some(x) => x,
                    None => {
                        reports.push(ResidualReport {
                            identity: r.identity.to_string(),
                            norm_inf: Vec::new(),
                            norm_l2: Vec::new(),
                            resolutions: Vec::new(),
                            spacing: Vec::new(),
                            slope: None,
                            warnings: Vec::new(),
                        });
                        reports.last_mut().unwrap()
                    }
                };
                rep.norm_inf.push(r.norm_inf);
                rep.norm_l2.push(r.norm_l2);
                rep.resolutions.push(res);
                rep.spacing.push(atlas.h);
                if suite == Suite::Simons && res < 48 {
                    rep.warnings.push(format!(
                        "resolution {res} is below 48; fourth derivatives are poorly resolved"
                    ));
                }
            }
        }
    }
    for r in &mut reports {
        if r.resolutions.len() >= 3 {
            r.slope = Some(fitted_slope(&r.spacing, &r.norm_inf));
        }
    }
    Ok(reports)
}
