//! Named graph functions with exact derivatives.
//!
//! A preset is a polynomial F on the ambient R^{n+1} restricted to the unit
//! sphere, u(ξ) = F(ξ). Grammar: `constant:c`, `equator`, `bump:a,b`
//! (u = a + b·ξ_{n+1}), `random:seed,amplitude,bandlimit`, and sums of
//! these joined by `+`.

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::multi_indices;
use crate::grid::{sphere_jet, Atlas, TensorField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Preset {
    Constant(f64),
    Equator,
    Bump { a: f64, b: f64 },
    Random { seed: u64, amplitude: f64, bandlimit: usize },
    Sum(Vec<Preset>),
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Constant(c) => write!(f, "constant:{c}"),
            Preset::Equator => write!(f, "equator"),
            Preset::Bump { a, b } => write!(f, "bump:{a},{b}"),
            Preset::Random { seed, amplitude, bandlimit } => {
                write!(f, "random:{seed},{amplitude},{bandlimit}")
            }
            Preset::Sum(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", s.join("+"))
            }
        }
    }
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("preset: cannot parse {what} from '{s}'")))
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('+').map(str::trim).collect();
        if parts.len() > 1 {
            return Ok(Preset::Sum(parts.iter().map(|p| p.parse()).collect::<Result<_>>()?));
        }
        let (name, args) = match s.trim().split_once(':') {
            Some((a, b)) => (a.trim(), b.split(',').map(str::trim).collect::<Vec<_>>()),
            None => (s.trim(), Vec::new()),
        };
        let want = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!("preset '{name}' takes {k} argument(s), got '{s}'")))
            }
        };
        match name {
            "constant" | "const" => {
                want(1)?;
                Ok(Preset::Constant(num(args[0], "constant")?))
            }
            "equator" => {
                if !(args.is_empty() || args == [""]) {
                    return Err(Error::Config("preset 'equator' takes no arguments".into()));
                }
                Ok(Preset::Equator)
            }
            "bump" => {
                want(2)?;
                Ok(Preset::Bump {
                    a: num(args[0], "a")?,
                    b: num(args[1], "b")?,
                })
            }
            "random" => {
                want(3)?;
                let bandlimit: usize = num(args[2], "bandlimit")?;
                if bandlimit == 0 {
                    return Err(Error::Config("random preset needs bandlimit ≥ 1".into()));
                }
                Ok(Preset::Random {
                    seed: num(args[0], "seed")?,
                    amplitude: num(args[1], "amplitude")?,
                    bandlimit,
                })
            }
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Polynomial in n+1 variables: Σ c_α ξ^α.
#[derive(Debug, Clone)]
struct Poly {
    terms: Vec<(f64, Vec<usize>)>,
}

impl Poly {
    /// value, gradient, Hessian (row-major)
    fn eval(&self, xi: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let d = xi.len();
        let mut v = 0.0;
        let mut g = vec![0.0; d];
        let mut hs = vec![0.0; d * d];
        let pw = |x: f64, k: i64| if k < 0 { 0.0 } else { x.powi(k as i32) };
        for (c, al) in &self.terms {
            let al: Vec<i64> = al.iter().map(|&a| a as i64).collect();
            let mono = |shift: &dyn Fn(usize) -> i64| -> f64 {
                (0..d).map(|a| pw(xi[a], al[a] - shift(a))).product()
            };
            v += c * mono(&|_| 0);
            for a in 0..d {
                if al[a] == 0 {
                    continue;
                }
                g[a] += c * al[a] as f64 * mono(&|b| (b == a) as i64);
                for b in 0..d {
                    if a == b {
                        if al[a] >= 2 {
                            hs[a * d + a] += c * (al[a] * (al[a] - 1)) as f64 * mono(&|e| 2 * (e == a) as i64);
                        }
                    } else if al[b] > 0 {
                        hs[a * d + b] += c
                            * (al[a] * al[b]) as f64
                            * mono(&|e| (e == a) as i64 + (e == b) as i64);
                    }
                }
            }
        }
        (v, g, hs)
    }
}

impl Preset {
    fn poly(&self, n: usize) -> Poly {
        let d = n + 1;
        let unit = |k: usize| -> Vec<usize> {
            let mut a = vec![0; d];
            a[k] = 1;
            a
        };
        match self {
            Preset::Constant(c) => Poly { terms: vec![(*c, vec![0; d])] },
            Preset::Equator => Poly { terms: vec![] },
            Preset::Bump { a, b } => Poly {
                terms: vec![(*a, vec![0; d]), (*b, unit(n))],
            },
            Preset::Random { seed, amplitude, bandlimit } => {
                let mut rng = StdRng::seed_from_u64(*seed);
                let mut terms = Vec::new();
                for deg in 1..=*bandlimit {
                    for al in multi_indices(d, deg) {
                        terms.push((rng.gen_range(-1.0..1.0), al));
                    }
                }
                let total: f64 = terms.iter().map(|(c, _)| f64::abs(*c)).sum();
                for t in &mut terms {
                    t.0 *= amplitude / total;
                }
                Poly { terms }
            }
            Preset::Sum(parts) => Poly {
                terms: parts.iter().flat_map(|p| p.poly(n).terms).collect(),
            },
        }
    }

    /// u(ξ) at one point of the sphere.
    pub fn value(&self, xi: &[f64]) -> f64 {
        self.poly(xi.len() - 1).eval(xi).0
    }

    /// Exact (u, Du, D²u) on the atlas; D²u is the σ-covariant Hessian.
    pub fn jet(&self, atlas: &Atlas) -> Jet {
        let n = atlas.n;
        let poly = self.poly(n);
        let len = atlas.len();
        let mut u = TensorField::zeros(n, 0, len);
        let mut du = TensorField::zeros(n, 1, len);
        let mut d2u = TensorField::zeros(n, 2, len);
        for q in 0..len {
            let xi = atlas.sphere_point(q);
            let (d1, d2) = sphere_jet(atlas.chart_of(q), atlas.coord(q));
            let (v, g, hs) = poly.eval(&xi);
            let d = n + 1;
            u.values[q] = v;
            let mut p = vec![0.0; n];
            for i in 0..n {
                p[i] = (0..d).map(|a| g[a] * d1[i][a]).sum();
            }
            let gam = atlas.christoffel(q);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..d {
                        s += g[a] * d2[i][j][a];
                        for b in 0..d {
                            s += d1[i][a] * hs[a * d + b] * d1[j][b];
                        }
                    }
                    for k in 0..n {
                        s -= gam[(k * n + i) * n + j] * p[k];
                    }
                    d2u.values[(q * n + i) * n + j] = s;
                }
            }
            du.at_mut(q).copy_from_slice(&p);
        }
        Jet { u, du, d2u }
    }

    pub fn sample(&self, atlas: &Atlas) -> TensorField {
        let poly = self.poly(atlas.n);
        atlas.sample(|xi| poly.eval(xi).0)
    }
}

/// A graph function together with its first and second σ-covariant derivatives.
#[derive(Debug, Clone)]
pub struct Jet {
    pub u: TensorField,
    pub du: TensorField,
    pub d2u: TensorField,
}

impl Jet {
    /// Finite-difference jet of a sampled field.
    pub fn from_field(atlas: &Atlas, u: &TensorField) -> Jet {
        let (du, d2u) = atlas.differentiate(u);
        Jet { u: u.clone(), du, d2u }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["constant:0.5", "equator", "bump:0.3,0.1", "random:7,0.05,3", "constant:0.5+random:1,0.1,2"] {
            let p: Preset = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("wobble:1".parse::<Preset>().is_err());
        assert!("bump:1".parse::<Preset>().is_err());
        assert!("random:1,0.1,0".parse::<Preset>().is_err());
    }

    #[test]
    fn random_is_bounded_and_deterministic() {
        let p: Preset = "random:42,0.2,4".parse().unwrap();
        let a = Atlas::new(2, 16).unwrap();
        let f = p.sample(&a);
        assert!(f.values.iter().all(|v| v.abs() <= 0.2 + 1e-15));
        assert_eq!(f, p.sample(&a));
    }

    #[test]
    fn exact_jet_matches_differences() {
        let a = Atlas::new(2, 48).unwrap();
        let p: Preset = "bump:0.3,0.1+random:3,0.1,3".parse().unwrap();
        let exact = p.jet(&a);
        let fd = Jet::from_field(&a, &exact.u);
        let err = a
            .support()
            .map(|q| {
                exact.d2u.at(q).iter().zip(fd.d2u.at(q)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }
}
