//! Intrinsic diameter estimate by shortest paths on the grid graph.
//!
//! Graph distances over-estimate geodesic distances by a relative amount set
//! by the angular spacing of the edge directions (about 1–2% here) plus O(h).

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::{invert, sphere_to_chart, Atlas, Chart, Sym2Field, BLEND_INNER};
use crate::error::{Error, Result};

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive integer directions with entries in [−2, 2], one of each ± pair.
fn directions(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 5i64.pow(n as u32);
    for m in 0..total {
        let mut rem = m;
        let d: Vec<i64> = (0..n)
            .map(|_| {
                let v = rem % 5 - 2;
                rem /= 5;
                v
            })
            .collect();
        let g = d.iter().fold(0, |acc, &v| gcd(acc, v));
        if g != 1 {
            continue;
        }
        // keep the representative whose first nonzero entry is positive
        if d.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(d);
        }
    }
    out
}

fn quad_form(g: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * v[i] * v[j];
        }
    }
    s
}

fn check_positive(atlas: &Atlas, g: &Sym2Field) -> Result<()> {
    let n = atlas.n;
    for q in 0..atlas.len() {
        if atlas.is_receiver(q) {
            continue;
        }
        let m = nalgebra::DMatrix::from_row_slice(n, n, g.at(q));
        if !m.iter().all(|v| v.is_finite()) || m.cholesky().is_none() {
            return Err(Error::DegenerateMetric {
                node: q,
                detail: "metric is not positive definite".into(),
            });
        }
    }
    Ok(())
}

/// Max over seed points (poles and ±e_k) of the graph eccentricity under `g`.
pub fn geodesic_diameter(atlas: &Atlas, g: &Sym2Field) -> Result<f64> {
    assert_eq!(g.rank, 2);
    check_positive(atlas, g)?;
    let n = atlas.n;
    let res = atlas.res as i64;
    let mut graph = UnGraph::<(), f64>::new_undirected();
    let vertex: Vec<Option<NodeIndex>> = (0..atlas.len())
        .map(|q| (!atlas.is_receiver(q)).then(|| graph.add_node(())))
        .collect();

    let dirs = directions(n);
    let strides: Vec<i64> = (0..n).map(|k| res.pow(k as u32)).collect();
    for q in 0..atlas.len() {
        let Some(vq) = vertex[q] else { continue };
        let idx = atlas.grid_index(q);
        for d in &dirs {
            let mut off = 0i64;
            let mut inside = true;
            for k in 0..n {
                let t = idx[k] as i64 + d[k];
                inside &= (0..res).contains(&t);
                off += d[k] * strides[k];
            }
            if !inside {
                continue;
            }
            let p = (q as i64 + off) as usize;
            let Some(vp) = vertex[p] else { continue };
            let dx: Vec<f64> = d.iter().map(|&v| v as f64 * atlas.h).collect();
            let gbar: Vec<f64> = g.at(q).iter().zip(g.at(p)).map(|(a, b)| 0.5 * (a + b)).collect();
            graph.add_edge(vq, vp, quad_form(&gbar, &dx).sqrt());
        }

        // links into the other chart across the overlap band
        let x = atlas.coord(q);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if atlas.chart_of(q) == Chart::North && r2 > BLEND_INNER * BLEND_INNER {
            let y = invert(x);
            let base: Vec<i64> = y
                .iter()
                .map(|&v| ((v + atlas.half_width) / atlas.h).floor() as i64)
                .collect();
            for corner in 0..(1usize << n) {
                let mut flat = 0i64;
                let mut dy = vec![0.0; n];
                let mut inside = true;
                for k in 0..n {
                    let t = base[k] + ((corner >> k) & 1) as i64;
                    inside &= (0..res).contains(&t);
                    flat += t * strides[k];
                    dy[k] = -atlas.half_width + t as f64 * atlas.h - y[k];
                }
                if !inside {
                    continue;
                }
                let p = atlas.node_index(Chart::South, flat as usize);
                if let Some(vp) = vertex[p] {
                    graph.add_edge(vq, vp, quad_form(g.at(p), &dy).sqrt());
                }
            }
        }
    }

    let mut best: f64 = 0.0;
    for seed in seeds(atlas) {
        let dist = dijkstra(&graph, vertex[seed].unwrap(), None, |e| *e.weight());
        let far = dist.values().fold(0.0f64, |m, &v| m.max(v));
        best = best.max(far);
    }
    Ok(best)
}

/// Non-receiver nodes closest to ±e_k for every ambient axis.
fn seeds(atlas: &Atlas) -> Vec<usize> {
    let n = atlas.n;
    let mut out = Vec::new();
    for a in 0..=n {
        for s in [1.0, -1.0] {
            let mut xi = vec![0.0; n + 1];
            xi[a] = s;
            let chart = if a == n && s < 0.0 { Chart::South } else { Chart::North };
            let x = sphere_to_chart(chart, &xi).unwrap();
            let flat: usize = (0..n)
                .map(|k| {
                    let t = ((x[k] + atlas.half_width) / atlas.h).round() as usize;
                    t * atlas.res.pow(k as u32)
                })
                .sum();
            let node = atlas.node_index(chart, flat);
            if !atlas.is_receiver(node) {
                out.push(node);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_counts() {
        assert_eq!(directions(2).len(), 8);
        assert!(directions(3).len() >= 13);
    }
}
