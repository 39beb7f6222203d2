//! CSV field dumps: columns `chart, i, j[, k], x1, x2[, x3], <values…>`.

use std::path::Path;

use super::{Atlas, Chart, TensorField};
use crate::error::{Error, Result};

const AXES: [&str; 3] = ["i", "j", "k"];

/// Column names for the components of a tensor field (`g_12`, `dU_1`, …).
fn component_names(name: &str, t: &TensorField) -> Vec<String> {
    if t.rank == 0 {
        return vec![name.to_string()];
    }
    (0..t.stride())
        .map(|c| {
            let mut idx = String::new();
            for slot in 0..t.rank {
                let i = (c / t.n.pow((t.rank - 1 - slot) as u32)) % t.n;
                idx.push_str(&(i + 1).to_string());
            }
            format!("{name}_{idx}")
        })
        .collect()
}

pub fn write_fields(path: &Path, atlas: &Atlas, fields: &[(&str, &TensorField)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["chart".to_string()];
    header.extend(AXES[..atlas.n].iter().map(|s| s.to_string()));
    header.extend((1..=atlas.n).map(|k| format!("x{k}")));
    for (name, t) in fields {
        header.extend(component_names(name, t));
    }
    w.write_record(&header)?;
    for q in 0..atlas.len() {
        let chart = match atlas.chart_of(q) {
            Chart::North => "north",
            Chart::South => "south",
        };
        let mut rec = vec![chart.to_string()];
        rec.extend(atlas.grid_index(q).iter().map(|v| v.to_string()));
        rec.extend(atlas.coord(q).iter().map(|v| format!("{v:.16e}")));
        for (_, t) in fields {
            rec.extend(t.at(q).iter().map(|v| format!("{v:.16e}")));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the scalar column `column` of a dump written on the same atlas.
pub fn read_scalar(path: &Path, atlas: &Atlas, column: &str) -> Result<TensorField> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Config(format!("column '{column}' not found in {}", path.display())))?;
    let mut values = vec![f64::NAN; atlas.len()];
    for rec in r.records() {
        let rec = rec?;
        let chart = match &rec[0] {
            "north" => Chart::North,
            "south" => Chart::South,
            other => return Err(Error::Config(format!("unknown chart '{other}'"))),
        };
        let mut flat = 0;
        for k in 0..atlas.n {
            let i: usize = rec[1 + k]
                .parse()
                .map_err(|_| Error::Config(format!("bad grid index '{}'", &rec[1 + k])))?;
            if i >= atlas.res {
                return Err(Error::Config("dump was written on a different resolution".into()));
            }
            flat += i * atlas.res.pow(k as u32);
        }
        let v: f64 = rec[col]
            .parse()
            .map_err(|_| Error::Config(format!("bad value '{}'", &rec[col])))?;
        values[atlas.node_index(chart, flat)] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("dump does not cover every node of the atlas".into()));
    }
    Ok(TensorField::scalar(atlas.n, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = Atlas::new(2, 16).unwrap();
        let f = a.sample(|xi| xi[2] + 0.25 * xi[0]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write_fields(&p, &a, &[("u", &f), ("sigma", &a.sigma_field())]).unwrap();
        let g = read_scalar(&p, &a, "u").unwrap();
        assert_eq!(f.values, g.values);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("chart,i,j,x1,x2,u,sigma_11,sigma_12,sigma_21,sigma_22"));
    }
}
