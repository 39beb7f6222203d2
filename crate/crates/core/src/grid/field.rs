use serde::{Deserialize, Serialize};

/// Covariant tensor field of rank `rank` over all nodes of an atlas, in the
/// coordinates of the chart that owns each node.
///
/// Node `q` stores `n^rank` consecutive values; multi-indices are flattened
/// with the first index most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorField {
    pub n: usize,
    pub rank: usize,
    pub values: Vec<f64>,
}

pub type ScalarField = TensorField;
pub type CovectorField = TensorField;
pub type Sym2Field = TensorField;

impl TensorField {
    pub fn zeros(n: usize, rank: usize, nodes: usize) -> Self {
        TensorField {
            n,
            rank,
            values: vec![0.0; nodes * n.pow(rank as u32)],
        }
    }

    pub fn scalar(n: usize, values: Vec<f64>) -> Self {
        TensorField { n, rank: 0, values }
    }

    pub fn from_fn(n: usize, rank: usize, nodes: usize, f: impl Fn(usize, &mut [f64])) -> Self {
        let mut t = Self::zeros(n, rank, nodes);
        let s = t.stride();
        for (q, chunk) in t.values.chunks_mut(s).enumerate() {
            f(q, chunk);
        }
        t
    }

    pub fn stride(&self) -> usize {
        self.n.pow(self.rank as u32)
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.stride()
    }

    pub fn at(&self, q: usize) -> &[f64] {
        let s = self.stride();
        &self.values[q * s..(q + 1) * s]
    }

    pub fn at_mut(&mut self, q: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.values[q * s..(q + 1) * s]
    }

    /// Largest |T_ij − T_ji| over nodes (rank 2 only).
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rank, 2);
        let n = self.n;
        (0..self.nodes())
            .flat_map(|q| {
                let t = self.at(q);
                (0..n).flat_map(move |i| (0..n).map(move |j| (t[i * n + j] - t[j * n + i]).abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        TensorField {
            n: self.n,
            rank: self.rank,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        TensorField {
            n: self.n,
            rank: self.rank,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}
