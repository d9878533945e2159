//! Pairwise disagreement between path effects, scaled by the largest
//! disagreement: `m_pq = |θ_p − θ_q| / max_kl |θ_k − θ_l|`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetpathMatrix {
    pub labels: Vec<String>,
    #[serde(serialize_with = "serialize_rows")]
    pub values: DMatrix<f64>,
    /// All effects equal, so the scaling is 0/0 and every entry is set to 0.
    pub degenerate: bool,
}

fn serialize_rows<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

pub fn netpath_matrix(effects: &[f64]) -> Result<NetpathMatrix> {
    let labels = (1..=effects.len()).map(|i| format!("π{i}")).collect();
    netpath_matrix_labeled(effects, labels)
}

pub fn netpath_matrix_labeled(effects: &[f64], labels: Vec<String>) -> Result<NetpathMatrix> {
    let p = effects.len();
    if p < 2 {
        return Err(Error::InsufficientPaths(p));
    }
    debug_assert_eq!(labels.len(), p);
    let diff = DMatrix::from_fn(p, p, |r, c| (effects[r] - effects[c]).abs());
    let max = diff.amax();
    let degenerate = !(max > 0.0);
    let values = if degenerate {
        DMatrix::zeros(p, p)
    } else {
        diff.map(|d| d / max)
    };
    Ok(NetpathMatrix {
        labels,
        values,
        degenerate,
    })
}

impl NetpathMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Pair `(p, q)` with `p < q` holding the largest entry; first in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 1);
        for r in 0..self.size() {
            for c in r + 1..self.size() {
                if self.values[(r, c)] > self.values[best] {
                    best = (r, c);
                }
            }
        }
        best
    }
}
