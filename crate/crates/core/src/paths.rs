//! Evidence paths between two treatments and their path-level matrices.
//!
//! For `P` paths over `E` edges:
//! * `C` (P×E) marks the edges each path uses,
//! * `A = C Cᵀ` counts path lengths (diagonal) and shared edges,
//! * `Σ = C V Cᵀ` is the path covariance under independent edge estimates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::EvidenceFlow;
use crate::network::{EvidenceNetwork, TreatmentId};

pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidencePath {
    pub nodes: Vec<TreatmentId>,
    #[serde(skip)]
    pub node_indices: Vec<usize>,
    pub edge_indices: Vec<usize>,
    /// +1 where the edge is traversed along its stored orientation, −1 against.
    #[serde(skip)]
    pub signs: Vec<f64>,
}

impl EvidencePath {
    /// Number of edges.
    pub fn length(&self) -> usize {
        self.edge_indices.len()
    }

    pub fn is_direct(&self) -> bool {
        self.edge_indices.len() == 1
    }

    pub fn label(&self) -> String {
        self.nodes
            .iter()
            .map(|n| n.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// All simple directed source→sink paths of `flow`.
///
/// Depth-first, successors in ascending label order. The direct path, when
/// the two treatments share an edge, is moved to the front; the rest keep
/// their discovery order.
pub fn enumerate_paths(
    flow: &EvidenceFlow,
    network: &EvidenceNetwork,
    cap: usize,
) -> Result<Vec<EvidencePath>> {
    if cap == 0 {
        return Err(Error::InvalidCap);
    }
    let n = network.n_nodes();
    let succ = flow.successors(n);
    let mut search = Search {
        succ: &succ,
        sink: flow.sink_index,
        cap,
        on_path: vec![false; n],
        nodes: vec![flow.source_index],
        edges: Vec::new(),
        found: Vec::new(),
    };
    search.on_path[flow.source_index] = true;
    search.visit(flow.source_index)?;

    let mut raw = search.found;
    if let Some(pos) = raw.iter().position(|(_, edges)| edges.len() == 1) {
        let direct = raw.remove(pos);
        raw.insert(0, direct);
    }
    Ok(raw
        .into_iter()
        .map(|(node_indices, edge_indices)| {
            let signs = node_indices
                .windows(2)
                .zip(&edge_indices)
                .map(|(w, &k)| {
                    if network.endpoints(k).0 == w[0] {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            EvidencePath {
                nodes: node_indices
                    .iter()
                    .map(|&i| network.nodes()[i].clone())
                    .collect(),
                node_indices,
                edge_indices,
                signs,
            }
        })
        .collect())
}

struct Search<'a> {
    succ: &'a [Vec<(usize, usize)>],
    sink: usize,
    cap: usize,
    on_path: Vec<bool>,
    nodes: Vec<usize>,
    edges: Vec<usize>,
    found: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Search<'_> {
    fn visit(&mut self, v: usize) -> Result<()> {
        if v == self.sink {
            if self.found.len() == self.cap {
                return Err(Error::PathExplosion {
                    reached: self.cap + 1,
                    cap: self.cap,
                });
            }
            self.found.push((self.nodes.clone(), self.edges.clone()));
            return Ok(());
        }
        for &(w, k) in &self.succ[v] {
            if self.on_path[w] {
                continue;
            }
            self.on_path[w] = true;
            self.nodes.push(w);
            self.edges.push(k);
            let r = self.visit(w);
            self.edges.pop();
            self.nodes.pop();
            self.on_path[w] = false;
            r?;
        }
        Ok(())
    }
}

/// Signed sum of edge effects along the path.
pub fn path_effect(path: &EvidencePath, network: &EvidenceNetwork) -> f64 {
    path.edge_indices
        .iter()
        .zip(&path.signs)
        .map(|(&k, s)| s * network.edges()[k].effect)
        .sum()
}

/// Sum of edge variances along the path.
pub fn path_variance(path: &EvidencePath, network: &EvidenceNetwork) -> f64 {
    path.edge_indices
        .iter()
        .map(|&k| network.edges()[k].variance)
        .sum()
}

#[derive(Debug, Clone)]
pub struct PathSystem {
    pub paths: Vec<EvidencePath>,
    /// Path-edge incidence `C`, P×E with 0/1 entries.
    pub incidence: DMatrix<f64>,
    /// Path adjacency `A = C Cᵀ`.
    pub adjacency: DMatrix<f64>,
    /// Path covariance `Σ = C V Cᵀ`.
    pub covariance: DMatrix<f64>,
    pub effects: DVector<f64>,
}

pub fn build_path_system(paths: &[EvidencePath], network: &EvidenceNetwork) -> PathSystem {
    let p = paths.len();
    let e = network.n_edges();
    let mut incidence = DMatrix::<f64>::zeros(p, e);
    let mut traversal = vec![0.0f64; e];
    for (r, path) in paths.iter().enumerate() {
        for (&k, &s) in path.edge_indices.iter().zip(&path.signs) {
            incidence[(r, k)] = 1.0;
            debug_assert!(
                traversal[k] == 0.0 || traversal[k] == s,
                "paths traverse edge {k} in opposite directions"
            );
            traversal[k] = s;
        }
    }
    let adjacency = &incidence * incidence.transpose();
    let covariance = &incidence * network.variance_matrix() * incidence.transpose();
    let effects = DVector::from_iterator(p, paths.iter().map(|path| path_effect(path, network)));
    PathSystem {
        paths: paths.to_vec(),
        incidence,
        adjacency,
        covariance,
        effects,
    }
}

impl PathSystem {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Path variances, the diagonal of `Σ`.
    pub fn variances(&self) -> DVector<f64> {
        self.covariance.diagonal()
    }

    /// Restriction to the listed path indices, in the given order.
    pub fn select(&self, keep: &[usize]) -> PathSystem {
        let pick = |m: &DMatrix<f64>| {
            DMatrix::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])])
        };
        PathSystem {
            paths: keep.iter().map(|&i| self.paths[i].clone()).collect(),
            incidence: self.incidence.select_rows(keep),
            adjacency: pick(&self.adjacency),
            covariance: pick(&self.covariance),
            effects: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.effects[i])),
        }
    }
}
