//! Aggregate evidence network: treatments, pooled direct comparisons and the
//! effect vector / variance matrix every downstream computation indexes into.
//!
//! Effects are additive (log scale for ratio measures). A comparison
//! `(t1, t2, effect)` is the effect of `t1` relative to `t2`; reversing the pair
//! negates the effect. Edges are stored in a canonical orientation with
//! `t1 < t2` under [`TreatmentId`]'s natural ordering, and sorted by
//! `(t1, t2)`. That ordering is fixed at construction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment label.
///
/// Ordering is "natural": runs of ASCII digits compare numerically, so
/// `T_2 < T_10`. Labels without digits order lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreatmentId(String);

impl TreatmentId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let trimmed = label.trim();
        if trimmed.is_empty() {
            return Err(Error::InvalidComparison("empty treatment label".into()));
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TreatmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for TreatmentId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for TreatmentId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, ra) = a.split_at(da);
                let (nb, rb) = b.split_at(db);
                let strip = |s: &[u8]| -> usize { s.iter().take_while(|&&c| c == b'0').count() };
                let (sa, sb) = (&na[strip(na)..], &nb[strip(nb)..]);
                let ord = sa
                    .len()
                    .cmp(&sb.len())
                    .then_with(|| sa.cmp(sb))
                    .then_with(|| da.cmp(&db));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = ra;
                b = rb;
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

/// One pooled head-to-head comparison: the effect of `t1` relative to `t2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectComparison {
    pub t1: TreatmentId,
    pub t2: TreatmentId,
    pub effect: f64,
    pub variance: f64,
    pub n_studies: usize,
}

impl DirectComparison {
    pub fn new(t1: &str, t2: &str, effect: f64, variance: f64) -> Result<Self> {
        let c = Self {
            t1: TreatmentId::new(t1)?,
            t2: TreatmentId::new(t2)?,
            effect,
            variance,
            n_studies: 1,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t1 == self.t2 {
            return Err(Error::InvalidComparison(format!(
                "self-loop on treatment `{}`",
                self.t1
            )));
        }
        if !self.effect.is_finite() {
            return Err(Error::InvalidComparison(format!(
                "{}:{} has non-finite effect {}",
                self.t1, self.t2, self.effect
            )));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidVariance(self.variance));
        }
        Ok(())
    }

    /// The same comparison seen from the other side.
    pub fn reversed(&self) -> Self {
        Self {
            t1: self.t2.clone(),
            t2: self.t1.clone(),
            effect: -self.effect,
            variance: self.variance,
            n_studies: self.n_studies,
        }
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.variance
    }

    fn canonical(&self) -> Self {
        if self.t1 < self.t2 {
            self.clone()
        } else {
            self.reversed()
        }
    }
}

/// Common-effect inverse-variance pooling of the contrasts for one comparison.
///
/// Returns `(effect, variance)`. Inputs are summed in a canonical order so the
/// result does not depend on the order of `contrasts`.
pub fn pool_pairwise(contrasts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if contrasts.is_empty() {
        return Err(Error::MissingData);
    }
    for &(effect, variance) in contrasts {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidVariance(variance));
        }
        if !effect.is_finite() {
            return Err(Error::InvalidComparison(format!(
                "non-finite effect {effect}"
            )));
        }
    }
    if let [single] = contrasts {
        return Ok(*single);
    }
    let mut sorted = contrasts.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (mut weighted, mut total) = (0.0, 0.0);
    for (effect, variance) in sorted {
        weighted += effect / variance;
        total += 1.0 / variance;
    }
    Ok((weighted / total, 1.0 / total))
}

/// Connected aggregate network with a fixed node and edge ordering.
#[derive(Debug, Clone)]
pub struct EvidenceNetwork {
    nodes: Vec<TreatmentId>,
    edges: Vec<DirectComparison>,
    endpoints: Vec<(usize, usize)>,
    node_lookup: HashMap<String, usize>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

/// Pool duplicates, orient canonically, and check connectivity.
pub fn build_network(comparisons: &[DirectComparison]) -> Result<EvidenceNetwork> {
    if comparisons.is_empty() {
        return Err(Error::MissingData);
    }
    let mut groups: BTreeMap<(TreatmentId, TreatmentId), Vec<DirectComparison>> = BTreeMap::new();
    for c in comparisons {
        c.validate()?;
        let c = c.canonical();
        groups
            .entry((c.t1.clone(), c.t2.clone()))
            .or_default()
            .push(c);
    }

    let mut edges = Vec::with_capacity(groups.len());
    for ((t1, t2), group) in groups {
        let contrasts: Vec<(f64, f64)> = group.iter().map(|c| (c.effect, c.variance)).collect();
        let (effect, variance) = pool_pairwise(&contrasts)?;
        edges.push(DirectComparison {
            t1,
            t2,
            effect,
            variance,
            n_studies: group.iter().map(|c| c.n_studies.max(1)).sum(),
        });
    }

    let mut nodes: Vec<TreatmentId> = edges
        .iter()
        .flat_map(|e| [e.t1.clone(), e.t2.clone()])
        .collect();
    nodes.sort();
    nodes.dedup();

    let node_lookup: HashMap<String, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str().to_string(), i))
        .collect();
    let endpoints: Vec<(usize, usize)> = edges
        .iter()
        .map(|e| (node_lookup[e.t1.as_str()], node_lookup[e.t2.as_str()]))
        .collect();
    let edge_lookup = endpoints
        .iter()
        .enumerate()
        .map(|(k, &pair)| (pair, k))
        .collect();

    let network = EvidenceNetwork {
        nodes,
        edges,
        endpoints,
        node_lookup,
        edge_lookup,
    };
    let components = network.components();
    if components.len() > 1 {
        return Err(Error::DisconnectedNetwork(
            components
                .into_iter()
                .map(|c| {
                    c.into_iter()
                        .map(|i| network.nodes[i].to_string())
                        .collect()
                })
                .collect(),
        ));
    }
    Ok(network)
}

impl EvidenceNetwork {
    pub fn nodes(&self) -> &[TreatmentId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DirectComparison] {
        &self.edges
    }

    /// N
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// E
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// M = N(N-1)/2, the number of possible comparisons.
    pub fn n_comparisons(&self) -> usize {
        self.nodes.len() * (self.nodes.len().saturating_sub(1)) / 2
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.node_lookup
            .get(label.trim())
            .copied()
            .ok_or_else(|| Error::UnknownTreatment(label.to_string()))
    }

    /// Node indices `(t1, t2)` of edge `k` in stored orientation.
    pub fn endpoints(&self, k: usize) -> (usize, usize) {
        self.endpoints[k]
    }

    /// Edge joining `a` and `b` together with the sign of traversing it from
    /// `a` to `b` (+1 along the stored orientation, -1 against it).
    pub fn edge_between(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if let Some(&k) = self.edge_lookup.get(&(a, b)) {
            Some((k, 1.0))
        } else {
            self.edge_lookup.get(&(b, a)).map(|&k| (k, -1.0))
        }
    }

    /// Sorted neighbour lists (natural label order is the node index order).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.endpoints {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Edge label `t1:t2` in stored orientation.
    pub fn edge_label(&self, k: usize) -> String {
        format!("{}:{}", self.edges[k].t1, self.edges[k].t2)
    }

    /// The effect vector Θ over the E observed comparisons.
    pub fn effects(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.effect))
    }

    pub fn variances(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.variance))
    }

    /// Diagonal variance matrix V (E×E).
    pub fn variance_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.variances())
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.weight()))
    }

    /// Unordered comparison pairs `(i, j)` with `i < j`, in node order.
    pub fn comparison_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.nodes.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    }

    /// Connected components, each sorted, ordered by smallest member.
    fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
