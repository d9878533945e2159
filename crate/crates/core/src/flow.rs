//! Directed evidence-flow network for one comparison, read off the signs of
//! its hat-matrix row.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{EvidenceNetwork, TreatmentId};
use crate::nma::HatRow;

/// Coefficients at or below this fraction of the largest |coefficient| are zero.
pub const DEFAULT_FLOW_TOL: f64 = 1e-10;

const CONSERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowArc {
    pub from: TreatmentId,
    pub to: TreatmentId,
    #[serde(skip)]
    pub from_index: usize,
    #[serde(skip)]
    pub to_index: usize,
    pub flow: f64,
    pub edge_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceFlow {
    pub source: TreatmentId,
    pub sink: TreatmentId,
    #[serde(skip)]
    pub source_index: usize,
    #[serde(skip)]
    pub sink_index: usize,
    pub arcs: Vec<FlowArc>,
}

pub(crate) fn check_tolerance(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

/// Orient every edge with a non-negligible coefficient by its sign: a
/// positive coefficient points along the stored `t1 → t2` orientation.
pub fn evidence_flow(row: &HatRow, network: &EvidenceNetwork, tol: f64) -> Result<EvidenceFlow> {
    check_tolerance(tol)?;
    let max = row.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cutoff = tol * max;
    let nodes = network.nodes();

    let mut arcs = Vec::new();
    for (k, &c) in row.coefficients.iter().enumerate() {
        if c.abs() <= cutoff {
            continue;
        }
        let (a, b) = network.endpoints(k);
        let (from, to) = if c > 0.0 { (a, b) } else { (b, a) };
        arcs.push(FlowArc {
            from: nodes[from].clone(),
            to: nodes[to].clone(),
            from_index: from,
            to_index: to,
            flow: c.abs(),
            edge_index: k,
        });
    }

    let flow = EvidenceFlow {
        source: row.source.clone(),
        sink: row.sink.clone(),
        source_index: row.source_index,
        sink_index: row.sink_index,
        arcs,
    };

    let residual = flow.conservation_residual(network.n_nodes());
    if residual > CONSERVATION_TOL {
        return Err(Error::NumericalFailure(format!(
            "flow {}→{} violates conservation by {residual:.3e}",
            flow.source, flow.sink
        )));
    }
    if let Some(node) = flow.find_cycle_node(network.n_nodes()) {
        return Err(Error::NumericalFailure(format!(
            "flow {}→{} contains a directed cycle through `{}`; \
             likely numerical noise above the zero-flow tolerance",
            flow.source, flow.sink, nodes[node]
        )));
    }
    Ok(flow)
}

impl EvidenceFlow {
    /// Largest deviation of net out-flow from +1 at the source, −1 at the
    /// sink and 0 elsewhere.
    pub fn conservation_residual(&self, n_nodes: usize) -> f64 {
        let mut net = vec![0.0; n_nodes];
        for arc in &self.arcs {
            net[arc.from_index] += arc.flow;
            net[arc.to_index] -= arc.flow;
        }
        net[self.source_index] -= 1.0;
        net[self.sink_index] += 1.0;
        net.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Out-neighbours per node, each list as `(to, edge_index)` sorted by `to`.
    pub fn successors(&self, n_nodes: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); n_nodes];
        for arc in &self.arcs {
            out[arc.from_index].push((arc.to_index, arc.edge_index));
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }

    pub fn reversed(&self) -> Self {
        Self {
            source: self.sink.clone(),
            sink: self.source.clone(),
            source_index: self.sink_index,
            sink_index: self.source_index,
            arcs: self
                .arcs
                .iter()
                .map(|a| FlowArc {
                    from: a.to.clone(),
                    to: a.from.clone(),
                    from_index: a.to_index,
                    to_index: a.from_index,
                    flow: a.flow,
                    edge_index: a.edge_index,
                })
                .collect(),
        }
    }

    /// Kahn's algorithm; returns a node left on a cycle, if any.
    fn find_cycle_node(&self, n_nodes: usize) -> Option<usize> {
        let succ = self.successors(n_nodes);
        let mut indegree = vec![0usize; n_nodes];
        for arc in &self.arcs {
            indegree[arc.to_index] += 1;
        }
        let mut ready: Vec<usize> = (0..n_nodes).filter(|&v| indegree[v] == 0).collect();
        let mut removed = 0;
        while let Some(v) = ready.pop() {
            removed += 1;
            for &(w, _) in &succ[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(w);
                }
            }
        }
        if removed == n_nodes {
            None
        } else {
            (0..n_nodes).find(|&v| indegree[v] > 0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, DirectComparison};
    use crate::nma::{hat_row, laplacian_pinv};
    use nalgebra::DVector;

    fn toy() -> EvidenceNetwork {
        build_network(&[
            DirectComparison::new("T_1", "T_2", 0.5, 0.09).unwrap(),
            DirectComparison::new("T_1", "T_3", 2.0, 0.09).unwrap(),
            DirectComparison::new("T_1", "T_4", 1.5, 0.09).unwrap(),
            DirectComparison::new("T_2", "T_3", 0.5, 0.09).unwrap(),
            DirectComparison::new("T_4", "T_3", 1.5, 0.09).unwrap(),
        ])
        .unwrap()
    }

    fn arc_set(flow: &EvidenceFlow) -> Vec<(String, String, f64)> {
        let mut v: Vec<_> = flow
            .arcs
            .iter()
            .map(|a| (a.from.to_string(), a.to.to_string(), a.flow))
            .collect();
        v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        v
    }

    #[test]
    fn toy_t1_t3_arcs() {
        let net = toy();
        let sys = laplacian_pinv(&net).unwrap();
        let flow = evidence_flow(
            &hat_row(&sys, &net, "T_1", "T_3").unwrap(),
            &net,
            DEFAULT_FLOW_TOL,
        )
        .unwrap();
        let arcs = arc_set(&flow);
        let expected = [
            ("T_1", "T_2", 0.25),
            ("T_1", "T_3", 0.5),
            ("T_1", "T_4", 0.25),
            ("T_2", "T_3", 0.25),
            ("T_4", "T_3", 0.25),
        ];
        assert_eq!(arcs.len(), 5);
        for (got, want) in arcs.iter().zip(expected) {
            assert_eq!((got.0.as_str(), got.1.as_str()), (want.0, want.1));
            assert!((got.2 - want.2).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_t2_t3_directions() {
        let net = toy();
        let sys = laplacian_pinv(&net).unwrap();
        let flow = evidence_flow(
            &hat_row(&sys, &net, "T_2", "T_3").unwrap(),
            &net,
            DEFAULT_FLOW_TOL,
        )
        .unwrap();
        let dirs: Vec<(String, String)> = arc_set(&flow).into_iter().map(|a| (a.0, a.1)).collect();
        let want: Vec<(String, String)> = [
            ("T_1", "T_3"),
            ("T_1", "T_4"),
            ("T_2", "T_1"),
            ("T_2", "T_3"),
            ("T_4", "T_3"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(dirs, want);
        assert!(flow.conservation_residual(4) < 1e-12);
    }

    #[test]
    fn single_edge_flow() {
        let net = build_network(&[DirectComparison::new("A", "B", 1.0, 2.0).unwrap()]).unwrap();
        let sys = laplacian_pinv(&net).unwrap();
        let flow = evidence_flow(
            &hat_row(&sys, &net, "A", "B").unwrap(),
            &net,
            DEFAULT_FLOW_TOL,
        )
        .unwrap();
        assert_eq!(flow.arcs.len(), 1);
        assert!((flow.arcs[0].flow - 1.0).abs() < 1e-15);
        let back = evidence_flow(
            &hat_row(&sys, &net, "B", "A").unwrap(),
            &net,
            DEFAULT_FLOW_TOL,
        )
        .unwrap();
        assert_eq!(back.arcs[0].from.as_str(), "B");
    }

    #[test]
    fn reversal_matches_swapped_comparison() {
        let net = toy();
        let sys = laplacian_pinv(&net).unwrap();
        let fwd = evidence_flow(&hat_row(&sys, &net, "T_2", "T_4").unwrap(), &net, 1e-10).unwrap();
        let bwd = evidence_flow(&hat_row(&sys, &net, "T_4", "T_2").unwrap(), &net, 1e-10).unwrap();
        let rev = fwd.reversed();
        assert_eq!(rev.arcs.len(), bwd.arcs.len());
        for (a, b) in arc_set(&rev).iter().zip(arc_set(&bwd)) {
            assert_eq!((&a.0, &a.1), (&b.0, &b.1));
            assert!((a.2 - b.2).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupted_row_is_rejected() {
        let net = toy();
        let sys = laplacian_pinv(&net).unwrap();
        let mut row = hat_row(&sys, &net, "T_1", "T_3").unwrap();
        row.coefficients[0] += 0.1;
        assert!(matches!(
            evidence_flow(&row, &net, DEFAULT_FLOW_TOL),
            Err(Error::NumericalFailure(_))
        ));
        assert_eq!(
            evidence_flow(&row, &net, 0.0),
            Err(Error::InvalidTolerance(0.0))
        );
    }

    #[test]
    fn cycle_is_reported() {
        // Triangle A→B→C→A plus a conserving A→C unit: a circulation on top
        // of a valid flow is still conserving but cyclic.
        let net = build_network(&[
            DirectComparison::new("A", "B", 0.0, 1.0).unwrap(),
            DirectComparison::new("B", "C", 0.0, 1.0).unwrap(),
            DirectComparison::new("A", "C", 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let sys = laplacian_pinv(&net).unwrap();
        let mut row = hat_row(&sys, &net, "A", "C").unwrap();
        // edges sorted: A:B, A:C, B:C; push a circulation A→B→C→A of size 1
        row.coefficients += DVector::from_vec(vec![1.0, -1.0, 1.0]);
        let err = evidence_flow(&row, &net, DEFAULT_FLOW_TOL).unwrap_err();
        assert!(
            matches!(err, Error::NumericalFailure(ref m) if m.contains("cycle")),
            "{err}"
        );
    }
}
