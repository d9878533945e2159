//! Classical local inconsistency tests: loop-specific (Bucher) z-tests and
//! side-splitting of direct against pooled indirect evidence.

use serde::Serialize;

use crate::distributions::normal_sf_two_sided;
use crate::error::{Error, Result};
use crate::network::{build_network, EvidenceNetwork, TreatmentId};
use crate::nma::{laplacian_pinv, nma_estimate_by_index};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZTestResult {
    pub omega: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
}

impl ZTestResult {
    fn from_difference(diff: f64, variance: f64) -> Self {
        let omega = diff.abs();
        let se = variance.sqrt();
        let z = omega / se;
        Self {
            omega,
            se,
            z,
            p_value: normal_sf_two_sided(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideSplit {
    pub direct_effect: f64,
    pub direct_variance: f64,
    pub indirect_effect: f64,
    pub indirect_variance: f64,
    pub test: ZTestResult,
}

/// Direct evidence on `(i, j)` against the network estimate from every other
/// edge.
pub fn side_split(network: &EvidenceNetwork, i: &str, j: &str) -> Result<SideSplit> {
    let a = network.node_index(i)?;
    let b = network.node_index(j)?;
    if a == b {
        return Err(Error::SameTreatment(i.to_string()));
    }
    let (k, sign) = network
        .edge_between(a, b)
        .ok_or_else(|| Error::NoDirectEvidence(i.to_string(), j.to_string()))?;
    let direct = &network.edges()[k];

    let rest: Vec<_> = network
        .edges()
        .iter()
        .enumerate()
        .filter(|&(e, _)| e != k)
        .map(|(_, c)| c.clone())
        .collect();
    let no_indirect = || Error::NoIndirectEvidence(i.to_string(), j.to_string());
    if rest.is_empty() {
        return Err(no_indirect());
    }
    // i and j still connected implies every node stays connected.
    let split = match build_network(&rest) {
        Ok(net) => net,
        Err(Error::DisconnectedNetwork(_)) => return Err(no_indirect()),
        Err(e) => return Err(e),
    };
    let (sa, sb) = match (split.node_index(i), split.node_index(j)) {
        (Ok(sa), Ok(sb)) => (sa, sb),
        _ => return Err(no_indirect()),
    };
    let indirect = nma_estimate_by_index(&laplacian_pinv(&split)?, &split, sa, sb);

    let direct_effect = sign * direct.effect;
    Ok(SideSplit {
        direct_effect,
        direct_variance: direct.variance,
        indirect_effect: indirect.effect,
        indirect_variance: indirect.variance,
        test: ZTestResult::from_difference(
            direct_effect - indirect.effect,
            direct.variance + indirect.variance,
        ),
    })
}

/// z-test on the signed sum of edge effects around a closed loop.
///
/// `cycle` lists each treatment once; the edge from the last back to the first
/// closes it.
pub fn loop_test(network: &EvidenceNetwork, cycle: &[&str]) -> Result<ZTestResult> {
    if cycle.len() < 3 {
        return Err(Error::InvalidLoop(format!(
            "a loop needs at least 3 treatments, got {}",
            cycle.len()
        )));
    }
    let idx = cycle
        .iter()
        .map(|t| network.node_index(t))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = idx.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != idx.len() {
        return Err(Error::InvalidLoop(format!(
            "treatments repeat in {}",
            cycle.join("-")
        )));
    }

    let (mut sum, mut variance) = (0.0, 0.0);
    for w in 0..idx.len() {
        let (a, b) = (idx[w], idx[(w + 1) % idx.len()]);
        let (k, sign) = network.edge_between(a, b).ok_or_else(|| {
            Error::InvalidLoop(format!(
                "no direct comparison between {} and {}",
                network.nodes()[a],
                network.nodes()[b]
            ))
        })?;
        let edge = &network.edges()[k];
        sum += sign * edge.effect;
        variance += edge.variance;
    }
    Ok(ZTestResult::from_difference(sum, variance))
}

/// Simple cycles through edge `(i, j)` with at most `max_len` treatments.
///
/// Each cycle is returned as `i, …, j`; depth-first from `i` over the network
/// without the `(i, j)` edge, neighbours in label order.
pub fn enumerate_loops(
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
    max_len: usize,
) -> Result<Vec<Vec<TreatmentId>>> {
    let a = network.node_index(i)?;
    let b = network.node_index(j)?;
    if network.edge_between(a, b).is_none() {
        return Err(Error::NoDirectEvidence(i.to_string(), j.to_string()));
    }
    if max_len < 3 {
        return Err(Error::InvalidLoop(format!(
            "maximum loop length must be at least 3, got {max_len}"
        )));
    }
    let adj = network.adjacency();
    let mut loops = Vec::new();
    let mut stack = vec![a];
    let mut on_path = vec![false; network.n_nodes()];
    on_path[a] = true;
    walk(&adj, b, max_len, &mut stack, &mut on_path, &mut loops);
    Ok(loops
        .into_iter()
        .map(|l| l.into_iter().map(|v| network.nodes()[v].clone()).collect())
        .collect())
}

fn walk(
    adj: &[Vec<usize>],
    target: usize,
    max_len: usize,
    stack: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let v = *stack.last().expect("non-empty");
    for &w in &adj[v] {
        if on_path[w] {
            continue;
        }
        if w == target {
            // skip the direct edge itself
            if stack.len() >= 2 {
                let mut cycle = stack.clone();
                cycle.push(w);
                out.push(cycle);
            }
            continue;
        }
        // room left for w and the target
        if stack.len() + 2 > max_len {
            continue;
        }
        on_path[w] = true;
        stack.push(w);
        walk(adj, target, max_len, stack, on_path, out);
        stack.pop();
        on_path[w] = false;
    }
}
