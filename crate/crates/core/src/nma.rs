//! Common-effect network estimates through the weighted graph Laplacian.
//!
//! With edge weights `w = 1/variance`, the Laplacian is
//! `L = Σ w_e (e_k − e_l)(e_k − e_l)ᵀ` and its pseudo-inverse is obtained as
//! `(L + J/N)⁻¹ − J/N`. The hat-matrix row for comparison `(i, j)` has, on
//! edge `(k, l)`, the coefficient `w_kl (e_i − e_j)ᵀ L⁺ (e_k − e_l)`: the unit
//! electrical current that edge carries when one unit enters at `i` and
//! leaves at `j`.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, CONDITION_WARN};
use crate::network::{EvidenceNetwork, TreatmentId};

#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    pub laplacian: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatRow {
    pub source: TreatmentId,
    pub sink: TreatmentId,
    pub source_index: usize,
    pub sink_index: usize,
    /// One coefficient per observed edge, in network edge order.
    pub coefficients: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmaEstimate {
    pub effect: f64,
    pub variance: f64,
}

pub fn weighted_laplacian(network: &EvidenceNetwork) -> DMatrix<f64> {
    let n = network.n_nodes();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for (k, edge) in network.edges().iter().enumerate() {
        let (a, b) = network.endpoints(k);
        let w = edge.weight();
        l[(a, a)] += w;
        l[(b, b)] += w;
        l[(a, b)] -= w;
        l[(b, a)] -= w;
    }
    l
}

pub fn laplacian_pinv(network: &EvidenceNetwork) -> Result<LaplacianSystem> {
    let laplacian = weighted_laplacian(network);
    let n = laplacian.nrows();
    let j_over_n = DMatrix::<f64>::from_element(n, n, 1.0 / n as f64);
    let completed = &laplacian + &j_over_n;

    let inverse = match Cholesky::factor(&completed) {
        Some(chol) => {
            let cond = chol.condition_estimate();
            if cond > CONDITION_WARN {
                warn!("Laplacian is ill-conditioned (condition estimate {cond:.3e})");
            }
            chol.inverse()
        }
        None => eigen_inverse(&completed)?,
    };
    let pinv = inverse - j_over_n;
    Ok(LaplacianSystem { laplacian, pinv })
}

fn eigen_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(min > max * 1e-15) {
        return Err(Error::NumericalFailure(format!(
            "L + J/N is singular (eigenvalues in [{min:.3e}, {max:.3e}])"
        )));
    }
    if max / min > CONDITION_WARN {
        warn!(
            "Laplacian is ill-conditioned (condition number {:.3e})",
            max / min
        );
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

fn check_pair(network: &EvidenceNetwork, i: &str, j: &str) -> Result<(usize, usize)> {
    let a = network.node_index(i)?;
    let b = network.node_index(j)?;
    if a == b {
        return Err(Error::SameTreatment(i.to_string()));
    }
    Ok((a, b))
}

/// Hat-matrix row for `(i, j)` restricted to the observed edges.
pub fn hat_row(
    system: &LaplacianSystem,
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
) -> Result<HatRow> {
    let (a, b) = check_pair(network, i, j)?;
    Ok(hat_row_by_index(system, network, a, b))
}

pub(crate) fn hat_row_by_index(
    system: &LaplacianSystem,
    network: &EvidenceNetwork,
    a: usize,
    b: usize,
) -> HatRow {
    // potential difference row: (e_a − e_b)ᵀ L⁺
    let potential = system.pinv.row(a) - system.pinv.row(b);
    let coefficients = DVector::from_iterator(
        network.n_edges(),
        network.edges().iter().enumerate().map(|(k, e)| {
            let (p, q) = network.endpoints(k);
            e.weight() * (potential[p] - potential[q])
        }),
    );
    HatRow {
        source: network.nodes()[a].clone(),
        sink: network.nodes()[b].clone(),
        source_index: a,
        sink_index: b,
        coefficients,
    }
}

/// Network estimate for `(i, j)`: effect of `i` relative to `j` and its variance.
pub fn nma_estimate(
    system: &LaplacianSystem,
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
) -> Result<NmaEstimate> {
    let (a, b) = check_pair(network, i, j)?;
    Ok(nma_estimate_by_index(system, network, a, b))
}

pub(crate) fn nma_estimate_by_index(
    system: &LaplacianSystem,
    network: &EvidenceNetwork,
    a: usize,
    b: usize,
) -> NmaEstimate {
    let row = hat_row_by_index(system, network, a, b);
    let p = &system.pinv;
    NmaEstimate {
        effect: row.coefficients.dot(&network.effects()),
        variance: p[(a, a)] + p[(b, b)] - 2.0 * p[(a, b)],
    }
}
