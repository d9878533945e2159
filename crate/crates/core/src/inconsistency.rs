//! The path-based inconsistency statistic.
//!
//! For comparison `(i, j)` with independent paths `π_1..π_P′`, path effects
//! `θ(π)` and network estimate `θ̂`:
//!
//! ```text
//! Q = (θ(π) − θ̂·1)ᵀ Σ⁻¹ (θ(π) − θ̂·1)  ~  χ²(P′ − 1)
//! ```
//!
//! `Σ` is restricted to the independent paths, which makes it positive
//! definite, and the quadratic form goes through its Cholesky factor. The
//! deviation vector lies in the column space of the full path covariance, so
//! the same value comes out of the pseudo-inverse over all paths
//! ([`q_path_pinv`]) and out of any other maximal independent subset.

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::chi2_sf;
use crate::error::{Error, Result};
use crate::flow::{evidence_flow, EvidenceFlow, DEFAULT_FLOW_TOL};
use crate::independence::{independent_subsystem, ref_reduce, ReductionResult, DEFAULT_REF_TOL};
use crate::linalg::{symmetric_pinv, Cholesky, CONDITION_WARN};
use crate::netpath::{netpath_matrix, NetpathMatrix};
use crate::network::{EvidenceNetwork, TreatmentId};
use crate::nma::{
    hat_row_by_index, laplacian_pinv, nma_estimate_by_index, HatRow, LaplacianSystem, NmaEstimate,
};
use crate::paths::{
    build_path_system, enumerate_paths, EvidencePath, PathSystem, DEFAULT_PATH_CAP,
};

/// Eigenvalues below this fraction of the largest are dropped by the pseudo-inverse.
const PINV_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub flow_tol: f64,
    pub ref_tol: f64,
    pub path_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            flow_tol: DEFAULT_FLOW_TOL,
            ref_tol: DEFAULT_REF_TOL,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SinglePath,
    NoPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InconsistencyReport {
    pub comparison: (TreatmentId, TreatmentId),
    pub q: f64,
    pub dof: usize,
    pub p_value: Option<f64>,
    pub n_paths: usize,
    pub n_independent: usize,
    pub kept_paths: Vec<EvidencePath>,
    pub status: Status,
    pub nma_effect: f64,
    pub nma_variance: f64,
}

impl InconsistencyReport {
    pub fn label(&self) -> String {
        format!("{}:{}", self.comparison.0, self.comparison.1)
    }
}

/// Every intermediate of one comparison's analysis.
#[derive(Debug, Clone)]
pub struct ComparisonAnalysis {
    pub report: InconsistencyReport,
    pub netpath: Option<NetpathMatrix>,
    pub nma: NmaEstimate,
    pub hat_row: HatRow,
    pub flow: EvidenceFlow,
    /// All enumerated paths.
    pub system: PathSystem,
    pub reduction: ReductionResult,
}

/// Q over a system whose covariance is already non-singular.
pub fn q_reduced(system: &PathSystem, nma_effect: f64) -> Result<f64> {
    let deviation = deviations(system, nma_effect);
    let chol = Cholesky::factor(&system.covariance).ok_or_else(|| {
        Error::NumericalFailure("reduced path covariance is not positive definite".into())
    })?;
    let cond = chol.condition_estimate();
    if cond > CONDITION_WARN {
        warn!("path covariance is ill-conditioned (condition estimate {cond:.3e})");
    }
    Ok(chol.quadratic_form(&deviation))
}

/// Q over all paths with the Moore–Penrose pseudo-inverse of the full `Σ`.
pub fn q_path_pinv(system: &PathSystem, nma_effect: f64) -> f64 {
    let deviation = deviations(system, nma_effect);
    let pinv = symmetric_pinv(&system.covariance, PINV_REL_TOL);
    deviation.dot(&(pinv * &deviation))
}

fn deviations(system: &PathSystem, nma_effect: f64) -> DVector<f64> {
    system.effects.map(|e| e - nma_effect)
}

/// Full pipeline for `(i, j)`: hat row, flow, paths, reduction, Q, Netpath matrix.
pub fn analyze_comparison(
    laplacian: &LaplacianSystem,
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
    options: &AnalysisOptions,
) -> Result<ComparisonAnalysis> {
    let a = network.node_index(i)?;
    let b = network.node_index(j)?;
    if a == b {
        return Err(Error::SameTreatment(i.to_string()));
    }
    analyze_by_index(laplacian, network, a, b, options)
}

fn analyze_by_index(
    laplacian: &LaplacianSystem,
    network: &EvidenceNetwork,
    a: usize,
    b: usize,
    options: &AnalysisOptions,
) -> Result<ComparisonAnalysis> {
    let nma = nma_estimate_by_index(laplacian, network, a, b);
    let hat_row = hat_row_by_index(laplacian, network, a, b);
    let flow = evidence_flow(&hat_row, network, options.flow_tol)?;
    let paths = enumerate_paths(&flow, network, options.path_cap)?;
    let system = build_path_system(&paths, network);
    let reduction = ref_reduce(&system.adjacency, options.ref_tol)?;
    let reduced = independent_subsystem(&system, &reduction);

    let n_independent = reduced.n_paths();
    let (status, q, dof, p_value) = match n_independent {
        0 => (Status::NoPaths, 0.0, 0, None),
        1 => (Status::SinglePath, 0.0, 0, None),
        k => {
            let q = q_reduced(&reduced, nma.effect)?;
            (Status::Ok, q, k - 1, Some(chi2_sf(q, k - 1)?))
        }
    };
    let netpath = if n_independent >= 2 {
        Some(netpath_matrix(reduced.effects.as_slice())?)
    } else {
        None
    };

    let report = InconsistencyReport {
        comparison: (network.nodes()[a].clone(), network.nodes()[b].clone()),
        q,
        dof,
        p_value,
        n_paths: system.n_paths(),
        n_independent,
        kept_paths: reduced.paths,
        status,
        nma_effect: nma.effect,
        nma_variance: nma.variance,
    };
    Ok(ComparisonAnalysis {
        report,
        netpath,
        nma,
        hat_row,
        flow,
        system,
        reduction,
    })
}

/// Q statistic and Netpath matrix for `(i, j)`.
pub fn q_path(
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
    options: &AnalysisOptions,
) -> Result<(InconsistencyReport, Option<NetpathMatrix>)> {
    let laplacian = laplacian_pinv(network)?;
    let analysis = analyze_comparison(&laplacian, network, i, j, options)?;
    Ok((analysis.report, analysis.netpath))
}

/// All `N(N−1)/2` comparisons `(i, j)` with `i` before `j` in label order.
/// Evaluated in parallel; results come back in that fixed order.
pub fn analyze_all(
    network: &EvidenceNetwork,
    options: &AnalysisOptions,
) -> Result<Vec<ComparisonAnalysis>> {
    let laplacian = laplacian_pinv(network)?;
    network
        .comparison_pairs()
        .into_par_iter()
        .map(|(a, b)| analyze_by_index(&laplacian, network, a, b, options))
        .collect()
}
