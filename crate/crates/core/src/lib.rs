//! Path-based inconsistency assessment for network meta-analysis.
//!
//! A comparison's row of the hat matrix is read as a flow of evidence through
//! the treatment network. Every directed path in that flow gives an estimate
//! of the comparison; after dropping linearly dependent paths the estimates
//! are tested against the network estimate with a chi-square statistic.
//!
//! ```
//! use netpath::{build_network, q_path, AnalysisOptions, DirectComparison};
//!
//! let net = build_network(&[
//!     DirectComparison::new("A", "B", 0.5, 0.1).unwrap(),
//!     DirectComparison::new("B", "C", 0.5, 0.1).unwrap(),
//!     DirectComparison::new("A", "C", 1.0, 0.1).unwrap(),
//! ])
//! .unwrap();
//! let (report, _) = q_path(&net, "A", "C", &AnalysisOptions::default()).unwrap();
//! assert!(report.q < 1e-12);
//! ```

pub mod comparators;
pub mod distributions;
pub mod error;
pub mod flow;
pub mod heatmap;
pub mod inconsistency;
pub mod independence;
pub mod io;
pub mod linalg;
pub mod netpath;
pub mod network;
pub mod nma;
pub mod paths;
pub mod report;

pub use comparators::{enumerate_loops, loop_test, side_split, SideSplit, ZTestResult};
pub use distributions::{chi2_sf, normal_sf_two_sided};
pub use error::{Error, Result};
pub use flow::{evidence_flow, EvidenceFlow, FlowArc, DEFAULT_FLOW_TOL};
pub use inconsistency::{
    analyze_all, analyze_comparison, q_path, q_path_pinv, q_reduced, AnalysisOptions,
    ComparisonAnalysis, InconsistencyReport, Status,
};
pub use independence::{
    independent_subsystem, ref_reduce, ReductionResult, RemovedPath, DEFAULT_REF_TOL,
};
pub use netpath::{netpath_matrix, NetpathMatrix};
pub use network::{build_network, pool_pairwise, DirectComparison, EvidenceNetwork, TreatmentId};
pub use nma::{hat_row, laplacian_pinv, nma_estimate, HatRow, LaplacianSystem, NmaEstimate};
pub use paths::{build_path_system, enumerate_paths, EvidencePath, PathSystem, DEFAULT_PATH_CAP};
