//! Linear dependencies among paths, found by reducing the path-adjacency
//! matrix to row echelon form.
//!
//! Gaussian elimination with partial pivoting runs column by column. A column
//! with no usable pivot is linearly dependent on the columns before it, and
//! because `A` is symmetric, column `k` is path `k`. Paths are therefore
//! examined in enumeration order and the later member of a dependent set is
//! the one dropped. Which member goes does not change `Q` (see
//! [`crate::inconsistency`]).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::check_tolerance;
use crate::paths::PathSystem;

pub const DEFAULT_REF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RemovedPath {
    /// Zero-based path index.
    pub index: usize,
    /// Number of row operations performed when the path's column was found
    /// to have no pivot.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub kept: Vec<usize>,
    pub removed: Vec<RemovedPath>,
    pub rank: usize,
    /// Row echelon form of the input, zero rows last.
    #[serde(skip)]
    pub echelon: DMatrix<f64>,
    /// Original row index now sitting at each echelon row (swap tracking).
    #[serde(skip)]
    pub row_order: Vec<usize>,
}

/// Reduce a symmetric `P×P` matrix; entries at or below
/// `tol · max|initial entry|` count as zero.
pub fn ref_reduce(a: &DMatrix<f64>, tol: f64) -> Result<ReductionResult> {
    check_tolerance(tol)?;
    if a.nrows() != a.ncols() {
        return Err(Error::NumericalFailure(format!(
            "path-adjacency matrix is {}×{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "path-adjacency matrix has non-finite entries".into(),
        ));
    }

    let n = a.nrows();
    let threshold = tol * a.amax();
    let mut m = a.clone();
    let mut row_order: Vec<usize> = (0..n).collect();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    let mut pivot_row = 0;
    let mut step = 0;

    for col in 0..n {
        let best = (pivot_row..n).fold(None, |best: Option<(usize, f64)>, r| {
            let v = m[(r, col)].abs();
            match best {
                Some((_, b)) if b >= v => best,
                _ => Some((r, v)),
            }
        });
        let Some((p, _)) = best.filter(|&(_, v)| v > threshold) else {
            removed.push(RemovedPath { index: col, step });
            continue;
        };
        if p != pivot_row {
            m.swap_rows(p, pivot_row);
            row_order.swap(p, pivot_row);
        }
        let pivot = m[(pivot_row, col)];
        for r in pivot_row + 1..n {
            let factor = m[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let delta = factor * m[(pivot_row, c)];
                m[(r, c)] -= delta;
            }
            m[(r, col)] = 0.0;
            step += 1;
        }
        kept.push(col);
        pivot_row += 1;
    }

    // Clean numerically vanished rows so the echelon shape is exact.
    for r in pivot_row..n {
        for c in 0..n {
            if m[(r, c)].abs() <= threshold {
                m[(r, c)] = 0.0;
            }
        }
    }

    Ok(ReductionResult {
        rank: kept.len(),
        kept,
        removed,
        echelon: m,
        row_order,
    })
}

/// Restrict every path-level quantity to the independent paths.
pub fn independent_subsystem(system: &PathSystem, reduction: &ReductionResult) -> PathSystem {
    system.select(&reduction.kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn ruecker_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            5,
            &[
                2., 1., 1., 0., 0., //
                1., 3., 0., 2., 1., //
                1., 0., 3., 2., 1., //
                0., 2., 2., 4., 2., //
                0., 1., 1., 2., 3.,
            ],
        )
    }

    #[test]
    fn worked_example_drops_fourth_path() {
        let r = ref_reduce(&ruecker_a(), DEFAULT_REF_TOL).unwrap();
        assert_eq!(r.rank, 4);
        assert_eq!(r.kept, [0, 1, 2, 4]);
        assert_eq!(r.removed, [RemovedPath { index: 3, step: 7 }]);
        // echelon form after the swap of rows four and five
        let want = DMatrix::from_row_slice(
            5,
            5,
            &[
                2., 1., 1., 0., 0., //
                0., 2.5, -0.5, 2., 1., //
                0., 0., 2.4, 2.4, 1.2, //
                0., 0., 0., 0., 2., //
                0., 0., 0., 0., 0.,
            ],
        );
        assert!((&r.echelon - want).amax() < 1e-12, "{}", r.echelon);
        assert_eq!(r.row_order, [0, 1, 2, 4, 3]);
    }

    #[test]
    fn identity_is_full_rank() {
        let r = ref_reduce(&DMatrix::identity(3, 3), DEFAULT_REF_TOL).unwrap();
        assert_eq!(r.rank, 3);
        assert!(r.removed.is_empty());
    }

    #[test]
    fn bad_tolerance() {
        assert_eq!(
            ref_reduce(&DMatrix::identity(2, 2), 0.0),
            Err(Error::InvalidTolerance(0.0))
        );
        assert_eq!(
            ref_reduce(&DMatrix::identity(2, 2), -1.0),
            Err(Error::InvalidTolerance(-1.0))
        );
    }

    #[test]
    fn kept_submatrix_is_full_rank() {
        let a = ruecker_a();
        let r = ref_reduce(&a, DEFAULT_REF_TOL).unwrap();
        let sub = DMatrix::from_fn(r.rank, r.rank, |i, j| a[(r.kept[i], r.kept[j])]);
        let again = ref_reduce(&sub, DEFAULT_REF_TOL).unwrap();
        assert_eq!(again.rank, r.rank);
        assert!(again.removed.is_empty());
    }

    #[test]
    fn duplicate_path_rows_drop_the_later_one() {
        // paths 0 and 2 identical
        let c = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 0., 1., 1., 1., 1., 0.]);
        let a = &c * c.transpose();
        let r = ref_reduce(&a, DEFAULT_REF_TOL).unwrap();
        assert_eq!(r.kept, [0, 1]);
        assert_eq!(r.removed.iter().map(|x| x.index).collect::<Vec<_>>(), [2]);
    }

    fn eigen_rank(a: &DMatrix<f64>, tol: f64) -> usize {
        let eig = SymmetricEigen::new(a.clone());
        let max = eig.eigenvalues.amax();
        eig.eigenvalues
            .iter()
            .filter(|v| v.abs() > tol * max)
            .count()
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ref_rank_matches_eigen_rank(
                rows in 1usize..9,
                cols in 1usize..7,
                bits in prop::collection::vec(any::<bool>(), 63),
            ) {
                // random 0/1 incidence, forced non-empty rows
                let mut c = DMatrix::<f64>::zeros(rows, cols);
                for r in 0..rows {
                    for k in 0..cols {
                        c[(r, k)] = if bits[r * cols + k] { 1.0 } else { 0.0 };
                    }
                    c[(r, r % cols)] = 1.0;
                }
                let a = &c * c.transpose();
                let r = ref_reduce(&a, DEFAULT_REF_TOL).unwrap();
                prop_assert_eq!(r.rank, eigen_rank(&a, 1e-9));
                prop_assert_eq!(r.kept.len() + r.removed.len(), rows);
            }
        }
    }
}
