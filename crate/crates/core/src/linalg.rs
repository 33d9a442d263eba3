//! Thin wrapper over the sparse LU factorisation used by the Newton solvers.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use faer::prelude::*;

use crate::error::{Error, Result};

/// Square sparse system assembled from (row, col, value) entries; repeated
/// entries are summed.
#[derive(Debug, Default)]
pub(crate) struct SparseSystem {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseSystem {
    pub(crate) fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub(crate) fn add(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push(Triplet::new(row, col, value));
        }
    }

    /// Solves `A x = rhs` by sparse LU with partial pivoting, sequentially so
    /// that results do not depend on the thread count.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        faer::set_global_parallelism(Par::Seq);
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular system".into()));
        }
        Ok(out)
    }
}
