//! Weighted digraphs, the standing assumptions (weight-balanced, strongly
//! connected), and Laplacian spectral quantities.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Tolerance enforced on Laplacian row sums at construction.
const ROW_SUM_TOL: f64 = 1e-12;

/// A weighted directed graph with cached degrees and Laplacian.
///
/// Edge `(i, j)` exists iff `w_ij > 0`; agent `i` listens to its
/// out-neighbors `j` with `w_ij > 0`. Self-loops are accepted: they
/// contribute to both degrees, cancel on the Laplacian diagonal, and
/// contribute nothing to control sums.
#[derive(Debug, Clone)]
pub struct Digraph {
    n: usize,
    weights: DMatrix<f64>,
    out_degree: Vec<f64>,
    in_degree: Vec<f64>,
    laplacian: DMatrix<f64>,
}

/// Spectral quantities of the symmetrized Laplacian `(L + L^T)/2`, plus the
/// induced 2-norm of `L` itself.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum {
    /// Second-smallest eigenvalue of `(L + L^T)/2`.
    pub lambda2: f64,
    /// Largest eigenvalue of `(L + L^T)/2`.
    pub lambda_n: f64,
    /// Induced 2-norm of `L` (largest singular value).
    pub l_norm: f64,
}

impl Digraph {
    /// Builds a digraph from a square non-negative weight matrix.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "weight matrix must be square, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight w[{i}][{j}] = {w} must be a non-negative real"
                    )));
                }
            }
        }

        let out_degree: Vec<f64> = (0..n).map(|i| weights.row(i).sum()).collect();
        let in_degree: Vec<f64> = (0..n).map(|j| weights.column(j).sum()).collect();

        // L = D^out - W; the self-loop weight appears in both terms and
        // cancels on the diagonal.
        let mut laplacian = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                laplacian[(i, j)] = if i == j {
                    out_degree[i] - weights[(i, i)]
                } else {
                    -weights[(i, j)]
                };
            }
        }
        for i in 0..n {
            let row_sum: f64 = laplacian.row(i).sum();
            debug_assert!(
                row_sum.abs() <= ROW_SUM_TOL,
                "Laplacian row {i} sums to {row_sum}"
            );
        }

        Ok(Self {
            n,
            weights,
            out_degree,
            in_degree,
            laplacian,
        })
    }

    /// Builds a digraph from row-major nested arrays, as read from scenario files.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidGraph(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        let weights = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_weights(weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn out_degree(&self, i: usize) -> f64 {
        self.out_degree[i]
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.in_degree[i]
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Out-neighbors of `i`, i.e. all `j` with `w_ij > 0` (self-loops included).
    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.weights[(i, j)] > 0.0)
    }

    /// Largest out-edge weight of agent `i`, 0 if it has no out-neighbors.
    pub fn max_out_weight(&self, i: usize) -> f64 {
        self.out_neighbors(i)
            .map(|j| self.weights[(i, j)])
            .fold(0.0, f64::max)
    }

    pub fn out_neighbor_count(&self, i: usize) -> usize {
        self.out_neighbors(i).count()
    }

    /// True iff `max_i |d_i^out - d_i^in| <= tol`.
    pub fn is_weight_balanced(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (self.out_degree[i] - self.in_degree[i]).abs() <= tol)
    }

    /// True iff every vertex reaches every other along positive-weight
    /// directed edges. Self-loops are ignored for reachability.
    pub fn is_strongly_connected(&self) -> bool {
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                let w = if reversed {
                    self.weights[(j, i)]
                } else {
                    self.weights[(i, j)]
                };
                if j != i && w > 0.0 && !*seen_j {
                    *seen_j = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Eigenvalue data of the symmetrized Laplacian and the 2-norm of `L`.
    ///
    /// Requires a weight-balanced, strongly connected digraph so that the
    /// quantities are meaningful certificates (`lambda2 > 0`).
    pub fn spectrum(&self) -> Result<Spectrum> {
        if !self.is_weight_balanced(1e-9) {
            return Err(Error::InvalidGraph(
                "spectrum requires a weight-balanced digraph".into(),
            ));
        }
        if !self.is_strongly_connected() {
            return Err(Error::InvalidGraph(
                "spectrum requires a strongly connected digraph".into(),
            ));
        }
        let sym = (&self.laplacian + self.laplacian.transpose()) * 0.5;
        let mut eigen: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigen.sort_by(|a, b| a.total_cmp(b));
        let l_norm = self
            .laplacian
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max);
        Ok(Spectrum {
            lambda2: eigen[1],
            lambda_n: eigen[self.n - 1],
            l_norm,
        })
    }
}

/// The four 5-agent benchmark networks used throughout the test suite.
pub mod networks {
    use super::Digraph;

    /// Network 1: random network.
    pub fn net1() -> Digraph {
        let s = 1.0 / 6.0;
        Digraph::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5, 0.0],
            vec![5.0 * s, 0.0, s, 0.0, 0.0],
            vec![s, 0.0, s, 0.5, s],
            vec![0.0, 0.0, s, 0.0, 5.0 * s],
        ])
        .expect("builtin network")
    }

    /// Network 2: ring network.
    pub fn net2() -> Digraph {
        Digraph::from_rows(&[
            vec![0.0, 0.5, 0.0, 0.0, 0.5],
            vec![0.5, 0.0, 0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.5, 0.0, 0.5],
            vec![0.5, 0.0, 0.0, 0.5, 0.0],
        ])
        .expect("builtin network")
    }

    /// Network 3: complete network.
    pub fn net3() -> Digraph {
        Digraph::from_rows(&[
            vec![0.0, 0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.0, 0.25, 0.25, 0.25],
            vec![0.25, 0.25, 0.0, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.0, 0.25],
            vec![0.25, 0.25, 0.25, 0.25, 0.0],
        ])
        .expect("builtin network")
    }

    /// Network 4: star network.
    pub fn net4() -> Digraph {
        Digraph::from_rows(&[
            vec![0.0, 0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.0, 0.0, 0.0, 0.0],
            vec![0.25, 0.0, 0.0, 0.0, 0.0],
            vec![0.25, 0.0, 0.0, 0.0, 0.0],
            vec![0.25, 0.0, 0.0, 0.0, 0.0],
        ])
        .expect("builtin network")
    }

    /// Looks a builtin network up by its scenario-file name.
    pub fn by_name(name: &str) -> Option<Digraph> {
        match name {
            "net1" => Some(net1()),
            "net2" => Some(net2()),
            "net3" => Some(net3()),
            "net4" => Some(net4()),
            _ => None,
        }
    }
}
