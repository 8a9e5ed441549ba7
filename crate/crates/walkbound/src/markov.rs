//! Row-stochastic matrices and the classical quantities the bound checks
//! consume: stationary distributions, symmetric spectra, contraction
//! coefficients, and total-variation distances.
//!
//! Conventions, fixed once here so every downstream module agrees:
//!
//! ```text
//! P is row-stochastic:   P[x][y] >= 0,  sum_y P[x][y] = 1
//! stationary pi is a row vector fixed on the left:  pi P = pi
//! spectral gap of a symmetric chain:  gap = 1 - lambda_2
//! contraction coefficient:  tau(P) = max_{i<j} (1/2) sum_k |P[i][k] - P[j][k]|
//! total variation:  tv(p, q) = (1/2) sum_x |p[x] - q[x]|
//! ```
//!
//! `tau` measures the worst-case one-step contraction of the map
//! `v -> v P` over zero-sum directions in the l1 ball. The supremum over
//! that polytope is attained at a vertex `(e_i - e_j)/2`, which collapses
//! the definition to the pairwise row formula above; the test suite checks
//! the two forms agree bit for bit.

use std::cell::OnceCell;

use crate::eigen::{solve_linear, spectral_norm, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Row sums further than this from 1 are rejected outright.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Asymmetry below this counts as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// l1 movement per step under which the stationary iteration stops.
const STATIONARY_STEP_TOL: f64 = 1e-15;

/// Iteration cap before falling back to the deflated direct solve.
const STATIONARY_MAX_ITER: usize = 500_000;

/// A validated row-stochastic matrix with cached structure flags.
#[derive(Debug, Clone)]
pub struct StochasticMatrix {
    mat: Matrix,
    symmetric: bool,
    ergodic: bool,
    // Eigensolves are the expensive part of every bound battery; several
    // checks ask for the same spectrum, so it is computed at most once.
    spectrum: OnceCell<SpectralSummary>,
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

/// Full symmetric spectrum in descending order plus the gap `1 - lambda_2`.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
}

impl StochasticMatrix {
    /// Checks squareness, nonnegativity, and row sums, then classifies the
    /// matrix as symmetric and/or ergodic. The entries are stored as given;
    /// validation never rescales.
    pub fn validate(raw: Matrix) -> Result<Self> {
        if !raw.is_square() {
            return Err(Error::NotSquare {
                rows: raw.rows(),
                cols: raw.cols(),
            });
        }
        let n = raw.rows();
        for i in 0..n {
            for j in 0..n {
                let v = raw.get(i, j);
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum = raw.row_sum(i);
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSumViolation { row: i, sum });
            }
        }
        let symmetric = n > 0 && raw.symmetry_defect() <= SYMMETRY_TOL;
        let ergodic = n > 0 && is_ergodic(&raw);
        Ok(StochasticMatrix {
            mat: raw,
            symmetric,
            ergodic,
            spectrum: OnceCell::new(),
        })
    }

    /// Convenience constructor for literal matrices in tests and docs.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validate(Matrix::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    /// Left fixed point `pi P = pi`, normalized to sum 1.
    ///
    /// Runs the half-lazy iteration `x <- (x + xP)/2`, which has the same
    /// fixed point as `P` and converges for every ergodic chain, including
    /// nearly periodic ones. If the iteration has not settled within the
    /// cap, solves the deflated linear system `(P - I)^T x = 0`, `sum x = 1`
    /// directly. The returned residual `||pi P - pi||_1` stays below 1e-10
    /// either way.
    pub fn stationary_distribution(&self) -> Result<Distribution> {
        if !self.ergodic {
            return Err(Error::NotErgodic);
        }
        let n = self.n();
        let mut x = vec![1.0 / n as f64; n];
        let mut settled = false;
        for _ in 0..STATIONARY_MAX_ITER {
            let px = self.mat.vec_mul(&x);
            let mut next: Vec<f64> = x.iter().zip(&px).map(|(a, b)| 0.5 * (a + b)).collect();
            let total: f64 = next.iter().sum();
            for v in next.iter_mut() {
                *v /= total;
            }
            let moved: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            x = next;
            if moved <= STATIONARY_STEP_TOL {
                settled = true;
                break;
            }
        }
        if !settled {
            if let Some(direct) = self.stationary_direct() {
                x = direct;
            }
        }
        for v in x.iter_mut() {
            if *v < 0.0 {
                // Direct solves may leave roundoff-sized negatives.
                *v = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        for v in x.iter_mut() {
            *v /= total;
        }
        Ok(Distribution { weights: x })
    }

    /// Deflated direct solve: replace the last balance equation with the
    /// normalization constraint, then eliminate.
    fn stationary_direct(&self) -> Option<Vec<f64>> {
        let n = self.n();
        let mut sys = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // (P - I)^T
                let v = self.mat.get(j, i) - if i == j { 1.0 } else { 0.0 };
                sys.set(i, j, v);
            }
        }
        for j in 0..n {
            sys.set(n - 1, j, 1.0);
        }
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        solve_linear(&sys, &rhs)
    }

    /// Eigenvalues and gap of a symmetric chain.
    pub fn spectral_summary(&self) -> Result<SpectralSummary> {
        if !self.symmetric {
            return Err(Error::NotSymmetric {
                defect: self.mat.symmetry_defect(),
            });
        }
        let summary = self.spectrum.get_or_init(|| {
            let eigenvalues = symmetric_eigenvalues(&self.mat);
            let gap = if eigenvalues.len() >= 2 {
                (1.0 - eigenvalues[1]).clamp(0.0, 2.0)
            } else {
                // A single-state chain mixes in zero steps.
                1.0
            };
            SpectralSummary { eigenvalues, gap }
        });
        Ok(summary.clone())
    }

    /// Pairwise contraction coefficient in [0, 1].
    pub fn ergodicity_coefficient(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let ri = self.mat.row(i);
                let rj = self.mat.row(j);
                let mut sum = 0.0;
                for k in 0..n {
                    sum += (ri[k] - rj[k]).abs();
                }
                worst = worst.max(0.5 * sum);
            }
        }
        worst
    }
}

impl Distribution {
    /// Wraps a weight vector. Panics on negative weights or a total further
    /// than 1e-9 from 1; all in-crate producers normalize before calling.
    pub fn new(weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        assert!(
            weights.iter().all(|w| *w >= 0.0),
            "negative weight in distribution"
        );
        assert!(
            (total - 1.0).abs() <= 1e-9,
            "distribution sums to {total}, not 1"
        );
        Distribution { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// l1 residual of the left fixed-point equation under `p`.
    pub fn balance_residual(&self, p: &StochasticMatrix) -> f64 {
        let image = p.matrix().vec_mul(&self.weights);
        image
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Half the l1 distance between two probability vectors.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let sum: f64 = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(0.5 * sum)
}

/// `(l2, linf)` operator norms of a perturbation-sized matrix.
///
/// The l2 norm is the largest singular value via power iteration on
/// `E^T E`; the linf norm is the max absolute row sum.
pub fn norms(e: &Matrix) -> (f64, f64) {
    (spectral_norm(e), e.norm_inf())
}

/// Strong connectivity plus aperiodicity of the support digraph.
///
/// Connectivity is checked with forward and reverse reachability from
/// state 0. The period is the gcd of `level[u] + 1 - level[v]` over all
/// support edges `u -> v`, with levels taken from a BFS tree; the chain is
/// aperiodic exactly when that gcd is 1.
fn is_ergodic(p: &Matrix) -> bool {
    let n = p.rows();
    let reach_fwd = reachable(p, false);
    if reach_fwd.iter().any(|r| !r) {
        return false;
    }
    let reach_bwd = reachable(p, true);
    if reach_bwd.iter().any(|r| !r) {
        return false;
    }

    let levels = bfs_levels(p);
    let mut g: u64 = 0;
    for u in 0..n {
        for v in 0..n {
            if p.get(u, v) > 0.0 {
                let d = levels[u] as i64 + 1 - levels[v] as i64;
                g = gcd(g, d.unsigned_abs());
            }
        }
    }
    g == 1
}

fn reachable(p: &Matrix, reverse: bool) -> Vec<bool> {
    let n = p.rows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let edge = if reverse { p.get(v, u) } else { p.get(u, v) };
            if edge > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn bfs_levels(p: &Matrix) -> Vec<usize> {
    let n = p.rows();
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if p.get(u, v) > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::l1_norm;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_two_state_chain_is_symmetric_and_ergodic() {
        let p = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(p.is_symmetric());
        assert!(p.is_ergodic());
    }

    #[test]
    fn two_cycle_is_symmetric_but_periodic() {
        let p = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(p.is_symmetric());
        assert!(!p.is_ergodic(), "period-2 chain must not count as ergodic");
    }

    #[test]
    fn bad_row_sum_is_rejected_with_row_index() {
        let err = StochasticMatrix::from_rows(&[vec![0.6, 0.5], vec![0.4, 0.5]]).unwrap_err();
        match err {
            Error::RowSumViolation { row, sum } => {
                assert_eq!(row, 0);
                assert_abs_diff_eq!(sum, 1.1, epsilon = 1e-15);
            }
            other => panic!("expected RowSumViolation, got {other:?}"),
        }
    }

    #[test]
    fn negative_entry_is_rejected() {
        let err = StochasticMatrix::from_rows(&[vec![1.2, -0.2], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn non_square_is_rejected() {
        let raw = Matrix::from_rows(&[vec![0.5, 0.5]]);
        assert!(matches!(
            StochasticMatrix::validate(raw),
            Err(Error::NotSquare { rows: 1, cols: 2 })
        ));
    }

    #[test]
    fn reducible_chain_is_not_ergodic() {
        let p = StochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!p.is_ergodic());
    }

    #[test]
    fn stationary_of_asymmetric_two_state_chain() {
        // Balance: pi_0 * 0.25 = pi_1 * 0.5, so pi = (2/3, 1/3).
        let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        let pi = p.stationary_distribution().unwrap();
        assert_abs_diff_eq!(pi.weights()[0], 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pi.weights()[1], 1.0 / 3.0, epsilon = 1e-10);
        assert!(pi.balance_residual(&p) <= 1e-10);
    }

    #[test]
    fn stationary_of_symmetric_chain_is_uniform() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.25, 0.25],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        let pi = p.stationary_distribution().unwrap();
        for &w in pi.weights() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_requires_ergodicity() {
        let p = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            p.stationary_distribution(),
            Err(Error::NotErgodic)
        ));
    }

    #[test]
    fn spectrum_of_lazy_two_state_chain() {
        let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let s = p.spectral_summary().unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.gap, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_of_uniform_chain_is_rank_one() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let s = p.spectral_summary().unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-13);
        for &e in &s.eigenvalues[1..] {
            assert_abs_diff_eq!(e, 0.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(s.gap, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn spectrum_of_identity_has_zero_gap() {
        let p = StochasticMatrix::validate(Matrix::identity(3)).unwrap();
        let s = p.spectral_summary().unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn spectral_summary_rejects_asymmetric_input() {
        let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            p.spectral_summary(),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn contraction_coefficient_frozen_values() {
        let uniform = StochasticMatrix::validate(Matrix::constant(5, 0.2)).unwrap();
        assert_eq!(uniform.ergodicity_coefficient(), 0.0);

        let identity = StochasticMatrix::validate(Matrix::identity(3)).unwrap();
        assert_eq!(identity.ergodicity_coefficient(), 1.0);

        let lazy = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        assert_abs_diff_eq!(lazy.ergodicity_coefficient(), 0.4, epsilon = 1e-15);
    }

    /// Vertex-enumeration oracle: the sup of `||v P||_1` over the zero-sum
    /// l1 ball is attained at some `(e_i - e_j)/2`. Evaluating the matrix
    /// action literally at those vertices must reproduce the pairwise
    /// formula bit for bit, because halving is exact in binary floating
    /// point.
    fn contraction_by_vertex_enumeration(p: &StochasticMatrix) -> f64 {
        let n = p.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut v = vec![0.0; n];
                v[i] = 0.5;
                v[j] = -0.5;
                let image = p.matrix().vec_mul(&v);
                worst = worst.max(l1_norm(&image));
            }
        }
        worst
    }

    #[test]
    fn contraction_matches_vertex_oracle_exactly() {
        let chains = [
            StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap(),
            StochasticMatrix::from_rows(&[
                vec![0.1, 0.6, 0.3],
                vec![0.25, 0.5, 0.25],
                vec![0.4, 0.05, 0.55],
            ])
            .unwrap(),
            StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap(),
        ];
        for p in &chains {
            assert_eq!(
                p.ergodicity_coefficient(),
                contraction_by_vertex_enumeration(p),
                "closed form and vertex oracle disagree"
            );
        }
    }

    #[test]
    fn tv_distance_frozen_values() {
        let p = Distribution::new(vec![0.5, 0.5]);
        let q = Distribution::new(vec![0.7, 0.3]);
        assert_abs_diff_eq!(tv_distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);

        let disjoint_a = Distribution::new(vec![1.0, 0.0]);
        let disjoint_b = Distribution::new(vec![0.0, 1.0]);
        assert_eq!(tv_distance(&disjoint_a, &disjoint_b).unwrap(), 1.0);
    }

    #[test]
    fn tv_distance_rejects_dimension_mismatch() {
        let p = Distribution::new(vec![0.5, 0.5]);
        let q = Distribution::new(vec![1.0]);
        assert!(matches!(
            tv_distance(&p, &q),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn norm_pair_frozen_values() {
        let e = Matrix::from_rows(&[vec![-0.1, 0.1], vec![0.1, -0.1]]);
        let (l2, linf) = norms(&e);
        assert_abs_diff_eq!(l2, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(linf, 0.2, epsilon = 1e-15);

        let skew = Matrix::from_rows(&[vec![0.0, 0.1], vec![-0.1, 0.0]]);
        let (l2, linf) = norms(&skew);
        assert_abs_diff_eq!(l2, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(linf, 0.1, epsilon = 1e-15);

        assert_eq!(norms(&Matrix::zeros(2, 2)), (0.0, 0.0));
    }

    #[test]
    fn three_cycle_is_ergodic_iff_it_has_a_shortcut() {
        // Pure 3-cycle: period 3.
        let cycle = StochasticMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(!cycle.is_ergodic());

        // A self-loop breaks the period.
        let lazy_cycle = StochasticMatrix::from_rows(&[
            vec![0.1, 0.9, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(lazy_cycle.is_ergodic());
    }
}
