//! Symmetric eigensolves and operator norms.
//!
//! Two numerical workhorses live here:
//!
//! * [`symmetric_eigenvalues`], a cyclic Jacobi iteration. Deterministic,
//!   dependency-free, and accurate to a small multiple of machine epsilon
//!   for the matrix sizes this crate targets (a few thousand rows at most).
//! * [`spectral_norm`], the largest singular value computed by power
//!   iteration on `E^T E`. The Rayleigh quotient of a positive semidefinite
//!   matrix approaches its top eigenvalue from below, so the returned value
//!   never overshoots the true norm beyond roundoff.

/// Off-diagonal Frobenius mass below this multiple of the total scale stops
/// the Jacobi sweeps.
const JACOBI_TOL: f64 = 1e-14;

/// Jacobi sweeps needed in practice are single digits; this is a hard stop.
const JACOBI_MAX_SWEEPS: usize = 60;

/// Convergence tolerance on the Rayleigh quotient of `E^T E`.
const POWER_TOL: f64 = 1e-12;

/// Iteration cap for the power method.
const POWER_MAX_ITER: usize = 100_000;

use crate::matrix::{dot, l2_norm, Matrix};

/// Eigenvalues of a symmetric matrix, sorted in descending order.
///
/// The input is read as-is; callers are responsible for symmetry. Cyclic
/// Jacobi rotations annihilate off-diagonal entries pairwise until their
/// combined Frobenius mass falls below `1e-14` of the matrix scale.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues need a square matrix");
    let n = m.rows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m.get(0, 0)];
    }

    let mut a = m.clone();
    let scale = a.frobenius().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_TOL * scale {
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller root of t^2 + 2 t theta - 1 = 0, for stability.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a.set(k, p, new_kp);
                    a.set(p, k, new_kp);
                    a.set(k, q, new_kq);
                    a.set(q, k, new_kq);
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).expect("eigenvalues are finite"));
    eig
}

/// Largest singular value of a (possibly rectangular) matrix.
///
/// Power iteration on `E^T E` with a fixed pseudorandom start vector; the
/// result is deterministic for a given input. Converges when the Rayleigh
/// quotient moves less than `1e-12` (relative to its size) on two
/// consecutive steps, or after `1e5` iterations.
pub fn spectral_norm(e: &Matrix) -> f64 {
    if e.max_abs() == 0.0 {
        return 0.0;
    }
    let cols = e.cols();

    // Fixed start, hashed so no structured input is accidentally orthogonal
    // to the top singular subspace.
    let mut v: Vec<f64> = (0..cols)
        .map(|i| {
            let h = (i as u64)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(0x2545_F491_4F6C_DD1D);
            1.0 + (h >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let nv = l2_norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }

    let et = e.transpose();
    let mut lambda_prev = f64::NAN;
    let mut stable = 0;
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let ev = e.mul_vec(&v);
        let w = et.mul_vec(&ev);
        lambda = dot(&v, &w);
        let wn = l2_norm(&w);
        if wn == 0.0 {
            // v landed in the kernel; the Rayleigh quotient already says 0.
            return 0.0;
        }
        for (x, &wi) in v.iter_mut().zip(&w) {
            *x = wi / wn;
        }
        if !lambda_prev.is_nan() && (lambda - lambda_prev).abs() <= POWER_TOL * lambda.max(1.0) {
            stable += 1;
            if stable >= 2 {
                break;
            }
        } else {
            stable = 0;
        }
        lambda_prev = lambda;
    }
    lambda.max(0.0).sqrt()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot collapses below `1e-300`, which for this
/// crate's callers signals a singular deflated system.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    assert!(a.is_square());
    let n = a.rows();
    assert_eq!(b.len(), n);

    let mut m = a.clone();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let mut pivot = col;
        let mut best = m.get(col, col).abs();
        for r in (col + 1)..n {
            let cand = m.get(r, col).abs();
            if cand > best {
                best = cand;
                pivot = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot, c));
                m.set(pivot, c, tmp);
            }
            rhs.swap(col, pivot);
        }
        let diag = m.get(col, col);
        for r in (col + 1)..n {
            let f = m.get(r, col) / diag;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                let v = m.get(r, c) - f * m.get(col, c);
                m.set(r, c, v);
            }
            rhs[r] -= f * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..n {
            acc -= m.get(row, c) * x[c];
        }
        x[row] = acc / m.get(row, row);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalues_of_two_state_lazy_chain() {
        // [[1-p, p], [p, 1-p]] has eigenvalues 1 and 1-2p.
        let m = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let eig = symmetric_eigenvalues(&m);
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig[1], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_diagonal_matrix_are_its_entries() {
        let m = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let eig = symmetric_eigenvalues(&m);
        assert_eq!(eig, vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn eigenvalues_of_rank_one_uniform_matrix() {
        // (1/n) J has spectrum {1, 0, ..., 0}.
        let n = 4;
        let m = Matrix::constant(n, 1.0 / n as f64);
        let eig = symmetric_eigenvalues(&m);
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-13);
        for &e in &eig[1..] {
            assert_abs_diff_eq!(e, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let m = Matrix::from_rows(&[
            vec![0.5, 0.2, 0.3],
            vec![0.2, 0.6, 0.2],
            vec![0.3, 0.2, 0.5],
        ]);
        let eig = symmetric_eigenvalues(&m);
        let trace = 0.5 + 0.6 + 0.5;
        assert_abs_diff_eq!(eig.iter().sum::<f64>(), trace, epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_of_zero_sum_flip() {
        let e = Matrix::from_rows(&[vec![-0.1, 0.1], vec![0.1, -0.1]]);
        assert_abs_diff_eq!(spectral_norm(&e), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_of_skew_matrix() {
        let e = Matrix::from_rows(&[vec![0.0, 0.1], vec![-0.1, 0.0]]);
        assert_abs_diff_eq!(spectral_norm(&e), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_matches_jacobi_on_gram_matrix() {
        let e = Matrix::from_rows(&[
            vec![0.03, -0.01, -0.02],
            vec![-0.01, 0.05, -0.04],
            vec![-0.02, -0.04, 0.06],
        ]);
        let gram = e.transpose().mul(&e);
        let top = symmetric_eigenvalues(&gram)[0].max(0.0).sqrt();
        assert_abs_diff_eq!(spectral_norm(&e), top, epsilon = 1e-11);
    }

    #[test]
    fn spectral_norm_of_zero_matrix_is_zero() {
        assert_eq!(spectral_norm(&Matrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn solve_linear_recovers_known_solution() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve_linear(&a, &[5.0, 10.0]).expect("nonsingular");
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_linear_rejects_singular_system() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_linear(&a, &[1.0, 2.0]).is_none());
    }
}
