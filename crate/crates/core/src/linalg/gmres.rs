//! Restarted GMRES with left preconditioning and Givens-rotation least
//! squares. Convergence is always verified against the true unpreconditioned
//! residual before returning.

use crate::error::{Error, Result};
use crate::linalg::csr::{axpy, dot, norm2};
use crate::linalg::ops::LinearOp;

#[derive(Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve A x = b to a relative residual `tol`, starting from zero.
pub fn gmres(
    apply: &dyn LinearOp,
    b: &[f64],
    precond: &dyn LinearOp,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    gmres_with_guess(apply, b, precond, None, tol, restart, max_iter)
}

/// Warm-started variant. The guess is handled by defect correction: the
/// zero-start solver runs on r0 = b - A x0, so convergence is relative to
/// the size of the remaining update and small corrections near a fixed
/// point are fully resolved.
pub fn gmres_with_guess(
    apply: &dyn LinearOp,
    b: &[f64],
    precond: &dyn LinearOp,
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    match x0 {
        None => gmres_core(apply, b, precond, tol, restart, max_iter),
        Some(guess) => {
            let ax = apply.apply(guess);
            let mut defect = b.to_vec();
            for (d, a) in defect.iter_mut().zip(&ax) {
                *d -= a;
            }
            let mut out = gmres_core(apply, &defect, precond, tol, restart, max_iter)?;
            for (xi, gi) in out.x.iter_mut().zip(guess) {
                *xi += gi;
            }
            Ok(out)
        }
    }
}

fn gmres_core(
    apply: &dyn LinearOp,
    b: &[f64],
    precond: &dyn LinearOp,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    if apply.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: apply.dim(),
            found: n,
            context: "gmres rhs",
        });
    }
    if tol <= 0.0 || restart == 0 {
        return Err(Error::InvalidArgument(
            "gmres needs tol > 0 and restart >= 1".into(),
        ));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut x = vec![0.0; n];
    let mut total_iters = 0usize;
    let mut history = Vec::new();
    let mut work = vec![0.0; n];

    let true_residual = |x: &[f64], work: &mut [f64]| {
        apply.apply_into(x, work);
        let mut r = b.to_vec();
        for (ri, wi) in r.iter_mut().zip(work.iter()) {
            *ri -= wi;
        }
        r
    };

    loop {
        let r = true_residual(&x, &mut work);
        let res_norm = norm2(&r) / b_norm;
        history.push(res_norm);
        if res_norm <= tol {
            return Ok(GmresOutcome {
                x,
                iterations: total_iters,
                residual: res_norm,
            });
        }
        if total_iters >= max_iter {
            return Err(Error::NonConvergence {
                solver: "gmres",
                iterations: total_iters,
                residual: res_norm,
                history,
            });
        }

        // Arnoldi on the left-preconditioned residual
        let z0 = precond.apply(&r);
        let beta = norm2(&z0);
        if beta == 0.0 {
            // preconditioned residual vanished; the true residual check above
            // governs, so force one more outer pass with a perturbed guess
            return Err(Error::NonConvergence {
                solver: "gmres",
                iterations: total_iters,
                residual: res_norm,
                history,
            });
        }
        let m = restart.min(max_iter - total_iters);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(z0.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0_f64; m]; m + 1];
        let mut cs = vec![0.0_f64; m];
        let mut sn = vec![0.0_f64; m];
        let mut g = vec![0.0_f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            apply.apply_into(&basis[k], &mut work);
            let mut w = precond.apply(&work);
            for (i, base) in basis.iter().enumerate().take(k + 1) {
                let hik = dot(&w, base);
                hess[i][k] = hik;
                axpy(-hik, base, &mut w);
            }
            let hk1 = norm2(&w);
            hess[k + 1][k] = hk1;
            total_iters += 1;
            k_used = k + 1;

            // apply previous rotations to the new column
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = (hess[k][k] * hess[k][k] + hk1 * hk1).sqrt();
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hk1 / denom;
            hess[k][k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            let est = g[k + 1].abs() / b_norm;
            history.push(est);
            if est <= 0.1 * tol || hk1 == 0.0 {
                break;
            }
            if k + 1 < m {
                basis.push(w.iter().map(|v| v / hk1).collect());
            }
        }

        // back substitution for the Krylov coefficients
        let mut y = vec![0.0_f64; k_used];
        for i in (0..k_used).rev() {
            let mut sum = g[i];
            for j in i + 1..k_used {
                sum -= hess[i][j] * y[j];
            }
            y[i] = sum / hess[i][i];
        }
        for (j, &yj) in y.iter().enumerate() {
            axpy(yj, &basis[j], &mut x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::csr::SparseMatrix;
    use crate::linalg::ops::{IdentityOp, JacobiPrecond};
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn identity_converges_immediately() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = vec![2.0, -1.0];
        let out = gmres(&a, &b, &IdentityOp(2), 1e-12, 10, 100).unwrap();
        assert!(out.iterations <= 1);
        assert!((out.x[0] - 2.0).abs() <= 1e-12);
        assert!((out.x[1] + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn upper_triangular_system() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let b = vec![2.0, 1.0];
        let out = gmres(&a, &b, &IdentityOp(2), 1e-12, 10, 100).unwrap();
        assert!((out.x[0] - 1.0).abs() <= 1e-10);
        assert!((out.x[1] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn diagonal_spd_matches_direct() {
        let n = 20;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let diag: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = diag[i];
                row
            })
            .collect();
        let a = SparseMatrix::from_dense(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jac = JacobiPrecond::new(&a);
        let out = gmres(&a, &b, &jac, 1e-12, 30, 1000).unwrap();
        for i in 0..n {
            assert!((out.x[i] - b[i] / diag[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn terminates_within_dimension_iterations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let n = rng.gen_range(3..12);
            let mut dense = vec![vec![0.0; n]; n];
            for (i, row) in dense.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rng.gen_range(-1.0..1.0);
                    if i == j {
                        *v += n as f64;
                    }
                }
            }
            let a = SparseMatrix::from_dense(&dense);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out = gmres(&a, &b, &IdentityOp(n), 1e-12, n + 1, 10 * n).unwrap();
            assert!(
                out.iterations <= n + 1,
                "n = {n}, iterations = {}",
                out.iterations
            );
        }
    }

    #[test]
    fn reports_nonconvergence_with_history() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let err = gmres(&a, &[1.0, 1.0], &IdentityOp(2), 1e-16, 1, 1);
        match err {
            Err(Error::NonConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
