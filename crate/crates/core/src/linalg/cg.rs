//! Preconditioned conjugate gradients with optional deflation of the
//! constant vector, for SPD (or semidefinite-with-constant-nullspace)
//! operators such as the pressure Schur complement.

use crate::error::{Error, Result};
use crate::linalg::csr::{axpy, dot, norm2};
use crate::linalg::ops::{IdentityOp, LinearOp};

pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Remove the mean so the vector is orthogonal to the constants.
fn project_out_constants(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for vi in v.iter_mut() {
        *vi -= mean;
    }
}

/// Plain entry point: no preconditioner, zero initial guess.
pub fn cg(
    apply: &dyn LinearOp,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    deflate_constants: bool,
) -> Result<CgOutcome> {
    cg_with(
        apply,
        b,
        &IdentityOp(b.len()),
        None,
        tol,
        max_iter,
        deflate_constants,
    )
}

/// Preconditioned and optionally warm-started solve. A guess is handled by
/// defect correction: the zero-start iteration runs on r0 = b - A x0, so
/// convergence is relative to the remaining update.
pub fn cg_with(
    apply: &dyn LinearOp,
    b: &[f64],
    precond: &dyn LinearOp,
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    deflate_constants: bool,
) -> Result<CgOutcome> {
    match x0 {
        None => cg_core(apply, b, precond, tol, max_iter, deflate_constants),
        Some(guess) => {
            let mut guess = guess.to_vec();
            if deflate_constants {
                project_out_constants(&mut guess);
            }
            let ax = apply.apply(&guess);
            let mut defect = b.to_vec();
            for (d, a) in defect.iter_mut().zip(&ax) {
                *d -= a;
            }
            let mut out = cg_core(apply, &defect, precond, tol, max_iter, deflate_constants)?;
            for (xi, gi) in out.x.iter_mut().zip(&guess) {
                *xi += gi;
            }
            Ok(out)
        }
    }
}

fn cg_core(
    apply: &dyn LinearOp,
    b: &[f64],
    precond: &dyn LinearOp,
    tol: f64,
    max_iter: usize,
    deflate_constants: bool,
) -> Result<CgOutcome> {
    let n = b.len();
    if apply.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: apply.dim(),
            found: n,
            context: "cg rhs",
        });
    }
    let mut b = b.to_vec();
    if deflate_constants {
        project_out_constants(&mut b);
    }
    let b_norm = norm2(&b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z = precond.apply(&r);
    if deflate_constants {
        project_out_constants(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0usize;
    let mut q = vec![0.0; n];

    while iterations < max_iter {
        if norm2(&r) <= tol * b_norm {
            break;
        }
        apply.apply_into(&p, &mut q);
        if deflate_constants {
            project_out_constants(&mut q);
        }
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::Indefinite {
                iteration: iterations,
                curvature: pq,
            });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        if deflate_constants {
            project_out_constants(&mut r);
        }
        z = precond.apply(&r);
        if deflate_constants {
            project_out_constants(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        iterations += 1;
    }

    // trust but verify: recompute the true residual
    let ax = apply.apply(&x);
    let mut true_r = b.clone();
    for (ri, ai) in true_r.iter_mut().zip(&ax) {
        *ri -= ai;
    }
    if deflate_constants {
        project_out_constants(&mut true_r);
    }
    let res = norm2(&true_r) / b_norm;
    if res > tol {
        return Err(Error::NonConvergence {
            solver: "cg",
            iterations,
            residual: res,
            history: vec![res],
        });
    }
    Ok(CgOutcome {
        x,
        iterations,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::csr::SparseMatrix;

    #[test]
    fn identity_solves_in_one_pass() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = cg(&a, &[3.0, 4.0], 1e-14, 10, false).unwrap();
        assert!((out.x[0] - 3.0).abs() <= 1e-13);
        assert!((out.x[1] - 4.0).abs() <= 1e-13);
    }

    #[test]
    fn small_spd_hand_solution() {
        let a = SparseMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let out = cg(&a, &[1.0, 2.0], 1e-14, 50, false).unwrap();
        assert!((out.x[0] - 1.0 / 11.0).abs() <= 1e-12);
        assert!((out.x[1] - 7.0 / 11.0).abs() <= 1e-12);
    }

    #[test]
    fn indefinite_operator_detected() {
        let a = SparseMatrix::from_dense(&[vec![-1.0, 0.0], vec![0.0, -2.0]]);
        assert!(matches!(
            cg(&a, &[1.0, 1.0], 1e-12, 10, false),
            Err(Error::Indefinite { .. })
        ));
    }

    #[test]
    fn warm_start_resolves_small_corrections() {
        let a = SparseMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let exact = [1.0 / 11.0, 7.0 / 11.0];
        // a guess already accurate to 1e-9 must still be refined
        let guess = [exact[0] + 1e-9, exact[1] - 1e-9];
        let out = cg_with(
            &a,
            &[1.0, 2.0],
            &IdentityOp(2),
            Some(&guess),
            1e-10,
            50,
            false,
        )
        .unwrap();
        assert!((out.x[0] - exact[0]).abs() <= 1e-15);
        assert!((out.x[1] - exact[1]).abs() <= 1e-15);
    }

    #[test]
    fn deflated_solution_has_zero_mean() {
        // graph Laplacian of a path: nullspace is the constants
        let n = 8;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut d = 0.0;
            if i > 0 {
                triplets.push((i, i - 1, -1.0));
                d += 1.0;
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
                d += 1.0;
            }
            triplets.push((i, i, d));
        }
        let a = SparseMatrix::from_triplets(n, n, &triplets).unwrap();
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        // the operator is singular; deflation handles the compatible part
        let out = cg(&a, &b, 1e-12, 200, true).unwrap();
        let mean = out.x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 1e-12);
        // residual orthogonal to constants
        let ax = a.spmv(&out.x).unwrap();
        project_out_constants(&mut b);
        for (ai, bi) in ax.iter().zip(&b) {
            assert!((ai - bi).abs() <= 1e-10);
        }
    }
}
