//! Linear-operator abstraction used by the Krylov solvers, plus the stock
//! preconditioners.

use crate::linalg::csr::SparseMatrix;
use crate::linalg::factor::Factorization;

/// Square linear operator applied matrix-free.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOp for SparseMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

/// Identity, the "no preconditioner" choice.
pub struct IdentityOp(pub usize);

impl LinearOp for IdentityOp {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Jacobi (diagonal) preconditioner.
pub struct JacobiPrecond {
    inv_diag: Vec<f64>,
}

impl JacobiPrecond {
    pub fn new(a: &SparseMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        JacobiPrecond { inv_diag }
    }
}

impl LinearOp for JacobiPrecond {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.inv_diag) {
            *yi = xi * di;
        }
    }
}

/// Preconditioner backed by a direct factorization.
pub struct FactorPrecond<'a>(pub &'a Factorization);

impl LinearOp for FactorPrecond<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.0.solve_into(x, y).expect("factorized preconditioner solve");
    }
}

/// Zero-fill incomplete LU, stored on the matrix's own pattern.
pub struct IluPrecond {
    lu: SparseMatrix,
    diag_idx: Vec<usize>,
}

impl IluPrecond {
    pub fn new(a: &SparseMatrix) -> Self {
        let n = a.n_rows;
        let mut lu = a.clone();
        let mut diag_idx = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_offsets[r]..lu.row_offsets[r + 1] {
                if lu.col_indices[k] == r {
                    diag_idx[r] = k;
                }
            }
            assert!(diag_idx[r] != usize::MAX, "ILU(0) needs a full diagonal");
        }
        for i in 1..n {
            let row_start = lu.row_offsets[i];
            let row_end = lu.row_offsets[i + 1];
            for kk in row_start..row_end {
                let k = lu.col_indices[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag_idx[k]];
                if pivot == 0.0 {
                    continue;
                }
                let factor = lu.values[kk] / pivot;
                lu.values[kk] = factor;
                // subtract factor * U(k, j) for j in the row pattern
                let (k_start, k_end) = (lu.row_offsets[k], lu.row_offsets[k + 1]);
                let mut jj = kk + 1;
                for uk in k_start..k_end {
                    let j = lu.col_indices[uk];
                    if j <= k {
                        continue;
                    }
                    while jj < row_end && lu.col_indices[jj] < j {
                        jj += 1;
                    }
                    if jj < row_end && lu.col_indices[jj] == j {
                        lu.values[jj] -= factor * lu.values[uk];
                    }
                }
            }
        }
        IluPrecond { lu, diag_idx }
    }
}

impl LinearOp for IluPrecond {
    fn dim(&self) -> usize {
        self.lu.n_rows
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.lu.n_rows;
        // L y = x (unit diagonal)
        for i in 0..n {
            let mut sum = x[i];
            for k in self.lu.row_offsets[i]..self.diag_idx[i] {
                sum -= self.lu.values[k] * y[self.lu.col_indices[k]];
            }
            y[i] = sum;
        }
        // U y = y
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in self.diag_idx[i] + 1..self.lu.row_offsets[i + 1] {
                sum -= self.lu.values[k] * y[self.lu.col_indices[k]];
            }
            y[i] = sum / self.lu.values[self.diag_idx[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::csr::norm_inf;

    #[test]
    fn ilu_is_exact_for_triangular_pattern() {
        // on a dense pattern, ILU(0) equals full LU
        let a = SparseMatrix::from_dense(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 5.0],
        ]);
        let ilu = IluPrecond::new(&a);
        let b = vec![1.0, 2.0, 3.0];
        let x = ilu.apply(&b);
        let mut r = a.spmv(&x).unwrap();
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri -= bi;
        }
        assert!(norm_inf(&r) <= 1e-12);
    }
}
