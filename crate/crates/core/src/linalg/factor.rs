//! Direct factorizations: envelope (skyline) Cholesky for SPD matrices and
//! dense partial-pivot LU for general ones.
//!
//! The skyline variant scales to the banded matrices produced by structured
//! grids; the dense LU covers small general systems (it refuses anything
//! above a few thousand unknowns rather than thrash memory).

use crate::error::{Error, Result};
use crate::linalg::csr::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Spd,
    General,
}

const DENSE_LU_LIMIT: usize = 5000;

#[derive(Clone, Debug)]
enum Factor {
    /// Lower-triangular envelope rows; rows[i] holds columns first[i]..=i.
    SkylineCholesky { first: Vec<usize>, rows: Vec<Vec<f64>> },
    /// Row-major LU in one buffer with a row permutation.
    DenseLu { n: usize, lu: Vec<f64>, perm: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub kind: FactorKind,
    pub n: usize,
    factor: Factor,
}

/// Factor a square sparse matrix for repeated solves.
pub fn factorize(a: &SparseMatrix, kind: FactorKind) -> Result<Factorization> {
    if a.n_rows != a.n_cols {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows,
            found: a.n_cols,
            context: "factorize requires a square matrix",
        });
    }
    let factor = match kind {
        FactorKind::Spd => skyline_cholesky(a)?,
        FactorKind::General => dense_lu(a)?,
    };
    Ok(Factorization {
        kind,
        n: a.n_rows,
        factor,
    })
}

fn skyline_cholesky(a: &SparseMatrix) -> Result<Factor> {
    let n = a.n_rows;
    // Envelope of the lower triangle; Cholesky fill stays inside it.
    let mut first = vec![0usize; n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        first[i] = cols.first().copied().unwrap_or(i).min(i);
    }
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; i - first[i] + 1];
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    row[c - first[i]] = v;
                }
            }
            row
        })
        .collect();

    for i in 0..n {
        let fi = first[i];
        for j in fi..i {
            let fj = first[j];
            let lo = fi.max(fj);
            let mut sum = rows[i][j - fi];
            for k in lo..j {
                sum -= rows[i][k - fi] * rows[j][k - fj];
            }
            let diag = rows[j][j - fj];
            rows[i][j - fi] = sum / diag;
        }
        let mut sum = rows[i][i - fi];
        for k in fi..i {
            sum -= rows[i][k - fi] * rows[i][k - fi];
        }
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::SingularPivot { row: i });
        }
        rows[i][i - fi] = sum.sqrt();
    }
    Ok(Factor::SkylineCholesky { first, rows })
}

fn dense_lu(a: &SparseMatrix) -> Result<Factor> {
    let n = a.n_rows;
    if n > DENSE_LU_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "general LU is limited to {DENSE_LU_LIMIT} unknowns, got {n}"
        )));
    }
    let mut lu = vec![0.0; n * n];
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            lu[r * n + c] = v;
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let scale: f64 = lu.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1.0);
    for k in 0..n {
        // partial pivoting
        let (mut p, mut best) = (k, lu[perm[k] * n + k].abs());
        for r in k + 1..n {
            let v = lu[perm[r] * n + k].abs();
            if v > best {
                p = r;
                best = v;
            }
        }
        if best <= 1e-14 * scale {
            return Err(Error::SingularPivot { row: perm[p] });
        }
        perm.swap(k, p);
        let pivot = lu[perm[k] * n + k];
        for r in k + 1..n {
            let m = lu[perm[r] * n + k] / pivot;
            lu[perm[r] * n + k] = m;
            if m != 0.0 {
                for c in k + 1..n {
                    lu[perm[r] * n + c] -= m * lu[perm[k] * n + c];
                }
            }
        }
    }
    Ok(Factor::DenseLu { n, lu, perm })
}

impl Factorization {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x)?;
        Ok(x)
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
                context: "factorized solve rhs",
            });
        }
        match &self.factor {
            Factor::SkylineCholesky { first, rows } => {
                let n = self.n;
                x.copy_from_slice(b);
                // forward: L y = b
                for i in 0..n {
                    let fi = first[i];
                    let mut sum = x[i];
                    for k in fi..i {
                        sum -= rows[i][k - fi] * x[k];
                    }
                    x[i] = sum / rows[i][i - fi];
                }
                // backward: L^T x = y, column sweeps over rows of L
                for i in (0..n).rev() {
                    let fi = first[i];
                    x[i] /= rows[i][i - fi];
                    let xi = x[i];
                    for k in fi..i {
                        x[k] -= rows[i][k - fi] * xi;
                    }
                }
            }
            Factor::DenseLu { n, lu, perm } => {
                let n = *n;
                for i in 0..n {
                    let mut sum = b[perm[i]];
                    for k in 0..i {
                        sum -= lu[perm[i] * n + k] * x[k];
                    }
                    x[i] = sum;
                }
                for i in (0..n).rev() {
                    let mut sum = x[i];
                    for k in i + 1..n {
                        sum -= lu[perm[i] * n + k] * x[k];
                    }
                    x[i] = sum / lu[perm[i] * n + i];
                }
            }
        }
        Ok(())
    }
}
