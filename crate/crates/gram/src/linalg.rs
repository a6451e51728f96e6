//! Dense linear algebra kernels: LU factorization with partial pivoting and
//! a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Everything here is sequential with a fixed operation order, so results are
//! bit-reproducible for identical inputs.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Row-major dense matrix of f64; scalars are represented as 1x1.
pub type Mat = Array2<f64>;

pub fn eye(n: usize) -> Mat {
    Array2::eye(n)
}

/// LU factorization PA = LU with partial pivoting.
///
/// Stored packed: `lu` holds U on and above the diagonal, the unit-diagonal L
/// below. `perm[k]` is the source row of pivot step k. The original matrix is
/// retained so solves can apply one step of iterative refinement, which keeps
/// residuals near machine precision even for poorly conditioned Gram systems.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Mat,
    perm: Vec<usize>,
    n: usize,
    a: Mat,
}

impl LuFactors {
    pub fn factor(a: &Mat) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(
            n,
            a.ncols(),
            "lu: matrix must be square, got {}x{}",
            n,
            a.ncols()
        );
        let mut lu = if a.is_standard_layout() {
            a.clone()
        } else {
            a.as_standard_layout().into_owned()
        };
        let mut perm: Vec<usize> = (0..n).collect();
        let max_abs = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Relative threshold below which a pivot is treated as zero.
        let tiny = f64::EPSILON * (n as f64) * max_abs.max(1.0);
        {
            // Elimination over the contiguous row-major buffer.
            let buf = lu.as_slice_mut().expect("standard layout");
            for k in 0..n {
                let mut p = k;
                let mut best = buf[k * n + k].abs();
                for i in (k + 1)..n {
                    let v = buf[i * n + k].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if best <= tiny {
                    let (dmax, dmin) = diag_extremes_slice(buf, n, k);
                    return Err(Error::SingularMatrix {
                        pivot_index: k,
                        pivot_abs: best,
                        condition: if dmin > 0.0 { dmax / dmin } else { f64::INFINITY },
                    });
                }
                if p != k {
                    perm.swap(k, p);
                    for j in 0..n {
                        buf.swap(k * n + j, p * n + j);
                    }
                }
                let pivot = buf[k * n + k];
                let (top, below) = buf.split_at_mut((k + 1) * n);
                let pivot_row = &top[k * n + k + 1..k * n + n];
                for i in 0..(n - k - 1) {
                    let row = &mut below[i * n..(i + 1) * n];
                    let factor = row[k] / pivot;
                    row[k] = factor;
                    if factor != 0.0 {
                        for (r, &pv) in row[k + 1..n].iter_mut().zip(pivot_row) {
                            *r -= factor * pv;
                        }
                    }
                }
            }
        }
        Ok(LuFactors {
            lu,
            perm,
            n,
            a: a.clone(),
        })
    }

    /// Ratio of largest to smallest |U_ii|; a cheap conditioning estimate.
    pub fn diag_condition(&self) -> f64 {
        let (dmax, dmin) = diag_extremes(&self.lu, self.n);
        if dmin > 0.0 {
            dmax / dmin
        } else {
            f64::INFINITY
        }
    }

    /// Solve A X = B for each column of B, with one refinement step.
    pub fn solve(&self, b: &Mat) -> Mat {
        let mut x = self.solve_raw(b);
        let residual = b - &self.a.dot(&x);
        x += &self.solve_raw(&residual);
        x
    }

    fn solve_raw(&self, b: &Mat) -> Mat {
        let n = self.n;
        assert_eq!(
            b.nrows(),
            n,
            "solve: rhs has {} rows, matrix is {}x{}",
            b.nrows(),
            n,
            n
        );
        let ncols = b.ncols();
        let mut x = Array2::zeros((n, ncols));
        for c in 0..ncols {
            let mut y = Array1::zeros(n);
            // Forward substitution on permuted rhs: L y = P b.
            for i in 0..n {
                let mut s = b[[self.perm[i], c]];
                for j in 0..i {
                    s -= self.lu[[i, j]] * y[j];
                }
                y[i] = s;
            }
            // Back substitution: U x = y.
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in (i + 1)..n {
                    s -= self.lu[[i, j]] * x[[j, c]];
                }
                x[[i, c]] = s / self.lu[[i, i]];
            }
        }
        x
    }

    /// Solve A^T X = B using the same factors (A^T = U^T L^T P), with one
    /// refinement step.
    pub fn solve_transpose(&self, b: &Mat) -> Mat {
        let mut x = self.solve_transpose_raw(b);
        let residual = b - &self.a.t().dot(&x);
        x += &self.solve_transpose_raw(&residual);
        x
    }

    fn solve_transpose_raw(&self, b: &Mat) -> Mat {
        let n = self.n;
        assert_eq!(
            b.nrows(),
            n,
            "solve_transpose: rhs has {} rows, matrix is {}x{}",
            b.nrows(),
            n,
            n
        );
        let ncols = b.ncols();
        let mut x = Array2::zeros((n, ncols));
        for c in 0..ncols {
            // U^T z = b (forward substitution; U^T is lower triangular).
            let mut z = Array1::zeros(n);
            for i in 0..n {
                let mut s = b[[i, c]];
                for j in 0..i {
                    s -= self.lu[[j, i]] * z[j];
                }
                z[i] = s / self.lu[[i, i]];
            }
            // L^T w = z (back substitution; L has unit diagonal).
            let mut w = Array1::zeros(n);
            for i in (0..n).rev() {
                let mut s = z[i];
                for j in (i + 1)..n {
                    s -= self.lu[[j, i]] * w[j];
                }
                w[i] = s;
            }
            // x = P^T w, i.e. undo the row permutation.
            for i in 0..n {
                x[[self.perm[i], c]] = w[i];
            }
        }
        x
    }
}

fn diag_extremes(lu: &Mat, upto: usize) -> (f64, f64) {
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..upto {
        let v = lu[[i, i]].abs();
        dmax = dmax.max(v);
        dmin = dmin.min(v);
    }
    if upto == 0 {
        (1.0, 1.0)
    } else {
        (dmax, dmin)
    }
}

fn diag_extremes_slice(buf: &[f64], n: usize, upto: usize) -> (f64, f64) {
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..upto {
        let v = buf[i * n + i].abs();
        dmax = dmax.max(v);
        dmin = dmin.min(v);
    }
    if upto == 0 {
        (1.0, 1.0)
    } else {
        (dmax, dmin)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns (eigenvalues, eigenvectors) with `a ≈ V diag(λ) V^T`; columns of V
/// are the eigenvectors. Eigenvalues are sorted ascending.
pub fn sym_eigen(a: &Mat) -> (Array1<f64>, Mat) {
    let n = a.nrows();
    assert_eq!(
        n,
        a.ncols(),
        "sym_eigen: matrix must be square, got {}x{}",
        n,
        a.ncols()
    );
    let mut m = a.clone();
    let mut v = eye(n);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frob(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].total_cmp(&m[[j, j]]));
    let mut vals = Array1::zeros(n);
    let mut vecs = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = m[[src, src]];
        for k in 0..n {
            vecs[[k, dst]] = v[[k, src]];
        }
    }
    (vals, vecs)
}

fn frob(a: &Mat) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sum of values in ascending order. The fixed ordering makes the result
/// invariant to permutations of the input (same multiset, same sum).
pub fn ordered_sum(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.iter().sum()
}
