//! Interpolative decomposition through column-pivoted Householder QR.
//!
//! `id_columns` factors A ~= A[:, S] * T where S is the pivot-ordered
//! skeleton and T carries an identity block at the skeleton positions.
//! The rank is cut at the first pivoted R diagonal satisfying
//! |R[r+1, r+1]| <= tol * |R[1, 1]|.

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Outcome of a column or row interpolative decomposition.
#[derive(Debug, Clone)]
pub struct IdResult {
    /// Selected indices in pivot order (columns for `id_columns`, rows for `id_rows`).
    pub skeleton: Vec<usize>,
    /// Interpolation matrix: `A ~= A[:, S] * interp` (columns) or
    /// `A ~= interp * A[S, :]` (rows).
    pub interp: Array2<Complex64>,
    /// Tolerance the decomposition was run with.
    pub tol_used: f64,
}

impl IdResult {
    pub fn rank(&self) -> usize {
        self.skeleton.len()
    }
}

/// In-place Householder QR with column pivoting. Returns the pivot order and
/// the numerical rank under the relative-diagonal truncation rule. On exit
/// the upper triangle of `a` holds R in pivoted column order.
fn cpqr(a: &mut Array2<Complex64>, tol: f64) -> (Vec<usize>, usize) {
    let (m, n) = a.dim();
    let kmax = m.min(n);
    let mut piv: Vec<usize> = (0..n).collect();
    let mut norms2: Vec<f64> = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.norm_sqr()).sum())
        .collect();
    let orig2 = norms2.clone();
    let mut first_diag = 0.0f64;
    let mut rank = kmax;
    for k in 0..kmax {
        // pivot: largest remaining column norm, ties to the lowest index
        let mut best = k;
        for j in k + 1..n {
            if norms2[j] > norms2[best] {
                best = j;
            }
        }
        if best != k {
            piv.swap(k, best);
            norms2.swap(k, best);
            let (mut ck, mut cb) = a.multi_slice_mut((s![.., k], s![.., best]));
            ndarray::Zip::from(&mut ck).and(&mut cb).for_each(std::mem::swap);
        }
        // Householder reflector for column k below row k
        let tail_norm2: f64 = (k..m).map(|i| a[(i, k)].norm_sqr()).sum();
        let col_norm = tail_norm2.sqrt();
        if k == 0 {
            first_diag = col_norm;
        }
        if col_norm <= tol * first_diag || col_norm == 0.0 {
            rank = k;
            break;
        }
        let x0 = a[(k, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let beta = -phase * col_norm;
        // v = x - beta e1 with real tau = 2 / ||v||^2
        let v0 = x0 - beta;
        let vnorm2 = 2.0 * col_norm * (col_norm + x0.norm());
        if vnorm2 > 0.0 {
            let tau = 2.0 / vnorm2;
            a[(k, k)] = v0;
            for j in k + 1..n {
                // c -= tau * v * (v^H c)
                let mut dot = Complex64::default();
                for i in k..m {
                    dot += a[(i, k)].conj() * a[(i, j)];
                }
                let scale = tau * dot;
                for i in k..m {
                    let vi = a[(i, k)];
                    a[(i, j)] -= scale * vi;
                }
            }
        }
        a[(k, k)] = beta;
        // zero the reflector storage: only R is needed afterwards
        for i in k + 1..m {
            a[(i, k)] = Complex64::default();
        }
        // downdate remaining column norms, recomputing on cancellation
        for j in k + 1..n {
            let r = a[(k, j)].norm_sqr();
            norms2[j] -= r;
            if norms2[j] < 1e-28 * orig2[piv[j]].max(1e-300) || norms2[j] < 0.0 {
                norms2[j] = (k + 1..m).map(|i| a[(i, j)].norm_sqr()).sum();
            }
        }
    }
    (piv, rank)
}

use ndarray::s;

/// Column ID: A ~= A[:, S] * T with T[:, S] the identity.
pub fn id_columns(a: &Array2<Complex64>, tol: f64) -> Result<IdResult> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "id tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let fro: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    if fro == 0.0 || a.is_empty() {
        return Err(Error::ZeroMatrix);
    }
    let n = a.ncols();
    let mut work = a.clone();
    let (piv, rank) = cpqr(&mut work, tol);
    let rank = rank.max(1);
    let cond_est = work[(0, 0)].norm() / work[(rank - 1, rank - 1)].norm().max(1e-300);
    if cond_est > 1e3 / tol {
        log::warn!(
            "pivoted R11 condition estimate {cond_est:.2e} exceeds 1e3/tol; \
             interpolation matrix may be inaccurate"
        );
    }
    // T12 = R11^{-1} R12 by back substitution, one trailing column at a time
    let mut interp = Array2::<Complex64>::zeros((rank, n));
    for i in 0..rank {
        interp[(i, piv[i])] = Complex64::new(1.0, 0.0);
    }
    for j in rank..n {
        let mut col: Vec<Complex64> = (0..rank).map(|i| work[(i, j)]).collect();
        for i in (0..rank).rev() {
            let mut s = col[i];
            for l in i + 1..rank {
                s -= work[(i, l)] * col[l];
            }
            col[i] = s / work[(i, i)];
        }
        for i in 0..rank {
            interp[(i, piv[j])] = col[i];
        }
    }
    Ok(IdResult {
        skeleton: piv[..rank].to_vec(),
        interp,
        tol_used: tol,
    })
}

/// Row ID: A ~= interp * A[S, :], computed as a column ID of the transpose.
pub fn id_rows(a: &Array2<Complex64>, tol: f64) -> Result<IdResult> {
    let r = id_columns(&a.t().to_owned(), tol)?;
    Ok(IdResult {
        skeleton: r.skeleton,
        interp: r.interp.t().to_owned(),
        tol_used: r.tol_used,
    })
}

/// Basic least-squares solution of min ||a x - b||_F via pivoted QR; columns
/// of `a` beyond its numerical rank (relative 1e-14) get zero coefficients.
pub fn lstsq(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let (m, k) = a.dim();
    let nb = b.ncols();
    if b.nrows() != m {
        return Err(Error::InvalidArgument(format!(
            "lstsq shape mismatch: a is {m}x{k}, b has {} rows",
            b.nrows()
        )));
    }
    if m < k {
        return Err(Error::InvalidArgument(format!(
            "lstsq needs at least as many rows as columns, got {m}x{k}"
        )));
    }
    // pivoted QR of a, applying the reflectors to b as they are formed
    let mut qa = a.clone();
    let mut qb = b.clone();
    let mut piv: Vec<usize> = (0..k).collect();
    let mut norms2: Vec<f64> = (0..k)
        .map(|j| qa.column(j).iter().map(|v| v.norm_sqr()).sum())
        .collect();
    let mut first_diag = 0.0f64;
    let mut rank = k;
    for c in 0..k {
        let mut best = c;
        for j in c + 1..k {
            if norms2[j] > norms2[best] {
                best = j;
            }
        }
        if best != c {
            piv.swap(c, best);
            norms2.swap(c, best);
            let (mut ck, mut cb) = qa.multi_slice_mut((s![.., c], s![.., best]));
            ndarray::Zip::from(&mut ck).and(&mut cb).for_each(std::mem::swap);
        }
        let col_norm: f64 = (c..m).map(|i| qa[(i, c)].norm_sqr()).sum::<f64>().sqrt();
        if c == 0 {
            first_diag = col_norm;
        }
        if col_norm <= 1e-14 * first_diag {
            rank = c;
            break;
        }
        let x0 = qa[(c, c)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let beta = -phase * col_norm;
        let v0 = x0 - beta;
        let vnorm2 = 2.0 * col_norm * (col_norm + x0.norm());
        let tau = 2.0 / vnorm2;
        qa[(c, c)] = v0;
        for j in c + 1..k {
            let mut dot = Complex64::default();
            for i in c..m {
                dot += qa[(i, c)].conj() * qa[(i, j)];
            }
            let scale = tau * dot;
            for i in c..m {
                let vi = qa[(i, c)];
                qa[(i, j)] -= scale * vi;
            }
        }
        for j in 0..nb {
            let mut dot = Complex64::default();
            for i in c..m {
                dot += qa[(i, c)].conj() * qb[(i, j)];
            }
            let scale = tau * dot;
            for i in c..m {
                let vi = qa[(i, c)];
                qb[(i, j)] -= scale * vi;
            }
        }
        qa[(c, c)] = beta;
        for j in c + 1..k {
            norms2[j] -= qa[(c, j)].norm_sqr();
        }
    }
    let mut x = Array2::<Complex64>::zeros((k, nb));
    for j in 0..nb {
        let mut col: Vec<Complex64> = (0..rank).map(|i| qb[(i, j)]).collect();
        for i in (0..rank).rev() {
            let mut s = col[i];
            for l in i + 1..rank {
                s -= qa[(i, l)] * col[l];
            }
            col[i] = s / qa[(i, i)];
        }
        for i in 0..rank {
            x[(piv[i], j)] = col[i];
        }
    }
    Ok(x)
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Residual ||A - A[:, S] T||_F of a column ID.
pub fn column_id_residual(a: &Array2<Complex64>, id: &IdResult) -> f64 {
    let sub = a.select(Axis(1), &id.skeleton);
    fro_norm(&(a - &sub.dot(&id.interp)))
}
