//! Dense factorizations shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{RecovError, Result};

/// Relative pivot tolerance used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    r: DMatrix<f64>,
    reflectors: Vec<(DVector<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>) -> Self {
        Self::with_tolerance(a, RANK_TOL)
    }

    pub fn with_tolerance(a: &DMatrix<f64>, rel_tol: f64) -> Self {
        let (m, n) = a.shape();
        let k = m.min(n);
        let mut r = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(k);

        for j in 0..k {
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..n {
                let s: f64 = (j..m).map(|i| r[(i, c)] * r[(i, c)]).sum();
                if s > best_norm {
                    best_norm = s;
                    best = c;
                }
            }
            if best != j {
                r.swap_columns(j, best);
                perm.swap(j, best);
            }

            let mut v = DVector::from_iterator(m - j, (j..m).map(|i| r[(i, j)]));
            let norm = v.norm();
            if norm == 0.0 {
                reflectors.push((v, 0.0));
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vv = v.norm_squared();
            let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            for c in j..n {
                let dot: f64 = (0..m - j).map(|i| v[i] * r[(j + i, c)]).sum();
                let s = beta * dot;
                if s != 0.0 {
                    for i in 0..m - j {
                        r[(j + i, c)] -= s * v[i];
                    }
                }
            }
            r[(j, j)] = alpha;
            for i in j + 1..m {
                r[(i, j)] = 0.0;
            }
            reflectors.push((v, beta));
        }

        let lead = if k > 0 { r[(0, 0)].abs() } else { 0.0 };
        let rank = if lead == 0.0 {
            0
        } else {
            (0..k)
                .take_while(|&j| r[(j, j)].abs() > rel_tol * lead)
                .count()
        };

        PivotedQr {
            rows: m,
            cols: n,
            r,
            reflectors,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column permutation: column `j` of `A P` is column `perm()[j]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Original column indices that fall beyond the numerical rank.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut cols = self.perm[self.rank..].to_vec();
        cols.sort_unstable();
        cols
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut DVector<f64>) {
        for (j, (v, beta)) in self.reflectors.iter().enumerate() {
            if *beta == 0.0 {
                continue;
            }
            let dot: f64 = (0..v.len()).map(|i| v[i] * b[j + i]).sum();
            let s = beta * dot;
            for i in 0..v.len() {
                b[j + i] -= s * v[i];
            }
        }
    }

    /// Overwrites `b` with `Q b`.
    pub fn apply_q(&self, b: &mut DVector<f64>) {
        for (j, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let dot: f64 = (0..v.len()).map(|i| v[i] * b[j + i]).sum();
            let s = beta * dot;
            for i in 0..v.len() {
                b[j + i] -= s * v[i];
            }
        }
    }

    /// Explicit columns `range` of the full orthogonal factor.
    pub fn q_columns(&self, range: std::ops::Range<usize>) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.rows, range.len());
        for (out, c) in range.enumerate() {
            let mut e = DVector::zeros(self.rows);
            e[c] = 1.0;
            self.apply_q(&mut e);
            q.set_column(out, &e);
        }
        q
    }

    /// Least-squares solution of `A x ≈ b`; requires full column rank.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if self.rank < self.cols {
            return Err(RecovError::RankDeficient {
                columns: self.dependent_columns(),
            });
        }
        let mut y = b.clone();
        self.apply_qt(&mut y);
        let n = self.cols;
        let mut z = DVector::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.r[(i, k)] * z[k];
            }
            z[i] = s / self.r[(i, i)];
        }
        let mut x = DVector::zeros(n);
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = z[j];
        }
        Ok(x)
    }
}

/// Orthonormal basis (Euclidean) of the null space of `g`.
pub fn null_space(g: &DMatrix<f64>) -> DMatrix<f64> {
    let gt = g.transpose();
    let qr = PivotedQr::new(&gt);
    qr.q_columns(qr.rank()..gt.nrows())
}

/// Orthonormal basis of the column space of `a`, which must have full column rank.
pub fn orthonormal_columns(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, PivotedQr)> {
    let qr = PivotedQr::new(a);
    if qr.rank() < a.ncols() {
        return Err(RecovError::RankDeficient {
            columns: qr.dependent_columns(),
        });
    }
    Ok((qr.q_columns(0..a.ncols()), qr))
}

/// Extreme singular values and the right singular vector of the smallest one.
pub fn singular_extremes(a: &DMatrix<f64>) -> (f64, f64, DVector<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s = &svd.singular_values;
    let mut imin = 0;
    let mut imax = 0;
    for i in 0..s.len() {
        if s[i] < s[imin] {
            imin = i;
        }
        if s[i] > s[imax] {
            imax = i;
        }
    }
    (s[imin], s[imax], v_t.row(imin).transpose())
}

/// Solves the square system `a x = b` with partial pivoting; `None` if singular.
pub fn solve_square(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
