//! Best approximation of a vector from a column space in the ℓ∞ and weighted ℓ1
//! norms, each solved through the linear-programming dual so that only
//! `n + 1` (resp. `n`) rows enter the simplex basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, RecovError, Result};
use crate::solvers::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::solvers::lstsq::least_squares;

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub coeffs: DVector<f64>,
    /// Norm of the residual `x − B c`.
    pub value: f64,
}

fn exact_fit(b: &DMatrix<f64>, x: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    if b.ncols() == 0 {
        return Ok(None);
    }
    let c = least_squares(b, x, None)?;
    let resid = (x - b * &c).amax();
    Ok((resid <= 1e-13 * (1.0 + x.amax())).then_some(c))
}

/// `min_c max_i |x_i − (B c)_i|`.
pub fn chebyshev_fit(b: &DMatrix<f64>, x: &DVector<f64>) -> Result<Fit> {
    check_len("fit target", b.nrows(), x.len())?;
    let (rows, n) = b.shape();
    if let Some(c) = exact_fit(b, x)? {
        let value = (x - b * &c).amax();
        return Ok(Fit { coeffs: c, value });
    }
    if n == 0 {
        return Ok(Fit {
            coeffs: DVector::zeros(0),
            value: x.amax(),
        });
    }
    // max x·(p − q)  s.t.  Bᵀ(p − q) = 0,  Σ(p + q) ≤ 1,  p, q ≥ 0
    let mut obj = Vec::with_capacity(2 * rows);
    obj.extend(x.iter().copied());
    obj.extend(x.iter().map(|v| -v));
    let mut lp = LinearProgram::maximize(obj);
    for k in 0..n {
        let mut row = Vec::with_capacity(2 * rows);
        row.extend(b.column(k).iter().copied());
        row.extend(b.column(k).iter().map(|v| -v));
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    lp.add_constraint(vec![1.0; 2 * rows], Relation::Le, 1.0);
    let rep = solve_lp(&lp)?;
    if rep.status != LpStatus::Optimal {
        return Err(RecovError::solver(
            format!("Chebyshev fit dual returned {:?}", rep.status),
            vec![rep.iterations as f64],
        ));
    }
    let c = DVector::from_column_slice(&rep.duals[..n]);
    let value = (x - b * &c).amax();
    Ok(Fit { coeffs: c, value })
}

/// `min_c Σ_i w_i |x_i − (B c)_i|`.
pub fn l1_fit(b: &DMatrix<f64>, x: &DVector<f64>, weights: &[f64]) -> Result<Fit> {
    check_len("fit target", b.nrows(), x.len())?;
    check_len("fit weights", b.nrows(), weights.len())?;
    let (rows, n) = b.shape();
    let weighted = |c: &DVector<f64>| -> f64 {
        (x - b * c).iter().zip(weights).map(|(r, w)| w * r.abs()).sum()
    };
    if let Some(c) = exact_fit(b, x)? {
        let value = weighted(&c);
        return Ok(Fit { coeffs: c, value });
    }
    if n == 0 {
        let c = DVector::zeros(0);
        let value = weighted(&c);
        return Ok(Fit { coeffs: c, value });
    }
    // max x·u  s.t.  Bᵀu = 0,  |u_i| ≤ w_i
    let mut lp = LinearProgram::maximize(x.iter().copied().collect());
    for (i, &w) in weights.iter().enumerate() {
        lp.set_bounds(i, -w, w);
    }
    for k in 0..n {
        lp.add_constraint(b.column(k).iter().copied().collect(), Relation::Eq, 0.0);
    }
    let rep = solve_lp(&lp)?;
    if rep.status != LpStatus::Optimal {
        return Err(RecovError::solver(
            format!("ℓ1 fit dual returned {:?}", rep.status),
            vec![rep.iterations as f64],
        ));
    }
    let _ = rows;
    let c = DVector::from_column_slice(&rep.duals[..n]);
    let value = weighted(&c);
    Ok(Fit { coeffs: c, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_line_through_parabola_equioscillates() {
        let n = 2001;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let b = DMatrix::from_fn(n, 2, |i, k| if k == 0 { 1.0 } else { t[i] });
        let x = DVector::from_iterator(n, t.iter().map(|v| v * v));
        let fit = chebyshev_fit(&b, &x).unwrap();
        assert!((fit.value - 0.125).abs() < 1e-6);
        // residual t² − c0 − c1 t = ±1/8 with alternating signs at 0, ½, 1
        let r = |s: f64| s * s - fit.coeffs[0] - fit.coeffs[1] * s;
        assert!((r(0.0) - 0.125).abs() < 1e-9);
        assert!((r(0.5) + 0.125).abs() < 1e-9);
        assert!((r(1.0) - 0.125).abs() < 1e-9);
    }

    #[test]
    fn l1_fit_of_constant_is_weighted_median() {
        let b = DMatrix::from_element(5, 1, 1.0);
        let x = DVector::from_vec(vec![0.0, 1.0, 2.0, 10.0, 11.0]);
        let fit = l1_fit(&b, &x, &[1.0; 5]).unwrap();
        assert!((fit.coeffs[0] - 2.0).abs() < 1e-12);
        assert!((fit.value - 20.0).abs() < 1e-12);
    }

    #[test]
    fn exact_members_fit_with_zero_error() {
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let x = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        assert!(chebyshev_fit(&b, &x).unwrap().value < 1e-12);
        assert!(l1_fit(&b, &x, &[1.0; 3]).unwrap().value < 1e-12);
    }
}
