use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, RecovError, Result};
use crate::linalg::PivotedQr;

/// Minimiser of `Σ_i w_i (b − A z)_i²` via a pivoted orthogonal factorisation.
///
/// Rank deficiency is reported with the offending column indices.
pub fn least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    weights: Option<&[f64]>,
) -> Result<DVector<f64>> {
    check_len("least-squares right-hand side", a.nrows(), b.len())?;
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let (mut sa, mut sb) = (a.clone(), b.clone());
    if let Some(w) = weights {
        check_len("least-squares weights", a.nrows(), w.len())?;
        for (i, &wi) in w.iter().enumerate() {
            if !(wi > 0.0) {
                return Err(RecovError::invalid("least-squares weights must be positive"));
            }
            let s = wi.sqrt();
            sa.row_mut(i).scale_mut(s);
            sb[i] *= s;
        }
    }
    PivotedQr::new(&sa).solve(&sb)
}
