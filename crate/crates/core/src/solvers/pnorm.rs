use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, RecovError, Result};
use crate::solvers::lstsq::least_squares;

pub const PNORM_REL_TOL: f64 = 1e-9;
pub const PNORM_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct PnormSolution {
    pub z: DVector<f64>,
    /// `Σ w_i |b − A z|_i^p`
    pub objective: f64,
    /// `objective^(1/p)`
    pub norm: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting from the least-squares point.
    pub history: Vec<f64>,
}

fn objective(a: &DMatrix<f64>, b: &DVector<f64>, z: &DVector<f64>, p: f64, w: &[f64]) -> f64 {
    let r = b - a * z;
    r.iter().zip(w).map(|(ri, wi)| wi * ri.abs().powf(p)).sum()
}

/// Minimiser of the weighted p-norm of `b − A z` for `1 < p < ∞`.
///
/// Damped iteratively reweighted least squares: each reweighted solve gives a
/// direction `d`; the step `d/(p−1)` (the Newton step of the objective) is tried
/// first, then `d`, then halvings, and only decreasing steps are accepted, so the
/// objective history is monotone.
pub fn minimize_pnorm(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    p: f64,
    weights: Option<&[f64]>,
) -> Result<PnormSolution> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(RecovError::invalid(format!("p-norm exponent must lie in (1, ∞), got {p}")));
    }
    check_len("p-norm right-hand side", a.nrows(), b.len())?;
    let ones;
    let w: &[f64] = match weights {
        Some(w) => {
            check_len("p-norm weights", a.nrows(), w.len())?;
            w
        }
        None => {
            ones = vec![1.0; a.nrows()];
            &ones
        }
    };

    let mut z = least_squares(a, b, Some(w))?;
    let mut obj = objective(a, b, &z, p, w);
    let mut history = vec![obj];
    if p == 2.0 || a.ncols() == 0 {
        return Ok(PnormSolution {
            norm: obj.powf(1.0 / p),
            z,
            objective: obj,
            iterations: 0,
            history,
        });
    }

    let mut last_change = f64::INFINITY;
    for it in 1..=PNORM_MAX_ITER {
        let r = b - a * &z;
        let scale = r.amax();
        if scale == 0.0 {
            return Ok(finish(z, obj, p, it - 1, history));
        }
        let floor = 1e-12 * scale;
        let omega: Vec<f64> = r
            .iter()
            .zip(w)
            .map(|(ri, wi)| wi * ri.abs().max(floor).powf(p - 2.0))
            .collect();
        let d = least_squares(a, b, Some(&omega))? - &z;

        let mut steps = vec![1.0 / (p - 1.0), 1.0];
        let mut t = (1.0_f64).min(1.0 / (p - 1.0));
        for _ in 0..40 {
            t *= 0.5;
            steps.push(t);
        }
        let mut accepted = None;
        for &s in &steps {
            let cand = &z + &d * s;
            let val = objective(a, b, &cand, p, w);
            if val < obj {
                accepted = Some((cand, val));
                break;
            }
        }
        let Some((cand, val)) = accepted else {
            // no decreasing step left: stationary to working precision
            return Ok(finish(z, obj, p, it - 1, history));
        };
        last_change = (obj - val) / obj.max(f64::MIN_POSITIVE);
        z = cand;
        obj = val;
        history.push(obj);
        if last_change <= PNORM_REL_TOL {
            return Ok(finish(z, obj, p, it, history));
        }
    }
    Err(RecovError::solver(
        format!("p-norm minimisation did not converge in {PNORM_MAX_ITER} iterations (last relative change {last_change:.3e})"),
        history,
    ))
}

fn finish(z: DVector<f64>, obj: f64, p: f64, iterations: usize, history: Vec<f64>) -> PnormSolution {
    PnormSolution {
        z,
        objective: obj,
        norm: obj.powf(1.0 / p),
        iterations,
        history,
    }
}
