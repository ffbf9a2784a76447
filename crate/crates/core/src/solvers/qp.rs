use nalgebra::{DMatrix, DVector};

use crate::error::{RecovError, Result};
use crate::linalg::PivotedQr;
use crate::solvers::lstsq::least_squares;

/// Point of least Euclidean norm in `{c : A c ≤ b}`, by a primal active-set
/// method started from the feasible point `start`.
pub fn min_norm_in_polytope(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    start: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (k, n) = a.shape();
    let mut c = start.clone();
    let mut working: Vec<usize> = Vec::new();
    let row_norms: Vec<f64> = (0..k).map(|i| a.row(i).norm()).collect();

    for _ in 0..(50 * (k + n) + 100) {
        let step = if working.is_empty() {
            -c.clone()
        } else {
            let aw = DMatrix::from_fn(n, working.len(), |r, j| a[(working[j], r)]);
            let qr = PivotedQr::new(&aw);
            let q = qr.q_columns(0..qr.rank());
            let proj = &c - &q * (q.transpose() * &c);
            -proj
        };

        if step.norm() <= 1e-14 * (1.0 + c.norm()) {
            if working.is_empty() {
                return Ok(c);
            }
            let aw = DMatrix::from_fn(n, working.len(), |r, j| a[(working[j], r)]);
            let lambda = least_squares(&aw, &(-&c), None)?;
            let (imin, lmin) = lambda
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
            if lmin >= -1e-12 * (1.0 + c.norm()) {
                return Ok(c);
            }
            working.remove(imin);
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        let pn = step.norm();
        for i in 0..k {
            if working.contains(&i) {
                continue;
            }
            let ap = a.row(i).dot(&step.transpose());
            if ap <= 1e-14 * row_norms[i] * pn {
                continue;
            }
            let slack = b[i] - a.row(i).dot(&c.transpose());
            let t = (slack / ap).max(0.0);
            if t < alpha {
                alpha = t;
                blocking = Some(i);
            }
        }
        c += &step * alpha;
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    Err(RecovError::solver("active-set tie-break did not terminate", c.iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projects_origin_onto_halfplane() {
        // x + y ≥ 2 written as −x − y ≤ −2; nearest point to 0 is (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[-1.0, -1.0]);
        let b = DVector::from_vec(vec![-2.0]);
        let c = min_norm_in_polytope(&a, &b, &DVector::from_vec(vec![5.0, 3.0])).unwrap();
        assert!((c - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-12);
    }

    #[test]
    fn interior_origin_is_returned() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let c = min_norm_in_polytope(&a, &b, &DVector::from_vec(vec![0.7])).unwrap();
        assert!(c.amax() < 1e-14);
    }

    #[test]
    fn box_corner() {
        // 1 ≤ x ≤ 2, 3 ≤ y ≤ 4
        let a = DMatrix::from_row_slice(4, 2, &[1., 0., -1., 0., 0., 1., 0., -1.]);
        let b = DVector::from_vec(vec![2.0, -1.0, 4.0, -3.0]);
        let c = min_norm_in_polytope(&a, &b, &DVector::from_vec(vec![1.5, 3.5])).unwrap();
        assert!((c - DVector::from_vec(vec![1.0, 3.0])).amax() < 1e-12);
    }
}
