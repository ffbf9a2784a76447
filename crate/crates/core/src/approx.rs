//! Near-best approximation of data `w` from `Z = M(V)` in the measurement norm.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{RecovError, Result};
use crate::linalg::singular_extremes;
use crate::measure::{MBall, MeasurementOperator};
use crate::solvers::{
    chebyshev_fit, l1_fit, least_squares, min_norm_in_polytope, minimize_pnorm, solve_lp,
    LinearProgram, LpStatus, Relation, PNORM_REL_TOL,
};
use crate::spaces::{NormKind, Subspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "p", rename_all = "snake_case")]
pub enum ApproxMethod {
    /// Exact linear program; sup-norm and `L_1` ambients.
    MinimaxLp,
    /// Whitened least squares; Hilbert (and `L_2`) ambients.
    LeastSquares,
    /// Iteratively reweighted p-norm fit; `L_p` ambients with the same `p`.
    Pnorm(f64),
}

impl ApproxMethod {
    /// The exact method for an ambient norm.
    pub fn exact_for(kind: NormKind) -> Self {
        match kind {
            NormKind::Sup => ApproxMethod::MinimaxLp,
            NormKind::Lp(p) if p == 1.0 => ApproxMethod::MinimaxLp,
            NormKind::Hilbert => ApproxMethod::LeastSquares,
            NormKind::Lp(p) if p == 2.0 => ApproxMethod::LeastSquares,
            NormKind::Lp(p) => ApproxMethod::Pnorm(p),
        }
    }

    fn compatible(&self, kind: NormKind) -> bool {
        match (self, kind) {
            (ApproxMethod::MinimaxLp, NormKind::Sup) => true,
            (ApproxMethod::MinimaxLp, NormKind::Lp(p)) => p == 1.0,
            (ApproxMethod::LeastSquares, NormKind::Hilbert) => true,
            (ApproxMethod::LeastSquares, NormKind::Lp(p)) => p == 2.0,
            (ApproxMethod::Pnorm(q), NormKind::Lp(p)) => *q == p && p > 1.0,
            (ApproxMethod::Pnorm(q), NormKind::Hilbert) => *q == 2.0,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    /// `Λ(w) ∈ Z`.
    pub z: DVector<f64>,
    /// Coefficients with `z = M(V c)`.
    pub coeffs: DVector<f64>,
    /// `‖w − z‖_M` as computed by the solver route.
    pub residual_norm: f64,
    pub condition_warning: Option<String>,
}

/// The map `Λ` together with its near-best constant.
#[derive(Debug, Clone)]
pub struct ApproxMap {
    m: Arc<MeasurementOperator>,
    v: Arc<Subspace>,
    method: ApproxMethod,
    lambda: f64,
    b: DMatrix<f64>,
    condition: f64,
}

/// Condition number of `M` on `V` above which results carry a warning.
pub const CONDITION_WARN: f64 = 1e10;

impl ApproxMap {
    pub fn new(m: Arc<MeasurementOperator>, v: Arc<Subspace>, method: ApproxMethod) -> Result<Self> {
        let kind = m.space().kind();
        if !method.compatible(kind) {
            return Err(RecovError::invalid(format!(
                "approximation method {method:?} does not fit a {kind:?} ambient norm"
            )));
        }
        m.check_injective_on(&v)?;
        let b = m.restricted(&v)?;
        let (smin, smax, _) = singular_extremes(&b);
        let lambda = match method {
            ApproxMethod::Pnorm(p) if p != 2.0 => 1.0 + PNORM_REL_TOL,
            _ => 1.0,
        };
        Ok(ApproxMap {
            m,
            v,
            method,
            lambda,
            b,
            condition: smax / smin,
        })
    }

    /// The exact method for the ambient norm.
    pub fn exact(m: Arc<MeasurementOperator>, v: Arc<Subspace>) -> Result<Self> {
        let method = ApproxMethod::exact_for(m.space().kind());
        Self::new(m, v, method)
    }

    pub fn measurement(&self) -> &Arc<MeasurementOperator> {
        &self.m
    }

    pub fn subspace(&self) -> &Arc<Subspace> {
        &self.v
    }

    pub fn method(&self) -> ApproxMethod {
        self.method
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `M` restricted to `V` as an `m × n` matrix.
    pub fn restricted(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Euclidean condition number of the restricted matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn approximate(&self, w: &[f64]) -> Result<Approximation> {
        let (coeffs, residual_norm) = self.solve(w, self.method)?;
        let exact_member = residual_norm == 0.0;
        let z = if exact_member {
            DVector::from_column_slice(w)
        } else {
            &self.b * &coeffs
        };
        let condition_warning = (self.condition > CONDITION_WARN).then(|| {
            format!("measurements restricted to the model space have condition number {:.3e}", self.condition)
        });
        Ok(Approximation {
            z,
            coeffs,
            residual_norm,
            condition_warning,
        })
    }

    /// `E(w) = min_{z ∈ Z} ‖w − z‖_M`, always by the exact method of the ambient.
    pub fn approx_error(&self, w: &[f64]) -> Result<f64> {
        let method = ApproxMethod::exact_for(self.m.space().kind());
        self.solve(w, method).map(|(_, e)| e)
    }

    fn solve(&self, w: &[f64], method: ApproxMethod) -> Result<(DVector<f64>, f64)> {
        crate::error::check_len("measurement vector", self.m.m(), w.len())?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(RecovError::invalid("measurement vector has non-finite entries"));
        }
        let wv = DVector::from_column_slice(w);
        let c_ls = least_squares(&self.b, &wv, None)?;
        if (&wv - &self.b * &c_ls).amax() <= 1e-12 * (1.0 + wv.amax()) {
            return Ok((c_ls, 0.0));
        }
        let ball = self.m.closed_form();
        match method {
            ApproxMethod::MinimaxLp => match ball {
                Some(MBall::MaxAbs) => {
                    let fit = chebyshev_fit(&self.b, &wv)?;
                    let c = self.tie_break(&wv, &fit.coeffs, fit.value)?;
                    let value = (&wv - &self.b * &c).amax();
                    Ok((c, value))
                }
                Some(MBall::Lp(p)) if p == 1.0 => {
                    let fit = l1_fit(&self.b, &wv, &vec![1.0; w.len()])?;
                    Ok((fit.coeffs, fit.value))
                }
                _ if self.m.space().kind() == NormKind::Sup => self.sup_general(&wv, &c_ls),
                _ => self.l1_general(&wv),
            },
            ApproxMethod::LeastSquares => {
                let h = self.m.hilbert_factor();
                let mut a = DMatrix::zeros(self.b.nrows(), self.b.ncols());
                for k in 0..self.b.ncols() {
                    let col: Vec<f64> = self.b.column(k).iter().copied().collect();
                    a.set_column(k, &h.rt_solve(&col));
                }
                let rhs = h.rt_solve(w);
                let c = least_squares(&a, &rhs, None)?;
                let value = (rhs - a * &c).norm();
                Ok((c, value))
            }
            ApproxMethod::Pnorm(p) => match ball {
                Some(MBall::Lp(q)) if q == p => {
                    let sol = minimize_pnorm(&self.b, &wv, p, None)?;
                    Ok((sol.z, sol.norm))
                }
                _ => {
                    // E(w) = dist(x0, V ⊕ N) for any coset element x0
                    let x0 = self.m.hilbert_factor().least_norm(w);
                    let z = self.m.null_basis();
                    let vb = self.v.basis();
                    let n = vb.ncols();
                    let mut a = DMatrix::zeros(vb.nrows(), n + z.ncols());
                    a.columns_mut(0, n).copy_from(vb);
                    a.columns_mut(n, z.ncols()).copy_from(z);
                    let sol = minimize_pnorm(&a, &x0, p, Some(self.m.space().weights()))?;
                    Ok((sol.z.rows(0, n).into_owned(), sol.norm))
                }
            },
        }
    }

    /// Among coefficients with `max|w − Bc| ≤ t(1 + 1e-9)`, the one of least
    /// Euclidean norm.
    fn tie_break(&self, w: &DVector<f64>, c0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let (m, n) = self.b.shape();
        let band = t * (1.0 + 1e-9);
        let mut a = DMatrix::zeros(2 * m, n);
        let mut rhs = DVector::zeros(2 * m);
        for j in 0..m {
            for k in 0..n {
                a[(j, k)] = self.b[(j, k)];
                a[(m + j, k)] = -self.b[(j, k)];
            }
            rhs[j] = w[j] + band;
            rhs[m + j] = -w[j] + band;
        }
        min_norm_in_polytope(&a, &rhs, c0)
    }

    fn sup_general(&self, w: &DVector<f64>, c_ls: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        // max s  s.t.  G y + B d − s w = 0,  y ∈ [−1, 1]^N,  d free;  E = 1/s, c = d/s
        let g = self.m.pairing();
        let (m, big_n) = g.shape();
        let n = self.b.ncols();
        let mut obj = vec![0.0; big_n + n + 1];
        obj[big_n + n] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        for i in 0..big_n {
            lp.set_bounds(i, -1.0, 1.0);
        }
        for k in 0..n {
            lp.set_free(big_n + k);
        }
        for j in 0..m {
            let mut row: Vec<f64> = g.row(j).iter().copied().collect();
            row.extend(self.b.row(j).iter().copied());
            row.push(-w[j]);
            lp.add_constraint(row, Relation::Eq, 0.0);
        }
        let rep = solve_lp(&lp)?;
        match rep.status {
            LpStatus::Optimal => {
                let s = rep.solution[big_n + n];
                let c = DVector::from_iterator(n, rep.solution[big_n..big_n + n].iter().map(|d| d / s));
                Ok((c, 1.0 / s))
            }
            // w is in Z up to roundoff
            LpStatus::Unbounded => Ok((c_ls.clone(), 0.0)),
            LpStatus::Infeasible => Err(RecovError::solver(
                "sup-norm approximation program reported infeasible",
                vec![rep.iterations as f64],
            )),
        }
    }

    fn l1_general(&self, w: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        // min Σ ω_i (p_i + q_i)  s.t.  G (p − q) + B c = w
        let g = self.m.pairing();
        let (m, big_n) = g.shape();
        let n = self.b.ncols();
        let wts = self.m.space().weights();
        let mut obj = wts.to_vec();
        obj.extend_from_slice(wts);
        obj.extend(std::iter::repeat(0.0).take(n));
        let mut lp = LinearProgram::minimize(obj);
        for k in 0..n {
            lp.set_free(2 * big_n + k);
        }
        for j in 0..m {
            let mut row: Vec<f64> = g.row(j).iter().copied().collect();
            row.extend(g.row(j).iter().map(|v| -v));
            row.extend(self.b.row(j).iter().copied());
            lp.add_constraint(row, Relation::Eq, w[j]);
        }
        let rep = solve_lp(&lp)?;
        if rep.status != LpStatus::Optimal {
            return Err(RecovError::solver(
                format!("L1 approximation program returned {:?}", rep.status),
                vec![rep.iterations as f64],
            ));
        }
        let c = DVector::from_column_slice(&rep.solution[2 * big_n..]);
        Ok((c, rep.objective_value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::equispaced_points;
    use crate::spaces::{circle_grid, dist_to_subspace, Quadrature, Space, SubspacePreset};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn toy() -> ApproxMap {
        let s = Arc::new(Space::sequence(3, NormKind::Sup).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0] }, s.clone()).unwrap());
        let m = Arc::new(MeasurementOperator::point_eval(s, vec![0, 1]).unwrap());
        ApproxMap::exact(m, v).unwrap()
    }

    fn trig_map(n_grid: usize, m: usize, kind: NormKind) -> ApproxMap {
        let s = Arc::new(circle_grid(n_grid, kind).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap());
        let meas = Arc::new(MeasurementOperator::point_eval_at(s, &equispaced_points(-PI, PI, m)).unwrap());
        ApproxMap::exact(meas, v).unwrap()
    }

    #[test]
    fn toy_error_is_one() {
        let a = toy();
        assert!((a.approx_error(&[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        let r = a.approximate(&[0.0, 0.0]).unwrap();
        assert_eq!(r.z, DVector::zeros(2));
    }

    #[test]
    fn members_are_reproduced_exactly() {
        let a = trig_map(120, 10, NormKind::Sup);
        let c = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let w = a.restricted() * &c;
        let r = a.approximate(w.as_slice()).unwrap();
        assert_eq!(r.z, w);
        assert!((r.coeffs - c).amax() < 1e-10);
        assert_eq!(a.approx_error(w.as_slice()).unwrap(), 0.0);
    }

    #[test]
    fn minimax_fit_matches_direct_program() {
        let a = trig_map(120, 10, NormKind::Sup);
        let pts = equispaced_points(-PI, PI, 10);
        let w: Vec<f64> = pts.iter().map(|t| t.sin().abs()).collect();
        let r = a.approximate(&w).unwrap();

        // min e  s.t.  −e ≤ w_j − (B c)_j ≤ e, written out directly
        let b = a.restricted();
        let mut lp = LinearProgram::minimize(vec![0.0, 0.0, 0.0, 1.0]);
        for k in 0..3 {
            lp.set_free(k);
        }
        for j in 0..10 {
            let row: Vec<f64> = (0..3).map(|k| b[(j, k)]).collect();
            lp.add_constraint(vec![row[0], row[1], row[2], 1.0], Relation::Ge, w[j]);
            lp.add_constraint(vec![row[0], row[1], row[2], -1.0], Relation::Le, w[j]);
        }
        let rep = solve_lp(&lp).unwrap();
        let resid = (DVector::from_vec(w.clone()) - &r.z).amax();
        assert!((resid - rep.objective_value).abs() < 1e-8);
        assert!((r.residual_norm - rep.objective_value).abs() < 1e-8);
    }

    #[test]
    fn incompatible_method_is_rejected() {
        let s = Arc::new(Space::sequence(3, NormKind::Sup).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0] }, s.clone()).unwrap());
        let m = Arc::new(MeasurementOperator::point_eval(s, vec![0, 1]).unwrap());
        assert!(ApproxMap::new(m, v, ApproxMethod::LeastSquares).is_err());
    }

    #[test]
    fn intersection_is_reported() {
        let s = Arc::new(Space::sequence(3, NormKind::Sup).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Coordinate { indices: vec![2] }, s.clone()).unwrap());
        let m = Arc::new(MeasurementOperator::point_eval(s, vec![0, 1]).unwrap());
        assert!(matches!(ApproxMap::exact(m, v), Err(RecovError::Intersection { .. })));
    }

    fn general_map(kind: NormKind, seed: u64) -> ApproxMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Arc::new(Space::grid(-1.0, 1.0, 10, Quadrature::Midpoint, kind).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Poly { n: 1 }, s.clone()).unwrap());
        let d = DMatrix::from_fn(4, 10, |_, _| rng.gen_range(-1.0..1.0));
        let m = Arc::new(MeasurementOperator::general(s, &d).unwrap());
        ApproxMap::exact(m, v).unwrap()
    }

    #[test]
    fn error_is_below_distance_for_all_ambients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [NormKind::Sup, NormKind::Lp(1.0), NormKind::Hilbert, NormKind::Lp(3.0)] {
            let a = general_map(kind, 5);
            let space = a.measurement().space().clone();
            for _ in 0..100 {
                let x = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
                let w = a.measurement().apply(&x).unwrap();
                let e = a.approx_error(w.as_slice()).unwrap();
                let d = dist_to_subspace(&space, &x, a.subspace()).unwrap().value;
                assert!(e <= d * (1.0 + 1e-8) + 1e-10, "{kind:?}: E={e} dist={d}");
            }
        }
    }

    #[test]
    fn residual_matches_m_norm_for_general_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in [NormKind::Sup, NormKind::Lp(1.0), NormKind::Hilbert, NormKind::Lp(3.0)] {
            let a = general_map(kind, 21);
            for _ in 0..10 {
                let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = a.approximate(&w).unwrap();
                let resid: Vec<f64> = w.iter().zip(r.z.iter()).map(|(a, b)| a - b).collect();
                let direct = a.measurement().m_norm(&resid).unwrap();
                assert!((direct - r.residual_norm).abs() <= 1e-7 * (1.0 + direct), "{kind:?}");
                let e = a.approx_error(&w).unwrap();
                assert!(direct <= a.lambda() * e * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn near_best_contract_and_homogeneity(
            w in prop::collection::vec(-2.0f64..2.0, 10),
            scale in 0.1f64..10.0,
        ) {
            let a = trig_map(60, 10, NormKind::Sup);
            let r = a.approximate(&w).unwrap();
            let e = a.approx_error(&w).unwrap();
            let resid: Vec<f64> = w.iter().zip(r.z.iter()).map(|(x, z)| x - z).collect();
            let rn = a.measurement().m_norm(&resid).unwrap();
            prop_assert!(rn <= a.lambda() * e * (1.0 + 1e-9) + 1e-12);

            let ws: Vec<f64> = w.iter().map(|x| x * scale).collect();
            let rs = a.approximate(&ws).unwrap();
            prop_assert!((rs.residual_norm - scale * r.residual_norm).abs() <= 1e-9 * (1.0 + scale * r.residual_norm));
        }
    }
}
