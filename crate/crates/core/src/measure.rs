//! Measurement operators `M = (l_1, …, l_m)`, the induced norm on `R^m`, and
//! measurement factories.
//!
//! A functional is stored through its pairing row `g`, with `l(x) = Σ_i g_i x_i`.
//! For integral functionals the pairing already contains the quadrature weight,
//! i.e. `g_i = w_i · density(t_i)`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, RecovError, Result};
use crate::linalg::{null_space, PivotedQr};
use crate::solvers::{minimize_pnorm, solve_lp, LinearProgram, LpStatus, Relation};
use crate::spaces::{Element, NormKind, Space, Subspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Evaluation at the given (0-based) node indices.
    PointEval { indices: Vec<usize> },
    /// Normalised averages over pairwise disjoint index sets.
    DisjointAvg { supports: Vec<Vec<usize>> },
    /// Rademacher functions `sgn sin(2^{j+1} π t)`, `j = 1..m`, on a dyadic grid.
    Rademacher { m: usize },
    /// Real Fourier coefficients `1, cos t, sin t, cos 2t, …` with the `1/2π` factor.
    Fourier { m: usize },
    General,
}

/// Unit ball of `‖·‖_M` when the measurement kind pins it down in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MBall {
    /// `‖w‖_M = max_j |w_j|`.
    MaxAbs,
    /// `‖w‖_M = ‖w‖_{ℓ_p}`.
    Lp(f64),
}

impl MBall {
    pub fn norm(&self, w: &[f64]) -> f64 {
        match *self {
            MBall::MaxAbs => crate::linalg::max_abs(w),
            MBall::Lp(p) => lp_norm(w, p),
        }
    }

    pub fn dual_norm(&self, alpha: &[f64]) -> f64 {
        match *self {
            MBall::MaxAbs => alpha.iter().map(|a| a.abs()).sum(),
            MBall::Lp(p) if p == 1.0 => crate::linalg::max_abs(alpha),
            MBall::Lp(p) => lp_norm(alpha, p / (p - 1.0)),
        }
    }
}

fn lp_norm(v: &[f64], p: f64) -> f64 {
    let scale = crate::linalg::max_abs(v);
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// QR data of `H = W^{-1/2} Gᵀ` shared by every Hilbert computation.
#[derive(Debug, Clone)]
pub(crate) struct HilbertFactor {
    /// Orthonormal basis of `range(H)`, `N × m`.
    pub q: DMatrix<f64>,
    r: DMatrix<f64>,
    perm: Vec<usize>,
    sqrt_w: Vec<f64>,
}

impl HilbertFactor {
    /// `y` with `Rᵀ y = Pᵀ b`, so that `Hᵀ Q y = b`.
    pub fn rt_solve(&self, b: &[f64]) -> DVector<f64> {
        let m = self.r.nrows();
        let mut y = DVector::zeros(m);
        for i in 0..m {
            let mut s = b[self.perm[i]];
            for k in 0..i {
                s -= self.r[(k, i)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        y
    }

    /// Least-norm element of the coset `{x : G x = b}`.
    pub fn least_norm(&self, b: &[f64]) -> Element {
        let u = &self.q * self.rt_solve(b);
        DVector::from_iterator(u.len(), u.iter().zip(&self.sqrt_w).map(|(v, s)| v / s))
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    space: Arc<Space>,
    kind: MeasurementKind,
    pairing: DMatrix<f64>,
    null: OnceLock<DMatrix<f64>>,
    hilbert: OnceLock<HilbertFactor>,
}

impl PartialEq for MeasurementOperator {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.kind == other.kind && self.pairing == other.pairing
    }
}

impl MeasurementOperator {
    /// Operator from explicit pairing rows (`m × N`).
    pub fn from_pairing(space: Arc<Space>, pairing: DMatrix<f64>, kind: MeasurementKind) -> Result<Self> {
        check_len("pairing columns", space.dim(), pairing.ncols())?;
        let m = pairing.nrows();
        if m == 0 {
            return Err(RecovError::invalid("at least one functional is required"));
        }
        if m > space.dim() {
            return Err(RecovError::invalid(format!(
                "{m} functionals cannot be independent on a {}-point grid",
                space.dim()
            )));
        }
        if pairing.iter().any(|v| !v.is_finite()) {
            return Err(RecovError::invalid("functional rows have non-finite entries"));
        }
        let qr = PivotedQr::new(&pairing.transpose());
        if qr.rank() < m {
            return Err(RecovError::RankDeficient {
                columns: qr.dependent_columns(),
            });
        }
        Ok(MeasurementOperator {
            space,
            kind,
            pairing,
            null: OnceLock::new(),
            hilbert: OnceLock::new(),
        })
    }

    /// General functionals given by densities (`m × N`) against the quadrature.
    pub fn general(space: Arc<Space>, densities: &DMatrix<f64>) -> Result<Self> {
        check_len("density columns", space.dim(), densities.ncols())?;
        let w = space.weights().to_vec();
        let g = DMatrix::from_fn(densities.nrows(), densities.ncols(), |j, i| densities[(j, i)] * w[i]);
        Self::from_pairing(space, g, MeasurementKind::General)
    }

    pub fn point_eval(space: Arc<Space>, indices: Vec<usize>) -> Result<Self> {
        let n = space.dim();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(RecovError::invalid(format!("evaluation index {bad} out of range")));
        }
        let g = DMatrix::from_fn(indices.len(), n, |j, i| if indices[j] == i { 1.0 } else { 0.0 });
        Self::from_pairing(space, g, MeasurementKind::PointEval { indices })
    }

    /// Point evaluations at locations that must coincide with grid nodes.
    pub fn point_eval_at(space: Arc<Space>, points: &[f64]) -> Result<Self> {
        let indices = points
            .iter()
            .map(|&p| {
                let tol = 1e-9 * (1.0 + p.abs());
                let nodes = space.nodes();
                let k = nodes.partition_point(|&t| t < p - tol);
                if k < nodes.len() && (nodes[k] - p).abs() <= tol {
                    Ok(k)
                } else {
                    Err(RecovError::Precondition(format!("evaluation point {p} is not a grid node")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::point_eval(space, indices)
    }

    /// Averages over disjoint supports, each scaled to unit dual norm.
    pub fn disjoint_avg(space: Arc<Space>, supports: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.dim();
        let mut seen = vec![false; n];
        for s in &supports {
            if s.is_empty() {
                return Err(RecovError::invalid("empty support"));
            }
            for &i in s {
                if i >= n {
                    return Err(RecovError::invalid(format!("support index {i} out of range")));
                }
                if seen[i] {
                    return Err(RecovError::invalid(format!("supports overlap at index {i}")));
                }
                seen[i] = true;
            }
        }
        let w = space.weights();
        let q = dual_exponent(space.kind());
        let mut g = DMatrix::zeros(supports.len(), n);
        for (j, s) in supports.iter().enumerate() {
            let size: f64 = s.iter().map(|&i| w[i]).sum();
            let c = if q.is_infinite() { 1.0 } else { size.powf(-1.0 / q) };
            for &i in s {
                g[(j, i)] = c * w[i];
            }
        }
        Self::from_pairing(space, g, MeasurementKind::DisjointAvg { supports })
    }

    pub fn rademacher(space: Arc<Space>, m: usize) -> Result<Self> {
        let levels = space.dyadic_levels().ok_or_else(|| {
            RecovError::Precondition("Rademacher functionals need a dyadic grid on [0, 1]".into())
        })? as usize;
        if m == 0 || levels < m + 1 {
            return Err(RecovError::Precondition(format!(
                "{m} Rademacher functionals need at least 2^{} dyadic cells, grid has 2^{levels}",
                m + 1
            )));
        }
        let w = space.weights().to_vec();
        let g = DMatrix::from_fn(m, space.dim(), |j, i| rademacher_sign(j, i, levels) * w[i]);
        Self::from_pairing(space, g, MeasurementKind::Rademacher { m })
    }

    pub fn fourier(space: Arc<Space>, m: usize) -> Result<Self> {
        let on_circle = matches!(space.domain(), Some((a, b)) if (a + PI).abs() < 1e-12 && (b - PI).abs() < 1e-12);
        if !space.kind().is_hilbert() || !on_circle {
            return Err(RecovError::Precondition(
                "Fourier functionals need a Hilbert space on [−π, π]".into(),
            ));
        }
        let t = space.nodes().to_vec();
        let w = space.weights().to_vec();
        let g = DMatrix::from_fn(m, space.dim(), |j, i| fourier_row(j, t[i]) * w[i] / (2.0 * PI));
        Self::from_pairing(space, g, MeasurementKind::Fourier { m })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn kind(&self) -> &MeasurementKind {
        &self.kind
    }

    pub fn m(&self) -> usize {
        self.pairing.nrows()
    }

    pub fn pairing(&self) -> &DMatrix<f64> {
        &self.pairing
    }

    /// Rows as densities against the quadrature weights (pairing / weight).
    pub fn densities(&self) -> DMatrix<f64> {
        let w = self.space.weights();
        DMatrix::from_fn(self.m(), self.space.dim(), |j, i| self.pairing[(j, i)] / w[i])
    }

    /// Orthonormal (Euclidean) basis of the null space, `N × (N − m)`.
    pub fn null_basis(&self) -> &DMatrix<f64> {
        self.null.get_or_init(|| null_space(&self.pairing))
    }

    pub(crate) fn hilbert_factor(&self) -> &HilbertFactor {
        self.hilbert.get_or_init(|| {
            let sqrt_w: Vec<f64> = self.space.weights().iter().map(|w| w.sqrt()).collect();
            let h = DMatrix::from_fn(self.space.dim(), self.m(), |i, j| self.pairing[(j, i)] / sqrt_w[i]);
            let qr = PivotedQr::new(&h);
            let m = self.m();
            HilbertFactor {
                q: qr.q_columns(0..m),
                r: qr.r().view((0, 0), (m, m)).into_owned(),
                perm: qr.perm().to_vec(),
                sqrt_w,
            }
        })
    }

    pub fn apply(&self, x: &Element) -> Result<DVector<f64>> {
        self.space.check_element(x)?;
        Ok(&self.pairing * x)
    }

    /// `M` restricted to the model space, as the `m × n` matrix `G V`.
    pub fn restricted(&self, v: &Subspace) -> Result<DMatrix<f64>> {
        if **v.space() != *self.space {
            return Err(RecovError::invalid("model space lives in a different ambient space"));
        }
        Ok(&self.pairing * v.basis())
    }

    /// Checks that no nonzero element of `V` is annihilated by `M`; otherwise
    /// returns a unit-norm witness in `V ∩ N`.
    pub fn check_injective_on(&self, v: &Subspace) -> Result<()> {
        let b = self.restricted(v)?;
        let qr = PivotedQr::new(&b);
        if qr.rank() == v.dim() {
            return Ok(());
        }
        let c = null_space(&b).column(0).into_owned();
        let x = v.element(&c);
        let nx = self.space.norm_unchecked(x.as_slice());
        Err(RecovError::Intersection {
            witness: x.iter().map(|t| t / nx).collect(),
        })
    }

    /// True when the first rows of `self` are exactly the rows of `other`.
    pub fn is_extension_of(&self, other: &MeasurementOperator) -> bool {
        self.space == other.space
            && other.m() <= self.m()
            && self.pairing.rows(0, other.m()) == other.pairing
    }

    /// Closed-form unit ball of `‖·‖_M`, when the kind certifies one.
    pub fn closed_form(&self) -> Option<MBall> {
        match (&self.kind, self.space.kind()) {
            (MeasurementKind::PointEval { .. }, NormKind::Sup) => Some(MBall::MaxAbs),
            (MeasurementKind::Rademacher { .. }, NormKind::Lp(p)) if p == 1.0 => Some(MBall::MaxAbs),
            (MeasurementKind::DisjointAvg { .. }, NormKind::Sup) => Some(MBall::MaxAbs),
            (MeasurementKind::DisjointAvg { .. }, NormKind::Lp(p)) => Some(MBall::Lp(p)),
            (MeasurementKind::DisjointAvg { .. }, NormKind::Hilbert) => Some(MBall::Lp(2.0)),
            _ => None,
        }
    }

    fn check_data(&self, w: &[f64]) -> Result<()> {
        check_len("measurement vector", self.m(), w.len())?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(RecovError::invalid("measurement vector has non-finite entries"));
        }
        Ok(())
    }

    /// `‖w‖_M = min{‖x‖ : M x = w}`.
    pub fn m_norm(&self, w: &[f64]) -> Result<f64> {
        self.check_data(w)?;
        match self.closed_form() {
            Some(ball) => Ok(ball.norm(w)),
            None => self.m_norm_by_optimization(w),
        }
    }

    /// `‖w‖_M` by the optimisation route of the ambient norm, ignoring closed forms.
    pub fn m_norm_by_optimization(&self, w: &[f64]) -> Result<f64> {
        self.check_data(w)?;
        if w.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        match self.space.kind() {
            NormKind::Sup => self.sup_coset_minimizer(w).map(|(v, _)| v),
            NormKind::Lp(p) if p == 1.0 => self.l1_coset_minimizer(w).map(|(v, _)| v),
            NormKind::Hilbert => Ok(self.hilbert_factor().rt_solve(w).norm()),
            NormKind::Lp(p) if p == 2.0 => Ok(self.hilbert_factor().rt_solve(w).norm()),
            NormKind::Lp(p) => self.lp_dual_newton(w, p).map(|(v, _)| v),
        }
    }

    /// An element of the coset `X_w` of least ambient norm.
    pub fn coset_minimizer(&self, w: &[f64]) -> Result<Element> {
        self.check_data(w)?;
        if w.iter().all(|&v| v == 0.0) {
            return Ok(DVector::zeros(self.space.dim()));
        }
        match self.space.kind() {
            NormKind::Sup => self.sup_coset_minimizer(w).map(|(_, x)| x),
            NormKind::Lp(p) if p == 1.0 => self.l1_coset_minimizer(w).map(|(_, x)| x),
            NormKind::Hilbert => Ok(self.hilbert_factor().least_norm(w)),
            NormKind::Lp(p) if p == 2.0 => Ok(self.hilbert_factor().least_norm(w)),
            NormKind::Lp(p) => self.lp_dual_newton(w, p).map(|(_, x)| x),
        }
    }

    /// Dual norm of `α`: the ambient dual norm of `Σ_j α_j l_j`.
    pub fn m_dual_norm(&self, alpha: &[f64]) -> Result<f64> {
        check_len("dual vector", self.m(), alpha.len())?;
        let r = self.pairing.transpose() * DVector::from_column_slice(alpha);
        self.space.dual_norm(r.as_slice())
    }

    /// `sup{α·w : ‖α‖*_M ≤ 1}`, solved as a program in `α` and independent of
    /// [`MeasurementOperator::m_norm_by_optimization`]. For `L_p`, `p ∉ {1, 2}`,
    /// the primal is minimised over the null-space parametrisation instead.
    pub fn m_norm_dual(&self, w: &[f64]) -> Result<f64> {
        self.check_data(w)?;
        let (m, n) = (self.m(), self.space.dim());
        let g = &self.pairing;
        match self.space.kind() {
            NormKind::Sup => {
                // α free, Gᵀα = p − q, Σ(p + q) ≤ 1
                let mut obj = w.to_vec();
                obj.extend(std::iter::repeat(0.0).take(2 * n));
                let mut lp = LinearProgram::maximize(obj);
                for j in 0..m {
                    lp.set_free(j);
                }
                for i in 0..n {
                    let mut row = vec![0.0; m + 2 * n];
                    for j in 0..m {
                        row[j] = g[(j, i)];
                    }
                    row[m + i] = -1.0;
                    row[m + n + i] = 1.0;
                    lp.add_constraint(row, Relation::Eq, 0.0);
                }
                let mut row = vec![0.0; m + 2 * n];
                row[m..].iter_mut().for_each(|v| *v = 1.0);
                lp.add_constraint(row, Relation::Le, 1.0);
                lp_value(&lp)
            }
            NormKind::Lp(p) if p == 1.0 => {
                // α free, s = Gᵀα with |s_i| ≤ w_i
                let mut obj = w.to_vec();
                obj.extend(std::iter::repeat(0.0).take(n));
                let mut lp = LinearProgram::maximize(obj);
                for j in 0..m {
                    lp.set_free(j);
                }
                for (i, &wi) in self.space.weights().iter().enumerate() {
                    lp.set_bounds(m + i, -wi, wi);
                    let mut row = vec![0.0; m + n];
                    for j in 0..m {
                        row[j] = g[(j, i)];
                    }
                    row[m + i] = -1.0;
                    lp.add_constraint(row, Relation::Eq, 0.0);
                }
                lp_value(&lp)
            }
            NormKind::Hilbert | NormKind::Lp(2.0) => {
                let winv: Vec<f64> = self.space.weights().iter().map(|w| 1.0 / w).collect();
                let q = DMatrix::from_fn(m, m, |a, b| (0..n).map(|i| g[(a, i)] * g[(b, i)] * winv[i]).sum());
                let chol = q
                    .cholesky()
                    .ok_or_else(|| RecovError::solver("Gram matrix of the functionals is not positive definite", vec![]))?;
                let wv = DVector::from_column_slice(w);
                Ok(wv.dot(&chol.solve(&wv)).max(0.0).sqrt())
            }
            NormKind::Lp(p) => {
                let x0 = self.hilbert_factor().least_norm(w);
                let z = self.null_basis();
                if z.ncols() == 0 {
                    return Ok(self.space.norm_unchecked(x0.as_slice()));
                }
                let sol = minimize_pnorm(&(-z), &x0, p, Some(self.space.weights()))?;
                Ok(sol.norm)
            }
        }
    }

    fn sup_coset_minimizer(&self, w: &[f64]) -> Result<(f64, Element)> {
        // max s  s.t.  G x − s w = 0,  x ∈ [−1, 1]^N,  s ≥ 0;  then ‖w‖_M = 1/s
        let (m, n) = (self.m(), self.space.dim());
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        for i in 0..n {
            lp.set_bounds(i, -1.0, 1.0);
        }
        for j in 0..m {
            let mut row: Vec<f64> = self.pairing.row(j).iter().copied().collect();
            row.push(-w[j]);
            lp.add_constraint(row, Relation::Eq, 0.0);
        }
        let rep = solve_lp(&lp)?;
        if rep.status != LpStatus::Optimal || rep.solution[n] <= 0.0 {
            return Err(RecovError::solver(
                format!("sup-norm coset program returned {:?}", rep.status),
                vec![rep.iterations as f64, rep.objective_value],
            ));
        }
        let s = rep.solution[n];
        let x = DVector::from_iterator(n, rep.solution[..n].iter().map(|v| v / s));
        Ok((self.space.norm_unchecked(x.as_slice()), x))
    }

    fn l1_coset_minimizer(&self, w: &[f64]) -> Result<(f64, Element)> {
        // min Σ w_i (p_i + q_i)  s.t.  G (p − q) = w
        let (m, n) = (self.m(), self.space.dim());
        let wts = self.space.weights();
        let mut obj = wts.to_vec();
        obj.extend_from_slice(wts);
        let mut lp = LinearProgram::minimize(obj);
        for j in 0..m {
            let mut row: Vec<f64> = self.pairing.row(j).iter().copied().collect();
            row.extend(self.pairing.row(j).iter().map(|v| -v));
            lp.add_constraint(row, Relation::Eq, w[j]);
        }
        let rep = solve_lp(&lp)?;
        if rep.status != LpStatus::Optimal {
            return Err(RecovError::solver(
                format!("L1 coset program returned {:?}", rep.status),
                vec![rep.iterations as f64],
            ));
        }
        let x = DVector::from_iterator(n, (0..n).map(|i| rep.solution[i] - rep.solution[n + i]));
        Ok((self.space.norm_unchecked(x.as_slice()), x))
    }

    /// Maximises `φ(λ) = λ·w − (1/p') Σ w_i |s_i|^{p'}`, `s = Gᵀλ / w`, by damped
    /// Newton. At the optimum `‖w‖_M^p = p φ*` and `x_i = |s_i|^{p'−1} sgn s_i`.
    fn lp_dual_newton(&self, w: &[f64], p: f64) -> Result<(f64, Element)> {
        let q = p / (p - 1.0);
        let wts = self.space.weights();
        let g = &self.pairing;
        let n = self.space.dim();
        let scale = crate::linalg::max_abs(w);
        let wv = DVector::from_iterator(w.len(), w.iter().map(|v| v / scale));

        let dens = |lam: &DVector<f64>| -> Vec<f64> {
            let r = g.transpose() * lam;
            r.iter().zip(wts).map(|(ri, wi)| ri / wi).collect()
        };
        let phi = |lam: &DVector<f64>| -> f64 {
            let s = dens(lam);
            lam.dot(&wv) - s.iter().zip(wts).map(|(si, wi)| wi * si.abs().powf(q)).sum::<f64>() / q
        };

        // start from the Hilbert multiplier, rescaled along its ray
        let winv: Vec<f64> = wts.iter().map(|v| 1.0 / v).collect();
        let gram = DMatrix::from_fn(self.m(), self.m(), |a, b| {
            (0..n).map(|i| g[(a, i)] * g[(b, i)] * winv[i]).sum::<f64>()
        });
        let mut lam = gram
            .clone()
            .lu()
            .solve(&wv)
            .ok_or_else(|| RecovError::solver("singular Gram matrix", vec![]))?;
        let a = lam.dot(&wv);
        let b: f64 = dens(&lam).iter().zip(wts).map(|(si, wi)| wi * si.abs().powf(q)).sum();
        if a > 0.0 && b > 0.0 {
            lam *= (a / b).powf(1.0 / (q - 1.0));
        }

        let mut val = phi(&lam);
        let mut trace = vec![val];
        let mut converged = false;
        for _ in 0..200 {
            let s = dens(&lam);
            let y = DVector::from_iterator(n, s.iter().map(|si| si.abs().powf(q - 1.0) * si.signum()));
            let grad = &wv - g * &y;
            if grad.amax() <= 1e-13 {
                converged = true;
                break;
            }
            let smax = crate::linalg::max_abs(&s);
            let floor = 1e-12 * smax.max(f64::MIN_POSITIVE);
            let d: Vec<f64> = s
                .iter()
                .zip(wts)
                .map(|(si, wi)| (q - 1.0) * si.abs().max(floor).powf(q - 2.0) / wi)
                .collect();
            let mut h = DMatrix::from_fn(self.m(), self.m(), |a, b| {
                (0..n).map(|i| g[(a, i)] * g[(b, i)] * d[i]).sum::<f64>()
            });
            let ridge = 1e-14 * h.trace() / self.m() as f64;
            for k in 0..self.m() {
                h[(k, k)] += ridge;
            }
            let step = match h.clone().cholesky() {
                Some(c) => c.solve(&grad),
                None => h.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
            };
            // φ is concave along the step: maximise exactly by bisecting on the slope
            let slope_at = |t: f64| -> f64 {
                let s = dens(&(&lam + &step * t));
                let y = DVector::from_iterator(n, s.iter().map(|si| si.abs().powf(q - 1.0) * si.signum()));
                step.dot(&(&wv - g * &y))
            };
            if grad.dot(&step) <= 0.0 {
                converged = true;
                break;
            }
            let t = if slope_at(1.0) >= 0.0 {
                1.0
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if slope_at(mid) >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let cand = &lam + &step * t;
            let v = phi(&cand);
            let next = (v >= val).then_some((cand, v));
            match next {
                Some((cand, v)) => {
                    let gain = v - val;
                    lam = cand;
                    val = v;
                    trace.push(val);
                    if gain <= 1e-16 * val.abs() {
                        converged = true;
                        break;
                    }
                }
                None => {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(RecovError::solver("dual Newton for the L_p measurement norm did not converge", trace));
        }
        let s = dens(&lam);
        let x = DVector::from_iterator(n, s.iter().map(|si| scale * si.abs().powf(q - 1.0) * si.signum()));
        Ok((scale * (p * val.max(0.0)).powf(1.0 / p), x))
    }
}

fn lp_value(lp: &LinearProgram) -> Result<f64> {
    let rep = solve_lp(lp)?;
    if rep.status != LpStatus::Optimal {
        return Err(RecovError::solver(
            format!("dual measurement-norm program returned {:?}", rep.status),
            vec![rep.iterations as f64],
        ));
    }
    Ok(rep.objective_value)
}

/// Dual exponent `p'` of the ambient norm (`1` for sup, `∞` for `L_1`).
pub(crate) fn dual_exponent(kind: NormKind) -> f64 {
    match kind {
        NormKind::Sup => 1.0,
        NormKind::Hilbert => 2.0,
        NormKind::Lp(p) if p == 1.0 => f64::INFINITY,
        NormKind::Lp(p) => p / (p - 1.0),
    }
}

/// Sign of the `j`-th (0-based) Rademacher function on dyadic cell `i` of `2^levels`.
pub(crate) fn rademacher_sign(j: usize, i: usize, levels: usize) -> f64 {
    if (i >> (levels - j - 2)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn fourier_row(j: usize, t: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let k = ((j + 1) / 2) as f64;
    if j % 2 == 1 {
        (k * t).cos()
    } else {
        (k * t).sin()
    }
}

/// `m` equispaced points `a + (b − a) j / m`.
pub fn equispaced_points(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| a + (b - a) * j as f64 / m as f64).collect()
}

pub const NET_SIZE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct NetDesign {
    pub operator: MeasurementOperator,
    /// Number of net elements before duplicate coordinates were merged.
    pub net_size: usize,
    /// Covering radius reached on the candidate directions.
    pub achieved_delta: f64,
}

/// Point evaluations chosen by norming a δ-net of the unit sphere of `V`.
pub fn design_net_measurements(v: &Subspace, delta: f64) -> Result<NetDesign> {
    design_net_measurements_with_cap(v, delta, NET_SIZE_CAP)
}

pub fn design_net_measurements_with_cap(v: &Subspace, delta: f64, cap: usize) -> Result<NetDesign> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(RecovError::invalid(format!("net radius must lie in (0, 1), got {delta}")));
    }
    let space = v.space().clone();
    if space.kind() != NormKind::Sup {
        return Err(RecovError::Precondition("net design needs a sup-norm ambient space".into()));
    }
    let n = v.dim();
    let dirs: Vec<DVector<f64>> = match n {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => {
            let k = 64 * n * n;
            (0..k)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / k as f64;
                    DVector::from_vec(vec![th.cos(), th.sin()])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6e65_7473);
            let mut out = Vec::with_capacity(64 * n * n + 2 * n);
            for k in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = DVector::zeros(n);
                    e[k] = s;
                    out.push(e);
                }
            }
            while out.len() < 64 * n * n + 2 * n {
                let c = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                if c.norm() > 1e-8 {
                    out.push(c);
                }
            }
            out
        }
    };
    let cands: Vec<Element> = dirs
        .iter()
        .map(|c| {
            let x = v.element(c);
            let s = x.amax();
            x / s
        })
        .collect();

    let sup_dist = |a: &Element, b: &Element| (a - b).amax();
    let mut net = vec![0usize];
    let mut gap: Vec<f64> = cands.iter().map(|c| sup_dist(c, &cands[0])).collect();
    loop {
        let (far, &worst) = gap
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, g)| if *g > *acc.1 { (i, g) } else { acc });
        if worst <= delta {
            break;
        }
        if net.len() >= cap {
            return Err(RecovError::SizeLimit(format!(
                "net reached {cap} elements with covering radius {worst:.6}"
            )));
        }
        net.push(far);
        for (i, c) in cands.iter().enumerate() {
            gap[i] = gap[i].min(sup_dist(c, &cands[far]));
        }
    }
    let achieved = gap.iter().cloned().fold(0.0, f64::max);

    let mut indices: Vec<usize> = net
        .iter()
        .map(|&k| {
            let u = &cands[k];
            let mut best = 0;
            for i in 0..u.len() {
                if u[i].abs() > u[best].abs() {
                    best = i;
                }
            }
            best
        })
        .collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(NetDesign {
        operator: MeasurementOperator::point_eval(space, indices)?,
        net_size: net.len(),
        achieved_delta: achieved,
    })
}
