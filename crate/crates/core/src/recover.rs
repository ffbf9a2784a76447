//! The recovery map `A(w) = M_V^{-1}(Λ(w)) + Δ(w − Λ(w))`, its model-space
//! variant, and the certificates that accompany a recovery.

use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use serde::Serialize;

use crate::angles::{angle_report, AngleReport, Mu};
use crate::approx::{ApproxMap, ApproxMethod};
use crate::error::{RecovError, Result};
use crate::lift::{Lifting, LiftingChoice};
use crate::linalg::max_abs;
use crate::measure::{MeasurementKind, MeasurementOperator};
use crate::spaces::{dist_to_subspace, Element, NormKind, Space, Subspace};

/// A measurement operator, a model space, and an optional model tolerance `ε`.
///
/// The tolerance never enters the algorithm; it is only used by certificates.
#[derive(Debug)]
pub struct RecoveryProblem {
    m: Arc<MeasurementOperator>,
    v: Arc<Subspace>,
    eps: Option<f64>,
    angles: OnceLock<AngleReport>,
}

impl RecoveryProblem {
    pub fn new(m: Arc<MeasurementOperator>, v: Arc<Subspace>, eps: Option<f64>) -> Result<Self> {
        if **m.space() != **v.space() {
            return Err(RecovError::invalid("measurements and model space live in different ambient spaces"));
        }
        if let Some(e) = eps {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(RecovError::invalid(format!("tolerance must be finite and nonnegative, got {e}")));
            }
        }
        m.check_injective_on(&v)?;
        Ok(RecoveryProblem {
            m,
            v,
            eps,
            angles: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &Arc<Space> {
        self.m.space()
    }

    pub fn measurement(&self) -> &Arc<MeasurementOperator> {
        &self.m
    }

    pub fn subspace(&self) -> &Arc<Subspace> {
        &self.v
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.eps
    }

    /// Angle constants, computed on first use.
    pub fn angles(&self) -> Result<&AngleReport> {
        if let Some(a) = self.angles.get() {
            return Ok(a);
        }
        let report = angle_report(&self.m, &self.v)?;
        Ok(self.angles.get_or_init(|| report))
    }
}

/// An approximation map and a lifting over the same measurements.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub approx: ApproxMap,
    pub lifting: Lifting,
}

impl Pipeline {
    pub fn new(approx: ApproxMap, lifting: Lifting) -> Result<Self> {
        let (a, b) = (approx.measurement(), lifting.measurement());
        if !Arc::ptr_eq(a, b) && (a.pairing() != b.pairing() || **a.space() != **b.space()) {
            return Err(RecovError::invalid("approximation map and lifting use different measurements"));
        }
        Ok(Pipeline { approx, lifting })
    }

    /// Default pairing of approximation method and lifting for the ambient and functionals.
    pub fn default_for(problem: &RecoveryProblem) -> Result<Self> {
        let m = problem.measurement().clone();
        let v = problem.subspace().clone();
        let kind = m.space().kind();
        let disjoint = matches!(
            m.kind(),
            MeasurementKind::PointEval { .. } | MeasurementKind::DisjointAvg { .. }
        );
        let rademacher_l1 = matches!(m.kind(), MeasurementKind::Rademacher { .. })
            && kind == NormKind::Lp(1.0)
            && m.space().dyadic_levels().is_some();
        let (method, choice) = match kind {
            _ if rademacher_l1 => (ApproxMethod::MinimaxLp, LiftingChoice::RieszProduct),
            NormKind::Hilbert => (ApproxMethod::LeastSquares, LiftingChoice::Orthonormal),
            NormKind::Lp(p) if p == 2.0 => (ApproxMethod::LeastSquares, LiftingChoice::Orthonormal),
            _ => {
                let method = ApproxMethod::exact_for(kind);
                let choice = if disjoint {
                    LiftingChoice::DualBasisDisjoint
                } else if matches!(kind, NormKind::Lp(p) if p > 1.0) {
                    LiftingChoice::MinNorm
                } else {
                    LiftingChoice::DualBasisLeastSquares
                };
                (method, choice)
            }
        };
        let approx = ApproxMap::new(m.clone(), v, method)?;
        let lifting = Lifting::from_choice(m, choice)?;
        Ok(Pipeline { approx, lifting })
    }

    /// `λ‖Δ‖` with the documented upper bound for `‖Δ‖`.
    pub fn lambda_delta(&self) -> f64 {
        self.approx.lambda() * self.lifting.norm_bound()
    }
}

/// A bound that may be unavailable (no tolerance given) or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Bound {
    Finite(f64),
    Infinite,
    Unavailable,
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub reconstruction: Vec<f64>,
    pub v_component: Vec<f64>,
    pub v_coeffs: Vec<f64>,
    /// `max_j |l_j(A(w)) − w_j|`.
    pub data_residual: f64,
    /// `dist(A(w), V)`.
    pub model_distance: f64,
    /// `E(w)`, the distance of the data from `M(V)` in the measurement norm.
    pub approx_error: f64,
    pub lambda: f64,
    pub lift_norm: f64,
    /// `4λ‖Δ‖μ(N,V)E(w)`: the guarantee for the closest-to-`V` elements consistent with `w`.
    pub bound_instance: Bound,
    /// `4λ‖Δ‖εμ(N,V)`.
    pub bound_global: Bound,
    pub lifting: String,
    pub warnings: Vec<String>,
}

fn mu_bound(angles: &AngleReport) -> Option<f64> {
    match angles.mu_n_v {
        Mu::Infinite { .. } => None,
        ref mu => mu.upper(),
    }
}

fn bounds(problem: &RecoveryProblem, pipeline: &Pipeline, e: f64) -> Result<(Bound, Bound)> {
    let ld = pipeline.lambda_delta();
    let angles = problem.angles()?;
    let Some(mu) = mu_bound(angles) else {
        let global = if problem.epsilon().is_some() { Bound::Infinite } else { Bound::Unavailable };
        return Ok((Bound::Infinite, global));
    };
    let instance = Bound::Finite(4.0 * ld * mu * e);
    let global = match problem.epsilon() {
        Some(eps) => Bound::Finite(4.0 * ld * eps * mu),
        None => Bound::Unavailable,
    };
    Ok((instance, global))
}

fn build_report(
    problem: &RecoveryProblem,
    pipeline: &Pipeline,
    w: &[f64],
    reconstruction: Element,
    coeffs: DVector<f64>,
    approx_error: f64,
    mut warnings: Vec<String>,
) -> Result<RecoveryReport> {
    let space = problem.space();
    let v = problem.subspace();
    let v_component = v.element(&coeffs);
    let mx = problem.measurement().apply(&reconstruction)?;
    let data_residual = max_abs((mx - DVector::from_column_slice(w)).as_slice());
    let model_distance = dist_to_subspace(space, &reconstruction, v)?.value;
    let (bound_instance, bound_global) = bounds(problem, pipeline, approx_error)?;
    if let Some(mu) = problem.angles()?.mu_n_v.upper() {
        if !problem.angles()?.mu_n_v.is_exact() {
            warnings.push(format!("μ(N,V) is known only up to an interval; bounds use its upper end {mu:.6e}"));
        }
    }
    Ok(RecoveryReport {
        reconstruction: reconstruction.iter().copied().collect(),
        v_component: v_component.iter().copied().collect(),
        v_coeffs: coeffs.iter().copied().collect(),
        data_residual,
        model_distance,
        approx_error,
        lambda: pipeline.approx.lambda(),
        lift_norm: pipeline.lifting.norm_bound(),
        bound_instance,
        bound_global,
        lifting: pipeline.lifting.label().to_string(),
        warnings,
    })
}

/// Runs the recovery map on data `w`.
pub fn recover(problem: &RecoveryProblem, pipeline: &Pipeline, w: &[f64]) -> Result<RecoveryReport> {
    let (x, coeffs, e, warnings) = recover_raw(problem, pipeline, w)?;
    build_report(problem, pipeline, w, x, coeffs, e, warnings)
}

/// Just the reconstruction, without the report diagnostics.
pub fn recover_element(problem: &RecoveryProblem, pipeline: &Pipeline, w: &[f64]) -> Result<Element> {
    recover_raw(problem, pipeline, w).map(|r| r.0)
}

type Raw = (Element, DVector<f64>, f64, Vec<String>);

fn recover_raw(problem: &RecoveryProblem, pipeline: &Pipeline, w: &[f64]) -> Result<Raw> {
    check_pipeline(problem, pipeline)?;
    let approx = pipeline.approx.approximate(w)?;
    let residual: Vec<f64> = w.iter().zip(approx.z.iter()).map(|(a, b)| a - b).collect();
    let correction = pipeline.lifting.lift(&residual)?;
    let x = problem.subspace().element(&approx.coeffs) + correction;
    let e = pipeline.approx.approx_error(w)?;
    Ok((x, approx.coeffs, e, approx.condition_warning.into_iter().collect()))
}

/// The model-space variant `M_V^{-1}(Λ(w))`; data need not be reproduced.
pub fn recover_into_v(problem: &RecoveryProblem, pipeline: &Pipeline, w: &[f64]) -> Result<RecoveryReport> {
    check_pipeline(problem, pipeline)?;
    let approx = pipeline.approx.approximate(w)?;
    let x = problem.subspace().element(&approx.coeffs);
    let e = pipeline.approx.approx_error(w)?;
    build_report(
        problem,
        pipeline,
        w,
        x,
        approx.coeffs,
        e,
        approx.condition_warning.into_iter().collect(),
    )
}

fn check_pipeline(problem: &RecoveryProblem, pipeline: &Pipeline) -> Result<()> {
    let m = problem.measurement();
    for other in [pipeline.approx.measurement(), pipeline.lifting.measurement()] {
        if !Arc::ptr_eq(m, other) && m.pairing() != other.pairing() {
            return Err(RecovError::invalid("pipeline was built for different measurements"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertRow {
    pub check: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub passed: bool,
}

impl CertRow {
    fn new(check: &str, value: f64, threshold: Option<f64>, passed: bool) -> Self {
        CertRow {
            check: check.to_string(),
            value,
            threshold,
            passed,
        }
    }
}

/// Certificate table for a finished recovery. Failed checks are rows, not errors.
pub fn certify(
    problem: &RecoveryProblem,
    pipeline: &Pipeline,
    w: &[f64],
    report: &RecoveryReport,
    f_true: Option<&Element>,
) -> Result<Vec<CertRow>> {
    let mut rows = Vec::new();
    let scale = 1.0 + max_abs(w);
    rows.push(CertRow::new(
        "admissibility",
        report.data_residual,
        Some(1e-8 * scale),
        report.data_residual <= 1e-8 * scale,
    ));
    let ld = pipeline.lambda_delta();
    let radius = ld * problem.epsilon().unwrap_or(report.approx_error).max(report.approx_error);
    let tol = 1e-6 * radius + 1e-9 * scale;
    rows.push(CertRow::new(
        "membership",
        report.model_distance,
        Some(radius),
        report.model_distance <= radius + tol,
    ));
    if let Bound::Finite(g) = report.bound_global {
        rows.push(CertRow::new("global_bound", g, None, g.is_finite()));
    } else if report.bound_global == Bound::Infinite {
        rows.push(CertRow::new("global_bound", f64::INFINITY, None, false));
    }
    if let Some(f) = f_true {
        let space = problem.space();
        let x = DVector::from_column_slice(&report.reconstruction);
        let actual = space.norm(&(f - &x))?;
        let threshold = report.bound_global.value();
        let passed = threshold.map_or(true, |t| actual <= t * (1.0 + 1e-6) + 1e-9 * scale);
        rows.push(CertRow::new("actual_error", actual, threshold, passed));
        let dist = dist_to_subspace(space, f, problem.subspace())?.value;
        match mu_bound(problem.angles()?) {
            Some(mu) if dist > 0.0 => {
                let ratio = actual / (4.0 * ld * mu * dist);
                rows.push(CertRow::new("instance_ratio", ratio, Some(1.0 + 1e-6), ratio <= 1.0 + 1e-6));
            }
            Some(_) => rows.push(CertRow::new("instance_ratio", actual, Some(1e-8 * scale), actual <= 1e-8 * scale)),
            None => rows.push(CertRow::new("instance_ratio", f64::INFINITY, None, false)),
        }
    }
    Ok(rows)
}
