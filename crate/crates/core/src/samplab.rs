//! Progressive sampling: nested model families, the choice `n(m)`, convergence
//! sweeps, norming constants, condition estimates, and an `ℓ_1` example where
//! total functionals fail to be norming.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::{mu_v_n, Mu};
use crate::approx::ApproxMethod;
use crate::error::{RecovError, Result};
use crate::linalg::PivotedQr;
use crate::measure::{MeasurementKind, MeasurementOperator};
use crate::recover::{recover_element, recover_into_v, Pipeline, RecoveryProblem};
use crate::spaces::{Element, NormKind, Space, Subspace, SubspacePreset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum FamilyPreset {
    /// `ε_n = C (n+1)^{−α}`.
    LipAlpha { c: f64, alpha: f64 },
    /// `ε_n = C ρ^{−n}`.
    Bernstein { c: f64, rho: f64 },
    Custom,
}

impl FamilyPreset {
    pub fn epsilons(&self, count: usize) -> Result<Vec<f64>> {
        match *self {
            FamilyPreset::LipAlpha { c, alpha } if c > 0.0 && alpha >= 0.0 => {
                Ok((0..count).map(|n| c * ((n + 1) as f64).powf(-alpha)).collect())
            }
            FamilyPreset::Bernstein { c, rho } if c > 0.0 && rho >= 1.0 => {
                Ok((0..count).map(|n| c * rho.powi(-(n as i32))).collect())
            }
            FamilyPreset::Custom => Err(RecovError::invalid("custom families list their tolerances explicitly")),
            other => Err(RecovError::invalid(format!("bad family parameters {other:?}"))),
        }
    }
}

/// `V_0 ⊂ V_1 ⊂ …` with nonincreasing tolerances `ε_n`.
#[derive(Debug, Clone)]
pub struct NestedFamily {
    spaces: Vec<Arc<Subspace>>,
    epsilons: Vec<f64>,
    preset: FamilyPreset,
}

impl NestedFamily {
    pub fn new(spaces: Vec<Arc<Subspace>>, epsilons: Vec<f64>, preset: FamilyPreset) -> Result<Self> {
        if spaces.is_empty() {
            return Err(RecovError::invalid("a family needs at least one space"));
        }
        crate::error::check_len("family tolerances", spaces.len(), epsilons.len())?;
        if epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(RecovError::invalid("family tolerances must be positive"));
        }
        if epsilons.windows(2).any(|p| p[1] > p[0]) {
            return Err(RecovError::invalid("family tolerances must be nonincreasing"));
        }
        for (k, pair) in spaces.windows(2).enumerate() {
            if !pair[0].is_contained_in(&pair[1]) {
                return Err(RecovError::invalid(format!("space {k} is not contained in space {}", k + 1)));
            }
        }
        Ok(NestedFamily {
            spaces,
            epsilons,
            preset,
        })
    }

    /// Family from subspace presets and a tolerance preset.
    pub fn from_presets(space: Arc<Space>, presets: &[SubspacePreset], preset: FamilyPreset) -> Result<Self> {
        let spaces = presets
            .iter()
            .map(|p| Subspace::preset(p, space.clone()).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let eps = preset.epsilons(spaces.len())?;
        Self::new(spaces, eps, preset)
    }

    /// `TRIG(0) ⊂ … ⊂ TRIG(n_max)`.
    pub fn trig(space: Arc<Space>, n_max: usize, preset: FamilyPreset) -> Result<Self> {
        let presets: Vec<_> = (0..=n_max).map(|n| SubspacePreset::Trig { n }).collect();
        Self::from_presets(space, &presets, preset)
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn space(&self, n: usize) -> &Arc<Subspace> {
        &self.spaces[n]
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        self.epsilons[n]
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn preset(&self) -> FamilyPreset {
        self.preset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub n_star: usize,
    pub score: f64,
    pub mu: f64,
    /// `μ(V_n, N_m) ε_n` per index; `None` when inadmissible.
    pub scores: Vec<Option<f64>>,
}

/// `argmin_n μ(V_n, N_m) ε_n` over `dim V_n ≤ m`, ties to the smaller `n`.
pub fn select_n(family: &NestedFamily, m: &MeasurementOperator) -> Result<Selection> {
    let mus: Vec<Option<f64>> = (0..family.len())
        .into_par_iter()
        .map(|n| {
            let v = family.space(n);
            if v.dim() > m.m() {
                return Ok(None);
            }
            Ok(mu_v_n(m, v)?.upper())
        })
        .collect::<Result<_>>()?;
    let scores: Vec<Option<f64>> = mus
        .iter()
        .enumerate()
        .map(|(n, mu)| mu.map(|mu| mu * family.epsilon(n)))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (n, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            match best {
                Some((_, b)) if s >= b * (1.0 - 1e-12) => {}
                _ => best = Some((n, s)),
            }
        }
    }
    let (n_star, score) =
        best.ok_or_else(|| RecovError::NoAdmissible("every model space meets the null space of the measurements".into()))?;
    Ok(Selection {
        n_star,
        score,
        mu: mus[n_star].expect("admissible"),
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub n_of_m: usize,
    pub mu: f64,
    pub epsilon: f64,
    /// `(1 + λ‖Δ‖)(1 + μ(V,N)) ε_n`, valid when the probe lies in the model class.
    pub bound: f64,
    pub actual_error: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// The last error is the smallest and at most half the first (or negligible).
    pub converging: bool,
}

/// Runs the selection and recovery along a nested schedule of measurements.
pub fn sweep(
    family: &NestedFamily,
    schedule: &[Arc<MeasurementOperator>],
    f_probe: &Element,
) -> Result<SweepReport> {
    for pair in schedule.windows(2) {
        if !pair[1].is_extension_of(&pair[0]) {
            return Err(RecovError::invalid("measurement schedule is not nested"));
        }
    }
    let rows: Vec<SweepRow> = schedule
        .par_iter()
        .map(|m| {
            let sel = select_n(family, m)?;
            let v = family.space(sel.n_star).clone();
            let eps = family.epsilon(sel.n_star);
            let problem = RecoveryProblem::new(m.clone(), v.clone(), Some(eps))?;
            let pipeline = Pipeline::default_for(&problem)?;
            let w = m.apply(f_probe)?;
            let x = recover_element(&problem, &pipeline, w.as_slice())?;
            let actual_error = m.space().norm(&(f_probe - x))?;
            Ok(SweepRow {
                m: m.m(),
                n_of_m: sel.n_star,
                mu: sel.mu,
                epsilon: eps,
                bound: (1.0 + pipeline.lambda_delta()) * (1.0 + sel.mu) * eps,
                actual_error,
                gamma: 1.0 / sel.mu,
            })
        })
        .collect::<Result<_>>()?;
    let converging = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => {
            let min = rows.iter().map(|r| r.actual_error).fold(f64::INFINITY, f64::min);
            b.actual_error <= 1e-10 || (b.actual_error <= min * (1.0 + 1e-9) && b.actual_error <= 0.5 * a.actual_error)
        }
        _ => false,
    };
    Ok(SweepReport { rows, converging })
}

/// Point evaluations at `m0, 2m0, 4m0, …` equispaced grid nodes (nested).
pub fn doubling_point_schedule(space: Arc<Space>, m0: usize, steps: usize) -> Result<Vec<Arc<MeasurementOperator>>> {
    let n = space.dim();
    let mut out = Vec::with_capacity(steps);
    let mut prev: Vec<usize> = Vec::new();
    for s in 0..steps {
        let m = m0 << s;
        if m > n || n % m != 0 {
            return Err(RecovError::invalid(format!("{m} equispaced nodes do not nest in a grid of {n}")));
        }
        let stride = n / m;
        // keep earlier rows first so each operator extends the previous one
        let mut idx = prev.clone();
        idx.extend((0..m).map(|k| k * stride).filter(|i| !prev.contains(i)));
        out.push(Arc::new(MeasurementOperator::point_eval(space.clone(), idx.clone())?));
        prev = idx;
    }
    Ok(out)
}

/// Fourier coefficients up to frequency `k` for each `k` listed (`m = 2k + 1`).
pub fn fourier_schedule(space: Arc<Space>, ks: &[usize]) -> Result<Vec<Arc<MeasurementOperator>>> {
    ks.iter()
        .map(|&k| MeasurementOperator::fourier(space.clone(), 2 * k + 1).map(Arc::new))
        .collect()
}

/// `inf_{v ∈ V, ‖v‖=1} sup_{l ∈ span{l_j}, ‖l‖ ≤ 1} |l(v)|`.
///
/// The inner sup is the quotient norm `‖M v‖_M`, so the value is `1/μ(V, N)`.
pub fn gamma_norming(m: &MeasurementOperator, v: &Subspace) -> Result<f64> {
    match m.space().kind() {
        NormKind::Sup | NormKind::Hilbert => {}
        NormKind::Lp(p) if p == 2.0 => {}
        other => {
            return Err(RecovError::Precondition(format!(
                "norming constants are computed in sup-norm and Hilbert ambients, not {other:?}"
            )))
        }
    }
    Ok(match mu_v_n(m, v)? {
        Mu::Infinite { .. } => 0.0,
        mu => 1.0 / mu.upper().expect("finite"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEstimate {
    pub label: String,
    /// Largest central-difference ratio observed.
    pub estimate: f64,
    /// `‖M_V^{-1}‖ Lip(Λ)` when `Λ` has a known Lipschitz constant.
    pub structural_bound: Option<f64>,
    /// `‖M_V^{-1}‖ (1 + √n)`, the size of a projection-based bound.
    pub sqrt_n_reference: f64,
    pub step: f64,
}

pub const CONDITION_STEP: f64 = 1e-6;

/// Randomised finite-difference estimate of the condition number of `f ↦ R(M f)`.
///
/// `R` is the model-space recovery, or the full recovery when `with_lifting`.
pub fn condition_estimate(
    problem: &RecoveryProblem,
    pipeline: &Pipeline,
    with_lifting: bool,
    samples: usize,
    seed: u64,
) -> Result<ConditionEstimate> {
    let space = problem.space();
    let m = problem.measurement();
    let n = space.dim();
    let h = CONDITION_STEP;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Result<Element> {
        let g = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = space.norm(&g)?;
        Ok(g / norm)
    };
    let apply = |f: &Element| -> Result<Element> {
        let w = m.apply(f)?;
        if with_lifting {
            recover_element(problem, pipeline, w.as_slice())
        } else {
            Ok(DVector::from_vec(recover_into_v(problem, pipeline, w.as_slice())?.reconstruction))
        }
    };
    let mut estimate: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let f = draw()?;
        for _ in 0..samples.max(1) {
            let g = draw()?;
            let plus = apply(&(&f + &g * h))?;
            let minus = apply(&(&f - &g * h))?;
            estimate = estimate.max(space.norm(&(plus - minus))? / (2.0 * h));
        }
    }
    let mu = problem.angles()?.mu_v_n.upper().unwrap_or(f64::INFINITY);
    let structural_bound = match pipeline.approx.method() {
        ApproxMethod::LeastSquares if !with_lifting => Some(mu),
        _ => None,
    };
    Ok(ConditionEstimate {
        label: "estimate".into(),
        estimate,
        structural_bound,
        sqrt_n_reference: mu * (1.0 + (problem.subspace().dim() as f64).sqrt()),
        step: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Row {
    pub m: usize,
    /// `dist(e_1, N_m)` in `ℓ_1`.
    pub dist: f64,
    /// `μ(span{e_1}, N_m)`.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Demo {
    pub a: f64,
    pub truncation: usize,
    pub rows: Vec<L1Row>,
    pub warnings: Vec<String>,
}

/// Functionals `l_1 = e_1* − a Σ_{j≥2} e_j*`, `l_k = e_k*` on truncated `ℓ_1`.
/// They separate points, yet `dist(e_1, N_m) = 1/a` for every `m`.
pub fn l1_totality_functionals(a: f64, m: usize, n_trunc: usize) -> Result<DMatrix<f64>> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(RecovError::invalid(format!("the weight must exceed 1, got {a}")));
    }
    if m == 0 || m > n_trunc {
        return Err(RecovError::invalid(format!("need 1 ≤ m ≤ {n_trunc}, got {m}")));
    }
    let mut g = DMatrix::zeros(m, n_trunc);
    g[(0, 0)] = 1.0;
    for j in 1..n_trunc {
        g[(0, j)] = -a;
    }
    for k in 1..m {
        g[(k, k)] = 1.0;
    }
    Ok(g)
}

pub fn l1_totality_demo(a: f64, m_max: usize, n_trunc: usize) -> Result<L1Demo> {
    let space = Arc::new(Space::sequence(n_trunc, NormKind::Lp(1.0))?);
    let mut warnings = Vec::new();
    if n_trunc < m_max + 3 {
        warnings.push(format!(
            "truncation {n_trunc} leaves fewer than three free tail coordinates at m = {m_max}; \
             values at the largest m may be the untruncated limit 1/a only if a tail coordinate remains"
        ));
    }
    let e1 = space.unit_vector(0);
    let rows = (1..=m_max)
        .map(|m| {
            let g = l1_totality_functionals(a, m, n_trunc)?;
            let op = MeasurementOperator::from_pairing(space.clone(), g, MeasurementKind::General)?;
            // dist(x, N) is the quotient norm of M x
            let dist = op.m_norm(op.apply(&e1)?.as_slice())?;
            Ok(L1Row { m, dist, mu: 1.0 / dist })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(L1Demo {
        a,
        truncation: n_trunc,
        rows,
        warnings,
    })
}

/// Checks that the columns of `a` lie in the span of `b` (least-squares residual).
pub fn span_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qr = PivotedQr::new(b);
    let q = qr.q_columns(0..qr.rank());
    let r = a - &q * (q.transpose() * a);
    r.amax() / a.amax().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::equispaced_points;
    use crate::solvers::{solve_lp, LinearProgram, LpStatus, Relation};
    use crate::spaces::{circle_grid, dist_to_subspace, Quadrature};
    use rand::Rng;
    use std::f64::consts::PI;

    fn trig_space(n: usize, kind: NormKind) -> Arc<Space> {
        Arc::new(circle_grid(n, kind).unwrap())
    }

    #[test]
    fn presets_and_validation() {
        let e = FamilyPreset::LipAlpha { c: 2.0, alpha: 1.0 }.epsilons(3).unwrap();
        assert_eq!(e, vec![2.0, 1.0, 2.0 / 3.0]);
        let e = FamilyPreset::Bernstein { c: 1.0, rho: 2.0 }.epsilons(3).unwrap();
        assert_eq!(e, vec![1.0, 0.5, 0.25]);
        let s = trig_space(64, NormKind::Sup);
        let v0 = Arc::new(Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap());
        let v1 = Arc::new(Subspace::preset(&SubspacePreset::Trig { n: 0 }, s).unwrap());
        assert!(NestedFamily::new(vec![v0.clone(), v1.clone()], vec![1.0, 0.5], FamilyPreset::Custom).is_err());
        assert!(NestedFamily::new(vec![v1.clone(), v0.clone()], vec![0.5, 1.0], FamilyPreset::Custom).is_err());
        assert!(NestedFamily::new(vec![v1, v0], vec![1.0, 0.5], FamilyPreset::Custom).is_ok());
    }

    #[test]
    fn selection_rules() {
        // coordinate spaces measured by their own coordinates: μ = 1 throughout
        let s = Arc::new(Space::sequence(6, NormKind::Sup).unwrap());
        let presets: Vec<_> = (1..=4).map(|k| SubspacePreset::Coordinate { indices: (0..k).collect() }).collect();
        let m = MeasurementOperator::point_eval(s.clone(), vec![0, 1, 2, 3, 4]).unwrap();
        let fam = NestedFamily::from_presets(s.clone(), &presets, FamilyPreset::Bernstein { c: 1.0, rho: 2.0 }).unwrap();
        assert_eq!(select_n(&fam, &m).unwrap().n_star, 3);
        let spaces = presets.iter().map(|p| Arc::new(Subspace::preset(p, s.clone()).unwrap())).collect();
        let flat = NestedFamily::new(spaces, vec![0.5; 4], FamilyPreset::Custom).unwrap();
        assert_eq!(select_n(&flat, &m).unwrap().n_star, 0);
        // measurements that see none of the model spaces
        let blind = MeasurementOperator::point_eval(s, vec![5]).unwrap();
        assert!(matches!(select_n(&fam, &blind), Err(RecovError::NoAdmissible(_))));
    }

    #[test]
    fn trig_selection_matches_direct_table() {
        let s = trig_space(240, NormKind::Sup);
        let fam = NestedFamily::trig(s.clone(), 3, FamilyPreset::LipAlpha { c: 1.0, alpha: 2.0 }).unwrap();
        let m = MeasurementOperator::point_eval_at(s.clone(), &equispaced_points(-PI, PI, 12)).unwrap();
        let sel = select_n(&fam, &m).unwrap();
        for n in 0..=3 {
            let v = Subspace::preset(&SubspacePreset::Trig { n }, s.clone()).unwrap();
            let direct = mu_v_n(&m, &v).unwrap().upper().unwrap() * fam.epsilon(n);
            assert!((sel.scores[n].unwrap() - direct).abs() <= 1e-12 * direct);
        }
        let best = sel.scores.iter().map(|s| s.unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(sel.score, best);
    }

    #[test]
    fn model_probe_is_recovered_along_the_sweep() {
        let s = trig_space(256, NormKind::Sup);
        let fam = NestedFamily::trig(s.clone(), 3, FamilyPreset::Bernstein { c: 1.0, rho: 2.0 }).unwrap();
        let sched = doubling_point_schedule(s.clone(), 8, 3).unwrap();
        let probe = s.element_from_fn(|_| 0.75);
        let rep = sweep(&fam, &sched, &probe).unwrap();
        assert!(rep.rows.iter().all(|r| r.actual_error <= 1e-8), "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.actual_error <= r.bound));
    }

    fn bessel_i(k: usize, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
        let mut sum = term;
        for j in 1..60 {
            term *= (0.25 * x * x) / (j as f64 * (j + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn fourier_sweep_matches_the_spectral_tail() {
        let s = trig_space(512, NormKind::Hilbert);
        let fam = NestedFamily::trig(s.clone(), 32, FamilyPreset::Bernstein { c: 10.0, rho: 2.0 }).unwrap();
        let ks = [1usize, 2, 4, 8, 16, 32];
        let sched = fourier_schedule(s.clone(), &ks).unwrap();
        let probe = s.element_from_fn(|t| t.cos().exp());
        let rep = sweep(&fam, &sched, &probe).unwrap();
        for (row, &k) in rep.rows.iter().zip(&ks) {
            // exp(cos t) = I_0(1) + 2 Σ I_j(1) cos jt, and ‖cos jt‖² = π
            let tail: f64 = (k + 1..60).map(|j| 4.0 * PI * bessel_i(j, 1.0).powi(2)).sum::<f64>().sqrt();
            assert!((row.actual_error - tail).abs() <= 1e-9 + 1e-6 * tail, "k={k}: {} vs {tail}", row.actual_error);
            assert!(row.actual_error <= row.bound);
        }
        assert!(rep.rows.windows(2).all(|p| p[1].actual_error <= p[0].actual_error + 1e-15));
        assert!(rep.rows.last().unwrap().actual_error < 1e-3);
        assert!(rep.converging);
    }

    #[test]
    fn dense_points_shrink_the_angle_and_bound_it_by_norming() {
        let s = trig_space(512, NormKind::Sup);
        let v = Subspace::preset(&SubspacePreset::Trig { n: 2 }, s.clone()).unwrap();
        let sched = doubling_point_schedule(s, 8, 5).unwrap();
        let mut prev = f64::INFINITY;
        let mut prev_gamma = 0.0;
        for m in &sched {
            let mu = mu_v_n(m, &v).unwrap().upper().unwrap();
            assert!(mu <= prev + 1e-9);
            let gamma = gamma_norming(m, &v).unwrap();
            assert!(gamma + 1e-9 >= prev_gamma);
            assert!(mu <= (1.0 + 1e-6) / gamma);
            prev = mu;
            prev_gamma = gamma;
        }
        assert!(prev_gamma > 0.95);
    }

    #[test]
    fn norming_constant_agrees_with_sampled_minimum() {
        // γ(v) = max_j |v(x_j)| / ‖v‖_∞ minimised over sampled directions of TRIG(1)
        let s = trig_space(240, NormKind::Sup);
        let v = Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap();
        let m = MeasurementOperator::point_eval_at(s.clone(), &equispaced_points(-PI, PI, 6)).unwrap();
        let gamma = gamma_norming(&m, &v).unwrap();
        assert!(gamma >= 0.5);
        let b = m.restricted(&v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut sampled = f64::INFINITY;
        for _ in 0..20_000 {
            let c = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let val = (&b * &c).amax() / v.element(&c).amax();
            sampled = sampled.min(val);
        }
        assert!(sampled >= gamma - 1e-9);
        assert!(sampled <= gamma * 1.05, "{sampled} vs {gamma}");
        // the spanned functional ball attains the same value through an explicit dual LP
        let c = DVector::from_column_slice(&[1.0, 0.3, -0.2]);
        let z = &b * &c;
        let mut lp = LinearProgram::maximize(vec![0.0; 12]);
        for j in 0..6 {
            lp.objective[j] = z[j];
            lp.objective[6 + j] = -z[j];
        }
        lp.add_constraint(vec![1.0; 12], Relation::Le, 1.0);
        let rep = solve_lp(&lp).unwrap();
        assert_eq!(rep.status, LpStatus::Optimal);
        assert!((rep.objective_value - z.amax()).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_one_for_an_own_coordinate() {
        let s = Arc::new(Space::sequence(3, NormKind::Sup).unwrap());
        let v = Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0] }, s.clone()).unwrap();
        let m = MeasurementOperator::point_eval(s, vec![0, 2]).unwrap();
        assert_eq!(gamma_norming(&m, &v).unwrap(), 1.0);
    }

    #[test]
    fn hilbert_condition_estimate_is_bounded_by_the_inverse_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = Arc::new(Space::grid(0.0, 1.0, 30, Quadrature::Midpoint, NormKind::Hilbert).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Poly { n: 3 }, s.clone()).unwrap());
        let idx: Vec<usize> = (0..30).filter(|_| rng.gen_bool(0.4)).collect();
        let m = Arc::new(MeasurementOperator::point_eval(s, idx).unwrap());
        let p = RecoveryProblem::new(m, v, None).unwrap();
        let pipe = Pipeline::default_for(&p).unwrap();
        let est = condition_estimate(&p, &pipe, false, 4, 1).unwrap();
        let bound = est.structural_bound.unwrap();
        assert!(est.estimate <= bound * (1.0 + 1e-3), "{} vs {bound}", est.estimate);
        assert_eq!(est.label, "estimate");
    }

    #[test]
    fn linear_pipeline_ratios_do_not_depend_on_the_step() {
        let s = Arc::new(Space::sequence(8, NormKind::Hilbert).unwrap());
        let v = Arc::new(Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0, 1] }, s.clone()).unwrap());
        let m = Arc::new(MeasurementOperator::point_eval(s.clone(), vec![0, 1, 4]).unwrap());
        let p = RecoveryProblem::new(m.clone(), v.clone(), None).unwrap();
        let pipe = Pipeline::default_for(&p).unwrap();
        let f = v.element(&DVector::from_column_slice(&[1.0, -2.0]));
        let g = s.unit_vector(4) + s.unit_vector(0);
        let ratio = |h: f64| {
            let a = recover_element(&p, &pipe, m.apply(&(&f + &g * h)).unwrap().as_slice()).unwrap();
            let b = recover_element(&p, &pipe, m.apply(&f).unwrap().as_slice()).unwrap();
            s.norm(&(a - b)).unwrap() / h
        };
        assert!((ratio(1e-3) - ratio(1e-6)).abs() <= 1e-6 * ratio(1e-3));
    }

    #[test]
    fn sup_condition_estimate_is_finite_and_moderate() {
        let s = trig_space(240, NormKind::Sup);
        let v = Arc::new(Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap());
        let m = Arc::new(MeasurementOperator::point_eval_at(s, &equispaced_points(-PI, PI, 6)).unwrap());
        let p = RecoveryProblem::new(m, v, None).unwrap();
        let pipe = Pipeline::default_for(&p).unwrap();
        let est = condition_estimate(&p, &pipe, false, 3, 2).unwrap();
        assert!(est.estimate.is_finite());
        assert!(est.estimate <= est.sqrt_n_reference, "{est:?}");
    }

    #[test]
    fn l1_functionals_are_total_but_not_norming() {
        let demo = l1_totality_demo(2.0, 5, 64).unwrap();
        assert!(demo.warnings.is_empty());
        for row in &demo.rows {
            assert!((row.dist - 0.5).abs() <= 1e-6, "{row:?}");
            assert!(row.mu >= 2.0 - 1e-6);
        }
        let near_one = l1_totality_demo(1.0 + 1e-6, 2, 16).unwrap();
        assert!((near_one.rows[1].dist - 1.0).abs() < 1e-5);
        // the null space of all functionals on the truncation is trivial
        let g = l1_totality_functionals(2.0, 8, 8).unwrap();
        assert_eq!(PivotedQr::new(&g).rank(), 8);
    }

    #[test]
    fn weight_on_the_first_coordinate_gives_no_gap() {
        // with l_1 = a e_1* − Σ e_j* instead, dist(e_1, N_m) = 1
        let s = Arc::new(Space::sequence(16, NormKind::Lp(1.0)).unwrap());
        let mut g = DMatrix::zeros(3, 16);
        g[(0, 0)] = 2.0;
        for j in 1..16 {
            g[(0, j)] = -1.0;
        }
        g[(1, 1)] = 1.0;
        g[(2, 2)] = 1.0;
        let op = MeasurementOperator::from_pairing(s.clone(), g, MeasurementKind::General).unwrap();
        let e1 = s.unit_vector(0);
        assert!((op.m_norm(op.apply(&e1).unwrap().as_slice()).unwrap() - 1.0).abs() < 1e-12);
        let _ = dist_to_subspace;
    }

    #[test]
    fn span_residual_detects_nesting() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(span_residual(&a, &b) < 1e-12);
        let c = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        assert!(span_residual(&c, &b) > 0.5);
    }
}
