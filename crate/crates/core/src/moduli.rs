//! Moduli of convexity and smoothness, the relative data error `γ` of a
//! consistent set, and the diameter bounds they imply.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::ApproxMap;
use crate::chebgeo::{build_kw, Kw, Representation};
use crate::error::{RecovError, Result};
use crate::recover::RecoveryProblem;
use crate::spaces::NormKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    HilbertExact,
    /// Leading term as the argument tends to zero, `1 < p < ∞`.
    LpAsymptotic { p: f64 },
}

impl ModulusKind {
    pub fn for_norm(kind: NormKind) -> Result<Self> {
        match kind {
            NormKind::Hilbert => Ok(ModulusKind::HilbertExact),
            NormKind::Lp(p) if p == 2.0 => Ok(ModulusKind::HilbertExact),
            NormKind::Lp(p) if p > 1.0 && p.is_finite() => Ok(ModulusKind::LpAsymptotic { p }),
            other => Err(RecovError::Precondition(format!(
                "{other:?} is not uniformly convex; best approximations need not be unique"
            ))),
        }
    }

    pub fn is_asymptotic(&self) -> bool {
        matches!(self, ModulusKind::LpAsymptotic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// Modulus of convexity `δ(ε)`, `ε ∈ [0, 2]`.
    Delta,
    /// Modulus of smoothness `ρ(τ)`, `τ ≥ 0`.
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusValue {
    pub value: f64,
    pub asymptotic: bool,
}

fn check_arg(which: Which, t: f64) -> Result<()> {
    let ok = match which {
        Which::Delta => (0.0..=2.0).contains(&t),
        Which::Rho => t >= 0.0 && t.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(RecovError::invalid(format!("{t} is outside the domain of {which:?}")))
    }
}

fn raw(kind: ModulusKind, which: Which, t: f64) -> f64 {
    match (kind, which) {
        (ModulusKind::HilbertExact, Which::Delta) => 1.0 - (1.0 - 0.25 * t * t).max(0.0).sqrt(),
        (ModulusKind::HilbertExact, Which::Rho) => (1.0 + t * t).sqrt() - 1.0,
        (ModulusKind::LpAsymptotic { p }, Which::Delta) => {
            let v = if p <= 2.0 {
                (p - 1.0) * t * t / 8.0
            } else {
                (0.5 * t).powf(p) / p
            };
            v.min(1.0)
        }
        (ModulusKind::LpAsymptotic { p }, Which::Rho) => {
            if p <= 2.0 {
                t.powf(p) / p
            } else {
                (p - 1.0) * t * t / 2.0
            }
        }
    }
}

pub fn modulus(kind: ModulusKind, which: Which, t: f64) -> Result<ModulusValue> {
    check_arg(which, t)?;
    Ok(ModulusValue {
        value: raw(kind, which, t),
        asymptotic: kind.is_asymptotic(),
    })
}

/// Smallest argument with `f(t) ≥ y`, by bisection.
pub fn inverse(kind: ModulusKind, which: Which, y: f64) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(RecovError::invalid(format!("cannot invert at {y}")));
    }
    let f = |t: f64| raw(kind, which, t);
    let mut hi = match which {
        Which::Delta => {
            if y > f(2.0) {
                return Err(RecovError::invalid(format!("{y} exceeds the range of the modulus of convexity")));
            }
            2.0
        }
        Which::Rho => {
            let mut hi = 1.0;
            while f(hi) < y {
                hi *= 2.0;
            }
            hi
        }
    };
    let mut lo = 0.0;
    if y == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaReport {
    /// `E(w)/ε`.
    pub gamma: f64,
    /// `γ > 1`: the data are inconsistent with the model class.
    pub out_of_class: bool,
}

pub fn gamma_of_kw(problem: &RecoveryProblem, w: &[f64]) -> Result<GammaReport> {
    let eps = problem
        .epsilon()
        .filter(|e| *e > 0.0)
        .ok_or_else(|| RecovError::Precondition("the relative data error needs a positive tolerance".into()))?;
    let map = ApproxMap::exact(problem.measurement().clone(), problem.subspace().clone())?;
    let gamma = map.approx_error(w)? / eps;
    Ok(GammaReport {
        gamma,
        out_of_class: gamma > 1.0 + 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterOracle {
    pub value: f64,
    /// `false` when `value` is only a lower bound.
    pub exact: bool,
    pub certificate: Option<(Vec<f64>, Vec<f64>)>,
}

pub const SANDWICH_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichRow {
    pub gamma: f64,
    pub mu: f64,
    pub lower: f64,
    pub oracle: f64,
    pub upper: f64,
    /// `lower ≤ oracle ≤ upper` up to the slack.
    pub bracketed: bool,
    /// `bracketed` for exact oracles; `oracle ≤ upper` and `lower ≤ upper` otherwise.
    pub pass: bool,
    pub regime: String,
}

/// `lower = 2εμγρ⁻¹((1−γ)/(2γ))` (`εμ` at `γ = 0`) and `upper = εμδ⁻¹(1−γ)`,
/// with `μ = μ(N, V)`.
pub fn sandwich_bounds(kind: ModulusKind, eps: f64, mu_lower: f64, mu_upper: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(RecovError::invalid(format!("relative data error {gamma} is outside [0, 1]")));
    }
    let lower = if gamma <= 1e-12 {
        eps * (1.0 - gamma) * mu_lower
    } else {
        2.0 * eps * mu_lower * gamma * inverse(kind, Which::Rho, (1.0 - gamma) / (2.0 * gamma))?
    };
    // an asymptotic leading term may stay below 1 − γ; δ⁻¹ ≤ 2 always holds
    let t = if 1.0 - gamma > raw(kind, Which::Delta, 2.0) {
        2.0
    } else {
        inverse(kind, Which::Delta, 1.0 - gamma)?
    };
    let upper = eps * mu_upper * t;
    Ok((lower, upper))
}

pub fn diameter_sandwich_check(problem: &RecoveryProblem, w: &[f64], oracle: &DiameterOracle) -> Result<SandwichRow> {
    let kind = ModulusKind::for_norm(problem.space().kind())?;
    let eps = problem.epsilon().unwrap_or(0.0);
    let g = gamma_of_kw(problem, w)?;
    if g.out_of_class {
        return Err(RecovError::Precondition(format!(
            "the consistent set is empty (relative data error {})",
            g.gamma
        )));
    }
    let gamma = g.gamma.min(1.0);
    let mu = &problem.angles()?.mu_n_v;
    let (mu_lo, mu_hi) = match (mu.lower(), mu.upper()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(RecovError::Precondition("the null space meets the model space".into())),
    };
    let (lower, upper) = sandwich_bounds(kind, eps, mu_lo, mu_hi, gamma)?;
    let s = SANDWICH_SLACK * (1.0 + upper);
    let bracketed = lower - s <= oracle.value && oracle.value <= upper + s;
    let pass = if oracle.exact {
        bracketed
    } else {
        oracle.value <= upper + s && lower <= upper + s
    };
    Ok(SandwichRow {
        gamma,
        mu: mu_hi,
        lower,
        oracle: oracle.value,
        upper,
        bracketed,
        pass,
        regime: if kind.is_asymptotic() { "asymptotic regime" } else { "exact" }.into(),
    })
}

/// Random-restart projected gradient ascent on `‖x − y‖²` over `K_w × K_w`
/// in a Hilbert ambient. Returns the best pair found.
pub fn diameter_ascent(problem: &RecoveryProblem, w: &[f64], restarts: usize, seed: u64) -> Result<DiameterOracle> {
    let space = problem.space();
    if !space.kind().is_hilbert() {
        return Err(RecovError::Precondition("the ascent oracle works in Hilbert ambients".into()));
    }
    let eps = problem.epsilon().unwrap_or(0.0);
    let set = match build_kw(problem.measurement(), problem.subspace(), eps, w)? {
        Kw::Set(s) => s,
        Kw::Empty => return Err(RecovError::Precondition("the consistent set is empty".into())),
        Kw::Unbounded { .. } => return Err(RecovError::Precondition("the consistent set is unbounded".into())),
    };
    let ell = match set.representation() {
        Representation::Ellipsoid(e) => e.clone(),
        _ => unreachable!("Hilbert consistent sets are ellipsoids"),
    };
    let d = ell.axes.ncols();
    if d == 0 {
        let c = ell.center.as_slice().to_vec();
        return Ok(DiameterOracle {
            value: 0.0,
            exact: false,
            certificate: Some((c.clone(), c)),
        });
    }
    // x = c + A u with ‖u‖₂ ≤ 1; the objective is (u − v)ᵀ G (u − v)
    let wts = DVector::from_column_slice(space.weights());
    let wa = DMatrix::from_fn(ell.axes.nrows(), d, |i, k| ell.axes[(i, k)] * wts[i]);
    let gram = ell.axes.transpose() * wa;
    let step = 0.5 / gram.norm().max(f64::MIN_POSITIVE);
    let project = |u: DVector<f64>| {
        let n = u.norm();
        if n > 1.0 {
            u / n
        } else {
            u
        }
    };
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut u = project(DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)));
            let mut v = project(DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)));
            let mut val = (&u - &v).dot(&(&gram * (&u - &v)));
            for _ in 0..500 {
                let g = &gram * (&u - &v) * 2.0;
                let nu = project(&u + &g * step);
                let nv = project(&v - &g * step);
                let nval = (&nu - &nv).dot(&(&gram * (&nu - &nv)));
                let done = nval <= val * (1.0 + 1e-15);
                u = nu;
                v = nv;
                val = nval.max(val);
                if done {
                    break;
                }
            }
            (r, u, v)
        })
        .map(|(r, u, v)| {
            let x = &ell.center + &ell.axes * &u;
            let y = &ell.center + &ell.axes * &v;
            let dist = space.norm(&(&x - &y)).unwrap_or(0.0);
            (dist, r, x, y)
        })
        // ties resolved by restart index so the reduction is order-independent
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("at least one restart");
    Ok(DiameterOracle {
        value: best.0,
        exact: false,
        certificate: Some((best.2.as_slice().to_vec(), best.3.as_slice().to_vec())),
    })
}

/// Worst slack of `2ε[1 − δ(‖x−y‖/ε)] − ‖x+y‖` over random `‖x‖, ‖y‖ ≤ ε` in `R^dim`.
pub fn midpoint_check(dim: usize, eps: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = ball_point(&mut rng, dim, eps);
        let y = ball_point(&mut rng, dim, eps);
        let t = ((&x - &y).norm() / eps).min(2.0);
        let rhs = 2.0 * eps * (1.0 - raw(ModulusKind::HilbertExact, Which::Delta, t));
        worst = worst.min(rhs - (&x + &y).norm());
    }
    worst
}

/// Worst slack of `‖u₀ − u₁‖ − 2γερ⁻¹((1−γ)/(2γ))` over random `u₀, u₁` on the
/// `ε`-sphere, where `γε` is the smallest norm on the segment between them.
pub fn segment_check(dim: usize, eps: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let mut sphere = || {
            let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            &g * (eps / g.norm())
        };
        let u0 = sphere();
        let u1 = sphere();
        let d = &u1 - &u0;
        let t = if d.norm_squared() > 0.0 {
            (-u0.dot(&d) / d.norm_squared()).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let gamma = ((&u0 + &d * t).norm() / eps).min(1.0);
        if gamma <= 1e-12 {
            continue;
        }
        let rhs = 2.0 * gamma * eps * inverse(ModulusKind::HilbertExact, Which::Rho, (1.0 - gamma) / (2.0 * gamma))?;
        worst = worst.min(d.norm() - rhs);
    }
    Ok(worst)
}

fn ball_point(rng: &mut ChaCha8Rng, dim: usize, eps: f64) -> DVector<f64> {
    let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let r = eps * rng.gen::<f64>().powf(1.0 / dim as f64);
    &g * (r / g.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::measure::{MeasurementKind, MeasurementOperator};
    use crate::spaces::{Space, Subspace};
    use proptest::prelude::*;
    use std::sync::Arc;

    const H: ModulusKind = ModulusKind::HilbertExact;

    #[test]
    fn closed_form_values() {
        assert_eq!(modulus(H, Which::Delta, 2.0).unwrap().value, 1.0);
        assert_eq!(modulus(H, Which::Rho, 0.0).unwrap().value, 0.0);
        assert!(modulus(H, Which::Delta, 2.5).is_err());
        assert!(modulus(H, Which::Rho, -1.0).is_err());
        let lp = modulus(ModulusKind::LpAsymptotic { p: 1.5 }, Which::Delta, 0.1).unwrap();
        assert!(lp.asymptotic);
        assert!((lp.value - 0.5 * 0.01 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn convexity_modulus_at_one_by_brute_force() {
        // inf { 1 − ‖(x+y)/2‖ : ‖x‖, ‖y‖ ≤ 1, ‖x − y‖ ≥ 1 } over a polar grid in R²
        let closed = modulus(H, Which::Delta, 1.0).unwrap().value;
        assert!((closed - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-15);
        let pts: Vec<(f64, f64)> = (0..=20)
            .flat_map(|r| (0..36_000).map(move |a| (0.9 + r as f64 / 200.0, a as f64 * std::f64::consts::PI / 18_000.0)))
            .map(|(r, a)| (r * a.cos(), r * a.sin()))
            .collect();
        let x = (1.0, 0.0);
        let mut best = f64::INFINITY;
        for y in &pts {
            if ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt() >= 1.0 {
                best = best.min(1.0 - 0.5 * ((x.0 + y.0).powi(2) + (x.1 + y.1).powi(2)).sqrt());
            }
        }
        assert!(best >= closed - 1e-12 && best <= closed + 1e-4, "{best} vs {closed}");
    }

    #[test]
    fn hilbert_sandwich_endpoints_in_closed_form() {
        for k in 0..10 {
            let g = k as f64 / 10.0;
            let (lo, hi) = sandwich_bounds(H, 1.0, 1.0, 1.0, g).unwrap();
            assert!((hi - 2.0 * (1.0 - g * g).sqrt()).abs() < 1e-9);
            let expect_lo = if k == 0 { 1.0 } else { ((1.0 - g) * (1.0 + 3.0 * g)).sqrt() };
            assert!((lo - expect_lo).abs() < 1e-9, "γ={g}: {lo} vs {expect_lo}");
            assert!(lo + 1e-12 >= (1.0 - g * g).sqrt());
        }
        let (lo, hi) = sandwich_bounds(H, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
    }

    fn hilbert_problem(seed: u64, eps: f64) -> (RecoveryProblem, DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Arc::new(Space::sequence(5, NormKind::Hilbert).unwrap());
        let g = DMatrix::from_fn(2, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(5, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = Arc::new(MeasurementOperator::from_pairing(s.clone(), g.clone(), MeasurementKind::General).unwrap());
        let v = Arc::new(Subspace::new(s, b.clone()).unwrap());
        (RecoveryProblem::new(m, v, Some(eps)).unwrap(), g, b)
    }

    #[test]
    fn gamma_matches_orthogonal_decomposition() {
        let (p, g, b) = hilbert_problem(3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = &g * &f;
        // dist(f, V ⊕ N) = min_c ‖P(f − b c)‖ with P the projector onto the row space of G
        let proj = g.transpose() * (&g * g.transpose()).try_inverse().unwrap() * &g;
        let (pf, pb) = (&proj * &f, &proj * &b);
        let c = pb.column(0).dot(&pf) / pb.column(0).norm_squared();
        let resid = &pf - &pb * c;
        let rep = gamma_of_kw(&p, w.as_slice()).unwrap();
        assert!((rep.gamma - resid.norm()).abs() < 1e-9, "{} vs {}", rep.gamma, resid.norm());
        let v = p.subspace().element(&DVector::from_element(1, 0.7));
        assert!(gamma_of_kw(&p, (&g * v).as_slice()).unwrap().gamma < 1e-12);
        // rescaling the tolerance to E(w) puts the data on the boundary
        let p1 = RecoveryProblem::new(p.measurement().clone(), p.subspace().clone(), Some(rep.gamma)).unwrap();
        assert!((gamma_of_kw(&p1, w.as_slice()).unwrap().gamma - 1.0).abs() < 1e-12);
        let p2 = RecoveryProblem::new(p.measurement().clone(), p.subspace().clone(), Some(0.5 * rep.gamma)).unwrap();
        assert!(gamma_of_kw(&p2, w.as_slice()).unwrap().out_of_class);
    }

    #[test]
    fn ascent_oracle_brackets_and_matches_the_ellipsoid() {
        for seed in 0..5 {
            let (p, g, _) = hilbert_problem(10 + seed, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = DVector::from_fn(5, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
            let w = &g * &f;
            if gamma_of_kw(&p, w.as_slice()).unwrap().out_of_class {
                continue;
            }
            let oracle = diameter_ascent(&p, w.as_slice(), 256, 7).unwrap();
            let row = diameter_sandwich_check(&p, w.as_slice(), &oracle).unwrap();
            assert!(row.pass && row.bracketed, "{row:?}");
            let exact = match build_kw(p.measurement(), p.subspace(), 1.0, w.as_slice()).unwrap() {
                Kw::Set(s) => s.diameter().unwrap().value,
                _ => unreachable!(),
            };
            assert!((oracle.value - exact).abs() <= 1e-9 * (1.0 + exact));
            let (x, y) = oracle.certificate.unwrap();
            let dx = DVector::from_vec(x) - DVector::from_vec(y);
            assert!((dx.norm() - oracle.value).abs() < 1e-12);
        }
    }

    #[test]
    fn model_data_reach_the_extreme_cases() {
        let (p, g, _) = hilbert_problem(31, 1.0);
        let v = p.subspace().element(&DVector::from_element(1, 1.3));
        let w = &g * v;
        let oracle = diameter_ascent(&p, w.as_slice(), 64, 1).unwrap();
        let row = diameter_sandwich_check(&p, w.as_slice(), &oracle).unwrap();
        let mu = row.mu;
        assert!(row.gamma < 1e-12);
        assert!((row.lower - mu).abs() < 1e-9 && (row.upper - 2.0 * mu).abs() < 1e-9);
        // the consistent set is centred at v with radius εμ(N, V)
        assert!((oracle.value - 2.0 * mu).abs() < 1e-6 * mu);
        // data exactly at the tolerance leave a single point
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = &g * &f;
        let e = gamma_of_kw(&p, w.as_slice()).unwrap().gamma;
        let thin = RecoveryProblem::new(p.measurement().clone(), p.subspace().clone(), Some(e)).unwrap();
        let oracle = diameter_ascent(&thin, w.as_slice(), 16, 1).unwrap();
        let row = diameter_sandwich_check(&thin, w.as_slice(), &oracle).unwrap();
        assert!(row.upper <= 1e-5 && oracle.value <= 1e-6 && row.pass, "{row:?}");
    }

    #[test]
    fn non_strictly_convex_ambients_are_rejected() {
        assert!(ModulusKind::for_norm(NormKind::Sup).is_err());
        assert!(ModulusKind::for_norm(NormKind::Lp(1.0)).is_err());
        assert!(ModulusKind::for_norm(NormKind::Lp(3.0)).unwrap().is_asymptotic());
    }

    #[test]
    fn lp_rows_are_labelled_asymptotic() {
        let s = Arc::new(Space::sequence(4, NormKind::Lp(3.0)).unwrap());
        let g = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let m = Arc::new(MeasurementOperator::from_pairing(s.clone(), g, MeasurementKind::General).unwrap());
        let v = Arc::new(Subspace::new(s, DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0])).unwrap());
        let p = RecoveryProblem::new(m, v, Some(1.0)).unwrap();
        let oracle = DiameterOracle {
            value: 0.0,
            exact: false,
            certificate: None,
        };
        let row = diameter_sandwich_check(&p, &[0.999, 0.0], &oracle).unwrap();
        assert_eq!(row.regime, "asymptotic regime");
        assert!(row.pass);
        assert!(row.upper <= 2.0 * row.mu + 1e-12);
    }

    #[test]
    fn inequality_checks_hold_on_random_pairs() {
        assert!(midpoint_check(5, 1.3, 10_000, 1) >= -1e-9);
        assert!(segment_check(5, 0.7, 10_000, 2).unwrap() >= -1e-9);
    }

    proptest! {
        #[test]
        fn moduli_shape(a in 0.0f64..2.0, b in 0.0f64..2.0, p in 1.1f64..6.0) {
            for kind in [H, ModulusKind::LpAsymptotic { p }] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(raw(kind, Which::Delta, lo) <= raw(kind, Which::Delta, hi) + 1e-15);
                let (ra, rb, rm) = (raw(kind, Which::Rho, 3.0 * lo), raw(kind, Which::Rho, 3.0 * hi),
                    raw(kind, Which::Rho, 1.5 * (lo + hi)));
                prop_assert!(rm <= 0.5 * (ra + rb) + 1e-12);
                prop_assert!(ra <= rb + 1e-15);
            }
        }

        #[test]
        fn inverses_round_trip(y in 0.0f64..1.0, z in 0.0f64..50.0, p in 1.1f64..6.0) {
            for kind in [H, ModulusKind::LpAsymptotic { p }] {
                let t = inverse(kind, Which::Delta, y * raw(kind, Which::Delta, 2.0)).unwrap();
                prop_assert!((raw(kind, Which::Delta, t) - y * raw(kind, Which::Delta, 2.0)).abs() <= 1e-10);
                let t = inverse(kind, Which::Rho, z).unwrap();
                prop_assert!((raw(kind, Which::Rho, t) - z).abs() <= 1e-10 * (1.0 + z));
            }
        }
    }
}
