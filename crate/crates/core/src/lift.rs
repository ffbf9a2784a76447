//! Liftings `Δ: R^m → X` with `M(Δ(w)) = w`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, RecovError, Result};
use crate::measure::{rademacher_sign, MBall, MeasurementKind, MeasurementOperator};
use crate::solvers::minimize_pnorm;
use crate::spaces::{Element, NormKind};

#[derive(Debug, Clone, PartialEq)]
pub enum LiftingKind {
    /// `Δ(w) = Σ w_j ψ_j` with `l_i(ψ_j) = δ_ij`; columns of the `N × m` matrix.
    DualBasis { psi: DMatrix<f64> },
    /// Least-norm element of the coset in a Hilbert ambient.
    Orthonormal,
    /// Least `L_p`-norm element of the coset.
    MinNorm { p: f64 },
    /// `‖w‖_∞ Π_j (1 + (w_j/‖w‖_∞) r_j)` for Rademacher data.
    RieszProduct,
}

/// Lifting choice as it appears in problem documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftingChoice {
    /// Dual basis with disjoint supports (point evaluations, disjoint averages).
    DualBasisDisjoint,
    /// Dual basis `W^{-1}Gᵀ(G W^{-1} Gᵀ)^{-1}`.
    DualBasisLeastSquares,
    Orthonormal,
    MinNorm,
    RieszProduct,
}

#[derive(Debug, Clone)]
pub struct Lifting {
    m: Arc<MeasurementOperator>,
    kind: LiftingKind,
    norm_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// All `2^{m−1}` sign vertices of the cube (linear liftings, cube ball, m ≤ 20).
    ExactVertex,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftNorm {
    pub lower: f64,
    pub upper: f64,
    /// True when `lower == upper` is the exact operator norm.
    pub certified: bool,
}

pub const VERTEX_MAX_M: usize = 20;

impl Lifting {
    pub fn from_choice(m: Arc<MeasurementOperator>, choice: LiftingChoice) -> Result<Self> {
        match choice {
            LiftingChoice::DualBasisDisjoint => Self::disjoint(m),
            LiftingChoice::DualBasisLeastSquares => Self::dual_basis_least_squares(m),
            LiftingChoice::Orthonormal => Self::orthonormal(m),
            LiftingChoice::MinNorm => {
                let p = m.space().kind().exponent();
                Self::min_norm(m, p)
            }
            LiftingChoice::RieszProduct => Self::riesz_product(m),
        }
    }

    /// Dual-basis lifting from explicit `ψ_j` (columns of `psi`).
    pub fn dual_basis(m: Arc<MeasurementOperator>, psi: DMatrix<f64>) -> Result<Self> {
        check_len("dual basis rows", m.space().dim(), psi.nrows())?;
        check_len("dual basis columns", m.m(), psi.ncols())?;
        let gram = m.pairing() * &psi;
        let dev = (gram - DMatrix::identity(m.m(), m.m())).amax();
        if dev > 1e-9 {
            return Err(RecovError::Precondition(format!(
                "dual basis is not biorthogonal to the functionals (deviation {dev:.3e})"
            )));
        }
        let space = m.space();
        let norm_bound = match (m.closed_form(), space.kind()) {
            (Some(MBall::MaxAbs), NormKind::Sup) => (0..psi.nrows())
                .map(|i| psi.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            _ => {
                let mut total = 0.0;
                for j in 0..m.m() {
                    let mut e = vec![0.0; m.m()];
                    e[j] = 1.0;
                    let col = psi.column(j).into_owned();
                    total += m.m_dual_norm(&e)? * space.norm(&col)?;
                }
                total
            }
        };
        Ok(Lifting {
            m,
            kind: LiftingKind::DualBasis { psi },
            norm_bound,
        })
    }

    /// Disjointly supported dual basis for point evaluations and disjoint averages.
    pub fn disjoint(m: Arc<MeasurementOperator>) -> Result<Self> {
        let n = m.space().dim();
        let mut psi = DMatrix::zeros(n, m.m());
        match m.kind().clone() {
            MeasurementKind::PointEval { indices } => {
                for (j, &k) in indices.iter().enumerate() {
                    psi[(k, j)] = 1.0;
                }
            }
            MeasurementKind::DisjointAvg { supports } => {
                for (j, s) in supports.iter().enumerate() {
                    let total: f64 = s.iter().map(|&i| m.pairing()[(j, i)]).sum();
                    for &i in s {
                        psi[(i, j)] = 1.0 / total;
                    }
                }
            }
            other => {
                return Err(RecovError::Precondition(format!(
                    "no disjointly supported dual basis is known for {other:?}"
                )))
            }
        }
        Self::dual_basis(m, psi)
    }

    /// `Ψ = W^{-1} Gᵀ (G W^{-1} Gᵀ)^{-1}`; for Rademacher rows `ψ_j = r_j`.
    pub fn dual_basis_least_squares(m: Arc<MeasurementOperator>) -> Result<Self> {
        let g = m.pairing();
        let w = m.space().weights();
        let (rows, n) = g.shape();
        let gw = DMatrix::from_fn(n, rows, |i, j| g[(j, i)] / w[i]);
        let gram = g * &gw;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| RecovError::solver("Gram matrix of the functionals is singular", vec![]))?;
        Self::dual_basis(m, gw * inv)
    }

    pub fn orthonormal(m: Arc<MeasurementOperator>) -> Result<Self> {
        if !matches!(m.space().kind(), NormKind::Hilbert | NormKind::Lp(2.0)) {
            return Err(RecovError::Precondition("orthonormal lifting needs a Hilbert ambient".into()));
        }
        Ok(Lifting {
            m,
            kind: LiftingKind::Orthonormal,
            norm_bound: 1.0,
        })
    }

    pub fn min_norm(m: Arc<MeasurementOperator>, p: f64) -> Result<Self> {
        check_min_norm_ambient(&m, p)?;
        Ok(Lifting {
            m,
            kind: LiftingKind::MinNorm { p },
            norm_bound: 1.0,
        })
    }

    pub fn riesz_product(m: Arc<MeasurementOperator>) -> Result<Self> {
        if !matches!(m.kind(), MeasurementKind::Rademacher { .. }) || m.space().dyadic_levels().is_none() {
            return Err(RecovError::Precondition(
                "the Riesz product lifting needs Rademacher functionals on a dyadic grid".into(),
            ));
        }
        if m.space().kind() != NormKind::Lp(1.0) {
            return Err(RecovError::Precondition("the Riesz product lifting lives in L_1".into()));
        }
        Ok(Lifting {
            m,
            kind: LiftingKind::RieszProduct,
            norm_bound: 1.0,
        })
    }

    pub fn kind(&self) -> &LiftingKind {
        &self.kind
    }

    pub fn measurement(&self) -> &Arc<MeasurementOperator> {
        &self.m
    }

    /// Documented upper bound on `‖Δ‖` (exact for dual bases in sup norm with a cube ball).
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn is_linear(&self) -> bool {
        match self.kind {
            LiftingKind::DualBasis { .. } | LiftingKind::Orthonormal => true,
            LiftingKind::MinNorm { p } => p == 2.0,
            LiftingKind::RieszProduct => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            LiftingKind::DualBasis { .. } => "dual_basis",
            LiftingKind::Orthonormal => "orthonormal",
            LiftingKind::MinNorm { .. } => "min_norm",
            LiftingKind::RieszProduct => "riesz_product",
        }
    }

    pub fn lift(&self, w: &[f64]) -> Result<Element> {
        check_len("measurement vector", self.m.m(), w.len())?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(RecovError::invalid("measurement vector has non-finite entries"));
        }
        match &self.kind {
            LiftingKind::DualBasis { psi } => Ok(psi * DVector::from_column_slice(w)),
            LiftingKind::Orthonormal => Ok(self.m.hilbert_factor().least_norm(w)),
            LiftingKind::MinNorm { p } => min_norm_coset_element(&self.m, w, *p),
            LiftingKind::RieszProduct => Ok(self.riesz(w)),
        }
    }

    fn riesz(&self, w: &[f64]) -> Element {
        let n = self.m.space().dim();
        let levels = self.m.space().dyadic_levels().expect("checked at construction") as usize;
        let s = crate::linalg::max_abs(w);
        if s == 0.0 {
            return DVector::zeros(n);
        }
        let u: Vec<f64> = w.iter().map(|v| v / s).collect();
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let prod: f64 = u
                    .iter()
                    .enumerate()
                    .map(|(j, uj)| 1.0 + uj * rademacher_sign(j, i, levels))
                    .product();
                s * prod
            }),
        )
    }

    pub fn lifting_norm(&self, mode: NormMode) -> Result<LiftNorm> {
        match mode {
            NormMode::ExactVertex => self.vertex_norm(),
            NormMode::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut best: f64 = 0.0;
                for _ in 0..samples {
                    let w: Vec<f64> = (0..self.m.m()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let nw = self.m.m_norm(&w)?;
                    if nw == 0.0 {
                        continue;
                    }
                    let x = self.lift(&w)?;
                    best = best.max(self.m.space().norm(&x)? / nw);
                }
                Ok(LiftNorm {
                    lower: best,
                    upper: self.norm_bound.max(best),
                    certified: false,
                })
            }
        }
    }

    fn vertex_norm(&self) -> Result<LiftNorm> {
        let m = self.m.m();
        let LiftingKind::DualBasis { psi } = &self.kind else {
            return Err(RecovError::Precondition("vertex enumeration needs a dual-basis lifting".into()));
        };
        if self.m.closed_form() != Some(MBall::MaxAbs) {
            return Err(RecovError::Precondition(
                "vertex enumeration needs a cube as measurement-norm unit ball".into(),
            ));
        }
        if m > VERTEX_MAX_M {
            return Err(RecovError::SizeLimit(format!(
                "{m} functionals give 2^{} vertices; at most {VERTEX_MAX_M} are enumerated",
                m - 1
            )));
        }
        let space = self.m.space();
        // Gray-code walk over sign vectors with s_0 = +1
        let mut s = vec![1.0; m];
        let mut x: DVector<f64> = psi.column_sum();
        let mut best = space.norm_unchecked(x.as_slice());
        for k in 1..(1usize << (m - 1)) {
            let flip = k.trailing_zeros() as usize + 1;
            s[flip] = -s[flip];
            x.axpy(2.0 * s[flip], &psi.column(flip), 1.0);
            best = best.max(space.norm_unchecked(x.as_slice()));
        }
        Ok(LiftNorm {
            lower: best,
            upper: best,
            certified: true,
        })
    }
}

fn check_min_norm_ambient(m: &MeasurementOperator, p: f64) -> Result<()> {
    let ok = match m.space().kind() {
        NormKind::Hilbert => p == 2.0,
        NormKind::Lp(q) => q == p && p > 1.0,
        NormKind::Sup => false,
    };
    if ok {
        Ok(())
    } else {
        Err(RecovError::Precondition(format!(
            "minimal-norm lifting with p = {p} needs a uniformly convex L_{p} ambient"
        )))
    }
}

/// The unique element of least `L_p` norm in the coset `{x : M x = w}`.
pub fn min_norm_coset_element(m: &MeasurementOperator, w: &[f64], p: f64) -> Result<Element> {
    check_min_norm_ambient(m, p)?;
    check_len("measurement vector", m.m(), w.len())?;
    let h = m.hilbert_factor();
    let x0 = h.least_norm(w);
    if p == 2.0 || w.iter().all(|&v| v == 0.0) {
        return Ok(x0);
    }
    let z = m.null_basis();
    if z.ncols() == 0 {
        return Ok(x0);
    }
    let neg = -z;
    let sol = minimize_pnorm(&neg, &x0, p, Some(m.space().weights()))?;
    Ok(&x0 - neg * sol.z)
}
