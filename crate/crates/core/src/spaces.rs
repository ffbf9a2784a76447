//! Grid-discretized ambient spaces, their norms, and model subspaces.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, RecovError, Result};
use crate::linalg::PivotedQr;
use crate::solvers::{chebyshev_fit, l1_fit, least_squares, minimize_pnorm, PNORM_REL_TOL};

/// A member of a [`Space`], stored as its values on the grid.
pub type Element = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum NormKind {
    Sup,
    /// Weighted `L_p` with `1 ≤ p < ∞`.
    Lp(f64),
    /// Weighted `L_2` with the inner-product machinery switched on.
    Hilbert,
}

impl NormKind {
    pub fn exponent(&self) -> f64 {
        match self {
            NormKind::Sup => f64::INFINITY,
            NormKind::Lp(p) => *p,
            NormKind::Hilbert => 2.0,
        }
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(self, NormKind::Hilbert)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Cell midpoints, weight = cell width.
    Midpoint,
    /// Endpoints included, half weight at the ends.
    Trapezoid,
    /// Left endpoint of each cell, right end identified with the left one.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    domain: Option<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: NormKind,
    dyadic_levels: Option<u32>,
}

impl Space {
    pub fn from_parts(
        domain: Option<(f64, f64)>,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        kind: NormKind,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(RecovError::invalid("a space needs at least one node"));
        }
        check_len("quadrature weights", nodes.len(), weights.len())?;
        if let NormKind::Lp(p) = kind {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(RecovError::invalid(format!("L_p exponent must lie in [1, ∞), got {p}")));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(RecovError::invalid("quadrature weights must be positive and finite"));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(RecovError::invalid("nodes must be finite"));
        }
        if let Some((a, b)) = domain {
            if !(a < b) {
                return Err(RecovError::invalid(format!("empty domain [{a}, {b}]")));
            }
            if nodes.windows(2).any(|p| p[0] >= p[1]) {
                return Err(RecovError::invalid("nodes must be strictly increasing"));
            }
            if nodes[0] < a || nodes[nodes.len() - 1] > b {
                return Err(RecovError::invalid("nodes must lie in the domain"));
            }
        }
        Ok(Space {
            domain,
            nodes,
            weights,
            kind,
            dyadic_levels: None,
        })
    }

    pub fn grid(a: f64, b: f64, n: usize, quad: Quadrature, kind: NormKind) -> Result<Self> {
        if n == 0 || (quad == Quadrature::Trapezoid && n < 2) {
            return Err(RecovError::invalid(format!("too few grid points ({n}) for {quad:?}")));
        }
        let (nodes, weights) = match quad {
            Quadrature::Midpoint => {
                let h = (b - a) / n as f64;
                ((0..n).map(|i| a + (i as f64 + 0.5) * h).collect(), vec![h; n])
            }
            Quadrature::Periodic => {
                let h = (b - a) / n as f64;
                ((0..n).map(|i| a + i as f64 * h).collect(), vec![h; n])
            }
            Quadrature::Trapezoid => {
                let h = (b - a) / (n - 1) as f64;
                let mut w = vec![h; n];
                w[0] = h / 2.0;
                w[n - 1] = h / 2.0;
                let mut t: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
                t[n - 1] = b;
                (t, w)
            }
        };
        Self::from_parts(Some((a, b)), nodes, weights, kind)
    }

    /// `R^n` with unit weights; nodes are the indices `0..n`.
    pub fn sequence(n: usize, kind: NormKind) -> Result<Self> {
        Self::from_parts(None, (0..n).map(|i| i as f64).collect(), vec![1.0; n], kind)
    }

    /// Midpoint grid of `2^levels` equal cells on `[0, 1]`.
    pub fn dyadic(levels: u32, kind: NormKind) -> Result<Self> {
        if levels > 24 {
            return Err(RecovError::SizeLimit(format!("dyadic grid with 2^{levels} cells")));
        }
        let mut s = Self::grid(0.0, 1.0, 1 << levels, Quadrature::Midpoint, kind)?;
        s.dyadic_levels = Some(levels);
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain
    }

    /// Number of dyadic levels when the space was built by [`Space::dyadic`].
    pub fn dyadic_levels(&self) -> Option<u32> {
        self.dyadic_levels
    }

    /// Largest gap between neighbouring nodes; `None` for sequence spaces.
    pub fn grid_resolution(&self) -> Option<f64> {
        self.domain?;
        let gaps = self.nodes.windows(2).map(|p| p[1] - p[0]);
        Some(gaps.fold(0.0, f64::max).max(self.weights.iter().cloned().fold(0.0, f64::max)))
    }

    pub fn element_from_fn(&self, f: impl Fn(f64) -> f64) -> Element {
        DVector::from_iterator(self.dim(), self.nodes.iter().map(|&t| f(t)))
    }

    pub fn unit_vector(&self, i: usize) -> Element {
        let mut e = DVector::zeros(self.dim());
        e[i] = 1.0;
        e
    }

    pub fn check_element(&self, x: &Element) -> Result<()> {
        check_len("element length", self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RecovError::invalid("element has non-finite entries"));
        }
        Ok(())
    }

    pub fn norm(&self, x: &Element) -> Result<f64> {
        check_len("element length", self.dim(), x.len())?;
        Ok(self.norm_unchecked(x.as_slice()))
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Sup => crate::linalg::max_abs(x),
            NormKind::Hilbert => x
                .iter()
                .zip(&self.weights)
                .map(|(v, w)| w * v * v)
                .sum::<f64>()
                .sqrt(),
            NormKind::Lp(p) => {
                let scale = crate::linalg::max_abs(x);
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = x
                    .iter()
                    .zip(&self.weights)
                    .map(|(v, w)| w * (v / scale).abs().powf(p))
                    .sum();
                scale * s.powf(1.0 / p)
            }
        }
    }

    /// Weighted inner product; only meaningful for Hilbert spaces.
    pub fn inner(&self, x: &Element, y: &Element) -> f64 {
        x.iter()
            .zip(y.iter())
            .zip(&self.weights)
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    /// Dual norm of the functional `x ↦ Σ_i r_i x_i`.
    pub fn dual_norm(&self, r: &[f64]) -> Result<f64> {
        check_len("functional length", self.dim(), r.len())?;
        let w = &self.weights;
        Ok(match self.kind {
            NormKind::Sup => r.iter().map(|v| v.abs()).sum(),
            NormKind::Hilbert => r.iter().zip(w).map(|(v, wi)| v * v / wi).sum::<f64>().sqrt(),
            NormKind::Lp(p) if p == 1.0 => r.iter().zip(w).map(|(v, wi)| (v / wi).abs()).fold(0.0, f64::max),
            NormKind::Lp(p) => {
                let q = p / (p - 1.0);
                let dens: Vec<f64> = r.iter().zip(w).map(|(v, wi)| v / wi).collect();
                let scale = crate::linalg::max_abs(&dens);
                if scale == 0.0 {
                    return Ok(0.0);
                }
                let s: f64 = dens.iter().zip(w).map(|(d, wi)| wi * (d / scale).abs().powf(q)).sum();
                scale * s.powf(1.0 / q)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubspacePreset {
    /// `{1, cos kt, sin kt : k ≤ n}`, dimension `2n + 1`.
    Trig { n: usize },
    /// Chebyshev polynomials `T_0..T_n` on the domain, dimension `n + 1`.
    Poly { n: usize },
    /// Unit vectors at the given (0-based) node indices.
    Coordinate { indices: Vec<usize> },
}

/// A model space `V`, spanned by the columns of a full-rank basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    space: Arc<Space>,
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(space: Arc<Space>, basis: DMatrix<f64>) -> Result<Self> {
        check_len("basis rows", space.dim(), basis.nrows())?;
        if basis.ncols() == 0 {
            return Err(RecovError::invalid("a model space needs at least one basis vector"));
        }
        if basis.ncols() > space.dim() {
            return Err(RecovError::invalid(format!(
                "model dimension {} exceeds ambient dimension {}",
                basis.ncols(),
                space.dim()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(RecovError::invalid("basis has non-finite entries"));
        }
        let qr = PivotedQr::new(&basis);
        if qr.rank() < basis.ncols() {
            return Err(RecovError::RankDeficient {
                columns: qr.dependent_columns(),
            });
        }
        Ok(Subspace { space, basis })
    }

    pub fn preset(preset: &SubspacePreset, space: Arc<Space>) -> Result<Self> {
        let t = space.nodes().to_vec();
        let basis = match preset {
            SubspacePreset::Trig { n } => {
                let n = *n;
                check_dim(2 * n + 1, space.dim())?;
                DMatrix::from_fn(t.len(), 2 * n + 1, |i, c| {
                    if c == 0 {
                        1.0
                    } else {
                        let k = ((c + 1) / 2) as f64;
                        if c % 2 == 1 {
                            (k * t[i]).cos()
                        } else {
                            (k * t[i]).sin()
                        }
                    }
                })
            }
            SubspacePreset::Poly { n } => {
                let n = *n;
                check_dim(n + 1, space.dim())?;
                let map = |s: f64| match space.domain() {
                    Some((a, b)) => (2.0 * s - a - b) / (b - a),
                    None => s,
                };
                let mut b = DMatrix::zeros(t.len(), n + 1);
                for (i, &s) in t.iter().enumerate() {
                    let x = map(s);
                    let (mut prev, mut cur) = (1.0, x);
                    b[(i, 0)] = 1.0;
                    if n >= 1 {
                        b[(i, 1)] = x;
                    }
                    for k in 2..=n {
                        let next = 2.0 * x * cur - prev;
                        prev = cur;
                        cur = next;
                        b[(i, k)] = cur;
                    }
                }
                b
            }
            SubspacePreset::Coordinate { indices } => {
                check_dim(indices.len(), space.dim())?;
                if let Some(&bad) = indices.iter().find(|&&i| i >= space.dim()) {
                    return Err(RecovError::invalid(format!("coordinate index {bad} out of range")));
                }
                DMatrix::from_fn(t.len(), indices.len(), |i, c| if indices[c] == i { 1.0 } else { 0.0 })
            }
        };
        Self::new(space, basis)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `Σ_k c_k v_k`.
    pub fn element(&self, coeffs: &DVector<f64>) -> Element {
        &self.basis * coeffs
    }

    /// True when `self` is contained in `other` (residual ≤ 1e-9 relative).
    pub fn is_contained_in(&self, other: &Subspace) -> bool {
        if self.space != other.space || self.dim() > other.dim() {
            return false;
        }
        let qr = PivotedQr::new(&other.basis);
        (0..self.dim()).all(|k| {
            let col = self.basis.column(k).into_owned();
            match qr.solve(&col) {
                Ok(c) => (&col - &other.basis * c).amax() <= 1e-9 * (1.0 + col.amax()),
                Err(_) => false,
            }
        })
    }
}

fn check_dim(n: usize, big_n: usize) -> Result<()> {
    if n > big_n {
        return Err(RecovError::invalid(format!(
            "model dimension {n} exceeds ambient dimension {big_n}"
        )));
    }
    Ok(())
}

/// Best approximation of `x` from a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub minimizer: Element,
    pub coeffs: DVector<f64>,
    /// `1` for exact solves, `1 + tol` for the iterative p-norm route.
    pub near_best_factor: f64,
    pub grid_resolution: Option<f64>,
}

/// `min_{v ∈ V} ‖x − v‖` with a minimiser.
pub fn dist_to_subspace(space: &Space, x: &Element, v: &Subspace) -> Result<Distance> {
    if **v.space() != *space {
        return Err(RecovError::invalid("model space lives in a different ambient space"));
    }
    space.check_element(x)?;
    let b = v.basis();
    let (coeffs, factor) = match space.kind() {
        NormKind::Sup => (chebyshev_fit(b, x)?.coeffs, 1.0),
        NormKind::Lp(p) if p == 1.0 => (l1_fit(b, x, space.weights())?.coeffs, 1.0),
        NormKind::Hilbert => (least_squares(b, x, Some(space.weights()))?, 1.0),
        NormKind::Lp(p) if p == 2.0 => (least_squares(b, x, Some(space.weights()))?, 1.0),
        NormKind::Lp(p) => (minimize_pnorm(b, x, p, Some(space.weights()))?.z, 1.0 + PNORM_REL_TOL),
    };
    let minimizer = b * &coeffs;
    let value = space.norm_unchecked((x - &minimizer).as_slice());
    Ok(Distance {
        value,
        minimizer,
        coeffs,
        near_best_factor: factor,
        grid_resolution: space.grid_resolution(),
    })
}

/// Equispaced periodic grid on `[−π, π)`.
pub fn circle_grid(n: usize, kind: NormKind) -> Result<Space> {
    Space::grid(-PI, PI, n, Quadrature::Periodic, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arc(s: Space) -> Arc<Space> {
        Arc::new(s)
    }

    #[test]
    fn trivial_norms() {
        let s = Space::sequence(5, NormKind::Sup).unwrap();
        assert_eq!(s.norm(&DVector::zeros(5)).unwrap(), 0.0);
        assert_eq!(s.norm(&s.unit_vector(0)).unwrap(), 1.0);
        for kind in [NormKind::Hilbert, NormKind::Lp(1.0), NormKind::Lp(3.5)] {
            let s = Space::sequence(5, kind).unwrap();
            assert_eq!(s.norm(&DVector::zeros(5)).unwrap(), 0.0);
        }
    }

    #[test]
    fn sine_has_norm_root_pi() {
        let s = Space::grid(0.0, 2.0 * PI, 4096, Quadrature::Midpoint, NormKind::Hilbert).unwrap();
        let x = s.element_from_fn(f64::sin);
        assert!((s.norm(&x).unwrap() - PI.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch_is_structural() {
        let s = Space::sequence(3, NormKind::Sup).unwrap();
        assert!(matches!(
            s.norm(&DVector::zeros(4)),
            Err(RecovError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(Space::from_parts(None, vec![], vec![], NormKind::Sup).is_err());
        assert!(Space::from_parts(None, vec![0.0], vec![0.0], NormKind::Sup).is_err());
        assert!(Space::from_parts(Some((0.0, 1.0)), vec![0.5, 0.2], vec![1.0, 1.0], NormKind::Sup).is_err());
        assert!(Space::sequence(2, NormKind::Lp(0.5)).is_err());
    }

    #[test]
    fn parabola_distance_to_lines() {
        let s = arc(Space::grid(0.0, 1.0, 2001, Quadrature::Trapezoid, NormKind::Sup).unwrap());
        let v = Subspace::preset(&SubspacePreset::Poly { n: 1 }, s.clone()).unwrap();
        let x = s.element_from_fn(|t| t * t);
        let d = dist_to_subspace(&s, &x, &v).unwrap();
        assert!((d.value - 0.125).abs() < 1e-6);
        // equioscillation: error ±1/8 with alternating sign at 0, 1/2, 1
        let r = &x - &d.minimizer;
        let signs = [r[0], r[1000], r[2000]];
        assert!(signs.iter().all(|e| (e.abs() - 0.125).abs() < 1e-9));
        assert!(signs[0] * signs[1] < 0.0 && signs[1] * signs[2] < 0.0);
    }

    #[test]
    fn member_has_zero_distance() {
        for kind in [NormKind::Sup, NormKind::Hilbert, NormKind::Lp(1.0), NormKind::Lp(3.0)] {
            let s = arc(Space::grid(-1.0, 1.0, 50, Quadrature::Midpoint, kind).unwrap());
            let v = Subspace::preset(&SubspacePreset::Poly { n: 3 }, s.clone()).unwrap();
            let x = v.element(&DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]));
            let d = dist_to_subspace(&s, &x, &v).unwrap();
            assert!(d.value < 1e-10, "{kind:?}: {}", d.value);
            assert!((&d.minimizer - &x).amax() < 1e-9);
        }
    }

    #[test]
    fn pythagoras_in_hilbert() {
        let s = arc(Space::grid(-PI, PI, 256, Quadrature::Periodic, NormKind::Hilbert).unwrap());
        let v = Subspace::preset(&SubspacePreset::Trig { n: 2 }, s.clone()).unwrap();
        // cos 5t is orthogonal to trig polynomials of degree 2 on this grid
        let eta = s.element_from_fn(|t| (5.0 * t).cos());
        let base = v.element(&DVector::from_vec(vec![1.0, 0.5, -0.2, 0.0, 0.3]));
        let c = -1.7;
        let d = dist_to_subspace(&s, &(base + &eta * c), &v).unwrap();
        assert!((d.value - c.abs() * s.norm(&eta).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn presets_have_expected_dimensions() {
        let s = arc(circle_grid(4096, NormKind::Sup).unwrap());
        assert_eq!(Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap().dim(), 3);
        let p0 = Subspace::preset(&SubspacePreset::Poly { n: 0 }, s.clone()).unwrap();
        assert_eq!(p0.dim(), 1);
        assert!(p0.basis().iter().all(|&v| v == 1.0));
        let e = Subspace::preset(&SubspacePreset::Coordinate { indices: vec![1] }, s.clone()).unwrap();
        assert_eq!(e.basis().column(0).into_owned(), s.unit_vector(1));
        let small = arc(Space::sequence(4, NormKind::Sup).unwrap());
        assert!(Subspace::preset(&SubspacePreset::Trig { n: 2 }, small).is_err());
    }

    #[test]
    fn nesting_is_detected() {
        let s = arc(circle_grid(64, NormKind::Hilbert).unwrap());
        let v1 = Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap();
        let v2 = Subspace::preset(&SubspacePreset::Trig { n: 2 }, s.clone()).unwrap();
        assert!(v1.is_contained_in(&v2));
        assert!(!v2.is_contained_in(&v1));
    }

    #[test]
    fn dual_norms_match_closed_forms() {
        let s = Space::sequence(3, NormKind::Sup).unwrap();
        assert_eq!(s.dual_norm(&[1.0, -2.0, 0.5]).unwrap(), 3.5);
        let s = Space::sequence(3, NormKind::Lp(1.0)).unwrap();
        assert_eq!(s.dual_norm(&[1.0, -2.0, 0.5]).unwrap(), 2.0);
        let s = Space::sequence(2, NormKind::Hilbert).unwrap();
        assert!((s.dual_norm(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    fn kinds() -> impl Strategy<Value = NormKind> {
        prop_oneof![
            Just(NormKind::Sup),
            Just(NormKind::Hilbert),
            Just(NormKind::Lp(1.0)),
            (1.1f64..6.0).prop_map(NormKind::Lp),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_is_homogeneous_and_subadditive(
            kind in kinds(),
            x in prop::collection::vec(-5.0f64..5.0, 7),
            y in prop::collection::vec(-5.0f64..5.0, 7),
            lam in -3.0f64..3.0,
        ) {
            let s = Space::grid(0.0, 1.0, 7, Quadrature::Midpoint, kind).unwrap();
            let x = DVector::from_vec(x);
            let y = DVector::from_vec(y);
            let nx = s.norm(&x).unwrap();
            prop_assert!((s.norm(&(&x * lam)).unwrap() - lam.abs() * nx).abs() <= 1e-9 * (1.0 + nx));
            prop_assert!(s.norm(&(&x + &y)).unwrap() <= nx + s.norm(&y).unwrap() + 1e-9);
        }

        #[test]
        fn distance_is_at_most_norm(
            kind in kinds(),
            x in prop::collection::vec(-5.0f64..5.0, 9),
        ) {
            let s = arc(Space::grid(-1.0, 1.0, 9, Quadrature::Midpoint, kind).unwrap());
            let v = Subspace::preset(&SubspacePreset::Poly { n: 2 }, s.clone()).unwrap();
            let x = DVector::from_vec(x);
            let d = dist_to_subspace(&s, &x, &v).unwrap();
            prop_assert!(d.value <= s.norm(&x).unwrap() * d.near_best_factor + 1e-9);
        }

        #[test]
        fn hilbert_projection_splits_the_norm(x in prop::collection::vec(-5.0f64..5.0, 16)) {
            let s = arc(circle_grid(16, NormKind::Hilbert).unwrap());
            let v = Subspace::preset(&SubspacePreset::Trig { n: 2 }, s.clone()).unwrap();
            let x = DVector::from_vec(x);
            let d = dist_to_subspace(&s, &x, &v).unwrap();
            let nx = s.norm(&x).unwrap();
            let np = s.norm(&d.minimizer).unwrap();
            prop_assert!((d.value.powi(2) + np * np - nx * nx).abs() <= 1e-9 * (1.0 + nx * nx));
        }
    }
}
