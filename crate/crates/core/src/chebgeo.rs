//! Small-scale exact geometry: diameter, Chebyshev radius and center, and the
//! restricted Chebyshev radius of polytopes and of the data-consistent sets `K_w`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{RecovError, Result};
use crate::linalg::{null_space, orthonormal_columns, PivotedQr};
use crate::measure::MeasurementOperator;
use crate::solvers::{solve_lp, LinearProgram, LpStatus, Relation, SolveReport};
use crate::spaces::{Element, NormKind, Space, Subspace};

/// Linear description over `(x, aux)`: `E y = e` and `A y ≤ b`. The set is the
/// projection onto the `x` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HRep {
    pub n_aux: usize,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
}

/// `{center + axes·u : ‖u‖₂ ≤ 1}` with axes orthogonal in the ambient inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Element,
    pub axes: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Vertices(Vec<Element>),
    Halfspaces(HRep),
    /// Data-consistent sets in Hilbert ambients.
    Ellipsoid(Ellipsoid),
}

#[derive(Debug, Clone)]
pub struct PolytopeSet {
    space: Arc<Space>,
    rep: Representation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// `false` when `value` is only a lower bound.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Center {
    pub center: Vec<f64>,
    pub radius: f64,
    pub exact: bool,
}

/// Vertex enumeration gives up beyond this many candidate bases.
pub const BASIS_CAP: usize = 2_000_000;

fn check_norm(space: &Space) -> Result<()> {
    match space.kind() {
        NormKind::Sup | NormKind::Hilbert => Ok(()),
        NormKind::Lp(p) if p == 1.0 || p == 2.0 => Ok(()),
        other => Err(RecovError::Precondition(format!(
            "geometry oracles cover sup, L_1 and Hilbert norms, not {other:?}"
        ))),
    }
}

fn is_l2(kind: NormKind) -> bool {
    kind.is_hilbert() || kind == NormKind::Lp(2.0)
}

fn lp_optimal(rep: SolveReport, what: &str) -> Result<SolveReport> {
    match rep.status {
        LpStatus::Optimal => Ok(rep),
        LpStatus::Unbounded => Err(RecovError::Precondition(format!("{what}: the set is unbounded"))),
        LpStatus::Infeasible => Err(RecovError::Precondition(format!("{what}: the set is empty"))),
    }
}

impl PolytopeSet {
    pub fn from_vertices(space: Arc<Space>, vertices: Vec<Element>) -> Result<Self> {
        check_norm(&space)?;
        if vertices.is_empty() {
            return Err(RecovError::invalid("a vertex description needs at least one point"));
        }
        for v in &vertices {
            space.check_element(v)?;
        }
        Ok(PolytopeSet {
            space,
            rep: Representation::Vertices(vertices),
        })
    }

    /// Fails with a precondition error when the description is infeasible.
    pub fn from_halfspaces(space: Arc<Space>, hrep: HRep) -> Result<Self> {
        check_norm(&space)?;
        let width = space.dim() + hrep.n_aux;
        for (row, _) in hrep.equalities.iter().chain(&hrep.inequalities) {
            crate::error::check_len("constraint row", width, row.len())?;
        }
        let set = PolytopeSet {
            space,
            rep: Representation::Halfspaces(hrep),
        };
        if !set.is_feasible()? {
            return Err(RecovError::Precondition("the linear description is infeasible".into()));
        }
        Ok(set)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    fn base_lp(&self, hrep: &HRep, extra: usize) -> LinearProgram {
        let width = self.space.dim() + hrep.n_aux;
        let mut lp = LinearProgram::minimize(vec![0.0; width + extra]);
        for k in 0..width + extra {
            lp.set_free(k);
        }
        for (row, rhs) in &hrep.equalities {
            let mut r = row.clone();
            r.resize(width + extra, 0.0);
            lp.add_constraint(r, Relation::Eq, *rhs);
        }
        for (row, rhs) in &hrep.inequalities {
            let mut r = row.clone();
            r.resize(width + extra, 0.0);
            lp.add_constraint(r, Relation::Le, *rhs);
        }
        lp
    }

    fn is_feasible(&self) -> Result<bool> {
        match &self.rep {
            Representation::Halfspaces(h) => Ok(solve_lp(&self.base_lp(h, 0))?.status != LpStatus::Infeasible),
            _ => Ok(true),
        }
    }

    /// Per-coordinate `(min, max)` over the set.
    pub fn coordinate_ranges(&self) -> Result<Vec<(f64, f64)>> {
        let n = self.space.dim();
        match &self.rep {
            Representation::Vertices(vs) => Ok((0..n)
                .map(|k| {
                    vs.iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[k]), hi.max(v[k])))
                })
                .collect()),
            Representation::Halfspaces(h) => {
                let base = self.base_lp(h, 0);
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let mut lo = base.clone();
                    lo.objective[k] = 1.0;
                    let mut hi = base.clone();
                    hi.objective[k] = -1.0;
                    let a = lp_optimal(solve_lp(&lo)?, "coordinate range")?.objective_value;
                    let b = -lp_optimal(solve_lp(&hi)?, "coordinate range")?.objective_value;
                    out.push((a, b));
                }
                Ok(out)
            }
            Representation::Ellipsoid(e) => Ok((0..n)
                .map(|k| {
                    let half = e.axes.row(k).norm();
                    (e.center[k] - half, e.center[k] + half)
                })
                .collect()),
        }
    }

    /// Vertices of the set; descriptions are enumerated basis by basis.
    pub fn vertices(&self) -> Result<Vec<Element>> {
        match &self.rep {
            Representation::Vertices(vs) => Ok(vs.clone()),
            Representation::Halfspaces(h) => enumerate_vertices(self.space.dim(), h),
            Representation::Ellipsoid(_) => Err(RecovError::Precondition("an ellipsoid has no vertex list".into())),
        }
    }

    pub fn diameter(&self) -> Result<Estimate> {
        let kind = self.space.kind();
        if let Representation::Ellipsoid(e) = &self.rep {
            return Ok(Estimate {
                value: 2.0 * self.max_axis(e),
                exact: true,
            });
        }
        if kind == NormKind::Sup {
            let r = self.coordinate_ranges()?;
            return Ok(Estimate {
                value: r.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max),
                exact: true,
            });
        }
        let vs = self.vertices()?;
        Ok(Estimate {
            value: self.pair_diameter(&vs),
            exact: true,
        })
    }

    /// Lower bound on the diameter from extreme points in random directions.
    pub fn diameter_sampled(&self, samples: usize, seed: u64) -> Result<Estimate> {
        let Representation::Halfspaces(h) = &self.rep else {
            return self.diameter();
        };
        let n = self.space.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = self.base_lp(h, 0);
        let mut pts = Vec::new();
        for _ in 0..samples.max(1) {
            let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            for sign in [1.0, -1.0] {
                let mut lp = base.clone();
                for k in 0..n {
                    lp.objective[k] = sign * dir[k];
                }
                let rep = lp_optimal(solve_lp(&lp)?, "sampled diameter")?;
                pts.push(DVector::from_column_slice(&rep.solution[..n]));
            }
        }
        Ok(Estimate {
            value: self.pair_diameter(&pts),
            exact: false,
        })
    }

    fn pair_diameter(&self, pts: &[Element]) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(self.space.norm_unchecked((&pts[i] - &pts[j]).as_slice()));
            }
        }
        best
    }

    fn max_axis(&self, e: &Ellipsoid) -> f64 {
        (0..e.axes.ncols())
            .map(|k| self.space.norm_unchecked(e.axes.column(k).as_slice()))
            .fold(0.0, f64::max)
    }

    /// Chebyshev radius and a center of the smallest enclosing ball.
    pub fn chebyshev_center_radius(&self) -> Result<Center> {
        let kind = self.space.kind();
        if let Representation::Ellipsoid(e) = &self.rep {
            return Ok(Center {
                center: e.center.iter().copied().collect(),
                radius: self.max_axis(e),
                exact: true,
            });
        }
        if kind == NormKind::Sup {
            let ranges = self.coordinate_ranges()?;
            let radius = ranges.iter().map(|(lo, hi)| 0.5 * (hi - lo)).fold(0.0, f64::max);
            // among optimal centers, the least Euclidean norm one
            let center = ranges
                .iter()
                .map(|(lo, hi)| {
                    let mid = 0.5 * (lo + hi);
                    let slack = radius - 0.5 * (hi - lo);
                    0.0f64.clamp(mid - slack, mid + slack)
                })
                .collect();
            return Ok(Center {
                center,
                radius,
                exact: true,
            });
        }
        let vs = self.vertices()?;
        if is_l2(kind) {
            let sw: Vec<f64> = self.space.weights().iter().map(|w| w.sqrt()).collect();
            let pts: Vec<DVector<f64>> = vs.iter().map(|v| v.component_mul(&DVector::from_column_slice(&sw))).collect();
            let (c, r) = welzl(&pts);
            return Ok(Center {
                center: c.iter().zip(&sw).map(|(a, s)| a / s).collect(),
                radius: r.max(0.0),
                exact: true,
            });
        }
        l1_center(&vs, self.space.weights(), false)
    }

    /// Radius of the smallest ball centred in the set and containing it.
    pub fn restricted_radius(&self) -> Result<Center> {
        let kind = self.space.kind();
        if let Representation::Ellipsoid(_) = &self.rep {
            return self.chebyshev_center_radius();
        }
        if kind == NormKind::Sup {
            return self.sup_restricted();
        }
        let vs = self.vertices()?;
        if is_l2(kind) {
            return kelley_restricted(&vs, self.space.weights());
        }
        l1_center(&vs, self.space.weights(), true)
    }

    fn sup_restricted(&self) -> Result<Center> {
        let n = self.space.dim();
        let ranges = self.coordinate_ranges()?;
        // minimise r with a ∈ S and max(hi_k − a_k, a_k − lo_k) ≤ r
        let (mut lp, a_off, r_ix) = match &self.rep {
            Representation::Halfspaces(h) => {
                let width = n + h.n_aux;
                (self.base_lp(h, 1), None, width)
            }
            Representation::Vertices(vs) => {
                let k = vs.len();
                let mut lp = LinearProgram::minimize(vec![0.0; k + 1]);
                lp.set_free(k);
                lp.add_constraint(
                    (0..k).map(|_| 1.0).chain(std::iter::once(0.0)).collect(),
                    Relation::Eq,
                    1.0,
                );
                (lp, Some(vs), k)
            }
            Representation::Ellipsoid(_) => unreachable!("handled by the caller"),
        };
        lp.objective[r_ix] = 1.0;
        let width = lp.num_vars();
        for (k, (lo, hi)) in ranges.iter().enumerate() {
            let mut coord = vec![0.0; width];
            match a_off {
                None => coord[k] = 1.0,
                Some(vs) => {
                    for (l, v) in vs.iter().enumerate() {
                        coord[l] = v[k];
                    }
                }
            }
            let mut up: Vec<f64> = coord.iter().map(|c| -c).collect();
            up[r_ix] = -1.0;
            lp.add_constraint(up, Relation::Le, -hi);
            let mut down = coord;
            down[r_ix] = -1.0;
            lp.add_constraint(down, Relation::Le, *lo);
        }
        let rep = lp_optimal(solve_lp(&lp)?, "restricted radius")?;
        let center: Vec<f64> = match a_off {
            None => rep.solution[..n].to_vec(),
            Some(vs) => {
                let mut c = DVector::zeros(n);
                for (l, v) in vs.iter().enumerate() {
                    c += v * rep.solution[l];
                }
                c.iter().copied().collect()
            }
        };
        Ok(Center {
            center,
            radius: rep.objective_value,
            exact: true,
        })
    }
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx)?;
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for r in i + 1..k {
                    idx[r] = idx[r - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k.min(n - k) {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn enumerate_vertices(n: usize, h: &HRep) -> Result<Vec<Element>> {
    let width = n + h.n_aux;
    let eq = DMatrix::from_fn(h.equalities.len(), width, |i, j| h.equalities[i].0[j]);
    let eq_rank = if h.equalities.is_empty() { 0 } else { PivotedQr::new(&eq.transpose()).rank() };
    let need = width - eq_rank;
    let ni = h.inequalities.len();
    let count = binomial(ni, need);
    if count > BASIS_CAP {
        return Err(RecovError::SizeLimit(format!(
            "vertex enumeration would test {count} bases; use the sampled diameter instead"
        )));
    }
    let tol = 1e-9;
    let mut out: Vec<Element> = Vec::new();
    for_each_combination(ni, need, |active| {
        let rows = h.equalities.len() + active.len();
        let a = DMatrix::from_fn(rows, width, |i, j| {
            if i < h.equalities.len() {
                h.equalities[i].0[j]
            } else {
                h.inequalities[active[i - h.equalities.len()]].0[j]
            }
        });
        let b = DVector::from_fn(rows, |i, _| {
            if i < h.equalities.len() {
                h.equalities[i].1
            } else {
                h.inequalities[active[i - h.equalities.len()]].1
            }
        });
        let qr = PivotedQr::new(&a);
        if qr.rank() < width {
            return Ok(());
        }
        let y = qr.solve(&b)?;
        let scale = 1.0 + y.amax();
        if (&a * &y - &b).amax() > tol * scale {
            return Ok(());
        }
        for (row, rhs) in &h.inequalities {
            let lhs: f64 = row.iter().zip(y.iter()).map(|(r, v)| r * v).sum();
            if lhs > rhs + tol * scale {
                return Ok(());
            }
        }
        let x = y.rows(0, n).into_owned();
        if !out.iter().any(|v| (v - &x).amax() <= 1e-8 * scale) {
            out.push(x);
        }
        Ok(())
    })?;
    if out.is_empty() {
        return Err(RecovError::Precondition(
            "no vertices found: the set is empty or contains a line".into(),
        ));
    }
    Ok(out)
}

/// Smallest enclosing Euclidean ball, by Welzl's recursion on a shuffled copy.
fn welzl(points: &[DVector<f64>]) -> (DVector<f64>, f64) {
    let dim = points[0].len();
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    let mut boundary = Vec::new();
    welzl_rec(&pts, &mut boundary, dim)
}

fn welzl_rec(pts: &[DVector<f64>], boundary: &mut Vec<DVector<f64>>, dim: usize) -> (DVector<f64>, f64) {
    if pts.is_empty() || boundary.len() == dim + 1 {
        return circumball(boundary, dim);
    }
    let (last, rest) = pts.split_last().expect("nonempty");
    let (c, r) = welzl_rec(rest, boundary, dim);
    if r >= 0.0 && (last - &c).norm() <= r * (1.0 + 1e-12) + 1e-12 {
        return (c, r);
    }
    boundary.push(last.clone());
    let out = welzl_rec(rest, boundary, dim);
    boundary.pop();
    out
}

/// Smallest ball with all of `pts` on its boundary, centred in their affine hull.
fn circumball(pts: &[DVector<f64>], dim: usize) -> (DVector<f64>, f64) {
    match pts.len() {
        0 => (DVector::zeros(dim), -1.0),
        1 => (pts[0].clone(), 0.0),
        k => {
            let p0 = &pts[0];
            let d: Vec<DVector<f64>> = pts[1..].iter().map(|p| p - p0).collect();
            let m = DMatrix::from_fn(k - 1, k - 1, |i, j| 2.0 * d[i].dot(&d[j]));
            let rhs = DVector::from_fn(k - 1, |i, _| d[i].norm_squared());
            let beta = m
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(k - 1));
            let mut c = p0.clone();
            for (b, di) in beta.iter().zip(&d) {
                c += di * *b;
            }
            let r = pts.iter().map(|p| (p - &c).norm()).fold(0.0, f64::max);
            (c, r)
        }
    }
}

/// `min_{a ∈ conv(V)} max_i ‖v_i − a‖` in the weighted Euclidean norm, by Kelley cuts.
fn kelley_restricted(vs: &[Element], weights: &[f64]) -> Result<Center> {
    let sw = DVector::from_iterator(weights.len(), weights.iter().map(|w| w.sqrt()));
    let pts: Vec<DVector<f64>> = vs.iter().map(|v| v.component_mul(&sw)).collect();
    let k = pts.len();
    let p = DMatrix::from_fn(sw.len(), k, |i, l| pts[l][i]);
    let eval = |alpha: &DVector<f64>| -> (f64, DVector<f64>) {
        let a = &p * alpha;
        let (mut best, mut arg) = (-1.0, 0);
        for (i, q) in pts.iter().enumerate() {
            let d = (q - &a).norm();
            if d > best {
                best = d;
                arg = i;
            }
        }
        let diff = &pts[arg] - &a;
        let g = if best > 0.0 { -(p.transpose() * diff) / best } else { DVector::zeros(k) };
        (best, g)
    };
    let mut lp = LinearProgram::minimize((0..k).map(|_| 0.0).chain(std::iter::once(1.0)).collect());
    lp.set_free(k);
    lp.add_constraint((0..k).map(|_| 1.0).chain(std::iter::once(0.0)).collect(), Relation::Eq, 1.0);
    let mut alpha = DVector::from_element(k, 1.0 / k as f64);
    let mut best = (f64::INFINITY, alpha.clone());
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let (f, g) = eval(&alpha);
        if f < best.0 {
            best = (f, alpha.clone());
        }
        if best.0 - lower <= 1e-10 * (1.0 + best.0) {
            break;
        }
        // t ≥ f + g·(α − α_k)
        let mut row: Vec<f64> = g.iter().copied().collect();
        row.push(-1.0);
        lp.add_constraint(row, Relation::Le, g.dot(&alpha) - f);
        let rep = lp_optimal(solve_lp(&lp)?, "restricted radius cutting plane")?;
        lower = lower.max(rep.objective_value);
        alpha = DVector::from_column_slice(&rep.solution[..k]);
    }
    let center = &p * &best.1;
    Ok(Center {
        center: center.iter().zip(sw.iter()).map(|(a, s)| a / s).collect(),
        radius: best.0,
        exact: best.0 - lower <= 1e-8 * (1.0 + best.0),
    })
}

/// Weighted `L_1` centre by LP; `restricted` keeps the centre in the hull.
fn l1_center(vs: &[Element], weights: &[f64], restricted: bool) -> Result<Center> {
    let n = weights.len();
    let k = vs.len();
    // variables: centre parameters (n free, or k on the simplex), r, u_{ik} ≥ 0
    let cp = if restricted { k } else { n };
    let r_ix = cp;
    let u0 = cp + 1;
    let width = u0 + k * n;
    let mut obj = vec![0.0; width];
    obj[r_ix] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    if restricted {
        let mut row = vec![0.0; width];
        row[..k].iter_mut().for_each(|x| *x = 1.0);
        lp.add_constraint(row, Relation::Eq, 1.0);
    } else {
        for j in 0..n {
            lp.set_free(j);
        }
    }
    lp.set_free(r_ix);
    let coord = |c: usize| -> Vec<(usize, f64)> {
        if restricted {
            (0..k).map(|l| (l, vs[l][c])).collect()
        } else {
            vec![(c, 1.0)]
        }
    };
    for (i, v) in vs.iter().enumerate() {
        let mut sum = vec![0.0; width];
        for c in 0..n {
            let u = u0 + i * n + c;
            // ±(v_c − a_c) ≤ u
            let mut a = vec![0.0; width];
            let mut b = vec![0.0; width];
            for (ix, val) in coord(c) {
                a[ix] -= val;
                b[ix] += val;
            }
            a[u] = -1.0;
            b[u] = -1.0;
            lp.add_constraint(a, Relation::Le, -v[c]);
            lp.add_constraint(b, Relation::Le, v[c]);
            sum[u] = weights[c];
        }
        sum[r_ix] = -1.0;
        lp.add_constraint(sum, Relation::Le, 0.0);
    }
    let rep = lp_optimal(solve_lp(&lp)?, "L1 centre")?;
    let center: Vec<f64> = if restricted {
        (0..n).map(|c| (0..k).map(|l| rep.solution[l] * vs[l][c]).sum()).collect()
    } else {
        rep.solution[..n].to_vec()
    };
    Ok(Center {
        center,
        radius: rep.objective_value,
        exact: true,
    })
}

/// `K_w = {x : M x = w, dist(x, V) ≤ ε}`.
#[derive(Debug, Clone)]
pub enum Kw {
    Empty,
    /// `V ∩ N ≠ {0}`; `direction` is a unit element of the intersection.
    Unbounded { direction: Vec<f64> },
    Set(PolytopeSet),
}

pub fn build_kw(m: &MeasurementOperator, v: &Subspace, eps: f64, w: &[f64]) -> Result<Kw> {
    let space = m.space().clone();
    crate::error::check_len("measurement vector", m.m(), w.len())?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(RecovError::invalid(format!("tolerance must be finite and nonnegative, got {eps}")));
    }
    match m.check_injective_on(v) {
        Ok(()) => {}
        Err(RecovError::Intersection { witness }) => return Ok(Kw::Unbounded { direction: witness }),
        Err(e) => return Err(e),
    }
    match space.kind() {
        NormKind::Sup => {
            let (big_n, n) = v.basis().shape();
            let width = big_n + n;
            let mut h = HRep {
                n_aux: n,
                equalities: Vec::new(),
                inequalities: Vec::new(),
            };
            for j in 0..m.m() {
                let mut row: Vec<f64> = m.pairing().row(j).iter().copied().collect();
                row.resize(width, 0.0);
                h.equalities.push((row, w[j]));
            }
            for i in 0..big_n {
                // ±(x_i − (V c)_i) ≤ ε
                for sign in [1.0, -1.0] {
                    let mut row = vec![0.0; width];
                    row[i] = sign;
                    for k in 0..n {
                        row[big_n + k] = -sign * v.basis()[(i, k)];
                    }
                    h.inequalities.push((row, eps));
                }
            }
            let set = PolytopeSet {
                space,
                rep: Representation::Halfspaces(h),
            };
            if set.is_feasible()? {
                Ok(Kw::Set(set))
            } else {
                Ok(Kw::Empty)
            }
        }
        k if is_l2(k) => hilbert_kw(m, v, eps, w),
        other => Err(RecovError::Precondition(format!(
            "consistent-set geometry is built for sup-norm and Hilbert ambients, not {other:?}"
        ))),
    }
}

fn hilbert_kw(m: &MeasurementOperator, v: &Subspace, eps: f64, w: &[f64]) -> Result<Kw> {
    let space = m.space().clone();
    let big_n = space.dim();
    let sw = DVector::from_iterator(big_n, space.weights().iter().map(|x| x.sqrt()));
    let hf = m.hilbert_factor();
    // whitened coordinates y = W^{1/2} x; the data fix y0 up to the null directions zn
    let y0 = hf.least_norm(w).component_mul(&sw);
    let zn = null_space(&hf.q.transpose());
    let vs = DMatrix::from_fn(big_n, v.dim(), |i, k| v.basis()[(i, k)] * sw[i]);
    let (vq, _) = orthonormal_columns(&vs)?;
    let proj = |y: &DMatrix<f64>| y - &vq * (vq.transpose() * y);
    let py0 = proj(&DMatrix::from_column_slice(big_n, 1, y0.as_slice())).column(0).into_owned();
    let d = zn.ncols();
    let (t_star, e2, h) = if d == 0 {
        (DVector::zeros(0), py0.norm_squared(), DMatrix::zeros(0, 0))
    } else {
        let a = proj(&zn);
        let h = a.transpose() * &a;
        let b = a.transpose() * &py0;
        let t = -h
            .clone()
            .cholesky()
            .ok_or_else(|| RecovError::solver("model and null space are numerically intersecting", vec![]))?
            .solve(&b);
        let e2 = (py0.norm_squared() + b.dot(&t)).max(0.0);
        (t, e2, h)
    };
    if e2 > eps * eps * (1.0 + 1e-12) + 1e-24 {
        return Ok(Kw::Empty);
    }
    let slack = (eps * eps - e2).max(0.0);
    let center_y = &y0 + &zn * &t_star;
    let center = center_y.component_div(&sw);
    let axes = if d == 0 {
        DMatrix::zeros(big_n, 0)
    } else {
        let eig = h.symmetric_eigen();
        let mut ax = &zn * &eig.eigenvectors;
        for (k, lam) in eig.eigenvalues.iter().enumerate() {
            let len = (slack / lam.max(f64::MIN_POSITIVE)).sqrt();
            ax.column_mut(k).scale_mut(len);
        }
        DMatrix::from_fn(big_n, d, |i, k| ax[(i, k)] / sw[i])
    };
    Ok(Kw::Set(PolytopeSet {
        space,
        rep: Representation::Ellipsoid(Ellipsoid { center, axes }),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::mu_n_v;
    use crate::measure::MeasurementKind;
    use crate::spaces::SubspacePreset;
    use rand::Rng;

    fn seq(n: usize, kind: NormKind) -> Arc<Space> {
        Arc::new(Space::sequence(n, kind).unwrap())
    }

    fn simplex_t() -> PolytopeSet {
        let vs = [[1., 1., 0.], [1., 0., 1.], [0., 1., 1.]];
        PolytopeSet::from_vertices(seq(3, NormKind::Sup), vs.iter().map(|v| DVector::from_row_slice(v)).collect())
            .unwrap()
    }

    fn example_kw(eps: f64, w: [f64; 2]) -> Kw {
        let s = seq(4, NormKind::Sup);
        let v = Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0] }, s.clone()).unwrap();
        let g = DMatrix::from_row_slice(2, 4, &[1., 0., 0., 0., 0., 1., 1., 1.]);
        let m = MeasurementOperator::from_pairing(s, g, MeasurementKind::General).unwrap();
        build_kw(&m, &v, eps, &w).unwrap()
    }

    #[test]
    fn simplex_geometry() {
        let t = simplex_t();
        assert!((t.diameter().unwrap().value - 1.0).abs() < 1e-12);
        let c = t.chebyshev_center_radius().unwrap();
        assert!((c.radius - 0.5).abs() < 1e-12);
        assert_eq!(c.center, vec![0.5, 0.5, 0.5]);
        let rc = t.restricted_radius().unwrap();
        assert!((rc.radius - 2.0 / 3.0).abs() < 1e-12);
        for x in rc.center {
            assert!((x - 2.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn consistent_set_is_the_simplex() {
        let Kw::Set(k) = example_kw(1.0, [0.0, 2.0]) else { panic!("expected a set") };
        let mut vs: Vec<Vec<f64>> = k.vertices().unwrap().iter().map(|v| v.iter().map(|x| x.round()).collect()).collect();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vs, vec![vec![0., 0., 1., 1.], vec![0., 1., 0., 1.], vec![0., 1., 1., 0.]]);
        assert!((k.diameter().unwrap().value - 1.0).abs() < 1e-12);
        assert!((k.chebyshev_center_radius().unwrap().radius - 0.5).abs() < 1e-12);
        assert!((k.restricted_radius().unwrap().radius - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn far_data_gives_empty_and_zero_tolerance_a_point() {
        assert!(matches!(example_kw(1.0, [0.0, 7.0]), Kw::Empty));
        let Kw::Set(k) = example_kw(0.0, [0.5, 0.0]) else { panic!() };
        let vs = k.vertices().unwrap();
        assert_eq!(vs.len(), 1);
        assert!((&vs[0] - DVector::from_row_slice(&[0.5, 0., 0., 0.])).amax() < 1e-12);
        assert_eq!(k.diameter().unwrap().value, 0.0);
    }

    #[test]
    fn cross_polytope_and_symmetric_sets() {
        let s = seq(3, NormKind::Sup);
        let vs: Vec<Element> = (0..3)
            .flat_map(|i| [1.0, -1.0].map(|sg| s.unit_vector(i) * sg))
            .collect();
        let p = PolytopeSet::from_vertices(s, vs).unwrap();
        assert_eq!(p.diameter().unwrap().value, 2.0);
        let c = p.chebyshev_center_radius().unwrap();
        assert_eq!(c.center, vec![0.0; 3]);
        assert_eq!(c.radius, 1.0);
        assert!((p.restricted_radius().unwrap().radius - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [NormKind::Hilbert, NormKind::Lp(1.0)] {
            let s = seq(3, kind);
            let half: Vec<Element> = (0..3).map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))).collect();
            let vs: Vec<Element> = half.iter().flat_map(|v| [v.clone(), -v]).collect();
            let maxn = vs.iter().map(|v| s.norm(v).unwrap()).fold(0.0, f64::max);
            let p = PolytopeSet::from_vertices(s, vs).unwrap();
            let c = p.chebyshev_center_radius().unwrap();
            let rc = p.restricted_radius().unwrap();
            assert!((c.radius - maxn).abs() < 1e-7, "{kind:?}: {} vs {maxn}", c.radius);
            assert!((rc.radius - maxn).abs() < 1e-7, "{kind:?}: {} vs {maxn}", rc.radius);
        }
    }

    #[test]
    fn radius_of_model_consistent_set_matches_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for kind in [NormKind::Sup, NormKind::Hilbert] {
            for _ in 0..3 {
                let s = seq(6, kind);
                let v = Subspace::new(s.clone(), DMatrix::from_fn(6, 1, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
                let g = DMatrix::from_fn(3, 6, |_, _| rng.gen_range(-1.0..1.0));
                let m = MeasurementOperator::from_pairing(s, g, MeasurementKind::General).unwrap();
                let w = m.apply(&v.element(&DVector::from_element(1, 0.7))).unwrap();
                let eps = 0.3;
                let Kw::Set(k) = build_kw(&m, &v, eps, w.as_slice()).unwrap() else { panic!() };
                let rad = k.chebyshev_center_radius().unwrap().radius;
                let mu = mu_n_v(&m, &v).unwrap().upper().unwrap();
                assert!((rad - eps * mu).abs() <= 1e-6 * (1.0 + rad), "{kind:?}: {rad} vs {}", eps * mu);
            }
        }
    }

    #[test]
    fn hilbert_ellipsoid_shrinks_with_data_error() {
        let s = seq(5, NormKind::Hilbert);
        let v = Subspace::preset(&SubspacePreset::Coordinate { indices: vec![0] }, s.clone()).unwrap();
        let g = DMatrix::from_row_slice(2, 5, &[1., 1., 0., 0., 0., 0., 1., 1., 1., 0.]);
        let m = MeasurementOperator::from_pairing(s, g, MeasurementKind::General).unwrap();
        let Kw::Set(a) = build_kw(&m, &v, 1.0, &[1.0, 0.0]).unwrap() else { panic!() };
        let Kw::Set(b) = build_kw(&m, &v, 1.0, &[1.0, 0.5]).unwrap() else { panic!() };
        assert!(b.diameter().unwrap().value < a.diameter().unwrap().value);
    }

    fn random_vertex_set(rng: &mut ChaCha8Rng, kind: NormKind) -> PolytopeSet {
        let k = rng.gen_range(1..6);
        let s = seq(3, kind);
        let vs = (0..k).map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))).collect();
        PolytopeSet::from_vertices(s, vs).unwrap()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn radius_chain(seed in 0u64..100_000, kind_ix in 0usize..3) {
            let kind = [NormKind::Sup, NormKind::Hilbert, NormKind::Lp(1.0)][kind_ix];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_vertex_set(&mut rng, kind);
            let d = p.diameter().unwrap().value;
            let r = p.chebyshev_center_radius().unwrap().radius;
            let rc = p.restricted_radius().unwrap().radius;
            let tol = 1e-7 * (1.0 + d);
            proptest::prop_assert!(d + tol >= rc && rc + tol >= r && r + tol >= 0.5 * d, "{d} {rc} {r}");
            // any point of the set is within twice the Chebyshev radius of every point
            let vs = p.vertices().unwrap();
            let a = &vs[0];
            let far = vs.iter().map(|v| p.space().norm(&(v - a)).unwrap()).fold(0.0, f64::max);
            proptest::prop_assert!(far <= 2.0 * r + tol);
        }

        #[test]
        fn symmetric_slices_are_no_wider_than_the_centre_slice(seed in 0u64..100_000) {
            // S = cube in ℓ∞³, sliced by x₁ + x₂ + x₃ = w
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = seq(3, NormKind::Sup);
            let slice = |w: f64| -> f64 {
                let mut ineq = Vec::new();
                for i in 0..3 {
                    for sg in [1.0, -1.0] {
                        let mut row = vec![0.0; 3];
                        row[i] = sg;
                        ineq.push((row, 1.0));
                    }
                }
                let h = HRep { n_aux: 0, equalities: vec![(vec![1.0; 3], w)], inequalities: ineq };
                PolytopeSet::from_halfspaces(s.clone(), h).unwrap().diameter().unwrap().value
            };
            let w = rng.gen_range(-2.9..2.9);
            proptest::prop_assert!(slice(w) <= slice(0.0) + 1e-12);
        }
    }
}
