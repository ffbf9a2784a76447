//! Angle constants `μ(V, N)`, `μ(N, V)` between the model space and the null
//! space of the measurements, and the radius bounds they imply.
//!
//! `μ(X, Y) = sup_{x ∈ X} ‖x‖ / dist(x, Y)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxMap;
use crate::error::{RecovError, Result};
use crate::linalg::{orthonormal_columns, singular_extremes, PivotedQr};
use crate::measure::{MBall, MeasurementOperator};
use crate::solvers::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::spaces::{dist_to_subspace, Element, NormKind, Space, Subspace};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Mu {
    Finite { value: f64, certificate: Vec<f64> },
    /// The exact value is not computable in this ambient; it lies in `[lower, upper]`.
    Interval { lower: f64, upper: f64, certificate: Vec<f64> },
    /// The spaces intersect; `witness` is a unit element of the intersection.
    Infinite { witness: Vec<f64> },
}

impl Mu {
    pub fn lower(&self) -> Option<f64> {
        match self {
            Mu::Finite { value, .. } => Some(*value),
            Mu::Interval { lower, .. } => Some(*lower),
            Mu::Infinite { .. } => None,
        }
    }

    /// Exact value or the upper end of the interval; `None` when infinite.
    pub fn upper(&self) -> Option<f64> {
        match self {
            Mu::Finite { value, .. } => Some(*value),
            Mu::Interval { upper, .. } => Some(*upper),
            Mu::Infinite { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mu::Finite { .. })
    }

    pub fn certificate(&self) -> Option<&[f64]> {
        match self {
            Mu::Finite { certificate, .. } | Mu::Interval { certificate, .. } => Some(certificate),
            Mu::Infinite { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleReport {
    pub mu_v_n: Mu,
    pub mu_n_v: Mu,
    pub method: String,
}

pub fn angle_report(m: &MeasurementOperator, v: &Subspace) -> Result<AngleReport> {
    let mu_v_n = mu_v_n(m, v)?;
    let mu_n_v = mu_n_v_given(m, v, Some(&mu_v_n))?;
    let method = match (m.space().kind(), m.closed_form()) {
        (NormKind::Sup, Some(MBall::MaxAbs)) => "per-coordinate LP over the cube ball",
        (NormKind::Sup, _) => "per-coordinate LP with lifted coset variables",
        (k, _) if is_l2(k) => "singular values of the whitened restriction",
        _ => "interval: multistart lower bound with structural upper bound",
    };
    Ok(AngleReport {
        mu_v_n,
        mu_n_v,
        method: method.to_string(),
    })
}

fn is_l2(kind: NormKind) -> bool {
    kind.is_hilbert() || kind == NormKind::Lp(2.0)
}

fn intersection_witness(m: &MeasurementOperator, v: &Subspace) -> Result<Option<Mu>> {
    match m.check_injective_on(v) {
        Ok(()) => Ok(None),
        Err(RecovError::Intersection { witness }) => Ok(Some(Mu::Infinite { witness })),
        Err(e) => Err(e),
    }
}

/// Index of the largest value, first on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `μ(V, N) = ‖M_V^{-1}‖ = sup_{v ∈ V} ‖v‖ / ‖M v‖_M`.
pub fn mu_v_n(m: &MeasurementOperator, v: &Subspace) -> Result<Mu> {
    if let Some(inf) = intersection_witness(m, v)? {
        return Ok(inf);
    }
    let space = m.space();
    let b = m.restricted(v)?;
    match space.kind() {
        NormKind::Sup => mu_v_n_sup(m, v, &b),
        k if is_l2(k) => {
            let (value, cert) = hilbert_mu_v_n(m, v)?;
            Ok(Mu::Finite {
                value,
                certificate: cert.iter().copied().collect(),
            })
        }
        _ => mu_v_n_convex(m, v, &b),
    }
}

fn mu_v_n_sup(m: &MeasurementOperator, v: &Subspace, b: &DMatrix<f64>) -> Result<Mu> {
    let vb = v.basis();
    let (big_n, n) = vb.shape();
    let rows = b.nrows();
    let cube = m.closed_form() == Some(MBall::MaxAbs);
    // cube: c free, y ∈ [−1,1]^m, B c − y = 0.  general: c free, x ∈ [−1,1]^N, B c − G x = 0
    let extra = if cube { rows } else { big_n };
    let mut base = LinearProgram::maximize(vec![0.0; n + extra]);
    for k in 0..n {
        base.set_free(k);
    }
    for e in 0..extra {
        base.set_bounds(n + e, -1.0, 1.0);
    }
    for j in 0..rows {
        let mut row: Vec<f64> = b.row(j).iter().copied().collect();
        if cube {
            let mut y = vec![0.0; rows];
            y[j] = -1.0;
            row.extend(y);
        } else {
            row.extend(m.pairing().row(j).iter().map(|g| -g));
        }
        base.add_constraint(row, Relation::Eq, 0.0);
    }
    let results: Vec<(f64, DVector<f64>)> = (0..big_n)
        .into_par_iter()
        .map(|i| {
            let mut lp = base.clone();
            for k in 0..n {
                lp.objective[k] = vb[(i, k)];
            }
            let rep = solve_lp(&lp)?;
            match rep.status {
                LpStatus::Optimal => Ok((rep.objective_value, DVector::from_column_slice(&rep.solution[..n]))),
                other => Err(RecovError::solver(
                    format!("angle program for coordinate {i} returned {other:?}"),
                    vec![rep.iterations as f64],
                )),
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let best = argmax(&values);
    let cert = v.element(&results[best].1);
    Ok(Mu::Finite {
        value: values[best],
        certificate: cert.iter().copied().collect(),
    })
}

/// `1/σ_min` of the restriction in whitened coordinates, with the minimising element.
fn hilbert_mu_v_n(m: &MeasurementOperator, v: &Subspace) -> Result<(f64, Element)> {
    let space = m.space();
    let sw: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(space.dim(), v.dim(), |i, k| v.basis()[(i, k)] * sw[i]);
    let (qv, _) = orthonormal_columns(&a)?;
    let t = m.hilbert_factor().q.transpose() * &qv;
    let (smin, _, u) = singular_extremes(&t);
    let e = &qv * u;
    let cert = DVector::from_iterator(e.len(), e.iter().zip(&sw).map(|(x, s)| x / s));
    Ok((1.0 / smin, cert))
}

/// Upper bound `(Σ‖v_k‖²)^{1/2} (Σ‖l_j‖*²)^{1/2} / σ_min(B)` valid in any norm.
fn structural_upper(m: &MeasurementOperator, v: &Subspace, b: &DMatrix<f64>) -> Result<f64> {
    let space = m.space();
    let mut sv = 0.0;
    for k in 0..v.dim() {
        sv += space.norm(&v.basis().column(k).into_owned())?.powi(2);
    }
    let mut sl = 0.0;
    for j in 0..m.m() {
        sl += space.dual_norm(&m.pairing().row(j).iter().copied().collect::<Vec<_>>())?.powi(2);
    }
    let (smin, _, _) = singular_extremes(b);
    Ok(sv.sqrt() * sl.sqrt() / smin)
}

const VERTEX_CAP: usize = 200_000;

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

/// Vertices of `{c : |B c|_∞ ≤ 1}` by basis enumeration.
fn cube_preimage_vertices(b: &DMatrix<f64>) -> Option<Vec<DVector<f64>>> {
    let (m, n) = b.shape();
    if binomial(m, n).saturating_mul(1 << n.min(20)) > VERTEX_CAP {
        return None;
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let sub = DMatrix::from_fn(n, n, |r, k| b[(idx[r], k)]);
        if let Some(lu) = Some(sub.lu()).filter(|lu| lu.is_invertible()) {
            for signs in 0..(1usize << n) {
                let rhs = DVector::from_fn(n, |r, _| if signs >> r & 1 == 0 { 1.0 } else { -1.0 });
                if let Some(c) = lu.solve(&rhs) {
                    if (b * &c).amax() <= 1.0 + 1e-9 {
                        out.push(c);
                    }
                }
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return Some(out);
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for r in k + 1..n {
                    idx[r] = idx[r - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mu_v_n_convex(m: &MeasurementOperator, v: &Subspace, b: &DMatrix<f64>) -> Result<Mu> {
    let space = m.space();
    let ratio = |c: &DVector<f64>| -> Result<f64> {
        let nv = space.norm(&v.element(c))?;
        let nz = m.m_norm((b * c).as_slice())?;
        Ok(if nz > 0.0 { nv / nz } else { f64::INFINITY })
    };
    if v.dim() == 1 {
        let c = DVector::from_element(1, 1.0);
        return Ok(Mu::Finite {
            value: ratio(&c)?,
            certificate: v.element(&c).iter().copied().collect(),
        });
    }
    if m.closed_form() == Some(MBall::MaxAbs) {
        if let Some(verts) = cube_preimage_vertices(b) {
            // a convex function on a polytope peaks at a vertex
            let mut best = (0.0, DVector::zeros(v.dim()));
            for c in verts {
                let val = space.norm(&v.element(&c))?;
                if val > best.0 {
                    best = (val, c);
                }
            }
            let r = ratio(&best.1)?;
            return Ok(Mu::Finite {
                value: r,
                certificate: v.element(&best.1).iter().copied().collect(),
            });
        }
    }
    let (lower, c) = pattern_search(v.dim(), 16, 0x6d75, |c| ratio(c))?;
    let upper = structural_upper(m, v, b)?.max(lower);
    Ok(Mu::Interval {
        lower,
        upper,
        certificate: v.element(&c).iter().copied().collect(),
    })
}

/// Multistart compass search maximising a scale-invariant ratio.
/// Objective evaluations allowed per multistart search.
const SEARCH_BUDGET: usize = 600;
/// Above this dimension the search moves along random directions.
const COORDINATE_SEARCH_MAX_DIM: usize = 12;

/// Multistart pattern search for `sup f` over unit vectors, within [`SEARCH_BUDGET`] evaluations.
fn pattern_search(
    dim: usize,
    starts: usize,
    seed: u64,
    f: impl Fn(&DVector<f64>) -> Result<f64>,
) -> Result<(f64, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::NEG_INFINITY, DVector::zeros(dim));
    let mut evals = 0usize;
    let per_start = (SEARCH_BUDGET / starts.max(1)).max(2 * dim.min(COORDINATE_SEARCH_MAX_DIM) + 1);
    for _ in 0..starts {
        let stop = evals + per_start;
        let mut c: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        c /= c.norm().max(1e-300);
        let mut val = f(&c)?;
        evals += 1;
        let mut step = 0.5;
        'search: while step > 1e-6 {
            let mut improved = false;
            let moves = if dim <= COORDINATE_SEARCH_MAX_DIM { dim } else { 2 * COORDINATE_SEARCH_MAX_DIM };
            for k in 0..moves {
                let dir: DVector<f64> = if dim <= COORDINATE_SEARCH_MAX_DIM {
                    DVector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 })
                } else {
                    let g: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                    &g / g.norm().max(1e-300)
                };
                for s in [step, -step] {
                    if evals >= stop {
                        break 'search;
                    }
                    let mut cand = &c + &dir * s;
                    let nrm = cand.norm();
                    if nrm == 0.0 {
                        continue;
                    }
                    cand /= nrm;
                    let cv = f(&cand)?;
                    evals += 1;
                    if cv > val {
                        c = cand;
                        val = cv;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if val > best.0 {
            best = (val, c);
        }
    }
    Ok(best)
}

/// `μ(N, V) = sup{‖η‖ : η ∈ N, dist(η, V) ≤ 1}`.
pub fn mu_n_v(m: &MeasurementOperator, v: &Subspace) -> Result<Mu> {
    mu_n_v_given(m, v, None)
}

fn mu_n_v_given(m: &MeasurementOperator, v: &Subspace, vn: Option<&Mu>) -> Result<Mu> {
    if let Some(inf) = intersection_witness(m, v)? {
        return Ok(inf);
    }
    let space = m.space();
    if m.m() == space.dim() {
        return Ok(Mu::Finite {
            value: 0.0,
            certificate: vec![0.0; space.dim()],
        });
    }
    match space.kind() {
        NormKind::Sup => mu_n_v_sup(m, v),
        k if is_l2(k) => {
            // principal angles are symmetric: μ(N, V) = μ(V, N), attained at P_N v
            let (value, v_cert) = hilbert_mu_v_n(m, v)?;
            let mv = m.apply(&v_cert)?;
            let mut eta = &v_cert - m.hilbert_factor().least_norm(mv.as_slice());
            if space.norm(&eta)? <= 1e-12 * space.norm(&v_cert)? {
                eta = m.null_basis().column(0).into_owned();
            }
            Ok(Mu::Finite {
                value,
                certificate: eta.iter().copied().collect(),
            })
        }
        _ => match vn {
            Some(vn) => mu_n_v_convex(m, v, vn),
            None => mu_n_v_convex(m, v, &mu_v_n(m, v)?),
        },
    }
}

fn mu_n_v_sup(m: &MeasurementOperator, v: &Subspace) -> Result<Mu> {
    // η = r + V c with r ∈ [−1,1]^N and G r + B c = 0
    let g = m.pairing();
    let b = m.restricted(v)?;
    let vb = v.basis();
    let (big_n, n) = vb.shape();
    let mut base = LinearProgram::maximize(vec![0.0; big_n + n]);
    for i in 0..big_n {
        base.set_bounds(i, -1.0, 1.0);
    }
    for k in 0..n {
        base.set_free(big_n + k);
    }
    for j in 0..m.m() {
        let mut row: Vec<f64> = g.row(j).iter().copied().collect();
        row.extend(b.row(j).iter().copied());
        base.add_constraint(row, Relation::Eq, 0.0);
    }
    let results: Vec<(f64, Element)> = (0..big_n)
        .into_par_iter()
        .map(|i| {
            let mut lp = base.clone();
            lp.objective[i] = 1.0;
            for k in 0..n {
                lp.objective[big_n + k] = vb[(i, k)];
            }
            let rep = solve_lp(&lp)?;
            match rep.status {
                LpStatus::Optimal => {
                    let r = DVector::from_column_slice(&rep.solution[..big_n]);
                    let c = DVector::from_column_slice(&rep.solution[big_n..]);
                    Ok((rep.objective_value, r + vb * c))
                }
                other => Err(RecovError::solver(
                    format!("null-space angle program for coordinate {i} returned {other:?}"),
                    vec![rep.iterations as f64],
                )),
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let best = argmax(&values);
    Ok(Mu::Finite {
        value: values[best],
        certificate: results[best].1.iter().copied().collect(),
    })
}

fn mu_n_v_convex(m: &MeasurementOperator, v: &Subspace, vn: &Mu) -> Result<Mu> {
    let space = m.space();
    let z = m.null_basis().clone();
    let ratio = |d: &DVector<f64>| -> Result<f64> {
        let eta = &z * d;
        let dist = dist_to_subspace(space, &eta, v)?;
        Ok(space.norm(&eta)? / dist.value.max(1e-300))
    };
    let (sampled, d) = pattern_search(z.ncols(), 8, 0x6e76, |d| ratio(d))?;
    let lower = sampled.max(1.0).max(vn.lower().unwrap_or(1.0) - 1.0);
    let upper = 1.0 + vn.upper().unwrap_or(f64::INFINITY);
    Ok(Mu::Interval {
        lower,
        upper: upper.max(lower),
        certificate: (&z * d).iter().copied().collect(),
    })
}

/// `μ(X, Y)` for two subspaces given by bases, in sup-norm or Hilbert ambients.
pub fn mu_between(space: &Space, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Mu> {
    let big_n = space.dim();
    crate::error::check_len("basis rows", big_n, x.nrows())?;
    crate::error::check_len("basis rows", big_n, y.nrows())?;
    let (nx, ny) = (x.ncols(), y.ncols());
    let mut joint = DMatrix::zeros(big_n, nx + ny);
    joint.columns_mut(0, nx).copy_from(x);
    joint.columns_mut(nx, ny).copy_from(y);
    let qr = PivotedQr::new(&joint);
    if qr.rank() < nx + ny {
        let ns = crate::linalg::null_space(&joint);
        let a = ns.column(0).rows(0, nx).into_owned();
        let w = x * a;
        let nw = space.norm_unchecked(w.as_slice());
        return Ok(Mu::Infinite {
            witness: w.iter().map(|t| t / nw).collect(),
        });
    }
    match space.kind() {
        NormKind::Sup => {
            // a, b free; s ∈ [−1,1]^N; X a − Y b − s = 0; maximise (X a)_i
            let mut base = LinearProgram::maximize(vec![0.0; nx + ny + big_n]);
            for k in 0..nx + ny {
                base.set_free(k);
            }
            for i in 0..big_n {
                base.set_bounds(nx + ny + i, -1.0, 1.0);
                let mut row = vec![0.0; nx + ny + big_n];
                for k in 0..nx {
                    row[k] = x[(i, k)];
                }
                for k in 0..ny {
                    row[nx + k] = -y[(i, k)];
                }
                row[nx + ny + i] = -1.0;
                base.add_constraint(row, Relation::Eq, 0.0);
            }
            let results: Vec<(f64, Element)> = (0..big_n)
                .into_par_iter()
                .map(|i| {
                    let mut lp = base.clone();
                    for k in 0..nx {
                        lp.objective[k] = x[(i, k)];
                    }
                    let rep = solve_lp(&lp)?;
                    if rep.status != LpStatus::Optimal {
                        return Err(RecovError::solver(
                            format!("subspace angle program returned {:?}", rep.status),
                            vec![rep.iterations as f64],
                        ));
                    }
                    Ok((rep.objective_value, x * DVector::from_column_slice(&rep.solution[..nx])))
                })
                .collect::<Result<_>>()?;
            let values: Vec<f64> = results.iter().map(|r| r.0).collect();
            let best = argmax(&values);
            Ok(Mu::Finite {
                value: values[best],
                certificate: results[best].1.iter().copied().collect(),
            })
        }
        k if is_l2(k) => {
            let sw: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
            let scale = |a: &DMatrix<f64>| DMatrix::from_fn(big_n, a.ncols(), |i, k| a[(i, k)] * sw[i]);
            let (qx, _) = orthonormal_columns(&scale(x))?;
            let (qy, _) = orthonormal_columns(&scale(y))?;
            let t = qy.transpose() * &qx;
            let svd = t.clone().svd(false, true);
            let s = &svd.singular_values;
            let k = argmax(s.as_slice());
            let cos = s[k].min(1.0);
            let u = svd.v_t.expect("requested").row(k).transpose();
            let e = &qx * u;
            Ok(Mu::Finite {
                value: 1.0 / (1.0 - cos * cos).sqrt(),
                certificate: e.iter().zip(&sw).map(|(a, s)| a / s).collect(),
            })
        }
        other => Err(RecovError::Precondition(format!(
            "subspace angles are computed for sup-norm and Hilbert ambients only, not {other:?}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RadiusBounds {
    Bounds { lower: f64, upper: f64, exact: bool },
    /// No element is consistent with the data and the model tolerance.
    Empty,
    Infinite,
}

/// Bounds on `rad(K_w)` (or on the worst case over `w` when `w` is absent).
pub fn radius_bounds(map: &ApproxMap, mu_n_v: &Mu, eps: f64, w: Option<&[f64]>) -> Result<RadiusBounds> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(RecovError::invalid(format!("tolerance must be finite and nonnegative, got {eps}")));
    }
    let e = match w {
        Some(w) => Some(map.approx_error(w)?),
        None => None,
    };
    if let Some(e) = e {
        if e > eps * (1.0 + 1e-12) + 1e-12 {
            return Ok(RadiusBounds::Empty);
        }
    }
    let (Some(lo), Some(hi)) = (mu_n_v.lower(), mu_n_v.upper()) else {
        return Ok(RadiusBounds::Infinite);
    };
    if eps == 0.0 {
        return Ok(RadiusBounds::Bounds {
            lower: 0.0,
            upper: 0.0,
            exact: true,
        });
    }
    Ok(match e {
        None => RadiusBounds::Bounds {
            lower: eps * lo,
            upper: 2.0 * eps * hi,
            exact: false,
        },
        Some(e) if e <= 1e-9 => RadiusBounds::Bounds {
            lower: eps * lo,
            upper: eps * hi,
            exact: mu_n_v.is_exact(),
        },
        Some(e) => RadiusBounds::Bounds {
            lower: 0.5 * (eps - e).max(0.0) * lo,
            upper: 2.0 * eps * hi,
            exact: false,
        },
    })
}
