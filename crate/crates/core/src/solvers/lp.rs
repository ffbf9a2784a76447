//! Dense bounded-variable revised simplex.
//!
//! Every constraint row `Σ a_j x_j (≤|=|≥) b` gets one slack column whose sign
//! restriction encodes the relation, so the working form is always
//! `A x = b, lo ≤ x ≤ hi`. Variables may have any combination of finite and
//! infinite bounds; nonbasic variables sit at a bound (or at zero when free).
//! Phase one minimises the sum of artificials; phase two runs on the original
//! cost. Pricing is Dantzig's rule and falls back to the least-index rule
//! after a run of degenerate pivots, which rules out cycling.

use nalgebra::{DMatrix, DVector};

use crate::error::{RecovError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize objective·x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable `(lower, upper)`; defaults to `(0, +∞)`.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = (f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(RecovError::invalid("linear program has no variables"));
        }
        if self.bounds.len() != n {
            return Err(RecovError::DimensionMismatch {
                what: "LP bounds",
                expected: n,
                got: self.bounds.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(RecovError::invalid("non-finite objective coefficient"));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(RecovError::DimensionMismatch {
                    what: "LP constraint row",
                    expected: n,
                    got: row.coeffs.len(),
                });
            }
            if row.coeffs.iter().any(|a| !a.is_finite()) || !row.rhs.is_finite() {
                return Err(RecovError::invalid(format!("non-finite data in row {i}")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(RecovError::invalid(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for row in &self.constraints {
            let ax: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match row.relation {
                Relation::Le => (ax - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - ax).max(0.0),
                Relation::Eq => (ax - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (&v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: LpStatus,
    pub solution: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    /// Row multipliers `y` in the program's own sense: `objective − Aᵀy` are the reduced costs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `|primal objective − dual objective|` with the dual rebuilt from the
    /// reported multipliers. Infinite when the multipliers are not dual feasible.
    pub fn duality_gap(&self, lp: &LinearProgram) -> f64 {
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let tol = 1e-9;
        let mut dual_obj: f64 = lp
            .constraints
            .iter()
            .zip(&self.duals)
            .map(|(r, y)| flip * r.rhs * y)
            .sum();
        // slack columns: reduced cost of row i's slack is −y_i in minimisation form
        for (row, &y) in lp.constraints.iter().zip(&self.duals) {
            let d = -flip * y;
            let (lo, hi) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => continue,
            };
            match bound_term(d, lo, hi, tol) {
                Some(t) => dual_obj += t,
                None => return f64::INFINITY,
            }
        }
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let d = flip * self.reduced_costs[j];
            match bound_term(d, lo, hi, tol) {
                Some(t) => dual_obj += t,
                None => {
                    if d.abs() <= tol {
                        dual_obj += d * self.solution[j];
                    } else {
                        return f64::INFINITY;
                    }
                }
            }
        }
        (flip * self.objective_value - dual_obj).abs()
    }

    /// Largest `|reduced cost| × distance to the bound it should be at`.
    pub fn complementary_slackness(&self, lp: &LinearProgram) -> f64 {
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut worst = 0.0_f64;
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let d = flip * self.reduced_costs[j];
            let x = self.solution[j];
            let gap = if d > 0.0 { x - lo } else { hi - x };
            if gap.is_finite() {
                worst = worst.max(d.abs() * gap.abs());
            } else if d.abs() > 1e-9 {
                return f64::INFINITY;
            }
        }
        for (row, &y) in lp.constraints.iter().zip(&self.duals) {
            let ax: f64 = row.coeffs.iter().zip(&self.solution).map(|(a, v)| a * v).sum();
            let slack = row.rhs - ax;
            if row.relation != Relation::Eq {
                worst = worst.max(y.abs() * slack.abs());
            }
        }
        worst
    }
}

fn bound_term(d: f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    if d > tol {
        lo.is_finite().then_some(d * lo)
    } else if d < -tol {
        hi.is_finite().then_some(d * hi)
    } else if lo.is_finite() && d >= 0.0 {
        Some(d * lo)
    } else if hi.is_finite() && d <= 0.0 {
        Some(d * hi)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Defaults to `max(1000, 30·(rows + columns))`.
    pub max_iterations: Option<usize>,
    pub refactor_every: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Consecutive degenerate pivots before switching to the least-index rule.
    pub degenerate_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: None,
            refactor_every: 50,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            degenerate_limit: 40,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<SolveReport> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<SolveReport> {
    lp.validate()?;
    let mut s = Simplex::build(lp, opts);
    let n = lp.num_vars();

    if s.num_artificial > 0 {
        let phase1: Vec<f64> = (0..s.ncols)
            .map(|j| if j >= s.first_artificial { 1.0 } else { 0.0 })
            .collect();
        s.cost = phase1;
        s.run()?;
        let infeas: f64 = (s.first_artificial..s.ncols).map(|j| s.x[j]).sum();
        let scale = 1.0 + s.b.amax();
        if infeas > 1e-8 * scale {
            return Ok(SolveReport {
                status: LpStatus::Infeasible,
                solution: s.x[..n].to_vec(),
                objective_value: f64::NAN,
                iterations: s.iterations,
                duals: vec![0.0; lp.constraints.len()],
                reduced_costs: vec![0.0; n],
            });
        }
        for j in s.first_artificial..s.ncols {
            s.hi[j] = 0.0;
            if !matches!(s.state[j], VarState::Basic(_)) {
                s.x[j] = 0.0;
                s.state[j] = VarState::Lower;
            }
        }
    }

    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; s.ncols];
    for j in 0..n {
        cost[j] = flip * lp.objective[j];
    }
    s.cost = cost;
    let outcome = s.run()?;
    s.refactor()?;

    let solution = s.x[..n].to_vec();
    let objective_value: f64 = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    if outcome == Outcome::Unbounded {
        return Ok(SolveReport {
            status: LpStatus::Unbounded,
            solution,
            objective_value: flip * f64::NEG_INFINITY,
            iterations: s.iterations,
            duals: vec![0.0; lp.constraints.len()],
            reduced_costs: vec![0.0; n],
        });
    }

    let y = s.duals();
    let duals: Vec<f64> = y.iter().map(|v| flip * v).collect();
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| lp.objective[j] - s.a.column(j).dot(&DVector::from_column_slice(&duals)))
        .collect();
    Ok(SolveReport {
        status: LpStatus::Optimal,
        solution,
        objective_value,
        iterations: s.iterations,
        duals,
        reduced_costs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex<'o> {
    opts: &'o LpOptions,
    m: usize,
    ncols: usize,
    first_artificial: usize,
    num_artificial: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    binv: DMatrix<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl<'o> Simplex<'o> {
    fn build(lp: &LinearProgram, opts: &'o LpOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();
        let slack_rows: Vec<usize> = (0..m)
            .filter(|&i| lp.constraints[i].relation != Relation::Eq)
            .collect();
        let n_struct = n + slack_rows.len();

        let mut lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();
        let mut hi: Vec<f64> = lp.bounds.iter().map(|b| b.1).collect();
        let mut slack_of_row = vec![usize::MAX; m];
        for (k, &i) in slack_rows.iter().enumerate() {
            slack_of_row[i] = n + k;
            match lp.constraints[i].relation {
                Relation::Le => {
                    lo.push(0.0);
                    hi.push(f64::INFINITY);
                }
                _ => {
                    lo.push(f64::NEG_INFINITY);
                    hi.push(0.0);
                }
            }
        }

        let mut x = vec![0.0; n_struct];
        let mut state = vec![VarState::Lower; n_struct];
        for j in 0..n_struct {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::Lower;
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::Upper;
            } else {
                x[j] = 0.0;
                state[j] = VarState::Free;
            }
        }

        let b = DVector::from_iterator(m, lp.constraints.iter().map(|r| r.rhs));
        let mut resid = b.clone();
        for i in 0..m {
            let row = &lp.constraints[i].coeffs;
            for j in 0..n {
                resid[i] -= row[j] * x[j];
            }
            if slack_of_row[i] != usize::MAX {
                resid[i] -= x[slack_of_row[i]];
            }
        }

        // crash basis: slack where it can absorb the residual, artificial otherwise
        let mut head = vec![0usize; m];
        let mut art_rows = Vec::new();
        let mut art_sign = Vec::new();
        for i in 0..m {
            let s = slack_of_row[i];
            let fits = s != usize::MAX && {
                let v = x[s] + resid[i];
                v >= lo[s] && v <= hi[s]
            };
            if fits {
                x[s] += resid[i];
                state[s] = VarState::Basic(i);
                head[i] = s;
            } else {
                art_rows.push(i);
                art_sign.push(if resid[i] >= 0.0 { 1.0 } else { -1.0 });
            }
        }

        let num_artificial = art_rows.len();
        let ncols = n_struct + num_artificial;
        let mut a = DMatrix::zeros(m, ncols);
        for i in 0..m {
            for j in 0..n {
                a[(i, j)] = lp.constraints[i].coeffs[j];
            }
            if slack_of_row[i] != usize::MAX {
                a[(i, slack_of_row[i])] = 1.0;
            }
        }
        let mut binv = DMatrix::identity(m, m);
        for (k, (&i, &sg)) in art_rows.iter().zip(&art_sign).enumerate() {
            let j = n_struct + k;
            a[(i, j)] = sg;
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push(resid[i].abs());
            state.push(VarState::Basic(i));
            head[i] = j;
            binv[(i, i)] = sg;
        }

        let max_iterations = opts
            .max_iterations
            .unwrap_or_else(|| (30 * (m + ncols)).max(1000));
        Simplex {
            opts,
            m,
            ncols,
            first_artificial: n_struct,
            num_artificial,
            a,
            b,
            cost: vec![0.0; ncols],
            lo,
            hi,
            x,
            state,
            head,
            binv,
            iterations: 0,
            max_iterations,
        }
    }

    fn refactor(&mut self) -> Result<()> {
        if self.m == 0 {
            return Ok(());
        }
        let mut basis = DMatrix::zeros(self.m, self.m);
        for (r, &j) in self.head.iter().enumerate() {
            basis.set_column(r, &self.a.column(j));
        }
        self.binv = basis.try_inverse().ok_or_else(|| {
            RecovError::solver("simplex basis became singular", vec![self.iterations as f64])
        })?;
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
            }
        }
        let xb = &self.binv * rhs;
        for (r, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[r];
        }
        Ok(())
    }

    fn duals(&self) -> DVector<f64> {
        let cb = DVector::from_iterator(self.m, self.head.iter().map(|&j| self.cost[j]));
        self.binv.tr_mul(&cb)
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                let obj: f64 = self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum();
                return Err(RecovError::solver(
                    format!("simplex iteration limit {} reached", self.max_iterations),
                    vec![self.iterations as f64, obj],
                ));
            }
            if since_refactor >= self.opts.refactor_every {
                self.refactor()?;
                since_refactor = 0;
            }
            let bland = degenerate_run >= self.opts.degenerate_limit;
            let y = self.duals();

            let tol = self.opts.optimality_tol;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.ncols {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = self.cost[j] - self.a.column(j).dot(&y);
                let dir = match st {
                    VarState::Lower if d < -tol => 1.0,
                    VarState::Upper if d > tol => -1.0,
                    VarState::Free if d.abs() > tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d, dir));
                    break;
                }
                if entering.map_or(true, |(_, best, _)| d.abs() > best.abs()) {
                    entering = Some((j, d, dir));
                }
            }
            let Some((q, _, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let alpha = &self.binv * self.a.column(q);
            let amax = alpha.amax();
            let piv_tol = 1e-9 * amax.max(1e-12);

            let mut theta = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let range = self.hi[q] - self.lo[q];
            let mut ratios = vec![f64::INFINITY; self.m];
            for r in 0..self.m {
                let rate = -dir * alpha[r];
                if rate.abs() <= piv_tol {
                    continue;
                }
                let j = self.head[r];
                let t = if rate < 0.0 {
                    if !self.lo[j].is_finite() {
                        continue;
                    }
                    (self.x[j] - self.lo[j]) / (-rate)
                } else {
                    if !self.hi[j].is_finite() {
                        continue;
                    }
                    (self.hi[j] - self.x[j]) / rate
                };
                ratios[r] = t.max(0.0);
                theta = theta.min(ratios[r]);
            }
            if theta.is_finite() {
                let slack = 1e-12 * (1.0 + theta);
                for r in 0..self.m {
                    if ratios[r] > theta + slack {
                        continue;
                    }
                    leave = match leave {
                        None => Some(r),
                        Some(cur) => {
                            let better = if bland {
                                self.head[r] < self.head[cur]
                            } else {
                                alpha[r].abs() > alpha[cur].abs()
                            };
                            Some(if better { r } else { cur })
                        }
                    };
                }
            }

            if range <= theta {
                if !range.is_finite() {
                    return Ok(Outcome::Unbounded);
                }
                // bound flip, basis unchanged
                let step = dir * range;
                self.x[q] += step;
                for r in 0..self.m {
                    let j = self.head[r];
                    self.x[j] -= step * alpha[r];
                }
                self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                self.iterations += 1;
                degenerate_run = 0;
                continue;
            }

            let r = leave.expect("finite ratio implies a leaving row");
            let step = dir * theta;
            self.x[q] += step;
            for i in 0..self.m {
                let j = self.head[i];
                self.x[j] -= step * alpha[i];
            }
            let out = self.head[r];
            let rate = -dir * alpha[r];
            if rate < 0.0 {
                self.x[out] = self.lo[out];
                self.state[out] = VarState::Lower;
            } else {
                self.x[out] = self.hi[out];
                self.state[out] = VarState::Upper;
            }
            if !self.lo[out].is_finite() && !self.hi[out].is_finite() {
                self.state[out] = VarState::Free;
            }
            self.state[q] = VarState::Basic(r);
            self.head[r] = q;

            let piv = alpha[r];
            let prow = self.binv.row(r) / piv;
            for i in 0..self.m {
                if i == r || alpha[i] == 0.0 {
                    continue;
                }
                let f = alpha[i];
                for c in 0..self.m {
                    self.binv[(i, c)] -= f * prow[c];
                }
            }
            self.binv.set_row(r, &prow);

            self.iterations += 1;
            since_refactor += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_certificates(lp: &LinearProgram, rep: &SolveReport) {
        assert!(lp.primal_residual(&rep.solution) <= 1e-8);
        assert!(rep.duality_gap(lp) <= 1e-7, "gap {}", rep.duality_gap(lp));
        assert!(rep.complementary_slackness(lp) <= 1e-7);
    }

    #[test]
    fn absolute_value_as_lp() {
        // min t  s.t. −t ≤ x ≤ t, x = 3 ; variables (x, t)
        let mut lp = LinearProgram::minimize(vec![0.0, 1.0]);
        lp.set_free(0);
        lp.set_free(1);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 0.0);
        lp.add_constraint(vec![-1.0, -1.0], Relation::Le, 0.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Eq, 3.0);
        let rep = solve_lp(&lp).unwrap();
        assert_eq!(rep.status, LpStatus::Optimal);
        assert!((rep.objective_value - 3.0).abs() < 1e-12);
        check_certificates(&lp, &rep);
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.set_free(0);
        lp.add_constraint(vec![1.0], Relation::Le, 0.0);
        lp.add_constraint(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), 36
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let rep = solve_lp(&lp).unwrap();
        assert!((rep.objective_value - 36.0).abs() < 1e-10);
        assert!((rep.solution[0] - 2.0).abs() < 1e-10);
        assert!((rep.solution[1] - 6.0).abs() < 1e-10);
        // shadow prices of the classic example
        assert!((rep.duals[1] - 1.5).abs() < 1e-10);
        assert!((rep.duals[2] - 1.0).abs() < 1e-10);
        check_certificates(&lp, &rep);
    }

    #[test]
    fn boxed_variables_and_ge_rows() {
        // min x + 2y, x + y ≥ 1.5, x ∈ [0, 1], y ∈ [0, 1]  → x = 1, y = 0.5
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Ge, 1.5);
        let rep = solve_lp(&lp).unwrap();
        assert!((rep.objective_value - 2.0).abs() < 1e-12);
        check_certificates(&lp, &rep);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under naive Dantzig pricing
        let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let rep = solve_lp(&lp).unwrap();
        assert_eq!(rep.status, LpStatus::Optimal);
        assert!((rep.objective_value + 0.05).abs() < 1e-10);
        check_certificates(&lp, &rep);
    }

    #[test]
    fn identical_inputs_give_identical_reports() {
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0, -1.0]);
        lp.set_bounds(2, -1.0, 1.0);
        lp.add_constraint(vec![1.0, 1.0, 1.0], Relation::Le, 3.0);
        lp.add_constraint(vec![1.0, -1.0, 0.5], Relation::Ge, -2.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a, b);
    }
}
