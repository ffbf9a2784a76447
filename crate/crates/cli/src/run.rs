//! Task execution, report assembly and output files.

use std::fs;
use std::path::Path;

use recov::angles::{angle_report, mu_n_v, Mu};
use recov::chebgeo::{build_kw, Kw, PolytopeSet};
use recov::measure::{design_net_measurements, MeasurementKind};
use recov::moduli::{diameter_ascent, diameter_sandwich_check};
use recov::recover::{certify, recover};
use recov::samplab::{condition_estimate, l1_totality_demo, sweep};
use recov::spaces::{Element, NormKind};
use recov::{RecovError, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::doc::{ProblemDocument, Setup, TaskSpec};
use crate::format::{fmt, round_json};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Text("inf".into()), Cell::Num)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: String, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub struct RunOutput {
    /// Rounded to 12 significant digits.
    pub report: Value,
    pub tables: Vec<Table>,
    pub error: Option<RecovError>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub fn exit_code(err: &RecovError) -> i32 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_SOLVER
    }
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(EXIT_OK, exit_code)
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn error_value(err: &RecovError) -> Value {
    let mut v = json!({
        "kind": if err.is_validation() { "validation" } else { "solver" },
        "message": err.to_string(),
    });
    match err {
        RecovError::Intersection { witness } => v["witness"] = to_value(witness),
        RecovError::Solver { trace, .. } => v["trace"] = to_value(trace),
        _ => {}
    }
    v
}

fn task_name(t: &TaskSpec) -> &'static str {
    match t {
        TaskSpec::Recover { .. } => "recover",
        TaskSpec::Mu => "mu",
        TaskSpec::Geometry { .. } => "geometry",
        TaskSpec::Sweep { .. } => "sweep",
        TaskSpec::Sandwich { .. } => "sandwich",
        TaskSpec::Design { .. } => "design",
        TaskSpec::Condition { .. } => "condition",
        TaskSpec::L1Totality { .. } => "l1_totality",
    }
}

/// Runs the tasks in order; the first failure stops the run and marks the report partial.
pub fn execute(doc: &ProblemDocument, seed: u64) -> RunOutput {
    let mut tasks = Vec::new();
    let mut tables = Vec::new();
    let mut error = None;
    match Setup::new(doc) {
        Err(e) => error = Some(e),
        Ok(setup) => {
            for (k, task) in doc.tasks.iter().enumerate() {
                let prefix = format!("{:02}_{}", k + 1, task_name(task));
                match run_task(doc, &setup, task, &prefix, seed) {
                    Ok((result, mut t)) => {
                        tasks.push(json!({"task": task_name(task), "result": result}));
                        tables.append(&mut t);
                    }
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
        }
    }
    let mut report = json!({
        "name": doc.name,
        "seed": seed,
        "partial": error.is_some(),
        "error": error.as_ref().map(error_value),
        "tasks": tasks,
    });
    round_json(&mut report);
    RunOutput { report, tables, error }
}

fn run_task(
    doc: &ProblemDocument,
    setup: &Setup,
    task: &TaskSpec,
    prefix: &str,
    seed: u64,
) -> Result<(Value, Vec<Table>)> {
    match task {
        TaskSpec::Recover { w, f } => {
            let problem = setup.problem(doc.epsilon)?;
            let pipeline = setup.pipeline(&problem, doc.algorithm.as_ref())?;
            let (w, f_true) = setup.data(w, f)?;
            let report = recover(&problem, &pipeline, &w)?;
            let certs = certify(&problem, &pipeline, &w, &report, f_true.as_ref())?;
            let mut ct = Table::new(format!("{prefix}_certificates"), &["check", "value", "threshold", "passed"]);
            for c in &certs {
                ct.rows.push(vec![
                    Cell::Text(c.check.clone()),
                    Cell::Num(c.value),
                    c.threshold.map_or(Cell::Text(String::new()), Cell::Num),
                    Cell::Bool(c.passed),
                ]);
            }
            let mut rt = Table::new(format!("{prefix}_reconstruction"), &["node", "value"]);
            for (t, x) in setup.space.nodes().iter().zip(&report.reconstruction) {
                rt.rows.push(vec![Cell::Num(*t), Cell::Num(*x)]);
            }
            let result = json!({
                "approx_method": to_value(&pipeline.approx.method()),
                "report": to_value(&report),
                "certificates": to_value(&certs),
            });
            Ok((result, vec![ct, rt]))
        }
        TaskSpec::Mu => {
            let rep = angle_report(setup.measurement()?, setup.subspace()?)?;
            let mut t = Table::new(
                prefix.to_string(),
                &["mu_v_n_lower", "mu_v_n_upper", "mu_n_v_lower", "mu_n_v_upper", "exact"],
            );
            t.rows.push(vec![
                opt(rep.mu_v_n.lower()),
                opt(rep.mu_v_n.upper()),
                opt(rep.mu_n_v.lower()),
                opt(rep.mu_n_v.upper()),
                Cell::Bool(rep.mu_v_n.is_exact() && rep.mu_n_v.is_exact()),
            ]);
            if let Mu::Infinite { witness } = &rep.mu_v_n {
                return Err(RecovError::Intersection { witness: witness.clone() });
            }
            Ok((to_value(&rep), vec![t]))
        }
        TaskSpec::Geometry { w, f, vertices } => {
            let set = match vertices {
                Some(vs) => {
                    if w.is_some() || f.is_some() {
                        return Err(RecovError::Invalid("give either vertices or data, not both".into()));
                    }
                    let pts = vs.iter().map(|v| Element::from_column_slice(v)).collect();
                    PolytopeSet::from_vertices(setup.space.clone(), pts)?
                }
                None => {
                    let eps = doc
                        .epsilon
                        .ok_or_else(|| RecovError::Invalid("consistent-set geometry needs epsilon".into()))?;
                    let (w, _) = setup.data(w, f)?;
                    match build_kw(setup.measurement()?, setup.subspace()?, eps, &w)? {
                        Kw::Set(s) => s,
                        Kw::Empty => {
                            let t = Table::new(prefix.to_string(), &["diameter", "rad", "rad_c"]);
                            return Ok((json!({"status": "empty"}), vec![t]));
                        }
                        Kw::Unbounded { direction } => return Err(RecovError::Intersection { witness: direction }),
                    }
                }
            };
            let diameter = set.diameter()?;
            let center = set.chebyshev_center_radius()?;
            let restricted = set.restricted_radius()?;
            let mut t = Table::new(prefix.to_string(), &["diameter", "rad", "rad_c"]);
            t.rows.push(vec![
                Cell::Num(diameter.value),
                Cell::Num(center.radius),
                Cell::Num(restricted.radius),
            ]);
            let result = json!({
                "status": "set",
                "diameter": to_value(&diameter),
                "chebyshev": to_value(&center),
                "restricted": to_value(&restricted),
            });
            Ok((result, vec![t]))
        }
        TaskSpec::Sweep { family, schedule, probe } => {
            let fam = family.build(setup.space.clone())?;
            let sched = schedule.build(setup.space.clone())?;
            let f = probe.sample(&setup.space)?;
            let rep = sweep(&fam, &sched, &f)?;
            let mut t = Table::new(
                prefix.to_string(),
                &["m", "n_of_m", "mu", "epsilon", "bound", "actual_error", "gamma"],
            );
            for r in &rep.rows {
                t.rows.push(vec![
                    Cell::Int(r.m),
                    Cell::Int(r.n_of_m),
                    Cell::Num(r.mu),
                    Cell::Num(r.epsilon),
                    Cell::Num(r.bound),
                    Cell::Num(r.actual_error),
                    Cell::Num(r.gamma),
                ]);
            }
            Ok((to_value(&rep), vec![t]))
        }
        TaskSpec::Sandwich { w, f, restarts } => {
            let problem = setup.problem(doc.epsilon)?;
            let (w, _) = setup.data(w, f)?;
            let oracle = diameter_ascent(&problem, &w, *restarts, seed)?;
            let row = diameter_sandwich_check(&problem, &w, &oracle)?;
            let exact = match build_kw(problem.measurement(), problem.subspace(), doc.epsilon.unwrap_or(0.0), &w)? {
                Kw::Set(s) => Some(s.diameter()?.value),
                _ => None,
            };
            let mut t = Table::new(prefix.to_string(), &["gamma", "mu", "lower", "oracle", "upper", "pass"]);
            t.rows.push(vec![
                Cell::Num(row.gamma),
                Cell::Num(row.mu),
                Cell::Num(row.lower),
                Cell::Num(row.oracle),
                Cell::Num(row.upper),
                Cell::Bool(row.pass),
            ]);
            let result = json!({
                "row": to_value(&row),
                "ellipsoid_diameter": exact,
                "certificate": to_value(&oracle.certificate),
            });
            Ok((result, vec![t]))
        }
        TaskSpec::Design { delta } => {
            let v = setup.subspace()?;
            let design = design_net_measurements(v, *delta)?;
            let mu = mu_n_v(&design.operator, v)?;
            let indices = match design.operator.kind() {
                MeasurementKind::PointEval { indices } => indices.clone(),
                _ => Vec::new(),
            };
            let mut t = Table::new(
                prefix.to_string(),
                &["delta", "m", "net_size", "achieved_delta", "mu_n_v", "bound"],
            );
            t.rows.push(vec![
                Cell::Num(*delta),
                Cell::Int(design.operator.m()),
                Cell::Int(design.net_size),
                Cell::Num(design.achieved_delta),
                opt(mu.upper()),
                Cell::Num(2.0 / (1.0 - delta)),
            ]);
            let result = json!({
                "indices": indices,
                "net_size": design.net_size,
                "achieved_delta": design.achieved_delta,
                "mu_n_v": to_value(&mu),
            });
            Ok((result, vec![t]))
        }
        TaskSpec::Condition { samples, with_lifting } => {
            let problem = setup.problem(doc.epsilon)?;
            let pipeline = setup.pipeline(&problem, doc.algorithm.as_ref())?;
            let est = condition_estimate(&problem, &pipeline, *with_lifting, *samples, seed)?;
            let mut t = Table::new(prefix.to_string(), &["estimate", "structural_bound", "sqrt_n_reference"]);
            t.rows.push(vec![
                Cell::Num(est.estimate),
                est.structural_bound.map_or(Cell::Text(String::new()), Cell::Num),
                Cell::Num(est.sqrt_n_reference),
            ]);
            Ok((to_value(&est), vec![t]))
        }
        TaskSpec::L1Totality { a, m_max } => {
            if setup.space.kind() != NormKind::Lp(1.0) {
                return Err(RecovError::Precondition("the totality example lives in ℓ_1".into()));
            }
            let demo = l1_totality_demo(*a, *m_max, setup.space.dim())?;
            let mut t = Table::new(prefix.to_string(), &["m", "dist", "mu"]);
            for r in &demo.rows {
                t.rows.push(vec![Cell::Int(r.m), Cell::Num(r.dist), Cell::Num(r.mu)]);
            }
            Ok((to_value(&demo), vec![t]))
        }
    }
}

/// Writes `report.json` and one CSV per table into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report_text(out))?;
    for t in &out.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    Ok(())
}

pub fn report_text(out: &RunOutput) -> String {
    let mut s = serde_json::to_string_pretty(&out.report).expect("json");
    s.push('\n');
    s
}
