//! Problem documents and their translation into core objects.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use recov::approx::{ApproxMap, ApproxMethod};
use recov::lift::{Lifting, LiftingChoice};
use recov::measure::{equispaced_points, MeasurementKind, MeasurementOperator};
use recov::recover::{Pipeline, RecoveryProblem};
use recov::samplab::{doubling_point_schedule, fourier_schedule, FamilyPreset, NestedFamily};
use recov::spaces::{circle_grid, Element, NormKind, Quadrature, Space, Subspace, SubspacePreset};
use recov::{RecovError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub name: String,
    pub space: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<SubspaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmSpec>,
    pub tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Sequence { n: usize, norm: NormKind },
    Grid { a: f64, b: f64, n: usize, quadrature: Quadrature, norm: NormKind },
    /// Periodic grid on `[−π, π)`.
    Circle { n: usize, norm: NormKind },
    /// `2^levels` cells on `[0, 1]`.
    Dyadic { levels: u32, norm: NormKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    Preset { preset: SubspacePreset },
    /// Basis columns given by their grid values.
    Basis { columns: Vec<Vec<f64>> },
    /// Basis columns given as functions of the grid nodes.
    Functions { functions: Vec<FunctionSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Const { c: f64 },
    Cos { k: f64 },
    Sin { k: f64 },
    /// `exp(cos t)`.
    ExpCos,
    /// `tanh(s t)`.
    Tanh { s: f64 },
    Abs,
    /// `sgn sin(2^{j+1} π t)`, `j ≥ 1`.
    Rademacher { j: u32 },
    Values { values: Vec<f64> },
    Sum { terms: Vec<Term> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub f: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementSpec {
    PointEval { indices: Vec<usize> },
    /// Points that coincide with grid nodes.
    PointEvalAt { points: Vec<f64> },
    /// `m` equispaced nodes `a + (b − a) j / m` of the domain.
    Equispaced { m: usize },
    DisjointAvg { supports: Vec<Vec<usize>> },
    Rademacher { m: usize },
    Fourier { m: usize },
    /// Pairing rows `g_j` with `l_j(x) = Σ_i g_ji x_i`.
    General { pairing: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifting: Option<LiftingChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory, overridden by `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Recovery from data `w`, or from the samples of `f`.
    Recover {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<FunctionSpec>,
    },
    Mu,
    /// Chebyshev geometry of the consistent set for `w` (or `M f`), or of a vertex set.
    Geometry {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<FunctionSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<Vec<f64>>>,
    },
    Sweep {
        family: FamilySpec,
        schedule: ScheduleSpec,
        probe: FunctionSpec,
    },
    Sandwich {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<FunctionSpec>,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
    /// Point evaluations norming a δ-net of the model space.
    Design { delta: f64 },
    Condition {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        with_lifting: bool,
    },
    /// Total but non-norming functionals on truncated `ℓ_1`.
    L1Totality { a: f64, m_max: usize },
}

fn default_restarts() -> usize {
    256
}

fn default_samples() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Trig,
    Poly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub model: ModelFamily,
    pub n_max: usize,
    pub tolerances: FamilyPreset,
    /// Required with the `custom` tolerance preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `m0, 2 m0, 4 m0, …` equispaced nodes.
    Doubling { m0: usize, steps: usize },
    /// Fourier coefficients up to each listed frequency.
    Fourier { ks: Vec<usize> },
    Custom { operators: Vec<MeasurementSpec> },
}

pub fn parse(text: &str) -> Result<ProblemDocument> {
    serde_json::from_str(text).map_err(|e| RecovError::Invalid(format!("problem document: {e}")))
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Space> {
        match *self {
            SpaceSpec::Sequence { n, norm } => Space::sequence(n, norm),
            SpaceSpec::Grid { a, b, n, quadrature, norm } => Space::grid(a, b, n, quadrature, norm),
            SpaceSpec::Circle { n, norm } => circle_grid(n, norm),
            SpaceSpec::Dyadic { levels, norm } => Space::dyadic(levels, norm),
        }
    }
}

impl FunctionSpec {
    pub fn sample(&self, space: &Space) -> Result<Element> {
        let n = space.dim();
        let vals = match self {
            FunctionSpec::Values { values } => {
                if values.len() != n {
                    return Err(RecovError::DimensionMismatch {
                        what: "function values",
                        expected: n,
                        got: values.len(),
                    });
                }
                values.clone()
            }
            FunctionSpec::Sum { terms } => {
                let mut acc = Element::zeros(n);
                for t in terms {
                    acc += t.f.sample(space)? * t.coef;
                }
                return Ok(acc);
            }
            other => space.nodes().iter().map(|&t| other.eval(t)).collect(),
        };
        Ok(Element::from_vec(vals))
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            FunctionSpec::Const { c } => c,
            FunctionSpec::Cos { k } => (k * t).cos(),
            FunctionSpec::Sin { k } => (k * t).sin(),
            FunctionSpec::ExpCos => t.cos().exp(),
            FunctionSpec::Tanh { s } => (s * t).tanh(),
            FunctionSpec::Abs => t.abs(),
            FunctionSpec::Rademacher { j } => (2f64.powi(j as i32 + 1) * PI * t).sin().signum(),
            FunctionSpec::Values { .. } | FunctionSpec::Sum { .. } => unreachable!("sampled directly"),
        }
    }
}

impl SubspaceSpec {
    pub fn build(&self, space: Arc<Space>) -> Result<Subspace> {
        match self {
            SubspaceSpec::Preset { preset } => Subspace::preset(preset, space),
            SubspaceSpec::Basis { columns } => {
                let n = space.dim();
                if let Some(c) = columns.iter().find(|c| c.len() != n) {
                    return Err(RecovError::DimensionMismatch {
                        what: "basis column",
                        expected: n,
                        got: c.len(),
                    });
                }
                let b = DMatrix::from_fn(n, columns.len(), |i, k| columns[k][i]);
                Subspace::new(space, b)
            }
            SubspaceSpec::Functions { functions } => {
                let cols = functions.iter().map(|f| f.sample(&space)).collect::<Result<Vec<_>>>()?;
                if cols.is_empty() {
                    return Err(RecovError::Invalid("a model space needs at least one function".into()));
                }
                Subspace::new(space.clone(), DMatrix::from_columns(&cols))
            }
        }
    }
}

impl MeasurementSpec {
    pub fn build(&self, space: Arc<Space>) -> Result<MeasurementOperator> {
        match self {
            MeasurementSpec::PointEval { indices } => MeasurementOperator::point_eval(space, indices.clone()),
            MeasurementSpec::PointEvalAt { points } => MeasurementOperator::point_eval_at(space, points),
            MeasurementSpec::Equispaced { m } => {
                let (a, b) = space
                    .domain()
                    .ok_or_else(|| RecovError::Precondition("equispaced points need a grid with a domain".into()))?;
                MeasurementOperator::point_eval_at(space, &equispaced_points(a, b, *m))
            }
            MeasurementSpec::DisjointAvg { supports } => MeasurementOperator::disjoint_avg(space, supports.clone()),
            MeasurementSpec::Rademacher { m } => MeasurementOperator::rademacher(space, *m),
            MeasurementSpec::Fourier { m } => MeasurementOperator::fourier(space, *m),
            MeasurementSpec::General { pairing } => {
                let n = space.dim();
                if let Some(r) = pairing.iter().find(|r| r.len() != n) {
                    return Err(RecovError::DimensionMismatch {
                        what: "pairing row",
                        expected: n,
                        got: r.len(),
                    });
                }
                let g = DMatrix::from_fn(pairing.len(), n, |j, i| pairing[j][i]);
                MeasurementOperator::from_pairing(space, g, MeasurementKind::General)
            }
        }
    }
}

impl FamilySpec {
    pub fn build(&self, space: Arc<Space>) -> Result<NestedFamily> {
        let presets: Vec<SubspacePreset> = (0..=self.n_max)
            .map(|n| match self.model {
                ModelFamily::Trig => SubspacePreset::Trig { n },
                ModelFamily::Poly => SubspacePreset::Poly { n },
            })
            .collect();
        match (&self.tolerances, &self.epsilons) {
            (FamilyPreset::Custom, Some(eps)) => {
                let spaces = presets
                    .iter()
                    .map(|p| Subspace::preset(p, space.clone()).map(Arc::new))
                    .collect::<Result<Vec<_>>>()?;
                NestedFamily::new(spaces, eps.clone(), FamilyPreset::Custom)
            }
            (FamilyPreset::Custom, None) => Err(RecovError::Invalid("custom tolerances need an epsilons list".into())),
            (preset, _) => NestedFamily::from_presets(space, &presets, *preset),
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self, space: Arc<Space>) -> Result<Vec<Arc<MeasurementOperator>>> {
        match self {
            ScheduleSpec::Doubling { m0, steps } => doubling_point_schedule(space, *m0, *steps),
            ScheduleSpec::Fourier { ks } => fourier_schedule(space, ks),
            ScheduleSpec::Custom { operators } => operators
                .iter()
                .map(|o| o.build(space.clone()).map(Arc::new))
                .collect(),
        }
    }
}

/// Core objects assembled from a document; model-dependent parts are optional.
pub struct Setup {
    pub space: Arc<Space>,
    pub subspace: Option<Arc<Subspace>>,
    pub measurement: Option<Arc<MeasurementOperator>>,
}

impl Setup {
    pub fn new(doc: &ProblemDocument) -> Result<Self> {
        if let Some(e) = doc.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(RecovError::Invalid(format!("epsilon must be finite and nonnegative, got {e}")));
            }
        }
        let space = Arc::new(doc.space.build()?);
        let subspace = doc.subspace.as_ref().map(|s| s.build(space.clone()).map(Arc::new)).transpose()?;
        let measurement = doc
            .measurement
            .as_ref()
            .map(|m| m.build(space.clone()).map(Arc::new))
            .transpose()?;
        Ok(Setup {
            space,
            subspace,
            measurement,
        })
    }

    pub fn subspace(&self) -> Result<&Arc<Subspace>> {
        self.subspace
            .as_ref()
            .ok_or_else(|| RecovError::Invalid("this task needs a model space".into()))
    }

    pub fn measurement(&self) -> Result<&Arc<MeasurementOperator>> {
        self.measurement
            .as_ref()
            .ok_or_else(|| RecovError::Invalid("this task needs measurements".into()))
    }

    pub fn problem(&self, epsilon: Option<f64>) -> Result<RecoveryProblem> {
        RecoveryProblem::new(self.measurement()?.clone(), self.subspace()?.clone(), epsilon)
    }

    pub fn pipeline(&self, problem: &RecoveryProblem, algo: Option<&AlgorithmSpec>) -> Result<Pipeline> {
        let default = Pipeline::default_for(problem)?;
        let Some(a) = algo else { return Ok(default) };
        let approx = match a.approx {
            Some(method) => ApproxMap::new(problem.measurement().clone(), problem.subspace().clone(), method)?,
            None => default.approx,
        };
        let lifting = match a.lifting {
            Some(choice) => Lifting::from_choice(problem.measurement().clone(), choice)?,
            None => default.lifting,
        };
        Pipeline::new(approx, lifting)
    }

    /// Data from an explicit vector or by measuring a function.
    pub fn data(&self, w: &Option<Vec<f64>>, f: &Option<FunctionSpec>) -> Result<(Vec<f64>, Option<Element>)> {
        match (w, f) {
            (Some(w), None) => Ok((w.clone(), None)),
            (None, Some(f)) => {
                let x = f.sample(&self.space)?;
                let w = self.measurement()?.apply(&x)?;
                Ok((w.iter().copied().collect(), Some(x)))
            }
            _ => Err(RecovError::Invalid("give exactly one of w and f".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"name":"x","space":{"type":"sequence","n":3,"norm":{"kind":"sup"}},"tasks":[],"extra":1}"#;
        assert!(parse(bad).is_err());
        let good = r#"{"name":"x","space":{"type":"sequence","n":3,"norm":{"kind":"sup"}},"tasks":[{"task":"mu"}]}"#;
        assert_eq!(parse(good).unwrap().tasks, vec![TaskSpec::Mu]);
    }

    #[test]
    fn functions_sample_on_nodes() {
        let s = Space::dyadic(4, NormKind::Lp(1.0)).unwrap();
        let r = FunctionSpec::Rademacher { j: 1 }.sample(&s).unwrap();
        assert_eq!(r.as_slice()[..5], [1.0, 1.0, 1.0, 1.0, -1.0]);
        let sum = FunctionSpec::Sum {
            terms: vec![
                Term { coef: 2.0, f: FunctionSpec::Const { c: 1.0 } },
                Term { coef: -1.0, f: FunctionSpec::Abs },
            ],
        };
        let x = sum.sample(&Space::sequence(3, NormKind::Sup).unwrap()).unwrap();
        assert_eq!(x.as_slice(), &[2.0, 1.0, 0.0]);
    }
}
