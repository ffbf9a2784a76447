//! Shared inputs for the benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use recov::measure::{equispaced_points, MeasurementOperator};
use recov::recover::RecoveryProblem;
use recov::spaces::{circle_grid, NormKind, Space, Subspace, SubspacePreset};

/// Fixed pseudo-random entries in `[-1, 1]`; reproducible without an RNG.
pub fn scrambled(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        let t = (i * 7919 + j * 104_729) as f64 + seed as f64 * 0.618_033_988_75;
        (t * 12.9898).sin() * 0.5 + (t * 78.233).cos() * 0.5
    })
}

/// Trig model of degree `n` sampled at `2(2n+1)` equispaced points on a `grid`-point circle.
pub fn trig_problem(grid: usize, n: usize, kind: NormKind) -> RecoveryProblem {
    let s: Arc<Space> = Arc::new(circle_grid(grid, kind).expect("grid size is positive"));
    let v = Arc::new(Subspace::preset(&SubspacePreset::Trig { n }, s.clone()).expect("degree fits the grid"));
    let m = Arc::new(
        MeasurementOperator::point_eval_at(s, &equispaced_points(-PI, PI, 2 * (2 * n + 1))).expect("grid size divisible by the point count"),
    );
    RecoveryProblem::new(m, v, Some(0.1)).expect("trig sampling is well posed")
}
