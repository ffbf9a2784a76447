use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recov::angles::{angle_report, mu_between, mu_v_n};
use recov::measure::{equispaced_points, MeasurementKind, MeasurementOperator};
use recov::spaces::{circle_grid, NormKind, Space, Subspace, SubspacePreset};

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

#[test]
fn swap_inequality_on_random_sup_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let space = Space::sequence(8, NormKind::Sup).unwrap();
    for _ in 0..30 {
        let (a, b) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let x = gaussian(&mut rng, 8, a);
        let y = gaussian(&mut rng, 8, b);
        let xy = mu_between(&space, &x, &y).unwrap().upper().unwrap();
        let yx = mu_between(&space, &y, &x).unwrap().upper().unwrap();
        assert!(xy <= 1.0 + yx + 1e-7, "{xy} vs {yx}");
        assert!(1.0 + yx <= 2.0 * yx + 1e-7);
    }
}

#[test]
fn angle_constants_agree_with_a_direct_subspace_program() {
    // μ(V, N) through the measurement norm and through the null-space basis
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in [NormKind::Sup, NormKind::Hilbert] {
        let s = Arc::new(Space::sequence(7, kind).unwrap());
        for _ in 0..10 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(n..=6);
            let op = MeasurementOperator::from_pairing(s.clone(), gaussian(&mut rng, m, 7), MeasurementKind::General)
                .unwrap();
            let v = Subspace::new(s.clone(), gaussian(&mut rng, 7, n)).unwrap();
            let rep = angle_report(&op, &v).unwrap();
            let vn = mu_between(&s, v.basis(), op.null_basis()).unwrap().upper().unwrap();
            let nv = mu_between(&s, op.null_basis(), v.basis()).unwrap().upper().unwrap();
            let got_vn = rep.mu_v_n.upper().unwrap();
            let got_nv = rep.mu_n_v.upper().unwrap();
            assert!((got_vn - vn).abs() <= 1e-6 * vn, "{kind:?}: {got_vn} vs {vn}");
            assert!((got_nv - nv).abs() <= 1e-6 * nv, "{kind:?}: {got_nv} vs {nv}");
            // ½‖M_V⁻¹‖ ≤ μ(N, V) ≤ 2‖M_V⁻¹‖ with ‖M_V⁻¹‖ = μ(V, N)
            assert!(0.5 * got_vn <= got_nv + 1e-7 && got_nv <= 2.0 * got_vn + 1e-7);
        }
    }
}

#[test]
fn point_evaluations_compare_continuous_and_discrete_norms() {
    // μ(V, N) = sup ‖v‖_∞ / max_j |v(x_j)| for point evaluations
    let s = Arc::new(circle_grid(360, NormKind::Sup).unwrap());
    let v = Subspace::preset(&SubspacePreset::Trig { n: 1 }, s.clone()).unwrap();
    let op = MeasurementOperator::point_eval_at(s.clone(), &equispaced_points(-PI, PI, 4)).unwrap();
    let rep = angle_report(&op, &v).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = op.restricted(&v).unwrap();
    let mut sampled: f64 = 0.0;
    for _ in 0..20_000 {
        let c = gaussian(&mut rng, 3, 1);
        let ratio = (v.basis() * &c).amax() / (&b * &c).amax();
        sampled = sampled.max(ratio);
    }
    let vn = rep.mu_v_n.upper().unwrap();
    assert!(sampled <= vn + 1e-9 && sampled >= 0.95 * vn, "{sampled} vs {vn}");
    let nv = rep.mu_n_v.upper().unwrap();
    assert!(vn <= 2.0 * nv + 1e-9 && nv <= 2.0 * vn + 1e-9);
}

#[test]
fn appending_rows_never_increases_the_angle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = Arc::new(Space::sequence(9, NormKind::Sup).unwrap());
    let v = Subspace::new(s.clone(), gaussian(&mut rng, 9, 2)).unwrap();
    let g = gaussian(&mut rng, 8, 9);
    let mut prev = f64::INFINITY;
    for m in 2..=8 {
        let op = MeasurementOperator::from_pairing(s.clone(), g.rows(0, m).into_owned(), MeasurementKind::General)
            .unwrap();
        let mu = mu_v_n(&op, &v).unwrap().upper().unwrap();
        assert!(mu <= prev + 1e-9, "m = {m}: {mu} > {prev}");
        prev = mu;
    }
}
