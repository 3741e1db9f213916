mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use minvar::allocation::{
    constrained_min_variance, constrained_min_variance_warm, min_variance, project_to_constraint, qp_oracle,
    ExposureConstraint,
};

const TOL: f64 = 1e-9;

fn hand() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 0.7])
}

fn objective(q: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    (q * w).dot(w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_oracle_for_two_assets(seed in 0u64..100_000, ec in 1.0f64..3.0) {
        let mut rng = common::rng(seed);
        let q = common::random_pd(&mut rng, 2);
        let ec = ExposureConstraint::new(ec).unwrap();
        let got = constrained_min_variance(&q, ec).unwrap();
        let oracle = qp_oracle(&q, ec, 1e-4).unwrap();
        let scale = q.trace() / 2.0;
        prop_assert!((got.objective - objective(&q, &oracle)).abs() <= 1e-6 * scale);
    }

    #[test]
    fn feasible_and_scale_invariant(seed in 0u64..100_000, c in 0.001f64..1000.0) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..8);
        let q = common::random_pd(&mut rng, m);
        for ec in ExposureConstraint::GRID {
            let a = constrained_min_variance(&q, ec).unwrap();
            let b = constrained_min_variance(&(&q * c), ec).unwrap();
            prop_assert!((a.weights.sum() - 1.0).abs() <= TOL);
            prop_assert!(a.weights.abs().sum() <= ec.limit() + TOL);
            prop_assert!((a.weights.clone() - b.weights).amax() <= 1e-9);
            prop_assert!((objective(&q, &a.weights) - a.objective).abs() <= 1e-12 * a.objective.abs().max(1.0));
        }
    }

    #[test]
    fn objective_is_monotone_in_exposure(seed in 0u64..100_000) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(2..8);
        let q = common::random_pd(&mut rng, m);
        let scale = q.trace() / m as f64;
        let objs: Vec<f64> = ExposureConstraint::GRID
            .iter()
            .map(|&ec| constrained_min_variance(&q, ec).unwrap().objective)
            .collect();
        for w in objs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * scale);
        }
    }

    #[test]
    fn unit_exposure_means_long_only(seed in 0u64..100_000) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..8);
        let q = common::random_pd(&mut rng, m);
        let w = constrained_min_variance(&q, ExposureConstraint::Bounded(1.0)).unwrap().weights;
        prop_assert!(w.iter().all(|x| *x >= -TOL));
    }

    #[test]
    fn interior_solutions_satisfy_stationarity(seed in 0u64..100_000) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(2..8);
        let q = common::random_pd(&mut rng, m);
        let r = constrained_min_variance(&q, ExposureConstraint::Bounded(1.5)).unwrap();
        prop_assume!(!r.binding);
        let g = &q * &r.weights * 2.0;
        let lambda = g.mean();
        prop_assert!(g.add_scalar(-lambda).amax() <= 1e-8 * q.amax().max(1.0));
    }
}

#[test]
fn three_asset_oracle_agreement() {
    let mut rng = common::rng(99);
    for _ in 0..50 {
        let q = common::random_pd(&mut rng, 3);
        let scale = q.trace() / 3.0;
        for ec in ExposureConstraint::GRID {
            let got = constrained_min_variance(&q, ec).unwrap();
            let oracle = qp_oracle(&q, ec, 1e-3).unwrap();
            assert!((got.objective - objective(&q, &oracle)).abs() <= 1e-6 * scale);
        }
    }
}

#[test]
fn closed_form_examples() {
    let r = min_variance(&DMatrix::identity(3, 3)).unwrap();
    assert_relative_eq!(r.weights, DVector::from_element(3, 1.0 / 3.0), epsilon = 1e-15);
    assert!(!r.binding);
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 3.0]));
    let r = min_variance(&q).unwrap();
    assert_relative_eq!(r.weights, DVector::from_column_slice(&[0.75, 0.25]), epsilon = 1e-15);
    assert_relative_eq!(r.objective, objective(&q, &r.weights), max_relative = 1e-12);
    assert!(min_variance(&DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn hand_matrix_across_bounds() {
    let q = hand();
    let free = constrained_min_variance(&q, ExposureConstraint::Unbounded).unwrap();
    assert_relative_eq!(free.weights, DVector::from_column_slice(&[-1.0, 2.0]), epsilon = 1e-10);
    assert!(!free.binding);

    let tight = constrained_min_variance(&q, ExposureConstraint::Bounded(1.0)).unwrap();
    assert_relative_eq!(tight.weights, DVector::from_column_slice(&[0.0, 1.0]), epsilon = 1e-10);
    assert_relative_eq!(tight.objective, 0.7, epsilon = 1e-10);
    assert!(tight.binding);

    // on sum |w| = 2 with w1 < 0 the only point is (-0.5, 1.5)
    let two = constrained_min_variance(&q, ExposureConstraint::Bounded(2.0)).unwrap();
    assert_relative_eq!(two.weights, DVector::from_column_slice(&[-0.5, 1.5]), epsilon = 1e-10);
    assert!(two.binding);
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=40_000 {
        let t = -1.5 + k as f64 * 1e-4;
        let w = DVector::from_column_slice(&[t, 1.0 - t]);
        if w.abs().sum() <= 2.0 + 1e-12 {
            let f = objective(&q, &w);
            if f < best.0 {
                best = (f, t);
            }
        }
    }
    assert!((best.1 - two.weights[0]).abs() <= 1e-4);
    assert!(two.objective <= best.0 + 1e-12);
}

#[test]
fn warm_start_matches_cold_start() {
    let mut rng = common::rng(5);
    let m = 6;
    let base = common::random_pd(&mut rng, m);
    for ec in ExposureConstraint::GRID {
        let mut warm = None;
        for _ in 0..60 {
            let bump = common::random_pd(&mut rng, m) * 0.05;
            let q = &base + bump;
            let cold = constrained_min_variance(&q, ec).unwrap();
            let hot = constrained_min_variance_warm(&q, ec, warm.as_ref()).unwrap();
            assert!((cold.weights.clone() - &hot.weights).amax() <= 1e-9, "{ec}");
            assert_eq!(cold.binding, hot.binding);
            warm = hot.active_set;
        }
    }
}

#[test]
fn projection_respects_bounds() {
    let target = DVector::from_column_slice(&[-0.8, 1.2, 0.6]);
    let inside = project_to_constraint(&target, ExposureConstraint::Bounded(3.0), None).unwrap();
    assert_relative_eq!(inside.weights, target, epsilon = 1e-12);
    for ec in ExposureConstraint::GRID {
        let p = project_to_constraint(&target, ec, None).unwrap();
        assert!((p.weights.sum() - 1.0).abs() <= TOL);
        assert!(p.weights.abs().sum() <= ec.limit() + TOL);
    }
}

#[test]
fn invalid_bounds_are_rejected() {
    assert!(ExposureConstraint::new(0.99).is_err());
    assert!(ExposureConstraint::new(f64::NAN).is_err());
    assert_eq!(ExposureConstraint::new(f64::INFINITY).unwrap(), ExposureConstraint::Unbounded);
    assert!(qp_oracle(&DMatrix::identity(4, 4), ExposureConstraint::Unbounded, 0.1).is_err());
}
