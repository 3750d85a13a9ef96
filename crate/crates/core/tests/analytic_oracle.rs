//! Monte-Carlo cross-checks of the closed-form ensemble averages: sampled
//! purities against the exact expressions, sampled mean Choi states against
//! the average-state formulas, and sampled distance estimates against the
//! bound they are supposed to respect.

mod common;

use num_complex::Complex64 as C64;

use common::{assert_within_se, Welford};
use proctensor_core::analytic::{
    avg_state_ti, avg_state_ti_k1, bk_bound, ergodic_avg_purity, ti_avg_purity, BoundInputs,
};
use proctensor_core::haar::SeedSpec;
use proctensor_core::linalg::ComplexMatrix;
use proctensor_core::measures::nm_upper_maxmixed;
use proctensor_core::process::{
    build_choi, ChoiState, InitialState, InteractionMode, ProcessSpec,
};
use proctensor_core::symgroup::rational_to_f64;

fn sample(
    k: usize,
    d_s: usize,
    d_e: usize,
    mode: InteractionMode,
    master: u64,
    stream: u64,
) -> ChoiState {
    let spec = ProcessSpec::new(
        k,
        d_s,
        d_e,
        mode,
        InitialState::BasisZero,
        SeedSpec::new(master, stream),
    )
    .unwrap();
    build_choi(&spec).unwrap()
}

#[test]
fn sampled_purity_matches_the_ergodic_closed_form() {
    let exact = ergodic_avg_purity(4, 2, 1).unwrap();
    let mut stat = Welford::default();
    for i in 0..3000u64 {
        stat.push(sample(1, 2, 4, InteractionMode::Random, 7001, i).purity());
    }
    assert_within_se(&stat, exact, 4.0, "ergodic purity (4,2,1)");
}

#[test]
fn sampled_purity_matches_the_time_independent_sum() {
    let exact = rational_to_f64(&ti_avg_purity(2, 2, 1).unwrap());
    let mut stat = Welford::default();
    for i in 0..4000u64 {
        stat.push(sample(1, 2, 2, InteractionMode::Constant, 7002, i).purity());
    }
    assert_within_se(&stat, exact, 4.0, "time-independent purity (2,2,1)");
}

#[test]
fn sampled_mean_state_flattens_in_the_independent_mode() {
    let n = 4000u64;
    let mut acc = ComplexMatrix::zeros(8, 8);
    for i in 0..n {
        acc = acc.add(&sample(1, 2, 4, InteractionMode::Random, 7003, i).matrix);
    }
    let mean = acc.scaled(C64::new(1.0 / n as f64, 0.0));
    let mixed = ComplexMatrix::identity(8).scaled(C64::new(1.0 / 8.0, 0.0));
    assert!(mean.max_abs_diff(&mixed) < 5e-3);
}

#[test]
fn sampled_mean_state_matches_the_one_step_closed_form() {
    let n = 4000u64;
    let mut acc = ComplexMatrix::zeros(8, 8);
    for i in 0..n {
        acc = acc.add(&sample(1, 2, 2, InteractionMode::Constant, 7004, i).matrix);
    }
    let mean = acc.scaled(C64::new(1.0 / n as f64, 0.0));
    let mut rho = ComplexMatrix::zeros(2, 2);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    let closed = avg_state_ti_k1(2, 2, &rho).unwrap();
    assert!(mean.max_abs_diff(&closed.matrix) < 8e-3);
}

#[test]
fn sampled_mean_state_matches_the_two_step_engine() {
    let n = 4000u64;
    let mut acc = ComplexMatrix::zeros(32, 32);
    for i in 0..n {
        acc = acc.add(&sample(2, 2, 2, InteractionMode::Constant, 7005, i).matrix);
    }
    let mean = acc.scaled(C64::new(1.0 / n as f64, 0.0));
    let mut rho = ComplexMatrix::zeros(2, 2);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    let engine = avg_state_ti(2, 2, 2, &rho).unwrap();
    assert!(mean.max_abs_diff(&engine.matrix) < 8e-3);
    assert!((engine.matrix.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn sampled_distance_means_respect_the_bound() {
    for d_e in [4usize, 8] {
        let p = ergodic_avg_purity(d_e, 2, 1).unwrap();
        let bound = bk_bound(&BoundInputs::new(d_e, 2, 1, p).unwrap()).unwrap();
        let mut stat = Welford::default();
        for i in 0..200u64 {
            let c = sample(1, 2, d_e, InteractionMode::Random, 7006, i);
            stat.push(nm_upper_maxmixed(&c).unwrap());
        }
        assert!(
            stat.mean() <= bound,
            "d_e={d_e}: mean {} above bound {bound}",
            stat.mean()
        );
    }
}
