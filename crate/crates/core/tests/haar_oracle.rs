//! Monte-Carlo cross-checks of the Haar sampler against exact moment
//! formulas, and of the exact formulas against sampled averages. Sample
//! counts here are sized for routine runs; the acceptance suite repeats
//! the comparison at full depth.

mod common;

use num_complex::Complex64 as C64;

use common::{assert_within_se, Welford};
use proctensor_core::haar::{self, SeedSpec};
use proctensor_core::linalg::ComplexMatrix;
use proctensor_core::symgroup::{moment_integral, two_moment_twirl};

#[test]
fn samples_are_unitary_and_deterministic() {
    let u = haar::haar_unitary(5, SeedSpec::new(1, 0)).unwrap();
    assert!(u.is_unitary(1e-12));
    let again = haar::haar_unitary(5, SeedSpec::new(1, 0)).unwrap();
    assert!(u.max_abs_diff(&again) == 0.0);
    let other = haar::haar_unitary(5, SeedSpec::new(1, 1)).unwrap();
    assert!(u.max_abs_diff(&other) > 1e-3);
}

#[test]
fn first_moment_of_entry_modulus_matches() {
    let d = 4usize;
    let exact = moment_integral(&[0], &[0], &[0], &[0], d as u64).unwrap();
    let mut rng = haar::rng(SeedSpec::new(2024, 0));
    let mut stat = Welford::default();
    for _ in 0..20_000 {
        let u = haar::haar_unitary_from_rng(d, &mut rng).unwrap();
        stat.push(u[(0, 0)].norm_sqr());
    }
    assert!((exact - 0.25).abs() < 1e-15);
    assert_within_se(&stat, exact, 4.0, "E|U00|^2");
}

#[test]
fn second_moment_combinations_match() {
    let d = 4usize;
    let mut rng = haar::rng(SeedSpec::new(2025, 0));
    let mut same_row = Welford::default();
    let mut diagonal = Welford::default();
    let mut crossed = Welford::default();
    for _ in 0..20_000 {
        let u = haar::haar_unitary_from_rng(d, &mut rng).unwrap();
        same_row.push(u[(0, 0)].norm_sqr() * u[(0, 1)].norm_sqr());
        diagonal.push(u[(0, 0)].norm_sqr() * u[(1, 1)].norm_sqr());
        let v = u[(0, 0)] * u[(1, 1)] * u[(1, 0)].conj() * u[(0, 1)].conj();
        crossed.push(v.re);
    }
    let exact_row = moment_integral(&[0, 0], &[0, 1], &[0, 0], &[0, 1], d as u64).unwrap();
    let exact_diag = moment_integral(&[0, 1], &[0, 1], &[0, 1], &[0, 1], d as u64).unwrap();
    // conj rows are (1,0), conj cols are (0,1): forced sigma = swap and
    // tau = id, so this single term IS Wg(swap, d) = -1/60 at d = 4.
    let exact_cross = moment_integral(&[0, 1], &[0, 1], &[1, 0], &[0, 1], d as u64).unwrap();
    assert!((exact_cross + 1.0 / 60.0).abs() < 1e-15);
    assert_within_se(&same_row, exact_row, 4.0, "E|U00|^2|U01|^2");
    assert_within_se(&diagonal, exact_diag, 4.0, "E|U00|^2|U11|^2");
    assert_within_se(&crossed, exact_cross, 4.0, "E[U00 U11 conj(U10 U01)]");
}

#[test]
fn third_moment_matches() {
    let d = 4usize;
    let mut rng = haar::rng(SeedSpec::new(2026, 0));
    let mut stat = Welford::default();
    for _ in 0..20_000 {
        let u = haar::haar_unitary_from_rng(d, &mut rng).unwrap();
        stat.push(u[(0, 0)].norm_sqr() * u[(1, 1)].norm_sqr() * u[(2, 2)].norm_sqr());
    }
    let exact =
        moment_integral(&[0, 1, 2], &[0, 1, 2], &[0, 1, 2], &[0, 1, 2], d as u64).unwrap();
    assert_within_se(&stat, exact, 4.0, "E|U00 U11 U22|^2");
}

#[test]
fn single_twirl_flattens_any_state() {
    // E[U rho U^dag] = I/d: per-entry average over samples.
    let d = 3usize;
    let mut rho = ComplexMatrix::zeros(d, d);
    rho[(0, 0)] = C64::new(0.6, 0.0);
    rho[(1, 1)] = C64::new(0.4, 0.0);
    rho[(0, 1)] = C64::new(0.1, 0.05);
    rho[(1, 0)] = C64::new(0.1, -0.05);
    let mut rng = haar::rng(SeedSpec::new(2027, 0));
    let n = 20_000usize;
    let mut acc = ComplexMatrix::zeros(d, d);
    for _ in 0..n {
        let u = haar::haar_unitary_from_rng(d, &mut rng).unwrap();
        acc = acc.add(&u.mul(&rho).mul(&u.adjoint()));
    }
    let mean = acc.scaled(C64::new(1.0 / n as f64, 0.0));
    let flat = ComplexMatrix::identity(d).scaled(C64::new(1.0 / d as f64, 0.0));
    assert!(mean.max_abs_diff(&flat) < 0.01);
}

#[test]
fn double_twirl_matches_the_closed_form() {
    let d = 4usize;
    let mut a = ComplexMatrix::zeros(d, d);
    let mut b = ComplexMatrix::zeros(d, d);
    let mut x = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = C64::new(1.0 + i as f64, 0.0);
        b[(i, i)] = C64::new(1.0 / (1.0 + i as f64), 0.2);
        x[(i, (i + 1) % d)] = C64::new(0.5, -0.3);
    }
    let exact = two_moment_twirl(&a, &b, &x, d).unwrap();

    let n = 20_000usize;
    let mut rng = haar::rng(SeedSpec::new(2028, 0));
    let mut re = vec![Welford::default(); d * d];
    let mut im = vec![Welford::default(); d * d];
    for _ in 0..n {
        let u = haar::haar_unitary_from_rng(d, &mut rng).unwrap();
        let ud = u.adjoint();
        let sample = ud.mul(&a).mul(&u).mul(&x).mul(&ud).mul(&b).mul(&u);
        for r in 0..d {
            for c in 0..d {
                re[r * d + c].push(sample[(r, c)].re);
                im[r * d + c].push(sample[(r, c)].im);
            }
        }
    }
    for r in 0..d {
        for c in 0..d {
            assert_within_se(&re[r * d + c], exact[(r, c)].re, 4.0, "twirl entry re");
            assert_within_se(&im[r * d + c], exact[(r, c)].im, 4.0, "twirl entry im");
        }
    }
}

#[test]
fn haar_states_have_uniform_component_weights() {
    let d = 6usize;
    let mut rng = haar::rng(SeedSpec::new(2029, 0));
    let mut stats = vec![Welford::default(); d];
    for _ in 0..20_000 {
        let psi = haar::haar_state_from_rng(d, &mut rng).unwrap();
        for (i, amp) in psi.amps().iter().enumerate() {
            stats[i].push(amp.norm_sqr());
        }
    }
    for (i, s) in stats.iter().enumerate() {
        assert_within_se(s, 1.0 / d as f64, 4.0, &format!("E|psi_{i}|^2"));
    }
}
