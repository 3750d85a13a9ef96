//! Shared oracles for the integration suites: a dense, index-level
//! re-implementation of the circuit construction, and small statistics
//! helpers. Everything here favors obviousness over speed.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

use proctensor_core::linalg::ComplexMatrix;

/// Mixed-radix digits of `flat` for row-major `dims` (first digit slowest).
pub fn digits_of(flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut rem = flat;
    let mut out = vec![0usize; dims.len()];
    for pos in (0..dims.len()).rev() {
        out[pos] = rem % dims[pos];
        rem /= dims[pos];
    }
    out
}

/// Flat row-major index of `digits` under `dims`.
pub fn flat_of(digits: &[usize], dims: &[usize]) -> usize {
    let mut acc = 0usize;
    for (d, &dim) in digits.iter().zip(dims) {
        acc = acc * dim + d;
    }
    acc
}

/// Applies a unitary on the two leading factors (dims[0] x dims[1]) of a
/// dense state vector by plain matrix-vector products per trailing block.
fn apply_leading_pair(v: &[C64], u: &ComplexMatrix, lead: usize, rest: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for t in 0..rest {
        for row in 0..lead {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..lead {
                acc += u[(row, col)] * v[col * rest + t];
            }
            out[row * rest + t] = acc;
        }
    }
    out
}

/// Exchanges the contents of factor positions `a` and `b` (equal dims).
fn swap_positions(v: &[C64], dims: &[usize], a: usize, b: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for flat in 0..v.len() {
        let mut digits = digits_of(flat, dims);
        digits.swap(a, b);
        out[flat_of(&digits, dims)] = v[flat];
    }
    out
}

/// Dense reference construction of a k-step Choi state on factor list
/// [E, S, A1, B1, ..., Ak, Bk]: initial (E,S) amplitudes tensored with one
/// maximally entangled pair per step, the first unitary on (E, S), then per
/// step a swap of S with A_i followed by the step unitary, and finally the
/// Gram sum over the environment digit.
pub fn dense_choi(
    k: usize,
    d_s: usize,
    d_e: usize,
    unitaries: &[ComplexMatrix],
    es_amps: &[C64],
) -> ComplexMatrix {
    assert_eq!(unitaries.len(), k + 1);
    assert_eq!(es_amps.len(), d_e * d_s);
    let mut dims = vec![d_e, d_s];
    for _ in 0..k {
        dims.push(d_s);
        dims.push(d_s);
    }
    let total: usize = dims.iter().product();
    let pair_norm = 1.0 / (d_s as f64).powi(k as i32).sqrt();

    let mut v = vec![C64::new(0.0, 0.0); total];
    for flat in 0..total {
        let digits = digits_of(flat, &dims);
        let paired = (0..k).all(|i| digits[2 + 2 * i] == digits[3 + 2 * i]);
        if paired {
            v[flat] = es_amps[digits[0] * d_s + digits[1]] * pair_norm;
        }
    }

    let lead = d_e * d_s;
    let rest = total / lead;
    v = apply_leading_pair(&v, &unitaries[0], lead, rest);
    for i in 1..=k {
        v = swap_positions(&v, &dims, 1, 2 * i);
        v = apply_leading_pair(&v, &unitaries[i], lead, rest);
    }

    let d_m = total / d_e;
    ComplexMatrix::from_fn(d_m, d_m, |m, mp| {
        let mut acc = C64::new(0.0, 0.0);
        for e in 0..d_e {
            acc += v[e * d_m + m] * v[e * d_m + mp].conj();
        }
        acc
    })
}

/// (E,S) amplitudes of |0>|0>.
pub fn basis_zero_amps(d_e: usize, d_s: usize) -> Vec<C64> {
    let mut a = vec![C64::new(0.0, 0.0); d_e * d_s];
    a[0] = C64::new(1.0, 0.0);
    a
}

/// Streaming mean and standard error.
#[derive(Clone, Debug, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Asserts |observed - expected| <= sigmas * SE, with a small absolute
/// floor so zero-variance statistics cannot fail on rounding noise.
pub fn assert_within_se(observed: &Welford, expected: f64, sigmas: f64, label: &str) {
    let slack = sigmas * observed.std_error() + 1e-12;
    let diff = (observed.mean() - expected).abs();
    assert!(
        diff <= slack,
        "{label}: mean {} vs expected {expected}, diff {diff:.3e} > {sigmas} SE = {slack:.3e}",
        observed.mean()
    );
}
