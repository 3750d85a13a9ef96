//! Closed-form ensemble averages and the distance bound they feed.
//!
//! The Monte-Carlo side of this crate samples process tensors; this module
//! computes what those samples should average to. It covers the trace
//! distance bound B_k between a sampled Choi state and the maximally mixed
//! one, the average Choi purity in both interaction pictures, the average
//! Choi states themselves where closed forms exist, and the Lipschitz and
//! concentration constants used by the tail experiments.
//!
//! Everything with integer inputs is evaluated in exact rational arithmetic
//! and converted to double at the boundary. The time-independent average
//! purity is a sum over permutation pairs of S_{2k+2} weighted by Weingarten
//! values; default builds evaluate it for k <= 2, and the k = 3 sum (
//! |S_8|^2 ~ 1.6e9 pairs) sits behind the `ti-k3` cargo feature.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use num_complex::Complex64 as C64;

use crate::linalg::{kron, ComplexMatrix, LinalgError};
use crate::process::{choi_layout, ChoiState, InteractionMode, ProcessError};
use crate::symgroup::{Permutation, SymGroupError, WeingartenTable};

/// Largest step count the time-independent exact sum supports (gated).
pub const MAX_TI_K: usize = 3;
/// Largest step count compiled into default builds.
#[cfg(not(feature = "ti-k3"))]
pub const MAX_TI_K_DEFAULT: usize = 2;
#[cfg(feature = "ti-k3")]
pub const MAX_TI_K_DEFAULT: usize = 3;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("negative radicand {0:.3e}: purity inconsistent with the dimensions")]
    NegativeRadicand(f64),
    #[error("step count {k} exceeds the exact-sum maximum {max}")]
    StepCountTooLarge { k: usize, max: usize },
    #[error("k = 3 exact sum requires the `ti-k3` feature")]
    FeatureGated,
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    SymGroup(#[from] SymGroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

type Result<T> = std::result::Result<T, AnalyticError>;

/* Distance bound *********************************************************/

/// Inputs of the bound B_k: dimensions, step count, and the ensemble-average
/// Choi purity for the matching interaction picture.
#[derive(Clone, Copy, Debug)]
pub struct BoundInputs {
    pub d_e: usize,
    pub d_s: usize,
    pub k: usize,
    pub avg_purity: f64,
}

impl BoundInputs {
    pub fn new(d_e: usize, d_s: usize, k: usize, avg_purity: f64) -> Result<Self> {
        if d_e == 0 || d_s == 0 {
            return Err(AnalyticError::BadInput("dimensions must be positive".into()));
        }
        if k >= 1 && d_s < 2 {
            return Err(AnalyticError::BadInput("d_s >= 2 required for k >= 1".into()));
        }
        if !(avg_purity > 0.0 && avg_purity <= 1.0) {
            return Err(AnalyticError::BadInput(format!(
                "avg purity {avg_purity} outside (0, 1]"
            )));
        }
        Ok(Self { d_e, d_s, k, avg_purity })
    }
}

/// Rounding slop below which a radicand is treated as exactly zero.
const RADICAND_SNAP: f64 = 1e-12;

fn checked_sqrt(radicand: f64) -> Result<f64> {
    if radicand < -RADICAND_SNAP {
        return Err(AnalyticError::NegativeRadicand(radicand));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Both branch formulas of B_k evaluated at the same inputs, regardless of
/// which branch applies: (small-environment, large-environment). Used to
/// check branch continuity at d_E = d_S^{2k+1}; prefer [`bk_bound`].
pub fn bk_bound_both_branches(inp: &BoundInputs) -> Result<(f64, f64)> {
    let ds_pow = (inp.d_s as f64).powi(2 * inp.k as i32 + 1);
    let de = inp.d_e as f64;
    let p = inp.avg_purity;
    let y = 1.0 - de / ds_pow;
    let x = (de / ds_pow) * (1.0 + y);
    let small_env = 0.5 * (checked_sqrt(de * p - x)? + y);
    let large_env = 0.5 * checked_sqrt(ds_pow * p - 1.0)?;
    Ok((small_env, large_env))
}

/// Upper bound on the ensemble-average trace distance between a sampled Choi
/// state and the maximally mixed one, from the average purity:
/// for d_E < d_S^{2k+1} the bound is (sqrt(d_E p - x) + y) / 2 with
/// y = 1 - d_E/d_S^{2k+1} and x = (d_E/d_S^{2k+1})(1 + y); otherwise it is
/// sqrt(d_S^{2k+1} p - 1) / 2. The branches agree at d_E = d_S^{2k+1}.
pub fn bk_bound(inp: &BoundInputs) -> Result<f64> {
    let ds_pow = (inp.d_s as f64).powi(2 * inp.k as i32 + 1);
    let de = inp.d_e as f64;
    let p = inp.avg_purity;
    if de < ds_pow {
        let y = 1.0 - de / ds_pow;
        let x = (de / ds_pow) * (1.0 + y);
        Ok(0.5 * (checked_sqrt(de * p - x)? + y))
    } else {
        Ok(0.5 * checked_sqrt(ds_pow * p - 1.0)?)
    }
}

/* Average purities *******************************************************/

fn big(v: usize) -> BigInt {
    BigInt::from(v)
}

fn rat_int(v: BigInt) -> BigRational {
    BigRational::from_integer(v)
}

fn rat_pow(base: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= base;
    }
    acc
}

/// Exact average Choi purity for independently drawn step unitaries:
/// ((d_E^2-1) / (d_E (d_E d_S + 1))) ((d_E^2-1) / (d_E^2 d_S^2 - 1))^k
/// + 1/d_E. At k = 0 this is the classic (d_E + d_S) / (d_E d_S + 1).
pub fn ergodic_avg_purity_exact(d_e: usize, d_s: usize, k: usize) -> Result<BigRational> {
    if d_e == 0 || d_s == 0 {
        return Err(AnalyticError::BadInput("dimensions must be positive".into()));
    }
    let de2m1 = rat_int(&big(d_e) * &big(d_e) - BigInt::one());
    let head = &de2m1 / rat_int(big(d_e) * (big(d_e) * big(d_s) + BigInt::one()));
    let ratio = &de2m1 / rat_int(&big(d_e) * &big(d_e) * &big(d_s) * &big(d_s) - BigInt::one());
    Ok(head * rat_pow(&ratio, k) + BigRational::new(BigInt::one(), big(d_e)))
}

/// Double-precision view of [`ergodic_avg_purity_exact`].
pub fn ergodic_avg_purity(d_e: usize, d_s: usize, k: usize) -> Result<f64> {
    Ok(crate::symgroup::rational_to_f64(&ergodic_avg_purity_exact(d_e, d_s, k)?))
}

/* Delta contractions *****************************************************/

/// A product of Kronecker deltas over two classes of summation indices, one
/// ranging over 0..d_E and one over 0..d_S, with some indices pinned to the
/// basis value 0 by the initial state. Summing the product over all free
/// indices yields d_E^a d_S^b where a and b count the connected components
/// of each class's equality graph that contain no pinned index.
#[derive(Clone, Debug)]
pub struct DeltaContraction {
    e_vars: usize,
    s_vars: usize,
    e_pairs: Vec<(usize, usize)>,
    s_pairs: Vec<(usize, usize)>,
    e_pins: Vec<usize>,
    s_pins: Vec<usize>,
}

impl DeltaContraction {
    pub fn new(e_vars: usize, s_vars: usize) -> Self {
        Self {
            e_vars,
            s_vars,
            e_pairs: Vec::new(),
            s_pairs: Vec::new(),
            e_pins: Vec::new(),
            s_pins: Vec::new(),
        }
    }

    fn check(&self, class_vars: usize, idx: usize) -> Result<()> {
        if idx >= class_vars {
            return Err(AnalyticError::BadInput(format!(
                "index {idx} outside the {class_vars} declared variables"
            )));
        }
        Ok(())
    }

    pub fn equate_e(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(self.e_vars, a)?;
        self.check(self.e_vars, b)?;
        self.e_pairs.push((a, b));
        Ok(())
    }

    pub fn equate_s(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(self.s_vars, a)?;
        self.check(self.s_vars, b)?;
        self.s_pairs.push((a, b));
        Ok(())
    }

    pub fn pin_e(&mut self, a: usize) -> Result<()> {
        self.check(self.e_vars, a)?;
        self.e_pins.push(a);
        Ok(())
    }

    pub fn pin_s(&mut self, a: usize) -> Result<()> {
        self.check(self.s_vars, a)?;
        self.s_pins.push(a);
        Ok(())
    }

    /// Connected components without any pinned variable, per class.
    pub fn free_components(&self) -> (usize, usize) {
        (
            free_components(self.e_vars, &self.e_pairs, &self.e_pins),
            free_components(self.s_vars, &self.s_pairs, &self.s_pins),
        )
    }

    /// The summed value d_E^a d_S^b as an exact integer.
    pub fn value(&self, d_e: usize, d_s: usize) -> BigInt {
        let (a, b) = self.free_components();
        big(d_e).pow(a as u32) * big(d_s).pow(b as u32)
    }
}

fn uf_find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn uf_union(parent: &mut [usize], a: usize, b: usize) {
    let ra = uf_find(parent, a);
    let rb = uf_find(parent, b);
    if ra != rb {
        parent[ra] = rb;
    }
}

fn free_components(vars: usize, pairs: &[(usize, usize)], pins: &[usize]) -> usize {
    // Extra node `vars` collects every pinned variable.
    let mut parent: Vec<usize> = (0..=vars).collect();
    for &(a, b) in pairs {
        uf_union(&mut parent, a, b);
    }
    for &p in pins {
        uf_union(&mut parent, p, vars);
    }
    let pin_root = uf_find(&mut parent, vars);
    let mut seen = vec![false; vars + 1];
    let mut count = 0;
    for i in 0..vars {
        let r = uf_find(&mut parent, i);
        if r != pin_root && !seen[r] {
            seen[r] = true;
            count += 1;
        }
    }
    count
}

/* Time-independent average purity ****************************************/

/// Builds the purity contraction for one permutation pair as a
/// [`DeltaContraction`]: the slow, obviously-correct form the fast in-place
/// evaluator is tested against. Variable ids: unprimed index m is m, primed
/// index m is n + m, with n = 2k + 2.
#[cfg(test)]
fn ti_purity_contraction(k: usize, sigma: &[usize], tau: &[usize]) -> Result<DeltaContraction> {
    let n = 2 * k + 2;
    let mut c = DeltaContraction::new(2 * n, 2 * n);
    c.equate_e(k, sigma[2 * k + 1])?;
    c.equate_e(2 * k + 1, sigma[k])?;
    for l in 1..n {
        if l == k + 1 {
            continue;
        }
        c.equate_e(l - 1, n + l)?;
        c.equate_e(sigma[l - 1], n + tau[l])?;
        c.equate_s(n + l, n + tau[l])?;
    }
    for m in 0..n {
        c.equate_s(m, sigma[m])?;
    }
    for pin in [tau[0], k + 1, tau[k + 1], 0] {
        c.pin_e(n + pin)?;
        c.pin_s(n + pin)?;
    }
    Ok(c)
}

/// Stack-friendly evaluator of the same contraction; `buf` must hold at
/// least 2 (2k + 2) + 1 entries. Returns (a, b) with the summed value
/// d_E^a d_S^b.
fn ti_purity_exponents(k: usize, sigma: &[usize], tau: &[usize], buf: &mut [usize]) -> (u32, u32) {
    let n = 2 * k + 2;
    let pin = 2 * n;
    let pins = [n + tau[0], n + k + 1, n + tau[k + 1], n];

    let parent = &mut buf[..2 * n + 1];
    for (i, v) in parent.iter_mut().enumerate() {
        *v = i;
    }
    uf_union(parent, k, sigma[2 * k + 1]);
    uf_union(parent, 2 * k + 1, sigma[k]);
    for l in 1..n {
        if l == k + 1 {
            continue;
        }
        uf_union(parent, l - 1, n + l);
        uf_union(parent, sigma[l - 1], n + tau[l]);
    }
    for &p in &pins {
        uf_union(parent, p, pin);
    }
    let a = count_free(parent, 2 * n, pin);

    for (i, v) in parent.iter_mut().enumerate() {
        *v = i;
    }
    for l in 1..n {
        if l == k + 1 {
            continue;
        }
        uf_union(parent, n + l, n + tau[l]);
    }
    for m in 0..n {
        uf_union(parent, m, sigma[m]);
    }
    for &p in &pins {
        uf_union(parent, p, pin);
    }
    let b = count_free(parent, 2 * n, pin);
    (a, b)
}

fn count_free(parent: &mut [usize], vars: usize, pin: usize) -> u32 {
    // vars <= 16 here, so a bitmask tracks seen roots.
    let pin_root = uf_find(parent, pin);
    let mut seen: u32 = 0;
    let mut count = 0;
    for i in 0..vars {
        let r = uf_find(parent, i);
        if r != pin_root && seen & (1 << r) == 0 {
            seen |= 1 << r;
            count += 1;
        }
    }
    count
}

/// Exact average Choi purity when every step applies the same Haar unitary,
/// for the initial state |0>_E |0>_S:
/// (1/d_S^{2k}) sum over sigma, tau in S_{2k+2} of Wg(tau sigma^-1, d_E d_S)
/// times the summed delta contraction of the two index classes.
///
/// Exact for k <= 2 in default builds; k = 3 enumerates |S_8|^2 pairs and
/// requires the `ti-k3` feature (minutes of CPU, parallelized over threads).
pub fn ti_avg_purity(d_e: usize, d_s: usize, k: usize) -> Result<BigRational> {
    if d_e == 0 || d_s == 0 {
        return Err(AnalyticError::BadInput("dimensions must be positive".into()));
    }
    if k > MAX_TI_K {
        return Err(AnalyticError::StepCountTooLarge { k, max: MAX_TI_K });
    }
    if k > MAX_TI_K_DEFAULT {
        return Err(AnalyticError::FeatureGated);
    }
    let n = 2 * k + 2;
    let d = (d_e * d_s) as u64;
    let table = WeingartenTable::build(n, d)?;
    let perms: Vec<Vec<usize>> =
        Permutation::all(n).into_iter().map(|p| p.one_line().to_vec()).collect();
    let classes = crate::symgroup::partitions(n);

    // Greek-pair loop reorganized as (pi, sigma) with tau = pi . sigma, so
    // the Weingarten argument pi is fixed per outer iteration. Exponent
    // tallies per (class of pi, a, b) keep the final combination exact.
    let workers = if n >= 8 {
        std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
    } else {
        1
    };
    let chunk = perms.len().div_ceil(workers);
    let tallies: Vec<std::collections::BTreeMap<(usize, u32, u32), u64>> =
        std::thread::scope(|scope| {
            let perms = &perms;
            let classes = &classes;
            let mut handles = Vec::new();
            for w in 0..workers {
                handles.push(scope.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(perms.len());
                    let mut tally = std::collections::BTreeMap::new();
                    let mut tau = vec![0usize; n];
                    let mut buf = vec![0usize; 2 * n + 1];
                    for pi_idx in lo..hi {
                        let pi = &perms[pi_idx];
                        let class_id = class_index(pi, classes);
                        for sigma in perms.iter() {
                            for i in 0..n {
                                tau[i] = pi[sigma[i]];
                            }
                            let (a, b) = ti_purity_exponents(k, sigma, &tau, &mut buf);
                            *tally.entry((class_id, a, b)).or_insert(0u64) += 1;
                        }
                    }
                    tally
                }));
            }
            handles.into_iter().map(|h| h.join().expect("ti purity worker")).collect()
        });

    let mut merged: std::collections::BTreeMap<(usize, u32, u32), u64> =
        std::collections::BTreeMap::new();
    for t in tallies {
        for (key, count) in t {
            *merged.entry(key).or_insert(0) += count;
        }
    }

    let mut total = BigRational::zero();
    for ((class_id, a, b), count) in merged {
        let wg = table.get(&classes[class_id]).expect("class covered");
        let monomial = big(d_e).pow(a) * big(d_s).pow(b) * BigInt::from(count);
        total += wg * rat_int(monomial);
    }
    Ok(total / rat_int(big(d_s).pow(2 * k as u32)))
}

/// Index of a one-line permutation's cycle type in the lexicographic
/// partition list of n.
fn class_index(map: &[usize], classes: &[crate::symgroup::CycleType]) -> usize {
    let mut seen = [false; 8];
    let mut lengths: Vec<usize> = Vec::with_capacity(map.len());
    for start in 0..map.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = map[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|x, y| y.cmp(x));
    classes
        .iter()
        .position(|p| p.parts() == lengths.as_slice())
        .expect("cycle type is a partition of n")
}

/* Average Choi states ****************************************************/

/// Average Choi state for independently drawn step unitaries: the maximally
/// mixed state on all 2k + 1 legs.
pub fn avg_state_ergodic(d_e: usize, d_s: usize, k: usize) -> Result<ChoiState> {
    if d_e == 0 || d_s < 2 {
        return Err(AnalyticError::BadInput("need d_e >= 1 and d_s >= 2".into()));
    }
    let layout = choi_layout(k, d_s);
    let dim = layout.dim();
    let matrix = ComplexMatrix::identity(dim).scaled(C64::new(1.0 / dim as f64, 0.0));
    Ok(ChoiState { matrix, layout, k, d_s, d_e })
}

fn validate_density(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(AnalyticError::BadInput(format!(
            "state is {}x{}, expected {dim}x{dim}",
            rho.rows(),
            rho.cols()
        )));
    }
    if (rho.trace() - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(AnalyticError::BadInput("state trace differs from 1".into()));
    }
    if rho.herm_deviation() > 1e-8 {
        return Err(AnalyticError::BadInput("state is not Hermitian".into()));
    }
    Ok(())
}

fn swap_matrix(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// Average Choi state of a one-step constant-interaction process with
/// initial system marginal rho_S, on legs (S, A1, B1):
/// (1/(d_E^2 d_S^2 - 1)) [ d_E^2/d_S I + SWAP_{SA} x rho_S^T / d_S
/// - SWAP_{SA} x I_B / d_S^2 - I_{SA} x rho_S^T / d_S^2 ].
/// The trace is exactly 1 and the state tends to maximally mixed as d_E
/// grows.
pub fn avg_state_ti_k1(d_e: usize, d_s: usize, rho_s: &ComplexMatrix) -> Result<ChoiState> {
    if d_e == 0 || d_s < 2 {
        return Err(AnalyticError::BadInput("need d_e >= 1 and d_s >= 2".into()));
    }
    validate_density(rho_s, d_s)?;
    let layout = choi_layout(1, d_s);
    let dim = layout.dim();
    let de2 = (d_e * d_e) as f64;
    let ds = d_s as f64;
    let swap_sa = swap_matrix(d_s);
    let rho_t = rho_s.transpose();
    let ident_b = ComplexMatrix::identity(d_s);
    let ident_sa = ComplexMatrix::identity(d_s * d_s);

    let term_i = ComplexMatrix::identity(dim).scaled(C64::new(de2 / ds, 0.0));
    let term_swap_rho = kron(&swap_sa, &rho_t)?.scaled(C64::new(1.0 / ds, 0.0));
    let term_swap_i = kron(&swap_sa, &ident_b)?.scaled(C64::new(1.0 / (ds * ds), 0.0));
    let term_i_rho = kron(&ident_sa, &rho_t)?.scaled(C64::new(1.0 / (ds * ds), 0.0));

    let scale = C64::new(1.0 / (de2 * ds * ds - 1.0), 0.0);
    let matrix = term_i
        .add(&term_swap_rho)
        .sub(&term_swap_i)
        .sub(&term_i_rho)
        .scaled(scale);
    Ok(ChoiState { matrix, layout, k: 1, d_s, d_e })
}

/// Purity of [`avg_state_ti_k1`] as a closed form in the system marginal's
/// purity (valid for the pure global initial states used throughout):
/// (2/(d_E^2 d_S^2 - 1)^2) [ 1/d_S^3 + p_S (d_S^2 - d_S - 1)/(2 d_S^2)
/// - d_E^2/d_S + d_E^4 d_S / 2 ].
pub fn purity_of_avg_state_ti_k1(d_e: usize, d_s: usize, purity_s: f64) -> Result<f64> {
    if d_e == 0 || d_s < 2 {
        return Err(AnalyticError::BadInput("need d_e >= 1 and d_s >= 2".into()));
    }
    if !(purity_s >= 1.0 / d_s as f64 - 1e-12 && purity_s <= 1.0 + 1e-12) {
        return Err(AnalyticError::BadInput(format!(
            "system purity {purity_s} outside [1/d_s, 1]"
        )));
    }
    let de = d_e as f64;
    let ds = d_s as f64;
    let de2 = de * de;
    let denom = de2 * ds * ds - 1.0;
    let bracket = 1.0 / (ds * ds * ds) + purity_s * (ds * ds - ds - 1.0) / (2.0 * ds * ds)
        - de2 / ds
        + de2 * de2 * ds / 2.0;
    Ok(2.0 / (denom * denom) * bracket)
}

/// Average Choi state of a constant-interaction process with initial state
/// |0>_E x rho_S, evaluated from the general S_{k+1} permutation sum with
/// the same contraction engine as [`ti_avg_purity`]. Supports k <= 2; used
/// to cross-check the k = 1 closed form and exercised only by tests and
/// diagnostics.
pub fn avg_state_ti(k: usize, d_e: usize, d_s: usize, rho_s: &ComplexMatrix) -> Result<ChoiState> {
    if d_e == 0 || d_s < 2 {
        return Err(AnalyticError::BadInput("need d_e >= 1 and d_s >= 2".into()));
    }
    if k > 2 {
        return Err(AnalyticError::StepCountTooLarge { k, max: 2 });
    }
    validate_density(rho_s, d_s)?;
    let n = k + 1;
    let table = WeingartenTable::build(n, (d_e * d_s) as u64)?;
    let layout = choi_layout(k, d_s);
    let dim = layout.dim();
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    let perms = Permutation::all(n);
    let ds_pref = (d_s as f64).powi(k as i32);

    for sigma in &perms {
        let sigma_inv = sigma.inverse();
        for tau in &perms {
            let rel = tau.compose(&sigma_inv)?;
            let wg = crate::symgroup::rational_to_f64(table.at(&rel));
            // Environment contraction: delta(e_sigma(k), e_k) and for each
            // step l: delta(e_sigma(l-1), e'_tau(l)), delta(e_{l-1}, e'_l),
            // with e'_tau(0) and e'_0 pinned to 0 by the initial |0><0|_E.
            let mut contraction = DeltaContraction::new(2 * n, 0);
            contraction.equate_e(sigma.apply(k), k)?;
            for l in 1..=k {
                contraction.equate_e(sigma.apply(l - 1), n + tau.apply(l))?;
                contraction.equate_e(l - 1, n + l)?;
            }
            contraction.pin_e(n + tau.apply(0))?;
            contraction.pin_e(n)?;
            let (e_free, _) = contraction.free_components();
            let weight = wg * (d_e as f64).powi(e_free as i32) / ds_pref;
            if weight == 0.0 {
                continue;
            }

            // System legs: ket (s_sigma(k); s_sigma(j-1), s'_tau(j)) against
            // bra (s_k; s_{j-1}, s'_j), weighted by <s'_tau(0)|rho|s'_0>.
            // The bra multi-index fixes every unprimed s and the primed
            // s'_1..s'_k; s'_0 is enumerated explicitly.
            let mut s = vec![0usize; n];
            let mut sp = vec![0usize; n];
            let mut row_multi = vec![0usize; 2 * k + 1];
            for col in 0..dim {
                let col_multi = layout.multi_index(col);
                s[k] = col_multi[0];
                for j in 1..=k {
                    s[j - 1] = col_multi[2 * j - 1];
                    sp[j] = col_multi[2 * j];
                }
                for v in 0..d_s {
                    sp[0] = v;
                    row_multi[0] = s[sigma.apply(k)];
                    for j in 1..=k {
                        row_multi[2 * j - 1] = s[sigma.apply(j - 1)];
                        row_multi[2 * j] = sp[tau.apply(j)];
                    }
                    let row = layout.flat_index(&row_multi);
                    let rho_factor = rho_s[(sp[tau.apply(0)], v)];
                    matrix[(row, col)] += rho_factor * C64::new(weight, 0.0);
                }
            }
        }
    }
    Ok(ChoiState { matrix, layout, k, d_s, d_e })
}

/* Concentration constants ************************************************/

/// Lipschitz scale of the Choi construction in the step unitaries:
/// eta = (d_S^{k+1} - 1) / (d_S - 1), the geometric sum of d_S^l.
pub fn lipschitz_eta(d_s: usize, k: usize) -> f64 {
    let ds = d_s as f64;
    if d_s == 1 {
        return (k + 1) as f64;
    }
    (ds.powi(k as i32 + 1) - 1.0) / (ds - 1.0)
}

/// Exponent constant of the tail bound exp(-C eps^2):
/// C = c d_E d_S ((d_S - 1) / (d_S^{k+1} - 1))^2, with c = 1/4 for a
/// constant interaction and (k + 1)/4 for independent step interactions.
pub fn concentration_c(d_e: usize, d_s: usize, k: usize, mode: InteractionMode) -> f64 {
    let c = match mode {
        InteractionMode::Constant => 0.25,
        InteractionMode::Random => 0.25 * (k + 1) as f64,
    };
    let eta = lipschitz_eta(d_s, k);
    c * (d_e * d_s) as f64 / (eta * eta)
}

/// Tail probability bound exp(-C eps^2).
pub fn tail_bound(eps: f64, c: f64) -> f64 {
    (-c * eps * eps).exp()
}

/// Deviation scale eps = d_E^{-1/3} at which the tail bound becomes
/// meaningful while eps itself still shrinks with the environment.
pub fn epsilon_scale(d_e: usize) -> f64 {
    1.0 / (d_e as f64).cbrt()
}
