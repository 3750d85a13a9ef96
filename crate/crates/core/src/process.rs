//! Process-tensor Choi states from closed system-environment dynamics.
//!
//! A k-step process is a circuit on an environment E (dim d_E) and a system S
//! (dim d_S): the joint state starts as rho_ES tensored with k maximally
//! entangled pairs (A_i, B_i) of dimension d_S each; a unitary U_0 acts on
//! (E, S); then for each step i = 1..k the system is swapped with ancilla A_i
//! and U_i acts on (E, S). Tracing out E at the end leaves the Choi state of
//! the process on legs [S, A_1, B_1, ..., A_k, B_k].
//!
//! The construction never forms the global density matrix: the joint state is
//! propagated as a pure vector, swaps are factor-index permutations instead
//! of matrices, and the final partial trace over E is a Gram accumulation
//! over the environment index, so memory stays O(d_E d_S^{2k+1}) plus the
//! d_S^{2k+1} square Choi output.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::haar::{self, SeedSpec};
use crate::linalg::{
    self, kron, partial_trace, permute_matrix_factors, ComplexMatrix, LinalgError, StateVector,
    SubsystemLayout,
};

/// Default cap on the global vector dimension d_E * d_S^(2k+1).
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid process spec: {0}")]
    BadSpec(String),
    #[error("global dimension {dim} exceeds the cap {cap}")]
    DimCap { dim: usize, cap: usize },
    #[error("explicit unitary list has {got} entries, need k+1 = {want}")]
    UnitaryCount { got: usize, want: usize },
    #[error("explicit unitary {index} is not unitary within {tol:.1e}")]
    NotUnitary { index: usize, tol: f64 },
    #[error("retain set invalid: {0}")]
    BadRetain(String),
}

/// How the step unitaries are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteractionMode {
    /// One shared unitary fills every slot, the initial slot included.
    Constant,
    /// All k+1 slots drawn independently.
    Random,
}

/// Initial joint state of environment and system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// |0>_E |0>_S, the reproducible default.
    BasisZero,
    /// Haar-random pure state on E tensor S, drawn from its own seed.
    HaarPure(SeedSpec),
}

/// Complete description of one sampled process.
#[derive(Clone, Debug)]
pub struct ProcessSpec {
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub mode: InteractionMode,
    pub initial_state: InitialState,
    pub seed: SeedSpec,
    dim_cap: usize,
}

impl ProcessSpec {
    pub fn new(
        k: usize,
        d_s: usize,
        d_e: usize,
        mode: InteractionMode,
        initial_state: InitialState,
        seed: SeedSpec,
    ) -> Result<Self, ProcessError> {
        let spec = Self { k, d_s, d_e, mode, initial_state, seed, dim_cap: DEFAULT_DIM_CAP };
        spec.validate()?;
        Ok(spec)
    }

    /// Same spec with a different cap on the global vector dimension.
    pub fn with_dim_cap(mut self, cap: usize) -> Result<Self, ProcessError> {
        self.dim_cap = cap;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ProcessError> {
        if self.d_s < 2 {
            return Err(ProcessError::BadSpec(format!("d_S = {} but must be >= 2", self.d_s)));
        }
        if self.d_e < 1 {
            return Err(ProcessError::BadSpec("d_E must be >= 1".into()));
        }
        let dim = self
            .try_global_dim()
            .ok_or(ProcessError::DimCap { dim: usize::MAX, cap: self.dim_cap })?;
        if dim > self.dim_cap {
            return Err(ProcessError::DimCap { dim, cap: self.dim_cap });
        }
        Ok(())
    }

    fn try_global_dim(&self) -> Option<usize> {
        let mut dim = self.d_e;
        for _ in 0..(2 * self.k + 1) {
            dim = dim.checked_mul(self.d_s)?;
        }
        Some(dim)
    }

    /// d_E * d_S^(2k+1), the propagated vector length.
    pub fn global_dim(&self) -> usize {
        self.try_global_dim().expect("validated at construction")
    }

    /// d_S^(2k+1), the Choi matrix dimension.
    pub fn choi_dim(&self) -> usize {
        self.global_dim() / self.d_e
    }

    /// [E, S, A1, B1, ..., Ak, Bk].
    pub fn global_layout(&self) -> SubsystemLayout {
        let mut factors: Vec<(String, usize)> =
            vec![("E".into(), self.d_e), ("S".into(), self.d_s)];
        for i in 1..=self.k {
            factors.push((format!("A{i}"), self.d_s));
            factors.push((format!("B{i}"), self.d_s));
        }
        SubsystemLayout::new(factors).expect("validated dims")
    }
}

/// Canonical Choi-state layout [S, A1, B1, ..., Ak, Bk].
pub fn choi_layout(k: usize, d_s: usize) -> SubsystemLayout {
    let mut factors: Vec<(String, usize)> = vec![("S".into(), d_s)];
    for i in 1..=k {
        factors.push((format!("A{i}"), d_s));
        factors.push((format!("B{i}"), d_s));
    }
    SubsystemLayout::new(factors).expect("positive dims")
}

/// Normalized process-tensor Choi matrix with its provenance metadata.
#[derive(Clone, Debug)]
pub struct ChoiState {
    pub matrix: ComplexMatrix,
    pub layout: SubsystemLayout,
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
}

impl ChoiState {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// |tr - 1|.
    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace() - C64::new(1.0, 0.0)).norm()
    }

    /// Eigenvalues of the (symmetrized) Choi matrix, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, ProcessError> {
        Ok(linalg::herm_eigvals(&self.matrix)?)
    }

    /// Number of eigenvalues above `tol`; bounded by d_E for any process
    /// built from a pure global state, since the traced-out environment has
    /// only d_E dimensions to hold correlations.
    pub fn numerical_rank(&self, tol: f64) -> Result<usize, ProcessError> {
        Ok(self.eigenvalues()?.iter().filter(|&&v| v > tol).count())
    }

    pub fn purity(&self) -> f64 {
        linalg::purity(&self.matrix)
    }
}

/// Draws the k+1 step unitaries the spec describes, in slot order.
///
/// Constant mode draws one unitary from the seed stream and repeats it in
/// every slot (the initial slot included); Random mode draws k+1 independent
/// unitaries sequentially from the stream.
pub fn draw_unitaries(spec: &ProcessSpec) -> Result<Vec<ComplexMatrix>, ProcessError> {
    let d = spec.d_e * spec.d_s;
    let mut r = haar::rng(spec.seed);
    match spec.mode {
        InteractionMode::Constant => {
            let u = haar::haar_unitary_from_rng(d, &mut r)?;
            Ok(vec![u; spec.k + 1])
        }
        InteractionMode::Random => (0..=spec.k)
            .map(|_| haar::haar_unitary_from_rng(d, &mut r).map_err(ProcessError::from))
            .collect(),
    }
}

fn initial_vector(spec: &ProcessSpec) -> Result<StateVector, ProcessError> {
    let layout = spec.global_layout();
    let d_es = spec.d_e * spec.d_s;
    let es_amps: Vec<C64> = match spec.initial_state {
        InitialState::BasisZero => {
            let mut a = vec![C64::new(0.0, 0.0); d_es];
            a[0] = C64::new(1.0, 0.0);
            a
        }
        InitialState::HaarPure(seed) => haar::haar_state(d_es, seed)?.amps().to_vec(),
    };
    // Joint amplitude: (E,S) part times one 1/sqrt(d_S) delta per (A_i, B_i)
    // pair, so only indices with a_i = b_i for all i are populated.
    let pair_norm = 1.0 / (spec.d_s as f64).powi(spec.k as i32).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    let d_s = spec.d_s;
    let pair_block = d_s * d_s;
    let pairs_dim = pair_block.pow(spec.k as u32);
    for es in 0..d_es {
        let base = es * pairs_dim;
        let amp = es_amps[es] * pair_norm;
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        // Enumerate diagonal pair indices a_i = b_i directly.
        let mut diag = vec![0usize; spec.k];
        loop {
            let mut offset = 0usize;
            for &j in diag.iter() {
                offset = offset * pair_block + j * d_s + j;
            }
            amps[base + offset] = amp;
            // Increment the mixed-radix counter over diagonal values.
            let mut pos = spec.k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                diag[pos] += 1;
                if diag[pos] < d_s {
                    break;
                }
                diag[pos] = 0;
            }
            if diag.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    Ok(StateVector::new(amps, layout)?)
}

fn propagate(spec: &ProcessSpec, unitaries: &[ComplexMatrix]) -> Result<StateVector, ProcessError> {
    let mut v = initial_vector(spec)?;
    v = v.apply_factor_unitary(&unitaries[0], &["E", "S"])?;
    for i in 1..=spec.k {
        v = v.swap_factors("S", &format!("A{i}"))?;
        v = v.apply_factor_unitary(&unitaries[i], &["E", "S"])?;
    }
    Ok(v)
}

fn choi_from_global(spec: &ProcessSpec, v: &StateVector) -> ChoiState {
    // E is the slowest factor, so the vector splits into d_E contiguous
    // blocks of length d_M; the traced state is the Gram accumulation
    // Choi[m, m'] = sum_e v[e, m] conj(v[e, m']).
    let d_m = spec.choi_dim();
    let amps = v.amps();
    let mut matrix = ComplexMatrix::zeros(d_m, d_m);
    for e in 0..spec.d_e {
        let block = &amps[e * d_m..(e + 1) * d_m];
        for m in 0..d_m {
            let a = block[m];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for mp in 0..d_m {
                matrix[(m, mp)] += a * block[mp].conj();
            }
        }
    }
    ChoiState {
        matrix,
        layout: choi_layout(spec.k, spec.d_s),
        k: spec.k,
        d_s: spec.d_s,
        d_e: spec.d_e,
    }
}

fn check_explicit(spec: &ProcessSpec, unitaries: &[ComplexMatrix]) -> Result<(), ProcessError> {
    if unitaries.len() != spec.k + 1 {
        return Err(ProcessError::UnitaryCount { got: unitaries.len(), want: spec.k + 1 });
    }
    let d = spec.d_e * spec.d_s;
    for (i, u) in unitaries.iter().enumerate() {
        if u.rows() != d || u.cols() != d {
            return Err(ProcessError::BadSpec(format!(
                "unitary {i} is {}x{}, need {d}x{d}",
                u.rows(),
                u.cols()
            )));
        }
        if !u.is_unitary(1e-10) {
            return Err(ProcessError::NotUnitary { index: i, tol: 1e-10 });
        }
    }
    Ok(())
}

/// Builds the Choi state, drawing unitaries according to the spec's mode.
pub fn build_choi(spec: &ProcessSpec) -> Result<ChoiState, ProcessError> {
    let unitaries = draw_unitaries(spec)?;
    let v = propagate(spec, &unitaries)?;
    Ok(choi_from_global(spec, &v))
}

/// Builds the Choi state from an explicit list of k+1 step unitaries.
pub fn build_choi_with_unitaries(
    spec: &ProcessSpec,
    unitaries: &[ComplexMatrix],
) -> Result<ChoiState, ProcessError> {
    check_explicit(spec, unitaries)?;
    let v = propagate(spec, unitaries)?;
    Ok(choi_from_global(spec, &v))
}

/// Propagated global pure state, exposed for purity and norm diagnostics.
pub fn global_state(
    spec: &ProcessSpec,
    unitaries: &[ComplexMatrix],
) -> Result<StateVector, ProcessError> {
    check_explicit(spec, unitaries)?;
    propagate(spec, unitaries)
}

/// Tensor product of the single-step marginals of a Choi state: the memoryless
/// reference made of marginal(A1), marginal(B1, A2), ..., marginal(Bk, S),
/// with factors permuted back into the canonical leg order.
pub fn markov_product(c: &ChoiState) -> Result<ChoiState, ProcessError> {
    if c.k == 0 {
        return Ok(c.clone());
    }
    let mut marg_keeps: Vec<Vec<String>> = vec![vec!["A1".into()]];
    for i in 1..c.k {
        marg_keeps.push(vec![format!("B{i}"), format!("A{}", i + 1)]);
    }
    marg_keeps.push(vec![format!("B{}", c.k), "S".into()]);

    let mut product: Option<(ComplexMatrix, Vec<(String, usize)>)> = None;
    for keep in &marg_keeps {
        let keep_refs: Vec<&str> = keep.iter().map(String::as_str).collect();
        let (marg, marg_layout) = partial_trace(&c.matrix, &c.layout, &keep_refs)?;
        product = Some(match product {
            None => (marg, marg_layout.factors().to_vec()),
            Some((acc, mut factors)) => {
                factors.extend(marg_layout.factors().iter().cloned());
                (kron(&acc, &marg)?, factors)
            }
        });
    }
    let (matrix, factors) = product.expect("k >= 1 yields at least one marginal");
    let built_layout = SubsystemLayout::new(factors)?;
    let canonical = choi_layout(c.k, c.d_s);
    let order: Vec<&str> = canonical.labels();
    let (matrix, layout) = permute_matrix_factors(&matrix, &built_layout, &order)?;
    Ok(ChoiState { matrix, layout, k: c.k, d_s: c.d_s, d_e: c.d_e })
}

/// Coarse-grains a process by keeping only the swap slots listed in `retain`
/// (a strictly increasing subset of 1..=k): each dropped slot removes its
/// swap and composes the adjacent evolutions, so the result is a
/// |retain|-step process over the same environment.
pub fn coarse_grain(
    spec: &ProcessSpec,
    unitaries: &[ComplexMatrix],
    retain: &[usize],
) -> Result<ChoiState, ProcessError> {
    check_explicit(spec, unitaries)?;
    if retain.is_empty() {
        return Err(ProcessError::BadRetain("retain set is empty".into()));
    }
    if retain.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProcessError::BadRetain("retain must be strictly increasing".into()));
    }
    if retain[0] < 1 || retain[retain.len() - 1] > spec.k {
        return Err(ProcessError::BadRetain(format!(
            "retain entries must lie in 1..={}",
            spec.k
        )));
    }
    // Segment boundaries: slot list [r_1, ..., r_m] composes original
    // evolutions [0, r_1), [r_1, r_2), ..., [r_m, k].
    let mut composed: Vec<ComplexMatrix> = Vec::with_capacity(retain.len() + 1);
    let mut start = 0usize;
    for &r in retain {
        composed.push(compose_segment(unitaries, start, r));
        start = r;
    }
    composed.push(compose_segment(unitaries, start, spec.k + 1));
    let coarse_spec = ProcessSpec {
        k: retain.len(),
        d_s: spec.d_s,
        d_e: spec.d_e,
        mode: spec.mode,
        initial_state: spec.initial_state,
        seed: spec.seed,
        dim_cap: spec.dim_cap,
    };
    build_choi_with_unitaries(&coarse_spec, &composed)
}

/// Product U_{end-1} ... U_{start} (applied left to right in circuit time).
fn compose_segment(unitaries: &[ComplexMatrix], start: usize, end: usize) -> ComplexMatrix {
    let mut acc = unitaries[start].clone();
    for u in &unitaries[start + 1..end] {
        acc = u.mul(&acc);
    }
    acc
}
