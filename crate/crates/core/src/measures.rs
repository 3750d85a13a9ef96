//! Non-Markovianity estimators on Choi states.
//!
//! The true non-Markovianity is the trace distance from the nearest
//! memoryless process, a minimum this crate never solves exactly. Instead
//! it computes two cheap admissible references, the maximally mixed state
//! and the tensor product of the state's own single-step marginals, each of
//! which upper-bounds the minimum. The related measures here share the same
//! shape: a restricted variant limited to a fixed observable set, and the
//! gap in the Pinsker inequality relating relative entropy to distance.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::haar::{self, SeedSpec};
use crate::linalg::{
    kron_all, relative_entropy_nats, trace_distance, ComplexMatrix, LinalgError, SubsystemLayout,
};
use crate::process::{markov_product, ChoiState, ProcessError};

#[derive(Debug, Error)]
pub enum MeasuresError {
    #[error("observable set is empty")]
    EmptyObservableSet,
    #[error("observable {index} is {got_rows}x{got_cols}, state dimension is {dim}")]
    ObservableDim { index: usize, got_rows: usize, got_cols: usize, dim: usize },
    #[error("states have dimensions {a} and {b}")]
    StateDim { a: usize, b: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

type Result<T> = std::result::Result<T, MeasuresError>;

/// Which memoryless reference an estimate measures the distance to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// Distance to the maximally mixed state on all legs.
    MaxMixed,
    /// Distance to the product of the state's own single-step marginals.
    MarginalProduct,
    /// The smaller of the two; still an upper bound on the true measure.
    MinOfBoth,
}

impl Estimator {
    /// The bare numeric value of this estimator on a Choi state.
    pub fn evaluate(&self, c: &ChoiState) -> Result<f64> {
        match self {
            Estimator::MaxMixed => nm_upper_maxmixed(c),
            Estimator::MarginalProduct => nm_upper_marginal(c),
            Estimator::MinOfBoth => {
                Ok(nm_upper_maxmixed(c)?.min(nm_upper_marginal(c)?))
            }
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Estimator::MaxMixed => "maxmixed",
            Estimator::MarginalProduct => "marginal",
            Estimator::MinOfBoth => "min",
        };
        f.write_str(name)
    }
}

/// An upper-bound estimate of a process's non-Markovianity, together with
/// the memoryless reference state that produced it.
#[derive(Clone, Debug)]
pub struct NmEstimate {
    pub value: f64,
    pub estimator: Estimator,
    pub reference_choi: Option<ChoiState>,
}

/// The maximally mixed state on the same legs as `c`.
fn maxmixed_reference(c: &ChoiState) -> ChoiState {
    let dim = c.dim();
    ChoiState {
        matrix: ComplexMatrix::identity(dim).scaled(C64::new(1.0 / dim as f64, 0.0)),
        layout: c.layout.clone(),
        k: c.k,
        d_s: c.d_s,
        d_e: c.d_e,
    }
}

/// Trace distance from the maximally mixed state, the noisiest memoryless
/// reference. Always an upper bound on the true non-Markovianity.
pub fn nm_upper_maxmixed(c: &ChoiState) -> Result<f64> {
    let reference = maxmixed_reference(c);
    Ok(trace_distance(&c.matrix, &reference.matrix)?)
}

/// Trace distance from the product of the state's own single-step
/// marginals. That product is itself an admissible memoryless process, so
/// this too upper-bounds the true measure. A zero-step process has no steps
/// to correlate; the value is defined as 0.
pub fn nm_upper_marginal(c: &ChoiState) -> Result<f64> {
    if c.k == 0 {
        return Ok(0.0);
    }
    let reference = markov_product(c)?;
    Ok(trace_distance(&c.matrix, &reference.matrix)?)
}

/// The smaller of the two upper bounds, tagged with the reference that won.
pub fn nm_estimate(c: &ChoiState) -> Result<NmEstimate> {
    let maxmixed = nm_upper_maxmixed(c)?;
    let marginal = nm_upper_marginal(c)?;
    let (value, reference) = if marginal <= maxmixed {
        let reference = if c.k == 0 { c.clone() } else { markov_product(c)? };
        (marginal, reference)
    } else {
        (maxmixed, maxmixed_reference(c))
    };
    Ok(NmEstimate {
        value,
        estimator: Estimator::MinOfBoth,
        reference_choi: Some(reference),
    })
}

/// Largest detectable deviation over a fixed observable set:
/// max over m of |tr[m (c - reference)]| / 2. For any Hermitian set this is
/// at most the trace distance; the difference of the two sign eigenspace
/// projectors of (c - reference) attains it exactly.
pub fn restricted_nm(
    c: &ChoiState,
    reference: &ChoiState,
    observables: &[ComplexMatrix],
) -> Result<f64> {
    if observables.is_empty() {
        return Err(MeasuresError::EmptyObservableSet);
    }
    let dim = c.dim();
    if reference.dim() != dim {
        return Err(MeasuresError::StateDim { a: dim, b: reference.dim() });
    }
    let delta = c.matrix.sub(&reference.matrix);
    let mut best = 0.0f64;
    for (index, m) in observables.iter().enumerate() {
        if m.rows() != dim || m.cols() != dim {
            return Err(MeasuresError::ObservableDim {
                index,
                got_rows: m.rows(),
                got_cols: m.cols(),
                dim,
            });
        }
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                tr += m[(i, j)] * delta[(j, i)];
            }
        }
        best = best.max(0.5 * tr.norm());
    }
    Ok(best)
}

/// Slack in the Pinsker inequality: the relative entropy of `c` from
/// `reference` (nats) minus twice the squared trace distance. Nonnegative
/// up to numerical error; +infinity when `c` has weight outside the
/// support of `reference`.
pub fn pinsker_gap(c: &ChoiState, reference: &ChoiState) -> Result<f64> {
    if reference.dim() != c.dim() {
        return Err(MeasuresError::StateDim { a: c.dim(), b: reference.dim() });
    }
    let rel = relative_entropy_nats(&c.matrix, &reference.matrix)?;
    if rel.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let dist = trace_distance(&c.matrix, &reference.matrix)?;
    Ok(rel - 2.0 * dist * dist)
}

/// `count` observables, each the tensor product of an independent
/// Haar-random rank-1 projector on every leg of `layout`. All randomness
/// comes from the one seeded stream, so equal seeds give equal sets.
pub fn product_projector_set(
    layout: &SubsystemLayout,
    count: usize,
    seed: SeedSpec,
) -> Result<Vec<ComplexMatrix>> {
    let mut rng = haar::rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut legs = Vec::with_capacity(layout.len());
        for (_, dim) in layout.factors() {
            let psi = haar::haar_state_from_rng(*dim, &mut rng)?;
            legs.push(psi.density());
        }
        let refs: Vec<&ComplexMatrix> = legs.iter().collect();
        out.push(kron_all(&refs)?);
    }
    Ok(out)
}
