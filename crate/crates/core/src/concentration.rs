//! Tail statistics of sampled non-Markovianity against the analytic bound.
//!
//! The concentration claim under test: the probability that a sampled
//! estimate exceeds the analytic bound B_k by more than eps is at most
//! exp(-C eps^2). The claim is one-sided, so the experiment fails only on
//! a statistically significant violation: the lower end of a 99% Wilson
//! interval for the exceedance fraction rising above the analytic curve.

use thiserror::Error;

use crate::analytic::{
    bk_bound, concentration_c, ergodic_avg_purity, tail_bound, ti_avg_purity, AnalyticError,
    BoundInputs,
};
use crate::measures::{Estimator, MeasuresError};
use crate::process::{build_choi, InteractionMode, ProcessError, ProcessSpec};
use crate::symgroup::rational_to_f64;

/// Two-sided 99% normal quantile used for every Wilson interval.
pub const WILSON_Z_99: f64 = 2.5758293035489004;

/// Fewest samples a tail experiment accepts.
pub const MIN_TAIL_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum ConcentrationError {
    #[error("{got} samples given, tail statistics need at least {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("deviation grid is empty")]
    EmptyGrid,
    #[error("deviation grid must be finite, nonnegative, strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Measures(#[from] MeasuresError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

type Result<T> = std::result::Result<T, ConcentrationError>;

/// Wilson score interval for `count` successes in `samples` trials at
/// normal quantile `z`, clamped to [0, 1].
pub fn wilson_interval(count: usize, samples: usize, z: f64) -> (f64, f64) {
    assert!(samples > 0);
    let n = samples as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let radius = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - radius).max(0.0), (center + radius).min(1.0))
}

/// Outcome of one tail experiment: per-sample estimates, exceedance
/// statistics on the deviation grid, and the analytic curve they are held
/// against.
#[derive(Clone, Debug)]
pub struct TailReport {
    pub mode: InteractionMode,
    pub d_e: usize,
    pub d_s: usize,
    pub k: usize,
    pub estimator: Estimator,
    pub samples: usize,
    /// Analytic distance bound the deviations are measured from.
    pub bk: f64,
    /// Exponent constant of the analytic tail curve exp(-C eps^2).
    pub c_constant: f64,
    pub epsilons: Vec<f64>,
    pub exceed_counts: Vec<usize>,
    pub exceed_fractions: Vec<f64>,
    pub analytic_bounds: Vec<f64>,
    pub wilson_lower: Vec<f64>,
    pub wilson_upper: Vec<f64>,
    /// Per-sample estimator values in sample-index order.
    pub estimates: Vec<f64>,
    /// False only when some lower Wilson bound exceeds the analytic curve.
    pub passed: bool,
}

/// Average Choi purity matching the spec's interaction mode, the input B_k
/// expects: independent step unitaries average over each step separately,
/// a constant interaction needs the single-unitary average.
pub fn mode_avg_purity(spec: &ProcessSpec) -> Result<f64> {
    match spec.mode {
        InteractionMode::Random => Ok(ergodic_avg_purity(spec.d_e, spec.d_s, spec.k)?),
        InteractionMode::Constant => {
            Ok(rational_to_f64(&ti_avg_purity(spec.d_e, spec.d_s, spec.k)?))
        }
    }
}

/// Draws `samples` processes from `spec` (per-sample seed streams offset
/// from the spec's own, so results are independent of worker count),
/// evaluates `estimator` on each, and compares the exceedance fraction
/// of {estimate >= B_k + eps} against exp(-C eps^2) on the grid.
pub fn tail_experiment(
    spec: &ProcessSpec,
    samples: usize,
    epsilons: &[f64],
    estimator: Estimator,
) -> Result<TailReport> {
    if samples < MIN_TAIL_SAMPLES {
        return Err(ConcentrationError::TooFewSamples { got: samples, min: MIN_TAIL_SAMPLES });
    }
    if epsilons.is_empty() {
        return Err(ConcentrationError::EmptyGrid);
    }
    let well_formed = epsilons.iter().all(|e| e.is_finite() && *e >= 0.0)
        && epsilons.windows(2).all(|w| w[0] < w[1]);
    if !well_formed {
        return Err(ConcentrationError::BadGrid);
    }

    let bk = bk_bound(&BoundInputs::new(spec.d_e, spec.d_s, spec.k, mode_avg_purity(spec)?)?)?;
    let c_constant = concentration_c(spec.d_e, spec.d_s, spec.k, spec.mode);

    let estimates = sample_estimates(spec, samples, estimator)?;

    let mut exceed_counts = Vec::with_capacity(epsilons.len());
    let mut exceed_fractions = Vec::with_capacity(epsilons.len());
    let mut analytic_bounds = Vec::with_capacity(epsilons.len());
    let mut wilson_lower = Vec::with_capacity(epsilons.len());
    let mut wilson_upper = Vec::with_capacity(epsilons.len());
    let mut passed = true;
    for &eps in epsilons {
        let count = estimates.iter().filter(|&&v| v >= bk + eps).count();
        let fraction = count as f64 / samples as f64;
        let bound = tail_bound(eps, c_constant);
        let (lo, hi) = wilson_interval(count, samples, WILSON_Z_99);
        if lo > bound {
            passed = false;
        }
        exceed_counts.push(count);
        exceed_fractions.push(fraction);
        analytic_bounds.push(bound);
        wilson_lower.push(lo);
        wilson_upper.push(hi);
    }

    Ok(TailReport {
        mode: spec.mode,
        d_e: spec.d_e,
        d_s: spec.d_s,
        k: spec.k,
        estimator,
        samples,
        bk,
        c_constant,
        epsilons: epsilons.to_vec(),
        exceed_counts,
        exceed_fractions,
        analytic_bounds,
        wilson_lower,
        wilson_upper,
        estimates,
        passed,
    })
}

/// Per-sample estimates in sample-index order. Sample i always uses seed
/// stream (spec stream + 1 + i), so the result is a pure function of the
/// spec regardless of how the loop is split across threads.
fn sample_estimates(
    spec: &ProcessSpec,
    samples: usize,
    estimator: Estimator,
) -> Result<Vec<f64>> {
    let workers = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(samples);
    let chunk = samples.div_ceil(workers);
    let results: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            handles.push(scope.spawn(move || {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(samples);
                let mut vals = Vec::with_capacity(hi.saturating_sub(lo));
                for i in lo..hi {
                    let stream = spec.seed.stream_index + 1 + i as u64;
                    let sample_spec = ProcessSpec::new(
                        spec.k,
                        spec.d_s,
                        spec.d_e,
                        spec.mode,
                        spec.initial_state,
                        spec.seed.with_stream(stream),
                    )?;
                    let choi = build_choi(&sample_spec)?;
                    vals.push(estimator.evaluate(&choi)?);
                }
                Ok(vals)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("tail worker")).collect()
    });
    let mut estimates = Vec::with_capacity(samples);
    for r in results {
        estimates.extend(r?);
    }
    Ok(estimates)
}
