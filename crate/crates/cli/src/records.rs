//! Result rows and summary documents.
//!
//! CSV rows carry only values that are pure functions of the seed, so a
//! rerun of the same config is byte-identical; wall-clock timings go to the
//! JSON summary alone. Floats are written in shortest round-trip form.

use serde::Serialize;

use proctensor_core::concentration::TailReport;
use proctensor_core::haar::PRNG_ALGORITHM;

use crate::config::{mode_name, ExperimentConfig};

/// Version stamp on every JSON summary document.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// One sampled process and everything measured on it.
#[derive(Clone, Debug)]
pub struct SampleRecord {
    pub campaign: &'static str,
    pub mode: &'static str,
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub sample_index: usize,
    pub seed: u64,
    pub purity: f64,
    pub nm_maxmixed: f64,
    pub nm_marginal: f64,
    pub nm_min: f64,
    /// JSON-summary aggregate only; never written to CSV.
    pub wall_time_secs: f64,
}

pub const SAMPLE_CSV_HEADER: &str =
    "campaign,mode,k,d_s,d_e,sample_index,seed,purity,nm_maxmixed,nm_marginal,nm_min";

impl SampleRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.campaign,
            self.mode,
            self.k,
            self.d_s,
            self.d_e,
            self.sample_index,
            self.seed,
            self.purity,
            self.nm_maxmixed,
            self.nm_marginal,
            self.nm_min
        )
    }
}

/// Joins a header and rows into one CSV document.
pub fn csv_document(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Mean, standard deviation, and standard error of a slice.
pub fn stats(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt(), (var / n).sqrt())
}

#[derive(Serialize, Debug)]
pub struct ConfigEcho {
    pub mode: &'static str,
    pub d_s: usize,
    pub k: Vec<usize>,
    pub d_e: Vec<usize>,
    pub master_seed: u64,
    pub estimator: String,
    pub workers: usize,
    pub prng_algorithm: &'static str,
}

impl ConfigEcho {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            mode: mode_name(cfg.mode),
            d_s: cfg.d_s,
            k: cfg.k_list.clone(),
            d_e: cfg.d_e_list.clone(),
            master_seed: cfg.master_seed,
            estimator: cfg.estimator.to_string(),
            workers: cfg.workers,
            prng_algorithm: PRNG_ALGORITHM,
        }
    }
}

#[derive(Serialize, Debug)]
pub struct GridPointSummary {
    pub d_e: usize,
    pub samples: usize,
    pub mean_purity: f64,
    pub sd_purity: f64,
    pub se_purity: f64,
    pub mean_nm_maxmixed: f64,
    pub sd_nm_maxmixed: f64,
    pub se_nm_maxmixed: f64,
    pub mean_nm_marginal: f64,
    pub sd_nm_marginal: f64,
    pub se_nm_marginal: f64,
    pub mean_nm_min: f64,
    pub sd_nm_min: f64,
    pub se_nm_min: f64,
    pub mean_wall_time_secs: f64,
    /// Analytic distance bound at this grid point, when computable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_bk: Option<f64>,
    /// Closed-form average purity at this grid point, when computable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_closed_form: Option<f64>,
}

#[derive(Serialize, Debug)]
pub struct SeriesSummary {
    pub k: usize,
    pub samples_per_point: usize,
    pub points: Vec<GridPointSummary>,
}

#[derive(Serialize, Debug)]
pub struct CampaignSummary {
    pub schema_version: u32,
    pub campaign: &'static str,
    pub config: ConfigEcho,
    /// Provenance notes, e.g. that the d_E grid is a repo choice.
    pub notes: Vec<String>,
    pub series: Vec<SeriesSummary>,
    pub wall_time_secs: f64,
}

#[derive(Serialize, Debug)]
pub struct TailReportSummary {
    pub mode: &'static str,
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub base_seed: u64,
    pub estimator: String,
    pub samples: usize,
    pub bk: f64,
    pub c_constant: f64,
    pub epsilons: Vec<f64>,
    pub exceed_counts: Vec<usize>,
    pub exceed_fractions: Vec<f64>,
    pub analytic_bounds: Vec<f64>,
    pub wilson_lower: Vec<f64>,
    pub wilson_upper: Vec<f64>,
    pub passed: bool,
}

impl TailReportSummary {
    pub fn from_report(r: &TailReport, base_seed: u64) -> Self {
        Self {
            mode: match r.mode {
                proctensor_core::process::InteractionMode::Random => "random",
                proctensor_core::process::InteractionMode::Constant => "constant",
            },
            k: r.k,
            d_s: r.d_s,
            d_e: r.d_e,
            base_seed,
            estimator: r.estimator.to_string(),
            samples: r.samples,
            bk: r.bk,
            c_constant: r.c_constant,
            epsilons: r.epsilons.clone(),
            exceed_counts: r.exceed_counts.clone(),
            exceed_fractions: r.exceed_fractions.clone(),
            analytic_bounds: r.analytic_bounds.clone(),
            wilson_lower: r.wilson_lower.clone(),
            wilson_upper: r.wilson_upper.clone(),
            passed: r.passed,
        }
    }
}

#[derive(Serialize, Debug)]
pub struct TailCampaignSummary {
    pub schema_version: u32,
    pub campaign: &'static str,
    pub config: ConfigEcho,
    pub reports: Vec<TailReportSummary>,
    pub all_passed: bool,
    pub wall_time_secs: f64,
}

/// One raw tail-experiment estimate; sample seeds derive from `base_seed`
/// by stream offset, so rows are recomputable in isolation.
#[derive(Clone, Debug)]
pub struct TailRow {
    pub campaign: &'static str,
    pub mode: &'static str,
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub base_seed: u64,
    pub sample_index: usize,
    pub estimate: f64,
}

pub const TAIL_CSV_HEADER: &str = "campaign,mode,k,d_s,d_e,base_seed,sample_index,estimate";

impl TailRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.campaign,
            self.mode,
            self.k,
            self.d_s,
            self.d_e,
            self.base_seed,
            self.sample_index,
            self.estimate
        )
    }
}

/// One fine/coarse estimate pair from a shared unitary draw.
#[derive(Clone, Debug)]
pub struct CoarseRow {
    pub campaign: &'static str,
    pub mode: &'static str,
    pub k: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub sample_index: usize,
    pub seed: u64,
    /// Which single swap slot the coarse process kept, in 1..=k.
    pub retained: usize,
    pub estimate_fine: f64,
    pub estimate_coarse: f64,
}

pub const COARSE_CSV_HEADER: &str =
    "campaign,mode,k,d_s,d_e,sample_index,seed,retained,estimate_fine,estimate_coarse";

impl CoarseRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.campaign,
            self.mode,
            self.k,
            self.d_s,
            self.d_e,
            self.sample_index,
            self.seed,
            self.retained,
            self.estimate_fine,
            self.estimate_coarse
        )
    }
}

#[derive(Serialize, Debug)]
pub struct CoarsePointSummary {
    pub k: usize,
    pub d_e: usize,
    pub samples: usize,
    /// Pairs with estimate_coarse <= estimate_fine + 1e-12, over all pairs.
    pub ordered_fraction: f64,
    /// Same fraction split by which slot was retained.
    pub ordered_fraction_by_slot: Vec<f64>,
}

#[derive(Serialize, Debug)]
pub struct CoarseCampaignSummary {
    pub schema_version: u32,
    pub campaign: &'static str,
    pub config: ConfigEcho,
    pub notes: Vec<String>,
    pub points: Vec<CoarsePointSummary>,
    pub wall_time_secs: f64,
}
