//! Campaign configuration: a TOML file with nested tables, every key
//! overridable by a flag, resolved into one validated struct.
//!
//! File schema (all tables and keys optional):
//!
//! ```toml
//! [grid]
//! d_s = 2
//! k = [1, 2, 3]
//! d_e = [2, 4, 8, 16, 32]
//! samples = "auto"          # or an integer; auto = floor(40 / k)
//!
//! [run]
//! mode = "random"           # or "constant"
//! master_seed = 7
//! estimator = "maxmixed"    # or "marginal" | "min"
//! workers = 2
//! epsilons = [0.2, 0.315, 0.5]
//!
//! [output]
//! dir = "out/fig4"
//! svg = true
//! ```
//!
//! Precedence per key: flag, then `PROCTENSOR_WORKERS` (workers only),
//! then file, then default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use proctensor_core::measures::Estimator;
use proctensor_core::process::InteractionMode;

/// Environment variable consulted for the worker count.
pub const WORKERS_ENV: &str = "PROCTENSOR_WORKERS";

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV/JSON/SVG results.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Interaction mode: random | constant.
    #[arg(long)]
    pub mode: Option<String>,
    /// System dimension.
    #[arg(long)]
    pub d_s: Option<usize>,
    /// Step counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Environment dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub d_e: Option<Vec<usize>>,
    /// Samples per grid point: an integer or "auto" (= floor(40/k)).
    #[arg(long)]
    pub samples: Option<String>,
    /// Master seed all per-sample seeds derive from.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Estimator recorded as the headline value: maxmixed | marginal | min.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Emit an SVG figure alongside the CSV/JSON outputs.
    #[arg(long)]
    pub svg: bool,
    /// Slack for ordering diagnostics (coarse vs fine comparisons).
    #[arg(long)]
    pub slack: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct TailArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Deviation grid, comma separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    grid: Option<GridSection>,
    run: Option<RunSection>,
    output: Option<OutputSection>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct GridSection {
    d_s: Option<usize>,
    k: Option<Vec<usize>>,
    d_e: Option<Vec<usize>>,
    samples: Option<toml::Value>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    mode: Option<String>,
    master_seed: Option<u64>,
    estimator: Option<String>,
    workers: Option<usize>,
    epsilons: Option<Vec<f64>>,
    slack: Option<f64>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    svg: Option<bool>,
}

/// Samples per grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplesSpec {
    /// floor(40 / k) per series, 40 at k = 0.
    Auto,
    Count(usize),
}

impl SamplesSpec {
    pub fn resolve(&self, k: usize) -> usize {
        match self {
            SamplesSpec::Auto => {
                if k == 0 {
                    40
                } else {
                    40 / k
                }
            }
            SamplesSpec::Count(n) => *n,
        }
    }

    /// Tail statistics need real counts; auto means 400 there.
    pub fn resolve_tail(&self) -> usize {
        match self {
            SamplesSpec::Auto => 400,
            SamplesSpec::Count(n) => *n,
        }
    }
}

fn parse_samples(text: &str) -> Result<SamplesSpec> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(SamplesSpec::Auto);
    }
    let n: usize = text
        .parse()
        .with_context(|| format!("samples must be an integer or \"auto\", got {text:?}"))?;
    if n == 0 {
        bail!("samples must be positive");
    }
    Ok(SamplesSpec::Count(n))
}

fn parse_mode(text: &str) -> Result<InteractionMode> {
    match text.to_ascii_lowercase().as_str() {
        "random" => Ok(InteractionMode::Random),
        "constant" => Ok(InteractionMode::Constant),
        other => bail!("mode must be random or constant, got {other:?}"),
    }
}

fn parse_estimator(text: &str) -> Result<Estimator> {
    match text.to_ascii_lowercase().as_str() {
        "maxmixed" => Ok(Estimator::MaxMixed),
        "marginal" => Ok(Estimator::MarginalProduct),
        "min" => Ok(Estimator::MinOfBoth),
        other => bail!("estimator must be maxmixed, marginal, or min, got {other:?}"),
    }
}

pub fn mode_name(mode: InteractionMode) -> &'static str {
    match mode {
        InteractionMode::Random => "random",
        InteractionMode::Constant => "constant",
    }
}

/// Fully resolved campaign parameters.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub campaign: &'static str,
    pub mode: InteractionMode,
    pub d_s: usize,
    pub k_list: Vec<usize>,
    pub d_e_list: Vec<usize>,
    pub samples: SamplesSpec,
    pub master_seed: u64,
    pub estimator: Estimator,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub epsilons: Option<Vec<f64>>,
    pub slack: f64,
}

impl ExperimentConfig {
    pub fn resolve(
        campaign: &'static str,
        args: &CommonArgs,
        epsilons_flag: Option<&[f64]>,
    ) -> Result<Self> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let grid = file.grid.unwrap_or_default();
        let run = file.run.unwrap_or_default();
        let output = file.output.unwrap_or_default();

        let samples = match (&args.samples, &grid.samples) {
            (Some(flag), _) => parse_samples(flag)?,
            (None, Some(toml::Value::String(s))) => parse_samples(s)?,
            (None, Some(toml::Value::Integer(n))) if *n > 0 => SamplesSpec::Count(*n as usize),
            (None, Some(other)) => bail!("grid.samples must be an integer or \"auto\", got {other}"),
            (None, None) => SamplesSpec::Auto,
        };
        let mode = match (&args.mode, &run.mode) {
            (Some(flag), _) => parse_mode(flag)?,
            (None, Some(text)) => parse_mode(text)?,
            (None, None) => InteractionMode::Random,
        };
        let estimator = match (&args.estimator, &run.estimator) {
            (Some(flag), _) => parse_estimator(flag)?,
            (None, Some(text)) => parse_estimator(text)?,
            (None, None) => Estimator::MaxMixed,
        };
        let workers = match (args.workers, workers_from_env()?, run.workers) {
            (Some(w), _, _) => w,
            (None, Some(w), _) => w,
            (None, None, Some(w)) => w,
            (None, None, None) => 1,
        };
        let epsilons = match (epsilons_flag, &run.epsilons) {
            (Some(flag), _) => Some(flag.to_vec()),
            (None, Some(file)) => Some(file.clone()),
            (None, None) => None,
        };

        let config = Self {
            campaign,
            mode,
            d_s: args.d_s.or(grid.d_s).unwrap_or(2),
            k_list: args.k.clone().or(grid.k).unwrap_or_else(|| vec![1, 2, 3]),
            d_e_list: args
                .d_e
                .clone()
                .or(grid.d_e)
                .unwrap_or_else(|| vec![2, 4, 8, 16, 32]),
            samples,
            master_seed: args.master_seed.or(run.master_seed).unwrap_or(7),
            estimator,
            workers,
            out_dir: args
                .out
                .clone()
                .or(output.dir)
                .unwrap_or_else(|| PathBuf::from("out").join(campaign)),
            svg: args.svg || output.svg.unwrap_or(false),
            epsilons,
            slack: args.slack.or(run.slack).unwrap_or(1e-12),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.d_s < 2 {
            bail!("d_s must be at least 2");
        }
        if self.k_list.is_empty() {
            bail!("k list is empty");
        }
        if self.d_e_list.is_empty() {
            bail!("d_e list is empty");
        }
        if self.d_e_list.iter().any(|&d| d == 0) {
            bail!("d_e entries must be positive");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if let SamplesSpec::Auto = self.samples {
            // floor(40/k) vanishes past k = 40.
            if self.k_list.iter().any(|&k| k > 40) {
                bail!("auto samples is floor(40/k); give explicit samples for k > 40");
            }
        }
        if !self.slack.is_finite() || self.slack < 0.0 {
            bail!("slack must be finite and nonnegative");
        }
        if let Some(eps) = &self.epsilons {
            let ok = !eps.is_empty()
                && eps.iter().all(|e| e.is_finite() && *e >= 0.0)
                && eps.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                bail!("epsilons must be finite, nonnegative, strictly increasing");
            }
        }
        Ok(())
    }

    /// Canonical one-line form, digested into the manifest.
    pub fn canonical_text(&self) -> String {
        format!(
            "campaign={};mode={};d_s={};k={:?};d_e={:?};samples={:?};seed={};estimator={};\
             eps={:?};slack={}",
            self.campaign,
            mode_name(self.mode),
            self.d_s,
            self.k_list,
            self.d_e_list,
            self.samples,
            self.master_seed,
            self.estimator,
            self.epsilons,
            self.slack,
        )
    }
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(text) => {
            let n: usize = text
                .parse()
                .with_context(|| format!("{WORKERS_ENV} must be an integer, got {text:?}"))?;
            if n == 0 {
                bail!("{WORKERS_ENV} must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Writes `name` under `dir`, creating the directory if needed.
pub fn write_output(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_the_standard_grid() {
        let cfg = ExperimentConfig::resolve("fig4", &CommonArgs::default(), None).unwrap();
        assert_eq!(cfg.d_s, 2);
        assert_eq!(cfg.k_list, vec![1, 2, 3]);
        assert_eq!(cfg.d_e_list, vec![2, 4, 8, 16, 32]);
        assert_eq!(cfg.samples, SamplesSpec::Auto);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn auto_samples_follow_the_step_count() {
        assert_eq!(SamplesSpec::Auto.resolve(1), 40);
        assert_eq!(SamplesSpec::Auto.resolve(2), 20);
        assert_eq!(SamplesSpec::Auto.resolve(3), 13);
        assert_eq!(SamplesSpec::Auto.resolve(0), 40);
        assert_eq!(SamplesSpec::Count(11).resolve(3), 11);
    }

    #[test]
    fn flags_override_file_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "[grid]\nd_s = 3\nk = [2]\n\n[run]\nmaster_seed = 100\nmode = \"constant\"\n",
        )
        .unwrap();
        let args = CommonArgs {
            config: Some(path),
            master_seed: Some(5),
            ..CommonArgs::default()
        };
        let cfg = ExperimentConfig::resolve("purity", &args, None).unwrap();
        assert_eq!(cfg.master_seed, 5, "flag wins");
        assert_eq!(cfg.d_s, 3, "file fills unflagged keys");
        assert_eq!(cfg.k_list, vec![2]);
        assert_eq!(cfg.mode, InteractionMode::Constant);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let args = CommonArgs { k: Some(vec![]), ..CommonArgs::default() };
        assert!(ExperimentConfig::resolve("fig4", &args, None).is_err());
        let args = CommonArgs { samples: Some("zero".into()), ..CommonArgs::default() };
        assert!(ExperimentConfig::resolve("fig4", &args, None).is_err());
        let args = CommonArgs { mode: Some("chaotic".into()), ..CommonArgs::default() };
        assert!(ExperimentConfig::resolve("fig4", &args, None).is_err());
        assert!(ExperimentConfig::resolve("tail", &CommonArgs::default(), Some(&[0.3, 0.1]))
            .is_err());
    }
}
