//! Campaign runners behind the sampling subcommands.
//!
//! Every campaign follows the same shape: stamp the output directory via
//! the manifest, generate samples on a fixed-size worker pool (per-sample
//! seeds depend on the grid position and index only, never on the worker),
//! merge in index order, write CSV + JSON (+ optional SVG), finalize.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use proctensor_core::analytic::{self, BoundInputs};
use proctensor_core::concentration::tail_experiment;
use proctensor_core::haar::SeedSpec;
use proctensor_core::measures::{nm_upper_marginal, nm_upper_maxmixed, Estimator};
use proctensor_core::process::{
    build_choi_with_unitaries, coarse_grain, draw_unitaries, InitialState, InteractionMode,
    ProcessSpec,
};
use proctensor_core::symgroup::rational_to_f64;

use crate::config::{mode_name, write_output, ExperimentConfig};
use crate::manifest;
use crate::records::{
    csv_document, stats, CampaignSummary, CoarseCampaignSummary, CoarsePointSummary, CoarseRow,
    ConfigEcho, GridPointSummary, SampleRecord, SeriesSummary, TailCampaignSummary,
    TailReportSummary, TailRow, COARSE_CSV_HEADER, SAMPLE_CSV_HEADER, SUMMARY_SCHEMA_VERSION,
    TAIL_CSV_HEADER,
};
use crate::seeds::{digest, sample_seed};
use crate::svg::{Curve, Plot, Series};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")
}

fn point_spec(cfg: &ExperimentConfig, k: usize, d_e: usize, seed: u64) -> Result<ProcessSpec> {
    Ok(ProcessSpec::new(
        k,
        cfg.d_s,
        d_e,
        cfg.mode,
        InitialState::BasisZero,
        SeedSpec::new(seed, 0),
    )?)
}

fn one_sample(cfg: &ExperimentConfig, k: usize, d_e: usize, index: usize) -> Result<SampleRecord> {
    let seed = sample_seed(cfg.master_seed, cfg.campaign, k, d_e, index);
    let spec = point_spec(cfg, k, d_e, seed)?;
    let start = Instant::now();
    let choi = proctensor_core::process::build_choi(&spec)?;
    let purity = choi.purity();
    let nm_maxmixed = nm_upper_maxmixed(&choi)?;
    let nm_marginal = nm_upper_marginal(&choi)?;
    Ok(SampleRecord {
        campaign: cfg.campaign,
        mode: mode_name(cfg.mode),
        k,
        d_s: cfg.d_s,
        d_e,
        sample_index: index,
        seed,
        purity,
        nm_maxmixed,
        nm_marginal,
        nm_min: nm_maxmixed.min(nm_marginal),
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// All grid samples in deterministic (k, d_e, index) order.
fn collect_samples(cfg: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    let mut tasks: Vec<(usize, usize, usize)> = Vec::new();
    for &k in &cfg.k_list {
        let n = cfg.samples.resolve(k);
        if n == 0 {
            bail!("auto samples resolve to 0 at k = {k}; pass an explicit count");
        }
        for &d_e in &cfg.d_e_list {
            for i in 0..n {
                tasks.push((k, d_e, i));
            }
        }
    }
    pool(cfg.workers)?
        .install(|| tasks.par_iter().map(|&(k, d_e, i)| one_sample(cfg, k, d_e, i)).collect())
}

fn closed_form_purity(mode: InteractionMode, d_e: usize, d_s: usize, k: usize) -> Option<f64> {
    match mode {
        InteractionMode::Random => analytic::ergodic_avg_purity(d_e, d_s, k).ok(),
        InteractionMode::Constant => {
            analytic::ti_avg_purity(d_e, d_s, k).ok().map(|r| rational_to_f64(&r))
        }
    }
}

fn bound_for(mode: InteractionMode, d_e: usize, d_s: usize, k: usize) -> Option<f64> {
    let purity = closed_form_purity(mode, d_e, d_s, k)?;
    let inputs = BoundInputs::new(d_e, d_s, k, purity).ok()?;
    analytic::bk_bound(&inputs).ok()
}

fn column_stats(group: &[&SampleRecord], pick: impl Fn(&SampleRecord) -> f64) -> (f64, f64, f64) {
    let values: Vec<f64> = group.iter().map(|r| pick(r)).collect();
    stats(&values)
}

fn build_summary(cfg: &ExperimentConfig, records: &[SampleRecord], wall: f64) -> CampaignSummary {
    let mut series = Vec::new();
    let mut missing_bound = false;
    for &k in &cfg.k_list {
        let mut points = Vec::new();
        for &d_e in &cfg.d_e_list {
            let group: Vec<&SampleRecord> =
                records.iter().filter(|r| r.k == k && r.d_e == d_e).collect();
            let (mean_purity, sd_purity, se_purity) = column_stats(&group, |r| r.purity);
            let (mean_mm, sd_mm, se_mm) = column_stats(&group, |r| r.nm_maxmixed);
            let (mean_mg, sd_mg, se_mg) = column_stats(&group, |r| r.nm_marginal);
            let (mean_mn, sd_mn, se_mn) = column_stats(&group, |r| r.nm_min);
            let (mean_wall, _, _) = column_stats(&group, |r| r.wall_time_secs);
            let bound_bk = bound_for(cfg.mode, d_e, cfg.d_s, k);
            if bound_bk.is_none() {
                missing_bound = true;
            }
            points.push(GridPointSummary {
                d_e,
                samples: group.len(),
                mean_purity,
                sd_purity,
                se_purity,
                mean_nm_maxmixed: mean_mm,
                sd_nm_maxmixed: sd_mm,
                se_nm_maxmixed: se_mm,
                mean_nm_marginal: mean_mg,
                sd_nm_marginal: sd_mg,
                se_nm_marginal: se_mg,
                mean_nm_min: mean_mn,
                sd_nm_min: sd_mn,
                se_nm_min: se_mn,
                mean_wall_time_secs: mean_wall,
                bound_bk,
                purity_closed_form: closed_form_purity(cfg.mode, d_e, cfg.d_s, k),
            });
        }
        series.push(SeriesSummary { k, samples_per_point: cfg.samples.resolve(k), points });
    }
    let mut notes =
        vec!["default d_e grid (2,4,8,16,32) and floor(40/k) auto samples are project \
              conventions"
            .to_string()];
    if missing_bound {
        notes.push(
            "bound overlay omitted where the constant-interaction average purity is \
             unavailable (k > 2 needs the ti-k3 feature)"
                .to_string(),
        );
    }
    CampaignSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        campaign: cfg.campaign,
        config: ConfigEcho::from_config(cfg),
        notes,
        series,
        wall_time_secs: wall,
    }
}

/// (mean, se) of the column the configured estimator names.
fn selected_stats(point: &GridPointSummary, estimator: Estimator) -> (f64, f64) {
    match estimator {
        Estimator::MaxMixed => (point.mean_nm_maxmixed, point.se_nm_maxmixed),
        Estimator::MarginalProduct => (point.mean_nm_marginal, point.se_nm_marginal),
        Estimator::MinOfBoth => (point.mean_nm_min, point.se_nm_min),
    }
}

fn grid_svg(
    cfg: &ExperimentConfig,
    summary: &CampaignSummary,
    title: &str,
    y_label: &str,
    value: impl Fn(&GridPointSummary) -> (f64, f64),
    overlay: impl Fn(&GridPointSummary) -> Option<f64>,
    overlay_label: &str,
) -> String {
    let mut plot = Plot {
        title: title.to_string(),
        x_label: "environment dimension d_E".to_string(),
        y_label: y_label.to_string(),
        log2_x: true,
        series: Vec::new(),
        curves: Vec::new(),
    };
    for (idx, series) in summary.series.iter().enumerate() {
        let mut pts = Vec::new();
        let mut errs = Vec::new();
        let mut curve = Vec::new();
        for p in &series.points {
            let (mean, se) = value(p);
            pts.push((p.d_e as f64, mean));
            errs.push(se);
            if let Some(b) = overlay(p) {
                curve.push((p.d_e as f64, b));
            }
        }
        plot.series.push(Series {
            label: format!("k={} ({})", series.k, mode_name(cfg.mode)),
            color_index: idx,
            points: pts,
            y_err: errs,
        });
        if curve.len() == series.points.len() {
            plot.curves.push(Curve {
                label: format!("{overlay_label} k={}", series.k),
                color_index: idx,
                dashed: true,
                points: curve,
            });
        }
    }
    plot.to_svg()
}

fn campaign_files(stem: &str, svg: bool) -> Vec<String> {
    let mut files = vec![format!("{stem}.csv"), format!("{stem}_summary.json")];
    if svg {
        files.push(format!("{stem}.svg"));
    }
    files
}

pub fn run_fig4(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let cfg_digest = digest(&cfg.canonical_text());
    let files = campaign_files("fig4", cfg.svg);
    manifest::prepare(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    let records = collect_samples(cfg)?;
    let csv = csv_document(SAMPLE_CSV_HEADER, records.iter().map(|r| r.csv_row()));
    write_output(&cfg.out_dir, "fig4.csv", &csv)?;

    let summary = build_summary(cfg, &records, start.elapsed().as_secs_f64());
    let json = serde_json::to_string_pretty(&summary)?;
    write_output(&cfg.out_dir, "fig4_summary.json", &json)?;

    if cfg.svg {
        let svg = grid_svg(
            cfg,
            &summary,
            "mean non-Markovianity estimate vs environment dimension",
            &format!("mean {} estimate", cfg.estimator),
            |p| selected_stats(p, cfg.estimator),
            |p| p.bound_bk,
            "bound",
        );
        write_output(&cfg.out_dir, "fig4.svg", &svg)?;
    }
    manifest::finalize(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    for series in &summary.series {
        for p in &series.points {
            let (mean, se) = selected_stats(p, cfg.estimator);
            let bound = p
                .bound_bk
                .map(|b| format!("{b:.6}"))
                .unwrap_or_else(|| "n/a".to_string());
            println!(
                "fig4 k={} d_e={}: mean={mean:.6} se={se:.6} bound={bound} n={}",
                series.k, p.d_e, p.samples
            );
        }
    }
    println!("fig4: wrote {} files to {}", files.len(), cfg.out_dir.display());
    Ok(())
}

pub fn run_purity_scan(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let cfg_digest = digest(&cfg.canonical_text());
    let files = campaign_files("purity", cfg.svg);
    manifest::prepare(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    let records = collect_samples(cfg)?;
    let csv = csv_document(SAMPLE_CSV_HEADER, records.iter().map(|r| r.csv_row()));
    write_output(&cfg.out_dir, "purity.csv", &csv)?;

    let summary = build_summary(cfg, &records, start.elapsed().as_secs_f64());
    let json = serde_json::to_string_pretty(&summary)?;
    write_output(&cfg.out_dir, "purity_summary.json", &json)?;

    if cfg.svg {
        let svg = grid_svg(
            cfg,
            &summary,
            "mean sampled purity vs environment dimension",
            "mean tr(state^2)",
            |p| (p.mean_purity, p.se_purity),
            |p| p.purity_closed_form,
            "exact",
        );
        write_output(&cfg.out_dir, "purity.svg", &svg)?;
    }
    manifest::finalize(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    for series in &summary.series {
        for p in &series.points {
            let exact = p
                .purity_closed_form
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "n/a".to_string());
            println!(
                "purity k={} d_e={}: mean={:.6} se={:.6} exact={exact} n={}",
                series.k, p.d_e, p.mean_purity, p.se_purity, p.samples
            );
        }
    }
    println!("purity: wrote {} files to {}", files.len(), cfg.out_dir.display());
    Ok(())
}

/// Deviation grid when none is configured: 0.2 and 0.5 bracketing the
/// dimension-dependent scale d_E^{-1/3}.
fn default_epsilons(d_e: usize) -> Vec<f64> {
    let mut eps = vec![0.2, analytic::epsilon_scale(d_e), 0.5];
    eps.sort_by(f64::total_cmp);
    eps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    eps
}

pub fn run_tail(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let samples = cfg.samples.resolve_tail();
    let cfg_digest = digest(&cfg.canonical_text());
    let files = campaign_files("tail", cfg.svg);
    manifest::prepare(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    let mut rows: Vec<TailRow> = Vec::new();
    let mut reports = Vec::new();
    for &k in &cfg.k_list {
        for &d_e in &cfg.d_e_list {
            let base_seed = sample_seed(cfg.master_seed, cfg.campaign, k, d_e, 0);
            let spec = point_spec(cfg, k, d_e, base_seed)?;
            let eps = cfg.epsilons.clone().unwrap_or_else(|| default_epsilons(d_e));
            let report = tail_experiment(&spec, samples, &eps, cfg.estimator)
                .with_context(|| format!("tail experiment at k={k}, d_e={d_e}"))?;
            for (i, &estimate) in report.estimates.iter().enumerate() {
                rows.push(TailRow {
                    campaign: cfg.campaign,
                    mode: mode_name(cfg.mode),
                    k,
                    d_s: cfg.d_s,
                    d_e,
                    base_seed,
                    sample_index: i,
                    estimate,
                });
            }
            reports.push(TailReportSummary::from_report(&report, base_seed));
        }
    }

    let csv = csv_document(TAIL_CSV_HEADER, rows.iter().map(|r| r.csv_row()));
    write_output(&cfg.out_dir, "tail.csv", &csv)?;

    let all_passed = reports.iter().all(|r| r.passed);
    let summary = TailCampaignSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        campaign: cfg.campaign,
        config: ConfigEcho::from_config(cfg),
        reports,
        all_passed,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_output(&cfg.out_dir, "tail_summary.json", &json)?;

    if cfg.svg {
        write_output(&cfg.out_dir, "tail.svg", &tail_svg(&summary))?;
    }
    manifest::finalize(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    for r in &summary.reports {
        println!(
            "tail k={} d_e={}: bk={:.4} C={:.4} exceed={:?} bound={:?} {}",
            r.k,
            r.d_e,
            r.bk,
            r.c_constant,
            r.exceed_fractions,
            r.analytic_bounds.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>(),
            if r.passed { "ok" } else { "VIOLATION" }
        );
    }
    println!(
        "tail: {} ({} grid points, {} samples each)",
        if all_passed { "no significant violation" } else { "significant violation found" },
        summary.reports.len(),
        samples
    );
    Ok(())
}

fn tail_svg(summary: &TailCampaignSummary) -> String {
    let mut plot = Plot {
        title: "exceedance fraction vs deviation".to_string(),
        x_label: "deviation epsilon".to_string(),
        y_label: "fraction of samples above bound + epsilon".to_string(),
        log2_x: false,
        series: Vec::new(),
        curves: Vec::new(),
    };
    for (idx, r) in summary.reports.iter().enumerate() {
        let pts: Vec<(f64, f64)> =
            r.epsilons.iter().zip(&r.exceed_fractions).map(|(&e, &f)| (e, f)).collect();
        let errs: Vec<f64> = r
            .exceed_fractions
            .iter()
            .zip(r.wilson_lower.iter().zip(&r.wilson_upper))
            .map(|(&f, (&lo, &hi))| (f - lo).max(hi - f))
            .collect();
        plot.series.push(Series {
            label: format!("k={} d_E={}", r.k, r.d_e),
            color_index: idx,
            points: pts,
            y_err: errs,
        });
        plot.curves.push(Curve {
            label: format!("exp(-C eps^2) k={} d_E={}", r.k, r.d_e),
            color_index: idx,
            dashed: true,
            points: r.epsilons.iter().zip(&r.analytic_bounds).map(|(&e, &b)| (e, b)).collect(),
        });
    }
    plot.to_svg()
}

fn coarse_sample(
    cfg: &ExperimentConfig,
    k: usize,
    d_e: usize,
    index: usize,
) -> Result<Vec<CoarseRow>> {
    let seed = sample_seed(cfg.master_seed, cfg.campaign, k, d_e, index);
    let spec = point_spec(cfg, k, d_e, seed)?;
    let unitaries = draw_unitaries(&spec)?;
    let fine = build_choi_with_unitaries(&spec, &unitaries)?;
    let estimate_fine = cfg.estimator.evaluate(&fine)?;
    let mut rows = Vec::with_capacity(k);
    for slot in 1..=k {
        let coarse = coarse_grain(&spec, &unitaries, &[slot])?;
        let estimate_coarse = cfg.estimator.evaluate(&coarse)?;
        rows.push(CoarseRow {
            campaign: cfg.campaign,
            mode: mode_name(cfg.mode),
            k,
            d_s: cfg.d_s,
            d_e,
            sample_index: index,
            seed,
            retained: slot,
            estimate_fine,
            estimate_coarse,
        });
    }
    Ok(rows)
}

pub fn run_coarse(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    if let Some(&k) = cfg.k_list.iter().find(|&&k| k < 2) {
        bail!("coarse graining needs k >= 2, got k = {k}");
    }
    let cfg_digest = digest(&cfg.canonical_text());
    let files = vec!["coarse.csv".to_string(), "coarse_summary.json".to_string()];
    manifest::prepare(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    let mut tasks: Vec<(usize, usize, usize)> = Vec::new();
    for &k in &cfg.k_list {
        let n = cfg.samples.resolve(k);
        if n == 0 {
            bail!("auto samples resolve to 0 at k = {k}; pass an explicit count");
        }
        for &d_e in &cfg.d_e_list {
            for i in 0..n {
                tasks.push((k, d_e, i));
            }
        }
    }
    let nested: Vec<Vec<CoarseRow>> = pool(cfg.workers)?.install(|| {
        tasks.par_iter().map(|&(k, d_e, i)| coarse_sample(cfg, k, d_e, i)).collect::<Result<_>>()
    })?;
    let rows: Vec<CoarseRow> = nested.into_iter().flatten().collect();

    let csv = csv_document(COARSE_CSV_HEADER, rows.iter().map(|r| r.csv_row()));
    write_output(&cfg.out_dir, "coarse.csv", &csv)?;

    let mut points = Vec::new();
    for &k in &cfg.k_list {
        for &d_e in &cfg.d_e_list {
            let group: Vec<&CoarseRow> =
                rows.iter().filter(|r| r.k == k && r.d_e == d_e).collect();
            let ordered = |slot: Option<usize>| {
                let pairs: Vec<&&CoarseRow> = group
                    .iter()
                    .filter(|r| slot.is_none_or(|s| r.retained == s))
                    .collect();
                let hits = pairs
                    .iter()
                    .filter(|r| r.estimate_coarse <= r.estimate_fine + cfg.slack)
                    .count();
                hits as f64 / pairs.len().max(1) as f64
            };
            points.push(CoarsePointSummary {
                k,
                d_e,
                samples: cfg.samples.resolve(k),
                ordered_fraction: ordered(None),
                ordered_fraction_by_slot: (1..=k).map(|s| ordered(Some(s))).collect(),
            });
        }
    }
    let summary = CoarseCampaignSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        campaign: cfg.campaign,
        config: ConfigEcho::from_config(cfg),
        notes: vec![
            "ordered_fraction is diagnostic only; single-step coarse graining is not \
             guaranteed to reduce the estimate against a fixed reference"
                .to_string(),
        ],
        points,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_output(&cfg.out_dir, "coarse_summary.json", &json)?;
    manifest::finalize(&cfg.out_dir, cfg.campaign, &cfg_digest, &files)?;

    for p in &summary.points {
        println!(
            "coarse k={} d_e={}: ordered_fraction={:.3} by_slot={:?} n={}",
            p.k,
            p.d_e,
            p.ordered_fraction,
            p.ordered_fraction_by_slot.iter().map(|f| (f * 1e3).round() / 1e3).collect::<Vec<_>>(),
            p.samples
        );
    }
    println!("coarse: wrote {} files to {}", files.len(), cfg.out_dir.display());
    Ok(())
}
