//! Subcommand implementations. Every command writes its reports plus a
//! `manifest.json` into the output directory and returns the artifact list.

use super::config::{parse_config, RunConfig};
use super::manifest::RunManifest;
use super::{Cli, Command, ReportFormat};
use crate::error::{Error, Result};
use crate::fusion::{
    self, bandwidth_tradeoff, evaluate_on, rank_modalities, sweep_complexity, sweep_modalities,
    train_dmf, DmfConfig,
};
use crate::stats::{correlation_table, CorrelationMethod};
use crate::timeseries::{
    align, append_temporal, build_series, read_long_csv, read_modality_metadata, read_wide_csv,
    split, write_wide_csv, AlignedMatrix, Modality, ModalityKind, RawSeries, SamplingGrid,
};
use chrono::{DateTime, Utc};
use serde::Serialize;
use std::path::PathBuf;

pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    if cli.jobs > 0 {
        // the global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let config_path = cli.config.clone();
    let config = match &config_path {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.display().to_string(),
        source: e,
    })?;
    let seed = cli.seed.unwrap_or(config.training.seed);

    let mut ctx = Context {
        cli,
        config,
        config_path,
        seed,
        manifest: RunManifest::new(cli.command.name(), seed),
        artifacts: Vec::new(),
    };
    if let Some(path) = &ctx.config_path {
        ctx.manifest = ctx.manifest.clone().with_config(path)?;
    }

    match cli.command {
        Command::Synth => cmd_synth(&mut ctx)?,
        Command::Ingest => cmd_ingest(&mut ctx)?,
        Command::Correlate => cmd_correlate(&mut ctx)?,
        Command::Eigen => cmd_eigen(&mut ctx)?,
        Command::Train => cmd_train(&mut ctx)?,
        Command::Evaluate => cmd_evaluate(&mut ctx)?,
        Command::SweepComplexity => cmd_sweep_complexity(&mut ctx)?,
        Command::SweepModalities => cmd_sweep_modalities(&mut ctx)?,
        Command::Tradeoff => cmd_tradeoff(&mut ctx)?,
    }

    let manifest_path = ctx.manifest.write(&cli.out)?;
    ctx.artifacts.push(manifest_path);
    Ok(ctx.artifacts)
}

struct Context<'a> {
    cli: &'a Cli,
    config: RunConfig,
    config_path: Option<PathBuf>,
    seed: u64,
    manifest: RunManifest,
    artifacts: Vec<PathBuf>,
}

impl Context<'_> {
    fn write_artifact(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.cli.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.manifest.record_output(&path);
        self.artifacts.push(path);
        Ok(())
    }

    /// Write `name.csv` or `name.json` according to --format.
    fn write_report<T: Serialize>(&mut self, name: &str, json_value: &T, csv: &str) -> Result<()> {
        match self.cli.format {
            ReportFormat::Csv => self.write_artifact(&format!("{name}.csv"), csv),
            ReportFormat::Json => {
                let text = serde_json::to_string_pretty(json_value)
                    .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
                self.write_artifact(&format!("{name}.json"), &text)
            }
        }
    }

    fn dmf_config(&self) -> Result<DmfConfig> {
        let model = &self.config.model;
        let mut dmf = DmfConfig::new(
            self.config.require_predictors()?,
            self.config.require_targets()?,
            model.mode,
        );
        dmf.hidden_layers = model.hidden_layers.clone();
        dmf.normalize_targets = model.normalize_targets;
        dmf.temporal_id = model.temporal.clone();
        dmf.hyper = self.config.training.hyper;
        dmf.split_ratio = self.config.training.split_ratio;
        dmf.seed = self.seed;
        Ok(dmf)
    }

    fn model_dir(&self) -> PathBuf {
        self.cli.out.join("model")
    }
}

/// Everything a command needs to know about the loaded dataset.
struct LoadedDataset {
    matrix: AlignedMatrix,
    metadata: Vec<Modality>,
    dropped_rows: usize,
    dropped_non_finite: Vec<(String, usize)>,
}

fn infer_grid(
    raw: &[RawSeries],
    period_s: i64,
    start: Option<DateTime<Utc>>,
    count: Option<usize>,
) -> Result<SamplingGrid> {
    let first = raw
        .iter()
        .filter_map(|s| s.points.first().map(|p| p.0))
        .min()
        .ok_or(Error::EmptySeries)?;
    let last = raw
        .iter()
        .filter_map(|s| s.points.last().map(|p| p.0))
        .max()
        .ok_or(Error::EmptySeries)?;
    let start = start.unwrap_or(first);
    let count = match count {
        Some(c) => c,
        None => {
            let span = (last - start).num_seconds();
            if span < 0 {
                return Err(Error::NoOverlap);
            }
            (span / period_s) as usize + 1
        }
    };
    SamplingGrid::new(start, period_s, count)
}

fn load_dataset(ctx: &mut Context<'_>) -> Result<LoadedDataset> {
    let (raw, dataset_path) = if let Some(path) = &ctx.config.dataset.csv {
        (read_wide_csv(path)?, path.clone())
    } else if let Some(path) = &ctx.config.dataset.long_csv {
        (read_long_csv(path)?, path.clone())
    } else {
        return Err(Error::MissingKey("dataset.csv".into()));
    };
    ctx.manifest = ctx.manifest.clone().with_dataset(&dataset_path)?;

    let metadata = match &ctx.config.dataset.metadata {
        Some(path) => read_modality_metadata(path)?,
        None => Vec::new(),
    };
    let grid = infer_grid(
        &raw,
        ctx.config.grid.period_s,
        ctx.config.grid.start,
        ctx.config.grid.count,
    )?;

    let mut dropped_non_finite = Vec::new();
    let mut series = Vec::with_capacity(raw.len());
    for column in raw {
        let modality = metadata
            .iter()
            .find(|m| m.id == column.id)
            .cloned()
            .unwrap_or_else(|| {
                // no metadata: assume the column is already on the grid rate
                Modality::new(&column.id, ModalityKind::Pollutant, "", grid.period_s)
            });
        let built = build_series(modality, column.points)?;
        if built.dropped_non_finite > 0 {
            dropped_non_finite.push((built.series.modality.id.clone(), built.dropped_non_finite));
        }
        series.push(built.series);
    }

    let alignment = align(&series, &grid)?;
    let mut matrix = alignment.matrix;
    if let Some(id) = &ctx.config.model.temporal {
        matrix = append_temporal(&matrix, id)?;
    }
    Ok(LoadedDataset {
        matrix,
        metadata,
        dropped_rows: alignment.dropped_rows,
        dropped_non_finite,
    })
}

fn cmd_synth(ctx: &mut Context<'_>) -> Result<()> {
    let mut synth_config = ctx
        .config
        .synth
        .config
        .clone()
        .ok_or_else(|| Error::MissingKey("synth".into()))?;
    if ctx.cli.seed.is_some() {
        synth_config.seed = ctx.seed;
    }
    let dataset = crate::synthgen::generate(&synth_config)?;
    let mut matrix = dataset.matrix.clone();
    if ctx.config.synth.decorrelated {
        let extra = crate::synthgen::decorrelated_target(synth_config.rows, synth_config.seed);
        matrix = matrix.with_column("decorrelated", &extra)?;
    }

    let mut csv = Vec::new();
    write_wide_csv(&matrix, &mut csv)?;
    let csv_text = String::from_utf8(csv).map_err(|e| Error::Internal(e.to_string()))?;
    self_write_dataset(ctx, &csv_text)?;

    #[derive(Serialize)]
    struct SynthSummary<'a> {
        predictors: &'a [String],
        targets: &'a [String],
        rows: usize,
        noise_floor_percent: &'a [f64],
        seed: u64,
    }
    let summary = SynthSummary {
        predictors: &dataset.predictor_ids,
        targets: &dataset.target_ids,
        rows: synth_config.rows,
        noise_floor_percent: &dataset.noise_floor_percent,
        seed: synth_config.seed,
    };
    let mut floors_csv = String::from("target,noise_floor_percent\n");
    for (id, floor) in dataset.target_ids.iter().zip(&dataset.noise_floor_percent) {
        floors_csv.push_str(&format!("{id},{floor}\n"));
    }
    ctx.write_report("synth_summary", &summary, &floors_csv)
}

fn self_write_dataset(ctx: &mut Context<'_>, csv_text: &str) -> Result<()> {
    ctx.write_artifact("dataset.csv", csv_text)?;
    let path = ctx.cli.out.join("dataset.csv");
    ctx.manifest = ctx.manifest.clone().with_dataset(&path)?;
    Ok(())
}

fn cmd_ingest(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let mut csv = Vec::new();
    write_wide_csv(&loaded.matrix, &mut csv)?;
    let text = String::from_utf8(csv).map_err(|e| Error::Internal(e.to_string()))?;
    ctx.write_artifact("aligned.csv", &text)?;

    #[derive(Serialize)]
    struct IngestReport {
        rows: usize,
        columns: Vec<String>,
        dropped_rows: usize,
        dropped_non_finite: Vec<(String, usize)>,
        grid_period_s: i64,
    }
    let report = IngestReport {
        rows: loaded.matrix.n_rows(),
        columns: loaded.matrix.columns.clone(),
        dropped_rows: loaded.dropped_rows,
        dropped_non_finite: loaded.dropped_non_finite,
        grid_period_s: loaded.matrix.grid.period_s,
    };
    let csv = format!(
        "rows,dropped_rows,grid_period_s\n{},{},{}\n",
        report.rows, report.dropped_rows, report.grid_period_s
    );
    ctx.write_report("ingest_report", &report, &csv)
}

fn cmd_correlate(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let dmf = ctx.dmf_config()?;
    let columns = dmf.predictor_columns();
    let targets = dmf.targets.clone();

    for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
        let table = correlation_table(&loaded.matrix, &columns, &targets, method)?;
        ctx.write_report(&format!("correlation_{method}"), &table, &table.to_csv())?;
    }

    let ranking = rank_modalities(&loaded.matrix, &dmf, ctx.config.correlation.method)?;
    let mut csv = String::from("rank,predictor,score\n");
    for (i, (id, score)) in ranking.ranked.iter().enumerate() {
        csv.push_str(&format!("{},{id},{score}\n", i + 1));
    }
    ctx.write_report("ranking", &ranking, &csv)
}

fn cmd_eigen(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let section = &ctx.config.eigen;
    if section.groups.is_empty() {
        return Err(Error::MissingKey("eigen.groups".into()));
    }
    let reference = section
        .reference
        .clone()
        .ok_or_else(|| Error::MissingKey("eigen.reference".into()))?;
    let settings = crate::eigen::PowerIterationSettings {
        tol: section.tol,
        max_iter: section.max_iter,
        seed: ctx.seed,
    };
    let report = crate::eigen::eigen_report(
        &loaded.matrix,
        &section.groups,
        &reference,
        ctx.seed,
        &settings,
    )?;
    ctx.write_report("eigen_report", &report, &report.to_csv())
}

fn cmd_train(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let dmf = ctx.dmf_config()?;
    let trained = train_dmf(&loaded.matrix, &dmf)?;
    let model_dir = ctx.model_dir();
    let files = fusion::save_dmf(&trained, &model_dir)?;
    for f in &files {
        ctx.manifest.record_output(f);
    }
    ctx.artifacts.extend(files);

    #[derive(Serialize)]
    struct TrainReport {
        mode: String,
        targets: Vec<String>,
        total_params: usize,
        best_steps: Vec<usize>,
        best_val_losses: Vec<f64>,
        stopped: Vec<String>,
        warnings: Vec<String>,
    }
    let warnings = fusion::upsampled_target_warnings(
        &loaded.metadata,
        loaded.matrix.grid.period_s,
        &trained.targets,
    );
    let report = TrainReport {
        mode: trained.mode.to_string(),
        targets: trained.targets.clone(),
        total_params: trained.total_params,
        best_steps: trained.histories.iter().map(|h| h.best_step).collect(),
        best_val_losses: trained.histories.iter().map(|h| h.best_val_loss).collect(),
        stopped: trained
            .histories
            .iter()
            .map(|h| format!("{:?}", h.stopped_reason))
            .collect(),
        warnings,
    };
    let mut csv = String::from("target,best_step,best_val_loss\n");
    for (i, t) in report.targets.iter().enumerate() {
        csv.push_str(&format!(
            "{t},{},{}\n",
            report.best_steps[i], report.best_val_losses[i]
        ));
    }
    ctx.write_report("train_report", &report, &csv)
}

fn cmd_evaluate(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let trained = fusion::load_dmf(&ctx.model_dir())?;
    let (_, val) = split(&loaded.matrix, trained.config.split_ratio)?;
    let mut report = evaluate_on(&trained, &val)?;
    report.warnings = fusion::upsampled_target_warnings(
        &loaded.metadata,
        loaded.matrix.grid.period_s,
        &trained.targets,
    );
    if !ctx.config.bandwidth.rates.is_empty() {
        let bytes = trained
            .config
            .predictors
            .iter()
            .map(|id| {
                ctx.config.bandwidth.rates.get(id).copied().unwrap_or(0.0)
                    * ctx.config.bandwidth.payload_bytes
            })
            .sum();
        report.bandwidth_bytes_per_day = Some(bytes);
    }

    // per-target estimated-vs-true series over the validation window
    let rows = val.select_columns(&trained.predictor_columns)?;
    let estimates = fusion::estimate(&trained, &rows)?;
    for (t, id) in trained.targets.iter().enumerate() {
        let truth = val.column(id)?;
        let mut csv = String::from("timestamp,truth,estimate\n");
        for (i, ts) in val.timestamps.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{}\n",
                ts.format("%Y-%m-%dT%H:%M:%SZ"),
                truth[i],
                estimates[[i, t]]
            ));
        }
        ctx.write_artifact(&format!("estimates_{id}.csv"), &csv)?;
    }

    ctx.write_report("evaluation", &report, &report.to_csv())
}

fn cmd_sweep_complexity(ctx: &mut Context<'_>) -> Result<()> {
    let loaded = load_dataset(ctx)?;
    let dmf = ctx.dmf_config()?;
    let archs = ctx.config.sweep.architectures.clone();
    if archs.is_empty() {
        return Err(Error::MissingKey("sweep.architectures".into()));
    }
    let rows = sweep_complexity(&loaded.matrix, &dmf, &archs)?;
    ctx.write_report("complexity_sweep", &rows, &fusion::complexity_csv(&rows))
}

fn modality_sweep_rows(ctx: &mut Context<'_>) -> Result<Vec<fusion::ModalityRow>> {
    let loaded = load_dataset(ctx)?;
    let dmf = ctx.dmf_config()?;
    if ctx.config.sweep.counts.is_empty() {
        return Err(Error::MissingKey("sweep.counts".into()));
    }
    let ranking = rank_modalities(&loaded.matrix, &dmf, ctx.config.correlation.method)?;
    sweep_modalities(&loaded.matrix, &dmf, &ranking, &ctx.config.sweep.counts)
}

fn cmd_sweep_modalities(ctx: &mut Context<'_>) -> Result<()> {
    let rows = modality_sweep_rows(ctx)?;
    ctx.write_report("modality_sweep", &rows, &fusion::modality_csv(&rows))
}

fn cmd_tradeoff(ctx: &mut Context<'_>) -> Result<()> {
    let rows = modality_sweep_rows(ctx)?;
    let joined = bandwidth_tradeoff(
        &rows,
        &ctx.config.bandwidth.rates,
        ctx.config.bandwidth.payload_bytes,
    )?;
    ctx.write_report("bandwidth_tradeoff", &joined, &fusion::tradeoff_csv(&joined))
}
