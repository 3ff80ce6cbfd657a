//! The modality-fusion pipeline: assemble predictor/target sets from an
//! aligned dataset, train isolated per-target regressors (ITR) or one
//! unified multi-output regressor (UTR), synthesize target modalities from
//! predictor rows, and score them with range-normalized MAE.

mod sweep;

pub use sweep::{
    bandwidth_tradeoff, complexity_csv, modality_csv, sweep_complexity, sweep_modalities,
    tradeoff_csv, ComplexityRow, ModalityRow, TradeoffRow,
};

use crate::error::{Error, Result};
use crate::nn::{
    forward, load_checkpoint, param_count, save_checkpoint, train, Checkpoint, CheckpointMeta,
    MlpSpec, TrainHistory, TrainHyper, TrainedModel, CHECKPOINT_VERSION,
};
use crate::seed::mix_seed;
use crate::timeseries::{
    minmax_apply, minmax_fit, minmax_invert, split, AlignedMatrix, Modality, NormStats,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmfMode {
    /// One independent model per estimated modality.
    Itr,
    /// A single multi-output model for all estimated modalities.
    Utr,
}

impl std::fmt::Display for DmfMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DmfMode::Itr => write!(f, "itr"),
            DmfMode::Utr => write!(f, "utr"),
        }
    }
}

/// Configuration of one fusion experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmfConfig {
    /// Predictor modality ids. The id named by `temporal_id` expands to its
    /// `_sin`/`_cos` column pair but still counts as one modality.
    pub predictors: Vec<String>,
    pub targets: Vec<String>,
    pub mode: DmfMode,
    pub hidden_layers: Vec<usize>,
    pub hyper: TrainHyper,
    pub split_ratio: f64,
    /// Min-max normalize targets before training (the default). Turning
    /// this off exposes raw dynamic-range disparity to a unified model.
    pub normalize_targets: bool,
    pub temporal_id: Option<String>,
    pub seed: u64,
}

impl DmfConfig {
    pub fn new(predictors: Vec<String>, targets: Vec<String>, mode: DmfMode) -> DmfConfig {
        DmfConfig {
            predictors,
            targets,
            mode,
            hidden_layers: vec![64, 64],
            hyper: TrainHyper::default(),
            split_ratio: 0.8,
            normalize_targets: true,
            temporal_id: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::MissingKey("predictors".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::MissingKey("targets".into()));
        }
        for t in &self.targets {
            if self.predictors.contains(t) {
                return Err(Error::InvalidConfig(format!(
                    "modality `{t}` appears in both predictors and targets"
                )));
            }
        }
        Ok(())
    }

    /// Dataset column names backing the predictor list: the temporal
    /// modality contributes its sin/cos pair, everything else maps to its
    /// own column.
    pub fn predictor_columns(&self) -> Vec<String> {
        let mut cols = Vec::with_capacity(self.predictors.len() + 1);
        for id in &self.predictors {
            if Some(id) == self.temporal_id.as_ref() {
                cols.push(format!("{id}_sin"));
                cols.push(format!("{id}_cos"));
            } else {
                cols.push(id.clone());
            }
        }
        cols
    }

    /// Stable hash of the full configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_digest(hasher)
    }
}

pub(crate) fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Rank predictor modalities by mean |coefficient| against the targets.
/// Multi-column modalities (the temporal sin/cos pair) are scored by the
/// mean over their columns, so they compete as a single modality.
pub fn rank_modalities(
    dataset: &AlignedMatrix,
    config: &DmfConfig,
    method: crate::stats::CorrelationMethod,
) -> Result<crate::stats::PredictorRanking> {
    config.validate()?;
    let columns = config.predictor_columns();
    check_columns(dataset, &columns)?;
    check_columns(dataset, &config.targets)?;
    let table = crate::stats::correlation_table(dataset, &columns, &config.targets, method)?;
    let mut ranked: Vec<(String, f64)> = config
        .predictors
        .iter()
        .map(|id| {
            let cols: Vec<String> = if Some(id) == config.temporal_id.as_ref() {
                vec![format!("{id}_sin"), format!("{id}_cos")]
            } else {
                vec![id.clone()]
            };
            let mut sum = 0.0;
            let mut n = 0usize;
            for col in &cols {
                let p = columns.iter().position(|c| c == col).expect("expanded column");
                for t in 0..config.targets.len() {
                    sum += table.coefficients[[p, t]].abs();
                    n += 1;
                }
            }
            (id.clone(), sum / n as f64)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(crate::stats::PredictorRanking {
        targets: config.targets.clone(),
        ranked,
    })
}

/// A trained fusion experiment: the per-target (ITR) or single (UTR)
/// models plus the normalization needed to run them on native-unit rows.
#[derive(Debug, Clone)]
pub struct TrainedDmf {
    pub mode: DmfMode,
    /// ITR: one model per target, in target order. UTR: exactly one.
    pub models: Vec<TrainedModel>,
    pub histories: Vec<TrainHistory>,
    pub input_stats: NormStats,
    pub target_stats: Option<NormStats>,
    pub predictor_columns: Vec<String>,
    pub targets: Vec<String>,
    pub total_params: usize,
    pub config: DmfConfig,
}

fn check_columns(dataset: &AlignedMatrix, names: &[String]) -> Result<()> {
    for id in names {
        if dataset.column_index(id).is_err() {
            return Err(Error::MissingModality(id.clone()));
        }
    }
    Ok(())
}

/// Train the configured experiment on an aligned dataset. The split is
/// chronological at `split_ratio`; inputs are always min-max normalized on
/// the training rows, targets when `normalize_targets` is set.
pub fn train_dmf(dataset: &AlignedMatrix, config: &DmfConfig) -> Result<TrainedDmf> {
    config.validate()?;
    let predictor_cols = config.predictor_columns();
    check_columns(dataset, &predictor_cols)?;
    check_columns(dataset, &config.targets)?;

    let (train_m, val_m) = split(dataset, config.split_ratio)?;

    let input_stats = minmax_fit(&train_m, &predictor_cols, "train")?;
    let target_stats = if config.normalize_targets {
        Some(minmax_fit(&train_m, &config.targets, "train")?)
    } else {
        None
    };

    let normalize_inputs = |m: &AlignedMatrix| -> Result<Array2<f64>> {
        let sub = AlignedMatrix::from_parts(
            m.grid.clone(),
            m.timestamps.clone(),
            predictor_cols.clone(),
            m.select_columns(&predictor_cols)?,
        )?;
        Ok(minmax_apply(&sub, &input_stats)?.values)
    };
    let train_x = normalize_inputs(&train_m)?;
    let val_x = normalize_inputs(&val_m)?;

    let target_values = |m: &AlignedMatrix| -> Result<Array2<f64>> {
        let raw = m.select_columns(&config.targets)?;
        match &target_stats {
            Some(stats) => {
                let sub = AlignedMatrix::from_parts(
                    m.grid.clone(),
                    m.timestamps.clone(),
                    config.targets.clone(),
                    raw,
                )?;
                Ok(minmax_apply(&sub, stats)?.values)
            }
            None => Ok(raw),
        }
    };
    let train_y = target_values(&train_m)?;
    let val_y = target_values(&val_m)?;

    let input_dim = predictor_cols.len();
    let mut models = Vec::new();
    let mut histories = Vec::new();
    match config.mode {
        DmfMode::Itr => {
            for (t, _) in config.targets.iter().enumerate() {
                let spec = MlpSpec::new(input_dim, config.hidden_layers.clone(), 1)?;
                let ty = train_y.column(t).insert_axis(ndarray::Axis(1)).to_owned();
                let vy = val_y.column(t).insert_axis(ndarray::Axis(1)).to_owned();
                let (model, history) = train(
                    &spec,
                    &train_x,
                    &ty,
                    &val_x,
                    &vy,
                    &config.hyper,
                    mix_seed(config.seed, t as u64),
                )?;
                models.push(model);
                histories.push(history);
            }
        }
        DmfMode::Utr => {
            let spec = MlpSpec::new(input_dim, config.hidden_layers.clone(), config.targets.len())?;
            let (model, history) = train(
                &spec,
                &train_x,
                &train_y,
                &val_x,
                &val_y,
                &config.hyper,
                mix_seed(config.seed, 0),
            )?;
            models.push(model);
            histories.push(history);
        }
    }

    let total_params = models.iter().map(|m| param_count(&m.spec)).sum();
    Ok(TrainedDmf {
        mode: config.mode,
        models,
        histories,
        input_stats,
        target_stats,
        predictor_columns: predictor_cols,
        targets: config.targets.clone(),
        total_params,
        config: config.clone(),
    })
}

/// Run predictor rows (native units, columns in `predictor_columns` order)
/// through the trained models: normalize, forward, invert target
/// normalization. One output row per input row, per target, no lag.
pub fn estimate(trained: &TrainedDmf, rows: &Array2<f64>) -> Result<Array2<f64>> {
    if rows.ncols() != trained.predictor_columns.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} input columns, model expects {}",
            rows.ncols(),
            trained.predictor_columns.len()
        )));
    }
    let mut x = rows.clone();
    for (j, cs) in trained.input_stats.columns.iter().enumerate() {
        let span = cs.max - cs.min;
        for v in x.column_mut(j).iter_mut() {
            *v = if span == 0.0 { 0.0 } else { (*v - cs.min) / span };
        }
    }
    let mut out = Array2::zeros((rows.nrows(), trained.targets.len()));
    match trained.mode {
        DmfMode::Itr => {
            for (t, model) in trained.models.iter().enumerate() {
                let y = forward(&model.params, &x)?;
                out.column_mut(t).assign(&y.column(0));
            }
        }
        DmfMode::Utr => {
            let y = forward(&trained.models[0].params, &x)?;
            out.assign(&y);
        }
    }
    match &trained.target_stats {
        Some(stats) => minmax_invert(&out, stats),
        None => Ok(out),
    }
}

/// Where the normalizing range for NMAE comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeSource {
    /// min/max of the truth over the evaluated window.
    EvaluationWindow,
    Explicit { min: f64, max: f64 },
}

/// Mean |error| divided by the target range, in percent.
pub fn nmae(estimates: &[f64], truth: &[f64], range: RangeSource) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::ZeroVector);
    }
    let (min, max) = match range {
        RangeSource::Explicit { min, max } => (min, max),
        RangeSource::EvaluationWindow => {
            let min = truth.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (min, max)
        }
    };
    if max <= min {
        return Err(Error::ZeroRange);
    }
    let mae = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).abs())
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mae / (max - min) * 100.0)
}

/// NMAE of the constant predictor equal to the truth's own mean: the
/// no-information baseline any useful model must beat.
pub fn constant_mean_nmae(truth: &[f64]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::ZeroVector);
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let estimates = vec![mean; truth.len()];
    nmae(&estimates, truth, RangeSource::EvaluationWindow)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub target: String,
    /// Mean absolute error in the target's native units.
    pub mae: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub nmae_percent: f64,
}

/// Per-modality scores for one experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: DmfMode,
    pub per_target: Vec<TargetMetrics>,
    pub parameter_count: usize,
    /// Number of predictor modalities (the temporal pair counts once).
    pub predictor_count: usize,
    /// Bytes/day implied by the transmitted modalities, when rates are known.
    pub bandwidth_bytes_per_day: Option<f64>,
    pub config_hash: String,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn mean_nmae(&self) -> f64 {
        self.per_target.iter().map(|t| t.nmae_percent).sum::<f64>() / self.per_target.len() as f64
    }

    /// CSV layout: one row per target.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("target,mae,range_min,range_max,nmae_percent\n");
        for m in &self.per_target {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.target, m.mae, m.range_min, m.range_max, m.nmae_percent
            ));
        }
        out
    }
}

/// Evaluate a trained experiment on the validation window of `dataset`
/// (re-derived with the same chronological split it was trained under).
pub fn evaluate(trained: &TrainedDmf, dataset: &AlignedMatrix) -> Result<EvaluationReport> {
    let (_, val_m) = split(dataset, trained.config.split_ratio)?;
    evaluate_on(trained, &val_m)
}

/// Evaluate on an explicit window (already aligned, native units).
pub fn evaluate_on(trained: &TrainedDmf, window: &AlignedMatrix) -> Result<EvaluationReport> {
    let rows = window.select_columns(&trained.predictor_columns)?;
    let estimates = estimate(trained, &rows)?;
    let mut per_target = Vec::with_capacity(trained.targets.len());
    for (t, id) in trained.targets.iter().enumerate() {
        let truth = window.column(id)?.to_vec();
        let est = estimates.column(t).to_vec();
        let min = truth.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let score = nmae(&est, &truth, RangeSource::EvaluationWindow)?;
        let mae = est
            .iter()
            .zip(&truth)
            .map(|(e, t)| (e - t).abs())
            .sum::<f64>()
            / truth.len() as f64;
        per_target.push(TargetMetrics {
            target: id.clone(),
            mae,
            range_min: min,
            range_max: max,
            nmae_percent: score,
        });
    }
    Ok(EvaluationReport {
        mode: trained.mode,
        per_target,
        parameter_count: trained.total_params,
        predictor_count: trained.config.predictors.len(),
        bandwidth_bytes_per_day: None,
        config_hash: trained.config.hash(),
        warnings: Vec::new(),
    })
}

/// Warnings for targets whose native rate is coarser than the grid: their
/// values were forward-filled during alignment and their error figures are
/// expected to be inflated.
pub fn upsampled_target_warnings(
    metadata: &[Modality],
    grid_period_s: i64,
    targets: &[String],
) -> Vec<String> {
    let mut warnings = Vec::new();
    for id in targets {
        if let Some(m) = metadata.iter().find(|m| &m.id == id) {
            if m.native_period_s > grid_period_s {
                warnings.push(format!(
                    "target `{id}` is sampled every {}s but aligned to a {}s grid via \
                     forward-fill; expect inflated error and overfitting sensitivity",
                    m.native_period_s, grid_period_s
                ));
            }
        }
    }
    warnings
}

/// Save one checkpoint per model into `dir` plus a `bundle.json` index.
pub fn save_dmf(trained: &TrainedDmf, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut files = Vec::new();
    let mut model_files = Vec::new();
    for (i, model) in trained.models.iter().enumerate() {
        let (name, targets) = match trained.mode {
            DmfMode::Itr => (
                format!("model_{}.json", trained.targets[i]),
                vec![trained.targets[i].clone()],
            ),
            DmfMode::Utr => ("model_unified.json".to_string(), trained.targets.clone()),
        };
        let history = &trained.histories[i];
        let checkpoint = Checkpoint {
            version: CHECKPOINT_VERSION,
            spec: model.spec.clone(),
            params: model.params.clone(),
            input_stats: trained.input_stats.clone(),
            target_stats: trained.target_stats.clone(),
            meta: CheckpointMeta {
                seed: trained.config.seed,
                best_step: history.best_step,
                best_val_loss: history.best_val_loss,
                stopped_reason: history.stopped_reason,
                targets,
                predictor_columns: trained.predictor_columns.clone(),
            },
        };
        let path = dir.join(&name);
        save_checkpoint(&checkpoint, &path)?;
        model_files.push(name);
        files.push(path);
    }
    let bundle = BundleIndex {
        version: CHECKPOINT_VERSION,
        mode: trained.mode,
        targets: trained.targets.clone(),
        predictor_columns: trained.predictor_columns.clone(),
        model_files,
        config: trained.config.clone(),
        total_params: trained.total_params,
    };
    let path = dir.join("bundle.json");
    let json = serde_json::to_string_pretty(&bundle)
        .map_err(|e| Error::Internal(format!("bundle serialization: {e}")))?;
    std::fs::write(&path, json).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    files.push(path);
    Ok(files)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BundleIndex {
    version: u32,
    mode: DmfMode,
    targets: Vec<String>,
    predictor_columns: Vec<String>,
    model_files: Vec<String>,
    config: DmfConfig,
    total_params: usize,
}

/// Load a model bundle saved by [`save_dmf`].
pub fn load_dmf(dir: &Path) -> Result<TrainedDmf> {
    let bundle_path = dir.join("bundle.json");
    let text = std::fs::read_to_string(&bundle_path).map_err(|e| Error::Io {
        path: bundle_path.display().to_string(),
        source: e,
    })?;
    let bundle: BundleIndex = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", bundle_path.display())))?;
    let mut models = Vec::new();
    let mut histories = Vec::new();
    let mut input_stats = None;
    let mut target_stats = None;
    for name in &bundle.model_files {
        let ck = load_checkpoint(&dir.join(name))?;
        histories.push(TrainHistory {
            records: Vec::new(),
            best_step: ck.meta.best_step,
            best_val_loss: ck.meta.best_val_loss,
            stopped_reason: ck.meta.stopped_reason,
        });
        input_stats = Some(ck.input_stats.clone());
        target_stats = ck.target_stats.clone();
        models.push(TrainedModel {
            spec: ck.spec,
            params: ck.params,
        });
    }
    let input_stats =
        input_stats.ok_or_else(|| Error::InvalidConfig("bundle lists no models".into()))?;
    Ok(TrainedDmf {
        mode: bundle.mode,
        models,
        histories,
        input_stats,
        target_stats,
        predictor_columns: bundle.predictor_columns,
        targets: bundle.targets,
        total_params: bundle.total_params,
        config: bundle.config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{self, Coupling, Nonlinearity, SynthConfig};

    fn quick_hyper(max_steps: usize) -> TrainHyper {
        TrainHyper {
            max_steps,
            patience: 200,
            ..TrainHyper::default()
        }
    }

    fn small_dataset(seed: u64) -> crate::synthgen::SynthDataset {
        synthgen::generate(&SynthConfig {
            predictors: 3,
            targets: 2,
            rows: 600,
            noise_std: vec![0.0, 0.0],
            range_multipliers: vec![1.0, 5.0],
            couplings: vec![
                vec![Coupling { predictor: 0, weight: 1.0, shape: Nonlinearity::Linear }],
                vec![
                    Coupling { predictor: 1, weight: 0.7, shape: Nonlinearity::Linear },
                    Coupling { predictor: 2, weight: 0.3, shape: Nonlinearity::Linear },
                ],
            ],
            seed,
        })
        .unwrap()
    }

    fn small_config(ds: &crate::synthgen::SynthDataset, mode: DmfMode) -> DmfConfig {
        let mut config = DmfConfig::new(ds.predictor_ids.clone(), ds.target_ids.clone(), mode);
        config.hidden_layers = vec![16];
        config.hyper = quick_hyper(1500);
        config.seed = 99;
        config
    }

    #[test]
    fn itr_trains_one_model_per_target() {
        let ds = small_dataset(1);
        let trained = train_dmf(&ds.matrix, &small_config(&ds, DmfMode::Itr)).unwrap();
        assert_eq!(trained.models.len(), 2);
        let per_model: usize = trained.models.iter().map(|m| param_count(&m.spec)).sum();
        assert_eq!(trained.total_params, per_model);
    }

    #[test]
    fn utr_trains_one_multi_output_model() {
        let ds = small_dataset(2);
        let trained = train_dmf(&ds.matrix, &small_config(&ds, DmfMode::Utr)).unwrap();
        assert_eq!(trained.models.len(), 1);
        assert_eq!(trained.models[0].spec.output_dim, 2);
    }

    #[test]
    fn noiseless_dataset_trains_to_low_nmae() {
        let ds = small_dataset(3);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.hyper = TrainHyper {
            max_steps: 10_000,
            patience: 500,
            ..TrainHyper::default()
        };
        let trained = train_dmf(&ds.matrix, &config).unwrap();
        let report = evaluate(&trained, &ds.matrix).unwrap();
        let (_, val) = split(&ds.matrix, config.split_ratio).unwrap();
        for m in &report.per_target {
            assert!(m.nmae_percent < 2.0, "{}: {}", m.target, m.nmae_percent);
            let baseline = constant_mean_nmae(&val.column(&m.target).unwrap().to_vec()).unwrap();
            assert!(
                m.nmae_percent <= baseline + 1.0,
                "{} must beat the constant-mean baseline: {} vs {baseline}",
                m.target,
                m.nmae_percent
            );
        }
    }

    #[test]
    fn estimates_track_truth_with_zero_lag() {
        let ds = small_dataset(10);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.hyper = quick_hyper(2500);
        let trained = train_dmf(&ds.matrix, &config).unwrap();
        let (_, val) = split(&ds.matrix, config.split_ratio).unwrap();
        let rows = val.select_columns(&trained.predictor_columns).unwrap();
        let est = estimate(&trained, &rows).unwrap();
        let truth = val.column("y1").unwrap().to_vec();
        let est_col = est.column(0).to_vec();
        // cross-correlation must peak at lag zero
        let corr_at = |lag: i64| -> f64 {
            let n = truth.len() as i64;
            let pairs: Vec<(f64, f64)> = (0..n)
                .filter_map(|i| {
                    let j = i + lag;
                    if j >= 0 && j < n {
                        Some((est_col[i as usize], truth[j as usize]))
                    } else {
                        None
                    }
                })
                .collect();
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            crate::stats::pearson(&a, &b).unwrap()
        };
        let zero = corr_at(0);
        for lag in [-3i64, -2, -1, 1, 2, 3] {
            assert!(
                corr_at(lag) < zero,
                "cross-correlation at lag {lag} should be below lag 0"
            );
        }
    }

    #[test]
    fn estimate_preserves_row_count_and_order() {
        let ds = small_dataset(4);
        let config = small_config(&ds, DmfMode::Itr);
        let trained = train_dmf(&ds.matrix, &config).unwrap();
        let rows = ds.matrix.select_columns(&trained.predictor_columns).unwrap();
        let est = estimate(&trained, &rows).unwrap();
        assert_eq!(est.nrows(), rows.nrows());
        assert_eq!(est.ncols(), 2);
        // estimating a prefix gives the prefix of the estimates (no lag/shift)
        let prefix = rows.slice(ndarray::s![..10, ..]).to_owned();
        let est_prefix = estimate(&trained, &prefix).unwrap();
        for i in 0..10 {
            for t in 0..2 {
                assert_eq!(est_prefix[[i, t]], est[[i, t]]);
            }
        }
    }

    #[test]
    fn zero_model_estimates_constant() {
        let ds = small_dataset(5);
        let config = small_config(&ds, DmfMode::Itr);
        let mut trained = train_dmf(&ds.matrix, &config).unwrap();
        for model in &mut trained.models {
            for layer in &mut model.params.layers {
                layer.weights.fill(0.0);
                layer.bias.fill(0.0);
            }
        }
        let rows = ds.matrix.select_columns(&trained.predictor_columns).unwrap();
        let est = estimate(&trained, &rows).unwrap();
        for t in 0..est.ncols() {
            let col = est.column(t);
            let first = col[0];
            assert!(col.iter().all(|&v| v == first));
            // inverted normalization of 0 is the fitted min
            let stats = trained.target_stats.as_ref().unwrap();
            assert_eq!(first, stats.columns[t].min);
        }
    }

    #[test]
    fn nmae_arithmetic() {
        // perfect estimates
        assert_eq!(
            nmae(&[1.0, 2.0], &[1.0, 2.0], RangeSource::EvaluationWindow).unwrap(),
            0.0
        );
        // MAE 0.15 over range 3.00 -> 5 percent
        let est = vec![0.56, 1.26, 2.06];
        let truth = vec![0.41, 1.41, 1.91];
        let r = nmae(&est, &truth, RangeSource::Explicit { min: 0.41, max: 3.41 }).unwrap();
        assert!((r - 5.0).abs() < 1e-9);
        // constant +1 offset over a [0, 10] range -> 10 percent
        let truth: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let est: Vec<f64> = truth.iter().map(|v| v + 1.0).collect();
        let r = nmae(&est, &truth, RangeSource::EvaluationWindow).unwrap();
        assert!((r - 10.0).abs() < 1e-9);
    }

    #[test]
    fn nmae_zero_range_is_error() {
        assert!(matches!(
            nmae(&[1.0, 1.0], &[2.0, 2.0], RangeSource::EvaluationWindow),
            Err(Error::ZeroRange)
        ));
    }

    #[test]
    fn missing_modality_is_reported() {
        let ds = small_dataset(6);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.predictors.push("ghost".into());
        assert!(matches!(
            train_dmf(&ds.matrix, &config),
            Err(Error::MissingModality(_))
        ));
    }

    #[test]
    fn overlapping_predictor_target_rejected() {
        let ds = small_dataset(7);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.predictors.push(config.targets[0].clone());
        assert!(matches!(train_dmf(&ds.matrix, &config), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn save_load_round_trip_preserves_estimates() {
        let ds = small_dataset(8);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.hyper = quick_hyper(300);
        let trained = train_dmf(&ds.matrix, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dmf(&trained, dir.path()).unwrap();
        let loaded = load_dmf(dir.path()).unwrap();
        let rows = ds.matrix.select_columns(&trained.predictor_columns).unwrap();
        let a = estimate(&trained, &rows).unwrap();
        let b = estimate(&loaded, &rows).unwrap();
        assert_eq!(a, b);
        assert_eq!(loaded.total_params, trained.total_params);
    }

    #[test]
    fn reports_are_pure_functions_of_inputs() {
        let ds = small_dataset(9);
        let mut config = small_config(&ds, DmfMode::Itr);
        config.hyper = quick_hyper(200);
        let a = evaluate(&train_dmf(&ds.matrix, &config).unwrap(), &ds.matrix).unwrap();
        let b = evaluate(&train_dmf(&ds.matrix, &config).unwrap(), &ds.matrix).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash, config.hash());
    }

    #[test]
    fn upsampled_targets_get_warnings() {
        use crate::timeseries::{Modality, ModalityKind};
        let metadata = vec![
            Modality::new("noise", ModalityKind::Noise, "dB", 86_400),
            Modality::new("temp", ModalityKind::Meteorological, "C", 3600),
        ];
        let warnings = upsampled_target_warnings(
            &metadata,
            3600,
            &["noise".to_string(), "temp".to_string()],
        );
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("noise"));
    }
}
