//! Experiment sweeps: model complexity, predictor-modality count, and the
//! bandwidth trade-off derived from the modality sweep. Sweep points are
//! independent jobs executed in parallel and merged in deterministic order.

use super::{evaluate, train_dmf, DmfConfig};
use crate::error::{Error, Result};
use crate::stats::PredictorRanking;
use crate::timeseries::AlignedMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub architecture: Vec<usize>,
    pub params: usize,
    pub target: String,
    pub nmae_percent: f64,
}

/// One full train/eval per architecture with a shared seed and split.
pub fn sweep_complexity(
    dataset: &AlignedMatrix,
    config: &DmfConfig,
    architectures: &[Vec<usize>],
) -> Result<Vec<ComplexityRow>> {
    if architectures.len() < 2 {
        return Err(Error::InvalidConfig(
            "complexity sweep needs at least 2 architectures".into(),
        ));
    }
    let reports: Vec<Result<Vec<ComplexityRow>>> = architectures
        .par_iter()
        .map(|arch| {
            let mut point = config.clone();
            point.hidden_layers = arch.clone();
            let trained = train_dmf(dataset, &point)?;
            let report = evaluate(&trained, dataset)?;
            Ok(report
                .per_target
                .iter()
                .map(|m| ComplexityRow {
                    architecture: arch.clone(),
                    params: trained.total_params,
                    target: m.target.clone(),
                    nmae_percent: m.nmae_percent,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in reports {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityRow {
    /// Number of predictor modalities used at this sweep point.
    pub count: usize,
    /// The modality ids actually used (config order, temporal unexpanded).
    pub predictors: Vec<String>,
    pub target: String,
    pub nmae_percent: f64,
}

/// Retrain with the top-m ranked predictors for each m in `counts`. The
/// selected predictors keep the base config's ordering so that the full set
/// reproduces the baseline run exactly.
pub fn sweep_modalities(
    dataset: &AlignedMatrix,
    config: &DmfConfig,
    ranking: &PredictorRanking,
    counts: &[usize],
) -> Result<Vec<ModalityRow>> {
    if counts.is_empty() {
        return Err(Error::InvalidConfig("modality sweep needs at least one count".into()));
    }
    for &m in counts {
        if m == 0 {
            return Err(Error::InvalidConfig("modality counts must be positive".into()));
        }
        if m > ranking.len() {
            return Err(Error::TooManyRequested {
                requested: m,
                available: ranking.len(),
            });
        }
    }
    let reports: Vec<Result<Vec<ModalityRow>>> = counts
        .par_iter()
        .map(|&m| {
            let top = ranking.top(m)?;
            // keep base-config order so column layout is stable across m
            let selected: Vec<String> = config
                .predictors
                .iter()
                .filter(|id| top.contains(id))
                .cloned()
                .collect();
            if selected.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "ranking entries must come from the configured predictors; \
                     wanted {m}, matched {}",
                    selected.len()
                )));
            }
            let mut point = config.clone();
            point.predictors = selected.clone();
            let trained = train_dmf(dataset, &point)?;
            let report = evaluate(&trained, dataset)?;
            Ok(report
                .per_target
                .iter()
                .map(|metrics| ModalityRow {
                    count: m,
                    predictors: selected.clone(),
                    target: metrics.target.clone(),
                    nmae_percent: metrics.nmae_percent,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in reports {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub count: usize,
    pub bytes_per_day: f64,
    pub target: String,
    pub nmae_percent: f64,
}

/// Join a modality sweep with a linear transmission-cost model:
/// `bytes/day = sum over transmitted modalities of rate * payload`.
/// Modalities absent from `rates` (the computed temporal features) cost
/// nothing.
pub fn bandwidth_tradeoff(
    sweep: &[ModalityRow],
    rates_per_day: &BTreeMap<String, f64>,
    payload_bytes: f64,
) -> Result<Vec<TradeoffRow>> {
    if payload_bytes <= 0.0 {
        return Err(Error::InvalidConfig("payload_bytes must be positive".into()));
    }
    if let Some((id, &rate)) = rates_per_day.iter().find(|(_, r)| **r <= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rate for `{id}` must be positive, got {rate}"
        )));
    }
    Ok(sweep
        .iter()
        .map(|row| {
            let bytes = row
                .predictors
                .iter()
                .map(|id| rates_per_day.get(id).copied().unwrap_or(0.0) * payload_bytes)
                .sum();
            TradeoffRow {
                count: row.count,
                bytes_per_day: bytes,
                target: row.target.clone(),
                nmae_percent: row.nmae_percent,
            }
        })
        .collect())
}

/// Render sweep rows as CSV with stable float formatting.
pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from("architecture,params,target,nmae_percent\n");
    for r in rows {
        let arch = r
            .architecture
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("x");
        out.push_str(&format!("{arch},{},{},{}\n", r.params, r.target, r.nmae_percent));
    }
    out
}

pub fn modality_csv(rows: &[ModalityRow]) -> String {
    let mut out = String::from("n_modalities,predictors,target,nmae_percent\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.count,
            r.predictors.join("|"),
            r.target,
            r.nmae_percent
        ));
    }
    out
}

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = String::from("n_modalities,bytes_per_day,target,nmae_percent\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.count, r.bytes_per_day, r.target, r.nmae_percent
        ));
    }
    out
}
