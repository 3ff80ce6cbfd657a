//! Error versus number of transmitted modalities, and the bandwidth
//! trade-off it implies: rank the predictors, retrain with the top-m only,
//! and join the scores with a bytes/day transmission model.
//!
//! Run with: cargo run --example modality_bandwidth

use dmf::fusion::{bandwidth_tradeoff, rank_modalities, sweep_modalities, DmfConfig, DmfMode};
use dmf::nn::TrainHyper;
use dmf::stats::CorrelationMethod;
use dmf::synthgen::{generate, Coupling, Nonlinearity, SynthConfig};
use std::collections::BTreeMap;

fn main() -> dmf::Result<()> {
    // target depends on three of the six predictors
    let dataset = generate(&SynthConfig {
        predictors: 6,
        targets: 1,
        rows: 2000,
        noise_std: vec![0.01],
        range_multipliers: vec![1.0],
        couplings: vec![vec![
            Coupling { predictor: 0, weight: 1.0, shape: Nonlinearity::Linear },
            Coupling { predictor: 1, weight: 1.0, shape: Nonlinearity::Linear },
            Coupling { predictor: 2, weight: 1.0, shape: Nonlinearity::Linear },
        ]],
        seed: 17,
    })?;

    let mut config = DmfConfig::new(
        dataset.predictor_ids.clone(),
        dataset.target_ids.clone(),
        DmfMode::Itr,
    );
    config.hidden_layers = vec![24];
    config.hyper = TrainHyper {
        max_steps: 4000,
        patience: 400,
        ..TrainHyper::default()
    };
    config.seed = 2;

    let ranking = rank_modalities(&dataset.matrix, &config, CorrelationMethod::Spearman)?;
    println!("ranking: {:?}", ranking.ranked.iter().map(|(id, _)| id).collect::<Vec<_>>());

    let counts = [1, 2, 3, 6];
    let sweep = sweep_modalities(&dataset.matrix, &config, &ranking, &counts)?;

    // hourly sensors at 8 bytes/sample
    let rates: BTreeMap<String, f64> = dataset
        .predictor_ids
        .iter()
        .map(|id| (id.clone(), 24.0))
        .collect();
    let rows = bandwidth_tradeoff(&sweep, &rates, 8.0)?;

    println!("\n{:>4} {:>14} {:>8}", "n_M", "bytes/day", "NMAE%");
    for row in &rows {
        println!("{:>4} {:>14} {:>8.2}", row.count, row.bytes_per_day, row.nmae_percent);
    }
    println!("\nfewer transmitted modalities = less bandwidth, more estimation error");
    Ok(())
}
