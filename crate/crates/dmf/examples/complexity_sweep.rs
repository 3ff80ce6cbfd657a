//! Error versus model size: retrain the same experiment across an
//! architecture grid and print the NMAE-vs-parameter-count curve.
//!
//! Run with: cargo run --example complexity_sweep

use dmf::fusion::{sweep_complexity, DmfConfig, DmfMode};
use dmf::nn::TrainHyper;
use dmf::synthgen::{generate, Coupling, Nonlinearity, SynthConfig};

fn main() -> dmf::Result<()> {
    let dataset = generate(&SynthConfig {
        predictors: 5,
        targets: 1,
        rows: 1500,
        noise_std: vec![0.02],
        range_multipliers: vec![1.0],
        couplings: vec![vec![
            Coupling { predictor: 0, weight: 0.6, shape: Nonlinearity::Linear },
            Coupling { predictor: 1, weight: 0.4, shape: Nonlinearity::Sine },
        ]],
        seed: 31,
    })?;

    let mut config = DmfConfig::new(
        dataset.predictor_ids.clone(),
        dataset.target_ids.clone(),
        DmfMode::Itr,
    );
    config.hyper = TrainHyper {
        max_steps: 3000,
        patience: 300,
        ..TrainHyper::default()
    };
    config.seed = 5;

    let architectures: Vec<Vec<usize>> = vec![vec![2], vec![8], vec![16], vec![32, 16]];
    let rows = sweep_complexity(&dataset.matrix, &config, &architectures)?;

    println!("{:<12} {:>8} {:>8} {:>8}", "architecture", "params", "target", "NMAE%");
    for row in &rows {
        let arch = row
            .architecture
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("x");
        println!(
            "{:<12} {:>8} {:>8} {:>8.2}",
            arch, row.params, row.target, row.nmae_percent
        );
    }
    println!("\n(noise floor for y1: {:.2}%)", dataset.noise_floor_percent[0]);
    Ok(())
}
