//! Train isolated regressors on a synthetic dataset, score them with
//! range-normalized MAE against the analytic noise floor, save the model
//! bundle, and re-run estimates from the loaded checkpoints.
//!
//! Run with: cargo run --example train_and_estimate

use dmf::fusion::{estimate, evaluate, load_dmf, save_dmf, train_dmf, DmfConfig, DmfMode};
use dmf::nn::TrainHyper;
use dmf::synthgen::{generate, Coupling, Nonlinearity, SynthConfig};

fn main() -> dmf::Result<()> {
    let dataset = generate(&SynthConfig {
        predictors: 6,
        targets: 2,
        rows: 2500,
        noise_std: vec![0.03, 0.05],
        range_multipliers: vec![2.0, 8.0],
        couplings: vec![
            vec![
                Coupling { predictor: 0, weight: 1.0, shape: Nonlinearity::Linear },
                Coupling { predictor: 1, weight: 0.4, shape: Nonlinearity::Square },
            ],
            vec![
                Coupling { predictor: 2, weight: 0.8, shape: Nonlinearity::Linear },
                Coupling { predictor: 3, weight: 0.4, shape: Nonlinearity::Sine },
            ],
        ],
        seed: 3,
    })?;

    let mut config = DmfConfig::new(
        dataset.predictor_ids.clone(),
        dataset.target_ids.clone(),
        DmfMode::Itr,
    );
    config.hidden_layers = vec![32, 16];
    config.hyper = TrainHyper {
        max_steps: 8000,
        patience: 500,
        ..TrainHyper::default()
    };
    config.seed = 12;

    println!("training {} isolated models...", config.targets.len());
    let trained = train_dmf(&dataset.matrix, &config)?;
    for (target, history) in trained.targets.iter().zip(&trained.histories) {
        println!(
            "  {target}: best val loss {:.3e} at step {} ({:?})",
            history.best_val_loss, history.best_step, history.stopped_reason
        );
    }

    let report = evaluate(&trained, &dataset.matrix)?;
    println!("\nvalidation-window scores ({} parameters total):", report.parameter_count);
    for (metrics, floor) in report.per_target.iter().zip(&dataset.noise_floor_percent) {
        println!(
            "  {}: NMAE {:.2}% (noise floor {:.2}%), MAE {:.4} over range [{:.3}, {:.3}]",
            metrics.target,
            metrics.nmae_percent,
            floor,
            metrics.mae,
            metrics.range_min,
            metrics.range_max
        );
    }

    // round-trip through the checkpoint bundle
    let dir = std::env::temp_dir().join("dmf_example_bundle");
    save_dmf(&trained, &dir)?;
    let loaded = load_dmf(&dir)?;
    let rows = dataset.matrix.select_columns(&loaded.predictor_columns)?;
    let estimates = estimate(&loaded, &rows)?;
    println!("\nestimates from the reloaded bundle (first 3 rows):");
    for i in 0..3 {
        let truth: Vec<f64> = loaded
            .targets
            .iter()
            .map(|id| dataset.matrix.column(id).unwrap()[i])
            .collect();
        println!(
            "  row {i}: estimated {:?} vs observed {truth:?}",
            (0..loaded.targets.len()).map(|t| estimates[[i, t]]).collect::<Vec<_>>()
        );
    }
    println!("\nbundle saved under {}", dir.display());
    Ok(())
}
