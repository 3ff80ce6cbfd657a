//! Predictor-by-target correlation tables (both coefficients) and the
//! mean-|coefficient| predictor ranking used to pick the top-m modalities.
//!
//! Run with: cargo run --example correlation_tables

use dmf::fusion::{rank_modalities, DmfConfig, DmfMode};
use dmf::stats::{correlation_table, CorrelationMethod};
use dmf::synthgen::{generate, Coupling, Nonlinearity, SynthConfig};

fn main() -> dmf::Result<()> {
    let dataset = generate(&SynthConfig {
        predictors: 5,
        targets: 2,
        rows: 2000,
        noise_std: vec![0.02, 0.02],
        range_multipliers: vec![1.0, 1.0],
        couplings: vec![
            vec![
                Coupling { predictor: 0, weight: 1.0, shape: Nonlinearity::Linear },
                Coupling { predictor: 1, weight: -0.5, shape: Nonlinearity::Linear },
            ],
            vec![Coupling { predictor: 1, weight: 1.0, shape: Nonlinearity::Square }],
        ],
        seed: 11,
    })?;

    for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
        let table = correlation_table(
            &dataset.matrix,
            &dataset.predictor_ids,
            &dataset.target_ids,
            method,
        )?;
        println!("--- {method} ---");
        print!("{}", table.to_csv());
        println!();
    }

    let config = DmfConfig::new(
        dataset.predictor_ids.clone(),
        dataset.target_ids.clone(),
        DmfMode::Itr,
    );
    let ranking = rank_modalities(&dataset.matrix, &config, CorrelationMethod::Spearman)?;
    println!("predictors ranked by mean |coefficient| across targets:");
    for (i, (id, score)) in ranking.ranked.iter().enumerate() {
        println!("{:>2}. {id}  score {score:.4}", i + 1);
    }
    println!("\ntop-2 set for a reduced deployment: {:?}", ranking.top(2)?);
    Ok(())
}
