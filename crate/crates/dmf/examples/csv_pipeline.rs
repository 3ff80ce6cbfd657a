//! The file-based workflow end to end: write a wide CSV plus a modality
//! metadata file, ingest and align them, then train and score from the
//! aligned matrix, the same path the `dmf` binary drives.
//!
//! Run with: cargo run --example csv_pipeline

use dmf::fusion::{evaluate, train_dmf, DmfConfig, DmfMode};
use dmf::nn::TrainHyper;
use dmf::synthgen::{generate, SynthConfig};
use dmf::timeseries::{
    align, build_series, read_modality_metadata, read_wide_csv, write_wide_csv, Modality,
    ModalityKind, SamplingGrid,
};

fn main() -> dmf::Result<()> {
    let dir = std::env::temp_dir().join("dmf_example_csv");
    std::fs::create_dir_all(&dir).expect("temp dir");

    // produce a CSV the way a data exporter would
    let dataset = generate(&SynthConfig {
        predictors: 3,
        targets: 1,
        rows: 1200,
        noise_std: vec![0.02],
        range_multipliers: vec![1.0],
        couplings: dmf::synthgen::default_couplings(3, 1, 2),
        seed: 13,
    })?;
    let csv_path = dir.join("readings.csv");
    let mut buf = Vec::new();
    write_wide_csv(&dataset.matrix, &mut buf)?;
    std::fs::write(&csv_path, &buf).expect("write CSV");

    let meta_path = dir.join("modalities.toml");
    std::fs::write(
        &meta_path,
        r#"
[[modality]]
id = "p1"
kind = "pollutant"
unit = "ug/m3"
native_period_s = 3600

[[modality]]
id = "p2"
kind = "pollutant"
unit = "ug/m3"
native_period_s = 3600

[[modality]]
id = "p3"
kind = "pollutant"
unit = "ug/m3"
native_period_s = 3600

[[modality]]
id = "y1"
kind = "meteorological"
unit = "C"
native_period_s = 3600
"#,
    )
    .expect("write metadata");

    // ingest: raw columns -> validated series -> aligned matrix
    let raw = read_wide_csv(&csv_path)?;
    let metadata = read_modality_metadata(&meta_path)?;
    let first = raw[0].points[0].0;
    let grid = SamplingGrid::new(first, 3600, 1200)?;
    let mut series = Vec::new();
    for column in raw {
        let modality = metadata
            .iter()
            .find(|m| m.id == column.id)
            .cloned()
            .unwrap_or_else(|| Modality::new(&column.id, ModalityKind::Pollutant, "", 3600));
        let built = build_series(modality, column.points)?;
        if built.dropped_non_finite > 0 {
            println!(
                "dropped {} non-finite points from {}",
                built.dropped_non_finite, built.series.modality.id
            );
        }
        series.push(built.series);
    }
    let aligned = align(&series, &grid)?;
    println!(
        "ingested {} rows x {} columns ({} rows dropped)",
        aligned.matrix.n_rows(),
        aligned.matrix.n_cols(),
        aligned.dropped_rows
    );

    // train on the aligned matrix
    let mut config = DmfConfig::new(
        vec!["p1".into(), "p2".into(), "p3".into()],
        vec!["y1".into()],
        DmfMode::Itr,
    );
    config.hidden_layers = vec![16];
    config.hyper = TrainHyper {
        max_steps: 3000,
        patience: 300,
        ..TrainHyper::default()
    };
    let trained = train_dmf(&aligned.matrix, &config)?;
    let report = evaluate(&trained, &aligned.matrix)?;
    println!(
        "validation NMAE for y1: {:.2}% (noise floor {:.2}%)",
        report.per_target[0].nmae_percent, dataset.noise_floor_percent[0]
    );
    Ok(())
}
