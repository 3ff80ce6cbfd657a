//! Align three modalities sampled at different native rates (15 minutes,
//! hourly, daily) onto a common hourly grid: sub-hourly data is averaged,
//! daily data forward-filled, and incomplete rows dropped.
//!
//! Run with: cargo run --example align_heterogeneous

use chrono::{Duration, TimeZone, Utc};
use dmf::timeseries::{align, build_series, Modality, ModalityKind, SamplingGrid};

fn main() -> dmf::Result<()> {
    let start = Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap();

    // traffic counts every 15 minutes
    let traffic = build_series(
        Modality::new("traffic", ModalityKind::Traffic, "vehicles/h", 900),
        (0..192)
            .map(|k| (start + Duration::minutes(15 * k), 200.0 + (k % 8) as f64 * 10.0))
            .collect(),
    )?;
    // pollutant concentration every hour
    let no2 = build_series(
        Modality::new("no2", ModalityKind::Pollutant, "ug/m3", 3600),
        (0..48)
            .map(|h| (start + Duration::hours(h), 30.0 + (h % 24) as f64))
            .collect(),
    )?;
    // noise level once a day
    let noise = build_series(
        Modality::new("noise", ModalityKind::Noise, "dB", 86_400),
        vec![(start, 55.0), (start + Duration::days(1), 61.0)],
    )?;

    let grid = SamplingGrid::new(start, 3600, 48)?;
    let aligned = align(&[traffic.series, no2.series, noise.series], &grid)?;

    println!(
        "aligned {} rows x {} columns ({} grid rows dropped as incomplete)",
        aligned.matrix.n_rows(),
        aligned.matrix.n_cols(),
        aligned.dropped_rows
    );
    println!("columns: {}", aligned.matrix.columns.join(", "));
    println!("\ntimestamp              traffic  no2   noise");
    for i in (0..aligned.matrix.n_rows()).step_by(6) {
        println!(
            "{}  {:>7}  {:>4}  {:>5}",
            aligned.matrix.timestamps[i].format("%Y-%m-%d %H:%M UTC"),
            aligned.matrix.values[[i, 0]],
            aligned.matrix.values[[i, 1]],
            aligned.matrix.values[[i, 2]],
        );
    }
    Ok(())
}
