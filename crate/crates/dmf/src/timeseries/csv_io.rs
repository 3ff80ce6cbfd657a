//! CSV ingestion (wide and long layouts) and the modality metadata file.
//!
//! Wide layout: header `timestamp,<modality_id>,...`, ISO 8601 UTC
//! timestamps, empty cell = missing. Long layout: `timestamp,modality,value`
//! rows, converted to the wide representation on read.

use super::{AlignedMatrix, Modality, ModalityKind};
use crate::error::{Error, Result};
use chrono::{DateTime, Utc};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One modality's raw points as read from CSV, before validation.
#[derive(Debug, Clone)]
pub struct RawSeries {
    pub id: String,
    pub points: Vec<(DateTime<Utc>, f64)>,
}

fn parse_timestamp(raw: &str, path: &str, line: u64) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::CsvFormat {
            path: path.to_string(),
            line,
            reason: format!("bad timestamp `{raw}`: {e}"),
        })
}

fn parse_value(raw: &str, path: &str, line: u64) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| Error::CsvFormat {
        path: path.to_string(),
        line,
        reason: format!("bad numeric value `{raw}`"),
    })
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })
}

/// Read a wide CSV into one raw series per non-timestamp column. Empty
/// cells are skipped; ordering and finiteness are enforced later by
/// [`super::build_series`].
pub fn read_wide_csv(path: &Path) -> Result<Vec<RawSeries>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::CsvFormat { path: display.clone(), line: 1, reason: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("timestamp") {
        return Err(Error::CsvFormat {
            path: display,
            line: 1,
            reason: "first column must be `timestamp`".into(),
        });
    }
    if headers.len() < 2 {
        return Err(Error::CsvFormat {
            path: display,
            line: 1,
            reason: "need at least one modality column".into(),
        });
    }
    let mut series: Vec<RawSeries> = headers[1..]
        .iter()
        .map(|id| RawSeries { id: id.clone(), points: Vec::new() })
        .collect();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| Error::CsvFormat {
            path: display.clone(),
            line,
            reason: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::CsvFormat {
                path: display.clone(),
                line,
                reason: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        let t = parse_timestamp(record.get(0).unwrap_or(""), &display, line)?;
        for (j, out) in series.iter_mut().enumerate() {
            let cell = record.get(j + 1).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            out.points.push((t, parse_value(cell, &display, line)?));
        }
    }
    Ok(series)
}

/// Read a long CSV (`timestamp,modality,value`) and regroup it per modality,
/// in first-appearance order.
pub fn read_long_csv(path: &Path) -> Result<Vec<RawSeries>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::CsvFormat { path: display.clone(), line: 1, reason: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers != ["timestamp", "modality", "value"] {
        return Err(Error::CsvFormat {
            path: display,
            line: 1,
            reason: "long layout requires header `timestamp,modality,value`".into(),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, Vec<(DateTime<Utc>, f64)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| Error::CsvFormat {
            path: display.clone(),
            line,
            reason: e.to_string(),
        })?;
        let t = parse_timestamp(record.get(0).unwrap_or(""), &display, line)?;
        let id = record.get(1).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::CsvFormat {
                path: display.clone(),
                line,
                reason: "empty modality id".into(),
            });
        }
        let cell = record.get(2).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let v = parse_value(cell, &display, line)?;
        if !by_id.contains_key(&id) {
            order.push(id.clone());
        }
        by_id.entry(id).or_default().push((t, v));
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let points = by_id.remove(&id).unwrap_or_default();
            RawSeries { id, points }
        })
        .collect())
}

/// Write an aligned matrix as wide CSV. Floats use the shortest
/// representation that round-trips, so output is byte-stable.
pub fn write_wide_csv<W: Write>(matrix: &AlignedMatrix, mut out: W) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io { path: "<writer>".into(), source: e };
    write!(out, "timestamp").map_err(io_err)?;
    for c in &matrix.columns {
        write!(out, ",{c}").map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for (i, t) in matrix.timestamps.iter().enumerate() {
        write!(out, "{}", t.format("%Y-%m-%dT%H:%M:%SZ")).map_err(io_err)?;
        for j in 0..matrix.n_cols() {
            write!(out, ",{}", matrix.values[[i, j]]).map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct MetadataFile {
    modality: Vec<MetadataEntry>,
}

#[derive(serde::Deserialize)]
struct MetadataEntry {
    id: String,
    kind: String,
    unit: String,
    native_period_s: i64,
}

/// Read the modality metadata file: TOML with one `[[modality]]` record per
/// modality carrying id, kind, unit and native period in seconds.
pub fn read_modality_metadata(path: &Path) -> Result<Vec<Modality>> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: e,
    })?;
    let parsed: MetadataFile = toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{display}: {e}")))?;
    let mut out = Vec::with_capacity(parsed.modality.len());
    let mut seen = std::collections::HashSet::new();
    for entry in parsed.modality {
        let kind = match entry.kind.as_str() {
            "pollutant" => ModalityKind::Pollutant,
            "meteorological" => ModalityKind::Meteorological,
            "traffic" => ModalityKind::Traffic,
            "noise" => ModalityKind::Noise,
            "temporal" => ModalityKind::Temporal,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "{display}: unknown modality kind `{other}` for `{}`",
                    entry.id
                )))
            }
        };
        if entry.native_period_s <= 0 {
            return Err(Error::InvalidConfig(format!(
                "{display}: native_period_s must be positive for `{}`",
                entry.id
            )));
        }
        if !seen.insert(entry.id.clone()) {
            return Err(Error::DuplicateModality(entry.id));
        }
        out.push(Modality::new(entry.id, kind, entry.unit, entry.native_period_s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::SamplingGrid;
    use chrono::TimeZone;
    use ndarray::Array2;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn wide_csv_round_trip() {
        let csv = "timestamp,no2,o3\n2023-03-01T14:00:00Z,1.5,\n2023-03-01T15:00:00Z,2.5,3\n";
        let f = write_temp(csv);
        let series = read_wide_csv(f.path()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].id, "no2");
        assert_eq!(series[0].points.len(), 2);
        assert_eq!(series[1].points.len(), 1); // empty cell skipped
        assert_eq!(series[1].points[0].1, 3.0);
    }

    #[test]
    fn wide_csv_requires_timestamp_header() {
        let f = write_temp("time,no2\n2023-03-01T14:00:00Z,1\n");
        assert!(matches!(read_wide_csv(f.path()), Err(Error::CsvFormat { .. })));
    }

    #[test]
    fn wide_csv_rejects_bad_value() {
        let f = write_temp("timestamp,no2\n2023-03-01T14:00:00Z,abc\n");
        let err = read_wide_csv(f.path()).unwrap_err();
        match err {
            Error::CsvFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("expected CsvFormat, got {other}"),
        }
    }

    #[test]
    fn long_csv_groups_by_modality() {
        let csv = "timestamp,modality,value\n\
                   2023-03-01T14:00:00Z,no2,1\n\
                   2023-03-01T14:00:00Z,o3,2\n\
                   2023-03-01T15:00:00Z,no2,3\n";
        let f = write_temp(csv);
        let series = read_long_csv(f.path()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].id, "no2");
        assert_eq!(series[0].points.len(), 2);
        assert_eq!(series[1].id, "o3");
    }

    #[test]
    fn written_csv_reads_back() {
        let grid = SamplingGrid::new(
            Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap(),
            3600,
            3,
        )
        .unwrap();
        let m = AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            vec!["a".into(), "b".into()],
            Array2::from_shape_vec((3, 2), vec![0.1, 1.0, 0.2, 2.0, 0.25, 3.5]).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_wide_csv(&m, &mut buf).unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        let series = read_wide_csv(f.path()).unwrap();
        assert_eq!(series[0].points[2].1, 0.25);
        assert_eq!(series[1].points[2].1, 3.5);
    }

    #[test]
    fn metadata_file_parses() {
        let toml = r#"
            [[modality]]
            id = "no2"
            kind = "pollutant"
            unit = "ug/m3"
            native_period_s = 3600

            [[modality]]
            id = "traffic"
            kind = "traffic"
            unit = "vehicles/h"
            native_period_s = 900
        "#;
        let f = write_temp(toml);
        let mods = read_modality_metadata(f.path()).unwrap();
        assert_eq!(mods.len(), 2);
        assert_eq!(mods[0].kind, ModalityKind::Pollutant);
        assert_eq!(mods[1].native_period_s, 900);
    }
}
