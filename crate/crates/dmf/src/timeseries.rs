//! Ingestion and alignment of per-modality time series sampled at
//! heterogeneous rates onto a common grid, plus min-max normalization.
//!
//! The pipeline is: raw points -> [`build_series`] -> [`align`] onto a
//! [`SamplingGrid`] -> [`split`] -> [`minmax_fit`]/[`minmax_apply`] on the
//! training rows. All values are immutable after construction.

mod csv_io;

pub use csv_io::{
    read_long_csv, read_modality_metadata, read_wide_csv, write_wide_csv, RawSeries,
};

use crate::error::{Error, Result};
use chrono::{DateTime, Duration, Timelike, Utc};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// What a modality physically measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityKind {
    Pollutant,
    Meteorological,
    Traffic,
    Noise,
    Temporal,
}

/// One sensed quantity and its native sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modality {
    pub id: String,
    pub kind: ModalityKind,
    pub unit: String,
    /// Seconds between native samples. Must be positive.
    pub native_period_s: i64,
}

impl Modality {
    pub fn new(id: impl Into<String>, kind: ModalityKind, unit: impl Into<String>, native_period_s: i64) -> Self {
        Modality {
            id: id.into(),
            kind,
            unit: unit.into(),
            native_period_s,
        }
    }

    pub fn native_period(&self) -> Duration {
        Duration::seconds(self.native_period_s)
    }
}

/// One modality's readings, timestamps strictly increasing, values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub modality: Modality,
    pub points: Vec<(DateTime<Utc>, f64)>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform timestamp lattice: instants are `start + k * period`, `0 <= k < count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub start: DateTime<Utc>,
    /// Seconds between grid instants. Must be positive.
    pub period_s: i64,
    pub count: usize,
}

impl SamplingGrid {
    pub fn new(start: DateTime<Utc>, period_s: i64, count: usize) -> Result<Self> {
        if period_s <= 0 {
            return Err(Error::InvalidConfig(format!(
                "grid period must be positive, got {period_s}s"
            )));
        }
        if count == 0 {
            return Err(Error::InvalidConfig("grid count must be positive".into()));
        }
        Ok(SamplingGrid { start, period_s, count })
    }

    pub fn period(&self) -> Duration {
        Duration::seconds(self.period_s)
    }

    pub fn instant(&self, k: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(self.period_s * k as i64)
    }

    pub fn instants(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        (0..self.count).map(|k| self.instant(k))
    }
}

/// Row-per-timestamp, column-per-modality table on a common grid.
/// Every retained row is fully valid; rows with any missing cell were
/// dropped during [`align`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedMatrix {
    pub grid: SamplingGrid,
    /// Timestamp of each retained row, strictly increasing in chronological
    /// order (a shuffled split permutes rows together with timestamps).
    pub timestamps: Vec<DateTime<Utc>>,
    pub columns: Vec<String>,
    /// rows x columns, all cells valid and finite.
    pub values: Array2<f64>,
}

impl AlignedMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, id: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::UnknownModality(id.to_string()))
    }

    pub fn column(&self, id: &str) -> Result<ArrayView1<'_, f64>> {
        Ok(self.values.column(self.column_index(id)?))
    }

    /// Extract the named columns, in the order given, as a dense matrix.
    pub fn select_columns(&self, ids: &[String]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((self.n_rows(), ids.len()));
        for (j, id) in ids.iter().enumerate() {
            let src = self.column(id)?;
            out.column_mut(j).assign(&src);
        }
        Ok(out)
    }

    /// Append one column; the value count must match the row count.
    pub fn with_column(&self, id: &str, values: &[f64]) -> Result<AlignedMatrix> {
        if values.len() != self.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "column `{id}` has {} values for {} rows",
                values.len(),
                self.n_rows()
            )));
        }
        if self.columns.iter().any(|c| c == id) {
            return Err(Error::DuplicateModality(id.to_string()));
        }
        let mut out_values = Array2::zeros((self.n_rows(), self.n_cols() + 1));
        out_values
            .slice_mut(ndarray::s![.., ..self.n_cols()])
            .assign(&self.values);
        for (i, v) in values.iter().enumerate() {
            out_values[[i, self.n_cols()]] = *v;
        }
        let mut columns = self.columns.clone();
        columns.push(id.to_string());
        Ok(AlignedMatrix {
            grid: self.grid.clone(),
            timestamps: self.timestamps.clone(),
            columns,
            values: out_values,
        })
    }

    /// Restrict to the given row range (used by chronological splits).
    fn row_slice(&self, range: std::ops::Range<usize>) -> AlignedMatrix {
        AlignedMatrix {
            grid: self.grid.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            columns: self.columns.clone(),
            values: self.values.slice(ndarray::s![range, ..]).to_owned(),
        }
    }

    /// Build directly from rows already on a grid (synthetic data, aligned CSV).
    pub fn from_parts(
        grid: SamplingGrid,
        timestamps: Vec<DateTime<Utc>>,
        columns: Vec<String>,
        values: Array2<f64>,
    ) -> Result<AlignedMatrix> {
        if timestamps.len() != values.nrows() || columns.len() != values.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} timestamps, {} columns for a {}x{} value matrix",
                timestamps.len(),
                columns.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.clone()) {
                return Err(Error::DuplicateModality(c.clone()));
            }
        }
        Ok(AlignedMatrix { grid, timestamps, columns, values })
    }
}

/// Result of [`build_series`]: the cleaned series plus how many non-finite
/// points were dropped.
#[derive(Debug, Clone)]
pub struct BuiltSeries {
    pub series: TimeSeries,
    pub dropped_non_finite: usize,
}

/// Sort points, drop non-finite values (reporting the count), reject
/// duplicate timestamps.
pub fn build_series(modality: Modality, points: Vec<(DateTime<Utc>, f64)>) -> Result<BuiltSeries> {
    if points.is_empty() {
        return Err(Error::EmptySeries);
    }
    let before = points.len();
    let mut kept: Vec<(DateTime<Utc>, f64)> = points
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .collect();
    let dropped = before - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptySeries);
    }
    kept.sort_by_key(|(t, _)| *t);
    for w in kept.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateTimestamp(w[0].0.to_rfc3339()));
        }
    }
    Ok(BuiltSeries {
        series: TimeSeries { modality, points: kept },
        dropped_non_finite: dropped,
    })
}

/// Resample onto the grid. Downsampling (grid period >= native period)
/// averages the native points falling in `[t, t+period)`; upsampling
/// forward-fills the most recent native value, which stays valid for one
/// native period. Cells with no usable data come back as `None`.
pub fn resample_cells(series: &TimeSeries, grid: &SamplingGrid) -> Result<Vec<Option<f64>>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let native = series.modality.native_period();
    let mut cells = vec![None; grid.count];
    if grid.period() >= native {
        // Mean over each window. Points are sorted, so walk them once.
        let mut idx = 0usize;
        for (k, cell) in cells.iter_mut().enumerate() {
            let t0 = grid.instant(k);
            let t1 = t0 + grid.period();
            while idx < series.points.len() && series.points[idx].0 < t0 {
                idx += 1;
            }
            let mut sum = 0.0;
            let mut n = 0usize;
            let mut j = idx;
            while j < series.points.len() && series.points[j].0 < t1 {
                sum += series.points[j].1;
                n += 1;
                j += 1;
            }
            if n > 0 {
                *cell = Some(sum / n as f64);
            }
            idx = j;
        }
    } else {
        // Forward-fill; a native value covers [t_point, t_point + native).
        let mut idx = 0usize;
        for (k, cell) in cells.iter_mut().enumerate() {
            let t = grid.instant(k);
            while idx + 1 < series.points.len() && series.points[idx + 1].0 <= t {
                idx += 1;
            }
            let (pt, pv) = series.points[idx];
            if pt <= t && t < pt + native {
                *cell = Some(pv);
            }
        }
    }
    Ok(cells)
}

/// [`resample_cells`] with the gaps dropped: a series whose points sit on
/// the grid instants and whose native period is the grid period.
pub fn resample(series: &TimeSeries, grid: &SamplingGrid) -> Result<TimeSeries> {
    let cells = resample_cells(series, grid)?;
    let mut modality = series.modality.clone();
    modality.native_period_s = grid.period_s;
    let points = cells
        .into_iter()
        .enumerate()
        .filter_map(|(k, c)| c.map(|v| (grid.instant(k), v)))
        .collect();
    Ok(TimeSeries { modality, points })
}

/// Result of [`align`]: the complete-row matrix plus how many grid rows
/// were dropped for having at least one missing cell.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub matrix: AlignedMatrix,
    pub dropped_rows: usize,
}

/// Resample every series onto the grid and keep only rows where every
/// modality has a valid cell.
pub fn align(series_set: &[TimeSeries], grid: &SamplingGrid) -> Result<Alignment> {
    if series_set.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut seen = std::collections::HashSet::new();
    for s in series_set {
        if !seen.insert(s.modality.id.clone()) {
            return Err(Error::DuplicateModality(s.modality.id.clone()));
        }
    }
    let per_column: Vec<Vec<Option<f64>>> = series_set
        .iter()
        .map(|s| resample_cells(s, grid))
        .collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..grid.count)
        .filter(|&k| per_column.iter().all(|col| col[k].is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::NoOverlap);
    }
    let mut values = Array2::zeros((keep.len(), series_set.len()));
    for (i, &k) in keep.iter().enumerate() {
        for (j, col) in per_column.iter().enumerate() {
            values[[i, j]] = col[k].expect("kept rows are fully valid");
        }
    }
    let timestamps = keep.iter().map(|&k| grid.instant(k)).collect();
    let columns = series_set.iter().map(|s| s.modality.id.clone()).collect();
    Ok(Alignment {
        dropped_rows: grid.count - keep.len(),
        matrix: AlignedMatrix {
            grid: grid.clone(),
            timestamps,
            columns,
            values,
        },
    })
}

/// How [`split`] assigns rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// First `floor(ratio * rows)` rows are train, remainder validation.
    Chronological,
    /// Seeded shuffle before the cut. Timestamps travel with their rows.
    Shuffled { seed: u64 },
}

/// Split into train/validation. Both sides must end up non-empty.
pub fn split(matrix: &AlignedMatrix, ratio: f64) -> Result<(AlignedMatrix, AlignedMatrix)> {
    split_with_mode(matrix, ratio, SplitMode::Chronological)
}

pub fn split_with_mode(
    matrix: &AlignedMatrix,
    ratio: f64,
    mode: SplitMode,
) -> Result<(AlignedMatrix, AlignedMatrix)> {
    let rows = matrix.n_rows();
    if rows < 2 {
        return Err(Error::TooFewRows { needed: 2, have: rows });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let n_train = (ratio * rows as f64).floor() as usize;
    if n_train == 0 || n_train == rows {
        return Err(Error::TooFewRows { needed: 2, have: rows });
    }
    match mode {
        SplitMode::Chronological => {
            Ok((matrix.row_slice(0..n_train), matrix.row_slice(n_train..rows)))
        }
        SplitMode::Shuffled { seed } => {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..rows).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pick = |idxs: &[usize]| -> AlignedMatrix {
                let mut values = Array2::zeros((idxs.len(), matrix.n_cols()));
                let mut timestamps = Vec::with_capacity(idxs.len());
                for (i, &r) in idxs.iter().enumerate() {
                    values.row_mut(i).assign(&matrix.values.row(r));
                    timestamps.push(matrix.timestamps[r]);
                }
                AlignedMatrix {
                    grid: matrix.grid.clone(),
                    timestamps,
                    columns: matrix.columns.clone(),
                    values,
                }
            };
            Ok((pick(&order[..n_train]), pick(&order[n_train..])))
        }
    }
}

/// Per-column min/max fitted on one split (by contract, the training rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub id: String,
    pub min: f64,
    pub max: f64,
}

impl ColumnStats {
    /// A constant column (max == min) normalizes to 0 and inverts to `min`.
    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<ColumnStats>,
    /// Which split the stats were fitted on, e.g. "train".
    pub fitted_on: String,
}

impl NormStats {
    pub fn column(&self, id: &str) -> Result<&ColumnStats> {
        self.columns
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownModality(id.to_string()))
    }

    /// Ids of columns whose fitted range collapsed to a point.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.is_constant())
            .map(|c| c.id.as_str())
            .collect()
    }

    pub fn column_ids(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.id.clone()).collect()
    }
}

/// Fit per-column min/max on the given columns of `matrix`.
pub fn minmax_fit(matrix: &AlignedMatrix, columns: &[String], fitted_on: &str) -> Result<NormStats> {
    let mut out = Vec::with_capacity(columns.len());
    for id in columns {
        let col = matrix.column(id)?;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in col.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        out.push(ColumnStats { id: id.clone(), min, max });
    }
    Ok(NormStats {
        columns: out,
        fitted_on: fitted_on.to_string(),
    })
}

/// Map every fitted column of `matrix` through `x -> (x - min) / (max - min)`.
/// Constant columns map to 0. Columns of the matrix not covered by `stats`
/// are an error; out-of-range results (e.g. validation rows) are permitted.
pub fn minmax_apply(matrix: &AlignedMatrix, stats: &NormStats) -> Result<AlignedMatrix> {
    let mut values = matrix.values.clone();
    for (j, id) in matrix.columns.iter().enumerate() {
        let cs = stats.column(id)?;
        let span = cs.max - cs.min;
        for v in values.column_mut(j).iter_mut() {
            *v = if span == 0.0 { 0.0 } else { (*v - cs.min) / span };
        }
    }
    Ok(AlignedMatrix {
        grid: matrix.grid.clone(),
        timestamps: matrix.timestamps.clone(),
        columns: matrix.columns.clone(),
        values,
    })
}

/// Exact inverse of [`minmax_apply`] on a value matrix whose columns follow
/// `stats` order. Constant columns invert to their fitted min.
pub fn minmax_invert(values: &Array2<f64>, stats: &NormStats) -> Result<Array2<f64>> {
    if values.ncols() != stats.columns.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} value columns vs {} fitted columns",
            values.ncols(),
            stats.columns.len()
        )));
    }
    let mut out = values.clone();
    for (j, cs) in stats.columns.iter().enumerate() {
        let span = cs.max - cs.min;
        for v in out.column_mut(j).iter_mut() {
            *v = *v * span + cs.min;
        }
    }
    Ok(out)
}

fn hour_angle(t: &DateTime<Utc>) -> f64 {
    let hours = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
    2.0 * std::f64::consts::PI * hours / 24.0
}

/// Sin/cos encoding of hour-of-day for every grid instant. One temporal
/// modality, two columns; sweeps count it as a single modality.
pub fn temporal_features(grid: &SamplingGrid) -> (Vec<f64>, Vec<f64>) {
    let mut sin = Vec::with_capacity(grid.count);
    let mut cos = Vec::with_capacity(grid.count);
    for t in grid.instants() {
        let a = hour_angle(&t);
        sin.push(a.sin());
        cos.push(a.cos());
    }
    (sin, cos)
}

/// Append `<id>_sin` / `<id>_cos` hour-of-day columns computed from the
/// matrix's retained row timestamps.
pub fn append_temporal(matrix: &AlignedMatrix, id: &str) -> Result<AlignedMatrix> {
    let mut sin = Vec::with_capacity(matrix.n_rows());
    let mut cos = Vec::with_capacity(matrix.n_rows());
    for t in &matrix.timestamps {
        let a = hour_angle(t);
        sin.push(a.sin());
        cos.push(a.cos());
    }
    matrix
        .with_column(&format!("{id}_sin"), &sin)?
        .with_column(&format!("{id}_cos"), &cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 3, 1, h, 0, 0).unwrap()
    }

    fn day(d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 3, d, h, 0, 0).unwrap()
    }

    fn hourly(id: &str) -> Modality {
        Modality::new(id, ModalityKind::Pollutant, "ug/m3", 3600)
    }

    fn daily(id: &str) -> Modality {
        Modality::new(id, ModalityKind::Noise, "dB", 86_400)
    }

    #[test]
    fn build_series_keeps_in_order_points() {
        let pts = vec![(ts(0), 1.0), (ts(1), 2.0), (ts(2), 3.0)];
        let built = build_series(hourly("no2"), pts.clone()).unwrap();
        assert_eq!(built.series.points, pts);
        assert_eq!(built.dropped_non_finite, 0);
    }

    #[test]
    fn build_series_sorts_and_drops_nan() {
        let pts = vec![(ts(2), 3.0), (ts(0), 1.0), (ts(1), f64::NAN)];
        let built = build_series(hourly("no2"), pts).unwrap();
        assert_eq!(built.series.points, vec![(ts(0), 1.0), (ts(2), 3.0)]);
        assert_eq!(built.dropped_non_finite, 1);
    }

    #[test]
    fn build_series_rejects_duplicate_timestamp() {
        let pts = vec![(ts(0), 1.0), (ts(0), 2.0)];
        assert!(matches!(
            build_series(hourly("no2"), pts),
            Err(Error::DuplicateTimestamp(_))
        ));
    }

    #[test]
    fn build_series_rejects_empty() {
        assert!(matches!(build_series(hourly("no2"), vec![]), Err(Error::EmptySeries)));
    }

    #[test]
    fn resample_constant_mean_to_daily() {
        let pts = (0..24).map(|h| (ts(h), 5.0)).collect();
        let series = build_series(hourly("no2"), pts).unwrap().series;
        let grid = SamplingGrid::new(ts(0), 86_400, 1).unwrap();
        let out = resample(&series, &grid).unwrap();
        assert_eq!(out.points, vec![(ts(0), 5.0)]);
    }

    #[test]
    fn resample_daily_mean_of_1_to_24() {
        // mean(1..=24) = 12.5
        let pts = (0..24).map(|h| (ts(h), (h + 1) as f64)).collect();
        let series = build_series(hourly("no2"), pts).unwrap().series;
        let grid = SamplingGrid::new(ts(0), 86_400, 1).unwrap();
        let out = resample(&series, &grid).unwrap();
        assert_eq!(out.points.len(), 1);
        assert!((out.points[0].1 - 12.5).abs() < 1e-12);
    }

    #[test]
    fn resample_forward_fills_daily_to_hourly() {
        let series = build_series(daily("noise"), vec![(ts(0), 7.0)]).unwrap().series;
        let grid = SamplingGrid::new(ts(0), 3600, 24).unwrap();
        let out = resample(&series, &grid).unwrap();
        assert_eq!(out.points.len(), 24);
        assert!(out.points.iter().all(|&(_, v)| v == 7.0));
    }

    #[test]
    fn resample_forward_fill_expires_after_native_period() {
        let series = build_series(daily("noise"), vec![(ts(0), 7.0)]).unwrap().series;
        // 48 hourly cells: only the first 24 are covered by the daily reading.
        let grid = SamplingGrid::new(ts(0), 3600, 48).unwrap();
        let cells = resample_cells(&series, &grid).unwrap();
        assert_eq!(cells.iter().filter(|c| c.is_some()).count(), 24);
        assert!(cells[24].is_none());
    }

    #[test]
    fn resample_is_idempotent_on_same_grid() {
        let pts = (0..48).map(|h| (ts(0) + Duration::hours(h), (h % 7) as f64)).collect();
        let series = build_series(hourly("no2"), pts).unwrap().series;
        let grid = SamplingGrid::new(ts(0), 7200, 24).unwrap();
        let once = resample(&series, &grid).unwrap();
        let twice = resample(&once, &grid).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn align_identical_grids_keeps_all_rows() {
        let grid = SamplingGrid::new(ts(0), 3600, 12).unwrap();
        let a = build_series(hourly("a"), (0..12).map(|h| (ts(h), h as f64)).collect())
            .unwrap()
            .series;
        let b = build_series(hourly("b"), (0..12).map(|h| (ts(h), 2.0 * h as f64)).collect())
            .unwrap()
            .series;
        let out = align(&[a, b], &grid).unwrap();
        assert_eq!(out.matrix.n_rows(), grid.count);
        assert_eq!(out.dropped_rows, 0);
        assert_eq!(out.matrix.columns, vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn align_disjoint_ranges_is_no_overlap() {
        let grid = SamplingGrid::new(ts(0), 3600, 12).unwrap();
        let a = build_series(hourly("a"), (0..6).map(|h| (ts(h), 1.0)).collect())
            .unwrap()
            .series;
        let b = build_series(hourly("b"), (6..12).map(|h| (ts(h), 1.0)).collect())
            .unwrap()
            .series;
        assert!(matches!(align(&[a, b], &grid), Err(Error::NoOverlap)));
    }

    #[test]
    fn align_hourly_plus_daily_over_two_days() {
        let grid = SamplingGrid::new(day(1, 0), 3600, 48).unwrap();
        let hourly_pts = (0..48)
            .map(|h| (day(1, 0) + Duration::hours(h), h as f64))
            .collect();
        let h = build_series(hourly("poll"), hourly_pts).unwrap().series;
        let d = build_series(daily("noise"), vec![(day(1, 0), 10.0), (day(2, 0), 20.0)])
            .unwrap()
            .series;
        let out = align(&[h, d], &grid).unwrap();
        assert_eq!(out.matrix.n_rows(), 48);
        assert_eq!(out.dropped_rows, 0);
        let noise = out.matrix.column("noise").unwrap();
        assert!(noise.iter().take(24).all(|&v| v == 10.0));
        assert!(noise.iter().skip(24).all(|&v| v == 20.0));
        assert!(out.matrix.values.iter().all(|v| v.is_finite()));
        assert!(out.matrix.timestamps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn align_rejects_duplicate_ids() {
        let grid = SamplingGrid::new(ts(0), 3600, 4).unwrap();
        let a = build_series(hourly("a"), (0..4).map(|h| (ts(h), 1.0)).collect())
            .unwrap()
            .series;
        assert!(matches!(
            align(&[a.clone(), a], &grid),
            Err(Error::DuplicateModality(_))
        ));
    }

    fn toy_matrix(rows: usize) -> AlignedMatrix {
        let grid = SamplingGrid::new(ts(0), 3600, rows).unwrap();
        let values = Array2::from_shape_fn((rows, 2), |(i, j)| (i * 2 + j) as f64);
        AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            vec!["x".into(), "y".into()],
            values,
        )
        .unwrap()
    }

    #[test]
    fn split_80_20() {
        let m = toy_matrix(100);
        let (train, val) = split(&m, 0.8).unwrap();
        assert_eq!(train.n_rows(), 80);
        assert_eq!(val.n_rows(), 20);
    }

    #[test]
    fn split_floor_edge_two_rows() {
        let m = toy_matrix(2);
        let (train, val) = split(&m, 0.8).unwrap();
        assert_eq!(train.n_rows(), 1);
        assert_eq!(val.n_rows(), 1);
    }

    #[test]
    fn split_chronological_ordering() {
        let m = toy_matrix(50);
        let (train, val) = split(&m, 0.8).unwrap();
        let max_train = train.timestamps.iter().max().unwrap();
        let min_val = val.timestamps.iter().min().unwrap();
        assert!(max_train < min_val);
    }

    #[test]
    fn split_too_few_rows() {
        let m = toy_matrix(1);
        assert!(matches!(split(&m, 0.8), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn split_shuffled_preserves_rows() {
        let m = toy_matrix(25);
        let (train, val) =
            split_with_mode(&m, 0.6, SplitMode::Shuffled { seed: 9 }).unwrap();
        assert_eq!(train.n_rows() + val.n_rows(), 25);
        let mut seen: Vec<f64> = train
            .values
            .column(0)
            .iter()
            .chain(val.values.column(0).iter())
            .copied()
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<f64> = (0..25).map(|i| (i * 2) as f64).collect();
        assert_eq!(seen, expect);
    }

    #[test]
    fn minmax_maps_0_5_10_to_unit() {
        let grid = SamplingGrid::new(ts(0), 3600, 3).unwrap();
        let m = AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            vec!["x".into()],
            Array2::from_shape_vec((3, 1), vec![0.0, 5.0, 10.0]).unwrap(),
        )
        .unwrap();
        let stats = minmax_fit(&m, &m.columns, "train").unwrap();
        let n = minmax_apply(&m, &stats).unwrap();
        assert_eq!(n.values.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn minmax_out_of_range_extrapolates() {
        let stats = NormStats {
            columns: vec![ColumnStats { id: "x".into(), min: 0.0, max: 10.0 }],
            fitted_on: "train".into(),
        };
        let grid = SamplingGrid::new(ts(0), 3600, 1).unwrap();
        let m = AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            vec!["x".into()],
            Array2::from_shape_vec((1, 1), vec![12.0]).unwrap(),
        )
        .unwrap();
        let n = minmax_apply(&m, &stats).unwrap();
        assert!((n.values[[0, 0]] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn minmax_constant_column_round_trips_to_min() {
        let grid = SamplingGrid::new(ts(0), 3600, 3).unwrap();
        let m = AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            vec!["c".into()],
            Array2::from_shape_vec((3, 1), vec![4.0, 4.0, 4.0]).unwrap(),
        )
        .unwrap();
        let stats = minmax_fit(&m, &m.columns, "train").unwrap();
        assert_eq!(stats.constant_columns(), vec!["c"]);
        let n = minmax_apply(&m, &stats).unwrap();
        assert!(n.values.iter().all(|&v| v == 0.0));
        let back = minmax_invert(&n.values, &stats).unwrap();
        assert!(back.iter().all(|&v| v == 4.0));
    }

    #[test]
    fn temporal_features_cardinal_hours() {
        let grid = SamplingGrid::new(ts(0), 6 * 3600, 3).unwrap();
        let (sin, cos) = temporal_features(&grid);
        // midnight, 06:00, 12:00
        assert!(sin[0].abs() < 1e-12 && (cos[0] - 1.0).abs() < 1e-12);
        assert!((sin[1] - 1.0).abs() < 1e-12 && cos[1].abs() < 1e-12);
        assert!(sin[2].abs() < 1e-12 && (cos[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn append_temporal_names_columns() {
        let m = toy_matrix(5);
        let out = append_temporal(&m, "temporal").unwrap();
        assert_eq!(out.columns.last().unwrap(), "temporal_cos");
        assert_eq!(out.columns[out.n_cols() - 2], "temporal_sin");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn minmax_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
                prop_assume!(vals.iter().cloned().fold(f64::INFINITY, f64::min)
                    < vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                let grid = SamplingGrid::new(ts(0), 3600, vals.len()).unwrap();
                let m = AlignedMatrix::from_parts(
                    grid.clone(),
                    grid.instants().collect(),
                    vec!["x".into()],
                    Array2::from_shape_vec((vals.len(), 1), vals.clone()).unwrap(),
                ).unwrap();
                let stats = minmax_fit(&m, &m.columns, "train").unwrap();
                let n = minmax_apply(&m, &stats).unwrap();
                let back = minmax_invert(&n.values, &stats).unwrap();
                let scale = vals.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
                for (orig, got) in vals.iter().zip(back.column(0).iter()) {
                    prop_assert!((orig - got).abs() <= 1e-12 * scale);
                }
            }

            #[test]
            fn split_partitions_rows(rows in 2usize..60, ratio in 0.05f64..0.95) {
                let m = toy_matrix(rows);
                match split(&m, ratio) {
                    Ok((train, val)) => {
                        prop_assert_eq!(train.n_rows() + val.n_rows(), rows);
                        let mut all: Vec<_> = train.timestamps.iter()
                            .chain(val.timestamps.iter()).collect();
                        all.sort();
                        let expect: Vec<_> = m.timestamps.iter().collect();
                        prop_assert_eq!(all, expect);
                    }
                    Err(Error::TooFewRows { .. }) => {
                        let n_train = (ratio * rows as f64).floor() as usize;
                        prop_assert!(n_train == 0 || n_train == rows);
                    }
                    Err(e) => prop_assert!(false, "unexpected error {e}"),
                }
            }
        }
    }
}
