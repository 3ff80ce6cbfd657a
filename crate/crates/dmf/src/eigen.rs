//! Covariance of normalized datasets, dominant eigenpair via power
//! iteration, and angular distances between the principal directions of
//! modality groups.
//!
//! Group eigenvectors are compared in the shared sample space: each group's
//! eigenvector is zero-padded into the joint column space and pushed through
//! the centered data, giving one principal score series per group. Angles
//! between those score series carry the sign structure of the underlying
//! correlations (acute = positive, obtuse = negative, ~90 degrees = none).

use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::timeseries::{minmax_apply, minmax_fit, AlignedMatrix};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Symmetric positive semi-definite covariance over named dimensions.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub dims: Vec<String>,
    pub values: Array2<f64>,
}

/// Sample covariance with the n-1 denominator, symmetrized exactly.
pub fn covariance(matrix: &AlignedMatrix) -> Result<CovMatrix> {
    let n = matrix.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, have: n });
    }
    let centered = center_columns(&matrix.values);
    let mut c = centered.t().dot(&centered) / (n as f64 - 1.0);
    let ct = c.t().to_owned();
    c = (&c + &ct) * 0.5;
    Ok(CovMatrix {
        dims: matrix.columns.clone(),
        values: c,
    })
}

fn center_columns(values: &Array2<f64>) -> Array2<f64> {
    let n = values.nrows() as f64;
    let mut out = values.clone();
    for mut col in out.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIterationSettings {
    fn default() -> Self {
        PowerIterationSettings {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

/// Dominant eigenpair. `converged=false` means the iteration cap was hit
/// and the best iterate is returned; `degenerate=true` flags a top pair of
/// Rayleigh quotients closer than the tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub vector: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
}

impl EigenResult {
    pub fn vector_array(&self) -> Array1<f64> {
        Array1::from_vec(self.vector.clone())
    }
}

fn canonical_sign(v: &mut Array1<f64>) {
    if let Some(first) = v.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            v.mapv_inplace(|x| -x);
        }
    }
}

fn power_iterate(c: &Array2<f64>, settings: &PowerIterationSettings, salt: u64) -> (Array1<f64>, f64, usize, bool) {
    let dim = c.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(settings.seed, salt));
    let mut v = Array1::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5);
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v.mapv_inplace(|x| x / norm);
    }
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=settings.max_iter {
        iterations = it;
        let mut next = c.dot(&v);
        let next_norm = next.dot(&next).sqrt();
        if next_norm == 0.0 {
            // v is in the null space; any unit vector is optimal for a zero map.
            converged = true;
            break;
        }
        next.mapv_inplace(|x| x / next_norm);
        // Align signs before measuring the step, v and -v are the same direction.
        let sign = if next.dot(&v) < 0.0 { -1.0 } else { 1.0 };
        let diff = next
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - sign * b) * (a - sign * b))
            .sum::<f64>()
            .sqrt();
        v = next;
        if diff < settings.tol {
            converged = true;
            break;
        }
    }
    let value = v.dot(&c.dot(&v));
    (v, value, iterations, converged)
}

/// Power iteration from a seeded random start. The returned vector is unit
/// norm with its first nonzero component positive.
pub fn principal_eigenvector(c: &CovMatrix, settings: &PowerIterationSettings) -> Result<EigenResult> {
    if settings.tol <= 0.0 {
        return Err(Error::InvalidConfig("power iteration tol must be positive".into()));
    }
    let dim = c.values.nrows();
    if dim == 0 || c.values.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "covariance must be square and non-empty, got {}x{}",
            c.values.nrows(),
            c.values.ncols()
        )));
    }
    let (mut v, value, iterations, converged) = power_iterate(&c.values, settings, 0);
    canonical_sign(&mut v);

    // Second Rayleigh quotient via deflation, to flag near-degenerate tops.
    let degenerate = if dim > 1 {
        let mut deflated = c.values.clone();
        for i in 0..dim {
            for j in 0..dim {
                deflated[[i, j]] -= value * v[i] * v[j];
            }
        }
        let (_, second, _, _) = power_iterate(&deflated, settings, 1);
        (value - second).abs() < settings.tol
    } else {
        false
    };

    Ok(EigenResult {
        vector: v.to_vec(),
        value,
        iterations,
        converged,
        degenerate,
    })
}

/// Angle between two nonzero vectors, in degrees within [0, 180].
pub fn angular_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Name of the synthetic i.i.d.-uniform group added to every report.
pub const UNIFORM_BASELINE_GROUP: &str = "uniform_baseline";

#[derive(Debug, Clone, Serialize)]
pub struct EigenReportRow {
    pub group: String,
    pub angle_deg: f64,
    pub lambda: f64,
    pub converged: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub reference: String,
    pub rows: Vec<EigenReportRow>,
    /// How group directions are compared; recorded because the comparison
    /// space is an implementation choice, not a property of the data.
    pub method_note: String,
}

impl EigenReport {
    /// CSV layout: `group,angle_deg,lambda,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,angle_deg,lambda,converged\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.group, row.angle_deg, row.lambda, row.converged
            ));
        }
        out
    }
}

/// Per-group dominant eigenpair plus the angle between each group's
/// principal score series and the reference group's, with an i.i.d.
/// uniform group appended as the no-relationship baseline.
pub fn eigen_report(
    matrix: &AlignedMatrix,
    groups: &[(String, Vec<String>)],
    reference: &str,
    seed: u64,
    settings: &PowerIterationSettings,
) -> Result<EigenReport> {
    if groups.is_empty() {
        return Err(Error::UnknownGroup(reference.to_string()));
    }
    for (name, cols) in groups {
        if name == UNIFORM_BASELINE_GROUP {
            return Err(Error::InvalidConfig(format!(
                "group name `{UNIFORM_BASELINE_GROUP}` is reserved"
            )));
        }
        if cols.is_empty() {
            return Err(Error::InvalidConfig(format!("group `{name}` has no columns")));
        }
    }
    let reference_cols = groups
        .iter()
        .find(|(name, _)| name == reference)
        .map(|(_, cols)| cols.clone())
        .ok_or_else(|| Error::UnknownGroup(reference.to_string()))?;

    // Normalize every column the report touches, then work on the
    // normalized matrix so all groups share one scale convention.
    let mut used: Vec<String> = Vec::new();
    for (_, cols) in groups {
        for c in cols {
            matrix.column_index(c)?;
            if !used.contains(c) {
                used.push(c.clone());
            }
        }
    }
    let stats = minmax_fit(matrix, &used, "all")?;
    let sub = AlignedMatrix::from_parts(
        matrix.grid.clone(),
        matrix.timestamps.clone(),
        used.clone(),
        matrix.select_columns(&used)?,
    )?;
    let normalized = minmax_apply(&sub, &stats)?;

    let score_of = |cols: &[String], salt: u64| -> Result<(Array1<f64>, EigenResult)> {
        let data = normalized.select_columns(cols)?;
        let centered = center_columns(&data);
        let cov = covariance(&AlignedMatrix::from_parts(
            normalized.grid.clone(),
            normalized.timestamps.clone(),
            cols.to_vec(),
            data,
        )?)?;
        let eig = principal_eigenvector(
            &cov,
            &PowerIterationSettings {
                seed: mix_seed(seed, salt),
                ..*settings
            },
        )?;
        let scores = centered.dot(&eig.vector_array());
        Ok((scores, eig))
    };

    // One eigenpair per group; the reference's own score vector is reused
    // for every angle so reference-vs-itself is exactly zero.
    let mut per_group = Vec::with_capacity(groups.len());
    for (i, (_, cols)) in groups.iter().enumerate() {
        per_group.push(score_of(cols, i as u64 + 1)?);
    }
    let ref_idx = groups
        .iter()
        .position(|(name, _)| name == reference)
        .expect("reference checked above");
    let ref_scores = per_group[ref_idx].0.clone();

    let mut rows = Vec::with_capacity(groups.len() + 1);
    for ((name, _), (scores, eig)) in groups.iter().zip(&per_group) {
        rows.push(EigenReportRow {
            group: name.clone(),
            angle_deg: angular_distance(ref_scores.as_slice().unwrap(), scores.as_slice().unwrap())?,
            lambda: eig.value,
            converged: eig.converged,
            degenerate: eig.degenerate,
        });
    }

    // Baseline: i.i.d. uniform columns, as many as the reference group has.
    let n = normalized.n_rows();
    let k = reference_cols.len();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xBA5E));
    let noise = Array2::from_shape_fn((n, k), |_| rng.random::<f64>());
    let noise_cols: Vec<String> = (0..k).map(|j| format!("u{j}")).collect();
    let noise_matrix = AlignedMatrix::from_parts(
        normalized.grid.clone(),
        normalized.timestamps.clone(),
        noise_cols.clone(),
        noise.clone(),
    )?;
    let cov = covariance(&noise_matrix)?;
    let eig = principal_eigenvector(
        &cov,
        &PowerIterationSettings { seed: mix_seed(seed, 0xBA5F), ..*settings },
    )?;
    let noise_scores = center_columns(&noise).dot(&eig.vector_array());
    rows.push(EigenReportRow {
        group: UNIFORM_BASELINE_GROUP.to_string(),
        angle_deg: angular_distance(ref_scores.as_slice().unwrap(), noise_scores.as_slice().unwrap())?,
        lambda: eig.value,
        converged: eig.converged,
        degenerate: eig.degenerate,
    });

    rows.sort_by(|a, b| a.group.cmp(&b.group));
    Ok(EigenReport {
        reference: reference.to_string(),
        rows,
        method_note: "group eigenvectors are zero-padded into the joint column space; angles \
                      are measured between the resulting principal score series in the shared \
                      sample space"
            .to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::SamplingGrid;
    use chrono::{TimeZone, Utc};

    fn matrix_from(values: Array2<f64>, names: &[&str]) -> AlignedMatrix {
        let grid = SamplingGrid::new(
            Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
            3600,
            values.nrows(),
        )
        .unwrap();
        AlignedMatrix::from_parts(
            grid.clone(),
            grid.instants().collect(),
            names.iter().map(|s| s.to_string()).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn covariance_hand_value() {
        // rows (1,2), (3,6), (5,10) -> [[4, 8], [8, 16]]
        let m = matrix_from(
            Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 3.0, 6.0, 5.0, 10.0]).unwrap(),
            &["a", "b"],
        );
        let c = covariance(&m).unwrap();
        let expect = [[4.0, 8.0], [8.0, 16.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                assert!((c.values[[i, j]] - cell).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_identical_columns() {
        let m = matrix_from(
            Array2::from_shape_vec((3, 2), vec![1.0, 1.0, 2.0, 2.0, 4.0, 4.0]).unwrap(),
            &["a", "b"],
        );
        let c = covariance(&m).unwrap();
        let v = c.values[[0, 0]];
        assert!(c.values.iter().all(|&x| (x - v).abs() < 1e-12));
    }

    #[test]
    fn covariance_constant_column_is_zero() {
        let m = matrix_from(
            Array2::from_shape_vec((3, 2), vec![1.0, 7.0, 2.0, 7.0, 4.0, 7.0]).unwrap(),
            &["a", "c"],
        );
        let c = covariance(&m).unwrap();
        assert_eq!(c.values[[0, 1]], 0.0);
        assert_eq!(c.values[[1, 0]], 0.0);
        assert_eq!(c.values[[1, 1]], 0.0);
    }

    #[test]
    fn covariance_needs_two_rows() {
        let m = matrix_from(Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(), &["a"]);
        assert!(matches!(covariance(&m), Err(Error::TooFewRows { .. })));
    }

    fn cov_of(values: Vec<f64>, dim: usize) -> CovMatrix {
        CovMatrix {
            dims: (0..dim).map(|i| format!("d{i}")).collect(),
            values: Array2::from_shape_vec((dim, dim), values).unwrap(),
        }
    }

    #[test]
    fn eigen_diagonal() {
        let c = cov_of(vec![2.0, 0.0, 0.0, 1.0], 2);
        let r = principal_eigenvector(&c, &PowerIterationSettings::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-9);
        assert!((r.vector[0] - 1.0).abs() < 1e-6);
        assert!(r.vector[1].abs() < 1e-6);
    }

    #[test]
    fn eigen_analytic_2x2() {
        // [[2,1],[1,2]] -> lambda 3, v = (1,1)/sqrt(2)
        let c = cov_of(vec![2.0, 1.0, 1.0, 2.0], 2);
        let r = principal_eigenvector(&c, &PowerIterationSettings::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((r.vector[0] - s).abs() < 1e-7);
        assert!((r.vector[1] - s).abs() < 1e-7);
    }

    #[test]
    fn eigen_identity_is_degenerate() {
        let c = cov_of(vec![1.0, 0.0, 0.0, 1.0], 2);
        let r = principal_eigenvector(&c, &PowerIterationSettings::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.degenerate);
    }

    #[test]
    fn eigen_sign_convention() {
        // Dominant direction is (-1, 1)/sqrt(2) or its negation; the first
        // nonzero component must come out positive.
        let c = cov_of(vec![2.0, -1.0, -1.0, 2.0], 2);
        let r = principal_eigenvector(&c, &PowerIterationSettings::default()).unwrap();
        assert!(r.vector[0] > 0.0);
        assert!((r.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_returns_best_iterate_unconverged() {
        // ill-separated spectrum with one iteration allowed
        let c = cov_of(vec![1.0, 0.999, 0.999, 1.0], 2);
        let settings = PowerIterationSettings { max_iter: 1, ..Default::default() };
        let r = principal_eigenvector(&c, &settings).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        let norm: f64 = r.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn angular_distance_basics() {
        assert!(angular_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap().abs() < 1e-12);
        assert!((angular_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 90.0).abs() < 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((angular_distance(&[1.0, 0.0], &[s, s]).unwrap() - 45.0).abs() < 1e-9);
        assert!(matches!(
            angular_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    fn smooth_walk(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.5;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            x += 0.02 * (0.5 - x) + 0.03 * (rng.random::<f64>() - 0.5);
            x = x.clamp(0.0, 1.0);
            out.push(x);
        }
        out
    }

    #[test]
    fn report_reference_angle_is_zero_and_sorted() {
        let n = 500;
        let base = smooth_walk(n, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let jitter: Vec<f64> = base.iter().map(|v| v + 0.01 * (rng.random::<f64>() - 0.5)).collect();
        let anti: Vec<f64> = base.iter().map(|v| 1.0 - v).collect();
        let mut values = Array2::zeros((n, 3));
        for i in 0..n {
            values[[i, 0]] = base[i];
            values[[i, 1]] = jitter[i];
            values[[i, 2]] = anti[i];
        }
        let m = matrix_from(values, &["a", "b", "c"]);
        let groups = vec![
            ("ref".to_string(), vec!["a".to_string(), "b".to_string()]),
            ("pos".to_string(), vec!["b".to_string()]),
            ("neg".to_string(), vec!["c".to_string()]),
        ];
        let report = eigen_report(&m, &groups, "ref", 42, &PowerIterationSettings::default()).unwrap();
        let names: Vec<&str> = report.rows.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(names, vec!["neg", "pos", "ref", UNIFORM_BASELINE_GROUP]);
        let by_name = |n: &str| report.rows.iter().find(|r| r.group == n).unwrap();
        assert!(by_name("ref").angle_deg.abs() < 1e-5);
        // positively correlated group sits below 90 degrees, negated above
        assert!(by_name("pos").angle_deg < 90.0);
        assert!(by_name("neg").angle_deg > 90.0);
    }

    #[test]
    fn report_unknown_group_errors() {
        let m = matrix_from(Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap(), &["a"]);
        let groups = vec![("g".to_string(), vec!["a".to_string()])];
        assert!(matches!(
            eigen_report(&m, &groups, "nope", 0, &PowerIterationSettings::default()),
            Err(Error::UnknownGroup(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn covariance_is_symmetric_psd(seed in 0u64..500, rows in 3usize..40, cols in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 4.0 - 2.0);
                let names: Vec<String> = (0..cols).map(|i| format!("c{i}")).collect();
                let m = matrix_from(values, &names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
                let c = covariance(&m).unwrap();
                for i in 0..cols {
                    for j in 0..cols {
                        prop_assert!((c.values[[i, j]] - c.values[[j, i]]).abs() < 1e-10);
                    }
                }
                for probe in 0..8 {
                    let mut prng = ChaCha8Rng::seed_from_u64(seed ^ (probe + 1));
                    let v = Array1::from_shape_fn(cols, |_| prng.random::<f64>() - 0.5);
                    let q = v.dot(&c.values.dot(&v));
                    prop_assert!(q >= -1e-10);
                }
            }

            #[test]
            fn angular_distance_symmetric(ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0) {
                prop_assume!(ax.abs() + ay.abs() > 1e-6 && bx.abs() + by.abs() > 1e-6);
                let d1 = angular_distance(&[ax, ay], &[bx, by]).unwrap();
                let d2 = angular_distance(&[bx, by], &[ax, ay]).unwrap();
                prop_assert!((d1 - d2).abs() < 1e-9);
                prop_assert!((0.0..=180.0).contains(&d1));
                prop_assert!(angular_distance(&[ax, ay], &[ax, ay]).unwrap() < 1e-5);
            }
        }

        #[test]
        fn power_iteration_beats_random_probes() {
            // lambda* must dominate the Rayleigh quotient of any random unit probe.
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let dim = 5;
            let a = Array2::from_shape_fn((dim, dim), |_| rng.random::<f64>() - 0.5);
            let c_values = a.t().dot(&a);
            let c = CovMatrix {
                dims: (0..dim).map(|i| format!("d{i}")).collect(),
                values: c_values.clone(),
            };
            let r = principal_eigenvector(&c, &PowerIterationSettings::default()).unwrap();
            for _ in 0..10_000 {
                let mut v = Array1::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5);
                let norm = v.dot(&v).sqrt();
                v.mapv_inplace(|x| x / norm);
                let q = v.dot(&c_values.dot(&v));
                assert!(q <= r.value + 1e-6, "probe {q} exceeded lambda {}", r.value);
            }
        }
    }
}
