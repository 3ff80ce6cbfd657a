//! Pearson and Spearman correlation, predictor-by-target correlation
//! tables, and the mean-|coefficient| predictor ranking used to pick the
//! top-m sensing modalities.

use crate::error::{Error, Result};
use crate::timeseries::AlignedMatrix;
use ndarray::Array2;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl std::fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorrelationMethod::Pearson => write!(f, "pearson"),
            CorrelationMethod::Spearman => write!(f, "spearman"),
        }
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewRows { needed: 2, have: x.len() });
    }
    Ok(())
}

/// Pearson's r: centered cross-moment over the product of centered norms.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        num += dx * dy;
        sx += dx * dx;
        sy += dy * dy;
    }
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(num / (sx.sqrt() * sy.sqrt()))
}

/// Average (fractional) ranks; tied runs share the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j are 1-based ranks i+1 ..= j; their mean is (i+j+1)/2
        let avg = (i + j + 1) as f64 / 2.0;
        for k in i..j {
            out[order[k]] = avg;
        }
        i = j;
    }
    out
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Spearman's rho. Tie-free inputs use the closed form
/// `1 - 6 * sum(d^2) / (n * (n^2 - 1))`; ties fall back to Pearson on the
/// average ranks, where the closed form is no longer valid.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let rx = ranks(x);
    let ry = ranks(y);
    if has_ties(x) || has_ties(y) {
        return pearson(&rx, &ry);
    }
    let n = x.len() as f64;
    let sum_d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0)))
}

fn correlate(method: CorrelationMethod, x: &[f64], y: &[f64]) -> Result<f64> {
    match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Spearman => spearman(x, y),
    }
}

/// Predictor-by-target coefficient matrix for one method.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTable {
    pub method: CorrelationMethod,
    pub predictors: Vec<String>,
    pub targets: Vec<String>,
    /// `coefficients[[p, t]]` correlates predictor `p` with target `t`.
    pub coefficients: Array2<f64>,
}

impl CorrelationTable {
    pub fn coefficient(&self, predictor: &str, target: &str) -> Result<f64> {
        let p = self
            .predictors
            .iter()
            .position(|id| id == predictor)
            .ok_or_else(|| Error::UnknownModality(predictor.to_string()))?;
        let t = self
            .targets
            .iter()
            .position(|id| id == target)
            .ok_or_else(|| Error::UnknownModality(target.to_string()))?;
        Ok(self.coefficients[[p, t]])
    }

    /// CSV layout: predictor rows, target columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("predictor");
        for t in &self.targets {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for (p, id) in self.predictors.iter().enumerate() {
            out.push_str(id);
            for t in 0..self.targets.len() {
                out.push_str(&format!(",{}", self.coefficients[[p, t]]));
            }
            out.push('\n');
        }
        out
    }
}

/// Correlate every (predictor, target) column pair of an aligned matrix.
pub fn correlation_table(
    matrix: &AlignedMatrix,
    predictors: &[String],
    targets: &[String],
    method: CorrelationMethod,
) -> Result<CorrelationTable> {
    let pred_cols: Vec<Vec<f64>> = predictors
        .iter()
        .map(|id| matrix.column(id).map(|c| c.to_vec()))
        .collect::<Result<_>>()?;
    let target_cols: Vec<Vec<f64>> = targets
        .iter()
        .map(|id| matrix.column(id).map(|c| c.to_vec()))
        .collect::<Result<_>>()?;
    let mut coefficients = Array2::zeros((predictors.len(), targets.len()));
    for (p, pc) in pred_cols.iter().enumerate() {
        for (t, tc) in target_cols.iter().enumerate() {
            coefficients[[p, t]] = correlate(method, pc, tc)?;
        }
    }
    Ok(CorrelationTable {
        method,
        predictors: predictors.to_vec(),
        targets: targets.to_vec(),
        coefficients,
    })
}

/// Predictors ordered by mean |coefficient| across a target set.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorRanking {
    pub targets: Vec<String>,
    /// `(predictor id, score)`, scores non-increasing; ties broken by id.
    pub ranked: Vec<(String, f64)>,
}

impl PredictorRanking {
    pub fn top(&self, m: usize) -> Result<Vec<String>> {
        if m > self.ranked.len() {
            return Err(Error::TooManyRequested {
                requested: m,
                available: self.ranked.len(),
            });
        }
        Ok(self.ranked[..m].iter().map(|(id, _)| id.clone()).collect())
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Score each predictor by its mean absolute coefficient over `targets` and
/// sort descending (ties by predictor id ascending). `m` only bounds what
/// callers may later request; the full ordering is returned.
pub fn rank_predictors(
    table: &CorrelationTable,
    targets: &[String],
    m: usize,
) -> Result<PredictorRanking> {
    if m > table.predictors.len() {
        return Err(Error::TooManyRequested {
            requested: m,
            available: table.predictors.len(),
        });
    }
    let target_idx: Vec<usize> = targets
        .iter()
        .map(|id| {
            table
                .targets
                .iter()
                .position(|t| t == id)
                .ok_or_else(|| Error::UnknownModality(id.clone()))
        })
        .collect::<Result<_>>()?;
    if target_idx.is_empty() {
        return Err(Error::MissingKey("targets".into()));
    }
    let mut ranked: Vec<(String, f64)> = table
        .predictors
        .iter()
        .enumerate()
        .map(|(p, id)| {
            let score = target_idx
                .iter()
                .map(|&t| table.coefficients[[p, t]].abs())
                .sum::<f64>()
                / target_idx.len() as f64;
            (id.clone(), score)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(PredictorRanking {
        targets: targets.to_vec(),
        ranked,
    })
}
