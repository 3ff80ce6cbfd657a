//! Deterministic synthetic multimodal datasets with known ground-truth
//! couplings. Predictors are smooth bounded random walks rescaled to [0, 1];
//! targets are declared functions of the predictors plus Gaussian noise.
//! The per-target noise floor (the error a perfect model would attain) is
//! reported analytically, so end-to-end tolerances have an exact reference.

use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::timeseries::{AlignedMatrix, SamplingGrid};
use chrono::{TimeZone, Utc};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear,
    Square,
    /// sin(2 * pi * x); non-monotone on [0, 1].
    Sine,
}

impl Nonlinearity {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Linear => x,
            Nonlinearity::Square => x * x,
            Nonlinearity::Sine => (2.0 * std::f64::consts::PI * x).sin(),
        }
    }
}

/// One additive term of a target: `weight * shape(predictor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub predictor: usize,
    pub weight: f64,
    pub shape: Nonlinearity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub predictors: usize,
    pub targets: usize,
    pub rows: usize,
    /// Gaussian noise sigma per target, in final target units.
    pub noise_std: Vec<f64>,
    /// Overall scale per target; stretches its dynamic range.
    pub range_multipliers: Vec<f64>,
    /// Per-target list of coupling terms. Every target needs at least one.
    pub couplings: Vec<Vec<Coupling>>,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.rows < 100 {
            return Err(Error::InvalidConfig(format!(
                "synthetic datasets need at least 100 rows, got {}",
                self.rows
            )));
        }
        if self.predictors == 0 || self.targets == 0 {
            return Err(Error::InvalidConfig(
                "need at least one predictor and one target".into(),
            ));
        }
        if self.noise_std.len() != self.targets
            || self.range_multipliers.len() != self.targets
            || self.couplings.len() != self.targets
        {
            return Err(Error::InvalidConfig(format!(
                "noise_std, range_multipliers and couplings must each have {} entries",
                self.targets
            )));
        }
        for (t, terms) in self.couplings.iter().enumerate() {
            if terms.is_empty() {
                return Err(Error::InvalidCoupling {
                    target: t,
                    reason: "every target must depend on at least one predictor".into(),
                });
            }
            for term in terms {
                if term.predictor >= self.predictors {
                    return Err(Error::InvalidCoupling {
                        target: t,
                        reason: format!(
                            "predictor index {} out of range (have {})",
                            term.predictor, self.predictors
                        ),
                    });
                }
            }
        }
        if self.noise_std.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidConfig("noise_std must be non-negative".into()));
        }
        Ok(())
    }
}

/// The declared functional relationships; evaluating them on the emitted
/// predictor rows reproduces the noiseless targets exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub couplings: Vec<Vec<Coupling>>,
    pub range_multipliers: Vec<f64>,
}

impl GroundTruth {
    /// Noiseless target values for one predictor row.
    pub fn eval_row(&self, predictors: &[f64]) -> Vec<f64> {
        self.couplings
            .iter()
            .zip(&self.range_multipliers)
            .map(|(terms, mult)| {
                let sum: f64 = terms
                    .iter()
                    .map(|c| c.weight * c.shape.apply(predictors[c.predictor]))
                    .sum();
                mult * sum
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    /// Predictor columns `p1..pN` then target columns `y1..yM`, hourly grid.
    pub matrix: AlignedMatrix,
    pub truth: GroundTruth,
    /// Analytic NMAE (percent) a perfect model would attain per target:
    /// `E|noise| / noiseless range * 100` with `E|N(0,s)| = s * sqrt(2/pi)`.
    pub noise_floor_percent: Vec<f64>,
    /// Noiseless target matrix, rows x targets.
    pub noiseless_targets: Array2<f64>,
    pub predictor_ids: Vec<String>,
    pub target_ids: Vec<String>,
}

/// Mean-reverting bounded walk, rescaled to span exactly [0, 1].
fn smooth_unit_walk(rows: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let kappa = 0.02;
    let step = 0.04;
    let mut x = 0.25 + 0.5 * rng.random::<f64>();
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        x += kappa * (0.5 - x) + step * (rng.random::<f64>() - 0.5) * 2.0;
        x = x.clamp(0.0, 1.0);
        out.push(x);
    }
    let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span > 0.0 {
        for v in &mut out {
            *v = (*v - min) / span;
        }
    }
    out
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let rows = config.rows;

    let mut predictors = Array2::zeros((rows, config.predictors));
    for j in 0..config.predictors {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, j as u64));
        let walk = smooth_unit_walk(rows, &mut rng);
        for (i, v) in walk.into_iter().enumerate() {
            predictors[[i, j]] = v;
        }
    }

    let truth = GroundTruth {
        couplings: config.couplings.clone(),
        range_multipliers: config.range_multipliers.clone(),
    };

    let mut noiseless = Array2::zeros((rows, config.targets));
    for i in 0..rows {
        let row: Vec<f64> = (0..config.predictors).map(|j| predictors[[i, j]]).collect();
        for (t, v) in truth.eval_row(&row).into_iter().enumerate() {
            noiseless[[i, t]] = v;
        }
    }

    let mut noisy = noiseless.clone();
    let mut floors = Vec::with_capacity(config.targets);
    for t in 0..config.targets {
        let sigma = config.noise_std[t];
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::InvalidConfig(format!("noise_std[{t}]: {e}")))?;
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0x7A66_0000 + t as u64));
            for i in 0..rows {
                noisy[[i, t]] += normal.sample(&mut rng);
            }
        }
        let col = noiseless.column(t);
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == min {
            return Err(Error::InvalidCoupling {
                target: t,
                reason: "noiseless target is constant; its range is zero".into(),
            });
        }
        let expected_abs_noise = sigma * (2.0 / std::f64::consts::PI).sqrt();
        floors.push(expected_abs_noise / (max - min) * 100.0);
    }

    let predictor_ids: Vec<String> = (1..=config.predictors).map(|j| format!("p{j}")).collect();
    let target_ids: Vec<String> = (1..=config.targets).map(|t| format!("y{t}")).collect();

    let mut values = Array2::zeros((rows, config.predictors + config.targets));
    values
        .slice_mut(ndarray::s![.., ..config.predictors])
        .assign(&predictors);
    values
        .slice_mut(ndarray::s![.., config.predictors..])
        .assign(&noisy);

    let grid = SamplingGrid::new(
        Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
        3600,
        rows,
    )?;
    let matrix = AlignedMatrix::from_parts(
        grid.clone(),
        grid.instants().collect(),
        predictor_ids.iter().chain(target_ids.iter()).cloned().collect(),
        values,
    )?;

    Ok(SynthDataset {
        matrix,
        truth,
        noise_floor_percent: floors,
        noiseless_targets: noiseless,
        predictor_ids,
        target_ids,
    })
}

/// An i.i.d. uniform [0, 1] column, independent of every predictor: the
/// no-relationship baseline for both regression and eigen analyses.
pub fn decorrelated_target(rows: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xDEC0));
    (0..rows).map(|_| rng.random::<f64>()).collect()
}

/// Evenly weighted linear couplings: target t depends on predictors
/// `t, t+1, ... t+k-1` (mod n). A convenient default for experiments.
pub fn default_couplings(n_predictors: usize, n_targets: usize, per_target: usize) -> Vec<Vec<Coupling>> {
    (0..n_targets)
        .map(|t| {
            (0..per_target)
                .map(|k| Coupling {
                    predictor: (t + k) % n_predictors,
                    weight: 1.0,
                    shape: Nonlinearity::Linear,
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;

    fn basic_config() -> SynthConfig {
        SynthConfig {
            predictors: 3,
            targets: 2,
            rows: 400,
            noise_std: vec![0.05, 0.0],
            range_multipliers: vec![2.0, 1.0],
            couplings: vec![
                vec![Coupling { predictor: 0, weight: 1.0, shape: Nonlinearity::Linear }],
                vec![
                    Coupling { predictor: 1, weight: 0.6, shape: Nonlinearity::Linear },
                    Coupling { predictor: 2, weight: 0.4, shape: Nonlinearity::Square },
                ],
            ],
            seed: 404,
        }
    }

    #[test]
    fn zero_noise_means_zero_floor() {
        let mut config = basic_config();
        config.noise_std = vec![0.0, 0.0];
        let ds = generate(&config).unwrap();
        assert!(ds.noise_floor_percent.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let config = basic_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.matrix.values, b.matrix.values);
        let mut other = config.clone();
        other.seed += 1;
        let c = generate(&other).unwrap();
        assert_ne!(a.matrix.values, c.matrix.values);
    }

    #[test]
    fn linear_target_floor_matches_analytic_value() {
        // target = 2 * p1 with p1 spanning [0,1] and sigma 0.05:
        // floor = 0.05 * sqrt(2/pi) / 2 ~ 1.99 percent
        let ds = generate(&basic_config()).unwrap();
        let expect = 0.05 * (2.0 / std::f64::consts::PI).sqrt() / 2.0 * 100.0;
        assert!((ds.noise_floor_percent[0] - expect).abs() < 1e-9);
        assert!((ds.noise_floor_percent[0] - 2.0).abs() < 0.05);
    }

    #[test]
    fn ground_truth_reproduces_noiseless_targets() {
        let ds = generate(&basic_config()).unwrap();
        for i in 0..ds.matrix.n_rows() {
            let row: Vec<f64> = ds
                .predictor_ids
                .iter()
                .map(|id| *ds.matrix.column(id).unwrap().get(i).unwrap())
                .collect();
            let out = ds.truth.eval_row(&row);
            for (t, v) in out.iter().enumerate() {
                assert_eq!(*v, ds.noiseless_targets[[i, t]]);
            }
        }
    }

    #[test]
    fn predictor_columns_are_unit_bounded() {
        let ds = generate(&basic_config()).unwrap();
        for id in &ds.predictor_ids {
            let col = ds.matrix.column(id).unwrap();
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(min, 0.0);
            assert_eq!(max, 1.0);
        }
    }

    #[test]
    fn invalid_couplings_are_rejected() {
        let mut config = basic_config();
        config.couplings[0] = vec![];
        assert!(matches!(generate(&config), Err(Error::InvalidCoupling { .. })));
        let mut config = basic_config();
        config.couplings[0][0].predictor = 99;
        assert!(matches!(generate(&config), Err(Error::InvalidCoupling { .. })));
        let mut config = basic_config();
        config.rows = 50;
        assert!(matches!(generate(&config), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn decorrelated_column_is_uncorrelated_with_predictors() {
        let mut config = basic_config();
        config.rows = 6000;
        let ds = generate(&config).unwrap();
        let extra = decorrelated_target(config.rows, config.seed);
        for id in &ds.predictor_ids {
            let col = ds.matrix.column(id).unwrap().to_vec();
            let r = pearson(&col, &extra).unwrap();
            assert!(r.abs() < 0.05, "|r| = {} for {id}", r.abs());
        }
    }
}
