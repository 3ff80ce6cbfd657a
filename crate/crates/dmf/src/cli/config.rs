//! TOML run configuration. Unknown keys are rejected, missing required
//! keys and type mismatches name the offending key, and training defaults
//! are filled in (learning rate 0.001, batch 64, 80:20 split, patience 500).

use crate::error::{Error, Result};
use crate::fusion::DmfMode;
use crate::nn::TrainHyper;
use crate::stats::CorrelationMethod;
use crate::synthgen::{Coupling, Nonlinearity, SynthConfig};
use chrono::{DateTime, Utc};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use toml::Value;

#[derive(Debug, Clone, Default)]
pub struct DatasetSection {
    pub csv: Option<PathBuf>,
    pub long_csv: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct GridSection {
    pub period_s: i64,
    pub start: Option<DateTime<Utc>>,
    pub count: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { period_s: 3600, start: None, count: None }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSection {
    pub predictors: Option<Vec<String>>,
    pub targets: Option<Vec<String>>,
    pub mode: DmfMode,
    pub hidden_layers: Vec<usize>,
    pub normalize_targets: bool,
    pub temporal: Option<String>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            predictors: None,
            targets: None,
            mode: DmfMode::Itr,
            hidden_layers: vec![64, 64],
            normalize_targets: true,
            temporal: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingSection {
    pub hyper: TrainHyper,
    pub split_ratio: f64,
    pub seed: u64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            hyper: TrainHyper::default(),
            split_ratio: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationSection {
    pub method: CorrelationMethod,
}

impl Default for CorrelationSection {
    fn default() -> Self {
        CorrelationSection { method: CorrelationMethod::Spearman }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSection {
    pub reference: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub groups: Vec<(String, Vec<String>)>,
}

impl Default for EigenSection {
    fn default() -> Self {
        EigenSection {
            reference: None,
            tol: 1e-10,
            max_iter: 10_000,
            groups: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepSection {
    pub architectures: Vec<Vec<usize>>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BandwidthSection {
    pub payload_bytes: f64,
    pub rates: BTreeMap<String, f64>,
}

impl Default for BandwidthSection {
    fn default() -> Self {
        BandwidthSection { payload_bytes: 8.0, rates: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthSection {
    pub config: Option<SynthConfig>,
    pub decorrelated: bool,
}

/// Fully validated run configuration with defaults applied.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub grid: GridSection,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub correlation: CorrelationSection,
    pub eigen: EigenSection,
    pub sweep: SweepSection,
    pub bandwidth: BandwidthSection,
    pub synth: SynthSection,
}

fn type_err(key: &str, expected: &'static str) -> Error {
    Error::TypeError { key: key.to_string(), expected }
}

struct Section<'a> {
    prefix: String,
    table: &'a toml::map::Map<String, Value>,
}

impl<'a> Section<'a> {
    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{name}", self.prefix)
        }
    }

    fn check_keys(&self, known: &[&str]) -> Result<()> {
        for k in self.table.keys() {
            if !known.contains(&k.as_str()) {
                return Err(Error::UnknownKey(self.key(k)));
            }
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Option<&'a Value> {
        self.table.get(name)
    }

    fn string(&self, name: &str) -> Result<Option<String>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(type_err(&self.key(name), "string")),
        }
    }

    fn float(&self, name: &str) -> Result<Option<f64>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(type_err(&self.key(name), "number")),
        }
    }

    fn integer(&self, name: &str) -> Result<Option<i64>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(type_err(&self.key(name), "integer")),
        }
    }

    fn unsigned(&self, name: &str) -> Result<Option<usize>> {
        match self.integer(name)? {
            None => Ok(None),
            Some(i) if i >= 0 => Ok(Some(i as usize)),
            Some(_) => Err(type_err(&self.key(name), "non-negative integer")),
        }
    }

    fn boolean(&self, name: &str) -> Result<Option<bool>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(type_err(&self.key(name), "boolean")),
        }
    }

    fn string_list(&self, name: &str) -> Result<Option<Vec<String>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(type_err(&self.key(name), "array of strings")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(type_err(&self.key(name), "array of strings")),
        }
    }

    fn unsigned_list(&self, name: &str) -> Result<Option<Vec<usize>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(type_err(&self.key(name), "array of non-negative integers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(type_err(&self.key(name), "array of non-negative integers")),
        }
    }

    fn float_list(&self, name: &str) -> Result<Option<Vec<f64>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(type_err(&self.key(name), "array of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(type_err(&self.key(name), "array of numbers")),
        }
    }

    fn sub_table(&self, name: &str) -> Result<Option<Section<'a>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section {
                prefix: self.key(name),
                table: t,
            })),
            Some(_) => Err(type_err(&self.key(name), "table")),
        }
    }
}

fn parse_mode(raw: &str, key: &str) -> Result<DmfMode> {
    match raw {
        "itr" => Ok(DmfMode::Itr),
        "utr" => Ok(DmfMode::Utr),
        _ => Err(Error::InvalidConfig(format!(
            "`{key}` must be \"itr\" or \"utr\", got \"{raw}\""
        ))),
    }
}

fn parse_method(raw: &str, key: &str) -> Result<CorrelationMethod> {
    match raw {
        "pearson" => Ok(CorrelationMethod::Pearson),
        "spearman" => Ok(CorrelationMethod::Spearman),
        _ => Err(Error::InvalidConfig(format!(
            "`{key}` must be \"pearson\" or \"spearman\", got \"{raw}\""
        ))),
    }
}

fn parse_shape(raw: &str, key: &str) -> Result<Nonlinearity> {
    match raw {
        "linear" => Ok(Nonlinearity::Linear),
        "square" => Ok(Nonlinearity::Square),
        "sine" => Ok(Nonlinearity::Sine),
        _ => Err(Error::InvalidConfig(format!(
            "`{key}` must be \"linear\", \"square\" or \"sine\", got \"{raw}\""
        ))),
    }
}

fn parse_timestamp(raw: &str, key: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::InvalidConfig(format!("`{key}`: bad timestamp `{raw}`: {e}")))
}

/// Parse and validate a run configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigIo {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let root_table: toml::Table = text
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("TOML parse error: {e}")))?;
    let root = Section { prefix: String::new(), table: &root_table };
    root.check_keys(&[
        "dataset",
        "grid",
        "model",
        "training",
        "correlation",
        "eigen",
        "sweep",
        "bandwidth",
        "synth",
    ])?;

    let mut config = RunConfig::default();

    if let Some(s) = root.sub_table("dataset")? {
        s.check_keys(&["csv", "long_csv", "metadata"])?;
        config.dataset.csv = s.string("csv")?.map(PathBuf::from);
        config.dataset.long_csv = s.string("long_csv")?.map(PathBuf::from);
        config.dataset.metadata = s.string("metadata")?.map(PathBuf::from);
    }

    if let Some(s) = root.sub_table("grid")? {
        s.check_keys(&["period_s", "start", "count"])?;
        if let Some(p) = s.integer("period_s")? {
            if p <= 0 {
                return Err(Error::InvalidConfig("grid.period_s must be positive".into()));
            }
            config.grid.period_s = p;
        }
        if let Some(raw) = s.string("start")? {
            config.grid.start = Some(parse_timestamp(&raw, &s.key("start"))?);
        }
        config.grid.count = s.unsigned("count")?;
    }

    if let Some(s) = root.sub_table("model")? {
        s.check_keys(&[
            "predictors",
            "targets",
            "mode",
            "hidden_layers",
            "normalize_targets",
            "temporal",
        ])?;
        config.model.predictors = s.string_list("predictors")?;
        config.model.targets = s.string_list("targets")?;
        // an explicitly empty list is as missing as an absent key
        if matches!(&config.model.targets, Some(t) if t.is_empty()) {
            return Err(Error::MissingKey(s.key("targets")));
        }
        if matches!(&config.model.predictors, Some(p) if p.is_empty()) {
            return Err(Error::MissingKey(s.key("predictors")));
        }
        if let Some(raw) = s.string("mode")? {
            config.model.mode = parse_mode(&raw, &s.key("mode"))?;
        }
        if let Some(layers) = s.unsigned_list("hidden_layers")? {
            config.model.hidden_layers = layers;
        }
        if let Some(b) = s.boolean("normalize_targets")? {
            config.model.normalize_targets = b;
        }
        config.model.temporal = s.string("temporal")?;
    }

    if let Some(s) = root.sub_table("training")? {
        s.check_keys(&[
            "learning_rate",
            "batch_size",
            "patience",
            "max_steps",
            "eval_every",
            "split_ratio",
            "seed",
        ])?;
        if let Some(v) = s.float("learning_rate")? {
            config.training.hyper.learning_rate = v;
        }
        if let Some(v) = s.unsigned("batch_size")? {
            config.training.hyper.batch_size = v;
        }
        if let Some(v) = s.unsigned("patience")? {
            config.training.hyper.patience = v;
        }
        if let Some(v) = s.unsigned("max_steps")? {
            config.training.hyper.max_steps = v;
        }
        if let Some(v) = s.unsigned("eval_every")? {
            config.training.hyper.eval_every = v;
        }
        if let Some(v) = s.float("split_ratio")? {
            config.training.split_ratio = v;
        }
        if let Some(v) = s.integer("seed")? {
            if v < 0 {
                return Err(type_err(&s.key("seed"), "non-negative integer"));
            }
            config.training.seed = v as u64;
        }
    }

    if let Some(s) = root.sub_table("correlation")? {
        s.check_keys(&["method"])?;
        if let Some(raw) = s.string("method")? {
            config.correlation.method = parse_method(&raw, &s.key("method"))?;
        }
    }

    if let Some(s) = root.sub_table("eigen")? {
        s.check_keys(&["reference", "tol", "max_iter", "groups"])?;
        config.eigen.reference = s.string("reference")?;
        if let Some(v) = s.float("tol")? {
            config.eigen.tol = v;
        }
        if let Some(v) = s.unsigned("max_iter")? {
            config.eigen.max_iter = v;
        }
        if let Some(groups) = s.sub_table("groups")? {
            for (name, value) in groups.table {
                let cols = match value {
                    Value::Array(items) => items
                        .iter()
                        .map(|v| match v {
                            Value::String(c) => Ok(c.clone()),
                            _ => Err(type_err(&groups.key(name), "array of strings")),
                        })
                        .collect::<Result<Vec<_>>>()?,
                    _ => return Err(type_err(&groups.key(name), "array of strings")),
                };
                config.eigen.groups.push((name.clone(), cols));
            }
            config.eigen.groups.sort_by(|a, b| a.0.cmp(&b.0));
        }
    }

    if let Some(s) = root.sub_table("sweep")? {
        s.check_keys(&["architectures", "counts"])?;
        if let Some(Value::Array(items)) = s.get("architectures") {
            let mut archs = Vec::new();
            for item in items {
                match item {
                    Value::Array(widths) => {
                        let arch = widths
                            .iter()
                            .map(|w| match w {
                                Value::Integer(i) if *i > 0 => Ok(*i as usize),
                                _ => Err(type_err(
                                    &s.key("architectures"),
                                    "array of arrays of positive integers",
                                )),
                            })
                            .collect::<Result<Vec<_>>>()?;
                        archs.push(arch);
                    }
                    _ => {
                        return Err(type_err(
                            &s.key("architectures"),
                            "array of arrays of positive integers",
                        ))
                    }
                }
            }
            config.sweep.architectures = archs;
        } else if s.get("architectures").is_some() {
            return Err(type_err(&s.key("architectures"), "array of arrays"));
        }
        if let Some(counts) = s.unsigned_list("counts")? {
            config.sweep.counts = counts;
        }
    }

    if let Some(s) = root.sub_table("bandwidth")? {
        s.check_keys(&["payload_bytes", "rates"])?;
        if let Some(v) = s.float("payload_bytes")? {
            config.bandwidth.payload_bytes = v;
        }
        if let Some(rates) = s.sub_table("rates")? {
            for (name, value) in rates.table {
                let rate = match value {
                    Value::Float(f) => *f,
                    Value::Integer(i) => *i as f64,
                    _ => return Err(type_err(&rates.key(name), "number")),
                };
                config.bandwidth.rates.insert(name.clone(), rate);
            }
        }
    }

    if let Some(s) = root.sub_table("synth")? {
        s.check_keys(&[
            "predictors",
            "targets",
            "rows",
            "noise_std",
            "range_multipliers",
            "couplings",
            "seed",
            "decorrelated",
        ])?;
        let predictors = s
            .unsigned("predictors")?
            .ok_or_else(|| Error::MissingKey(s.key("predictors")))?;
        let targets = s
            .unsigned("targets")?
            .ok_or_else(|| Error::MissingKey(s.key("targets")))?;
        let rows = s.unsigned("rows")?.ok_or_else(|| Error::MissingKey(s.key("rows")))?;
        let noise_std = s
            .float_list("noise_std")?
            .ok_or_else(|| Error::MissingKey(s.key("noise_std")))?;
        let range_multipliers = s
            .float_list("range_multipliers")?
            .unwrap_or_else(|| vec![1.0; targets]);
        let couplings = match s.get("couplings") {
            None => crate::synthgen::default_couplings(predictors.max(1), targets, 2.min(predictors.max(1))),
            Some(Value::Array(per_target)) => {
                let mut out = Vec::new();
                for (t, entry) in per_target.iter().enumerate() {
                    let Value::Array(terms) = entry else {
                        return Err(type_err(&s.key("couplings"), "array of arrays of tables"));
                    };
                    let mut list = Vec::new();
                    for term in terms {
                        let Value::Table(table) = term else {
                            return Err(type_err(&s.key("couplings"), "array of arrays of tables"));
                        };
                        let term_section = Section {
                            prefix: format!("{}[{t}]", s.key("couplings")),
                            table,
                        };
                        term_section.check_keys(&["predictor", "weight", "shape"])?;
                        let predictor = term_section
                            .unsigned("predictor")?
                            .ok_or_else(|| Error::MissingKey(term_section.key("predictor")))?;
                        let weight = term_section.float("weight")?.unwrap_or(1.0);
                        let shape = match term_section.string("shape")? {
                            Some(raw) => parse_shape(&raw, &term_section.key("shape"))?,
                            None => Nonlinearity::Linear,
                        };
                        list.push(Coupling { predictor, weight, shape });
                    }
                    out.push(list);
                }
                out
            }
            Some(_) => return Err(type_err(&s.key("couplings"), "array of arrays of tables")),
        };
        let seed = match s.integer("seed")? {
            Some(v) if v >= 0 => v as u64,
            Some(_) => return Err(type_err(&s.key("seed"), "non-negative integer")),
            None => config.training.seed,
        };
        config.synth.config = Some(SynthConfig {
            predictors,
            targets,
            rows,
            noise_std,
            range_multipliers,
            couplings,
            seed,
        });
        config.synth.decorrelated = s.boolean("decorrelated")?.unwrap_or(false);
    }

    Ok(config)
}

impl RunConfig {
    /// Required-field accessors used by the subcommands.
    pub fn require_predictors(&self) -> Result<Vec<String>> {
        self.model
            .predictors
            .clone()
            .ok_or_else(|| Error::MissingKey("model.predictors".into()))
    }

    pub fn require_targets(&self) -> Result<Vec<String>> {
        self.model
            .targets
            .clone()
            .ok_or_else(|| Error::MissingKey("model.targets".into()))
    }

    pub fn require_csv(&self) -> Result<PathBuf> {
        self.dataset
            .csv
            .clone()
            .ok_or_else(|| Error::MissingKey("dataset.csv".into()))
    }
}
