//! Flat `key = value` configuration files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Lists are
//! comma separated. Unknown keys are errors. Every key can also be set from
//! the command line through [`SuiteConfig::set`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datagen::GeneratorSpec;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Strategy};
use crate::uncertainty::Method;

/// Everything `run` and `ablate` need: shared experiment settings, the rows
/// to run, and the ablation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub base: ExperimentConfig,
    pub rows: Vec<Strategy>,
    pub seed: u64,
    pub repeats: usize,
    /// Methods covered by `ablate`.
    pub methods: Vec<Method>,
    /// Instance-mode budgets for `ablate`; `None` means one and two subjects' worth.
    pub instance_ks: Option<Vec<usize>>,
    pub subject_ks: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let mut rows = vec![
            Strategy::Unbalanced,
            Strategy::ClassWeighting,
            Strategy::RandomUndersample,
            Strategy::Oversample { factor: 2 },
            Strategy::Oversample { factor: 3 },
        ];
        rows.extend(Method::ALL.map(|method| Strategy::ActiveLearning { method }));
        SuiteConfig {
            base: ExperimentConfig::default(),
            rows,
            seed: 0,
            repeats: 1,
            methods: Method::ALL.to_vec(),
            instance_ks: None,
            subject_ks: vec![1, 2],
        }
    }
}

/// Keys in canonical output order.
pub const KEYS: &[&str] = &[
    "rows",
    "seed",
    "repeats",
    "sampling_mode",
    "k",
    "iterations",
    "seed_subjects_per_class",
    "undersample_subjects_per_class",
    "minority_classes",
    "allow_any_oversample_factor",
    "calibrated",
    "calibration_split",
    "selection_split",
    "class_grouping",
    "eval_level",
    "absent_class",
    "test_fraction",
    "epochs",
    "learning_rate",
    "batch_size",
    "hidden_width",
    "jitter_sigma",
    "methods",
    "instance_ks",
    "subject_ks",
];

fn cfg_err(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value}: expected {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| cfg_err(key, value, what))
}

fn parse_list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(key, value, "true or false")),
    }
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, value: &str, allowed: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.replace('_', "-")))
        .map_err(|_| cfg_err(key, value, allowed))
}

fn enum_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enum serialises to a string"),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Split `key = value` lines into pairs, reporting line numbers for malformed lines.
fn key_values(text: &str, source: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            message: format!("expected `key = value`, found '{line}'"),
        })?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl SuiteConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = SuiteConfig::default();
        for (line, key, value) in key_values(text, source)? {
            cfg.set(&key, &value).map_err(|e| Error::Parse {
                path: source.to_string(),
                line,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let b = &mut self.base;
        match key {
            "rows" => self.rows = parse_list(value, Strategy::parse_token)?,
            "seed" => self.seed = parse_num(key, value, "an unsigned integer")?,
            "repeats" => self.repeats = parse_num(key, value, "a positive integer")?,
            "sampling_mode" => b.sampling_mode = parse_enum(key, value, "instance or subject")?,
            "k" => b.k = parse_num(key, value, "a positive integer")?,
            "iterations" => b.iterations = parse_num(key, value, "an unsigned integer")?,
            "seed_subjects_per_class" => {
                b.seed_subjects_per_class = parse_num(key, value, "a positive integer")?
            }
            "undersample_subjects_per_class" => {
                b.undersample_subjects_per_class = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value, "a positive integer or auto")?)
                }
            }
            "minority_classes" => {
                b.minority_classes = if value == "auto" {
                    None
                } else {
                    Some(parse_list(value, |s| parse_num(key, s, "class indices or auto"))?)
                }
            }
            "allow_any_oversample_factor" => b.allow_any_oversample_factor = parse_bool(key, value)?,
            "calibrated" => b.calibrated = parse_bool(key, value)?,
            "calibration_split" => {
                b.calibration_split =
                    parse_enum(key, value, "pool-slice or paper-faithful-test")?
            }
            "selection_split" => b.selection_split = parse_enum(key, value, "test or pool-slice")?,
            "class_grouping" => {
                b.class_grouping = parse_enum(key, value, "true-label or predicted-label")?
            }
            "eval_level" => b.eval_level = parse_enum(key, value, "instance or subject-vote")?,
            "absent_class" => b.absent_class = parse_enum(key, value, "zero or skip")?,
            "test_fraction" => b.test_fraction = parse_num(key, value, "a number in (0, 1)")?,
            "epochs" => b.train.epochs = parse_num(key, value, "a positive integer")?,
            "learning_rate" => b.train.learning_rate = parse_num(key, value, "a positive number")?,
            "batch_size" => b.train.batch_size = parse_num(key, value, "a positive integer")?,
            "hidden_width" => b.train.hidden_width = parse_num(key, value, "an unsigned integer")?,
            "jitter_sigma" => b.train.jitter_sigma = parse_num(key, value, "a number ≥ 0")?,
            "methods" => self.methods = parse_list(value, str::parse)?,
            "instance_ks" => {
                self.instance_ks = if value == "auto" {
                    None
                } else {
                    Some(parse_list(value, |s| parse_num(key, s, "positive integers or auto"))?)
                }
            }
            "subject_ks" => {
                self.subject_ks = parse_list(value, |s| parse_num(key, s, "positive integers"))?
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Config("rows must list at least one strategy".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be ≥ 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must list at least one method".into()));
        }
        if self.subject_ks.contains(&0) || self.instance_ks.as_ref().is_some_and(|k| k.contains(&0)) {
            return Err(Error::Config("ablation k values must be ≥ 1".into()));
        }
        for cfg in self.row_configs() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// One experiment config per row.
    pub fn row_configs(&self) -> Vec<ExperimentConfig> {
        self.rows
            .iter()
            .map(|s| ExperimentConfig {
                rng_seed: self.seed,
                ..self.base.clone().with_strategy(*s)
            })
            .collect()
    }

    /// Canonical text form: every key, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_map() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Key → canonical value, in [`KEYS`] order.
    pub fn to_map(&self) -> Vec<(&'static str, String)> {
        let b = &self.base;
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "rows" => join(&self.rows.iter().map(Strategy::token).collect::<Vec<_>>()),
                    "seed" => self.seed.to_string(),
                    "repeats" => self.repeats.to_string(),
                    "sampling_mode" => enum_str(&b.sampling_mode),
                    "k" => b.k.to_string(),
                    "iterations" => b.iterations.to_string(),
                    "seed_subjects_per_class" => b.seed_subjects_per_class.to_string(),
                    "undersample_subjects_per_class" => b
                        .undersample_subjects_per_class
                        .map_or("auto".into(), |n| n.to_string()),
                    "minority_classes" => b
                        .minority_classes
                        .as_ref()
                        .map_or("auto".into(), |m| join(m)),
                    "allow_any_oversample_factor" => b.allow_any_oversample_factor.to_string(),
                    "calibrated" => b.calibrated.to_string(),
                    "calibration_split" => enum_str(&b.calibration_split),
                    "selection_split" => enum_str(&b.selection_split),
                    "class_grouping" => enum_str(&b.class_grouping),
                    "eval_level" => enum_str(&b.eval_level),
                    "absent_class" => enum_str(&b.absent_class),
                    "test_fraction" => b.test_fraction.to_string(),
                    "epochs" => b.train.epochs.to_string(),
                    "learning_rate" => b.train.learning_rate.to_string(),
                    "batch_size" => b.train.batch_size.to_string(),
                    "hidden_width" => b.train.hidden_width.to_string(),
                    "jitter_sigma" => b.train.jitter_sigma.to_string(),
                    "methods" => join(&self.methods),
                    "instance_ks" => self.instance_ks.as_ref().map_or("auto".into(), |k| join(k)),
                    "subject_ks" => join(&self.subject_ks),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .collect()
    }
}

/// Parse a generator spec from `key = value` text. Keys: `num_classes`,
/// `feature_dim`, `subjects_per_class`, `instances_per_subject`,
/// `class_separation`, `subject_sigma`, `noise_sigma`, `seed`.
pub fn parse_generator_spec(text: &str, source: &str) -> Result<GeneratorSpec> {
    let mut spec = GeneratorSpec::default();
    let mut explicit_classes = false;
    for (line, key, value) in key_values(text, source)? {
        let r = set_generator_key(&mut spec, &key, &value);
        if key == "num_classes" {
            explicit_classes = true;
        }
        r.map_err(|e| Error::Parse {
            path: source.to_string(),
            line,
            message: e.to_string(),
        })?;
    }
    if !explicit_classes {
        spec.num_classes = spec.subjects_per_class.len();
    }
    Ok(spec)
}

pub fn set_generator_key(spec: &mut GeneratorSpec, key: &str, value: &str) -> Result<()> {
    match key {
        "num_classes" => spec.num_classes = parse_num(key, value, "an integer ≥ 2")?,
        "feature_dim" => spec.feature_dim = parse_num(key, value, "a positive integer")?,
        "subjects_per_class" => {
            spec.subjects_per_class =
                parse_list(value, |s| parse_num(key, s, "positive integers"))?;
            spec.num_classes = spec.subjects_per_class.len();
        }
        "instances_per_subject" => {
            spec.instances_per_subject = parse_num(key, value, "a positive integer")?
        }
        "class_separation" => spec.class_separation = parse_num(key, value, "a positive number")?,
        "subject_sigma" => spec.subject_sigma = parse_num(key, value, "a number ≥ 0")?,
        "noise_sigma" => spec.noise_sigma = parse_num(key, value, "a number ≥ 0")?,
        "seed" => spec.rng_seed = parse_num(key, value, "an unsigned integer")?,
        other => return Err(Error::Config(format!("unknown generator key '{other}'"))),
    }
    Ok(())
}

/// Canonical `key = value` map of a suite config, as echoed in reports.
pub fn echo(cfg: &SuiteConfig) -> BTreeMap<String, String> {
    cfg.to_map()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_nine_rows() {
        let cfg = SuiteConfig::default();
        assert_eq!(cfg.rows.len(), 9);
        cfg.validate().unwrap();
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = SuiteConfig::default();
        cfg.set("calibrated", "true").unwrap();
        cfg.set("minority_classes", "1, 2").unwrap();
        cfg.set("instance_ks", "20,40").unwrap();
        cfg.set("calibration_split", "paper-faithful-test").unwrap();
        cfg.set("learning_rate", "0.01").unwrap();
        let again = SuiteConfig::parse(&cfg.to_text(), "echo").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn comments_blank_lines_and_overrides() {
        let text = "# header\n\nk = 3   # three\nrows = al-ratio, random-undersample\n";
        let mut cfg = SuiteConfig::parse(text, "t").unwrap();
        assert_eq!(cfg.base.k, 3);
        assert_eq!(cfg.rows.len(), 2);
        cfg.apply_overrides(["k=5", "sampling_mode = instance"]).unwrap();
        assert_eq!(cfg.base.k, 5);
        assert_eq!(cfg.base.sampling_mode, crate::sampling::SamplingMode::Instance);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match SuiteConfig::parse("k = 1\nbogus = 2\n", "f.cfg") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match SuiteConfig::parse("k = 1\nno equals sign\n", "f.cfg") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(SuiteConfig::parse("calibrated = maybe\n", "f").is_err());
        assert!(SuiteConfig::parse("rows = al-nonsense\n", "f").is_err());
    }

    #[test]
    fn generator_spec_parsing() {
        let spec = parse_generator_spec("subjects_per_class = 2,2,2,2\nseed = 9\n", "g").unwrap();
        assert_eq!(spec.subjects_per_class, vec![2; 4]);
        assert_eq!(spec.num_classes, 4);
        assert_eq!(spec.rng_seed, 9);
        assert!(parse_generator_spec("colour = blue\n", "g").is_err());
    }
}
