//! JSON run reports and fixed-width result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{echo, SuiteConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experiment::{run_suite, ExperimentConfig, Strategy, Summary, SuiteRow};
use crate::par::Execution;
use crate::sampling::SamplingMode;
use crate::uncertainty::Method;

pub const TOOL: &str = "alcurate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub instances: usize,
    pub classes: usize,
    pub subjects: usize,
    pub feature_dim: usize,
    pub class_counts: Vec<usize>,
    /// FNV-1a over ids, subjects, labels and feature bits, as 16 hex digits.
    pub fingerprint: String,
}

impl DatasetInfo {
    pub fn of(dataset: &Dataset) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for inst in dataset.instances() {
            feed(&inst.instance_id.to_le_bytes());
            feed(inst.subject.as_str().as_bytes());
            feed(&[0]);
            feed(&(inst.label.0 as u64).to_le_bytes());
            for x in &inst.features {
                feed(&x.to_bits().to_le_bytes());
            }
        }
        let all: Vec<usize> = (0..dataset.len()).collect();
        DatasetInfo {
            instances: dataset.len(),
            classes: dataset.num_classes(),
            subjects: dataset.subject_labels().len(),
            feature_dim: dataset.feature_dim(),
            class_counts: dataset.class_counts(&all),
            fingerprint: format!("{h:016x}"),
        }
    }
}

/// One cell of an ablation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub method: Method,
    pub sampling_mode: SamplingMode,
    pub k: usize,
    pub calibrated: bool,
    pub accuracy: Summary,
    pub macro_f1: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ablation {
    /// Methods × {instance k…, subject k…}.
    pub sampling: Vec<AblationCell>,
    /// Methods × {uncalibrated, calibrated}.
    pub calibration: Vec<AblationCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub repeats: usize,
    /// Canonical `key = value` echo of the effective configuration.
    pub config: BTreeMap<String, String>,
    pub dataset: DatasetInfo,
    pub rows: Vec<SuiteRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Ablation>,
    /// Only present when timing was requested; omitted so reports are reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, suite: &SuiteConfig, dataset: &Dataset, rows: Vec<SuiteRow>) -> Self {
        RunReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed: suite.seed,
            repeats: suite.repeats,
            config: echo(suite),
            dataset: DatasetInfo::of(dataset),
            rows,
            ablation: None,
            wall_clock_seconds: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report JSON: {e}")))
    }

    /// Rebuild the suite config from the echoed keys.
    pub fn suite_config(&self) -> Result<SuiteConfig> {
        let text: String = self
            .config
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        SuiteConfig::parse(&text, "report config")
    }
}

/// Run every row of `suite`.
pub fn run_rows(dataset: &Dataset, suite: &SuiteConfig, exec: Execution) -> Result<RunReport> {
    suite.validate()?;
    let rows = run_suite(dataset, &suite.row_configs(), suite.repeats, suite.seed, exec)?;
    Ok(RunReport::new("run", suite, dataset, rows))
}

/// Typical instances per subject, rounded.
pub fn instances_per_subject(dataset: &Dataset) -> usize {
    let subjects = dataset.subject_labels().len().max(1);
    ((dataset.len() as f64 / subjects as f64).round() as usize).max(1)
}

fn active(base: &ExperimentConfig, method: Method, mode: SamplingMode, k: usize, calibrated: bool) -> ExperimentConfig {
    ExperimentConfig {
        label: String::new(),
        sampling_mode: mode,
        k,
        calibrated,
        ..base.clone().with_strategy(Strategy::ActiveLearning { method })
    }
}

/// The sampling-mode and calibration grids of `suite`, as experiment configs.
pub fn ablation_configs(dataset: &Dataset, suite: &SuiteConfig) -> Vec<ExperimentConfig> {
    let n = instances_per_subject(dataset);
    let instance_ks = suite.instance_ks.clone().unwrap_or_else(|| vec![n, 2 * n]);
    let mut out = Vec::new();
    for &method in &suite.methods {
        for &k in &instance_ks {
            out.push(active(&suite.base, method, SamplingMode::Instance, k, suite.base.calibrated));
        }
        for &k in &suite.subject_ks {
            out.push(active(&suite.base, method, SamplingMode::Subject, k, suite.base.calibrated));
        }
    }
    for &method in &suite.methods {
        for calibrated in [false, true] {
            out.push(active(&suite.base, method, suite.base.sampling_mode, suite.base.k, calibrated));
        }
    }
    for cfg in &mut out {
        cfg.label = format!(
            "{} {} k={}{}",
            cfg.strategy.title(),
            match cfg.sampling_mode {
                SamplingMode::Instance => "instance",
                SamplingMode::Subject => "subject",
            },
            cfg.k,
            if cfg.calibrated { " calibrated" } else { "" }
        );
    }
    out
}

/// Run both ablation grids. Identical configs are run once.
pub fn run_ablation(dataset: &Dataset, suite: &SuiteConfig, exec: Execution) -> Result<RunReport> {
    suite.validate()?;
    let configs = ablation_configs(dataset, suite);
    let mut unique: Vec<ExperimentConfig> = Vec::new();
    for c in &configs {
        if !unique.contains(c) {
            unique.push(c.clone());
        }
    }
    let rows = run_suite(dataset, &unique, suite.repeats, suite.seed, exec)?;
    let cell = |cfg: &ExperimentConfig| {
        let row = rows
            .iter()
            .find(|r| &r.config == cfg)
            .expect("every config was run");
        let Strategy::ActiveLearning { method } = cfg.strategy else {
            unreachable!("ablation rows are active learning")
        };
        AblationCell {
            method,
            sampling_mode: cfg.sampling_mode,
            k: cfg.k,
            calibrated: cfg.calibrated,
            accuracy: row.accuracy,
            macro_f1: row.macro_f1,
        }
    };
    let split = configs.len() - 2 * suite.methods.len();
    let ablation = Ablation {
        sampling: configs[..split].iter().map(cell).collect(),
        calibration: configs[split..].iter().map(cell).collect(),
    };
    let mut report = RunReport::new("ablate", suite, dataset, rows);
    report.ablation = Some(ablation);
    Ok(report)
}

fn metric(s: &Summary, with_std: bool) -> String {
    if with_std {
        format!("{:.4} ± {:.4}", s.mean, s.std)
    } else {
        format!("{:.4}", s.mean)
    }
}

fn render_grid(header: &[String], body: &[Vec<String>]) -> String {
    let cols = header.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| {
            body.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let pad = width[c] - cell.chars().count();
            if c == 0 {
                let _ = write!(s, "{cell}{}", " ".repeat(pad));
            } else {
                let _ = write!(s, "  {}{cell}", " ".repeat(pad));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out += &(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("--") + "\n");
    for r in body {
        out += &line(r);
    }
    out
}

/// Strategy rows with accuracy and macro-F1.
pub fn render_rows(rows: &[SuiteRow], repeats: usize) -> String {
    let header = ["Training method", "Accuracy", "Macro F1"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                metric(&r.accuracy, repeats > 1),
                metric(&r.macro_f1, repeats > 1),
            ]
        })
        .collect();
    render_grid(&header, &body)
}

fn pivot(
    cells: &[AblationCell],
    repeats: usize,
    column: impl Fn(&AblationCell) -> String,
) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for c in cells {
        let name = column(c);
        if !columns.contains(&name) {
            columns.push(name);
        }
        if !methods.contains(&c.method) {
            methods.push(c.method);
        }
    }
    let mut header = vec!["Method".to_string()];
    for col in &columns {
        header.push(format!("{col} Acc"));
        header.push(format!("{col} F1"));
    }
    let body: Vec<Vec<String>> = methods
        .iter()
        .map(|m| {
            let mut row = vec![m.title().to_string()];
            for col in &columns {
                match cells.iter().find(|c| c.method == *m && &column(c) == col) {
                    Some(c) => {
                        row.push(metric(&c.accuracy, repeats > 1));
                        row.push(metric(&c.macro_f1, repeats > 1));
                    }
                    None => row.extend(["-".to_string(), "-".to_string()]),
                }
            }
            row
        })
        .collect();
    render_grid(&header, &body)
}

/// Methods × sampling configurations.
pub fn render_sampling_table(ablation: &Ablation, repeats: usize) -> String {
    pivot(&ablation.sampling, repeats, |c| match c.sampling_mode {
        SamplingMode::Instance => format!("Inst k={}", c.k),
        SamplingMode::Subject => format!("Subj k={}", c.k),
    })
}

/// Methods × calibration on/off.
pub fn render_calibration_table(ablation: &Ablation, repeats: usize) -> String {
    pivot(&ablation.calibration, repeats, |c| {
        if c.calibrated { "Calibrated" } else { "Uncalibrated" }.to_string()
    })
}
