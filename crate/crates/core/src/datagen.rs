//! Synthetic grouped, class-imbalanced datasets and the CSV dataset format.
//!
//! Every subject gets a random offset shared by all of its instances, so
//! instances of one subject cluster together. That shared offset is what
//! makes instance-level transfers leak subject information between train
//! and pool.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Dataset, Instance, SubjectId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub subjects_per_class: Vec<usize>,
    pub instances_per_subject: usize,
    /// Pairwise distance between class means.
    pub class_separation: f64,
    /// Std of the per-subject offset.
    pub subject_sigma: f64,
    /// Std of the per-instance noise.
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            num_classes: 4,
            feature_dim: 16,
            subjects_per_class: vec![40, 4, 4, 10],
            instances_per_subject: 20,
            class_separation: 4.0,
            subject_sigma: 1.5,
            noise_sigma: 0.5,
            rng_seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be ≥ 2".into()));
        }
        if self.subjects_per_class.len() != self.num_classes {
            return Err(Error::Config(format!(
                "subjects_per_class has {} entries for {} classes",
                self.subjects_per_class.len(),
                self.num_classes
            )));
        }
        if self.feature_dim == 0 || self.instances_per_subject == 0 {
            return Err(Error::Config(
                "feature_dim and instances_per_subject must be ≥ 1".into(),
            ));
        }
        if let Some(c) = self.subjects_per_class.iter().position(|&n| n == 0) {
            return Err(Error::Config(format!("class {c} has no subjects")));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Config("class_separation must be > 0".into()));
        }
        if !(self.subject_sigma >= 0.0 && self.noise_sigma >= 0.0)
            || !self.subject_sigma.is_finite()
            || !self.noise_sigma.is_finite()
        {
            return Err(Error::Config("sigmas must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

/// Class means at pairwise distance `separation` along a seeded random orthonormal frame.
///
/// With more classes than dimensions an orthonormal frame does not exist;
/// the means are then random directions of norm `separation / √2`.
fn class_means(c: usize, d: usize, separation: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let radius = separation / std::f64::consts::SQRT_2;
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(c);
    while frame.len() < c {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if c <= d {
            for u in &frame {
                let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        frame.push(v.into_iter().map(|x| x / norm).collect());
    }
    frame
        .into_iter()
        .map(|u| u.into_iter().map(|x| x * radius).collect())
        .collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let d = spec.feature_dim;
    let means = class_means(spec.num_classes, d, spec.class_separation, &mut rng);
    let subject_noise = Normal::new(0.0, spec.subject_sigma).expect("validated sigma");
    let instance_noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");

    let total: usize = spec.subjects_per_class.iter().sum::<usize>() * spec.instances_per_subject;
    let mut instances = Vec::with_capacity(total);
    let mut next_id = 0u64;
    for (c, &n_subjects) in spec.subjects_per_class.iter().enumerate() {
        for s in 0..n_subjects {
            let subject = SubjectId(format!("c{c}-s{s:04}"));
            let offset: Vec<f64> = (0..d).map(|_| subject_noise.sample(&mut rng)).collect();
            for _ in 0..spec.instances_per_subject {
                let features = means[c]
                    .iter()
                    .zip(&offset)
                    .map(|(m, o)| m + o + instance_noise.sample(&mut rng))
                    .collect();
                instances.push(Instance {
                    instance_id: next_id,
                    subject: subject.clone(),
                    label: ClassLabel(c),
                    features,
                });
                next_id += 1;
            }
        }
    }
    Dataset::new(instances, spec.num_classes, d)
}

fn valid_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
}

/// Write `instance_id,subject_id,label,f0,...,f{d-1}` with 17 significant digits per float.
pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let mut header = String::from("instance_id,subject_id,label");
    for j in 0..dataset.feature_dim() {
        header.push_str(&format!(",f{j}"));
    }
    writeln!(w, "{header}")?;
    for inst in dataset.instances() {
        if !valid_id(inst.subject.as_str()) {
            return Err(Error::InvalidInput(format!(
                "subject id '{}' must be non-empty and use only [A-Za-z0-9_-]",
                inst.subject
            )));
        }
        let mut line = format!("{},{},{}", inst.instance_id, inst.subject, inst.label);
        for v in &inst.features {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(dataset, file)
}

/// Parse the CSV dataset format. `num_classes` defaults to `max label + 1` (at least 2).
pub fn read_csv<R: Read>(input: R, source: &str, num_classes: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 4 || names[..3] != ["instance_id", "subject_id", "label"] {
        return Err(parse_err(
            1,
            "header must be instance_id,subject_id,label,f0,...".into(),
        ));
    }
    let feature_dim = names.len() - 3;
    for (j, name) in names[3..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(parse_err(1, format!("expected column f{j}, found '{name}'")));
        }
    }

    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    let mut subject_labels: std::collections::HashMap<String, usize> = Default::default();
    for (row_no, record) in reader.records().enumerate() {
        let line = row_no + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != feature_dim + 3 {
            return Err(parse_err(
                line,
                format!(
                    "expected {} fields ({} features), found {}",
                    feature_dim + 3,
                    feature_dim,
                    record.len()
                ),
            ));
        }
        let instance_id: u64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad instance_id '{}'", &record[0])))?;
        let subject = record[1].to_string();
        if !valid_id(&subject) {
            return Err(parse_err(line, format!("bad subject_id '{subject}'")));
        }
        let label: usize = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad label '{}'", &record[2])))?;
        let features = record
            .iter()
            .skip(3)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("bad feature value '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !seen.insert(instance_id) {
            return Err(Error::DuplicateInstance(instance_id));
        }
        match subject_labels.get(&subject) {
            Some(&prev) if prev != label => {
                return Err(Error::ConflictingLabels {
                    subject,
                    first: prev,
                    second: label,
                })
            }
            Some(_) => {}
            None => {
                subject_labels.insert(subject.clone(), label);
            }
        }
        instances.push(Instance {
            instance_id,
            subject: SubjectId(subject),
            label: ClassLabel(label),
            features,
        });
    }
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let max_label = instances.iter().map(|i| i.label.0).max().unwrap_or(0);
    let c = num_classes.unwrap_or((max_label + 1).max(2));
    Dataset::new(instances, c, feature_dim)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, &path.display().to_string(), None)
}
