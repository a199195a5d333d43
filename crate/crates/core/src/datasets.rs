//! Datasets: Iris loading, circles/moons generation, stratified splits.
//!
//! Every dataset keeps its raw 2-D coordinates alongside features min-max
//! scaled to `[0, π]`, together with the `(min, max)` record that produced
//! them.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::objectives::ClassEnsemble;

/// The canonical 150-row Iris table, 4 measurements and a species column.
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

pub const IRIS_SPECIES: [&str; 3] = ["setosa", "versicolor", "virginica"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Scaling {
    pub fn fit(raw: &[[f64; 2]]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Dataset("cannot scale an empty dataset".into()));
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in raw {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Ok(Self { min, max })
    }

    /// Maps `[min, max]` onto `[0, π]` per feature; a constant feature maps to 0.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        std::array::from_fn(|d| {
            let span = self.max[d] - self.min[d];
            if span > 0.0 {
                (p[d] - self.min[d]) / span * PI
            } else {
                0.0
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub raw: [f64; 2],
    pub features: FeatureVector,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub points: Vec<LabeledPoint>,
    pub scaling: Scaling,
}

impl LabeledDataset {
    /// Scales `raw` with its own min-max record.
    pub fn from_raw(name: impl Into<String>, raw: Vec<([f64; 2], usize)>) -> Result<Self> {
        let coords: Vec<[f64; 2]> = raw.iter().map(|(p, _)| *p).collect();
        let scaling = Scaling::fit(&coords)?;
        Self::with_scaling(name, raw, scaling)
    }

    pub fn with_scaling(name: impl Into<String>, raw: Vec<([f64; 2], usize)>, scaling: Scaling) -> Result<Self> {
        let points = raw
            .into_iter()
            .map(|(p, label)| {
                let [a, b] = scaling.apply(p);
                Ok(LabeledPoint { raw: p, features: FeatureVector::new(a, b)?, label })
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Self { name: name.into(), points, scaling };
        ds.validate()?;
        Ok(ds)
    }

    /// Same raw points mapped through another dataset's scaling record.
    pub fn rescaled(&self, scaling: Scaling) -> Result<Self> {
        let raw = self.points.iter().map(|p| (p.raw, p.label)).collect();
        Self::with_scaling(self.name.clone(), raw, scaling)
    }

    fn validate(&self) -> Result<()> {
        let counts = self.class_counts();
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Dataset(format!("{}: class {c} has no points", self.name)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.points.iter().map(|p| p.label + 1).max().unwrap_or(0)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for p in &self.points {
            counts[p.label] += 1;
        }
        counts
    }

    /// Per-class ensembles in class order, members in dataset order.
    pub fn ensembles(&self) -> Result<Vec<ClassEnsemble>> {
        (0..self.n_classes())
            .map(|c| {
                let members = self.points.iter().filter(|p| p.label == c).map(|p| p.features).collect();
                ClassEnsemble::new(c, members)
            })
            .collect()
    }

    pub fn labeled_features(&self) -> Vec<(FeatureVector, usize)> {
        self.points.iter().map(|p| (p.features, p.label)).collect()
    }

    /// `f1,f2,label` with the scaled features.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["f1", "f2", "label"])?;
        for p in &self.points {
            let [a, b] = p.features.values();
            out.write_record([a.to_string(), b.to_string(), p.label.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `f1,f2,label` rows; the features are taken as already scaled.
    pub fn read_csv<R: Read>(name: &str, r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut points = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Dataset(format!("row {}: expected 3 columns, got {}", line + 2, rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i].trim().parse().map_err(|_| Error::Dataset(format!("row {}: bad number {:?}", line + 2, &rec[i])))
            };
            let (a, b) = (num(0)?, num(1)?);
            let label: usize = rec[2]
                .trim()
                .parse()
                .map_err(|_| Error::Dataset(format!("row {}: bad label {:?}", line + 2, &rec[2])))?;
            points.push(LabeledPoint { raw: [a, b], features: FeatureVector::new(a, b)?, label });
        }
        let coords: Vec<[f64; 2]> = points.iter().map(|p| p.raw).collect();
        let ds = Self { name: name.to_string(), scaling: Scaling::fit(&coords)?, points };
        ds.validate()?;
        Ok(ds)
    }
}

fn iris_label(s: &str) -> Option<usize> {
    let s = s.trim().trim_matches('"');
    if let Ok(k) = s.parse::<usize>() {
        return (k < 3).then_some(k);
    }
    let s = s.strip_prefix("Iris-").unwrap_or(s).to_ascii_lowercase();
    IRIS_SPECIES.iter().position(|&sp| sp == s)
}

/// Parses Iris rows (4 measurements + species name or 0/1/2), keeping petal
/// length and petal width. A header row is skipped if present.
pub fn parse_iris<R: Read>(r: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut raw = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if line == 0 && rec.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 5 {
            return Err(Error::Dataset(format!("iris row {}: expected 5 columns, got {}", line + 1, rec.len())));
        }
        let mut measurements = [0.0; 4];
        for (i, m) in measurements.iter_mut().enumerate() {
            *m = rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::Dataset(format!("iris row {}: bad number {:?}", line + 1, &rec[i])))?;
        }
        let label = iris_label(&rec[4])
            .ok_or_else(|| Error::Dataset(format!("iris row {}: unknown label {:?}", line + 1, &rec[4])))?;
        raw.push(([measurements[2], measurements[3]], label));
    }
    LabeledDataset::from_raw("iris", raw)
}

pub fn load_iris(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    parse_iris(std::fs::File::open(path)?)
}

pub fn builtin_iris() -> LabeledDataset {
    parse_iris(IRIS_CSV.as_bytes()).expect("bundled iris table parses")
}

fn gaussian(noise_sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(format!("noise sd {noise_sd}: {e}")))
}

/// Class 0 on the unit circle, class 1 on the circle of radius `factor`,
/// each with `n_per_class` evenly spaced angles and Gaussian jitter.
pub fn make_circles(n_per_class: usize, noise_sd: f64, factor: f64, seed: u64) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be at least 1"));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::invalid(format!("factor {factor} must be in (0, 1)")));
    }
    let noise = gaussian(noise_sd)?;
    let mut rng = crate::seed::rng(seed);
    let mut raw = Vec::with_capacity(2 * n_per_class);
    for (label, radius) in [(0, 1.0), (1, factor)] {
        for k in 0..n_per_class {
            let t = std::f64::consts::TAU * k as f64 / n_per_class as f64;
            let p = [radius * t.cos() + noise.sample(&mut rng), radius * t.sin() + noise.sample(&mut rng)];
            raw.push((p, label));
        }
    }
    LabeledDataset::from_raw("circles", raw)
}

/// Two interleaved half circles, `t` evenly spaced over `[0, π]`:
/// class 0 at `(cos t, sin t)`, class 1 at `(1 - cos t, 0.5 - sin t)`.
pub fn make_moons(n_per_class: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be at least 1"));
    }
    let noise = gaussian(noise_sd)?;
    let mut rng = crate::seed::rng(seed);
    let step = if n_per_class > 1 { PI / (n_per_class - 1) as f64 } else { 0.0 };
    let mut raw = Vec::with_capacity(2 * n_per_class);
    for label in 0..2 {
        for k in 0..n_per_class {
            let t = step * k as f64;
            let p = if label == 0 { [t.cos(), t.sin()] } else { [1.0 - t.cos(), 0.5 - t.sin()] };
            raw.push(([p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)], label));
        }
    }
    LabeledDataset::from_raw("moons", raw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub seed: u64,
}

/// Stratified split: `per_class_train` points of every class drawn without
/// replacement go to train, the rest to test. Both halves keep the source
/// scaling and dataset order.
pub fn split(data: &LabeledDataset, spec: SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if spec.per_class_train == 0 {
        return Err(Error::invalid("per_class_train must be at least 1"));
    }
    let mut rng = crate::seed::rng(spec.seed);
    let mut in_train = vec![false; data.len()];
    for class in 0..data.n_classes() {
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.points[i].label == class).collect();
        if spec.per_class_train >= members.len() {
            return Err(Error::invalid(format!(
                "per_class_train {} must be below the size {} of class {class}",
                spec.per_class_train,
                members.len()
            )));
        }
        for k in sample(&mut rng, members.len(), spec.per_class_train) {
            in_train[members[k]] = true;
        }
    }
    let pick = |want: bool, suffix: &str| LabeledDataset {
        name: format!("{}-{suffix}", data.name),
        points: data
            .points
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(p, _)| p.clone())
            .collect(),
        scaling: data.scaling,
    };
    Ok((pick(true, "train"), pick(false, "test")))
}
