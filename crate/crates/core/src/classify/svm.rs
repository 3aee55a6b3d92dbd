//! One-vs-rest linear maximum-margin classifier trained by stochastic
//! subgradient descent on the hinge loss (Pegasos).
//!
//! Features are standardized and then expanded with every pairwise product,
//! so the separating hyperplanes are linear in a fixed quadratic map. The
//! products let one class be carved out by sign and magnitude combinations
//! (left turn and accelerating, large lateral shift either way).

use super::{BehaviorLabel, FeatureVector};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const FORMAT_HEADER: &str = "wzsafe-classifier v2";

/// Length of the expanded feature map: the standardized features followed by
/// the products `z_i * z_j` for `i <= j`.
pub const DIM: usize = FeatureVector::LEN + FeatureVector::LEN * (FeatureVector::LEN + 1) / 2;

fn expand(z: &[f64; FeatureVector::LEN]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    out[..FeatureVector::LEN].copy_from_slice(z);
    let mut k = FeatureVector::LEN;
    for i in 0..FeatureVector::LEN {
        for j in i..FeatureVector::LEN {
            out[k] = z[i] * z[j];
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub min_per_class: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 40,
            seed: 7,
            min_per_class: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub classes: Vec<BehaviorLabel>,
    pub means: [f64; FeatureVector::LEN],
    pub scales: [f64; FeatureVector::LEN],
    /// One row per class: weights of the expanded features, then the bias.
    pub weights: Vec<[f64; DIM + 1]>,
}

impl ClassifierModel {
    fn features(&self, f: &FeatureVector) -> [f64; DIM] {
        expand(&self.standardize(f))
    }

    fn standardize(&self, f: &FeatureVector) -> [f64; FeatureVector::LEN] {
        let mut z = f.to_array();
        for (i, v) in z.iter_mut().enumerate() {
            *v = (*v - self.means[i]) / self.scales[i];
        }
        z
    }

    pub fn scores(&self, f: &FeatureVector) -> Vec<f64> {
        let z = self.features(f);
        self.weights
            .iter()
            .map(|w| dot(w, &z) + w[DIM])
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_HEADER}");
        let names: Vec<&str> = self.classes.iter().map(|c| c.name()).collect();
        let _ = writeln!(s, "classes {}", names.join(" "));
        let _ = writeln!(s, "features {}", FeatureVector::NAMES.join(" "));
        let _ = writeln!(s, "mean {}", join(&self.means));
        let _ = writeln!(s, "scale {}", join(&self.scales));
        for (c, w) in self.classes.iter().zip(&self.weights) {
            let _ = writeln!(s, "weights {} {}", c.name(), join(w));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Model(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(FORMAT_HEADER) {
            return Err(bad("missing or unsupported header"));
        }
        let mut classes = Vec::new();
        let mut means = None;
        let mut scales = None;
        let mut weights = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("classes") => {
                    for name in parts {
                        classes.push(BehaviorLabel::parse(name).ok_or_else(|| bad(&format!("unknown class {name}")))?);
                    }
                }
                Some("features") => {
                    let names: Vec<&str> = parts.collect();
                    if names != FeatureVector::NAMES {
                        return Err(bad("feature list does not match"));
                    }
                }
                Some("mean") => means = Some(parse_row::<{ FeatureVector::LEN }>(parts)?),
                Some("scale") => scales = Some(parse_row::<{ FeatureVector::LEN }>(parts)?),
                Some("weights") => {
                    let name = parts.next().ok_or_else(|| bad("weights row without class"))?;
                    let label = BehaviorLabel::parse(name).ok_or_else(|| bad(&format!("unknown class {name}")))?;
                    if classes.get(weights.len()) != Some(&label) {
                        return Err(bad("weight rows out of class order"));
                    }
                    weights.push(parse_row::<{ DIM + 1 }>(parts)?);
                }
                Some(other) => return Err(bad(&format!("unknown record {other}"))),
                None => {}
            }
        }
        if classes.is_empty() || weights.len() != classes.len() {
            return Err(bad("class list and weight rows disagree"));
        }
        Ok(Self {
            classes,
            means: means.ok_or_else(|| bad("missing mean row"))?,
            scales: scales.ok_or_else(|| bad("missing scale row"))?,
            weights,
        })
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn parse_row<'a, const N: usize>(parts: impl Iterator<Item = &'a str>) -> Result<[f64; N]> {
    let values: Vec<f64> = parts
        .map(|p| p.parse::<f64>().map_err(|e| Error::Model(format!("bad number {p}: {e}"))))
        .collect::<Result<_>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| Error::Model(format!("expected {N} values, got {}", v.len())))
}

fn dot(w: &[f64], z: &[f64]) -> f64 {
    w.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Canonical order so training does not depend on how the dataset was listed.
fn canonical_order(data: &[(FeatureVector, BehaviorLabel)]) -> Vec<(FeatureVector, BehaviorLabel)> {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| {
        a.1.cmp(&b.1).then_with(|| {
            let (x, y) = (a.0.to_array(), b.0.to_array());
            x.iter()
                .zip(&y)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    sorted
}

pub fn train(data: &[(FeatureVector, BehaviorLabel)], cfg: &TrainConfig) -> Result<ClassifierModel> {
    let data = canonical_order(data);
    let mut counts = [0usize; 11];
    for (_, l) in &data {
        counts[l.index()] += 1;
    }
    let classes: Vec<BehaviorLabel> = BehaviorLabel::ALL
        .into_iter()
        .filter(|l| counts[l.index()] > 0)
        .collect();
    for &c in &classes {
        if counts[c.index()] < cfg.min_per_class {
            return Err(Error::ClassUnderrepresented {
                label: c.name().into(),
                count: counts[c.index()],
                min: cfg.min_per_class,
            });
        }
    }
    if classes.len() < 2 {
        return Err(Error::ClassUnderrepresented {
            label: "(second class)".into(),
            count: 0,
            min: cfg.min_per_class,
        });
    }

    let n = data.len() as f64;
    let mut means = [0.0; FeatureVector::LEN];
    let mut scales = [0.0; FeatureVector::LEN];
    for (f, _) in &data {
        for (m, v) in means.iter_mut().zip(f.to_array()) {
            *m += v / n;
        }
    }
    for (f, _) in &data {
        for (i, v) in f.to_array().iter().enumerate() {
            scales[i] += (v - means[i]).powi(2) / n;
        }
    }
    for s in &mut scales {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    let mut model = ClassifierModel {
        classes: classes.clone(),
        means,
        scales,
        weights: Vec::new(),
    };
    let z: Vec<[f64; DIM]> = data.iter().map(|(f, _)| model.features(f)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut weights = vec![[0.0; DIM + 1]; classes.len()];
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = 1.0 / (cfg.lambda * step as f64);
            let xi = &z[i];
            for (c, w) in classes.iter().zip(weights.iter_mut()) {
                let y = if data[i].1 == *c { 1.0 } else { -1.0 };
                let margin = y * (dot(&w[..DIM], xi) + w[DIM]);
                // the bias acts as a constant unit feature
                let shrink = 1.0 - eta * cfg.lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if margin < 1.0 {
                    for (wj, x) in w[..DIM].iter_mut().zip(xi) {
                        *wj += eta * y * x;
                    }
                    w[DIM] += eta * y;
                }
            }
        }
    }
    model.weights = weights;
    Ok(model)
}

/// Highest-scoring class; ties go to the earlier label.
pub fn predict(model: &ClassifierModel, f: &FeatureVector) -> BehaviorLabel {
    let scores = model.scores(f);
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    model.classes[best]
}
