//! Seeded synthetic datasets with known homoscedastic noise.
//!
//! Random stream: `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.3).
//! Uniforms take the top 53 bits of `next_u64`; normals use Box–Muller with
//! `u1 = 1 − uniform`, one normal per pair of uniforms. Per sample the draws
//! are: `d` feature uniforms mapped to `[−1, 1]`, then either one normal
//! (regression noise) or one uniform (label flip test).

use crate::error::{domain, Result};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Default feature dimension.
pub const DEFAULT_DIM: usize = 4;

/// Deterministic random stream shared by all generators.
#[derive(Debug, Clone)]
pub struct SeededStream(ChaCha8Rng);

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { sigma_true: f64 },
    LabelFlip { flip_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Regression {
        observed: Vec<f64>,
        clean: Vec<f64>,
    },
    Classification {
        observed: Vec<bool>,
        clean: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Targets,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Feature weights followed by the bias.
    pub true_weights: Vec<f64>,
}

/// `w·x + b` with the bias stored last.
pub fn linear(weights: &[f64], x: &[f64]) -> f64 {
    let (w, b) = weights.split_at(weights.len() - 1);
    w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b[0]
}

fn check_weights(true_weights: &[f64]) -> Result<()> {
    if true_weights.is_empty() {
        return Err(domain("true_weights needs at least the bias entry"));
    }
    if true_weights.iter().any(|w| !w.is_finite()) {
        return Err(domain("true_weights must be finite"));
    }
    Ok(())
}

fn features(rng: &mut SeededStream, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect()
}

/// `y = w·x + b + N(0, sigma_true²)` with `x ~ U[−1, 1]^d`.
pub fn generate_regression(
    n: usize,
    true_weights: &[f64],
    sigma_true: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    check_weights(true_weights)?;
    if !(sigma_true.is_finite() && sigma_true >= 0.0) {
        return Err(domain(format!(
            "sigma_true must be finite and >= 0, got {sigma_true}"
        )));
    }
    let d = true_weights.len() - 1;
    let mut rng = SeededStream::new(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for _ in 0..n {
        let x = features(&mut rng, d);
        let y = linear(true_weights, &x);
        let noise = rng.normal();
        observed.push(if sigma_true == 0.0 {
            y
        } else {
            y + sigma_true * noise
        });
        clean.push(y);
        inputs.push(x);
    }
    Ok(SyntheticDataset {
        inputs,
        targets: Targets::Regression { observed, clean },
        noise: NoiseSpec::Gaussian { sigma_true },
        seed,
        true_weights: true_weights.to_vec(),
    })
}

/// Clean label `w·x + b > 0`, flipped independently with probability `flip_rate`.
pub fn generate_classification(
    n: usize,
    true_weights: &[f64],
    flip_rate: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    check_weights(true_weights)?;
    if !(0.0..0.5).contains(&flip_rate) {
        return Err(domain(format!(
            "flip_rate must lie in [0, 0.5), got {flip_rate}"
        )));
    }
    let d = true_weights.len() - 1;
    let mut rng = SeededStream::new(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for _ in 0..n {
        let x = features(&mut rng, d);
        let label = linear(true_weights, &x) > 0.0;
        let flip = rng.uniform() < flip_rate;
        observed.push(label ^ flip);
        clean.push(label);
        inputs.push(x);
    }
    Ok(SyntheticDataset {
        inputs,
        targets: Targets::Classification { observed, clean },
        noise: NoiseSpec::LabelFlip { flip_rate },
        seed,
        true_weights: true_weights.to_vec(),
    })
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.true_weights.len() - 1
    }

    /// Observed targets as reals (labels as 0/1).
    pub fn observed(&self) -> Vec<f64> {
        match &self.targets {
            Targets::Regression { observed, .. } => observed.clone(),
            Targets::Classification { observed, .. } => {
                observed.iter().map(|&l| f64::from(u8::from(l))).collect()
            }
        }
    }

    pub fn clean(&self) -> Vec<f64> {
        match &self.targets {
            Targets::Regression { clean, .. } => clean.clone(),
            Targets::Classification { clean, .. } => {
                clean.iter().map(|&l| f64::from(u8::from(l))).collect()
            }
        }
    }

    /// Fraction of labels that differ from the clean ones (classification only).
    pub fn flip_fraction(&self) -> Option<f64> {
        match &self.targets {
            Targets::Classification { observed, clean } if !observed.is_empty() => {
                let flips = observed.iter().zip(clean).filter(|(o, c)| o != c).count();
                Some(flips as f64 / observed.len() as f64)
            }
            _ => None,
        }
    }

    /// CSV with columns `x0..x{d-1},target,clean_target`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim())
            .map(|i| format!("x{i}"))
            .chain(["target".into(), "clean_target".into()])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for ((x, y), c) in self.inputs.iter().zip(self.observed()).zip(self.clean()) {
            let row: Vec<String> = x.iter().chain([&y, &c]).map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
