//! Seed and noise-level sweeps over the trainer.
//!
//! Grid points run on a rayon pool; results are collected in grid order so
//! the output does not depend on the thread count.

use crate::error::{Error, Result};
use crate::synth::{generate_classification, generate_regression, SyntheticDataset, DEFAULT_DIM};
use crate::trainer::{train, TrainConfig, TrainReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Environment variable capping sweep parallelism (0 or unset = rayon default).
pub const THREADS_ENV: &str = "HAL_LOSS_THREADS";

/// Separator used by the default datasets, `d = 4` weights followed by the bias.
pub const DEFAULT_TRUE_WEIGHTS: [f64; DEFAULT_DIM + 1] = [0.8, -1.2, 0.5, 2.0, 0.3];

/// Dataset recipe for a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub n_reg: usize,
    pub n_cls: usize,
    pub sigma_true: f64,
    pub flip_rate: f64,
    pub data_seed: u64,
    pub true_weights: Vec<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_reg: 1000,
            n_cls: 1000,
            sigma_true: 0.3,
            flip_rate: 0.1,
            data_seed: 1,
            true_weights: DEFAULT_TRUE_WEIGHTS.to_vec(),
        }
    }
}

impl DataConfig {
    /// Regression data uses `data_seed`, classification `data_seed + 1`.
    pub fn generate(&self) -> Result<(SyntheticDataset, SyntheticDataset)> {
        let reg = generate_regression(
            self.n_reg,
            &self.true_weights,
            self.sigma_true,
            self.data_seed,
        )?;
        let cls = generate_classification(
            self.n_cls,
            &self.true_weights,
            self.flip_rate,
            self.data_seed.wrapping_add(1),
        )?;
        Ok((reg, cls))
    }
}

/// Thread count from [`THREADS_ENV`]; `None` means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))),
        },
    }
}

/// Runs `f` on every item on a pool sized by `threads`, preserving order.
pub fn par_map<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipSweepRow {
    pub seed: u64,
    pub flip_rate: f64,
    pub sigma2_hat: f64,
    /// Clean-label accuracy with the learned σ₂ (Bayesian Focal).
    pub bfl_clean_accuracy: f64,
    /// Clean-label accuracy with σ₂ frozen at 1 (plain focal loss).
    pub focal_clean_accuracy: f64,
}

/// Whether `sigma2_hat` strictly increases with the flip rate for every seed.
pub fn flip_ordering_holds(rows: &[FlipSweepRow]) -> bool {
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds.iter().all(|&seed| {
        let mut per: Vec<&FlipSweepRow> = rows.iter().filter(|r| r.seed == seed).collect();
        per.sort_by(|a, b| a.flip_rate.total_cmp(&b.flip_rate));
        per.windows(2).all(|w| w[0].sigma2_hat < w[1].sigma2_hat)
    })
}

/// For each `(seed, flip_rate)`: train with learned σ₂ and with plain focal
/// loss. Seed `k` uses `train.seed = k` and `data_seed = base.data_seed + 2k`,
/// shared across flip rates.
pub fn flip_rate_sweep(
    train_cfg: &TrainConfig,
    base: &DataConfig,
    flip_rates: &[f64],
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<Vec<FlipSweepRow>> {
    let grid: Vec<(u64, f64)> = seeds
        .iter()
        .flat_map(|&s| flip_rates.iter().map(move |&f| (s, f)))
        .collect();
    let rows = par_map(
        &grid,
        threads,
        |&(seed, flip_rate)| -> Result<FlipSweepRow> {
            let data = DataConfig {
                flip_rate,
                data_seed: base.data_seed.wrapping_add(2 * seed),
                ..base.clone()
            };
            let (reg, cls) = data.generate()?;
            let cfg = TrainConfig {
                seed,
                ..train_cfg.clone()
            };
            let bfl = run(&cfg, &reg, &cls)?;
            let focal_cfg = TrainConfig {
                learn_s2: false,
                s2_init: 0.0,
                ..cfg
            };
            let focal = run(&focal_cfg, &reg, &cls)?;
            Ok(FlipSweepRow {
                seed,
                flip_rate,
                sigma2_hat: bfl.sigma2_hat,
                bfl_clean_accuracy: bfl.clean_accuracy,
                focal_clean_accuracy: focal.clean_accuracy,
            })
        },
    )?;
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepRow {
    pub seed: u64,
    pub sigma_true: f64,
    pub sigma1_hat: f64,
    pub final_residual_rms: f64,
}

/// Regression-noise sweep: learned σ₁ against the injected σ.
pub fn sigma_sweep(
    train_cfg: &TrainConfig,
    base: &DataConfig,
    sigma_trues: &[f64],
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<Vec<SigmaSweepRow>> {
    let grid: Vec<(u64, f64)> = seeds
        .iter()
        .flat_map(|&s| sigma_trues.iter().map(move |&v| (s, v)))
        .collect();
    let rows = par_map(
        &grid,
        threads,
        |&(seed, sigma_true)| -> Result<SigmaSweepRow> {
            let data = DataConfig {
                sigma_true,
                data_seed: base.data_seed.wrapping_add(2 * seed),
                ..base.clone()
            };
            let (reg, cls) = data.generate()?;
            let cfg = TrainConfig {
                seed,
                ..train_cfg.clone()
            };
            let r = run(&cfg, &reg, &cls)?;
            Ok(SigmaSweepRow {
                seed,
                sigma_true,
                sigma1_hat: r.sigma1_hat,
                final_residual_rms: r.final_residual_rms,
            })
        },
    )?;
    rows.into_iter().collect()
}

fn run(cfg: &TrainConfig, reg: &SyntheticDataset, cls: &SyntheticDataset) -> Result<TrainReport> {
    train(cfg, reg, cls).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let cfg = TrainConfig {
            iterations: 60,
            record_every: 1000,
            ..Default::default()
        };
        let data = DataConfig {
            n_reg: 100,
            n_cls: 100,
            ..Default::default()
        };
        let a = flip_rate_sweep(&cfg, &data, &[0.0, 0.2], &[0, 1], Some(1)).unwrap();
        let b = flip_rate_sweep(&cfg, &data, &[0.0, 0.2], &[0, 1], Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!((a[1].seed, a[1].flip_rate), (0, 0.2));
    }

    #[test]
    fn ordering_check() {
        let row = |seed, flip_rate, sigma2_hat| FlipSweepRow {
            seed,
            flip_rate,
            sigma2_hat,
            bfl_clean_accuracy: 1.0,
            focal_clean_accuracy: 1.0,
        };
        let good = [
            row(0, 0.0, 0.5),
            row(0, 0.1, 0.6),
            row(1, 0.1, 0.7),
            row(1, 0.0, 0.4),
        ];
        assert!(flip_ordering_holds(&good));
        let bad = [row(0, 0.0, 0.5), row(0, 0.1, 0.5)];
        assert!(!flip_ordering_holds(&bad));
    }
}
