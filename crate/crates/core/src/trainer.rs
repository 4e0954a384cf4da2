//! Full-batch trainer for a two-head linear model under the multi-task
//! objective `BSmoothL1(σ₁) + class_weight·BFL(σ₂)`.
//!
//! The regression head predicts `f(x) = w·x + b` and is scored with Bayesian
//! Smooth L1 on `ε = |y − f(x)|`. The classification head produces a logit
//! whose sigmoid is the positive-class probability, scored with Bayesian
//! Focal loss. Both log-variances `s₁`, `s₂` are learned jointly with the
//! weights from the closed-form loss gradients.

use crate::error::{Error, Result};
use crate::losses::{bayesian_focal, BayesianSmoothL1, ClassProb, LossParams, Reduction};
use crate::scalar_math::{LogVariance, ThresholdParam, S_MAX, S_MIN};
use crate::synth::{linear, SeededStream, SyntheticDataset, Targets};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Total loss above which a run is declared diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Optimizer {
    /// Plain gradient descent.
    Gd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub s1_init: f64,
    pub s2_init: f64,
    pub beta: f64,
    pub gamma: f64,
    pub class_weight: f64,
    pub seed: u64,
    pub reduction: Reduction,
    pub optimizer: Optimizer,
    /// Multiplier on the learning rate for `s₁`, `s₂`.
    pub log_variance_lr_scale: f64,
    pub learn_s1: bool,
    /// With `learn_s2 = false` and `s2_init = 0` the classification loss is plain focal loss.
    pub learn_s2: bool,
    /// Weights start uniform in `[−init_scale, init_scale]`.
    pub init_scale: f64,
    /// Trajectory checkpoint spacing in iterations.
    pub record_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            iterations: 2000,
            s1_init: 1.0,
            s2_init: 0.0,
            beta: 1.0,
            gamma: 2.0,
            class_weight: 1.0,
            seed: 0,
            reduction: Reduction::Mean,
            optimizer: Optimizer::Gd,
            log_variance_lr_scale: 1.0,
            learn_s1: true,
            learn_s2: true,
            init_scale: 0.1,
            record_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1");
        }
        if !(self.class_weight.is_finite() && self.class_weight >= 0.0) {
            return bad("class_weight must be >= 0");
        }
        if !(self.log_variance_lr_scale.is_finite() && self.log_variance_lr_scale >= 0.0) {
            return bad("log_variance_lr_scale must be >= 0");
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init_scale must be >= 0");
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return bad("adam moments must lie in [0, 1) with eps > 0");
            }
        }
        LossParams::new(self.beta, self.gamma, self.s1_init)?;
        LogVariance::new(self.s2_init)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    /// Regression head, bias last.
    pub weights_reg: Vec<f64>,
    /// Classification head, bias last.
    pub weights_cls: Vec<f64>,
}

impl ToyModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        linear(&self.weights_reg, x)
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        linear(&self.weights_cls, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub total: f64,
    pub reg: f64,
    pub cls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_model: ToyModel,
    pub s1_final: f64,
    pub s2_final: f64,
    pub sigma1_hat: f64,
    pub sigma2_hat: f64,
    /// `sqrt(mean ε²)` of the final regression residuals.
    pub final_residual_rms: f64,
    /// Classification accuracy of the final model against clean labels.
    pub clean_accuracy: f64,
    /// Some regression evaluation hit the Laplace-rate cap.
    pub saturated: bool,
    pub loss_trajectory: Vec<Checkpoint>,
    /// Not part of the serialized report, which must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Invalid(Error),
    /// Loss exceeded [`DIVERGENCE_LIMIT`] or became non-finite.
    Diverged {
        iteration: usize,
        report: Box<TrainReport>,
    },
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainError::Invalid(e) => write!(f, "{e}"),
            TrainError::Diverged { iteration, report } => {
                let last = report.loss_trajectory.last().map_or(f64::NAN, |c| c.total);
                write!(
                    f,
                    "training diverged at iteration {iteration} (total loss {last})"
                )
            }
        }
    }
}

impl std::error::Error for TrainError {}

impl From<Error> for TrainError {
    fn from(e: Error) -> Self {
        TrainError::Invalid(e)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Evaluation {
    reg: f64,
    cls: f64,
    total: f64,
    saturated: bool,
    grad_reg: Vec<f64>,
    grad_cls: Vec<f64>,
    grad_s1: f64,
    grad_s2: f64,
}

struct Problem<'a> {
    reg_x: &'a [Vec<f64>],
    reg_y: &'a [f64],
    cls_x: &'a [Vec<f64>],
    cls_y: &'a [bool],
    beta: ThresholdParam,
    gamma: f64,
    class_weight: f64,
    reduction: Reduction,
}

impl Problem<'_> {
    fn evaluate(&self, model: &ToyModel, s1: f64, s2: f64) -> Result<Evaluation> {
        let s1 = LogVariance::new(s1)?;
        let s2 = LogVariance::new(s2)?;
        let bsl1 = BayesianSmoothL1::new(self.beta, s1);

        let w_reg = self.reduction.weight(self.reg_x.len());
        let mut grad_reg = vec![0.0; model.weights_reg.len()];
        let (mut reg, mut grad_s1, mut saturated) = (0.0, 0.0, false);
        for (x, y) in self.reg_x.iter().zip(self.reg_y) {
            let r = y - model.predict(x);
            let e = bsl1.eval(r.abs());
            reg += e.value;
            grad_s1 += e.d_s;
            saturated |= e.saturated;
            // ∂ε/∂f = −sign(r)
            let df = -e.d_input * r.signum() * if r == 0.0 { 0.0 } else { 1.0 };
            accumulate(&mut grad_reg, x, df);
        }
        reg *= w_reg;
        grad_s1 *= w_reg;
        grad_reg.iter_mut().for_each(|g| *g *= w_reg);

        let w_cls = self.reduction.weight(self.cls_x.len());
        let params = LossParams {
            beta: self.beta,
            gamma: self.gamma,
            s: s2,
        };
        let mut grad_cls = vec![0.0; model.weights_cls.len()];
        let (mut cls, mut grad_s2) = (0.0, 0.0);
        for (x, &y) in self.cls_x.iter().zip(self.cls_y) {
            let z = model.logit(x);
            let p_t = ClassProb::new(sigmoid(if y { z } else { -z }))?;
            let e = bayesian_focal(p_t, &params);
            cls += e.value;
            grad_s2 += e.d_s;
            let chain = if p_t.was_clamped() {
                0.0
            } else {
                let p = p_t.value();
                p * (1.0 - p) * if y { 1.0 } else { -1.0 }
            };
            accumulate(&mut grad_cls, x, e.d_input * chain);
        }
        let k = w_cls * self.class_weight;
        cls *= w_cls;
        grad_s2 *= k;
        grad_cls.iter_mut().for_each(|g| *g *= k);

        Ok(Evaluation {
            reg,
            cls,
            total: reg + self.class_weight * cls,
            saturated,
            grad_reg,
            grad_cls,
            grad_s1,
            grad_s2,
        })
    }
}

fn accumulate(grad: &mut [f64], x: &[f64], scale: f64) {
    let (w, b) = grad.split_at_mut(x.len());
    for (g, xi) in w.iter_mut().zip(x) {
        *g += scale * xi;
    }
    b[0] += scale;
}

/// Parameter vector layout: `[weights_reg, weights_cls, s1, s2]`.
struct Stepper {
    optimizer: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Stepper {
    fn new(optimizer: Optimizer, n: usize) -> Self {
        Self {
            optimizer,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: &[f64]) {
        self.t += 1;
        match self.optimizer {
            Optimizer::Gd => {
                for ((p, g), lr) in params.iter_mut().zip(grad).zip(lr) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr[i] * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

fn split_targets(data: &SyntheticDataset) -> (Option<&[f64]>, Option<&[bool]>) {
    match &data.targets {
        Targets::Regression { observed, .. } => (Some(observed), None),
        Targets::Classification { observed, .. } => (None, Some(observed)),
    }
}

/// Jointly fits both heads and both log-variances by full-batch descent.
pub fn train(
    config: &TrainConfig,
    reg_data: &SyntheticDataset,
    cls_data: &SyntheticDataset,
) -> std::result::Result<TrainReport, TrainError> {
    config.validate()?;
    let reg_y = split_targets(reg_data)
        .0
        .ok_or_else(|| Error::Config("reg_data must be a regression dataset".into()))?;
    let cls_y = split_targets(cls_data)
        .1
        .ok_or_else(|| Error::Config("cls_data must be a classification dataset".into()))?;
    if reg_data.is_empty() || cls_data.is_empty() {
        return Err(Error::Config("datasets must be non-empty".into()).into());
    }

    let started = Instant::now();
    let problem = Problem {
        reg_x: &reg_data.inputs,
        reg_y,
        cls_x: &cls_data.inputs,
        cls_y,
        beta: ThresholdParam::new(config.beta)?,
        gamma: config.gamma,
        class_weight: config.class_weight,
        reduction: config.reduction,
    };

    let (d_reg, d_cls) = (reg_data.dim() + 1, cls_data.dim() + 1);
    let mut rng = SeededStream::new(config.seed);
    let mut params: Vec<f64> = (0..d_reg + d_cls)
        .map(|_| rng.uniform_in(-config.init_scale, config.init_scale))
        .collect();
    params.push(config.s1_init);
    params.push(config.s2_init);

    let s_lr = config.learning_rate * config.log_variance_lr_scale;
    let mut lr = vec![config.learning_rate; d_reg + d_cls];
    lr.push(if config.learn_s1 { s_lr } else { 0.0 });
    lr.push(if config.learn_s2 { s_lr } else { 0.0 });

    let unpack = |p: &[f64]| ToyModel {
        weights_reg: p[..d_reg].to_vec(),
        weights_cls: p[d_reg..d_reg + d_cls].to_vec(),
    };

    let mut stepper = Stepper::new(config.optimizer, params.len());
    let mut trajectory = Vec::new();
    let mut saturated = false;
    let mut grad = vec![0.0; params.len()];
    for it in 0..config.iterations {
        let model = unpack(&params);
        let (s1, s2) = (params[d_reg + d_cls], params[d_reg + d_cls + 1]);
        let ev = problem.evaluate(&model, s1, s2)?;
        saturated |= ev.saturated;
        let checkpoint = Checkpoint {
            iteration: it,
            total: ev.total,
            reg: ev.reg,
            cls: ev.cls,
        };
        if it % config.record_every == 0 || !ev.total.is_finite() || ev.total > DIVERGENCE_LIMIT {
            trajectory.push(checkpoint);
        }
        if !ev.total.is_finite() || ev.total > DIVERGENCE_LIMIT {
            let report = finish(
                &problem, cls_data, model, s1, s2, saturated, trajectory, started,
            )?;
            return Err(TrainError::Diverged {
                iteration: it,
                report: Box::new(report),
            });
        }
        grad[..d_reg].copy_from_slice(&ev.grad_reg);
        grad[d_reg..d_reg + d_cls].copy_from_slice(&ev.grad_cls);
        grad[d_reg + d_cls] = ev.grad_s1;
        grad[d_reg + d_cls + 1] = ev.grad_s2;
        stepper.step(&mut params, &grad, &lr);
        for s in &mut params[d_reg + d_cls..] {
            *s = s.clamp(S_MIN, S_MAX);
        }
    }

    let model = unpack(&params);
    let (s1, s2) = (params[d_reg + d_cls], params[d_reg + d_cls + 1]);
    let ev = problem.evaluate(&model, s1, s2)?;
    trajectory.push(Checkpoint {
        iteration: config.iterations,
        total: ev.total,
        reg: ev.reg,
        cls: ev.cls,
    });
    Ok(finish(
        &problem,
        cls_data,
        model,
        s1,
        s2,
        saturated | ev.saturated,
        trajectory,
        started,
    )?)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &Problem<'_>,
    cls_data: &SyntheticDataset,
    model: ToyModel,
    s1: f64,
    s2: f64,
    saturated: bool,
    loss_trajectory: Vec<Checkpoint>,
    started: Instant,
) -> Result<TrainReport> {
    let sq: f64 = problem
        .reg_x
        .iter()
        .zip(problem.reg_y)
        .map(|(x, y)| (y - model.predict(x)).powi(2))
        .sum();
    let final_residual_rms = (sq / problem.reg_x.len() as f64).sqrt();
    let clean_accuracy = match &cls_data.targets {
        Targets::Classification { clean, .. } => {
            let hits = cls_data
                .inputs
                .iter()
                .zip(clean)
                .filter(|(x, &c)| (model.logit(x) > 0.0) == c)
                .count();
            hits as f64 / clean.len() as f64
        }
        Targets::Regression { .. } => f64::NAN,
    };
    Ok(TrainReport {
        final_model: model,
        s1_final: s1,
        s2_final: s2,
        sigma1_hat: LogVariance::new(s1)?.sigma(),
        sigma2_hat: LogVariance::new(s2)?.sigma(),
        final_residual_rms,
        clean_accuracy,
        saturated,
        loss_trajectory,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
