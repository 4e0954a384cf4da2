//! Per-sample losses with closed-form partial derivatives.
//!
//! Baselines: [`smooth_l1`] and [`focal`]. Uncertainty-aware variants:
//! [`bayesian_smooth_l1`] (Gaussian core, Laplace tail, rate tied to σ) and
//! [`bayesian_focal`]. Reference losses: [`bayesian_l2`] and
//! [`boltzmann_softmax_nll`], plus the two multi-task combinations.
//!
//! All σ-dependent losses take the log-variance `s = log σ²` and return a
//! [`LossEval`] holding the value and its partials with respect to the
//! prediction-side input and `s`.

use crate::error::{domain, Error, Result};
use crate::scalar_math::{dlog_tau_ds, laplace_rate_alpha, log_tau, LogVariance, ThresholdParam};
use serde::{Deserialize, Serialize};

/// Class probabilities are clamped to `[P_EPS, 1 − P_EPS]`.
pub const P_EPS: f64 = 1e-7;

/// Regression error magnitude `ε = ‖y − f(x)‖ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorNorm(f64);

impl ErrorNorm {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps >= 0.0 {
            Ok(Self(eps))
        } else {
            Err(domain(format!(
                "error norm must be finite and >= 0, got {eps}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability assigned to the true class, clamped away from 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProb {
    p_t: f64,
    clamped: bool,
}

impl ClassProb {
    pub fn new(p_t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_t) {
            return Err(domain(format!(
                "class probability must lie in [0, 1], got {p_t}"
            )));
        }
        let c = p_t.clamp(P_EPS, 1.0 - P_EPS);
        Ok(Self {
            p_t: c,
            clamped: c != p_t,
        })
    }

    /// `p_t` from the model probability `p` of the positive class and the label.
    pub fn from_label(p: f64, positive: bool) -> Result<Self> {
        Self::new(if positive { p } else { 1.0 - p })
    }

    pub fn value(self) -> f64 {
        self.p_t
    }

    /// Whether the raw probability fell outside the clamp range.
    pub fn was_clamped(self) -> bool {
        self.clamped
    }
}

/// Hyperparameters of a loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub beta: ThresholdParam,
    /// Focusing exponent γ ≥ 0.
    pub gamma: f64,
    pub s: LogVariance,
}

impl LossParams {
    pub fn new(beta: f64, gamma: f64, s: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(domain(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self {
            beta: ThresholdParam::new(beta)?,
            gamma,
            s: LogVariance::new(s)?,
        })
    }

    pub fn with_s(self, s: LogVariance) -> Self {
        Self { s, ..self }
    }
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            beta: ThresholdParam::default(),
            gamma: 2.0,
            s: LogVariance::default(),
        }
    }
}

/// Loss value and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossEval {
    pub value: f64,
    /// ∂loss/∂ε for regression losses, ∂loss/∂p_t for focal-type losses,
    /// ∂loss/∂logit[c] for the softmax loss.
    pub d_input: f64,
    /// ∂loss/∂s.
    pub d_s: f64,
    /// Laplace rate hit its cap while evaluating this loss.
    #[serde(default)]
    pub saturated: bool,
}

/// Batch reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl Reduction {
    /// Folds per-sample evaluations; partials are reduced the same way as values.
    pub fn fold<I: IntoIterator<Item = LossEval>>(self, evals: I) -> LossEval {
        let mut acc = LossEval::default();
        let mut n = 0usize;
        for e in evals {
            acc.value += e.value;
            acc.d_input += e.d_input;
            acc.d_s += e.d_s;
            acc.saturated |= e.saturated;
            n += 1;
        }
        if self == Reduction::Mean && n > 0 {
            let k = 1.0 / n as f64;
            acc.value *= k;
            acc.d_input *= k;
            acc.d_s *= k;
        }
        acc
    }

    /// Scale applied to each per-sample gradient contribution.
    pub fn weight(self, n: usize) -> f64 {
        match self {
            Reduction::Mean if n > 0 => 1.0 / n as f64,
            _ => 1.0,
        }
    }
}

impl std::str::FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reduction::Mean),
            "sum" => Ok(Reduction::Sum),
            other => Err(Error::Config(format!("unknown reduction `{other}`"))),
        }
    }
}

/// Smooth L1: `(β²/2)ε²` below `1/β²`, `ε − 1/(2β²)` above.
pub fn smooth_l1(eps: ErrorNorm, beta: ThresholdParam) -> f64 {
    let e = eps.0;
    let b2 = beta.beta_sq();
    if e < beta.threshold() {
        0.5 * b2 * e * e
    } else {
        e - 0.5 / b2
    }
}

/// Focal loss `−(1 − p_t)^γ · log p_t`.
pub fn focal(p_t: ClassProb, gamma: f64) -> f64 {
    let p = p_t.p_t;
    -((1.0 - p).powf(gamma) * p.ln())
}

/// Bayesian Smooth L1 with all σ-dependent quantities precomputed, so that
/// evaluating a batch costs one `erfc` rather than one per sample.
#[derive(Debug, Clone, Copy)]
pub struct BayesianSmoothL1 {
    threshold: f64,
    beta_sq: f64,
    precision: f64,
    log_sigma: f64,
    log_tau: f64,
    dlog_tau_ds: f64,
    saturated: bool,
}

impl BayesianSmoothL1 {
    pub fn new(beta: ThresholdParam, s: LogVariance) -> Self {
        let sigma = s.sigma();
        let beta_sq = beta.beta_sq();
        // σ ≥ e^{-10} after clamping, so these cannot fail
        let rate = laplace_rate_alpha(beta, sigma).expect("sigma is positive after clamping");
        let (log_tau, dlog_tau_ds) = if rate.saturated {
            (-rate.alpha / beta_sq, 0.0)
        } else {
            (
                log_tau(beta, sigma).expect("sigma is positive after clamping"),
                dlog_tau_ds(beta, sigma).expect("sigma is positive after clamping"),
            )
        };
        Self {
            threshold: beta.threshold(),
            beta_sq,
            precision: s.precision(),
            log_sigma: 0.5 * s.value(),
            log_tau,
            dlog_tau_ds,
            saturated: rate.saturated,
        }
    }

    pub fn from_params(params: &LossParams) -> Self {
        Self::new(params.beta, params.s)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Laplace rate `−β² log τ`, which is also the outer-branch slope.
    pub fn laplace_rate(&self) -> f64 {
        -self.beta_sq * self.log_tau
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn eval(&self, eps: f64) -> LossEval {
        if eps < self.threshold {
            self.inner(eps)
        } else {
            self.outer(eps)
        }
    }

    /// Gaussian branch `ε²/(2σ²) + log σ`, evaluated at any ε.
    pub fn inner(&self, eps: f64) -> LossEval {
        let half_sq = 0.5 * eps * eps * self.precision;
        LossEval {
            value: half_sq + self.log_sigma,
            d_input: eps * self.precision,
            d_s: 0.5 - half_sq,
            saturated: false,
        }
    }

    /// Laplace branch `−β²ε log τ + log τ + 1/(2σ²β⁴) + log σ`, evaluated at any ε.
    pub fn outer(&self, eps: f64) -> LossEval {
        let b4 = self.beta_sq * self.beta_sq;
        let offset = 0.5 * self.precision / b4;
        let value = -self.beta_sq * eps * self.log_tau + self.log_tau + offset + self.log_sigma;
        LossEval {
            value,
            d_input: self.laplace_rate(),
            d_s: (1.0 - self.beta_sq * eps) * self.dlog_tau_ds - offset + 0.5,
            saturated: self.saturated,
        }
    }
}

/// Bayesian Smooth L1 loss of a single error magnitude.
pub fn bayesian_smooth_l1(eps: ErrorNorm, params: &LossParams) -> LossEval {
    BayesianSmoothL1::from_params(params).eval(eps.0)
}

/// Bayesian Focal loss
///
/// ```text
/// BFL = −[ (1/σ)·(1 − p_t)^{1/σ²} ]^γ · ( (1/σ²)·log p_t − log σ )
/// ```
///
/// The whole bracket is raised to γ. At `s = 0` the evaluation path is
/// bit-identical to [`focal`].
pub fn bayesian_focal(p_t: ClassProb, params: &LossParams) -> LossEval {
    let p = p_t.p_t;
    let q = 1.0 - p;
    let gamma = params.gamma;
    let s = params.s.value();
    let inv_sigma = (-0.5 * s).exp();
    let a = params.s.precision();
    let log_sigma = 0.5 * s;

    let prefactor = (inv_sigma * q.powf(a)).powf(gamma);
    let log_p = p.ln();
    let bracket = a * log_p - log_sigma;
    let value = -(prefactor * bracket);

    let d_input = prefactor * a * (gamma * bracket / q - 1.0 / p);
    let d_s = prefactor * (gamma * (0.5 + a * q.ln()) * bracket + a * log_p + 0.5);
    LossEval {
        value,
        d_input,
        d_s,
        saturated: false,
    }
}

/// Negative Gaussian log-likelihood up to a constant: `ε²/(2σ²) + log σ`.
pub fn bayesian_l2(eps: ErrorNorm, s: LogVariance) -> LossEval {
    let e = eps.0;
    let half_sq = 0.5 * e * e * s.precision();
    LossEval {
        value: half_sq + 0.5 * s.value(),
        d_input: e * s.precision(),
        d_s: 0.5 - half_sq,
        saturated: false,
    }
}

struct Boltzmann {
    scaled: Vec<f64>,
    softmax: Vec<f64>,
    lse: f64,
    precision: f64,
}

fn boltzmann(logits: &[f64], c: usize, s: LogVariance) -> Result<Boltzmann> {
    if logits.is_empty() {
        return Err(domain("logits must be non-empty"));
    }
    if c >= logits.len() {
        return Err(Error::Index {
            index: c,
            len: logits.len(),
        });
    }
    let precision = s.precision();
    let scaled: Vec<f64> = logits.iter().map(|f| precision * f).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = scaled.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    let lse = max + total.ln();
    let softmax = shifted.into_iter().map(|e| e / total).collect();
    Ok(Boltzmann {
        scaled,
        softmax,
        lse,
        precision,
    })
}

/// Softmax negative log-likelihood with logits scaled by `1/σ²`:
/// `−f_c/σ² + log Σ exp(f_c'/σ²)`. `d_input` is the partial with respect to
/// the true-class logit; see [`boltzmann_softmax_nll_grad`] for all logits.
pub fn boltzmann_softmax_nll(logits: &[f64], c: usize, s: LogVariance) -> Result<LossEval> {
    let b = boltzmann(logits, c, s)?;
    let expected: f64 = b.softmax.iter().zip(&b.scaled).map(|(p, z)| p * z).sum();
    Ok(LossEval {
        value: b.lse - b.scaled[c],
        d_input: b.precision * (b.softmax[c] - 1.0),
        d_s: b.scaled[c] - expected,
        saturated: false,
    })
}

/// Gradient of [`boltzmann_softmax_nll`] with respect to every logit.
pub fn boltzmann_softmax_nll_grad(logits: &[f64], c: usize, s: LogVariance) -> Result<Vec<f64>> {
    let b = boltzmann(logits, c, s)?;
    Ok(b.softmax
        .iter()
        .enumerate()
        .map(|(i, p)| b.precision * (p - if i == c { 1.0 } else { 0.0 }))
        .collect())
}

/// Multi-task objective with Gaussian regression and Boltzmann classification
/// likelihoods: `l_reg/(2σ₁²) + log σ₁ + l_cls/σ₂² + log σ₂`.
pub fn kendall_gal_multitask(l_reg: f64, l_cls: f64, s1: LogVariance, s2: LogVariance) -> f64 {
    0.5 * s1.precision() * l_reg + 0.5 * s1.value() + s2.precision() * l_cls + 0.5 * s2.value()
}

/// Regression loss plus `class_weight` times classification loss.
///
/// `class_weight` is the balancing coefficient between the two tasks, not the
/// Laplace rate.
pub fn multitask_loss(reg: &LossEval, cls: &LossEval, class_weight: f64) -> f64 {
    reg.value + class_weight * cls.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_math::tau;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn eps(e: f64) -> ErrorNorm {
        ErrorNorm::new(e).unwrap()
    }

    fn pt(p: f64) -> ClassProb {
        ClassProb::new(p).unwrap()
    }

    fn lv(s: f64) -> LogVariance {
        LogVariance::new(s).unwrap()
    }

    fn params(beta: f64, gamma: f64, s: f64) -> LossParams {
        LossParams::new(beta, gamma, s).unwrap()
    }

    #[test]
    fn smooth_l1_examples() {
        let b = ThresholdParam::new(1.0).unwrap();
        assert_eq!(smooth_l1(eps(0.0), b), 0.0);
        assert_eq!(smooth_l1(eps(0.5), b), 0.125);
        assert_eq!(smooth_l1(eps(2.0), b), 1.5);
        // continuous at the switch
        let b = ThresholdParam::new(2.0).unwrap();
        let t = b.threshold();
        assert!(close(0.5 * 4.0 * t * t, t - 0.125, 1e-15));
    }

    #[test]
    fn focal_examples() {
        assert!(close(focal(pt(0.5), 0.0), std::f64::consts::LN_2, 1e-15));
        assert!(close(
            focal(pt(0.5), 2.0),
            0.25 * std::f64::consts::LN_2,
            1e-15
        ));
        assert!(close(focal(pt(0.5), 2.0), 0.173287, 1e-6));
        assert!(focal(pt(1.0), 2.0) < 1e-20);
    }

    #[test]
    fn bayesian_smooth_l1_examples() {
        let v = bayesian_smooth_l1(eps(0.0), &params(1.0, 2.0, 0.0));
        assert_eq!(v.value, 0.0);
        let v = bayesian_smooth_l1(eps(0.5), &params(1.0, 2.0, 4f64.ln()));
        assert!(close(v.value, 0.724397180559945309417232121458, 1e-14));
        let v = bayesian_smooth_l1(eps(2.0), &params(1.0, 2.0, 0.0));
        assert!(close(v.value, 1.64787446444931819635355095177, 1e-14));
    }

    #[test]
    fn bayesian_smooth_l1_branches_meet_at_threshold() {
        for &beta in &[0.5, 1.0, 2.0] {
            for &sigma in &[0.25, 0.5, 1.0, 2.0, 4.0] {
                let l = BayesianSmoothL1::new(
                    ThresholdParam::new(beta).unwrap(),
                    LogVariance::from_sigma(sigma).unwrap(),
                );
                let t = l.threshold();
                let d = l.inner(t).value - l.outer(t).value;
                assert!(d.abs() < 1e-9, "beta={beta} sigma={sigma}: {d}");
                // value at the threshold is 1/(2σ²β⁴) + log σ
                let want = 0.5 / (sigma * sigma * beta.powi(4)) + sigma.ln();
                assert!(close(l.eval(t).value, want, 1e-12));
            }
        }
    }

    #[test]
    fn outer_slope_is_laplace_rate() {
        for &(beta, s) in &[(1.0, 0.0), (0.5, -1.0), (2.0, 2.0)] {
            let b = ThresholdParam::new(beta).unwrap();
            let p = params(beta, 2.0, s);
            let e = 3.0 * b.threshold();
            let rate = laplace_rate_alpha(b, p.s.sigma()).unwrap().alpha;
            assert_eq!(bayesian_smooth_l1(eps(e), &p).d_input, rate);
        }
    }

    #[test]
    fn outer_branch_uses_tau() {
        // −β²ε log τ + log τ + 1/(2σ²β⁴) + log σ with β=1, σ=1, ε=3
        let t = tau(ThresholdParam::new(1.0).unwrap(), 1.0).unwrap();
        let want = -3.0 * t.ln() + t.ln() + 0.5;
        let got = bayesian_smooth_l1(eps(3.0), &params(1.0, 2.0, 0.0)).value;
        assert!(close(got, want, 1e-14));
    }

    #[test]
    fn bayesian_smooth_l1_saturates_for_tiny_sigma() {
        let v = bayesian_smooth_l1(eps(5.0), &params(1.0, 2.0, -20.0));
        assert!(v.saturated);
        assert!(v.value.is_finite() && v.d_input.is_finite() && v.d_s.is_finite());
        let v = bayesian_smooth_l1(eps(0.5), &params(1.0, 2.0, -20.0));
        assert!(!v.saturated);
    }

    #[test]
    fn noise_ordering_at_zero_error_and_inner_slope() {
        let sigmas = [0.25, 0.5, 1.0, 2.0, 4.0];
        let at_zero: Vec<f64> = sigmas
            .iter()
            .map(|&s| bayesian_smooth_l1(eps(0.0), &params(1.0, 2.0, 2.0 * f64::ln(s))).value)
            .collect();
        for (v, s) in at_zero.iter().zip(sigmas) {
            assert!(close(*v, f64::ln(s), 1e-15));
        }
        assert!(at_zero.windows(2).all(|w| w[0] < w[1]));
        let slopes: Vec<f64> = sigmas
            .iter()
            .map(|&s| bayesian_smooth_l1(eps(0.5), &params(1.0, 2.0, 2.0 * f64::ln(s))).d_input)
            .collect();
        assert!(slopes.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn inner_branch_curvature_is_precision() {
        for &sigma in &[0.5, 1.0, 2.0] {
            let p = params(0.5, 2.0, 2.0 * f64::ln(sigma));
            let f = |e: f64| bayesian_smooth_l1(eps(e), &p).value;
            let (x, h) = (1.0, 1e-4);
            let second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let want = 1.0 / (sigma * sigma);
            assert!(
                ((second - want) / want).abs() < 1e-6,
                "sigma={sigma}: {second}"
            );
        }
    }

    #[test]
    fn bayesian_focal_examples() {
        let v = bayesian_focal(pt(0.5), &params(1.0, 2.0, 0.0));
        assert_eq!(v.value, focal(pt(0.5), 2.0));
        assert!(close(v.value, 0.173287, 1e-6));
        let v = bayesian_focal(pt(0.5), &params(1.0, 2.0, 4f64.ln()));
        assert!(close(v.value, 0.153165334916960498705297144318, 1e-14));
        let v = bayesian_focal(pt(1.0), &params(1.0, 2.0, 0.0));
        assert!(v.value.abs() < 1e-20);
    }

    #[test]
    fn bayesian_focal_reduces_to_focal_on_grid() {
        for &gamma in &[0.0, 1.0, 2.0, 5.0] {
            for i in 1..=99 {
                let p = pt(i as f64 / 100.0);
                let d = bayesian_focal(p, &params(1.0, gamma, 0.0)).value - focal(p, gamma);
                assert!(d.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bayesian_focal_may_go_negative_for_small_sigma() {
        let v = bayesian_focal(pt(0.99), &params(1.0, 2.0, 2.0 * f64::ln(0.5)));
        assert!(v.value < 0.0);
    }

    #[test]
    fn bayesian_l2_examples() {
        assert_eq!(bayesian_l2(eps(0.0), lv(0.0)).value, 0.0);
        assert_eq!(bayesian_l2(eps(0.0), lv(1.3)).d_input, 0.0);
        assert!(close(bayesian_l2(eps(1.0), lv(0.0)).value, 0.5, 1e-15));
        assert!(close(
            bayesian_l2(eps(1.0), lv(4f64.ln())).value,
            0.818147180559945309417232121458,
            1e-14
        ));
    }

    #[test]
    fn boltzmann_examples() {
        let v = boltzmann_softmax_nll(&[0.0, 0.0], 0, lv(0.0)).unwrap();
        assert!(close(v.value, std::f64::consts::LN_2, 1e-15));
        let v = boltzmann_softmax_nll(&[1.0, 0.0], 0, lv(0.0)).unwrap();
        assert!(close(v.value, 0.313261687518222834048995494968, 1e-15));
        // σ → ∞ (clamped at s = 20): uniform over K classes
        let v = boltzmann_softmax_nll(&[3.0, -1.0, 0.5, 2.0], 1, lv(1e9)).unwrap();
        assert!(close(v.value, 4f64.ln(), 1e-7));
        // large logits stay finite
        let v = boltzmann_softmax_nll(&[1000.0, -1000.0], 1, lv(0.0)).unwrap();
        assert!(close(v.value, 2000.0, 1e-9));
    }

    #[test]
    fn boltzmann_errors() {
        assert!(matches!(
            boltzmann_softmax_nll(&[0.0, 1.0], 2, lv(0.0)),
            Err(Error::Index { index: 2, len: 2 })
        ));
        assert!(boltzmann_softmax_nll(&[], 0, lv(0.0)).is_err());
    }

    #[test]
    fn multitask_examples() {
        assert!(close(
            kendall_gal_multitask(1.0, 1.0, lv(0.0), lv(0.0)),
            1.5,
            1e-15
        ));
        assert_eq!(kendall_gal_multitask(0.0, 0.0, lv(0.0), lv(0.0)), 0.0);
        assert!(close(
            kendall_gal_multitask(1.0, 0.0, lv(4f64.ln()), lv(0.0)),
            0.818147180559945309417232121458,
            1e-14
        ));
        let reg = LossEval {
            value: 0.5,
            ..Default::default()
        };
        let cls = LossEval {
            value: 0.2,
            ..Default::default()
        };
        assert!(close(multitask_loss(&reg, &cls, 1.0), 0.7, 1e-15));
        assert_eq!(multitask_loss(&reg, &cls, 0.0), 0.5);
        assert!(close(multitask_loss(&reg, &cls, 2.0), 0.9, 1e-15));
    }

    #[test]
    fn reduction_fold() {
        let evals = [
            LossEval {
                value: 1.0,
                d_input: 2.0,
                d_s: 3.0,
                saturated: false,
            },
            LossEval {
                value: 3.0,
                d_input: 4.0,
                d_s: 5.0,
                saturated: true,
            },
        ];
        let m = Reduction::Mean.fold(evals);
        assert_eq!(
            (m.value, m.d_input, m.d_s, m.saturated),
            (2.0, 3.0, 4.0, true)
        );
        let s = Reduction::Sum.fold(evals);
        assert_eq!((s.value, s.d_input, s.d_s), (4.0, 6.0, 8.0));
        assert_eq!(Reduction::Mean.fold([]), LossEval::default());
    }

    #[test]
    fn input_validation() {
        assert!(ErrorNorm::new(-0.1).is_err());
        assert!(ClassProb::new(1.5).is_err());
        assert!(ClassProb::new(f64::NAN).is_err());
        assert!(ClassProb::new(0.0).unwrap().was_clamped());
        assert_eq!(ClassProb::new(0.0).unwrap().value(), P_EPS);
        assert!(LossParams::new(1.0, -1.0, 0.0).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn baselines_are_nonnegative(e in 0.0f64..100.0, beta in 0.1f64..5.0,
                                         p in 0.0f64..=1.0, gamma in 0.0f64..6.0) {
                let b = ThresholdParam::new(beta).unwrap();
                prop_assert!(smooth_l1(ErrorNorm::new(e).unwrap(), b) >= 0.0);
                prop_assert!(focal(ClassProb::new(p).unwrap(), gamma) >= 0.0);
            }
        }
    }
}
