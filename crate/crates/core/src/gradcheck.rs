//! Central-difference verification of the analytic loss derivatives.

use crate::error::Result;
use crate::losses::{
    bayesian_focal, bayesian_l2, bayesian_smooth_l1, boltzmann_softmax_nll,
    boltzmann_softmax_nll_grad, ClassProb, ErrorNorm, LossParams,
};
use crate::scalar_math::{LogVariance, ThresholdParam};
use crate::synth::SeededStream;
use serde::{Deserialize, Serialize};

/// Gradient checks pass below this relative error.
pub const GRADCHECK_TOL: f64 = 1e-6;
/// Sampled ε keep at least this distance from the Smooth-L1 kink.
pub const KINK_EXCLUSION: f64 = 1e-3;

const S_RANGE: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossId {
    BayesianSmoothL1,
    BayesianFocal,
    BayesianL2,
    BoltzmannSoftmaxNll,
}

impl LossId {
    pub const ALL: [LossId; 4] = [
        LossId::BayesianSmoothL1,
        LossId::BayesianFocal,
        LossId::BayesianL2,
        LossId::BoltzmannSoftmaxNll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossId::BayesianSmoothL1 => "bsmooth_l1",
            LossId::BayesianFocal => "bfocal",
            LossId::BayesianL2 => "bl2",
            LossId::BoltzmannSoftmaxNll => "boltzmann",
        }
    }
}

impl std::str::FromStr for LossId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown loss `{s}`")))
    }
}

/// One compared partial derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradSample {
    /// Point description, e.g. `eps=0.3 beta=1.2 s=-0.4`.
    pub point: String,
    /// Which partial: `d_input`, `d_s` or `d_logit[i]`.
    pub partial: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub loss: LossId,
    pub samples: Vec<GradSample>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADCHECK_TOL
    }
}

/// Step `1e-6·max(1, |x|)`.
pub fn step_for(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Symmetric difference quotient of `f` at `x`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = step_for(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a − n| / max(|a|, |n|, 1)`; absolute below unit magnitude so that
/// vanishing partials do not blow up the ratio.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

fn sample(point: &str, partial: &str, analytic: f64, numeric: f64) -> GradSample {
    GradSample {
        point: point.to_string(),
        partial: partial.to_string(),
        analytic,
        numeric,
        rel_error: rel_error(analytic, numeric),
    }
}

fn lv(s: f64) -> LogVariance {
    LogVariance::new(s).expect("finite sample")
}

/// Compares analytic and central-difference partials at `points` seeded
/// random points.
pub fn gradient_check(loss: LossId, points: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = SeededStream::new(seed);
    let mut samples = Vec::with_capacity(2 * points);
    for _ in 0..points {
        let s = rng.uniform_in(S_RANGE.0, S_RANGE.1);
        match loss {
            LossId::BayesianSmoothL1 => {
                let beta = rng.uniform_in(0.5, 2.0);
                let b = ThresholdParam::new(beta)?;
                let kink = b.threshold();
                // ε on [1e-3, 3/β²], away from the kink
                let eps = loop {
                    let e = rng.uniform_in(1e-3, 3.0 * kink);
                    if (e - kink).abs() >= KINK_EXCLUSION {
                        break e;
                    }
                };
                let params = LossParams::new(beta, 0.0, s)?;
                let at = |e: f64, s: f64| {
                    bayesian_smooth_l1(ErrorNorm::new(e).expect("eps >= 0"), &params.with_s(lv(s)))
                };
                let ev = at(eps, s);
                let point = format!("eps={eps} beta={beta} s={s}");
                let fd_e = central_difference(|e| at(e, s).value, eps);
                let fd_s = central_difference(|s| at(eps, s).value, s);
                samples.push(sample(&point, "d_input", ev.d_input, fd_e));
                samples.push(sample(&point, "d_s", ev.d_s, fd_s));
            }
            LossId::BayesianFocal => {
                let p = rng.uniform_in(0.02, 0.98);
                let gamma = rng.uniform_in(0.0, 4.0);
                let params = LossParams::new(1.0, gamma, s)?;
                let at = |p: f64, s: f64| {
                    bayesian_focal(
                        ClassProb::new(p).expect("p in (0,1)"),
                        &params.with_s(lv(s)),
                    )
                };
                let ev = at(p, s);
                let point = format!("p_t={p} gamma={gamma} s={s}");
                samples.push(sample(
                    &point,
                    "d_input",
                    ev.d_input,
                    central_difference(|p| at(p, s).value, p),
                ));
                samples.push(sample(
                    &point,
                    "d_s",
                    ev.d_s,
                    central_difference(|s| at(p, s).value, s),
                ));
            }
            LossId::BayesianL2 => {
                let eps = rng.uniform_in(1e-3, 3.0);
                let at = |e: f64, s: f64| bayesian_l2(ErrorNorm::new(e).expect("eps >= 0"), lv(s));
                let ev = at(eps, s);
                let point = format!("eps={eps} s={s}");
                samples.push(sample(
                    &point,
                    "d_input",
                    ev.d_input,
                    central_difference(|e| at(e, s).value, eps),
                ));
                samples.push(sample(
                    &point,
                    "d_s",
                    ev.d_s,
                    central_difference(|s| at(eps, s).value, s),
                ));
            }
            LossId::BoltzmannSoftmaxNll => {
                let k = 2 + (rng.uniform() * 5.0) as usize;
                let logits: Vec<f64> = (0..k).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
                let c = ((rng.uniform() * k as f64) as usize).min(k - 1);
                let at = |l: &[f64], s: f64| boltzmann_softmax_nll(l, c, lv(s)).map(|e| e.value);
                let ev = boltzmann_softmax_nll(&logits, c, lv(s))?;
                let grad = boltzmann_softmax_nll_grad(&logits, c, lv(s))?;
                let point = format!("logits={logits:?} c={c} s={s}");
                for (i, g) in grad.iter().enumerate() {
                    let fd = central_difference(
                        |x| {
                            let mut l = logits.clone();
                            l[i] = x;
                            at(&l, s).expect("valid index")
                        },
                        logits[i],
                    );
                    samples.push(sample(&point, &format!("d_logit[{i}]"), *g, fd));
                }
                samples.push(sample(&point, "d_input", ev.d_input, grad[c]));
                samples.push(sample(
                    &point,
                    "d_s",
                    ev.d_s,
                    central_difference(|s| at(&logits, s).expect("valid index"), s),
                ));
            }
        }
    }
    let max_rel_error = samples.iter().map(|s| s.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        loss,
        samples,
        max_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_loss_passes_at_100_points() {
        for loss in LossId::ALL {
            let r = gradient_check(loss, 100, 17).unwrap();
            assert!(r.passed(), "{loss:?}: {}", r.max_rel_error);
            assert!(r.samples.len() >= 200);
        }
    }

    #[test]
    fn l2_gradient_vanishes_at_zero_error() {
        let e = bayesian_l2(ErrorNorm::new(0.0).unwrap(), lv(0.7));
        assert_eq!(e.d_input, 0.0);
    }

    #[test]
    fn detects_a_wrong_derivative() {
        // d/dx x³ at 2 is 12; claiming 11 must fail the tolerance
        let fd = central_difference(|x| x * x * x, 2.0);
        assert!(rel_error(12.0, fd) < GRADCHECK_TOL);
        assert!(rel_error(11.0, fd) > GRADCHECK_TOL);
    }

    #[test]
    fn names_round_trip() {
        for loss in LossId::ALL {
            assert_eq!(loss.name().parse::<LossId>().unwrap(), loss);
        }
        assert!("nope".parse::<LossId>().is_err());
    }
}
