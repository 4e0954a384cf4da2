//! Special functions and the σ / τ / Laplace-rate helpers.
//!
//! `τ` is the probability mass a zero-mean Gaussian with standard deviation
//! `σ` places outside `|t| < 1/β²`:
//!
//! ```text
//! τ(β, σ) = erfc(u),  u = 1 / (β² σ √2)
//! α(β, σ) = −β² log τ
//! ```
//!
//! `log τ` is evaluated as `log erfcx(u) − u²` so it stays finite long after
//! `erfc(u)` itself underflows (σ → 0).

use crate::error::{domain, Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Lower clamp for the log-variance `s = log σ²`.
pub const S_MIN: f64 = -20.0;
/// Upper clamp for the log-variance `s = log σ²`.
pub const S_MAX: f64 = 20.0;
/// Largest Laplace rate reported before the saturation flag is raised.
pub const ALPHA_CAP: f64 = 1.0e6;

/// Above this argument `exp(x²)·erfc(x)` is replaced by its asymptotic series.
const ERFCX_ASYMPTOTIC_FROM: f64 = 26.0;

/// Learnable log-variance `s = log σ²`, clamped to `[S_MIN, S_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogVariance(f64);

impl LogVariance {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(domain(format!("log-variance must be finite, got {s}")));
        }
        Ok(Self(s.clamp(S_MIN, S_MAX)))
    }

    /// Log-variance corresponding to a standard deviation `sigma > 0`.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Self::new(2.0 * sigma.ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn sigma(self) -> f64 {
        sigma_from_log_variance(self)
    }

    /// `1/σ² = e^{−s}`.
    pub fn precision(self) -> f64 {
        (-self.0).exp()
    }
}

impl Default for LogVariance {
    fn default() -> Self {
        Self(0.0)
    }
}

/// Smooth-L1 threshold parameter β; the branch switch sits at `ε = 1/β²`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThresholdParam(f64);

impl ThresholdParam {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain(format!("beta must be finite and > 0, got {beta}")));
        }
        let threshold = 1.0 / (beta * beta);
        if !threshold.is_finite() {
            return Err(domain(format!(
                "threshold 1/beta^2 overflows for beta = {beta}"
            )));
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn beta_sq(self) -> f64 {
        self.0 * self.0
    }

    /// Branch threshold `1/β²`.
    pub fn threshold(self) -> f64 {
        1.0 / self.beta_sq()
    }
}

impl Default for ThresholdParam {
    fn default() -> Self {
        Self(1.0)
    }
}

/// Laplace rate together with the saturation flag raised when it hits [`ALPHA_CAP`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceRate {
    pub alpha: f64,
    pub saturated: bool,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("sigma must be finite and > 0, got {sigma}")))
    }
}

/// Complementary error function.
///
/// Backed by the FreeBSD msun rational approximations (via `libm`), which
/// evaluate `erfc` directly on every interval instead of forming `1 − erf`.
pub fn erfc_stable(x: f64) -> f64 {
    libm::erfc(x)
}

/// Error function, exposed for the inner-mass identity `erf(u) = 1 − τ`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Scaled complementary error function `erfcx(x) = exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfc(−x) = 2 − erfc(x)
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < ERFCX_ASYMPTOTIC_FROM {
        return (x * x).exp() * erfc_stable(x);
    }
    // erfcx(x) ~ 1/(x√π) · Σ (−1)^k (2k−1)!! / (2x²)^k
    let inv_2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=6 {
        term *= -((2 * k - 1) as f64) * inv_2x2;
        sum += term;
    }
    sum / (x * PI.sqrt())
}

/// `ln erfc(x)` for `x ≥ 0`, finite for every finite argument.
pub fn ln_erfc(x: f64) -> f64 {
    if x < ERFCX_ASYMPTOTIC_FROM {
        erfc_stable(x).ln()
    } else {
        erfcx(x).ln() - x * x
    }
}

/// Argument `u = 1/(β² σ √2)` of the complementary error function in τ.
pub fn tau_argument(beta: ThresholdParam, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(FRAC_1_SQRT_2 / (beta.beta_sq() * sigma))
}

/// Mass outside the Gaussian core: `τ = erfc(1/(β² σ √2))`.
pub fn tau(beta: ThresholdParam, sigma: f64) -> Result<f64> {
    Ok(erfc_stable(tau_argument(beta, sigma)?))
}

/// `log τ`, finite even when τ itself underflows.
pub fn log_tau(beta: ThresholdParam, sigma: f64) -> Result<f64> {
    Ok(ln_erfc(tau_argument(beta, sigma)?))
}

/// `∂ log τ / ∂s` with `s = log σ²`.
///
/// `dτ/ds = u·e^{−u²}/√π`, so the log-derivative is `u / (√π · erfcx(u))`.
pub fn dlog_tau_ds(beta: ThresholdParam, sigma: f64) -> Result<f64> {
    let u = tau_argument(beta, sigma)?;
    Ok(u / (PI.sqrt() * erfcx(u)))
}

/// Laplace rate `α = −β² log τ` that normalizes the Gaussian-core /
/// Laplace-tail density.
///
/// Rates above [`ALPHA_CAP`] are replaced by the cap with `saturated = true`.
pub fn laplace_rate_alpha(beta: ThresholdParam, sigma: f64) -> Result<LaplaceRate> {
    let alpha = -beta.beta_sq() * log_tau(beta, sigma)?;
    if alpha.is_finite() && alpha <= ALPHA_CAP {
        Ok(LaplaceRate {
            alpha,
            saturated: false,
        })
    } else if alpha.is_nan() {
        Err(Error::Domain("laplace rate evaluated to NaN".into()))
    } else {
        Ok(LaplaceRate {
            alpha: ALPHA_CAP,
            saturated: true,
        })
    }
}

/// `σ = exp(s/2)`.
pub fn sigma_from_log_variance(s: LogVariance) -> f64 {
    (0.5 * s.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn beta(b: f64) -> ThresholdParam {
        ThresholdParam::new(b).unwrap()
    }

    // 30-digit reference values (mpmath).
    const ERFC_TABLE: &[(f64, f64)] = &[
        (0.1, 0.887537083981715101595287748986),
        (0.3, 0.671373240540872583810382014682),
        (0.5, 0.479500122186953462317253346108),
        (0.7, 0.322198806162581557723141845649),
        (1.0, 0.157299207050285130658779364917),
        (1.5, 0.0338948535246892729330237383541),
        (2.0, 0.00467773498104726583793074363275),
        (2.5, 0.000406952017444958939564215739975),
        (3.0, 0.0000220904969985854413727761295823),
        (4.0, 0.0000000154172579002800188521596734869),
        (5.0, 1.53745979442803485018834348538e-12),
        (6.0, 2.15197367124989131165933503992e-17),
        (10.0, 2.08848758376254475700078629496e-45),
        (26.0, 5.66319240885614284647572789693e-296),
        (-0.1, 1.11246291601828489840471225101),
        (-0.7, 1.67780119383741844227685815435),
        (-1.0, 1.84270079294971486934122063508),
        (-1.5, 1.96610514647531072706697626165),
        (-2.5, 1.99959304798255504106043578426),
        (-4.0, 1.99999998458274209971998114784),
    ];

    #[test]
    fn erfc_matches_reference_table() {
        assert_eq!(erfc_stable(0.0), 1.0);
        for &(x, want) in ERFC_TABLE {
            assert!(rel(erfc_stable(x), want) < 1e-12, "erfc({x})");
        }
    }

    #[test]
    fn erfcx_and_ln_erfc_cover_the_asymptotic_range() {
        let table = [
            (
                0.1,
                0.896456979969126636663388269308,
                -0.119304973737395605316717950091,
            ),
            (
                1.0,
                0.427583576155807004410750344491,
                -1.8496055099332482485760175095,
            ),
            (
                4.0,
                0.1369994576250613898894451714,
                -17.9877783121030065030004207508,
            ),
            (
                10.0,
                0.0561409927438225858575173872205,
                -102.87988902484488857480478714,
            ),
            (
                25.9,
                0.0217671811507382125618806661012,
                -674.637351895319178967361881682,
            ),
            (
                26.1,
                0.0216006277263462066023384267354,
                -685.045032903309449388600469256,
            ),
            (
                30.0,
                0.0187958888614167514971253290494,
                -903.974117110643878079600243618,
            ),
            (
                100.0,
                0.00564161378298943290355645700695,
                -10005.1775851226643325704667821,
            ),
            (
                1000.0,
                0.000564189301453387654199745028062,
                -1000007.48012072190621214066735,
            ),
            (
                15000.0,
                0.0000376126388196001110133545651527,
                -225000010.188170425231269414998,
            ),
        ];
        for (x, want_x, want_ln) in table {
            assert!(rel(erfcx(x), want_x) < 1e-12, "erfcx({x}) = {}", erfcx(x));
            assert!(
                rel(ln_erfc(x), want_ln) < 1e-13,
                "ln_erfc({x}) = {}",
                ln_erfc(x)
            );
        }
    }

    #[test]
    fn tau_examples() {
        assert!(
            rel(
                tau(beta(1.0), 1.0).unwrap(),
                0.317310507862914102829534908736
            ) < 1e-12
        );
        assert!(
            rel(
                tau(beta(1.0), 0.5).unwrap(),
                0.0455002638963584144005652743331
            ) < 1e-12
        );
        assert!(
            rel(
                tau(beta(2.0), 1.0).unwrap(),
                0.802587348634152551518292416838
            ) < 1e-12
        );
        let far = tau(beta(1.0), 1e12).unwrap();
        assert!((far - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        let a = laplace_rate_alpha(beta(1.0), 1.0).unwrap();
        assert!(!a.saturated);
        assert!(rel(a.alpha, 1.14787446444931819635355095177) < 1e-12);
        let a = laplace_rate_alpha(beta(1.0), 0.5).unwrap();
        assert!(rel(a.alpha, 3.09003715312208663941831535869) < 1e-12);
        let a = laplace_rate_alpha(beta(0.5), 2.0).unwrap();
        assert!(rel(a.alpha, 0.772509288280521659854578839673) < 1e-12);
        let a = laplace_rate_alpha(beta(1.0), 1e12).unwrap();
        assert!(a.alpha > 0.0 && a.alpha < 1e-11);
    }

    #[test]
    fn alpha_saturates_for_tiny_sigma() {
        let a = laplace_rate_alpha(beta(1.0), 1e-5).unwrap();
        assert!(a.saturated);
        assert_eq!(a.alpha, ALPHA_CAP);
        // still representable just below the cap
        let a = laplace_rate_alpha(beta(1.0), 1e-3).unwrap();
        assert!(!a.saturated);
        assert!(a.alpha > 4.9e5 && a.alpha < ALPHA_CAP);
    }

    #[test]
    fn domain_errors() {
        assert!(tau(beta(1.0), 0.0).is_err());
        assert!(tau(beta(1.0), -1.0).is_err());
        assert!(tau(beta(1.0), f64::NAN).is_err());
        assert!(ThresholdParam::new(0.0).is_err());
        assert!(ThresholdParam::new(-2.0).is_err());
        assert!(ThresholdParam::new(1e-200).is_err());
        assert!(LogVariance::new(f64::INFINITY).is_err());
        assert!(LogVariance::new(f64::NAN).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_from_log_variance(LogVariance::new(0.0).unwrap()), 1.0);
        let s = LogVariance::new(4f64.ln()).unwrap();
        assert!(rel(sigma_from_log_variance(s), 2.0) < 1e-15);
        let s = LogVariance::new(1.0).unwrap();
        assert!(rel(sigma_from_log_variance(s), 1.64872127070012814684865078781) < 1e-15);
    }

    #[test]
    fn log_variance_is_clamped() {
        assert_eq!(LogVariance::new(-100.0).unwrap().value(), S_MIN);
        assert_eq!(LogVariance::new(55.0).unwrap().value(), S_MAX);
        assert_eq!(LogVariance::new(3.5).unwrap().value(), 3.5);
    }

    #[test]
    fn dlog_tau_matches_central_difference() {
        for &(b, s) in &[(1.0, 0.0), (0.5, -1.0), (2.0, 1.5), (1.0, -6.0)] {
            let b = beta(b);
            let f = |s: f64| log_tau(b, (0.5 * s).exp()).unwrap();
            let h = 1e-6;
            let fd = (f(s + h) - f(s - h)) / (2.0 * h);
            let an = dlog_tau_ds(b, (0.5 * s).exp()).unwrap();
            assert!(rel(an, fd) < 1e-7, "s={s}: {an} vs {fd}");
        }
    }

    const SIGMA_GRID: [f64; 8] = [0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0];
    const BETA_GRID: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 4.0];

    #[test]
    fn tau_and_alpha_monotone_on_grid() {
        for &b in &BETA_GRID {
            let b = beta(b);
            let mut prev: Option<(f64, f64)> = None;
            for &sigma in &SIGMA_GRID {
                // τ itself underflows at (σ=0.1, β=0.25); compare in log space
                let t = log_tau(b, sigma).unwrap();
                let a = laplace_rate_alpha(b, sigma).unwrap().alpha;
                assert!(t.is_finite() && t < 0.0);
                assert!(a > 0.0);
                if let Some((pt, pa)) = prev {
                    assert!(t > pt, "tau not increasing in sigma");
                    assert!(a < pa, "alpha not decreasing in sigma");
                }
                prev = Some((t, a));
            }
        }
        for &sigma in &SIGMA_GRID {
            let mut prev = None;
            for &b in &BETA_GRID {
                let t = log_tau(beta(b), sigma).unwrap();
                if let Some(pt) = prev {
                    assert!(t > pt, "tau not increasing in beta");
                }
                prev = Some(t);
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn erfc_reflection(x in -30.0f64..30.0) {
                let r = erfc_stable(x) + erfc_stable(-x) - 2.0;
                prop_assert!(r.abs() < 1e-12);
            }

            #[test]
            fn sigma_round_trip(log10_sigma in -3.0f64..3.0) {
                let sigma = 10f64.powf(log10_sigma);
                let s = LogVariance::new(2.0 * sigma.ln()).unwrap();
                prop_assert!(((sigma_from_log_variance(s) - sigma) / sigma).abs() < 1e-12);
            }
        }
    }
}
