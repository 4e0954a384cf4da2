//! The likelihood behind Bayesian Smooth L1 and checks of its normalization.
//!
//! The density is a Gaussian `N(0, σ²)` on the core `|t| < 1/β²` and a full
//! Laplace density `(α/2)·e^{−α|t|}` outside it. Core mass is `erf(u) = 1 − τ`
//! and tail mass is `e^{−α/β²}`, so total mass equals one exactly when
//! `α = −β² log τ`. [`total_mass`] evaluates both the closed form and an
//! adaptive quadrature of the density; [`solve_alpha`] recovers the rate by
//! bisection on the numerically integrated mass residual, without using the
//! closed form.

use crate::error::{domain, Error, Result};
use crate::quadrature::integrate;
use crate::scalar_math::{erf, erfc_stable, laplace_rate_alpha, tau_argument, ThresholdParam};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bisection bracket for [`solve_alpha`].
pub const ALPHA_BRACKET: (f64, f64) = (1e-8, 1e8);
/// Stop bisecting once the relative mass residual is below this.
pub const MASS_RESIDUAL_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseDensitySpec {
    pub sigma: f64,
    pub beta: ThresholdParam,
    pub alpha_rate: f64,
}

impl PiecewiseDensitySpec {
    pub fn new(sigma: f64, beta: ThresholdParam, alpha_rate: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(domain(format!("sigma must be finite and > 0, got {sigma}")));
        }
        if !(alpha_rate.is_finite() && alpha_rate > 0.0) {
            return Err(domain(format!(
                "laplace rate must be finite and > 0, got {alpha_rate}"
            )));
        }
        Ok(Self {
            sigma,
            beta,
            alpha_rate,
        })
    }

    /// Density whose Laplace rate is the closed-form `−β² log τ`.
    pub fn normalized(sigma: f64, beta: ThresholdParam) -> Result<Self> {
        let rate = laplace_rate_alpha(beta, sigma)?;
        if rate.saturated {
            return Err(domain(format!(
                "laplace rate saturated for sigma = {sigma}"
            )));
        }
        Self::new(sigma, beta, rate.alpha)
    }

    /// Core/tail boundary `1/β²`.
    pub fn boundary(&self) -> f64 {
        self.beta.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Laplace decay lengths `1/α` beyond the boundary that are integrated
    /// numerically; the remainder is added analytically.
    pub tail_cut: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            tail_cut: 40.0,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.tail_cut > 0.0 && self.max_intervals > 0
        {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "quadrature tolerances must be positive: {self:?}"
            )))
        }
    }
}

fn gaussian_pdf(t: f64, sigma: f64) -> f64 {
    (-0.5 * (t / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn laplace_pdf(t: f64, rate: f64) -> f64 {
    0.5 * rate * (-rate * t.abs()).exp()
}

/// Gaussian on `|t| < 1/β²`, Laplace on `|t| ≥ 1/β²`. Generally
/// discontinuous at the boundary.
pub fn piecewise_density(t: f64, spec: &PiecewiseDensitySpec) -> f64 {
    if t.abs() < spec.boundary() {
        gaussian_pdf(t, spec.sigma)
    } else {
        laplace_pdf(t, spec.alpha_rate)
    }
}

/// Closed-form and quadrature evaluations of the total mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    /// `erf(u) + e^{−α/β²}`.
    pub closed_form: f64,
    pub core_closed_form: f64,
    pub tail_closed_form: f64,
    pub quadrature: f64,
    pub core_quadrature: f64,
    pub tail_quadrature: f64,
    /// Summed quadrature error estimate.
    pub quad_error: f64,
}

impl MassReport {
    /// `|quadrature − 1|`.
    pub fn residual(&self) -> f64 {
        (self.quadrature - 1.0).abs()
    }
}

/// `2·∫₀^b N(t; 0, σ²) dt` by quadrature.
fn core_mass_quad(sigma: f64, boundary: f64, quad: &QuadConfig) -> Result<(f64, f64)> {
    let r = integrate(
        |t| gaussian_pdf(t, sigma),
        0.0,
        boundary,
        0.5 * quad.abs_tol,
        quad.rel_tol,
        quad.max_intervals,
    )?;
    Ok((2.0 * r.value, 2.0 * r.error))
}

/// `2·∫_b^∞ p(t) dt` by quadrature up to `b + tail_cut/decay`, plus the
/// analytic remainder past the cut.
fn tail_mass_quad<F: Fn(f64) -> f64>(
    pdf: F,
    boundary: f64,
    decay: f64,
    remainder: impl Fn(f64) -> f64,
    quad: &QuadConfig,
) -> Result<(f64, f64)> {
    let cut = boundary + quad.tail_cut / decay;
    let r = integrate(
        pdf,
        boundary,
        cut,
        0.5 * quad.abs_tol,
        quad.rel_tol,
        quad.max_intervals,
    )?;
    Ok((2.0 * (r.value + remainder(cut)), 2.0 * r.error))
}

fn laplace_tail_quad(rate: f64, boundary: f64, quad: &QuadConfig) -> Result<(f64, f64)> {
    tail_mass_quad(
        |t| laplace_pdf(t, rate),
        boundary,
        rate,
        |cut| 0.5 * (-rate * cut).exp(),
        quad,
    )
}

/// Total probability mass of the density.
pub fn total_mass(spec: &PiecewiseDensitySpec, quad: &QuadConfig) -> Result<MassReport> {
    quad.validate()?;
    let boundary = spec.boundary();
    let core_closed_form = erf(tau_argument(spec.beta, spec.sigma)?);
    let tail_closed_form = (-spec.alpha_rate * boundary).exp();
    let (core_q, core_err) = core_mass_quad(spec.sigma, boundary, quad)?;
    let (tail_q, tail_err) = laplace_tail_quad(spec.alpha_rate, boundary, quad)?;
    Ok(MassReport {
        closed_form: core_closed_form + tail_closed_form,
        core_closed_form,
        tail_closed_form,
        quadrature: core_q + tail_q,
        core_quadrature: core_q,
        tail_quadrature: tail_q,
        quad_error: core_err + tail_err,
    })
}

/// Mass the Gaussian places outside the core, by quadrature of its tail.
///
/// Integrating the tail directly keeps full relative precision even when the
/// outside mass is far below machine epsilon relative to one.
fn gaussian_tail_quad(sigma: f64, boundary: f64, quad: &QuadConfig) -> Result<f64> {
    // Gaussian mass beyond b + 40σ is below 1e-340 of the tail
    let (v, _) = tail_mass_quad(
        |t| gaussian_pdf(t, sigma),
        boundary,
        1.0 / sigma,
        |_| 0.0,
        &QuadConfig {
            tail_cut: 40.0,
            ..*quad
        },
    )?;
    Ok(v)
}

/// Laplace rate that makes the density integrate to one, found by geometric
/// bisection on `[1e-8, 1e8]`.
///
/// The residual is `(tail(α) − (1 − core)) / (1 − core)` with both masses
/// obtained by quadrature; `1 − core` is integrated as the Gaussian tail so it
/// stays accurate for small σ.
pub fn solve_alpha(sigma: f64, beta: ThresholdParam, quad: &QuadConfig) -> Result<f64> {
    quad.validate()?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(domain(format!("sigma must be finite and > 0, got {sigma}")));
    }
    let boundary = beta.threshold();
    // tight relative tolerance: the rate is only as good as the masses
    let tight = QuadConfig {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: quad.rel_tol.min(1e-13),
        ..*quad
    };
    let required = gaussian_tail_quad(sigma, boundary, &tight)?;
    let residual = |rate: f64| -> Result<f64> {
        let (tail, _) = laplace_tail_quad(rate, boundary, &tight)?;
        Ok(tail / required - 1.0)
    };

    let (mut lo, mut hi) = ALPHA_BRACKET;
    let (f_lo, f_hi) = (residual(lo)?, residual(hi)?);
    // tail mass decreases in the rate: positive residual at lo, negative at hi
    if !(f_lo > 0.0 && f_hi < 0.0) || !required.is_finite() || required <= 0.0 {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let mut mid = (lo * hi).sqrt();
    for _ in 0..MAX_BISECTIONS {
        mid = (lo * hi).sqrt();
        let r = residual(mid)?;
        if r.abs() < MASS_RESIDUAL_TOL * 1e-3 || hi / lo - 1.0 < 1e-15 {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Outer mass `τ = erfc(u)` by the closed form, for reports.
pub fn tail_mass_closed_form(sigma: f64, beta: ThresholdParam) -> Result<f64> {
    Ok(erfc_stable(tau_argument(beta, sigma)?))
}

/// One row of a normalization sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationCheck {
    pub sigma: f64,
    pub beta: f64,
    pub alpha_closed_form: f64,
    pub alpha_solved: f64,
    pub alpha_rel_diff: f64,
    pub mass: MassReport,
}

/// Normalization residual and solver agreement for one `(σ, β)` pair.
pub fn check_normalization(sigma: f64, beta: f64, quad: &QuadConfig) -> Result<NormalizationCheck> {
    let b = ThresholdParam::new(beta)?;
    let spec = PiecewiseDensitySpec::normalized(sigma, b)?;
    let mass = total_mass(&spec, quad)?;
    let alpha_solved = solve_alpha(sigma, b, quad)?;
    Ok(NormalizationCheck {
        sigma,
        beta,
        alpha_closed_form: spec.alpha_rate,
        alpha_solved,
        alpha_rel_diff: ((alpha_solved - spec.alpha_rate) / spec.alpha_rate).abs(),
        mass,
    })
}
