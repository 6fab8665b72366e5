//! Annuity-ratio models.
//!
//! A midcurve rate is `w1·R_e − w2·R_s` with `w1 = A_e/A_u`, `w2 = A_s/A_u`
//! evaluated at expiry. The models here make those ratios deterministic,
//! linear, or exponential-linear functions of the short rate `x` and the long
//! rate `y`, parameterised by two loadings `σ_e`, `σ_s`.

mod marginal;

use std::fmt;
use std::str::FromStr;

use crate::curve::AnnuityTriple;
use crate::error::{ensure_finite, invalid, Error, Result};

pub use marginal::{
    flat_normal_marginal, marginal_from_smile, tilt_marginal, GridSpec, Leg, Marginal, Measure,
    TiltOutcome,
};

/// Today's market for the two co-initial swap rates fixing at expiry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketInputs {
    pub annuities: AnnuityTriple,
    /// Forward short rate `R(t0, T_x, T_s)`.
    pub fwd_short: f64,
    /// Forward long rate `R(t0, T_x, T_e)`.
    pub fwd_long: f64,
    /// Terminal standard deviation of the short rate at expiry.
    pub stdev_short: f64,
    /// Terminal standard deviation of the long rate at expiry.
    pub stdev_long: f64,
    /// Correlation between the two rates.
    pub rho: f64,
}

impl MarketInputs {
    pub fn new(
        annuities: AnnuityTriple,
        fwd_short: f64,
        fwd_long: f64,
        stdev_short: f64,
        stdev_long: f64,
        rho: f64,
    ) -> Result<Self> {
        ensure_finite(fwd_short, "short forward")?;
        ensure_finite(fwd_long, "long forward")?;
        if !(stdev_short > 0.0 && stdev_short.is_finite()) {
            return Err(invalid(format!("short terminal stdev must be positive, got {stdev_short}")));
        }
        if !(stdev_long > 0.0 && stdev_long.is_finite()) {
            return Err(invalid(format!("long terminal stdev must be positive, got {stdev_long}")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(invalid(format!("correlation must lie in [-1, 1], got {rho}")));
        }
        Ok(Self { annuities, fwd_short, fwd_long, stdev_short, stdev_long, rho })
    }

    /// Midcurve forward when the annuity ratios are frozen at today's values.
    pub fn deterministic_forward(&self) -> f64 {
        let a = &self.annuities;
        (a.long() * self.fwd_long - a.short() * self.fwd_short) / a.underlying()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Deterministic,
    Linear,
    LogLinear,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Deterministic => "deterministic",
            ModelKind::Linear => "linear",
            ModelKind::LogLinear => "loglinear",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deterministic" | "det" => Ok(ModelKind::Deterministic),
            "linear" => Ok(ModelKind::Linear),
            "loglinear" | "log-linear" | "log_linear" | "exponential" => Ok(ModelKind::LogLinear),
            other => Err(invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnuityModel {
    kind: ModelKind,
    sigma_e: f64,
    sigma_s: f64,
}

impl AnnuityModel {
    /// The deterministic kind ignores the loadings and stores zeros.
    pub fn new(kind: ModelKind, sigma_e: f64, sigma_s: f64) -> Result<Self> {
        ensure_finite(sigma_e, "sigma_e")?;
        ensure_finite(sigma_s, "sigma_s")?;
        Ok(match kind {
            ModelKind::Deterministic => Self::deterministic(),
            _ => Self { kind, sigma_e, sigma_s },
        })
    }

    pub fn deterministic() -> Self {
        Self { kind: ModelKind::Deterministic, sigma_e: 0.0, sigma_s: 0.0 }
    }

    pub fn linear(sigma_e: f64, sigma_s: f64) -> Self {
        Self { kind: ModelKind::Linear, sigma_e, sigma_s }
    }

    pub fn log_linear(sigma_e: f64, sigma_s: f64) -> Self {
        Self { kind: ModelKind::LogLinear, sigma_e, sigma_s }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn sigma_e(&self) -> f64 {
        self.sigma_e
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    /// Same kind with both loadings multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind, sigma_e: self.sigma_e * factor, sigma_s: self.sigma_s * factor }
    }
}

/// Derived model constants.
///
/// `μ` load the long-annuity ratio `w1`, `ν` the short-annuity ratio `w2`.
/// `hat_*` are the rate means under the underlying-annuity measure, `tilde_*`
/// the cross-measure means (short rate under the long annuity and vice versa).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCoefficients {
    pub mu_s: f64,
    pub mu_e: f64,
    pub nu_s: f64,
    pub nu_e: f64,
    pub alpha_s: f64,
    pub alpha_e: f64,
    pub hat_short: f64,
    pub hat_long: f64,
    pub tilde_short: f64,
    pub tilde_long: f64,
}

pub fn coefficients(model: &AnnuityModel, mkt: &MarketInputs) -> Result<ModelCoefficients> {
    let a = &mkt.annuities;
    let (a_s, a_e, a_u) = (a.short(), a.long(), a.underlying());
    if !(a_s > 0.0 && a_e > 0.0 && a_u > 0.0) {
        return Err(invalid("annuities must be positive"));
    }
    let (sig_s, sig_e, rho) = (mkt.stdev_short, mkt.stdev_long, mkt.rho);

    let mu_s = a_u / a_e * model.sigma_s;
    let mu_e = a_u / a_e * model.sigma_e;
    let nu_s = a_u / a_s * model.sigma_s;
    let nu_e = a_u / a_s * model.sigma_e;

    let hat_short = mkt.fwd_short - (nu_s * sig_s + nu_e * rho * sig_e) * sig_s;
    let hat_long = mkt.fwd_long - (mu_e * sig_e + mu_s * rho * sig_s) * sig_e;
    let tilde_short = hat_short + (mu_s * sig_s + mu_e * rho * sig_e) * sig_s;
    let tilde_long = hat_long + (nu_e * sig_e + nu_s * rho * sig_s) * sig_e;

    let alpha_s = a_u / a_s * (-0.5 * quad_form(nu_e, nu_s, sig_e, sig_s, rho)).exp();
    let alpha_e = a_u / a_e * (-0.5 * quad_form(mu_e, mu_s, sig_e, sig_s, rho)).exp();

    Ok(ModelCoefficients {
        mu_s,
        mu_e,
        nu_s,
        nu_e,
        alpha_s,
        alpha_e,
        hat_short,
        hat_long,
        tilde_short,
        tilde_long,
    })
}

/// Variance of `a·y + b·x` for jointly normal rates.
fn quad_form(a: f64, b: f64, sig_e: f64, sig_s: f64, rho: f64) -> f64 {
    a * a * sig_e * sig_e + 2.0 * rho * a * b * sig_e * sig_s + b * b * sig_s * sig_s
}

/// The weight functions `(w1, w2)` with model constants folded in.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    kind: ModelKind,
    base_1: f64,
    base_2: f64,
    mu_e: f64,
    mu_s: f64,
    nu_e: f64,
    nu_s: f64,
    hat_long: f64,
    hat_short: f64,
}

impl Weights {
    pub fn new(model: &AnnuityModel, coeffs: &ModelCoefficients, mkt: &MarketInputs) -> Self {
        let a = &mkt.annuities;
        let mut base_1 = a.long() / a.underlying();
        let mut base_2 = a.short() / a.underlying();
        if model.kind() == ModelKind::LogLinear {
            let (sig_s, sig_e, rho) = (mkt.stdev_short, mkt.stdev_long, mkt.rho);
            base_1 *= (-0.5 * quad_form(coeffs.mu_e, coeffs.mu_s, sig_e, sig_s, rho)).exp();
            base_2 *= (-0.5 * quad_form(coeffs.nu_e, coeffs.nu_s, sig_e, sig_s, rho)).exp();
        }
        Self {
            kind: model.kind(),
            base_1,
            base_2,
            mu_e: coeffs.mu_e,
            mu_s: coeffs.mu_s,
            nu_e: coeffs.nu_e,
            nu_s: coeffs.nu_s,
            hat_long: coeffs.hat_long,
            hat_short: coeffs.hat_short,
        }
    }

    /// `(w1(y, x), w2(y, x))` at short rate `x` and long rate `y`.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let dy = y - self.hat_long;
        let dx = x - self.hat_short;
        match self.kind {
            ModelKind::Deterministic => (self.base_1, self.base_2),
            ModelKind::Linear => (
                self.base_1 * (1.0 + self.mu_e * dy + self.mu_s * dx),
                self.base_2 * (1.0 + self.nu_e * dy + self.nu_s * dx),
            ),
            ModelKind::LogLinear => (
                self.base_1 * (self.mu_e * dy + self.mu_s * dx).exp(),
                self.base_2 * (self.nu_e * dy + self.nu_s * dx).exp(),
            ),
        }
    }

    /// Midcurve rate `w1·y − w2·x`.
    #[inline]
    pub fn underlying_rate(&self, x: f64, y: f64) -> f64 {
        let (w1, w2) = self.eval(x, y);
        w1 * y - w2 * x
    }
}

/// Convenience form of [`Weights::eval`].
pub fn weights(
    model: &AnnuityModel,
    coeffs: &ModelCoefficients,
    mkt: &MarketInputs,
    x: f64,
    y: f64,
) -> (f64, f64) {
    Weights::new(model, coeffs, mkt).eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_market() -> MarketInputs {
        // underlying annuity chosen so the triangle holds exactly
        let annuities = AnnuityTriple::new(0.95, 1.88, 1.88 - 0.95).unwrap();
        MarketInputs::new(annuities, 0.02631, 0.022347, 0.0060, 0.006418, 0.8).unwrap()
    }

    #[test]
    fn deterministic_limit() {
        let mkt = example_market();
        let c = coefficients(&AnnuityModel::deterministic(), &mkt).unwrap();
        assert_eq!((c.mu_s, c.mu_e, c.nu_s, c.nu_e), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(c.hat_short, mkt.fwd_short);
        assert_eq!(c.hat_long, mkt.fwd_long);
        assert_eq!(c.tilde_short, mkt.fwd_short);
        assert_eq!(c.tilde_long, mkt.fwd_long);
        assert_relative_eq!(c.alpha_s, 0.93 / 0.95, max_relative = 1e-12);
        assert_relative_eq!(c.alpha_e, 0.93 / 1.88, max_relative = 1e-12);
    }

    #[test]
    fn adjusted_forward_example() {
        let mkt = example_market();
        let c = coefficients(&AnnuityModel::linear(2.0, -1.0), &mkt).unwrap();
        assert_relative_eq!(c.nu_s, -0.978_947_368_421_052_7, max_relative = 1e-9);
        assert_relative_eq!(c.nu_e, 1.957_894_736_842_105_4, max_relative = 1e-9);
        assert_relative_eq!(c.hat_short, 0.026_284_926_416_842_1, max_relative = 1e-9);
        // the defining relation of the loadings
        let a = mkt.annuities;
        assert_relative_eq!(c.mu_s * a.long(), c.nu_s * a.short(), max_relative = 1e-14);
        assert_relative_eq!(c.mu_e * a.long(), c.nu_e * a.short(), max_relative = 1e-14);
    }

    #[test]
    fn zero_rho_zero_sigma_e_degenerates() {
        let mut mkt = example_market();
        mkt.rho = 0.0;
        let c = coefficients(&AnnuityModel::linear(0.0, 1.5), &mkt).unwrap();
        assert_relative_eq!(c.hat_short, mkt.fwd_short - c.nu_s * 0.006 * 0.006, max_relative = 1e-15);
        assert_eq!(c.hat_long, mkt.fwd_long);
    }

    #[test]
    fn deterministic_weights_differ_by_one() {
        let mkt = example_market();
        let m = AnnuityModel::deterministic();
        let c = coefficients(&m, &mkt).unwrap();
        let (w1, w2) = weights(&m, &c, &mkt, 0.01, 0.05);
        assert_relative_eq!(w1, 2.021_505_376_344_086, max_relative = 1e-12);
        assert_relative_eq!(w2, 1.021_505_376_344_086, max_relative = 1e-12);
        assert!((w1 - w2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_weights_centered() {
        let mkt = example_market();
        let m = AnnuityModel::linear(2.0, -1.0);
        let c = coefficients(&m, &mkt).unwrap();
        let (w1, w2) = weights(&m, &c, &mkt, c.hat_short, c.hat_long);
        assert_relative_eq!(w1, 1.88 / 0.93, max_relative = 1e-13);
        assert_relative_eq!(w2, 0.95 / 0.93, max_relative = 1e-13);
    }

    #[test]
    fn deterministic_ignores_loadings() {
        let m = AnnuityModel::new(ModelKind::Deterministic, 3.0, 4.0).unwrap();
        assert_eq!((m.sigma_e(), m.sigma_s()), (0.0, 0.0));
    }

    #[test]
    fn parses_kinds() {
        assert_eq!("LogLinear".parse::<ModelKind>().unwrap(), ModelKind::LogLinear);
        assert_eq!("linear".parse::<ModelKind>().unwrap(), ModelKind::Linear);
        assert!("quadratic".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::LogLinear.to_string(), "loglinear");
    }

    #[test]
    fn market_validation() {
        let a = AnnuityTriple::new(1.0, 2.0, 1.0).unwrap();
        assert!(MarketInputs::new(a, 0.02, 0.02, 0.0, 0.01, 0.5).is_err());
        assert!(MarketInputs::new(a, 0.02, 0.02, 0.01, 0.01, 1.2).is_err());
        assert!(MarketInputs::new(a, f64::NAN, 0.02, 0.01, 0.01, 0.2).is_err());
    }
}
