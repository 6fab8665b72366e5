//! Gaussian-copula pricing of midcurve swaptions.
//!
//! The short and long rate marginals, both expressed in the underlying-annuity
//! measure, are joined through correlated normals `(u, v)`:
//! `x = cdf_s⁻¹(Φ(u))`, `y = cdf_e⁻¹(Φ(v))`. The receiver payoff
//! `[K − w1·y + w2·x]⁺` is then integrated either by quadrature or by Monte Carlo.

mod integrator;
mod monte_carlo;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::models::{
    coefficients, flat_normal_marginal, tilt_marginal, AnnuityModel, GridSpec, Leg, MarketInputs,
    Marginal, Measure, ModelCoefficients, Weights,
};

pub use integrator::CopulaIntegrator;
pub use monte_carlo::price_mc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Receiver,
    Payer,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Receiver => "receiver",
            Side::Payer => "payer",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "receiver" | "rec" => Ok(Side::Receiver),
            "payer" | "pay" => Ok(Side::Payer),
            other => Err(invalid(format!("unknown side `{other}`"))),
        }
    }
}

/// Physically settled option at `expiry` on the `start → end` swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidcurveTrade {
    pub expiry: f64,
    pub start: f64,
    pub end: f64,
    pub strike: f64,
    pub notional: f64,
    pub side: Side,
}

impl MidcurveTrade {
    pub fn new(expiry: f64, start: f64, end: f64, strike: f64, notional: f64, side: Side) -> Result<Self> {
        let trade = Self { expiry, start, end, strike, notional, side };
        trade.validate()?;
        Ok(trade)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.strike, "strike")?;
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(invalid(format!("notional must be positive, got {}", self.notional)));
        }
        if !(self.expiry > 0.0 && self.expiry <= self.start && self.start < self.end) {
            return Err(invalid(format!(
                "trade needs 0 < T_x <= T_s < T_e, got {}, {}, {}",
                self.expiry, self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, ..*self }
    }

    pub fn with_side(&self, side: Side) -> Self {
        Self { side, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "mc",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadrature" | "quad" => Ok(Method::Quadrature),
            "mc" | "montecarlo" | "monte-carlo" => Ok(Method::MonteCarlo),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub price: f64,
    pub std_error: f64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

pub const MIN_ORDER: usize = 16;
pub const MIN_PATHS: usize = 10_000;

/// Copula correlation and numerical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    pub rho: f64,
    /// Quadrature order per axis.
    pub order: usize,
    pub paths: usize,
    pub seed: u64,
    /// Threads for Monte Carlo; `None` uses the global pool. Results do not
    /// depend on it.
    pub workers: Option<usize>,
}

impl CopulaSpec {
    pub fn new(rho: f64) -> Self {
        Self { rho, order: 64, paths: 1_000_000, seed: 42, workers: None }
    }

    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    pub fn with_paths(self, paths: usize) -> Self {
        Self { paths, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_workers(self, workers: Option<usize>) -> Self {
        Self { workers, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid(format!("copula correlation must lie in (-1, 1), got {}", self.rho)));
        }
        if self.order < MIN_ORDER {
            return Err(invalid(format!("quadrature order must be >= {MIN_ORDER}, got {}", self.order)));
        }
        if self.workers == Some(0) {
            return Err(invalid("worker count must be positive"));
        }
        Ok(())
    }
}

/// Short and long marginals in the underlying-annuity measure.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub short: Marginal,
    pub long: Marginal,
}

impl Marginals {
    pub fn new(short: Marginal, long: Marginal) -> Self {
        Self { short, long }
    }

    pub(crate) fn check(&self) -> Result<()> {
        for (m, leg) in [(&self.short, Leg::Short), (&self.long, Leg::Long)] {
            if m.measure() != Measure::UnderlyingAnnuity {
                return Err(Error::Contract(format!(
                    "{leg} marginal is in the {} measure; pricing needs underlying-annuity marginals",
                    m.measure()
                )));
            }
            m.check_invertible()?;
        }
        Ok(())
    }
}

/// Gaussian natural marginals at the market forwards and stdevs, tilted by `model`.
#[derive(Debug, Clone)]
pub struct GaussianSetup {
    pub natural_short: Marginal,
    pub natural_long: Marginal,
    pub marginals: Marginals,
    pub coefficients: ModelCoefficients,
    pub clipped_short: f64,
    pub clipped_long: f64,
}

pub fn gaussian_marginals(model: &AnnuityModel, mkt: &MarketInputs, grid: &GridSpec) -> Result<GaussianSetup> {
    let coeffs = coefficients(model, mkt)?;
    let natural_short = flat_normal_marginal(mkt.fwd_short, mkt.stdev_short, Measure::ShortAnnuity, grid)?;
    let natural_long = flat_normal_marginal(mkt.fwd_long, mkt.stdev_long, Measure::LongAnnuity, grid)?;
    let short = tilt_marginal(model, &coeffs, mkt, &natural_short, Leg::Short)?;
    let long = tilt_marginal(model, &coeffs, mkt, &natural_long, Leg::Long)?;
    Ok(GaussianSetup {
        natural_short,
        natural_long,
        marginals: Marginals::new(short.marginal, long.marginal),
        coefficients: coeffs,
        clipped_short: short.clipped_mass,
        clipped_long: long.clipped_mass,
    })
}

/// `E[w1·y − w2·x]` in the underlying-annuity measure.
pub fn underlying_forward(
    mkt: &MarketInputs,
    model: &AnnuityModel,
    copula: &CopulaSpec,
    marginals: &Marginals,
) -> Result<f64> {
    copula.validate()?;
    marginals.check()?;
    let weights = Weights::new(model, &coefficients(model, mkt)?, mkt);
    let integrator = CopulaIntegrator::new(&marginals.short, &marginals.long, copula.rho, copula.order)?;
    Ok(integrator.expect_smooth(|x, y| weights.underlying_rate(x, y)))
}

/// Prices by quadrature: outer Gauss–Hermite on the short-rate normal, inner
/// piecewise Gauss–Legendre on the conditional long-rate normal, split where
/// the payoff crosses zero.
pub fn price_quadrature(
    trade: &MidcurveTrade,
    mkt: &MarketInputs,
    model: &AnnuityModel,
    copula: &CopulaSpec,
    marginals: &Marginals,
) -> Result<PricingResult> {
    trade.validate()?;
    copula.validate()?;
    marginals.check()?;
    let weights = Weights::new(model, &coefficients(model, mkt)?, mkt);
    let integrator = CopulaIntegrator::new(&marginals.short, &marginals.long, copula.rho, copula.order)?;
    let strike = trade.strike;
    let receiver = integrator.expect_positive_part(|x, y| strike - weights.underlying_rate(x, y));
    let scale = mkt.annuities.underlying() * trade.notional;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("order".to_string(), copula.order as f64);
    let undiscounted = match trade.side {
        Side::Receiver => receiver,
        Side::Payer => {
            let fwd = integrator.expect_smooth(|x, y| weights.underlying_rate(x, y));
            diagnostics.insert("forward".to_string(), fwd);
            receiver - (strike - fwd)
        }
    };
    Ok(PricingResult {
        price: (scale * undiscounted).max(0.0),
        std_error: 0.0,
        method: Method::Quadrature,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::AnnuityTriple;
    use crate::implied::bachelier_price;

    fn market() -> MarketInputs {
        let annuities = AnnuityTriple::new(0.95, 1.88, 1.88 - 0.95).unwrap();
        MarketInputs::new(annuities, 0.02631, 0.022347, 0.0060, 0.006418, 0.8).unwrap()
    }

    fn trade(strike: f64) -> MidcurveTrade {
        MidcurveTrade::new(1.0, 2.0, 3.0, strike, 1.0, Side::Receiver).unwrap()
    }

    #[test]
    fn deterministic_matches_gaussian_spread() {
        let mkt = market();
        let model = AnnuityModel::deterministic();
        let setup = gaussian_marginals(&model, &mkt, &GridSpec::default()).unwrap();
        let copula = CopulaSpec::new(0.8);
        let a = mkt.annuities;
        let (w1, w2) = (a.long() / a.underlying(), a.short() / a.underlying());
        let sd = (w1 * w1 * mkt.stdev_long.powi(2) - 2.0 * 0.8 * w1 * w2 * mkt.stdev_long * mkt.stdev_short
            + w2 * w2 * mkt.stdev_short.powi(2))
        .sqrt();
        let fwd = mkt.deterministic_forward();
        for k in [fwd - 0.01, fwd, fwd + 0.004] {
            let p = price_quadrature(&trade(k), &mkt, &model, &copula, &setup.marginals).unwrap();
            let oracle = bachelier_price(fwd, k, sd, a.underlying(), 1.0, Side::Receiver).unwrap();
            assert!((p.price - oracle).abs() < 0.05e-4 * a.underlying(), "k={k}: {} vs {oracle}", p.price);
        }
    }

    #[test]
    fn natural_marginals_rejected() {
        let mkt = market();
        let model = AnnuityModel::deterministic();
        let setup = gaussian_marginals(&model, &mkt, &GridSpec::default()).unwrap();
        let m = Marginals::new(setup.natural_short.clone(), setup.natural_long.clone());
        let err = price_quadrature(&trade(0.02), &mkt, &model, &CopulaSpec::new(0.5), &m).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn copula_validation() {
        assert!(CopulaSpec::new(1.0).validate().is_err());
        assert!(CopulaSpec::new(0.5).with_order(8).validate().is_err());
        assert!(CopulaSpec::new(0.5).validate().is_ok());
    }

    #[test]
    fn trade_validation() {
        assert!(MidcurveTrade::new(1.0, 2.0, 3.0, 0.02, 0.0, Side::Payer).is_err());
        assert!(MidcurveTrade::new(2.0, 1.0, 3.0, 0.02, 1.0, Side::Payer).is_err());
        assert_eq!("PAY".parse::<Side>().unwrap(), Side::Payer);
        assert_eq!("mc".parse::<Method>().unwrap(), Method::MonteCarlo);
    }
}
