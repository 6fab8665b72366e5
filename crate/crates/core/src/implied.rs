//! Normal-model quoting: Bachelier prices and vols, implied copula
//! correlation, and the correlation skew across strikes.

use std::fmt;

use rayon::prelude::*;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::models::{AnnuityModel, GridSpec, MarketInputs};
use crate::normal;
use crate::pricer::{
    gaussian_marginals, price_mc, price_quadrature, underlying_forward, CopulaSpec, Marginals, Method,
    MidcurveTrade, Side,
};
use crate::solver::{brent, BrentOptions};

/// Largest terminal stdev the vol inversion searches (10 000bp).
const MAX_TERMINAL_STDEV: f64 = 1.0;
/// Correlation search interval for implied correlation.
pub const RHO_LIMIT: f64 = 1.0 - 1e-9;

/// Undiscounted receiver value `E[(K − R)⁺]` for `R ~ N(fwd, stdev²)`.
#[inline]
pub(crate) fn receiver_value(fwd: f64, strike: f64, stdev: f64) -> f64 {
    let m = strike - fwd;
    if stdev <= 0.0 {
        return m.max(0.0);
    }
    let d = m / stdev;
    m * normal::cdf(d) + stdev * normal::pdf(d)
}

fn unit_value(fwd: f64, strike: f64, stdev: f64, side: Side) -> f64 {
    match side {
        Side::Receiver => receiver_value(fwd, strike, stdev),
        Side::Payer => receiver_value(-fwd, -strike, stdev),
    }
}

fn intrinsic(fwd: f64, strike: f64, side: Side) -> f64 {
    match side {
        Side::Receiver => (strike - fwd).max(0.0),
        Side::Payer => (fwd - strike).max(0.0),
    }
}

fn check_scale(annuity: f64, notional: f64) -> Result<()> {
    if !(annuity > 0.0 && annuity.is_finite()) {
        return Err(invalid(format!("annuity must be positive, got {annuity}")));
    }
    if !(notional > 0.0 && notional.is_finite()) {
        return Err(invalid(format!("notional must be positive, got {notional}")));
    }
    Ok(())
}

/// Bachelier price of a swaption with terminal standard deviation `stdev`.
pub fn bachelier_price(
    fwd: f64,
    strike: f64,
    stdev: f64,
    annuity: f64,
    notional: f64,
    side: Side,
) -> Result<f64> {
    ensure_finite(fwd, "forward")?;
    ensure_finite(strike, "strike")?;
    if !(stdev > 0.0 && stdev.is_finite()) {
        return Err(invalid(format!("terminal stdev must be positive, got {stdev}")));
    }
    check_scale(annuity, notional)?;
    Ok(annuity * notional * unit_value(fwd, strike, stdev, side))
}

/// Terminal standard deviation that reproduces `price` in the Bachelier model.
pub fn implied_normal_vol(
    price: f64,
    fwd: f64,
    strike: f64,
    annuity: f64,
    notional: f64,
    side: Side,
) -> Result<f64> {
    ensure_finite(price, "price")?;
    ensure_finite(fwd, "forward")?;
    ensure_finite(strike, "strike")?;
    check_scale(annuity, notional)?;
    let target = price / (annuity * notional);
    let floor = intrinsic(fwd, strike, side);
    if !(target - floor > 1e-14) {
        return Err(Error::Inversion {
            price,
            bound: format!("is at or below intrinsic value {:.6e}", floor * annuity * notional),
        });
    }
    let cap = unit_value(fwd, strike, MAX_TERMINAL_STDEV, side);
    if target >= cap {
        return Err(Error::Inversion {
            price,
            bound: format!("exceeds the value at terminal stdev {MAX_TERMINAL_STDEV}"),
        });
    }

    let (mut lo, mut hi) = (0.0, MAX_TERMINAL_STDEV);
    let mut sd = ((target - floor) * (2.0 * std::f64::consts::PI).sqrt()).clamp(1e-12, 0.5);
    for _ in 0..300 {
        let f = unit_value(fwd, strike, sd, side) - target;
        if f == 0.0 {
            return Ok(sd);
        }
        if f > 0.0 {
            hi = sd;
        } else {
            lo = sd;
        }
        let vega = normal::pdf((strike - fwd) / sd);
        let newton = sd - f / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - sd).abs() <= 1e-15 * sd || hi - lo <= 1e-16 * hi {
            return Ok(next);
        }
        sd = next;
    }
    Err(Error::RootFinding("implied normal vol did not converge".into()))
}

/// Which end of the correlation interval an implied correlation was pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationBound {
    MinusOne,
    PlusOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedCorrelation {
    pub rho: f64,
    pub bound: Option<CorrelationBound>,
}

/// Quotes midcurve prices as correlations under the reference convention:
/// frozen annuity ratios and normal marginals at the market vols.
#[derive(Debug, Clone)]
pub struct CorrelationQuoter {
    mkt: MarketInputs,
    marginals: Marginals,
    order: usize,
}

impl CorrelationQuoter {
    pub fn new(mkt: &MarketInputs, grid: &GridSpec, order: usize) -> Result<Self> {
        let setup = gaussian_marginals(&AnnuityModel::deterministic(), mkt, grid)?;
        Ok(Self { mkt: *mkt, marginals: setup.marginals, order })
    }

    pub fn marginals(&self) -> &Marginals {
        &self.marginals
    }

    /// Reference price at copula correlation `rho`.
    pub fn price(&self, trade: &MidcurveTrade, rho: f64) -> Result<f64> {
        let copula = CopulaSpec::new(rho).with_order(self.order);
        let model = AnnuityModel::deterministic();
        Ok(price_quadrature(trade, &self.mkt, &model, &copula, &self.marginals)?.price)
    }

    /// Correlation at which the reference price equals `target`.
    ///
    /// Reference prices fall as the correlation rises; targets outside
    /// `[price(+1), price(−1)]` are pinned to the nearer end and flagged.
    pub fn implied_correlation(&self, target: f64, trade: &MidcurveTrade) -> Result<ImpliedCorrelation> {
        ensure_finite(target, "target price")?;
        let at_minus = self.price(trade, -RHO_LIMIT)?;
        let at_plus = self.price(trade, RHO_LIMIT)?;
        if target >= at_minus {
            return Ok(ImpliedCorrelation { rho: -RHO_LIMIT, bound: Some(CorrelationBound::MinusOne) });
        }
        if target <= at_plus {
            return Ok(ImpliedCorrelation { rho: RHO_LIMIT, bound: Some(CorrelationBound::PlusOne) });
        }
        let mut failure = None;
        let objective = |rho: f64| match self.price(trade, rho) {
            Ok(p) => p - target,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        };
        let opts = BrentOptions { xtol: 1e-13, ..BrentOptions::default() };
        let root = brent(objective, -RHO_LIMIT, RHO_LIMIT, opts);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(ImpliedCorrelation { rho: root?, bound: None })
    }
}

/// Implied correlation of a single price; see [`CorrelationQuoter`].
pub fn implied_correlation(
    target_price: f64,
    trade: &MidcurveTrade,
    mkt: &MarketInputs,
    grid: &GridSpec,
    order: usize,
) -> Result<ImpliedCorrelation> {
    CorrelationQuoter::new(mkt, grid, order)?.implied_correlation(target_price, trade)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewPoint {
    pub strike: f64,
    pub price: f64,
    /// Annualized normal vol of the midcurve rate, `None` if the price
    /// cannot be inverted.
    pub implied_normal_vol: Option<f64>,
    pub implied_correlation: f64,
    pub bound: Option<CorrelationBound>,
}

impl SkewPoint {
    /// Empty when the point is clean.
    pub fn flag(&self) -> String {
        let mut flags = Vec::new();
        match self.bound {
            Some(CorrelationBound::MinusOne) => flags.push("rho_min"),
            Some(CorrelationBound::PlusOne) => flags.push("rho_max"),
            None => {}
        }
        if self.implied_normal_vol.is_none() {
            flags.push("vol_undefined");
        }
        flags.join("|")
    }
}

impl fmt::Display for SkewPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={:.6} rho={:.6} {}", self.strike, self.implied_correlation, self.flag())
    }
}

/// Prices `template` at every strike under `model` and quotes each price as
/// an implied correlation against the frozen-annuity reference.
pub fn correlation_skew_curve(
    template: &MidcurveTrade,
    mkt: &MarketInputs,
    model: &AnnuityModel,
    copula: &CopulaSpec,
    method: Method,
    strikes: &[f64],
    grid: &GridSpec,
) -> Result<Vec<SkewPoint>> {
    if strikes.is_empty() {
        return Err(invalid("strike grid is empty"));
    }
    copula.validate()?;
    let setup = gaussian_marginals(model, mkt, grid)?;
    let quoter = CorrelationQuoter::new(mkt, grid, copula.order)?;
    let (lo, hi) = support(quoter.marginals(), mkt);
    if let Some(k) = strikes.iter().find(|k| !(**k > lo && **k < hi)) {
        return Err(invalid(format!("strike {k} lies outside the marginal support [{lo:.6}, {hi:.6}]")));
    }
    let forward = underlying_forward(mkt, model, copula, &setup.marginals)?;
    let annuity = mkt.annuities.underlying();

    strikes
        .par_iter()
        .map(|&strike| {
            let trade = template.with_strike(strike);
            let price = match method {
                Method::Quadrature => price_quadrature(&trade, mkt, model, copula, &setup.marginals)?,
                Method::MonteCarlo => price_mc(&trade, mkt, model, copula, &setup.marginals)?,
            }
            .price;
            let implied = quoter.implied_correlation(price, &trade)?;
            let vol = implied_normal_vol(price, forward, strike, annuity, trade.notional, trade.side)
                .ok()
                .map(|sd| sd / trade.expiry.sqrt());
            Ok(SkewPoint {
                strike,
                price,
                implied_normal_vol: vol,
                implied_correlation: implied.rho,
                bound: implied.bound,
            })
        })
        .collect()
}

/// Range of the frozen-weight midcurve rate over the marginal grids.
fn support(marginals: &Marginals, mkt: &MarketInputs) -> (f64, f64) {
    let a = &mkt.annuities;
    let (w1, w2) = (a.long() / a.underlying(), a.short() / a.underlying());
    let (xs, ys) = (marginals.short.grid(), marginals.long.grid());
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let (y_lo, y_hi) = (ys[0], ys[ys.len() - 1]);
    (w1 * y_lo - w2 * x_hi, w1 * y_hi - w2 * x_lo)
}
