//! The 1y→1y1y annual market used across the integration tests.
#![allow(dead_code)]

use midcurve_core::{
    annuity_triple, AnnuityTriple, DiscountCurve, GridSpec, MarketInputs, MidcurveTrade, Side,
};

pub const EXPIRY: f64 = 1.0;
pub const START: f64 = 2.0;
pub const END: f64 = 3.0;
pub const FWD_SHORT: f64 = 0.02631;
pub const FWD_LONG: f64 = 0.022347;
pub const VOL_SHORT: f64 = 0.0060;
pub const VOL_LONG: f64 = 0.006418;
pub const RHO: f64 = 0.8;
/// Quoted ATM midcurve rate.
pub const ATM_QUOTE: f64 = 0.018294;
pub const BP: f64 = 1e-4;

/// Flat continuously compounded zero rate whose annuity ratios put the
/// frozen-ratio midcurve forward on `ATM_QUOTE`.
///
/// With `D(t) = e^{−zt}` and annual periods, `A_s/A_u = e^z` and
/// `A_e/A_u = 1 + e^z`, so `F = (1 + e^z)R_e − e^z R_s`.
pub fn zero_rate() -> f64 {
    ((FWD_LONG - ATM_QUOTE) / (FWD_SHORT - FWD_LONG)).ln()
}

pub fn curve() -> DiscountCurve {
    DiscountCurve::flat(zero_rate(), 10.0).unwrap()
}

pub fn annuities() -> AnnuityTriple {
    annuity_triple(&curve(), EXPIRY, START, END, 1).unwrap()
}

pub fn market() -> MarketInputs {
    market_with(VOL_SHORT, VOL_LONG, RHO)
}

pub fn market_with(stdev_short: f64, stdev_long: f64, rho: f64) -> MarketInputs {
    MarketInputs::new(annuities(), FWD_SHORT, FWD_LONG, stdev_short, stdev_long, rho).unwrap()
}

pub fn trade(strike: f64, side: Side) -> MidcurveTrade {
    MidcurveTrade::new(EXPIRY, START, END, strike, 1.0, side).unwrap()
}

pub fn grid() -> GridSpec {
    GridSpec::default()
}

/// `centre ± half_width` in steps of `step`, all in bp.
pub fn strikes_around(centre: f64, half_width_bp: i32, step_bp: i32) -> Vec<f64> {
    (-half_width_bp / step_bp..=half_width_bp / step_bp).map(|i| centre + f64::from(i * step_bp) * BP).collect()
}
