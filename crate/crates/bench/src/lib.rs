//! Shared fixtures for the benchmarks under `benches/`: the 1y → 1y1y annual
//! market with a flat curve that puts the frozen-ratio forward at 1.8294%.

use midcurve_core::{
    annuity_triple, CalibrationInputs, DiscountCurve, MarketInputs, MidcurveTrade, Side,
};

pub const FWD_SHORT: f64 = 0.02631;
pub const FWD_LONG: f64 = 0.022347;
pub const ATM: f64 = 0.018294;

pub fn curve() -> DiscountCurve {
    let zero = ((FWD_LONG - ATM) / (FWD_SHORT - FWD_LONG)).ln();
    DiscountCurve::flat(zero, 10.0).expect("valid flat curve")
}

pub fn market() -> MarketInputs {
    let annuities = annuity_triple(&curve(), 1.0, 2.0, 3.0, 1).expect("valid schedule");
    MarketInputs::new(annuities, FWD_SHORT, FWD_LONG, 0.006, 0.006418, 0.8).expect("valid market")
}

pub fn trade(strike: f64) -> MidcurveTrade {
    MidcurveTrade::new(1.0, 2.0, 3.0, strike, 1.0, Side::Receiver).expect("valid trade")
}

pub fn calibration_inputs() -> CalibrationInputs {
    CalibrationInputs::from_curve(&curve(), 1.0, 2.0, 3.0, 1, 0.006, 0.006418, 0.8)
        .expect("valid calibration inputs")
        .with_forwards(FWD_SHORT, FWD_LONG)
}

/// Strikes at ATM ± `half_bp` in `step_bp` steps.
pub fn strikes(half_bp: i32, step_bp: i32) -> Vec<f64> {
    (-half_bp / step_bp..=half_bp / step_bp).map(|i| ATM + f64::from(i * step_bp) * 1e-4).collect()
}
