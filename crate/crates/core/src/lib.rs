//! Midcurve swaption pricing with stochastic annuity ratios.
//!
//! A midcurve swaption on `T_s → T_e` expiring at `T_x` is an option on
//! `w1·R_e − w2·R_s`, a weighted spread of the co-initial long and short
//! swap rates. This crate
//!
//! * builds curves and annuities ([`curve`]),
//! * models the annuity ratios as deterministic, linear or log-linear
//!   functions of the two rates and moves the rate marginals into the
//!   underlying annuity measure ([`models`]),
//! * prices the spread option under a Gaussian copula ([`pricer`]),
//! * quotes prices as Bachelier vols and implied correlations ([`implied`]),
//! * estimates the ratio loadings from a single-driver annuity mapping
//!   ([`calibration`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod curve;
mod error;
pub mod implied;
pub mod models;
pub mod normal;
pub mod pricer;
pub mod quadrature;
pub mod solver;

pub use calibration::{
    annuities_of_driver, drift_recursion, estimate_sigmas, loadings, CalibrationInputs, CovarianceEstimates, Driver,
    DriverMapping, SigmaEstimate,
};
pub use curve::{annuity, annuity_triple, forward_swap_rate, AnnuityTriple, DiscountCurve, SwapSchedule};
pub use error::{Error, Result};
pub use implied::{
    bachelier_price, correlation_skew_curve, implied_correlation, implied_normal_vol, CorrelationBound,
    CorrelationQuoter, ImpliedCorrelation, SkewPoint, RHO_LIMIT,
};
pub use models::{
    coefficients, flat_normal_marginal, marginal_from_smile, tilt_marginal, weights, AnnuityModel, GridSpec, Leg,
    MarketInputs, Marginal, Measure, ModelCoefficients, ModelKind, TiltOutcome, Weights,
};
pub use pricer::{
    gaussian_marginals, price_mc, price_quadrature, underlying_forward, CopulaSpec, GaussianSetup, Marginals,
    Method, MidcurveTrade, PricingResult, Side,
};
