//! Estimates the annuity-ratio loadings `(σ_e, σ_s)` from a single-driver
//! annuity mapping of the co-initial swap rates fixing at expiry.
//!
//! Every swap rate `R_i = R(T_x, T_x, T_i)` is tied to one standard normal
//! driver through `1 + τ_i R_i(Y) = (1 + τ_i R_i) e^{μ_i + ν_i Y}`. The long
//! rate's driver `Y` yields the covariance of `A_u/A_e` with `R_e`; the short
//! rate's driver `X` yields the covariance of `A_u/A_s` with `R_s`. Both feed
//! a 2×2 linear system in `(σ_e, σ_s)`.

use std::fmt;

use crate::curve::{periods_between, DiscountCurve};
use crate::error::{ensure_finite, invalid, Error, Result};

/// Drifts outside this interval are rejected.
const DRIFT_BOUND: f64 = 1.0;
/// Relative size of the determinant below which the system is singular.
const CONDITION_TOL: f64 = 1e-12;

/// `ν_i = τ_i/(1 + τ_i R_i) · ρ_i · Σ_i`.
pub fn loadings(accruals: &[f64], rates: &[f64], correlations: &[f64], stdevs: &[f64]) -> Result<Vec<f64>> {
    let n = accruals.len();
    if n == 0 || rates.len() != n || correlations.len() != n || stdevs.len() != n {
        return Err(invalid("loadings need equally sized, non-empty period vectors"));
    }
    (0..n)
        .map(|i| {
            let (tau, r, rho, sd) = (accruals[i], rates[i], correlations[i], stdevs[i]);
            ensure_finite(r, "period rate")?;
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(invalid(format!("accrual of period {} must be positive", i + 1)));
            }
            let growth = 1.0 + tau * r;
            if !(growth > 0.0) {
                return Err(invalid(format!("1 + τR is not positive in period {}", i + 1)));
            }
            if !(rho.abs() <= 1.0) {
                return Err(invalid(format!("correlation of period {} must lie in [-1, 1]", i + 1)));
            }
            if !(sd >= 0.0 && sd.is_finite()) {
                return Err(invalid(format!("stdev of period {} must be non-negative", i + 1)));
            }
            Ok(tau / growth * rho * sd)
        })
        .collect()
}

/// Solves `E[A_j] = A_j` for the drifts `μ_j`, one period at a time.
///
/// Each term of the `j`-th identity carries the factor `e^{−μ_j}`, so given
/// `μ_1 … μ_{j−1}` the drift is `ln(S_j / A_j)` with `S_j` the sum evaluated
/// at `μ_j = 0`.
pub fn drift_recursion(annuities: &[f64], accruals: &[f64], rates: &[f64], loadings: &[f64]) -> Result<Vec<f64>> {
    let n = annuities.len();
    if n == 0 || accruals.len() != n || rates.len() != n || loadings.len() != n {
        return Err(invalid("drift recursion needs equally sized, non-empty period vectors"));
    }
    if annuities.iter().any(|a| !(*a > 0.0 && a.is_finite())) || annuities.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("curve annuities must be positive and strictly increasing"));
    }
    let discount: Vec<f64> = accruals.iter().zip(rates).map(|(t, r)| 1.0 / (1.0 + t * r)).collect();
    if discount.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(invalid("1 + τR must be positive in every period"));
    }
    let mut drifts = Vec::with_capacity(n);
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..=j {
            let mu: f64 = drifts[i..j].iter().sum();
            let nu: f64 = loadings[i..=j].iter().sum();
            let product: f64 = discount[i..=j].iter().product();
            sum += accruals[i] * (-mu + 0.5 * nu * nu).exp() * product;
        }
        let mu = (sum / annuities[j]).ln();
        if !(mu.abs() <= DRIFT_BOUND) {
            return Err(Error::Calibration { period: j + 1 });
        }
        drifts.push(mu);
    }
    Ok(drifts)
}

/// Which rate the mapping's driver sits behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// `Y`, behind the long rate `R(T_x, T_x, T_e)`.
    Long,
    /// `X`, behind the short rate `R(T_x, T_x, T_s)`.
    Short,
}

impl fmt::Display for Driver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Driver::Long => "Y",
            Driver::Short => "X",
        })
    }
}

/// Single-driver mapping of the rates `R_1 … R_n` fixing at expiry.
///
/// Periods are numbered from 1; `annuity(j, ·)` is the annuity of the
/// `j`-period swap starting at expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverMapping {
    driver: Driver,
    accruals: Vec<f64>,
    rates: Vec<f64>,
    loadings: Vec<f64>,
    drifts: Vec<f64>,
    discount: Vec<f64>,
}

impl DriverMapping {
    /// Builds the mapping whose expected annuities match `annuities`.
    pub fn new(
        driver: Driver,
        accruals: &[f64],
        rates: &[f64],
        correlations: &[f64],
        stdevs: &[f64],
        annuities: &[f64],
    ) -> Result<Self> {
        let loadings = loadings(accruals, rates, correlations, stdevs)?;
        let drifts = drift_recursion(annuities, accruals, rates, &loadings)?;
        let discount = accruals.iter().zip(rates).map(|(t, r)| 1.0 / (1.0 + t * r)).collect();
        Ok(Self { driver, accruals: accruals.to_vec(), rates: rates.to_vec(), loadings, drifts, discount })
    }

    pub fn driver(&self) -> Driver {
        self.driver
    }

    pub fn periods(&self) -> usize {
        self.rates.len()
    }

    pub fn accruals(&self) -> &[f64] {
        &self.accruals
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn loadings(&self) -> &[f64] {
        &self.loadings
    }

    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    fn check_period(&self, j: usize) {
        assert!(j >= 1 && j <= self.periods(), "period {j} outside 1..={}", self.periods());
    }

    /// Annuity and its derivative in the driver for the `j`-period swap.
    pub fn annuity_with_slope(&self, j: usize, driver: f64) -> (f64, f64) {
        self.check_period(j);
        let (mut value, mut slope) = (0.0, 0.0);
        for i in 0..j {
            let (mut exponent, mut nu, mut product) = (0.0, 0.0, 1.0);
            for k in i..j {
                exponent += self.drifts[k] + self.loadings[k] * driver;
                nu += self.loadings[k];
                product *= self.discount[k];
            }
            let term = self.accruals[i] * (-exponent).exp() * product;
            value += term;
            slope -= nu * term;
        }
        (value, slope)
    }

    pub fn annuity(&self, j: usize, driver: f64) -> f64 {
        self.annuity_with_slope(j, driver).0
    }

    /// Expected annuity of the `j`-period swap over a standard normal driver.
    pub fn expected_annuity(&self, j: usize) -> f64 {
        self.check_period(j);
        (0..j)
            .map(|i| {
                let mu: f64 = self.drifts[i..j].iter().sum();
                let nu: f64 = self.loadings[i..j].iter().sum();
                let product: f64 = self.discount[i..j].iter().product();
                self.accruals[i] * (-mu + 0.5 * nu * nu).exp() * product
            })
            .sum()
    }

    /// Rate of period `i` as a function of the driver.
    pub fn rate(&self, i: usize, driver: f64) -> f64 {
        self.check_period(i);
        let k = i - 1;
        let tau = self.accruals[k];
        ((1.0 + tau * self.rates[k]) * (self.drifts[k] + self.loadings[k] * driver).exp() - 1.0) / tau
    }

    pub fn rate_slope(&self, i: usize, driver: f64) -> f64 {
        self.check_period(i);
        let k = i - 1;
        (1.0 + self.accruals[k] * self.rates[k]) * (self.drifts[k] + self.loadings[k] * driver).exp() * self.loadings[k]
            / self.accruals[k]
    }
}

/// `(A_short, A_long)` at a driver value, for swaps of `short` and `long` periods.
pub fn annuities_of_driver(mapping: &DriverMapping, driver: f64, short: usize, long: usize) -> (f64, f64) {
    (mapping.annuity(short, driver), mapping.annuity(long, driver))
}

/// Inputs to [`estimate_sigmas`], all on the periods `T_x → T_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInputs {
    pub accruals: Vec<f64>,
    /// Rates `R(T_x, T_x, T_i)`.
    pub rates: Vec<f64>,
    /// Terminal stdevs `Σ_i` of the period rates.
    pub stdevs: Vec<f64>,
    /// `ρ_{e,i}`: correlation of each rate with the long rate.
    pub corr_long: Vec<f64>,
    /// `ρ_{s,i}`: correlation of each rate with the short rate.
    pub corr_short: Vec<f64>,
    /// Annuities of the `j`-period swaps, in expiry-forward units.
    pub annuities: Vec<f64>,
    /// Number of periods in the short swap.
    pub short_periods: usize,
    pub stdev_short: f64,
    pub stdev_long: f64,
    pub rho: f64,
}

impl CalibrationInputs {
    /// Reads accruals, annuities and rates off `curve` for a regular leg.
    ///
    /// Period stdevs default to `stdev_short` up to the short swap's end and
    /// `stdev_long` beyond it; per-period correlations default to `rho`, with
    /// 1 for each driver's own rate.
    #[allow(clippy::too_many_arguments)]
    pub fn from_curve(
        curve: &DiscountCurve,
        expiry: f64,
        start: f64,
        end: f64,
        frequency: u32,
        stdev_short: f64,
        stdev_long: f64,
        rho: f64,
    ) -> Result<Self> {
        if frequency == 0 {
            return Err(invalid("payment frequency must be at least 1 per year"));
        }
        if !(expiry > 0.0 && expiry < start && start < end) {
            return Err(invalid(format!("need 0 < T_x < T_s < T_e, got {expiry}, {start}, {end}")));
        }
        let s = periods_between(expiry, start, frequency)?;
        let n = periods_between(expiry, end, frequency)?;
        let tau = 1.0 / f64::from(frequency);
        let dx = curve.df(expiry)?;
        let mut annuities = Vec::with_capacity(n);
        let mut rates = Vec::with_capacity(n);
        let mut running = 0.0;
        for i in 1..=n {
            let t = if i == n { end } else { expiry + i as f64 * tau };
            let d = curve.df(t)? / dx;
            running += tau * d;
            annuities.push(running);
            rates.push((1.0 - d) / running);
        }
        let stdevs = (1..=n).map(|i| if i <= s { stdev_short } else { stdev_long }).collect();
        let mut inputs = Self {
            accruals: vec![tau; n],
            rates,
            stdevs,
            corr_long: Vec::new(),
            corr_short: Vec::new(),
            annuities,
            short_periods: s,
            stdev_short,
            stdev_long,
            rho,
        };
        inputs = inputs.with_flat_correlations(rho, rho);
        inputs.validate()?;
        Ok(inputs)
    }

    /// Replaces the short and long rates with market forwards.
    pub fn with_forwards(mut self, short: f64, long: f64) -> Self {
        let s = self.short_periods;
        let e = self.rates.len();
        self.rates[s - 1] = short;
        self.rates[e - 1] = long;
        self
    }

    pub fn with_stdevs(mut self, stdevs: Vec<f64>) -> Self {
        self.stdevs = stdevs;
        self
    }

    /// Flat per-period correlations with each driver's own rate set to 1.
    pub fn with_flat_correlations(mut self, long: f64, short: f64) -> Self {
        let n = self.rates.len();
        let s = self.short_periods;
        self.corr_long = (1..=n).map(|i| if i == n { 1.0 } else { long }).collect();
        self.corr_short = (1..=n).map(|i| if i == s { 1.0 } else { short }).collect();
        self
    }

    pub fn long_periods(&self) -> usize {
        self.rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rates.len();
        if n < 2 {
            return Err(invalid("calibration needs at least two periods"));
        }
        if !(self.short_periods >= 1 && self.short_periods < n) {
            return Err(invalid(format!("short swap must span 1..{} periods, got {}", n - 1, self.short_periods)));
        }
        for (name, v) in [
            ("accruals", &self.accruals),
            ("stdevs", &self.stdevs),
            ("long correlations", &self.corr_long),
            ("short correlations", &self.corr_short),
            ("annuities", &self.annuities),
        ] {
            if v.len() != n {
                return Err(invalid(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        for (name, v) in [("stdev_short", self.stdev_short), ("stdev_long", self.stdev_long)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(invalid(format!("correlation must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    pub fn mapping(&self, driver: Driver) -> Result<DriverMapping> {
        let corr = match driver {
            Driver::Long => &self.corr_long,
            Driver::Short => &self.corr_short,
        };
        DriverMapping::new(driver, &self.accruals, &self.rates, corr, &self.stdevs, &self.annuities)
    }
}

/// Linearised covariances of the annuity ratios with their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimates {
    /// `Cov(A_u/A_e, R_e)` from the long driver.
    pub cov_e: f64,
    /// `Cov(A_u/A_s, R_s)` from the short driver.
    pub cov_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    pub sigma_e: f64,
    pub sigma_s: f64,
    pub covariances: CovarianceEstimates,
    pub long_mapping: DriverMapping,
    pub short_mapping: DriverMapping,
}

/// First-order covariances at the driver mean.
pub fn covariances(long: &DriverMapping, short: &DriverMapping, s: usize) -> CovarianceEstimates {
    let e = long.periods();
    let (a_s, da_s) = long.annuity_with_slope(s, 0.0);
    let (a_e, da_e) = long.annuity_with_slope(e, 0.0);
    // (A_e − A_s)/A_e = 1 − A_s/A_e
    let ratio_e = -(da_s * a_e - a_s * da_e) / (a_e * a_e);
    let cov_e = ratio_e * long.rate_slope(e, 0.0);

    let (a_s, da_s) = short.annuity_with_slope(s, 0.0);
    let (a_e, da_e) = short.annuity_with_slope(e, 0.0);
    // (A_e − A_s)/A_s = A_e/A_s − 1
    let ratio_s = (da_e * a_s - a_e * da_s) / (a_s * a_s);
    let cov_s = ratio_s * short.rate_slope(s, 0.0);
    CovarianceEstimates { cov_e, cov_s }
}

/// Solves the covariance system for `(σ_e, σ_s)`.
pub fn estimate_sigmas(inputs: &CalibrationInputs) -> Result<SigmaEstimate> {
    inputs.validate()?;
    let (long, short) = rayon::join(|| inputs.mapping(Driver::Long), || inputs.mapping(Driver::Short));
    let (long, short) = (long?, short?);
    let s = inputs.short_periods;
    let covs = covariances(&long, &short, s);

    let a_s = inputs.annuities[s - 1];
    let a_e = inputs.annuities[inputs.long_periods() - 1];
    let a_u = a_e - a_s;
    let rhs = [-covs.cov_e / (a_u / a_e).powi(2), -covs.cov_s / (a_u / a_s).powi(2)];
    let (se, ss, rho) = (inputs.stdev_long, inputs.stdev_short, inputs.rho);
    let m = [[se * se, rho * se * ss], [rho * se * ss, ss * ss]];
    let (sigma_e, sigma_s) = solve_2x2(m, rhs)?;
    Ok(SigmaEstimate { sigma_e, sigma_s, covariances: covs, long_mapping: long, short_mapping: short })
}

fn solve_2x2(m: [[f64; 2]; 2], b: [f64; 2]) -> Result<(f64, f64)> {
    if b == [0.0, 0.0] {
        return Ok((0.0, 0.0));
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|v| v * v).sum::<f64>();
    if !(det.abs() >= CONDITION_TOL * scale) || scale == 0.0 {
        return Err(Error::Conditioning { det, scale });
    }
    Ok(((b[0] * m[1][1] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn loading_example() {
        let nu = loadings(&[1.0], &[0.02631], &[1.0], &[0.006]).unwrap();
        assert_relative_eq!(nu[0], 0.005_846_186_824_643_626, max_relative = 1e-12);
        let nu = loadings(&[1.0, 1.0], &[0.02, 0.02], &[0.0, 1.0], &[0.006, 0.0]).unwrap();
        assert_eq!(nu, vec![0.0, 0.0]);
        assert!(loadings(&[1.0], &[-1.5], &[1.0], &[0.006]).is_err());
    }

    #[test]
    fn zero_vol_drifts_vanish() {
        let rates = [0.02, 0.025, 0.03];
        let mut annuities = Vec::new();
        let mut a = 0.0;
        for r in rates {
            a = (a + 1.0) / (1.0 + r);
            annuities.push(a);
        }
        let mu = drift_recursion(&annuities, &[1.0; 3], &rates, &[0.0; 3]).unwrap();
        assert!(mu.iter().all(|m| m.abs() < 1e-15), "{mu:?}");
    }

    #[test]
    fn single_period_closed_form() {
        let (a, r, nu) = (0.97, 0.026, 0.0058);
        let mu = drift_recursion(&[a], &[1.0], &[r], &[nu]).unwrap();
        assert_relative_eq!(mu[0], -(a * (1.0 + r)).ln() + 0.5 * nu * nu, epsilon = 1e-15);
    }

    #[test]
    fn drift_out_of_range() {
        let err = drift_recursion(&[0.9, 50.0], &[1.0, 1.0], &[0.02, 0.02], &[0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::Calibration { period: 2 });
    }

    #[test]
    fn slopes_match_differences() {
        let m = DriverMapping::new(
            Driver::Long,
            &[1.0, 0.5, 1.0],
            &[0.02, 0.025, 0.03],
            &[0.7, 0.9, 1.0],
            &[0.006, 0.007, 0.0065],
            &[0.98, 1.46, 2.40],
        )
        .unwrap();
        let h = 1e-6;
        for j in 1..=3 {
            let (_, slope) = m.annuity_with_slope(j, 0.3);
            let fd = (m.annuity(j, 0.3 + h) - m.annuity(j, 0.3 - h)) / (2.0 * h);
            assert_relative_eq!(slope, fd, max_relative = 1e-7);
            let fd = (m.rate(j, 0.3 + h) - m.rate(j, 0.3 - h)) / (2.0 * h);
            assert_relative_eq!(m.rate_slope(j, 0.3), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn zero_vols_give_zero_sigmas() {
        let curve = DiscountCurve::flat(0.02, 10.0).unwrap();
        let inputs = CalibrationInputs::from_curve(&curve, 1.0, 2.0, 3.0, 1, 0.0, 0.0, 0.8).unwrap();
        let est = estimate_sigmas(&inputs).unwrap();
        assert_eq!((est.sigma_e, est.sigma_s), (0.0, 0.0));
    }

    #[test]
    fn singular_system() {
        let m = [[1e-4, 1e-4], [1e-4, 1e-4]];
        assert!(matches!(solve_2x2(m, [1.0, 1.0]), Err(Error::Conditioning { .. })));
        let (x, y) = solve_2x2([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]).unwrap();
        assert_relative_eq!(x, 0.8, epsilon = 1e-15);
        assert_relative_eq!(y, 1.4, epsilon = 1e-15);
    }

    #[test]
    fn curve_rates_reproduce_annuities() {
        let curve = DiscountCurve::flat(0.03, 10.0).unwrap();
        let inputs = CalibrationInputs::from_curve(&curve, 1.0, 2.0, 4.0, 2, 0.006, 0.0064, 0.8).unwrap();
        assert_eq!(inputs.short_periods, 2);
        assert_eq!(inputs.long_periods(), 6);
        // A_j = Σ_i τ_i Π_{k≥i} 1/(1 + τ_k R_k)
        for j in 0..6 {
            let mut a = 0.0;
            for i in 0..=j {
                a = (a + inputs.accruals[i]) / (1.0 + inputs.accruals[i] * inputs.rates[i]);
            }
            assert_relative_eq!(a, inputs.annuities[j], max_relative = 1e-13);
        }
    }
}
