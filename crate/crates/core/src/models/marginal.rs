//! Gridded marginal densities of the short and long rates, and the measure
//! change that carries them into the underlying-annuity measure.
//!
//! A [`Marginal`] is a piecewise-linear density on a fixed grid; its CDF is the
//! exact integral of that density, so quantiles are solved in closed form
//! inside each cell.

use std::fmt;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::implied::receiver_value;
use crate::normal;

use super::{AnnuityModel, MarketInputs, ModelCoefficients, ModelKind};

/// Annuity measure a marginal lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    ShortAnnuity,
    LongAnnuity,
    UnderlyingAnnuity,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::ShortAnnuity => "short-annuity",
            Measure::LongAnnuity => "long-annuity",
            Measure::UnderlyingAnnuity => "underlying-annuity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    Short,
    Long,
}

impl Leg {
    pub fn natural_measure(self) -> Measure {
        match self {
            Leg::Short => Measure::ShortAnnuity,
            Leg::Long => Measure::LongAnnuity,
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Short => "short",
            Leg::Long => "long",
        })
    }
}

/// Grid layout: `nodes` equally spaced points over `fwd ± half_width·Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 8.0, nodes: 801 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 11 {
            return Err(invalid(format!("grid needs at least 11 nodes, got {}", self.nodes)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("grid half-width must be positive"));
        }
        let uncovered = 2.0 * normal::cdf(-self.half_width);
        if uncovered > 1e-6 {
            return Err(invalid(format!(
                "grid ±{}σ covers only {:.8} of the Gaussian mass",
                self.half_width,
                1.0 - uncovered
            )));
        }
        Ok(())
    }

    fn points(&self, center: f64, stdev: f64) -> Vec<f64> {
        let lo = center - self.half_width * stdev;
        let step = 2.0 * self.half_width * stdev / (self.nodes - 1) as f64;
        (0..self.nodes).map(|i| lo + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    survival: Vec<f64>,
    measure: Measure,
    mean: f64,
    raw_mass: f64,
}

impl Marginal {
    /// Normalizes `density` to unit mass on `grid`.
    pub fn from_density(grid: Vec<f64>, density: Vec<f64>, measure: Measure) -> Result<Self> {
        if grid.len() < 3 || grid.len() != density.len() {
            return Err(invalid("marginal needs matching grid and density of length >= 3"));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("marginal grid must be finite and strictly increasing"));
        }
        if let Some(i) = density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid(format!(
                "density must be finite and non-negative (node {i}, value {})",
                density[i]
            )));
        }
        let raw_mass = trapezoid(&grid, &density);
        if !(raw_mass > 0.0) {
            return Err(invalid("density has no mass"));
        }
        let density: Vec<f64> = density.iter().map(|d| d / raw_mass).collect();

        let n = grid.len();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + cell_mass(&grid, &density, i - 1);
        }
        let mut survival = vec![0.0; n];
        for i in (0..n - 1).rev() {
            survival[i] = survival[i + 1] + cell_mass(&grid, &density, i);
        }
        let weighted: Vec<f64> = grid.iter().zip(&density).map(|(x, d)| x * d).collect();
        let mean = trapezoid(&grid, &weighted);
        Ok(Self { grid, density, cdf, survival, measure, mean, raw_mass })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Trapezoidal mass of the density handed to [`Marginal::from_density`].
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn variance(&self) -> f64 {
        let sq: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(x, d)| (x - self.mean).powi(2) * d)
            .collect();
        trapezoid(&self.grid, &sq)
    }

    /// Density by linear interpolation, zero outside the grid.
    pub fn pdf_at(&self, x: f64) -> f64 {
        match self.cell_of(x) {
            Some(i) => {
                let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
                self.density[i] + t * (self.density[i + 1] - self.density[i])
            }
            None if x == *self.grid.last().expect("non-empty") => *self.density.last().unwrap(),
            None => 0.0,
        }
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        match self.cell_of(x) {
            Some(i) => {
                let h = self.grid[i + 1] - self.grid[i];
                let t = x - self.grid[i];
                let (f0, f1) = (self.density[i], self.density[i + 1]);
                (self.cdf[i] + f0 * t + (f1 - f0) * t * t / (2.0 * h)).min(1.0)
            }
            None => 1.0,
        }
    }

    /// Smallest `x` with `cdf(x) = p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.grid.len();
        if !(p > 0.0) {
            return self.grid[0];
        }
        if p >= self.cdf[n - 1] {
            return self.grid[n - 1];
        }
        let j = self.cdf.partition_point(|&c| c < p);
        let i = j - 1;
        let h = self.grid[j] - self.grid[i];
        let t = solve_cell(p - self.cdf[i], self.density[i], self.density[j], h);
        self.grid[i] + t
    }

    /// `x` with upper-tail mass `q`; keeps precision for `q` near zero.
    pub fn quantile_upper(&self, q: f64) -> f64 {
        let n = self.grid.len();
        if !(q > 0.0) {
            return self.grid[n - 1];
        }
        if q >= self.survival[0] {
            return self.grid[0];
        }
        let j = self.survival.partition_point(|&s| s > q);
        let i = j - 1;
        let h = self.grid[j] - self.grid[i];
        let s = solve_cell(q - self.survival[j], self.density[j], self.density[i], h);
        self.grid[j] - s
    }

    /// `cdf⁻¹(Φ(u))`.
    #[inline]
    pub fn quantile_normal(&self, u: f64) -> f64 {
        if u <= 0.0 {
            self.quantile(normal::cdf(u))
        } else {
            self.quantile_upper(normal::cdf(-u))
        }
    }

    /// `Φ⁻¹(cdf)` at each grid node, taken from the nearer tail.
    pub fn normal_scores(&self) -> Vec<f64> {
        self.cdf
            .iter()
            .zip(&self.survival)
            .map(|(&c, &q)| if c <= 0.5 { normal::inverse_cdf(c) } else { normal::inverse_survival(q) })
            .collect()
    }

    /// Fails if the CDF is flat strictly inside the support.
    pub fn check_invertible(&self) -> Result<()> {
        let n = self.grid.len();
        let masses: Vec<f64> = (0..n - 1).map(|i| cell_mass(&self.grid, &self.density, i)).collect();
        let first = masses.iter().position(|&m| m > 0.0);
        let last = masses.iter().rposition(|&m| m > 0.0);
        if let (Some(a), Some(b)) = (first, last) {
            if let Some(k) = (a..=b).find(|&k| masses[k] <= 0.0) {
                return Err(Error::InvalidMarginal(format!(
                    "CDF is flat on [{}, {}] inside the support",
                    self.grid[k],
                    self.grid[k + 1]
                )));
            }
        }
        Ok(())
    }

    fn cell_of(&self, x: f64) -> Option<usize> {
        let n = self.grid.len();
        if !(x >= self.grid[0] && x < self.grid[n - 1]) {
            return None;
        }
        Some(self.grid.partition_point(|&g| g <= x) - 1)
    }
}

fn cell_mass(grid: &[f64], density: &[f64], i: usize) -> f64 {
    0.5 * (grid[i + 1] - grid[i]) * (density[i] + density[i + 1])
}

pub(crate) fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    (0..grid.len() - 1).map(|i| cell_mass(grid, values, i)).sum()
}

/// Offset `t ∈ [0, h]` from the near node at which a linear density
/// `f_near → f_far` accumulates `delta`.
#[inline]
fn solve_cell(delta: f64, f_near: f64, f_far: f64, h: f64) -> f64 {
    let delta = delta.max(0.0);
    let a = (f_far - f_near) / (2.0 * h);
    let disc = (f_near * f_near + 4.0 * a * delta).max(0.0);
    let denom = f_near + disc.sqrt();
    let t = if denom > 0.0 { 2.0 * delta / denom } else { h };
    t.clamp(0.0, h)
}

/// Normal density with mean `fwd` and standard deviation `stdev` on `fwd ± k·stdev`.
pub fn flat_normal_marginal(
    fwd: f64,
    stdev: f64,
    measure: Measure,
    grid: &GridSpec,
) -> Result<Marginal> {
    ensure_finite(fwd, "forward")?;
    if !(stdev > 0.0 && stdev.is_finite()) {
        return Err(invalid(format!("standard deviation must be positive, got {stdev}")));
    }
    grid.validate()?;
    let xs = grid.points(fwd, stdev);
    let density = xs.iter().map(|x| normal::pdf((x - fwd) / stdev) / stdev).collect();
    Marginal::from_density(xs, density, measure)
}

/// Risk-neutral density from normal vols quoted by strike.
///
/// Receiver prices (unit annuity and notional) are differentiated twice in
/// strike on the output grid. Vols are interpolated by a clamped cubic spline
/// with zero end slopes and held flat outside the quoted strikes.
pub fn marginal_from_smile(
    strikes: &[f64],
    vols: &[f64],
    fwd: f64,
    expiry: f64,
    measure: Measure,
    grid: &GridSpec,
) -> Result<Marginal> {
    if strikes.len() < 5 || strikes.len() != vols.len() {
        return Err(invalid("smile needs at least 5 strikes with one vol each"));
    }
    if strikes.iter().any(|k| !k.is_finite()) || strikes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("smile strikes must increase strictly"));
    }
    if vols.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("smile vols must be positive"));
    }
    ensure_finite(fwd, "forward")?;
    if !(expiry > 0.0 && expiry.is_finite()) {
        return Err(invalid("expiry must be positive"));
    }
    grid.validate()?;

    let spline = ClampedSpline::new(strikes, vols);
    let root_t = expiry.sqrt();
    let widest = vols.iter().copied().fold(0.0, f64::max) * root_t;
    let xs = grid.points(fwd, widest);
    let h = xs[1] - xs[0];
    let price = |k: f64| receiver_value(fwd, k, spline.eval(k) * root_t);

    let mut density = Vec::with_capacity(xs.len());
    let (mut prev, mut cur) = (price(xs[0] - h), price(xs[0]));
    for (i, &x) in xs.iter().enumerate() {
        let next = if i + 1 < xs.len() { price(xs[i + 1]) } else { price(x + h) };
        density.push((next - 2.0 * cur + prev) / (h * h));
        prev = cur;
        cur = next;
    }
    let peak = density.iter().copied().fold(0.0, f64::max);
    if let Some((i, &d)) = density
        .iter()
        .enumerate()
        .find(|&(_, &d)| d < -1e-6 * peak.max(1.0))
    {
        return Err(Error::Arbitrage { strike: xs[i], density: d });
    }
    let density = density.into_iter().map(|d| d.max(0.0)).collect();
    Marginal::from_density(xs, density, measure)
}

/// A tilted marginal and what the tilt did to the mass.
#[derive(Debug, Clone)]
pub struct TiltOutcome {
    pub marginal: Marginal,
    /// Mass removed by flooring a negative linear factor at zero.
    pub clipped_mass: f64,
}

impl TiltOutcome {
    pub fn clipped(&self) -> bool {
        self.clipped_mass > 0.0
    }
}

/// Moves a natural-measure marginal into the underlying-annuity measure.
///
/// The factor multiplying the density is the conditional expectation of the
/// annuity ratio given the leg's rate, in the Gaussian projection:
/// linear `1 − c·(r − R0)` or exponential `e^{−(cΣ)²/2 − c·(r − R0)}` with
/// `c = ν_s + ν_e ρ Σ_e/Σ_s` on the short leg and `c = μ_e + μ_s ρ Σ_s/Σ_e` on
/// the long leg.
pub fn tilt_marginal(
    model: &AnnuityModel,
    coeffs: &ModelCoefficients,
    mkt: &MarketInputs,
    marginal: &Marginal,
    leg: Leg,
) -> Result<TiltOutcome> {
    if marginal.measure() != leg.natural_measure() {
        return Err(Error::Contract(format!(
            "{leg} leg tilt expects a {} marginal, got {}",
            leg.natural_measure(),
            marginal.measure()
        )));
    }
    if model.kind() == ModelKind::Deterministic {
        let mut same = marginal.clone();
        same.measure = Measure::UnderlyingAnnuity;
        return Ok(TiltOutcome { marginal: same, clipped_mass: 0.0 });
    }
    let (sig_s, sig_e, rho) = (mkt.stdev_short, mkt.stdev_long, mkt.rho);
    let (slope, center, stdev) = match leg {
        Leg::Short => (coeffs.nu_s + coeffs.nu_e * rho * sig_e / sig_s, mkt.fwd_short, sig_s),
        Leg::Long => (coeffs.mu_e + coeffs.mu_s * rho * sig_s / sig_e, mkt.fwd_long, sig_e),
    };
    let grid = marginal.grid().to_vec();
    let mut clipped_mass = 0.0;
    let density: Vec<f64> = match model.kind() {
        ModelKind::Deterministic => unreachable!("handled above"),
        ModelKind::Linear => {
            let raw: Vec<f64> = grid
                .iter()
                .zip(marginal.density())
                .map(|(x, f)| f * (1.0 - slope * (x - center)))
                .collect();
            let negative: Vec<f64> = raw.iter().map(|g| (-g).max(0.0)).collect();
            clipped_mass = trapezoid(&grid, &negative);
            raw.into_iter().map(|g| g.max(0.0)).collect()
        }
        ModelKind::LogLinear => {
            let norm = (-0.5 * (slope * stdev).powi(2)).exp();
            grid.iter()
                .zip(marginal.density())
                .map(|(x, f)| f * norm * (-slope * (x - center)).exp())
                .collect()
        }
    };
    let tilted = Marginal::from_density(grid, density, Measure::UnderlyingAnnuity)?;
    Ok(TiltOutcome { marginal: tilted, clipped_mass })
}

/// Cubic spline with zero first derivative at both ends, flat outside.
struct ClampedSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl ClampedSpline {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        // tridiagonal system for the second derivatives
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * slope[0];
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = -6.0 * slope[n - 2];
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        Self { xs: xs.to_vec(), ys: ys.to_vec(), m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::AnnuityTriple;
    use crate::models::coefficients;
    use approx::assert_relative_eq;

    fn reference_market() -> MarketInputs {
        let annuities = AnnuityTriple::new(0.95, 1.88, 1.88 - 0.95).unwrap();
        MarketInputs::new(annuities, 0.02631, 0.022347, 0.0060, 0.006418, 0.8).unwrap()
    }

    fn natural(mkt: &MarketInputs, leg: Leg) -> Marginal {
        let (fwd, sd) = match leg {
            Leg::Short => (mkt.fwd_short, mkt.stdev_short),
            Leg::Long => (mkt.fwd_long, mkt.stdev_long),
        };
        flat_normal_marginal(fwd, sd, leg.natural_measure(), &GridSpec::default()).unwrap()
    }

    #[test]
    fn normal_marginal_peak_and_median() {
        let m = flat_normal_marginal(0.02631, 0.006, Measure::ShortAnnuity, &GridSpec::default())
            .unwrap();
        assert_relative_eq!(m.pdf_at(0.02631), 66.490_380_066_905_46, max_relative = 1e-9);
        assert!((m.cdf_at(0.02631) - 0.5).abs() < 1e-12);
        assert!((m.mean() - 0.02631).abs() < 1e-15);
        let std = flat_normal_marginal(0.0, 1.0, Measure::ShortAnnuity, &GridSpec::default()).unwrap();
        assert_relative_eq!(std.pdf_at(1.0), 0.241_970_724_519_143_37, max_relative = 1e-9);
    }

    #[test]
    fn marginal_invariants_hold() {
        let m = flat_normal_marginal(0.01, 0.004, Measure::LongAnnuity, &GridSpec::default()).unwrap();
        assert!((trapezoid(m.grid(), m.density()) - 1.0).abs() < 1e-12);
        assert!(m.cdf()[0] <= 1e-6);
        assert!(*m.cdf().last().unwrap() >= 1.0 - 1e-6);
        assert!(m.cdf().windows(2).all(|w| w[1] >= w[0]));
        assert!(m.density().iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn narrow_grid_rejected() {
        let g = GridSpec { half_width: 4.0, nodes: 201 };
        assert!(flat_normal_marginal(0.0, 1.0, Measure::ShortAnnuity, &g).is_err());
        let g = GridSpec { half_width: 8.0, nodes: 5 };
        assert!(flat_normal_marginal(0.0, 1.0, Measure::ShortAnnuity, &g).is_err());
    }

    #[test]
    fn quantiles_invert_cdf() {
        let m = flat_normal_marginal(0.0, 1.0, Measure::ShortAnnuity, &GridSpec::default()).unwrap();
        for &p in &[1e-9, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = m.quantile(p);
            assert!((m.cdf_at(x) - p).abs() < 1e-12, "p={p}");
        }
        assert!((m.quantile_normal(1.0) - 1.0).abs() < 1e-4);
        assert!((m.quantile_normal(-2.0) + 2.0).abs() < 1e-4);
        assert!((m.quantile_normal(3.0) - m.quantile(normal::cdf(3.0))).abs() < 1e-9);
        assert_eq!(m.quantile_normal(-40.0), m.grid()[0]);
        assert_eq!(m.quantile_normal(40.0), *m.grid().last().unwrap());
    }

    #[test]
    fn deterministic_tilt_is_identity() {
        let mkt = reference_market();
        let model = AnnuityModel::deterministic();
        let c = coefficients(&model, &mkt).unwrap();
        let nat = natural(&mkt, Leg::Short);
        let out = tilt_marginal(&model, &c, &mkt, &nat, Leg::Short).unwrap();
        assert_eq!(out.marginal.density(), nat.density());
        assert_eq!(out.marginal.measure(), Measure::UnderlyingAnnuity);
        assert_eq!(out.clipped_mass, 0.0);
    }

    #[test]
    fn linear_tilt_moves_mean_to_adjusted_forward() {
        let mkt = reference_market();
        let model = AnnuityModel::linear(2.0, -1.0);
        let c = coefficients(&model, &mkt).unwrap();
        let out = tilt_marginal(&model, &c, &mkt, &natural(&mkt, Leg::Short), Leg::Short).unwrap();
        assert!((out.marginal.mean() - 0.026_284_926_416_842_1).abs() < 1e-10);
        assert!((out.marginal.raw_mass() - 1.0).abs() < 1e-10);
        assert!(!out.clipped());
    }

    #[test]
    fn loglinear_tilt_keeps_mass() {
        let mkt = reference_market();
        let model = AnnuityModel::log_linear(2.0, -1.0);
        let c = coefficients(&model, &mkt).unwrap();
        for leg in [Leg::Short, Leg::Long] {
            let out = tilt_marginal(&model, &c, &mkt, &natural(&mkt, leg), leg).unwrap();
            assert!((out.marginal.raw_mass() - 1.0).abs() < 1e-8);
            let hat = if leg == Leg::Short { c.hat_short } else { c.hat_long };
            assert!((out.marginal.mean() - hat).abs() < 1e-10);
        }
    }

    #[test]
    fn tilt_rejects_wrong_measure() {
        let mkt = reference_market();
        let model = AnnuityModel::linear(2.0, -1.0);
        let c = coefficients(&model, &mkt).unwrap();
        let err = tilt_marginal(&model, &c, &mkt, &natural(&mkt, Leg::Long), Leg::Short).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn linear_tilt_clips_negative_factor() {
        let mkt = reference_market();
        let model = AnnuityModel::linear(400.0, -200.0);
        let c = coefficients(&model, &mkt).unwrap();
        let out = tilt_marginal(&model, &c, &mkt, &natural(&mkt, Leg::Short), Leg::Short).unwrap();
        assert!(out.clipped());
        assert!(out.marginal.density().iter().all(|&d| d >= 0.0));
        assert!((trapezoid(out.marginal.grid(), out.marginal.density()) - 1.0).abs() < 1e-12);
        out.marginal.check_invertible().unwrap();
    }

    #[test]
    fn smile_flat_vol_recovers_normal() {
        let strikes: Vec<f64> = (0..9).map(|i| 0.0 + 0.0075 * i as f64).collect();
        let vols = vec![0.0060; strikes.len()];
        let g = GridSpec::default();
        let m = marginal_from_smile(&strikes, &vols, 0.02631, 1.0, Measure::ShortAnnuity, &g).unwrap();
        let reference = flat_normal_marginal(0.02631, 0.006, Measure::ShortAnnuity, &g).unwrap();
        let peak = reference.density().iter().copied().fold(0.0, f64::max);
        let err = m
            .density()
            .iter()
            .zip(reference.density())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err / peak < 1e-4, "sup rel error {}", err / peak);
    }

    #[test]
    fn smile_translation_equivariant() {
        let strikes: Vec<f64> = (0..7).map(|i| 0.01 + 0.005 * i as f64).collect();
        let vols = [0.0075, 0.0068, 0.0062, 0.0060, 0.0061, 0.0064, 0.0069];
        let shift = 0.004;
        let shifted: Vec<f64> = strikes.iter().map(|k| k + shift).collect();
        let g = GridSpec::default();
        let a = marginal_from_smile(&strikes, &vols, 0.025, 1.0, Measure::LongAnnuity, &g).unwrap();
        let b = marginal_from_smile(&shifted, &vols, 0.025 + shift, 1.0, Measure::LongAnnuity, &g).unwrap();
        for (x, d) in a.grid().iter().zip(a.density()).step_by(40) {
            assert!((b.pdf_at(x + shift) - d).abs() < 1e-6 * d.max(1.0));
        }
    }

    #[test]
    fn smile_arbitrage_detected() {
        // vol ramps steeply with strike over a narrow window
        let strikes = [0.00, 0.01, 0.02, 0.0225, 0.025, 0.03, 0.04];
        let vols = [0.0020, 0.0020, 0.0020, 0.0100, 0.0180, 0.0180, 0.0180];
        let err = marginal_from_smile(&strikes, &vols, 0.02, 1.0, Measure::ShortAnnuity, &GridSpec::default())
            .unwrap_err();
        assert!(matches!(err, Error::Arbitrage { .. }), "{err:?}");
    }

    #[test]
    fn smile_input_validation() {
        let g = GridSpec::default();
        assert!(marginal_from_smile(&[0.01, 0.02], &[0.006, 0.006], 0.02, 1.0, Measure::ShortAnnuity, &g).is_err());
        let strikes = [0.01, 0.02, 0.03, 0.04, 0.05];
        assert!(marginal_from_smile(&strikes, &[0.006, 0.0, 0.006, 0.006, 0.006], 0.02, 1.0, Measure::ShortAnnuity, &g).is_err());
    }

    #[test]
    fn flat_cdf_inside_support_rejected() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let mut density = vec![1.0; 11];
        density[4] = 0.0;
        density[5] = 0.0;
        let m = Marginal::from_density(grid, density, Measure::UnderlyingAnnuity).unwrap();
        assert!(matches!(m.check_invertible(), Err(Error::InvalidMarginal(_))));
    }
}
