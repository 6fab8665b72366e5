use crate::error::Result;
use crate::models::Marginal;
use crate::normal;
use crate::quadrature::{GaussHermite, GaussLegendre};
use crate::solver::{brent, BrentOptions};

/// Inner normal axis is truncated to `±INNER_BOUND` (mass outside ~2e-17).
const INNER_BOUND: f64 = 8.5;
/// Sign scan resolution used to locate payoff kinks on the inner axis.
const SCAN_POINTS: usize = 64;
/// Longest Gauss–Legendre panel on the inner axis.
const MAX_PANEL: f64 = 0.25;
/// Gauss–Legendre points per inner panel.
const PANEL_ORDER: usize = 4;

/// Two-dimensional expectations under the Gaussian copula of two marginals.
///
/// The short rate is driven by `u`, the long rate by `ρu + √(1−ρ²)·v` with
/// `u, v` independent standard normals.
pub struct CopulaIntegrator<'a> {
    short: &'a Marginal,
    long: &'a Marginal,
    rho: f64,
    rho_bar: f64,
    long_scores: Vec<f64>,
    hermite: GaussHermite,
    legendre: GaussLegendre,
}

impl<'a> CopulaIntegrator<'a> {
    pub fn new(short: &'a Marginal, long: &'a Marginal, rho: f64, order: usize) -> Result<Self> {
        Ok(Self {
            short,
            long,
            rho,
            rho_bar: (1.0 - rho * rho).max(0.0).sqrt(),
            long_scores: long.normal_scores(),
            hermite: GaussHermite::new(order)?,
            legendre: GaussLegendre::new(PANEL_ORDER)?,
        })
    }

    /// Maps a pair of independent normals to `(x, y)`.
    #[inline]
    pub fn transform(&self, u: f64, v: f64) -> (f64, f64) {
        let x = self.short.quantile_normal(u);
        let y = self.long.quantile_normal(self.rho * u + self.rho_bar * v);
        (x, y)
    }

    /// `E[f(x, y)]` by tensor Gauss–Hermite; for smooth `f`.
    pub fn expect_smooth(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.hermite
            .iter()
            .map(|(u, wu)| {
                let x = self.short.quantile_normal(u);
                let inner: f64 = self
                    .hermite
                    .iter()
                    .map(|(v, wv)| wv * f(x, self.long.quantile_normal(self.rho * u + self.rho_bar * v)))
                    .sum();
                wu * inner
            })
            .sum()
    }

    /// `E[max(g(x, y), 0)]`.
    pub fn expect_positive_part(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        self.hermite
            .iter()
            .map(|(u, wu)| wu * self.conditional_positive_part(u, &g))
            .sum()
    }

    /// `E[max(g(x, y), 0) | u]`.
    ///
    /// The inner axis is split at payoff sign changes and at the images of
    /// the long grid nodes, so every panel sees a smooth integrand.
    pub fn conditional_positive_part(&self, u: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let x = self.short.quantile_normal(u);
        let shift = self.rho * u;
        let h = |v: f64| g(x, self.long.quantile_normal(shift + self.rho_bar * v));

        let step = 2.0 * INNER_BOUND / SCAN_POINTS as f64;
        let mut roots = Vec::new();
        let mut v_prev = -INNER_BOUND;
        let mut h_prev = h(v_prev);
        for k in 1..=SCAN_POINTS {
            let v = -INNER_BOUND + k as f64 * step;
            let hv = h(v);
            if (hv > 0.0) != (h_prev > 0.0) {
                let opts = BrentOptions { xtol: 1e-13, ..BrentOptions::default() };
                // a failed refinement falls back to the scan point; the kink
                // is then only resolved to the scan step
                let root = brent(&h, v_prev, v, opts).unwrap_or(v);
                roots.push(root);
            }
            v_prev = v;
            h_prev = hv;
        }

        let lo_score = shift - self.rho_bar * INNER_BOUND;
        let hi_score = shift + self.rho_bar * INNER_BOUND;
        let first = self.long_scores.partition_point(|&s| s <= lo_score);
        let last = self.long_scores.partition_point(|&s| s < hi_score);
        let nodes = self.long_scores[first..last].iter().map(|&s| (s - shift) / self.rho_bar);

        let mut breaks = Vec::with_capacity(last - first + roots.len() + 2);
        breaks.push(-INNER_BOUND);
        let mut roots = roots.into_iter().peekable();
        for node in nodes {
            while let Some(&r) = roots.peek() {
                if r >= node {
                    break;
                }
                breaks.push(r);
                roots.next();
            }
            breaks.push(node);
        }
        breaks.extend(roots);
        breaks.push(INNER_BOUND);

        let mut total = 0.0;
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a || h(0.5 * (a + b)) <= 0.0 {
                continue;
            }
            let panels = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
            let width = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * width;
                total += self
                    .legendre
                    .integrate(lo, lo + width, |v| h(v).max(0.0) * normal::pdf(v));
            }
        }
        total
    }
}
