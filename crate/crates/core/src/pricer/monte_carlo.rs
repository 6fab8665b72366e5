//! Monte Carlo over the copula normals.
//!
//! Paths are generated in fixed-size chunks; chunk `c` draws from the ChaCha
//! stream `c` of the seed, and chunk statistics are merged in chunk order, so
//! the estimate depends on `(seed, paths)` only.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{CopulaIntegrator, CopulaSpec, Marginals, Method, MidcurveTrade, PricingResult, Side, MIN_PATHS};
use crate::error::{invalid, Result};
use crate::models::{coefficients, AnnuityModel, MarketInputs, Weights};

pub const CHUNK_PATHS: usize = 16_384;

/// Count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }
}

pub fn price_mc(
    trade: &MidcurveTrade,
    mkt: &MarketInputs,
    model: &AnnuityModel,
    copula: &CopulaSpec,
    marginals: &Marginals,
) -> Result<PricingResult> {
    trade.validate()?;
    copula.validate()?;
    marginals.check()?;
    if copula.paths < MIN_PATHS {
        return Err(invalid(format!(
            "Monte Carlo needs at least {MIN_PATHS} paths, got {}",
            copula.paths
        )));
    }
    let weights = Weights::new(model, &coefficients(model, mkt)?, mkt);
    let integrator = CopulaIntegrator::new(&marginals.short, &marginals.long, copula.rho, copula.order)?;
    let strike = trade.strike;
    let chunks = copula.paths.div_ceil(CHUNK_PATHS);

    let run_chunk = |c: usize| -> Moments {
        let mut rng = ChaCha8Rng::seed_from_u64(copula.seed);
        rng.set_stream(c as u64);
        let n = CHUNK_PATHS.min(copula.paths - c * CHUNK_PATHS);
        let mut m = Moments::default();
        for _ in 0..n {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let (x, y) = integrator.transform(u, v);
            m.push((strike - weights.underlying_rate(x, y)).max(0.0));
        }
        m
    };

    let per_chunk: Vec<Moments> = match copula.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect()),
        None => (0..chunks).into_par_iter().map(run_chunk).collect(),
    };
    let total = per_chunk.into_iter().fold(Moments::default(), Moments::merge);

    let scale = mkt.annuities.underlying() * trade.notional;
    let variance = total.m2 / (total.n - 1.0);
    let std_error = scale * (variance / total.n).sqrt();

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("paths".to_string(), total.n);
    diagnostics.insert("chunks".to_string(), chunks as f64);
    let undiscounted = match trade.side {
        Side::Receiver => total.mean,
        Side::Payer => {
            let fwd = integrator.expect_smooth(|x, y| weights.underlying_rate(x, y));
            diagnostics.insert("forward".to_string(), fwd);
            total.mean - (strike - fwd)
        }
    };
    Ok(PricingResult {
        price: (scale * undiscounted).max(0.0),
        std_error,
        method: Method::MonteCarlo,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert!((merged.mean - all.mean).abs() < 1e-14);
        assert!((merged.m2 / all.m2 - 1.0).abs() < 1e-12);
    }
}
