//! Discount curves, fixed-leg schedules and annuities.
//!
//! Discount factors are interpolated log-linearly between pillars and
//! extrapolated flat-forward past the last pillar. Times are year fractions.

use crate::error::{ensure_finite, invalid, Error, Result};

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    times: Vec<f64>,
    log_dfs: Vec<f64>,
}

impl DiscountCurve {
    /// Builds a curve from `(time, discount factor)` pillars.
    ///
    /// A pillar at `t = 0` must carry `D = 1`; if absent it is inserted.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.is_empty() {
            return Err(invalid("discount curve needs at least one pillar"));
        }
        let mut times = Vec::with_capacity(pillars.len() + 1);
        let mut log_dfs = Vec::with_capacity(pillars.len() + 1);
        for (i, &(t, df)) in pillars.iter().enumerate() {
            ensure_finite(t, "pillar time")?;
            ensure_finite(df, "discount factor")?;
            if t < 0.0 {
                return Err(invalid(format!("pillar time {t} is negative")));
            }
            if df <= 0.0 {
                return Err(invalid(format!("discount factor {df} at t={t} is not positive")));
            }
            if i > 0 && t <= pillars[i - 1].0 {
                return Err(invalid(format!("pillar times must increase strictly (at t={t})")));
            }
            if t == 0.0 && (df - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("D(0) must equal 1, got {df}")));
            }
            times.push(t);
            log_dfs.push(if t == 0.0 { 0.0 } else { df.ln() });
        }
        if times[0] > 0.0 {
            times.insert(0, 0.0);
            log_dfs.insert(0, 0.0);
        }
        Ok(Self { times, log_dfs })
    }

    /// Flat continuously compounded zero rate, with a single pillar at `horizon`.
    pub fn flat(zero_rate: f64, horizon: f64) -> Result<Self> {
        ensure_finite(zero_rate, "zero rate")?;
        if !(horizon > 0.0) {
            return Err(invalid("flat curve horizon must be positive"));
        }
        Self::new(&[(0.0, 1.0), (horizon, (-zero_rate * horizon).exp())])
    }

    /// Parses the `t,df` text format: a header line, then one pair per line.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| invalid("curve file is empty"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "df"] {
            return Err(invalid(format!("curve header must be `t,df`, got `{header}`")));
        }
        let mut pillars = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut parts = line.split(',').map(str::trim);
            let (Some(t), Some(df), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(invalid(format!("curve row {} malformed: `{line}`", n + 1)));
            };
            let t: f64 = t
                .parse()
                .map_err(|_| invalid(format!("curve row {}: bad time `{t}`", n + 1)))?;
            let df: f64 = df
                .parse()
                .map_err(|_| invalid(format!("curve row {}: bad discount factor `{df}`", n + 1)))?;
            pillars.push((t, df));
        }
        Self::new(&pillars)
    }

    /// Pillars including the implicit `(0, 1)`.
    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.times.iter().zip(&self.log_dfs).map(|(&t, &l)| (t, l.exp())).collect()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Discount factor `D(t0, t)`.
    pub fn df(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(t));
        }
        let n = self.times.len();
        if n == 1 {
            return Ok(1.0);
        }
        let idx = match self.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => return Ok(self.log_dfs[i].exp()),
            Err(i) => i,
        };
        // beyond the last pillar: keep the last segment's forward rate
        let (lo, hi) = if idx >= n { (n - 2, n - 1) } else { (idx - 1, idx) };
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let (l0, l1) = (self.log_dfs[lo], self.log_dfs[hi]);
        let w = (t - t0) / (t1 - t0);
        Ok((l0 + w * (l1 - l0)).exp())
    }

    /// A curve with every discount factor multiplied by `factor`, except `D(0)`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid("scale factor must be positive"));
        }
        let pillars: Vec<(f64, f64)> = self
            .pillars()
            .into_iter()
            .filter(|&(t, _)| t > 0.0)
            .map(|(t, df)| (t, df * factor))
            .collect();
        Self::new(&pillars)
    }
}

/// Fixed leg of a swap observed from expiry `T_x`, running `start → end`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapSchedule {
    expiry: f64,
    start: f64,
    payment_times: Vec<f64>,
    accruals: Vec<f64>,
}

impl SwapSchedule {
    /// Regular schedule with `frequency` payments per year.
    pub fn regular(expiry: f64, start: f64, end: f64, frequency: u32) -> Result<Self> {
        if frequency == 0 {
            return Err(invalid("payment frequency must be at least 1 per year"));
        }
        let periods = periods_between(start, end, frequency)?;
        let step = 1.0 / f64::from(frequency);
        let mut payment_times: Vec<f64> = (1..=periods).map(|i| start + i as f64 * step).collect();
        *payment_times.last_mut().expect("at least one period") = end;
        let accruals = vec![step; periods];
        Self::from_payments(expiry, start, payment_times, accruals)
    }

    pub fn from_payments(
        expiry: f64,
        start: f64,
        payment_times: Vec<f64>,
        accruals: Vec<f64>,
    ) -> Result<Self> {
        ensure_finite(expiry, "expiry")?;
        ensure_finite(start, "start")?;
        if payment_times.is_empty() {
            return Err(invalid("schedule has no payments"));
        }
        if payment_times.len() != accruals.len() {
            return Err(invalid("payment times and accruals differ in length"));
        }
        let end = *payment_times.last().expect("non-empty");
        if !(expiry > 0.0 && expiry <= start && start < end) {
            return Err(invalid(format!(
                "schedule needs 0 < expiry <= start < end, got {expiry}, {start}, {end}"
            )));
        }
        if payment_times.iter().any(|t| !t.is_finite())
            || payment_times[0] <= start
            || payment_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid("payment times must increase strictly after the start date"));
        }
        if accruals.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(invalid("accrual fractions must be positive"));
        }
        Ok(Self { expiry, start, payment_times, accruals })
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        *self.payment_times.last().expect("non-empty")
    }

    pub fn payment_times(&self) -> &[f64] {
        &self.payment_times
    }

    pub fn accruals(&self) -> &[f64] {
        &self.accruals
    }
}

pub(crate) fn periods_between(start: f64, end: f64, frequency: u32) -> Result<usize> {
    let raw = (end - start) * f64::from(frequency);
    let rounded = raw.round();
    if !(raw.is_finite() && rounded >= 1.0 && (raw - rounded).abs() <= ALIGN_TOL) {
        return Err(invalid(format!(
            "interval {start}→{end} is not a whole number of periods at frequency {frequency}"
        )));
    }
    Ok(rounded as usize)
}

/// `Σ τ_i D(t0, T_i)`.
pub fn annuity(curve: &DiscountCurve, payment_times: &[f64], accruals: &[f64]) -> Result<f64> {
    if payment_times.is_empty() {
        return Err(invalid("annuity of an empty schedule"));
    }
    if payment_times.len() != accruals.len() {
        return Err(invalid("payment times and accruals differ in length"));
    }
    payment_times
        .iter()
        .zip(accruals)
        .map(|(&t, &tau)| curve.df(t).map(|d| tau * d))
        .sum()
}

/// Par rate of the fixed-vs-floating swap on `schedule`: `(D(start) − D(end)) / annuity`.
pub fn forward_swap_rate(curve: &DiscountCurve, schedule: &SwapSchedule) -> Result<f64> {
    let level = annuity(curve, schedule.payment_times(), schedule.accruals())?;
    if level == 0.0 {
        return Err(Error::Arithmetic("zero annuity".into()));
    }
    Ok((curve.df(schedule.start())? - curve.df(schedule.end())?) / level)
}

/// Today's annuities of the short `(T_x→T_s)`, long `(T_x→T_e)` and underlying
/// `(T_s→T_e)` swaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnuityTriple {
    short: f64,
    long: f64,
    underlying: f64,
}

impl AnnuityTriple {
    pub fn new(short: f64, long: f64, underlying: f64) -> Result<Self> {
        for (v, name) in [(short, "short"), (long, "long"), (underlying, "underlying")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} annuity must be positive, got {v}")));
            }
        }
        if ((long - short) - underlying).abs() > 1e-12 * long {
            return Err(invalid(format!(
                "annuities violate A_u = A_e - A_s: {underlying} vs {long} - {short}"
            )));
        }
        Ok(Self { short, long, underlying })
    }

    pub fn short(&self) -> f64 {
        self.short
    }

    pub fn long(&self) -> f64 {
        self.long
    }

    pub fn underlying(&self) -> f64 {
        self.underlying
    }
}

/// Annuity triple for a midcurve `T_x → (T_s, T_e)` on a regular fixed leg.
pub fn annuity_triple(
    curve: &DiscountCurve,
    expiry: f64,
    start: f64,
    end: f64,
    frequency: u32,
) -> Result<AnnuityTriple> {
    if !(expiry > 0.0 && expiry <= start && start < end) {
        return Err(invalid(format!(
            "need 0 < T_x <= T_s < T_e, got {expiry}, {start}, {end}"
        )));
    }
    let long = SwapSchedule::regular(expiry, expiry, end, frequency)?;
    if start > expiry {
        periods_between(expiry, start, frequency)?;
    }
    periods_between(start, end, frequency)?;
    let (mut short_sum, mut under_sum) = (0.0, 0.0);
    for (&t, &tau) in long.payment_times().iter().zip(long.accruals()) {
        let pv = tau * curve.df(t)?;
        if t <= start + ALIGN_TOL {
            short_sum += pv;
        } else {
            under_sum += pv;
        }
    }
    if short_sum == 0.0 {
        // spot-starting underlying: the short swap has no payments
        return Err(invalid("short swap T_x→T_s has no payments (T_s = T_x)"));
    }
    AnnuityTriple::new(short_sum, short_sum + under_sum, under_sum)
}
