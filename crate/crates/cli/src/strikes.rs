//! Strike specs: a single rate, `atm`, `atm+25bp`, a `lo:hi:step` grid, or
//! `atm±X:step` (`atm+-X:step` in ASCII).

use std::str::FromStr;

use crate::config::parse_rate;
use crate::error::CliError;

/// A rate either absolute or relative to the at-the-money midcurve forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Absolute(f64),
    Atm(f64),
}

impl Level {
    fn resolve(self, atm: f64) -> f64 {
        match self {
            Level::Absolute(k) => k,
            Level::Atm(offset) => atm + offset,
        }
    }
}

impl FromStr for Level {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let t = s.trim();
        match t.strip_prefix("atm") {
            Some("") => Ok(Level::Atm(0.0)),
            Some(rest) => {
                let offset = match (rest.strip_prefix('+'), rest.strip_prefix('-')) {
                    (Some(r), _) => parse_rate("strike offset", r)?,
                    (_, Some(r)) => -parse_rate("strike offset", r)?,
                    _ => return Err(CliError::input(format!("bad strike `{t}`"))),
                };
                Ok(Level::Atm(offset))
            }
            None => parse_rate("strike", t).map(Level::Absolute),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrikeSpec {
    Single(Level),
    Grid { lo: Level, hi: Level, step: f64 },
}

impl StrikeSpec {
    /// Strikes from `lo` up to `hi` inclusive.
    pub fn resolve(&self, atm: f64) -> Result<Vec<f64>, CliError> {
        match *self {
            StrikeSpec::Single(level) => Ok(vec![level.resolve(atm)]),
            StrikeSpec::Grid { lo, hi, step } => {
                let (lo, hi) = (lo.resolve(atm), hi.resolve(atm));
                if hi < lo {
                    return Err(CliError::input(format!("strike grid runs backwards: {lo} > {hi}")));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| lo + i as f64 * step).collect())
            }
        }
    }
}

impl FromStr for StrikeSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let t = s.trim();
        let parts: Vec<&str> = t.split(':').collect();
        let step = |text: &str| {
            let step = parse_rate("strike step", text)?;
            if step > 0.0 {
                Ok(step)
            } else {
                Err(CliError::input(format!("strike step must be positive, got `{text}`")))
            }
        };
        match parts.as_slice() {
            [single] => single.parse().map(StrikeSpec::Single),
            [centre, s] => {
                let Some(width) = centre.strip_prefix("atm±").or_else(|| centre.strip_prefix("atm+-")) else {
                    return Err(CliError::input(format!("bad strike grid `{t}`")));
                };
                let width = parse_rate("strike half-width", width)?;
                if width < 0.0 {
                    return Err(CliError::input("strike half-width must be non-negative"));
                }
                Ok(StrikeSpec::Grid { lo: Level::Atm(-width), hi: Level::Atm(width), step: step(s)? })
            }
            [lo, hi, s] => Ok(StrikeSpec::Grid { lo: lo.parse()?, hi: hi.parse()?, step: step(s)? }),
            _ => Err(CliError::input(format!("bad strike spec `{t}`"))),
        }
    }
}
