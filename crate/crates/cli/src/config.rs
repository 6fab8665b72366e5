//! Flat `section.key = value` run configuration.
//!
//! Rates accept a `%` or `bp` suffix and are plain decimals otherwise; vols
//! are normal vols in bp per √year. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use midcurve_core::{AnnuityModel, GridSpec, Method, ModelKind, Side};

use crate::error::CliError;
use crate::strikes::StrikeSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct TradeBlock {
    pub expiry: f64,
    pub start: f64,
    pub end: f64,
    pub frequency: u32,
    pub notional: f64,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forwards {
    Quoted { short: f64, long: f64 },
    Curve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketBlock {
    pub forwards: Forwards,
    pub vol_short_bp: f64,
    pub vol_long_bp: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineBlock {
    pub method: Method,
    pub order: usize,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationBlock {
    pub period_vols_bp: Option<Vec<f64>>,
    pub corr_long: Option<f64>,
    pub corr_short: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub curve_file: PathBuf,
    pub trade: TradeBlock,
    pub market: MarketBlock,
    pub model_kind: ModelKind,
    pub sigma_e: f64,
    pub sigma_s: f64,
    /// Copula correlation; the market correlation when absent.
    pub copula_rho: Option<f64>,
    pub engine: EngineBlock,
    pub grid: GridSpec,
    pub strikes: Option<StrikeSpec>,
    pub calibration: CalibrationBlock,
}

impl RunConfig {
    /// Reads a config file; a relative curve path resolves against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config file `{}`: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if config.curve_file.is_relative() {
            if let Some(dir) = path.parent() {
                config.curve_file = dir.join(&config.curve_file);
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut keys = Keys::parse(text)?;
        let curve_file = PathBuf::from(keys.required("curve.file")?);

        let trade = TradeBlock {
            expiry: keys.number("trade.expiry")?,
            start: keys.number("trade.start")?,
            end: keys.number("trade.end")?,
            frequency: keys.parsed("trade.frequency", 1)?,
            notional: keys.number_or("trade.notional", 1.0)?,
            side: keys.parsed("trade.side", Side::Receiver)?,
        };
        if !(trade.expiry > 0.0 && trade.expiry < trade.start && trade.start < trade.end) {
            return Err(CliError::input(format!(
                "trade needs 0 < expiry < start < end, got {}, {}, {}",
                trade.expiry, trade.start, trade.end
            )));
        }
        if trade.notional.is_nan() || trade.notional <= 0.0 {
            return Err(CliError::input("trade.notional must be positive"));
        }

        let forwards = match keys.optional("market.forwards").as_deref().unwrap_or("quoted") {
            "quoted" => Forwards::Quoted {
                short: keys.rate("market.forward_short")?,
                long: keys.rate("market.forward_long")?,
            },
            "curve" => Forwards::Curve,
            other => return Err(CliError::input(format!("market.forwards must be `quoted` or `curve`, got `{other}`"))),
        };
        let market = MarketBlock {
            forwards,
            vol_short_bp: keys.vol("market.vol_short_bp")?,
            vol_long_bp: keys.vol("market.vol_long_bp")?,
            rho: keys.number("market.rho")?,
        };
        check_correlation("market.rho", market.rho)?;

        let model_kind = keys.parsed("model.kind", ModelKind::Deterministic)?;
        let sigma_e = keys.number_or("model.sigma_e", 0.0)?;
        let sigma_s = keys.number_or("model.sigma_s", 0.0)?;
        let copula_rho = keys.optional_number("copula.rho")?;
        if let Some(rho) = copula_rho {
            check_correlation("copula.rho", rho)?;
        }

        let engine = EngineBlock {
            method: keys.parsed("engine.method", Method::Quadrature)?,
            order: keys.parsed("engine.order", 64)?,
            paths: keys.parsed("engine.paths", 1_000_000)?,
            seed: keys.parsed("engine.seed", 42)?,
        };
        let defaults = GridSpec::default();
        let grid = GridSpec {
            half_width: keys.number_or("grid.half_width", defaults.half_width)?,
            nodes: keys.parsed("grid.nodes", defaults.nodes)?,
        };
        grid.validate().map_err(CliError::from)?;

        let strikes = keys.optional("strikes").map(|s| s.parse()).transpose()?;

        let calibration = CalibrationBlock {
            period_vols_bp: keys
                .optional("calibration.period_vols_bp")
                .map(|list| list.split(',').map(|v| parse_vol("calibration.period_vols_bp", v)).collect())
                .transpose()?,
            corr_long: keys.optional_number("calibration.corr_long")?,
            corr_short: keys.optional_number("calibration.corr_short")?,
        };
        for (name, value) in [("calibration.corr_long", calibration.corr_long), ("calibration.corr_short", calibration.corr_short)] {
            if let Some(rho) = value {
                check_correlation(name, rho)?;
            }
        }

        keys.finish()?;
        Ok(Self {
            curve_file,
            trade,
            market,
            model_kind,
            sigma_e,
            sigma_s,
            copula_rho,
            engine,
            grid,
            strikes,
            calibration,
        })
    }

    pub fn model(&self) -> AnnuityModel {
        match self.model_kind {
            ModelKind::Deterministic => AnnuityModel::deterministic(),
            ModelKind::Linear => AnnuityModel::linear(self.sigma_e, self.sigma_s),
            ModelKind::LogLinear => AnnuityModel::log_linear(self.sigma_e, self.sigma_s),
        }
    }

    /// Terminal stdev at expiry of a normal vol quoted in bp per √year.
    pub fn terminal_stdev(&self, vol_bp: f64) -> f64 {
        vol_bp * 1e-4 * self.trade.expiry.sqrt()
    }
}

fn check_correlation(name: &str, rho: f64) -> Result<(), CliError> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(CliError::input(format!("{name} must lie in [-1, 1], got {rho}")))
    }
}

/// A rate with optional `%` or `bp` suffix.
pub fn parse_rate(name: &str, text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    let (body, shift) = if let Some(b) = t.strip_suffix('%') {
        (b.trim(), 2)
    } else if let Some(b) = t.strip_suffix("bp") {
        (b.trim(), 4)
    } else {
        return parse_number(name, t);
    };
    if body.contains(['e', 'E']) {
        return parse_number(name, body).map(|v| v / 10f64.powi(shift));
    }
    // shifting the decimal exponent keeps the parse correctly rounded
    parse_number(name, body)?;
    parse_number(name, &format!("{body}e-{shift}"))
}

fn parse_vol(name: &str, text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    let v = parse_number(name, t.strip_suffix("bp").unwrap_or(t))?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::input(format!("{name} must be non-negative, got {v}")))
    }
}

fn parse_number(name: &str, text: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("{name}: `{}` is not a number", text.trim())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::input(format!("{name} must be finite")))
    }
}

/// Key/value pairs that must all be consumed.
struct Keys {
    values: BTreeMap<String, String>,
}

impl Keys {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::input(format!("config line {}: expected `key = value`, got `{line}`", n + 1)));
            };
            let key = key.trim().to_string();
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::input(format!("config line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { values })
    }

    fn optional(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String, CliError> {
        self.optional(key).ok_or_else(|| CliError::input(format!("config is missing `{key}`")))
    }

    fn number(&mut self, key: &str) -> Result<f64, CliError> {
        let v = self.required(key)?;
        parse_number(key, &v)
    }

    fn optional_number(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.optional(key).map(|v| parse_number(key, &v)).transpose()
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.optional_number(key)?.unwrap_or(default))
    }

    fn rate(&mut self, key: &str) -> Result<f64, CliError> {
        let v = self.required(key)?;
        parse_rate(key, &v)
    }

    fn vol(&mut self, key: &str) -> Result<f64, CliError> {
        let v = self.required(key)?;
        parse_vol(key, &v)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.optional(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::input(format!("{key}: {e}"))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(key) => Err(CliError::input(format!("unknown config key `{key}`"))),
        }
    }
}
