use midcurve_core::{
    annuity_triple, correlation_skew_curve, estimate_sigmas, forward_swap_rate, gaussian_marginals, price_mc,
    price_quadrature, CalibrationInputs, CopulaSpec, DiscountCurve, GaussianSetup, Marginal, MarketInputs, Method,
    MidcurveTrade, SwapSchedule,
};

use crate::config::{Forwards, RunConfig};
use crate::csv::{number, Table};
use crate::error::CliError;

pub fn load_curve(config: &RunConfig) -> Result<DiscountCurve, CliError> {
    let path = &config.curve_file;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read curve file `{}`: {e}", path.display())))?;
    DiscountCurve::parse_csv(&text).map_err(|e| CliError::input(format!("curve file `{}`: {e}", path.display())))
}

/// `(R_s, R_e)` at today, quoted or read off the curve.
fn forwards(config: &RunConfig, curve: &DiscountCurve) -> Result<(f64, f64), CliError> {
    match config.market.forwards {
        Forwards::Quoted { short, long } => Ok((short, long)),
        Forwards::Curve => {
            let t = &config.trade;
            let short = SwapSchedule::regular(t.expiry, t.expiry, t.start, t.frequency)?;
            let long = SwapSchedule::regular(t.expiry, t.expiry, t.end, t.frequency)?;
            Ok((forward_swap_rate(curve, &short)?, forward_swap_rate(curve, &long)?))
        }
    }
}

fn market(config: &RunConfig, curve: &DiscountCurve) -> Result<MarketInputs, CliError> {
    let t = &config.trade;
    let annuities = annuity_triple(curve, t.expiry, t.start, t.end, t.frequency)?;
    let (short, long) = forwards(config, curve)?;
    let m = &config.market;
    Ok(MarketInputs::new(
        annuities,
        short,
        long,
        config.terminal_stdev(m.vol_short_bp),
        config.terminal_stdev(m.vol_long_bp),
        m.rho,
    )?)
}

fn copula(config: &RunConfig, mkt: &MarketInputs) -> Result<CopulaSpec, CliError> {
    let e = &config.engine;
    let spec = CopulaSpec::new(config.copula_rho.unwrap_or(mkt.rho))
        .with_order(e.order)
        .with_paths(e.paths)
        .with_seed(e.seed);
    spec.validate()?;
    Ok(spec)
}

fn trade(config: &RunConfig, strike: f64) -> Result<MidcurveTrade, CliError> {
    let t = &config.trade;
    Ok(MidcurveTrade::new(t.expiry, t.start, t.end, strike, t.notional, t.side)?)
}

fn strikes(config: &RunConfig, mkt: &MarketInputs) -> Result<Vec<f64>, CliError> {
    match &config.strikes {
        Some(spec) => spec.resolve(mkt.deterministic_forward()),
        None => Err(CliError::input("no strikes given: set `strikes` in the config or pass --strikes")),
    }
}

fn marginals(config: &RunConfig, mkt: &MarketInputs) -> Result<GaussianSetup, CliError> {
    let setup = gaussian_marginals(&config.model(), mkt, &config.grid)?;
    for (leg, mass) in [("short", setup.clipped_short), ("long", setup.clipped_long)] {
        if mass > 0.0 {
            eprintln!("warning: linear tilt clipped mass {mass:.6e} on the {leg} leg");
        }
    }
    Ok(setup)
}

pub fn price(config: &RunConfig) -> Result<String, CliError> {
    let curve = load_curve(config)?;
    let mkt = market(config, &curve)?;
    let copula = copula(config, &mkt)?;
    let strikes = match &config.strikes {
        Some(_) => strikes(config, &mkt)?,
        None => vec![mkt.deterministic_forward()],
    };
    let [strike] = strikes[..] else {
        return Err(CliError::input(format!("price needs a single strike, the strike list has {}", strikes.len())));
    };
    let trade = trade(config, strike)?;
    let model = config.model();
    let setup = marginals(config, &mkt)?;
    let result = match config.engine.method {
        Method::Quadrature => price_quadrature(&trade, &mkt, &model, &copula, &setup.marginals)?,
        Method::MonteCarlo => price_mc(&trade, &mkt, &model, &copula, &setup.marginals)?,
    };
    let mut table = Table::new(&["strike", "side", "model", "method", "price", "stderr"]);
    table.row(&[
        number(strike),
        trade.side.to_string(),
        model.kind().to_string(),
        result.method.to_string(),
        number(result.price),
        number(result.std_error),
    ]);
    Ok(table.into_string())
}

pub fn skew(config: &RunConfig) -> Result<String, CliError> {
    let curve = load_curve(config)?;
    let mkt = market(config, &curve)?;
    let copula = copula(config, &mkt)?;
    let strikes = strikes(config, &mkt)?;
    if strikes.len() < 2 {
        return Err(CliError::input(format!(
            "skew needs at least two strikes, the strike list has {}; is the step larger than the range?",
            strikes.len()
        )));
    }
    let template = trade(config, strikes[0])?;
    marginals(config, &mkt)?;
    let points = correlation_skew_curve(
        &template,
        &mkt,
        &config.model(),
        &copula,
        config.engine.method,
        &strikes,
        &config.grid,
    )?;
    let mut table = Table::new(&["strike", "price", "implied_normal_vol", "implied_corr", "flag"]);
    for p in points {
        table.row(&[
            number(p.strike),
            number(p.price),
            p.implied_normal_vol.map(number).unwrap_or_default(),
            number(p.implied_correlation),
            p.flag(),
        ]);
    }
    Ok(table.into_string())
}

pub fn calibrate(config: &RunConfig) -> Result<String, CliError> {
    let curve = load_curve(config)?;
    let t = &config.trade;
    let m = &config.market;
    let mut inputs = CalibrationInputs::from_curve(
        &curve,
        t.expiry,
        t.start,
        t.end,
        t.frequency,
        config.terminal_stdev(m.vol_short_bp),
        config.terminal_stdev(m.vol_long_bp),
        m.rho,
    )?;
    if let Forwards::Quoted { short, long } = m.forwards {
        inputs = inputs.with_forwards(short, long);
    }
    let c = &config.calibration;
    if let Some(vols) = &c.period_vols_bp {
        inputs = inputs.with_stdevs(vols.iter().map(|v| config.terminal_stdev(*v)).collect());
    }
    if c.corr_long.is_some() || c.corr_short.is_some() {
        inputs = inputs.with_flat_correlations(c.corr_long.unwrap_or(m.rho), c.corr_short.unwrap_or(m.rho));
    }
    let est = estimate_sigmas(&inputs)?;
    let mut table = Table::new(&["sigma_e", "sigma_s", "cov_e", "cov_s"]);
    table.row(&[
        number(est.sigma_e),
        number(est.sigma_s),
        number(est.covariances.cov_e),
        number(est.covariances.cov_s),
    ]);
    Ok(table.into_string())
}

pub fn marginal_dump(config: &RunConfig) -> Result<String, CliError> {
    let curve = load_curve(config)?;
    let mkt = market(config, &curve)?;
    let setup = marginals(config, &mkt)?;
    let mut table = Table::new(&["leg", "x", "pdf_natural", "pdf_tilted", "cdf_tilted"]);
    let legs: [(&str, &Marginal, &Marginal); 2] = [
        ("short", &setup.natural_short, &setup.marginals.short),
        ("long", &setup.natural_long, &setup.marginals.long),
    ];
    for (leg, natural, tilted) in legs {
        for (i, &x) in tilted.grid().iter().enumerate() {
            table.row(&[
                leg.to_string(),
                number(x),
                number(natural.pdf_at(x)),
                number(tilted.density()[i]),
                number(tilted.cdf()[i]),
            ]);
        }
    }
    Ok(table.into_string())
}
