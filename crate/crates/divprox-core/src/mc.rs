//! Monte-Carlo reference pricer with exact lognormal increments between
//! ex-dates and dividend absorption at each ex-date.
//!
//! Each path draws from its own counter-based stream keyed by
//! (seed, path index), so the result is bit-reproducible regardless of
//! how paths are scheduled across threads.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bs::OptionKind;
use crate::error::{PricingError, Result};
use crate::market::{apply_dividend, DividendSchedule, MarketParams, OptionSpec};

/// Simulation size and reproducibility controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 1_000_000,
            seed: 42,
            antithetic: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 10_000 {
            return Err(PricingError::Domain(format!(
                "n_paths must be >= 10000, got {}",
                self.n_paths
            )));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(PricingError::Domain(
                "n_paths must be even with antithetic sampling".to_string(),
            ));
        }
        Ok(())
    }
}

/// Terminal spot for one set of increment normals.
fn terminal_spot(
    market: &MarketParams,
    option: &OptionSpec,
    events: &[(f64, f64)],
    normals: &[f64],
    flip: bool,
) -> f64 {
    let sigma = market.vol;
    let drift = market.rate - 0.5 * sigma * sigma;
    let mut s = market.spot;
    let mut t = 0.0;
    let mut idx = 0;
    for &(t_ex, cash) in events {
        let dt = t_ex - t;
        if dt > 0.0 {
            let z = if flip { -normals[idx] } else { normals[idx] };
            s *= (drift * dt + sigma * dt.sqrt() * z).exp();
        }
        idx += 1;
        s = apply_dividend(s, cash);
        if s <= 0.0 {
            return 0.0;
        }
        t = t_ex;
    }
    let dt = option.maturity - t;
    if dt > 0.0 {
        let z = if flip { -normals[idx] } else { normals[idx] };
        s *= (drift * dt + sigma * dt.sqrt() * z).exp();
    }
    s
}

fn payoff(option: &OptionSpec, s: f64) -> f64 {
    match option.kind {
        OptionKind::Call => (s - option.strike).max(0.0),
        OptionKind::Put => (option.strike - s).max(0.0),
    }
}

/// Monte-Carlo price and standard error of the estimate.
pub fn mc_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
    mc: &McConfig,
) -> Result<(f64, f64)> {
    mc.validate()?;
    schedule.validate_for(option)?;
    let events: Vec<(f64, f64)> = schedule
        .within(option.maturity)
        .events()
        .iter()
        .map(|ev| (ev.time, ev.amount))
        .collect();
    let n_increments = events.len() + 1;
    let discount = (-market.rate * option.maturity).exp();

    // With antithetic pairing the unit of i.i.d. sampling is the pair
    // average, so the sample count halves.
    let samples = if mc.antithetic {
        mc.n_paths / 2
    } else {
        mc.n_paths
    };
    let (sum, sum_sq) = (0..samples)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(path as u64);
            let normals: Vec<f64> = (0..n_increments)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let mut v = payoff(
                option,
                terminal_spot(market, option, &events, &normals, false),
            );
            if mc.antithetic {
                let anti = payoff(
                    option,
                    terminal_spot(market, option, &events, &normals, true),
                );
                v = 0.5 * (v + anti);
            }
            let v = discount * v;
            (v, v * v)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean).max(0.0)) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
