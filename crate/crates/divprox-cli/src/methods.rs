//! Pricing-method selection shared by the subcommands.

use clap::ValueEnum;
use divprox_core::{
    baselines, mc_price, pde_price, proxy_price, taylor_price, DividendSchedule, GridConfig,
    MarketParams, McConfig, OptionSpec, Result,
};
use serde::{Deserialize, Serialize};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
// Variant order matches the alphabetical label order so the derived
// `Ord` sorts report rows the same way their CSV labels do.
pub enum Method {
    /// Bos-Gairat-Shepeleva volatility adjustment of the escrowed price.
    Bgs,
    /// Bos-Vandermark spot/strike split of the dividend stream.
    Bv,
    /// Second-order sensitivity-based spot/strike adjustment.
    Gs,
    /// Monte-Carlo reference.
    Mc,
    /// Shifted-lognormal fit to three terminal moments.
    Mm,
    /// Crank-Nicolson finite-difference reference.
    Pde,
    /// Taylor expansion in the dividend amounts up to order 2.
    Taylor2,
    /// Taylor expansion in the dividend amounts up to order 3.
    Taylor3,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Gs => "gs",
            Method::Bv => "bv",
            Method::Bgs => "bgs",
            Method::Mm => "mm",
            Method::Pde => "pde",
            Method::Mc => "mc",
            Method::Taylor2 => "taylor2",
            Method::Taylor3 => "taylor3",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Prices with the selected method; the second element is the Monte-Carlo
/// standard error when applicable.
pub fn price_with(
    method: Method,
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
    grid: &GridConfig,
    mc: &McConfig,
) -> Result<(f64, Option<f64>)> {
    Ok(match method {
        Method::Gs => (proxy_price(market, option, schedule)?.price, None),
        Method::Bv => (baselines::bv_price(market, option, schedule)?, None),
        Method::Bgs => (baselines::bgs_price(market, option, schedule)?, None),
        Method::Mm => (
            baselines::moment_match_price(market, option, schedule)?,
            None,
        ),
        Method::Pde => (pde_price(market, option, schedule, grid)?.price, None),
        Method::Mc => {
            let (price, stderr) = mc_price(market, option, schedule, mc)?;
            (price, Some(stderr))
        }
        Method::Taylor2 => (taylor_price(2, market, option, schedule)?, None),
        Method::Taylor3 => (taylor_price(3, market, option, schedule)?, None),
    })
}
