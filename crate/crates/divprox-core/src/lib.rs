//! Pricing toolkit for European options on stocks paying discrete cash
//! dividends under the piecewise-lognormal model.
//!
//! The centerpiece is a spot/strike-adjustment proxy built from exact
//! dividend sensitivities, together with three literature baselines and
//! PDE / Monte-Carlo reference pricers for accuracy benchmarking.

pub mod baselines;
pub mod bs;
pub mod error;
pub mod market;
pub mod mc;
pub mod pde;
pub mod proxy;
pub mod sensitivity;

pub use bs::{bs_price, norm_cdf, BsInputs, DerivOrder, OptionKind};
pub use error::{PricingError, Result};
pub use market::{
    apply_dividend, bs_inputs, DividendEvent, DividendSchedule, MarketParams, OptionSpec,
};
pub use mc::{mc_price, McConfig};
pub use pde::{continuity_check, pde_price, GridConfig, PdeSolution};
pub use proxy::{adjusted_terms, proxy_price, AdjustedTerms, ProxyPrice};
pub use sensitivity::{dividend_sensitivity, taylor_price, SensitivityRequest};
