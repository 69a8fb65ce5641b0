//! Exact sensitivities of the option price to cash dividends at zero
//! dividends, the direct Taylor-series price approximations built from
//! them, and a Monte-Carlo check of the underlying martingale identity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bs::{bs_derivative, bs_price, BsInputs, DerivOrder};
use crate::error::{PricingError, Result};
use crate::market::{bs_inputs, DividendSchedule, MarketParams, OptionSpec};

/// Maximum number of simultaneous dividend differentiations.
pub const MAX_SENSITIVITY_ORDER: usize = 3;

/// A request for the k-th mixed dividend sensitivity at zero dividends.
///
/// The ex-dates form a multiset (repeats allowed) stored sorted ascending;
/// the weighted-sum factor in the closed form is order-dependent and the
/// ascending ordering is the one consistent with mixed-partial symmetry.
#[derive(Debug, Clone)]
pub struct SensitivityRequest {
    pub market: MarketParams,
    pub option: OptionSpec,
    div_times: Vec<f64>,
}

impl SensitivityRequest {
    pub fn new(market: MarketParams, option: OptionSpec, mut div_times: Vec<f64>) -> Result<Self> {
        if div_times.len() > MAX_SENSITIVITY_ORDER {
            return Err(PricingError::Capability(format!(
                "sensitivity order {} exceeds cap {MAX_SENSITIVITY_ORDER}",
                div_times.len()
            )));
        }
        for &t in &div_times {
            if !(t.is_finite() && t > 0.0 && t < option.maturity) {
                return Err(PricingError::Domain(format!(
                    "dividend time {t} outside (0, {})",
                    option.maturity
                )));
            }
        }
        div_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            market,
            option,
            div_times,
        })
    }

    pub fn div_times(&self) -> &[f64] {
        &self.div_times
    }
}

/// k-th mixed partial of the true price in the dividend amounts at zero
/// dividends:
///
///   (-1)^k d^k BS/dS^k (S0 exp(-s^2 sum T_q), K, T)
///       * exp(-r sum T_q - s^2 sum_{q>=2} (q-1) T_q)
///
/// with the ex-dates taken in ascending order.
pub fn dividend_sensitivity(req: &SensitivityRequest) -> Result<f64> {
    let k = req.div_times.len();
    let base = bs_inputs(&req.market, &req.option)?;
    if k == 0 {
        return bs_price(&base, req.option.kind);
    }
    let var = req.market.vol * req.market.vol;
    let sum_t: f64 = req.div_times.iter().sum();
    let weighted: f64 = req
        .div_times
        .iter()
        .enumerate()
        .skip(1)
        .map(|(q, &t)| q as f64 * t)
        .sum();
    let shifted = BsInputs {
        spot: req.market.spot * (-var * sum_t).exp(),
        ..base
    };
    let deriv = bs_derivative(&shifted, DerivOrder::new(k as u32, 0)?, req.option.kind)?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * deriv * (-req.market.rate * sum_t - var * weighted).exp())
}

fn sensitivity_for_times(
    market: &MarketParams,
    option: &OptionSpec,
    times: Vec<f64>,
) -> Result<f64> {
    dividend_sensitivity(&SensitivityRequest::new(*market, *option, times)?)
}

/// Direct Taylor polynomial of the price at zero dividends, truncated at
/// `order` (1, 2 or 3).
///
/// The multivariate sum runs over sorted index multisets; a multiset with
/// value multiplicities m_1..m_r carries weight 1 / (m_1! ... m_r!), which
/// reproduces the raw multi-index sum without double counting.
pub fn taylor_price(
    order: usize,
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<f64> {
    if order == 0 || order > MAX_SENSITIVITY_ORDER {
        return Err(PricingError::Capability(format!(
            "taylor order {order} outside 1..={MAX_SENSITIVITY_ORDER}"
        )));
    }
    schedule.validate_for(option)?;
    let events = schedule.events();
    let n = events.len();
    let mut total = bs_price(&bs_inputs(market, option)?, option.kind)?;

    for event in events {
        total += event.amount * sensitivity_for_times(market, option, vec![event.time])?;
    }
    if order >= 2 {
        for i in 0..n {
            for j in i..n {
                let weight = if i == j { 0.5 } else { 1.0 };
                total += weight
                    * events[i].amount
                    * events[j].amount
                    * sensitivity_for_times(market, option, vec![events[i].time, events[j].time])?;
            }
        }
    }
    if order >= 3 {
        for i in 0..n {
            for j in i..n {
                for l in j..n {
                    // 1 / product of multiplicity factorials.
                    let weight = if i == j && j == l {
                        1.0 / 6.0
                    } else if i == j || j == l {
                        0.5
                    } else {
                        1.0
                    };
                    total += weight
                        * events[i].amount
                        * events[j].amount
                        * events[l].amount
                        * sensitivity_for_times(
                            market,
                            option,
                            vec![events[i].time, events[j].time, events[l].time],
                        )?;
                }
            }
        }
    }
    Ok(total)
}

/// Result of a martingale simulation check.
#[derive(Debug, Clone, Copy)]
pub struct MartingaleCheck {
    pub sample_mean: f64,
    pub stderr: f64,
    pub reference: f64,
}

/// Simulates Z_t = d^k BS/dS^k (S_t e^{k s^2 (t-a)}, T-t) e^{(k-1)(r + k s^2/2) t}
/// over exact lognormal draws of S_t and compares its mean with Z_0.
///
/// Deterministic for a fixed seed and path count regardless of the
/// internal parallelism (each path owns a seeded stream).
pub fn martingale_check(
    market: &MarketParams,
    option: &OptionSpec,
    t: f64,
    k: u32,
    a: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MartingaleCheck> {
    if !(t > 0.0 && t < option.maturity) {
        return Err(PricingError::Domain(format!(
            "check time {t} outside (0, {})",
            option.maturity
        )));
    }
    if a < 0.0 {
        return Err(PricingError::Domain(format!(
            "shift parameter a must be >= 0, got {a}"
        )));
    }
    if k as usize > MAX_SENSITIVITY_ORDER - 1 {
        return Err(PricingError::Capability(format!(
            "martingale check supports k <= 2, got {k}"
        )));
    }
    let order = DerivOrder::new(k, 0)?;
    let var = market.vol * market.vol;
    let drift = (market.rate - 0.5 * var) * t;
    let diffusion = market.vol * t.sqrt();
    let shift = (f64::from(k) * var * (t - a)).exp();
    let growth = ((f64::from(k) - 1.0) * (market.rate + 0.5 * f64::from(k) * var) * t).exp();
    let remaining = BsInputs::new(
        1.0,
        option.strike,
        option.maturity - t,
        market.rate,
        market.vol,
    )?;

    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let spot_t = market.spot * (drift + diffusion * z).exp();
            let shifted = BsInputs {
                spot: spot_t * shift,
                ..remaining
            };
            bs_derivative(&shifted, order, option.kind).map(|d| d * growth)
        })
        .collect::<Result<_>>()?;

    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var_est = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var_est / n).sqrt();

    let ref_inputs = BsInputs::new(
        market.spot * (-f64::from(k) * var * a).exp(),
        option.strike,
        option.maturity,
        market.rate,
        market.vol,
    )?;
    let reference = bs_derivative(&ref_inputs, order, option.kind)?;

    Ok(MartingaleCheck {
        sample_mean: mean,
        stderr,
        reference,
    })
}
