//! Literature baseline proxies: three-moment-matched shifted lognormal,
//! Bos-Vandermark spot/strike adjustment, and the Bos-Gairat-Shepeleva
//! volatility adjustment.

use crate::bs::{bs_price, norm_cdf, BsInputs, OptionKind};
use crate::error::{PricingError, Result};
use crate::market::{DividendSchedule, MarketParams, OptionSpec};

/// Raw terminal moments (mu1, mu2, mu3) of the dividend-paying stock at
/// the horizon, ignoring absorption: S_T = S0 X_{0->T} - sum_i C_i X_{Ti->T}
/// with X the exact lognormal growth factor.
///
/// Cross moments of the overlapping factors factorize over the sorted
/// times, so each moment reduces to prefix sums and costs O(n).
pub fn terminal_moments(
    market: &MarketParams,
    schedule: &DividendSchedule,
    horizon: f64,
) -> Result<(f64, f64, f64)> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(PricingError::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let r = market.rate;
    let var = market.vol * market.vol;

    // Leg i carries weight c_i at time t_i; leg 0 is the spot at t=0.
    let mut times = Vec::with_capacity(schedule.len() + 1);
    let mut weights = Vec::with_capacity(schedule.len() + 1);
    times.push(0.0);
    weights.push(market.spot);
    for ev in schedule.events() {
        if ev.time >= horizon {
            break;
        }
        times.push(ev.time);
        weights.push(-ev.amount);
    }
    let n = times.len();

    // E[prod_q X_{t_q -> T}] over a sorted tuple t_1 <= ... <= t_m equals
    // exp(m(r + (m-1) var/2) T) * prod_q exp(-(r + (q-1) var) t_q).
    let u: Vec<f64> = (0..n).map(|i| weights[i] * (-r * times[i]).exp()).collect();
    let w: Vec<f64> = (0..n)
        .map(|i| weights[i] * (-(r + var) * times[i]).exp())
        .collect();
    let z: Vec<f64> = (0..n)
        .map(|i| weights[i] * (-(r + 2.0 * var) * times[i]).exp())
        .collect();

    let mu1 = (r * horizon).exp() * u.iter().sum::<f64>();

    // mu2 = e^{(2r+var)T} * sum over ordered pairs (a,b): 2 sum_{i<j} u_i w_j + sum_i u_i w_i
    let mut pair = 0.0;
    let mut diag2 = 0.0;
    let mut u_prefix = 0.0;
    for i in 0..n {
        pair += u_prefix * w[i];
        diag2 += u[i] * w[i];
        u_prefix += u[i];
    }
    let mu2 = ((2.0 * r + var) * horizon).exp() * (2.0 * pair + diag2);

    // mu3 = e^{3(r+var)T} * [6 sum_{i<j<k} u_i w_j z_k + 3 sum_{i<k} u_i w_i z_k
    //        + 3 sum_{i<j} u_i w_j z_j + sum_i u_i w_i z_i]
    let mut triple = 0.0;
    let mut low_pair = 0.0; // sum_{i<k} u_i w_i z_k as running value
    let mut high_pair = 0.0;
    let mut diag3 = 0.0;
    let mut uw_prefix = 0.0; // sum_{i<current} u_i w_i
    let mut upair_prefix = 0.0; // sum_{i<j<current} u_i w_j
    u_prefix = 0.0;
    for k in 0..n {
        triple += upair_prefix * z[k];
        low_pair += uw_prefix * z[k];
        high_pair += u_prefix * w[k] * z[k];
        diag3 += u[k] * w[k] * z[k];
        upair_prefix += u_prefix * w[k];
        uw_prefix += u[k] * w[k];
        u_prefix += u[k];
    }
    let mu3 = (3.0 * (r + var) * horizon).exp()
        * (6.0 * triple + 3.0 * low_pair + 3.0 * high_pair + diag3);

    Ok((mu1, mu2, mu3))
}

/// Parameters of the shifted-lognormal family lambda + M exp(-s'^2 t/2 + s' W_t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedLognormalParams {
    pub shift: f64,
    pub scale: f64,
    pub vol: f64,
}

/// Fits the three-parameter shifted lognormal to raw terminal moments.
///
/// With v = exp(vol^2 T): shift + scale = mu1, scale^2 (v - 1) = central
/// second moment, and the skewness identity (v + 2) sqrt(v - 1) = skew
/// pins v; v is found by safeguarded Newton on the monotone map.
pub fn fit_shifted_lognormal(
    mu1: f64,
    mu2: f64,
    mu3: f64,
    horizon: f64,
) -> Result<ShiftedLognormalParams> {
    let variance = mu2 - mu1 * mu1;
    if !variance.is_finite() || variance <= 0.0 {
        return Err(PricingError::MomentFit(format!(
            "non-positive variance {variance}"
        )));
    }
    let central3 = mu3 - 3.0 * mu1 * mu2 + 2.0 * mu1 * mu1 * mu1;
    let skew = central3 / variance.powf(1.5);
    if !skew.is_finite() || skew <= 0.0 {
        return Err(PricingError::MomentFit(format!(
            "non-positive skewness {skew}: outside the shifted-lognormal family"
        )));
    }
    let v = solve_skew_equation(skew)?;
    if v <= 1.0 + 1e-14 {
        return Err(PricingError::MomentFit(format!(
            "degenerate fit v = {v}: Gaussian limit outside the family"
        )));
    }
    let scale = (variance / (v - 1.0)).sqrt();
    let shift = mu1 - scale;
    let vol = (v.ln() / horizon).sqrt();
    if !(scale > 0.0 && vol > 0.0 && shift + scale > 0.0) {
        return Err(PricingError::MomentFit(format!(
            "inadmissible parameters shift={shift} scale={scale} vol={vol}"
        )));
    }
    Ok(ShiftedLognormalParams { shift, scale, vol })
}

/// Solves (v + 2) sqrt(v - 1) = skew for v in (1, 1e6).
fn solve_skew_equation(skew: f64) -> Result<f64> {
    let f = |v: f64| (v + 2.0) * (v - 1.0).sqrt() - skew;
    let (mut lo, mut hi) = (1.0, 1e6);
    if f(hi) < 0.0 {
        return Err(PricingError::MomentFit(format!(
            "skewness {skew} out of bracket"
        )));
    }
    // Newton with bisection safeguard.
    let mut v = 1.0 + (skew / 3.0).powi(2).min(hi - 1.0).max(1e-12);
    for _ in 0..200 {
        let fv = f(v);
        if fv.abs() <= 1e-12 * (skew.abs() + 1.0) {
            return Ok(v);
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let slope = (v - 1.0).sqrt() + (v + 2.0) / (2.0 * (v - 1.0).sqrt());
        let step = v - fv / slope;
        v = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(v)
}

/// Moments of the fitted family at the horizon; round-trip check helper.
pub fn shifted_lognormal_moments(params: &ShiftedLognormalParams, horizon: f64) -> (f64, f64, f64) {
    let v = (params.vol * params.vol * horizon).exp();
    let l = params.shift;
    let m = params.scale;
    let e1 = m;
    let e2 = m * m * v;
    let e3 = m * m * m * v * v * v;
    let mu1 = l + e1;
    let mu2 = l * l + 2.0 * l * e1 + e2;
    let mu3 = l * l * l + 3.0 * l * l * e1 + 3.0 * l * e2 + e3;
    (mu1, mu2, mu3)
}

/// Moment-matching price: displaced Black formula on the fitted family.
pub fn moment_match_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<f64> {
    schedule.validate_for(option)?;
    let (mu1, mu2, mu3) = terminal_moments(market, schedule, option.maturity)?;
    let params = fit_shifted_lognormal(mu1, mu2, mu3, option.maturity)?;
    let df = (-market.rate * option.maturity).exp();
    let call = if option.strike <= params.shift {
        // Exercise is sure: discounted forward minus strike.
        df * (mu1 - option.strike)
    } else {
        let eff_strike = option.strike - params.shift;
        let v = params.vol * option.maturity.sqrt();
        let d1 = ((params.scale / eff_strike).ln() + 0.5 * v * v) / v;
        let d2 = d1 - v;
        df * (params.scale * norm_cdf(d1)? - eff_strike * norm_cdf(d2)?)
    };
    Ok(match option.kind {
        OptionKind::Call => call,
        OptionKind::Put => call - df * (mu1 - option.strike),
    })
}

/// Bos-Vandermark adjusted spot and strike.
pub fn bv_terms(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<(f64, f64)> {
    schedule.validate_for(option)?;
    let t_mat = option.maturity;
    let mut spot_adj = market.spot;
    let mut strike_adj = option.strike;
    for ev in schedule.events() {
        let w = ev.time / t_mat;
        spot_adj -= (1.0 - w) * ev.amount * (-market.rate * ev.time).exp();
        strike_adj += w * ev.amount * (market.rate * (t_mat - ev.time)).exp();
    }
    if spot_adj <= 0.0 {
        return Err(PricingError::AdjustmentOverflow(format!(
            "Bos-Vandermark adjusted spot {spot_adj} <= 0"
        )));
    }
    Ok((spot_adj, strike_adj))
}

/// Bos-Vandermark proxy price: plain Black-Scholes at the adjusted terms.
pub fn bv_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<f64> {
    let (spot_adj, strike_adj) = bv_terms(market, option, schedule)?;
    let inputs = BsInputs::new(
        spot_adj,
        strike_adj,
        option.maturity,
        market.rate,
        market.vol,
    )?;
    bs_price(&inputs, option.kind)
}

/// Intermediate quantities of the BGS volatility adjustment.
#[derive(Debug, Clone, Copy)]
pub struct BgsTerms {
    pub adjusted_spot: f64,
    pub adjusted_vol: f64,
    pub a: f64,
    pub b: f64,
}

/// Bos-Gairat-Shepeleva terms: escrowed spot and the double-sum
/// volatility correction.
///
/// The variance adjustment is
///
/// ```text
/// sigma^2 + sigma sqrt(pi/2T) { 4 e^{a^2/2}/S* sum_i C_i e^{-rT_i} [N(a) - N(a - sigma T_i/sqrt(T))]
///                             +   e^{b^2/2}/S*^2 sum_{i,j} C_i C_j e^{-r(T_i+T_j)}
///                                 [N(b) - N(b - 2 sigma min(T_i,T_j)/sqrt(T))] }
/// ```
///
/// with S* the spot net of the discounted dividends, a the d1 of
/// (S*, K, T) and b = a + sigma sqrt(T)/2.  Published renderings of
/// this formula disagree on the spot, the argument a and the leading
/// coefficient; this combination is the one that reproduces the
/// reference tables, and the first-order coefficient also follows from
/// matching the exact dividend sensitivity at the origin.
pub fn bgs_terms(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<BgsTerms> {
    schedule.validate_for(option)?;
    let t_mat = option.maturity;
    let sqrt_t = t_mat.sqrt();
    let sigma = market.vol;
    let spot_adj = market.spot - schedule.present_value(market.rate);
    if spot_adj <= 0.0 {
        return Err(PricingError::AdjustmentOverflow(format!(
            "BGS adjusted spot {spot_adj} <= 0"
        )));
    }
    let a = ((spot_adj / option.strike).ln() + (market.rate + 0.5 * sigma * sigma) * t_mat)
        / (sigma * sqrt_t);
    let b = a + 0.5 * sigma * sqrt_t;

    let events = schedule.events();
    let discounted: Vec<f64> = events
        .iter()
        .map(|ev| ev.amount * (-market.rate * ev.time).exp())
        .collect();
    let na = norm_cdf(a)?;
    let nb = norm_cdf(b)?;

    let mut first = 0.0;
    for (ev, dc) in events.iter().zip(&discounted) {
        first += dc * (na - norm_cdf(a - sigma * ev.time / sqrt_t)?);
    }
    // Ordered double sum folded to i <= j: min(T_i, T_j) = T_i there.
    let mut second = 0.0;
    for i in 0..events.len() {
        let tail: f64 = discounted[i..].iter().sum();
        second += discounted[i]
            * (2.0 * tail - discounted[i])
            * (nb - norm_cdf(b - 2.0 * sigma * events[i].time / sqrt_t)?);
    }

    let var_adj = sigma * sigma
        + sigma
            * (std::f64::consts::PI / (2.0 * t_mat)).sqrt()
            * (4.0 * (0.5 * a * a).exp() / spot_adj * first
                + (0.5 * b * b).exp() / (spot_adj * spot_adj) * second);
    if var_adj <= 0.0 {
        return Err(PricingError::Degenerate(format!(
            "BGS adjusted variance {var_adj} is not positive"
        )));
    }
    Ok(BgsTerms {
        adjusted_spot: spot_adj,
        adjusted_vol: var_adj.sqrt(),
        a,
        b,
    })
}

/// Bos-Gairat-Shepeleva proxy price.
pub fn bgs_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<f64> {
    let terms = bgs_terms(market, option, schedule)?;
    let inputs = BsInputs::new(
        terms.adjusted_spot,
        option.strike,
        option.maturity,
        market.rate,
        terms.adjusted_vol,
    )?;
    bs_price(&inputs, option.kind)
}
