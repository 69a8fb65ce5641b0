//! Second-order spot/strike adjustment proxy: a Black-Scholes price at
//! adjusted terms whose Taylor expansion at zero dividends matches the
//! true price to order two and which satisfies call-put parity by
//! construction.

use std::collections::BTreeMap;

use crate::baselines::bv_terms;
use crate::bs::{bs_price, d_values, norm_cdf, norm_pdf, BsInputs, OptionKind};
use crate::error::{PricingError, Result};
use crate::market::{bs_inputs, DividendSchedule, MarketParams, OptionSpec};

/// Denominator threshold below which the coefficient ratios are treated
/// as degenerate (option effectively a forward or worthless).
const DEGENERACY_THRESHOLD: f64 = 1e-300;

/// Precomputed scalars shared by every coefficient evaluation.
#[derive(Debug, Clone, Copy)]
struct Scalars {
    tenor: f64,
    rate: f64,
    vol: f64,
    sqrt_t: f64,
    d1: f64,
    n1: f64,
    n2: f64,
    /// N(d1) - N(d2), the linear-system determinant up to discounting.
    denom: f64,
    /// Bracket constants of the printed second-order closed form.
    gamma: f64,
    ca: f64,
    cb: f64,
    cc: f64,
    cd: f64,
}

impl Scalars {
    fn build(market: &MarketParams, option: &OptionSpec) -> Result<Self> {
        let inputs = bs_inputs(market, option)?;
        let (d1, d2) = d_values(&inputs);
        let n1 = norm_cdf(d1)?;
        let n2 = norm_cdf(d2)?;
        let phi1 = norm_pdf(d1);
        let phi2 = norm_pdf(d2);
        let denom = n1 - n2;
        let mixed = n2 * phi1 - n1 * phi2;
        let diff = phi1 - phi2;
        Ok(Self {
            tenor: option.maturity,
            rate: market.rate,
            vol: market.vol,
            sqrt_t: option.maturity.sqrt(),
            d1,
            n1,
            n2,
            denom,
            gamma: market.vol * market.spot * option.maturity.sqrt() * phi1 * denom.powi(3),
            ca: -mixed * mixed,
            cb: diff * mixed,
            cc: -diff * diff,
            cd: phi1 * denom * denom,
        })
    }

    fn degenerate(&self) -> bool {
        !(self.denom > DEGENERACY_THRESHOLD && self.gamma.abs() > DEGENERACY_THRESHOLD)
    }

    fn d_of_t(&self, t: f64) -> f64 {
        self.d1 - self.vol * t / self.sqrt_t
    }

    fn first_order(&self, t: f64) -> Result<(f64, f64)> {
        if self.degenerate() {
            return Err(PricingError::Degenerate(
                "N(d1) - N(d2) underflows: coefficient ratios undefined".into(),
            ));
        }
        let ndt = norm_cdf(self.d_of_t(t))?;
        let a = -(-self.rate * t).exp() * (ndt - self.n2) / self.denom;
        let b = (self.rate * (self.tenor - t)).exp() * (self.n1 - ndt) / self.denom;
        Ok((a, b))
    }

    /// a_{i,j} for t_i <= t_j; the asymmetric exponential factor rides on
    /// the smaller time, consistent with the ascending convention of the
    /// sensitivity formula.
    fn second_order(&self, t_i: f64, t_j: f64) -> Result<(f64, f64)> {
        if self.degenerate() {
            return Err(PricingError::Degenerate(
                "N(d1) - N(d2) underflows: coefficient ratios undefined".into(),
            ));
        }
        let (lo, hi) = if t_i <= t_j { (t_i, t_j) } else { (t_j, t_i) };
        let nd_lo = norm_cdf(self.d_of_t(lo))?;
        let nd_hi = norm_cdf(self.d_of_t(hi))?;
        let var = self.vol * self.vol;
        let bracket = self.ca
            + self.cb * (nd_lo + nd_hi)
            + self.cc * nd_lo * nd_hi
            + self.cd * (var * lo).exp() * norm_pdf(self.d_of_t(lo + hi));
        let a = (-self.rate * (lo + hi)).exp() * bracket / self.gamma;
        let b = (self.rate * self.tenor).exp() * a;
        Ok((a, b))
    }
}

/// First-order adjustment coefficients (a_i, b_i) for one ex-date.
pub fn first_order_coeffs(
    market: &MarketParams,
    option: &OptionSpec,
    time: f64,
) -> Result<(f64, f64)> {
    check_time(option, time)?;
    Scalars::build(market, option)?.first_order(time)
}

/// Second-order adjustment coefficients (a_{i,j}, b_{i,j}) for a pair of
/// ex-dates; inputs are sorted ascending before evaluation.
pub fn second_order_coeffs(
    market: &MarketParams,
    option: &OptionSpec,
    t_i: f64,
    t_j: f64,
) -> Result<(f64, f64)> {
    check_time(option, t_i)?;
    check_time(option, t_j)?;
    Scalars::build(market, option)?.second_order(t_i, t_j)
}

fn check_time(option: &OptionSpec, t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0 && t < option.maturity) {
        return Err(PricingError::Domain(format!(
            "ex-date {t} outside (0, {})",
            option.maturity
        )));
    }
    Ok(())
}

/// All adjustment coefficients for a schedule, keyed by event index.
///
/// Intended for inspection and small schedules; the pricing path streams
/// the same sums without materializing the pair map.
#[derive(Debug, Clone)]
pub struct AdjustmentCoefficients {
    pub first_order: BTreeMap<usize, (f64, f64)>,
    pub second_order: BTreeMap<(usize, usize), (f64, f64)>,
}

impl AdjustmentCoefficients {
    pub fn compute(
        market: &MarketParams,
        option: &OptionSpec,
        schedule: &DividendSchedule,
    ) -> Result<Self> {
        schedule.validate_for(option)?;
        let scalars = Scalars::build(market, option)?;
        let mut first_order = BTreeMap::new();
        let mut second_order = BTreeMap::new();
        for (i, ev) in schedule.events().iter().enumerate() {
            check_time(option, ev.time)?;
            first_order.insert(i, scalars.first_order(ev.time)?);
        }
        for i in 0..schedule.len() {
            for j in i..schedule.len() {
                second_order.insert(
                    (i, j),
                    scalars.second_order(schedule.events()[i].time, schedule.events()[j].time)?,
                );
            }
        }
        Ok(Self {
            first_order,
            second_order,
        })
    }
}

/// Adjusted spot and strike S*, K*.
#[derive(Debug, Clone, Copy)]
pub struct AdjustedTerms {
    pub adjusted_spot: f64,
    pub adjusted_strike: f64,
}

/// Computes S* and K* for a schedule.
///
/// The quadratic sum runs over sorted pairs i <= j with weight 1 on the
/// diagonal and 2 off it, matching the unordered double sum.
pub fn adjusted_terms(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<AdjustedTerms> {
    schedule.validate_for(option)?;
    let scalars = Scalars::build(market, option)?;
    if scalars.degenerate() {
        return Err(PricingError::Degenerate(
            "N(d1) - N(d2) underflows: coefficient ratios undefined".into(),
        ));
    }
    let events = schedule.events();
    let mut spot_adj = market.spot;
    let mut strike_adj = option.strike;
    for ev in events {
        check_time(option, ev.time)?;
        let (a, b) = scalars.first_order(ev.time)?;
        spot_adj += a * ev.amount;
        strike_adj += b * ev.amount;
    }
    // The printed pair coefficient is the full mixed second derivative of
    // the adjustment, so each unordered pair enters once and the diagonal
    // carries the Taylor half.
    for i in 0..events.len() {
        for j in i..events.len() {
            let weight = if i == j { 0.5 } else { 1.0 };
            let (a, b) = scalars.second_order(events[i].time, events[j].time)?;
            spot_adj += weight * a * events[i].amount * events[j].amount;
            strike_adj += weight * b * events[i].amount * events[j].amount;
        }
    }
    if spot_adj <= 0.0 || strike_adj <= 0.0 {
        return Err(PricingError::AdjustmentOverflow(format!(
            "adjusted terms S*={spot_adj} K*={strike_adj}: dividends too large for the proxy"
        )));
    }
    Ok(AdjustedTerms {
        adjusted_spot: spot_adj,
        adjusted_strike: strike_adj,
    })
}

/// Proxy price outcome; `bv_fallback` flags the degenerate deep-ITM/OTM
/// regime where the Bos-Vandermark adjustment was used instead.
#[derive(Debug, Clone, Copy)]
pub struct ProxyPrice {
    pub price: f64,
    pub bv_fallback: bool,
}

/// The spot/strike-adjustment proxy price.
///
/// The call is Black-Scholes at (S*, K*); the put follows from the
/// parity identity built into the adjustment.
pub fn proxy_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
) -> Result<ProxyPrice> {
    schedule.validate_for(option)?;
    let scalars = Scalars::build(market, option)?;
    if scalars.degenerate() {
        let (spot_adj, strike_adj) = bv_terms(market, option, schedule)?;
        let inputs = BsInputs::new(
            spot_adj,
            strike_adj,
            option.maturity,
            market.rate,
            market.vol,
        )?;
        return Ok(ProxyPrice {
            price: bs_price(&inputs, option.kind)?,
            bv_fallback: true,
        });
    }
    let terms = adjusted_terms(market, option, schedule)?;
    let call_option = OptionSpec {
        kind: OptionKind::Call,
        ..*option
    };
    let inputs = BsInputs::new(
        terms.adjusted_spot,
        terms.adjusted_strike,
        option.maturity,
        market.rate,
        market.vol,
    )?;
    let call = bs_price(&inputs, OptionKind::Call)?;
    let _ = call_option;
    let price = match option.kind {
        OptionKind::Call => call,
        OptionKind::Put => {
            let forward = market.spot
                - option.strike * (-market.rate * option.maturity).exp()
                - schedule.present_value(market.rate);
            call - forward
        }
    };
    Ok(ProxyPrice {
        price,
        bv_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::DerivOrder;
    use crate::market::DividendEvent;
    use crate::sensitivity::{dividend_sensitivity, SensitivityRequest};
    use approx::assert_abs_diff_eq;

    fn setup() -> (MarketParams, OptionSpec) {
        (
            MarketParams::new(100.0, 0.03, 0.30).unwrap(),
            OptionSpec::new(100.0, 10.0, OptionKind::Call).unwrap(),
        )
    }

    #[test]
    fn first_order_limits() {
        let (market, option) = setup();
        let (a0, b0) = first_order_coeffs(&market, &option, 1e-12).unwrap();
        assert_abs_diff_eq!(a0, -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(b0, 0.0, epsilon = 1e-8);
        let (at, bt) = first_order_coeffs(&market, &option, 10.0 - 1e-12).unwrap();
        assert_abs_diff_eq!(at, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(bt, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn first_order_parity_constraint() {
        let (market, option) = setup();
        for i in 1..20 {
            let t = option.maturity * i as f64 / 20.0;
            let (a, b) = first_order_coeffs(&market, &option, t).unwrap();
            let residual =
                a - (-market.rate * option.maturity).exp() * b + (-market.rate * t).exp();
            assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-12);
            assert!((-1.0..=0.0).contains(&a), "a_i = {a} outside [-1, 0]");
        }
    }

    #[test]
    fn first_order_matches_linear_system() {
        // Eq for the first derivative match: N(d1) a - e^{-rT} N(d2) b = -e^{-rt} N(d(t)).
        let (market, option) = setup();
        let inputs = bs_inputs(&market, &option).unwrap();
        let (d1, d2) = d_values(&inputs);
        let n1 = norm_cdf(d1).unwrap();
        let n2 = norm_cdf(d2).unwrap();
        for t in [0.7, 3.3, 6.1, 9.2] {
            let (a, b) = first_order_coeffs(&market, &option, t).unwrap();
            let ndt = norm_cdf(d1 - market.vol * t / option.maturity.sqrt()).unwrap();
            let lhs = n1 * a - (-market.rate * option.maturity).exp() * n2 * b;
            let rhs = -(-market.rate * t).exp() * ndt;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_order_vanishes_at_boundaries() {
        let (market, option) = setup();
        let (a00, b00) = second_order_coeffs(&market, &option, 1e-9, 1e-9).unwrap();
        assert_abs_diff_eq!(a00, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(b00, 0.0, epsilon = 1e-10);
        let t_end = option.maturity - 1e-9;
        let (att, btt) = second_order_coeffs(&market, &option, t_end, t_end).unwrap();
        assert_abs_diff_eq!(att, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(btt, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn second_order_symmetric_in_arguments() {
        let (market, option) = setup();
        let ab = second_order_coeffs(&market, &option, 2.0, 7.0).unwrap();
        let ba = second_order_coeffs(&market, &option, 7.0, 2.0).unwrap();
        assert_eq!(ab, ba);
    }

    /// Independent route to the pair coefficient: solve the linear system
    /// from the chain-rule expansion of the proxy's second dividend
    /// derivative directly.
    fn beta_route(market: &MarketParams, option: &OptionSpec, t_i: f64, t_j: f64) -> f64 {
        let inputs = bs_inputs(market, option).unwrap();
        let (d1, d2) = d_values(&inputs);
        let n1 = norm_cdf(d1).unwrap();
        let n2 = norm_cdf(d2).unwrap();
        let target = dividend_sensitivity(
            &SensitivityRequest::new(*market, *option, vec![t_i, t_j]).unwrap(),
        )
        .unwrap();
        let (a_i, b_i) = first_order_coeffs(market, option, t_i).unwrap();
        let (a_j, b_j) = first_order_coeffs(market, option, t_j).unwrap();
        let d_ss =
            crate::bs::bs_derivative(&inputs, DerivOrder::new(2, 0).unwrap(), OptionKind::Call)
                .unwrap();
        let d_sk =
            crate::bs::bs_derivative(&inputs, DerivOrder::new(1, 1).unwrap(), OptionKind::Call)
                .unwrap();
        let d_kk =
            crate::bs::bs_derivative(&inputs, DerivOrder::new(0, 2).unwrap(), OptionKind::Call)
                .unwrap();
        let beta = target - a_i * a_j * d_ss - (a_i * b_j + a_j * b_i) * d_sk - b_i * b_j * d_kk;
        beta / (n1 - n2)
    }

    #[test]
    fn second_order_closed_form_matches_linear_system_route() {
        let (market, option) = setup();
        for (ti, tj) in [(2.0, 7.0), (1.0, 1.0), (4.5, 9.5), (0.5, 3.0)] {
            let (a_cf, b_cf) = second_order_coeffs(&market, &option, ti, tj).unwrap();
            let a_sys = beta_route(&market, &option, ti, tj);
            assert_abs_diff_eq!(a_cf, a_sys, epsilon = 1e-10 * a_sys.abs().max(1e-8));
            assert_abs_diff_eq!(
                b_cf,
                (market.rate * option.maturity).exp() * a_cf,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn adjusted_terms_empty_schedule() {
        let (market, option) = setup();
        let terms = adjusted_terms(&market, &option, &DividendSchedule::empty()).unwrap();
        assert_eq!(terms.adjusted_spot, market.spot);
        assert_eq!(terms.adjusted_strike, option.strike);
    }

    #[test]
    fn adjusted_terms_parity_identity() {
        let (market, option) = setup();
        let schedule = DividendSchedule::periodic(0.5, 1.0, 3.0, option.maturity).unwrap();
        let terms = adjusted_terms(&market, &option, &schedule).unwrap();
        let df = (-market.rate * option.maturity).exp();
        let lhs = terms.adjusted_spot - terms.adjusted_strike * df;
        let rhs = market.spot - option.strike * df - schedule.present_value(market.rate);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn spot_and_maturity_limits_recover_exact_price() {
        let (market, option) = setup();
        let total = 6.0;
        let near_zero = DividendSchedule::new(vec![
            DividendEvent {
                time: 1e-7,
                amount: 2.5,
            },
            DividendEvent {
                time: 2e-7,
                amount: 3.5,
            },
        ])
        .unwrap();
        let shifted = BsInputs::new(
            market.spot - total,
            option.strike,
            option.maturity,
            market.rate,
            market.vol,
        )
        .unwrap();
        let exact = bs_price(&shifted, OptionKind::Call).unwrap();
        let p = proxy_price(&market, &option, &near_zero).unwrap();
        assert!(!p.bv_fallback);
        assert_abs_diff_eq!(p.price, exact, epsilon = 1e-8 * exact);

        let near_mat = DividendSchedule::new(vec![
            DividendEvent {
                time: option.maturity - 2e-7,
                amount: 2.5,
            },
            DividendEvent {
                time: option.maturity - 1e-7,
                amount: 3.5,
            },
        ])
        .unwrap();
        let strike_shifted = BsInputs::new(
            market.spot,
            option.strike + total,
            option.maturity,
            market.rate,
            market.vol,
        )
        .unwrap();
        let exact = bs_price(&strike_shifted, OptionKind::Call).unwrap();
        let p = proxy_price(&market, &option, &near_mat).unwrap();
        assert_abs_diff_eq!(p.price, exact, epsilon = 1e-8 * exact);
    }

    /// Finite-difference dividend derivatives of the proxy at zero
    /// dividends must reproduce the exact sensitivity formula: the
    /// defining membership condition of the order-2 Taylor class.
    fn proxy_at(market: &MarketParams, option: &OptionSpec, times: &[f64], amounts: &[f64]) -> f64 {
        let events = times
            .iter()
            .zip(amounts)
            .map(|(&time, &amount)| DividendEvent { time, amount })
            .collect();
        let schedule = DividendSchedule::new_signed(events).unwrap();
        proxy_price(market, option, &schedule).unwrap().price
    }

    #[test]
    fn taylor_class_membership_first_and_second_order() {
        let (market, option) = setup();
        let times = [2.0, 7.0];
        let h = 1e-3 * market.spot;

        // first derivative in C_1
        let up = proxy_at(&market, &option, &times, &[h, 0.0]);
        let down = proxy_at(&market, &option, &times, &[-0.0, 0.0]);
        let fd1 = (up - down) / h;
        let exact1 =
            dividend_sensitivity(&SensitivityRequest::new(market, option, vec![times[0]]).unwrap())
                .unwrap();
        // one-sided first-order difference carries O(h) truncation; use
        // central instead
        let central = (proxy_at(&market, &option, &times, &[h, 0.0])
            - proxy_at(&market, &option, &times, &[-h, 0.0]))
            / (2.0 * h);
        let _ = fd1;
        assert_abs_diff_eq!(central, exact1, epsilon = 1e-6);

        // pure second derivative in C_1
        let mid = proxy_at(&market, &option, &times, &[0.0, 0.0]);
        let fd2 = (proxy_at(&market, &option, &times, &[h, 0.0]) - 2.0 * mid
            + proxy_at(&market, &option, &times, &[-h, 0.0]))
            / (h * h);
        let exact2 = dividend_sensitivity(
            &SensitivityRequest::new(market, option, vec![times[0], times[0]]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(fd2, exact2, epsilon = 1e-6);

        // mixed second derivative in (C_1, C_2)
        let pp = proxy_at(&market, &option, &times, &[h, h]);
        let pm = proxy_at(&market, &option, &times, &[h, -h]);
        let mp = proxy_at(&market, &option, &times, &[-h, h]);
        let mm = proxy_at(&market, &option, &times, &[-h, -h]);
        let cross = (pp - pm - mp + mm) / (4.0 * h * h);
        let exact_cross = dividend_sensitivity(
            &SensitivityRequest::new(market, option, vec![times[0], times[1]]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(cross, exact_cross, epsilon = 1e-6);
    }

    #[test]
    fn paper_table_values() {
        let market = MarketParams::new(100.0, 0.03, 0.30).unwrap();
        let sched5 = DividendSchedule::periodic(0.5, 1.0, 3.0, 5.0).unwrap();
        let atm5 = OptionSpec::new(100.0, 5.0, OptionKind::Call).unwrap();
        let p5 = proxy_price(&market, &atm5, &sched5).unwrap().price;
        assert_abs_diff_eq!(p5, 24.42, epsilon = 0.005);

        let sched20 = DividendSchedule::periodic(0.5, 1.0, 3.0, 20.0).unwrap();
        let itm20 = OptionSpec::new(50.0, 20.0, OptionKind::Call).unwrap();
        let p20 = proxy_price(&market, &itm20, &sched20).unwrap().price;
        assert_abs_diff_eq!(p20, 46.10, epsilon = 0.005);

        // Weekly schedule: 7-day steps on a 365.25-day year, first ex-date
        // at (numerically) zero.
        let hf_market = MarketParams::new(3000.0, 0.03, 0.30).unwrap();
        let hf_sched = DividendSchedule::periodic(1e-6, 7.0 / 365.25, 2.0, 20.0).unwrap();
        let hf_itm = OptionSpec::new(1500.0, 20.0, OptionKind::Call).unwrap();
        let hf = proxy_price(&hf_market, &hf_itm, &hf_sched).unwrap().price;
        assert_abs_diff_eq!(hf, 1264.53, epsilon = 0.25);
    }

    #[test]
    fn put_price_via_parity() {
        let (market, option) = setup();
        let put_option = OptionSpec {
            kind: OptionKind::Put,
            ..option
        };
        let schedule = DividendSchedule::periodic(0.5, 1.0, 3.0, option.maturity).unwrap();
        let call = proxy_price(&market, &option, &schedule).unwrap().price;
        let put = proxy_price(&market, &put_option, &schedule).unwrap().price;
        let forward = market.spot
            - option.strike * (-market.rate * option.maturity).exp()
            - schedule.present_value(market.rate);
        assert_abs_diff_eq!(call - put, forward, epsilon = 1e-10);
    }

    #[test]
    fn rejects_times_outside_range() {
        let (market, option) = setup();
        assert!(first_order_coeffs(&market, &option, 0.0).is_err());
        assert!(first_order_coeffs(&market, &option, 10.0).is_err());
        assert!(second_order_coeffs(&market, &option, 1.0, 12.0).is_err());
    }

    #[test]
    fn degenerate_option_falls_back_to_bv() {
        // Deep OTM to the point where N(d1) and N(d2) coincide at machine
        // level: forward-like degenerate regime.
        let market = MarketParams::new(1.0, 0.0, 0.0001).unwrap();
        let option = OptionSpec::new(1e6, 0.01, OptionKind::Call).unwrap();
        let schedule = DividendSchedule::new(vec![DividendEvent {
            time: 0.005,
            amount: 0.01,
        }])
        .unwrap();
        let p = proxy_price(&market, &option, &schedule).unwrap();
        assert!(p.bv_fallback);
    }
}
