//! Closed-form Black-Scholes primitives: normal distribution, vanilla
//! prices, and analytic partial derivatives in spot and strike up to the
//! orders the dividend-sensitivity and adjustment formulas require.

use crate::error::{PricingError, Result};

use std::f64::consts::PI;

/// Call/put flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Standard normal cumulative distribution function.
///
/// Evaluated through the complementary error function, accurate to
/// better than 1e-14 absolute over the whole real line.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(PricingError::Domain(format!(
            "norm_cdf: non-finite argument {x}"
        )));
    }
    Ok(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inputs to the Black-Scholes formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsInputs {
    pub spot: f64,
    pub strike: f64,
    pub tenor: f64,
    pub rate: f64,
    pub vol: f64,
}

impl BsInputs {
    pub fn new(spot: f64, strike: f64, tenor: f64, rate: f64, vol: f64) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(PricingError::Domain(format!(
                "spot must be positive, got {spot}"
            )));
        }
        if !(strike.is_finite() && strike > 0.0) {
            return Err(PricingError::Domain(format!(
                "strike must be positive, got {strike}"
            )));
        }
        if !(tenor.is_finite() && tenor > 0.0) {
            return Err(PricingError::Domain(format!(
                "tenor must be positive, got {tenor}"
            )));
        }
        if !rate.is_finite() {
            return Err(PricingError::Domain(format!(
                "rate must be finite, got {rate}"
            )));
        }
        if !(vol.is_finite() && vol > 0.0) {
            return Err(PricingError::Domain(format!(
                "vol must be positive, got {vol}"
            )));
        }
        Ok(Self {
            spot,
            strike,
            tenor,
            rate,
            vol,
        })
    }

    /// Total volatility over the tenor, sigma * sqrt(T).
    pub fn total_vol(&self) -> f64 {
        self.vol * self.tenor.sqrt()
    }
}

/// The pair (d1, d2).
pub fn d_values(inputs: &BsInputs) -> (f64, f64) {
    let v = inputs.total_vol();
    let d1 = ((inputs.spot / inputs.strike).ln()
        + (inputs.rate + 0.5 * inputs.vol * inputs.vol) * inputs.tenor)
        / v;
    (d1, d1 - v)
}

/// d(t) = d1 - sigma * t / sqrt(T); interpolates between d1 at t=0 and d2 at t=T.
pub fn d_of_t(inputs: &BsInputs, t: f64) -> f64 {
    let (d1, _) = d_values(inputs);
    d1 - inputs.vol * t / inputs.tenor.sqrt()
}

/// Vanilla Black-Scholes price.
pub fn bs_price(inputs: &BsInputs, kind: OptionKind) -> Result<f64> {
    let (d1, d2) = d_values(inputs);
    let df = (-inputs.rate * inputs.tenor).exp();
    let call = inputs.spot * norm_cdf(d1)? - inputs.strike * df * norm_cdf(d2)?;
    Ok(match kind {
        OptionKind::Call => call.max(0.0),
        OptionKind::Put => (call - inputs.spot + inputs.strike * df).max(0.0),
    })
}

/// A mixed partial-derivative order (spot_order, strike_order).
///
/// Supported range: spot_order <= 4, strike_order <= 2, sum <= 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivOrder {
    pub spot_order: u32,
    pub strike_order: u32,
}

impl DerivOrder {
    pub fn new(spot_order: u32, strike_order: u32) -> Result<Self> {
        if spot_order > 4 || strike_order > 2 || spot_order + strike_order > 4 {
            return Err(PricingError::Capability(format!(
                "derivative order ({spot_order},{strike_order}) outside supported caps"
            )));
        }
        Ok(Self {
            spot_order,
            strike_order,
        })
    }
}

/// Analytic partial derivative d^(i+j) price / dS^i dK^j.
///
/// Orders above first differ between call and put only through parity,
/// so the second and higher derivatives are shared.
pub fn bs_derivative(inputs: &BsInputs, order: DerivOrder, kind: OptionKind) -> Result<f64> {
    let (d1, d2) = d_values(inputs);
    let s = inputs.spot;
    let k = inputs.strike;
    let v = inputs.total_vol();
    let df = (-inputs.rate * inputs.tenor).exp();
    let u = d1 / v;

    let value = match (order.spot_order, order.strike_order) {
        (0, 0) => return bs_price(inputs, kind),
        (1, 0) => {
            let n1 = norm_cdf(d1)?;
            match kind {
                OptionKind::Call => n1,
                OptionKind::Put => n1 - 1.0,
            }
        }
        (0, 1) => {
            let n2 = norm_cdf(d2)?;
            match kind {
                OptionKind::Call => -df * n2,
                OptionKind::Put => df * (1.0 - n2),
            }
        }
        (2, 0) => norm_pdf(d1) / (s * v),
        (3, 0) => -norm_pdf(d1) / (s * s * v) * (u + 1.0),
        (4, 0) => norm_pdf(d1) / (s * s * s * v) * (u * u + 3.0 * u + 2.0 - 1.0 / (v * v)),
        (0, 2) => df * norm_pdf(d2) / (k * v),
        (1, 1) => -norm_pdf(d1) / (k * v),
        (1, 2) => -norm_pdf(d1) / (k * k * v) * (u - 1.0),
        (2, 1) => d1 * norm_pdf(d1) / (s * k * v * v),
        (2, 2) => norm_pdf(d1) / (s * k * k * v * v) * ((d1 * d1 - 1.0) / v - d1),
        (3, 1) => -norm_pdf(d1) / (s * s * k * v * v) * (d1 * u + d1 - 1.0 / v),
        (i, j) => {
            return Err(PricingError::Capability(format!(
                "derivative order ({i},{j}) not implemented"
            )))
        }
    };
    Ok(value)
}
