//! Market data model: flat-parameter market, option terms, and the
//! discrete cash-dividend schedule under the liquidator policy.

use std::path::Path;

use crate::bs::{BsInputs, OptionKind};
use crate::error::{PricingError, Result};

/// Flat market parameters: spot, continuously-compounded rate, volatility.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    pub rate: f64,
    pub vol: f64,
}

impl MarketParams {
    pub fn new(spot: f64, rate: f64, vol: f64) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(PricingError::Domain(format!(
                "spot must be positive, got {spot}"
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
        Ok(Self { spot, rate, vol })
    }
}

/// European option terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64, kind: OptionKind) -> Result<Self> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(PricingError::Domain(format!(
                "strike must be positive, got {strike}"
            )));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(PricingError::Domain(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        Ok(Self {
            strike,
            maturity,
            kind,
        })
    }
}

/// Combine market and option terms into zero-dividend BS inputs.
pub fn bs_inputs(market: &MarketParams, option: &OptionSpec) -> Result<BsInputs> {
    BsInputs::new(
        market.spot,
        option.strike,
        option.maturity,
        market.rate,
        market.vol,
    )
}

/// A single cash dividend: ex-date in years and amount.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DividendEvent {
    pub time: f64,
    pub amount: f64,
}

/// Ordered schedule of cash dividends with strictly increasing ex-dates.
///
/// Coinciding dates must be pre-merged by the caller (amounts summed);
/// the constructor rejects them.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct DividendSchedule {
    events: Vec<DividendEvent>,
}

impl DividendSchedule {
    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    pub fn new(events: Vec<DividendEvent>) -> Result<Self> {
        Self::build(events, false)
    }

    /// Like [`DividendSchedule::new`] but allows negative amounts.
    ///
    /// Finite-difference probes of the dividend derivatives bump the
    /// amounts on both sides of zero; the pricing formulas extend to
    /// negative amounts, the liquidator policy does not.
    pub fn new_signed(events: Vec<DividendEvent>) -> Result<Self> {
        Self::build(events, true)
    }

    fn build(events: Vec<DividendEvent>, allow_negative: bool) -> Result<Self> {
        let mut prev = 0.0;
        for (idx, ev) in events.iter().enumerate() {
            if !(ev.time.is_finite() && ev.time > 0.0) {
                return Err(PricingError::Domain(format!(
                    "dividend {idx}: time must be positive, got {}",
                    ev.time
                )));
            }
            if ev.time <= prev {
                return Err(PricingError::Domain(format!(
                    "dividend {idx}: dates must be strictly increasing ({} after {prev})",
                    ev.time
                )));
            }
            if !(ev.amount.is_finite() && (allow_negative || ev.amount >= 0.0)) {
                return Err(PricingError::Domain(format!(
                    "dividend {idx}: amount must be non-negative, got {}",
                    ev.amount
                )));
            }
            prev = ev.time;
        }
        Ok(Self { events })
    }

    /// Periodic schedule: dates start, start + step, ... strictly below horizon.
    pub fn periodic(start: f64, step: f64, amount: f64, horizon: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(PricingError::Domain(format!(
                "step must be positive, got {step}"
            )));
        }
        let mut events = Vec::new();
        let mut i = 0u32;
        loop {
            let t = start + f64::from(i) * step;
            if t >= horizon {
                break;
            }
            if t > 0.0 {
                events.push(DividendEvent { time: t, amount });
            }
            i += 1;
        }
        Self::new(events)
    }

    pub fn events(&self) -> &[DividendEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn total_amount(&self) -> f64 {
        self.events.iter().map(|ev| ev.amount).sum()
    }

    /// Events strictly before the horizon, order preserved.
    pub fn within(&self, horizon: f64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .copied()
                .filter(|ev| ev.time < horizon)
                .collect(),
        }
    }

    /// Present value of the schedule: sum of C_i * exp(-r T_i).
    pub fn present_value(&self, rate: f64) -> f64 {
        self.events
            .iter()
            .map(|ev| ev.amount * (-rate * ev.time).exp())
            .sum()
    }

    /// Loads a `time_years,amount` CSV file (header required, ascending rows).
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| PricingError::ScheduleLoad(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| PricingError::ScheduleLoad(e.to_string()))?
            .clone();
        if headers.len() < 2 || &headers[0] != "time_years" || &headers[1] != "amount" {
            return Err(PricingError::ScheduleLoad(format!(
                "expected header `time_years,amount`, got {headers:?}"
            )));
        }
        let mut events = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| PricingError::ScheduleLoad(e.to_string()))?;
            let parse = |field: &str| -> Result<f64> {
                field.parse::<f64>().map_err(|_| {
                    PricingError::ScheduleLoad(format!("row {}: bad number {field:?}", idx + 2))
                })
            };
            events.push(DividendEvent {
                time: parse(&record[0])?,
                amount: parse(&record[1])?,
            });
        }
        Self::new(events)
    }

    /// Writes the schedule back in the same CSV format.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| PricingError::ScheduleLoad(format!("{}: {e}", path.display())))?;
        writer
            .write_record(["time_years", "amount"])
            .map_err(|e| PricingError::ScheduleLoad(e.to_string()))?;
        for ev in &self.events {
            writer
                .write_record([ev.time.to_string(), ev.amount.to_string()])
                .map_err(|e| PricingError::ScheduleLoad(e.to_string()))?;
        }
        writer
            .flush()
            .map_err(|e| PricingError::ScheduleLoad(e.to_string()))?;
        Ok(())
    }

    /// Checks every ex-date lies strictly inside (0, maturity).
    pub fn validate_for(&self, option: &OptionSpec) -> Result<()> {
        if let Some(last) = self.events.last() {
            if last.time >= option.maturity {
                return Err(PricingError::Domain(format!(
                    "dividend at {} is not before maturity {}",
                    last.time, option.maturity
                )));
            }
        }
        Ok(())
    }
}

/// Liquidator dividend policy: the stock drops by the full cash amount
/// when it exceeds it, otherwise it is absorbed at zero.
pub fn apply_dividend(pre_div_spot: f64, cash: f64) -> f64 {
    if pre_div_spot > cash {
        pre_div_spot - cash
    } else {
        0.0
    }
}
