//! Crank-Nicolson finite-difference pricer on a log-spot grid with
//! dividend jump conditions.
//!
//! Between ex-dates the scheme is standard Crank-Nicolson; at maturity
//! and after every dividend jump the first few steps run fully
//! implicit (Rannacher restart) to damp the oscillations the jump
//! kinks would otherwise excite. The jump condition
//! `V(s, T_i-) = V(apply_dividend(s, C_i), T_i+)` is applied through
//! monotone cubic interpolation so convexity survives for bump-based
//! sensitivity checks.

use crate::bs::OptionKind;
use crate::error::{PricingError, Result};
use crate::market::{apply_dividend, DividendSchedule, MarketParams, OptionSpec};

/// Resolution of the finite-difference solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub space_nodes: usize,
    pub steps_per_year: usize,
    /// Half-width of the grid in terminal standard deviations.
    pub space_width: f64,
    pub rannacher_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            space_nodes: 800,
            steps_per_year: 200,
            space_width: 7.0,
            rannacher_steps: 4,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.space_nodes < 200 {
            return Err(PricingError::Domain(format!(
                "space_nodes must be >= 200, got {}",
                self.space_nodes
            )));
        }
        if self.steps_per_year < 100 {
            return Err(PricingError::Domain(format!(
                "steps_per_year must be >= 100, got {}",
                self.steps_per_year
            )));
        }
        if !self.space_width.is_finite() || self.space_width < 6.0 {
            return Err(PricingError::Domain(format!(
                "space_width must be >= 6, got {}",
                self.space_width
            )));
        }
        if self.rannacher_steps < 2 {
            return Err(PricingError::Domain(format!(
                "rannacher_steps must be >= 2, got {}",
                self.rannacher_steps
            )));
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        Self {
            space_nodes: (self.space_nodes / 2).max(200),
            steps_per_year: (self.steps_per_year / 2).max(100),
            space_width: self.space_width,
            rannacher_steps: self.rannacher_steps,
        }
    }
}

/// PDE price plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub price: f64,
    /// Set when the coarse-grid comparison suggests the requested
    /// resolution misses the 0.05% accuracy target.
    pub accuracy_warning: Option<String>,
}

/// Solves the tridiagonal system a[i]*x[i-1] + b[i]*x[i] + c[i]*x[i+1] = d[i].
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    scratch[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= scratch[i] * d[i + 1];
    }
}

/// Monotone (Fritsch-Carlson) cubic Hermite slopes on a non-uniform grid.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let one_sided = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            s = 0.0;
        } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    d[0] = one_sided(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = one_sided(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Evaluates the monotone cubic at a single query (x must be sorted).
fn pchip_eval(x: &[f64], y: &[f64], d: &[f64], q: f64) -> f64 {
    let n = x.len();
    if q <= x[0] {
        return y[0];
    }
    if q >= x[n - 1] {
        return y[n - 1];
    }
    let i = match x.binary_search_by(|v| v.partial_cmp(&q).unwrap()) {
        Ok(i) => return y[i],
        Err(i) => i - 1,
    };
    let h = x[i + 1] - x[i];
    let t = (q - x[i]) / h;
    let (t2, t3) = (t * t, t * t * t);
    y[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d[i] * h * (t3 - 2.0 * t2 + t)
        + y[i + 1] * (-2.0 * t3 + 3.0 * t2)
        + d[i + 1] * h * (t3 - t2)
}

/// Solution grids on either side of a dividend jump (post-ex-date
/// values first, jump-mapped values second).
type JumpPair = (Vec<f64>, Vec<f64>);

struct Solver<'a> {
    market: &'a MarketParams,
    option: &'a OptionSpec,
    events: Vec<(f64, f64)>,
    spots: Vec<f64>,
    dx: f64,
}

impl<'a> Solver<'a> {
    fn new(
        market: &'a MarketParams,
        option: &'a OptionSpec,
        schedule: &DividendSchedule,
        grid: &GridConfig,
    ) -> Self {
        let half = grid.space_width * market.vol * option.maturity.sqrt();
        let pv = schedule.within(option.maturity).present_value(market.rate);
        // Lower edge follows the dividend-depleted spot so the absorbed
        // region stays on-grid.
        let low_ref = (market.spot - pv).max(market.spot * 1e-3);
        let x_hi = market.spot.ln() + half;
        let mut x_lo = low_ref.ln() - half;
        let n = grid.space_nodes;
        let mut dx = (x_hi - x_lo) / (n - 1) as f64;
        // Shift so ln(spot) lands exactly on a node.
        let k = ((market.spot.ln() - x_lo) / dx).round();
        x_lo = market.spot.ln() - k * dx;
        dx = dx.max(f64::MIN_POSITIVE);
        let spots: Vec<f64> = (0..n).map(|j| (x_lo + j as f64 * dx).exp()).collect();
        let events: Vec<(f64, f64)> = schedule
            .within(option.maturity)
            .events()
            .iter()
            .map(|ev| (ev.time, ev.amount))
            .collect();
        Self {
            market,
            option,
            events,
            spots,
            dx,
        }
    }

    fn remaining_pv(&self, t: f64) -> f64 {
        self.events
            .iter()
            .filter(|(ti, _)| *ti > t)
            .map(|(ti, c)| c * (-self.market.rate * (ti - t)).exp())
            .sum()
    }

    fn boundary_low(&self, t: f64, spot: f64) -> f64 {
        let tau = self.option.maturity - t;
        let disc_k = self.option.strike * (-self.market.rate * tau).exp();
        match self.option.kind {
            OptionKind::Call => 0.0,
            OptionKind::Put => (disc_k - (spot - self.remaining_pv(t)).max(0.0)).max(0.0),
        }
    }

    fn boundary_high(&self, t: f64, spot: f64) -> f64 {
        let tau = self.option.maturity - t;
        let disc_k = self.option.strike * (-self.market.rate * tau).exp();
        match self.option.kind {
            OptionKind::Call => (spot - self.remaining_pv(t) - disc_k).max(0.0),
            OptionKind::Put => 0.0,
        }
    }

    /// Value of a position absorbed at zero, seen at time t.
    fn absorbed_value(&self, t: f64) -> f64 {
        let tau = self.option.maturity - t;
        match self.option.kind {
            OptionKind::Call => 0.0,
            OptionKind::Put => self.option.strike * (-self.market.rate * tau).exp(),
        }
    }

    /// Maps the post-ex-date grid through the dividend drop.
    fn apply_jump(&self, values: &[f64], cash: f64, t: f64) -> Vec<f64> {
        let slopes = pchip_slopes(&self.spots, values);
        self.spots
            .iter()
            .map(|&s| {
                let dropped = apply_dividend(s, cash);
                if dropped <= 0.0 {
                    self.absorbed_value(t)
                } else if dropped < self.spots[0] {
                    self.boundary_low(t, dropped)
                } else {
                    pchip_eval(&self.spots, values, &slopes, dropped)
                }
            })
            .collect()
    }

    /// Backward induction; `capture` selects an event index whose
    /// pre/post-jump grids are returned for the continuity check.
    fn run(&self, grid: &GridConfig, capture: Option<usize>) -> (Vec<f64>, Option<JumpPair>) {
        let n = self.spots.len();
        let (r, sigma) = (self.market.rate, self.market.vol);
        let drift = r - 0.5 * sigma * sigma;
        let diff = 0.5 * sigma * sigma / (self.dx * self.dx);
        let conv = drift / (2.0 * self.dx);
        // spatial operator L: sub/diag/super coefficients
        let (la, lb, lc) = (diff - conv, -2.0 * diff - r, diff + conv);

        let mut values: Vec<f64> = self
            .spots
            .iter()
            .map(|&s| match self.option.kind {
                OptionKind::Call => (s - self.option.strike).max(0.0),
                OptionKind::Put => (self.option.strike - s).max(0.0),
            })
            .collect();
        let mut captured = None;

        let mut sub = vec![0.0; n - 2];
        let mut diag = vec![0.0; n - 2];
        let mut sup = vec![0.0; n - 2];
        let mut rhs = vec![0.0; n - 2];
        let mut scratch = vec![0.0; n - 2];

        // segment boundaries: 0, ex-dates, maturity
        let mut knots = vec![0.0];
        knots.extend(self.events.iter().map(|(t, _)| *t));
        knots.push(self.option.maturity);

        for seg in (0..knots.len() - 1).rev() {
            let (a, b) = (knots[seg], knots[seg + 1]);
            if b - a <= 0.0 {
                continue;
            }
            let steps = ((b - a) * grid.steps_per_year as f64).ceil().max(1.0) as usize;
            let dt = (b - a) / steps as f64;
            for step in 0..steps {
                // Rannacher restart: fully implicit right after maturity
                // and after every jump.
                let theta = if step < grid.rannacher_steps {
                    1.0
                } else {
                    0.5
                };
                let t_new = b - (step + 1) as f64 * dt;
                let lo = self.boundary_low(t_new, self.spots[0]);
                let hi = self.boundary_high(t_new, self.spots[n - 1]);
                let expl = (1.0 - theta) * dt;
                for i in 0..n - 2 {
                    sub[i] = -theta * dt * la;
                    diag[i] = 1.0 - theta * dt * lb;
                    sup[i] = -theta * dt * lc;
                    rhs[i] = values[i + 1]
                        + expl * (la * values[i] + lb * values[i + 1] + lc * values[i + 2]);
                }
                rhs[0] += theta * dt * la * lo;
                rhs[n - 3] += theta * dt * lc * hi;
                thomas(&sub, &diag, &sup, &mut rhs, &mut scratch);
                values[0] = lo;
                values[n - 1] = hi;
                values[1..n - 1].copy_from_slice(&rhs);
            }
            if seg > 0 {
                // arrived at ex-date knots[seg]: apply the dividend drop
                let (t_ex, cash) = self.events[seg - 1];
                let mapped = self.apply_jump(&values, cash, t_ex);
                if capture == Some(seg - 1) {
                    captured = Some((values.clone(), mapped.clone()));
                }
                values = mapped;
            }
        }
        (values, captured)
    }

    fn value_at_spot(&self, values: &[f64]) -> f64 {
        let slopes = pchip_slopes(&self.spots, values);
        pchip_eval(&self.spots, values, &slopes, self.market.spot)
    }
}

fn solve_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
    grid: &GridConfig,
) -> f64 {
    let solver = Solver::new(market, option, schedule, grid);
    let (values, _) = solver.run(grid, None);
    solver.value_at_spot(&values)
}

/// Finite-difference reference price.
///
/// Runs the requested grid plus a half-resolution pass; a relative gap
/// above the 0.05% accuracy target is reported as a warning instead of
/// an error so callers can decide whether to refine.
pub fn pde_price(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
    grid: &GridConfig,
) -> Result<PdeSolution> {
    grid.validate()?;
    schedule.validate_for(option)?;
    let price = solve_price(market, option, schedule, grid);
    let coarse = solve_price(market, option, schedule, &grid.halved());
    let scale = price.abs().max(1e-8);
    let gap = (price - coarse).abs() / scale;
    // CN is second order: the half-grid gap overstates the fine-grid
    // error by ~3x, so this is a conservative trigger.
    let accuracy_warning = (gap > 1.5e-3).then(|| {
        format!(
            "half-resolution gap {:.2e} relative exceeds the 0.05% target",
            gap
        )
    });
    Ok(PdeSolution {
        price,
        accuracy_warning,
    })
}

/// Price continuity across ex-date `i`: compares the jump-mapped grid
/// against a direct evaluation of the post-ex-date solution at
/// midpoints between nodes. Returns the maximum absolute mismatch.
pub fn continuity_check(
    market: &MarketParams,
    option: &OptionSpec,
    schedule: &DividendSchedule,
    grid: &GridConfig,
    i: usize,
) -> Result<f64> {
    grid.validate()?;
    schedule.validate_for(option)?;
    let events = schedule.within(option.maturity);
    if i >= events.len() {
        return Err(PricingError::Domain(format!(
            "event index {i} out of range for schedule of length {}",
            events.len()
        )));
    }
    let solver = Solver::new(market, option, schedule, grid);
    let (_, captured) = solver.run(grid, Some(i));
    let (post, pre) = captured.expect("capture index validated above");
    let (t_ex, cash) = solver.events[i];
    let post_slopes = pchip_slopes(&solver.spots, &post);
    let pre_slopes = pchip_slopes(&solver.spots, &pre);
    let mut gap: f64 = 0.0;
    for w in solver.spots.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let lhs = pchip_eval(&solver.spots, &pre, &pre_slopes, mid);
        let dropped = apply_dividend(mid, cash);
        let rhs = if dropped <= 0.0 {
            solver.absorbed_value(t_ex)
        } else if dropped < solver.spots[0] {
            solver.boundary_low(t_ex, dropped)
        } else {
            pchip_eval(&solver.spots, &post, &post_slopes, dropped)
        };
        gap = gap.max((lhs - rhs).abs());
    }
    Ok(gap)
}
