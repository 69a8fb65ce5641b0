//! Benchmark report generation: price grid, CSV, and markdown views.

use std::time::Instant;

use divprox_core::{OptionKind, OptionSpec, Result};

use crate::config::BenchConfig;
use crate::methods::{price_with, Method};

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub maturity: f64,
    pub strike_ratio: f64,
    pub method: Method,
    pub price: Option<f64>,
    /// 100 * (method - pde) / pde; zero by definition for the pde rows.
    pub rel_err_pct: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PricingReport {
    pub rows: Vec<ReportRow>,
}

/// Prices every (maturity, strike ratio, method) cell of the config.
///
/// Method failures are recorded in the affected row; the rest of the
/// table is still produced.
pub fn build_report(config: &BenchConfig) -> Result<PricingReport> {
    let mut rows = Vec::new();
    for &maturity in &config.maturities {
        let schedule = config.schedule.realize(maturity)?;
        for &ratio in &config.strike_ratios {
            let strike = config.market.spot * ratio;
            let option = OptionSpec::new(strike, maturity, OptionKind::Call)?;

            // reference first so every other method can report its error
            let started = Instant::now();
            let pde = price_with(
                Method::Pde,
                &config.market,
                &option,
                &schedule,
                &config.grid,
                &config.mc,
            );
            let pde_ms = started.elapsed().as_secs_f64() * 1e3;
            let pde_price = pde.as_ref().ok().map(|(p, _)| *p);
            rows.push(match pde {
                Ok((price, _)) => ReportRow {
                    maturity,
                    strike_ratio: ratio,
                    method: Method::Pde,
                    price: Some(price),
                    rel_err_pct: Some(0.0),
                    runtime_ms: pde_ms,
                    error: None,
                },
                Err(e) => ReportRow {
                    maturity,
                    strike_ratio: ratio,
                    method: Method::Pde,
                    price: None,
                    rel_err_pct: None,
                    runtime_ms: pde_ms,
                    error: Some(e.to_string()),
                },
            });

            for &method in &config.methods {
                if method == Method::Pde {
                    continue;
                }
                let started = Instant::now();
                let outcome = price_with(
                    method,
                    &config.market,
                    &option,
                    &schedule,
                    &config.grid,
                    &config.mc,
                );
                let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
                rows.push(match outcome {
                    Ok((price, _)) => ReportRow {
                        maturity,
                        strike_ratio: ratio,
                        method,
                        price: Some(price),
                        rel_err_pct: pde_price.map(|fd| 100.0 * (price - fd) / fd),
                        runtime_ms,
                        error: None,
                    },
                    Err(e) => ReportRow {
                        maturity,
                        strike_ratio: ratio,
                        method,
                        price: None,
                        rel_err_pct: None,
                        runtime_ms,
                        error: Some(e.to_string()),
                    },
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.maturity, a.strike_ratio, a.method)
            .partial_cmp(&(b.maturity, b.strike_ratio, b.method))
            .unwrap()
    });
    Ok(PricingReport { rows })
}

fn fmt_opt(value: Option<f64>, digits: usize) -> String {
    value.map_or_else(String::new, |v| format!("{v:.digits$}"))
}

impl PricingReport {
    /// Machine-readable view; one row per cell and method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("maturity,strike_ratio,method,price,rel_err_pct,runtime_ms\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                row.maturity,
                row.strike_ratio,
                row.method,
                fmt_opt(row.price, 6),
                fmt_opt(row.rel_err_pct, 4),
                row.runtime_ms,
            ));
        }
        out
    }

    /// Human-readable view: one prices block and one relative-errors
    /// block per maturity.
    pub fn to_markdown(&self) -> String {
        let mut maturities: Vec<f64> = self.rows.iter().map(|r| r.maturity).collect();
        maturities.dedup();
        let mut ratios: Vec<f64> = self.rows.iter().map(|r| r.strike_ratio).collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ratios.dedup();
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();

        let cell = |maturity: f64, ratio: f64, method: Method| {
            self.rows
                .iter()
                .find(|r| r.maturity == maturity && r.strike_ratio == ratio && r.method == method)
        };

        let mut out = String::new();
        for &maturity in &maturities {
            out.push_str(&format!("## Maturity {maturity} years\n\n"));
            let header: Vec<String> = ratios.iter().map(|k| format!("K/S0={k}")).collect();
            out.push_str(&format!("| Price | {} |\n", header.join(" | ")));
            out.push_str(&format!("|---|{}\n", "---:|".repeat(ratios.len())));
            for &method in &methods {
                let cells: Vec<String> = ratios
                    .iter()
                    .map(|&k| {
                        cell(maturity, k, method)
                            .and_then(|r| r.price)
                            .map_or_else(|| "—".to_string(), |p| format!("{p:.2}"))
                    })
                    .collect();
                out.push_str(&format!("| {} | {} |\n", method, cells.join(" | ")));
            }
            out.push_str("\nRelative error (%)\n\n");
            out.push_str(&format!("| Method | {} |\n", header.join(" | ")));
            out.push_str(&format!("|---|{}\n", "---:|".repeat(ratios.len())));
            for &method in &methods {
                if method == Method::Pde {
                    continue;
                }
                let cells: Vec<String> = ratios
                    .iter()
                    .map(|&k| {
                        cell(maturity, k, method)
                            .and_then(|r| r.rel_err_pct)
                            .map_or_else(|| "—".to_string(), |p| format!("{p:.2}"))
                    })
                    .collect();
                out.push_str(&format!("| {} | {} |\n", method, cells.join(" | ")));
            }
            out.push('\n');
        }
        out
    }
}
