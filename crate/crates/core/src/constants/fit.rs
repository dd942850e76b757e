//! Exponent fits over a constants table and the inequality-chain monitor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carpet::Carpet;
use crate::energy::GraphForm;
use crate::error::{Error, Result};

use super::poincare::Evaluator;
use super::table::{ConstantsRow, ConstantsTable};

/// Ceiling asserted on the empirical chain constants for the built-ins.
pub const CHAIN_CEILING: f64 = 10.0;

/// Least-squares fit of `ln X_m = intercept + slope·m`.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual in log space.
    pub residual: f64,
    pub m_range: (usize, usize),
}

pub fn log_slope(name: &str, series: &[(usize, f64)]) -> Result<SlopeFit> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("{name}: {} entries, need 3", series.len())));
    }
    if let Some((m, v)) = series.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InsufficientData(format!("{name}: entry m = {m} is {v}")));
    }
    let k = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|(m, _)| *m as f64).collect();
    let ys: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / k).sqrt();
    let m_range = (series.iter().map(|s| s.0).min().unwrap(), series.iter().map(|s| s.0).max().unwrap());
    Ok(SlopeFit { name: name.into(), slope, intercept, residual, m_range })
}

/// `σ_{n+m} ≤ Ĉ σ_m ρ_*^{−nα}` fitted over every pair in the series.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub c_hat: f64,
    pub pairs: usize,
}

impl AlphaFit {
    /// Largest `σ_{n+m} / (Ĉ σ_m ρ_*^{−nα})` over the series; `≤ 1` by
    /// construction of `Ĉ`.
    pub fn worst(&self, series: &[(usize, f64)], rho_min: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for &(m, sm) in series {
            for &(k, sk) in series {
                if k > m {
                    let n = (k - m) as f64;
                    worst = worst.max(sk / (self.c_hat * sm * rho_min.powf(-n * self.alpha)));
                }
            }
        }
        worst
    }
}

/// Slope through the origin of `ln(σ_{n+m}/σ_m)` against `−n ln ρ_*`, and the
/// envelope constant that makes the bound hold on the data.
pub fn alpha_fit(series: &[(usize, f64)], rho_min: f64) -> Result<AlphaFit> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("alpha: {} entries, need 3", series.len())));
    }
    let l = -rho_min.ln();
    let mut pts = Vec::new();
    for &(m, sm) in series {
        for &(k, sk) in series {
            if k > m {
                pts.push(((k - m) as f64 * l, (sk / sm).ln()));
            }
        }
    }
    let alpha = pts.iter().map(|(x, y)| x * y).sum::<f64>() / pts.iter().map(|(x, _)| x * x).sum::<f64>();
    let c_hat = pts.iter().map(|(x, y)| (y - alpha * x).exp()).fold(f64::NEG_INFINITY, f64::max);
    Ok(AlphaFit { alpha, c_hat, pairs: pts.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub r: f64,
    pub theta: f64,
    pub alpha: AlphaFit,
    pub slopes: Vec<SlopeFit>,
    /// Largest `|slope_X / slope_σ − 1|` over the other estimators.
    pub max_slope_deviation: f64,
    pub r_bound: f64,
    pub r_within_bound: bool,
    pub caveats: Vec<String>,
}

/// `r = exp(−slope_σ)`, `θ = ln r / ln ρ_*`, `α`, and the slopes of every
/// estimator.
pub fn fit_series(
    sigma: &[(usize, f64)],
    others: &[(&str, Vec<(usize, f64)>)],
    rho_min: f64,
    d_h: f64,
) -> Result<FitReport> {
    let s = log_slope("sigma", sigma)?;
    let r = (-s.slope).exp();
    let theta = r.ln() / rho_min.ln();
    let alpha = alpha_fit(sigma, rho_min)?;
    let mut slopes = vec![s.clone()];
    let mut dev: f64 = 0.0;
    for (name, series) in others {
        let f = log_slope(name, series)?;
        dev = dev.max((f.slope / s.slope - 1.0).abs());
        slopes.push(f);
    }
    let r_bound = rho_min.powf(2.0 - d_h);
    Ok(FitReport {
        r,
        theta,
        alpha,
        slopes,
        max_slope_deviation: dev,
        r_bound,
        r_within_bound: r <= r_bound,
        caveats: vec![],
    })
}

pub fn fit_exponents(table: &ConstantsTable) -> Result<FitReport> {
    let others = vec![
        ("lambda", table.series(|r| r.lambda.value)),
        ("delta", table.series(|r| r.delta.value)),
        ("R", table.series(|r| r.r.value)),
    ];
    let mut rep = fit_series(&table.series(|r| r.sigma.value), &others, table.rho_min, table.d_h)?;
    rep.caveats.push(format!(
        "sup/inf over cells truncated at n <= {}; whether this is within a constant of the true inf for R is not known",
        table.config.n_cap
    ));
    if table.rows.iter().any(|r| r.r.skipped > 0) {
        rep.caveats.push("some annuli skipped (empty complement or node budget)".into());
    }
    Ok(rep)
}

/// `(min, max, max/min)` of a ratio across `m`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub band: f64,
}

impl Band {
    fn of(values: impl Iterator<Item = f64>) -> Band {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        Band { min, max, band: max / min }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MCheck {
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    /// Max over `(n, m)` of `λ_{n+m} / (λ_n σ_m)`.
    pub chain_upper: f64,
    /// Max over `(n, m)` of `R_m λ_n / λ_{n+m}`.
    pub chain_lower: f64,
    pub lambda_over_sigma: Band,
    pub delta_over_lambda: Band,
    pub sigma_over_delta: Band,
    pub sigma_over_r: Band,
    /// Explicit constant of the `R_m` lower bound.
    pub r_lower_constant: f64,
    pub r_lower: Vec<MCheck>,
    /// `ρ_*^{10 d_H} max λ_m(·) ≤ min λ_{m+2}(·)`.
    pub lambda_shift: Vec<MCheck>,
    /// `δ_m ≤ 4 Ĉ λ_m` with `Ĉ` the pointwise envelope.
    pub delta_vs_lambda: Vec<MCheck>,
    /// `σ_m ≤ (2√δ_m + 1)²`.
    pub sigma_vs_delta: Vec<MCheck>,
    /// Sampled `(f(v) − [f])² ≤ Ĉ λ_m D(f)`; `lhs` is the largest sampled
    /// ratio to the right side.
    pub pointwise_samples: Vec<MCheck>,
    pub ceiling: f64,
}

impl ChainReport {
    /// Every monitored inequality holds and the chain constants are below
    /// the ceiling.
    pub fn holds(&self) -> bool {
        self.chain_upper <= self.ceiling
            && self.chain_lower <= self.ceiling
            && [&self.r_lower, &self.lambda_shift, &self.delta_vs_lambda, &self.sigma_vs_delta, &self.pointwise_samples]
                .iter()
                .all(|v| v.iter().all(|c| c.holds))
    }
}

/// Explicit `C = (4 C₁ M₀³ c₀⁻² diam²)⁻¹` with `C₁ = ρ_*^{−d_H}`.
pub fn r_lower_constant(carpet: &Carpet, c0: f64) -> f64 {
    let c1 = carpet.rho_min.powf(-carpet.dh);
    let m0 = crate::carpet::validate::m0_bound(carpet);
    let diam = carpet.spec.frame.diam();
    1.0 / (4.0 * c1 * m0.powi(3) * c0.powi(-2) * diam * diam)
}

fn sample_pointwise(ev: &Evaluator, row: &ConstantsRow, samples: usize) -> Result<MCheck> {
    let wit = row.lambda.witness.as_ref().ok_or_else(|| Error::InsufficientData("lambda witness".into()))?;
    let g = ev.cell_graph(&ev.carpet.cell(&wit.w), wit.n, row.m)?;
    let form = GraphForm::from_graph(&g);
    let total: f64 = g.mu.iter().sum();
    let bound = row.pointwise_envelope * row.lambda.value;
    let mut rng = ChaCha8Rng::seed_from_u64(ev.seed ^ row.m as u64);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = form.energy(&f)?;
        if d == 0.0 {
            continue;
        }
        let mean: f64 = f.iter().zip(&g.mu).map(|(a, b)| a * b).sum::<f64>() / total;
        let lhs = f.iter().map(|v| (v - mean).powi(2)).fold(0.0, f64::max);
        worst = worst.max(lhs / (bound * d));
    }
    Ok(MCheck { m: row.m, lhs: worst, rhs: 1.0, holds: worst <= 1.0 + 1e-9 })
}

/// Empirical constants of the inequality chain over the table.
pub fn check_chain(ev: &Evaluator, table: &ConstantsTable, c0: f64, samples: usize) -> Result<ChainReport> {
    let rows = &table.rows;
    let mut up: f64 = 0.0;
    let mut low: f64 = 0.0;
    for a in rows {
        for b in rows {
            if let Some(s) = table.row(a.m + b.m) {
                up = up.max(s.lambda.value / (a.lambda.value * b.sigma.value));
                low = low.max(b.r.value * a.lambda.value / s.lambda.value);
            }
        }
    }
    let c = r_lower_constant(ev.carpet, c0);
    let rho = table.rho_min;
    let r_lower = rows
        .iter()
        .map(|r| {
            let rhs = c * rho.powf((table.d_h - 2.0) * r.m as f64);
            MCheck { m: r.m, lhs: r.r.value, rhs, holds: r.r.value >= rhs }
        })
        .collect();
    let lambda_shift = rows
        .iter()
        .filter_map(|r| {
            let s = table.row(r.m + 2)?;
            let lhs = rho.powf(10.0 * table.d_h) * r.lambda.spread.1;
            Some(MCheck { m: r.m, lhs, rhs: s.lambda.spread.0, holds: lhs <= s.lambda.spread.0 })
        })
        .collect();
    let delta_vs_lambda = rows
        .iter()
        .map(|r| {
            let rhs = 4.0 * r.pointwise_envelope * r.lambda.value;
            MCheck { m: r.m, lhs: r.delta.value, rhs, holds: r.delta.value <= rhs * (1.0 + 1e-9) }
        })
        .collect();
    let sigma_vs_delta = rows
        .iter()
        .map(|r| {
            let rhs = (2.0 * r.delta.value.sqrt() + 1.0).powi(2);
            MCheck { m: r.m, lhs: r.sigma.value, rhs, holds: r.sigma.value <= rhs }
        })
        .collect();
    let pointwise_samples = rows.iter().map(|r| sample_pointwise(ev, r, samples)).collect::<Result<Vec<_>>>()?;
    Ok(ChainReport {
        chain_upper: up,
        chain_lower: low,
        lambda_over_sigma: Band::of(rows.iter().map(|r| r.lambda.value / r.sigma.value)),
        delta_over_lambda: Band::of(rows.iter().map(|r| r.delta.value / r.lambda.value)),
        sigma_over_delta: Band::of(rows.iter().map(|r| r.sigma.value / r.delta.value)),
        sigma_over_r: Band::of(rows.iter().map(|r| r.ratio_sigma_over_r())),
        r_lower_constant: c,
        r_lower,
        lambda_shift,
        delta_vs_lambda,
        sigma_vs_delta,
        pointwise_samples,
        ceiling: CHAIN_CEILING,
    })
}
