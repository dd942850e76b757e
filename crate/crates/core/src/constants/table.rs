//! One row of constants per level `m`, and its CSV form.

use std::io::Write;

use serde::Serialize;

use crate::carpet::Carpet;
use crate::error::Result;

use super::poincare::{
    delta_const, lambda_const, pointwise_const, r_const, sigma_const, Estimate, Evaluator, DEFAULT_SEED,
};

/// Default node budget for any single local graph.
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

/// Search caps for a constants run.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsConfig {
    pub m_min: usize,
    pub m_max: usize,
    /// Largest `n` in the sup/inf over `w ∈ Λ_n`.
    pub n_cap: usize,
    pub node_budget: usize,
    pub seed: u64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { m_min: 1, m_max: 4, n_cap: 2, node_budget: DEFAULT_NODE_BUDGET, seed: DEFAULT_SEED }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsRow {
    pub m: usize,
    pub lambda: Estimate,
    pub sigma: Estimate,
    pub delta: Estimate,
    pub r: Estimate,
    /// Largest `max_v (f(v) − [f])² / (λ_m D(f))` seen over the cells.
    pub pointwise_envelope: f64,
}

impl ConstantsRow {
    pub fn ratio_sigma_over_r(&self) -> f64 {
        self.sigma.value / self.r.value
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsTable {
    pub name: Option<String>,
    pub d_h: f64,
    pub rho_min: f64,
    pub config: ConstantsConfig,
    pub rows: Vec<ConstantsRow>,
}

impl ConstantsTable {
    pub fn row(&self, m: usize) -> Option<&ConstantsRow> {
        self.rows.iter().find(|r| r.m == m)
    }

    pub fn series(&self, pick: impl Fn(&ConstantsRow) -> f64) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.m, pick(r))).collect()
    }

    /// CSV with 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "m",
            "lambda",
            "sigma",
            "delta",
            "R",
            "ratio_sigma_over_R",
            "witness_lambda",
            "witness_sigma",
            "witness_R",
        ])
        .map_err(csv_err)?;
        let wit = |e: &Estimate| e.witness.as_ref().map(|w| w.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.m.to_string(),
                sig12(r.lambda.value),
                sig12(r.sigma.value),
                sig12(r.delta.value),
                sig12(r.r.value),
                sig12(r.ratio_sigma_over_r()),
                wit(&r.lambda),
                wit(&r.sigma),
                wit(&r.r),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e.to_string()))
}

/// Format with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_finite() {
        format!("{:.11e}", x)
    } else {
        x.to_string()
    }
}

/// One row of constants.
pub fn constants_row(ev: &Evaluator, m: usize, n_cap: usize) -> Result<ConstantsRow> {
    let lambda = lambda_const(ev, m, n_cap)?;
    let delta = delta_const(ev, m, n_cap)?;
    let sigma = sigma_const(ev, m, n_cap)?;
    let r = r_const(ev, m, n_cap)?;
    let pointwise_envelope = pointwise_const(ev, m, n_cap)?.value / lambda.value;
    Ok(ConstantsRow { m, lambda, sigma, delta, r, pointwise_envelope })
}

/// Constants for `m_min..=m_max`.
pub fn build_table(carpet: &Carpet, config: &ConstantsConfig) -> Result<ConstantsTable> {
    let ev = Evaluator::new(carpet, config.node_budget, config.seed);
    let mut rows = Vec::new();
    for m in config.m_min..=config.m_max {
        log::info!("constants: m = {m}");
        rows.push(constants_row(&ev, m, config.n_cap)?);
    }
    Ok(ConstantsTable {
        name: carpet.spec.name.clone(),
        d_h: carpet.dh,
        rho_min: carpet.rho_min,
        config: config.clone(),
        rows,
    })
}
