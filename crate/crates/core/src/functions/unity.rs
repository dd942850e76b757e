//! Partition of unity `φ_w = u_w / Σ u_w` built from annulus potentials.

use std::collections::HashMap;

use serde::Serialize;

use crate::carpet::validate::m0_bound;
use crate::carpet::Carpet;
use crate::cellgraph::partition::partition;
use crate::cellgraph::{CellGraph, Word};
use crate::energy::GraphForm;
use crate::error::{Error, Result};
use crate::par;

use super::ancestors;

#[derive(Clone, Debug, Serialize)]
pub struct PartitionOfUnity {
    pub n: usize,
    pub m: usize,
    pub coarse_words: Vec<Word>,
    pub fine_words: Vec<Word>,
    /// `φ_w` on `Λ_{n+m}`, one row per `w ∈ Λ_n`.
    pub phi: Vec<Vec<f64>>,
    /// `D_{n+m}(φ_w)`.
    pub energies: Vec<f64>,
    /// `R_{n+m}(B_m(w), B_m(N_2^c(w)))`, `None` when `N_2^c(w)` is empty.
    pub annulus: Vec<Option<f64>>,
    /// `max_v |Σ_w φ_w(v) − 1|`.
    pub sum_error: f64,
    /// `M_0`, the bound on the size of a one-step neighbourhood.
    pub m0: f64,
    #[serde(skip)]
    fine_edges: Vec<(usize, usize)>,
    #[serde(skip)]
    n3: Vec<Vec<usize>>,
}

impl PartitionOfUnity {
    pub fn max_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest annulus resistance over this level.
    pub fn min_annulus(&self) -> Option<f64> {
        self.annulus.iter().flatten().cloned().reduce(f64::min)
    }

    /// `2(1 + M_0^6)`.
    pub fn constant(&self) -> f64 {
        2.0 * (1.0 + self.m0.powi(6))
    }

    /// `max_w D(φ_w) · r_m` for a supplied `R_m`.
    pub fn normalized_energy(&self, r_m: f64) -> f64 {
        self.max_energy() * r_m
    }

    /// `f̃ = Σ_w f(w) φ_w`.
    pub fn lift(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.coarse_words.len() {
            return Err(Error::InvalidFunction(format!("{} values for {} cells", f.len(), self.coarse_words.len())));
        }
        let mut out = vec![0.0; self.fine_words.len()];
        for (w, row) in self.phi.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(row) {
                *o += f[w] * p;
            }
        }
        Ok(out)
    }

    /// `(D_{n+m}(f̃), K · max_w D(φ_w) · Σ_w Σ_{w'∈N_3(w)} (f(w') − f(w))²)`
    /// with `K = max_w #N_3(w)`; the first never exceeds the second.
    pub fn lift_energy_bound(&self, f: &[f64]) -> Result<(f64, f64)> {
        let lifted = self.lift(f)?;
        let e = GraphForm::from_edges(lifted.len(), &self.fine_edges).energy(&lifted)?;
        let k = self.n3.iter().map(|s| s.len()).max().unwrap_or(0) as f64;
        let s: f64 =
            self.n3.iter().enumerate().map(|(w, near)| near.iter().map(|&v| (f[v] - f[w]).powi(2)).sum::<f64>()).sum();
        Ok((e, k * self.max_energy() * s))
    }
}

/// `φ_w` for every `w ∈ Λ_n` on `Λ_{n+m}`.
pub fn partition_of_unity(carpet: &Carpet, n: usize, m: usize, budget: usize) -> Result<PartitionOfUnity> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("partition of unity needs n, m >= 1".into()));
    }
    let coarse = CellGraph::from_partition(carpet, &partition(carpet, n, budget)?)?;
    let fine = CellGraph::from_partition(carpet, &partition(carpet, n + m, budget)?)?;
    let form = GraphForm::from_graph(&fine);
    let fine_words: Vec<Word> = fine.cells.iter().map(|c| c.word.clone()).collect();
    let coarse_index: HashMap<Word, usize> = coarse.index.clone();
    let parent = ancestors(&fine_words, &coarse_index)?;
    let potentials: Vec<Result<(Vec<f64>, Option<f64>)>> = par::map_range(coarse.len(), |w| {
        let near = coarse.neighborhood_small(w, 2);
        let a: Vec<usize> = (0..fine.len()).filter(|&u| parent[u] == w).collect();
        let b: Vec<usize> = (0..fine.len()).filter(|&u| near.binary_search(&parent[u]).is_err()).collect();
        if b.is_empty() {
            return Ok((vec![1.0; fine.len()], None));
        }
        let u = form.potential(&a, &b)?;
        let d = form.energy(&u)?;
        Ok((u, Some(1.0 / d)))
    });
    let mut u_w = Vec::with_capacity(coarse.len());
    let mut annulus = Vec::with_capacity(coarse.len());
    for p in potentials {
        let (u, r) = p?;
        u_w.push(u);
        annulus.push(r);
    }
    let mut total = vec![0.0; fine.len()];
    for u in &u_w {
        for (t, x) in total.iter_mut().zip(u) {
            *t += x;
        }
    }
    // every node lies in some B_m(w), where u_w = 1
    assert!(total.iter().all(|&t| t >= 1.0 - 1e-12), "annulus potentials do not cover Λ_{}", n + m);
    let phi: Vec<Vec<f64>> = u_w.iter().map(|u| u.iter().zip(&total).map(|(a, t)| a / t).collect()).collect();
    let energies = phi.iter().map(|p| form.energy(p)).collect::<Result<Vec<f64>>>()?;
    let sum_error = (0..fine.len()).map(|v| (phi.iter().map(|p| p[v]).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let n3 = (0..coarse.len()).map(|w| coarse.neighborhood_small(w, 3)).collect();
    Ok(PartitionOfUnity {
        n,
        m,
        coarse_words: coarse.cells.iter().map(|c| c.word.clone()).collect(),
        fine_words,
        phi,
        energies,
        annulus,
        sum_error,
        m0: m0_bound(carpet),
        fine_edges: fine.edges.iter().map(|e| (e.a, e.b)).collect(),
        n3,
    })
}
