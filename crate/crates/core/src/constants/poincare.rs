//! Cell-level Poincaré quantities and their sup/inf over cells.
//!
//! `λ_m(w)` and `δ_m(w)` depend only on the relative partition
//! `w^{-1}·B_m(w)`, which is fixed by the relative threshold
//! `ρ_*^{n+m}/ρ_w`, so they are cached by that number. `σ_m(w, w')` is
//! cached by the shape of the pair after moving `w` to the frame, reduced
//! over the symmetry group. `R_m` is evaluated on one representative per
//! `Γ*`-orbit.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carpet::Carpet;
use crate::cellgraph::partition::{cells_of, expand, partition, Cell, Threshold, Word};
use crate::cellgraph::CellGraph;
use crate::energy::{GraphForm, Resistance};
use crate::error::{Error, Result};
use crate::par;

/// Power iteration limits for `λ`.
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
/// Default seed for every pseudo-random choice.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Above this many nodes `δ` is bracketed instead of computed exactly.
pub const DELTA_EXACT_LIMIT: usize = 5_000;
/// Random projection dimension used to find far pairs above that limit.
pub const SKETCH_DIM: usize = 32;

/// Where a sup or inf was attained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub n: usize,
    pub w: Word,
    pub w2: Option<Word>,
}

impl Estimate {
    fn record(&mut self, v: f64) {
        self.evaluated += 1;
        self.spread = (self.spread.0.min(v), self.spread.1.max(v));
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.w2 {
            Some(v) => write!(f, "n={} w={} w'={}", self.n, self.w, v),
            None => write!(f, "n={} w={}", self.n, self.w),
        }
    }
}

/// A constant with its witness and the number of cases skipped.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub witness: Option<Witness>,
    /// Smallest and largest value over the evaluated cases.
    pub spread: (f64, f64),
    pub evaluated: usize,
    pub skipped: usize,
    pub notes: Vec<String>,
}

/// `λ`, `δ` and the pointwise supremum on one relative partition.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CellStats {
    pub nodes: usize,
    /// `max Σ_v (f(v) − [f])²` over `D(f) = 1`, without the `ρ` prefactor.
    pub lambda_raw: f64,
    /// Largest pairwise effective resistance (lower end when bracketed).
    pub delta: f64,
    /// Upper end of the `δ` bracket (equal to `delta` when exact).
    pub delta_upper: f64,
    /// `max_v sup{(f(v) − [f])² : D(f) = 1}` (over computed rows when
    /// bracketed).
    pub pointwise_sup: f64,
}

/// Graph on an arbitrary family of cells.
pub fn local_graph(carpet: &Carpet, cells: Vec<Cell>) -> Result<CellGraph> {
    CellGraph::build(carpet, cells, None)
}

fn normalized(mu: &[f64]) -> Vec<f64> {
    let s: f64 = mu.iter().sum();
    mu.iter().map(|m| m / s).collect()
}

/// `M x = Pᵀ P x` with `P = I − 1 μ̂ᵀ`.
fn center_twice(x: &[f64], w: &[f64]) -> Vec<f64> {
    let mean: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let total: f64 = y.iter().sum();
    y.iter().zip(w).map(|(v, wi)| v - wi * total).collect()
}

fn centered_sq(x: &[f64], w: &[f64]) -> f64 {
    let mean: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// `max Σ_v (f(v) − [f]_μ)² / D(f)` by power iteration on `L⁺ M`.
pub fn lambda_raw(form: &GraphForm, mu: &[f64], seed: u64) -> Result<f64> {
    let n = form.len();
    if n <= 1 {
        return Ok(0.0);
    }
    if form.component_count() != 1 {
        return Err(Error::DisconnectedCell(format!("{} components", form.component_count())));
    }
    let w = normalized(mu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let b = center_twice(&x, &w);
        let y = form.grounded_solve(&b)?;
        let num = centered_sq(&y, &w);
        let den = form.energy(&y)?;
        let rq = num / den;
        let scale = den.sqrt();
        x = y.iter().map(|v| v / scale).collect();
        if (rq - prev).abs() <= POWER_TOL * rq {
            return Ok(rq);
        }
        prev = rq;
    }
    Err(Error::Diverged(POWER_MAX_ITER))
}

/// Column `L⁺ e_i` (mean zero).
fn green_column(form: &GraphForm, i: usize) -> Result<Vec<f64>> {
    let n = form.len();
    let mut e = vec![-1.0 / n as f64; n];
    e[i] += 1.0;
    Ok(form.grounded_solve(&e)?.values)
}

/// `δ` and the pointwise supremum on a connected form.
pub fn delta_and_pointwise(form: &GraphForm, mu: &[f64]) -> Result<(f64, f64, f64)> {
    let n = form.len();
    if n <= 1 {
        return Ok((0.0, 0.0, 0.0));
    }
    if form.component_count() != 1 {
        return Err(Error::DisconnectedCell(format!("{} components", form.component_count())));
    }
    let w = normalized(mu);
    let w_mean: f64 = w.iter().sum::<f64>() / n as f64;
    let gw = form.grounded_solve(&w.iter().map(|v| v - w_mean).collect::<Vec<_>>())?;
    let wgw: f64 = w.iter().zip(gw.iter()).map(|(a, b)| a * b).sum();
    // (e_v − μ̂)ᵀ L⁺ (e_v − μ̂) = G_vv − 2 (Gμ̂)_v + μ̂ᵀGμ̂
    let pointwise = |v: usize, gvv: f64| gvv - 2.0 * gw[v] + wgw;
    if n <= DELTA_EXACT_LIMIT {
        let diag: Vec<Result<f64>> = par::map_range(n, |i| Ok(green_column(form, i)?[i]));
        let diag: Vec<f64> = diag.into_iter().collect::<Result<_>>()?;
        let rows: Vec<Result<f64>> = par::map_range(n, |i| {
            let col = green_column(form, i)?;
            Ok((0..n).map(|j| diag[i] + diag[j] - 2.0 * col[j]).fold(0.0, f64::max))
        });
        let delta = rows.into_iter().collect::<Result<Vec<f64>>>()?.into_iter().fold(0.0, f64::max);
        let sup = (0..n).map(|v| pointwise(v, diag[v])).fold(0.0, f64::max);
        return Ok((delta, delta, sup));
    }
    // A random projection of the edge-current embedding locates far pairs,
    // which are then evaluated exactly. The lower end is the best exact pair;
    // the upper end is twice the graph eccentricity of the embedding's
    // center, since unit-conductance resistance is at most graph distance.
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut emb = vec![vec![0.0; SKETCH_DIM]; n];
    for r in 0..SKETCH_DIM {
        let mut y = vec![0.0; n];
        for a in 0..n {
            for &b in form.neighbors(a) {
                if a < b {
                    let q = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    y[a] += q;
                    y[b] -= q;
                }
            }
        }
        let z = form.grounded_solve(&y)?;
        for (i, v) in z.iter().enumerate() {
            emb[i][r] = v / (SKETCH_DIM as f64).sqrt();
        }
    }
    let d2 = |i: usize, j: usize| emb[i].iter().zip(&emb[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut lower: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let mut cur = 0usize;
    let mut seen = Vec::new();
    for _ in 0..6 {
        if seen.contains(&cur) {
            break;
        }
        seen.push(cur);
        let far = (0..n).max_by(|&a, &b| d2(cur, a).total_cmp(&d2(cur, b))).unwrap_or(cur);
        let mut e = vec![0.0; n];
        e[cur] += 1.0;
        e[far] -= 1.0;
        lower = lower.max(quadratic_pinv(form, &e)?);
        let gvv = green_column(form, cur)?[cur];
        sup = sup.max(pointwise(cur, gvv));
        cur = far;
    }
    let center = (0..n)
        .min_by(|&a, &b| {
            let ea = seen.iter().map(|&s| d2(a, s)).fold(0.0, f64::max);
            let eb = seen.iter().map(|&s| d2(b, s)).fold(0.0, f64::max);
            ea.total_cmp(&eb)
        })
        .unwrap_or(0);
    let hops = bfs_hops(form, center);
    let upper = 2.0 * hops.into_iter().max().unwrap_or(0) as f64;
    Ok((lower, upper.max(lower), sup))
}

fn bfs_hops(form: &GraphForm, s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; form.len()];
    let mut q = std::collections::VecDeque::from([s]);
    dist[s] = 0;
    while let Some(u) = q.pop_front() {
        for &v in form.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

/// `a^T L^+ a` for a mean-zero `a`; infinite when the form is disconnected
/// across the support of `a`.
pub fn quadratic_pinv(form: &GraphForm, a: &[f64]) -> Result<f64> {
    match form.grounded_solve(a) {
        Ok(x) => Ok(a.iter().zip(x.iter()).map(|(p, q)| p * q).sum()),
        Err(Error::NotMeanZero(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn threshold_key(t: f64) -> String {
    format!("{t:.12e}")
}

fn round_key(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Shared state for constant searches on one carpet.
pub struct Evaluator<'a> {
    pub carpet: &'a Carpet,
    /// Node budget for any single local graph.
    pub node_budget: usize,
    pub seed: u64,
    cells: Mutex<HashMap<String, CellStats>>,
    pairs: Mutex<HashMap<(String, String, i64, i64, i64), f64>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(carpet: &'a Carpet, node_budget: usize, seed: u64) -> Self {
        Evaluator { carpet, node_budget, seed, cells: Mutex::new(HashMap::new()), pairs: Mutex::new(HashMap::new()) }
    }

    fn threshold(&self, n: usize, m: usize) -> Threshold {
        Threshold::level(self.carpet, n + m)
    }

    /// Graph on `B_m(w)` for `w ∈ Λ_n`.
    pub fn cell_graph(&self, w: &Cell, n: usize, m: usize) -> Result<CellGraph> {
        let cells = expand(self.carpet, w, self.threshold(n, m), self.node_budget)
            .map_err(|_| Error::BudgetExceeded { level: n + m, estimate: f64::NAN, budget: self.node_budget })?;
        local_graph(self.carpet, cells)
    }

    /// Statistics of `B_m(w)` for `w ∈ Λ_n`.
    pub fn cell_stats(&self, w: &Cell, n: usize, m: usize) -> Result<CellStats> {
        let t = self.threshold(n, m).relative(w);
        let key = threshold_key(t.f);
        if let Some(s) = self.cells.lock().unwrap().get(&key) {
            return Ok(*s);
        }
        let g = self.cell_graph(w, n, m)?;
        let form = GraphForm::from_graph(&g);
        if form.component_count() != 1 {
            return Err(Error::DisconnectedCell(w.word.to_string()));
        }
        let lambda = lambda_raw(&form, &g.mu, self.seed)?;
        let (delta, delta_upper, pointwise_sup) = delta_and_pointwise(&form, &g.mu)?;
        let s = CellStats { nodes: g.len(), lambda_raw: lambda, delta, delta_upper, pointwise_sup };
        self.cells.lock().unwrap().insert(key, s);
        Ok(s)
    }

    /// `λ_m(w)` for `w ∈ Λ_n`.
    pub fn lambda_cell(&self, w: &Cell, n: usize, m: usize) -> Result<f64> {
        let s = self.cell_stats(w, n, m)?;
        Ok(self.carpet.rho_min.powf(m as f64 * self.carpet.dh) * s.lambda_raw)
    }

    /// `δ_m(w)` for `w ∈ Λ_n`.
    pub fn delta_cell(&self, w: &Cell, n: usize, m: usize) -> Result<f64> {
        Ok(self.cell_stats(w, n, m)?.delta)
    }

    fn pair_key(&self, w: &Cell, v: &Cell, n: usize, m: usize) -> (String, String, i64, i64, i64) {
        let t = self.threshold(n, m);
        let tw = threshold_key(t.relative(w).f);
        let tv = threshold_key(t.relative(v).f);
        let s = v.map.scale / w.map.scale;
        // centroid of Ψ_w^{-1} Ψ_v A
        let c = w.map.apply_inverse(v.map.apply(self.carpet.spec.frame.center));
        let mut best = (round_key(c[0]), round_key(c[1]));
        if self.carpet.symmetric() {
            for g in &self.carpet.group {
                let gc = g.apply(c);
                best = best.min((round_key(gc[0]), round_key(gc[1])));
            }
        }
        (tw, tv, round_key(s), best.0, best.1)
    }

    /// `σ_m(w, v)` for adjacent `w, v ∈ Λ_n`.
    pub fn sigma_pair(&self, w: &Cell, v: &Cell, n: usize, m: usize) -> Result<f64> {
        let key = self.pair_key(w, v, n, m);
        if let Some(s) = self.pairs.lock().unwrap().get(&key) {
            return Ok(*s);
        }
        let t = self.threshold(n, m);
        let a = expand(self.carpet, w, t, self.node_budget)?;
        let b = expand(self.carpet, v, t, self.node_budget)?;
        let (wa, wb) = (a.len(), b.len());
        let mut cells = a;
        cells.extend(b);
        let g = local_graph(self.carpet, cells)?;
        let form = GraphForm::from_graph(&g);
        let mut vec = vec![0.0; g.len()];
        let (mut ma, mut mb) = (0.0, 0.0);
        for (i, c) in g.cells.iter().enumerate() {
            if c.word.starts_with(&w.word) {
                ma += g.mu[i];
            } else {
                mb += g.mu[i];
            }
        }
        for (i, c) in g.cells.iter().enumerate() {
            vec[i] = if c.word.starts_with(&w.word) { g.mu[i] / ma } else { -g.mu[i] / mb };
        }
        debug_assert_eq!(wa + wb, g.len());
        let s = quadratic_pinv(&form, &vec)?;
        if s.is_infinite() {
            log::warn!("sigma: union of B_m({}) and B_m({}) is disconnected", w.word, v.word);
        }
        self.pairs.lock().unwrap().insert(key, s);
        Ok(s)
    }

    /// `R_{n+m}(B_m(w), B_m(N_2^c(w)))` for node `i` of `Λ_n`'s graph;
    /// `None` when `N_2^c(w)` is empty or the local graph is over budget.
    pub fn annulus(&self, g: &CellGraph, i: usize, n: usize, m: usize) -> Result<Option<Resistance>> {
        let n3 = g.neighborhood_small(i, 3);
        let n2 = g.neighborhood_small(i, 2);
        let outer: Vec<usize> = n3.iter().copied().filter(|u| n2.binary_search(u).is_err()).collect();
        if outer.is_empty() {
            return Ok(None);
        }
        let t = self.threshold(n, m);
        let mut cells = Vec::new();
        for &u in &n3 {
            let left = self.node_budget.saturating_sub(cells.len());
            match expand(self.carpet, &g.cells[u], t, left) {
                Ok(c) => cells.extend(c),
                Err(Error::BudgetExceeded { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        let lg = local_graph(self.carpet, cells)?;
        let form = GraphForm::from_graph(&lg);
        let inner = &g.cells[i].word;
        let outer_words: Vec<&Word> = outer.iter().map(|&u| &g.cells[u].word).collect();
        let a: Vec<usize> = (0..lg.len()).filter(|&k| lg.cells[k].word.starts_with(inner)).collect();
        let b: Vec<usize> =
            (0..lg.len()).filter(|&k| outer_words.iter().any(|w| lg.cells[k].word.starts_with(w))).collect();
        Ok(Some(form.effective_resistance(&a, &b)?))
    }
}

/// Representatives (smallest index) of the `Γ*`-orbits on a level graph.
pub fn orbit_representatives(carpet: &Carpet, g: &CellGraph) -> Result<Vec<usize>> {
    if !carpet.symmetric() {
        return Ok((0..g.len()).collect());
    }
    let mut reps = Vec::new();
    for i in 0..g.len() {
        let mut is_rep = true;
        for k in 0..carpet.group.len() {
            let img = carpet.induced_word_symmetry(k, &g.cells[i].word)?;
            if g.node(&img)? < i {
                is_rep = false;
                break;
            }
        }
        if is_rep {
            reps.push(i);
        }
    }
    Ok(reps)
}

fn level_graph(carpet: &Carpet, n: usize, budget: usize) -> Result<CellGraph> {
    CellGraph::from_partition(carpet, &partition(carpet, n, budget)?)
}

/// Sup of a per-cell statistic over `Λ_0 ∪ … ∪ Λ_{n_cap}`.
fn cell_sup(ev: &Evaluator, m: usize, n_cap: usize, f: impl Fn(&CellStats) -> f64) -> Result<Estimate> {
    let scale = ev.carpet.rho_min.powf(m as f64 * ev.carpet.dh);
    let mut best = Estimate {
        value: f64::NEG_INFINITY,
        witness: None,
        spread: (f64::INFINITY, f64::NEG_INFINITY),
        evaluated: 0,
        skipped: 0,
        notes: vec![],
    };
    for n in 0..=n_cap {
        let p = partition(ev.carpet, n, ev.node_budget)?;
        // distinct relative thresholds first, in parallel
        let mut firsts: Vec<usize> = Vec::new();
        let mut keys = Vec::new();
        for (i, c) in p.cells.iter().enumerate() {
            let k = threshold_key(ev.threshold(n, m).relative(c).f);
            if !keys.contains(&k) {
                keys.push(k);
                firsts.push(i);
            }
        }
        let stats: Vec<Result<CellStats>> = par::map(&firsts, |&i| ev.cell_stats(&p.cells[i], n, m));
        for (i, s) in firsts.into_iter().zip(stats) {
            match s {
                Ok(s) => {
                    let v = f(&s) * scale;
                    best.record(v);
                    if v > best.value {
                        best.value = v;
                        best.witness = Some(Witness { n, w: p.cells[i].word.clone(), w2: None });
                    }
                }
                Err(Error::BudgetExceeded { .. }) => {
                    best.skipped += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    if best.evaluated == 0 {
        return Err(Error::InsufficientLevel(format!("no cell within the node budget at m = {m}")));
    }
    best.notes.push(format!("sup over levels 0..={n_cap}"));
    Ok(best)
}

/// `λ_m` with witness.
pub fn lambda_const(ev: &Evaluator, m: usize, n_cap: usize) -> Result<Estimate> {
    cell_sup(ev, m, n_cap, |s| s.lambda_raw)
}

/// Largest pointwise supremum `max_v sup{(f(v) − [f])² : D(f) = 1}`, with
/// witness.
pub fn pointwise_const(ev: &Evaluator, m: usize, n_cap: usize) -> Result<Estimate> {
    let scale = ev.carpet.rho_min.powf(m as f64 * ev.carpet.dh);
    cell_sup(ev, m, n_cap, |s| s.pointwise_sup / scale)
}

/// `δ_m` with witness (no `ρ` prefactor in the definition).
pub fn delta_const(ev: &Evaluator, m: usize, n_cap: usize) -> Result<Estimate> {
    let scale = ev.carpet.rho_min.powf(m as f64 * ev.carpet.dh);
    let mut e = cell_sup(ev, m, n_cap, |s| s.delta / scale)?;
    if ev.cells.lock().unwrap().values().any(|s| s.delta_upper > s.delta) {
        e.notes.push("some cells bracketed by farthest-point sweeps".into());
    }
    Ok(e)
}

/// `σ_m` with witness, over adjacent pairs at levels `1..=n_cap`.
pub fn sigma_const(ev: &Evaluator, m: usize, n_cap: usize) -> Result<Estimate> {
    let mut best = Estimate {
        value: f64::NEG_INFINITY,
        witness: None,
        spread: (f64::INFINITY, f64::NEG_INFINITY),
        evaluated: 0,
        skipped: 0,
        notes: vec![],
    };
    for n in 1..=n_cap {
        let g = level_graph(ev.carpet, n, ev.node_budget)?;
        let mut todo = Vec::new();
        let mut keys = Vec::new();
        for e in &g.edges {
            let k = ev.pair_key(&g.cells[e.a], &g.cells[e.b], n, m);
            if !keys.contains(&k) {
                keys.push(k);
                todo.push((e.a, e.b));
            }
        }
        let vals: Vec<Result<f64>> = par::map(&todo, |&(a, b)| ev.sigma_pair(&g.cells[a], &g.cells[b], n, m));
        for ((a, b), v) in todo.into_iter().zip(vals) {
            match v {
                Ok(v) => {
                    best.record(v);
                    if v > best.value {
                        best.value = v;
                        best.witness =
                            Some(Witness { n, w: g.cells[a].word.clone(), w2: Some(g.cells[b].word.clone()) });
                    }
                }
                Err(Error::BudgetExceeded { .. }) => best.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if best.evaluated == 0 {
        return Err(Error::InsufficientLevel(format!("no adjacent pair within the node budget at m = {m}")));
    }
    best.notes.push(format!("sup over adjacent pairs at levels 1..={n_cap}"));
    Ok(best)
}

/// `R_m` with witness; cells with empty `N_2^c` or over-budget annuli are
/// skipped.
pub fn r_const(ev: &Evaluator, m: usize, n_cap: usize) -> Result<Estimate> {
    let mut best = Estimate {
        value: f64::INFINITY,
        witness: None,
        spread: (f64::INFINITY, f64::NEG_INFINITY),
        evaluated: 0,
        skipped: 0,
        notes: vec![],
    };
    let mut budget_skips = 0;
    for n in 1..=n_cap {
        let g = level_graph(ev.carpet, n, ev.node_budget)?;
        let reps = orbit_representatives(ev.carpet, &g)?;
        let vals: Vec<Result<Option<Resistance>>> = par::map(&reps, |&i| ev.annulus(&g, i, n, m));
        for (i, v) in reps.into_iter().zip(vals) {
            match v? {
                Some(Resistance::Finite(r)) => {
                    best.record(r);
                    if r < best.value {
                        best.value = r;
                        best.witness = Some(Witness { n, w: g.cells[i].word.clone(), w2: None });
                    }
                }
                Some(Resistance::Infinite) => best.record(f64::INFINITY),
                None => {
                    best.skipped += 1;
                    if !g.neighborhood_complement(i, 2).is_empty() {
                        budget_skips += 1;
                    }
                }
            }
        }
    }
    if best.evaluated == 0 {
        return Err(Error::InsufficientLevel(format!("every annulus skipped at m = {m}")));
    }
    best.notes.push(format!("inf over orbit representatives at levels 1..={n_cap}"));
    if budget_skips > 0 {
        best.notes.push(format!("{budget_skips} annuli over the node budget"));
    }
    Ok(best)
}

/// `λ_m(w)` for an explicit word.
pub fn lambda_cell(ev: &Evaluator, w: &Word, m: usize) -> Result<f64> {
    let (n, _) = cells_of(ev.carpet, w, 0, 1)?;
    ev.lambda_cell(&ev.carpet.cell(w), n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::sierpinski_carpet;

    #[test]
    fn two_node_lambda() {
        let f = GraphForm::from_edges(2, &[(0, 1)]);
        assert!((lambda_raw(&f, &[1.0, 1.0], DEFAULT_SEED).unwrap() - 0.5).abs() < 1e-12);
        let one = GraphForm::from_edges(1, &[]);
        assert_eq!(lambda_raw(&one, &[1.0], DEFAULT_SEED).unwrap(), 0.0);
    }

    #[test]
    fn path_delta_and_sigma() {
        let f = GraphForm::from_edges(3, &[(0, 1), (1, 2)]);
        let (d, du, _) = delta_and_pointwise(&f, &[1.0; 3]).unwrap();
        assert!((d - 2.0).abs() < 1e-12 && d == du);
        let e = GraphForm::from_edges(2, &[(0, 1)]);
        assert!((quadratic_pinv(&e, &[1.0, -1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_delta_bracket_contains_exact() {
        // path of 5001 nodes: δ = 5000
        let edges: Vec<(usize, usize)> = (0..5000).map(|i| (i, i + 1)).collect();
        let f = GraphForm::from_edges(5001, &edges);
        let (lo, hi, _) = delta_and_pointwise(&f, &vec![1.0; 5001]).unwrap();
        assert!(lo <= 5000.0 + 1e-6 && hi >= 5000.0 - 1e-6);
        assert!(lo > 4900.0);
    }

    #[test]
    fn sc_m1_cached_values() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        let ev = Evaluator::new(&c, 10_000, DEFAULT_SEED);
        let l = lambda_const(&ev, 1, 2).unwrap();
        assert_eq!(l.evaluated, 3);
        assert!(l.value > 0.0);
        let s = sigma_const(&ev, 1, 1).unwrap();
        assert!(s.value > 0.0 && s.value.is_finite());
        let r = r_const(&ev, 1, 1).unwrap();
        assert_eq!(r.witness.unwrap().w, Word::from_slice(&[0]));
    }
}
