//! Half-side resistances, resistance clusters and symmetric rings on a
//! level graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carpet::Carpet;
use crate::cellgraph::boundary::{boundary_sets, cells_meeting, half_side_threshold, Target};
use crate::cellgraph::partition::{expand, partition, Threshold};
use crate::cellgraph::CellGraph;
use crate::energy::{GraphForm, Resistance};
use crate::error::{Error, Result};

use super::poincare::{local_graph, Evaluator};

/// Image of half index `h` under the vertex permutation `perm`.
pub fn half_image(perm: &[usize], h: usize) -> usize {
    let n0 = perm.len();
    let k = h / 2;
    let near = if h % 2 == 0 { k } else { (k + 1) % n0 };
    let (a, b) = (perm[k], perm[(k + 1) % n0]);
    let side = if (a + 1) % n0 == b { a } else { b };
    2 * side + usize::from(perm[near] != side)
}

/// Cyclic distance between two half indices in units of a half side.
pub fn half_distance(n0: usize, i: usize, j: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(2 * n0 - d)
}

#[derive(Clone, Debug, Serialize)]
pub struct HalfsideReport {
    pub m: usize,
    pub m0: usize,
    pub sigma: f64,
    /// `R_m(∂'_i, ∂'_j) / σ_m` when the halves are at least one side apart.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Grouped value `R_m(∂'_1 ∪ ∂'_{1/2}, ∪_{k=4}^{2N_0−1} ∂'_{k/2}) / σ_m`.
    pub grouped: f64,
    /// `R_m(I_m q_1, I_m q_2) / σ_m`.
    pub corner: f64,
}

impl HalfsideReport {
    /// Largest `|M[i][j] − M[g i][g j]|` over the group.
    pub fn invariance_error(&self, carpet: &Carpet) -> f64 {
        let mut err: f64 = 0.0;
        for g in &carpet.group {
            for (i, row) in self.matrix.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let w = self.matrix[half_image(&g.perm, i)][half_image(&g.perm, j)];
                    match (v, w) {
                        (Some(a), Some(b)) => err = err.max((a - b).abs()),
                        (None, None) => {}
                        _ => err = f64::INFINITY,
                    }
                }
            }
        }
        err
    }
}

fn finite_or_inf(r: Resistance) -> f64 {
    r.finite().unwrap_or(f64::INFINITY)
}

fn union(sets: &[&Vec<usize>]) -> Vec<usize> {
    let mut v: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Half-side, grouped and corner resistances on `Λ_m`, normalized by `σ_m`.
pub fn halfside_resistances(ev: &Evaluator, m: usize, n_cap: usize) -> Result<HalfsideReport> {
    let carpet = ev.carpet;
    let m0 = match half_side_threshold(carpet, m, ev.node_budget)? {
        Some(m0) => m0,
        None => {
            let later = half_side_threshold(carpet, m + 2, ev.node_budget).ok().flatten();
            return Err(Error::ThresholdNotReached(later.unwrap_or(m + 1)));
        }
    };
    let sigma = super::poincare::sigma_const(ev, m, n_cap)?.value;
    let p = partition(carpet, m, ev.node_budget)?;
    let g = CellGraph::from_partition(carpet, &p)?;
    let form = GraphForm::from_graph(&g);
    let b = boundary_sets(carpet, &p.cells)?;
    let n0 = carpet.n0();
    let h = 2 * n0;
    let mut matrix = vec![vec![None; h]; h];
    for i in 0..h {
        for j in i + 1..h {
            if half_distance(n0, i, j) >= 2 {
                let r = finite_or_inf(form.effective_resistance(&b.halves[i], &b.halves[j])?) / sigma;
                matrix[i][j] = Some(r);
                matrix[j][i] = Some(r);
            }
        }
    }
    let a = union(&[&b.halves[0], &b.halves[h - 1]]);
    let rest: Vec<&Vec<usize>> = (2..=h - 3).map(|k| &b.halves[k]).collect();
    let grouped = finite_or_inf(form.effective_resistance(&a, &union(&rest))?) / sigma;
    let f = &carpet.spec.frame;
    let q1 = cells_meeting(carpet, &p.cells, &Target::Point(f.vertex(0)), None);
    let q2 = cells_meeting(carpet, &p.cells, &Target::Point(f.vertex(1)), None);
    let corner = finite_or_inf(form.effective_resistance(&q1, &q2)?) / sigma;
    Ok(HalfsideReport { m, m0, sigma, matrix, grouped, corner })
}

/// Outcome of `resistance_cluster`.
#[derive(Clone, Debug, Serialize)]
pub enum Cluster {
    /// Connected set containing both nodes, with the largest sampled
    /// pairwise resistance inside it.
    Found { nodes: Vec<usize>, removed: Vec<usize>, max_sampled: f64, bound: f64 },
    /// `w` and `v` fall in different components once the far set is removed.
    Separated { removed: Vec<usize> },
}

/// Remove `B = {x : R(x, {w, v}) > ε σ}` and keep the component of `w` if it
/// contains `v`. Pairwise resistances in the result are sampled against
/// `(4ε + 5 R(w, v)/σ) σ`.
pub fn resistance_cluster(
    g: &CellGraph,
    w: usize,
    v: usize,
    eps: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<Cluster> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let form = GraphForm::from_graph(g);
    if w == v {
        return Ok(Cluster::Found { nodes: vec![w], removed: vec![], max_sampled: 0.0, bound: 4.0 * eps * sigma });
    }
    let r = form.resistances_to_set(&[w, v])?;
    let removed: Vec<usize> = (0..g.len()).filter(|&x| finite_or_inf(r[x]) > eps * sigma).collect();
    debug_assert!(!removed.contains(&w) && !removed.contains(&v));
    let keep: Vec<usize> = (0..g.len()).filter(|x| removed.binary_search(x).is_err()).collect();
    let sub = g.induced(&keep);
    let comp = sub.components();
    let (iw, iv) = (keep.binary_search(&w).unwrap(), keep.binary_search(&v).unwrap());
    if comp[iw] != comp[iv] {
        return Ok(Cluster::Separated { removed });
    }
    let nodes: Vec<usize> = keep.iter().enumerate().filter(|(i, _)| comp[*i] == comp[iw]).map(|(_, &x)| x).collect();
    let rwv = finite_or_inf(form.effective_resistance(&[w], &[v])?);
    let bound = (4.0 * eps + 5.0 * rwv / sigma) * sigma;
    let max_sampled = sample_pairs(&form, &nodes, samples, seed)?;
    Ok(Cluster::Found { nodes, removed, max_sampled, bound })
}

fn sample_pairs(form: &GraphForm, nodes: &[usize], samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    if nodes.len() < 2 {
        return Ok(0.0);
    }
    for _ in 0..samples {
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        if a != b {
            worst = worst.max(finite_or_inf(form.effective_resistance(&[a], &[b])?));
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct Ring {
    pub nodes: Vec<usize>,
    /// Largest sampled pairwise resistance over `σ_m`.
    pub max_sampled_over_sigma: f64,
}

/// Union of the `Γ*`-images of a resistance cluster around `w, v`; it must
/// be connected.
pub fn symmetric_ring(
    carpet: &Carpet,
    g: &CellGraph,
    w: usize,
    v: usize,
    eps: f64,
    sigma: f64,
    seed: u64,
) -> Result<Ring> {
    let nodes = match resistance_cluster(g, w, v, eps, sigma, 0, seed)? {
        Cluster::Found { nodes, .. } => nodes,
        Cluster::Separated { removed } => {
            return Err(Error::RingNotFound(format!("cluster separated after removing {} cells", removed.len())))
        }
    };
    let mut all = Vec::new();
    for k in 0..carpet.group.len() {
        for &x in &nodes {
            let img = carpet.induced_word_symmetry(k, &g.cells[x].word)?;
            all.push(g.node(&img)?);
        }
    }
    all.sort_unstable();
    all.dedup();
    if !g.is_connected_on(&all) {
        return Err(Error::RingNotFound("orbit union is not connected".into()));
    }
    let form = GraphForm::restricted(g, &all);
    let local: Vec<usize> = (0..all.len()).collect();
    let max = sample_pairs(&form, &local, 200, seed)?;
    Ok(Ring { nodes: all, max_sampled_over_sigma: max / sigma })
}

/// `R` between the cells of `B_m(w)` meeting `Ψ_w x` and `Ψ_w y`, over
/// `R_m(I_m x, I_m y)`, for each point pair and each `w` with `|w| ≤ 2`
/// in the partitions `Λ_1, Λ_2`. Returns the largest ratio per level `n`.
pub fn rescaling_ratios(ev: &Evaluator, m: usize, points: &[([f64; 2], [f64; 2])]) -> Result<Vec<(usize, f64)>> {
    let carpet = ev.carpet;
    let p = partition(carpet, m, ev.node_budget)?;
    let g = CellGraph::from_partition(carpet, &p)?;
    let form = GraphForm::from_graph(&g);
    let base: Vec<f64> = points
        .iter()
        .map(|(x, y)| {
            let a = cells_meeting(carpet, &p.cells, &Target::Point(*x), None);
            let b = cells_meeting(carpet, &p.cells, &Target::Point(*y), None);
            Ok(finite_or_inf(form.effective_resistance(&a, &b)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for n in 1..=2 {
        let pn = partition(carpet, n, ev.node_budget)?;
        let mut worst: f64 = 0.0;
        for w in pn.cells.iter().filter(|c| c.word.len() <= 2) {
            let cells = expand(carpet, w, Threshold::level(carpet, n + m), ev.node_budget)?;
            let lg = local_graph(carpet, cells)?;
            let lf = GraphForm::from_graph(&lg);
            for ((x, y), r0) in points.iter().zip(&base) {
                let a = cells_meeting(carpet, &lg.cells, &Target::Point(w.map.apply(*x)), None);
                let b = cells_meeting(carpet, &lg.cells, &Target::Point(w.map.apply(*y)), None);
                if a.is_empty() || b.is_empty() {
                    continue;
                }
                worst = worst.max(finite_or_inf(lf.effective_resistance(&a, &b)?) / r0);
            }
        }
        out.push((n, worst));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::sierpinski_carpet;

    #[test]
    fn half_index_action() {
        // rotation by one vertex on a square
        let perm = [1, 2, 3, 0];
        assert_eq!(half_image(&perm, 0), 2);
        assert_eq!(half_image(&perm, 7), 1);
        // reflection fixing vertex 0: 0, 3, 2, 1
        let refl = [0, 3, 2, 1];
        assert_eq!(half_image(&refl, 0), 7);
        assert_eq!(half_image(&refl, 1), 6);
        assert_eq!(half_distance(4, 0, 7), 1);
    }

    #[test]
    fn cluster_trivial_cases() {
        let g = CellGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        match resistance_cluster(&g, 1, 1, 0.1, 1.0, 10, 1).unwrap() {
            Cluster::Found { nodes, .. } => assert_eq!(nodes, vec![1]),
            c => panic!("{c:?}"),
        }
        match resistance_cluster(&g, 0, 3, 1e6, 1.0, 10, 1).unwrap() {
            Cluster::Found { nodes, removed, .. } => {
                assert_eq!(nodes, vec![0, 1, 2, 3]);
                assert!(removed.is_empty());
            }
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn sc_halfside_invariance() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        let ev = Evaluator::new(&c, 100_000, 1);
        let rep = halfside_resistances(&ev, 2, 1).unwrap();
        assert!(rep.invariance_error(&c) < 1e-9);
        assert!(rep.corner > 0.0 && rep.grouped > 0.0);
    }
}
