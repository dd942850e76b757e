//! Half-side bumps `f_{m,i}` and corner bumps `g_{w,m}` on perfect
//! carpets.

use std::collections::HashMap;

use crate::carpet::Carpet;
use crate::cellgraph::boundary::{boundary_sets, half_side_threshold};
use crate::cellgraph::partition::{expand, partition, Threshold};
use crate::cellgraph::{CellGraph, Word};
use crate::energy::{GraphForm, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{dist, find_by_perm, inverse_index};

use super::{ancestors, assign, require_equal_ratios, CertifiedFunction, Checks, Domain};

/// `f_{m,1}` with the resistance it realizes.
#[derive(Clone, Debug)]
pub struct HalfsideBump {
    pub m: usize,
    pub m0: usize,
    pub f: CertifiedFunction,
    /// `R_m(∂'_1 ∪ ∂'_{1/2}, ∪_{k≥4} ∂'_{k/2})`.
    pub resistance: f64,
}

fn check_threshold(carpet: &Carpet, m: usize, budget: usize) -> Result<usize> {
    match half_side_threshold(carpet, m, budget)? {
        Some(m0) => Ok(m0),
        None => {
            let later = half_side_threshold(carpet, m + 2, budget).ok().flatten();
            Err(Error::ThresholdNotReached(later.unwrap_or(m + 1)))
        }
    }
}

/// Harmonic `f_{m,1}` on `Λ_m`: 1 on the two half-sides at `q_1`, 0 on
/// the half-sides at distance at least one from them.
pub fn halfside_bump(carpet: &Carpet, m: usize, budget: usize) -> Result<HalfsideBump> {
    require_equal_ratios(carpet)?;
    let m0 = check_threshold(carpet, m, budget)?;
    let p = partition(carpet, m, budget)?;
    let g = CellGraph::from_partition(carpet, &p)?;
    let form = GraphForm::from_graph(&g);
    let b = boundary_sets(carpet, &g.cells)?;
    let h = 2 * carpet.n0();
    let mut ones: Vec<usize> = b.halves[0].iter().chain(&b.halves[h - 1]).copied().collect();
    ones.sort_unstable();
    ones.dedup();
    let mut zeros: Vec<usize> = (2..=h - 3).flat_map(|k| b.halves[k].iter().copied()).collect();
    zeros.sort_unstable();
    zeros.dedup();
    let mut data = vec![None; g.len()];
    assign(&mut data, &ones, 1.0, "f_{m,1} at q_1")?;
    assign(&mut data, &zeros, 0.0, "f_{m,1} away from q_1")?;
    let values = form.harmonic_solve(&data)?.values;
    let resistance = form
        .effective_resistance(&ones, &zeros)?
        .finite()
        .ok_or_else(|| Error::PreconditionFailed("half-side sets are disconnected".into()))?;
    let checks = Checks::new(&values)
        .equal("one_at_q1", &ones, |_| 1.0)
        .zero("zero_far", &zeros)
        .range("unit", 0.0, 1.0)
        .finish();
    let edges = g.edges.iter().map(|e| (e.a, e.b)).collect();
    let words = g.cells.iter().map(|c| c.word.clone()).collect();
    let mut f = CertifiedFunction::new(m, words, values, Provenance::Harmonic, edges, checks)?;
    let e = f.energy();
    f.push_bound("energy_times_resistance", e * resistance, 1.0);
    f.push_bound("unit_minus_energy_times_resistance", 1.0, e * resistance);
    Ok(HalfsideBump { m, m0, f, resistance })
}

/// `f ∘ (Γ*_k)^{-1}` for the rotation `Γ_k` taking `q_1` to `q_{k+1}`.
pub fn rotate_values(carpet: &Carpet, f: &CertifiedFunction, k: usize) -> Result<Vec<f64>> {
    let n0 = carpet.n0();
    let perm: Vec<usize> = (0..n0).map(|i| (i + k) % n0).collect();
    let g =
        find_by_perm(&carpet.group, &perm).ok_or_else(|| Error::SymmetryViolation(format!("no rotation by {k}")))?;
    let inv = inverse_index(&carpet.group, g);
    let index = f.index();
    f.words
        .iter()
        .map(|w| {
            let img = carpet.induced_word_symmetry(inv, w)?;
            index.get(&img).map(|&i| f.values[i]).ok_or_else(|| Error::SymmetryViolation(format!("{img} missing")))
        })
        .collect()
}

/// `g_{w,m}` on `B_m(N_3(w))` with the quantities it certifies.
#[derive(Clone, Debug)]
pub struct CornerBump {
    pub n: usize,
    pub m: usize,
    pub w: Word,
    pub g: CertifiedFunction,
    /// Energy of `f_{m,1}`.
    pub base_energy: f64,
    /// `R_{n+m}(B_m(w), B_m(N_2^c(w)))` on the same graph.
    pub annulus_resistance: Option<f64>,
}

/// Glue rotated half-side bumps around the vertices of `Ψ_w A` and take
/// the maximum with the indicator of `B_m(w)`.
///
/// The domain is `B_m(N_3(w))`; `g` vanishes on the rest of `Λ_{n+m}`.
pub fn corner_bump(carpet: &Carpet, n: usize, w: &Word, m: usize, budget: usize) -> Result<CornerBump> {
    require_equal_ratios(carpet)?;
    if w.len() != n {
        return Err(Error::InvalidWord(format!("{w} (not in Λ_{n})")));
    }
    let base = halfside_bump(carpet, m, budget)?;
    let n0 = carpet.n0();
    let rotated: Vec<Vec<f64>> = (0..n0).map(|k| rotate_values(carpet, &base.f, k)).collect::<Result<_>>()?;
    let base_index: HashMap<&Word, usize> = base.f.index();

    let coarse = CellGraph::from_partition(carpet, &partition(carpet, n, budget)?)?;
    let wi = coarse.node(w)?;
    let n2 = coarse.neighborhood_small(wi, 2);
    let n3 = coarse.neighborhood_small(wi, 3);
    let t = Threshold::level(carpet, n + m);
    let mut cells = Vec::new();
    for &v in &n3 {
        cells.extend(expand(carpet, &coarse.cells[v], t, budget)?);
    }
    let dom = Domain::build(carpet, cells)?;
    let words = dom.words();
    let coarse_index: HashMap<Word, usize> = n3.iter().map(|&v| (coarse.cells[v].word.clone(), v)).collect();
    let parent = ancestors(&words, &coarse_index)?;

    let frame = &carpet.spec.frame;
    let cw = carpet.cell(w);
    let tol = carpet.tol_at(carpet.rho_min.powi(n as i32));
    let mut values = vec![0.0f64; dom.len()];
    for i in 0..n0 {
        let corner = cw.map.apply(frame.vertex(i));
        for &v in &n3 {
            let cv = &coarse.cells[v];
            let hit = (0..n0).find(|&j| dist(cv.map.apply(frame.vertex(j)), corner) <= tol);
            let j = match hit {
                Some(j) => j,
                None => {
                    if cv.polygon(carpet).dist_to_point(corner) <= tol {
                        return Err(Error::PreconditionFailed(format!(
                            "vertex q_{} of {w} lies on {} away from its vertices",
                            i + 1,
                            cv.word
                        )));
                    }
                    continue;
                }
            };
            for (u, word) in words.iter().enumerate() {
                if parent[u] != v {
                    continue;
                }
                let k = base_index[&word.strip(&cv.word)];
                values[u] = values[u].max(rotated[j][k]);
            }
        }
    }
    let inner: Vec<usize> = (0..dom.len()).filter(|&u| parent[u] == wi).collect();
    for &u in &inner {
        values[u] = 1.0;
    }
    let outer: Vec<usize> = (0..dom.len()).filter(|&u| n2.binary_search(&parent[u]).is_err()).collect();
    let checks = Checks::new(&values)
        .equal("one_on_cell", &inner, |_| 1.0)
        .zero("zero_off_n2", &outer)
        .range("unit", 0.0, 1.0)
        .finish();
    let annulus_resistance =
        if outer.is_empty() { None } else { dom.form.effective_resistance(&inner, &outer)?.finite() };
    let mut g = CertifiedFunction::new(n + m, words, values, Provenance::Constructed, dom.edges(), checks)?;
    let e = g.energy();
    g.push_bound("energy_vs_6_n0_base", e, 6.0 * n0 as f64 * base.f.energy());
    if let Some(r) = annulus_resistance {
        g.push_bound("inverse_energy_vs_resistance", 1.0 / e, r);
    }
    Ok(CornerBump { n, m, w: w.clone(), g, base_energy: base.f.energy(), annulus_resistance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::{hollow_square_carpet, sierpinski_carpet};

    #[test]
    fn sc_halfside_bump() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        let b = halfside_bump(&c, 2, 1 << 16).unwrap();
        assert!(b.f.constraints_hold());
        assert!(b.f.bounds_hold(), "{:?}", b.f.certificate.bounds);
        let r1 = rotate_values(&c, &b.f, 1).unwrap();
        // the bump at q_2 equals 1 on the cell at q_2
        let i = b.f.words.iter().position(|w| *w == Word::from_slice(&[2, 2])).unwrap();
        assert_eq!(r1[i], 1.0);
    }

    #[test]
    fn halfside_needs_equal_ratios() {
        let c = Carpet::new(hollow_square_carpet()).unwrap();
        assert!(matches!(halfside_bump(&c, 2, 1 << 16), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn sc_corner_bump() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        let b = corner_bump(&c, 1, &Word::from_slice(&[0]), 2, 1 << 16).unwrap();
        assert!(b.g.constraints_hold(), "{:?}", b.g.certificate.constraints);
        assert!(b.g.bounds_hold(), "{:?}", b.g.certificate.bounds);
        assert!((b.g.recompute_energy().unwrap() - b.g.energy()).abs() < 1e-10);
    }
}
