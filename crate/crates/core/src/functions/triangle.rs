//! Helpers for triangle carpets: a function separating a segment of `L_3`
//! from `L_2`, and the patch `f_i` around an inverted bottom cell.

use serde::Serialize;

use crate::carpet::Carpet;
use crate::cellgraph::boundary::{boundary_sets, cells_meeting, BoundarySets, Target};
use crate::cellgraph::partition::partition;
use crate::cellgraph::{Cell, CellGraph, Word};
use crate::energy::{GraphForm, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{dist, Point};

use super::{assign, CertifiedFunction, Checks};

fn require_triangle(carpet: &Carpet) -> Result<()> {
    if carpet.n0() != 3 {
        return Err(Error::InvalidArgument(format!("needs a triangle carpet, got N_0 = {}", carpet.n0())));
    }
    Ok(())
}

fn level1_sets(carpet: &Carpet) -> Result<(Vec<Cell>, BoundarySets)> {
    let cells: Vec<Cell> = (0..carpet.spec.n()).map(|i| carpet.cell(&Word::from_slice(&[i]))).collect();
    let b = boundary_sets(carpet, &cells)?;
    Ok((cells, b))
}

/// The map fixing `q_3`.
fn apex_letter(carpet: &Carpet) -> Result<usize> {
    if let Some(&i) = carpet.spec.corner_labels.get(&2) {
        return Ok(i);
    }
    let q3 = carpet.spec.frame.vertex(2);
    (0..carpet.spec.n())
        .find(|&i| dist(carpet.affines[i].apply(q3), q3) < 1e-12)
        .ok_or_else(|| Error::PreconditionFailed("no map fixes q_3".into()))
}

/// Harmonic values on `nodes` of `g` with data given in global indices.
fn solve_on(g: &CellGraph, nodes: &[usize], data: &[Option<f64>]) -> Result<Vec<f64>> {
    let form = GraphForm::restricted(g, nodes);
    let local: Vec<Option<f64>> = nodes.iter().map(|&u| data[u]).collect();
    Ok(form.harmonic_solve(&local)?.values)
}

/// A `[0, 1]`-valued function on `Λ_n` that is 1 on the cells meeting the
/// segment from `q_1` to `q_1 + t(q_3 − q_1)` and 0 on `∂_2Λ_n`.
///
/// The triangle is cut into strips `3^l·j` (`j` a bottom letter,
/// `l < m_seg`) and the apex patch `3^{m_seg}`. Each strip and the patch
/// carry a harmonic function; the remaining cells get 0 or 1 depending on
/// whether they are closer to `q_2` or to `q_1`.
pub fn subsegment_function(
    carpet: &Carpet,
    n: usize,
    t: f64,
    m_seg: usize,
    budget: usize,
) -> Result<CertifiedFunction> {
    require_triangle(carpet)?;
    let apex = apex_letter(carpet)?;
    let rho3 = carpet.spec.maps[apex].ratio.value;
    let t_max = 1.0 - rho3.powi(m_seg as i32);
    if !(0.0..t_max).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, {t_max})")));
    }
    let (_, b1) = level1_sets(carpet)?;
    let bottom = &b1.sides[0];
    let g = CellGraph::from_partition(carpet, &partition(carpet, n, budget)?)?;
    let sets = boundary_sets(carpet, &g.cells)?;
    let frame = &carpet.spec.frame;
    let (q1, q2, q3) = (frame.vertex(0), frame.vertex(1), frame.vertex(2));

    let mut strips: Vec<Vec<usize>> = vec![Vec::new(); m_seg];
    let mut patch = Vec::new();
    let mut values = vec![f64::NAN; g.len()];
    for (u, c) in g.cells.iter().enumerate() {
        let l = c.word.0.iter().take_while(|&&x| x as usize == apex).count().min(m_seg);
        if l == m_seg {
            patch.push(u);
        } else if c.word.len() == l {
            return Err(Error::InvalidArgument(format!("level {n} is too coarse for m_seg = {m_seg}")));
        } else if bottom.contains(&(c.word.0[l] as usize)) {
            strips[l].push(u);
        } else {
            let x = c.polygon(carpet).centroid();
            values[u] = if dist(x, q1) < dist(x, q2) { 1.0 } else { 0.0 };
        }
    }
    if patch.iter().any(|&u| g.cells[u].word.len() <= m_seg) {
        return Err(Error::InvalidArgument(format!("level {n} is too coarse for m_seg = {m_seg}")));
    }

    let mut in_strip = vec![false; g.len()];
    for &u in strips.iter().flatten() {
        in_strip[u] = true;
    }
    let strip_part = |set: &[usize]| -> Vec<usize> { set.iter().copied().filter(|&u| in_strip[u]).collect() };
    let mut data = vec![None; g.len()];
    assign(&mut data, &strip_part(&sets.sides[2]), 1.0, "segment side")?;
    assign(&mut data, &strip_part(&sets.sides[1]), 0.0, "far side")?;
    for nodes in strips.iter().filter(|s| !s.is_empty()) {
        for (&u, v) in nodes.iter().zip(solve_on(&g, nodes, &data)?) {
            values[u] = v;
        }
    }
    if !patch.is_empty() {
        let prefix = Word(vec![apex as u16; m_seg]);
        let rel: Vec<Cell> = patch.iter().map(|&u| carpet.cell(&g.cells[u].word.strip(&prefix))).collect();
        let bp = boundary_sets(carpet, &rel)?;
        let corner =
            bp.tilde[0].ok_or_else(|| Error::PreconditionFailed("no unique cell at the patch corner".into()))?;
        let mut pdata = vec![None; g.len()];
        assign(&mut pdata, &sets.sides[1], 0.0, "patch far side")?;
        assign(&mut pdata, &[patch[corner]], 1.0, "patch corner")?;
        for (&u, v) in patch.iter().zip(solve_on(&g, &patch, &pdata)?) {
            values[u] = v;
        }
    }

    let q: Point = [q1[0] + t * (q3[0] - q1[0]), q1[1] + t * (q3[1] - q1[1])];
    let target = if t == 0.0 { Target::Point(q1) } else { Target::Segment(q1, q) };
    let ones = cells_meeting(carpet, &g.cells, &target, None);
    let checks = Checks::new(&values)
        .equal("one_on_segment", &ones, |_| 1.0)
        .zero("zero_on_l2", &sets.sides[1])
        .range("unit", 0.0, 1.0)
        .finish();
    let words = g.cells.iter().map(|c| c.word.clone()).collect();
    let edges = g.edges.iter().map(|e| (e.a, e.b)).collect();
    CertifiedFunction::new(n, words, values, Provenance::Constructed, edges, checks)
}

/// Relative size of the inverted cell `i` against its neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PatchCase {
    /// `ρ_i < ρ_{j_1}`.
    Smaller,
    /// `ρ_i = ρ_{j_1}`.
    Equal,
    /// `ρ_i > ρ_{j_1} = ρ_{j_2}`.
    LargerFlat,
    /// `ρ_i > ρ_{j_1} > ρ_{j_2}`, or `j_2` absent.
    LargerDecreasing,
}

impl PatchCase {
    pub fn number(&self) -> usize {
        match self {
            PatchCase::Smaller => 1,
            PatchCase::Equal => 2,
            PatchCase::LargerFlat => 3,
            PatchCase::LargerDecreasing => 4,
        }
    }
}

/// `f_i` on `Λ_n` for an inverted bottom cell `i`.
#[derive(Clone, Debug)]
pub struct TrianglePatch {
    pub n: usize,
    pub i: usize,
    pub case: PatchCase,
    /// `j_1, j_2` to the right and `j_{-1}, j_{-2}` to the left.
    pub right: (usize, Option<usize>),
    pub left: (usize, Option<usize>),
    pub f: CertifiedFunction,
    pub g_energy: f64,
    pub g_mirror_energy: f64,
}

/// Build `f_i` from the two harmonic functions `g_i` (right of `i`) and
/// `g'_i` (left of `i`): `g_i` on the right blocks, `g'_i` on the left
/// blocks, `min(g_i, g'_i)` on block `i`, 0 elsewhere.
pub fn triangle_patch(carpet: &Carpet, n: usize, i: usize, budget: usize) -> Result<TrianglePatch> {
    require_triangle(carpet)?;
    let (cells1, b1) = level1_sets(carpet)?;
    if !b1.sides[0].contains(&i) || b1.underline[0].contains(&i) {
        return Err(Error::InvalidArgument(format!("cell {i} is not an inverted cell on L_1")));
    }
    let cx = |k: usize| cells1[k].polygon(carpet).centroid()[0];
    let xi = cx(i);
    let nearest = |set: &[usize], right: bool, from: f64| {
        set.iter()
            .copied()
            .filter(|&k| k != i && if right { cx(k) > from } else { cx(k) < from })
            .min_by(|&a, &b| (cx(a) - from).abs().total_cmp(&(cx(b) - from).abs()))
    };
    let upright = &b1.underline[0];
    let inverted: Vec<usize> = b1.sides[0].iter().copied().filter(|k| !upright.contains(k)).collect();
    let missing = |side: &str| Error::PreconditionFailed(format!("no upright bottom cell {side} of {i}"));
    let j1 = nearest(upright, true, xi).ok_or_else(|| missing("right"))?;
    let jm1 = nearest(upright, false, xi).ok_or_else(|| missing("left"))?;
    let j2 = nearest(&inverted, true, cx(j1));
    let jm2 = nearest(&inverted, false, cx(jm1));

    let rho = |k: usize| carpet.spec.maps[k].ratio.value;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.max(b);
    let case = if same(rho(i), rho(j1)) {
        PatchCase::Equal
    } else if rho(i) < rho(j1) {
        PatchCase::Smaller
    } else if j2.is_some_and(|j2| same(rho(j1), rho(j2))) {
        PatchCase::LargerFlat
    } else {
        PatchCase::LargerDecreasing
    };

    let g = CellGraph::from_partition(carpet, &partition(carpet, n, budget)?)?;
    let form = GraphForm::from_graph(&g);
    let block = |k: usize| -> Vec<usize> { (0..g.len()).filter(|&u| g.cells[u].word.0[0] as usize == k).collect() };
    let rel_sets = |k: usize| -> Result<(Vec<usize>, BoundarySets)> {
        let nodes = block(k);
        let prefix = Word::from_slice(&[k]);
        let rel: Vec<Cell> = nodes.iter().map(|&u| carpet.cell(&g.cells[u].word.strip(&prefix))).collect();
        let b = boundary_sets(carpet, &rel)?;
        Ok((nodes, b))
    };
    let pick = |nodes: &[usize], set: &[usize]| -> Vec<usize> { set.iter().map(|&k| nodes[k]).collect() };
    if g.cells.iter().any(|c| c.word.is_empty()) {
        return Err(Error::InvalidArgument("level 0 has no blocks".into()));
    }
    let bi = rel_sets(i)?;

    // one harmonic function per side of i
    let build = |near: usize, far: Option<usize>, own_side: usize, near_half: usize| -> Result<Vec<f64>> {
        let bn = rel_sets(near)?;
        let mut data = vec![None; g.len()];
        let mut keep = vec![false; g.len()];
        for k in [Some(i), Some(near), far].into_iter().flatten() {
            for u in block(k) {
                keep[u] = true;
            }
        }
        let outside: Vec<usize> = (0..g.len()).filter(|&u| !keep[u]).collect();
        assign(&mut data, &outside, 0.0, "outside the patch")?;
        if let Some(far) = far {
            let bf = rel_sets(far)?;
            assign(&mut data, &pick(&bf.0, &bf.1.sides[own_side]), 0.0, "far block")?;
        }
        assign(&mut data, &pick(&bi.0, &bi.1.sides[own_side]), 1.0, "side of i")?;
        assign(&mut data, &pick(&bn.0, &bn.1.halves[near_half]), 1.0, "half-side of the neighbour")?;
        Ok(form.harmonic_solve(&data)?.values)
    };
    let h0 = 2 * carpet.n0();
    let right = build(j1, j2, 2, h0 - 1)?;
    let left = build(jm1, jm2, 1, 2)?;

    let mut values = vec![0.0f64; g.len()];
    for k in [Some(j1), j2].into_iter().flatten() {
        for u in block(k) {
            values[u] = right[u];
        }
    }
    for k in [Some(jm1), jm2].into_iter().flatten() {
        for u in block(k) {
            values[u] = left[u];
        }
    }
    for &u in &bi.0 {
        values[u] = right[u].min(left[u]);
    }
    let support: Vec<usize> = [Some(i), Some(j1), j2, Some(jm1), jm2].into_iter().flatten().collect();
    let outside: Vec<usize> = (0..g.len()).filter(|&u| !support.contains(&(g.cells[u].word.0[0] as usize))).collect();
    let checks = Checks::new(&values).zero("zero_off_patch", &outside).range("unit", 0.0, 1.0).finish();
    let words = g.cells.iter().map(|c| c.word.clone()).collect();
    let edges = g.edges.iter().map(|e| (e.a, e.b)).collect();
    let mut f = CertifiedFunction::new(n, words, values, Provenance::Constructed, edges, checks)?;
    f.certificate.notes.push(format!("case {}", case.number()));
    Ok(TrianglePatch {
        n,
        i,
        case,
        right: (j1, j2),
        left: (jm1, jm2),
        f,
        g_energy: form.energy(&right)?,
        g_mirror_energy: form.energy(&left)?,
    })
}
