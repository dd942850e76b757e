//! Functions on `Λ = w^{-1}·B_m(w)` whose values on the underlined
//! boundary follow an affine map.
//!
//! The construction runs in three stages. Two constrained harmonic
//! minimizers `h_Λ`, `h'_Λ` carry half-side data. An iterative gluing over
//! the prefixes `Θ_1(Λ)` of the bottom cells makes the bottom values exact.
//! Reflections and rotations of the result then give one hat function per
//! vertex. The output is linear in the affine map, so the hats are cached
//! per relative threshold and any affine map is a cheap combination.
//!
//! The reflection assembly reproduces the target exactly only along each
//! side direction; when the affine map has a normal component and the
//! boundary cells have different ratios, values are off by `O(ρ_τ)`. The
//! final step writes the targets on the underlined boundary and records
//! the size of that adjustment.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::carpet::Carpet;
use crate::cellgraph::boundary::{boundary_sets, BoundarySets};
use crate::cellgraph::partition::{expand, level_of, Threshold};
use crate::cellgraph::{Cell, Word};
use crate::energy::Provenance;
use crate::error::{Error, Result};
use crate::geometry::{find_by_perm, inverse_index, seg_point_dist, Affine, Point};

use super::{assign, CertifiedFunction, Checks, Domain};

/// `x ↦ c + a·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineFn {
    pub c: f64,
    pub a: [f64; 2],
}

impl AffineFn {
    pub fn new(c: f64, a: [f64; 2]) -> Self {
        AffineFn { c, a }
    }

    pub fn constant(c: f64) -> Self {
        AffineFn { c, a: [0.0, 0.0] }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.c + self.a[0] * p[0] + self.a[1] * p[1]
    }

    /// `|∇li|²`.
    pub fn gradient_norm2(&self) -> f64 {
        self.a[0] * self.a[0] + self.a[1] * self.a[1]
    }

    /// `li ∘ Ψ` for `Ψ(x) = s·x + t`.
    pub fn compose(&self, map: &Affine) -> AffineFn {
        AffineFn { c: self.eval(map.shift), a: [self.a[0] * map.scale, self.a[1] * map.scale] }
    }

    /// `Li` on the side `[p, q]`: 0 at `p`, 1 at `q`, constant across.
    pub fn along(p: Point, q: Point) -> AffineFn {
        let d = [q[0] - p[0], q[1] - p[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        let a = [d[0] / l2, d[1] / l2];
        AffineFn { c: -(a[0] * p[0] + a[1] * p[1]), a }
    }
}

/// Visiting order of `Θ_1(Λ)` within one word length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaOrder {
    #[default]
    Lexicographic,
    Reverse,
}

/// Diagnostics of one gluing run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AlgorithmTrace {
    /// `Θ_1(Λ) ∖ {∅}` in the order visited.
    pub theta: Vec<Word>,
    /// Largest change outside the active block over all steps (the gluing
    /// invariant says 0).
    pub max_outside_change: f64,
    /// Largest change on the non-bottom sides of the active block.
    pub max_side_jump: f64,
    /// `max |g(τ) − Li(Ψ_τ(q_1+q_2)/2)|` over the bottom underlined cells.
    pub bottom_residual: f64,
}

/// `h_Λ`, `h'_Λ` and the graph of one relative partition.
struct Pieces {
    dom: Domain,
    sets: BoundarySets,
    h: Vec<f64>,
    hp: Vec<f64>,
}

/// Everything needed to evaluate the construction for any affine map on
/// one relative partition.
pub struct LinearBasis {
    pub threshold: f64,
    pub words: Vec<Word>,
    pub edges: Vec<(usize, usize)>,
    /// Output of the gluing algorithm.
    pub g: Vec<f64>,
    /// Hat at vertex `k`: `g'' ∘ (Γ*_k)^{-1}`.
    pub hats: Vec<Vec<f64>>,
    /// `Ψ_{Γ*_k(∂̃_1Λ)}(q_c)`.
    pub corners: Vec<Point>,
    /// Nodes of the underlined boundary and their targets `Ψ_τ(q_c)`.
    pub underline: Vec<usize>,
    pub targets: Vec<Point>,
    pub trace: AlgorithmTrace,
}

impl LinearBasis {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The assembled function before the boundary write.
    pub fn assemble(&self, li: &AffineFn) -> Vec<f64> {
        let base = li.eval(self.corners[0]);
        let mut out = vec![base; self.len()];
        for (hat, p) in self.hats.iter().zip(&self.corners).skip(1) {
            let d = li.eval(*p) - base;
            if d == 0.0 {
                continue;
            }
            for (o, h) in out.iter_mut().zip(hat) {
                *o += d * h;
            }
        }
        out
    }

    /// The function with exact underlined boundary values, and the largest
    /// adjustment the boundary write made.
    pub fn evaluate(&self, li: &AffineFn) -> (Vec<f64>, f64) {
        let mut out = self.assemble(li);
        let mut adjust = 0.0f64;
        for (&u, p) in self.underline.iter().zip(&self.targets) {
            let t = li.eval(*p);
            adjust = adjust.max((out[u] - t).abs());
            out[u] = t;
        }
        (out, adjust)
    }
}

/// Builds and caches the pieces of the construction for one carpet.
pub struct LinearBuilder<'a> {
    pub carpet: &'a Carpet,
    pub budget: usize,
    /// Guard on `#Θ_1(Λ)`.
    pub theta_budget: usize,
    pub order: ThetaOrder,
    bottom_letters: Vec<usize>,
    underline_letters: Vec<usize>,
    li: AffineFn,
    mid: Point,
    pieces: Mutex<HashMap<String, Arc<Pieces>>>,
    bases: Mutex<HashMap<String, Arc<LinearBasis>>>,
}

fn key(t: &Threshold) -> String {
    format!("{:.12e}", t.f)
}

fn letter(c: &Cell) -> usize {
    c.word.0[0] as usize
}

impl<'a> LinearBuilder<'a> {
    /// Structural checks: square or triangle frame, symmetric IFS, bordered
    /// first level. The hollow and corner conditions are checked by
    /// validation.
    pub fn new(carpet: &'a Carpet, budget: usize) -> Result<Self> {
        let n0 = carpet.n0();
        if n0 != 3 && n0 != 4 {
            return Err(Error::PreconditionFailed(format!("linear extension needs N_0 in {{3, 4}}, got {n0}")));
        }
        if !carpet.symmetric() {
            return Err(Error::PreconditionFailed("linear extension needs a symmetric IFS".into()));
        }
        if !carpet.bordered {
            return Err(Error::PreconditionFailed("linear extension needs a bordered carpet".into()));
        }
        let level1: Vec<Cell> = (0..carpet.spec.n()).map(|i| carpet.cell(&Word::from_slice(&[i]))).collect();
        let b1 = boundary_sets(carpet, &level1)?;
        let frame = &carpet.spec.frame;
        let (q1, q2) = (frame.vertex(0), frame.vertex(1));
        Ok(LinearBuilder {
            carpet,
            budget,
            theta_budget: 100_000,
            order: ThetaOrder::default(),
            bottom_letters: b1.sides[0].clone(),
            underline_letters: b1.underline[0].clone(),
            li: AffineFn::along(q1, q2),
            mid: [(q1[0] + q2[0]) / 2.0, (q1[1] + q2[1]) / 2.0],
            pieces: Mutex::new(HashMap::new()),
            bases: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_order(mut self, order: ThetaOrder) -> Self {
        self.order = order;
        self
    }

    /// Threshold of `w^{-1}·B_m(w)`.
    pub fn relative_threshold(&self, w: &Word, m: usize) -> Result<Threshold> {
        let n = level_of(self.carpet, w).ok_or_else(|| Error::InvalidWord(w.to_string()))?;
        Ok(Threshold::level(self.carpet, n + m).relative(&self.carpet.cell(w)))
    }

    fn li_of(&self, w: &Word, p: Point) -> f64 {
        self.li.eval(self.carpet.cell(w).map.apply(p))
    }

    fn group_index(&self, perm: &[usize]) -> Result<usize> {
        find_by_perm(&self.carpet.group, perm).ok_or_else(|| Error::SymmetryViolation(format!("no element {perm:?}")))
    }

    fn pieces(&self, t: Threshold) -> Result<Arc<Pieces>> {
        let k = key(&t);
        if let Some(p) = self.pieces.lock().unwrap().get(&k) {
            return Ok(p.clone());
        }
        let p = Arc::new(self.build_pieces(t)?);
        self.pieces.lock().unwrap().insert(k, p.clone());
        Ok(p)
    }

    fn build_pieces(&self, t: Threshold) -> Result<Pieces> {
        let carpet = self.carpet;
        let cells = expand(carpet, &Cell::root(), t, self.budget)?;
        if cells.len() < 2 {
            return Err(Error::PreconditionFailed("trivial partition {∅}".into()));
        }
        let dom = Domain::build(carpet, cells)?;
        let sets = boundary_sets(carpet, dom.cells())?;
        let h0 = 2 * carpet.n0();
        let n = dom.len();

        // h_Λ: half-side data on each underlined first-level block and on Λ
        let mut data = vec![None; n];
        for &j in &self.underline_letters {
            let nodes: Vec<usize> = (0..n).filter(|&u| letter(&dom.cells()[u]) == j).collect();
            if nodes.is_empty() {
                continue;
            }
            let prefix = Word::from_slice(&[j]);
            let rel: Vec<Cell> = nodes.iter().map(|&u| carpet.cell(&dom.cells()[u].word.strip(&prefix))).collect();
            let bj = boundary_sets(carpet, &rel)?;
            let (t1, t2) = corner_pair(&bj)?;
            let v1 = self.li_of(&prefix.concat(&rel[t1].word), self.mid);
            let v2 = self.li_of(&prefix.concat(&rel[t2].word), self.mid);
            let left: Vec<usize> = bj.halves[h0 - 1].iter().map(|&k| nodes[k]).collect();
            let right: Vec<usize> = bj.halves[2].iter().map(|&k| nodes[k]).collect();
            assign(&mut data, &left, v1, "h_Λ on a block")?;
            assign(&mut data, &right, v2, "h_Λ on a block")?;
        }
        let (t1, t2) = corner_pair(&sets)?;
        let v1 = self.li_of(&dom.cells()[t1].word, self.mid);
        let v2 = self.li_of(&dom.cells()[t2].word, self.mid);
        assign(&mut data, &sets.halves[h0 - 1], v1, "h_Λ")?;
        assign(&mut data, &sets.halves[2], v2, "h_Λ")?;
        let h = dom.form.harmonic_solve(&data)?.values;

        // h'_Λ: 0 on the bottom blocks, 1 on the far half-sides
        let mut data = vec![None; n];
        let bottom: Vec<usize> = (0..n).filter(|&u| self.bottom_letters.contains(&letter(&dom.cells()[u]))).collect();
        assign(&mut data, &bottom, 0.0, "h'_Λ")?;
        for k in 3..=h0 - 2 {
            assign(&mut data, &sets.halves[k], 1.0, "h'_Λ")?;
        }
        let hp = dom.form.harmonic_solve(&data)?.values;
        Ok(Pieces { dom, sets, h, hp })
    }

    /// The cached basis for the relative partition with threshold `t`.
    pub fn basis(&self, t: Threshold) -> Result<Arc<LinearBasis>> {
        let k = key(&t);
        if let Some(b) = self.bases.lock().unwrap().get(&k) {
            return Ok(b.clone());
        }
        let b = Arc::new(self.build_basis(t)?);
        self.bases.lock().unwrap().insert(k, b.clone());
        Ok(b)
    }

    /// `Θ_1(Λ) ∖ {∅}`: proper nonempty prefixes of the bottom underlined
    /// cells, shortest first.
    fn theta(&self, cells: &[Cell], bottom: &[usize]) -> Result<Vec<Word>> {
        let mut set = BTreeSet::new();
        for &u in bottom {
            let w = &cells[u].word;
            for k in 1..w.len() {
                set.insert(Word(w.0[..k].to_vec()));
                if set.len() > self.theta_budget {
                    return Err(Error::BudgetExceeded {
                        level: 0,
                        estimate: set.len() as f64,
                        budget: self.theta_budget,
                    });
                }
            }
        }
        let mut out: Vec<Word> = set.into_iter().collect();
        match self.order {
            ThetaOrder::Lexicographic => out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b))),
            ThetaOrder::Reverse => out.sort_by(|a, b| a.len().cmp(&b.len()).then(b.cmp(a))),
        }
        Ok(out)
    }

    fn build_basis(&self, t: Threshold) -> Result<LinearBasis> {
        let carpet = self.carpet;
        let frame = &carpet.spec.frame;
        let n0 = carpet.n0();
        let top = self.pieces(t)?;
        let dom = &top.dom;
        let cells = dom.cells();
        let n = dom.len();
        let bottom = top.sets.underline[0].clone();
        let theta = self.theta(cells, &bottom)?;
        let mut trace = AlgorithmTrace { theta: theta.clone(), ..Default::default() };

        // the gluing algorithm, started from A_1 = {∅}, g_1 = h_Λ
        let mut g = top.h.clone();
        for w in &theta {
            let cw = carpet.cell(w);
            let sub = self.pieces(t.relative(&cw))?;
            let a0 = self.li.eval(cw.map.apply(frame.vertex(0)));
            let d = self.li.eval(cw.map.apply(frame.vertex(1))) - a0;
            let prev = g.clone();
            let mut on_side = vec![false; sub.dom.len()];
            for side in &sub.sets.sides[1..] {
                for &k in side {
                    on_side[k] = true;
                }
            }
            let mut inside = vec![false; n];
            for u in 0..n {
                if !cells[u].word.starts_with(w) {
                    continue;
                }
                inside[u] = true;
                let k = sub.dom.graph.node(&cells[u].word.strip(w))?;
                let (h, hp) = (sub.h[k], sub.hp[k]);
                g[u] = prev[u] * hp + (a0 + d * h) * (1.0 - hp);
                if on_side[k] {
                    trace.max_side_jump = trace.max_side_jump.max((g[u] - prev[u]).abs());
                }
            }
            for u in (0..n).filter(|&u| !inside[u]) {
                trace.max_outside_change = trace.max_outside_change.max((g[u] - prev[u]).abs());
            }
        }
        trace.bottom_residual =
            bottom.iter().map(|&u| (g[u] - self.li_of(&cells[u].word, self.mid)).abs()).fold(0.0, f64::max);

        let (t1, t2) = corner_pair(&top.sets)?;
        let a = self.li_of(&cells[t1].word, self.mid);
        let b = self.li_of(&cells[t2].word, self.mid);
        let gp: Vec<f64> = g.iter().map(|x| (x - a) / (b - a)).collect();

        // word symmetries as node permutations
        let perm_nodes = |gi: usize| -> Result<Vec<usize>> {
            cells.iter().map(|c| dom.graph.node(&carpet.induced_word_symmetry(gi, &c.word)?)).collect()
        };
        let polys: Vec<_> = cells.iter().map(|c| c.polygon(carpet)).collect();
        let side_dist = |u: usize, k: usize| {
            let (p, q) = frame.side(k);
            polys[u].vertices.iter().map(|v| seg_point_dist(p, q, *v)).fold(f64::INFINITY, f64::min)
        };
        let lower: Vec<bool> = (0..n).map(|u| side_dist(u, 0) <= side_dist(u, 2)).collect();
        let gpp: Vec<f64> = if n0 == 4 {
            let flip = perm_nodes(self.group_index(&[3, 2, 1, 0])?)?;
            let g1: Vec<f64> = (0..n).map(|u| if lower[u] { gp[u] } else { gp[flip[u]] }).collect();
            let mirror = perm_nodes(self.group_index(&[1, 0, 3, 2])?)?;
            let rot = perm_nodes(self.group_index(&[1, 2, 3, 0])?)?;
            (0..n).map(|u| g1[mirror[u]].min(g1[rot[u]])).collect()
        } else {
            let flip = perm_nodes(self.group_index(&[0, 2, 1])?)?;
            (0..n).map(|u| if lower[u] { 1.0 - g[u] } else { 1.0 - g[flip[u]] }).collect()
        };

        let mut hats = Vec::with_capacity(n0);
        let mut corners = Vec::with_capacity(n0);
        let mut underline: BTreeSet<usize> = BTreeSet::new();
        let qc = frame.center;
        for k in 0..n0 {
            let rot: Vec<usize> = (0..n0).map(|i| (i + k) % n0).collect();
            let gk = self.group_index(&rot)?;
            let inv = perm_nodes(inverse_index(&carpet.group, gk))?;
            hats.push((0..n).map(|u| gpp[inv[u]]).collect::<Vec<f64>>());
            let corner = carpet.induced_word_symmetry(gk, &cells[t1].word)?;
            corners.push(carpet.cell(&corner).map.apply(qc));
            let fwd = perm_nodes(gk)?;
            underline.extend(bottom.iter().map(|&u| fwd[u]));
        }
        let underline: Vec<usize> = underline.into_iter().collect();
        let targets = underline.iter().map(|&u| cells[u].map.apply(qc)).collect();
        Ok(LinearBasis {
            threshold: t.f,
            words: dom.words(),
            edges: dom.edges(),
            g,
            hats,
            corners,
            underline,
            targets,
            trace,
        })
    }

    /// `f` on `w^{-1}·B_m(w)` with `f(τ) = li(Ψ_τ(q_c))` on the underlined
    /// boundary. Words are relative to `w`.
    pub fn linear_boundary_function(&self, w: &Word, m: usize, li: &AffineFn) -> Result<CertifiedFunction> {
        let n = level_of(self.carpet, w).ok_or_else(|| Error::InvalidWord(w.to_string()))?;
        let basis = self.basis(self.relative_threshold(w, m)?)?;
        let (values, adjust) = basis.evaluate(li);
        let checks = Checks::new(&values)
            .equal("linear_on_underline", &basis.underline, |u| {
                let k = basis.underline.binary_search(&u).expect("underline node");
                li.eval(basis.targets[k])
            })
            .finish();
        let mut f = CertifiedFunction::new(
            n + m,
            basis.words.clone(),
            values,
            Provenance::Constructed,
            basis.edges.clone(),
            checks,
        )?;
        f.certificate.notes.push(format!("boundary write adjusted values by at most {adjust:.3e}"));
        f.certificate.notes.push(format!(
            "gluing: {} steps, outside change {:.1e}, side jump {:.3e}, bottom residual {:.1e}",
            basis.trace.theta.len(),
            basis.trace.max_outside_change,
            basis.trace.max_side_jump,
            basis.trace.bottom_residual
        ));
        Ok(f)
    }
}

/// Indices of the cells at `q_1` and `q_2`.
fn corner_pair(b: &BoundarySets) -> Result<(usize, usize)> {
    match (b.tilde[0], b.tilde[1]) {
        (Some(a), Some(c)) => Ok((a, c)),
        _ => Err(Error::PreconditionFailed("no unique corner cell at q_1 or q_2".into())),
    }
}
