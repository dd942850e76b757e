//! Boundary cells of a partition: cells meeting a side or half-side, the
//! corner cells, and cells meeting a point, segment or cell set.

use std::collections::BTreeSet;

use crate::carpet::validate::cell_meets_side;
use crate::carpet::{Carpet, CellContact, Membership, FRAME_TOL};
use crate::cellgraph::partition::{partition, Cell, Word};
use crate::error::{Error, Result};
use crate::geometry::{contact_classify, dist, q_to_f64, ContactKind, Point, QPoint, Q};

/// Whether the cell meets the segment `[a, b]` under the cell-contact rule.
pub fn cell_meets_segment(carpet: &Carpet, cell: &Cell, a: Point, b: Point, exact: Option<(QPoint, QPoint)>) -> bool {
    let poly = cell.polygon(carpet);
    match poly.segment_contact(a, b, exact, FRAME_TOL * cell.rho) {
        ContactKind::Segment { .. } => true,
        ContactKind::Point(p) => carpet.bordered || carpet.cell_contains(cell, p) != Membership::Out,
        _ => false,
    }
}

/// Whether the cell contains `p` (polygon containment plus membership;
/// undecided points count).
pub fn cell_meets_point(carpet: &Carpet, cell: &Cell, p: Point) -> bool {
    let poly = cell.polygon(carpet);
    poly.contains(p, FRAME_TOL * cell.rho) && carpet.cell_contains(cell, p) != Membership::Out
}

/// Squared distance, exact when the inputs are rational.
enum Dist2 {
    Exact(Q),
    Float(f64),
}

impl Dist2 {
    fn of(carpet: &Carpet, cell: &Cell, q: Point, qe: Option<QPoint>) -> Dist2 {
        let poly = cell.polygon(carpet);
        match qe.and_then(|x| poly.dist2_to_point_exact(&x)) {
            Some(d) => Dist2::Exact(d),
            None => Dist2::Float(poly.dist_to_point(q).powi(2)),
        }
    }

    fn sqrt(&self) -> f64 {
        match self {
            Dist2::Exact(q) => q_to_f64(q).sqrt(),
            Dist2::Float(f) => f.sqrt(),
        }
    }
}

/// `(a <= b, a >= b)` for two distances.
fn compare(a: &Dist2, b: &Dist2, tol: f64) -> (bool, bool) {
    if let (Dist2::Exact(x), Dist2::Exact(y)) = (a, b) {
        return (x <= y, x >= y);
    }
    let (x, y) = (a.sqrt(), b.sqrt());
    (x <= y + tol, x + tol >= y)
}

/// Whether `Ψ_c` maps the segment `[a, b]` into itself.
fn maps_into(cell: &Cell, a: Point, b: Point, exact: Option<(QPoint, QPoint)>) -> bool {
    if let Some((ea, eb)) = exact {
        if let (Some(ja), Some(jb)) = (cell.map.apply_exact(&ea), cell.map.apply_exact(&eb)) {
            return on_segment_exact(ja, ea, eb) && on_segment_exact(jb, ea, eb);
        }
    }
    on_segment(cell.map.apply(a), a, b) && on_segment(cell.map.apply(b), a, b)
}

/// Boundary sets of one partition level, as indices into `cells`.
#[derive(Clone, Debug)]
pub struct BoundarySets {
    /// `∂_kΛ` for each side `k` (0-based, side `k` runs from `q_{k+1}`).
    pub sides: Vec<Vec<usize>>,
    /// `∂'_hΛ` for each half index `h ∈ 0..2n0`.
    pub halves: Vec<Vec<usize>>,
    /// Cells of `∂_kΛ` whose map sends side `k` into side `k`.
    pub underline: Vec<Vec<usize>>,
    /// The cell containing vertex `k`, when it is unique.
    pub tilde: Vec<Option<usize>>,
}

impl BoundarySets {
    /// Union of the underline sets.
    pub fn underline_all(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.underline.iter().flatten().copied().collect();
        s.into_iter().collect()
    }
}

/// Compute the boundary sets of a list of cells covering `K`.
pub fn boundary_sets(carpet: &Carpet, cells: &[Cell]) -> Result<BoundarySets> {
    let frame = &carpet.spec.frame;
    let n0 = frame.n0;
    let mut sides = vec![Vec::new(); n0];
    let mut halves = vec![Vec::new(); 2 * n0];
    let mut underline = vec![Vec::new(); n0];
    let mut tilde = vec![None; n0];
    for k in 0..n0 {
        let (a, b) = frame.side(k);
        let exact = frame.exact_vertices.as_ref().map(|ev| (ev[k], ev[(k + 1) % n0]));
        let (qa, qb) = (frame.exact_half_point(2 * k), frame.exact_half_point(2 * k + 2));
        for (i, c) in cells.iter().enumerate() {
            if !cell_meets_side(carpet, c, k) {
                continue;
            }
            sides[k].push(i);
            let da = Dist2::of(carpet, c, a, qa);
            let db = Dist2::of(carpet, c, b, qb);
            let (le, ge) = compare(&da, &db, FRAME_TOL * c.rho);
            if le {
                halves[2 * k].push(i);
            }
            if ge {
                halves[2 * k + 1].push(i);
            }
            let inside = maps_into(c, a, b, exact);
            if inside {
                underline[k].push(i);
            }
        }
        if sides[k].is_empty() {
            return Err(Error::EmptyBoundary(k + 1));
        }
    }
    for (k, t) in tilde.iter_mut().enumerate() {
        let q = frame.vertex(k);
        let hits: Vec<usize> = sides[k].iter().copied().filter(|&i| cell_meets_point(carpet, &cells[i], q)).collect();
        if hits.len() == 1 {
            *t = Some(hits[0]);
        }
    }
    Ok(BoundarySets { sides, halves, underline, tilde })
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    (dist(a, p) + dist(p, b) - dist(a, b)).abs() <= FRAME_TOL
}

fn on_segment_exact(p: QPoint, a: QPoint, b: QPoint) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let e = [p[0] - a[0], p[1] - a[1]];
    let cross = d[0] * e[1] - d[1] * e[0];
    let t = d[0] * e[0] + d[1] * e[1];
    let l2 = d[0] * d[0] + d[1] * d[1];
    cross == Q::from_integer(0) && t >= Q::from_integer(0) && t <= l2
}

/// Whether half-side sets at `d_{S_1}` distance at least one are disjoint.
pub fn halves_separated(b: &BoundarySets) -> bool {
    let h = b.halves.len();
    for i in 0..h {
        for j in i + 1..h {
            // d_{S_1}(i, j) >= 1 means at least two half steps apart
            let d = (j - i).min(h - (j - i));
            if d >= 2 && b.halves[i].iter().any(|x| b.halves[j].contains(x)) {
                return false;
            }
        }
    }
    true
}

/// Smallest `m ≤ depth` from which half-side sets stay separated through
/// `depth`; `None` if level `depth` still fails.
pub fn half_side_threshold(carpet: &Carpet, depth: usize, budget: usize) -> Result<Option<usize>> {
    let mut m0 = None;
    for m in 1..=depth {
        let p = partition(carpet, m, budget)?;
        let ok = halves_separated(&boundary_sets(carpet, &p.cells)?);
        match (ok, m0) {
            (true, None) => m0 = Some(m),
            (false, _) => m0 = None,
            _ => {}
        }
    }
    Ok(m0)
}

/// A target for `cells_meeting`.
#[derive(Clone, Debug)]
pub enum Target {
    Point(Point),
    Segment(Point, Point),
    Cells(Vec<Cell>),
}

/// `I(target)`: indices of `cells` meeting the target. With `within`,
/// only cells extending that word are considered.
pub fn cells_meeting(carpet: &Carpet, cells: &[Cell], target: &Target, within: Option<&Word>) -> Vec<usize> {
    let keep = |c: &Cell| within.map_or(true, |w| c.word.starts_with(w));
    let mut out = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        if !keep(c) {
            continue;
        }
        let hit = match target {
            Target::Point(p) => cell_meets_point(carpet, c, *p),
            Target::Segment(a, b) => cell_meets_segment(carpet, c, *a, *b, None),
            Target::Cells(others) => {
                let pa = c.polygon(carpet);
                others.iter().any(|o| {
                    if o.word.starts_with(&c.word) || c.word.starts_with(&o.word) {
                        return true;
                    }
                    let k = contact_classify(&pa, &o.polygon(carpet), carpet.tol_at(c.rho.min(o.rho)));
                    !matches!(carpet.cell_contact(c, o, &k), CellContact::None)
                })
            }
        };
        if hit {
            out.push(i);
        }
    }
    out
}

/// `∂B`: members of `cells` (descendants of `w`) that meet `Ψ_w∂A`.
pub fn cell_boundary(carpet: &Carpet, w: &Cell, cells: &[Cell]) -> Vec<usize> {
    let frame = &carpet.spec.frame;
    let n0 = frame.n0;
    let segs: Vec<(Point, Point, Option<(QPoint, QPoint)>)> = (0..n0)
        .map(|k| {
            let (a, b) = frame.side(k);
            let exact = frame
                .exact_vertices
                .as_ref()
                .and_then(|ev| Some((w.map.apply_exact(&ev[k])?, w.map.apply_exact(&ev[(k + 1) % n0])?)));
            (w.map.apply(a), w.map.apply(b), exact)
        })
        .collect();
    (0..cells.len())
        .filter(|&i| segs.iter().any(|(a, b, e)| cell_meets_segment(carpet, &cells[i], *a, *b, *e)))
        .collect()
}
