//! Geometric conditions on a carpet and the measured constants
//! `c_0`, `M_0` and the interior-cell level.

use serde::Serialize;

use crate::carpet::{Carpet, CellContact, Membership, FRAME_TOL};
use crate::cellgraph::graph::{candidate_pairs, CellGraph};
use crate::cellgraph::partition::{partition, Cell};
use crate::error::{Error, Result};
use crate::geometry::{contact_classify, dist, ContactKind, Point, PolygonImage, Q};

/// Outcome of one condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Could not be decided with the resources up to this depth.
    Undecided(usize),
    /// Condition does not apply (e.g. no corner labels).
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub verdict: Verdict,
    pub witnesses: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub name: Option<String>,
    pub depth: usize,
    pub conditions: Vec<Condition>,
    pub d_h: f64,
    pub boundary_dimension: f64,
    pub s_prime: Vec<usize>,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Measured separation constant, minimum over the checked levels.
    pub c0: Option<f64>,
    /// Per-level values `ρ_*^{-n} · min gap`.
    pub c0_levels: Vec<f64>,
    /// Smallest level with a cell avoiding the frame boundary.
    pub interior_level: Option<usize>,
    pub m0: f64,
    pub tolerance_ok: bool,
}

impl ValidationReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.condition(name).map(|c| &c.verdict)
    }

    pub fn passes(&self, name: &str) -> bool {
        self.verdict(name) == Some(&Verdict::Pass)
    }

    /// The structural conditions plus the declared classes all pass.
    pub fn declared_ok(&self, perfect: bool, bordered: bool) -> bool {
        let mut names = vec!["open_set", "symmetry", "connectivity", "non_trivial"];
        if perfect {
            names.push("perfect");
        }
        if bordered {
            names.push("bordered");
        }
        names.iter().all(|n| self.passes(n))
    }
}

fn cond(name: &'static str, verdict: Verdict, witnesses: Vec<String>) -> Condition {
    Condition { name, verdict, witnesses, note: None }
}

fn fmt_pt(p: Point) -> String {
    format!("({:.6}, {:.6})", p[0], p[1])
}

/// Contact of a polygon with side `k` of the frame.
pub fn polygon_side_contact(carpet: &Carpet, poly: &PolygonImage, k: usize) -> ContactKind {
    let frame = &carpet.spec.frame;
    let (a, b) = frame.side(k);
    let exact = frame.exact_vertices.as_ref().map(|ev| (ev[k % frame.n0], ev[(k + 1) % frame.n0]));
    poly.segment_contact(a, b, exact, FRAME_TOL * poly.ratio)
}

/// First uncovered parameter interval of side `k`, `None` when the level-1
/// polygons cover the side.
pub fn side_cover(carpet: &Carpet, k: usize) -> Option<(f64, f64)> {
    let frame = &carpet.spec.frame;
    let (a, b) = frame.side(k);
    let len = dist(a, b);
    let mut iv: Vec<(f64, f64, bool)> = Vec::new();
    for p in &carpet.level1 {
        if let ContactKind::Segment { a: s, b: e, .. } = polygon_side_contact(carpet, p, k) {
            let t0 = dist(a, s) / len;
            let t1 = dist(a, e) / len;
            iv.push((t0.min(t1), t0.max(t1), p.exact.is_some()));
        }
    }
    iv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let exact = carpet.exact();
    let slack = if exact { 1e-12 } else { FRAME_TOL };
    let mut reach = 0.0;
    for (t0, t1, _) in iv {
        if t0 > reach + slack {
            return Some((reach, t0));
        }
        reach = f64::max(reach, t1);
    }
    if reach < 1.0 - slack {
        Some((reach, 1.0))
    } else {
        None
    }
}

/// Whether the cell meets side `k` of the frame (polygon contact plus the
/// cell-contact rule for isolated points).
pub fn cell_meets_side(carpet: &Carpet, cell: &Cell, k: usize) -> bool {
    match polygon_side_contact(carpet, &cell.polygon(carpet), k) {
        ContactKind::Segment { .. } => true,
        ContactKind::Point(p) => carpet.bordered || carpet.cell_contains(cell, p) != Membership::Out,
        _ => false,
    }
}

/// Whether the cell meets `∂A`.
pub fn cell_meets_boundary(carpet: &Carpet, cell: &Cell) -> bool {
    (0..carpet.n0()).any(|k| cell_meets_side(carpet, cell, k))
}

/// Bound `M_0 = 4π diam²(A) / (ρ_*² area(A))` on `#N_1(w)`.
pub fn m0_bound(carpet: &Carpet) -> f64 {
    let f = &carpet.spec.frame;
    4.0 * std::f64::consts::PI * f.diam().powi(2) / (carpet.rho_min.powi(2) * f.area())
}

fn level1_contacts(carpet: &Carpet) -> Vec<(usize, usize, ContactKind)> {
    let n = carpet.spec.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = contact_classify(&carpet.level1[i], &carpet.level1[j], carpet.tol_at(carpet.rho_min));
            out.push((i, j, c));
        }
    }
    out
}

fn check_perfect(carpet: &Carpet, contacts: &[(usize, usize, ContactKind)]) -> Condition {
    let r0 = &carpet.spec.maps[0].ratio;
    let equal = carpet.spec.maps.iter().all(|m| match (m.ratio.exact, r0.exact) {
        (Some(a), Some(b)) => a == b,
        _ => (m.ratio.value - r0.value).abs() <= 1e-12,
    });
    if !equal {
        let mut c = cond("perfect", Verdict::Fail, vec!["contraction ratios differ".into()]);
        c.note = Some("a perfect system has equal ratios".into());
        return c;
    }
    let n = carpet.spec.n();
    let tol = carpet.tol_at(carpet.rho_min);
    let mut witnesses = Vec::new();
    // (b) full sides or vertex-to-vertex only
    for (i, j, c) in contacts {
        match c {
            ContactKind::Segment { full_side: false, a, b } => {
                witnesses.push(format!("maps {i},{j}: partial side contact {}-{}", fmt_pt(*a), fmt_pt(*b)))
            }
            ContactKind::Point(p) => {
                if !(carpet.level1[*i].has_vertex(*p, tol) && carpet.level1[*j].has_vertex(*p, tol)) {
                    witnesses.push(format!("maps {i},{j}: point contact {} not vertex-to-vertex", fmt_pt(*p)));
                }
            }
            _ => {}
        }
    }
    // (a) chain of full-side contacts
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (i, j, c) in contacts {
        if let ContactKind::Segment { full_side: true, .. } = c {
            let (a, b) = (find(&mut parent, *i), find(&mut parent, *j));
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    let detached: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) != root).collect();
    if !detached.is_empty() {
        witnesses.insert(0, format!("no full-side chain from map 0 to maps {detached:?}"));
    }
    let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
    cond("perfect", verdict, witnesses)
}

fn check_hollow(carpet: &Carpet, contacts: &[(usize, usize, ContactKind)]) -> Condition {
    if carpet.spec.corner_labels.is_empty() {
        let mut c = cond("hollow", Verdict::NotApplicable, vec![]);
        c.note = Some("no corner labels; corner conditions disabled".into());
        return c;
    }
    let corners: Vec<usize> = carpet.spec.corner_labels.values().copied().collect();
    let mut witnesses = Vec::new();
    let mut undecided = false;
    for i in 0..carpet.spec.n() {
        let cell = carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[i]));
        if !cell_meets_boundary(carpet, &cell) {
            witnesses.push(format!("map {i}: polygon misses the boundary"));
        }
    }
    for (i, j, c) in contacts {
        if corners.contains(i) || corners.contains(j) {
            continue;
        }
        if let ContactKind::Point(p) = c {
            let a = carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[*i]));
            let b = carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[*j]));
            match carpet.cell_contact(&a, &b, c) {
                CellContact::None => {}
                CellContact::Point { flagged: true } => undecided = true,
                _ => witnesses.push(format!("maps {i},{j}: point contact at {}", fmt_pt(*p))),
            }
        }
    }
    let verdict = if !witnesses.is_empty() {
        Verdict::Fail
    } else if undecided {
        Verdict::Undecided(crate::carpet::MEMBERSHIP_DEPTH)
    } else {
        Verdict::Pass
    };
    cond("hollow", verdict, witnesses)
}

fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    let l = dist(a, b);
    (dist(a, p) + dist(p, b) - l).abs() <= tol
}

fn check_corner(carpet: &Carpet, contacts: &[(usize, usize, ContactKind)]) -> Condition {
    let n0 = carpet.n0();
    let Some(&c1) = carpet.spec.corner_labels.get(&0) else {
        let mut c = cond("corner", Verdict::NotApplicable, vec![]);
        c.note = Some("no corner label for q_1; corner conditions disabled".into());
        return c;
    };
    if n0 != 3 && n0 != 4 {
        let mut c = cond("corner", Verdict::NotApplicable, vec![]);
        c.note = Some(format!("corner condition defined for n0 in {{3,4}}, got {n0}"));
        return c;
    }
    let frame = &carpet.spec.frame;
    let psi = &carpet.affines[c1];
    let tol = 1e-9;
    let corner_cell = carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[c1]));
    let mut witnesses = Vec::new();
    let mut undecided = false;
    let mut seen_points: Vec<Point> = Vec::new();
    // targets in frame coordinates (preimages under the corner map)
    let targets: Vec<(Point, Point)> = if n0 == 4 { vec![frame.half_side(2), frame.half_side(5)] } else { vec![] };
    let pts3: Vec<Point> = if n0 == 3 { vec![frame.vertex(1), frame.vertex(2)] } else { vec![] };
    for (i, j, c) in contacts {
        if *i != c1 && *j != c1 {
            continue;
        }
        let other = if *i == c1 { *j } else { *i };
        let oc = carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[other]));
        let rule = carpet.cell_contact(&corner_cell, &oc, c);
        if rule == CellContact::None {
            continue;
        }
        let flagged = matches!(rule, CellContact::Point { flagged: true });
        let inside_target = |p: Point| {
            let z = psi.apply_inverse(p);
            if n0 == 4 {
                targets.iter().any(|(a, b)| on_segment(z, *a, *b, tol))
            } else {
                pts3.iter().any(|q| dist(*q, z) <= tol)
            }
        };
        match c {
            ContactKind::Segment { a, b, .. } => {
                let ok = n0 == 4 && {
                    let (za, zb) = (psi.apply_inverse(*a), psi.apply_inverse(*b));
                    targets.iter().any(|(s, e)| on_segment(za, *s, *e, tol) && on_segment(zb, *s, *e, tol))
                };
                if !ok {
                    witnesses.push(format!(
                        "corner map {c1} meets map {other} in segment {}-{}",
                        fmt_pt(*a),
                        fmt_pt(*b)
                    ));
                }
            }
            ContactKind::Point(p) => {
                if inside_target(*p) {
                    seen_points.push(psi.apply_inverse(*p));
                } else if flagged {
                    undecided = true;
                } else {
                    witnesses.push(format!("corner map {c1} meets map {other} at {}", fmt_pt(*p)));
                }
            }
            _ => {}
        }
    }
    if n0 == 3 {
        for q in &pts3 {
            if !seen_points.iter().any(|s| dist(*s, *q) <= tol) {
                witnesses.push(format!("corner cell does not touch the rest at image of {}", fmt_pt(*q)));
            }
        }
    }
    let verdict = if !witnesses.is_empty() {
        Verdict::Fail
    } else if undecided {
        Verdict::Undecided(crate::carpet::MEMBERSHIP_DEPTH)
    } else {
        Verdict::Pass
    };
    let mut c = cond("corner", verdict, witnesses);
    c.note = Some(if n0 == 4 { "square corner condition".into() } else { "triangle corner condition".into() });
    c
}

/// Minimal gap between cells at graph distance > 2, scaled by `ρ_*^{-n}`.
pub fn separation_at_level(carpet: &Carpet, g: &CellGraph, n: usize) -> f64 {
    let scale = carpet.rho_min.powi(n as i32);
    let radius = scale * carpet.spec.frame.diam();
    let polys: Vec<PolygonImage> = g.cells.iter().map(|c| c.polygon(carpet)).collect();
    let boxes: Vec<_> = polys.iter().map(|p| p.bbox()).collect();
    let pairs = candidate_pairs(&boxes, radius.max(1e-300), radius);
    let near: Vec<Vec<usize>> = (0..g.len()).map(|i| g.neighborhood_small(i, 2)).collect();
    let mut best = radius;
    for (i, j) in pairs {
        if near[i].binary_search(&j).is_ok() {
            continue;
        }
        best = best.min(polys[i].dist_to(&polys[j]));
    }
    best / scale
}

/// Check all conditions up to `depth` with a node budget per level.
pub fn validate_with_budget(carpet: &Carpet, depth: usize, budget: usize) -> Result<ValidationReport> {
    if depth < 2 {
        return Err(Error::InvalidArgument("validation depth must be at least 2".into()));
    }
    let contacts = level1_contacts(carpet);
    let mut conditions = Vec::new();

    let overlaps: Vec<String> = contacts
        .iter()
        .filter(|(_, _, c)| *c == ContactKind::Overlap)
        .map(|(i, j, _)| format!("maps {i},{j} overlap"))
        .collect();
    let osc_ok = overlaps.is_empty();
    conditions.push(cond("open_set", if osc_ok { Verdict::Pass } else { Verdict::Fail }, overlaps));

    let sym = if carpet.symmetric() {
        cond("symmetry", Verdict::Pass, vec![])
    } else {
        let mut w = Vec::new();
        'outer: for (gi, g) in carpet.group.iter().enumerate() {
            for (i, p) in carpet.level1.iter().enumerate() {
                let img = g.apply_polygon(p);
                if !carpet.level1.iter().any(|q| q.same_as(&img, carpet.tol_at(carpet.rho_min))) {
                    w.push(format!("group element {gi} maps polygon {i} outside the family"));
                    break 'outer;
                }
            }
        }
        cond("symmetry", Verdict::Fail, w)
    };
    conditions.push(sym);

    // connectivity and level-wise measurements
    let mut graphs = Vec::new();
    let mut conn = cond("connectivity", Verdict::Pass, vec![]);
    if osc_ok {
        for n in 1..=depth {
            match partition(carpet, n, budget).and_then(|p| CellGraph::from_partition(carpet, &p)) {
                Ok(g) => {
                    if !g.is_connected() {
                        conn = cond("connectivity", Verdict::Fail, vec![format!("level {n} graph is disconnected")]);
                        break;
                    }
                    graphs.push((n, g));
                }
                Err(Error::BudgetExceeded { .. }) => {
                    conn = cond("connectivity", Verdict::Undecided(n - 1), vec![]);
                    conn.note = Some(format!("node budget reached at level {n}"));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if conn.verdict == Verdict::Pass {
            conn.note = Some(format!("connected at levels 1..={depth}"));
        }
    } else {
        conn = cond("connectivity", Verdict::Undecided(0), vec![]);
        conn.note = Some("skipped: open set condition fails".into());
    }
    conditions.push(conn);

    let sq: f64 = carpet.spec.ratios().iter().map(|r| r * r).sum();
    let sq_exact: Option<Q> = carpet.spec.maps.iter().map(|m| m.ratio.exact.map(|r| r * r)).sum();
    let nontrivial = match sq_exact {
        Some(s) => s < Q::from_integer(1),
        None => sq < 1.0 - 1e-12,
    };
    conditions.push(cond(
        "non_trivial",
        if nontrivial { Verdict::Pass } else { Verdict::Fail },
        if nontrivial { vec![] } else { vec![format!("sum of squared ratios {sq}")] },
    ));

    conditions.push(check_perfect(carpet, &contacts));

    let mut gaps = Vec::new();
    for k in 0..carpet.n0() {
        if let Some((a, b)) = side_cover(carpet, k) {
            gaps.push(format!("side {}: uncovered ({a:.6}, {b:.6})", k + 1));
        }
    }
    conditions.push(cond("bordered", if gaps.is_empty() { Verdict::Pass } else { Verdict::Fail }, gaps));

    conditions.push(check_hollow(carpet, &contacts));
    conditions.push(check_corner(carpet, &contacts));

    let base_met = (0..carpet.spec.n())
        .any(|i| cell_meets_side(carpet, &carpet.cell(&crate::cellgraph::partition::Word::from_slice(&[i])), 0));
    conditions.push(cond(
        "boundary_nonempty",
        if base_met { Verdict::Pass } else { Verdict::Fail },
        if base_met { vec![] } else { vec!["no level-1 cell meets the base side".into()] },
    ));

    let c0_levels: Vec<f64> = graphs.iter().map(|(n, g)| separation_at_level(carpet, g, *n)).collect();
    let c0 = c0_levels.iter().cloned().reduce(f64::min);
    let interior_level =
        graphs.iter().find(|(_, g)| g.cells.iter().any(|c| !cell_meets_boundary(carpet, c))).map(|(n, _)| *n);
    let (bd, s_prime, _) = carpet.boundary_dimension();
    let tolerance_ok = c0.map(|c| 1e-9 < c / 10.0).unwrap_or(true);
    Ok(ValidationReport {
        name: carpet.spec.name.clone(),
        depth,
        conditions,
        d_h: carpet.dh,
        boundary_dimension: bd,
        s_prime,
        rho_min: carpet.rho_min,
        rho_max: carpet.rho_max,
        c0,
        c0_levels,
        interior_level,
        m0: m0_bound(carpet),
        tolerance_ok,
    })
}

/// Default budget of 300k cells per level.
pub fn validate(carpet: &Carpet, depth: usize) -> Result<ValidationReport> {
    validate_with_budget(carpet, depth, 300_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::*;

    #[test]
    fn sc_report() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        let r = validate(&c, 3).unwrap();
        for n in ["open_set", "symmetry", "connectivity", "non_trivial", "perfect", "bordered"] {
            assert!(r.passes(n), "{n}: {:?}", r.condition(n));
        }
        let h = r.condition("hollow").unwrap();
        assert_eq!(h.verdict, Verdict::Fail);
        assert!(h.witnesses[0].starts_with("maps 1,3: point contact at (0.333333, 0.333333)"), "{:?}", h.witnesses);
        assert_eq!(r.interior_level, Some(2));
        assert!((r.c0.unwrap() - 2f64.sqrt()).abs() < 1e-9, "{:?}", r.c0_levels);
    }

    #[test]
    fn hsc_report() {
        let c = Carpet::new(hollow_square_carpet()).unwrap();
        let r = validate(&c, 2).unwrap();
        for n in ["open_set", "symmetry", "connectivity", "non_trivial", "bordered", "hollow", "corner"] {
            assert!(r.passes(n), "{n}: {:?}", r.condition(n));
        }
        assert_eq!(r.verdict("perfect"), Some(&Verdict::Fail));
    }

    #[test]
    fn gasket_not_perfect() {
        let c = Carpet::new(sierpinski_gasket()).unwrap();
        let r = validate(&c, 2).unwrap();
        let p = r.condition("perfect").unwrap();
        assert_eq!(p.verdict, Verdict::Fail);
        assert!(p.witnesses[0].contains("no full-side chain"));
    }
}
