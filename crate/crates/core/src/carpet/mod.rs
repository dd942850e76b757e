//! Carpets: a validated spec together with derived data (dimension, level-1
//! polygons, symmetry tables) and the membership oracle for the attractor.

pub mod spec;
pub mod validate;

use std::sync::OnceLock;

use serde::Serialize;

use crate::cellgraph::partition::{Cell, Word};
use crate::error::{Error, Result};
use crate::geometry::{
    compose_index, contact_classify, dist, find_by_perm, symmetry_group, Affine, ContactKind, Point, PolygonImage,
    SymmetryElement, Q,
};

pub use spec::{CarpetSpec, DeclaredClass};
pub use validate::{validate, ValidationReport, Verdict};

/// Absolute tolerance in frame coordinates for float geometry.
pub const FRAME_TOL: f64 = 1e-9;
/// Descent depth used when the contact rule asks for point membership.
pub const MEMBERSHIP_DEPTH: usize = 24;

/// Root `s` of `Σ ρ_i^s = 1` by bisection refined with Newton steps.
pub fn moran_root(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::InvalidSpec("empty map list".into()));
    }
    if ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidSpec("ratios must lie in (0,1)".into()));
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    let df = |s: f64| ratios.iter().map(|r| r.powf(s) * r.ln()).sum::<f64>();
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    let n = ratios.len() as f64;
    let (mut lo, mut hi) = (0.0, (2.0 * n.ln() / (1.0 / rmax).ln()).max(1e-12));
    if f(lo) <= 0.0 {
        return Ok(0.0);
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..50 {
        let v = f(s);
        if v == 0.0 {
            break;
        }
        let next = s - v / df(s);
        if !(next > lo - 1e-6 && next < hi + 1e-6) {
            break;
        }
        if (next - s).abs() < 1e-16 * s.max(1.0) {
            s = next;
            break;
        }
        s = next;
    }
    Ok(s)
}

/// Membership status of a point in `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    In,
    Out,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub status: Membership,
    pub resolved_depth: usize,
    /// Word of the descent branch that certified `In`.
    pub word: Option<Vec<usize>>,
}

/// Outcome of the cell-contact rule for two touching polygons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellContact {
    None,
    Segment,
    Point { flagged: bool },
}

/// A carpet spec with derived data. Construction checks the structural
/// invariants; the geometric conditions are checked by [`validate`].
pub struct Carpet {
    pub spec: CarpetSpec,
    pub affines: Vec<Affine>,
    pub level1: Vec<PolygonImage>,
    pub frame_poly: PolygonImage,
    pub dh: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_min_q: Option<Q>,
    pub group: Vec<SymmetryElement>,
    pub fixed_points: Vec<Point>,
    /// Every side of the frame is covered by level-1 polygons.
    pub bordered: bool,
    /// `letter_sym[g][i] = (j, g')` with `Γ_g Ψ_i = Ψ_j Γ_{g'}` on the frame.
    letter_sym: Option<Vec<Vec<(usize, usize)>>>,
    vertex_membership: OnceLock<Vec<Membership>>,
}

impl std::fmt::Debug for Carpet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Carpet").field("name", &self.spec.name).field("n", &self.spec.n()).finish()
    }
}

impl Carpet {
    pub fn new(spec: CarpetSpec) -> Result<Self> {
        let n0 = spec.frame.n0;
        if spec.maps.is_empty() {
            return Err(Error::InvalidSpec("empty map list".into()));
        }
        for (i, m) in spec.maps.iter().enumerate() {
            if !(m.ratio.value > 0.0 && m.ratio.value < 1.0) {
                return Err(Error::InvalidSpec(format!("map {i}: ratio {} not in (0,1)", m.ratio.value)));
            }
            if m.sign != 1 && m.sign != -1 {
                return Err(Error::InvalidSpec(format!("map {i}: sign {}", m.sign)));
            }
        }
        let affines: Vec<Affine> = spec.maps.iter().map(|m| m.affine()).collect();
        let frame_poly = PolygonImage {
            vertices: spec.frame.vertices.clone(),
            exact: spec.frame.exact_vertices.clone(),
            ratio: 1.0,
        };
        let level1: Vec<PolygonImage> = affines.iter().map(|a| spec.frame.image(a)).collect();
        for (i, p) in level1.iter().enumerate() {
            if !p.vertices.iter().all(|v| frame_poly.contains(*v, FRAME_TOL)) {
                return Err(Error::InvalidSpec(format!("map {i} does not map the polygon into itself")));
            }
        }
        for (&v, &i) in &spec.corner_labels {
            if i >= spec.maps.len() {
                return Err(Error::InvalidSpec(format!("corner label points at missing map {i}")));
            }
            let q = spec.frame.vertex(v);
            let fixed = match (&spec.frame.exact_vertices, &affines[i].exact) {
                (Some(ev), Some(_)) => affines[i].apply_exact(&ev[v]) == Some(ev[v]),
                _ => dist(affines[i].apply(q), q) < FRAME_TOL,
            };
            if !fixed {
                return Err(Error::InvalidSpec(format!("map {i} does not fix vertex q_{}", v + 1)));
            }
        }
        if spec.maps.len() < n0 {
            return Err(Error::InvalidSpec(format!("{} maps, need at least n0 = {n0}", spec.maps.len())));
        }
        let ratios = spec.ratios();
        let dh = moran_root(&ratios)?;
        let (imin, _) =
            ratios.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &r)| if r < acc.1 { (i, r) } else { acc });
        let rho_min = ratios[imin];
        let rho_max = ratios.iter().cloned().fold(0.0, f64::max);
        let rho_min_q =
            if spec.maps.iter().all(|m| m.ratio.exact.is_some()) { spec.maps[imin].ratio.exact } else { None };
        let group = symmetry_group(&spec.frame);
        let fixed_points =
            affines.iter().map(|a| [a.shift[0] / (1.0 - a.scale), a.shift[1] / (1.0 - a.scale)]).collect();
        let mut c = Carpet {
            spec,
            affines,
            level1,
            frame_poly,
            dh,
            rho_min,
            rho_max,
            rho_min_q,
            group,
            fixed_points,
            bordered: false,
            letter_sym: None,
            vertex_membership: OnceLock::new(),
        };
        c.bordered = (0..n0).all(|k| validate::side_cover(&c, k).is_none());
        c.letter_sym = c.build_letter_sym();
        Ok(c)
    }

    pub fn n0(&self) -> usize {
        self.spec.frame.n0
    }

    pub fn exact(&self) -> bool {
        self.spec.frame.exact_vertices.is_some() && self.affines.iter().all(|a| a.exact.is_some())
    }

    pub fn cell(&self, w: &Word) -> Cell {
        let mut c = Cell::root();
        for &l in &w.0 {
            c = c.child(self, l as usize);
        }
        c
    }

    /// Tolerance for contact decisions among cells of ratio about `rho`.
    pub fn tol_at(&self, rho: f64) -> f64 {
        rho * 1e-9
    }

    /// Dimension of `∂_1K` and the sets `S'` (segment contact with the base
    /// side) and `S''` (point contact).
    pub fn boundary_dimension(&self) -> (f64, Vec<usize>, Vec<usize>) {
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        for (i, p) in self.level1.iter().enumerate() {
            match validate::polygon_side_contact(self, p, 0) {
                ContactKind::Segment { .. } => s1.push(i),
                ContactKind::Point(_) => s2.push(i),
                _ => {}
            }
        }
        let ratios: Vec<f64> = s1.iter().map(|&i| self.spec.maps[i].ratio.value).collect();
        let d = if ratios.is_empty() { 0.0 } else { moran_root(&ratios).unwrap_or(0.0) };
        (d, s1, s2)
    }

    fn certified(&self, y: Point) -> bool {
        if self.fixed_points.iter().any(|f| dist(*f, y) <= FRAME_TOL) {
            return true;
        }
        self.bordered && self.frame_poly.contains(y, FRAME_TOL) && self.frame_poly.dist_to_boundary(y) <= FRAME_TOL
    }

    /// Membership of `x` in `K` by descent through the maps.
    pub fn point_in_k(&self, x: Point, depth: usize) -> Result<MembershipVerdict> {
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if !self.frame_poly.contains(x, FRAME_TOL) {
            return Ok(MembershipVerdict { status: Membership::Out, resolved_depth: 0, word: None });
        }
        let mut frontier: Vec<(Point, Vec<usize>)> = vec![(x, Vec::new())];
        for level in 0..=depth {
            for (y, w) in &frontier {
                if self.certified(*y) {
                    return Ok(MembershipVerdict {
                        status: Membership::In,
                        resolved_depth: level,
                        word: Some(w.clone()),
                    });
                }
            }
            if level == depth {
                break;
            }
            let mut next: Vec<(Point, Vec<usize>)> = Vec::new();
            for (y, w) in &frontier {
                for (i, p) in self.level1.iter().enumerate() {
                    if p.contains(*y, FRAME_TOL * p.ratio) {
                        let z = self.affines[i].apply_inverse(*y);
                        if !next.iter().any(|(q, _)| dist(*q, z) <= FRAME_TOL) {
                            let mut w2 = w.clone();
                            w2.push(i);
                            next.push((z, w2));
                        }
                    }
                }
            }
            if next.is_empty() {
                return Ok(MembershipVerdict { status: Membership::Out, resolved_depth: level + 1, word: None });
            }
            next.truncate(64);
            frontier = next;
        }
        Ok(MembershipVerdict { status: Membership::Unknown, resolved_depth: depth, word: None })
    }

    fn membership_of_preimage(&self, z: Point) -> Membership {
        let n0 = self.n0();
        if let Some(k) = (0..n0).find(|&k| dist(self.spec.frame.vertex(k), z) <= 1e-7) {
            let vm = self.vertex_membership.get_or_init(|| {
                (0..n0)
                    .map(|k| {
                        self.point_in_k(self.spec.frame.vertex(k), MEMBERSHIP_DEPTH)
                            .map(|v| v.status)
                            .unwrap_or(Membership::Unknown)
                    })
                    .collect()
            });
            return vm[k];
        }
        self.point_in_k(z, MEMBERSHIP_DEPTH).map(|v| v.status).unwrap_or(Membership::Unknown)
    }

    /// Whether `Ψ_wK` contains the point `p` of the polygon `Ψ_wA`.
    pub fn cell_contains(&self, cell: &Cell, p: Point) -> Membership {
        if self.bordered {
            let poly = cell.polygon(self);
            if poly.dist_to_boundary(p) <= FRAME_TOL * cell.rho {
                return Membership::In;
            }
        }
        self.membership_of_preimage(cell.map.apply_inverse(p))
    }

    /// Cell-contact rule: polygon contact is cell contact on bordered
    /// carpets; otherwise segment contacts count and point contacts count
    /// unless the shared point is certified outside one of the cells.
    pub fn cell_contact(&self, a: &Cell, b: &Cell, contact: &ContactKind) -> CellContact {
        match contact {
            ContactKind::None | ContactKind::Overlap => CellContact::None,
            ContactKind::Segment { .. } => CellContact::Segment,
            ContactKind::Point(p) => {
                if self.bordered {
                    return CellContact::Point { flagged: false };
                }
                let ma = self.membership_of_preimage(a.map.apply_inverse(*p));
                let mb = self.membership_of_preimage(b.map.apply_inverse(*p));
                match (ma, mb) {
                    (Membership::Out, _) | (_, Membership::Out) => CellContact::None,
                    (Membership::In, Membership::In) => CellContact::Point { flagged: false },
                    _ => {
                        log::debug!("undecided point contact {} ~ {} kept as edge", a.word, b.word);
                        CellContact::Point { flagged: true }
                    }
                }
            }
        }
    }

    /// Contact between two cells: classification plus the cell rule.
    pub fn contact(&self, a: &Cell, b: &Cell) -> (ContactKind, CellContact) {
        let tol = self.tol_at(a.rho.min(b.rho));
        let c = contact_classify(&a.polygon(self), &b.polygon(self), tol);
        let r = self.cell_contact(a, b, &c);
        (c, r)
    }

    fn build_letter_sym(&self) -> Option<Vec<Vec<(usize, usize)>>> {
        let n = self.spec.n();
        let tol = self.rho_min * FRAME_TOL;
        let mut table = Vec::with_capacity(self.group.len());
        for g in &self.group {
            let mut row = Vec::with_capacity(n);
            for i in 0..n {
                let img = g.apply_polygon(&self.level1[i]);
                let j = (0..n)
                    .find(|&j| (self.level1[j].ratio - img.ratio).abs() <= tol && self.level1[j].same_as(&img, tol))?;
                // residual symmetry Ψ_j^{-1} Γ Ψ_i on the frame vertices
                let perm: Option<Vec<usize>> = (0..self.n0())
                    .map(|k| {
                        let y =
                            self.affines[j].apply_inverse(g.apply(self.affines[i].apply(self.spec.frame.vertex(k))));
                        (0..self.n0()).find(|&t| dist(self.spec.frame.vertex(t), y) < 1e-7)
                    })
                    .collect();
                let g2 = find_by_perm(&self.group, &perm?)?;
                row.push((j, g2));
            }
            table.push(row);
        }
        Some(table)
    }

    /// Every group element permutes the level-1 polygons.
    pub fn symmetric(&self) -> bool {
        self.letter_sym.is_some()
    }

    /// `Γ*(w)` for the group element with index `g`.
    pub fn induced_word_symmetry(&self, g: usize, w: &Word) -> Result<Word> {
        let table = self
            .letter_sym
            .as_ref()
            .ok_or_else(|| Error::SymmetryViolation("level-1 polygons are not permuted by the group".into()))?;
        let mut cur = g;
        let mut out = Vec::with_capacity(w.len());
        for &l in &w.0 {
            let (j, g2) = table[cur][l as usize];
            out.push(j);
            cur = g2;
        }
        Ok(Word::from_slice(&out))
    }

    /// Index of the composition `a ∘ b` in the group.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        compose_index(&self.group, a, b)
    }
}
