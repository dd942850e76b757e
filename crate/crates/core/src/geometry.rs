//! Planar geometry for polygon carpets.
//!
//! Regular polygon frames, similarities `x -> ±ρx + c`, their compositions,
//! the dihedral group of the frame and contact classification between
//! polygon images. Coordinates are `f64`; when every input is rational the
//! exact value is carried alongside as a `Ratio<i128>` and contact decisions
//! are made on integers after clearing denominators.

use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = Ratio<i128>;
/// Planar point.
pub type Point = [f64; 2];
/// Exact planar point.
pub type QPoint = [Q; 2];

pub fn q_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i128 = p.trim().parse().ok()?;
            let q: i128 = q.trim().parse().ok()?;
            if q == 0 {
                None
            } else {
                Some(Q::new(p, q))
            }
        }
        None => s.parse::<i128>().ok().map(Q::from_integer),
    }
}

/// A scalar with an optional exact rational value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real {
    pub value: f64,
    pub exact: Option<Q>,
}

impl Real {
    pub fn exact(q: Q) -> Self {
        Real { value: q_to_f64(&q), exact: Some(q) }
    }
    pub fn float(x: f64) -> Self {
        Real { value: x, exact: None }
    }
    pub fn ratio(p: i128, q: i128) -> Self {
        Real::exact(Q::new(p, q))
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

// ---------------------------------------------------------------------------
// Frame

/// Regular polygon with unit sides, `q_1 = (0,0)`, `q_2 = (1,0)`, vertices
/// counter-clockwise. Vertex and side indices are 0-based here: vertex `k`
/// is `q_{k+1}` and side `k` runs from vertex `k` to vertex `k+1`.
#[derive(Clone, Debug)]
pub struct PolygonFrame {
    pub n0: usize,
    pub vertices: Vec<Point>,
    pub exact_vertices: Option<Vec<QPoint>>,
    pub center: Point,
}

pub fn regular_polygon(n0: usize) -> Result<PolygonFrame> {
    if n0 < 3 {
        return Err(Error::InvalidPolygon(n0));
    }
    let exact_vertices = if n0 == 4 {
        let z = Q::zero();
        let o = Q::one();
        Some(vec![[z, z], [o, z], [o, o], [z, o]])
    } else {
        None
    };
    let vertices: Vec<Point> = match &exact_vertices {
        Some(ev) => ev.iter().map(|p| [q_to_f64(&p[0]), q_to_f64(&p[1])]).collect(),
        None => {
            let mut v = vec![[0.0, 0.0]];
            for k in 1..n0 {
                let a = 2.0 * std::f64::consts::PI * (k - 1) as f64 / n0 as f64;
                let prev = v[k - 1];
                v.push([prev[0] + a.cos(), prev[1] + a.sin()]);
            }
            // q_2 = (1,0) and the triangle apex are pinned to their closed forms.
            v[1] = [1.0, 0.0];
            if n0 == 3 {
                v[2] = [0.5, 3f64.sqrt() / 2.0];
            }
            v
        }
    };
    let c = vertices.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
    let center = [c[0] / n0 as f64, c[1] / n0 as f64];
    Ok(PolygonFrame { n0, vertices, exact_vertices, center })
}

impl PolygonFrame {
    pub fn vertex(&self, k: usize) -> Point {
        self.vertices[k % self.n0]
    }

    /// Side `k` as a segment `(q_{k+1}, q_{k+2})`.
    pub fn side(&self, k: usize) -> (Point, Point) {
        (self.vertex(k), self.vertex(k + 1))
    }

    /// Half-side points: `h` even is a vertex, `h` odd a side midpoint.
    /// Half index `h` stands for the label `1 + h/2`.
    pub fn half_point(&self, h: usize) -> Point {
        let h = h % (2 * self.n0);
        if h % 2 == 0 {
            self.vertex(h / 2)
        } else {
            let (a, b) = self.side(h / 2);
            [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
        }
    }

    /// Half-side `h` from `half_point(h)` to `half_point(h+1)`.
    pub fn half_side(&self, h: usize) -> (Point, Point) {
        (self.half_point(h), self.half_point(h + 1))
    }

    pub fn exact_half_point(&self, h: usize) -> Option<QPoint> {
        let ev = self.exact_vertices.as_ref()?;
        let h = h % (2 * self.n0);
        if h % 2 == 0 {
            Some(ev[h / 2])
        } else {
            let a = ev[h / 2];
            let b = ev[(h / 2 + 1) % self.n0];
            let two = Q::from_integer(2);
            Some([(a[0] + b[0]) / two, (a[1] + b[1]) / two])
        }
    }

    pub fn diam(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn image(&self, map: &Affine) -> PolygonImage {
        let vertices = self.vertices.iter().map(|p| map.apply(*p)).collect();
        let exact = match (&self.exact_vertices, &map.exact) {
            (Some(ev), Some(_)) => ev.iter().map(|p| map.apply_exact(p)).collect::<Option<Vec<_>>>(),
            _ => None,
        };
        PolygonImage { vertices, exact, ratio: map.ratio() }
    }

    /// Half-index distance `d_{S_1}` in units of whole sides.
    pub fn half_distance(&self, h1: usize, h2: usize) -> f64 {
        let m = 2 * self.n0;
        let d = (h1 as isize - h2 as isize).unsigned_abs() % m;
        d.min(m - d) as f64 / 2.0
    }
}

pub fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for k in 0..n {
        s += cross(v[k], v[(k + 1) % n]);
    }
    s / 2.0
}

// ---------------------------------------------------------------------------
// Maps

/// Contracting similarity `x -> sign * ratio * x + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    pub ratio: Real,
    pub sign: i8,
    pub translation: [Real; 2],
}

impl Similarity {
    pub fn new(ratio: Real, sign: i8, translation: [Real; 2]) -> Self {
        Similarity { ratio, sign, translation }
    }

    pub fn apply(&self, x: Point) -> Point {
        let s = self.sign as f64 * self.ratio.value;
        [s * x[0] + self.translation[0].value, s * x[1] + self.translation[1].value]
    }

    pub fn affine(&self) -> Affine {
        let scale = self.sign as f64 * self.ratio.value;
        let shift = [self.translation[0].value, self.translation[1].value];
        let exact = match (self.ratio.exact, self.translation[0].exact, self.translation[1].exact) {
            (Some(r), Some(t0), Some(t1)) => Some((r * Q::from_integer(self.sign as i128), [t0, t1])),
            _ => None,
        };
        Affine { scale, shift, exact }
    }
}

/// Composite map `x -> scale * x + shift` (scale may be negative).
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub scale: f64,
    pub shift: Point,
    pub exact: Option<(Q, QPoint)>,
}

impl Affine {
    pub fn identity() -> Self {
        Affine { scale: 1.0, shift: [0.0, 0.0], exact: Some((Q::one(), [Q::zero(), Q::zero()])) }
    }

    pub fn ratio(&self) -> f64 {
        self.scale.abs()
    }

    pub fn exact_ratio(&self) -> Option<Q> {
        self.exact.map(|(s, _)| s.abs())
    }

    pub fn apply(&self, x: Point) -> Point {
        [self.scale * x[0] + self.shift[0], self.scale * x[1] + self.shift[1]]
    }

    pub fn apply_inverse(&self, y: Point) -> Point {
        [(y[0] - self.shift[0]) / self.scale, (y[1] - self.shift[1]) / self.scale]
    }

    pub fn apply_exact(&self, x: &QPoint) -> Option<QPoint> {
        let (s, t) = self.exact?;
        let a = s.checked_mul(&x[0])?.checked_add(&t[0])?;
        let b = s.checked_mul(&x[1])?.checked_add(&t[1])?;
        Some([a, b])
    }

    /// `self ∘ other`.
    pub fn then_inner(&self, other: &Affine) -> Affine {
        let scale = self.scale * other.scale;
        let shift = [self.scale * other.shift[0] + self.shift[0], self.scale * other.shift[1] + self.shift[1]];
        let exact = match (&self.exact, &other.exact) {
            (Some((s1, t1)), Some((s2, t2))) => (|| {
                let s = s1.checked_mul(s2)?;
                let a = s1.checked_mul(&t2[0])?.checked_add(&t1[0])?;
                let b = s1.checked_mul(&t2[1])?.checked_add(&t1[1])?;
                Some((s, [a, b]))
            })(),
            _ => None,
        };
        Affine { scale, shift, exact }
    }
}

// ---------------------------------------------------------------------------
// Polygon images and contacts

/// Image of the frame under an `Affine`, vertices counter-clockwise.
#[derive(Clone, Debug)]
pub struct PolygonImage {
    pub vertices: Vec<Point>,
    pub exact: Option<Vec<QPoint>>,
    pub ratio: f64,
}

impl PolygonImage {
    pub fn from_points(vertices: Vec<Point>) -> Self {
        let ratio = dist(vertices[0], vertices[1]);
        PolygonImage { vertices, exact: None, ratio }
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / n, s[1] / n]
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn contains(&self, x: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % n];
            let e = sub(b, a);
            cross(e, sub(x, a)) >= -tol * e[0].hypot(e[1])
        })
    }

    pub fn has_vertex(&self, x: Point, tol: f64) -> bool {
        self.vertices.iter().any(|v| dist(*v, x) <= tol)
    }

    /// Same point set as `other` (vertex sets agree).
    pub fn same_as(&self, other: &PolygonImage, tol: f64) -> bool {
        if self.vertices.len() != other.vertices.len() {
            return false;
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return a.iter().all(|p| b.contains(p));
        }
        self.vertices.iter().all(|p| other.has_vertex(*p, tol))
    }

    /// Euclidean distance from `x` to the polygon (0 inside).
    pub fn dist_to_point(&self, x: Point) -> f64 {
        if self.contains(x, 0.0) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n).map(|k| seg_point_dist(self.vertices[k], self.vertices[(k + 1) % n], x)).fold(f64::INFINITY, f64::min)
    }

    /// Distance from `x` to the polygon boundary.
    pub fn dist_to_boundary(&self, x: Point) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|k| seg_point_dist(self.vertices[k], self.vertices[(k + 1) % n], x)).fold(f64::INFINITY, f64::min)
    }

    /// Exact squared distance from an exact point, when available.
    pub fn dist2_to_point_exact(&self, x: &QPoint) -> Option<Q> {
        let v = self.exact.as_ref()?;
        let n = v.len();
        let inside = (0..n).all(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= Q::zero()
        });
        if inside {
            return Some(Q::zero());
        }
        let mut best: Option<Q> = None;
        for k in 0..n {
            let d = seg_point_dist2_q(v[k], v[(k + 1) % n], *x);
            best = Some(match best {
                Some(b) if b <= d => b,
                _ => d,
            });
        }
        best
    }

    /// Distance between two polygons (0 if they meet).
    pub fn dist_to(&self, other: &PolygonImage) -> f64 {
        if !matches!(contact_classify(self, other, 0.0), ContactKind::None) {
            return 0.0;
        }
        let a = self.vertices.iter().map(|p| other.dist_to_point(*p)).fold(f64::INFINITY, f64::min);
        let b = other.vertices.iter().map(|p| self.dist_to_point(*p)).fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    /// Parameter interval `[t0, t1]` of `a + t(b-a)` inside the polygon.
    pub fn clip_segment(&self, a: Point, b: Point, tol: f64) -> Option<(f64, f64)> {
        let n = self.vertices.len();
        let d = sub(b, a);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..n {
            let v = self.vertices[k];
            let e = sub(self.vertices[(k + 1) % n], v);
            let el = e[0].hypot(e[1]);
            // inside: cross(e, x - v) >= -tol*|e|, x = a + t d
            let alpha = cross(e, sub(a, v)) + tol * el;
            let beta = cross(e, d);
            if beta.abs() < 1e-300 {
                if alpha < 0.0 {
                    return None;
                }
            } else if beta > 0.0 {
                t0 = t0.max(-alpha / beta);
            } else {
                t1 = t1.min(-alpha / beta);
            }
        }
        if t0 <= t1 {
            Some((t0, t1))
        } else {
            None
        }
    }

    /// How the polygon meets the segment `[a, b]`; the exact endpoints are
    /// used when both they and the polygon are rational.
    pub fn segment_contact(&self, a: Point, b: Point, exact: Option<(QPoint, QPoint)>, tol: f64) -> ContactKind {
        let len = dist(a, b);
        let side = dist(self.vertices[0], self.vertices[1]);
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        if let Some((qa, qb)) = exact {
            if let Some(r) = self.clip_segment_exact(qa, qb) {
                return match r {
                    None => ContactKind::None,
                    Some((t0, t1)) if t0 == t1 => ContactKind::Point(at(q_to_f64(&t0))),
                    Some((t0, t1)) => {
                        let l = q_to_f64(&(t1 - t0)) * len;
                        ContactKind::Segment {
                            a: at(q_to_f64(&t0)),
                            b: at(q_to_f64(&t1)),
                            full_side: (l - side).abs() <= 1e-12 * side,
                        }
                    }
                };
            }
        }
        match self.clip_segment(a, b, tol) {
            None => ContactKind::None,
            Some((t0, t1)) if (t1 - t0) * len <= tol => ContactKind::Point(at(0.5 * (t0 + t1))),
            Some((t0, t1)) => {
                let l = (t1 - t0) * len;
                ContactKind::Segment { a: at(t0), b: at(t1), full_side: (l - side).abs() <= tol }
            }
        }
    }

    /// Exact clip for rational polygons and segment endpoints.
    pub fn clip_segment_exact(&self, a: QPoint, b: QPoint) -> Option<Option<(Q, Q)>> {
        let v = self.exact.as_ref()?;
        let n = v.len();
        let d = [b[0] - a[0], b[1] - a[1]];
        let (mut t0, mut t1) = (Q::zero(), Q::one());
        for k in 0..n {
            let p = v[k];
            let q = v[(k + 1) % n];
            let e = [q[0] - p[0], q[1] - p[1]];
            let alpha = e[0] * (a[1] - p[1]) - e[1] * (a[0] - p[0]);
            let beta = e[0] * d[1] - e[1] * d[0];
            if beta.is_zero() {
                if alpha < Q::zero() {
                    return Some(None);
                }
            } else if beta > Q::zero() {
                let t = -alpha / beta;
                if t > t0 {
                    t0 = t;
                }
            } else {
                let t = -alpha / beta;
                if t < t1 {
                    t1 = t;
                }
            }
        }
        Some(if t0 <= t1 { Some((t0, t1)) } else { None })
    }
}

/// Euclidean distance from `x` to the segment `[a, b]`.
pub fn seg_point_dist(a: Point, b: Point, x: Point) -> f64 {
    let d = sub(b, a);
    let l2 = dot(d, d);
    let t = if l2 == 0.0 { 0.0 } else { (dot(sub(x, a), d) / l2).clamp(0.0, 1.0) };
    dist([a[0] + t * d[0], a[1] + t * d[1]], x)
}

fn seg_point_dist2_q(a: QPoint, b: QPoint, x: QPoint) -> Q {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let mut t = if l2.is_zero() { Q::zero() } else { ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2 };
    if t < Q::zero() {
        t = Q::zero();
    }
    if t > Q::one() {
        t = Q::one();
    }
    let p = [a[0] + t * d[0] - x[0], a[1] + t * d[1] - x[1]];
    p[0] * p[0] + p[1] * p[1]
}

/// How two polygon images meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactKind {
    None,
    Point(Point),
    /// `full_side`: the segment is a whole side of both polygons.
    Segment {
        a: Point,
        b: Point,
        full_side: bool,
    },
    Overlap,
}

impl ContactKind {
    pub fn touches(&self) -> bool {
        matches!(self, ContactKind::Point(_) | ContactKind::Segment { .. })
    }
}

/// Scalar for the separating-axis test.
pub trait SatNum:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn to_f64(self) -> f64;
}

impl SatNum for f64 {
    fn zero() -> Self {
        0.0
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl SatNum for i128 {
    fn zero() -> Self {
        0
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

enum Raw<T> {
    None,
    Overlap,
    Point([T; 2]),
    Segment([T; 2], [T; 2], bool),
}

fn smax<T: SatNum>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

/// Separating-axis contact test for convex counter-clockwise polygons.
/// `norm` rescales an axis (identity for exact integers).
fn sat<T: SatNum>(p: &[[T; 2]], q: &[[T; 2]], tol: T, norm: &dyn Fn([T; 2]) -> [T; 2]) -> Raw<T> {
    let proj = |poly: &[[T; 2]], n: [T; 2]| -> (T, T) {
        let mut lo = poly[0][0] * n[0] + poly[0][1] * n[1];
        let mut hi = lo;
        for v in &poly[1..] {
            let s = v[0] * n[0] + v[1] * n[1];
            if s < lo {
                lo = s;
            }
            if s > hi {
                hi = s;
            }
        }
        (lo, hi)
    };
    let mut best: Option<(T, [T; 2])> = None;
    for poly in [p, q] {
        let k = poly.len();
        for i in 0..k {
            let a = poly[i];
            let b = poly[(i + 1) % k];
            let n = norm([b[1] - a[1], a[0] - b[0]]);
            let (pl, ph) = proj(p, n);
            let (ql, qh) = proj(q, n);
            let sep = smax(ql - ph, pl - qh);
            if sep > tol {
                return Raw::None;
            }
            match best {
                Some((s, _)) if s >= sep => {}
                _ => best = Some((sep, n)),
            }
        }
    }
    let (sep, n) = best.expect("polygons have edges");
    if sep < -tol {
        return Raw::Overlap;
    }
    // Orient the axis so that p is on the low side.
    let (pl, ph) = proj(p, n);
    let (ql, qh) = proj(q, n);
    let n = if ql - ph >= pl - qh { n } else { [-n[0], -n[1]] };
    let (_, ph) = proj(p, n);
    let (ql, _) = proj(q, n);
    let t = [-n[1], n[0]];
    let support = |poly: &[[T; 2]], on_hi: bool, level: T| -> Vec<[T; 2]> {
        poly.iter()
            .copied()
            .filter(|v| {
                let s = v[0] * n[0] + v[1] * n[1];
                if on_hi {
                    s >= level - tol
                } else {
                    s <= level + tol
                }
            })
            .collect()
    };
    let sp = support(p, true, ph);
    let sq = support(q, false, ql);
    let tc = |v: &[T; 2]| v[0] * t[0] + v[1] * t[1];
    let ext = |s: &[[T; 2]]| -> ([T; 2], [T; 2]) {
        let mut lo = s[0];
        let mut hi = s[0];
        for v in s {
            if tc(v) < tc(&lo) {
                lo = *v;
            }
            if tc(v) > tc(&hi) {
                hi = *v;
            }
        }
        (lo, hi)
    };
    let (a1, a2) = ext(&sp);
    let (b1, b2) = ext(&sq);
    let lo = if tc(&a1) >= tc(&b1) { a1 } else { b1 };
    let hi = if tc(&a2) <= tc(&b2) { a2 } else { b2 };
    let len = tc(&hi) - tc(&lo);
    if len > tol {
        let close = |x: T, y: T| x - y <= tol && y - x <= tol;
        let full_p = tc(&a2) - tc(&a1) > tol && close(tc(&lo), tc(&a1)) && close(tc(&hi), tc(&a2));
        let full_q = tc(&b2) - tc(&b1) > tol && close(tc(&lo), tc(&b1)) && close(tc(&hi), tc(&b2));
        Raw::Segment(lo, hi, full_p && full_q)
    } else if len >= -tol {
        Raw::Point(lo)
    } else {
        Raw::None
    }
}

fn raw_to_contact<T: SatNum>(raw: Raw<T>, scale: f64) -> ContactKind {
    let pt = |v: [T; 2]| [v[0].to_f64() / scale, v[1].to_f64() / scale];
    match raw {
        Raw::None => ContactKind::None,
        Raw::Overlap => ContactKind::Overlap,
        Raw::Point(p) => ContactKind::Point(pt(p)),
        Raw::Segment(a, b, full_side) => ContactKind::Segment { a: pt(a), b: pt(b), full_side },
    }
}

/// Common-denominator integer coordinates for a batch of exact points.
pub struct IntFrame {
    pub denom: i128,
}

impl IntFrame {
    /// Least common denominator of all points, `None` on overflow.
    pub fn for_points<'a>(points: impl IntoIterator<Item = &'a QPoint>) -> Option<IntFrame> {
        let mut d: i128 = 1;
        for p in points {
            for c in p {
                let l = d.lcm(c.denom());
                if l > (1i128 << 60) {
                    return None;
                }
                d = l;
            }
        }
        Some(IntFrame { denom: d })
    }

    pub fn to_int(&self, p: &QPoint) -> Option<[i128; 2]> {
        let f = |c: &Q| c.numer().checked_mul(&(self.denom / c.denom()));
        Some([f(&p[0])?, f(&p[1])?])
    }
}

/// Exact classification on integer coordinates sharing denominator `denom`.
pub fn contact_classify_int(p: &[[i128; 2]], q: &[[i128; 2]], denom: i128) -> ContactKind {
    raw_to_contact(sat(p, q, 0i128, &|n| n), denom as f64)
}

/// Classify the contact between two polygon images.
///
/// Exact when both carry rational vertices, otherwise a float test where
/// gaps and overlaps smaller than `tol` count as touching and segments
/// shorter than `tol` are reported as points.
pub fn contact_classify(a: &PolygonImage, b: &PolygonImage, tol: f64) -> ContactKind {
    if let (Some(ea), Some(eb)) = (&a.exact, &b.exact) {
        if let Some(fr) = IntFrame::for_points(ea.iter().chain(eb.iter())) {
            let ia: Option<Vec<_>> = ea.iter().map(|p| fr.to_int(p)).collect();
            let ib: Option<Vec<_>> = eb.iter().map(|p| fr.to_int(p)).collect();
            if let (Some(ia), Some(ib)) = (ia, ib) {
                return contact_classify_int(&ia, &ib, fr.denom);
            }
        }
    }
    let norm = |n: [f64; 2]| {
        let l = n[0].hypot(n[1]);
        [n[0] / l, n[1] / l]
    };
    let c = raw_to_contact(sat(&a.vertices, &b.vertices, tol, &norm), 1.0);
    if let ContactKind::Point(_) = c {
        log::trace!("float contact classified as point at tol {tol:e}");
    }
    c
}

// ---------------------------------------------------------------------------
// Dihedral group

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymKind {
    /// `Γ_i`: `q_j -> q_{j+i}`.
    Rotation(usize),
    /// Reflection `q_j -> q_{k-j}` (0-based indices).
    Reflection(usize),
}

/// Element of the symmetry group of the frame, acting about its centre.
#[derive(Clone, Debug)]
pub struct SymmetryElement {
    pub kind: SymKind,
    /// `perm[j]` is the image of vertex `j`.
    pub perm: Vec<usize>,
    pub matrix: [[f64; 2]; 2],
    pub center: Point,
    int_matrix: Option<[[i128; 2]; 2]>,
    exact_center: Option<QPoint>,
}

impl SymmetryElement {
    fn from_perm(frame: &PolygonFrame, kind: SymKind, perm: Vec<usize>) -> Self {
        let c = frame.center;
        let v0 = sub(frame.vertices[0], c);
        let v1 = sub(frame.vertices[1], c);
        let w0 = sub(frame.vertices[perm[0]], c);
        let w1 = sub(frame.vertices[perm[1]], c);
        // M [v0 v1] = [w0 w1]
        let det = v0[0] * v1[1] - v1[0] * v0[1];
        let inv = [[v1[1] / det, -v1[0] / det], [-v0[1] / det, v0[0] / det]];
        let mut m = [[0.0; 2]; 2];
        for r in 0..2 {
            for col in 0..2 {
                m[r][col] = w0[r] * inv[0][col] + w1[r] * inv[1][col];
            }
        }
        let int_matrix = {
            let mut im = [[0i128; 2]; 2];
            let mut ok = true;
            for r in 0..2 {
                for col in 0..2 {
                    let x = m[r][col].round();
                    ok &= (m[r][col] - x).abs() < 1e-12;
                    im[r][col] = x as i128;
                }
            }
            if ok {
                for r in 0..2 {
                    for col in 0..2 {
                        m[r][col] = im[r][col] as f64;
                    }
                }
            }
            ok.then_some(im)
        };
        let exact_center = frame.exact_vertices.as_ref().map(|ev| {
            let n = Q::from_integer(ev.len() as i128);
            let s = ev.iter().fold([Q::zero(), Q::zero()], |a, p| [a[0] + p[0], a[1] + p[1]]);
            [s[0] / n, s[1] / n]
        });
        SymmetryElement { kind, perm, matrix: m, center: c, int_matrix, exact_center }
    }

    pub fn identity(frame: &PolygonFrame) -> Self {
        Self::rotation(frame, 0)
    }

    /// `Γ_i`, shifting vertex labels by `i`.
    pub fn rotation(frame: &PolygonFrame, i: usize) -> Self {
        let n = frame.n0;
        let perm = (0..n).map(|j| (j + i) % n).collect();
        Self::from_perm(frame, SymKind::Rotation(i % n), perm)
    }

    /// `Γ_{i,j}` exchanging `q_i` and `q_j` (1-based labels, `i != j`).
    pub fn reflection(frame: &PolygonFrame, i: usize, j: usize) -> Self {
        let n = frame.n0;
        let k = (i - 1 + j - 1) % n;
        Self::reflection_k(frame, k)
    }

    fn reflection_k(frame: &PolygonFrame, k: usize) -> Self {
        let n = frame.n0;
        let perm = (0..n).map(|j| (k + n - j) % n).collect();
        Self::from_perm(frame, SymKind::Reflection(k), perm)
    }

    pub fn apply(&self, x: Point) -> Point {
        let d = sub(x, self.center);
        let m = &self.matrix;
        [m[0][0] * d[0] + m[0][1] * d[1] + self.center[0], m[1][0] * d[0] + m[1][1] * d[1] + self.center[1]]
    }

    pub fn apply_exact(&self, x: &QPoint) -> Option<QPoint> {
        let m = self.int_matrix?;
        let c = self.exact_center?;
        let d = [x[0] - c[0], x[1] - c[1]];
        let f = |r: usize| Q::from_integer(m[r][0]) * d[0] + Q::from_integer(m[r][1]) * d[1] + c[r];
        Some([f(0), f(1)])
    }

    pub fn apply_polygon(&self, p: &PolygonImage) -> PolygonImage {
        let mut vertices: Vec<Point> = p.vertices.iter().map(|v| self.apply(*v)).collect();
        let mut exact =
            p.exact.as_ref().and_then(|ev| ev.iter().map(|v| self.apply_exact(v)).collect::<Option<Vec<_>>>());
        if polygon_area(&vertices) < 0.0 {
            vertices.reverse();
            if let Some(e) = exact.as_mut() {
                e.reverse();
            }
        }
        PolygonImage { vertices, exact, ratio: p.ratio }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// All `2 n0` elements: rotations `Γ_0..Γ_{n0-1}`, then reflections.
pub fn symmetry_group(frame: &PolygonFrame) -> Vec<SymmetryElement> {
    let n = frame.n0;
    let mut g: Vec<SymmetryElement> = (0..n).map(|i| SymmetryElement::rotation(frame, i)).collect();
    g.extend((0..n).map(|k| SymmetryElement::reflection_k(frame, k)));
    g
}

/// Index into `group` of the element with vertex permutation `perm`.
pub fn find_by_perm(group: &[SymmetryElement], perm: &[usize]) -> Option<usize> {
    group.iter().position(|g| g.perm == perm)
}

/// Index of `a ∘ b` in `group`.
pub fn compose_index(group: &[SymmetryElement], a: usize, b: usize) -> usize {
    let perm: Vec<usize> = group[b].perm.iter().map(|&j| group[a].perm[j]).collect();
    find_by_perm(group, &perm).expect("dihedral group is closed")
}

/// Index of the inverse of `a` in `group`.
pub fn inverse_index(group: &[SymmetryElement], a: usize) -> usize {
    let mut inv = vec![0; group[a].perm.len()];
    for (j, &p) in group[a].perm.iter().enumerate() {
        inv[p] = j;
    }
    find_by_perm(group, &inv).expect("dihedral group is closed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square(lo: [f64; 2], s: f64) -> PolygonImage {
        let f = regular_polygon(4).unwrap();
        let m = Affine { scale: s, shift: lo, exact: None };
        f.image(&m)
    }

    fn qsquare(lo: [(i128, i128); 2], s: (i128, i128)) -> PolygonImage {
        let f = regular_polygon(4).unwrap();
        let sq = Q::new(s.0, s.1);
        let t = [Q::new(lo[0].0, lo[0].1), Q::new(lo[1].0, lo[1].1)];
        let m = Affine { scale: q_to_f64(&sq), shift: [q_to_f64(&t[0]), q_to_f64(&t[1])], exact: Some((sq, t)) };
        f.image(&m)
    }

    #[test]
    fn frames() {
        let sq = regular_polygon(4).unwrap();
        assert_eq!(sq.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(sq.center, [0.5, 0.5]);
        let tr = regular_polygon(3).unwrap();
        assert_abs_diff_eq!(tr.vertices[2][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(tr.vertices[2][1], 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert!(matches!(regular_polygon(2), Err(Error::InvalidPolygon(2))));
        for n in 3..9 {
            let f = regular_polygon(n).unwrap();
            for k in 0..n {
                let (a, b) = f.side(k);
                assert_abs_diff_eq!(dist(a, b), 1.0, epsilon = 1e-12);
            }
            assert!(f.area() > 0.0);
        }
    }

    #[test]
    fn contacts_exact_and_float() {
        let third = (1, 3);
        let a = qsquare([(0, 1), (0, 1)], third);
        let b = qsquare([(1, 3), (0, 1)], third);
        let c = qsquare([(1, 3), (1, 3)], third);
        let d = qsquare([(1, 2), (0, 1)], third);
        match contact_classify(&a, &b, 1e-12) {
            ContactKind::Segment { full_side, a: p, b: q } => {
                assert!(full_side);
                assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
                assert_abs_diff_eq!(q[0], 1.0 / 3.0, epsilon = 1e-15);
            }
            other => panic!("{other:?}"),
        }
        match contact_classify(&a, &c, 1e-12) {
            ContactKind::Point(p) => {
                assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
                assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(contact_classify(&a, &d, 1e-12), ContactKind::None);
        // float path gives the same kinds
        let fa = square([0.0, 0.0], 1.0 / 3.0);
        let fb = square([1.0 / 3.0, 0.0], 1.0 / 3.0);
        let fc = square([1.0 / 3.0, 1.0 / 3.0], 1.0 / 3.0);
        assert!(matches!(contact_classify(&fa, &fb, 1e-12), ContactKind::Segment { full_side: true, .. }));
        assert!(matches!(contact_classify(&fa, &fc, 1e-12), ContactKind::Point(_)));
        let big = square([0.1, 0.1], 0.5);
        assert_eq!(contact_classify(&fa, &big, 1e-12), ContactKind::Overlap);
        // half-side contact is not a full side of the larger square
        let small = qsquare([(1, 3), (0, 1)], (1, 6));
        assert!(matches!(contact_classify(&a, &small, 0.0), ContactKind::Segment { full_side: false, .. }));
    }

    #[test]
    fn symmetries() {
        let f = regular_polygon(4).unwrap();
        let g1 = SymmetryElement::rotation(&f, 1);
        let p = g1.apply([0.0, 0.0]);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
        let r = SymmetryElement::reflection(&f, 1, 2);
        let p = r.apply([0.0, 1.0]);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
        let id = SymmetryElement::identity(&f);
        assert_eq!(id.apply([0.3, 0.7]), [0.3, 0.7]);
        for n in 3..8 {
            let f = regular_polygon(n).unwrap();
            let g = symmetry_group(&f);
            assert_eq!(g.len(), 2 * n);
            for (a, ga) in g.iter().enumerate() {
                for (k, v) in f.vertices.iter().enumerate() {
                    let w = ga.apply(*v);
                    assert!(dist(w, f.vertices[ga.perm[k]]) < 1e-12);
                }
                for b in 0..g.len() {
                    let c = compose_index(&g, a, b);
                    let x = [0.123, 0.321];
                    let lhs = g[c].apply(x);
                    let rhs = g[a].apply(g[b].apply(x));
                    assert!(dist(lhs, rhs) < 1e-12);
                }
            }
        }
    }
}
