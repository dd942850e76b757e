//! L1 bumps built from linear-boundary functions and the separator bump
//! `h_{w,m}` that is at least 1 on the underlined boundary of `B_m(w)` and
//! vanishes outside `B_m(N_2(w))`.

use std::collections::HashMap;

use crate::cellgraph::partition::{expand, level_of, partition, Threshold};
use crate::cellgraph::{CellGraph, Word};
use crate::energy::Provenance;
use crate::error::{Error, Result};
use crate::geometry::{Point, PolygonImage};
use crate::par;

use super::{ancestors, AffineFn, CertifiedFunction, Checks, Domain, LinearBuilder};

/// `max(0, 1 − |y − x|_1 / r)` on `B_m(w)` realized through the
/// linear-boundary functions of the four half-planes. Words are absolute.
pub fn l1_bump(builder: &LinearBuilder<'_>, w: &Word, m: usize, x: Point, r: f64) -> Result<CertifiedFunction> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let carpet = builder.carpet;
    let map = carpet.cell(w).map;
    let basis = builder.basis(builder.relative_threshold(w, m)?)?;
    let part = |l: usize, s: f64| {
        let mut a = [0.0; 2];
        a[l] = s / r;
        basis.evaluate(&AffineFn::new(-s * x[l] / r, a).compose(&map)).0
    };
    let (p1, m1, p2, m2) = (part(0, 1.0), part(0, -1.0), part(1, 1.0), part(1, -1.0));
    let phi = |y: Point| (1.0 - ((y[0] - x[0]).abs() + (y[1] - x[1]).abs()) / r).max(0.0);
    let mut values: Vec<f64> = (0..basis.len()).map(|u| (1.0 - p1[u].max(m1[u]) - p2[u].max(m2[u])).max(0.0)).collect();
    let qc = carpet.spec.frame.center;
    let words: Vec<Word> = basis.words.iter().map(|t| w.concat(t)).collect();
    let target = |u: usize| phi(carpet.cell(&words[u]).map.apply(qc));
    let mut adjust = 0.0f64;
    for &u in &basis.underline {
        let t = target(u);
        adjust = adjust.max((values[u] - t).abs());
        values[u] = t;
    }
    let checks =
        Checks::new(&values).equal("l1_on_underline", &basis.underline, target).range("unit", 0.0, 1.0).finish();
    let level = level_of(carpet, w).unwrap_or(0) + m;
    let mut f = CertifiedFunction::new(level, words, values, Provenance::Constructed, basis.edges.clone(), checks)?;
    f.certificate.notes.push(format!("boundary write adjusted values by at most {adjust:.3e}"));
    Ok(f)
}

/// L1 distance from `x` to a convex polygon; 0 inside.
fn l1_dist_to_polygon(p: &PolygonImage, x: Point, tol: f64) -> f64 {
    if p.contains(x, tol) {
        return 0.0;
    }
    let v = &p.vertices;
    let l1 = |y: Point| (y[0] - x[0]).abs() + (y[1] - x[1]).abs();
    let mut best = f64::INFINITY;
    for k in 0..v.len() {
        let (a, b) = (v[k], v[(k + 1) % v.len()]);
        best = best.min(l1(a)).min(l1(b));
        // the L1 distance along a segment is piecewise linear with kinks
        // where a coordinate difference changes sign
        for l in 0..2 {
            let d = b[l] - a[l];
            if d != 0.0 {
                let t = (x[l] - a[l]) / d;
                if t > 0.0 && t < 1.0 {
                    best = best.min(l1([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
                }
            }
        }
    }
    best
}

/// `h_{w,m}` on `B_m(N_3(w))` with the quantities it certifies.
#[derive(Clone, Debug)]
pub struct SeparatorBump {
    pub n: usize,
    pub m: usize,
    pub w: Word,
    /// Bump radius `c_0 ρ_*^n`.
    pub radius: f64,
    /// Centers `p_{i,j}` on the sides of `Ψ_w A`.
    pub centers: Vec<Point>,
    /// Number of (center, cell) pairs with a nonzero bump.
    pub hits: usize,
    pub h: CertifiedFunction,
    /// `R_{n+m}(B_m(w), B_m(N_3(w) ∖ N_2(w)))` on the domain.
    pub annulus_resistance: Option<f64>,
    /// Energy of `min(h, 1)` set to 1 on `B_m(w)`.
    pub clamped_energy: f64,
}

/// Sum of doubled L1 bumps centred at `k_0` points per side of `Ψ_w A`.
pub fn separator_bump(builder: &LinearBuilder<'_>, n: usize, w: &Word, m: usize, c0: f64) -> Result<SeparatorBump> {
    let carpet = builder.carpet;
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("separation constant {c0} must be positive")));
    }
    if level_of(carpet, w) != Some(n) {
        return Err(Error::InvalidWord(format!("{w} (not in Λ_{n})")));
    }
    let rho = carpet.rho_min;
    if rho.powi(m as i32) > c0 / 4.0 {
        let need = ((c0 / 4.0).ln() / rho.ln()).ceil() as usize;
        return Err(Error::ThresholdNotReached(need.max(m + 1)));
    }
    let radius = c0 * rho.powi(n as i32);
    let k0 = (4.0 / c0).floor() as usize + 1;
    let frame = &carpet.spec.frame;
    let n0 = carpet.n0();
    let cw = carpet.cell(w);
    let mut centers = Vec::with_capacity(n0 * k0);
    for j in 0..n0 {
        let (a, b) = frame.side(j);
        for i in 0..k0 {
            let s = i as f64 / k0 as f64;
            centers.push(cw.map.apply([(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]));
        }
    }

    let coarse = CellGraph::from_partition(carpet, &partition(carpet, n, builder.budget)?)?;
    let wi = coarse.node(w)?;
    let n2 = coarse.neighborhood_small(wi, 2);
    let n3 = coarse.neighborhood_small(wi, 3);
    let polys: Vec<PolygonImage> = coarse.cells.iter().map(|c| c.polygon(carpet)).collect();
    let tol = carpet.tol_at(rho.powi(n as i32));
    let mut pairs: Vec<(Point, usize)> = Vec::new();
    for &p in &centers {
        for (v, poly) in polys.iter().enumerate() {
            if l1_dist_to_polygon(poly, p, tol) < radius {
                if n2.binary_search(&v).is_err() {
                    return Err(Error::PreconditionFailed(format!(
                        "bump around {p:?} reaches {} outside N_2({w}); c_0 is too large",
                        coarse.cells[v].word
                    )));
                }
                pairs.push((p, v));
            }
        }
    }

    let t = Threshold::level(carpet, n + m);
    let mut cells = Vec::new();
    for &v in &n3 {
        cells.extend(expand(carpet, &coarse.cells[v], t, builder.budget)?);
    }
    let dom = Domain::build(carpet, cells)?;
    let words = dom.words();
    let coarse_index: HashMap<Word, usize> = n3.iter().map(|&v| (coarse.cells[v].word.clone(), v)).collect();
    let parent = ancestors(&words, &coarse_index)?;

    let bumps = par::map(&pairs, |&(p, v)| l1_bump(builder, &coarse.cells[v].word, m, p, radius));
    let mut values = vec![0.0f64; dom.len()];
    for b in bumps {
        let b = b?;
        for (word, x) in b.words.iter().zip(&b.values.values) {
            values[dom.graph.node(word)?] += 2.0 * x;
        }
    }

    let basis = builder.basis(builder.relative_threshold(w, m)?)?;
    let on_boundary: Vec<usize> =
        basis.underline.iter().map(|&u| dom.graph.node(&w.concat(&basis.words[u]))).collect::<Result<_>>()?;
    let inner: Vec<usize> = (0..dom.len()).filter(|&u| parent[u] == wi).collect();
    let outer: Vec<usize> = (0..dom.len()).filter(|&u| n2.binary_search(&parent[u]).is_err()).collect();
    let checks = Checks::new(&values)
        .at_least("at_least_one_on_boundary", &on_boundary, 1.0)
        .zero("zero_off_n2", &outer)
        .finish();
    let annulus_resistance =
        if outer.is_empty() { None } else { dom.form.effective_resistance(&inner, &outer)?.finite() };
    let mut clamped: Vec<f64> = values.iter().map(|x| x.min(1.0)).collect();
    for &u in &inner {
        clamped[u] = 1.0;
    }
    let clamped_energy = dom.form.energy(&clamped)?;
    let mut h = CertifiedFunction::new(n + m, words, values, Provenance::Constructed, dom.edges(), checks)?;
    let e = h.energy();
    h.push_bound("clamped_energy_vs_energy", clamped_energy, e);
    if let Some(r) = annulus_resistance {
        h.push_bound("inverse_clamped_energy_vs_resistance", 1.0 / clamped_energy, r);
    }
    Ok(SeparatorBump { n, m, w: w.clone(), radius, centers, hits: pairs.len(), h, annulus_resistance, clamped_energy })
}
