//! Inverted-cell patches on four hand-built triangle carpets, one for each
//! size relation between the inverted cell and its right neighbours.

use std::collections::BTreeMap;

use carpet_core::carpet::spec::{CarpetSpec, DeclaredClass};
use carpet_core::carpet::Carpet;
use carpet_core::functions::{subsegment_function, triangle_patch, PatchCase};
use carpet_core::geometry::{regular_polygon, Real, Similarity};

const H: f64 = 0.866_025_403_784_438_6;

/// Upright cell of side `b` with lower-left vertex `(x, y·H)`.
fn up(b: (i128, i128), x: (i128, i128), y: f64) -> Similarity {
    Similarity::new(Real::ratio(b.0, b.1), 1, [Real::ratio(x.0, x.1), Real::float(y * H)])
}

/// Inverted cell of side `b` with its lowest vertex at `(x, 0)`.
fn inv(b: (i128, i128), x: (i128, i128)) -> Similarity {
    let bf = b.0 as f64 / b.1 as f64;
    let tx = x.0 * 2 * b.1 + b.0 * x.1;
    Similarity::new(Real::ratio(b.0, b.1), -1, [Real::ratio(tx, 2 * x.1 * b.1), Real::float(bf * H)])
}

fn carpet(name: &str, maps: Vec<Similarity>, corners: [usize; 3]) -> Carpet {
    let corner_labels: BTreeMap<usize, usize> = corners.iter().enumerate().map(|(v, &i)| (v, i)).collect();
    Carpet::new(CarpetSpec {
        name: Some(name.into()),
        frame: regular_polygon(3).unwrap(),
        maps,
        corner_labels,
        declared: DeclaredClass::default(),
    })
    .unwrap()
}

fn third_grid() -> Carpet {
    let t = (1, 3);
    let maps = vec![
        up(t, (0, 1), 0.0),
        inv(t, (1, 3)),
        up(t, (1, 3), 0.0),
        inv(t, (2, 3)),
        up(t, (2, 3), 0.0),
        up(t, (1, 6), 1.0 / 3.0),
        up(t, (1, 2), 1.0 / 3.0),
        up(t, (1, 3), 2.0 / 3.0),
    ];
    carpet("case-equal", maps, [0, 4, 7])
}

fn small_inverted() -> Carpet {
    let q = (1, 4);
    let maps = vec![
        up(q, (0, 1), 0.0),
        inv(q, (1, 4)),
        up((1, 2), (1, 4), 0.0),
        inv(q, (3, 4)),
        up(q, (3, 4), 0.0),
        up(q, (1, 8), 0.25),
        up(q, (5, 8), 0.25),
        up(q, (1, 4), 0.5),
        up(q, (1, 2), 0.5),
        up(q, (3, 8), 0.75),
    ];
    carpet("case-smaller", maps, [0, 4, 9])
}

fn upper(t: (i128, i128)) -> Vec<Similarity> {
    vec![
        up((1, 6), (5, 12), 1.0 / 6.0),
        up((1, 6), (7, 12), 1.0 / 6.0),
        up(t, (1, 6), 1.0 / 3.0),
        up(t, (1, 2), 1.0 / 3.0),
        up(t, (1, 3), 2.0 / 3.0),
    ]
}

fn large_flat() -> Carpet {
    let t = (1, 3);
    let s = (1, 6);
    let mut maps = vec![
        up(t, (0, 1), 0.0),
        inv(t, (1, 3)),
        up(s, (1, 3), 0.0),
        inv(s, (1, 2)),
        up(s, (1, 2), 0.0),
        up(t, (2, 3), 0.0),
    ];
    maps.extend(upper(t));
    let top = maps.len() - 1;
    carpet("case-larger-flat", maps, [0, 5, top])
}

fn large_decreasing() -> Carpet {
    let t = (1, 3);
    let s = (1, 6);
    let e = (1, 12);
    let mut maps = vec![
        up(t, (0, 1), 0.0),
        inv(t, (1, 3)),
        up(s, (1, 3), 0.0),
        inv(e, (1, 2)),
        up(e, (1, 2), 0.0),
        inv(e, (7, 12)),
        up(e, (7, 12), 0.0),
        up(t, (2, 3), 0.0),
        up(e, (11, 24), 1.0 / 12.0),
        up(e, (13, 24), 1.0 / 12.0),
        up(e, (15, 24), 1.0 / 12.0),
    ];
    maps.extend(upper(t));
    let top = maps.len() - 1;
    carpet("case-larger-decreasing", maps, [0, 7, top])
}

fn check(c: &Carpet, n: usize, expected: PatchCase, right: (usize, Option<usize>)) {
    let p = triangle_patch(c, n, 1, 1 << 16).unwrap();
    assert_eq!(p.case, expected);
    assert_eq!(p.case.number(), expected.number());
    assert_eq!(p.right, right);
    assert_eq!(p.left, (0, None));
    assert!(p.f.constraints_hold(), "{:?}", p.f.certificate.constraints);
    let max = p.f.values.values.iter().cloned().fold(0.0, f64::max);
    assert!(max > 0.0 && max <= 1.0);
    assert!(p.g_energy > 0.0 && p.g_mirror_energy > 0.0);
    assert!((p.f.recompute_energy().unwrap() - p.f.energy()).abs() < 1e-10);
}

#[test]
fn case_smaller() {
    check(&small_inverted(), 1, PatchCase::Smaller, (2, Some(3)));
}

#[test]
fn case_equal() {
    check(&third_grid(), 2, PatchCase::Equal, (2, Some(3)));
}

#[test]
fn case_larger_flat() {
    check(&large_flat(), 1, PatchCase::LargerFlat, (2, Some(3)));
}

#[test]
fn case_larger_decreasing() {
    check(&large_decreasing(), 1, PatchCase::LargerDecreasing, (2, Some(3)));
}

#[test]
fn upright_cells_are_rejected() {
    let c = third_grid();
    assert!(triangle_patch(&c, 2, 0, 1 << 12).is_err());
    assert!(triangle_patch(&c, 2, 7, 1 << 12).is_err());
}

#[test]
fn subsegment_on_a_grid_carpet() {
    let c = third_grid();
    let f = subsegment_function(&c, 3, 0.4, 1, 1 << 16).unwrap();
    assert!(f.constraints_hold(), "{:?}", f.certificate.constraints);
}
