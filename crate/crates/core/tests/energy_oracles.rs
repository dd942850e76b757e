//! Graph energy, resistance and pseudo-inverse solves against dense
//! linear algebra and the series/parallel laws.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carpet_core::constants::poincare::quadratic_pinv;
use carpet_core::energy::solver::SpdSolver;
use carpet_core::energy::{GraphForm, Resistance};
use common::{dense_laplacian, dense_pencil_max, grounded, random_graph, resistance_matrix};

fn dense_resistance(l: &DMatrix<f64>, x: usize, y: usize) -> f64 {
    resistance_matrix(l)[(x, y)]
}

fn resistance(form: &GraphForm, a: usize, b: usize) -> f64 {
    form.effective_resistance(&[a], &[b]).unwrap().finite().unwrap_or(f64::INFINITY)
}

#[test]
fn series_and_parallel_laws() {
    for n in 2..30 {
        let path: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let f = GraphForm::from_edges(n, &path);
        assert!((resistance(&f, 0, n - 1) - (n - 1) as f64).abs() < 1e-12);

        let mut cycle = path.clone();
        cycle.push((0, n - 1));
        if n >= 3 {
            let f = GraphForm::from_edges(n, &cycle);
            for k in 1..n {
                let exact = (k * (n - k)) as f64 / n as f64;
                assert!((resistance(&f, 0, k) - exact).abs() < 1e-12, "cycle {n}, {k}");
            }
        }
    }
    // p disjoint paths of length l between two terminals
    for p in 1..6 {
        for l in 2..6 {
            let mut edges = Vec::new();
            let mut next = 2;
            for _ in 0..p {
                let mut prev = 0;
                for _ in 0..l - 1 {
                    edges.push((prev, next));
                    prev = next;
                    next += 1;
                }
                edges.push((prev, 1));
            }
            let f = GraphForm::from_edges(next, &edges);
            assert!((resistance(&f, 0, 1) - l as f64 / p as f64).abs() < 1e-12, "{p} paths of {l}");
        }
    }
    // a ladder of k rungs from one rail end to the other converges to √3 − 1
    // per unit; the first rungs have rational values
    let ladder = |k: usize| {
        let mut e = Vec::new();
        for i in 0..k {
            e.push((2 * i, 2 * i + 1));
            if i + 1 < k {
                e.push((2 * i, 2 * i + 2));
                e.push((2 * i + 1, 2 * i + 3));
            }
        }
        resistance(&GraphForm::from_edges(2 * k, &e), 0, 1)
    };
    assert!((ladder(1) - 1.0).abs() < 1e-12);
    assert!((ladder(2) - 3.0 / 4.0).abs() < 1e-12);
    assert!((ladder(3) - 11.0 / 15.0).abs() < 1e-12);
}

#[test]
fn iterative_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..100 {
        let n = rng.gen_range(2..=200);
        let extra = rng.gen_range(0..2 * n);
        let edges = random_graph(&mut rng, n, extra);
        let m = grounded(n, &edges);
        let solver = SpdSolver::new(m.clone()).unwrap();
        let b: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = dense_laplacian(n, &edges).remove_row(0).remove_column(0);
        let exact = dense.cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
        let scale = exact.norm();
        for x in [solver.solve(&b).unwrap(), solver.solve_iterative(&b).unwrap()] {
            let err = (DVector::from_vec(x) - &exact).norm() / scale;
            assert!(err < 1e-8, "case {case}: n = {n}, relative error {err}");
        }
    }
}

#[test]
fn resistance_matches_dense_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(3..40);
        let edges = random_graph(&mut rng, n, n);
        let form = GraphForm::from_edges(n, &edges);
        let l = dense_laplacian(n, &edges);
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if x != y {
            assert!((resistance(&form, x, y) - dense_resistance(&l, x, y)).abs() < 1e-9);
        }
    }
}

#[test]
fn rayleigh_monotonicity_and_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut triples = 0;
    while triples < 1000 {
        let n = rng.gen_range(4..40);
        let extra = rng.gen_range(0..n);
        let edges = random_graph(&mut rng, n, extra);
        let form = GraphForm::from_edges(n, &edges);
        let mut cut = edges.clone();
        cut.remove(rng.gen_range(0..cut.len()));
        let thinner = GraphForm::from_edges(n, &cut);
        for _ in 0..20 {
            let (x, y, z) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if x == y || y == z || x == z {
                continue;
            }
            let r = |a, b| resistance(&form, a, b);
            assert!(r(x, z) <= r(x, y) + r(y, z) + 1e-9);
            assert!(r(x, y) <= 1.0 + 1e-12 || !form.neighbors(x).contains(&y));
            assert!(resistance(&thinner, x, y) >= r(x, y) - 1e-9);
            triples += 1;
        }
    }
}

#[test]
fn disconnected_pairs_are_infinite() {
    let f = GraphForm::from_edges(4, &[(0, 1), (2, 3)]);
    assert!(matches!(f.effective_resistance(&[0], &[3]).unwrap(), Resistance::Infinite));
    assert_eq!(f.effective_resistance(&[0, 1], &[1]).unwrap(), Resistance::Finite(0.0));
}

#[test]
fn sigma_closed_form_matches_pencil_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..300 {
        let n = rng.gen_range(2..=12);
        let split = rng.gen_range(1..n);
        let extra = rng.gen_range(0..n);
        let edges = random_graph(&mut rng, n, extra);
        let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let (ma, mb): (f64, f64) = (mu[..split].iter().sum(), mu[split..].iter().sum());
        let a: Vec<f64> = (0..n).map(|i| if i < split { mu[i] / ma } else { -mu[i] / mb }).collect();
        let closed = quadratic_pinv(&GraphForm::from_edges(n, &edges), &a).unwrap();
        // (aᵀf)² is the pencil with M = a aᵀ
        let a = DVector::from_vec(a);
        let oracle = dense_pencil_max(&dense_laplacian(n, &edges), &(&a * a.transpose()));
        assert!((closed - oracle).abs() <= 1e-6 * oracle.max(1.0), "case {case}: {closed} vs {oracle}");
    }
}

#[test]
fn sigma_closed_form_bounds_sampled_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 10;
    let edges = random_graph(&mut rng, n, 6);
    let form = GraphForm::from_edges(n, &edges);
    let a: Vec<f64> = (0..n).map(|i| if i < 4 { 0.25 } else { -1.0 / 6.0 }).collect();
    let closed = quadratic_pinv(&form, &a).unwrap();
    let mut best: f64 = 0.0;
    for _ in 0..100_000 {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = form.energy(&f).unwrap();
        let g: f64 = a.iter().zip(&f).map(|(x, y)| x * y).sum();
        best = best.max(g * g / d);
    }
    assert!(best <= closed * (1.0 + 1e-12));
    assert!(best >= 0.5 * closed, "sampled {best} vs {closed}");
}

#[test]
fn grounded_solve_matches_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(2..50);
        let edges = random_graph(&mut rng, n, n / 2);
        let form = GraphForm::from_edges(n, &edges);
        let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = a.iter().sum::<f64>() / n as f64;
        a.iter_mut().for_each(|v| *v -= mean);
        let x = form.grounded_solve(&a).unwrap();
        let p = dense_laplacian(n, &edges).pseudo_inverse(1e-10).unwrap();
        let y = p * DVector::from_vec(a.clone());
        let err = (DVector::from_vec(x.values.clone()) - &y).norm();
        assert!(err <= 1e-9 * y.norm().max(1.0));
        assert!(a.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() >= -1e-12);
    }
}
