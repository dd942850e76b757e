//! Dense linear-algebra oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use carpet_core::cellgraph::CellGraph;
use carpet_core::energy::solver::SparseSym;

/// Connected graph: a random spanning tree plus `extra` random edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (1..n)
        .map(|k| {
            let (a, b) = (order[rng.gen_range(0..k)], order[k]);
            (a.min(b), a.max(b))
        })
        .collect();
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// The Laplacian with node 0 removed, in the solver's storage.
pub fn grounded(n: usize, edges: &[(usize, usize)]) -> SparseSym {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n - 1];
    let mut diag = vec![0.0; n - 1];
    for &(a, b) in edges {
        for (u, v) in [(a, b), (b, a)] {
            if u > 0 {
                diag[u - 1] += 1.0;
                if v > 0 {
                    rows[u - 1].push((v - 1, -1.0));
                }
            }
        }
    }
    let mut start = vec![0];
    let (mut cols, mut vals) = (Vec::new(), Vec::new());
    for r in &mut rows {
        r.sort_by_key(|e| e.0);
        for &(c, v) in r.iter() {
            cols.push(c);
            vals.push(v);
        }
        start.push(cols.len());
    }
    SparseSym { diag, start, cols, vals }
}

pub fn dense_laplacian(n: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(a, b) in edges {
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
        l[(a, b)] -= 1.0;
        l[(b, a)] -= 1.0;
    }
    l
}

pub fn graph_laplacian(g: &CellGraph) -> DMatrix<f64> {
    let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.a, e.b)).collect();
    dense_laplacian(g.len(), &edges)
}

/// All pairwise effective resistances through the pseudo-inverse.
pub fn resistance_matrix(l: &DMatrix<f64>) -> DMatrix<f64> {
    let p = l.clone().pseudo_inverse(1e-10).unwrap();
    DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)])
}

/// `1 / min{fᵀLf : f|_A = 1, f|_B = 0}` by a dense Schur solve.
pub fn dense_set_resistance(l: &DMatrix<f64>, a: &[usize], b: &[usize]) -> f64 {
    let n = l.nrows();
    let mut fixed = vec![None; n];
    for &v in b {
        fixed[v] = Some(0.0);
    }
    for &v in a {
        fixed[v] = Some(1.0);
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let mut f = DVector::from_fn(n, |v, _| fixed[v].unwrap_or(0.0));
    if !free.is_empty() {
        let lff = DMatrix::from_fn(free.len(), free.len(), |i, j| l[(free[i], free[j])]);
        let rhs = DVector::from_fn(free.len(), |i, _| -(0..n).map(|v| l[(free[i], v)] * f[v]).sum::<f64>());
        let x = lff.lu().solve(&rhs).unwrap();
        for (k, &v) in free.iter().enumerate() {
            f[v] = x[k];
        }
    }
    1.0 / (f.transpose() * l * &f)[(0, 0)]
}

/// Orthonormal basis of the complement of the constants.
fn mean_zero_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        q[(k, k)] = 1.0;
        q[(k + 1, k)] = -1.0;
    }
    q.qr().q()
}

/// Top eigenvalue of the pencil `(M, L)` on `1^⊥`, `L` connected.
pub fn dense_pencil_max(l: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let q = mean_zero_basis(l.nrows());
    let e = SymmetricEigen::new(q.transpose() * l * &q);
    let inv_sqrt =
        &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt())) * e.eigenvectors.transpose();
    let b = &inv_sqrt * q.transpose() * m * &q * &inv_sqrt;
    SymmetricEigen::new(b).eigenvalues.max()
}
