//! Symmetric positive definite sparse solves: envelope Cholesky after a
//! reverse Cuthill-McKee ordering for moderate sizes, Jacobi-preconditioned
//! conjugate gradients above that.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Largest system handled by the direct factorization.
pub const DIRECT_LIMIT: usize = 20_000;
/// Relative residual target.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Sparse symmetric matrix in row form (both triangles stored, columns
/// sorted, diagonal held separately).
#[derive(Clone, Debug)]
pub struct SparseSym {
    pub diag: Vec<f64>,
    pub start: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseSym {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for k in self.start[i]..self.start[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.start[i]..self.start[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reverse Cuthill-McKee permutation; `perm[new] = old`.
pub fn rcm(m: &SparseSym) -> Vec<usize> {
    let n = m.len();
    let deg: Vec<usize> = (0..n).map(|i| m.start[i + 1] - m.start[i]).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |s: usize, seen: &[bool]| {
        // farthest node from s, used to pick a pseudo-peripheral start
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::from([s]);
        dist[s] = 0;
        let mut last = s;
        while let Some(u) = q.pop_front() {
            last = u;
            for (v, _) in m.row(u) {
                if !seen[v] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        last
    };
    for s0 in 0..n {
        if seen[s0] {
            continue;
        }
        let s = bfs_last(bfs_last(s0, &seen), &seen);
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = m.row(u).map(|(v, _)| v).filter(|&v| !seen[v]).collect();
            next.sort_by_key(|&v| (deg[v], v));
            next.dedup();
            for v in next {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Lower Cholesky factor stored by rows over each row's envelope.
#[derive(Clone, Debug)]
struct Envelope {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl Envelope {
    fn factor(m: &SparseSym) -> Result<Envelope> {
        let n = m.len();
        let perm = rcm(m);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let old = perm[i];
            for (c, _) in m.row(old) {
                first[i] = first[i].min(inv[c]);
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let old = perm[i];
            data[offset[i] + (i - first[i])] = m.diag[old];
            for (c, v) in m.row(old) {
                let j = inv[c];
                if j < i {
                    data[offset[i] + (j - first[i])] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = data[offset[i] + (j - fi)];
                let ri = &data[offset[i] + (lo - fi)..offset[i] + (j - fi)];
                let rj = &data[offset[j] + (lo - fj)..offset[j] + (j - fj)];
                s -= dot(ri, rj);
                if j < i {
                    data[offset[i] + (j - fi)] = s / data[offset[j] + (j - fj)];
                } else {
                    if s <= 0.0 {
                        return Err(Error::InvalidArgument("matrix is not positive definite".into()));
                    }
                    data[offset[i] + (i - fi)] = s.sqrt();
                }
            }
        }
        Ok(Envelope { perm, first, offset, data })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s = y[i] - dot(&row[..i - fi], &y[fi..i]);
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, j) in (fi..i).enumerate() {
                y[j] -= row[k] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// A prepared solver for one SPD matrix.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    matrix: SparseSym,
    direct: Option<Envelope>,
}

impl SpdSolver {
    pub fn new(matrix: SparseSym) -> Result<SpdSolver> {
        let direct = if matrix.len() <= DIRECT_LIMIT { Some(Envelope::factor(&matrix)?) } else { None };
        Ok(SpdSolver { matrix, direct })
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn is_direct(&self) -> bool {
        self.direct.is_some()
    }

    /// Solve `A x = b` to relative residual `RESIDUAL_TOL`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.direct {
            Some(f) => {
                let mut x = f.solve(b);
                // a few rounds of iterative refinement when rounding bites
                let mut r = vec![0.0; b.len()];
                for _ in 0..3 {
                    self.matrix.mul(&x, &mut r);
                    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
                    if norm(&r) <= RESIDUAL_TOL * bn {
                        return Ok(x);
                    }
                    let d = f.solve(&r);
                    x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
                }
                self.matrix.mul(&x, &mut r);
                r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
                if norm(&r) <= RESIDUAL_TOL * bn {
                    Ok(x)
                } else {
                    self.pcg(b, Some(x))
                }
            }
            None => self.pcg(b, None),
        }
    }

    fn pcg(&self, b: &[f64], x0: Option<Vec<f64>>) -> Result<Vec<f64>> {
        let n = b.len();
        let bn = norm(b);
        let max_iter = 20 * n + 1000;
        let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
        let mut r = vec![0.0; n];
        self.matrix.mul(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let inv: Vec<f64> = self.matrix.diag.iter().map(|d| 1.0 / d).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            if norm(&r) <= RESIDUAL_TOL * bn {
                return Ok(x);
            }
            self.matrix.mul(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        // the recurrence residual can drift; check the true one
        self.matrix.mul(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        if norm(&r) <= RESIDUAL_TOL * bn {
            Ok(x)
        } else {
            Err(Error::Diverged(max_iter))
        }
    }

    /// Solve with conjugate gradients regardless of size (for cross-checks).
    pub fn solve_iterative(&self, b: &[f64]) -> Result<Vec<f64>> {
        if norm(b) == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        self.pcg(b, None)
    }
}
