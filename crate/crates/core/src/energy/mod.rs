//! Discrete energies on cell graphs.
//!
//! A `GraphForm` is the unit-conductance Laplacian of a cell graph (or of
//! the subgraph induced by a node set). It provides the energy, harmonic
//! extension of Dirichlet data, effective resistances, and solves against
//! the Laplacian grounded to mean zero. Coarsening and refinement move
//! functions between partition levels.

pub mod solver;

use std::ops::Deref;
use std::sync::OnceLock;

use serde::Serialize;

use crate::cellgraph::{CellGraph, PartitionLevel};
use crate::error::{Error, Result};
use solver::{SparseSym, SpdSolver};

/// How a cell function came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Harmonic,
    Constructed,
    Projected,
}

/// Values on the nodes of a graph or partition.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFunction {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl CellFunction {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        CellFunction { values, provenance }
    }
}

impl Deref for CellFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Effective resistance; `Infinite` between different components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resistance {
    Finite(f64),
    Infinite,
}

impl Resistance {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Resistance::Finite(r) => Some(*r),
            Resistance::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Resistance::Infinite)
    }
}

/// Unit-conductance quadratic form `Σ_{w∼v} (f(w) − f(v))²`.
#[derive(Debug)]
pub struct GraphForm {
    start: Vec<usize>,
    adj: Vec<usize>,
    comp: Vec<usize>,
    ncomp: usize,
    grounded: OnceLock<(Vec<usize>, SpdSolver)>,
}

impl GraphForm {
    fn from_adjacency(lists: Vec<Vec<usize>>) -> GraphForm {
        let n = lists.len();
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + lists[i].len();
        }
        let adj: Vec<usize> = lists.into_iter().flatten().collect();
        let mut form = GraphForm { start, adj, comp: vec![usize::MAX; n], ncomp: 0, grounded: OnceLock::new() };
        form.label_components();
        form
    }

    fn label_components(&mut self) {
        let n = self.len();
        let mut next = 0;
        for s in 0..n {
            if self.comp[s] != usize::MAX {
                continue;
            }
            self.comp[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for k in self.start[u]..self.start[u + 1] {
                    let v = self.adj[k];
                    if self.comp[v] == usize::MAX {
                        self.comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        self.ncomp = next;
    }

    pub fn from_graph(g: &CellGraph) -> GraphForm {
        Self::from_adjacency((0..g.len()).map(|i| g.neighbors(i).to_vec()).collect())
    }

    /// Form `D_{Λ,A}` on the subgraph induced by `nodes`; node `k` of the
    /// form is `nodes[k]`.
    pub fn restricted(g: &CellGraph, nodes: &[usize]) -> GraphForm {
        let mut pos = vec![usize::MAX; g.len()];
        for (k, &i) in nodes.iter().enumerate() {
            pos[i] = k;
        }
        let lists = nodes
            .iter()
            .map(|&i| g.neighbors(i).iter().filter_map(|&v| (pos[v] != usize::MAX).then_some(pos[v])).collect())
            .collect();
        Self::from_adjacency(lists)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> GraphForm {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !lists[a].contains(&b) {
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        for l in &mut lists {
            l.sort_unstable();
        }
        Self::from_adjacency(lists)
    }

    pub fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.start[i]..self.start[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.start[i + 1] - self.start[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn components(&self) -> &[usize] {
        &self.comp
    }

    pub fn component_count(&self) -> usize {
        self.ncomp
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::InvalidFunction(format!("{} values for {} nodes", f.len(), self.len())));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite value".into()));
        }
        Ok(())
    }

    /// `D(f, g)`, summed edge by edge in node order.
    pub fn bilinear(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let mut s = 0.0;
        for u in 0..self.len() {
            for &v in self.neighbors(u) {
                if u < v {
                    s += (f[u] - f[v]) * (g[u] - g[v]);
                }
            }
        }
        Ok(s)
    }

    /// `D(f) = Σ_{w∼v} (f(w) − f(v))²`.
    pub fn energy(&self, f: &[f64]) -> Result<f64> {
        self.bilinear(f, f)
    }

    /// `y = L x`.
    pub fn laplacian_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|u| self.neighbors(u).iter().map(|&v| x[u] - x[v]).sum()).collect()
    }

    /// Reduced matrix of `L` on the `keep` nodes (`slot[u]` is the row of
    /// node `u`, `usize::MAX` if eliminated).
    fn reduced(&self, keep: &[usize], slot: &[usize]) -> SparseSym {
        let mut start = vec![0];
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(keep.len());
        for &u in keep {
            diag.push(self.degree(u) as f64);
            let mut row: Vec<usize> =
                self.neighbors(u).iter().filter_map(|&v| (slot[v] != usize::MAX).then_some(slot[v])).collect();
            row.sort_unstable();
            cols.extend(row);
            start.push(cols.len());
        }
        let vals = vec![-1.0; cols.len()];
        SparseSym { diag, start, cols, vals }
    }

    fn harmonic_inner(&self, boundary: &[Option<f64>], strict: bool) -> Result<Vec<f64>> {
        if boundary.len() != self.len() {
            return Err(Error::InvalidFunction(format!("{} values for {} nodes", boundary.len(), self.len())));
        }
        let mut grounded = vec![false; self.ncomp];
        for (u, b) in boundary.iter().enumerate() {
            if let Some(v) = b {
                if !v.is_finite() {
                    return Err(Error::InvalidFunction("non-finite boundary value".into()));
                }
                grounded[self.comp[u]] = true;
            }
        }
        let mut x: Vec<f64> = boundary.iter().map(|b| b.unwrap_or(0.0)).collect();
        let mut keep = Vec::new();
        let mut slot = vec![usize::MAX; self.len()];
        for u in 0..self.len() {
            if boundary[u].is_none() {
                if !grounded[self.comp[u]] {
                    if strict {
                        return Err(Error::UngroundedComponent(self.comp[u]));
                    }
                    continue;
                }
                slot[u] = keep.len();
                keep.push(u);
            }
        }
        if keep.is_empty() {
            return Ok(x);
        }
        let m = self.reduced(&keep, &slot);
        let rhs: Vec<f64> = keep.iter().map(|&u| self.neighbors(u).iter().filter_map(|&v| boundary[v]).sum()).collect();
        let sol = SpdSolver::new(m)?.solve(&rhs)?;
        for (k, &u) in keep.iter().enumerate() {
            x[u] = sol[k];
        }
        Ok(x)
    }

    /// Energy minimizer with the given Dirichlet data (`None` = free node).
    pub fn harmonic_solve(&self, boundary: &[Option<f64>]) -> Result<CellFunction> {
        Ok(CellFunction::new(self.harmonic_inner(boundary, true)?, Provenance::Harmonic))
    }

    /// The potential with `1` on `a` and `0` on `b`; components without
    /// boundary nodes are set to 0.
    pub fn potential(&self, a: &[usize], b: &[usize]) -> Result<Vec<f64>> {
        let mut bd = vec![None; self.len()];
        for &v in b {
            bd[v] = Some(0.0);
        }
        for &v in a {
            bd[v] = Some(1.0);
        }
        self.harmonic_inner(&bd, false)
    }

    /// `R(A, B) = 1 / min{D(f) : f|_A = 1, f|_B = 0}`, zero when the sets
    /// meet.
    pub fn effective_resistance(&self, a: &[usize], b: &[usize]) -> Result<Resistance> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument("resistance needs nonempty node sets".into()));
        }
        if let Some(&v) = a.iter().chain(b).find(|&&v| v >= self.len()) {
            return Err(Error::InvalidArgument(format!("node {v} out of range")));
        }
        if a.iter().any(|v| b.contains(v)) {
            return Ok(Resistance::Finite(0.0));
        }
        let f = self.potential(a, b)?;
        let d = self.energy(&f)?;
        Ok(if d > 0.0 { Resistance::Finite(1.0 / d) } else { Resistance::Infinite })
    }

    /// `R(x, S)` for every node `x`: the diagonal of the inverse of `L`
    /// grounded on `S`. Nodes in components without a node of `S` get
    /// `Infinite`.
    pub fn resistances_to_set(&self, set: &[usize]) -> Result<Vec<Resistance>> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("resistance needs a nonempty node set".into()));
        }
        let mut grounded = vec![false; self.ncomp];
        let mut slot = vec![usize::MAX; self.len()];
        for &v in set {
            grounded[self.comp[v]] = true;
            slot[v] = usize::MAX - 1;
        }
        let mut keep = Vec::new();
        for u in 0..self.len() {
            if slot[u] == usize::MAX && grounded[self.comp[u]] {
                slot[u] = keep.len();
                keep.push(u);
            }
        }
        for s in slot.iter_mut() {
            if *s == usize::MAX - 1 {
                *s = usize::MAX;
            }
        }
        let mut out: Vec<Resistance> = (0..self.len())
            .map(|u| if grounded[self.comp[u]] { Resistance::Finite(0.0) } else { Resistance::Infinite })
            .collect();
        if keep.is_empty() {
            return Ok(out);
        }
        let solver = SpdSolver::new(self.reduced(&keep, &slot))?;
        let m = keep.len();
        let diag: Vec<Result<f64>> = crate::par::map_range(m, |k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            Ok(solver.solve(&e)?[k])
        });
        for (k, d) in diag.into_iter().enumerate() {
            out[keep[k]] = Resistance::Finite(d?);
        }
        Ok(out)
    }

    fn grounded_solver(&self) -> Result<&(Vec<usize>, SpdSolver)> {
        if let Some(s) = self.grounded.get() {
            return Ok(s);
        }
        let mut seen = vec![false; self.ncomp];
        let mut slot = vec![usize::MAX; self.len()];
        let mut keep = Vec::new();
        for u in 0..self.len() {
            if !seen[self.comp[u]] {
                // first node of each component is the ground
                seen[self.comp[u]] = true;
                continue;
            }
            slot[u] = keep.len();
            keep.push(u);
        }
        let solver = SpdSolver::new(self.reduced(&keep, &slot))?;
        let _ = self.grounded.set((keep, solver));
        Ok(self.grounded.get().expect("set above"))
    }

    /// `x` with `L x = a` and mean zero on each component.
    pub fn grounded_solve(&self, a: &[f64]) -> Result<CellFunction> {
        self.check(a)?;
        let mut sums = vec![0.0; self.ncomp];
        let mut mags = vec![0.0; self.ncomp];
        for (u, v) in a.iter().enumerate() {
            sums[self.comp[u]] += v;
            mags[self.comp[u]] += v.abs();
        }
        for c in 0..self.ncomp {
            if sums[c].abs() > 1e-10 * mags[c].max(1.0) {
                return Err(Error::NotMeanZero(sums[c]));
            }
        }
        let (keep, solver) = self.grounded_solver()?;
        let rhs: Vec<f64> = keep.iter().map(|&u| a[u]).collect();
        let sol = solver.solve(&rhs)?;
        let mut x = vec![0.0; self.len()];
        for (k, &u) in keep.iter().enumerate() {
            x[u] = sol[k];
        }
        let mut mean = vec![0.0; self.ncomp];
        let mut count = vec![0usize; self.ncomp];
        for u in 0..self.len() {
            mean[self.comp[u]] += x[u];
            count[self.comp[u]] += 1;
        }
        for u in 0..self.len() {
            x[u] -= mean[self.comp[u]] / count[self.comp[u]] as f64;
        }
        Ok(CellFunction::new(x, Provenance::Harmonic))
    }
}

/// `max f − min f` over `nodes`.
pub fn oscillation(f: &[f64], nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("oscillation over an empty set".into()));
    }
    let (lo, hi) = nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(f[i]), hi.max(f[i])));
    Ok(hi - lo)
}

fn check_levels(coarse: &PartitionLevel, fine: &PartitionLevel) -> Result<()> {
    if fine.n < coarse.n {
        return Err(Error::InvalidFunction(format!("level {} is coarser than {}", fine.n, coarse.n)));
    }
    let covered: usize = coarse.cells.iter().map(|c| fine.prefix_range(&c.word).len()).sum();
    if covered != fine.len() {
        return Err(Error::InvalidFunction("partitions are not nested".into()));
    }
    Ok(())
}

/// `μ`-weighted average of `f` over each coarse cell's descendants.
pub fn coarsen(dh: f64, fine: &PartitionLevel, f: &[f64], coarse: &PartitionLevel) -> Result<CellFunction> {
    if f.len() != fine.len() {
        return Err(Error::InvalidFunction(format!("{} values for {} cells", f.len(), fine.len())));
    }
    check_levels(coarse, fine)?;
    let values = coarse
        .cells
        .iter()
        .map(|c| {
            let r = fine.prefix_range(&c.word);
            let (mut s, mut w) = (0.0, 0.0);
            for i in r {
                let mu = fine.cells[i].rho.powf(dh);
                s += mu * f[i];
                w += mu;
            }
            s / w
        })
        .collect();
    Ok(CellFunction::new(values, Provenance::Projected))
}

/// Piecewise-constant lift of `f` from `coarse` to `fine`.
pub fn refine(coarse: &PartitionLevel, f: &[f64], fine: &PartitionLevel) -> Result<CellFunction> {
    if f.len() != coarse.len() {
        return Err(Error::InvalidFunction(format!("{} values for {} cells", f.len(), coarse.len())));
    }
    check_levels(coarse, fine)?;
    let mut values = vec![0.0; fine.len()];
    for (k, c) in coarse.cells.iter().enumerate() {
        for i in fine.prefix_range(&c.word) {
            values[i] = f[k];
        }
    }
    Ok(CellFunction::new(values, Provenance::Projected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_examples() {
        let g = GraphForm::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(g.energy(&[0.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(g.energy(&[5.0; 3]).unwrap(), 0.0);
        let h = g.harmonic_solve(&[Some(0.0), None, Some(1.0)]).unwrap();
        assert!((h[1] - 0.5).abs() < 1e-14);
        assert!((g.effective_resistance(&[0], &[2]).unwrap().finite().unwrap() - 2.0).abs() < 1e-12);
        let x = g.grounded_solve(&[1.0, 0.0, -1.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(g.grounded_solve(&[1.0, 0.0, 0.0]), Err(Error::NotMeanZero(_))));
    }

    #[test]
    fn cycle_and_components() {
        let g = GraphForm::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((g.effective_resistance(&[0], &[2]).unwrap().finite().unwrap() - 1.0).abs() < 1e-12);
        let h = GraphForm::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(h.effective_resistance(&[0], &[2]).unwrap(), Resistance::Infinite);
        assert!(matches!(h.harmonic_solve(&[Some(0.0), None, None, None]), Err(Error::UngroundedComponent(1))));
        assert_eq!(h.effective_resistance(&[0, 1], &[1]).unwrap(), Resistance::Finite(0.0));
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillation(&[0.0, 1.0, 2.0], &[0, 1, 2]).unwrap(), 2.0);
        assert!(oscillation(&[1.0], &[]).is_err());
    }
}
