//! Adjacency graphs on families of cells.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::carpet::{Carpet, CellContact};
use crate::cellgraph::partition::{Cell, PartitionLevel, Word};
use crate::error::{Error, Result};
use crate::geometry::{contact_classify, contact_classify_int, ContactKind, IntFrame, PolygonImage};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Segment,
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    /// Point contact whose membership in `K` stayed undecided.
    pub flagged: bool,
}

/// Graph on a family of cells, edges between cells whose attractor pieces
/// meet. Nodes are in lexicographic word order.
#[derive(Clone, Debug)]
pub struct CellGraph {
    pub level: Option<usize>,
    pub cells: Vec<Cell>,
    pub index: HashMap<Word, usize>,
    pub edges: Vec<Edge>,
    /// `μ_w = ρ_w^{d_H}`.
    pub mu: Vec<f64>,
    adj_start: Vec<usize>,
    adj: Vec<usize>,
}

struct Polys {
    float: Vec<PolygonImage>,
    int: Option<(Vec<Vec<[i128; 2]>>, i128)>,
}

fn polygons(carpet: &Carpet, cells: &[Cell]) -> Polys {
    let float: Vec<PolygonImage> = par::map(cells, |c| c.polygon(carpet));
    let int = if float.iter().all(|p| p.exact.is_some()) {
        IntFrame::for_points(float.iter().flat_map(|p| p.exact.as_ref().unwrap().iter())).and_then(|fr| {
            let v: Option<Vec<Vec<[i128; 2]>>> =
                float.iter().map(|p| p.exact.as_ref().unwrap().iter().map(|q| fr.to_int(q)).collect()).collect();
            v.map(|v| (v, fr.denom))
        })
    } else {
        None
    };
    Polys { float, int }
}

impl Polys {
    fn classify(&self, i: usize, j: usize, tol: f64) -> ContactKind {
        match &self.int {
            Some((v, d)) => contact_classify_int(&v[i], &v[j], *d),
            None => contact_classify(&self.float[i], &self.float[j], tol),
        }
    }
}

/// Candidate pairs `(i, j)`, `i < j`, whose bounding boxes come within `tol`,
/// found with a uniform spatial hash.
pub fn candidate_pairs(boxes: &[([f64; 2], [f64; 2])], bucket: f64, tol: f64) -> Vec<(usize, usize)> {
    let key = |x: f64| (x / bucket).floor() as i64;
    let ranges: Vec<[i64; 4]> =
        boxes.iter().map(|(lo, hi)| [key(lo[0] - tol), key(hi[0] + tol), key(lo[1] - tol), key(hi[1] + tol)]).collect();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, r) in ranges.iter().enumerate() {
        for bx in r[0]..=r[1] {
            for by in r[2]..=r[3] {
                buckets.entry((bx, by)).or_default().push(i);
            }
        }
    }
    let mut keys: Vec<(i64, i64)> = buckets.keys().copied().collect();
    keys.sort_unstable();
    let per_bucket: Vec<Vec<(usize, usize)>> = par::map(&keys, |k| {
        let members = &buckets[k];
        let mut out = Vec::new();
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let (ri, rj) = (&ranges[i], &ranges[j]);
                // Visit each pair only in the lowest bucket the two share.
                if (ri[0].max(rj[0]), ri[2].max(rj[2])) != *k {
                    continue;
                }
                let (bi, bj) = (&boxes[i], &boxes[j]);
                if bi.0[0] > bj.1[0] + tol
                    || bj.0[0] > bi.1[0] + tol
                    || bi.0[1] > bj.1[1] + tol
                    || bj.0[1] > bi.1[1] + tol
                {
                    continue;
                }
                out.push((i.min(j), i.max(j)));
            }
        }
        out
    });
    let mut pairs: Vec<(usize, usize)> = per_bucket.into_iter().flatten().collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

impl CellGraph {
    /// Build the graph on `cells` (sorted here). Overlapping polygons are an
    /// open-set-condition violation.
    pub fn build(carpet: &Carpet, mut cells: Vec<Cell>, level: Option<usize>) -> Result<CellGraph> {
        cells.sort_by(|a, b| a.word.cmp(&b.word));
        let polys = polygons(carpet, &cells);
        let rho_min = cells.iter().map(|c| c.rho).fold(f64::INFINITY, f64::min);
        let rho_max = cells.iter().map(|c| c.rho).fold(0.0, f64::max);
        let tol = carpet.tol_at(rho_min);
        let boxes: Vec<_> = polys.float.iter().map(|p| p.bbox()).collect();
        let bucket = (rho_max * carpet.spec.frame.diam()).max(1e-300);
        let pairs = candidate_pairs(&boxes, bucket, tol);
        let classified: Vec<Result<Option<Edge>>> = par::map(&pairs, |&(i, j)| {
            let c = polys.classify(i, j, tol);
            if let ContactKind::Overlap = c {
                return Err(Error::InvalidSpec(format!(
                    "open set condition violated: cells {} and {} overlap",
                    cells[i].word, cells[j].word
                )));
            }
            Ok(match carpet.cell_contact(&cells[i], &cells[j], &c) {
                CellContact::None => None,
                CellContact::Segment => Some(Edge { a: i, b: j, kind: EdgeKind::Segment, flagged: false }),
                CellContact::Point { flagged } => Some(Edge { a: i, b: j, kind: EdgeKind::Point, flagged }),
            })
        });
        let mut edges = Vec::new();
        for e in classified {
            if let Some(e) = e? {
                edges.push(e);
            }
        }
        let mu = cells.iter().map(|c| c.rho.powf(carpet.dh)).collect();
        Ok(Self::assemble(level, cells, edges, mu))
    }

    pub fn from_partition(carpet: &Carpet, p: &PartitionLevel) -> Result<CellGraph> {
        Self::build(carpet, p.cells.clone(), Some(p.n))
    }

    /// Graph with explicit edges (used for synthetic networks).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> CellGraph {
        let cells = (0..n).map(|i| Cell { word: Word::from_slice(&[i]), ..Cell::root() }).collect::<Vec<_>>();
        let mut es: Vec<Edge> = edges
            .iter()
            .map(|&(a, b)| Edge { a: a.min(b), b: a.max(b), kind: EdgeKind::Segment, flagged: false })
            .collect();
        es.sort_by_key(|e| (e.a, e.b));
        es.dedup_by_key(|e| (e.a, e.b));
        Self::assemble(None, cells, es, vec![1.0; n])
    }

    fn assemble(level: Option<usize>, cells: Vec<Cell>, edges: Vec<Edge>, mu: Vec<f64>) -> CellGraph {
        let n = cells.len();
        let index = cells.iter().enumerate().map(|(i, c)| (c.word.clone(), i)).collect();
        let mut deg = vec![0usize; n + 1];
        for e in &edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        let mut adj_start = vec![0usize; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + deg[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![0usize; adj_start[n]];
        for e in &edges {
            adj[fill[e.a]] = e.b;
            fill[e.a] += 1;
            adj[fill[e.b]] = e.a;
            fill[e.b] += 1;
        }
        for i in 0..n {
            adj[adj_start[i]..adj_start[i + 1]].sort_unstable();
        }
        CellGraph { level, cells, index, edges, mu, adj_start, adj }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.adj_start[i]..self.adj_start[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj_start[i + 1] - self.adj_start[i]
    }

    pub fn node(&self, w: &Word) -> Result<usize> {
        self.index.get(w).copied().ok_or_else(|| Error::InvalidWord(w.to_string()))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn edge_kind(&self, a: usize, b: usize) -> Option<EdgeKind> {
        let (a, b) = (a.min(b), a.max(b));
        self.edges.binary_search_by_key(&(a, b), |e| (e.a, e.b)).ok().map(|k| self.edges[k].kind)
    }

    /// BFS distances from a set of sources (`usize::MAX` if unreachable).
    pub fn bfs(&self, sources: &[usize]) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.len()];
        let mut q = VecDeque::new();
        for &s in sources {
            if d[s] != 0 {
                d[s] = 0;
                q.push_back(s);
            }
        }
        while let Some(u) = q.pop_front() {
            for &v in self.neighbors(u) {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        d
    }

    pub fn distance(&self, w: &Word, v: &Word) -> Result<Option<usize>> {
        let (a, b) = (self.node(w)?, self.node(v)?);
        let d = self.bfs(&[a])[b];
        Ok((d != usize::MAX).then_some(d))
    }

    /// `N_k(w)` as sorted node indices.
    pub fn neighborhood(&self, w: usize, k: usize) -> Vec<usize> {
        self.bfs(&[w]).iter().enumerate().filter(|(_, &d)| d <= k).map(|(i, _)| i).collect()
    }

    /// `N_k(w)` by a BFS truncated at depth `k`, sorted.
    pub fn neighborhood_small(&self, w: usize, k: usize) -> Vec<usize> {
        let mut seen = vec![w];
        let mut frontier = vec![w];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in self.neighbors(u) {
                    if !seen.contains(&v) && !next.contains(&v) {
                        next.push(v);
                    }
                }
            }
            seen.extend(&next);
            frontier = next;
        }
        seen.sort_unstable();
        seen
    }

    /// Complement `N_k^c(w)`.
    pub fn neighborhood_complement(&self, w: usize, k: usize) -> Vec<usize> {
        self.bfs(&[w]).iter().enumerate().filter(|(_, &d)| d > k).map(|(i, _)| i).collect()
    }

    /// Component label per node, labels in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        for s in 0..self.len() {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = next;
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Whether the induced subgraph on `nodes` is connected.
    pub fn is_connected_on(&self, nodes: &[usize]) -> bool {
        if nodes.is_empty() {
            return true;
        }
        let mut inside = vec![false; self.len()];
        for &i in nodes {
            inside[i] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![nodes[0]];
        seen[nodes[0]] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if inside[v] && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == nodes.len()
    }

    /// Induced subgraph on `nodes` (kept in the given order).
    pub fn induced(&self, nodes: &[usize]) -> CellGraph {
        let mut pos = HashMap::with_capacity(nodes.len());
        for (k, &i) in nodes.iter().enumerate() {
            pos.insert(i, k);
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (pos.get(&e.a), pos.get(&e.b)) {
                edges.push(Edge { a: a.min(b), b: a.max(b), ..*e });
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let cells = nodes.iter().map(|&i| self.cells[i].clone()).collect();
        let mu = nodes.iter().map(|&i| self.mu[i]).collect();
        Self::assemble(self.level, cells, edges, mu)
    }

    /// Node indices whose word extends `prefix`.
    pub fn with_prefix(&self, prefix: &Word) -> Vec<usize> {
        let lo = self.cells.partition_point(|c| c.word < *prefix);
        (lo..self.len()).take_while(|&i| self.cells[i].word.starts_with(prefix)).collect()
    }

    /// `{"level", "nodes": [{"word", "rho", "mu"}], "edges": [{"a", "b", "kind"}]}`.
    pub fn export_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .cells
            .iter()
            .zip(&self.mu)
            .map(|(c, mu)| serde_json::json!({"word": c.word, "rho": c.rho, "mu": mu}))
            .collect();
        let edges: Vec<serde_json::Value> =
            self.edges.iter().map(|e| serde_json::json!({"a": e.a, "b": e.b, "kind": e.kind})).collect();
        serde_json::json!({"level": self.level, "nodes": nodes, "edges": edges})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::{hollow_square_carpet, sierpinski_carpet};
    use crate::cellgraph::partition::partition;

    #[test]
    fn sc_level_one() {
        let spec = sierpinski_carpet();
        let idx = |i, j| spec.grid_index(i, j, 3).unwrap();
        let (c00, c10, c22) = (idx(0, 0), idx(1, 0), idx(2, 2));
        let c = Carpet::new(spec.clone()).unwrap();
        let g = CellGraph::from_partition(&c, &partition(&c, 1, 100).unwrap()).unwrap();
        assert_eq!(g.edges.len(), 12);
        assert_eq!(g.edges.iter().filter(|e| e.kind == EdgeKind::Segment).count(), 8);
        let w = |i| Word::from_slice(&[i]);
        assert_eq!(g.degree(g.node(&w(c00)).unwrap()), 2);
        assert_eq!(g.distance(&w(c00), &w(c22)).unwrap(), Some(3));
        assert_eq!(g.neighborhood(g.node(&w(c10)).unwrap(), 1).len(), 5);
        assert!(g.is_connected());
    }

    #[test]
    fn hsc_connected() {
        let c = Carpet::new(hollow_square_carpet()).unwrap();
        for n in 1..3 {
            let g = CellGraph::from_partition(&c, &partition(&c, n, 1 << 20).unwrap()).unwrap();
            assert!(g.is_connected());
        }
    }
}
