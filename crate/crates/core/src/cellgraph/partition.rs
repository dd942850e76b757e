//! Words, cells and the ratio-balanced partitions `Λ_n`.

use std::collections::HashMap;
use std::fmt;

use num_traits::{CheckedMul, One};
use serde::Serialize;

use crate::carpet::Carpet;
use crate::error::{Error, Result};
use crate::geometry::{Affine, PolygonImage, Q};

pub type Letter = u16;

/// Finite word over the map indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_slice(letters: &[usize]) -> Self {
        Word(letters.iter().map(|&l| l as Letter).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: usize) -> Word {
        let mut v = self.0.clone();
        v.push(letter as Letter);
        Word(v)
    }

    /// `σ(w)`: drop the last letter.
    pub fn parent(&self) -> Word {
        let mut v = self.0.clone();
        v.pop();
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// `prefix^{-1} self`, assuming `self` starts with `prefix`.
    pub fn strip(&self, prefix: &Word) -> Word {
        Word(self.0[prefix.len()..].to_vec())
    }

    pub fn letters(&self) -> Vec<usize> {
        self.0.iter().map(|&l| l as usize).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        write!(f, "(")?;
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A word together with its ratio and map `Ψ_w`.
#[derive(Clone, Debug)]
pub struct Cell {
    pub word: Word,
    pub rho: f64,
    pub rho_q: Option<Q>,
    pub map: Affine,
}

impl Cell {
    pub fn root() -> Self {
        Cell { word: Word::empty(), rho: 1.0, rho_q: Some(Q::one()), map: Affine::identity() }
    }

    pub fn child(&self, carpet: &Carpet, letter: usize) -> Cell {
        let m = &carpet.spec.maps[letter];
        let rho_q = match (self.rho_q, m.ratio.exact) {
            (Some(a), Some(b)) => a.checked_mul(&b),
            _ => None,
        };
        Cell {
            word: self.word.child(letter),
            rho: self.rho * m.ratio.value,
            rho_q,
            map: self.map.then_inner(&carpet.affines[letter]),
        }
    }

    pub fn polygon(&self, carpet: &Carpet) -> PolygonImage {
        carpet.spec.frame.image(&self.map)
    }
}

/// Ratio threshold `t`; a word stops expanding once `ρ_w <= t`.
#[derive(Clone, Copy, Debug)]
pub struct Threshold {
    pub f: f64,
    pub q: Option<Q>,
}

impl Threshold {
    /// `ρ_*^n`.
    pub fn level(carpet: &Carpet, n: usize) -> Threshold {
        let q = carpet.rho_min_q.and_then(|r| {
            let mut acc = Q::one();
            for _ in 0..n {
                acc = acc.checked_mul(&r)?;
            }
            Some(acc)
        });
        Threshold { f: carpet.rho_min.powi(n as i32), q }
    }

    /// Threshold relative to a prefix of ratio `rho`: `t / ρ_w`.
    pub fn relative(&self, cell: &Cell) -> Threshold {
        let q = match (self.q, cell.rho_q) {
            (Some(t), Some(r)) => Some(t / r),
            _ => None,
        };
        Threshold { f: self.f / cell.rho, q }
    }

    pub fn reached(&self, cell: &Cell) -> bool {
        match (self.q, cell.rho_q) {
            (Some(t), Some(r)) => r <= t,
            _ => cell.rho <= self.f * (1.0 + 1e-12),
        }
    }
}

/// All descendants `u` of `root` with `ρ_{root·u} <= t < ρ_{root·σ(u)}`,
/// in lexicographic order. Fails once more than `budget` cells are produced.
pub fn expand(carpet: &Carpet, root: &Cell, t: Threshold, budget: usize) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    let mut stack = vec![root.clone()];
    while let Some(c) = stack.pop() {
        if t.reached(&c) {
            out.push(c);
            if out.len() > budget {
                let est = out.len() as f64;
                return Err(Error::BudgetExceeded { level: 0, estimate: est, budget });
            }
        } else {
            for l in (0..carpet.spec.n()).rev() {
                stack.push(c.child(carpet, l));
            }
        }
    }
    Ok(out)
}

/// `Λ_n` materialized as a lexicographically sorted cell list.
#[derive(Clone, Debug)]
pub struct PartitionLevel {
    pub n: usize,
    pub cells: Vec<Cell>,
    pub index: HashMap<Word, usize>,
}

impl PartitionLevel {
    pub fn from_cells(n: usize, cells: Vec<Cell>) -> Self {
        let index = cells.iter().enumerate().map(|(i, c)| (c.word.clone(), i)).collect();
        PartitionLevel { n, cells, index }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn words(&self) -> Vec<Word> {
        self.cells.iter().map(|c| c.word.clone()).collect()
    }

    pub fn get(&self, w: &Word) -> Option<&Cell> {
        self.index.get(w).map(|&i| &self.cells[i])
    }

    /// Index range of the cells extending `prefix`.
    pub fn prefix_range(&self, prefix: &Word) -> std::ops::Range<usize> {
        let lo = self.cells.partition_point(|c| c.word < *prefix);
        let hi = lo + self.cells[lo..].partition_point(|c| c.word.starts_with(prefix));
        lo..hi
    }
}

/// Estimate `ρ_*^{-n d_H}` of `#Λ_n` (the count lies within a factor
/// `ρ_*^{-d_H}` of it).
pub fn count_estimate(carpet: &Carpet, n: usize) -> f64 {
    carpet.rho_min.powf(-(n as f64) * carpet.dh)
}

/// `Λ_n` by trie expansion from the empty word.
pub fn partition(carpet: &Carpet, n: usize, budget: usize) -> Result<PartitionLevel> {
    let est = count_estimate(carpet, n);
    let cells = expand(carpet, &Cell::root(), Threshold::level(carpet, n), budget).map_err(|e| match e {
        Error::BudgetExceeded { budget, .. } => Error::BudgetExceeded { level: n, estimate: est, budget },
        e => e,
    })?;
    Ok(PartitionLevel::from_cells(n, cells))
}

/// The level `n` with `w ∈ Λ_n`, if any.
pub fn level_of(carpet: &Carpet, w: &Word) -> Option<usize> {
    let cell = carpet.cell(w);
    let parent = carpet.cell(&w.parent());
    if w.is_empty() {
        return Some(0);
    }
    let guess = (cell.rho.ln() / carpet.rho_min.ln()).floor().max(0.0) as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&n| {
        let t = Threshold::level(carpet, n);
        t.reached(&cell) && !t.reached(&parent)
    })
}

/// `B_m(w) = w·(w^{-1}Λ_{n+m})` for `w ∈ Λ_n`.
pub fn cells_of(carpet: &Carpet, w: &Word, m: usize, budget: usize) -> Result<(usize, Vec<Cell>)> {
    let n = level_of(carpet, w).ok_or_else(|| Error::InvalidWord(w.to_string()))?;
    let cell = carpet.cell(w);
    let out = expand(carpet, &cell, Threshold::level(carpet, n + m), budget)?;
    Ok((n, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::spec::{hollow_square_carpet, sierpinski_carpet};
    use crate::geometry::{regular_polygon, Real, Similarity};

    #[test]
    fn sc_counts() {
        let c = Carpet::new(sierpinski_carpet()).unwrap();
        for n in 0..4 {
            assert_eq!(partition(&c, n, 1 << 20).unwrap().len(), 8usize.pow(n as u32));
        }
    }

    #[test]
    fn hsc_level_one() {
        let c = Carpet::new(hollow_square_carpet()).unwrap();
        assert_eq!(partition(&c, 1, 1 << 20).unwrap().len(), 56);
    }

    #[test]
    fn two_ratio_example() {
        // a = map 0 at ratio 1/2, b = maps 1..3 at ratio 1/4 (four maps are
        // needed for a valid square carpet)
        let frame = regular_polygon(4).unwrap();
        let z = Real::ratio(0, 1);
        let q = Real::ratio(3, 4);
        let spec = crate::carpet::spec::CarpetSpec {
            name: None,
            frame,
            maps: vec![
                Similarity::new(Real::ratio(1, 2), 1, [z, z]),
                Similarity::new(Real::ratio(1, 4), 1, [q, z]),
                Similarity::new(Real::ratio(1, 4), 1, [q, q]),
                Similarity::new(Real::ratio(1, 4), 1, [z, q]),
            ],
            corner_labels: Default::default(),
            declared: Default::default(),
        };
        let c = Carpet::new(spec).unwrap();
        let words = partition(&c, 1, 100).unwrap().words();
        assert!(words.contains(&Word::from_slice(&[1])));
        assert!(words.contains(&Word::from_slice(&[0, 0])));
        assert!(words.contains(&Word::from_slice(&[0, 1])));
        assert!(!words.iter().any(|w| w.starts_with(&Word::from_slice(&[1])) && w.len() > 1));
        assert_eq!(words.len(), 7);
    }

    #[test]
    fn prefix_ranges_and_levels() {
        let c = Carpet::new(hollow_square_carpet()).unwrap();
        let p = partition(&c, 2, 1 << 20).unwrap();
        let w = Word::from_slice(&[4]);
        let r = p.prefix_range(&w);
        assert!(r.len() > 0);
        assert!(p.cells[r.clone()].iter().all(|x| x.word.starts_with(&w)));
        assert_eq!(level_of(&c, &w), Some(1));
        assert_eq!(level_of(&c, &Word::from_slice(&[0])), None);
        assert_eq!(level_of(&c, &Word::from_slice(&[0, 0])), Some(1));
        let (n, b) = cells_of(&c, &w, 1, 1000).unwrap();
        assert_eq!(n, 1);
        assert_eq!(b.len(), p.prefix_range(&w).len());
        assert!(matches!(partition(&c, 3, 10), Err(Error::BudgetExceeded { level: 3, .. })));
    }
}
