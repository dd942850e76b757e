//! Explicit low-energy functions on cell graphs, each carrying an energy
//! certificate.
//!
//! Half-side and corner bumps cover perfect carpets, the partition of unity
//! transfers energy between levels, and the linear-boundary extension with
//! its L1 bumps and the separator bump covers hollow bordered carpets.
//! Triangle-specific helpers live in [`triangle`].

pub mod bump;
pub mod linear;
pub mod separator;
pub mod triangle;
pub mod unity;

pub use bump::{corner_bump, halfside_bump, rotate_values, CornerBump, HalfsideBump};
pub use linear::{AffineFn, AlgorithmTrace, LinearBasis, LinearBuilder, ThetaOrder};
pub use separator::{l1_bump, separator_bump, SeparatorBump};
pub use triangle::{subsegment_function, triangle_patch, PatchCase, TrianglePatch};
pub use unity::{partition_of_unity, PartitionOfUnity};

use std::collections::HashMap;

use serde::Serialize;

use crate::carpet::Carpet;
use crate::cellgraph::{Cell, CellGraph, Word};
use crate::energy::{CellFunction, GraphForm, Provenance};
use crate::error::{Error, Result};

/// Tolerance for recomputed energies and for inequality constraints.
pub const ENERGY_TOL: f64 = 1e-10;
/// Two Dirichlet values for one node closer than this are the same value.
const ASSIGN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Equal,
    AtLeast,
    Zero,
    Range,
}

/// One boundary or range constraint, checked node by node.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub kind: ConstraintKind,
    pub nodes: usize,
    pub max_violation: f64,
}

impl ConstraintCheck {
    /// Equalities must hold exactly; inequalities up to `ENERGY_TOL`.
    pub fn holds(&self) -> bool {
        match self.kind {
            ConstraintKind::Equal | ConstraintKind::Zero => self.max_violation == 0.0,
            ConstraintKind::AtLeast | ConstraintKind::Range => self.max_violation <= ENERGY_TOL,
        }
    }
}

/// A scalar inequality `lhs ≤ rhs` recorded with the certificate.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Which constant the energy is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Sigma,
    Resistance,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyCertificate {
    pub energy: f64,
    pub reference: Option<f64>,
    pub reference_kind: Option<ReferenceKind>,
    /// `energy · reference`.
    pub ratio: Option<f64>,
    /// Largest violation over the equality constraints.
    pub residual: f64,
    pub constraints: Vec<ConstraintCheck>,
    pub bounds: Vec<BoundCheck>,
    pub notes: Vec<String>,
}

/// Values on a list of cells, the edges of their graph, and the
/// certificate.
#[derive(Clone, Debug)]
pub struct CertifiedFunction {
    /// Partition level of the words (relative domains use the level of
    /// the absolute cells they stand for).
    pub level: usize,
    pub words: Vec<Word>,
    pub values: CellFunction,
    pub edges: Vec<(usize, usize)>,
    pub certificate: EnergyCertificate,
}

impl CertifiedFunction {
    pub(crate) fn new(
        level: usize,
        words: Vec<Word>,
        values: Vec<f64>,
        provenance: Provenance,
        edges: Vec<(usize, usize)>,
        constraints: Vec<ConstraintCheck>,
    ) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite value in a constructed function".into()));
        }
        let energy = GraphForm::from_edges(values.len(), &edges).energy(&values)?;
        let residual = constraints
            .iter()
            .filter(|c| matches!(c.kind, ConstraintKind::Equal | ConstraintKind::Zero))
            .map(|c| c.max_violation)
            .fold(0.0, f64::max);
        Ok(CertifiedFunction {
            level,
            words,
            values: CellFunction::new(values, provenance),
            edges,
            certificate: EnergyCertificate {
                energy,
                reference: None,
                reference_kind: None,
                ratio: None,
                residual,
                constraints,
                bounds: Vec::new(),
                notes: Vec::new(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.certificate.energy
    }

    /// Energy recomputed from the stored values and edges.
    pub fn recompute_energy(&self) -> Result<f64> {
        GraphForm::from_edges(self.len(), &self.edges).energy(&self.values)
    }

    pub fn index(&self) -> HashMap<&Word, usize> {
        self.words.iter().enumerate().map(|(i, w)| (w, i)).collect()
    }

    pub fn value(&self, w: &Word) -> Option<f64> {
        self.words.iter().position(|x| x == w).map(|i| self.values[i])
    }

    /// Attach `σ_m` or `R_m`.
    pub fn with_reference(mut self, kind: ReferenceKind, value: f64) -> Self {
        self.certificate.reference = Some(value);
        self.certificate.reference_kind = Some(kind);
        self.certificate.ratio = Some(self.certificate.energy * value);
        self
    }

    pub fn push_bound(&mut self, name: &str, lhs: f64, rhs: f64) {
        let holds = lhs <= rhs * (1.0 + ENERGY_TOL) + ENERGY_TOL;
        self.certificate.bounds.push(BoundCheck { name: name.into(), lhs, rhs, holds });
    }

    pub fn constraints_hold(&self) -> bool {
        self.certificate.constraints.iter().all(|c| c.holds())
    }

    pub fn bounds_hold(&self) -> bool {
        self.certificate.bounds.iter().all(|b| b.holds)
    }

    /// Values clamped to `[0, 1]`.
    pub fn clamped(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    /// The export document.
    pub fn export_json(&self) -> serde_json::Value {
        let values: Vec<serde_json::Value> =
            self.words.iter().zip(self.values.iter()).map(|(w, v)| serde_json::json!({"word": w, "v": v})).collect();
        serde_json::json!({
            "level": self.level,
            "values": values,
            "certificate": {
                "energy": self.certificate.energy,
                "reference": self.certificate.reference,
                "ratio": self.certificate.ratio,
            },
        })
    }
}

/// Builds constraint checks against one value vector.
pub(crate) struct Checks<'a> {
    values: &'a [f64],
    out: Vec<ConstraintCheck>,
}

impl<'a> Checks<'a> {
    pub(crate) fn new(values: &'a [f64]) -> Self {
        Checks { values, out: Vec::new() }
    }

    pub(crate) fn equal(&mut self, name: &str, nodes: &[usize], target: impl Fn(usize) -> f64) -> &mut Self {
        let v = nodes.iter().map(|&i| (self.values[i] - target(i)).abs()).fold(0.0, f64::max);
        self.push(name, ConstraintKind::Equal, nodes.len(), v)
    }

    pub(crate) fn at_least(&mut self, name: &str, nodes: &[usize], bound: f64) -> &mut Self {
        let v = nodes.iter().map(|&i| (bound - self.values[i]).max(0.0)).fold(0.0, f64::max);
        self.push(name, ConstraintKind::AtLeast, nodes.len(), v)
    }

    pub(crate) fn zero(&mut self, name: &str, nodes: &[usize]) -> &mut Self {
        let v = nodes.iter().map(|&i| self.values[i].abs()).fold(0.0, f64::max);
        self.push(name, ConstraintKind::Zero, nodes.len(), v)
    }

    pub(crate) fn range(&mut self, name: &str, lo: f64, hi: f64) -> &mut Self {
        let v = self.values.iter().map(|&x| (lo - x).max(x - hi).max(0.0)).fold(0.0, f64::max);
        self.push(name, ConstraintKind::Range, self.values.len(), v)
    }

    fn push(&mut self, name: &str, kind: ConstraintKind, nodes: usize, max_violation: f64) -> &mut Self {
        self.out.push(ConstraintCheck { name: name.into(), kind, nodes, max_violation });
        self
    }

    pub(crate) fn finish(&mut self) -> Vec<ConstraintCheck> {
        std::mem::take(&mut self.out)
    }
}

/// A materialized list of cells with its graph and form.
pub(crate) struct Domain {
    pub graph: CellGraph,
    pub form: GraphForm,
}

impl Domain {
    pub(crate) fn build(carpet: &Carpet, cells: Vec<Cell>) -> Result<Domain> {
        let graph = CellGraph::build(carpet, cells, None)?;
        let form = GraphForm::from_graph(&graph);
        Ok(Domain { graph, form })
    }

    pub(crate) fn len(&self) -> usize {
        self.graph.len()
    }

    pub(crate) fn cells(&self) -> &[Cell] {
        &self.graph.cells
    }

    pub(crate) fn edges(&self) -> Vec<(usize, usize)> {
        self.graph.edges.iter().map(|e| (e.a, e.b)).collect()
    }

    pub(crate) fn words(&self) -> Vec<Word> {
        self.graph.cells.iter().map(|c| c.word.clone()).collect()
    }
}

/// Set Dirichlet data, failing when a node receives two different values.
pub(crate) fn assign(data: &mut [Option<f64>], nodes: &[usize], value: f64, what: &str) -> Result<()> {
    for &i in nodes {
        match data[i] {
            Some(old) if (old - value).abs() > ASSIGN_TOL => {
                return Err(Error::PreconditionFailed(format!(
                    "{what}: node {i} is constrained to both {old} and {value}; the partition is too coarse"
                )));
            }
            Some(_) => {}
            None => data[i] = Some(value),
        }
    }
    Ok(())
}

/// All ratios equal, as in a perfect carpet.
pub(crate) fn require_equal_ratios(carpet: &Carpet) -> Result<()> {
    if (carpet.rho_max - carpet.rho_min).abs() > 1e-12 {
        return Err(Error::PreconditionFailed("construction needs a perfect carpet (equal ratios)".into()));
    }
    Ok(())
}

/// Index of the Λ_n ancestor of each word, via a prefix lookup.
pub(crate) fn ancestors(fine: &[Word], coarse: &HashMap<Word, usize>) -> Result<Vec<usize>> {
    fine.iter()
        .map(|w| {
            (0..=w.len())
                .find_map(|k| coarse.get(&Word(w.0[..k].to_vec())).copied())
                .ok_or_else(|| Error::InvalidWord(w.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conflicting_data_is_rejected() {
        let mut d = vec![None; 3];
        assign(&mut d, &[0, 1], 1.0, "a").unwrap();
        assign(&mut d, &[1], 1.0, "b").unwrap();
        assert!(matches!(assign(&mut d, &[1, 2], 0.0, "c"), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn certificate_on_a_path() {
        let edges = vec![(0, 1), (1, 2)];
        let words = (0..3).map(|i| Word::from_slice(&[i])).collect();
        let v = vec![1.0, 0.5, 0.0];
        let c = Checks::new(&v).equal("end", &[0], |_| 1.0).zero("other", &[2]).range("unit", 0.0, 1.0).finish();
        let f = CertifiedFunction::new(1, words, v, Provenance::Constructed, edges, c).unwrap();
        assert_eq!(f.energy(), 0.5);
        assert_eq!(f.certificate.residual, 0.0);
        assert!(f.constraints_hold());
        let f = f.with_reference(ReferenceKind::Sigma, 2.0);
        assert_eq!(f.certificate.ratio, Some(1.0));
        let doc = f.export_json();
        assert_eq!(doc["values"][1]["word"], serde_json::json!([1]));
    }
}
