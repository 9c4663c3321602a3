//! Inverse design: a topological specification plus a trained predictor is
//! compiled into a mixed-integer linear program. Solutions read back from an
//! external solver are decoded into chemical graphs and validated. A
//! brute-force enumerator serves as a reference for small instances.

mod decode;
mod enumerate;
mod lp;
mod milp;
mod solution;
mod spec;

pub use decode::{decode_graph, realize, validate_graph, validate_inferred, Check, ValidationReport};
pub use enumerate::{brute_force_enumerate, EnumerateOptions};
pub use lp::{emit_lp, parse_lp, LpConstraint, LpProblem};
pub use milp::{
    build_milp, BuildOptions, Constraint, HiddenUnit, InverseModel, LinExpr, MilpModel, ObjectiveSense, ReluEncoding,
    Role, Sense, Var, VarId, VarKind,
};
pub use solution::{encode_assignment, ingest_solution, write_assignment, Assignment};
pub use spec::{
    parse_spec, CatalogEntry, EdgeSlot, EdgeSlotKind, Layout, SeedEdge, SeedEdgeKind, SeedVertex, SlotKind,
    SpecBounds, TopologicalSpec, VertexSlot,
};

use crate::chemgraph::{ChemicalGraph, GraphError};
use crate::descriptors::FeatureVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InverseError {
    #[error("spec line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("descriptor `{name}` cannot be expressed: {reason}")]
    NotExpressible { name: String, reason: String },
    #[error("fringe tree `{id}` has height {height}, above rho = {rho}")]
    TallTree { id: String, height: usize, rho: usize },
    #[error("search space of {size} combinations exceeds the limit {limit}")]
    SearchSpace { size: f64, limit: f64 },
    #[error("LP line {line}: {msg}")]
    Lp { line: usize, msg: String },
    #[error("solution line {line}: {msg}")]
    Solution { line: usize, msg: String },
    #[error("solution is missing variable `{0}`")]
    MissingVariable(String),
    #[error("variable `{name}` = {value} violates its bounds or integrality")]
    BadValue { name: String, value: f64 },
    #[error("decoding failed: {0}")]
    Decode(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Structural choices that determine a graph: path length per typical edge,
/// catalog entry per vertex slot and multiplicity per edge slot (`None` for
/// inactive slots).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Choice {
    pub path_len: Vec<usize>,
    pub fringe: Vec<Option<usize>>,
    pub mult: Vec<Option<u8>>,
}

/// A decoded graph with its recomputed descriptors and prediction.
#[derive(Clone, Debug)]
pub struct InferredGraph {
    pub graph: ChemicalGraph,
    pub features: FeatureVector,
    pub predicted: f64,
    pub choice: Choice,
}
