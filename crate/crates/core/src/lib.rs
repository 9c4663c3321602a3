//! Graph-theoretic descriptors, regression models and MILP-based inverse
//! design for aqueous solubility.

pub mod chemgraph;
pub mod chemio;
pub mod element;
pub mod inverse;
pub mod descriptors;
pub mod learn;
pub mod select;
