//! Molecule ingestion: SMILES and SDF parsing, dataset loading and the
//! structural preprocessing filter applied before featurization.

mod dataset;
mod preprocess;
mod sdf;
mod smiles;

pub use dataset::{load_dataset, load_dataset_from_str, DatasetError, DatasetRecord, LoadedDataset};
pub use preprocess::{preprocess_filter, write_rejections, FilterOutcome, Rejection, Rule};
pub use sdf::{parse_sdf, write_sdf, SdfError, SdfRecord};
pub use smiles::{parse_smiles, write_smiles, SmilesError, SmilesErrorKind};

use crate::element::Element;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    /// Hydrogens attached without being represented as atoms.
    pub hydrogens: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

/// A neutral molecule with every bond resolved to a multiplicity in 1..=3.
#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub id: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MoleculeError {
    #[error("bond {0} joins an atom to itself")]
    SelfLoop(usize),
    #[error("bond {0} references atom {1} out of range")]
    OutOfRange(usize, usize),
    #[error("atoms {0} and {1} are bonded twice")]
    DuplicateBond(usize, usize),
    #[error("bond {0} has multiplicity {1}, expected 1..=3")]
    BadOrder(usize, u8),
    #[error("atom {index} ({element}) exceeds its valence cap: bond order {bonds} + {hydrogens} H")]
    Valence {
        index: usize,
        element: Element,
        bonds: u32,
        hydrogens: u8,
    },
}

impl Molecule {
    /// Builds a molecule, checking the bond and valence invariants.
    pub fn new(id: impl Into<String>, atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, MoleculeError> {
        let mol = Molecule {
            id: id.into(),
            atoms,
            bonds,
        };
        mol.check()?;
        Ok(mol)
    }

    pub fn check(&self) -> Result<(), MoleculeError> {
        let n = self.atoms.len();
        let mut seen = std::collections::HashSet::new();
        for (i, b) in self.bonds.iter().enumerate() {
            if b.a == b.b {
                return Err(MoleculeError::SelfLoop(i));
            }
            for end in [b.a, b.b] {
                if end >= n {
                    return Err(MoleculeError::OutOfRange(i, end));
                }
            }
            if !(1..=3).contains(&b.order) {
                return Err(MoleculeError::BadOrder(i, b.order));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(MoleculeError::DuplicateBond(b.a.min(b.b), b.a.max(b.b)));
            }
        }
        let sums = self.bond_order_sums();
        for (i, atom) in self.atoms.iter().enumerate() {
            let total = sums[i] + u32::from(atom.hydrogens);
            if total > u32::from(atom.element.max_valence()) {
                return Err(MoleculeError::Valence {
                    index: i,
                    element: atom.element,
                    bonds: sums[i],
                    hydrogens: atom.hydrogens,
                });
            }
        }
        Ok(())
    }

    pub fn bond_order_sums(&self) -> Vec<u32> {
        let mut sums = vec![0u32; self.atoms.len()];
        for b in &self.bonds {
            sums[b.a] += u32::from(b.order);
            sums[b.b] += u32::from(b.order);
        }
        sums
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
        adj
    }

    /// Number of connected components over all atoms (explicit H atoms included).
    pub fn component_count(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.atoms.len()];
        let mut count = 0;
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Total hydrogen count: attached hydrogens plus explicit H atoms.
    pub fn hydrogen_count(&self) -> usize {
        self.atoms
            .iter()
            .map(|a| usize::from(a.hydrogens) + usize::from(a.element == Element::H))
            .sum()
    }
}
