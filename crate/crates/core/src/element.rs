use std::fmt;
use std::str::FromStr;

/// Chemical elements accepted by the toolkit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 10] = [
        Element::H,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    /// Allowed valences in increasing order. The first entry is the standard one.
    pub fn valences(self) -> &'static [u8] {
        match self {
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::S => &[2, 4, 6],
            Element::P => &[3, 5],
            Element::H | Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    pub fn standard_valence(self) -> u8 {
        self.valences()[0]
    }

    pub fn max_valence(self) -> u8 {
        *self.valences().last().unwrap()
    }

    /// Smallest allowed valence that can hold `bond_order` (None when none can).
    pub fn fitting_valence(self, bond_order: u32) -> Option<u8> {
        self.valences()
            .iter()
            .copied()
            .find(|&v| u32::from(v) >= bond_order)
    }

    /// ⌊10 · atomic mass⌋, the integer mass unit used by the average-mass descriptor.
    pub fn mass_x10(self) -> u32 {
        match self {
            Element::H => 10,
            Element::C => 120,
            Element::N => 140,
            Element::O => 160,
            Element::F => 189,
            Element::P => 309,
            Element::S => 320,
            Element::Cl => 354,
            Element::Br => 799,
            Element::I => 1268,
        }
    }

    /// Elements that may be written as lowercase aromatic atoms in SMILES.
    pub fn aromatic_allowed(self) -> bool {
        matches!(self, Element::C | Element::N | Element::O | Element::S)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported element `{0}`")]
pub struct UnknownElement(pub String);

impl FromStr for Element {
    type Err = UnknownElement;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL
            .iter()
            .copied()
            .find(|e| e.symbol() == s)
            .ok_or_else(|| UnknownElement(s.to_string()))
    }
}
