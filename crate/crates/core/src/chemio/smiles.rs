use std::collections::HashMap;

use super::{Atom, Bond, Molecule, MoleculeError};
use crate::element::Element;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SMILES error at position {position}: {kind}")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmilesErrorKind {
    #[error("unexpected character `{0}`")]
    Unexpected(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unsupported element `{0}`")]
    UnsupportedElement(String),
    #[error("unsupported feature: {0}")]
    Unsupported(&'static str),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("ring closure {0} left open")]
    OpenRing(u32),
    #[error("conflicting bond symbols on ring closure {0}")]
    RingBondConflict(u32),
    #[error("bond without a preceding atom")]
    DanglingBond,
    #[error("kekulization failed: aromatic system has no perfect matching")]
    Kekulization,
    #[error("valence violation on atom {0}")]
    Valence(usize),
    #[error(transparent)]
    Molecule(MoleculeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondKind {
    fn sigma(self) -> u32 {
        match self {
            BondKind::Single | BondKind::Aromatic => 1,
            BondKind::Double => 2,
            BondKind::Triple => 3,
        }
    }
}

struct RawAtom {
    element: Element,
    aromatic: bool,
    bracket_h: Option<u8>,
    position: usize,
}

struct RawBond {
    a: usize,
    b: usize,
    kind: Option<BondKind>,
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
}

fn err(position: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { position, kind }
}

/// Parses a SMILES string into a kekulized molecule with implicit hydrogens filled.
///
/// Supported: organic-subset and bracket atoms (no charges or isotopes), branches,
/// ring closures (`0`-`9`, `%nn`), bonds `- = # :`, aromatic `c n o s`, and `.`.
/// Stereo marks (`@`, `/`, `\`) are accepted and dropped.
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    let mut parser = Parser {
        chars: text.trim().chars().collect(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    };
    parser.parse()?;
    parser.finish(text.trim())
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondKind, usize)> = None;
        let mut explicit_single = false;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut rings: HashMap<u32, (usize, Option<BondKind>, usize)> = HashMap::new();

        if self.chars.is_empty() {
            return Err(err(0, SmilesErrorKind::UnexpectedEnd));
        }
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                '(' => {
                    if prev.is_none() {
                        return Err(err(start, SmilesErrorKind::Unexpected(c)));
                    }
                    branches.push((prev, start));
                    self.pos += 1;
                }
                ')' => {
                    let (p, _) = branches
                        .pop()
                        .ok_or_else(|| err(start, SmilesErrorKind::Unbalanced))?;
                    if pending.is_some() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    prev = p;
                    self.pos += 1;
                }
                '-' | '=' | '#' | ':' | '/' | '\\' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    let kind = match c {
                        '=' => BondKind::Double,
                        '#' => BondKind::Triple,
                        ':' => BondKind::Aromatic,
                        _ => BondKind::Single,
                    };
                    explicit_single = c == '-';
                    pending = Some((kind, start));
                    self.pos += 1;
                }
                '$' => return Err(err(start, SmilesErrorKind::Unsupported("quadruple bond"))),
                '.' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    prev = None;
                    self.pos += 1;
                }
                '0'..='9' | '%' => {
                    let atom = prev.ok_or_else(|| err(start, SmilesErrorKind::Unexpected(c)))?;
                    let label = self.ring_label()?;
                    let kind = pending.take().map(|(k, _)| k);
                    let kind = self.normalize_explicit(kind, explicit_single);
                    explicit_single = false;
                    match rings.remove(&label) {
                        Some((other, open_kind, _)) => {
                            let kind = match (open_kind, kind) {
                                (Some(a), Some(b)) if a != b => {
                                    return Err(err(start, SmilesErrorKind::RingBondConflict(label)))
                                }
                                (a, b) => a.or(b),
                            };
                            if other == atom {
                                return Err(err(start, SmilesErrorKind::Molecule(MoleculeError::SelfLoop(self.bonds.len()))));
                            }
                            self.bonds.push(RawBond { a: other, b: atom, kind });
                        }
                        None => {
                            rings.insert(label, (atom, kind, start));
                        }
                    }
                }
                '[' => {
                    let atom = self.bracket_atom()?;
                    self.attach(atom, &mut prev, &mut pending, &mut explicit_single);
                }
                c if c.is_ascii_alphabetic() || c == '*' => {
                    let atom = self.organic_atom()?;
                    self.attach(atom, &mut prev, &mut pending, &mut explicit_single);
                }
                other => return Err(err(start, SmilesErrorKind::Unexpected(other))),
            }
        }
        if let Some((_, pos)) = pending {
            return Err(err(pos, SmilesErrorKind::DanglingBond));
        }
        if let Some((_, pos)) = branches.pop() {
            return Err(err(pos, SmilesErrorKind::Unbalanced));
        }
        if let Some((&label, &(_, _, pos))) = rings.iter().min_by_key(|(_, v)| v.2) {
            return Err(err(pos, SmilesErrorKind::OpenRing(label)));
        }
        Ok(())
    }

    // An explicit `-` is a real single bond even between aromatic atoms; `/` and `\`
    // behave like an unspecified bond.
    fn normalize_explicit(&self, kind: Option<BondKind>, explicit_single: bool) -> Option<BondKind> {
        match kind {
            Some(BondKind::Single) if !explicit_single => None,
            k => k,
        }
    }

    fn attach(
        &mut self,
        atom: RawAtom,
        prev: &mut Option<usize>,
        pending: &mut Option<(BondKind, usize)>,
        explicit_single: &mut bool,
    ) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(p) = *prev {
            let kind = pending.take().map(|(k, _)| k);
            let kind = self.normalize_explicit(kind, *explicit_single);
            self.bonds.push(RawBond { a: p, b: idx, kind });
        }
        *explicit_single = false;
        *prev = Some(idx);
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        let c = self.peek().unwrap();
        if c == '%' {
            self.pos += 1;
            let mut label = 0;
            for _ in 0..2 {
                match self.peek() {
                    Some(d) if d.is_ascii_digit() => {
                        label = label * 10 + d.to_digit(10).unwrap();
                        self.pos += 1;
                    }
                    Some(other) => return Err(err(self.pos, SmilesErrorKind::Unexpected(other))),
                    None => return Err(err(start, SmilesErrorKind::UnexpectedEnd)),
                }
            }
            Ok(label)
        } else {
            self.pos += 1;
            Ok(c.to_digit(10).unwrap())
        }
    }

    fn organic_atom(&mut self) -> Result<RawAtom, SmilesError> {
        let start = self.pos;
        let c = self.peek().unwrap();
        let next = self.chars.get(self.pos + 1).copied();
        let (symbol, aromatic, len) = match (c, next) {
            ('C', Some('l')) => ("Cl".to_string(), false, 2),
            ('B', Some('r')) => ("Br".to_string(), false, 2),
            ('C' | 'N' | 'O' | 'P' | 'S' | 'F' | 'I', _) => (c.to_string(), false, 1),
            ('c' | 'n' | 'o' | 's', _) => (c.to_ascii_uppercase().to_string(), true, 1),
            _ => {
                return Err(err(start, SmilesErrorKind::UnsupportedElement(c.to_string())));
            }
        };
        self.pos += len;
        let element: Element = symbol
            .parse()
            .map_err(|_| err(start, SmilesErrorKind::UnsupportedElement(symbol.clone())))?;
        Ok(RawAtom {
            element,
            aromatic,
            bracket_h: None,
            position: start,
        })
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, SmilesError> {
        let start = self.pos;
        self.pos += 1;
        let next = |p: &Self| p.peek().ok_or_else(|| err(start, SmilesErrorKind::UnexpectedEnd));
        if next(self)?.is_ascii_digit() {
            return Err(err(self.pos, SmilesErrorKind::Unsupported("isotope")));
        }
        let c = next(self)?;
        let (symbol, aromatic) = if c.is_ascii_uppercase() {
            let two = self
                .chars
                .get(self.pos + 1)
                .filter(|l| l.is_ascii_lowercase())
                .map(|l| format!("{c}{l}"));
            match two {
                Some(s) => {
                    if s.parse::<Element>().is_err() {
                        return Err(err(self.pos, SmilesErrorKind::UnsupportedElement(s)));
                    }
                    self.pos += 2;
                    (s, false)
                }
                None => {
                    self.pos += 1;
                    (c.to_string(), false)
                }
            }
        } else if c.is_ascii_lowercase() {
            self.pos += 1;
            if let Some(l) = self.peek().filter(|l| l.is_ascii_lowercase()) {
                return Err(err(start + 1, SmilesErrorKind::UnsupportedElement(format!("{c}{l}"))));
            }
            (c.to_ascii_uppercase().to_string(), true)
        } else {
            return Err(err(self.pos, SmilesErrorKind::Unexpected(c)));
        };
        let element: Element = symbol
            .parse()
            .map_err(|_| err(start + 1, SmilesErrorKind::UnsupportedElement(symbol.clone())))?;
        if aromatic && !element.aromatic_allowed() {
            return Err(err(start + 1, SmilesErrorKind::UnsupportedElement(symbol.to_lowercase())));
        }
        while self.peek() == Some('@') {
            self.pos += 1;
        }
        let mut hydrogens = 0u8;
        if self.peek() == Some('H') {
            self.pos += 1;
            hydrogens = 1;
            if let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                hydrogens = d.to_digit(10).unwrap() as u8;
                self.pos += 1;
            }
        }
        match next(self)? {
            '+' | '-' => return Err(err(self.pos, SmilesErrorKind::Unsupported("charge"))),
            ':' => {
                self.pos += 1;
                while self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
            _ => {}
        }
        match next(self)? {
            ']' => self.pos += 1,
            other => return Err(err(self.pos, SmilesErrorKind::Unexpected(other))),
        }
        Ok(RawAtom {
            element,
            aromatic,
            bracket_h: Some(hydrogens),
            position: start,
        })
    }

    fn finish(self, text: &str) -> Result<Molecule, SmilesError> {
        let n = self.atoms.len();
        let mut kinds: Vec<BondKind> = self
            .bonds
            .iter()
            .map(|b| match b.kind {
                Some(k) => k,
                None if self.atoms[b.a].aromatic && self.atoms[b.b].aromatic => BondKind::Aromatic,
                None => BondKind::Single,
            })
            .collect();

        let mut seen = std::collections::HashSet::new();
        for (i, b) in self.bonds.iter().enumerate() {
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(err(
                    self.atoms[b.b].position,
                    SmilesErrorKind::Molecule(MoleculeError::DuplicateBond(b.a.min(b.b), b.a.max(b.b))),
                ));
            }
            if kinds[i] == BondKind::Aromatic && !(self.atoms[b.a].aromatic && self.atoms[b.b].aromatic) {
                kinds[i] = BondKind::Single;
            }
        }

        let mut sigma = vec![0u32; n];
        for (b, k) in self.bonds.iter().zip(&kinds) {
            sigma[b.a] += k.sigma();
            sigma[b.b] += k.sigma();
        }
        let needs: Vec<bool> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if !a.aromatic {
                    return false;
                }
                let v = i64::from(a.element.standard_valence());
                let h = i64::from(a.bracket_h.unwrap_or(0));
                v - i64::from(sigma[i]) - h >= 1
            })
            .collect();

        let aromatic_edges: Vec<usize> = (0..self.bonds.len())
            .filter(|&i| kinds[i] == BondKind::Aromatic)
            .collect();
        let matched = kekule_matching(n, &self.bonds, &aromatic_edges, &needs)
            .ok_or_else(|| err(0, SmilesErrorKind::Kekulization))?;

        let mut bonds = Vec::with_capacity(self.bonds.len());
        for (i, b) in self.bonds.iter().enumerate() {
            let order = match kinds[i] {
                BondKind::Single => 1,
                BondKind::Double => 2,
                BondKind::Triple => 3,
                BondKind::Aromatic => {
                    if matched.contains(&i) {
                        2
                    } else {
                        1
                    }
                }
            };
            bonds.push(Bond { a: b.a, b: b.b, order });
        }
        let mut sums = vec![0u32; n];
        for b in &bonds {
            sums[b.a] += u32::from(b.order);
            sums[b.b] += u32::from(b.order);
        }
        let mut atoms = Vec::with_capacity(n);
        for (i, a) in self.atoms.iter().enumerate() {
            let hydrogens = match a.bracket_h {
                Some(h) => h,
                None => {
                    let v = a
                        .element
                        .fitting_valence(sums[i])
                        .ok_or_else(|| err(a.position, SmilesErrorKind::Valence(i)))?;
                    (u32::from(v) - sums[i]) as u8
                }
            };
            atoms.push(Atom {
                element: a.element,
                hydrogens,
            });
        }
        Molecule::new(text, atoms, bonds).map_err(|e| match e {
            MoleculeError::Valence { index, .. } => err(self.atoms[index].position, SmilesErrorKind::Valence(index)),
            other => err(0, SmilesErrorKind::Molecule(other)),
        })
    }
}

/// Perfect matching of the atoms flagged in `needs` using aromatic bonds only.
/// Returns the indices of bonds promoted to double bonds.
fn kekule_matching(n: usize, bonds: &[RawBond], aromatic: &[usize], needs: &[bool]) -> Option<Vec<usize>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &i in aromatic {
        let b = &bonds[i];
        if needs[b.a] && needs[b.b] {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
        }
    }
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut chosen = Vec::new();
    if search(&adj, needs, &mut mate, &mut chosen) {
        Some(chosen)
    } else {
        None
    }
}

// Backtracking over the most constrained unmatched atom first. Aromatic systems in
// small organics are tiny, and the branching factor collapses after the first choice.
fn search(
    adj: &[Vec<(usize, usize)>],
    needs: &[bool],
    mate: &mut Vec<Option<usize>>,
    chosen: &mut Vec<usize>,
) -> bool {
    let mut best: Option<(usize, usize)> = None;
    for v in 0..needs.len() {
        if !needs[v] || mate[v].is_some() {
            continue;
        }
        let free = adj[v].iter().filter(|(w, _)| mate[*w].is_none()).count();
        if free == 0 {
            return false;
        }
        if best.is_none_or(|(_, f)| free < f) {
            best = Some((v, free));
        }
    }
    let Some((v, _)) = best else {
        return true;
    };
    for &(w, bond) in &adj[v] {
        if mate[w].is_some() {
            continue;
        }
        mate[v] = Some(w);
        mate[w] = Some(v);
        chosen.push(bond);
        if search(adj, needs, mate, chosen) {
            return true;
        }
        chosen.pop();
        mate[v] = None;
        mate[w] = None;
    }
    false
}

fn implicit_hydrogens(element: Element, bond_sum: u32) -> Option<u8> {
    element
        .fitting_valence(bond_sum)
        .map(|v| (u32::from(v) - bond_sum) as u8)
}

fn atom_token(atom: &Atom, bond_sum: u32) -> String {
    let organic = !matches!(atom.element, Element::H);
    if organic && implicit_hydrogens(atom.element, bond_sum) == Some(atom.hydrogens) {
        return atom.element.symbol().to_string();
    }
    match atom.hydrogens {
        0 => format!("[{}]", atom.element),
        1 => format!("[{}H]", atom.element),
        h => format!("[{}H{}]", atom.element, h),
    }
}

fn bond_symbol(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

/// Writes a kekulé SMILES string (explicit `=`/`#`, no aromatic atoms).
pub fn write_smiles(mol: &Molecule) -> String {
    let n = mol.atoms.len();
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    for b in &mol.bonds {
        adj[b.a].push((b.b, b.order));
        adj[b.b].push((b.a, b.order));
    }
    let sums = mol.bond_order_sums();

    // First pass: DFS tree and ring-closure (back) edges.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        roots.push(start);
        dfs_tree(start, usize::MAX, &adj, &mut visited, &mut children, &mut closures);
    }

    let mut out = String::new();
    let mut emitted = vec![false; n];
    let mut ring_ids: HashMap<(usize, usize), u32> = HashMap::new();
    let mut free_ids: Vec<bool> = vec![true; 100];
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        emit(
            root, mol, &sums, &children, &closures, &mut emitted, &mut ring_ids, &mut free_ids, &mut out,
        );
    }
    out
}

fn dfs_tree(
    v: usize,
    parent: usize,
    adj: &[Vec<(usize, u8)>],
    visited: &mut [bool],
    children: &mut [Vec<(usize, u8)>],
    closures: &mut [Vec<(usize, u8)>],
) {
    visited[v] = true;
    for &(w, order) in &adj[v] {
        if w == parent {
            continue;
        }
        if visited[w] {
            // Back edge: record once, on both endpoints.
            if !closures[v].iter().any(|&(x, _)| x == w) {
                closures[v].push((w, order));
                closures[w].push((v, order));
            }
        } else {
            children[v].push((w, order));
            dfs_tree(w, v, adj, visited, children, closures);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    v: usize,
    mol: &Molecule,
    sums: &[u32],
    children: &[Vec<(usize, u8)>],
    closures: &[Vec<(usize, u8)>],
    emitted: &mut [bool],
    ring_ids: &mut HashMap<(usize, usize), u32>,
    free_ids: &mut [bool],
    out: &mut String,
) {
    emitted[v] = true;
    out.push_str(&atom_token(&mol.atoms[v], sums[v]));
    for &(w, order) in &closures[v] {
        let key = (v.min(w), v.max(w));
        if emitted[w] {
            let id = ring_ids.remove(&key).expect("ring opened");
            free_ids[id as usize] = true;
            push_ring_id(out, id);
        } else {
            let id = free_ids.iter().position(|&f| f).expect("ring ids exhausted") as u32;
            free_ids[id as usize] = false;
            ring_ids.insert(key, id);
            out.push_str(bond_symbol(order));
            push_ring_id(out, id);
        }
    }
    let kids = &children[v];
    for (k, &(w, order)) in kids.iter().enumerate() {
        let last = k + 1 == kids.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_symbol(order));
        emit(w, mol, sums, children, closures, emitted, ring_ids, free_ids, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_ring_id(out: &mut String, id: u32) {
    let id = id + 1;
    if id < 10 {
        out.push(char::from_digit(id, 10).unwrap());
    } else {
        out.push_str(&format!("%{id:02}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orders(m: &Molecule) -> Vec<(usize, usize, u8)> {
        m.bonds.iter().map(|b| (b.a, b.b, b.order)).collect()
    }

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atoms.len(), 3);
        assert_eq!(orders(&m), vec![(0, 1, 1), (1, 2, 1)]);
        let h: Vec<u8> = m.atoms.iter().map(|a| a.hydrogens).collect();
        assert_eq!(h, vec![3, 2, 1]);
    }

    #[test]
    fn benzene_kekulized() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.bonds.len(), 6);
        let doubles = m.bonds.iter().filter(|b| b.order == 2).count();
        assert_eq!(doubles, 3);
        // Alternation: every atom has exactly one double bond.
        for v in 0..6 {
            let d = m.bonds.iter().filter(|b| (b.a == v || b.b == v) && b.order == 2).count();
            assert_eq!(d, 1);
            assert_eq!(m.atoms[v].hydrogens, 1);
        }
    }

    #[test]
    fn figure_molecule() {
        let m = parse_smiles("CCC1CCC(CCC(=O)O)C1").unwrap();
        assert_eq!(m.atoms.len(), 12);
        assert_eq!(m.bonds.iter().filter(|b| b.order == 2).count(), 1);
        assert_eq!(m.hydrogen_count(), 18);
    }

    #[test]
    fn heteroaromatics() {
        let pyrrole = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(pyrrole.bonds.iter().filter(|b| b.order == 2).count(), 2);
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(pyridine.bonds.iter().filter(|b| b.order == 2).count(), 3);
        let furan = parse_smiles("c1ccoc1").unwrap();
        assert_eq!(furan.atoms[3].hydrogens, 0);
        let pyridone = parse_smiles("O=c1cccc[nH]1").unwrap();
        assert_eq!(pyridone.atoms[0].hydrogens, 0);
        let naphthalene = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(naphthalene.bonds.iter().filter(|b| b.order == 2).count(), 5);
    }

    #[test]
    fn kekulization_failure_is_error() {
        let e = parse_smiles("c1cccc1").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::Kekulization);
        assert!(parse_smiles("c1ccnc1").is_err());
    }

    #[test]
    fn unsupported_inputs() {
        assert!(matches!(parse_smiles("C[Sn]C").unwrap_err().kind, SmilesErrorKind::UnsupportedElement(_)));
        assert!(matches!(parse_smiles("C[N+](C)(C)C").unwrap_err().kind, SmilesErrorKind::Unsupported("charge")));
        assert!(matches!(parse_smiles("[13CH4]").unwrap_err().kind, SmilesErrorKind::Unsupported("isotope")));
        assert!(matches!(parse_smiles("CB").unwrap_err().kind, SmilesErrorKind::UnsupportedElement(_)));
        let e = parse_smiles("CC(C").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::Unbalanced);
        assert_eq!(e.position, 2);
        assert_eq!(parse_smiles("C1CC").unwrap_err().kind, SmilesErrorKind::OpenRing(1));
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C").unwrap_err().kind, SmilesErrorKind::Valence(_)));
        assert!(matches!(parse_smiles("CC?").unwrap_err().kind, SmilesErrorKind::Unexpected('?')));
    }

    #[test]
    fn stereo_and_rings() {
        let m = parse_smiles("C/C=C\\[C@@H](Cl)Br").unwrap();
        assert_eq!(m.atoms.len(), 6);
        let m = parse_smiles("C%10CCCCC%10").unwrap();
        assert_eq!(m.bonds.len(), 6);
        let m = parse_smiles("C=1CCCCC1").unwrap();
        assert_eq!(m.bonds.iter().filter(|b| b.order == 2).count(), 1);
        assert!(parse_smiles("C=1CCCCC#1").is_err());
    }

    #[test]
    fn hypervalent_fill() {
        let m = parse_smiles("CS(=O)(=O)C").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
        let m = parse_smiles("CN(=O)=O");
        assert!(m.is_err());
        let m = parse_smiles("OP(=O)(O)O").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
    }

    #[test]
    fn disconnected() {
        let m = parse_smiles("CCO.CCO").unwrap();
        assert_eq!(m.component_count(), 2);
    }

    #[test]
    fn writer_emits_parseable_kekule() {
        for s in ["CCC1CCC(CCC(=O)O)C1", "c1ccc2ccccc2c1", "C#N", "[CH3]C", "C1CC2CCC1C2", "CCO.N"] {
            let m = parse_smiles(s).unwrap();
            let w = write_smiles(&m);
            let back = parse_smiles(&w).unwrap();
            assert_eq!(back.atoms.len(), m.atoms.len(), "{s} -> {w}");
            assert_eq!(back.bonds.len(), m.bonds.len());
            assert_eq!(back.hydrogen_count(), m.hydrogen_count(), "{s} -> {w}");
        }
        assert_eq!(write_smiles(&parse_smiles("CC(=O)O").unwrap()), "CC(=O)O");
    }
}
