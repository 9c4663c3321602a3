use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Atom, Bond, Molecule, MoleculeError};
use crate::element::Element;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SdfError {
    #[error("record {record} ({name}): malformed counts line `{line}`")]
    Counts { record: usize, name: String, line: String },
    #[error("record {record} ({name}): truncated connection table")]
    Truncated { record: usize, name: String },
    #[error("record {record} ({name}): malformed line `{line}`")]
    Malformed { record: usize, name: String, line: String },
    #[error("record {record} ({name}): aromatic bond code 4 is not accepted; kekulize first")]
    AromaticBond { record: usize, name: String },
    #[error("record {record} ({name}): bond order {order} outside 1..=3")]
    BondOrder { record: usize, name: String, order: u32 },
    #[error("record {record} ({name}): {element}")]
    Element { record: usize, name: String, element: String },
    #[error("record {record} ({name}): charged atoms are not supported")]
    Charge { record: usize, name: String },
    #[error("record {record} ({name}): {source}")]
    Molecule {
        record: usize,
        name: String,
        source: MoleculeError,
    },
}

/// One V2000 record: the molecule plus its title line and `> <FIELD>` data items.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfRecord {
    pub name: String,
    pub molecule: Molecule,
    pub fields: BTreeMap<String, String>,
}

/// Parses V2000 connection tables. Explicit H atoms stay atoms; heavy atoms get
/// implicit hydrogens up to their lowest fitting valence.
pub fn parse_sdf(text: &str) -> Result<Vec<SdfRecord>, SdfError> {
    let mut records = Vec::new();
    let mut lines = text.lines().peekable();
    let mut index = 0;
    loop {
        while lines.peek().is_some_and(|l| l.trim().is_empty()) {
            lines.next();
        }
        if lines.peek().is_none() {
            break;
        }
        index += 1;
        let block: Vec<&str> = lines.by_ref().take_while(|l| l.trim_end() != "$$$$").collect();
        records.push(parse_record(index, &block)?);
    }
    Ok(records)
}

fn parse_record(record: usize, block: &[&str]) -> Result<SdfRecord, SdfError> {
    let name = block.first().map(|s| s.trim().to_string()).unwrap_or_default();
    let trunc = || SdfError::Truncated {
        record,
        name: name.clone(),
    };
    let counts = *block.get(3).ok_or_else(trunc)?;
    let bad_counts = || SdfError::Counts {
        record,
        name: name.clone(),
        line: counts.to_string(),
    };
    let fixed = |s: &str, from: usize| s.get(from..from + 3).and_then(|f| f.trim().parse::<usize>().ok());
    let (n_atoms, n_bonds) = match (fixed(counts, 0), fixed(counts, 3)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let mut it = counts.split_whitespace().map(|t| t.parse::<usize>());
            match (it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b))) => (a, b),
                _ => return Err(bad_counts()),
            }
        }
    };
    if !counts.contains("V2000") && counts.contains("V3000") {
        return Err(bad_counts());
    }
    if block.len() < 4 + n_atoms + n_bonds {
        return Err(trunc());
    }

    let malformed = |line: &str| SdfError::Malformed {
        record,
        name: name.clone(),
        line: line.to_string(),
    };
    let mut elements = Vec::with_capacity(n_atoms);
    for line in &block[4..4 + n_atoms] {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 {
            return Err(malformed(line));
        }
        let element: Element = tokens[3].parse().map_err(|_| SdfError::Element {
            record,
            name: name.clone(),
            element: format!("unsupported element `{}`", tokens[3]),
        })?;
        if tokens.get(5).is_some_and(|c| *c != "0") {
            return Err(SdfError::Charge {
                record,
                name: name.clone(),
            });
        }
        elements.push(element);
    }
    let mut bonds = Vec::with_capacity(n_bonds);
    for line in &block[4 + n_atoms..4 + n_atoms + n_bonds] {
        let a = fixed(line, 0);
        let b = fixed(line, 3);
        let t = fixed(line, 6);
        let (a, b, t) = match (a, b, t) {
            (Some(a), Some(b), Some(t)) => (a, b, t),
            _ => {
                let tok: Vec<usize> = line
                    .split_whitespace()
                    .take(3)
                    .map(|t| t.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| malformed(line))?;
                if tok.len() < 3 {
                    return Err(malformed(line));
                }
                (tok[0], tok[1], tok[2])
            }
        };
        if t == 4 {
            return Err(SdfError::AromaticBond {
                record,
                name: name.clone(),
            });
        }
        if !(1..=3).contains(&t) {
            return Err(SdfError::BondOrder {
                record,
                name: name.clone(),
                order: t as u32,
            });
        }
        if a == 0 || b == 0 || a > n_atoms || b > n_atoms {
            return Err(malformed(line));
        }
        bonds.push(Bond {
            a: a - 1,
            b: b - 1,
            order: t as u8,
        });
    }

    let mut fields = BTreeMap::new();
    let mut rest = block[4 + n_atoms + n_bonds..].iter();
    while let Some(line) = rest.next() {
        if line.starts_with("M  CHG") {
            let values: Vec<i64> = line
                .split_whitespace()
                .skip(3)
                .filter_map(|t| t.parse().ok())
                .collect();
            if values.chunks(2).any(|c| c.get(1).is_some_and(|&q| q != 0)) {
                return Err(SdfError::Charge {
                    record,
                    name: name.clone(),
                });
            }
        } else if let Some(header) = line.strip_prefix('>') {
            let key = header
                .split('<')
                .nth(1)
                .and_then(|s| s.split('>').next())
                .unwrap_or("")
                .to_string();
            let mut value = Vec::new();
            for l in rest.by_ref() {
                if l.trim().is_empty() {
                    break;
                }
                value.push(*l);
            }
            fields.insert(key, value.join("\n"));
        }
    }

    let mut sums = vec![0u32; n_atoms];
    for b in &bonds {
        sums[b.a] += u32::from(b.order);
        sums[b.b] += u32::from(b.order);
    }
    let mut atoms = Vec::with_capacity(n_atoms);
    for (i, &element) in elements.iter().enumerate() {
        let hydrogens = if element == Element::H {
            0
        } else {
            element
                .fitting_valence(sums[i])
                .map(|v| (u32::from(v) - sums[i]) as u8)
                .unwrap_or(0)
        };
        atoms.push(Atom { element, hydrogens });
    }
    let molecule = Molecule::new(name.clone(), atoms, bonds).map_err(|source| SdfError::Molecule {
        record,
        name: name.clone(),
        source,
    })?;
    Ok(SdfRecord {
        name,
        molecule,
        fields,
    })
}

/// Writes one V2000 record with all hydrogens as explicit atoms and zero coordinates.
pub fn write_sdf(mol: &Molecule, fields: &[(&str, String)]) -> String {
    let mut atoms: Vec<Element> = mol.atoms.iter().map(|a| a.element).collect();
    let mut bonds: Vec<(usize, usize, u8)> = mol.bonds.iter().map(|b| (b.a, b.b, b.order)).collect();
    for (i, a) in mol.atoms.iter().enumerate() {
        for _ in 0..a.hydrogens {
            atoms.push(Element::H);
            bonds.push((i, atoms.len() - 1, 1));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", mol.id);
    let _ = writeln!(out, "  solvforge");
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000", atoms.len(), bonds.len());
    for e in &atoms {
        let _ = writeln!(
            out,
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
            0.0,
            0.0,
            0.0,
            e.symbol()
        );
    }
    for (a, b, o) in &bonds {
        let _ = writeln!(out, "{:>3}{:>3}{:>3}  0", a + 1, b + 1, o);
    }
    let _ = writeln!(out, "M  END");
    for (k, v) in fields {
        let _ = writeln!(out, ">  <{k}>");
        let _ = writeln!(out, "{v}");
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "$$$$");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const METHANE: &str = "methane
  test

  5  4  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.6300    0.6300    0.6300 H   0  0  0  0  0  0  0  0  0  0  0  0
   -0.6300   -0.6300    0.6300 H   0  0  0  0  0  0  0  0  0  0  0  0
   -0.6300    0.6300   -0.6300 H   0  0  0  0  0  0  0  0  0  0  0  0
    0.6300   -0.6300   -0.6300 H   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
  1  3  1  0
  1  4  1  0
  1  5  1  0
M  END
>  <ID>
m1

$$$$
";

    const ETHENE: &str = "ethene
  test

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.3000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  2  0
M  END
$$$$
";

    #[test]
    fn methane_keeps_explicit_h() {
        let recs = parse_sdf(METHANE).unwrap();
        assert_eq!(recs.len(), 1);
        let m = &recs[0].molecule;
        assert_eq!(m.atoms.len(), 5);
        assert_eq!(m.atoms.iter().filter(|a| a.element == Element::H).count(), 4);
        assert_eq!(m.atoms[0].hydrogens, 0);
        assert_eq!(recs[0].fields["ID"], "m1");
    }

    #[test]
    fn two_records_in_order() {
        let text = format!("{METHANE}{ETHENE}");
        let recs = parse_sdf(&text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].name, "methane");
        assert_eq!(recs[1].name, "ethene");
        assert_eq!(recs[1].molecule.atoms[0].hydrogens, 2);
    }

    #[test]
    fn aromatic_bond_code_rejected() {
        let text = ETHENE.replace("  1  2  2  0", "  1  2  4  0");
        let e = parse_sdf(&text).unwrap_err();
        assert!(matches!(e, SdfError::AromaticBond { ref name, .. } if name == "ethene"));
        assert!(e.to_string().contains("ethene"));
    }

    #[test]
    fn malformed_counts_and_orders() {
        let text = ETHENE.replace("  2  1  0  0", " xx yy  0  0");
        assert!(matches!(parse_sdf(&text), Err(SdfError::Counts { .. })));
        let text = ETHENE.replace("  1  2  2  0", "  1  2  5  0");
        assert!(matches!(parse_sdf(&text), Err(SdfError::BondOrder { order: 5, .. })));
    }

    #[test]
    fn writer_round_trip() {
        let m = super::super::parse_smiles("CC(=O)O").unwrap();
        let text = write_sdf(&m, &[("PRED", "1.5".into())]);
        let recs = parse_sdf(&text).unwrap();
        let back = &recs[0].molecule;
        assert_eq!(back.atoms.len(), 4 + 4);
        assert_eq!(back.hydrogen_count(), 4);
        assert_eq!(recs[0].fields["PRED"], "1.5");
    }
}
