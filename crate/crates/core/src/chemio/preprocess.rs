use std::fmt;

use super::{DatasetRecord, Molecule};
use crate::element::Element;

/// A reason a record was dropped before featurization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Parse(String),
    Connectivity,
    CarbonCount,
    NeighborCount,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Parse(msg) => write!(f, "parse: {msg}"),
            Rule::Connectivity => f.write_str("connectivity"),
            Rule::CarbonCount => f.write_str("carbon-count"),
            Rule::NeighborCount => f.write_str("neighbor-count"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub id: String,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<DatasetRecord>,
    pub rejected: Vec<Rejection>,
}

/// Rules a molecule violates, in a fixed order; empty when it is usable.
pub fn violated_rules(mol: &Molecule) -> Vec<Rule> {
    let mut rules = Vec::new();
    let heavy: Vec<usize> = (0..mol.atoms.len())
        .filter(|&i| mol.atoms[i].element != Element::H)
        .collect();
    if heavy.is_empty() || mol.component_count() != 1 {
        rules.push(Rule::Connectivity);
    }
    if mol.atoms.iter().filter(|a| a.element == Element::C).count() < 4 {
        rules.push(Rule::CarbonCount);
    }
    let adj = mol.neighbors();
    let crowded = (0..mol.atoms.len()).any(|v| {
        adj[v]
            .iter()
            .filter(|&&w| mol.atoms[w].element != Element::H)
            .count()
            > 4
    });
    if crowded {
        rules.push(Rule::NeighborCount);
    }
    rules
}

/// Keeps connected molecules with at least four carbons whose atoms all have at
/// most four non-hydrogen neighbours. Input order is preserved in both outputs.
pub fn preprocess_filter(records: Vec<DatasetRecord>) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for rec in records {
        let rules = violated_rules(&rec.molecule);
        if rules.is_empty() {
            out.kept.push(rec);
        } else {
            out.rejected.push(Rejection { id: rec.id, rules });
        }
    }
    out
}

/// Rejection report as `id,rule` CSV, one line per violated rule.
pub fn write_rejections(rejected: &[Rejection]) -> String {
    let mut out = String::from("id,rule\n");
    for r in rejected {
        for rule in &r.rules {
            let text = rule.to_string().replace('"', "'");
            if text.contains(',') {
                out.push_str(&format!("{},\"{}\"\n", r.id, text));
            } else {
                out.push_str(&format!("{},{}\n", r.id, text));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemio::parse_smiles;

    fn rec(id: &str, smiles: &str) -> DatasetRecord {
        DatasetRecord {
            id: id.into(),
            molecule: parse_smiles(smiles).unwrap(),
            value: 0.0,
        }
    }

    #[test]
    fn named_cases() {
        let out = preprocess_filter(vec![
            rec("propane", "CCC"),
            rec("two-ethanol", "CCO.CCO"),
            rec("fig", "CCC1CCC(CCC(=O)O)C1"),
        ]);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "fig");
        assert_eq!(out.rejected[0].rules, vec![Rule::CarbonCount]);
        assert_eq!(out.rejected[1].rules, vec![Rule::Connectivity]);
    }

    #[test]
    fn neighbor_rule_ignores_hydrogen_atoms() {
        let sdf_like = rec("neo", "CC(C)(C)C");
        assert!(violated_rules(&sdf_like.molecule).is_empty());
        let hyper = rec("sf6", "CCCCS(F)(F)(F)(F)F");
        assert_eq!(violated_rules(&hyper.molecule), vec![Rule::NeighborCount]);
    }

    #[test]
    fn report_lines() {
        let r = vec![Rejection {
            id: "x".into(),
            rules: vec![Rule::Connectivity, Rule::CarbonCount],
        }];
        assert_eq!(write_rejections(&r), "id,rule\nx,connectivity\nx,carbon-count\n");
    }
}
