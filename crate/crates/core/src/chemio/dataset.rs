use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::preprocess::{Rejection, Rule};
use super::{parse_sdf, parse_smiles, Molecule, SdfError};

/// A compound with its observed property value (logS for the solubility sets).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub molecule: Molecule,
    pub value: f64,
}

/// Records that parsed, plus rows whose structure could not be read.
#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row} (id {id}): value `{value}` is not a finite number")]
    BadValue { row: usize, id: String, value: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("ids without a structure in the SDF: {0:?}")]
    Unmatched(Vec<String>),
    #[error("structures are required: the csv has no `smiles` column and no SDF was given")]
    NoStructures,
    #[error(transparent)]
    Sdf(#[from] SdfError),
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads `id,smiles,value` rows, or `id,value` rows joined to SDF records by id
/// (the `ID` data field when present, otherwise the title line).
pub fn load_dataset(csv_path: &Path, sdf_path: Option<&Path>) -> Result<LoadedDataset, DatasetError> {
    let csv_text = read(csv_path)?;
    let sdf_text = sdf_path.map(read).transpose()?;
    load_dataset_from_str(&csv_text, sdf_text.as_deref())
}

pub fn load_dataset_from_str(csv_text: &str, sdf_text: Option<&str>) -> Result<LoadedDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or(DatasetError::MissingColumn("id"))?;
    let value_col = col("value").ok_or(DatasetError::MissingColumn("value"))?;
    let smiles_col = col("smiles");

    let structures: Option<HashMap<String, Molecule>> = match (smiles_col, sdf_text) {
        (Some(_), _) => None,
        (None, Some(text)) => Some(
            parse_sdf(text)?
                .into_iter()
                .map(|r| {
                    let key = r.fields.get("ID").cloned().unwrap_or_else(|| r.name.clone());
                    (key, r.molecule)
                })
                .collect(),
        ),
        (None, None) => return Err(DatasetError::NoStructures),
    };

    let mut out = LoadedDataset::default();
    let mut seen = HashSet::new();
    let mut unmatched = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result?;
        let row = row + 1;
        let id = rec.get(id_col).unwrap_or("").to_string();
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId(id));
        }
        let raw = rec.get(value_col).unwrap_or("");
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| DatasetError::BadValue {
                row,
                id: id.clone(),
                value: raw.to_string(),
            })?;
        let molecule = match (&structures, smiles_col) {
            (Some(map), _) => match map.get(&id) {
                Some(m) => {
                    let mut m = m.clone();
                    m.id = id.clone();
                    Ok(m)
                }
                None => {
                    unmatched.push(id.clone());
                    continue;
                }
            },
            (None, Some(c)) => parse_smiles(rec.get(c).unwrap_or("")).map(|mut m| {
                m.id = id.clone();
                m
            }),
            (None, None) => unreachable!(),
        };
        match molecule {
            Ok(molecule) => out.records.push(DatasetRecord { id, molecule, value }),
            Err(e) => out.rejected.push(Rejection {
                id,
                rules: vec![Rule::Parse(e.to_string())],
            }),
        }
    }
    if !unmatched.is_empty() {
        return Err(DatasetError::Unmatched(unmatched));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let csv = "id,smiles,value\na,CCCC,-1.0\nb,CCO,0.5\nc,c1ccccc1,-2\n";
        let d = load_dataset_from_str(csv, None).unwrap();
        assert_eq!(d.records.len(), 3);
        assert!(d.rejected.is_empty());
        assert_eq!(d.records[2].value, -2.0);
    }

    #[test]
    fn non_numeric_value_names_row() {
        let csv = "id,smiles,value\na,CCCC,-1.0\nb,CCO,abc\n";
        let e = load_dataset_from_str(csv, None).unwrap_err();
        assert!(matches!(e, DatasetError::BadValue { row: 2, ref id, .. } if id == "b"));
    }

    #[test]
    fn missing_column_and_duplicates() {
        let e = load_dataset_from_str("id,smiles\na,C\n", None).unwrap_err();
        assert!(matches!(e, DatasetError::MissingColumn("value")));
        let e = load_dataset_from_str("id,smiles,value\na,C,1\na,C,2\n", None).unwrap_err();
        assert!(matches!(e, DatasetError::DuplicateId(_)));
    }

    #[test]
    fn unparsable_structure_is_rejected_not_fatal() {
        let csv = "id,smiles,value\na,C[Sn]C,1\nb,CCCC,2\n";
        let d = load_dataset_from_str(csv, None).unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.rejected[0].id, "a");
    }

    #[test]
    fn sdf_join_reports_unmatched() {
        let sdf = "x1\n  t\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 C   0  0\nM  END\n$$$$\n";
        let d = load_dataset_from_str("id,value\nx1,1.5\n", Some(sdf)).unwrap();
        assert_eq!(d.records[0].molecule.atoms[0].hydrogens, 4);
        let e = load_dataset_from_str("id,value\nx1,1.5\nx2,2\n", Some(sdf)).unwrap_err();
        assert!(matches!(e, DatasetError::Unmatched(ref v) if v == &vec!["x2".to_string()]));
    }
}
