use nalgebra::DMatrix;

use super::{is_core, FeatureVector, CORE_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("no records to featurize")]
    Empty,
    #[error("feature csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature csv: first column must be `id`")]
    NoIdColumn,
    #[error("feature csv row {row}: `{value}` is not a number")]
    BadValue { row: usize, value: String },
}

/// Dense dataset matrix over the descriptor universe, columns in name order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    /// Columns `names` in the given order; missing names read as zero.
    pub fn select(&self, names: &[String]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows(), names.len());
        for (j, name) in names.iter().enumerate() {
            if let Some(c) = self.column_index(name) {
                out.set_column(j, &self.data.column(c));
            }
        }
        out
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::fit(&self.data, None)
    }
}

/// Assembles rows over the union of core names and every name that occurs
/// with a nonzero value.
pub fn build_feature_matrix(ids: Vec<String>, vectors: &[FeatureVector]) -> Result<FeatureMatrix, MatrixError> {
    if vectors.is_empty() {
        return Err(MatrixError::Empty);
    }
    let mut names: Vec<String> = CORE_NAMES.iter().map(|s| s.to_string()).collect();
    for v in vectors {
        for (k, x) in v.iter() {
            if x != 0.0 && !is_core(k) {
                names.push(k.to_string());
            }
        }
    }
    names.sort();
    names.dedup();
    let mut data = DMatrix::zeros(vectors.len(), names.len());
    for (i, v) in vectors.iter().enumerate() {
        for (j, name) in names.iter().enumerate() {
            data[(i, j)] = v.get(name);
        }
    }
    Ok(FeatureMatrix { ids, names, data })
}

/// Per-column min-max bounds taken from training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Bounds {
    /// Bounds over `rows` of `x` (all rows when `None`).
    pub fn fit(x: &DMatrix<f64>, rows: Option<&[usize]>) -> Bounds {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..x.nrows()).collect();
                &all
            }
        };
        let mut min = vec![f64::INFINITY; x.ncols()];
        let mut max = vec![f64::NEG_INFINITY; x.ncols()];
        for &i in rows {
            for j in 0..x.ncols() {
                min[j] = min[j].min(x[(i, j)]);
                max[j] = max[j].max(x[(i, j)]);
            }
        }
        for j in 0..x.ncols() {
            if rows.is_empty() {
                min[j] = 0.0;
                max[j] = 0.0;
            }
        }
        Bounds { min, max }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Scale factor 1/(max−min), or 0 for a constant column.
    pub fn scale(&self, j: usize) -> f64 {
        let span = self.max[j] - self.min[j];
        if span > 0.0 {
            1.0 / span
        } else {
            0.0
        }
    }

    pub fn normalize_value(&self, j: usize, x: f64) -> f64 {
        (x - self.min[j]) * self.scale(j)
    }

    pub fn denormalize_value(&self, j: usize, z: f64) -> f64 {
        self.min[j] + z * (self.max[j] - self.min[j])
    }

    pub fn normalize(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| self.normalize_value(j, x[(i, j)]))
    }

    pub fn denormalize(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| self.denormalize_value(j, z[(i, j)]))
    }
}

/// Decimal text with six significant digits and no trailing zeros.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    format!("{rounded}")
}

pub fn write_feature_csv(m: &FeatureMatrix) -> String {
    let mut out = String::from("id");
    for n in &m.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, id) in m.ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..m.names.len() {
            out.push(',');
            out.push_str(&format_sig6(m.data[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn read_feature_csv(text: &str) -> Result<FeatureMatrix, MatrixError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("id") {
        return Err(MatrixError::NoIdColumn);
    }
    let raw_names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut order: Vec<usize> = (0..raw_names.len()).collect();
    order.sort_by(|&a, &b| raw_names[a].cmp(&raw_names[b]));
    let names: Vec<String> = order.iter().map(|&i| raw_names[i].clone()).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        ids.push(rec.get(0).unwrap_or("").to_string());
        for &k in &order {
            let s = rec.get(k + 1).unwrap_or("");
            let v: f64 = s.parse().map_err(|_| MatrixError::BadValue {
                row: row + 1,
                value: s.to_string(),
            })?;
            values.push(v);
        }
    }
    if ids.is_empty() {
        return Err(MatrixError::Empty);
    }
    let data = DMatrix::from_row_slice(ids.len(), names.len(), &values);
    Ok(FeatureMatrix { ids, names, data })
}
