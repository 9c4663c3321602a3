use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{LearnError, LinearModel, Network, NeuralModel, Predictor};
use crate::descriptors::Bounds;

/// A predictor together with the ρ its descriptors were computed with.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub rho: usize,
    pub predictor: Predictor,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_model(m: &ModelFile) -> String {
    let mut out = String::new();
    let kind = match m.predictor {
        Predictor::Linear(_) => "linear",
        Predictor::Neural(_) => "ann",
    };
    let _ = writeln!(out, "solvforge-model v1 {kind}");
    let _ = writeln!(out, "rho {}", m.rho);
    let names = m.predictor.names();
    let b = m.predictor.bounds();
    let _ = writeln!(out, "names {}", names.len());
    for (j, n) in names.iter().enumerate() {
        let _ = writeln!(out, "{n} {} {}", num(b.min[j]), num(b.max[j]));
    }
    match &m.predictor {
        Predictor::Linear(lm) => {
            let _ = writeln!(out, "bias {}", num(lm.bias));
            for (n, w) in names.iter().zip(&lm.weights) {
                let _ = writeln!(out, "weight {n} {}", num(*w));
            }
        }
        Predictor::Neural(nm) => {
            let sizes = nm.net.layer_sizes();
            let joined: Vec<String> = sizes.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "layers {} {}", sizes.len(), joined.join(" "));
            for (w, bias) in nm.net.weights.iter().zip(&nm.net.biases) {
                for row in w.row_iter() {
                    let vals: Vec<String> = row.iter().map(|v| num(*v)).collect();
                    let _ = writeln!(out, "w {}", vals.join(" "));
                }
                let vals: Vec<String> = bias.iter().map(|v| num(*v)).collect();
                let _ = writeln!(out, "b {}", vals.join(" "));
            }
        }
    }
    out
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>, LearnError> {
        for (i, l) in self.it.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(l.split_whitespace().collect());
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> LearnError {
        LearnError::ModelFormat {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn keyed(&mut self, key: &str, len: Option<usize>) -> Result<Vec<&'a str>, LearnError> {
        let t = self.next()?;
        if t.first() != Some(&key) || len.is_some_and(|n| t.len() != n) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(t)
    }

    fn float(&self, s: &str) -> Result<f64, LearnError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("`{s}` is not a finite number")))
    }

    fn int(&self, s: &str) -> Result<usize, LearnError> {
        s.parse().map_err(|_| self.err(format!("`{s}` is not a count")))
    }
}

pub fn read_model(text: &str) -> Result<ModelFile, LearnError> {
    let mut r = Lines {
        it: text.lines().enumerate(),
        line: 0,
    };
    let head = r.next()?;
    if head.len() != 3 || head[0] != "solvforge-model" || head[1] != "v1" {
        return Err(r.err("not a solvforge-model v1 file"));
    }
    let kind = head[2];
    let t = r.keyed("rho", Some(2))?;
    let rho = r.int(t[1])?;
    let t = r.keyed("names", Some(2))?;
    let k = r.int(t[1])?;
    let mut names = Vec::with_capacity(k);
    let mut bounds = Bounds {
        min: Vec::with_capacity(k),
        max: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let t = r.next()?;
        if t.len() != 3 {
            return Err(r.err("expected `<name> <min> <max>`"));
        }
        names.push(t[0].to_string());
        bounds.min.push(r.float(t[1])?);
        bounds.max.push(r.float(t[2])?);
    }
    let predictor = match kind {
        "linear" => {
            let t = r.keyed("bias", Some(2))?;
            let bias = r.float(t[1])?;
            let mut weights = Vec::with_capacity(k);
            for n in &names {
                let t = r.keyed("weight", Some(3))?;
                if t[1] != n {
                    return Err(r.err(format!("weight for `{}` where `{n}` was expected", t[1])));
                }
                weights.push(r.float(t[2])?);
            }
            Predictor::Linear(LinearModel {
                names,
                weights,
                bias,
                bounds,
                regularized: false,
            })
        }
        "ann" => {
            let t = r.keyed("layers", None)?;
            let count = r.int(t.get(1).copied().unwrap_or(""))?;
            if t.len() != count + 2 || count < 3 {
                return Err(r.err("layer list does not match its count or has no hidden layer"));
            }
            let sizes: Vec<usize> = t[2..].iter().map(|s| r.int(s)).collect::<Result<_, _>>()?;
            if sizes[0] != k || *sizes.last().unwrap() != 1 {
                return Err(r.err("input width must equal the name count and output width must be 1"));
            }
            let mut weights = Vec::new();
            let mut biases = Vec::new();
            for l in 0..sizes.len() - 1 {
                let mut vals = Vec::with_capacity(sizes[l] * sizes[l + 1]);
                for _ in 0..sizes[l + 1] {
                    let t = r.keyed("w", Some(sizes[l] + 1))?;
                    for s in &t[1..] {
                        vals.push(r.float(s)?);
                    }
                }
                weights.push(DMatrix::from_row_slice(sizes[l + 1], sizes[l], &vals));
                let t = r.keyed("b", Some(sizes[l + 1] + 1))?;
                let b: Vec<f64> = t[1..].iter().map(|s| r.float(s)).collect::<Result<_, _>>()?;
                biases.push(DVector::from_vec(b));
            }
            Predictor::Neural(NeuralModel {
                names,
                bounds,
                net: Network { weights, biases },
                loss_trace: Vec::new(),
            })
        }
        other => return Err(r.err(format!("unknown model kind `{other}`"))),
    };
    Ok(ModelFile { rho, predictor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{fit_ann, fit_mlr, AnnConfig};

    fn data() -> (DMatrix<f64>, DVector<f64>, Vec<String>) {
        let x = DMatrix::from_fn(12, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 3.0);
        let y = DVector::from_fn(12, |i, _| 0.3 * x[(i, 0)] - 1.7 * x[(i, 1)] + 0.25);
        (x, y, vec!["a".into(), "fc_C_0_H_1".into()])
    }

    #[test]
    fn linear_round_trip_is_exact() {
        let (x, y, names) = data();
        let m = ModelFile {
            rho: 2,
            predictor: Predictor::Linear(fit_mlr(&x, &y, &names).unwrap()),
        };
        let text = write_model(&m);
        assert!(text.starts_with("solvforge-model v1 linear\n"));
        let back = read_model(&text).unwrap();
        assert_eq!(back, m);
        let noted = text.replacen('\n', "\n# seed 4\n", 1);
        assert_eq!(read_model(&noted).unwrap(), m);
    }

    #[test]
    fn ann_round_trip_predicts_identically() {
        let (x, y, names) = data();
        let cfg = AnnConfig {
            hidden: vec![3, 2],
            epochs: 20,
            ..AnnConfig::default()
        };
        let m = ModelFile {
            rho: 1,
            predictor: Predictor::Neural(fit_ann(&x, &y, &names, &cfg).unwrap()),
        };
        let back = read_model(&write_model(&m)).unwrap();
        assert_eq!(back.rho, 1);
        assert_eq!(back.predictor.predict(&x), m.predictor.predict(&x));
    }

    #[test]
    fn malformed_files() {
        assert!(read_model("").is_err());
        assert!(read_model("solvforge-model v2 linear\n").is_err());
        let e = read_model("solvforge-model v1 linear\nrho 2\nnames 1\nx 0 1\nbias nan\n").unwrap_err();
        assert!(matches!(e, LearnError::ModelFormat { line: 5, .. }));
    }
}
