use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LearnError;
use crate::descriptors::Bounds;

pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// Feed-forward network: ReLU hidden layers, identity output of width 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    /// `weights[l]` maps layer `l` (columns) to layer `l + 1` (rows).
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Network {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.weights[0].ncols()];
        s.extend(self.weights.iter().map(|w| w.nrows()));
        s
    }

    /// He-uniform initialization.
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Network {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let limit = (6.0 / sizes[l].max(1) as f64).sqrt();
            weights.push(DMatrix::from_fn(sizes[l + 1], sizes[l], |_, _| rng.gen_range(-limit..limit)));
            biases.push(DVector::zeros(sizes[l + 1]));
        }
        Network { weights, biases }
    }

    /// Pre-activations and activations of every layer for one input.
    pub fn forward_trace(&self, x: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let last = self.weights.len() - 1;
        let mut pre = Vec::new();
        let mut act = vec![x.clone()];
        for l in 0..self.weights.len() {
            let z = &self.weights[l] * &act[l] + &self.biases[l];
            let a = if l == last { z.clone() } else { z.map(relu) };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    pub fn forward(&self, x: &DVector<f64>) -> f64 {
        self.forward_trace(x).1.last().unwrap()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameters flattened layer by layer: weights (column-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend(w.iter());
            p.extend(b.iter());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = p[k];
                k += 1;
            }
            for v in b.iter_mut() {
                *v = p[k];
                k += 1;
            }
        }
    }

    /// Mean half squared error over the rows of `x` and its gradient in
    /// [`Network::params`] order. ReLU'(0) is taken as 0.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> (f64, Vec<f64>) {
        let n = x.nrows() as f64;
        let last = self.weights.len() - 1;
        // Row-per-sample activations.
        let mut pre = Vec::with_capacity(last + 1);
        let mut act = vec![x.clone()];
        for l in 0..=last {
            let mut z = &act[l] * self.weights[l].transpose();
            for mut row in z.row_iter_mut() {
                row += self.biases[l].transpose();
            }
            let a = if l == last { z.clone() } else { z.map(relu) };
            pre.push(z);
            act.push(a);
        }
        let err = act[last + 1].column(0) - y;
        let loss = 0.5 * err.norm_squared() / n;
        let mut delta = DMatrix::from_column_slice(x.nrows(), 1, err.as_slice()) / n;
        let mut gw = vec![DMatrix::zeros(0, 0); last + 1];
        let mut gb = vec![DVector::zeros(0); last + 1];
        for l in (0..=last).rev() {
            gw[l] = delta.tr_mul(&act[l]);
            gb[l] = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            if l > 0 {
                let back = &delta * &self.weights[l];
                delta = back.zip_map(&pre[l - 1], |d, z| if z > 0.0 { d } else { 0.0 });
            }
        }
        let mut grad = Vec::with_capacity(self.param_count());
        for (w, b) in gw.iter().zip(&gb) {
            grad.extend(w.iter());
            grad.extend(b.iter());
        }
        (loss, grad)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            hidden: vec![10],
            epochs: 2000,
            step: 0.1,
            seed: 0,
        }
    }
}

/// Trained network with the input normalization it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralModel {
    pub names: Vec<String>,
    pub bounds: Bounds,
    pub net: Network,
    /// Training loss at every epoch that was kept.
    pub loss_trace: Vec<f64>,
}

impl NeuralModel {
    pub fn normalized_input(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(x.len(), |j, _| self.bounds.normalize_value(j, x[j]))
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.net.forward(&self.normalized_input(x))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(x.nrows(), |i, _| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            self.predict_row(&row)
        })
    }
}

/// Full-batch gradient descent on standardized targets. A step that raises
/// the loss is undone and the step size halved. The target scaling is folded
/// into the output layer afterwards.
pub fn fit_ann(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String], cfg: &AnnConfig) -> Result<NeuralModel, LearnError> {
    if x.nrows() == 0 {
        return Err(LearnError::Empty);
    }
    if cfg.hidden.is_empty() || cfg.hidden.contains(&0) {
        return Err(LearnError::Config("the network needs at least one hidden layer of positive width".into()));
    }
    if !(cfg.step > 0.0) {
        return Err(LearnError::Config("step size must be positive".into()));
    }
    let bounds = Bounds::fit(x, None);
    let z = bounds.normalize(x);
    let mean = y.mean();
    let sd = (y.add_scalar(-mean).norm_squared() / y.len() as f64).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    let ys = y.map(|v| (v - mean) / scale);

    let mut sizes = vec![x.ncols()];
    sizes.extend(&cfg.hidden);
    sizes.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init(&sizes, &mut rng);
    let mut params = net.params();
    let (mut loss, mut grad) = net.loss_and_gradient(&z, &ys);
    let mut step = cfg.step;
    let mut trace = vec![loss];
    for _ in 0..cfg.epochs {
        let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
        net.set_params(&trial);
        let (l, g) = net.loss_and_gradient(&z, &ys);
        if !l.is_finite() {
            return Err(LearnError::Diverged);
        }
        if l <= loss {
            params = trial;
            loss = l;
            grad = g;
            trace.push(loss);
        } else {
            net.set_params(&params);
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    net.set_params(&params);
    let last = net.weights.len() - 1;
    net.weights[last] *= scale;
    net.biases[last] *= scale;
    net.biases[last].add_scalar_mut(mean);
    Ok(NeuralModel {
        names: names.to_vec(),
        bounds,
        net,
        loss_trace: trace,
    })
}
