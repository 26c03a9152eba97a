use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedRow;
use crate::error::{Error, Result};

use super::TrainConfig;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSizes {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl LayerSizes {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self { input, hidden, output }
    }
}

/// Input, one logistic hidden layer, identity output. The last column of each weight
/// matrix is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct QpnNetwork {
    sizes: LayerSizes,
    pub(crate) hidden: Matrix,
    pub(crate) output: Matrix,
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl QpnNetwork {
    /// Wraps existing weight matrices, checking their shapes against `sizes`.
    pub fn from_weights(sizes: LayerSizes, hidden: Matrix, output: Matrix) -> Result<Self> {
        if sizes.input == 0 || sizes.hidden == 0 || sizes.output == 0 {
            return Err(Error::Config("layer sizes must be at least 1".into()));
        }
        let expect = |m: &Matrix, rows: usize, cols: usize| {
            if m.shape() != (rows, cols) || m.data.len() != rows * cols {
                Err(Error::Dimension { expected: rows * cols, got: m.data.len() })
            } else {
                Ok(())
            }
        };
        expect(&hidden, sizes.hidden, sizes.input + 1)?;
        expect(&output, sizes.output, sizes.hidden + 1)?;
        if hidden.data.iter().chain(&output.data).any(|w| !w.is_finite()) {
            return Err(Error::Config("weights must be finite".into()));
        }
        Ok(Self { sizes, hidden, output })
    }

    pub fn sizes(&self) -> LayerSizes {
        self.sizes
    }

    pub fn hidden_weights(&self) -> &Matrix {
        &self.hidden
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.output
    }

    pub fn weight_count(&self) -> usize {
        self.hidden.data.len() + self.output.data.len()
    }

    /// Returns `(output, hidden_activations)`.
    pub fn forward(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if features.len() != self.sizes.input {
            return Err(Error::Dimension { expected: self.sizes.input, got: features.len() });
        }
        let mut hidden = vec![0.0; self.sizes.hidden];
        let mut output = vec![0.0; self.sizes.output];
        self.forward_into(features, &mut hidden, &mut output);
        Ok((output, hidden))
    }

    /// Single-output prediction.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        Ok(self.forward(features)?.0[0])
    }

    pub(crate) fn forward_into(&self, x: &[f64], hidden: &mut [f64], output: &mut [f64]) {
        let n_in = self.sizes.input;
        for (j, h) in hidden.iter_mut().enumerate() {
            let w = self.hidden.row(j);
            let z = w[..n_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[n_in];
            *h = logistic(z);
        }
        let n_h = self.sizes.hidden;
        for (k, o) in output.iter_mut().enumerate() {
            let w = self.output.row(k);
            *o = w[..n_h].iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>() + w[n_h];
        }
    }
}

/// Weights drawn uniformly from `[-init_range, init_range]` with the config's seed.
pub fn init_network(sizes: LayerSizes, config: &TrainConfig) -> Result<QpnNetwork> {
    if sizes.input == 0 || sizes.hidden == 0 || sizes.output == 0 {
        return Err(Error::Config("layer sizes must be at least 1".into()));
    }
    let r = config.init_range;
    if r.is_nan() || r < 0.0 || r.is_infinite() {
        return Err(Error::Config(format!("init_range {r} must be finite and non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |rows: usize, cols: usize| {
        let data = (0..rows * cols).map(|_| if r == 0.0 { 0.0 } else { rng.gen_range(-r..=r) }).collect();
        Matrix { rows, cols, data }
    };
    let hidden = draw(sizes.hidden, sizes.input + 1);
    let output = draw(sizes.output, sizes.hidden + 1);
    QpnNetwork::from_weights(sizes, hidden, output)
}

/// A feature vector with its target values.
pub trait TrainingSample {
    fn features(&self) -> &[f64];
    fn targets(&self) -> &[f64];
}

impl TrainingSample for EncodedRow {
    fn features(&self) -> &[f64] {
        &self.features
    }

    fn targets(&self) -> &[f64] {
        std::slice::from_ref(&self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TrainingSample for Sample {
    fn features(&self) -> &[f64] {
        &self.features
    }

    fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Gradient of the error with respect to both weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Matrix,
    pub output: Matrix,
}

impl Gradients {
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.hidden.data.iter().chain(&self.output.data)
    }
}

/// Error summary of a batch in normalized target units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchError {
    /// Mean over rows of the squared error summed over outputs.
    pub mse: f64,
    /// Sum over rows and outputs of `|target - output|`.
    pub abs: f64,
}

fn check_sample<S: TrainingSample>(net: &QpnNetwork, s: &S) -> Result<()> {
    let sz = net.sizes;
    if s.features().len() != sz.input {
        return Err(Error::Dimension { expected: sz.input, got: s.features().len() });
    }
    if s.targets().len() != sz.output {
        return Err(Error::Dimension { expected: sz.output, got: s.targets().len() });
    }
    Ok(())
}

pub fn batch_error<S: TrainingSample>(net: &QpnNetwork, batch: &[S]) -> Result<BatchError> {
    if batch.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let mut hidden = vec![0.0; net.sizes.hidden];
    let mut output = vec![0.0; net.sizes.output];
    let (mut sq, mut abs) = (0.0, 0.0);
    for s in batch {
        check_sample(net, s)?;
        net.forward_into(s.features(), &mut hidden, &mut output);
        for (o, t) in output.iter().zip(s.targets()) {
            sq += (t - o) * (t - o);
            abs += (t - o).abs();
        }
    }
    Ok(BatchError { mse: sq / batch.len() as f64, abs })
}

/// Backpropagated gradient of `J = 1/(2N) * sum ||target - output||^2`, plus the batch error
/// at the same weights.
pub fn gradient_with_error<S: TrainingSample>(net: &QpnNetwork, batch: &[S]) -> Result<(Gradients, BatchError)> {
    if batch.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let sz = net.sizes;
    let mut g_hidden = Matrix::zeros(sz.hidden, sz.input + 1);
    let mut g_output = Matrix::zeros(sz.output, sz.hidden + 1);
    let mut hidden = vec![0.0; sz.hidden];
    let mut output = vec![0.0; sz.output];
    let mut delta_out = vec![0.0; sz.output];
    let mut delta_hidden = vec![0.0; sz.hidden];
    let scale = 1.0 / batch.len() as f64;
    let (mut sq, mut abs) = (0.0, 0.0);

    for s in batch {
        check_sample(net, s)?;
        let x = s.features();
        net.forward_into(x, &mut hidden, &mut output);
        for ((d, o), t) in delta_out.iter_mut().zip(&output).zip(s.targets()) {
            *d = (o - t) * scale;
            sq += (t - o) * (t - o);
            abs += (t - o).abs();
        }
        delta_hidden.iter_mut().for_each(|d| *d = 0.0);
        for (k, &d) in delta_out.iter().enumerate() {
            let w = net.output.row(k);
            let g = g_output.row_mut(k);
            for j in 0..sz.hidden {
                g[j] += d * hidden[j];
                delta_hidden[j] += d * w[j];
            }
            g[sz.hidden] += d;
        }
        for (j, dh) in delta_hidden.iter_mut().enumerate() {
            let d = *dh * hidden[j] * (1.0 - hidden[j]);
            let g = g_hidden.row_mut(j);
            for (gi, xi) in g[..sz.input].iter_mut().zip(x) {
                *gi += d * xi;
            }
            g[sz.input] += d;
        }
    }
    let n = batch.len() as f64;
    Ok((Gradients { hidden: g_hidden, output: g_output }, BatchError { mse: sq / n, abs }))
}

pub fn gradient<S: TrainingSample>(net: &QpnNetwork, batch: &[S]) -> Result<Gradients> {
    Ok(gradient_with_error(net, batch)?.0)
}

/// `J = 1/(2N) * sum ||target - output||^2`.
pub fn objective<S: TrainingSample>(net: &QpnNetwork, batch: &[S]) -> Result<f64> {
    Ok(batch_error(net, batch)?.mse / 2.0)
}
