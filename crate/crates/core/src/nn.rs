//! Minimal dense/recurrent neural-network engine with manual
//! backpropagation. Only what the ensemble needs: dense layers with a small
//! activation set, RNN/LSTM/GRU cells (uni- or bidirectional), inverted
//! dropout, binary cross-entropy, and SGD/Adam.

pub mod checkpoint;
pub mod optim;
pub mod recurrent;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp bound for predicted probabilities inside the loss.
pub const BCE_EPSILON: f64 = 1e-7;

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                what: format!("tensor of shape {shape:?}"),
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn vector(data: Vec<f64>) -> Tensor {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows of a 2-D tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() needs a 2-D tensor");
        self.shape[0]
    }

    /// Columns of a 2-D tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() needs a 2-D tensor");
        self.shape[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.shape)
    }
}

/// y = W x for a 2-D weight [out x in].
pub fn matvec(w: &Tensor, x: &[f64]) -> Vec<f64> {
    let (m, n) = (w.rows(), w.cols());
    debug_assert_eq!(x.len(), n);
    let mut y = vec![0.0; m];
    for i in 0..m {
        let row = w.row(i);
        let mut acc = 0.0;
        for k in 0..n {
            acc += row[k] * x[k];
        }
        y[i] = acc;
    }
    y
}

/// x = W^T y.
pub fn matvec_t(w: &Tensor, y: &[f64]) -> Vec<f64> {
    let (m, n) = (w.rows(), w.cols());
    debug_assert_eq!(y.len(), m);
    let mut x = vec![0.0; n];
    for i in 0..m {
        let row = w.row(i);
        for k in 0..n {
            x[k] += row[k] * y[i];
        }
    }
    x
}

/// into += dy x^T (outer product accumulate).
pub fn outer_acc(dy: &[f64], x: &[f64], into: &mut Tensor) {
    let (m, n) = (into.rows(), into.cols());
    debug_assert_eq!(dy.len(), m);
    debug_assert_eq!(x.len(), n);
    for i in 0..m {
        let row = into.row_mut(i);
        for k in 0..n {
            row[k] += dy[i] * x[k];
        }
    }
}

pub fn add_assign(into: &mut [f64], rhs: &[f64]) {
    debug_assert_eq!(into.len(), rhs.len());
    for (a, b) in into.iter_mut().zip(rhs) {
        *a += b;
    }
}

/// Uniform access to a parameter set as named tensors. Implementations must
/// return the same names in the same order from both methods; gradients are
/// carried in a second instance of the same struct, so zipping the two
/// listings pairs each parameter with its gradient.
pub trait NamedTensors {
    fn named_tensors(&self) -> Vec<(String, &Tensor)>;
    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)>;
}

pub(crate) fn prefix_named<'a>(
    p: &str,
    list: Vec<(String, &'a Tensor)>,
) -> Vec<(String, &'a Tensor)> {
    list.into_iter().map(|(n, t)| (format!("{p}.{n}"), t)).collect()
}

pub(crate) fn prefix_named_mut<'a>(
    p: &str,
    list: Vec<(String, &'a mut Tensor)>,
) -> Vec<(String, &'a mut Tensor)> {
    list.into_iter().map(|(n, t)| (format!("{p}.{n}"), t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::Sigmoid => crate::sgns::sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseLayerSpec {
    pub units: usize,
    pub activation: Activation,
}

/// Fully connected layer, y = act(W x + b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Activation,
}

/// Forward cache: the input and the post-activation output.
#[derive(Debug, Clone)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Glorot-uniform sample bound for a fan-in/fan-out pair.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl DenseLayer {
    pub fn new(in_dim: usize, spec: DenseLayerSpec, rng: &mut impl Rng) -> Result<DenseLayer> {
        if spec.units == 0 || in_dim == 0 {
            return Err(Error::InvalidConfig(
                "dense layer dimensions must be positive".into(),
            ));
        }
        let limit = glorot_limit(in_dim, spec.units);
        let data = (0..spec.units * in_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Ok(DenseLayer {
            w: Tensor::from_vec(&[spec.units, in_dim], data)?,
            b: Tensor::zeros(&[spec.units]),
            activation: spec.activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    /// Gradient twin: same tensor shapes, zeroed.
    pub fn zero_grads(&self) -> DenseLayer {
        DenseLayer {
            w: self.w.zeros_like(),
            b: self.b.zeros_like(),
            activation: self.activation,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                what: "dense input".into(),
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        let mut y = matvec(&self.w, x);
        for (v, b) in y.iter_mut().zip(self.b.data()) {
            *v = self.activation.apply(*v + b);
        }
        Ok((
            y.clone(),
            DenseCache {
                x: x.to_vec(),
                y,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &DenseCache, dy: &[f64], grads: &mut DenseLayer) -> Vec<f64> {
        let dz: Vec<f64> = dy
            .iter()
            .zip(&cache.y)
            .map(|(&g, &y)| g * self.activation.derivative_from_output(y))
            .collect();
        outer_acc(&dz, &cache.x, &mut grads.w);
        add_assign(grads.b.data_mut(), &dz);
        matvec_t(&self.w, &dz)
    }
}

impl NamedTensors for DenseLayer {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![("w".into(), &mut self.w), ("b".into(), &mut self.b)]
    }
}

/// Inverted dropout. In training mode each component is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate); at inference
/// the input passes through unchanged. The returned multiplier vector (if
/// any) must be applied to the upstream gradient as well.
pub fn apply_dropout(
    x: &[f64],
    rate: f64,
    rng: &mut impl Rng,
    training: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.to_vec(), None));
    }
    let keep = 1.0 - rate;
    let mult: Vec<f64> = x
        .iter()
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { 1.0 / keep })
        .collect();
    let y = x.iter().zip(&mult).map(|(v, m)| v * m).collect();
    Ok((y, Some(mult)))
}

fn clamp_prob(y_hat: f64) -> f64 {
    y_hat.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
}

/// Binary cross-entropy with the prediction clamped away from {0, 1}.
pub fn binary_cross_entropy(y_hat: f64, y: u8) -> f64 {
    let p = clamp_prob(y_hat);
    match y {
        1 => -p.ln(),
        _ => -(1.0 - p).ln(),
    }
}

/// d BCE / d y_hat. Zero in the clamped (saturated) region.
pub fn bce_gradient(y_hat: f64, y: u8) -> f64 {
    if y_hat < BCE_EPSILON || y_hat > 1.0 - BCE_EPSILON {
        return 0.0;
    }
    match y {
        1 => -1.0 / y_hat,
        _ => 1.0 / (1.0 - y_hat),
    }
}
