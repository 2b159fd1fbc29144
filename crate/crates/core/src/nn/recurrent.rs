//! Recurrent cells (RNN, LSTM, GRU) with full backpropagation through time,
//! plus the uni/bidirectional layer wrapper.
//!
//! The layer consumes a [k x in_dim] sequence and returns its final state:
//! the last hidden state for a unidirectional layer, or the concatenation of
//! the forward direction's last state and the backward direction's state at
//! the first position for a bidirectional one. Left-padding rows are ordinary
//! zero inputs; no masking is applied.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    add_assign, glorot_limit, matvec, matvec_t, outer_acc, prefix_named, prefix_named_mut,
    NamedTensors, Tensor,
};
use crate::sgns::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecurrentKind {
    Rnn,
    Lstm,
    Gru,
}

impl RecurrentKind {
    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            RecurrentKind::Rnn => &["h"],
            RecurrentKind::Gru => &["z", "r", "g"],
            RecurrentKind::Lstm => &["i", "f", "g", "o"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecurrentKind::Rnn => "rnn",
            RecurrentKind::Lstm => "lstm",
            RecurrentKind::Gru => "gru",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrentLayerSpec {
    pub kind: RecurrentKind,
    /// Hidden units per direction.
    pub hidden_units: usize,
    pub bidirectional: bool,
    /// Dropout rate applied by the model to this layer's output.
    pub dropout: f64,
}

impl RecurrentLayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(Error::InvalidConfig("hidden_units must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Parameters of one direction: per gate an input kernel [h x in], a
/// recurrent kernel [h x h], and a bias [h].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellParams {
    kind: RecurrentKind,
    wx: Vec<Tensor>,
    wh: Vec<Tensor>,
    b: Vec<Tensor>,
}

/// LSTM forget-gate index in the [i, f, g, o] gate ordering.
const LSTM_FORGET: usize = 1;

fn orthogonal(n: usize, rng: &mut impl Rng) -> Tensor {
    // Gram-Schmidt over a random Gaussian matrix (Box-Muller draws).
    let mut gauss = || -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| gauss()).collect()).collect();
    for i in 0..n {
        for j in 0..i {
            let proj: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            for k in 0..n {
                rows[i][k] -= proj * rows[j][k];
            }
        }
        let norm: f64 = rows[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 1e-10, "degenerate draw during orthogonal init");
        for v in &mut rows[i] {
            *v /= norm;
        }
    }
    Tensor::from_vec(&[n, n], rows.into_iter().flatten().collect()).expect("square shape")
}

impl CellParams {
    pub fn new(kind: RecurrentKind, in_dim: usize, hidden: usize, rng: &mut impl Rng) -> CellParams {
        let gates = kind.gate_names().len();
        let limit = glorot_limit(in_dim, hidden);
        let mut wx = Vec::with_capacity(gates);
        let mut wh = Vec::with_capacity(gates);
        let mut b = Vec::with_capacity(gates);
        for gate in 0..gates {
            let data = (0..hidden * in_dim).map(|_| rng.gen_range(-limit..limit)).collect();
            wx.push(Tensor::from_vec(&[hidden, in_dim], data).expect("gate shape"));
            wh.push(orthogonal(hidden, rng));
            let mut bias = Tensor::zeros(&[hidden]);
            if kind == RecurrentKind::Lstm && gate == LSTM_FORGET {
                bias.data_mut().fill(1.0);
            }
            b.push(bias);
        }
        CellParams { kind, wx, wh, b }
    }

    pub fn hidden(&self) -> usize {
        self.wx[0].rows()
    }

    pub fn in_dim(&self) -> usize {
        self.wx[0].cols()
    }

    pub fn zero_grads(&self) -> CellParams {
        CellParams {
            kind: self.kind,
            wx: self.wx.iter().map(Tensor::zeros_like).collect(),
            wh: self.wh.iter().map(Tensor::zeros_like).collect(),
            b: self.b.iter().map(Tensor::zeros_like).collect(),
        }
    }

    /// Pre-activation for one gate: wx x + wh s + b, where `s` is whatever
    /// recurrent input the gate takes.
    fn gate_preact(&self, gate: usize, x: &[f64], s: &[f64]) -> Vec<f64> {
        let mut a = matvec(&self.wx[gate], x);
        add_assign(&mut a, &matvec(&self.wh[gate], s));
        add_assign(&mut a, self.b[gate].data());
        a
    }

    fn forward_sequence(&self, xs: &Tensor) -> (Vec<f64>, CellCache) {
        let k = xs.rows();
        let h = self.hidden();
        let mut cache = CellCache {
            hs: vec![vec![0.0; h]],
            gates: Vec::with_capacity(k),
            cs: vec![vec![0.0; h]],
            tanh_c: Vec::with_capacity(k),
        };
        for t in 0..k {
            let x = xs.row(t);
            let h_prev = cache.hs.last().unwrap().clone();
            match self.kind {
                RecurrentKind::Rnn => {
                    let a = self.gate_preact(0, x, &h_prev);
                    let h_t: Vec<f64> = a.iter().map(|v| v.tanh()).collect();
                    cache.gates.push(vec![h_t.clone()]);
                    cache.hs.push(h_t);
                }
                RecurrentKind::Gru => {
                    let z: Vec<f64> = self.gate_preact(0, x, &h_prev).iter().map(|&v| sigmoid(v)).collect();
                    let r: Vec<f64> = self.gate_preact(1, x, &h_prev).iter().map(|&v| sigmoid(v)).collect();
                    let rh: Vec<f64> = r.iter().zip(&h_prev).map(|(a, b)| a * b).collect();
                    let g: Vec<f64> = self.gate_preact(2, x, &rh).iter().map(|v| v.tanh()).collect();
                    let h_t: Vec<f64> = (0..h)
                        .map(|i| z[i] * h_prev[i] + (1.0 - z[i]) * g[i])
                        .collect();
                    cache.gates.push(vec![z, r, g]);
                    cache.hs.push(h_t);
                }
                RecurrentKind::Lstm => {
                    let c_prev = cache.cs.last().unwrap().clone();
                    let i: Vec<f64> = self.gate_preact(0, x, &h_prev).iter().map(|&v| sigmoid(v)).collect();
                    let f: Vec<f64> = self.gate_preact(1, x, &h_prev).iter().map(|&v| sigmoid(v)).collect();
                    let g: Vec<f64> = self.gate_preact(2, x, &h_prev).iter().map(|v| v.tanh()).collect();
                    let o: Vec<f64> = self.gate_preact(3, x, &h_prev).iter().map(|&v| sigmoid(v)).collect();
                    let c_t: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
                    let tc: Vec<f64> = c_t.iter().map(|v| v.tanh()).collect();
                    let h_t: Vec<f64> = (0..h).map(|j| o[j] * tc[j]).collect();
                    cache.gates.push(vec![i, f, g, o]);
                    cache.cs.push(c_t);
                    cache.tanh_c.push(tc);
                    cache.hs.push(h_t);
                }
            }
        }
        (cache.hs.last().unwrap().clone(), cache)
    }

    /// BPTT from the gradient of the final hidden state. Accumulates
    /// parameter gradients into `grads`, writes input gradients into `dxs`.
    fn backward_sequence(
        &self,
        xs: &Tensor,
        cache: &CellCache,
        d_final: &[f64],
        grads: &mut CellParams,
        dxs: &mut Tensor,
    ) {
        let k = xs.rows();
        let h = self.hidden();
        let mut dh = d_final.to_vec();
        let mut dc = vec![0.0; h];
        for t in (0..k).rev() {
            let x = xs.row(t);
            let h_prev = &cache.hs[t];
            match self.kind {
                RecurrentKind::Rnn => {
                    let h_t = &cache.gates[t][0];
                    let dz: Vec<f64> = dh.iter().zip(h_t).map(|(&d, &y)| d * (1.0 - y * y)).collect();
                    outer_acc(&dz, x, &mut grads.wx[0]);
                    outer_acc(&dz, h_prev, &mut grads.wh[0]);
                    add_assign(grads.b[0].data_mut(), &dz);
                    add_assign(dxs.row_mut(t), &matvec_t(&self.wx[0], &dz));
                    dh = matvec_t(&self.wh[0], &dz);
                }
                RecurrentKind::Gru => {
                    let (z, r, g) = (&cache.gates[t][0], &cache.gates[t][1], &cache.gates[t][2]);
                    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
                    let dz_gate: Vec<f64> = (0..h).map(|i| dh[i] * (h_prev[i] - g[i])).collect();
                    let dg: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - z[i])).collect();
                    let dag: Vec<f64> = (0..h).map(|i| dg[i] * (1.0 - g[i] * g[i])).collect();
                    let daz: Vec<f64> = (0..h).map(|i| dz_gate[i] * z[i] * (1.0 - z[i])).collect();
                    let d_rh = matvec_t(&self.wh[2], &dag);
                    let dr: Vec<f64> = (0..h).map(|i| d_rh[i] * h_prev[i]).collect();
                    let dar: Vec<f64> = (0..h).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();

                    outer_acc(&daz, x, &mut grads.wx[0]);
                    outer_acc(&daz, h_prev, &mut grads.wh[0]);
                    add_assign(grads.b[0].data_mut(), &daz);
                    outer_acc(&dar, x, &mut grads.wx[1]);
                    outer_acc(&dar, h_prev, &mut grads.wh[1]);
                    add_assign(grads.b[1].data_mut(), &dar);
                    outer_acc(&dag, x, &mut grads.wx[2]);
                    outer_acc(&dag, &rh, &mut grads.wh[2]);
                    add_assign(grads.b[2].data_mut(), &dag);

                    let mut dx = matvec_t(&self.wx[0], &daz);
                    add_assign(&mut dx, &matvec_t(&self.wx[1], &dar));
                    add_assign(&mut dx, &matvec_t(&self.wx[2], &dag));
                    add_assign(dxs.row_mut(t), &dx);

                    let mut dh_prev: Vec<f64> = (0..h).map(|i| dh[i] * z[i] + d_rh[i] * r[i]).collect();
                    add_assign(&mut dh_prev, &matvec_t(&self.wh[0], &daz));
                    add_assign(&mut dh_prev, &matvec_t(&self.wh[1], &dar));
                    dh = dh_prev;
                }
                RecurrentKind::Lstm => {
                    let (i_g, f_g, g_g, o_g) = (
                        &cache.gates[t][0],
                        &cache.gates[t][1],
                        &cache.gates[t][2],
                        &cache.gates[t][3],
                    );
                    let c_prev = &cache.cs[t];
                    let tc = &cache.tanh_c[t];
                    let dao: Vec<f64> = (0..h)
                        .map(|j| dh[j] * tc[j] * o_g[j] * (1.0 - o_g[j]))
                        .collect();
                    for j in 0..h {
                        dc[j] += dh[j] * o_g[j] * (1.0 - tc[j] * tc[j]);
                    }
                    let dai: Vec<f64> = (0..h)
                        .map(|j| dc[j] * g_g[j] * i_g[j] * (1.0 - i_g[j]))
                        .collect();
                    let daf: Vec<f64> = (0..h)
                        .map(|j| dc[j] * c_prev[j] * f_g[j] * (1.0 - f_g[j]))
                        .collect();
                    let dag: Vec<f64> = (0..h)
                        .map(|j| dc[j] * i_g[j] * (1.0 - g_g[j] * g_g[j]))
                        .collect();

                    let das = [&dai, &daf, &dag, &dao];
                    let mut dx = vec![0.0; self.in_dim()];
                    let mut dh_prev = vec![0.0; h];
                    for (gate, da) in das.iter().enumerate() {
                        outer_acc(da, x, &mut grads.wx[gate]);
                        outer_acc(da, h_prev, &mut grads.wh[gate]);
                        add_assign(grads.b[gate].data_mut(), da);
                        add_assign(&mut dx, &matvec_t(&self.wx[gate], da));
                        add_assign(&mut dh_prev, &matvec_t(&self.wh[gate], da));
                    }
                    add_assign(dxs.row_mut(t), &dx);
                    dh = dh_prev;
                    for j in 0..h {
                        dc[j] *= f_g[j];
                    }
                }
            }
        }
    }
}

impl NamedTensors for CellParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (gate, name) in self.kind.gate_names().iter().enumerate() {
            out.push((format!("{name}.wx"), &self.wx[gate]));
            out.push((format!("{name}.wh"), &self.wh[gate]));
            out.push((format!("{name}.b"), &self.b[gate]));
        }
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        let names = self.kind.gate_names();
        for (gate, (wx, (wh, b))) in self
            .wx
            .iter_mut()
            .zip(self.wh.iter_mut().zip(self.b.iter_mut()))
            .enumerate()
        {
            out.push((format!("{}.wx", names[gate]), wx));
            out.push((format!("{}.wh", names[gate]), wh));
            out.push((format!("{}.b", names[gate]), b));
        }
        out
    }
}

/// Per-direction forward cache.
#[derive(Debug, Clone)]
pub struct CellCache {
    hs: Vec<Vec<f64>>,
    gates: Vec<Vec<Vec<f64>>>,
    cs: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
}

/// A [Bi]RNN/LSTM/GRU layer yielding the final-state representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrentLayer {
    pub spec: RecurrentLayerSpec,
    fwd: CellParams,
    bwd: Option<CellParams>,
}

#[derive(Debug, Clone)]
pub struct RecurrentCache {
    fwd: CellCache,
    bwd: Option<CellCache>,
    xs_rev: Option<Tensor>,
}

fn reverse_rows(xs: &Tensor) -> Tensor {
    let (k, n) = (xs.rows(), xs.cols());
    let mut out = Tensor::zeros(&[k, n]);
    for t in 0..k {
        out.row_mut(t).copy_from_slice(xs.row(k - 1 - t));
    }
    out
}

impl RecurrentLayer {
    pub fn new(in_dim: usize, spec: RecurrentLayerSpec, rng: &mut impl Rng) -> Result<RecurrentLayer> {
        spec.validate()?;
        if in_dim == 0 {
            return Err(Error::InvalidConfig("recurrent input width must be > 0".into()));
        }
        let fwd = CellParams::new(spec.kind, in_dim, spec.hidden_units, rng);
        let bwd = spec
            .bidirectional
            .then(|| CellParams::new(spec.kind, in_dim, spec.hidden_units, rng));
        Ok(RecurrentLayer { spec, fwd, bwd })
    }

    pub fn in_dim(&self) -> usize {
        self.fwd.in_dim()
    }

    /// Width of the final state: hidden_units, doubled when bidirectional.
    pub fn output_dim(&self) -> usize {
        self.spec.hidden_units * if self.spec.bidirectional { 2 } else { 1 }
    }

    pub fn zero_grads(&self) -> RecurrentLayer {
        RecurrentLayer {
            spec: self.spec,
            fwd: self.fwd.zero_grads(),
            bwd: self.bwd.as_ref().map(CellParams::zero_grads),
        }
    }

    /// Runs the sequence [k x in_dim] and returns the final state.
    pub fn forward(&self, xs: &Tensor) -> Result<(Vec<f64>, RecurrentCache)> {
        if xs.shape().len() != 2 || xs.cols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                what: "recurrent input sequence".into(),
                expected: self.in_dim(),
                got: if xs.shape().len() == 2 { xs.cols() } else { 0 },
            });
        }
        if xs.rows() == 0 {
            return Err(Error::EmptyInput("recurrent layer got an empty sequence"));
        }
        let (h_fwd, cache_fwd) = self.fwd.forward_sequence(xs);
        match &self.bwd {
            None => Ok((
                h_fwd,
                RecurrentCache {
                    fwd: cache_fwd,
                    bwd: None,
                    xs_rev: None,
                },
            )),
            Some(bwd) => {
                let xs_rev = reverse_rows(xs);
                let (h_bwd, cache_bwd) = bwd.forward_sequence(&xs_rev);
                let mut state = h_fwd;
                state.extend_from_slice(&h_bwd);
                Ok((
                    state,
                    RecurrentCache {
                        fwd: cache_fwd,
                        bwd: Some(cache_bwd),
                        xs_rev: Some(xs_rev),
                    },
                ))
            }
        }
    }

    /// BPTT: accumulates parameter gradients into `grads` and returns the
    /// gradient with respect to the input sequence.
    pub fn backward(
        &self,
        xs: &Tensor,
        cache: &RecurrentCache,
        dy: &[f64],
        grads: &mut RecurrentLayer,
    ) -> Tensor {
        let h = self.spec.hidden_units;
        let mut dxs = Tensor::zeros(&[xs.rows(), xs.cols()]);
        self.fwd
            .backward_sequence(xs, &cache.fwd, &dy[..h], &mut grads.fwd, &mut dxs);
        if let (Some(bwd), Some(cache_bwd), Some(xs_rev)) =
            (&self.bwd, &cache.bwd, &cache.xs_rev)
        {
            let mut dxs_rev = Tensor::zeros(&[xs.rows(), xs.cols()]);
            bwd.backward_sequence(
                xs_rev,
                cache_bwd,
                &dy[h..],
                grads.bwd.as_mut().expect("grads twin has same shape"),
                &mut dxs_rev,
            );
            let k = xs.rows();
            for t in 0..k {
                add_assign(dxs.row_mut(t), dxs_rev.row(k - 1 - t));
            }
        }
        dxs
    }
}

impl NamedTensors for RecurrentLayer {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefix_named("fwd", self.fwd.named_tensors());
        if let Some(bwd) = &self.bwd {
            out.extend(prefix_named("bwd", bwd.named_tensors()));
        }
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = prefix_named_mut("fwd", self.fwd.named_tensors_mut());
        if let Some(bwd) = &mut self.bwd {
            out.extend(prefix_named_mut("bwd", bwd.named_tensors_mut()));
        }
        out
    }
}
