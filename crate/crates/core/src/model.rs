//! The two-branch ensemble classifier.
//!
//! Text Branch: token ids looked up in the frozen word table (or a
//! precomputed transformer sequence) feed a [Bi]RNN/LSTM/GRU layer whose
//! final state is the Text Content Embedding. Propagation Branch: the
//! author's frozen node vector passes through a ReLU dense layer to form the
//! Propagation Embedding. The two are concatenated into the
//! Propagation-Enhanced Content Embedding, refined by another ReLU dense
//! layer, and classified by a 1-unit sigmoid head.
//!
//! Embedding tables are inputs trained beforehand; ensemble training never
//! updates them.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::optim::{Optimizer, OptimizerConfig};
use crate::nn::recurrent::{RecurrentCache, RecurrentKind, RecurrentLayer, RecurrentLayerSpec};
use crate::nn::{
    apply_dropout, bce_gradient, binary_cross_entropy, prefix_named, prefix_named_mut,
    Activation, DenseCache, DenseLayer, DenseLayerSpec, NamedTensors, Tensor,
};
use crate::seeds;
use crate::sgns::EmbeddingMatrix;

/// Word-embedding source for the Text Branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeModel {
    Word2Vec,
    /// A precomputed transformer sequence set, by name (e.g. "bert").
    Pretrained(String),
}

impl WeModel {
    pub fn describe(&self) -> String {
        match self {
            WeModel::Word2Vec => "word2vec".to_string(),
            WeModel::Pretrained(name) => name.clone(),
        }
    }
}

/// Node-embedding source for the Propagation Branch; `None` disables the
/// branch (ablation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeModel {
    None,
    Node2Vec,
    DeepWalk,
}

impl NeModel {
    pub fn describe(&self) -> &'static str {
        match self {
            NeModel::None => "none",
            NeModel::Node2Vec => "node2vec",
            NeModel::DeepWalk => "deepwalk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GetaeConfig {
    pub bidirection: bool,
    pub recurrent: RecurrentKind,
    pub we_model: WeModel,
    pub ne_model: NeModel,
    /// Recurrent units per direction.
    pub hidden_units: usize,
    pub graph_dense_units: usize,
    pub ensemble_dense_units: usize,
    pub dropout: f64,
    /// Apply dropout to each embedded input timestep instead of the final
    /// recurrent state.
    pub dropout_per_timestep: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl GetaeConfig {
    /// Defaults per the reference layer table: 64 recurrent units per
    /// direction, 32-unit dense layers, dropout 0.2, Adam at 0.001; 30
    /// epochs for pretrained word embeddings, 8 for Word2Vec.
    pub fn defaults(
        we_model: WeModel,
        ne_model: NeModel,
        recurrent: RecurrentKind,
        bidirection: bool,
    ) -> GetaeConfig {
        let epochs = match we_model {
            WeModel::Word2Vec => 8,
            WeModel::Pretrained(_) => 30,
        };
        GetaeConfig {
            bidirection,
            recurrent,
            we_model,
            ne_model,
            hidden_units: 64,
            graph_dense_units: 32,
            ensemble_dense_units: 32,
            dropout: 0.2,
            dropout_per_timestep: false,
            epochs,
            batch_size: 32,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.hidden_units == 0 || self.ensemble_dense_units == 0 || self.graph_dense_units == 0
        {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.optimizer.learning_rate < 0.0 {
            return Err(Error::InvalidConfig("learning rate must be >= 0".into()));
        }
        Ok(())
    }

    /// Stable config descriptor used in report rows.
    pub fn describe(&self) -> String {
        format!(
            "we={} ne={} cell={} dir={}",
            self.we_model.describe(),
            self.ne_model.describe(),
            self.recurrent.as_str(),
            if self.bidirection { "bi" } else { "uni" }
        )
    }
}

/// One classifier input: either a (possibly left-padded) token-id row or a
/// pretrained vector sequence, plus the author node key and binary label.
#[derive(Debug, Clone)]
pub struct Sample {
    pub input: SampleInput,
    pub author: String,
    pub label: u8,
}

#[derive(Debug, Clone)]
pub enum SampleInput {
    TokenIds(Vec<u32>),
    Sequence(Tensor),
}

impl Sample {
    pub fn from_tokens(row: Vec<u32>, author: impl Into<String>, label: u8) -> Sample {
        Sample {
            input: SampleInput::TokenIds(row),
            author: author.into(),
            label,
        }
    }

    pub fn from_sequence(seq: &[Vec<f64>], author: impl Into<String>, label: u8) -> Result<Sample> {
        if seq.is_empty() {
            return Err(Error::EmptyInput("pretrained sample with no tokens"));
        }
        let dim = seq[0].len();
        let data: Vec<f64> = seq.iter().flat_map(|v| v.iter().copied()).collect();
        Ok(Sample {
            input: SampleInput::Sequence(Tensor::from_vec(&[seq.len(), dim], data)?),
            author: author.into(),
            label,
        })
    }
}

/// Frozen word-embedding table: row per token id, row 0 all zero (padding).
#[derive(Debug, Clone)]
pub enum TextEmbeddings {
    Word2Vec(Tensor),
    /// Pretrained sequences arrive per sample; only the width is fixed here.
    PretrainedDim(usize),
}

impl TextEmbeddings {
    /// Copies the input table of a trained SGNS matrix (padding row
    /// included).
    pub fn from_sgns(matrix: &EmbeddingMatrix) -> TextEmbeddings {
        let rows = matrix.rows();
        let dim = matrix.dim();
        let mut t = Tensor::zeros(&[rows, dim]);
        for i in 0..rows {
            t.row_mut(i).copy_from_slice(matrix.input_row(i));
        }
        TextEmbeddings::Word2Vec(t)
    }

    pub fn dim(&self) -> usize {
        match self {
            TextEmbeddings::Word2Vec(t) => t.cols(),
            TextEmbeddings::PretrainedDim(d) => *d,
        }
    }
}

/// Frozen node-embedding table with its key index.
#[derive(Debug, Clone)]
pub struct NodeEmbeddings {
    pub table: Tensor,
    pub index: HashMap<String, usize>,
}

impl NodeEmbeddings {
    pub fn new(keys: &[String], vectors: &[Vec<f64>]) -> Result<NodeEmbeddings> {
        if keys.len() != vectors.len() || keys.is_empty() {
            return Err(Error::InvalidConfig(
                "node embeddings need matching, non-empty keys and vectors".into(),
            ));
        }
        let dim = vectors[0].len();
        let mut table = Tensor::zeros(&[keys.len(), dim]);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: format!("node vector for {}", keys[i]),
                    expected: dim,
                    got: v.len(),
                });
            }
            table.row_mut(i).copy_from_slice(v);
        }
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        Ok(NodeEmbeddings { table, index })
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }
}

/// The trainable layers, shared shape-wise between parameters and gradients.
#[derive(Debug, Clone)]
struct Stack {
    recurrent: RecurrentLayer,
    graph_dense: Option<DenseLayer>,
    ensemble_dense: DenseLayer,
    output: DenseLayer,
}

impl Stack {
    fn zero_grads(&self) -> Stack {
        Stack {
            recurrent: self.recurrent.zero_grads(),
            graph_dense: self.graph_dense.as_ref().map(DenseLayer::zero_grads),
            ensemble_dense: self.ensemble_dense.zero_grads(),
            output: self.output.zero_grads(),
        }
    }
}

impl NamedTensors for Stack {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefix_named("recurrent", self.recurrent.named_tensors());
        if let Some(gd) = &self.graph_dense {
            out.extend(prefix_named("graph_dense", gd.named_tensors()));
        }
        out.extend(prefix_named("ensemble_dense", self.ensemble_dense.named_tensors()));
        out.extend(prefix_named("output", self.output.named_tensors()));
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = prefix_named_mut("recurrent", self.recurrent.named_tensors_mut());
        if let Some(gd) = &mut self.graph_dense {
            out.extend(prefix_named_mut("graph_dense", gd.named_tensors_mut()));
        }
        out.extend(prefix_named_mut(
            "ensemble_dense",
            self.ensemble_dense.named_tensors_mut(),
        ));
        out.extend(prefix_named_mut("output", self.output.named_tensors_mut()));
        out
    }
}

/// Assembled model: frozen embedding inputs plus the trainable stack.
#[derive(Debug, Clone)]
pub struct ModelParams {
    config: GetaeConfig,
    word_table: Option<Tensor>,
    node_table: Option<Tensor>,
    node_index: HashMap<String, usize>,
    node_keys: Vec<String>,
    stack: Stack,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    xs: Tensor,
    recurrent: RecurrentCache,
    dropout_mult: Option<Vec<f64>>,
    graph: Option<DenseCache>,
    text_width: usize,
    ensemble: DenseCache,
    output: DenseCache,
    pub y_hat: f64,
}

/// Gradients for the trainable stack.
pub struct ModelGrads {
    stack: Stack,
}

impl NamedTensors for ModelGrads {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        self.stack.named_tensors()
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.stack.named_tensors_mut()
    }
}

/// Builds the model for a config from its frozen embedding inputs.
pub fn assemble(
    config: GetaeConfig,
    text: &TextEmbeddings,
    nodes: Option<&NodeEmbeddings>,
) -> Result<ModelParams> {
    config.validate()?;
    match (&config.we_model, text) {
        (WeModel::Word2Vec, TextEmbeddings::Word2Vec(_)) => {}
        (WeModel::Pretrained(_), TextEmbeddings::PretrainedDim(_)) => {}
        _ => {
            return Err(Error::InvalidConfig(
                "word-embedding source does not match we_model".into(),
            ))
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix_str(config.seed, "model-init"));
    let in_dim = text.dim();
    let recurrent = RecurrentLayer::new(
        in_dim,
        RecurrentLayerSpec {
            kind: config.recurrent,
            hidden_units: config.hidden_units,
            bidirectional: config.bidirection,
            dropout: config.dropout,
        },
        &mut rng,
    )?;
    let (graph_dense, node_table, node_index, node_keys) = match config.ne_model {
        NeModel::None => (None, None, HashMap::new(), Vec::new()),
        _ => {
            let n = nodes.ok_or_else(|| {
                Error::Missing("node embeddings required when the propagation branch is on".into())
            })?;
            let dense = DenseLayer::new(
                n.dim(),
                DenseLayerSpec {
                    units: config.graph_dense_units,
                    activation: Activation::ReLU,
                },
                &mut rng,
            )?;
            let mut keys: Vec<(usize, String)> =
                n.index.iter().map(|(k, &i)| (i, k.clone())).collect();
            keys.sort();
            (
                Some(dense),
                Some(n.table.clone()),
                n.index.clone(),
                keys.into_iter().map(|(_, k)| k).collect(),
            )
        }
    };
    let text_width = recurrent.output_dim();
    let concat_width = text_width + graph_dense.as_ref().map_or(0, DenseLayer::out_dim);
    let ensemble_dense = DenseLayer::new(
        concat_width,
        DenseLayerSpec {
            units: config.ensemble_dense_units,
            activation: Activation::ReLU,
        },
        &mut rng,
    )?;
    let output = DenseLayer::new(
        config.ensemble_dense_units,
        DenseLayerSpec {
            units: 1,
            activation: Activation::Sigmoid,
        },
        &mut rng,
    )?;
    let word_table = match text {
        TextEmbeddings::Word2Vec(t) => Some(t.clone()),
        TextEmbeddings::PretrainedDim(_) => None,
    };
    Ok(ModelParams {
        config,
        word_table,
        node_table,
        node_index,
        node_keys,
        stack: Stack {
            recurrent,
            graph_dense,
            ensemble_dense,
            output,
        },
    })
}

impl ModelParams {
    pub fn config(&self) -> &GetaeConfig {
        &self.config
    }

    /// Width of the Text Content Embedding.
    pub fn text_width(&self) -> usize {
        self.stack.recurrent.output_dim()
    }

    /// Width of the concatenated representation entering the ensemble dense.
    pub fn concat_width(&self) -> usize {
        self.stack.ensemble_dense.in_dim()
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            stack: self.stack.zero_grads(),
        }
    }

    /// Trainable tensors only (what the optimizer updates).
    pub fn named_trainable(&self) -> Vec<(String, &Tensor)> {
        self.stack.named_tensors()
    }

    fn named_trainable_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.stack.named_tensors_mut()
    }

    /// Looks a sample up against the frozen tables and builds the embedded
    /// input sequence.
    fn embed_input(&self, sample: &Sample) -> Result<Tensor> {
        match (&sample.input, &self.word_table) {
            (SampleInput::TokenIds(ids), Some(table)) => {
                if ids.is_empty() {
                    return Err(Error::EmptyInput("sample with an empty token row"));
                }
                let dim = table.cols();
                let mut xs = Tensor::zeros(&[ids.len(), dim]);
                for (t, &id) in ids.iter().enumerate() {
                    if id as usize >= table.rows() {
                        return Err(Error::Missing(format!(
                            "token id {id} outside the word table ({} rows)",
                            table.rows()
                        )));
                    }
                    xs.row_mut(t).copy_from_slice(table.row(id as usize));
                }
                Ok(xs)
            }
            (SampleInput::Sequence(seq), None) => {
                if seq.cols() != self.stack.recurrent.in_dim() {
                    return Err(Error::DimensionMismatch {
                        what: "pretrained sequence width".into(),
                        expected: self.stack.recurrent.in_dim(),
                        got: seq.cols(),
                    });
                }
                Ok(seq.clone())
            }
            (SampleInput::TokenIds(_), None) => Err(Error::InvalidConfig(
                "token-id sample fed to a pretrained-sequence model".into(),
            )),
            (SampleInput::Sequence(_), Some(_)) => Err(Error::InvalidConfig(
                "sequence sample fed to a word-table model".into(),
            )),
        }
    }

    /// Author's node vector; authors absent from the table fall back to the
    /// zero vector, mirroring padding semantics.
    fn node_vector(&self, author: &str) -> Option<Vec<f64>> {
        let table = self.node_table.as_ref()?;
        Some(match self.node_index.get(author) {
            Some(&row) => table.row(row).to_vec(),
            None => vec![0.0; table.cols()],
        })
    }

    /// Full forward pass. Dropout fires only in training mode.
    pub fn forward(
        &self,
        sample: &Sample,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<ForwardCache> {
        let mut xs = self.embed_input(sample)?;
        if training && self.config.dropout_per_timestep && self.config.dropout > 0.0 {
            for t in 0..xs.rows() {
                let (masked, _) = apply_dropout(xs.row(t), self.config.dropout, rng, true)?;
                xs.row_mut(t).copy_from_slice(&masked);
            }
        }

        let (state, rec_cache) = self.stack.recurrent.forward(&xs)?;
        let (text_repr, dropout_mult) = if self.config.dropout_per_timestep {
            (state, None)
        } else {
            apply_dropout(&state, self.config.dropout, rng, training)?
        };

        let graph = match (&self.stack.graph_dense, self.node_vector(&sample.author)) {
            (Some(dense), Some(node_vec)) => Some(dense.forward(&node_vec)?),
            _ => None,
        };

        let mut concat = text_repr;
        let text_width = concat.len();
        if let Some((graph_repr, _)) = &graph {
            concat.extend_from_slice(graph_repr);
        }
        let (ensemble_out, ensemble_cache) = self.stack.ensemble_dense.forward(&concat)?;
        let (y, output_cache) = self.stack.output.forward(&ensemble_out)?;
        Ok(ForwardCache {
            xs,
            recurrent: rec_cache,
            dropout_mult,
            graph: graph.map(|(_, c)| c),
            text_width,
            ensemble: ensemble_cache,
            output: output_cache,
            y_hat: y[0],
        })
    }

    /// Backpropagates d(loss)/d(y_hat), accumulating into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_y_hat: f64, grads: &mut ModelGrads) {
        let d_ensemble_out =
            self.stack
                .output
                .backward(&cache.output, &[d_y_hat], &mut grads.stack.output);
        let d_concat = self.stack.ensemble_dense.backward(
            &cache.ensemble,
            &d_ensemble_out,
            &mut grads.stack.ensemble_dense,
        );
        let (d_text, d_graph) = d_concat.split_at(cache.text_width);

        let mut d_state = d_text.to_vec();
        if let Some(mult) = &cache.dropout_mult {
            for (d, m) in d_state.iter_mut().zip(mult) {
                *d *= m;
            }
        }
        // Input gradients stop here: the embedding tables are frozen.
        let _ = self.stack.recurrent.backward(
            &cache.xs,
            &cache.recurrent,
            &d_state,
            &mut grads.stack.recurrent,
        );
        if let (Some(dense), Some(gc)) = (&self.stack.graph_dense, &cache.graph) {
            let g = grads.stack.graph_dense.as_mut().expect("grads twin has the branch");
            let _ = dense.backward(gc, d_graph, g);
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub final_train_accuracy: f64,
}

/// Mini-batch training with binary cross-entropy. Deterministic per seed.
pub fn train(params: &mut ModelParams, samples: &[Sample]) -> Result<TrainReport> {
    if samples.len() < 2 {
        return Err(Error::EmptyInput("training needs at least 2 samples"));
    }
    if samples.iter().all(|s| s.label == 0) || samples.iter().all(|s| s.label == 1) {
        return Err(Error::SingleClass);
    }
    let config = params.config.clone();
    let lr = config.optimizer.learning_rate;
    let mut optimizer = if lr == 0.0 {
        Optimizer::new(OptimizerConfig {
            learning_rate: 1.0,
            ..config.optimizer
        })?
        .with_learning_rate(0.0)
    } else {
        Optimizer::new(config.optimizer)?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix_str(config.seed, "ensemble-train"));

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = params.zero_grads();
            let inv = 1.0 / batch.len() as f64;
            for &idx in batch {
                let sample = &samples[idx];
                let cache = params.forward(sample, true, &mut rng)?;
                epoch_loss += binary_cross_entropy(cache.y_hat, sample.label);
                let d = bce_gradient(cache.y_hat, sample.label) * inv;
                params.backward(&cache, d, &mut grads);
            }
            optimizer.step(params.named_trainable_mut(), &grads.named_tensors())?;
        }
        let mean = epoch_loss / samples.len() as f64;
        epoch_losses.push(mean);
        log::info!("ensemble epoch {}/{} mean loss {:.6}", epoch + 1, config.epochs, mean);
    }

    let preds = predict(params, samples, 0.5)?;
    let correct = preds
        .iter()
        .zip(samples)
        .filter(|(p, s)| p.label == s.label)
        .count();
    Ok(TrainReport {
        epoch_losses,
        final_train_accuracy: correct as f64 / samples.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
}

/// Inference over samples; a prediction is positive when the probability
/// reaches the threshold (ties resolve positive).
pub fn predict(params: &ModelParams, samples: &[Sample], threshold: f64) -> Result<Vec<Prediction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0); // never consulted at inference
    samples
        .iter()
        .map(|s| {
            let cache = params.forward(s, false, &mut rng)?;
            Ok(Prediction {
                label: u8::from(cache.y_hat >= threshold),
                probability: cache.y_hat,
            })
        })
        .collect()
}

/// Sidecar record making a checkpoint self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    config: GetaeConfig,
    node_keys: Vec<String>,
    input_dim: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes the binary checkpoint plus the `<path>.json` sidecar.
pub fn save_model(params: &ModelParams, path: &Path) -> Result<()> {
    let mut tensors = params.named_trainable();
    if let Some(w) = &params.word_table {
        tensors.push(("frozen.word_table".to_string(), w));
    }
    if let Some(n) = &params.node_table {
        tensors.push(("frozen.node_table".to_string(), n));
    }
    write_checkpoint(path, &tensors)?;
    let sidecar = Sidecar {
        config: params.config.clone(),
        node_keys: params.node_keys.clone(),
        input_dim: params.stack.recurrent.in_dim(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Checkpoint(format!("sidecar encode: {e}")))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Loads a checkpoint back into a self-described model.
pub fn load_model(path: &Path) -> Result<ModelParams> {
    let sidecar_raw = std::fs::read_to_string(sidecar_path(path))?;
    let sidecar: Sidecar = serde_json::from_str(&sidecar_raw)
        .map_err(|e| Error::Checkpoint(format!("sidecar decode: {e}")))?;
    let tensors = read_checkpoint(path)?;
    let mut map: HashMap<String, Tensor> = tensors.into_iter().collect();

    let word_table = map.remove("frozen.word_table");
    let node_table = map.remove("frozen.node_table");
    let text = match (&sidecar.config.we_model, &word_table) {
        (WeModel::Word2Vec, Some(w)) => TextEmbeddings::Word2Vec(w.clone()),
        (WeModel::Pretrained(_), None) => TextEmbeddings::PretrainedDim(sidecar.input_dim),
        _ => {
            return Err(Error::Checkpoint(
                "word table presence does not match the sidecar config".into(),
            ))
        }
    };
    let nodes = match (&sidecar.config.ne_model, &node_table) {
        (NeModel::None, None) => None,
        (NeModel::None, Some(_)) | (_, None) => {
            return Err(Error::Checkpoint(
                "node table presence does not match the sidecar config".into(),
            ))
        }
        (_, Some(table)) => {
            if sidecar.node_keys.len() != table.rows() {
                return Err(Error::Checkpoint(format!(
                    "{} node keys for {} table rows",
                    sidecar.node_keys.len(),
                    table.rows()
                )));
            }
            let vectors: Vec<Vec<f64>> =
                (0..table.rows()).map(|i| table.row(i).to_vec()).collect();
            Some(NodeEmbeddings::new(&sidecar.node_keys, &vectors)?)
        }
    };
    let mut params = assemble(sidecar.config, &text, nodes.as_ref())?;

    let mut loaded = 0usize;
    for (name, tensor) in params.named_trainable_mut() {
        let stored = map.remove(&name).ok_or_else(|| {
            Error::Checkpoint(format!("checkpoint is missing tensor {name}"))
        })?;
        if stored.shape() != tensor.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor {name} has shape {:?}, expected {:?}",
                stored.shape(),
                tensor.shape()
            )));
        }
        tensor.data_mut().copy_from_slice(stored.data());
        loaded += 1;
    }
    if !map.is_empty() {
        return Err(Error::Checkpoint(format!(
            "checkpoint carries {} unknown tensors (loaded {loaded})",
            map.len()
        )));
    }
    Ok(params)
}

impl ModelParams {
    /// Structural compatibility gate for loading a checkpoint under an
    /// expected configuration.
    pub fn check_compatible(&self, expected: &GetaeConfig) -> Result<()> {
        let c = &self.config;
        let same = c.bidirection == expected.bidirection
            && c.recurrent == expected.recurrent
            && c.we_model == expected.we_model
            && c.ne_model == expected.ne_model
            && c.hidden_units == expected.hidden_units
            && c.graph_dense_units == expected.graph_dense_units
            && c.ensemble_dense_units == expected.ensemble_dense_units;
        if same {
            Ok(())
        } else {
            Err(Error::Checkpoint(format!(
                "checkpoint config ({}) is incompatible with the requested config ({})",
                c.describe(),
                expected.describe()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_table(vocab: usize, dim: usize, seed: u64) -> TextEmbeddings {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor::zeros(&[vocab + 1, dim]);
        for i in 1..=vocab {
            for v in t.row_mut(i) {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        TextEmbeddings::Word2Vec(t)
    }

    fn node_embeddings(dim: usize) -> NodeEmbeddings {
        let keys: Vec<String> = vec!["u1".into(), "u2".into(), "zero".into()];
        let vectors = vec![
            (0..dim).map(|i| 0.1 * i as f64 + 0.2).collect(),
            (0..dim).map(|i| -0.1 * i as f64 - 0.3).collect(),
            vec![0.0; dim],
        ];
        NodeEmbeddings::new(&keys, &vectors).unwrap()
    }

    fn small_config(ne: NeModel, kind: RecurrentKind, bi: bool) -> GetaeConfig {
        let mut c = GetaeConfig::defaults(WeModel::Word2Vec, ne, kind, bi);
        c.hidden_units = 6;
        c.graph_dense_units = 5;
        c.ensemble_dense_units = 4;
        c.dropout = 0.0;
        c.batch_size = 8;
        c.seed = 3;
        c
    }

    #[test]
    fn assembly_dimension_arithmetic() {
        let text = word_table(10, 100, 1);
        let nodes = node_embeddings(100);
        let config = GetaeConfig::defaults(
            WeModel::Word2Vec,
            NeModel::Node2Vec,
            RecurrentKind::Lstm,
            true,
        );
        let params = assemble(config, &text, Some(&nodes)).unwrap();
        assert_eq!(params.text_width(), 128);
        assert_eq!(params.concat_width(), 160);
        assert_eq!(params.stack.output.out_dim(), 1);

        let ablated = assemble(
            GetaeConfig::defaults(WeModel::Word2Vec, NeModel::None, RecurrentKind::Lstm, true),
            &text,
            None,
        )
        .unwrap();
        assert_eq!(ablated.concat_width(), 128);

        let gru = assemble(
            GetaeConfig::defaults(WeModel::Word2Vec, NeModel::None, RecurrentKind::Gru, false),
            &text,
            None,
        )
        .unwrap();
        assert_eq!(gru.text_width(), 64);
    }

    #[test]
    fn missing_node_embeddings_is_an_error() {
        let text = word_table(4, 8, 2);
        let config = small_config(NeModel::DeepWalk, RecurrentKind::Rnn, false);
        assert!(matches!(assemble(config, &text, None), Err(Error::Missing(_))));
    }

    #[test]
    fn zeroed_trainables_predict_one_half() {
        let text = word_table(4, 8, 2);
        let nodes = node_embeddings(8);
        let config = small_config(NeModel::Node2Vec, RecurrentKind::Gru, true);
        let mut params = assemble(config, &text, Some(&nodes)).unwrap();
        for (_, t) in params.named_trainable_mut() {
            t.data_mut().fill(0.0);
        }
        let sample = Sample::from_tokens(vec![0, 1, 2], "u1", 1);
        let preds = predict(&params, &[sample], 0.5).unwrap();
        assert_eq!(preds[0].probability, 0.5);
        assert_eq!(preds[0].label, 1); // tie resolves to the positive class
    }

    #[test]
    fn unknown_author_equals_zero_vector_author() {
        let text = word_table(4, 8, 5);
        let nodes = node_embeddings(8);
        let config = small_config(NeModel::Node2Vec, RecurrentKind::Lstm, false);
        let params = assemble(config, &text, Some(&nodes)).unwrap();
        let a = Sample::from_tokens(vec![1, 2], "nobody-here", 0);
        let b = Sample::from_tokens(vec![1, 2], "zero", 0);
        let pa = predict(&params, &[a], 0.5).unwrap();
        let pb = predict(&params, &[b], 0.5).unwrap();
        assert_eq!(pa[0].probability, pb[0].probability);
    }

    #[test]
    fn inference_is_deterministic_and_order_invariant() {
        let text = word_table(6, 8, 7);
        let config = small_config(NeModel::None, RecurrentKind::Gru, true);
        let params = assemble(config, &text, None).unwrap();
        let samples = vec![
            Sample::from_tokens(vec![1, 2, 3], "a", 1),
            Sample::from_tokens(vec![0, 4, 5], "b", 0),
            Sample::from_tokens(vec![2, 2, 2], "c", 1),
        ];
        let first = predict(&params, &samples, 0.5).unwrap();
        let second = predict(&params, &samples, 0.5).unwrap();
        assert_eq!(first, second);
        let reversed: Vec<Sample> = samples.iter().rev().cloned().collect();
        let rev = predict(&params, &reversed, 0.5).unwrap();
        assert_eq!(rev[2], first[0]);
        assert_eq!(rev[0], first[2]);
    }

    #[test]
    fn branchless_predictions_ignore_the_author() {
        let text = word_table(6, 8, 9);
        let config = small_config(NeModel::None, RecurrentKind::Rnn, false);
        let params = assemble(config, &text, None).unwrap();
        let a = Sample::from_tokens(vec![1, 2], "somebody", 0);
        let b = Sample::from_tokens(vec![1, 2], "somebody-else", 0);
        assert_eq!(
            predict(&params, &[a], 0.5).unwrap()[0].probability,
            predict(&params, &[b], 0.5).unwrap()[0].probability
        );
    }

    fn separable_samples(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    Sample::from_tokens(vec![1, 2, 1], "u1", 1)
                } else {
                    Sample::from_tokens(vec![3, 4, 3], "u2", 0)
                }
            })
            .collect()
    }

    #[test]
    fn training_overfits_a_separable_set() {
        let text = word_table(4, 8, 11);
        let nodes = node_embeddings(8);
        let mut config = small_config(NeModel::Node2Vec, RecurrentKind::Gru, false);
        config.epochs = 200;
        let mut params = assemble(config, &text, Some(&nodes)).unwrap();
        let report = train(&mut params, &separable_samples(32)).unwrap();
        assert_eq!(report.final_train_accuracy, 1.0, "losses: {:?}", report.epoch_losses.last());
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let text = word_table(4, 8, 13);
        let mut config = small_config(NeModel::None, RecurrentKind::Rnn, false);
        config.optimizer.learning_rate = 0.0;
        config.epochs = 3;
        let mut params = assemble(config, &text, None).unwrap();
        let before: Vec<Tensor> = params
            .named_trainable()
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect();
        let report = train(&mut params, &separable_samples(8)).unwrap();
        let after: Vec<Tensor> = params
            .named_trainable()
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect();
        assert_eq!(before, after);
        for w in report.epoch_losses.windows(2) {
            assert_eq!(w[0], w[1]);
        }
    }

    #[test]
    fn single_class_training_is_an_error() {
        let text = word_table(4, 8, 15);
        let config = small_config(NeModel::None, RecurrentKind::Gru, false);
        let mut params = assemble(config, &text, None).unwrap();
        let samples: Vec<Sample> = (0..6)
            .map(|_| Sample::from_tokens(vec![1, 2], "x", 1))
            .collect();
        assert!(matches!(train(&mut params, &samples), Err(Error::SingleClass)));
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let text = word_table(4, 8, 17);
        let mut config = small_config(NeModel::None, RecurrentKind::Lstm, true);
        config.epochs = 5;
        config.dropout = 0.2;
        let samples = separable_samples(16);
        let mut p1 = assemble(config.clone(), &text, None).unwrap();
        let r1 = train(&mut p1, &samples).unwrap();
        let mut p2 = assemble(config, &text, None).unwrap();
        let r2 = train(&mut p2, &samples).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(
            predict(&p1, &samples, 0.5).unwrap(),
            predict(&p2, &samples, 0.5).unwrap()
        );
    }

    #[test]
    fn save_load_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let text = word_table(6, 8, 19);
        let nodes = node_embeddings(8);
        let mut config = small_config(NeModel::DeepWalk, RecurrentKind::Lstm, true);
        config.epochs = 3;
        let mut params = assemble(config, &text, Some(&nodes)).unwrap();
        train(&mut params, &separable_samples(12)).unwrap();
        save_model(&params, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let ids: Vec<u32> = (0..4).map(|_| rng.gen_range(0..7)).collect();
            let author = ["u1", "u2", "ghost"][rng.gen_range(0..3)];
            let s = Sample::from_tokens(ids, author, 0);
            let a = params.forward(&s, false, &mut rng).unwrap().y_hat;
            let b = loaded.forward(&s, false, &mut rng).unwrap().y_hat;
            assert!(a.to_bits() == b.to_bits(), "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_checkpoint_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let text = word_table(4, 8, 21);
        let params = assemble(small_config(NeModel::None, RecurrentKind::Rnn, false), &text, None)
            .unwrap();
        save_model(&params, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn branchless_checkpoint_rejected_by_two_branch_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let text = word_table(4, 8, 25);
        let branchless = small_config(NeModel::None, RecurrentKind::Gru, false);
        let params = assemble(branchless, &text, None).unwrap();
        save_model(&params, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        let two_branch = small_config(NeModel::Node2Vec, RecurrentKind::Gru, false);
        assert!(matches!(
            loaded.check_compatible(&two_branch),
            Err(Error::Checkpoint(_))
        ));
    }

    /// End-to-end gradient check on one assembly; the acceptance suite runs
    /// all twelve.
    #[test]
    fn full_model_gradients_match_finite_differences() {
        let text = word_table(5, 3, 27);
        let nodes = node_embeddings(3);
        let mut config = small_config(NeModel::Node2Vec, RecurrentKind::Gru, true);
        config.hidden_units = 3;
        config.graph_dense_units = 3;
        config.ensemble_dense_units = 3;
        let mut params = assemble(config, &text, Some(&nodes)).unwrap();
        // Nudge every parameter off exact zero so no ReLU pre-activation
        // sits on the kink, where finite differences are meaningless.
        let mut jitter = ChaCha8Rng::seed_from_u64(1234);
        for (_, t) in params.named_trainable_mut() {
            for v in t.data_mut() {
                *v += jitter.gen_range(0.01..0.05) * if jitter.gen::<bool>() { 1.0 } else { -1.0 };
            }
        }
        let params = params;
        let samples = vec![
            Sample::from_tokens(vec![0, 1, 2], "u1", 1),
            Sample::from_tokens(vec![3, 4, 1], "u2", 0),
            Sample::from_tokens(vec![2, 2, 5], "ghost", 1),
            Sample::from_tokens(vec![1, 4, 3], "u2", 0),
        ];

        let batch_loss = |p: &ModelParams| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            samples
                .iter()
                .map(|s| {
                    let c = p.forward(s, false, &mut rng).unwrap();
                    binary_cross_entropy(c.y_hat, s.label)
                })
                .sum::<f64>()
                / samples.len() as f64
        };

        let mut grads = params.zero_grads();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in &samples {
            let cache = params.forward(s, false, &mut rng).unwrap();
            let d = bce_gradient(cache.y_hat, s.label) / samples.len() as f64;
            params.backward(&cache, d, &mut grads);
        }

        let h = 1e-5;
        let names: Vec<String> = params.named_trainable().iter().map(|(n, _)| n.clone()).collect();
        for (t_idx, name) in names.iter().enumerate() {
            let len = params.named_trainable()[t_idx].1.len();
            for k in 0..len {
                let mut plus = params.clone();
                plus.named_trainable_mut()[t_idx].1.data_mut()[k] += h;
                let mut minus = params.clone();
                minus.named_trainable_mut()[t_idx].1.data_mut()[k] -= h;
                let fd = (batch_loss(&plus) - batch_loss(&minus)) / (2.0 * h);
                let got = grads.named_tensors()[t_idx].1.data()[k];
                let rel = (got - fd).abs() / fd.abs().max(1e-6);
                assert!(rel < 1e-3, "{name}[{k}]: analytic {got} vs fd {fd}");
            }
        }
    }
}
