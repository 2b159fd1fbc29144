//! Stratified cross-validation, classification metrics, and the ablation and
//! hyperparameter-tuning harness.
//!
//! Two protocols are available, reflecting how the reporting conflates them:
//! plain stratified k-fold (test = one fold) and a single stratified 80-20
//! holdout. Every report row records which protocol produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{
    assemble, predict, train, GetaeConfig, NeModel, NodeEmbeddings, Sample, TextEmbeddings,
    WeModel,
};
use crate::nn::optim::OptimizerConfig;
use crate::nn::recurrent::RecurrentKind;
use crate::pipeline;
use crate::seeds;
use crate::sgns::SgnsConfig;
use crate::text::PretrainedSequenceSet;
use crate::walk::WalkConfig;

/// Disjoint, exhaustive, per-class-balanced index partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    folds: Vec<Vec<usize>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn fold(&self, i: usize) -> &[usize] {
        &self.folds[i]
    }

    /// Train/test indices for fold `i`: test is the fold, train the rest.
    pub fn train_test(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let test = self.folds[i].clone();
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        (train, test)
    }
}

/// Seeded per-class shuffle followed by round-robin fold assignment, so every
/// fold's class ratio sits within one sample of the global ratio.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be >= 2".into()));
    }
    validate_binary(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for class in [0u8, 1u8] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < k {
            return Err(Error::InvalidConfig(format!(
                "class {class} has {} samples, fewer than k = {k}",
                indices.len()
            )));
        }
        shuffle(&mut indices, &mut rng);
        for (pos, idx) in indices.into_iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldSplit { folds })
}

/// Single stratified holdout split; `test_fraction` of each class goes to the
/// test side (at least one sample, at most all but one).
pub fn stratified_holdout(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    validate_binary(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "class {class} has fewer than 2 samples"
            )));
        }
        shuffle(&mut indices, &mut rng);
        let n_test = ((indices.len() as f64 * test_fraction).round() as usize)
            .clamp(1, indices.len() - 1);
        test.extend_from_slice(&indices[..n_test]);
        train.extend_from_slice(&indices[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn validate_binary(labels: &[u8]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("no labels"));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn shuffle(v: &mut [usize], rng: &mut impl Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// Confusion counts plus accuracy and macro-averaged precision/recall/F1.
/// The fake class (label 1) is the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(predictions: &[u8], labels: &[u8]) -> Result<MetricsReport> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("no predictions to score"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions vs labels".into(),
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if predictions.iter().chain(labels).any(|&v| v > 1) {
        return Err(Error::InvalidConfig("predictions and labels must be 0 or 1".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let n = predictions.len() as f64;
    let accuracy = (tp + tn) as f64 / n;
    // Per-class precision/recall, macro averaged over the two classes.
    let p_pos = safe_div(tp as f64, (tp + fp) as f64);
    let r_pos = safe_div(tp as f64, (tp + fn_) as f64);
    let p_neg = safe_div(tn as f64, (tn + fn_) as f64);
    let r_neg = safe_div(tn as f64, (tn + fp) as f64);
    let f1_pos = safe_div(2.0 * p_pos * r_pos, p_pos + r_pos);
    let f1_neg = safe_div(2.0 * p_neg * r_neg, p_neg + r_neg);
    Ok(MetricsReport {
        accuracy,
        precision: (p_pos + p_neg) / 2.0,
        recall: (r_pos + r_neg) / 2.0,
        f1: (f1_pos + f1_neg) / 2.0,
        tp,
        fp,
        fn_,
        tn,
    })
}

/// Mean, sample standard deviation, and the per-fold values of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub folds: Vec<f64>,
}

fn summarize(values: Vec<f64>) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MetricSummary {
        mean,
        std,
        folds: values,
    }
}

/// Aggregated fold metrics for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub protocol: String,
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
}

/// Mean and sample (n-1) standard deviation per metric over fold reports.
pub fn aggregate(config: &str, protocol: &str, fold_reports: &[MetricsReport]) -> Result<SummaryRow> {
    if fold_reports.is_empty() {
        return Err(Error::EmptyInput("no fold reports to aggregate"));
    }
    Ok(SummaryRow {
        config: config.to_string(),
        protocol: protocol.to_string(),
        accuracy: summarize(fold_reports.iter().map(|r| r.accuracy).collect()),
        precision: summarize(fold_reports.iter().map(|r| r.precision).collect()),
        recall: summarize(fold_reports.iter().map(|r| r.recall).collect()),
        f1: summarize(fold_reports.iter().map(|r| r.f1).collect()),
    })
}

/// Evaluation protocol: plain k-fold or a single stratified holdout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    KFold { k: usize },
    Holdout { test_fraction: f64 },
}

impl Protocol {
    pub fn describe(&self) -> String {
        match self {
            Protocol::KFold { k } => format!("kfold:k={k}"),
            Protocol::Holdout { test_fraction } => format!("holdout:test={test_fraction}"),
        }
    }
}

/// Model hyperparameters shared across harness cells (layer table defaults).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub hidden_units: usize,
    pub graph_dense_units: usize,
    pub ensemble_dense_units: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `None` keeps the per-word-embedding default (30 pretrained / 8
    /// Word2Vec).
    pub epochs: Option<usize>,
}

impl Default for ModelHyper {
    fn default() -> Self {
        ModelHyper {
            hidden_units: 64,
            graph_dense_units: 32,
            ensemble_dense_units: 32,
            dropout: 0.2,
            batch_size: 32,
            learning_rate: 0.001,
            epochs: None,
        }
    }
}

impl ModelHyper {
    pub fn to_config(
        &self,
        we: WeModel,
        ne: NeModel,
        kind: RecurrentKind,
        bidirection: bool,
        seed: u64,
    ) -> GetaeConfig {
        let mut config = GetaeConfig::defaults(we, ne, kind, bidirection);
        config.hidden_units = self.hidden_units;
        config.graph_dense_units = self.graph_dense_units;
        config.ensemble_dense_units = self.ensemble_dense_units;
        config.dropout = self.dropout;
        config.batch_size = self.batch_size;
        config.optimizer = OptimizerConfig {
            learning_rate: self.learning_rate,
            ..OptimizerConfig::default()
        };
        if let Some(epochs) = self.epochs {
            config.epochs = epochs;
        }
        config.seed = seed;
        config
    }
}

/// Everything the harness needs besides the dataset itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub protocol: Protocol,
    pub seed: u64,
    pub word2vec: SgnsConfig,
    pub node2vec_walk: WalkConfig,
    pub node2vec_sgns: SgnsConfig,
    pub deepwalk_walk: WalkConfig,
    pub deepwalk_sgns: SgnsConfig,
    pub model: ModelHyper,
}

impl Default for RunSettings {
    fn default() -> Self {
        let (n2v_walk, n2v_sgns) = pipeline::node2vec_defaults();
        let (dw_walk, dw_sgns) = pipeline::deepwalk_defaults();
        RunSettings {
            protocol: Protocol::KFold { k: 10 },
            seed: 0,
            word2vec: pipeline::word2vec_defaults(),
            node2vec_walk: n2v_walk,
            node2vec_sgns: n2v_sgns,
            deepwalk_walk: dw_walk,
            deepwalk_sgns: dw_sgns,
            model: ModelHyper::default(),
        }
    }
}

/// The ablation cross product: word-embedding source x node-embedding source
/// (including none) x recurrent kind x directionality.
#[derive(Debug, Clone)]
pub struct AblationGrid {
    pub we_models: Vec<WeModel>,
    pub ne_models: Vec<NeModel>,
    pub recurrent_kinds: Vec<RecurrentKind>,
    pub bidirection: Vec<bool>,
}

impl AblationGrid {
    /// The full reporting grid: Word2Vec plus the given pretrained sets,
    /// branch off/Node2Vec/DeepWalk, three cell kinds, both directions.
    pub fn full(pretrained_names: &[String]) -> AblationGrid {
        let mut we = vec![WeModel::Word2Vec];
        we.extend(pretrained_names.iter().cloned().map(WeModel::Pretrained));
        AblationGrid {
            we_models: we,
            ne_models: vec![NeModel::None, NeModel::Node2Vec, NeModel::DeepWalk],
            recurrent_kinds: vec![RecurrentKind::Rnn, RecurrentKind::Gru, RecurrentKind::Lstm],
            bidirection: vec![false, true],
        }
    }

    pub fn cells(&self) -> Vec<(WeModel, NeModel, RecurrentKind, bool)> {
        let mut cells = Vec::new();
        for we in &self.we_models {
            for &ne in &self.ne_models {
                for &kind in &self.recurrent_kinds {
                    for &bi in &self.bidirection {
                        cells.push((we.clone(), ne, kind, bi));
                    }
                }
            }
        }
        cells
    }
}

/// The Node2Vec tuning rows: (p, q) pairs per dimension, d in {32, 100}.
pub fn node2vec_tuning_grid() -> Vec<(f64, f64, usize)> {
    let pq = [(1.0, 1.0), (1.0, 0.5), (0.5, 1.0), (0.5, 0.5), (2.0, 1.0), (1.0, 2.0)];
    let mut grid = Vec::with_capacity(12);
    for &d in &[32usize, 100] {
        for &(p, q) in &pq {
            grid.push((p, q, d));
        }
    }
    grid
}

/// The DeepWalk tuning rows: d in {32, 100} x six recurrent layer variants.
pub fn deepwalk_tuning_grid() -> Vec<(usize, RecurrentKind, bool)> {
    let layers = [
        (RecurrentKind::Rnn, false),
        (RecurrentKind::Rnn, true),
        (RecurrentKind::Gru, false),
        (RecurrentKind::Gru, true),
        (RecurrentKind::Lstm, false),
        (RecurrentKind::Lstm, true),
    ];
    let mut grid = Vec::with_capacity(12);
    for &d in &[32usize, 100] {
        for &(kind, bi) in &layers {
            grid.push((d, kind, bi));
        }
    }
    grid
}

/// Train/evaluate one configuration under the protocol; returns per-fold
/// metrics.
pub fn evaluate_config(
    samples: &[Sample],
    labels: &[u8],
    text: &TextEmbeddings,
    nodes: Option<&NodeEmbeddings>,
    base_config: &GetaeConfig,
    protocol: Protocol,
    seed: u64,
) -> Result<Vec<MetricsReport>> {
    let splits: Vec<(Vec<usize>, Vec<usize>)> = match protocol {
        Protocol::KFold { k } => {
            let folds = stratified_kfold(labels, k, seeds::mix_str(seed, "folds"))?;
            (0..k).map(|i| folds.train_test(i)).collect()
        }
        Protocol::Holdout { test_fraction } => {
            vec![stratified_holdout(labels, test_fraction, seeds::mix_str(seed, "holdout"))?]
        }
    };
    splits
        .into_iter()
        .enumerate()
        .map(|(fold, (train_idx, test_idx))| {
            let mut config = base_config.clone();
            config.seed = seeds::mix(seed, fold as u64);
            let mut params = assemble(config, text, nodes)?;
            let train_samples: Vec<Sample> =
                train_idx.iter().map(|&i| samples[i].clone()).collect();
            train(&mut params, &train_samples)?;
            let test_samples: Vec<Sample> = test_idx.iter().map(|&i| samples[i].clone()).collect();
            let preds = predict(&params, &test_samples, 0.5)?;
            let pred_labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
            let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
            compute_metrics(&pred_labels, &test_labels)
        })
        .collect()
}

/// Shared embedding artifacts for a harness run, trained once and reused by
/// every cell that needs them.
struct EmbeddingBank {
    word2vec: Option<Arc<(TextEmbeddings, Vec<Sample>)>>,
    pretrained: BTreeMap<String, Arc<(TextEmbeddings, Vec<Sample>)>>,
    node2vec: Option<Arc<NodeEmbeddings>>,
    deepwalk: Option<Arc<NodeEmbeddings>>,
}

impl EmbeddingBank {
    fn build(
        ds: &Dataset,
        pretrained_sets: &BTreeMap<String, PretrainedSequenceSet>,
        grid: &AblationGrid,
        settings: &RunSettings,
    ) -> Result<EmbeddingBank> {
        let mut bank = EmbeddingBank {
            word2vec: None,
            pretrained: BTreeMap::new(),
            node2vec: None,
            deepwalk: None,
        };
        for we in &grid.we_models {
            match we {
                WeModel::Word2Vec if bank.word2vec.is_none() => {
                    let mut config = settings.word2vec.clone();
                    config.seed = seeds::mix_str(settings.seed, "word2vec");
                    let (trained, _) = pipeline::train_word_embeddings(ds, &config)?;
                    let text = pipeline::text_embeddings(&trained);
                    let samples = ds.word2vec_samples();
                    bank.word2vec = Some(Arc::new((text, samples)));
                }
                WeModel::Pretrained(name) if !bank.pretrained.contains_key(name) => {
                    let set = pretrained_sets.get(name).ok_or_else(|| {
                        Error::Missing(format!("pretrained sequence set {name:?} was not provided"))
                    })?;
                    let samples = ds.pretrained_samples(set)?;
                    bank.pretrained.insert(
                        name.clone(),
                        Arc::new((TextEmbeddings::PretrainedDim(set.dim()), samples)),
                    );
                }
                _ => {}
            }
        }
        for ne in &grid.ne_models {
            match ne {
                NeModel::Node2Vec if bank.node2vec.is_none() => {
                    let mut walk = settings.node2vec_walk.clone();
                    walk.seed = seeds::mix_str(settings.seed, "node2vec-walks");
                    let mut sgns = settings.node2vec_sgns.clone();
                    sgns.seed = seeds::mix_str(settings.seed, "node2vec-sgns");
                    let (trained, keys) =
                        pipeline::train_node_embeddings(ds.corpus.user_graph(), &walk, &sgns)?;
                    bank.node2vec = Some(Arc::new(pipeline::node_embeddings(&trained, &keys)?));
                }
                NeModel::DeepWalk if bank.deepwalk.is_none() => {
                    let mut walk = settings.deepwalk_walk.clone();
                    walk.seed = seeds::mix_str(settings.seed, "deepwalk-walks");
                    let mut sgns = settings.deepwalk_sgns.clone();
                    sgns.seed = seeds::mix_str(settings.seed, "deepwalk-sgns");
                    let (trained, keys) =
                        pipeline::train_node_embeddings(ds.corpus.user_graph(), &walk, &sgns)?;
                    bank.deepwalk = Some(Arc::new(pipeline::node_embeddings(&trained, &keys)?));
                }
                _ => {}
            }
        }
        Ok(bank)
    }

    fn text(&self, we: &WeModel) -> Arc<(TextEmbeddings, Vec<Sample>)> {
        match we {
            WeModel::Word2Vec => self.word2vec.clone().expect("built for grid"),
            WeModel::Pretrained(name) => self.pretrained[name].clone(),
        }
    }

    fn nodes(&self, ne: NeModel) -> Option<Arc<NodeEmbeddings>> {
        match ne {
            NeModel::None => None,
            NeModel::Node2Vec => self.node2vec.clone(),
            NeModel::DeepWalk => self.deepwalk.clone(),
        }
    }
}

/// Runs every grid cell under the protocol, one summary row per cell.
/// Embeddings are trained once per source and shared across cells; cells run
/// in parallel and the output order follows the grid.
pub fn run_ablation(
    ds: &Dataset,
    pretrained_sets: &BTreeMap<String, PretrainedSequenceSet>,
    grid: &AblationGrid,
    settings: &RunSettings,
) -> Result<Vec<SummaryRow>> {
    let bank = EmbeddingBank::build(ds, pretrained_sets, grid, settings)?;
    let labels = ds.labels();
    let cells = grid.cells();
    cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, (we, ne, kind, bi))| {
            let text_bundle = bank.text(we);
            let nodes = bank.nodes(*ne);
            let config = settings.model.to_config(we.clone(), *ne, *kind, *bi, 0);
            let cell_seed = seeds::mix(settings.seed, cell_idx as u64);
            let reports = evaluate_config(
                &text_bundle.1,
                &labels,
                &text_bundle.0,
                nodes.as_deref(),
                &config,
                settings.protocol,
                cell_seed,
            )?;
            aggregate(&config.describe(), &settings.protocol.describe(), &reports)
        })
        .collect()
}

/// The Node2Vec (p, q, d) tuning protocol for a fixed model configuration.
pub fn run_node2vec_tuning(
    ds: &Dataset,
    pretrained_sets: &BTreeMap<String, PretrainedSequenceSet>,
    we: WeModel,
    kind: RecurrentKind,
    bidirection: bool,
    settings: &RunSettings,
) -> Result<Vec<SummaryRow>> {
    let labels = ds.labels();
    let text_bundle: Arc<(TextEmbeddings, Vec<Sample>)> = match &we {
        WeModel::Word2Vec => {
            let mut config = settings.word2vec.clone();
            config.seed = seeds::mix_str(settings.seed, "word2vec");
            let (trained, _) = pipeline::train_word_embeddings(ds, &config)?;
            Arc::new((pipeline::text_embeddings(&trained), ds.word2vec_samples()))
        }
        WeModel::Pretrained(name) => {
            let set = pretrained_sets.get(name).ok_or_else(|| {
                Error::Missing(format!("pretrained sequence set {name:?} was not provided"))
            })?;
            Arc::new((
                TextEmbeddings::PretrainedDim(set.dim()),
                ds.pretrained_samples(set)?,
            ))
        }
    };
    let grid = node2vec_tuning_grid();
    grid.par_iter()
        .enumerate()
        .map(|(cell_idx, &(p, q, d))| {
            let mut walk = settings.node2vec_walk.clone();
            walk.p = p;
            walk.q = q;
            walk.seed = seeds::mix(seeds::mix_str(settings.seed, "n2v-tune-walk"), cell_idx as u64);
            let mut sgns = settings.node2vec_sgns.clone();
            sgns.dim = d;
            sgns.seed = seeds::mix(seeds::mix_str(settings.seed, "n2v-tune-sgns"), cell_idx as u64);
            let (trained, keys) =
                pipeline::train_node_embeddings(ds.corpus.user_graph(), &walk, &sgns)?;
            let nodes = pipeline::node_embeddings(&trained, &keys)?;
            let config =
                settings
                    .model
                    .to_config(we.clone(), NeModel::Node2Vec, kind, bidirection, 0);
            let cell_seed = seeds::mix(settings.seed, 1000 + cell_idx as u64);
            let reports = evaluate_config(
                &text_bundle.1,
                &labels,
                &text_bundle.0,
                Some(&nodes),
                &config,
                settings.protocol,
                cell_seed,
            )?;
            let descriptor = format!("{} p={p} q={q} d={d}", config.describe());
            aggregate(&descriptor, &settings.protocol.describe(), &reports)
        })
        .collect()
}

/// The DeepWalk tuning protocol: vary dimension and recurrent layer.
pub fn run_deepwalk_tuning(
    ds: &Dataset,
    pretrained_sets: &BTreeMap<String, PretrainedSequenceSet>,
    we: WeModel,
    settings: &RunSettings,
) -> Result<Vec<SummaryRow>> {
    let labels = ds.labels();
    let text_bundle: Arc<(TextEmbeddings, Vec<Sample>)> = match &we {
        WeModel::Word2Vec => {
            let mut config = settings.word2vec.clone();
            config.seed = seeds::mix_str(settings.seed, "word2vec");
            let (trained, _) = pipeline::train_word_embeddings(ds, &config)?;
            Arc::new((pipeline::text_embeddings(&trained), ds.word2vec_samples()))
        }
        WeModel::Pretrained(name) => {
            let set = pretrained_sets.get(name).ok_or_else(|| {
                Error::Missing(format!("pretrained sequence set {name:?} was not provided"))
            })?;
            Arc::new((
                TextEmbeddings::PretrainedDim(set.dim()),
                ds.pretrained_samples(set)?,
            ))
        }
    };
    // One node embedding per dimension, shared across the six layer variants.
    let mut per_dim: BTreeMap<usize, Arc<NodeEmbeddings>> = BTreeMap::new();
    for &d in &[32usize, 100] {
        let mut walk = settings.deepwalk_walk.clone();
        walk.seed = seeds::mix(seeds::mix_str(settings.seed, "dw-tune-walk"), d as u64);
        let mut sgns = settings.deepwalk_sgns.clone();
        sgns.dim = d;
        sgns.seed = seeds::mix(seeds::mix_str(settings.seed, "dw-tune-sgns"), d as u64);
        let (trained, keys) = pipeline::train_node_embeddings(ds.corpus.user_graph(), &walk, &sgns)?;
        per_dim.insert(d, Arc::new(pipeline::node_embeddings(&trained, &keys)?));
    }
    let grid = deepwalk_tuning_grid();
    grid.par_iter()
        .enumerate()
        .map(|(cell_idx, &(d, kind, bi))| {
            let nodes = per_dim[&d].clone();
            let config = settings
                .model
                .to_config(we.clone(), NeModel::DeepWalk, kind, bi, 0);
            let cell_seed = seeds::mix(settings.seed, 2000 + cell_idx as u64);
            let reports = evaluate_config(
                &text_bundle.1,
                &labels,
                &text_bundle.0,
                Some(&nodes),
                &config,
                settings.protocol,
                cell_seed,
            )?;
            let descriptor = format!("{} d={d}", config.describe());
            aggregate(&descriptor, &settings.protocol.describe(), &reports)
        })
        .collect()
}

/// Renders summary rows in the `config,metric,mean,std,fold_values...` CSV
/// schema, one line per (config, metric).
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("config,protocol,metric,mean,std,fold_values\n");
    for row in rows {
        for (metric, s) in [
            ("accuracy", &row.accuracy),
            ("precision", &row.precision),
            ("recall", &row.recall),
            ("f1", &row.f1),
        ] {
            let folds = s
                .folds
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                out,
                "{},{},{metric},{},{},{folds}",
                row.config, row.protocol, s.mean, s.std
            )
            .unwrap();
        }
    }
    out
}

pub fn summary_json(rows: &[SummaryRow]) -> Result<String> {
    serde_json::to_string_pretty(rows)
        .map_err(|e| Error::InvalidConfig(format!("summary encode: {e}")))
}
