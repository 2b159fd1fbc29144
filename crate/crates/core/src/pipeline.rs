//! Glue between corpus, walks, and the SGNS trainer: turns a dataset into
//! word embeddings and a user graph into node embeddings, with the reference
//! hyperparameter defaults baked in.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::UserGraph;
use crate::model::{NodeEmbeddings, TextEmbeddings};
use crate::sgns::{train_sgns, SgnsConfig, TrainedEmbedding};
use crate::walk::{generate_walks, WalkConfig, WalkMode};

/// Word2Vec hyperparameter defaults: window 10, learning rate 0.025,
/// 5 epochs, dimension 100. The min-count threshold (default 4) applies at
/// vocabulary build time.
pub fn word2vec_defaults() -> SgnsConfig {
    SgnsConfig {
        dim: 100,
        window: 10,
        learning_rate: 0.025,
        epochs: 5,
        ..SgnsConfig::default()
    }
}

/// Word2Vec vocabulary min-count default.
pub const WORD2VEC_MIN_COUNT: u64 = 4;

/// Node2Vec defaults: second-order walks of length 10, 10 per node,
/// p = q = 1, SGNS window 10, learning rate 0.05, 1 epoch, dimension 100.
pub fn node2vec_defaults() -> (WalkConfig, SgnsConfig) {
    (
        WalkConfig {
            mode: WalkMode::SecondOrder,
            ..WalkConfig::default()
        },
        SgnsConfig {
            dim: 100,
            window: 10,
            learning_rate: 0.05,
            epochs: 1,
            ..SgnsConfig::default()
        },
    )
}

/// DeepWalk defaults: first-order walks of length 10, SGNS window 5,
/// learning rate 0.05, 1 epoch, dimension 100.
pub fn deepwalk_defaults() -> (WalkConfig, SgnsConfig) {
    (
        WalkConfig {
            mode: WalkMode::FirstOrder,
            ..WalkConfig::default()
        },
        SgnsConfig {
            dim: 100,
            window: 5,
            learning_rate: 0.05,
            epochs: 1,
            ..SgnsConfig::default()
        },
    )
}

/// Trains word embeddings over the dataset's unpadded token-id sequences.
/// Returns the trained tables plus the vocabulary keys (id order).
pub fn train_word_embeddings(
    ds: &Dataset,
    config: &SgnsConfig,
) -> Result<(TrainedEmbedding, Vec<String>)> {
    let sequences: Vec<Vec<u32>> = (0..ds.matrix.rows())
        .map(|i| ds.matrix.unpadded(i).to_vec())
        .filter(|s| !s.is_empty())
        .collect();
    if sequences.is_empty() {
        return Err(Error::EmptyInput("no non-empty encoded documents"));
    }
    let trained = train_sgns(&sequences, config)?;
    let keys: Vec<String> = ds.vocab.tokens()[1..].to_vec();
    if trained.matrix.rows() != keys.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "word embedding rows vs vocabulary".into(),
            expected: keys.len() + 1,
            got: trained.matrix.rows(),
        });
    }
    Ok((trained, keys))
}

/// Generates walks over the user graph and trains node embeddings on them.
/// Node ids shift by one inside SGNS (id 0 stays reserved); the returned keys
/// label rows 1..=|V|.
pub fn train_node_embeddings(
    graph: &UserGraph,
    walk: &WalkConfig,
    sgns: &SgnsConfig,
) -> Result<(TrainedEmbedding, Vec<String>)> {
    let walks = generate_walks(graph, walk)?;
    let sequences: Vec<Vec<u32>> = walks
        .iter()
        .map(|w| w.iter().map(|&n| n as u32 + 1).collect())
        .collect();
    let trained = train_sgns(&sequences, sgns)?;
    let keys = graph.keys().to_vec();
    if trained.matrix.rows() != keys.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "node embedding rows vs graph".into(),
            expected: keys.len() + 1,
            got: trained.matrix.rows(),
        });
    }
    Ok((trained, keys))
}

/// Packages a trained word embedding for the model (padding row preserved).
pub fn text_embeddings(trained: &TrainedEmbedding) -> TextEmbeddings {
    TextEmbeddings::from_sgns(&trained.matrix)
}

/// Packages a trained node embedding for the model.
pub fn node_embeddings(trained: &TrainedEmbedding, keys: &[String]) -> Result<NodeEmbeddings> {
    let vectors: Vec<Vec<f64>> = (1..trained.matrix.rows())
        .map(|i| trained.matrix.input_row(i).to_vec())
        .collect();
    NodeEmbeddings::new(keys, &vectors)
}
