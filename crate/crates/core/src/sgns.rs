//! Skip-gram with negative sampling over integer id sequences.
//!
//! One trainer serves both word embeddings (sequences of token ids from the
//! document matrix) and node embeddings (sequences of node ids from random
//! walks). Id 0 is reserved for padding: its row stays exactly zero and any
//! training pair touching it is rejected.
//!
//! The two-table center/context parameterization is used throughout; the
//! input (center) table is what gets exported as the embedding.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate floor for the epoch-level linear decay.
const LR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgnsConfig {
    /// Embedding width s.
    pub dim: usize,
    /// Context radius.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Exponent of the unigram noise distribution.
    pub noise_power: f64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            window: 10,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 5,
            noise_power: 0.75,
            seed: 0,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig("window must be >= 1".into()));
        }
        if self.negatives < 1 {
            return Err(Error::InvalidConfig("negatives must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Center/context embedding tables. Row 0 is the padding row: all zero,
/// never updated.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Fresh matrix: input rows drawn uniformly from
    /// (-0.5/dim, 0.5/dim), output rows zero, padding row zero.
    pub fn new(rows: usize, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
        if rows < 2 || dim < 1 {
            return Err(Error::InvalidConfig(format!(
                "embedding matrix needs >= 2 rows and >= 1 dim, got {rows}x{dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        let mut input = vec![0.0; rows * dim];
        for v in input.iter_mut().skip(dim) {
            *v = rng.gen_range(-half..half);
        }
        Ok(EmbeddingMatrix {
            rows,
            dim,
            input,
            output: vec![0.0; rows * dim],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input_row(&self, id: usize) -> &[f64] {
        &self.input[id * self.dim..(id + 1) * self.dim]
    }

    pub fn output_row(&self, id: usize) -> &[f64] {
        &self.output[id * self.dim..(id + 1) * self.dim]
    }

    fn input_row_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.input[id * self.dim..(id + 1) * self.dim]
    }

    fn output_row_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.output[id * self.dim..(id + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(self.output.iter()).all(|v| v.is_finite())
    }
}

/// Overflow-safe logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softplus: ln(1 + e^z). Note -ln(sigmoid(x)) =
/// softplus(-x).
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Noise distribution for negative sampling: probability of item i is
/// proportional to count(i)^power. Id 0 (padding) is excluded from the
/// support.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoiseDistribution {
    pub fn from_counts(counts: &[u64], power: f64) -> Result<NoiseDistribution> {
        let weights: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == 0 { 0.0 } else { (c as f64).powf(power) })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyInput("noise distribution with no support"));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(NoiseDistribution { probs, cumulative })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }
}

/// All (center, context) pairs with |i - j| <= window, j != i, enumerated in
/// sequence order.
pub fn generate_skipgram_pairs(sequences: &[Vec<u32>], window: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for seq in sequences {
        for i in 0..seq.len() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(seq.len().saturating_sub(1));
            for j in lo..=hi {
                if j != i {
                    pairs.push((seq[i], seq[j]));
                }
            }
        }
    }
    pairs
}

/// SGNS loss for one pair against explicit negative vectors:
/// -ln sigma(c.o) - sum_n ln sigma(-c.n). Non-negative.
pub fn sgns_pair_loss(center_vec: &[f64], context_vec: &[f64], negative_vecs: &[&[f64]]) -> f64 {
    let mut loss = softplus(-dot(center_vec, context_vec));
    for n in negative_vecs {
        loss += softplus(dot(center_vec, n));
    }
    loss
}

/// Analytic gradients for one (center, context, negatives) cell, evaluated at
/// the current parameters.
#[derive(Debug, Clone)]
pub struct PairGradients {
    /// Gradient wrt the center input vector.
    pub d_center: Vec<f64>,
    /// Gradients wrt output rows, keyed by row id (context and negatives;
    /// duplicate ids are merged).
    pub d_output: Vec<(usize, Vec<f64>)>,
    /// Loss at the current parameters.
    pub loss: f64,
}

fn check_ids(matrix: &EmbeddingMatrix, ids: impl Iterator<Item = u32>) -> Result<()> {
    for id in ids {
        if id == 0 {
            return Err(Error::PaddingRowTouched);
        }
        if id as usize >= matrix.rows {
            return Err(Error::InvalidConfig(format!(
                "id {id} out of bounds for {} rows",
                matrix.rows
            )));
        }
    }
    Ok(())
}

/// Computes the SGNS gradients for a pair without applying them.
pub fn pair_gradients(
    matrix: &EmbeddingMatrix,
    center: u32,
    context: u32,
    negatives: &[u32],
) -> Result<PairGradients> {
    check_ids(matrix, [center, context].into_iter().chain(negatives.iter().copied()))?;
    let dim = matrix.dim;
    let v_c = matrix.input_row(center as usize);

    let mut d_center = vec![0.0; dim];
    let mut d_output: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut loss = 0.0;

    let u_o = matrix.output_row(context as usize);
    let s = sigmoid(dot(v_c, u_o));
    loss += softplus(-dot(v_c, u_o));
    let g = s - 1.0; // d loss / d (v_c . u_o)
    for k in 0..dim {
        d_center[k] += g * u_o[k];
    }
    {
        let entry = d_output.entry(context as usize).or_insert_with(|| vec![0.0; dim]);
        for k in 0..dim {
            entry[k] += g * v_c[k];
        }
    }

    for &neg in negatives {
        let u_n = matrix.output_row(neg as usize);
        let x = dot(v_c, u_n);
        loss += softplus(x);
        let g = sigmoid(x); // d loss / d (v_c . u_n)
        for k in 0..dim {
            d_center[k] += g * u_n[k];
        }
        let entry = d_output.entry(neg as usize).or_insert_with(|| vec![0.0; dim]);
        for k in 0..dim {
            entry[k] += g * v_c[k];
        }
    }

    let mut d_output: Vec<(usize, Vec<f64>)> = d_output.into_iter().collect();
    d_output.sort_by_key(|(id, _)| *id);
    Ok(PairGradients {
        d_center,
        d_output,
        loss,
    })
}

/// One SGD step on a pair with explicit negatives. Returns the pre-update
/// loss.
pub fn sgns_step_with_negatives(
    matrix: &mut EmbeddingMatrix,
    center: u32,
    context: u32,
    negatives: &[u32],
    learning_rate: f64,
) -> Result<f64> {
    let grads = pair_gradients(matrix, center, context, negatives)?;
    let dim = matrix.dim;
    {
        let row = matrix.input_row_mut(center as usize);
        for k in 0..dim {
            row[k] -= learning_rate * grads.d_center[k];
        }
    }
    for (id, d) in &grads.d_output {
        let row = matrix.output_row_mut(*id);
        for k in 0..dim {
            row[k] -= learning_rate * d[k];
        }
    }
    Ok(grads.loss)
}

/// One SGD step with negatives drawn from the noise distribution. A draw
/// that hits the context id is skipped, so a step may see fewer than
/// `negatives` noise items.
pub fn sgns_step(
    matrix: &mut EmbeddingMatrix,
    pair: (u32, u32),
    noise: &NoiseDistribution,
    negatives: usize,
    learning_rate: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let (center, context) = pair;
    let mut drawn = Vec::with_capacity(negatives);
    for _ in 0..negatives {
        let id = noise.sample(rng) as u32;
        if id != context {
            drawn.push(id);
        }
    }
    sgns_step_with_negatives(matrix, center, context, &drawn, learning_rate)
}

/// A trained embedding with its per-epoch mean losses.
#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub matrix: EmbeddingMatrix,
    pub epoch_losses: Vec<f64>,
}

/// Trains SGNS over id sequences. The matrix is sized from the largest id;
/// noise counts come from the corpus itself. Deterministic for a fixed seed.
pub fn train_sgns(sequences: &[Vec<u32>], config: &SgnsConfig) -> Result<TrainedEmbedding> {
    config.validate()?;
    if sequences.is_empty() || sequences.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInput("no sequences to train on"));
    }
    let max_id = sequences
        .iter()
        .flat_map(|s| s.iter().copied())
        .max()
        .unwrap_or(0);
    if sequences.iter().flatten().any(|&id| id == 0) {
        return Err(Error::PaddingRowTouched);
    }

    let mut counts = vec![0u64; max_id as usize + 1];
    for id in sequences.iter().flatten() {
        counts[*id as usize] += 1;
    }
    let noise = NoiseDistribution::from_counts(&counts, config.noise_power)?;

    let pairs = generate_skipgram_pairs(sequences, config.window);
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }

    let mut matrix = EmbeddingMatrix::new(max_id as usize + 1, config.dim, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = epoch_learning_rate(config.learning_rate, epoch, config.epochs);
        shuffle(&mut order, &mut rng);
        let mut total = 0.0;
        for &idx in &order {
            total += sgns_step(
                &mut matrix,
                pairs[idx],
                &noise,
                config.negatives,
                lr,
                &mut rng,
            )?;
        }
        let mean = total / pairs.len() as f64;
        epoch_losses.push(mean);
        log::info!("sgns epoch {} mean loss {:.6} (lr {:.5})", epoch + 1, mean, lr);
    }
    debug_assert!(matrix.all_finite());
    Ok(TrainedEmbedding {
        matrix,
        epoch_losses,
    })
}

/// Linear decay from the configured rate toward the floor across epochs.
fn epoch_learning_rate(base: f64, epoch: usize, epochs: usize) -> f64 {
    if base <= LR_FLOOR || epochs <= 1 {
        return base;
    }
    base - (base - LR_FLOOR) * epoch as f64 / epochs as f64
}

/// Fisher-Yates with our own RNG so the permutation is stable across
/// platforms.
fn shuffle(order: &mut [usize], rng: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

/// Standard cosine similarity. Zero-norm inputs are an error.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "cosine similarity".into(),
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(dot(a, b) / (na * nb))
}

/// Writes the input table in the embedding file format: header
/// `items=<m> dim=<s>`, then one `key<TAB>v1 v2 ... vs` line per item.
/// `keys[i]` labels row i + 1 (the padding row is not exported).
pub fn write_embeddings(path: &Path, keys: &[String], matrix: &EmbeddingMatrix) -> Result<()> {
    if keys.len() != matrix.rows() - 1 {
        return Err(Error::DimensionMismatch {
            what: "embedding export keys".into(),
            expected: matrix.rows() - 1,
            got: keys.len(),
        });
    }
    let mut out = String::new();
    writeln!(out, "items={} dim={}", keys.len(), matrix.dim()).unwrap();
    for (i, key) in keys.iter().enumerate() {
        if key.contains('\t') || key.contains('\n') {
            return Err(Error::InvalidConfig(format!(
                "embedding key {key:?} contains reserved whitespace"
            )));
        }
        let row = matrix.input_row(i + 1);
        let joined = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "{key}\t{joined}").unwrap();
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// An embedding table read back from disk: one vector per key, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedEmbeddings {
    pub keys: Vec<String>,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl LoadedEmbeddings {
    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.vectors[i].as_slice())
    }
}

pub fn read_embeddings(path: &Path) -> Result<LoadedEmbeddings> {
    let content = fs::read_to_string(path)?;
    parse_embeddings(&content)
}

pub fn parse_embeddings(content: &str) -> Result<LoadedEmbeddings> {
    let mut lines = content.lines().enumerate();
    let (items, dim) = match lines.next() {
        Some((_, header)) => {
            let parts: Vec<&str> = header.split_whitespace().collect();
            let parse_kv = |s: &str, k: &str| -> Option<usize> {
                s.strip_prefix(k).and_then(|v| v.parse().ok())
            };
            match parts.as_slice() {
                [a, b] => match (parse_kv(a, "items="), parse_kv(b, "dim=")) {
                    (Some(m), Some(d)) => (m, d),
                    _ => {
                        return Err(Error::MalformedLine {
                            line: 1,
                            msg: format!("bad embedding header: {header:?}"),
                        })
                    }
                },
                _ => {
                    return Err(Error::MalformedLine {
                        line: 1,
                        msg: "expected `items=<m> dim=<s>` header".into(),
                    })
                }
            }
        }
        None => {
            return Err(Error::MalformedLine {
                line: 1,
                msg: "empty embedding file".into(),
            })
        }
    };
    let mut keys = Vec::with_capacity(items);
    let mut vectors = Vec::with_capacity(items);
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (key, values) = raw.split_once('\t').ok_or_else(|| Error::MalformedLine {
            line: line_no,
            msg: "expected `key<TAB>v1 v2 ...`".into(),
        })?;
        let vector = values
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::MalformedLine {
                line: line_no,
                msg: format!("bad value: {e}"),
            })?;
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                what: format!("embedding record at line {line_no}"),
                expected: dim,
                got: vector.len(),
            });
        }
        keys.push(key.to_string());
        vectors.push(vector);
    }
    if keys.len() != items {
        return Err(Error::DimensionMismatch {
            what: "embedding item count".into(),
            expected: items,
            got: keys.len(),
        });
    }
    Ok(LoadedEmbeddings { keys, dim, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn pair_enumeration_radius_one() {
        let pairs = generate_skipgram_pairs(&[vec![1, 2, 3]], 1);
        assert_eq!(pairs, vec![(1, 2), (2, 1), (2, 3), (3, 2)]);
    }

    #[test]
    fn pair_enumeration_singleton_and_radius_two() {
        assert!(generate_skipgram_pairs(&[vec![1]], 10).is_empty());
        let pairs = generate_skipgram_pairs(&[vec![1, 2, 3]], 2);
        assert_eq!(pairs.len(), 6);
        assert!(pairs.contains(&(1, 3)));
        assert!(pairs.contains(&(3, 1)));
    }

    #[test]
    fn loss_zero_vectors() {
        let z = vec![0.0; 4];
        assert!((sgns_pair_loss(&z, &z, &[]) - LN2).abs() < 1e-12);
        assert!((sgns_pair_loss(&z, &z, &[&z]) - 2.0 * LN2).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_straight_line_recomputation() {
        // Independent oracle: naive sigmoid and ln, no softplus trick.
        fn naive_loss(c: &[f64], o: &[f64], negs: &[&[f64]]) -> f64 {
            let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
            let mut l = -sig(d(c, o)).ln();
            for n in negs {
                l -= sig(-d(c, n)).ln();
            }
            l
        }
        let c = vec![0.3, -0.7, 0.2];
        let o = vec![-0.1, 0.4, 0.9];
        let n1 = vec![0.5, 0.5, -0.5];
        let n2 = vec![-0.2, 0.1, 0.3];
        let negs: Vec<&[f64]> = vec![&n1, &n2];
        let got = sgns_pair_loss(&c, &o, &negs);
        let want = naive_loss(&c, &o, &negs);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!(got >= 0.0);
    }

    #[test]
    fn zero_learning_rate_is_a_null_step() {
        let mut m = EmbeddingMatrix::new(6, 4, 3).unwrap();
        let before = m.clone();
        sgns_step_with_negatives(&mut m, 1, 2, &[3, 4], 0.0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn padding_pair_is_rejected() {
        let mut m = EmbeddingMatrix::new(4, 2, 0).unwrap();
        assert!(matches!(
            sgns_step_with_negatives(&mut m, 0, 1, &[], 0.1),
            Err(Error::PaddingRowTouched)
        ));
        assert!(matches!(
            sgns_step_with_negatives(&mut m, 1, 2, &[0], 0.1),
            Err(Error::PaddingRowTouched)
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-5;
        for dim in [2usize, 8, 32] {
            let mut m = EmbeddingMatrix::new(7, dim, dim as u64).unwrap();
            // Give output rows nonzero values so gradients are informative.
            for id in 1..7 {
                let mut rng_val = 0.1;
                for v in m.output_row_mut(id) {
                    rng_val = (rng_val * 1.7 + 0.13) % 0.8 - 0.4;
                    *v = rng_val;
                }
            }
            let center = 1u32;
            let context = 2u32;
            let negatives = [3u32, 4, 3]; // duplicate on purpose
            let grads = pair_gradients(&m, center, context, &negatives).unwrap();

            let loss_at = |m: &EmbeddingMatrix| {
                let negs: Vec<&[f64]> = negatives.iter().map(|&n| m.output_row(n as usize)).collect();
                sgns_pair_loss(m.input_row(center as usize), m.output_row(context as usize), &negs)
            };

            for k in 0..dim {
                let mut plus = m.clone();
                plus.input_row_mut(center as usize)[k] += h;
                let mut minus = m.clone();
                minus.input_row_mut(center as usize)[k] -= h;
                let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                let rel = (grads.d_center[k] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-4, "dim {dim} center[{k}]: {fd} vs {}", grads.d_center[k]);
            }
            for (id, d) in &grads.d_output {
                for k in 0..dim {
                    let mut plus = m.clone();
                    plus.output_row_mut(*id)[k] += h;
                    let mut minus = m.clone();
                    minus.output_row_mut(*id)[k] -= h;
                    let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                    let rel = (d[k] - fd).abs() / fd.abs().max(1e-8);
                    assert!(rel < 1e-4, "dim {dim} output {id}[{k}]: {fd} vs {}", d[k]);
                }
            }
        }
    }

    #[test]
    fn repeated_pair_loss_strictly_decreases() {
        let mut m = EmbeddingMatrix::new(5, 8, 11).unwrap();
        let mut last = f64::INFINITY;
        for step in 0..200 {
            let loss = sgns_step_with_negatives(&mut m, 1, 2, &[3], 0.025).unwrap();
            if step > 0 {
                assert!(loss < last, "step {step}: {loss} !< {last}");
            }
            last = loss;
        }
    }

    #[test]
    fn train_is_deterministic() {
        let seqs = vec![vec![1u32, 2, 3, 4], vec![4, 3, 2, 1], vec![1, 3, 1, 3]];
        let config = SgnsConfig {
            dim: 8,
            window: 2,
            epochs: 3,
            seed: 42,
            ..SgnsConfig::default()
        };
        let a = train_sgns(&seqs, &config).unwrap();
        let b = train_sgns(&seqs, &config).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn padding_row_stays_zero_through_training() {
        let seqs = vec![vec![1u32, 2, 3, 4, 2, 3], vec![4, 1, 2, 4]];
        let config = SgnsConfig {
            dim: 6,
            window: 3,
            epochs: 4,
            seed: 5,
            ..SgnsConfig::default()
        };
        let trained = train_sgns(&seqs, &config).unwrap();
        assert!(trained.matrix.input_row(0).iter().all(|&v| v == 0.0));
        assert!(trained.matrix.output_row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_training_inputs_error() {
        let config = SgnsConfig::default();
        assert!(matches!(
            train_sgns(&[], &config),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            train_sgns(&[vec![]], &config),
            Err(Error::EmptyInput(_))
        ));
        // Only singleton sequences: no pairs.
        assert!(matches!(
            train_sgns(&[vec![1], vec![2]], &config),
            Err(Error::EmptyPairSet)
        ));
        let zero_epochs = SgnsConfig { epochs: 0, ..SgnsConfig::default() };
        assert!(zero_epochs.validate().is_err());
    }

    #[test]
    fn noise_distribution_probabilities() {
        let counts = vec![0u64, 8, 1, 1];
        let noise = NoiseDistribution::from_counts(&counts, 1.0).unwrap();
        assert_eq!(noise.probs()[0], 0.0);
        assert!((noise.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((noise.probs()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn noise_sampling_matches_target_within_one_percent() {
        use rand_chacha::rand_core::SeedableRng;
        let counts: Vec<u64> = std::iter::once(0).chain(1..=40u64).collect();
        let noise = NoiseDistribution::from_counts(&counts, 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 1_000_000usize;
        let mut hits = vec![0u64; counts.len()];
        for _ in 0..draws {
            hits[noise.sample(&mut rng)] += 1;
        }
        assert_eq!(hits[0], 0);
        for (i, &h) in hits.iter().enumerate() {
            let freq = h as f64 / draws as f64;
            assert!(
                (freq - noise.probs()[i]).abs() < 0.01,
                "item {i}: {freq} vs {}",
                noise.probs()[i]
            );
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 0.70711).abs() < 1e-5);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn embedding_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let m = EmbeddingMatrix::new(4, 3, 9).unwrap();
        let keys = vec!["alpha".to_string(), "beta".to_string(), "gamma".to_string()];
        write_embeddings(&path, &keys, &m).unwrap();
        let loaded = read_embeddings(&path).unwrap();
        assert_eq!(loaded.keys, keys);
        assert_eq!(loaded.dim, 3);
        for i in 0..3 {
            assert_eq!(loaded.vectors[i].as_slice(), m.input_row(i + 1));
        }
        // Write what we read: byte-identical file.
        let first = fs::read(&path).unwrap();
        let path2 = dir.path().join("emb2.txt");
        let mut m2 = EmbeddingMatrix::new(4, 3, 1).unwrap();
        for i in 0..3 {
            m2.input_row_mut(i + 1).copy_from_slice(&loaded.vectors[i]);
        }
        write_embeddings(&path2, &loaded.keys, &m2).unwrap();
        assert_eq!(first, fs::read(&path2).unwrap());
    }
}
