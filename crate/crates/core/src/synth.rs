//! Synthetic dataset generation: a desk-scale stand-in for the real
//! propagation datasets, with class-separable text, class-correlated
//! spreader pools, and fabricated transformer-sequence files. Everything is
//! deterministic in the seed, so regenerating a dataset reproduces it byte
//! for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{NodeEmbeddings, Sample, TextEmbeddings};
use crate::nn::Tensor;
use crate::seeds;
use crate::text::write_pretrained_sequences;

const FAKE_WORDS: &[&str] = &[
    "hoax", "exposed", "shocking", "secret", "miracle", "conspiracy", "coverup", "leaked",
    "banned", "cure",
];
const TRUE_WORDS: &[&str] = &[
    "confirmed", "official", "report", "statement", "update", "police", "weather", "council",
    "study", "schedule",
];
const FILLER: &[&str] = &["the", "a", "in", "on", "today", "people", "city", "news"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Total documents; classes are balanced.
    pub docs: usize,
    pub seed: u64,
    /// Emit a few non-retained label lines (unverified, non-rumor).
    pub with_dropped_labels: bool,
    /// Width of the fabricated transformer sequences.
    pub pretrained_dim: usize,
    /// One sequence file is written per name (`<name>.seq`).
    pub pretrained_names: Vec<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 40,
            seed: 0,
            with_dropped_labels: true,
            pretrained_dim: 16,
            pretrained_names: vec!["bert".to_string(), "bertweet".to_string()],
        }
    }
}

fn pick<'a>(rng: &mut impl Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Writes a complete dataset layout under `dir`: `source_tweets.txt`,
/// `label.txt`, `tree/<id>.txt`, and one `<name>.seq` pretrained file per
/// configured name.
pub fn generate(dir: &Path, config: &SynthConfig) -> Result<()> {
    fs::create_dir_all(dir.join("tree"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix_str(config.seed, "synth"));

    let mut source = String::new();
    let mut labels = String::new();
    let mut doc_tokens: Vec<(String, Vec<String>, bool)> = Vec::new();

    for i in 0..config.docs {
        let fake = i % 2 == 0;
        let id = format!("{}", 1000 + i);
        let pool = if fake { FAKE_WORDS } else { TRUE_WORDS };
        let n_words = rng.gen_range(6..=14);
        let mut words: Vec<String> = Vec::with_capacity(n_words);
        for w in 0..n_words {
            let from_filler = w % 3 == 2;
            let word = if from_filler { pick(&mut rng, FILLER) } else { pick(&mut rng, pool) };
            words.push(word.to_string());
        }
        let mut text = words.join(" ");
        if rng.gen_bool(0.4) {
            text.push_str(&format!(" https://t.co/{:x}", rng.gen::<u32>()));
        }
        if rng.gen_bool(0.5) {
            text.push('!');
        }
        writeln!(source, "{id}\t{text}").unwrap();
        writeln!(labels, "{}:{id}", if fake { "false" } else { "true" }).unwrap();
        doc_tokens.push((id, words, fake));
    }
    if config.with_dropped_labels {
        labels.push_str("unverified:999001\nnon-rumor:999002\n");
    }
    fs::write(dir.join("source_tweets.txt"), source)?;
    fs::write(dir.join("label.txt"), labels)?;

    // Propagation trees: the source author comes from the class pool, and
    // spreaders mix class-pool users with shared ones so the user graph
    // carries class signal.
    for (id, _, fake) in &doc_tokens {
        let pool_tag = if *fake { "f" } else { "t" };
        let author = format!("{pool_tag}{}", rng.gen_range(0..15));
        let n_extra = rng.gen_range(2..=8);
        let mut nodes = vec![author.clone()];
        let mut time_tenths: u64 = 0;
        let mut lines = String::new();
        for _ in 0..n_extra {
            let parent_idx = rng.gen_range(0..nodes.len());
            let parent = nodes[parent_idx].clone();
            let child = if rng.gen_bool(0.7) {
                format!("{pool_tag}{}", rng.gen_range(0..15))
            } else {
                format!("s{}", rng.gen_range(0..10))
            };
            if child == parent {
                continue;
            }
            let parent_time = if parent_idx == 0 { 0 } else { time_tenths };
            time_tenths += rng.gen_range(1..300);
            writeln!(
                lines,
                "['{parent}', '{id}', '{:.1}']->['{child}', '{id}', '{:.1}']",
                parent_time as f64 / 10.0,
                time_tenths as f64 / 10.0,
            )
            .unwrap();
            nodes.push(child);
        }
        if lines.is_empty() {
            // Guarantee at least one edge per tree.
            writeln!(
                lines,
                "['{author}', '{id}', '0.0']->['s0', '{id}', '1.5']"
            )
            .unwrap();
        }
        fs::write(dir.join("tree").join(format!("{id}.txt")), lines)?;
    }

    // Fabricated transformer sequences: one vector per word, a class-centered
    // base plus per-name, per-token noise.
    for name in &config.pretrained_names {
        let mut seq_rng =
            ChaCha8Rng::seed_from_u64(seeds::mix_str(config.seed, &format!("seq-{name}")));
        let dim = config.pretrained_dim;
        let docs: Vec<(String, Vec<Vec<f64>>)> = doc_tokens
            .iter()
            .map(|(id, words, fake)| {
                let center = if *fake { 0.6 } else { -0.6 };
                let seq: Vec<Vec<f64>> = words
                    .iter()
                    .take(24)
                    .map(|_| {
                        (0..dim)
                            .map(|j| {
                                let base = if j % 2 == 0 { center } else { -center * 0.5 };
                                base + seq_rng.gen_range(-0.3..0.3)
                            })
                            .collect()
                    })
                    .collect();
                (id.clone(), seq)
            })
            .collect();
        write_pretrained_sequences(&dir.join(format!("{name}.seq")), dim, &docs)?;
    }
    Ok(())
}

/// In-memory separable toy problem for overfit tests: two token patterns,
/// two author pools, random word table, distinct node vectors.
pub struct SeparableToy {
    pub samples: Vec<Sample>,
    pub text: TextEmbeddings,
    pub nodes: NodeEmbeddings,
}

pub fn separable_toy(n: usize, dim: usize, seed: u64) -> SeparableToy {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix_str(seed, "toy"));
    let vocab = 6;
    let mut table = Tensor::zeros(&[vocab + 1, dim]);
    for i in 1..=vocab {
        for v in table.row_mut(i) {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    let samples = (0..n)
        .map(|i| {
            let fake = i % 2 == 0;
            let ids = if fake {
                vec![0, 1, 2, 1]
            } else {
                vec![0, 3, 4, 3]
            };
            let author = if fake { "spreader" } else { "reporter" };
            Sample::from_tokens(ids, author, u8::from(fake))
        })
        .collect();
    let keys = vec!["spreader".to_string(), "reporter".to_string()];
    let vectors = vec![
        (0..dim).map(|j| 0.5 + 0.05 * j as f64).collect(),
        (0..dim).map(|j| -0.5 - 0.05 * j as f64).collect(),
    ];
    SeparableToy {
        samples,
        text: TextEmbeddings::Word2Vec(table),
        nodes: NodeEmbeddings::new(&keys, &vectors).expect("static toy shapes"),
    }
}

/// Two-community token corpus for the embedding-quality check: sentences
/// drawn entirely from one of two disjoint 50-token alphabets.
pub fn two_community_corpus(
    sentences_per_community: usize,
    sentence_len: usize,
    seed: u64,
) -> (Vec<Vec<u32>>, Vec<u32>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix_str(seed, "communities"));
    let community_a: Vec<u32> = (1..=50).collect();
    let community_b: Vec<u32> = (51..=100).collect();
    let mut sequences = Vec::new();
    for community in [&community_a, &community_b] {
        for _ in 0..sentences_per_community {
            let s: Vec<u32> = (0..sentence_len)
                .map(|_| community[rng.gen_range(0..community.len())])
                .collect();
            sequences.push(s);
        }
    }
    (sequences, community_a, community_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_dataset;

    #[test]
    fn generated_dataset_loads_and_is_balanced() {
        let dir = tempfile::tempdir().unwrap();
        let config = SynthConfig {
            docs: 20,
            seed: 5,
            ..SynthConfig::default()
        };
        generate(dir.path(), &config).unwrap();
        let ds = load_dataset(dir.path(), 1).unwrap();
        assert_eq!(ds.docs.len(), 20);
        assert_eq!(ds.class_counts(), (10, 10));
        assert_eq!(ds.report.dropped_labels.len(), 2);
        assert!(ds.corpus.user_graph().node_count() > 5);
        let set = crate::text::load_pretrained_sequences(&dir.path().join("bert.seq")).unwrap();
        assert_eq!(set.dim(), 16);
        assert_eq!(set.len(), 20);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let config = SynthConfig {
            docs: 12,
            seed: 42,
            ..SynthConfig::default()
        };
        generate(a.path(), &config).unwrap();
        generate(b.path(), &config).unwrap();
        for file in ["source_tweets.txt", "label.txt", "bert.seq"] {
            assert_eq!(
                fs::read(a.path().join(file)).unwrap(),
                fs::read(b.path().join(file)).unwrap(),
                "{file}"
            );
        }
    }

    #[test]
    fn toy_problem_shapes() {
        let toy = separable_toy(32, 8, 1);
        assert_eq!(toy.samples.len(), 32);
        assert_eq!(toy.nodes.dim(), 8);
        let fakes = toy.samples.iter().filter(|s| s.label == 1).count();
        assert_eq!(fakes, 16);
    }
}
