//! Dataset ingestion: pairs `source_tweets.txt`, `label.txt`, and the
//! `tree/` directory into a prepared corpus with tokenized documents, the
//! padded token matrix, and the propagation-graph corpus.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{load_labels, GraphCorpus, PropagationTree};
use crate::model::Sample;
use crate::text::{
    encode_documents, preprocess_text, DocTokenMatrix, Label, PreprocessMode,
    PretrainedSequenceSet, RawDocument, Vocabulary,
};

/// Ingestion accounting surfaced by the `ingest` command.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct IngestReport {
    pub source_tweets: usize,
    pub retained_docs: usize,
    /// Dropped label lines per non-retained class.
    pub dropped_labels: BTreeMap<String, usize>,
    /// Trees whose id carries no retained label (skipped).
    pub orphan_trees: usize,
    /// Retained labels with no tree file; their documents keep an empty
    /// author and fall back to the zero node vector.
    pub docs_without_tree: usize,
    /// Retained labels with no source text (skipped).
    pub labels_without_text: usize,
    pub class_counts: BTreeMap<String, usize>,
}

/// A fully prepared dataset, ordered by tweet id throughout.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub docs: Vec<RawDocument>,
    /// Word2Vec-mode tokens (stopwords removed), one list per document.
    pub tokens: Vec<Vec<String>>,
    /// Transformer-mode tokens (stopwords kept), used for word-count stats.
    pub tokens_raw: Vec<Vec<String>>,
    pub vocab: Vocabulary,
    pub matrix: DocTokenMatrix,
    pub corpus: GraphCorpus,
    pub report: IngestReport,
}

fn read_source_tweets(path: &Path) -> Result<BTreeMap<String, String>> {
    let content = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (idx, raw) in content.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let (id, text) = raw.split_once('\t').ok_or_else(|| Error::MalformedLine {
            line: idx + 1,
            msg: "expected `tweet_id<TAB>text`".into(),
        })?;
        map.insert(id.trim().to_string(), text.to_string());
    }
    Ok(map)
}

fn read_trees(dir: &Path) -> Result<BTreeMap<String, PropagationTree>> {
    if !dir.is_dir() {
        return Err(Error::Missing(format!(
            "tree directory {} does not exist",
            dir.display()
        )));
    }
    let mut trees = BTreeMap::new();
    let mut entries: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    entries.sort();
    for path in entries {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let content = fs::read_to_string(&path)?;
        let tree = PropagationTree::parse(&content).map_err(|e| match e {
            Error::MalformedLine { line, msg } => Error::MalformedLine {
                line,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })?;
        trees.insert(id, tree);
    }
    Ok(trees)
}

/// Loads the three-part dataset layout from `dir`. `min_count` is the
/// Word2Vec vocabulary threshold.
pub fn load_dataset(dir: &Path, min_count: u64) -> Result<Dataset> {
    let source = read_source_tweets(&dir.join("source_tweets.txt"))?;
    let label_content = fs::read_to_string(dir.join("label.txt"))?;
    let label_map = load_labels(&label_content)?;
    let trees = read_trees(&dir.join("tree"))?;
    let (corpus, assembly) = GraphCorpus::assemble(trees, label_map.labels.clone());

    let mut report = IngestReport {
        source_tweets: source.len(),
        dropped_labels: label_map.dropped.clone(),
        orphan_trees: assembly.orphan_trees.len(),
        ..IngestReport::default()
    };

    let mut docs = Vec::new();
    for (id, &label) in corpus.labels() {
        let Some(text) = source.get(id) else {
            report.labels_without_text += 1;
            continue;
        };
        let author = match corpus.trees().get(id) {
            Some(tree) => tree.source_author().to_string(),
            None => {
                report.docs_without_tree += 1;
                String::new()
            }
        };
        docs.push(RawDocument {
            id: id.clone(),
            text: text.clone(),
            author,
            label,
        });
    }
    if docs.is_empty() {
        return Err(Error::EmptyInput("no labeled documents with source text"));
    }
    report.retained_docs = docs.len();
    for doc in &docs {
        *report
            .class_counts
            .entry(doc.label.as_str().to_string())
            .or_insert(0) += 1;
    }

    let tokens: Vec<Vec<String>> = docs
        .iter()
        .map(|d| preprocess_text(&d.text, PreprocessMode::Word2Vec))
        .collect();
    let tokens_raw: Vec<Vec<String>> = docs
        .iter()
        .map(|d| preprocess_text(&d.text, PreprocessMode::Transformer))
        .collect();
    let vocab = Vocabulary::build(&tokens, min_count)?;
    let matrix = encode_documents(&tokens, &vocab)?;

    Ok(Dataset {
        docs,
        tokens,
        tokens_raw,
        vocab,
        matrix,
        corpus,
        report,
    })
}

impl Dataset {
    /// Binary targets in document order (fake = 1).
    pub fn labels(&self) -> Vec<u8> {
        self.docs.iter().map(|d| d.label.target()).collect()
    }

    /// Samples carrying padded token-id rows (Word2Vec path).
    pub fn word2vec_samples(&self) -> Vec<Sample> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Sample::from_tokens(self.matrix.row(i).to_vec(), d.author.clone(), d.label.target())
            })
            .collect()
    }

    /// Samples carrying pretrained vector sequences; every document must be
    /// present in the set.
    pub fn pretrained_samples(&self, set: &PretrainedSequenceSet) -> Result<Vec<Sample>> {
        let missing: Vec<&str> = self
            .docs
            .iter()
            .filter(|d| set.get(&d.id).is_none())
            .map(|d| d.id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Missing(format!(
                "{} documents absent from the pretrained set (first: {})",
                missing.len(),
                missing[0]
            )));
        }
        self.docs
            .iter()
            .map(|d| {
                let seq = set.get(&d.id).expect("checked above");
                Sample::from_sequence(seq, d.author.clone(), d.label.target())
            })
            .collect()
    }

    /// Per-document character lengths of the raw text.
    pub fn char_lengths(&self) -> Vec<f64> {
        self.docs.iter().map(|d| d.text.chars().count() as f64).collect()
    }

    /// Per-document word counts (transformer-mode tokens, stopwords kept).
    pub fn word_counts(&self) -> Vec<f64> {
        self.tokens_raw.iter().map(|t| t.len() as f64).collect()
    }

    /// Class labels present, with counts, for the balance report.
    pub fn class_counts(&self) -> (usize, usize) {
        let fake = self.docs.iter().filter(|d| d.label == Label::False).count();
        (self.docs.len() - fake, fake)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_dataset(dir: &Path) {
        fs::create_dir_all(dir.join("tree")).unwrap();
        fs::write(
            dir.join("source_tweets.txt"),
            "100\tBreaking news about the storm\n200\tTotally fake claim here\n300\tno label for me\n",
        )
        .unwrap();
        fs::write(dir.join("label.txt"), "true:100\nfalse:200\nunverified:999\n").unwrap();
        fs::write(
            dir.join("tree").join("100.txt"),
            "['u1', '100', '0.0']->['u2', '100', '1.0']\n",
        )
        .unwrap();
        fs::write(
            dir.join("tree").join("200.txt"),
            "['u3', '200', '0.0']->['u1', '200', '2.0']\n",
        )
        .unwrap();
        fs::write(
            dir.join("tree").join("777.txt"),
            "['u9', '777', '0.0']->['u8', '777', '1.0']\n",
        )
        .unwrap();
    }

    #[test]
    fn loads_and_accounts_for_everything() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path());
        let ds = load_dataset(dir.path(), 1).unwrap();
        assert_eq!(ds.docs.len(), 2);
        assert_eq!(ds.docs[0].id, "100");
        assert_eq!(ds.docs[0].author, "u1");
        assert_eq!(ds.docs[1].label, Label::False);
        assert_eq!(ds.report.source_tweets, 3);
        assert_eq!(ds.report.orphan_trees, 1); // 777 has no label
        assert_eq!(ds.report.dropped_labels["unverified"], 1);
        assert_eq!(ds.class_counts(), (1, 1));
        assert_eq!(ds.corpus.user_graph().node_count(), 3);
    }

    #[test]
    fn missing_tree_directory_is_a_hard_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("source_tweets.txt"), "1\thello world\n").unwrap();
        fs::write(dir.path().join("label.txt"), "true:1\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path(), 1),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn label_without_tree_keeps_doc_with_empty_author() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path());
        fs::write(
            dir.path().join("label.txt"),
            "true:100\nfalse:200\ntrue:300\n",
        )
        .unwrap();
        let ds = load_dataset(dir.path(), 1).unwrap();
        assert_eq!(ds.docs.len(), 3);
        let doc300 = ds.docs.iter().find(|d| d.id == "300").unwrap();
        assert_eq!(doc300.author, "");
        assert_eq!(ds.report.docs_without_tree, 1);
    }

    #[test]
    fn only_dropped_labels_is_an_empty_dataset_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("tree")).unwrap();
        fs::write(dir.path().join("source_tweets.txt"), "1\thello\n").unwrap();
        fs::write(dir.path().join("label.txt"), "unverified:1\nnon-rumor:2\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path(), 1),
            Err(Error::EmptyInput(_))
        ));
    }
}
