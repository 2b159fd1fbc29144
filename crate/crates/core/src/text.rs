//! Text preprocessing, vocabulary construction, padded document encoding,
//! and loading of precomputed transformer token-sequence embeddings.
//!
//! The preprocessing pipeline lowercases, deletes URL spans and punctuation,
//! splits on whitespace, and (for the word-embedding path only) removes
//! stopwords. Documents are encoded as rows of token ids left-padded with 0,
//! the reserved padding id.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on pretrained token-sequence length (tokenizer max_length).
pub const PRETRAINED_MAX_LEN: usize = 128;

/// Veracity class of a post. `False` is the fake-news class and maps to the
/// positive binary target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    True,
    False,
}

impl Label {
    /// Binary target used by the classifier: 1 for fake ("false"), 0 for true.
    pub fn target(self) -> u8 {
        match self {
            Label::False => 1,
            Label::True => 0,
        }
    }

    /// Parses a dataset label string; returns `None` for the dropped classes
    /// (non-rumor, unverified, ...).
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "true" => Some(Label::True),
            "false" => Some(Label::False),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "true",
            Label::False => "false",
        }
    }
}

/// One raw post: identifier, text content, author node key, veracity class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    /// User id of the posting node; empty when the propagation tree is
    /// missing (such authors fall back to the zero node vector downstream).
    pub author: String,
    pub label: Label,
}

/// Preprocessing mode: stopword removal applies only to the Word2Vec path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessMode {
    Word2Vec,
    Transformer,
}

static URL_RE: OnceLock<Regex> = OnceLock::new();
static STOPWORDS: OnceLock<HashSet<String>> = OnceLock::new();

fn url_re() -> &'static Regex {
    URL_RE.get_or_init(|| Regex::new(r"(https?://\S*|www\.\S*)").expect("static regex"))
}

fn strip_punct(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect()
}

/// The shipped English stopword list, normalized the same way tokens are
/// (lowercased, punctuation deleted) so entries like "don't" match the
/// surface form "dont".
pub fn stopwords() -> &'static HashSet<String> {
    STOPWORDS.get_or_init(|| {
        include_str!("../data/stopwords_en.txt")
            .lines()
            .map(|w| strip_punct(&w.to_lowercase()))
            .filter(|w| !w.is_empty())
            .collect()
    })
}

/// Lowercases, deletes URL spans and punctuation, splits on whitespace, and
/// removes stopwords when `mode` is [`PreprocessMode::Word2Vec`]. The result
/// may be empty.
pub fn preprocess_text(text: &str, mode: PreprocessMode) -> Vec<String> {
    let lowered = text.to_lowercase();
    let no_urls = url_re().replace_all(&lowered, " ");
    let cleaned = strip_punct(&no_urls);
    cleaned
        .split_whitespace()
        .filter(|t| mode == PreprocessMode::Transformer || !stopwords().contains(*t))
        .map(str::to_owned)
        .collect()
}

/// Token vocabulary with ids assigned consecutively from 1 in
/// first-occurrence order; id 0 is reserved for padding and never assigned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    counts: HashMap<String, u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds the vocabulary over tokenized documents, excluding tokens with
    /// fewer than `min_count` occurrences.
    pub fn build(docs: &[Vec<String>], min_count: u64) -> Result<Vocabulary> {
        if min_count < 1 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in docs {
            for tok in doc {
                *counts.entry(tok.clone()).or_insert(0) += 1;
            }
        }
        let mut token_to_id = HashMap::new();
        let mut id_to_token = vec![String::new()]; // slot 0: padding
        for doc in docs {
            for tok in doc {
                if counts[tok] >= min_count && !token_to_id.contains_key(tok) {
                    token_to_id.insert(tok.clone(), id_to_token.len() as u32);
                    id_to_token.push(tok.clone());
                }
            }
        }
        if token_to_id.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Vocabulary {
            token_to_id,
            id_to_token,
            counts,
            min_count,
        })
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Token for a positive id; id 0 (padding) and out-of-range ids yield `None`.
    pub fn token(&self, id: u32) -> Option<&str> {
        if id == 0 {
            return None;
        }
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Number of vocabulary entries, excluding the padding slot.
    pub fn len(&self) -> usize {
        self.id_to_token.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Tokens in id order (index 0 is the empty padding placeholder).
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Occurrence count per id (index 0, padding, is 0). Feeds the noise
    /// distribution for negative sampling.
    pub fn counts_by_id(&self) -> Vec<u64> {
        self.id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| if i == 0 { 0 } else { self.counts[t] })
            .collect()
    }
}

/// See [`Vocabulary::build`].
pub fn build_vocabulary(docs: &[Vec<String>], min_count: u64) -> Result<Vocabulary> {
    Vocabulary::build(docs, min_count)
}

/// Integer document-to-token matrix with left zero padding: every row is
/// right-aligned content preceded by padding zeros, and the common width is
/// the longest encoded document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTokenMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl DocTokenMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Common row width k (the longest encoded document).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The row with its leading padding zeros stripped.
    pub fn unpadded(&self, i: usize) -> &[u32] {
        let row = self.row(i);
        let start = row.iter().position(|&v| v != 0).unwrap_or(row.len());
        &row[start..]
    }
}

/// Encodes tokenized documents against `vocab`, dropping out-of-vocabulary
/// tokens and left-padding every row with 0 to the longest encoded length.
pub fn encode_documents(docs: &[Vec<String>], vocab: &Vocabulary) -> Result<DocTokenMatrix> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let encoded: Vec<Vec<u32>> = docs
        .iter()
        .map(|doc| doc.iter().filter_map(|t| vocab.id(t)).collect())
        .collect();
    let cols = encoded.iter().map(Vec::len).max().unwrap_or(0);
    let mut data = Vec::with_capacity(docs.len() * cols);
    for ids in &encoded {
        data.extend(std::iter::repeat(0).take(cols - ids.len()));
        data.extend_from_slice(ids);
    }
    Ok(DocTokenMatrix {
        rows: docs.len(),
        cols,
        data,
    })
}

/// Encodes one new document against an existing width `k`: left-pads shorter
/// documents and truncates longer ones from the left (keeping the most recent
/// tokens), logging a warning on truncation.
pub fn encode_single(tokens: &[String], vocab: &Vocabulary, k: usize) -> Vec<u32> {
    let ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
    if ids.len() > k {
        log::warn!(
            "document of {} in-vocabulary tokens truncated from the left to width {}",
            ids.len(),
            k
        );
        ids[ids.len() - k..].to_vec()
    } else {
        let mut row = vec![0; k - ids.len()];
        row.extend_from_slice(&ids);
        row
    }
}

/// Precomputed transformer token sequences, one fixed-dimension vector per
/// subword token, keyed by document id.
#[derive(Debug, Clone)]
pub struct PretrainedSequenceSet {
    dim: usize,
    sequences: HashMap<String, Vec<Vec<f64>>>,
}

impl PretrainedSequenceSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&[Vec<f64>]> {
        self.sequences.get(doc_id).map(Vec::as_slice)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.sequences.keys().map(String::as_str)
    }
}

/// Loads a pretrained-sequence file: header `dim=<d>`, then per document one
/// `doc_id<TAB>v1,v2,...` line per token, with a blank line between
/// documents.
pub fn load_pretrained_sequences(path: &Path) -> Result<PretrainedSequenceSet> {
    let content = fs::read_to_string(path)?;
    parse_pretrained_sequences(&content)
}

pub fn parse_pretrained_sequences(content: &str) -> Result<PretrainedSequenceSet> {
    let mut lines = content.lines().enumerate();
    let dim = match lines.next() {
        Some((_, header)) if header.trim_start().starts_with("dim=") => header
            .trim()
            .strip_prefix("dim=")
            .unwrap()
            .parse::<usize>()
            .map_err(|_| Error::MalformedLine {
                line: 1,
                msg: format!("bad dimension header: {header:?}"),
            })?,
        _ => {
            return Err(Error::MalformedLine {
                line: 1,
                msg: "missing `dim=<d>` header".into(),
            })
        }
    };
    if dim == 0 {
        return Err(Error::MalformedLine {
            line: 1,
            msg: "dimension must be positive".into(),
        });
    }

    let mut sequences: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
    let mut block: Option<(String, Vec<Vec<f64>>)> = None;
    let mut flush = |block: &mut Option<(String, Vec<Vec<f64>>)>, line: usize| -> Result<()> {
        if let Some((doc, seq)) = block.take() {
            if seq.len() > PRETRAINED_MAX_LEN {
                return Err(Error::SequenceTooLong {
                    doc,
                    len: seq.len(),
                    max: PRETRAINED_MAX_LEN,
                });
            }
            if sequences.insert(doc.clone(), seq).is_some() {
                return Err(Error::MalformedLine {
                    line,
                    msg: format!("duplicate document {doc}"),
                });
            }
        }
        Ok(())
    };

    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            flush(&mut block, line_no)?;
            continue;
        }
        let (doc_id, values) = raw.split_once('\t').ok_or_else(|| Error::MalformedLine {
            line: line_no,
            msg: "expected `doc_id<TAB>v1,v2,...`".into(),
        })?;
        let vector = values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::MalformedLine {
                line: line_no,
                msg: format!("bad value: {e}"),
            })?;
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                what: format!("pretrained record at line {line_no}"),
                expected: dim,
                got: vector.len(),
            });
        }
        match &mut block {
            Some((doc, seq)) if doc == doc_id => seq.push(vector),
            Some(_) => {
                return Err(Error::MalformedLine {
                    line: line_no,
                    msg: format!("document id changed to {doc_id} without a blank separator"),
                })
            }
            None => block = Some((doc_id.to_owned(), vec![vector])),
        }
    }
    let last = content.lines().count();
    flush(&mut block, last)?;
    Ok(PretrainedSequenceSet { dim, sequences })
}

/// Writes the pretrained-sequence format; `docs` are emitted in the order
/// given. Values use the shortest round-trip float representation.
pub fn write_pretrained_sequences(
    path: &Path,
    dim: usize,
    docs: &[(String, Vec<Vec<f64>>)],
) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "dim={dim}").unwrap();
    for (i, (doc, seq)) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for vector in seq {
            let joined = vector
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{doc}\t{joined}").unwrap();
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preprocess_removes_urls_punctuation_and_stopwords() {
        let toks = preprocess_text("Check THIS out! https://t.co/x #news", PreprocessMode::Word2Vec);
        assert_eq!(toks, vec!["check", "news"]);
    }

    #[test]
    fn preprocess_empty_input() {
        assert!(preprocess_text("", PreprocessMode::Word2Vec).is_empty());
    }

    #[test]
    fn transformer_mode_keeps_stopwords() {
        let toks = preprocess_text("Breaking: fire in downtown", PreprocessMode::Transformer);
        assert_eq!(toks, vec!["breaking", "fire", "in", "downtown"]);
    }

    #[test]
    fn preprocess_is_idempotent_on_samples() {
        for s in [
            "Check THIS out! https://t.co/x #news",
            "Don't RT @user: www.example.com/page?a=1  crazy!!!",
            "İstanbul ß mixed ünïcode 123",
        ] {
            for mode in [PreprocessMode::Word2Vec, PreprocessMode::Transformer] {
                let once = preprocess_text(s, mode);
                let again = preprocess_text(&once.join(" "), mode);
                assert_eq!(once, again);
            }
        }
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let docs = vec![vec!["a".into(), "b".into(), "a".into()]];
        let v = Vocabulary::build(&docs, 1).unwrap();
        assert_eq!(v.id("a"), Some(1));
        assert_eq!(v.id("b"), Some(2));
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn vocabulary_threshold_filters() {
        let docs = vec![vec!["a".into(), "b".into(), "a".into()]];
        let v = Vocabulary::build(&docs, 2).unwrap();
        assert_eq!(v.id("a"), Some(1));
        assert_eq!(v.id("b"), None);
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn vocabulary_all_filtered_is_an_error() {
        let docs = vec![vec!["a".into(), "b".into()]];
        assert!(matches!(
            Vocabulary::build(&docs, 3),
            Err(Error::EmptyVocabulary)
        ));
    }

    fn vocab_with(n: usize) -> Vocabulary {
        let doc: Vec<String> = (1..=n).map(|i| format!("tok{i}")).collect();
        Vocabulary::build(&[doc], 1).unwrap()
    }

    #[test]
    fn encode_left_pads_to_longest() {
        let vocab = vocab_with(8);
        let docs = vec![
            vec!["tok5".to_string(), "tok7".to_string()],
            vec!["tok2".to_string()],
        ];
        let m = encode_documents(&docs, &vocab).unwrap();
        assert_eq!(m.cols(), 2);
        assert_eq!(m.row(0), &[5, 7]);
        assert_eq!(m.row(1), &[0, 2]);
    }

    #[test]
    fn encode_single_document_has_no_padding() {
        let vocab = vocab_with(3);
        let docs = vec![vec!["tok1".to_string(), "tok3".to_string()]];
        let m = encode_documents(&docs, &vocab).unwrap();
        assert_eq!(m.cols(), 2);
        assert_eq!(m.row(0), &[1, 3]);
    }

    #[test]
    fn oov_only_document_is_all_zeros() {
        let vocab = vocab_with(2);
        let docs = vec![
            vec!["tok1".to_string(), "tok2".to_string()],
            vec!["nope".to_string(), "unknown".to_string()],
        ];
        let m = encode_documents(&docs, &vocab).unwrap();
        assert_eq!(m.row(1), &[0, 0]);
        assert_eq!(m.unpadded(1), &[] as &[u32]);
    }

    #[test]
    fn encode_single_truncates_from_left() {
        let vocab = vocab_with(5);
        let tokens: Vec<String> = (1..=5).map(|i| format!("tok{i}")).collect();
        assert_eq!(encode_single(&tokens, &vocab, 3), vec![3, 4, 5]);
        assert_eq!(encode_single(&tokens[..2], &vocab, 3), vec![0, 1, 2]);
    }

    #[test]
    fn pretrained_round_trip_and_header_echo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let docs = vec![
            ("d1".to_string(), vec![vec![0.25, -1.5], vec![3.0, 0.125]]),
            ("d2".to_string(), vec![vec![1.0, 2.0]]),
        ];
        write_pretrained_sequences(&path, 2, &docs).unwrap();
        let set = load_pretrained_sequences(&path).unwrap();
        assert_eq!(set.dim(), 2);
        assert_eq!(set.len(), 2);
        assert_eq!(set.get("d1").unwrap(), &[vec![0.25, -1.5], vec![3.0, 0.125]]);
        assert_eq!(set.get("d2").unwrap(), &[vec![1.0, 2.0]]);
    }

    #[test]
    fn pretrained_dimension_mismatch_is_an_error() {
        let content = "dim=2\nd1\t1.0,2.0\nd1\t1.0,2.0,3.0\n";
        assert!(matches!(
            parse_pretrained_sequences(content),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pretrained_missing_header_is_an_error() {
        assert!(matches!(
            parse_pretrained_sequences("d1\t1.0,2.0\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn pretrained_sequence_over_cap_is_an_error() {
        let mut content = String::from("dim=1\n");
        for _ in 0..(PRETRAINED_MAX_LEN + 1) {
            content.push_str("d1\t0.5\n");
        }
        assert!(matches!(
            parse_pretrained_sequences(&content),
            Err(Error::SequenceTooLong { len, .. }) if len == PRETRAINED_MAX_LEN + 1
        ));
    }
}
