//! Propagation-tree parsing, corpus assembly, and the union user graph.
//!
//! Tree files carry one edge per line in the public-release syntax
//! `['<uid>', '<tid>', '<t>']->['<uid>', '<tid>', '<t>']`, read as directed
//! parent-to-child diffusion edges. The corpus-level user graph is the union
//! of all tree edges keyed by user id; it is what the node-embedding walks
//! traverse.

pub mod analytics;
pub mod dot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::text::Label;

/// Time value stored when the time field carries the root sentinel rather
/// than a minute offset.
pub const ROOT_TIME: f64 = -1.0;

/// Pseudo user id used by the public release to anchor the source post.
pub const ROOT_USER: &str = "ROOT";

/// One endpoint of a propagation edge: posting user, tweet, and minutes since
/// the source post.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRef {
    pub user_id: String,
    pub tweet_id: String,
    pub time_offset: f64,
}

impl NodeRef {
    pub fn is_root_sentinel(&self) -> bool {
        self.user_id == ROOT_USER
    }
}

/// A directed diffusion tree parsed from one tree file. Edge order follows
/// the file; nodes are indexed by user id in first-occurrence order.
#[derive(Debug, Clone)]
pub struct PropagationTree {
    root_tweet_id: String,
    root_user: String,
    edges: Vec<(NodeRef, NodeRef)>,
    users: Vec<String>,
    user_index: HashMap<String, usize>,
}

fn parse_endpoint(part: &str, line_no: usize) -> Result<NodeRef> {
    let trimmed = part.trim();
    let inner = trimmed
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::MalformedLine {
            line: line_no,
            msg: format!("endpoint is not bracketed: {trimmed:?}"),
        })?;
    let fields: Vec<&str> = inner.split(',').collect();
    if fields.len() != 3 {
        return Err(Error::MalformedLine {
            line: line_no,
            msg: format!("expected 3 fields, got {}", fields.len()),
        });
    }
    let unquote = |s: &str| -> Result<String> {
        let t = s.trim();
        t.strip_prefix('\'')
            .and_then(|u| u.strip_suffix('\''))
            .map(str::to_owned)
            .ok_or_else(|| Error::MalformedLine {
                line: line_no,
                msg: format!("field is not single-quoted: {t:?}"),
            })
    };
    let user_id = unquote(fields[0])?;
    let tweet_id = unquote(fields[1])?;
    let time_raw = unquote(fields[2])?;
    let time_offset = if time_raw == ROOT_USER {
        ROOT_TIME
    } else {
        let t: f64 = time_raw.parse().map_err(|_| Error::MalformedLine {
            line: line_no,
            msg: format!("bad time offset: {time_raw:?}"),
        })?;
        if t < 0.0 {
            return Err(Error::MalformedLine {
                line: line_no,
                msg: format!("negative time offset: {t}"),
            });
        }
        t
    };
    Ok(NodeRef {
        user_id,
        tweet_id,
        time_offset,
    })
}

fn format_time(t: f64) -> String {
    if t == ROOT_TIME {
        ROOT_USER.to_string()
    } else if t.fract() == 0.0 {
        format!("{t:.1}")
    } else {
        t.to_string()
    }
}

impl PropagationTree {
    /// Parses one tree file. The root is the unique node that appears as a
    /// parent but never as a child; zero or several such nodes make the file
    /// malformed.
    pub fn parse(content: &str) -> Result<PropagationTree> {
        let mut edges = Vec::new();
        for (idx, raw) in content.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (left, right) = raw.split_once("->").ok_or_else(|| Error::MalformedLine {
                line: line_no,
                msg: "missing `->` separator".into(),
            })?;
            if right.contains("->") {
                return Err(Error::MalformedLine {
                    line: line_no,
                    msg: "more than one `->` separator".into(),
                });
            }
            let parent = parse_endpoint(left, line_no)?;
            let child = parse_endpoint(right, line_no)?;
            edges.push((parent, child));
        }
        if edges.is_empty() {
            return Err(Error::EmptyInput("tree file has no edges"));
        }

        let mut parents: BTreeSet<&str> = BTreeSet::new();
        let mut children: BTreeSet<&str> = BTreeSet::new();
        for (p, c) in &edges {
            parents.insert(&p.user_id);
            children.insert(&c.user_id);
        }
        let roots: Vec<&str> = parents.difference(&children).copied().collect();
        let root_user = match roots.as_slice() {
            [only] => (*only).to_string(),
            [] => return Err(Error::Graph("no root: every parent also appears as a child".into())),
            many => {
                return Err(Error::Graph(format!(
                    "{} candidate roots: {}",
                    many.len(),
                    many.join(", ")
                )))
            }
        };
        let root_tweet_id = edges
            .iter()
            .find(|(p, _)| p.user_id == root_user)
            .map(|(p, _)| p.tweet_id.clone())
            .expect("root user appears as a parent");

        let mut users = Vec::new();
        let mut user_index = HashMap::new();
        for (p, c) in &edges {
            for node in [p, c] {
                if !user_index.contains_key(&node.user_id) {
                    user_index.insert(node.user_id.clone(), users.len());
                    users.push(node.user_id.clone());
                }
            }
        }

        Ok(PropagationTree {
            root_tweet_id,
            root_user,
            edges,
            users,
            user_index,
        })
    }

    /// Serializes back to the file syntax, one edge per line in parse order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (p, c) in &self.edges {
            writeln!(
                out,
                "['{}', '{}', '{}']->['{}', '{}', '{}']",
                p.user_id,
                p.tweet_id,
                format_time(p.time_offset),
                c.user_id,
                c.tweet_id,
                format_time(c.time_offset),
            )
            .unwrap();
        }
        out
    }

    pub fn edges(&self) -> &[(NodeRef, NodeRef)] {
        &self.edges
    }

    pub fn root_tweet_id(&self) -> &str {
        &self.root_tweet_id
    }

    pub fn root_user(&self) -> &str {
        &self.root_user
    }

    /// Distinct users in the tree, first-occurrence order.
    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    pub fn user_index(&self, user_id: &str) -> Option<usize> {
        self.user_index.get(user_id).copied()
    }

    /// The author of the source post: the root user, or, when the file uses
    /// the ROOT pseudo-node, the first child hanging off it.
    pub fn source_author(&self) -> &str {
        if self.root_user == ROOT_USER {
            self.edges
                .iter()
                .find(|(p, _)| p.user_id == ROOT_USER)
                .map(|(_, c)| c.user_id.as_str())
                .unwrap_or(ROOT_USER)
        } else {
            &self.root_user
        }
    }
}

/// Parsed label file plus drop accounting.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    pub labels: BTreeMap<String, Label>,
    /// Counts of dropped lines per non-retained class string.
    pub dropped: BTreeMap<String, usize>,
}

impl LabelMap {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Parses `label:tweet_id` lines, retaining only the true/false classes.
/// Duplicate ids with conflicting labels are an error.
pub fn load_labels(content: &str) -> Result<LabelMap> {
    let mut map = LabelMap::default();
    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (label_str, id) = raw.split_once(':').ok_or_else(|| Error::MalformedLine {
            line: line_no,
            msg: "expected `label:tweet_id`".into(),
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::MalformedLine {
                line: line_no,
                msg: "empty tweet id".into(),
            });
        }
        match Label::parse(label_str) {
            Some(label) => {
                if let Some(prev) = map.labels.insert(id.to_string(), label) {
                    if prev != label {
                        return Err(Error::ConflictingLabel(id.to_string()));
                    }
                }
            }
            None => {
                *map.dropped.entry(label_str.trim().to_string()).or_insert(0) += 1;
            }
        }
    }
    Ok(map)
}

/// Union of all tree edges keyed by user id. Directed, deduplicated, with
/// self-loops and ROOT pseudo-edges dropped. Node order is first occurrence
/// over the (sorted) tree iteration, so assembly is deterministic.
#[derive(Debug, Clone)]
pub struct UserGraph {
    keys: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    undirected: Vec<Vec<usize>>,
}

impl UserGraph {
    pub fn from_trees<'a>(trees: impl Iterator<Item = &'a PropagationTree>) -> UserGraph {
        let mut keys: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
        let intern = |keys: &mut Vec<String>, index: &mut HashMap<String, usize>, k: &str| {
            *index.entry(k.to_string()).or_insert_with(|| {
                keys.push(k.to_string());
                keys.len() - 1
            })
        };
        for tree in trees {
            for (p, c) in tree.edges() {
                if p.is_root_sentinel() || c.is_root_sentinel() || p.user_id == c.user_id {
                    continue;
                }
                let a = intern(&mut keys, &mut index, &p.user_id);
                let b = intern(&mut keys, &mut index, &c.user_id);
                edge_set.insert((a, b));
            }
        }
        let n = keys.len();
        let mut out = vec![Vec::new(); n];
        let mut undirected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b) in edge_set {
            out[a].push(b);
            undirected[a].insert(b);
            undirected[b].insert(a);
        }
        for adj in &mut out {
            adj.sort_unstable();
        }
        let undirected = undirected
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        UserGraph {
            keys,
            index,
            out,
            undirected,
        }
    }

    /// Builds a graph directly from keyed directed edges (used by the
    /// synthetic generator and tests). Same normalization as
    /// [`UserGraph::from_trees`]: dedup, sorted adjacency, self-loops dropped.
    pub fn from_edge_list(keys: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> UserGraph {
        let n = keys.len();
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        let edge_set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|&(a, b)| a != b && a < n && b < n)
            .collect();
        let mut out = vec![Vec::new(); n];
        let mut undirected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b) in edge_set {
            out[a].push(b);
            undirected[a].insert(b);
            undirected[b].insert(a);
        }
        for adj in &mut out {
            adj.sort_unstable();
        }
        UserGraph {
            keys,
            index,
            out,
            undirected: undirected.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Neighbors in the chosen traversal view; sorted ascending.
    pub fn neighbors(&self, i: usize, undirected: bool) -> &[usize] {
        if undirected {
            &self.undirected[i]
        } else {
            &self.out[i]
        }
    }

    pub fn has_edge(&self, from: usize, to: usize, undirected: bool) -> bool {
        self.neighbors(from, undirected).binary_search(&to).is_ok()
    }

    pub fn edge_count_directed(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }
}

/// Counts reported while pairing trees with labels.
#[derive(Debug, Clone, Default)]
pub struct AssemblyReport {
    /// Trees whose id has no retained label (reported, then skipped).
    pub orphan_trees: Vec<String>,
    /// Retained label ids that have no tree file.
    pub labels_without_tree: Vec<String>,
}

/// Labeled propagation trees plus the union user graph.
#[derive(Debug, Clone)]
pub struct GraphCorpus {
    trees: BTreeMap<String, PropagationTree>,
    labels: BTreeMap<String, Label>,
    user_graph: UserGraph,
}

impl GraphCorpus {
    /// Pairs trees with retained labels; unlabeled trees are skipped and
    /// reported. The user graph is the union over retained trees.
    pub fn assemble(
        trees: BTreeMap<String, PropagationTree>,
        labels: BTreeMap<String, Label>,
    ) -> (GraphCorpus, AssemblyReport) {
        let mut report = AssemblyReport::default();
        let mut retained = BTreeMap::new();
        for (id, tree) in trees {
            if labels.contains_key(&id) {
                retained.insert(id, tree);
            } else {
                report.orphan_trees.push(id);
            }
        }
        for id in labels.keys() {
            if !retained.contains_key(id) {
                report.labels_without_tree.push(id.clone());
            }
        }
        let user_graph = UserGraph::from_trees(retained.values());
        (
            GraphCorpus {
                trees: retained,
                labels,
                user_graph,
            },
            report,
        )
    }

    pub fn trees(&self) -> &BTreeMap<String, PropagationTree> {
        &self.trees
    }

    pub fn labels(&self) -> &BTreeMap<String, Label> {
        &self.labels
    }

    pub fn user_graph(&self) -> &UserGraph {
        &self.user_graph
    }

    pub fn label_of(&self, tweet_id: &str) -> Option<Label> {
        self.labels.get(tweet_id).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str =
        "['972651', '80080680482123777', '0.0']->['1074921', '80080680482123777', '0.3']";

    #[test]
    fn parses_single_edge() {
        let tree = PropagationTree::parse(LINE).unwrap();
        assert_eq!(tree.edges().len(), 1);
        let (p, c) = &tree.edges()[0];
        assert_eq!(p.user_id, "972651");
        assert_eq!(c.time_offset, 0.3);
        assert_eq!(tree.root_user(), "972651");
        assert_eq!(tree.root_tweet_id(), "80080680482123777");
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(
            PropagationTree::parse(""),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            PropagationTree::parse("\n\n"),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let content = format!("{LINE}\nnot an edge\n");
        match PropagationTree::parse(&content) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
    }

    #[test]
    fn serialize_round_trips() {
        let content = format!(
            "{LINE}\n['1074921', '80080680482123777', '0.3']->['55', '9', '2.5']\n"
        );
        let tree = PropagationTree::parse(&content).unwrap();
        assert_eq!(tree.serialize(), content);
        let again = PropagationTree::parse(&tree.serialize()).unwrap();
        assert_eq!(again.serialize(), content);
    }

    #[test]
    fn lenient_whitespace_strict_arity() {
        let ok = "  [ '1', '2', '0.0' ] -> [ '3', '4', '1.0' ]  ";
        assert!(PropagationTree::parse(ok).is_ok());
        let bad = "['1', '2']->['3', '4', '1.0']";
        assert!(matches!(
            PropagationTree::parse(bad),
            Err(Error::MalformedLine { .. })
        ));
    }

    #[test]
    fn cycle_has_no_root() {
        let content = "['a', '1', '0.0']->['b', '2', '1.0']\n['b', '2', '1.0']->['a', '1', '2.0']";
        assert!(matches!(
            PropagationTree::parse(content),
            Err(Error::Graph(_))
        ));
    }

    #[test]
    fn two_roots_are_rejected() {
        let content = "['a', '1', '0.0']->['c', '2', '1.0']\n['b', '3', '0.0']->['d', '4', '1.0']";
        assert!(matches!(
            PropagationTree::parse(content),
            Err(Error::Graph(_))
        ));
    }

    #[test]
    fn root_sentinel_source_author() {
        let content =
            "['ROOT', 'ROOT', '0.0']->['42', '100', '0.0']\n['42', '100', '0.0']->['7', '100', '1.5']";
        let tree = PropagationTree::parse(content).unwrap();
        assert_eq!(tree.root_user(), "ROOT");
        assert_eq!(tree.source_author(), "42");
    }

    #[test]
    fn labels_filter_and_report() {
        let map = load_labels("true:111\nunverified:222\n").unwrap();
        assert_eq!(map.labels.len(), 1);
        assert_eq!(map.labels["111"], Label::True);
        assert_eq!(map.dropped_total(), 1);
        assert_eq!(map.dropped["unverified"], 1);
    }

    #[test]
    fn empty_label_input_is_empty_map() {
        let map = load_labels("").unwrap();
        assert!(map.labels.is_empty());
        assert_eq!(map.dropped_total(), 0);
    }

    #[test]
    fn conflicting_labels_are_an_error() {
        assert!(matches!(
            load_labels("true:1\nfalse:1\n"),
            Err(Error::ConflictingLabel(id)) if id == "1"
        ));
        // Duplicate with the same label is fine.
        assert!(load_labels("true:1\ntrue:1\n").is_ok());
    }

    #[test]
    fn malformed_label_line() {
        assert!(matches!(
            load_labels("truish-111\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn user_graph_dedupes_and_drops_root_and_self_loops() {
        let t1 = PropagationTree::parse(
            "['ROOT', 'ROOT', '0.0']->['a', '1', '0.0']\n['a', '1', '0.0']->['b', '1', '1.0']\n['a', '1', '0.0']->['b', '1', '2.0']\n['b', '1', '1.0']->['b', '1', '3.0']",
        )
        .unwrap();
        let g = UserGraph::from_trees([&t1].into_iter());
        assert_eq!(g.node_count(), 2);
        let a = g.index_of("a").unwrap();
        let b = g.index_of("b").unwrap();
        assert_eq!(g.neighbors(a, false), &[b]);
        assert!(g.neighbors(b, false).is_empty());
        assert_eq!(g.neighbors(b, true), &[a]);
        assert!(g.has_edge(a, b, false));
        assert!(!g.has_edge(b, a, false));
        assert!(g.has_edge(b, a, true));
    }

    #[test]
    fn corpus_assembly_reports_orphans() {
        let tree = PropagationTree::parse(LINE).unwrap();
        let mut trees = BTreeMap::new();
        trees.insert("80080680482123777".to_string(), tree.clone());
        trees.insert("999".to_string(), tree);
        let mut labels = BTreeMap::new();
        labels.insert("80080680482123777".to_string(), Label::False);
        labels.insert("12345".to_string(), Label::True);
        let (corpus, report) = GraphCorpus::assemble(trees, labels);
        assert_eq!(corpus.trees().len(), 1);
        assert_eq!(report.orphan_trees, vec!["999".to_string()]);
        assert_eq!(report.labels_without_tree, vec!["12345".to_string()]);
    }
}
