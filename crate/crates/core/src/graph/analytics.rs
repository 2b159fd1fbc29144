//! Network statistics over propagation trees: average degree, degree
//! centrality, and the histogram builder behind the plot exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{GraphCorpus, PropagationTree};

/// Undirected adjacency sets per user (distinct neighbors, self excluded).
fn neighbor_sets(tree: &PropagationTree) -> Vec<BTreeSet<usize>> {
    let mut sets = vec![BTreeSet::new(); tree.node_count()];
    for (p, c) in tree.edges() {
        let a = tree.user_index(&p.user_id).expect("indexed during parse");
        let b = tree.user_index(&c.user_id).expect("indexed during parse");
        if a != b {
            sets[a].insert(b);
            sets[b].insert(a);
        }
    }
    sets
}

/// Mean undirected degree (in + out, counting edge multiplicity) over all
/// nodes of the tree.
pub fn average_degree(tree: &PropagationTree) -> Result<f64> {
    let n = tree.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("tree has no nodes"));
    }
    let mut degree = vec![0u64; n];
    for (p, c) in tree.edges() {
        degree[tree.user_index(&p.user_id).unwrap()] += 1;
        degree[tree.user_index(&c.user_id).unwrap()] += 1;
    }
    Ok(degree.iter().sum::<u64>() as f64 / n as f64)
}

/// Degree centrality per user: distinct-neighbor count divided by n - 1.
pub fn degree_centrality(tree: &PropagationTree) -> Result<BTreeMap<String, f64>> {
    let n = tree.node_count();
    if n < 2 {
        return Err(Error::Graph(
            "degree centrality needs at least 2 nodes".into(),
        ));
    }
    let sets = neighbor_sets(tree);
    Ok(tree
        .users()
        .iter()
        .enumerate()
        .map(|(i, u)| (u.clone(), sets[i].len() as f64 / (n - 1) as f64))
        .collect())
}

/// One equal-width histogram bin over `[low, high)` (the last bin is
/// closed on the right).
#[derive(Debug, Clone, PartialEq)]
pub struct HistBin {
    pub low: f64,
    pub high: f64,
    pub count: u64,
}

/// Equal-width histogram over `[min, max]`. The `log_scale_counts` flag is
/// presentation metadata carried through to the exporters; it does not change
/// the counted values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<HistBin>,
    pub log_scale_counts: bool,
}

pub fn histogram(values: &[f64], bins: usize, log_scale_counts: bool) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput("histogram over no values"));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least 1 bin".into()));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        // Degenerate range: widen so every value lands in one interior bin.
        let eps = lo.abs().max(1.0) * 1e-9;
        lo -= eps;
        hi += eps;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistBin {
            low: lo + i as f64 * width,
            // Use the exact maximum for the last bin edge.
            high: if i + 1 == counts.len() {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            count,
        })
        .collect();
    Ok(Histogram {
        bins,
        log_scale_counts,
    })
}

/// Per-tree statistic rows in the `stat,id,value` analytics schema.
pub fn analytics_rows(corpus: &GraphCorpus) -> Result<Vec<(String, String, f64)>> {
    let mut rows = Vec::new();
    for (id, tree) in corpus.trees() {
        rows.push(("node_count".to_string(), id.clone(), tree.node_count() as f64));
        rows.push(("edge_count".to_string(), id.clone(), tree.edges().len() as f64));
        rows.push(("avg_degree".to_string(), id.clone(), average_degree(tree)?));
        if tree.node_count() >= 2 {
            let cent = degree_centrality(tree)?;
            let mean = cent.values().sum::<f64>() / cent.len() as f64;
            rows.push(("mean_degree_centrality".to_string(), id.clone(), mean));
        }
    }
    Ok(rows)
}

pub fn analytics_csv(rows: &[(String, String, f64)]) -> String {
    let mut out = String::from("stat,id,value\n");
    for (stat, id, value) in rows {
        writeln!(out, "{stat},{id},{value}").unwrap();
    }
    out
}

pub fn histogram_csv(hist: &Histogram) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for b in &hist.bins {
        writeln!(out, "{},{},{}", b.low, b.high, b.count).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PropagationTree;

    fn path3() -> PropagationTree {
        PropagationTree::parse(
            "['a', '1', '0.0']->['b', '1', '1.0']\n['b', '1', '1.0']->['c', '1', '2.0']",
        )
        .unwrap()
    }

    fn star4() -> PropagationTree {
        PropagationTree::parse(
            "['hub', '1', '0.0']->['l1', '1', '1.0']\n['hub', '1', '0.0']->['l2', '1', '1.0']\n['hub', '1', '0.0']->['l3', '1', '1.0']",
        )
        .unwrap()
    }

    #[test]
    fn average_degree_path_and_star() {
        assert!((average_degree(&path3()).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((average_degree(&star4()).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn centrality_star() {
        let cent = degree_centrality(&star4()).unwrap();
        assert!((cent["hub"] - 1.0).abs() < 1e-12);
        for leaf in ["l1", "l2", "l3"] {
            assert!((cent[leaf] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centrality_complete_pair() {
        let tree = PropagationTree::parse("['a', '1', '0.0']->['b', '1', '1.0']").unwrap();
        let cent = degree_centrality(&tree).unwrap();
        assert_eq!(cent["a"], 1.0);
        assert_eq!(cent["b"], 1.0);
    }

    #[test]
    fn centrality_single_node_is_an_error() {
        let tree =
            PropagationTree::parse("['a', '1', '0.0']->['a', '1', '1.0']").map(|t| t);
        // A pure self-loop has no root, so it is already rejected at parse.
        assert!(tree.is_err());
        let two = PropagationTree::parse("['a', '1', '0.0']->['b', '1', '1.0']").unwrap();
        assert!(degree_centrality(&two).is_ok());
    }

    #[test]
    fn histogram_equal_width() {
        let h = histogram(&[1.0, 2.0, 3.0, 4.0], 2, false).unwrap();
        assert_eq!(h.bins.len(), 2);
        assert_eq!(h.bins[0], HistBin { low: 1.0, high: 2.5, count: 2 });
        assert_eq!(h.bins[1].count, 2);
        assert_eq!(h.bins[1].high, 4.0);
    }

    #[test]
    fn histogram_constant_values_single_occupied_bin() {
        let h = histogram(&[5.0, 5.0, 5.0], 4, true).unwrap();
        let occupied: Vec<&HistBin> = h.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].count, 3);
        assert!(h.log_scale_counts);
    }

    #[test]
    fn histogram_counts_sum_to_input_len() {
        let values: Vec<f64> = (0..137).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        for bins in 1..=50 {
            let h = histogram(&values, bins, false).unwrap();
            let total: u64 = h.bins.iter().map(|b| b.count).sum();
            assert_eq!(total, values.len() as u64, "bins={bins}");
        }
    }

    #[test]
    fn histogram_empty_is_an_error() {
        assert!(histogram(&[], 3, false).is_err());
    }
}
