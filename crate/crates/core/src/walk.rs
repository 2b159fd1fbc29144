//! Random-walk generation over the user graph: first-order uniform walks and
//! second-order biased walks whose transition weights come from the bias
//! coefficient alpha(p, q).
//!
//! Walks follow out-edges by default (diffusion semantics) and end early at
//! sink nodes; an undirected-traversal flag exists for ablation. Each walk
//! draws from an RNG stream derived from (seed, start node, round), so a
//! parallel scheduler would produce the same corpus as this serial one.

pub mod alias;

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UserGraph;
use crate::seeds;
use alias::AliasTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkMode {
    /// Uniform neighbor sampling (DeepWalk-style).
    FirstOrder,
    /// Biased by alpha(p, q) over the previous hop (Node2Vec-style).
    SecondOrder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return parameter: weight 1/p for stepping back to the previous node.
    pub p: f64,
    /// In-out parameter: weight 1/q for stepping outward (distance 2).
    pub q: f64,
    pub seed: u64,
    pub mode: WalkMode,
    /// Traverse edges in both directions instead of following diffusion.
    pub undirected: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 10,
            walks_per_node: 10,
            p: 1.0,
            q: 1.0,
            seed: 0,
            mode: WalkMode::SecondOrder,
            undirected: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 1 {
            return Err(Error::InvalidConfig("walk_length must be >= 1".into()));
        }
        if self.walks_per_node < 1 {
            return Err(Error::InvalidConfig("walks_per_node must be >= 1".into()));
        }
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return Err(Error::InvalidConfig("p and q must be positive".into()));
        }
        Ok(())
    }
}

/// The second-order bias coefficient: 1/p at distance 0 (return), 1 at
/// distance 1, 1/q at distance 2.
pub fn bias_coefficient(d_uv: u8, p: f64, q: f64) -> Result<f64> {
    match d_uv {
        0 => Ok(1.0 / p),
        1 => Ok(1.0),
        2 => Ok(1.0 / q),
        other => Err(Error::InvalidConfig(format!(
            "path length {other} outside {{0, 1, 2}}"
        ))),
    }
}

/// Transition distribution out of `cur` given the previous node: probability
/// of neighbor x proportional to alpha(d(prev, x)), where d is 0 when x is
/// prev, 1 when x is adjacent to prev, 2 otherwise. `prev = None` (walk
/// start) yields the uniform distribution.
pub fn transition_distribution(
    prev: Option<usize>,
    cur: usize,
    graph: &UserGraph,
    p: f64,
    q: f64,
    undirected: bool,
) -> Result<Vec<(usize, f64)>> {
    let neighbors = graph.neighbors(cur, undirected);
    if neighbors.is_empty() {
        return Err(Error::Graph(format!(
            "node {} has no neighbors to transition to",
            graph.key(cur)
        )));
    }
    let weights: Vec<f64> = match prev {
        None => vec![1.0; neighbors.len()],
        Some(prev) => neighbors
            .iter()
            .map(|&x| {
                let d = if x == prev {
                    0
                } else if graph.has_edge(prev, x, undirected) {
                    1
                } else {
                    2
                };
                bias_coefficient(d, p, q).expect("d is always in {0,1,2} here")
            })
            .collect(),
    };
    let total: f64 = weights.iter().sum();
    Ok(neighbors
        .iter()
        .zip(weights)
        .map(|(&x, w)| (x, w / total))
        .collect())
}

/// Samples the next hop from `cur`, or `None` at a sink. Walk starts pass
/// `prev = None`. First-order mode ignores `prev`.
pub fn sample_next(
    graph: &UserGraph,
    prev: Option<usize>,
    cur: usize,
    config: &WalkConfig,
    rng: &mut impl Rng,
) -> Result<Option<usize>> {
    let neighbors = graph.neighbors(cur, config.undirected);
    if neighbors.is_empty() {
        return Ok(None);
    }
    let next = match (config.mode, prev) {
        (WalkMode::FirstOrder, _) | (WalkMode::SecondOrder, None) => {
            neighbors[rng.gen_range(0..neighbors.len())]
        }
        (WalkMode::SecondOrder, Some(prev)) => {
            let dist = transition_distribution(Some(prev), cur, graph, config.p, config.q, config.undirected)?;
            let probs: Vec<f64> = dist.iter().map(|&(_, w)| w).collect();
            let table = AliasTable::new(&probs)?;
            dist[table.sample(rng)].0
        }
    };
    Ok(Some(next))
}

/// Generates `walks_per_node` walks from every node, round-major then in node
/// order. Second-order transitions sample through alias tables memoized per
/// (prev, cur) pair.
pub fn generate_walks(graph: &UserGraph, config: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    config.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("graph has no nodes"));
    }
    let mut memo: HashMap<(usize, usize), AliasTable> = HashMap::new();
    let mut walks = Vec::with_capacity(n * config.walks_per_node);
    for round in 0..config.walks_per_node {
        for start in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(
                seeds::mix(config.seed, start as u64),
                round as u64,
            ));
            walks.push(single_walk(graph, config, start, &mut memo, &mut rng)?);
        }
    }
    Ok(walks)
}

fn single_walk(
    graph: &UserGraph,
    config: &WalkConfig,
    start: usize,
    memo: &mut HashMap<(usize, usize), AliasTable>,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let mut walk = Vec::with_capacity(config.walk_length);
    walk.push(start);
    while walk.len() < config.walk_length {
        let cur = *walk.last().unwrap();
        let neighbors = graph.neighbors(cur, config.undirected);
        if neighbors.is_empty() {
            break; // sink: diffusion ends here
        }
        let next = match (config.mode, walk.len()) {
            (WalkMode::FirstOrder, _) | (WalkMode::SecondOrder, 1) => {
                neighbors[rng.gen_range(0..neighbors.len())]
            }
            (WalkMode::SecondOrder, _) => {
                let prev = walk[walk.len() - 2];
                let table = match memo.entry((prev, cur)) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        let dist = transition_distribution(
                            Some(prev),
                            cur,
                            graph,
                            config.p,
                            config.q,
                            config.undirected,
                        )?;
                        let probs: Vec<f64> = dist.iter().map(|&(_, w)| w).collect();
                        e.insert(AliasTable::new(&probs)?)
                    }
                };
                neighbors[table.sample(rng)]
            }
        };
        walk.push(next);
    }
    Ok(walk)
}

/// Renders walks as one line per walk, space-separated node keys.
pub fn walks_to_text(walks: &[Vec<usize>], graph: &UserGraph) -> String {
    let mut out = String::new();
    for walk in walks {
        let line = walk
            .iter()
            .map(|&i| graph.key(i))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{line}").unwrap();
    }
    out
}
