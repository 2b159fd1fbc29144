//! Walker-Vose alias table for O(1) sampling from a discrete distribution.

use rand::Rng;

use crate::error::{Error, Result};

/// Alias table over a probability vector. Construction is O(n); each sample
/// costs one uniform index draw plus one uniform coin.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Builds the table. Probabilities must be non-negative and sum to 1
    /// within 1e-9.
    pub fn new(probs: &[f64]) -> Result<AliasTable> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("alias table over no outcomes"));
        }
        if let Some(bad) = probs.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "negative or non-finite probability: {bad}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }

        let n = probs.len();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0; n];
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64 / total).collect();
        let mut small: Vec<usize> = Vec::with_capacity(n);
        let mut large: Vec<usize> = Vec::with_capacity(n);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &i in large.iter().chain(small.iter()) {
            prob[i] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Probability cells (1.0 means the column never redirects).
    pub fn prob_cells(&self) -> &[f64] {
        &self.prob
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}
