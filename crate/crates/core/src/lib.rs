//! Building blocks for a two-branch fake-news detector over social-media
//! propagation data.
//!
//! The pipeline, end to end: raw posts are tokenized and encoded into a
//! left-zero-padded document/token matrix ([`text`]); propagation-tree files
//! are parsed into directed diffusion graphs ([`graph`]); biased or uniform
//! random walks over the user graph ([`walk`]) feed a shared skip-gram
//! negative-sampling trainer ([`sgns`]) that also trains the word vectors; a
//! small dense/recurrent network engine with manual backpropagation ([`nn`])
//! powers the two-branch ensemble model ([`model`]); and a stratified
//! cross-validation harness ([`eval`]) runs the classification, ablation, and
//! tuning protocols.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod seeds;
pub mod sgns;
pub mod synth;
pub mod text;
pub mod walk;

pub use error::{Error, Result};
