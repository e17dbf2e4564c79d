//! astra: retrieval- and syntax-tree-augmented code generation for C++
//! codebases.
//!
//! The pipeline takes a prompt from a text file, retrieves semantically
//! similar code snippets from a pre-built index, extracts structural facts
//! (classes, fields, method signatures, function line ranges) from the
//! target source, composes a four-section prompt, sends it to a model
//! endpoint, and applies the returned code under conflict-style markers for
//! review. Generated code is scored against reference implementations with
//! identifier-normalized cosine similarity.
//!
//! Modules:
//! - [`corpus`]: annotated snippet parsing and the persisted chunk index
//! - [`embedding`]: deterministic + remote embedding providers, cosine
//! - [`retrieval`]: top-k ranking and prompt context rendering
//! - [`structure`]: C++ structure extraction and identifier normalization
//! - [`prompt`]: intent classification and prompt assembly
//! - [`model`]: streaming model clients (local runtime, remote API, replay)
//! - [`edit`]: conflict-marker application and resolution
//! - [`eval`]: benchmark scoring and table rendering
//! - [`config`], [`pipeline`], [`cli`]: the end-to-end driver

pub mod cli;
pub mod config;
pub mod corpus;
pub mod edit;
pub mod embedding;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod prompt;
pub mod retrieval;
pub mod structure;
