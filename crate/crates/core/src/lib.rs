//! A three-stage fine-grained named entity recognition cascade.
//!
//! 1. [`boundary`] finds entity spans with an ensemble of linear-chain taggers.
//! 2. [`linker`] maps each span to knowledge-base ids with trie-constrained
//!    beam search, and [`retrieval`] picks the first usable record and
//!    gathers its description, relations and summary from [`kb`].
//! 3. [`classifier`] assigns a fine label from the marked sentence plus the
//!    retrieved knowledge.
//!
//! [`eval`] scores predictions with entity-level macro F1 and hosts the
//! direct fine-grained baseline tagger; [`pipeline`] wires everything
//! together, including the synthetic corpus generator.

pub mod boundary;
pub mod classifier;
pub mod corpus;
pub mod eval;
pub mod kb;
pub mod linker;
pub mod persist;
pub mod pipeline;
pub mod retrieval;
