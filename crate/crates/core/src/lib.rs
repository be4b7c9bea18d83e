//! Commonsense corpus synthesis from a ConceptNet-style knowledge graph.
//!
//! The pipeline loads and filters an assertion graph ([`kg_store`]),
//! samples biased random walks over it ([`walk`]), turns walks into
//! prompted triplet-chain examples ([`corpus`]), extracts one- and two-hop
//! triplets between concept sets ([`extract`]) and dialogue keywords
//! ([`keywords`], [`dialogue`]), and scores generated triplet text against
//! the graph ([`codec`], [`metrics`]).

pub mod chain;
pub mod codec;
pub mod concept;
pub mod corpus;
pub mod dialogue;
pub mod embedding;
pub mod extract;
pub mod error;
pub mod keywords;
pub mod kg_store;
pub mod manifest;
pub mod metrics;
pub mod relation;
pub mod walk;

pub use chain::{render_chains, Triplet, TripletChain, COMMONSENSE_TOKEN};
pub use concept::Concept;
pub use embedding::EmbeddingStore;
pub use error::{Error, Result};
pub use kg_store::{ConceptGraph, DirectionMode, HopDistance};
pub use relation::Relation;
pub use walk::WalkConfig;
