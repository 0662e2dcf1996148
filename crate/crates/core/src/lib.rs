//! Core of the annotation-to-knowledge-graph pipeline.
//!
//! Text corpora are ingested into a [`store::Store`], annotated with
//! lemma-level entities and relations against an administrator-defined
//! ontology, and folded into an immutable [`graph::PropertyGraph`]. The graph
//! is queried with a small Cypher subset ([`qengine`]), usually through
//! natural-language question templates ([`qtemplate`]).

pub mod annotate;
pub mod auth;
pub mod graph;
pub mod ingest;
pub mod qengine;
pub mod qtemplate;
pub mod store;
pub mod testkit;

pub use store::{Id, Store};

#[cfg(test)]
pub(crate) mod testutil;
