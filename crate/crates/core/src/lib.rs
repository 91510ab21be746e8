//! Event salience ranking.
//!
//! Documents are bags of event and entity mentions. Events are labeled salient
//! when their lemma appears in the document's abstract, and scoring models rank
//! the events of each document: a linear feature model, kernel-based
//! centrality estimation over embedding similarities, and a one-step
//! random-walk baseline. Models are trained with a pairwise hinge loss and
//! evaluated with per-document ranking metrics.

pub mod annotate;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod features;
pub mod intrusion;
pub mod kernels;
pub mod models;
pub mod numeric;
pub mod par;
pub mod rng;
pub mod synth;
pub mod training;

pub use corpus::{Corpus, Document, EntityMention, EventMention, Split};
