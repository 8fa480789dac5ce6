//! Memoir: a typed conversational memory graph with min-cost retrieval.
//!
//! Memory is stored as a four-layer graph (Entity, FacetPoint, Facet,
//! Episode) connected by one hierarchical edge kind (`belongs_to`) and five
//! typed relation kinds. Query answering composes four stages:
//!
//! 1. **Intent routing** — a keyword → prototype → LLM cascade labels the
//!    query (temporal, causal, multi-hop, entity-centric, general).
//! 2. **Edge costing** — per-edge traversal costs are discounted when the
//!    edge kind matches the detected intent.
//! 3. **Bundle search** — typed path templates are enumerated from vector
//!    anchors; each reachable episode is scored by its cheapest path and the
//!    top-K form the candidate bundle.
//! 4. **Evidence compression** — one LLM call scores the bundle summaries
//!    0–10 and the top-M survive into the answer-side context.
//!
//! Everything outside the two optional LLM calls is deterministic vector
//! arithmetic and graph traversal, so the whole pipeline runs offline with
//! the bundled hash embedder and stub chat clients.

pub mod compress;
pub mod config;
pub mod graph;
pub mod index;
pub mod ingest;
pub mod intent;
mod jsonutil;
pub mod pipeline;
pub mod prompts;
pub mod retrieval;
pub mod stats;
mod text;

pub use compress::{compress, ChatClient, ChatError, CompressionResult, StubChatClient};
pub use config::RunConfig;
pub use graph::{Checkpoint, EdgeKind, LayerKind, MemoryGraph, NodeId};
pub use index::{Embedder, Embedding, FlatVectorStore, HashEmbedder, VectorSet};
pub use intent::{IntentLabel, Router, RoutingMode, RoutingResult, RoutingTier};
pub use pipeline::{answer_query, QueryRecord, QueryTrace, RunMetrics};
pub use retrieval::{retrieve, Bundle, EdgeCostModel};
