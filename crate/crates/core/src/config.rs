//! Run configuration with pinned defaults.
//!
//! Every threshold the pipeline consumes lives here so that a run is fully
//! described by one config value: ablation flags, search sizes, cost tables,
//! routing gates, and backend endpoints.

use serde::{Deserialize, Serialize};

use crate::graph::EdgeKind;
use crate::intent::RoutingMode;

/// Per-kind fallback traversal cost, applied when an edge is outside the
/// query's recall set (or carries no embedding, as `belongs_to` does).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostTable {
    pub belongs_to: f64,
    pub semantic: f64,
    pub temporal: f64,
    pub causal: f64,
    pub evolution: f64,
    pub involves_entity: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        Self {
            belongs_to: 0.02,
            semantic: 0.90,
            temporal: 0.90,
            causal: 0.90,
            evolution: 0.90,
            involves_entity: 0.90,
        }
    }
}

impl CostTable {
    pub fn get(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::BelongsTo => self.belongs_to,
            EdgeKind::Semantic => self.semantic,
            EdgeKind::Temporal => self.temporal,
            EdgeKind::Causal => self.causal,
            EdgeKind::Evolution => self.evolution,
            EdgeKind::InvolvesEntity => self.involves_entity,
        }
    }
}

/// Intent-conditioned discount factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscountTable {
    /// Temporal edge under temporal intent, causal edge under causal intent.
    pub matched: f64,
    /// Evolution edge under temporal intent.
    pub evolution_under_temporal: f64,
    /// Every other combination.
    pub unmatched: f64,
}

impl Default for DiscountTable {
    fn default() -> Self {
        Self {
            matched: 0.5,
            evolution_under_temporal: 0.7,
            unmatched: 1.0,
        }
    }
}

/// Full run configuration. `RunConfig::default()` reproduces the shipped
/// hyperparameter table exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Enable relation-bridge path templates (disable for backbone-only).
    pub enable_n1_bridges: bool,
    /// Enable intent-conditioned edge-cost discounts.
    pub enable_n2_costs: bool,
    /// Enable the LLM reranking stage.
    pub enable_n3_rerank: bool,
    pub intent_mode: RoutingMode,

    /// Candidate bundle size K.
    pub bundle_size: usize,
    /// Rerank survivor count M.
    pub rerank_size: usize,
    /// Vector-search depth per node layer.
    pub k_per_layer: usize,
    /// Per-hop path penalty.
    pub hop_penalty: f64,

    /// Prototype-tier commit threshold.
    pub theta_proto: f64,
    /// Prototype-tier top-2 margin (against the best other-label prototype).
    pub proto_margin: f64,
    /// LLM-tier per-intent commit threshold.
    pub llm_commit_threshold: f64,
    /// Below this on every intent, the LLM tier yields the general label.
    pub llm_floor: f64,

    pub cost_fallback: CostTable,
    pub discounts: DiscountTable,

    /// Optional answer-side token budget.
    pub context_budget: Option<usize>,
    /// Hard-drop trailing episodes when over budget (otherwise warn only).
    pub budget_hard_truncate: bool,
    /// Tokenizer identity used for every token count in a run.
    pub tokenizer: String,
    /// Build context from raw chunk text instead of episode summaries.
    pub raw_chunk_context: bool,

    pub embedding_dim: usize,
    pub entity_merge_threshold: f64,
    pub facet_merge_threshold: f64,
    /// Fresh chunks between causal consolidation passes.
    pub consolidation_interval: usize,
    /// Snippet truncation length (chars) in the rerank prompt.
    pub snippet_max_chars: usize,

    /// Ks reported for evidence recall.
    pub er_at_k: Vec<usize>,
    pub seed: u64,

    pub chat_endpoint: Option<String>,
    pub chat_model: Option<String>,
    pub embed_endpoint: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            enable_n1_bridges: true,
            enable_n2_costs: true,
            enable_n3_rerank: true,
            intent_mode: RoutingMode::Llm,
            bundle_size: 10,
            rerank_size: 5,
            k_per_layer: 30,
            hop_penalty: 0.05,
            theta_proto: 0.55,
            proto_margin: 0.10,
            llm_commit_threshold: 0.5,
            llm_floor: 0.3,
            cost_fallback: CostTable::default(),
            discounts: DiscountTable::default(),
            context_budget: None,
            budget_hard_truncate: false,
            tokenizer: "whitespace_punct_v1".into(),
            raw_chunk_context: false,
            embedding_dim: 384,
            entity_merge_threshold: 0.90,
            facet_merge_threshold: 0.85,
            consolidation_interval: 5,
            snippet_max_chars: 400,
            er_at_k: vec![1, 3, 5, 10],
            seed: 42,
            chat_endpoint: None,
            chat_model: None,
            embed_endpoint: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_pinned_table() {
        let c = RunConfig::default();
        assert_eq!(c.bundle_size, 10);
        assert_eq!(c.rerank_size, 5);
        assert_eq!(c.k_per_layer, 30);
        assert_eq!(c.hop_penalty, 0.05);
        assert_eq!(c.theta_proto, 0.55);
        assert_eq!(c.proto_margin, 0.10);
        assert_eq!(c.cost_fallback.belongs_to, 0.02);
        assert_eq!(c.cost_fallback.temporal, 0.90);
        assert_eq!(c.cost_fallback.causal, 0.90);
        assert_eq!(c.cost_fallback.evolution, 0.90);
        assert_eq!(c.cost_fallback.semantic, 0.90);
        assert_eq!(c.discounts.matched, 0.5);
        assert_eq!(c.discounts.evolution_under_temporal, 0.7);
        assert_eq!(c.discounts.unmatched, 1.0);
        assert_eq!(c.embedding_dim, 384);
        assert_eq!(c.entity_merge_threshold, 0.90);
        assert_eq!(c.facet_merge_threshold, 0.85);
        assert_eq!(c.consolidation_interval, 5);
        assert_eq!(c.snippet_max_chars, 400);
        assert_eq!(c.seed, 42);
    }
}
