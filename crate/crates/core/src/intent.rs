//! Adaptive intent routing: a keyword → prototype → LLM cascade.
//!
//! The two cheap tiers cost zero LLM calls. Keyword gating matches
//! high-precision trigger patterns on word boundaries; the prototype tier
//! compares the query embedding against a bank of labelled prototype
//! sentences and commits only with both a confidence and an inter-label
//! margin. Everything else falls through to one classifier call.
//!
//! A multi_hop label always suppresses entity_centric: inference-heavy
//! queries otherwise pick up spurious entity labels.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compress::{ChatClient, ChatError};
use crate::index::{embed_and_normalize, Embedder, Embedding};
use crate::prompts;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum IntentLabel {
    Temporal,
    Causal,
    MultiHop,
    EntityCentric,
    General,
}

impl IntentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            IntentLabel::Temporal => "temporal",
            IntentLabel::Causal => "causal",
            IntentLabel::MultiHop => "multi_hop",
            IntentLabel::EntityCentric => "entity_centric",
            IntentLabel::General => "general",
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which cascade tier produced the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingTier {
    KeywordGated,
    Prototype,
    Llm,
    None,
}

/// Routing configuration: fully off, single LLM call, or the full cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    Off,
    Llm,
    Hybrid,
}

/// Raw per-intent scores from the LLM tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IntentScores {
    #[serde(default)]
    pub temporal: f64,
    #[serde(default)]
    pub causal: f64,
    #[serde(default)]
    pub multi_hop: f64,
    #[serde(default)]
    pub entity_centric: f64,
}

impl IntentScores {
    fn clamped(mut self) -> Self {
        for v in [
            &mut self.temporal,
            &mut self.causal,
            &mut self.multi_hop,
            &mut self.entity_centric,
        ] {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    fn max(&self) -> f64 {
        self.temporal
            .max(self.causal)
            .max(self.multi_hop)
            .max(self.entity_centric)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutingResult {
    pub labels: BTreeSet<IntentLabel>,
    pub tier: RoutingTier,
    pub llm_calls: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_scores: Option<IntentScores>,
    /// Set when the LLM tier failed and the general default was used.
    pub degraded: bool,
}

impl RoutingResult {
    fn general(tier: RoutingTier, llm_calls: u32, degraded: bool) -> Self {
        Self {
            labels: BTreeSet::from([IntentLabel::General]),
            tier,
            llm_calls,
            raw_scores: None,
            degraded,
        }
    }
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("bank file io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bank file parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad keyword pattern {pattern:?}: {source}")]
    Pattern {
        pattern: String,
        source: regex::Error,
    },
    #[error("prototype embedding failed: {0}")]
    Embedding(#[from] crate::index::IndexError),
}

#[derive(Debug, Deserialize)]
struct BankFile {
    #[serde(default)]
    keywords: std::collections::BTreeMap<IntentLabel, Vec<String>>,
    #[serde(default)]
    prototypes: Vec<PrototypeSpec>,
}

#[derive(Debug, Deserialize)]
struct PrototypeSpec {
    label: IntentLabel,
    text: String,
}

/// Compiled keyword triggers per label.
pub struct KeywordBank {
    patterns: Vec<(IntentLabel, Regex, String)>,
}

impl KeywordBank {
    fn from_specs(
        specs: &std::collections::BTreeMap<IntentLabel, Vec<String>>,
    ) -> Result<Self, BankError> {
        let mut patterns = Vec::new();
        for (&label, list) in specs {
            for raw in list {
                // Entries are regex fragments anchored on word boundaries.
                let wrapped = format!(r"(?i)\b(?:{raw})\b");
                let regex = Regex::new(&wrapped).map_err(|source| BankError::Pattern {
                    pattern: raw.clone(),
                    source,
                })?;
                patterns.push((label, regex, raw.clone()));
            }
        }
        Ok(Self { patterns })
    }

    pub fn pattern_count(&self, label: IntentLabel) -> usize {
        self.patterns.iter().filter(|(l, _, _)| *l == label).count()
    }
}

/// One labelled prototype sentence with its embedding.
pub struct Prototype {
    pub label: IntentLabel,
    pub text: String,
    pub embedding: Embedding,
}

pub struct PrototypeBank {
    pub prototypes: Vec<Prototype>,
    pub theta: f64,
    pub margin: f64,
}

impl PrototypeBank {
    pub fn count(&self, label: IntentLabel) -> usize {
        self.prototypes.iter().filter(|p| p.label == label).count()
    }
}

/// Remove entity_centric whenever multi_hop is present.
pub fn resolve_labels(mut labels: BTreeSet<IntentLabel>) -> BTreeSet<IntentLabel> {
    if labels.contains(&IntentLabel::MultiHop) {
        labels.remove(&IntentLabel::EntityCentric);
    }
    labels
}

/// First cascade tier: union of labels whose any pattern matches on a word
/// boundary. Absent when nothing matches.
pub fn keyword_gate(query: &str, bank: &KeywordBank) -> Option<BTreeSet<IntentLabel>> {
    let mut labels = BTreeSet::new();
    for (label, regex, _) in &bank.patterns {
        if regex.is_match(query) {
            labels.insert(*label);
        }
    }
    (!labels.is_empty()).then_some(labels)
}

/// Second cascade tier: commit the top-1 prototype's label iff its cosine
/// clears `theta` and beats the best prototype of any *other* label by more
/// than `margin`. Strict inequalities on both gates.
pub fn prototype_match(
    query: &Embedding,
    bank: &PrototypeBank,
) -> Option<BTreeSet<IntentLabel>> {
    let mut best: Option<(f64, IntentLabel)> = None;
    for proto in &bank.prototypes {
        let sim = query.dot(&proto.embedding);
        let better = match best {
            Some((s, _)) => sim > s,
            None => true,
        };
        if better {
            best = Some((sim, proto.label));
        }
    }
    let (top1, label) = best?;
    if !(top1 > bank.theta) {
        return None;
    }
    let top2_other = bank
        .prototypes
        .iter()
        .filter(|p| p.label != label)
        .map(|p| query.dot(&p.embedding))
        .fold(f64::NEG_INFINITY, f64::max);
    if top2_other.is_finite() && !(top1 - top2_other > bank.margin) {
        return None;
    }
    Some(BTreeSet::from([label]))
}

/// Third cascade tier: one classifier call scoring each intent in [0, 1].
/// Labels are the intents at or above `commit`; everything below `floor`
/// across the board (or any failure) yields the general default.
pub fn llm_classify(
    query: &str,
    client: &dyn ChatClient,
    commit: f64,
    floor: f64,
) -> RoutingResult {
    let user = prompts::render_intent_user(query);
    let reply = match client.complete(Some(prompts::INTENT_SYSTEM), &user, 0.0) {
        Ok(r) => r,
        Err(ChatError::Transport(_)) | Err(ChatError::Unscripted(_)) => {
            return RoutingResult::general(RoutingTier::Llm, 1, true);
        }
    };
    let parsed = crate::jsonutil::first_json_object(&reply)
        .and_then(|obj| serde_json::from_str::<IntentScores>(obj).ok());
    let Some(scores) = parsed.map(IntentScores::clamped) else {
        return RoutingResult::general(RoutingTier::Llm, 1, false);
    };
    if scores.max() < floor {
        return RoutingResult {
            labels: BTreeSet::from([IntentLabel::General]),
            tier: RoutingTier::Llm,
            llm_calls: 1,
            raw_scores: Some(scores),
            degraded: false,
        };
    }
    let mut labels = BTreeSet::new();
    if scores.temporal >= commit {
        labels.insert(IntentLabel::Temporal);
    }
    if scores.causal >= commit {
        labels.insert(IntentLabel::Causal);
    }
    if scores.multi_hop >= commit {
        labels.insert(IntentLabel::MultiHop);
    }
    if scores.entity_centric >= commit {
        labels.insert(IntentLabel::EntityCentric);
    }
    labels = resolve_labels(labels);
    if labels.is_empty() {
        labels.insert(IntentLabel::General);
    }
    RoutingResult {
        labels,
        tier: RoutingTier::Llm,
        llm_calls: 1,
        raw_scores: Some(scores),
        degraded: false,
    }
}

/// The assembled router: banks plus gate thresholds.
pub struct Router {
    pub keywords: KeywordBank,
    pub prototypes: PrototypeBank,
    pub llm_commit_threshold: f64,
    pub llm_floor: f64,
}

impl Router {
    /// Build from bank JSON, embedding the prototypes with `embedder`.
    pub fn from_bank_json(
        body: &str,
        embedder: &dyn Embedder,
        theta: f64,
        margin: f64,
        llm_commit_threshold: f64,
        llm_floor: f64,
    ) -> Result<Self, BankError> {
        let file: BankFile = serde_json::from_str(body)?;
        let keywords = KeywordBank::from_specs(&file.keywords)?;
        let mut prototypes = Vec::with_capacity(file.prototypes.len());
        for spec in file.prototypes {
            let embedding = embed_and_normalize(embedder, &spec.text)?;
            prototypes.push(Prototype {
                label: spec.label,
                text: spec.text,
                embedding,
            });
        }
        Ok(Self {
            keywords,
            prototypes: PrototypeBank {
                prototypes,
                theta,
                margin,
            },
            llm_commit_threshold,
            llm_floor,
        })
    }

    /// Build with the bundled default banks.
    pub fn with_default_banks(
        embedder: &dyn Embedder,
        theta: f64,
        margin: f64,
        llm_commit_threshold: f64,
        llm_floor: f64,
    ) -> Result<Self, BankError> {
        Self::from_bank_json(
            prompts::DEFAULT_BANKS,
            embedder,
            theta,
            margin,
            llm_commit_threshold,
            llm_floor,
        )
    }

    pub fn from_bank_file(
        path: &Path,
        embedder: &dyn Embedder,
        theta: f64,
        margin: f64,
        llm_commit_threshold: f64,
        llm_floor: f64,
    ) -> Result<Self, BankError> {
        let body = std::fs::read_to_string(path)?;
        Self::from_bank_json(&body, embedder, theta, margin, llm_commit_threshold, llm_floor)
    }

    /// Route one query. The embedder is only consulted when the prototype
    /// tier is reached; the chat client only on the LLM tier.
    pub fn route(
        &self,
        query: &str,
        mode: RoutingMode,
        embedder: &dyn Embedder,
        client: &dyn ChatClient,
    ) -> RoutingResult {
        match mode {
            RoutingMode::Off => RoutingResult::general(RoutingTier::None, 0, false),
            RoutingMode::Llm => {
                llm_classify(query, client, self.llm_commit_threshold, self.llm_floor)
            }
            RoutingMode::Hybrid => {
                if let Some(labels) = keyword_gate(query, &self.keywords) {
                    let labels = resolve_labels(labels);
                    if labels.is_empty() {
                        return RoutingResult::general(RoutingTier::None, 0, false);
                    }
                    return RoutingResult {
                        labels,
                        tier: RoutingTier::KeywordGated,
                        llm_calls: 0,
                        raw_scores: None,
                        degraded: false,
                    };
                }
                if let Ok(query_emb) = embed_and_normalize(embedder, query) {
                    if let Some(labels) = prototype_match(&query_emb, &self.prototypes) {
                        let labels = resolve_labels(labels);
                        if labels.is_empty() {
                            return RoutingResult::general(RoutingTier::None, 0, false);
                        }
                        return RoutingResult {
                            labels,
                            tier: RoutingTier::Prototype,
                            llm_calls: 0,
                            raw_scores: None,
                            degraded: false,
                        };
                    }
                }
                llm_classify(query, client, self.llm_commit_threshold, self.llm_floor)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::StubChatClient;
    use crate::index::HashEmbedder;

    fn router(embedder: &dyn Embedder) -> Router {
        Router::with_default_banks(embedder, 0.55, 0.10, 0.5, 0.3).unwrap()
    }

    #[test]
    fn default_bank_counts() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        assert_eq!(r.keywords.pattern_count(IntentLabel::Temporal), 18);
        assert_eq!(r.keywords.pattern_count(IntentLabel::Causal), 14);
        assert_eq!(r.prototypes.count(IntentLabel::Temporal), 10);
        assert_eq!(r.prototypes.count(IntentLabel::Causal), 10);
        assert_eq!(r.prototypes.count(IntentLabel::MultiHop), 14);
        assert_eq!(r.prototypes.count(IntentLabel::EntityCentric), 12);
        assert_eq!(r.prototypes.prototypes.len(), 46);
    }

    #[test]
    fn keyword_gate_examples() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        let labels = keyword_gate("When did Melanie start violin?", &r.keywords).unwrap();
        assert_eq!(labels, BTreeSet::from([IntentLabel::Temporal]));
        let labels = keyword_gate("Why did Melanie switch to violin?", &r.keywords).unwrap();
        assert_eq!(labels, BTreeSet::from([IntentLabel::Causal]));
        assert!(keyword_gate("What instruments does Melanie play?", &r.keywords).is_none());
    }

    #[test]
    fn keyword_gate_word_boundaries() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        // "whenever" must not trigger the "when" pattern.
        assert!(keyword_gate("Whenever convenient works", &r.keywords).is_none());
    }

    #[test]
    fn keyword_gate_multi_label() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        let labels =
            keyword_gate("When and why did she move?", &r.keywords).unwrap();
        assert_eq!(
            labels,
            BTreeSet::from([IntentLabel::Temporal, IntentLabel::Causal])
        );
    }

    fn proto_bank(entries: &[(IntentLabel, Vec<f64>)], theta: f64, margin: f64) -> PrototypeBank {
        PrototypeBank {
            prototypes: entries
                .iter()
                .map(|(label, v)| Prototype {
                    label: *label,
                    text: String::new(),
                    embedding: Embedding(v.clone()),
                })
                .collect(),
            theta,
            margin,
        }
    }

    #[test]
    fn prototype_identical_text_commits() {
        let embedder = HashEmbedder::new(64, 3);
        let r = router(&embedder);
        let q = embed_and_normalize(&embedder, "When did that happen?").unwrap();
        let labels = prototype_match(&q, &r.prototypes).expect("exact prototype must commit");
        assert_eq!(labels, BTreeSet::from([IntentLabel::Temporal]));
    }

    #[test]
    fn prototype_below_theta_abstains() {
        // Controlled dot products via orthogonal axes.
        let bank = proto_bank(
            &[
                (IntentLabel::Temporal, vec![1.0, 0.0, 0.0]),
                (IntentLabel::Causal, vec![0.0, 1.0, 0.0]),
            ],
            0.55,
            0.10,
        );
        let q = Embedding(vec![0.50, 0.0, 0.0]);
        assert!(prototype_match(&q, &bank).is_none());
    }

    #[test]
    fn prototype_margin_too_small_abstains() {
        let bank = proto_bank(
            &[
                (IntentLabel::Temporal, vec![1.0, 0.0, 0.0]),
                (IntentLabel::Causal, vec![0.0, 1.0, 0.0]),
            ],
            0.55,
            0.10,
        );
        // top1 = 0.60 temporal, top2 = 0.55 causal: margin 0.05 <= 0.10.
        let q = Embedding(vec![0.60, 0.55, 0.0]);
        assert!(prototype_match(&q, &bank).is_none());
    }

    #[test]
    fn prototype_same_label_runner_up_does_not_block() {
        let bank = proto_bank(
            &[
                (IntentLabel::Temporal, vec![1.0, 0.0, 0.0]),
                (IntentLabel::Temporal, vec![0.8, 0.6, 0.0]),
                (IntentLabel::Causal, vec![0.0, 0.0, 1.0]),
            ],
            0.55,
            0.10,
        );
        // Both temporal prototypes score high; the causal one is far away.
        let q = Embedding(vec![0.9, 0.3, 0.05]);
        let labels = prototype_match(&q, &bank).expect("near-duplicate must not self-block");
        assert_eq!(labels, BTreeSet::from([IntentLabel::Temporal]));
    }

    #[test]
    fn prototype_empty_bank_abstains() {
        let bank = proto_bank(&[], 0.55, 0.10);
        assert!(prototype_match(&Embedding(vec![1.0]), &bank).is_none());
    }

    fn scripted_intent(reply: &str, query: &str) -> StubChatClient {
        let user = prompts::render_intent_user(query);
        let key = crate::compress::prompt_key(Some(prompts::INTENT_SYSTEM), &user);
        StubChatClient::scripted([(key, reply.to_string())].into_iter().collect())
    }

    #[test]
    fn llm_single_high_score() {
        let client = scripted_intent(
            r#"{"temporal":0.9,"causal":0.0,"multi_hop":0.0,"entity_centric":0.0}"#,
            "q",
        );
        let result = llm_classify("q", &client, 0.5, 0.3);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::Temporal]));
        assert_eq!(result.llm_calls, 1);
        assert_eq!(result.tier, RoutingTier::Llm);
    }

    #[test]
    fn llm_all_zero_yields_general() {
        let client = scripted_intent(
            r#"{"temporal":0.0,"causal":0.0,"multi_hop":0.0,"entity_centric":0.0}"#,
            "Tell me more",
        );
        let result = llm_classify("Tell me more", &client, 0.5, 0.3);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::General]));
    }

    #[test]
    fn llm_multi_hop_suppresses_entity_centric() {
        let client = scripted_intent(
            r#"{"temporal":0.0,"causal":0.0,"multi_hop":0.9,"entity_centric":0.8}"#,
            "q",
        );
        let result = llm_classify("q", &client, 0.5, 0.3);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::MultiHop]));
    }

    #[test]
    fn llm_transport_failure_defaults_general() {
        let client = StubChatClient::failing();
        let result = llm_classify("q", &client, 0.5, 0.3);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::General]));
        assert!(result.degraded);
        assert_eq!(result.llm_calls, 1);
    }

    #[test]
    fn llm_parse_failure_defaults_general() {
        let client = scripted_intent("no json here", "q");
        let result = llm_classify("q", &client, 0.5, 0.3);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::General]));
        assert!(!result.degraded);
    }

    #[test]
    fn route_off_mode() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        let client = StubChatClient::failing();
        let result = r.route("anything", RoutingMode::Off, &embedder, &client);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::General]));
        assert_eq!(result.tier, RoutingTier::None);
        assert_eq!(result.llm_calls, 0);
        assert_eq!(client.calls(), 0);
    }

    #[test]
    fn route_hybrid_keyword_short_circuits() {
        let embedder = HashEmbedder::new(32, 3);
        let r = router(&embedder);
        let client = StubChatClient::failing();
        let result = r.route(
            "When did Melanie start violin?",
            RoutingMode::Hybrid,
            &embedder,
            &client,
        );
        assert_eq!(result.tier, RoutingTier::KeywordGated);
        assert_eq!(result.llm_calls, 0);
        assert_eq!(client.calls(), 0, "keyword tier must not touch the LLM");
    }

    #[test]
    fn route_hybrid_falls_through_to_llm() {
        let embedder = HashEmbedder::new(64, 3);
        let r = router(&embedder);
        let query = "What changed for Melanie around the spring?";
        let client = scripted_intent(
            r#"{"temporal":0.3,"causal":0.0,"multi_hop":0.6,"entity_centric":0.0}"#,
            query,
        );
        let result = r.route(query, RoutingMode::Hybrid, &embedder, &client);
        assert_eq!(result.tier, RoutingTier::Llm);
        assert_eq!(result.llm_calls, 1);
        assert_eq!(result.labels, BTreeSet::from([IntentLabel::MultiHop]));
    }

    #[test]
    fn route_is_deterministic() {
        let embedder = HashEmbedder::new(64, 3);
        let r = router(&embedder);
        let client = StubChatClient::rule_based();
        let a = r.route("what happened?", RoutingMode::Hybrid, &embedder, &client);
        let b = r.route("what happened?", RoutingMode::Hybrid, &embedder, &client);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.tier, b.tier);
    }
}
