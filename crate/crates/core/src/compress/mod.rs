//! Evidence compression: one LLM call scores the candidate bundle 0–10 on
//! content alone, and the top-M episodes survive into the answer context.
//!
//! The prompt shows numbered summary snippets only — no path costs, no
//! bundle metadata — so the semantic judgement stays independent of the
//! structural signal that produced the candidates. When the bundle already
//! fits (|bundle| <= M) the stage is skipped outright.

mod chat;

pub use chat::{prompt_key, ChatClient, ChatError, StubChatClient};

use serde::Serialize;

use crate::graph::{MemoryGraph, NodeId};
use crate::prompts;
use crate::retrieval::Bundle;
use crate::text::truncate_chars;

/// Outcome of the compression stage.
#[derive(Debug, Clone, Serialize)]
pub struct CompressionResult {
    /// Selected episode ids, ordered by descending rerank score.
    pub selected: Vec<NodeId>,
    /// Per-candidate scores by bundle index; empty when skipped or degraded.
    /// Unscored candidates carry -1.
    pub scores: Vec<f64>,
    /// True when the bundle already fit and no call was made.
    pub skipped: bool,
    pub llm_calls: u32,
    /// True when a transport or parse failure forced bundle-order fallback.
    pub degraded: bool,
}

/// Render the content-only rerank prompt: summaries truncated to
/// `max_chars` scalar values (after NFC), numbered by bundle index.
pub fn render_rerank_prompt(
    question: &str,
    bundle: &Bundle,
    graph: &MemoryGraph,
    max_chars: usize,
) -> String {
    let snippets: Vec<String> = bundle
        .entries
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let summary = graph
                .node(&entry.episode)
                .map(|n| n.text.as_str())
                .unwrap_or("");
            format!("[{i}] {}", truncate_chars(summary, max_chars))
        })
        .collect();
    prompts::render_rerank(question, &snippets.join("\n"))
}

/// Extract and parse the first top-level JSON array of
/// `{"index": .., "score": ..}` objects; tolerate surrounding prose.
/// Scores clamp to [0, 10]; out-of-range indices are ignored; missing
/// indices default to -1 so they never outrank a scored candidate.
pub fn parse_scores(reply: &str, n_candidates: usize) -> Result<Vec<f64>, ()> {
    #[derive(serde::Deserialize)]
    struct Entry {
        index: i64,
        score: f64,
    }

    for candidate in crate::jsonutil::array_candidates(reply) {
        if let Ok(entries) = serde_json::from_str::<Vec<Entry>>(candidate) {
            let mut scores = vec![-1.0f64; n_candidates];
            for e in entries {
                if e.index >= 0 && (e.index as usize) < n_candidates {
                    scores[e.index as usize] = e.score.clamp(0.0, 10.0);
                }
            }
            return Ok(scores);
        }
    }
    Err(())
}

/// Score-then-select compression over a retrieval bundle.
///
/// Skips (zero calls) when the bundle has at most `m` entries. Otherwise
/// issues one call and keeps the top-`m` by score, ties broken by lower
/// bundle score and then lower bundle index. Any failure degrades to the
/// first `m` in bundle order.
pub fn compress(
    question: &str,
    bundle: &Bundle,
    graph: &MemoryGraph,
    client: &dyn ChatClient,
    m: usize,
    snippet_max_chars: usize,
) -> CompressionResult {
    let n = bundle.entries.len();
    if n <= m {
        return CompressionResult {
            selected: bundle.entries.iter().map(|e| e.episode.clone()).collect(),
            scores: Vec::new(),
            skipped: true,
            llm_calls: 0,
            degraded: false,
        };
    }

    let prompt = render_rerank_prompt(question, bundle, graph, snippet_max_chars);
    let reply = client.complete(None, &prompt, 0.0);
    let scores = reply.ok().and_then(|r| parse_scores(&r, n).ok());

    match scores {
        Some(scores) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .expect("scores are finite")
                    .then(
                        bundle.entries[a]
                            .score
                            .partial_cmp(&bundle.entries[b].score)
                            .expect("bundle scores are finite"),
                    )
                    .then(a.cmp(&b))
            });
            let selected = order
                .into_iter()
                .take(m)
                .map(|i| bundle.entries[i].episode.clone())
                .collect();
            CompressionResult {
                selected,
                scores,
                skipped: false,
                llm_calls: 1,
                degraded: false,
            }
        }
        None => CompressionResult {
            selected: bundle
                .entries
                .iter()
                .take(m)
                .map(|e| e.episode.clone())
                .collect(),
            scores: Vec::new(),
            skipped: false,
            llm_calls: 1,
            degraded: true,
        },
    }
}
