//! Schema-guided extraction over raw chunks.
//!
//! Three extractor variants share one output schema: an LLM-backed
//! extractor driven by the shipped prompt, a file-backed extractor that
//! replays pre-extracted records keyed by chunk hash (fully offline), and a
//! fallback that produces only a summary and a shallow entity list. The
//! fallback also backstops the other two whenever validation fails, so one
//! malformed chunk never aborts ingestion.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RawChunk;
use crate::compress::ChatClient;
use crate::prompts;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("extraction backend failed: {0}")]
    Backend(String),
    #[error("no pre-extracted record for chunk {0}")]
    MissingRecord(String),
    #[error("extraction output invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EntitySpec {
    pub name: String,
    pub entity_type: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FacetPointSpec {
    pub content: String,
    #[serde(default)]
    pub related_entity_name: Option<String>,
    #[serde(default)]
    pub timestamp_text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FacetSpec {
    pub theme: String,
    #[serde(default)]
    pub facet_point_indices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TemporalSpec {
    pub subject: String,
    pub time_expression: String,
    #[serde(default)]
    pub normalized_time: Option<String>,
    pub relation: String,
}

/// The five-field extraction schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct ExtractionResult {
    #[serde(default)]
    pub episode_summary: String,
    #[serde(default)]
    pub entities: Vec<EntitySpec>,
    #[serde(default)]
    pub facet_points: Vec<FacetPointSpec>,
    #[serde(default)]
    pub facets: Vec<FacetSpec>,
    #[serde(default)]
    pub temporal_info: Vec<TemporalSpec>,
}

impl ExtractionResult {
    /// Schema validation beyond shape: index ranges and timestamp syntax.
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.episode_summary.trim().is_empty() {
            return Err(ExtractError::Invalid("empty episode_summary".into()));
        }
        for facet in &self.facets {
            for &idx in &facet.facet_point_indices {
                if idx >= self.facet_points.len() {
                    return Err(ExtractError::Invalid(format!(
                        "facet {:?} references facet_point index {idx} of {}",
                        facet.theme,
                        self.facet_points.len()
                    )));
                }
            }
        }
        for info in &self.temporal_info {
            if let Some(t) = &info.normalized_time {
                if super::parse_iso_instant(t).is_none() {
                    return Err(ExtractError::Invalid(format!(
                        "normalized_time {t:?} is not ISO-8601"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A chunk-to-structure extraction backend.
pub trait Extractor: Send + Sync {
    fn identity(&self) -> String;
    fn extract(&self, chunk: &RawChunk) -> Result<ExtractionResult, ExtractError>;
}

/// Replays pre-extracted records keyed by chunk content hash.
pub struct FileExtractor {
    records: BTreeMap<String, ExtractionResult>,
}

impl FileExtractor {
    pub fn new(records: BTreeMap<String, ExtractionResult>) -> Self {
        Self { records }
    }

    pub fn from_file(path: &Path) -> Result<Self, ExtractError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| ExtractError::Backend(format!("read {}: {e}", path.display())))?;
        let records = serde_json::from_str(&body)
            .map_err(|e| ExtractError::Backend(format!("parse {}: {e}", path.display())))?;
        Ok(Self { records })
    }
}

impl Extractor for FileExtractor {
    fn identity(&self) -> String {
        "file-extractor".into()
    }

    fn extract(&self, chunk: &RawChunk) -> Result<ExtractionResult, ExtractError> {
        let result = self
            .records
            .get(&chunk.content_hash)
            .cloned()
            .ok_or_else(|| ExtractError::MissingRecord(chunk.content_hash.clone()))?;
        result.validate()?;
        Ok(result)
    }
}

/// One prompt call against a chat backend, validated against the schema.
pub struct LlmExtractor<'a> {
    client: &'a dyn ChatClient,
}

impl<'a> LlmExtractor<'a> {
    pub fn new(client: &'a dyn ChatClient) -> Self {
        Self { client }
    }
}

impl Extractor for LlmExtractor<'_> {
    fn identity(&self) -> String {
        format!("llm-extractor/{}", self.client.identity())
    }

    fn extract(&self, chunk: &RawChunk) -> Result<ExtractionResult, ExtractError> {
        let prompt = prompts::render_extract(&chunk.text);
        let reply = self
            .client
            .complete(None, &prompt, 0.0)
            .map_err(|e| ExtractError::Backend(e.to_string()))?;
        let body = crate::ingest::extract_json_object(&reply)
            .ok_or_else(|| ExtractError::Invalid("no JSON object in reply".into()))?;
        let result: ExtractionResult = serde_json::from_str(body)
            .map_err(|e| ExtractError::Invalid(format!("schema parse: {e}")))?;
        result.validate()?;
        Ok(result)
    }
}

/// Summary plus a shallow entity pass; no facets, no temporal info.
pub struct FallbackExtractor;

impl FallbackExtractor {
    /// Capitalized mid-sentence words, deduplicated in order of appearance.
    fn shallow_entities(text: &str) -> Vec<EntitySpec> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let mut prev_boundary = true;
        for raw in text.split_whitespace() {
            let word: String = raw
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect();
            let is_boundary_next = raw.ends_with(['.', '!', '?', ':']);
            let starts_upper = word
                .chars()
                .next()
                .map(|c| c.is_uppercase())
                .unwrap_or(false);
            if !prev_boundary && starts_upper && word.chars().count() >= 2 {
                let key = word.to_lowercase();
                if seen.insert(key) {
                    out.push(EntitySpec {
                        name: word,
                        entity_type: "other".into(),
                    });
                }
            }
            prev_boundary = is_boundary_next;
        }
        out
    }
}

impl Extractor for FallbackExtractor {
    fn identity(&self) -> String {
        "fallback-extractor".into()
    }

    fn extract(&self, chunk: &RawChunk) -> Result<ExtractionResult, ExtractError> {
        let summary = chunk.text.trim();
        if summary.is_empty() {
            return Err(ExtractError::Invalid("empty chunk".into()));
        }
        Ok(ExtractionResult {
            episode_summary: summary.to_string(),
            entities: Self::shallow_entities(&chunk.text),
            facet_points: Vec::new(),
            facets: Vec::new(),
            temporal_info: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{prompt_key, StubChatClient};
    use chrono::TimeZone;

    fn chunk(text: &str) -> RawChunk {
        RawChunk::new(
            "c1".into(),
            chrono::Utc.with_ymd_and_hms(2023, 5, 8, 13, 56, 0).unwrap(),
            text.into(),
        )
    }

    #[test]
    fn facet_index_out_of_range_invalid() {
        let result = ExtractionResult {
            episode_summary: "s".into(),
            facet_points: vec![
                FacetPointSpec {
                    content: "a".into(),
                    related_entity_name: None,
                    timestamp_text: None,
                };
                3
            ],
            facets: vec![FacetSpec {
                theme: "t".into(),
                facet_point_indices: vec![7],
            }],
            ..Default::default()
        };
        assert!(result.validate().is_err());
    }

    #[test]
    fn bad_normalized_time_invalid() {
        let result = ExtractionResult {
            episode_summary: "s".into(),
            temporal_info: vec![TemporalSpec {
                subject: "x".into(),
                time_expression: "yesterday".into(),
                normalized_time: Some("not-a-date".into()),
                relation: "at".into(),
            }],
            ..Default::default()
        };
        assert!(result.validate().is_err());
    }

    #[test]
    fn file_extractor_replays_verbatim() {
        let c = chunk("hello");
        let stored = ExtractionResult {
            episode_summary: "greeting".into(),
            ..Default::default()
        };
        let extractor = FileExtractor::new(
            [(c.content_hash.clone(), stored.clone())].into_iter().collect(),
        );
        assert_eq!(extractor.extract(&c).unwrap(), stored);
    }

    #[test]
    fn file_extractor_missing_record_errors() {
        let extractor = FileExtractor::new(BTreeMap::new());
        assert!(matches!(
            extractor.extract(&chunk("x")),
            Err(ExtractError::MissingRecord(_))
        ));
    }

    #[test]
    fn llm_extractor_parses_reply() {
        let c = chunk("Melanie went hiking.");
        let prompt = prompts::render_extract(&c.text);
        let reply = r#"{"episode_summary":"Melanie hiked.","entities":[{"name":"Melanie","entity_type":"person"}],"facet_points":[],"facets":[],"temporal_info":[]}"#;
        let client = StubChatClient::scripted(
            [(prompt_key(None, &prompt), reply.to_string())].into_iter().collect(),
        );
        let extractor = LlmExtractor::new(&client);
        let result = extractor.extract(&c).unwrap();
        assert_eq!(result.episode_summary, "Melanie hiked.");
        assert_eq!(result.entities.len(), 1);
    }

    #[test]
    fn llm_extractor_malformed_json_errors() {
        let c = chunk("text");
        let prompt = prompts::render_extract(&c.text);
        let client = StubChatClient::scripted(
            [(prompt_key(None, &prompt), "not json at all".to_string())]
                .into_iter()
                .collect(),
        );
        let extractor = LlmExtractor::new(&client);
        assert!(extractor.extract(&c).is_err());
    }

    #[test]
    fn fallback_summary_and_entities_only() {
        let c = chunk("Yesterday Melanie visited the Louvre with Caroline.");
        let result = FallbackExtractor.extract(&c).unwrap();
        assert_eq!(result.episode_summary, c.text.trim());
        assert!(result.facet_points.is_empty());
        assert!(result.facets.is_empty());
        assert!(result.temporal_info.is_empty());
        let names: Vec<&str> = result.entities.iter().map(|e| e.name.as_str()).collect();
        assert!(names.contains(&"Melanie"));
        assert!(names.contains(&"Louvre"));
        assert!(!names.contains(&"Yesterday"), "sentence starts excluded");
    }
}
