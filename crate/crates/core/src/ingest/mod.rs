//! Ingestion: raw conversation chunks in, graph nodes and edges out.
//!
//! Each fresh chunk runs through dedup, schema-guided extraction (with a
//! fallback so a malformed chunk never aborts the run), node construction
//! with entity and facet merging, and synchronous edge building. Every
//! fifth fresh chunk (and once more at the end when work is pending) a
//! causal consolidation pass prompts over the five most recent episode
//! summaries and writes the surviving cause/effect pairs as causal edges.
//!
//! Ingestion is monotonic: nodes and edges are only ever added.

mod extract;

pub use extract::{
    EntitySpec, ExtractError, ExtractionResult, Extractor, FacetPointSpec, FacetSpec,
    FallbackExtractor, FileExtractor, LlmExtractor, TemporalSpec,
};

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compress::{ChatClient, ChatError};
use crate::config::RunConfig;
use crate::graph::{
    Checkpoint, ChunkRecord, Direction, EdgeId, EdgeKind, EdgeSpec, GraphError, LayerKind,
    MemoryGraph, Node, NodeId,
};
use crate::index::{embed_and_normalize, Embedder, Embedding, IndexError, StoreName};
use crate::prompts;
use crate::text::{normalize_name, normalize_ws};

pub(crate) use crate::jsonutil::first_json_object as extract_json_object;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unparseable session timestamp {0:?}")]
    Timestamp(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("chat backend: {0}")]
    Chat(#[from] ChatError),
    #[error("causal reply parse: {0}")]
    CausalParse(String),
}

/// One deduplicatable unit of raw conversation text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawChunk {
    pub conversation_id: String,
    pub header_timestamp: DateTime<Utc>,
    pub text: String,
    /// SHA-256 hex digest of `text`.
    pub content_hash: String,
}

impl RawChunk {
    pub fn new(conversation_id: String, header_timestamp: DateTime<Utc>, text: String) -> Self {
        let content_hash = hex::encode(Sha256::digest(text.as_bytes()));
        Self {
            conversation_id,
            header_timestamp,
            text,
            content_hash,
        }
    }

    pub fn hash_is_consistent(&self) -> bool {
        hex::encode(Sha256::digest(self.text.as_bytes())) == self.content_hash
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    Duplicate,
}

/// A chunk is a duplicate iff its content hash was already ingested.
pub fn dedup_check(graph: &MemoryGraph, chunk: &RawChunk) -> Freshness {
    if graph.has_hash(&chunk.content_hash) {
        Freshness::Duplicate
    } else {
        Freshness::Fresh
    }
}

/// A cause/effect tuple from the consolidation prompt.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CausalPair {
    pub cause_id: String,
    pub effect_id: String,
    #[serde(default)]
    pub description: String,
    pub confidence: f64,
}

/// Per-conversation ingestion summary.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub fresh: usize,
    pub duplicate: usize,
    pub failed: usize,
    pub fallback_extractions: usize,
    /// Consolidation pass attempts (including the final flush).
    pub causal_passes: usize,
    pub causal_failures: usize,
    pub causal_edges_accepted: usize,
    pub edges_added: BTreeMap<EdgeKind, usize>,
}

/// Conversation input schema: one chunk per session.
#[derive(Debug, Clone, Deserialize)]
pub struct ConversationFile {
    pub conversation_id: String,
    pub sessions: Vec<SessionFile>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SessionFile {
    pub timestamp: String,
    pub turns: Vec<TurnFile>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TurnFile {
    pub speaker: String,
    pub text: String,
    #[serde(default)]
    pub dia_id: Option<String>,
}

/// Parse an ISO-8601-ish instant; date-only values resolve to midnight UTC.
pub fn parse_iso_instant(s: &str) -> Option<DateTime<Utc>> {
    let t = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S") {
        return Some(Utc.from_utc_datetime(&naive));
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(t, "%Y-%m-%d %H:%M:%S") {
        return Some(Utc.from_utc_datetime(&naive));
    }
    if let Ok(date) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
        return Some(Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0)?));
    }
    None
}

/// Parse a session-header timestamp: ISO-8601 first, then the
/// `1:56 pm on 8 May, 2023` conversational style.
pub fn parse_header_timestamp(s: &str) -> Result<DateTime<Utc>, IngestError> {
    if let Some(dt) = parse_iso_instant(s) {
        return Ok(dt);
    }
    let pattern = Regex::new(
        r"(?i)^\s*(\d{1,2}):(\d{2})\s*([ap]m)\s+on\s+(\d{1,2})\s+([A-Za-z]+),?\s+(\d{4})\s*$",
    )
    .expect("static pattern");
    if let Some(caps) = pattern.captures(s) {
        let hour12: u32 = caps[1].parse().ok().filter(|h| (1..=12).contains(h)).ok_or_else(
            || IngestError::Timestamp(s.to_string()),
        )?;
        let minute: u32 = caps[2].parse().map_err(|_| IngestError::Timestamp(s.into()))?;
        let pm = caps[3].eq_ignore_ascii_case("pm");
        let day: u32 = caps[4].parse().map_err(|_| IngestError::Timestamp(s.into()))?;
        let month = month_number(&caps[5]).ok_or_else(|| IngestError::Timestamp(s.to_string()))?;
        let year: i32 = caps[6].parse().map_err(|_| IngestError::Timestamp(s.into()))?;
        let hour = match (hour12, pm) {
            (12, false) => 0,
            (12, true) => 12,
            (h, false) => h,
            (h, true) => h + 12,
        };
        return Utc
            .with_ymd_and_hms(year, month, day, hour, minute, 0)
            .single()
            .ok_or_else(|| IngestError::Timestamp(s.to_string()));
    }
    Err(IngestError::Timestamp(s.to_string()))
}

fn month_number(name: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december",
    ];
    let lower = name.to_lowercase();
    MONTHS
        .iter()
        .position(|m| *m == lower || (lower.len() >= 3 && m.starts_with(&lower)))
        .map(|i| i as u32 + 1)
}

/// Split a conversation into one chunk per session. Turn lines carry their
/// dialogue ids as `speaker (dia_id): text`, which the evaluation side uses
/// to resolve gold evidence back to episodes.
pub fn chunk_conversation(file: &ConversationFile) -> Result<Vec<RawChunk>, IngestError> {
    let mut chunks = Vec::with_capacity(file.sessions.len());
    for session in &file.sessions {
        let ts = parse_header_timestamp(&session.timestamp)?;
        let mut text = format!("[{}]\n", session.timestamp.trim());
        for turn in &session.turns {
            match &turn.dia_id {
                Some(d) => writeln!(text, "{} ({}): {}", turn.speaker, d, turn.text),
                None => writeln!(text, "{}: {}", turn.speaker, turn.text),
            }
            .expect("write to string");
        }
        chunks.push(RawChunk::new(
            file.conversation_id.clone(),
            ts,
            text.trim_end().to_string(),
        ));
    }
    chunks.sort_by_key(|c| c.header_timestamp);
    Ok(chunks)
}

/// Facet-point timestamps seen by the temporal/evolution passes within the
/// trailing consolidation window.
type WindowEntry = Vec<(NodeId, DateTime<Utc>)>;

/// The ingestion pipeline over one checkpoint.
pub struct IngestPipeline<'a> {
    pub checkpoint: &'a mut Checkpoint,
    embedder: &'a dyn Embedder,
    extractor: &'a dyn Extractor,
    chat: &'a dyn ChatClient,
    config: &'a RunConfig,
    fallback: FallbackExtractor,
    /// (conversation, normalized name) -> entity node.
    entity_index: HashMap<(String, String), NodeId>,
    window: VecDeque<WindowEntry>,
    report: IngestReport,
}

impl<'a> IngestPipeline<'a> {
    pub fn new(
        checkpoint: &'a mut Checkpoint,
        embedder: &'a dyn Embedder,
        extractor: &'a dyn Extractor,
        chat: &'a dyn ChatClient,
        config: &'a RunConfig,
    ) -> Self {
        let mut entity_index = HashMap::new();
        for node in checkpoint.graph.nodes() {
            if node.layer == LayerKind::Entity {
                entity_index.insert(
                    (node.conversation_id.clone(), normalize_name(&node.text)),
                    node.id.clone(),
                );
            }
        }
        Self {
            checkpoint,
            embedder,
            extractor,
            chat,
            config,
            fallback: FallbackExtractor,
            entity_index,
            window: VecDeque::new(),
            report: IngestReport::default(),
        }
    }

    fn embed(&self, text: &str) -> Result<Embedding, IngestError> {
        Ok(embed_and_normalize(self.embedder, text)?)
    }

    /// Run the extractor; on any failure fall back to summary+entities.
    /// Returns None only when both fail.
    fn extract_with_fallback(&mut self, chunk: &RawChunk) -> Option<ExtractionResult> {
        match self.extractor.extract(chunk) {
            Ok(result) => Some(result),
            Err(_) => {
                self.report.fallback_extractions += 1;
                self.fallback.extract(chunk).ok()
            }
        }
    }

    fn count_edge(&mut self, kind: EdgeKind) {
        *self.report.edges_added.entry(kind).or_insert(0) += 1;
    }

    /// Add a relation edge with an embedded description; duplicate edges
    /// are silently skipped.
    fn add_relation_edge(
        &mut self,
        kind: EdgeKind,
        src: &NodeId,
        dst: &NodeId,
        description: String,
        confidence: Option<f64>,
    ) -> Result<Option<EdgeId>, IngestError> {
        if self.checkpoint.graph.has_edge_between(kind, src, dst) {
            return Ok(None);
        }
        let store = if kind == EdgeKind::Semantic {
            StoreName::EdgeSemantic
        } else {
            StoreName::EdgeRelation
        };
        let emb = self.embed(&description)?;
        let next_id = self.checkpoint.graph.edge_count() as u64;
        let row = self
            .checkpoint
            .vectors
            .store_mut(store)
            .push(next_id.to_string(), emb)?;
        let id = self.checkpoint.graph.add_edge(EdgeSpec {
            kind,
            src: src.clone(),
            dst: dst.clone(),
            description: Some(description),
            embedding_ref: Some(row),
            confidence,
        })?;
        self.count_edge(kind);
        Ok(Some(id))
    }

    fn add_belongs_to(&mut self, src: &NodeId, dst: &NodeId) -> Result<(), IngestError> {
        if self
            .checkpoint
            .graph
            .has_edge_between(EdgeKind::BelongsTo, src, dst)
        {
            return Ok(());
        }
        self.checkpoint.graph.add_edge(EdgeSpec {
            kind: EdgeKind::BelongsTo,
            src: src.clone(),
            dst: dst.clone(),
            description: None,
            embedding_ref: None,
            confidence: None,
        })?;
        self.count_edge(EdgeKind::BelongsTo);
        Ok(())
    }

    /// Insert a node whose embedding goes to the layer store, reusing any
    /// existing node with the same derived id.
    fn add_embedded_node(
        &mut self,
        layer: LayerKind,
        id: NodeId,
        text: String,
        timestamp: Option<DateTime<Utc>>,
        entity_type: Option<String>,
        conversation_id: String,
    ) -> Result<NodeId, IngestError> {
        if self.checkpoint.graph.contains_node(&id) {
            return Ok(id);
        }
        let emb = self.embed(&text)?;
        let row = self
            .checkpoint
            .vectors
            .store_mut(StoreName::for_layer(layer))
            .push(id.0.clone(), emb)?;
        self.checkpoint.graph.add_node(Node {
            id: id.clone(),
            layer,
            text,
            embedding_ref: row,
            timestamp,
            entity_type,
            conversation_id,
        })?;
        Ok(id)
    }

    /// Merge an entity by exact normalized name, then by embedding cosine
    /// above the merge threshold, else create a fresh node.
    pub fn merge_entity(
        &mut self,
        conversation_id: &str,
        name: &str,
        entity_type: &str,
    ) -> Result<NodeId, IngestError> {
        let display = normalize_ws(name);
        let norm = normalize_name(name);
        let key = (conversation_id.to_string(), norm.clone());
        if let Some(existing) = self.entity_index.get(&key) {
            return Ok(existing.clone());
        }

        let emb = self.embed(&display)?;
        let store = self.checkpoint.vectors.store(StoreName::Entity);
        let mut best: Option<(f64, NodeId)> = None;
        for hit in store.top_k(&emb, store.len()) {
            let id = NodeId(hit.owner.clone());
            let Some(node) = self.checkpoint.graph.node(&id) else {
                continue;
            };
            if node.conversation_id != conversation_id {
                continue;
            }
            best = Some((hit.similarity, id));
            break; // hits are sorted; first same-conversation hit is argmax
        }
        if let Some((sim, id)) = best {
            if sim > self.config.entity_merge_threshold {
                self.entity_index.insert(key, id.clone());
                return Ok(id);
            }
        }

        let id = NodeId::derive(LayerKind::Entity, conversation_id, &norm, None);
        let id = self.add_embedded_node(
            LayerKind::Entity,
            id,
            display,
            None,
            Some(entity_type.to_string()),
            conversation_id.to_string(),
        )?;
        self.entity_index.insert(key, id.clone());
        Ok(id)
    }

    /// Merge a facet against same-episode facets only (cosine above the
    /// facet threshold), else create it and link it to the episode.
    pub fn merge_facet(
        &mut self,
        conversation_id: &str,
        episode: &NodeId,
        theme: &str,
    ) -> Result<NodeId, IngestError> {
        let emb = self.embed(theme)?;
        let siblings = self
            .checkpoint
            .graph
            .neighbors(episode, EdgeKind::BelongsTo, Direction::In)?
            .into_iter()
            .filter(|(_, n)| n.layer == LayerKind::Facet)
            .map(|(_, n)| (n.id.clone(), n.embedding_ref))
            .collect::<Vec<_>>();
        let store = self.checkpoint.vectors.store(StoreName::Facet);
        let mut best: Option<(f64, NodeId)> = None;
        for (id, row) in siblings {
            let Some(candidate) = store.row(row) else {
                continue;
            };
            let sim = emb.dot(candidate);
            let better = match &best {
                Some((s, _)) => sim > *s,
                None => true,
            };
            if better {
                best = Some((sim, id));
            }
        }
        if let Some((sim, id)) = best {
            if sim > self.config.facet_merge_threshold {
                return Ok(id);
            }
        }

        let scoped = format!("{}|{}", episode.0, theme);
        let id = NodeId::derive(LayerKind::Facet, conversation_id, &scoped, None);
        let id = self.add_embedded_node(
            LayerKind::Facet,
            id,
            theme.to_string(),
            None,
            None,
            conversation_id.to_string(),
        )?;
        self.add_belongs_to(&id, episode)?;
        Ok(id)
    }

    /// Resolve a facet point's timestamp: prefer a temporal_info entry whose
    /// time expression matches, else parse the raw expression directly.
    fn resolve_fp_timestamp(
        result: &ExtractionResult,
        fp: &FacetPointSpec,
    ) -> Option<DateTime<Utc>> {
        let expr = fp.timestamp_text.as_deref()?;
        let norm = normalize_name(expr);
        for info in &result.temporal_info {
            if normalize_name(&info.time_expression) == norm {
                if let Some(t) = info.normalized_time.as_deref().and_then(parse_iso_instant) {
                    return Some(t);
                }
            }
        }
        parse_iso_instant(expr)
    }

    /// Construct the per-chunk subgraph: episode, merged entities, facets,
    /// facet points, hierarchy edges, involves/temporal/evolution relations.
    pub fn build_chunk_subgraph(
        &mut self,
        chunk: &RawChunk,
        result: &ExtractionResult,
    ) -> Result<NodeId, IngestError> {
        let conv = chunk.conversation_id.clone();

        // Episode node and chain-adjacency temporal edges.
        let summary = normalize_ws(&result.episode_summary);
        let episode_id = NodeId::derive(
            LayerKind::Episode,
            &conv,
            &summary,
            Some(chunk.header_timestamp),
        );
        let episode_id = self.add_embedded_node(
            LayerKind::Episode,
            episode_id,
            result.episode_summary.trim().to_string(),
            Some(chunk.header_timestamp),
            None,
            conv.clone(),
        )?;
        let pos = self
            .checkpoint
            .graph
            .chain_index(&episode_id)
            .expect("episode just inserted");
        let prev = pos.checked_sub(1).map(|p| self.checkpoint.graph.episode_chain()[p].clone());
        let next = self.checkpoint.graph.episode_chain().get(pos + 1).cloned();
        for (src, dst) in [(prev, Some(episode_id.clone())), (Some(episode_id.clone()), next)] {
            if let (Some(src), Some(dst)) = (src, dst) {
                if src != dst {
                    let desc = {
                        let s = self.checkpoint.graph.node(&src).expect("chain node");
                        let d = self.checkpoint.graph.node(&dst).expect("chain node");
                        format!("{} before {}", s.text, d.text)
                    };
                    self.add_relation_edge(EdgeKind::Temporal, &src, &dst, desc, None)?;
                }
            }
        }

        // Entities, merged across chunks within the conversation.
        let mut chunk_entities: IndexMap<String, NodeId> = IndexMap::new();
        for spec in &result.entities {
            if spec.name.trim().is_empty() {
                continue;
            }
            let id = self.merge_entity(&conv, &spec.name, &spec.entity_type)?;
            chunk_entities.insert(normalize_name(&spec.name), id);
        }

        // Facets first (so facet points can attach), then facet points.
        let mut facet_ids: Vec<NodeId> = Vec::with_capacity(result.facets.len());
        for facet in &result.facets {
            facet_ids.push(self.merge_facet(&conv, &episode_id, &facet.theme)?);
        }

        let mut fp_ids: Vec<Option<NodeId>> = vec![None; result.facet_points.len()];
        let mut fp_stamps: Vec<Option<DateTime<Utc>>> = vec![None; result.facet_points.len()];
        let mut assigned: HashSet<usize> = HashSet::new();
        for facet in &result.facets {
            for &idx in &facet.facet_point_indices {
                assigned.insert(idx);
            }
        }
        let mut misc_facet: Option<NodeId> = None;
        for (i, fp) in result.facet_points.iter().enumerate() {
            if fp.content.trim().is_empty() {
                continue;
            }
            let stamp = Self::resolve_fp_timestamp(result, fp);
            let scoped = format!("{}|{}", episode_id.0, normalize_ws(&fp.content));
            let id = NodeId::derive(LayerKind::FacetPoint, &conv, &scoped, stamp);
            let id = self.add_embedded_node(
                LayerKind::FacetPoint,
                id,
                fp.content.trim().to_string(),
                stamp,
                None,
                conv.clone(),
            )?;
            // Hierarchy: every facet point reaches the episode through a
            // facet; points no facet claims go to a synthetic grouping.
            if assigned.contains(&i) {
                for (facet, fid) in result.facets.iter().zip(facet_ids.iter()) {
                    if facet.facet_point_indices.contains(&i) {
                        self.add_belongs_to(&id, fid)?;
                    }
                }
            } else {
                if misc_facet.is_none() {
                    misc_facet = Some(self.merge_facet(&conv, &episode_id, "general")?);
                }
                self.add_belongs_to(&id, misc_facet.as_ref().expect("just set"))?;
            }
            fp_ids[i] = Some(id);
            fp_stamps[i] = stamp;
        }

        // Entity hierarchy and involves shortcuts.
        for (i, fp) in result.facet_points.iter().enumerate() {
            let (Some(fp_id), Some(name)) = (&fp_ids[i], &fp.related_entity_name) else {
                continue;
            };
            let norm = normalize_name(name);
            let entity = chunk_entities
                .get(&norm)
                .cloned()
                .or_else(|| self.entity_index.get(&(conv.clone(), norm)).cloned());
            let Some(entity) = entity else {
                continue; // unresolvable references are tolerated
            };
            self.add_belongs_to(&entity, fp_id)?;
            let desc = {
                let e = self.checkpoint.graph.node(&entity).expect("entity exists");
                format!("{} involves {}", fp.content.trim(), e.text)
            };
            self.add_relation_edge(EdgeKind::InvolvesEntity, fp_id, &entity, desc, None)?;
        }

        // Temporal edges between strictly ordered facet points, bounded to
        // the current chunk plus the trailing consolidation window.
        let current_stamped: WindowEntry = fp_ids
            .iter()
            .zip(fp_stamps.iter())
            .filter_map(|(id, ts)| Some((id.clone()?, (*ts)?)))
            .collect();
        let window_fps: WindowEntry = self.window.iter().flatten().cloned().collect();
        for (i, (a_id, a_ts)) in current_stamped.iter().enumerate() {
            let older = window_fps.iter().chain(current_stamped.iter().skip(i + 1));
            for (b_id, b_ts) in older {
                if a_ts == b_ts || a_id == b_id {
                    continue;
                }
                let (src, dst) = if a_ts < b_ts { (a_id, b_id) } else { (b_id, a_id) };
                let desc = {
                    let s = self.checkpoint.graph.node(src).expect("fp exists");
                    let d = self.checkpoint.graph.node(dst).expect("fp exists");
                    format!("{} before {}", s.text, d.text)
                };
                self.add_relation_edge(EdgeKind::Temporal, src, dst, desc, None)?;
            }
        }

        // Evolution edges per shared entity: latest existing point to the
        // earliest new one, then a chain through the new points in
        // temporal order.
        let new_fp_set: HashSet<NodeId> = fp_ids.iter().flatten().cloned().collect();
        let mut by_entity: IndexMap<NodeId, Vec<NodeId>> = IndexMap::new();
        for (i, fp) in result.facet_points.iter().enumerate() {
            let (Some(fp_id), Some(name)) = (&fp_ids[i], &fp.related_entity_name) else {
                continue;
            };
            let norm = normalize_name(name);
            if let Some(entity) = chunk_entities
                .get(&norm)
                .cloned()
                .or_else(|| self.entity_index.get(&(conv.clone(), norm)).cloned())
            {
                by_entity.entry(entity).or_default().push(fp_id.clone());
            }
        }
        for (entity, new_points) in by_entity {
            let mut new_sorted: Vec<(DateTime<Utc>, usize, NodeId)> = new_points
                .iter()
                .map(|id| (self.effective_timestamp(id), self.insertion_index(id), id.clone()))
                .collect();
            new_sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

            let prior = self
                .checkpoint
                .graph
                .neighbors(&entity, EdgeKind::BelongsTo, Direction::Out)?
                .into_iter()
                .map(|(_, n)| n.id.clone())
                .filter(|id| !new_fp_set.contains(id))
                .collect::<Vec<_>>();
            let latest_prior = prior
                .into_iter()
                .map(|id| (self.effective_timestamp(&id), self.insertion_index(&id), id))
                .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

            if let (Some((_, _, prior_id)), Some((_, _, first_new))) =
                (latest_prior, new_sorted.first())
            {
                let desc = self.evolution_desc(&prior_id, first_new);
                self.add_relation_edge(
                    EdgeKind::Evolution,
                    &prior_id,
                    first_new,
                    desc,
                    None,
                )?;
            }
            for pair in new_sorted.windows(2) {
                let (src, dst) = (&pair[0].2, &pair[1].2);
                if src == dst {
                    continue;
                }
                let desc = self.evolution_desc(src, dst);
                self.add_relation_edge(EdgeKind::Evolution, src, dst, desc, None)?;
            }
        }

        // Slide the temporal window.
        self.window.push_back(current_stamped);
        while self.window.len() > self.config.consolidation_interval {
            self.window.pop_front();
        }

        Ok(episode_id)
    }

    fn evolution_desc(&self, src: &NodeId, dst: &NodeId) -> String {
        let s = self.checkpoint.graph.node(src).expect("node exists");
        let d = self.checkpoint.graph.node(dst).expect("node exists");
        format!("{} evolves into {}", s.text, d.text)
    }

    /// A facet point's own timestamp, else its episode's.
    fn effective_timestamp(&self, id: &NodeId) -> DateTime<Utc> {
        let graph = &self.checkpoint.graph;
        let node = graph.node(id).expect("node exists");
        if let Some(ts) = node.timestamp {
            return ts;
        }
        graph
            .episode_of(id)
            .ok()
            .and_then(|ep| graph.node(&ep).and_then(|n| n.timestamp))
            .unwrap_or(DateTime::<Utc>::MIN_UTC)
    }

    fn insertion_index(&self, id: &NodeId) -> usize {
        self.checkpoint
            .graph
            .nodes()
            .position(|n| &n.id == id)
            .unwrap_or(usize::MAX)
    }

    /// One consolidation pass over the most recent episodes. Failures leave
    /// the graph untouched and are retried at the next trigger.
    pub fn consolidate_causal(&mut self) -> Result<Vec<CausalPair>, IngestError> {
        let window = self.config.consolidation_interval;
        let chain = self.checkpoint.graph.episode_chain();
        if chain.is_empty() {
            return Ok(Vec::new());
        }
        let tail = &chain[chain.len().saturating_sub(window)..];
        let events = tail
            .iter()
            .map(|id| {
                let node = self.checkpoint.graph.node(id).expect("chain node");
                format!("- id: {}\n  summary: {}", node.id, node.text)
            })
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = prompts::render_causal(&events);
        let reply = self.chat.complete(None, &prompt, 0.0)?;

        #[derive(Deserialize)]
        struct CausalReply {
            #[serde(default)]
            causal_pairs: Vec<CausalPair>,
        }
        let body = extract_json_object(&reply)
            .ok_or_else(|| IngestError::CausalParse("no JSON object in reply".into()))?;
        let parsed: CausalReply = serde_json::from_str(body)
            .map_err(|e| IngestError::CausalParse(e.to_string()))?;

        let mut accepted = Vec::new();
        for pair in parsed.causal_pairs {
            if !(0.0..=1.0).contains(&pair.confidence) || pair.confidence < 0.7 {
                continue;
            }
            let cause = NodeId(pair.cause_id.clone());
            let effect = NodeId(pair.effect_id.clone());
            if !self.checkpoint.graph.contains_node(&cause)
                || !self.checkpoint.graph.contains_node(&effect)
                || cause == effect
            {
                continue;
            }
            if self
                .checkpoint
                .graph
                .has_edge_between(EdgeKind::Causal, &cause, &effect)
            {
                continue;
            }
            let desc = if pair.description.trim().is_empty() {
                format!("{} causes {}", cause, effect)
            } else {
                pair.description.clone()
            };
            self.add_relation_edge(
                EdgeKind::Causal,
                &cause,
                &effect,
                desc,
                Some(pair.confidence),
            )?;
            accepted.push(pair);
        }
        self.report.causal_edges_accepted += accepted.len();
        Ok(accepted)
    }

    /// Ingest one conversation's chunks (pre-sorted by header timestamp).
    /// Never aborts on a single bad chunk; failures are itemized in the
    /// report.
    pub fn ingest_conversation(&mut self, chunks: &[RawChunk]) -> IngestReport {
        self.report = IngestReport::default();
        self.window.clear();
        let mut since_pass = 0usize;
        let mut pending = false;

        for chunk in chunks {
            if dedup_check(&self.checkpoint.graph, chunk) == Freshness::Duplicate {
                self.report.duplicate += 1;
                continue;
            }
            let Some(result) = self.extract_with_fallback(chunk) else {
                self.report.failed += 1;
                continue;
            };
            if let Err(e) = self.build_chunk_subgraph(chunk, &result) {
                // A build error on one chunk must not poison the run.
                debug_assert!(false, "chunk build failed: {e}");
                self.report.failed += 1;
                continue;
            }
            self.checkpoint.graph.record_hash(chunk.content_hash.clone());
            self.checkpoint.chunks.insert(
                chunk.content_hash.clone(),
                ChunkRecord {
                    conversation_id: chunk.conversation_id.clone(),
                    timestamp: chunk.header_timestamp.to_rfc3339(),
                    text: chunk.text.clone(),
                },
            );
            self.report.fresh += 1;
            since_pass += 1;

            if since_pass == self.config.consolidation_interval {
                since_pass = 0;
                pending = true;
                self.report.causal_passes += 1;
                match self.consolidate_causal() {
                    Ok(_) => pending = false,
                    Err(_) => self.report.causal_failures += 1,
                }
            }
        }

        if since_pass > 0 || pending {
            self.report.causal_passes += 1;
            if self.consolidate_causal().is_err() {
                self.report.causal_failures += 1;
            }
        }

        std::mem::take(&mut self.report)
    }
}
