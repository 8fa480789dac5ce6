//! The typed memory graph: four node layers, six edge kinds, and the
//! chronological episode chain.
//!
//! The graph is append-only during ingestion. Node ids are derived from
//! content (layer, conversation, normalized text, timestamp) so that
//! re-ingesting identical data reproduces identical ids; edge ids are
//! sequential per graph.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, ChunkRecord, ChunkStore};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::normalize_ws;

/// The four node layers, ordered from finest anchor to returned unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Entity,
    FacetPoint,
    Facet,
    Episode,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [
        LayerKind::Entity,
        LayerKind::FacetPoint,
        LayerKind::Facet,
        LayerKind::Episode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Entity => "entity",
            LayerKind::FacetPoint => "facet_point",
            LayerKind::Facet => "facet",
            LayerKind::Episode => "episode",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge kinds: `BelongsTo` is the sole hierarchical kind, the rest are
/// cross-cutting relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    BelongsTo,
    Semantic,
    Temporal,
    Causal,
    Evolution,
    InvolvesEntity,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 6] = [
        EdgeKind::BelongsTo,
        EdgeKind::Semantic,
        EdgeKind::Temporal,
        EdgeKind::Causal,
        EdgeKind::Evolution,
        EdgeKind::InvolvesEntity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::BelongsTo => "belongs_to",
            EdgeKind::Semantic => "semantic",
            EdgeKind::Temporal => "temporal",
            EdgeKind::Causal => "causal",
            EdgeKind::Evolution => "evolution",
            EdgeKind::InvolvesEntity => "involves_entity",
        }
    }

    pub fn is_relation(self) -> bool {
        self != EdgeKind::BelongsTo
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stable, content-derived node identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    /// Derive the id from the node's identifying content. Equal content
    /// yields equal ids across runs and checkpoints.
    pub fn derive(
        layer: LayerKind,
        conversation_id: &str,
        text: &str,
        timestamp: Option<DateTime<Utc>>,
    ) -> NodeId {
        let mut hasher = Sha256::new();
        hasher.update(layer.as_str().as_bytes());
        hasher.update(b"|");
        hasher.update(conversation_id.as_bytes());
        hasher.update(b"|");
        hasher.update(normalize_ws(text).as_bytes());
        hasher.update(b"|");
        if let Some(ts) = timestamp {
            hasher.update(ts.to_rfc3339().as_bytes());
        }
        let digest = hasher.finalize();
        NodeId(hex::encode(&digest[..16]))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sequential per-graph edge identifier (insertion order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub layer: LayerKind,
    /// Summary for Episode, fact text for FacetPoint, theme for Facet,
    /// name for Entity.
    pub text: String,
    /// Row index into the layer's vector store.
    pub embedding_ref: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
    /// Present iff `layer == Entity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<String>,
    pub conversation_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub kind: EdgeKind,
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Row index into the matching edge vector store; present iff the kind
    /// is a relation kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_ref: Option<usize>,
    /// Causal edges only; always >= 0.7.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl Edge {
    /// The node on the far side of the edge from `node`.
    pub fn other(&self, node: &NodeId) -> &NodeId {
        if &self.src == node {
            &self.dst
        } else {
            &self.src
        }
    }
}

/// Everything needed to add an edge; the graph assigns the id.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub kind: EdgeKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub description: Option<String>,
    pub embedding_ref: Option<usize>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("episode node {0} has no timestamp")]
    EpisodeWithoutTimestamp(NodeId),
    #[error("entity_type must be present iff the node is an Entity (node {0})")]
    EntityTypeMismatch(NodeId),
    #[error("edge endpoint {0} does not exist")]
    DanglingEndpoint(NodeId),
    #[error("belongs_to edge violates layer order: {src} -> {dst}")]
    BelongsToLayerOrder { src: LayerKind, dst: LayerKind },
    #[error("causal edge confidence {0} outside [0.7, 1.0]")]
    CausalConfidence(f64),
    #[error("confidence is only valid on causal edges")]
    ConfidenceOnNonCausal,
    #[error("relation edge of kind {0} requires an embedding_ref")]
    MissingEdgeEmbedding(EdgeKind),
    #[error("belongs_to edges carry no embedding")]
    UnexpectedEdgeEmbedding,
    #[error("duplicate {kind} edge {src} -> {dst}")]
    DuplicateEdge {
        kind: EdgeKind,
        src: NodeId,
        dst: NodeId,
    },
    #[error("node {0} has no belongs_to path to an episode")]
    OrphanNode(NodeId),
    #[error("node {0} reaches more than one episode; enumerate per facet point instead")]
    AmbiguousEpisode(NodeId),
}

const BELONGS_TO_ORDER: [(LayerKind, LayerKind); 3] = [
    (LayerKind::Entity, LayerKind::FacetPoint),
    (LayerKind::FacetPoint, LayerKind::Facet),
    (LayerKind::Facet, LayerKind::Episode),
];

#[derive(Debug, Clone, Default)]
struct Adjacency {
    out: Vec<EdgeId>,
    inc: Vec<EdgeId>,
}

/// The multi-relational memory graph. Append-only: nodes and edges are never
/// removed once written.
#[derive(Debug, Clone, Default)]
pub struct MemoryGraph {
    nodes: IndexMap<NodeId, Node>,
    edges: Vec<Edge>,
    adjacency: HashMap<NodeId, Adjacency>,
    /// Episode ids, nondecreasing in timestamp (stable for equal stamps).
    episode_chain: Vec<NodeId>,
    /// SHA-256 digests of every ingested chunk.
    ingested_hashes: BTreeSet<String>,
    endpoint_index: HashSet<(EdgeKind, NodeId, NodeId)>,
}

impl MemoryGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    /// Insertion position of a node (stable across checkpoint reloads).
    pub fn node_position(&self, id: &NodeId) -> Option<usize> {
        self.nodes.get_index_of(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.0 as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    /// Episode ids in chronological order.
    pub fn episode_chain(&self) -> &[NodeId] {
        &self.episode_chain
    }

    /// Position of an episode in the chronological chain.
    pub fn chain_index(&self, id: &NodeId) -> Option<usize> {
        self.episode_chain.iter().position(|e| e == id)
    }

    pub fn has_hash(&self, hash: &str) -> bool {
        self.ingested_hashes.contains(hash)
    }

    pub fn record_hash(&mut self, hash: String) {
        self.ingested_hashes.insert(hash);
    }

    pub fn ingested_hashes(&self) -> &BTreeSet<String> {
        &self.ingested_hashes
    }

    pub fn has_edge_between(&self, kind: EdgeKind, src: &NodeId, dst: &NodeId) -> bool {
        self.endpoint_index
            .contains(&(kind, src.clone(), dst.clone()))
    }

    /// Insert a node. Episodes are also spliced into the chronological
    /// chain, after any existing episode with an equal or earlier stamp.
    pub fn add_node(&mut self, node: Node) -> Result<NodeId, GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        if node.layer == LayerKind::Episode && node.timestamp.is_none() {
            return Err(GraphError::EpisodeWithoutTimestamp(node.id));
        }
        if (node.layer == LayerKind::Entity) != node.entity_type.is_some() {
            return Err(GraphError::EntityTypeMismatch(node.id));
        }
        let id = node.id.clone();
        if node.layer == LayerKind::Episode {
            let ts = node.timestamp.expect("checked above");
            let pos = self
                .episode_chain
                .iter()
                .rposition(|eid| {
                    self.nodes[eid].timestamp.expect("episodes have timestamps") <= ts
                })
                .map(|p| p + 1)
                .unwrap_or(0);
            self.episode_chain.insert(pos, id.clone());
        }
        self.adjacency.entry(id.clone()).or_default();
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    pub fn add_edge(&mut self, spec: EdgeSpec) -> Result<EdgeId, GraphError> {
        let src_layer = self
            .nodes
            .get(&spec.src)
            .ok_or_else(|| GraphError::DanglingEndpoint(spec.src.clone()))?
            .layer;
        let dst_layer = self
            .nodes
            .get(&spec.dst)
            .ok_or_else(|| GraphError::DanglingEndpoint(spec.dst.clone()))?
            .layer;

        match spec.kind {
            EdgeKind::BelongsTo => {
                if !BELONGS_TO_ORDER.contains(&(src_layer, dst_layer)) {
                    return Err(GraphError::BelongsToLayerOrder {
                        src: src_layer,
                        dst: dst_layer,
                    });
                }
                if spec.embedding_ref.is_some() {
                    return Err(GraphError::UnexpectedEdgeEmbedding);
                }
            }
            kind => {
                if spec.embedding_ref.is_none() {
                    return Err(GraphError::MissingEdgeEmbedding(kind));
                }
            }
        }
        match (spec.kind, spec.confidence) {
            (EdgeKind::Causal, Some(c)) if (0.7..=1.0).contains(&c) => {}
            (EdgeKind::Causal, Some(c)) => return Err(GraphError::CausalConfidence(c)),
            (EdgeKind::Causal, None) => return Err(GraphError::CausalConfidence(0.0)),
            (_, None) => {}
            (_, Some(_)) => return Err(GraphError::ConfidenceOnNonCausal),
        }
        let key = (spec.kind, spec.src.clone(), spec.dst.clone());
        if self.endpoint_index.contains(&key) {
            return Err(GraphError::DuplicateEdge {
                kind: spec.kind,
                src: spec.src,
                dst: spec.dst,
            });
        }

        let id = EdgeId(self.edges.len() as u64);
        self.endpoint_index.insert(key);
        self.adjacency
            .get_mut(&spec.src)
            .expect("src exists")
            .out
            .push(id);
        self.adjacency
            .get_mut(&spec.dst)
            .expect("dst exists")
            .inc
            .push(id);
        self.edges.push(Edge {
            id,
            kind: spec.kind,
            src: spec.src,
            dst: spec.dst,
            description: spec.description,
            embedding_ref: spec.embedding_ref,
            confidence: spec.confidence,
        });
        Ok(id)
    }

    /// Edges of `kind` touching `node` in the given direction, ordered by
    /// edge insertion id, paired with the neighbor node.
    pub fn neighbors(
        &self,
        node: &NodeId,
        kind: EdgeKind,
        direction: Direction,
    ) -> Result<Vec<(&Edge, &Node)>, GraphError> {
        let adj = self
            .adjacency
            .get(node)
            .ok_or_else(|| GraphError::UnknownNode(node.clone()))?;
        let mut ids: Vec<EdgeId> = Vec::new();
        if direction != Direction::In {
            ids.extend(adj.out.iter().copied());
        }
        if direction != Direction::Out {
            ids.extend(adj.inc.iter().copied());
        }
        ids.sort_unstable();
        ids.dedup(); // self-loops would otherwise appear twice under Both
        let mut result = Vec::new();
        for id in ids {
            let edge = &self.edges[id.0 as usize];
            if edge.kind != kind {
                continue;
            }
            let neighbor = edge.other(node);
            result.push((edge, &self.nodes[neighbor]));
        }
        Ok(result)
    }

    /// All edge ids incident to `node`, either direction, any kind.
    pub fn incident_edges(&self, node: &NodeId) -> impl Iterator<Item = EdgeId> + '_ {
        self.adjacency
            .get(node)
            .into_iter()
            .flat_map(|adj| adj.out.iter().chain(adj.inc.iter()).copied())
    }

    /// The unique episode a node belongs to, following `belongs_to` edges
    /// upward. Identity for episodes; an error for nodes that reach zero or
    /// several episodes (entities typically span episodes).
    pub fn episode_of(&self, node: &NodeId) -> Result<NodeId, GraphError> {
        let start = self
            .nodes
            .get(node)
            .ok_or_else(|| GraphError::UnknownNode(node.clone()))?;
        if start.layer == LayerKind::Episode {
            return Ok(node.clone());
        }
        let mut found: BTreeSet<NodeId> = BTreeSet::new();
        let mut frontier = vec![node.clone()];
        while let Some(current) = frontier.pop() {
            for (_, neighbor) in self.neighbors(&current, EdgeKind::BelongsTo, Direction::Out)? {
                if neighbor.layer == LayerKind::Episode {
                    found.insert(neighbor.id.clone());
                } else {
                    frontier.push(neighbor.id.clone());
                }
            }
        }
        match found.len() {
            0 => Err(GraphError::OrphanNode(node.clone())),
            1 => Ok(found.into_iter().next().expect("len checked")),
            _ => Err(GraphError::AmbiguousEpisode(node.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(day: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 5, day, 10, 0, 0).unwrap()
    }

    fn episode(day: u32, text: &str) -> Node {
        let stamp = Some(ts(day));
        Node {
            id: NodeId::derive(LayerKind::Episode, "c1", text, stamp),
            layer: LayerKind::Episode,
            text: text.to_string(),
            embedding_ref: 0,
            timestamp: stamp,
            entity_type: None,
            conversation_id: "c1".into(),
        }
    }

    fn plain(layer: LayerKind, text: &str) -> Node {
        Node {
            id: NodeId::derive(layer, "c1", text, None),
            layer,
            text: text.to_string(),
            embedding_ref: 0,
            timestamp: None,
            entity_type: (layer == LayerKind::Entity).then(|| "person".to_string()),
            conversation_id: "c1".into(),
        }
    }

    fn belongs(src: &NodeId, dst: &NodeId) -> EdgeSpec {
        EdgeSpec {
            kind: EdgeKind::BelongsTo,
            src: src.clone(),
            dst: dst.clone(),
            description: None,
            embedding_ref: None,
            confidence: None,
        }
    }

    fn relation(kind: EdgeKind, src: &NodeId, dst: &NodeId) -> EdgeSpec {
        EdgeSpec {
            kind,
            src: src.clone(),
            dst: dst.clone(),
            description: None,
            embedding_ref: Some(0),
            confidence: (kind == EdgeKind::Causal).then_some(0.8),
        }
    }

    #[test]
    fn singleton_chain() {
        let mut g = MemoryGraph::new();
        let id = g.add_node(episode(8, "first")).unwrap();
        assert_eq!(g.episode_chain(), &[id]);
    }

    #[test]
    fn chain_sorted_by_timestamp() {
        // Oracle: insertion order d2 then d1 must come back sorted.
        let mut g = MemoryGraph::new();
        let e2 = g.add_node(episode(2, "later")).unwrap();
        let e1 = g.add_node(episode(1, "earlier")).unwrap();
        let mut expected = vec![(ts(2), e2.clone()), (ts(1), e1.clone())];
        expected.sort_by_key(|(t, _)| *t);
        let expected: Vec<NodeId> = expected.into_iter().map(|(_, id)| id).collect();
        assert_eq!(g.episode_chain(), expected.as_slice());
    }

    #[test]
    fn equal_timestamps_keep_insertion_order() {
        let mut g = MemoryGraph::new();
        let a = g.add_node(episode(3, "a")).unwrap();
        let b = g.add_node(episode(3, "b")).unwrap();
        assert_eq!(g.episode_chain(), &[a, b]);
    }

    #[test]
    fn entity_without_type_rejected() {
        let mut g = MemoryGraph::new();
        let mut n = plain(LayerKind::Entity, "Melanie");
        n.entity_type = None;
        assert!(matches!(
            g.add_node(n),
            Err(GraphError::EntityTypeMismatch(_))
        ));
    }

    #[test]
    fn episode_requires_timestamp() {
        let mut g = MemoryGraph::new();
        let mut n = episode(1, "x");
        n.timestamp = None;
        assert!(matches!(
            g.add_node(n),
            Err(GraphError::EpisodeWithoutTimestamp(_))
        ));
    }

    #[test]
    fn duplicate_node_rejected() {
        let mut g = MemoryGraph::new();
        g.add_node(episode(1, "x")).unwrap();
        assert!(matches!(
            g.add_node(episode(1, "x")),
            Err(GraphError::DuplicateNode(_))
        ));
    }

    #[test]
    fn belongs_to_layer_order_enforced() {
        let mut g = MemoryGraph::new();
        let ep = g.add_node(episode(1, "e")).unwrap();
        let fc = g.add_node(plain(LayerKind::Facet, "theme")).unwrap();
        g.add_edge(belongs(&fc, &ep)).unwrap();
        // Reversed direction is a layer-order violation.
        let err = g.add_edge(belongs(&ep, &fc)).unwrap_err();
        assert!(matches!(err, GraphError::BelongsToLayerOrder { .. }));
    }

    #[test]
    fn causal_confidence_floor() {
        let mut g = MemoryGraph::new();
        let a = g.add_node(episode(1, "a")).unwrap();
        let b = g.add_node(episode(2, "b")).unwrap();
        let mut spec = relation(EdgeKind::Causal, &a, &b);
        spec.confidence = Some(0.65);
        assert!(matches!(
            g.add_edge(spec),
            Err(GraphError::CausalConfidence(_))
        ));
    }

    #[test]
    fn duplicate_edge_rejected() {
        let mut g = MemoryGraph::new();
        let a = g.add_node(episode(1, "a")).unwrap();
        let b = g.add_node(episode(2, "b")).unwrap();
        g.add_edge(relation(EdgeKind::Temporal, &a, &b)).unwrap();
        assert!(matches!(
            g.add_edge(relation(EdgeKind::Temporal, &a, &b)),
            Err(GraphError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn relation_edge_requires_embedding() {
        let mut g = MemoryGraph::new();
        let a = g.add_node(episode(1, "a")).unwrap();
        let b = g.add_node(episode(2, "b")).unwrap();
        let mut spec = relation(EdgeKind::Temporal, &a, &b);
        spec.embedding_ref = None;
        assert!(matches!(
            g.add_edge(spec),
            Err(GraphError::MissingEdgeEmbedding(_))
        ));
    }

    #[test]
    fn neighbors_of_isolated_node_empty() {
        let mut g = MemoryGraph::new();
        let e = g.add_node(episode(1, "solo")).unwrap();
        assert!(g
            .neighbors(&e, EdgeKind::Temporal, Direction::Both)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn neighbors_follow_insertion_order() {
        // Oracle: three temporal out-edges come back in insertion order.
        let mut g = MemoryGraph::new();
        let hub = g.add_node(episode(1, "hub")).unwrap();
        let mut expected = Vec::new();
        for (i, name) in ["x", "y", "z"].iter().enumerate() {
            let n = g.add_node(episode(2 + i as u32, name)).unwrap();
            let id = g.add_edge(relation(EdgeKind::Temporal, &hub, &n)).unwrap();
            expected.push((id, n));
        }
        let got: Vec<(EdgeId, NodeId)> = g
            .neighbors(&hub, EdgeKind::Temporal, Direction::Out)
            .unwrap()
            .into_iter()
            .map(|(e, n)| (e.id, n.id.clone()))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn single_belongs_to_pair() {
        let mut g = MemoryGraph::new();
        let ep = g.add_node(episode(1, "e")).unwrap();
        let fc = g.add_node(plain(LayerKind::Facet, "t")).unwrap();
        let fp = g.add_node(plain(LayerKind::FacetPoint, "fact")).unwrap();
        g.add_edge(belongs(&fc, &ep)).unwrap();
        g.add_edge(belongs(&fp, &fc)).unwrap();
        let out = g
            .neighbors(&fp, EdgeKind::BelongsTo, Direction::Out)
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1.id, fc);
    }

    #[test]
    fn episode_of_identity_and_chain() {
        let mut g = MemoryGraph::new();
        let ep = g.add_node(episode(1, "e")).unwrap();
        let fc = g.add_node(plain(LayerKind::Facet, "t")).unwrap();
        let fp = g.add_node(plain(LayerKind::FacetPoint, "fact")).unwrap();
        g.add_edge(belongs(&fc, &ep)).unwrap();
        g.add_edge(belongs(&fp, &fc)).unwrap();
        assert_eq!(g.episode_of(&ep).unwrap(), ep);
        assert_eq!(g.episode_of(&fp).unwrap(), ep);
        assert_eq!(g.episode_of(&fc).unwrap(), ep);
    }

    #[test]
    fn entity_across_two_episodes_is_ambiguous() {
        let mut g = MemoryGraph::new();
        let en = g.add_node(plain(LayerKind::Entity, "Melanie")).unwrap();
        for day in [1, 2] {
            let ep = g.add_node(episode(day, &format!("e{day}"))).unwrap();
            let fc = g
                .add_node(plain(LayerKind::Facet, &format!("t{day}")))
                .unwrap();
            let fp = g
                .add_node(plain(LayerKind::FacetPoint, &format!("f{day}")))
                .unwrap();
            g.add_edge(belongs(&fc, &ep)).unwrap();
            g.add_edge(belongs(&fp, &fc)).unwrap();
            g.add_edge(belongs(&en, &fp)).unwrap();
        }
        assert!(matches!(
            g.episode_of(&en),
            Err(GraphError::AmbiguousEpisode(_))
        ));
    }

    #[test]
    fn orphan_node_errors() {
        let mut g = MemoryGraph::new();
        let fp = g.add_node(plain(LayerKind::FacetPoint, "loose")).unwrap();
        assert!(matches!(g.episode_of(&fp), Err(GraphError::OrphanNode(_))));
    }
}
