//! Checkpoint persistence.
//!
//! A checkpoint directory holds four artefacts:
//!
//! - `graph.json` — nodes, edges, and the episode chain
//! - `chunks.json` — raw chunk text keyed by content hash
//! - `hashes.json` — ingested chunk digests for deduplication
//! - `vectors/` — one little-endian f32 matrix per store plus a manifest
//!   recording dimension, row counts, and the embedder identity
//!
//! Row ownership is not stored separately: it is rebuilt from the nodes'
//! and edges' `embedding_ref` fields, so a load reproduces the stores
//! bit-for-bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Edge, EdgeKind, EdgeSpec, GraphError, MemoryGraph, Node, NodeId};
use crate::index::{FlatVectorStore, IndexError, StoreName, VectorSet};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("schema version mismatch: file has {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("graph replay failed: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Vectors(#[from] IndexError),
    #[error("row {row} of store {store} has no owner in the graph")]
    UnownedRow { store: StoreName, row: usize },
}

/// One raw conversation chunk as persisted in `chunks.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChunkRecord {
    pub conversation_id: String,
    /// RFC 3339 header timestamp of the chunk.
    pub timestamp: String,
    pub text: String,
}

/// Chunk text store keyed by SHA-256 content hash.
pub type ChunkStore = BTreeMap<String, ChunkRecord>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorManifest {
    pub schema_version: u32,
    pub dim: usize,
    pub rows: BTreeMap<StoreName, usize>,
    pub embedder: String,
}

/// A fully loaded checkpoint: graph, chunk text, and vector stores.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub graph: MemoryGraph,
    pub chunks: ChunkStore,
    pub vectors: VectorSet,
    pub embedder_identity: String,
}

impl Checkpoint {
    pub fn new(dim: usize, embedder_identity: String) -> Self {
        Self {
            graph: MemoryGraph::new(),
            chunks: ChunkStore::new(),
            vectors: VectorSet::new(dim),
            embedder_identity,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        save_checkpoint(self, dir)
    }

    pub fn load(dir: &Path) -> Result<Self, CheckpointError> {
        load_checkpoint(dir)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    schema_version: u32,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    episode_chain: Vec<NodeId>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CheckpointError> {
    let body = serde_json::to_string_pretty(value).map_err(|source| CheckpointError::Json {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, body + "\n").map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CheckpointError> {
    let body = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| CheckpointError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, dir: &Path) -> Result<(), CheckpointError> {
    let vectors_dir = dir.join("vectors");
    fs::create_dir_all(&vectors_dir).map_err(|source| CheckpointError::Io {
        path: vectors_dir.display().to_string(),
        source,
    })?;

    let graph_file = GraphFile {
        schema_version: SCHEMA_VERSION,
        nodes: ckpt.graph.nodes().cloned().collect(),
        edges: ckpt.graph.edges().cloned().collect(),
        episode_chain: ckpt.graph.episode_chain().to_vec(),
    };
    write_json(&dir.join("graph.json"), &graph_file)?;
    write_json(&dir.join("chunks.json"), &ckpt.chunks)?;
    let hashes: Vec<&String> = ckpt.graph.ingested_hashes().iter().collect();
    write_json(&dir.join("hashes.json"), &hashes)?;

    let mut rows = BTreeMap::new();
    for store in ckpt.vectors.stores() {
        rows.insert(store.name(), store.len());
        let path = vectors_dir.join(format!("{}.f32", store.name()));
        fs::write(&path, store.to_bytes()).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let manifest = VectorManifest {
        schema_version: SCHEMA_VERSION,
        dim: ckpt.vectors.dim,
        rows,
        embedder: ckpt.embedder_identity.clone(),
    };
    write_json(&vectors_dir.join("manifest.json"), &manifest)
}

/// Owners per store row, derived from node and edge `embedding_ref`s.
fn rebuild_owners(
    graph: &MemoryGraph,
    manifest: &VectorManifest,
) -> Result<BTreeMap<StoreName, Vec<String>>, CheckpointError> {
    let mut owners: BTreeMap<StoreName, Vec<Option<String>>> = StoreName::ALL
        .iter()
        .map(|&name| {
            let count = manifest.rows.get(&name).copied().unwrap_or(0);
            (name, vec![None; count])
        })
        .collect();

    let mut claim = |store: StoreName, row: usize, owner: String| {
        let slots = owners.get_mut(&store).expect("all stores present");
        if row < slots.len() {
            slots[row] = Some(owner);
        }
    };
    for node in graph.nodes() {
        claim(
            StoreName::for_layer(node.layer),
            node.embedding_ref,
            node.id.0.clone(),
        );
    }
    for edge in graph.edges() {
        if let Some(row) = edge.embedding_ref {
            let store = if edge.kind == EdgeKind::Semantic {
                StoreName::EdgeSemantic
            } else {
                StoreName::EdgeRelation
            };
            claim(store, row, edge.id.to_string());
        }
    }

    let mut resolved = BTreeMap::new();
    for (store, slots) in owners {
        let mut list = Vec::with_capacity(slots.len());
        for (row, slot) in slots.into_iter().enumerate() {
            list.push(slot.ok_or(CheckpointError::UnownedRow { store, row })?);
        }
        resolved.insert(store, list);
    }
    Ok(resolved)
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint, CheckpointError> {
    let graph_file: GraphFile = read_json(&dir.join("graph.json"))?;
    if graph_file.schema_version != SCHEMA_VERSION {
        return Err(CheckpointError::SchemaVersion {
            found: graph_file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }

    // Replay nodes and edges; the rebuilt adjacency and chain must match
    // what was saved because insertion order is preserved.
    let mut graph = MemoryGraph::new();
    for node in graph_file.nodes {
        graph.add_node(node)?;
    }
    for edge in graph_file.edges {
        graph.add_edge(EdgeSpec {
            kind: edge.kind,
            src: edge.src,
            dst: edge.dst,
            description: edge.description,
            embedding_ref: edge.embedding_ref,
            confidence: edge.confidence,
        })?;
    }
    debug_assert_eq!(graph.episode_chain(), graph_file.episode_chain.as_slice());

    let hashes: Vec<String> = read_json(&dir.join("hashes.json"))?;
    for h in hashes {
        graph.record_hash(h);
    }
    let chunks: ChunkStore = read_json(&dir.join("chunks.json"))?;

    let vectors_dir = dir.join("vectors");
    let manifest: VectorManifest = read_json(&vectors_dir.join("manifest.json"))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(CheckpointError::SchemaVersion {
            found: manifest.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let mut owners = rebuild_owners(&graph, &manifest)?;
    let mut vectors = VectorSet::new(manifest.dim);
    for name in StoreName::ALL {
        let path = vectors_dir.join(format!("{name}.f32"));
        let bytes = fs::read(&path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let store = FlatVectorStore::from_bytes(
            name,
            manifest.dim,
            &bytes,
            owners.remove(&name).unwrap_or_default(),
        )?;
        vectors.insert_store(store);
    }

    Ok(Checkpoint {
        graph,
        chunks,
        vectors,
        embedder_identity: manifest.embedder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LayerKind;
    use crate::index::{embed_and_normalize, Embedder, HashEmbedder};
    use chrono::TimeZone;

    fn build_sample(n_episodes: usize) -> Checkpoint {
        let embedder = HashEmbedder::new(16, 1);
        let mut ckpt = Checkpoint::new(16, embedder.identity());
        let mut prev: Option<NodeId> = None;
        for i in 0..n_episodes {
            let text = format!("episode number {i}");
            let stamp = chrono::Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
                + chrono::Duration::hours(i as i64);
            let id = NodeId::derive(LayerKind::Episode, "conv", &text, Some(stamp));
            let emb = embed_and_normalize(&embedder, &text).unwrap();
            let row = ckpt
                .vectors
                .store_mut(StoreName::Episode)
                .push(id.0.clone(), emb)
                .unwrap();
            ckpt.graph
                .add_node(Node {
                    id: id.clone(),
                    layer: LayerKind::Episode,
                    text,
                    embedding_ref: row,
                    timestamp: Some(stamp),
                    entity_type: None,
                    conversation_id: "conv".into(),
                })
                .unwrap();

            if let Some(p) = prev.clone() {
                let next_edge = ckpt.graph.edge_count() as u64;
                let desc = format!("{p} precedes {id}");
                let demb = embed_and_normalize(&embedder, &desc).unwrap();
                let erow = ckpt
                    .vectors
                    .store_mut(StoreName::EdgeRelation)
                    .push(next_edge.to_string(), demb)
                    .unwrap();
                ckpt.graph
                    .add_edge(EdgeSpec {
                        kind: EdgeKind::Temporal,
                        src: p,
                        dst: id.clone(),
                        description: Some(desc),
                        embedding_ref: Some(erow),
                        confidence: None,
                    })
                    .unwrap();
            }
            prev = Some(id);
        }
        ckpt.chunks.insert(
            "deadbeef".into(),
            ChunkRecord {
                conversation_id: "conv".into(),
                timestamp: "2023-01-01T00:00:00+00:00".into(),
                text: "raw text".into(),
            },
        );
        ckpt.graph.record_hash("deadbeef".into());
        ckpt
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = Checkpoint::new(8, "test".into());
        ckpt.save(dir.path()).unwrap();
        let back = Checkpoint::load(dir.path()).unwrap();
        assert_eq!(back.graph.node_count(), 0);
        assert_eq!(back.graph.edge_count(), 0);
        assert_eq!(back.embedder_identity, "test");
    }

    #[test]
    fn structural_round_trip() {
        // Oracle: node/edge multisets and vectors compare equal after a
        // save/load cycle.
        let dir = tempfile::tempdir().unwrap();
        let ckpt = build_sample(20);
        ckpt.save(dir.path()).unwrap();
        let back = Checkpoint::load(dir.path()).unwrap();

        assert_eq!(back.graph.node_count(), ckpt.graph.node_count());
        assert_eq!(back.graph.edge_count(), ckpt.graph.edge_count());
        assert_eq!(back.graph.episode_chain(), ckpt.graph.episode_chain());
        for node in ckpt.graph.nodes() {
            let b = back.graph.node(&node.id).expect("node survived");
            assert_eq!(b.text, node.text);
            assert_eq!(b.embedding_ref, node.embedding_ref);
            assert_eq!(b.timestamp, node.timestamp);
        }
        for name in StoreName::ALL {
            let a = ckpt.vectors.store(name);
            let b = back.vectors.store(name);
            assert_eq!(a.to_bytes(), b.to_bytes());
            assert_eq!(a.owners(), b.owners());
        }
        assert_eq!(back.chunks, ckpt.chunks);
        assert!(back.graph.has_hash("deadbeef"));
    }

    #[test]
    fn resave_is_byte_identical() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let ckpt = build_sample(10);
        ckpt.save(dir1.path()).unwrap();
        let back = Checkpoint::load(dir1.path()).unwrap();
        back.save(dir2.path()).unwrap();
        for file in ["graph.json", "chunks.json", "hashes.json"] {
            let a = std::fs::read(dir1.path().join(file)).unwrap();
            let b = std::fs::read(dir2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} must be byte-identical");
        }
        for name in StoreName::ALL {
            let rel = format!("vectors/{name}.f32");
            let a = std::fs::read(dir1.path().join(&rel)).unwrap();
            let b = std::fs::read(dir2.path().join(&rel)).unwrap();
            assert_eq!(a, b, "{rel} must be byte-identical");
        }
    }

    #[test]
    fn truncated_vector_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = build_sample(5);
        ckpt.save(dir.path()).unwrap();
        let path = dir.path().join("vectors/episode.f32");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            Checkpoint::load(dir.path()),
            Err(CheckpointError::Vectors(_))
        ));
    }

    #[test]
    fn schema_version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = Checkpoint::new(8, "test".into());
        ckpt.save(dir.path()).unwrap();
        let path = dir.path().join("graph.json");
        let body = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 99");
        std::fs::write(&path, body).unwrap();
        assert!(matches!(
            Checkpoint::load(dir.path()),
            Err(CheckpointError::SchemaVersion { .. })
        ));
    }
}
