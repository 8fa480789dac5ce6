//! Exact inner-product search over L2-normalized embeddings.
//!
//! One flat store per node layer plus two edge stores. Search is a full
//! scan: with normalized rows the inner product equals cosine similarity,
//! and results are exact rather than approximate.

mod embed;

pub use embed::{embed_and_normalize, Embedder, HashEmbedder};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LayerKind;

/// Default embedding dimension.
pub const DEFAULT_DIM: usize = 384;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("text is empty after trimming")]
    EmptyText,
    #[error("embedding dimension {got} does not match store dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("embedding backend failure: {0}")]
    Backend(String),
}

/// An L2-normalized embedding vector.
///
/// Values are kept in f64 for cost arithmetic but are always representable
/// in f32, matching the on-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Scale to unit norm, then round each component to f32 precision so
    /// the in-memory value round-trips exactly through the binary store.
    pub fn normalized(mut self) -> Embedding {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.0 {
                *v = (*v / n) as f32 as f64;
            }
        }
        self
    }
}

/// Names of the six vector stores in a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreName {
    Episode,
    Facet,
    FacetPoint,
    Entity,
    EdgeRelation,
    EdgeSemantic,
}

impl StoreName {
    pub const ALL: [StoreName; 6] = [
        StoreName::Episode,
        StoreName::Facet,
        StoreName::FacetPoint,
        StoreName::Entity,
        StoreName::EdgeRelation,
        StoreName::EdgeSemantic,
    ];

    pub const NODE_LAYERS: [StoreName; 4] = [
        StoreName::Episode,
        StoreName::Facet,
        StoreName::FacetPoint,
        StoreName::Entity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StoreName::Episode => "episode",
            StoreName::Facet => "facet",
            StoreName::FacetPoint => "facet_point",
            StoreName::Entity => "entity",
            StoreName::EdgeRelation => "edge_relation",
            StoreName::EdgeSemantic => "edge_semantic",
        }
    }

    pub fn for_layer(layer: LayerKind) -> StoreName {
        match layer {
            LayerKind::Episode => StoreName::Episode,
            LayerKind::Facet => StoreName::Facet,
            LayerKind::FacetPoint => StoreName::FacetPoint,
            LayerKind::Entity => StoreName::Entity,
        }
    }
}

impl fmt::Display for StoreName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A search hit: the owning node/edge id with its cosine similarity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub owner: String,
    pub row: usize,
    pub similarity: f64,
}

impl SearchHit {
    pub fn distance(&self) -> f64 {
        1.0 - self.similarity
    }
}

/// Append-only matrix of unit vectors with the owning id per row.
#[derive(Debug, Clone)]
pub struct FlatVectorStore {
    name: StoreName,
    dim: usize,
    rows: Vec<Embedding>,
    row_owner: Vec<String>,
}

impl FlatVectorStore {
    pub fn new(name: StoreName, dim: usize) -> Self {
        Self {
            name,
            dim,
            rows: Vec::new(),
            row_owner: Vec::new(),
        }
    }

    pub fn name(&self) -> StoreName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, idx: usize) -> Option<&Embedding> {
        self.rows.get(idx)
    }

    pub fn owner(&self, idx: usize) -> Option<&str> {
        self.row_owner.get(idx).map(|s| s.as_str())
    }

    pub fn owners(&self) -> &[String] {
        &self.row_owner
    }

    /// Append a vector; returns its row index.
    pub fn push(&mut self, owner: String, embedding: Embedding) -> Result<usize, IndexError> {
        if embedding.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                got: embedding.dim(),
                want: self.dim,
            });
        }
        self.rows.push(embedding);
        self.row_owner.push(owner);
        Ok(self.rows.len() - 1)
    }

    /// Exact top-k by inner product. Ties broken by ascending row index.
    /// An empty store returns an empty list.
    pub fn top_k(&self, query: &Embedding, k: usize) -> Vec<SearchHit> {
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| (query.dot(row), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("similarities are finite")
                .then(a.1.cmp(&b.1))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(similarity, row)| SearchHit {
                owner: self.row_owner[row].clone(),
                row,
                similarity,
            })
            .collect()
    }

    /// Raw little-endian f32 bytes, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows.len() * self.dim * 4);
        for row in &self.rows {
            for &v in &row.0 {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    /// Rebuild from raw bytes plus the owner list (derived from the graph).
    pub fn from_bytes(
        name: StoreName,
        dim: usize,
        bytes: &[u8],
        owners: Vec<String>,
    ) -> Result<Self, IndexError> {
        if bytes.len() % (dim * 4) != 0 {
            return Err(IndexError::Backend(format!(
                "corrupt vector file for store {name}: {} bytes is not a multiple of {}",
                bytes.len(),
                dim * 4
            )));
        }
        let n_rows = bytes.len() / (dim * 4);
        if n_rows != owners.len() {
            return Err(IndexError::Backend(format!(
                "store {name} has {n_rows} rows but {} owners",
                owners.len()
            )));
        }
        let mut rows = Vec::with_capacity(n_rows);
        for r in 0..n_rows {
            let mut values = Vec::with_capacity(dim);
            for c in 0..dim {
                let off = (r * dim + c) * 4;
                let v = f32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"));
                values.push(v as f64);
            }
            rows.push(Embedding(values));
        }
        Ok(Self {
            name,
            dim,
            rows,
            row_owner: owners,
        })
    }
}

/// The full set of six stores backing one memory graph.
#[derive(Debug, Clone)]
pub struct VectorSet {
    pub dim: usize,
    stores: BTreeMap<StoreName, FlatVectorStore>,
}

impl VectorSet {
    pub fn new(dim: usize) -> Self {
        let stores = StoreName::ALL
            .iter()
            .map(|&name| (name, FlatVectorStore::new(name, dim)))
            .collect();
        Self { dim, stores }
    }

    pub fn store(&self, name: StoreName) -> &FlatVectorStore {
        &self.stores[&name]
    }

    pub fn store_mut(&mut self, name: StoreName) -> &mut FlatVectorStore {
        self.stores.get_mut(&name).expect("all stores present")
    }

    pub fn insert_store(&mut self, store: FlatVectorStore) {
        self.stores.insert(store.name(), store);
    }

    pub fn stores(&self) -> impl Iterator<Item = &FlatVectorStore> {
        self.stores.values()
    }
}
