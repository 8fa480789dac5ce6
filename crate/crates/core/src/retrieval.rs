//! Bundle search: typed path templates from vector anchors to episodes,
//! costed per edge and per hop, with each episode scored by its cheapest
//! path.
//!
//! Eight templates are enumerated. The backbone family follows only
//! `belongs_to` edges upward (a pure-anchor episode counts as a zero-hop
//! path); the bridge family crosses exactly one temporal, causal, or
//! evolution edge from the anchor and then re-enters the hierarchy:
//!
//! ```text
//! backbone: Ep | Fc>Ep | FP>Fc>Ep | En>FP>Fc>Ep | En>Fc>Ep
//! bridge:   a -temporal-> v ~> Ep | a -causal-> v ~> Ep | a -evolution-> v ~> Ep
//! ```
//!
//! Edge costs are query-sensitive: edges incident to any anchor (the recall
//! set) cost `1 - cos(edge_embedding, query)`, others fall back to a
//! per-kind constant, and both are scaled by an intent-conditioned discount.

use std::collections::{BTreeSet, HashSet};

use indexmap::IndexMap;
use serde::Serialize;

use crate::config::{CostTable, DiscountTable, RunConfig};
use crate::graph::{Direction, Edge, EdgeId, EdgeKind, LayerKind, MemoryGraph, NodeId};
use crate::index::{Embedding, StoreName, VectorSet};
use crate::intent::IntentLabel;

/// A node recalled by per-layer vector search, with its anchor cost
/// `d(a) = 1 - cos(query, node)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub node: NodeId,
    pub layer: LayerKind,
    pub anchor_cost: f64,
}

/// Which of the eight templates produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathTemplate {
    BackboneEpisode,
    BackboneFacet,
    BackboneFacetPoint,
    BackboneEntityViaFacetPoint,
    BackboneEntityViaFacet,
    BridgeTemporal,
    BridgeCausal,
    BridgeEvolution,
}

impl PathTemplate {
    pub fn is_bridge(self) -> bool {
        matches!(
            self,
            PathTemplate::BridgeTemporal | PathTemplate::BridgeCausal | PathTemplate::BridgeEvolution
        )
    }

    fn for_bridge(kind: EdgeKind) -> PathTemplate {
        match kind {
            EdgeKind::Temporal => PathTemplate::BridgeTemporal,
            EdgeKind::Causal => PathTemplate::BridgeCausal,
            EdgeKind::Evolution => PathTemplate::BridgeEvolution,
            other => unreachable!("no bridge template for {other}"),
        }
    }

    fn for_backbone(anchor_layer: LayerKind, first_hop: Option<LayerKind>) -> PathTemplate {
        match (anchor_layer, first_hop) {
            (LayerKind::Episode, _) => PathTemplate::BackboneEpisode,
            (LayerKind::Facet, _) => PathTemplate::BackboneFacet,
            (LayerKind::FacetPoint, _) => PathTemplate::BackboneFacetPoint,
            (LayerKind::Entity, Some(LayerKind::Facet)) => PathTemplate::BackboneEntityViaFacet,
            (LayerKind::Entity, _) => PathTemplate::BackboneEntityViaFacetPoint,
        }
    }
}

/// One costed hop along a path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathHop {
    pub edge: EdgeId,
    pub node: NodeId,
    pub edge_cost: f64,
    pub hop_penalty: f64,
}

/// An instantiated template: anchor, hops, terminal episode, total cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathInstance {
    pub anchor: Anchor,
    pub hops: Vec<PathHop>,
    pub episode: NodeId,
    pub template: PathTemplate,
    pub total_cost: f64,
}

/// Maximum hops per path (bridge + full re-entry chain).
pub const MAX_HOPS: usize = 4;

/// Query-conditioned edge cost model.
#[derive(Debug, Clone)]
pub struct EdgeCostModel {
    pub labels: BTreeSet<IntentLabel>,
    /// Edges incident to any anchor; these use embedding similarity.
    pub recall: HashSet<EdgeId>,
    pub fallback: CostTable,
    pub discounts: DiscountTable,
    /// When false every discount is 1.0 (cost-adjustment ablation).
    pub apply_discounts: bool,
}

impl EdgeCostModel {
    pub fn new(
        labels: BTreeSet<IntentLabel>,
        recall: HashSet<EdgeId>,
        config: &RunConfig,
    ) -> Self {
        Self {
            labels,
            recall,
            fallback: config.cost_fallback.clone(),
            discounts: config.discounts.clone(),
            apply_discounts: config.enable_n2_costs,
        }
    }

    /// Intent-conditioned discount factor for an edge kind.
    pub fn alpha(&self, kind: EdgeKind) -> f64 {
        if !self.apply_discounts {
            return self.discounts.unmatched;
        }
        let temporal = self.labels.contains(&IntentLabel::Temporal);
        let causal = self.labels.contains(&IntentLabel::Causal);
        match kind {
            EdgeKind::Temporal if temporal => self.discounts.matched,
            EdgeKind::Causal if causal => self.discounts.matched,
            EdgeKind::Evolution if temporal => self.discounts.evolution_under_temporal,
            _ => self.discounts.unmatched,
        }
    }

    /// Per-edge traversal cost: discount times either the embedding
    /// distance (edge in recall, embedding present) or the per-kind
    /// fallback. `belongs_to` edges never carry embeddings, so they always
    /// pay the fallback.
    pub fn edge_cost(&self, edge: &Edge, stores: &VectorSet, query: &Embedding) -> f64 {
        let base = match edge.embedding_ref {
            Some(row) if self.recall.contains(&edge.id) => {
                let store = if edge.kind == EdgeKind::Semantic {
                    StoreName::EdgeSemantic
                } else {
                    StoreName::EdgeRelation
                };
                match stores.store(store).row(row) {
                    Some(emb) => 1.0 - query.dot(emb),
                    None => self.fallback.get(edge.kind),
                }
            }
            _ => self.fallback.get(edge.kind),
        };
        self.alpha(edge.kind) * base
    }
}

/// Standalone edge-cost evaluation (used by traces and tests).
pub fn edge_cost(
    model: &EdgeCostModel,
    edge: &Edge,
    stores: &VectorSet,
    query: &Embedding,
) -> f64 {
    model.edge_cost(edge, stores, query)
}

/// Union of per-layer top-k hits, deduplicated by node id keeping the
/// minimum anchor cost. Layer order is fixed (episode, facet, facet point,
/// entity) and hits arrive in descending similarity, so the result order is
/// deterministic.
pub fn discover_anchors(
    graph: &MemoryGraph,
    stores: &VectorSet,
    query: &Embedding,
    k_per_layer: usize,
) -> Vec<Anchor> {
    let mut anchors: IndexMap<NodeId, Anchor> = IndexMap::new();
    for name in StoreName::NODE_LAYERS {
        for hit in stores.store(name).top_k(query, k_per_layer) {
            let node_id = NodeId(hit.owner.clone());
            let Some(node) = graph.node(&node_id) else {
                continue;
            };
            let cost = hit.distance();
            match anchors.get_mut(&node_id) {
                Some(existing) => {
                    if cost < existing.anchor_cost {
                        existing.anchor_cost = cost;
                    }
                }
                None => {
                    anchors.insert(
                        node_id.clone(),
                        Anchor {
                            node: node_id,
                            layer: node.layer,
                            anchor_cost: cost,
                        },
                    );
                }
            }
        }
    }
    anchors.into_values().collect()
}

/// Edges incident to any anchor, in either direction.
pub fn recall_set(graph: &MemoryGraph, anchors: &[Anchor]) -> HashSet<EdgeId> {
    let mut recall = HashSet::new();
    for anchor in anchors {
        recall.extend(graph.incident_edges(&anchor.node));
    }
    recall
}

/// All `belongs_to` chains from `start` up to an episode, each as a hop
/// list, bounded by `budget` hops. The hierarchy is layer-stratified so
/// chains are short and acyclic.
fn belongs_to_chains(
    graph: &MemoryGraph,
    start: &NodeId,
    budget: usize,
) -> Vec<Vec<(EdgeId, NodeId)>> {
    let mut chains = Vec::new();
    let mut stack: Vec<Vec<(EdgeId, NodeId)>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let from = prefix.last().map(|(_, n)| n).unwrap_or(start);
        let steps = graph
            .neighbors(from, EdgeKind::BelongsTo, Direction::Out)
            .expect("path nodes exist");
        for (edge, neighbor) in steps {
            let mut chain = prefix.clone();
            chain.push((edge.id, neighbor.id.clone()));
            if neighbor.layer == LayerKind::Episode {
                chains.push(chain);
            } else if chain.len() < budget {
                stack.push(chain);
            }
        }
    }
    chains
}

fn build_path(
    graph: &MemoryGraph,
    stores: &VectorSet,
    model: &EdgeCostModel,
    query: &Embedding,
    anchor: &Anchor,
    template: PathTemplate,
    hops: &[(EdgeId, NodeId)],
    hop_penalty: f64,
) -> PathInstance {
    let mut total = anchor.anchor_cost;
    let mut costed = Vec::with_capacity(hops.len());
    for (edge_id, node_id) in hops {
        let edge = graph.edge(*edge_id).expect("edge exists");
        let cost = model.edge_cost(edge, stores, query);
        total += cost + hop_penalty;
        costed.push(PathHop {
            edge: *edge_id,
            node: node_id.clone(),
            edge_cost: cost,
            hop_penalty,
        });
    }
    let episode = hops
        .last()
        .map(|(_, n)| n.clone())
        .unwrap_or_else(|| anchor.node.clone());
    PathInstance {
        anchor: anchor.clone(),
        hops: costed,
        episode,
        template,
        total_cost: total,
    }
}

const BRIDGE_KINDS: [EdgeKind; 3] = [EdgeKind::Temporal, EdgeKind::Causal, EdgeKind::Evolution];

/// Instantiate every template from every anchor, exhaustively over the
/// adjacency, costing each hop. `enable_bridges = false` restricts the
/// search to the backbone family.
pub fn enumerate_paths(
    graph: &MemoryGraph,
    stores: &VectorSet,
    anchors: &[Anchor],
    model: &EdgeCostModel,
    query: &Embedding,
    hop_penalty: f64,
    enable_bridges: bool,
) -> Vec<PathInstance> {
    let mut paths = Vec::new();
    for anchor in anchors {
        // Backbone family.
        if anchor.layer == LayerKind::Episode {
            paths.push(build_path(
                graph,
                stores,
                model,
                query,
                anchor,
                PathTemplate::BackboneEpisode,
                &[],
                hop_penalty,
            ));
        } else {
            for chain in belongs_to_chains(graph, &anchor.node, MAX_HOPS) {
                let first_layer = chain
                    .first()
                    .and_then(|(_, n)| graph.node(n))
                    .map(|n| n.layer);
                let template = PathTemplate::for_backbone(anchor.layer, first_layer);
                paths.push(build_path(
                    graph, stores, model, query, anchor, template, &chain, hop_penalty,
                ));
            }
        }

        // Relation-bridge family: one typed edge, then re-enter the
        // hierarchy from the landing node.
        if !enable_bridges {
            continue;
        }
        for kind in BRIDGE_KINDS {
            let crossings = graph
                .neighbors(&anchor.node, kind, Direction::Both)
                .expect("anchors exist");
            for (edge, landing) in crossings {
                let template = PathTemplate::for_bridge(kind);
                if landing.layer == LayerKind::Episode {
                    let hops = [(edge.id, landing.id.clone())];
                    paths.push(build_path(
                        graph, stores, model, query, anchor, template, &hops, hop_penalty,
                    ));
                } else {
                    for chain in belongs_to_chains(graph, &landing.id, MAX_HOPS - 1) {
                        let mut hops = Vec::with_capacity(chain.len() + 1);
                        hops.push((edge.id, landing.id.clone()));
                        hops.extend(chain);
                        paths.push(build_path(
                            graph, stores, model, query, anchor, template, &hops, hop_penalty,
                        ));
                    }
                }
            }
        }
    }
    paths
}

/// One bundled episode with its score and winning path.
#[derive(Debug, Clone, Serialize)]
pub struct BundleEntry {
    pub episode: NodeId,
    pub score: f64,
    pub path: PathInstance,
}

/// Top-K episodes by ascending minimum path cost.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Bundle {
    pub entries: Vec<BundleEntry>,
}

impl Bundle {
    pub fn episode_ids(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.episode.clone()).collect()
    }
}

/// Group paths by terminal episode, keep the cheapest per episode, sort
/// ascending, truncate to `k`. Ties break by episode chronology (chain
/// position), then by episode id.
pub fn assemble_bundle(graph: &MemoryGraph, paths: &[PathInstance], k: usize) -> Bundle {
    let mut best: IndexMap<NodeId, &PathInstance> = IndexMap::new();
    for path in paths {
        match best.get_mut(&path.episode) {
            Some(current) if path.total_cost < current.total_cost => *current = path,
            Some(_) => {}
            None => {
                best.insert(path.episode.clone(), path);
            }
        }
    }
    let mut entries: Vec<BundleEntry> = best
        .into_iter()
        .map(|(episode, path)| BundleEntry {
            episode,
            score: path.total_cost,
            path: path.clone(),
        })
        .collect();
    entries.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("scores are finite")
            .then_with(|| {
                let ca = graph.chain_index(&a.episode).unwrap_or(usize::MAX);
                let cb = graph.chain_index(&b.episode).unwrap_or(usize::MAX);
                ca.cmp(&cb)
            })
            .then_with(|| a.episode.cmp(&b.episode))
    });
    entries.truncate(k);
    Bundle { entries }
}

/// Anchor list and recall-set size recorded per query.
#[derive(Debug, Clone, Serialize)]
pub struct RetrievalTrace {
    pub anchors: Vec<Anchor>,
    pub recall_size: usize,
}

/// Full retrieval: anchors, recall set, path enumeration, bundle assembly.
pub fn retrieve(
    graph: &MemoryGraph,
    stores: &VectorSet,
    query: &Embedding,
    labels: &BTreeSet<IntentLabel>,
    config: &RunConfig,
) -> (Bundle, RetrievalTrace) {
    let anchors = discover_anchors(graph, stores, query, config.k_per_layer);
    let recall = recall_set(graph, &anchors);
    let model = EdgeCostModel::new(labels.clone(), recall, config);
    let paths = enumerate_paths(
        graph,
        stores,
        &anchors,
        &model,
        query,
        config.hop_penalty,
        config.enable_n1_bridges,
    );
    let bundle = assemble_bundle(graph, &paths, config.bundle_size);
    let trace = RetrievalTrace {
        recall_size: model.recall.len(),
        anchors,
    };
    (bundle, trace)
}
