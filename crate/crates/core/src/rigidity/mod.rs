//! Correspondence graph, quasi connectivity and configuration augmentation.
//!
//! A configuration is rigid in `R^d` only if every pair of patch vertices of
//! its bipartite node/patch correspondence graph is joined by at least
//! `d + 1` paths that share no node vertex. With unit capacity on node
//! vertices this is a max-flow question. When it fails, the min cut splits
//! the patches into two groups whose node unions `A` and `B` overlap in
//! exactly the flow value; a new clique joining `A \ B` to `B \ A` enlarges
//! that overlap.

mod flow;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cliques::{clique_through_pair, Clique, CliqueCover, PgdParams};
use crate::error::{Result, SnlError};
use crate::graph::{MeasurementGraph, NodeId, Point};
use flow::SplitNetwork;

/// Patch memberships: cliques `C_1..C_M` plus the anchor patch holding
/// every anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub n_nodes: usize,
    pub patches: Vec<Clique>,
    /// Members of the anchor patch; empty for anchor-free networks.
    pub anchors: Vec<NodeId>,
}

impl Configuration {
    pub fn new(n_nodes: usize, patches: Vec<Clique>, anchors: Vec<NodeId>) -> Self {
        Self {
            n_nodes,
            patches,
            anchors,
        }
    }

    pub fn from_cover(cover: &CliqueCover, g: &MeasurementGraph) -> Self {
        Self::new(g.n_nodes(), cover.cliques.clone(), g.anchor_ids().collect())
    }

    pub fn has_anchor_patch(&self) -> bool {
        !self.anchors.is_empty()
    }

    /// Member lists of all patch vertices, the anchor patch last.
    pub fn memberships(&self) -> Vec<Vec<NodeId>> {
        let mut m: Vec<Vec<NodeId>> = self.patches.iter().map(|c| c.members.clone()).collect();
        if self.has_anchor_patch() {
            m.push(self.anchors.clone());
        }
        m
    }
}

/// A vertex of the correspondence graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum GammaVertex {
    Node(NodeId),
    Patch(usize),
}

/// Bipartite graph between nodes and patches; `(k, p)` is an edge iff node
/// `k` belongs to patch `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceGraph {
    n_nodes: usize,
    patches: Vec<Vec<NodeId>>,
    anchor_patch: Option<usize>,
}

impl CorrespondenceGraph {
    pub fn from_memberships(n_nodes: usize, patches: Vec<Vec<NodeId>>, anchor_patch: Option<usize>) -> Self {
        Self {
            n_nodes,
            patches,
            anchor_patch,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn anchor_patch(&self) -> Option<usize> {
        self.anchor_patch
    }

    pub fn members(&self, p: usize) -> &[NodeId] {
        &self.patches[p]
    }

    /// Membership edges `(node, patch)` in patch order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.patches
            .iter()
            .enumerate()
            .flat_map(|(p, m)| m.iter().map(move |&k| (k, p)))
    }

    pub fn edge_count(&self) -> usize {
        self.patches.iter().map(Vec::len).sum()
    }

    fn network(&self) -> SplitNetwork {
        SplitNetwork::new(self.n_nodes, &self.patches)
    }
}

pub fn build_correspondence_graph(cfg: &Configuration) -> CorrespondenceGraph {
    let anchor_patch = cfg.has_anchor_patch().then_some(cfg.patches.len());
    CorrespondenceGraph::from_memberships(cfg.n_nodes, cfg.memberships(), anchor_patch)
}

/// Maximum number of node-disjoint paths between two patch vertices, with
/// the minimum cut read off the final residual network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub source: usize,
    pub sink: usize,
    pub value: usize,
    /// Source side of the cut. A node vertex is on the source side when its
    /// inbound half is residual-reachable.
    pub cut_s: BTreeSet<GammaVertex>,
    pub cut_t: BTreeSet<GammaVertex>,
}

fn check_patch_pair(gamma: &CorrespondenceGraph, s: usize, t: usize) -> Result<()> {
    let p = gamma.n_patches();
    if s >= p || t >= p {
        return Err(SnlError::InvalidInput(format!(
            "patch vertices ({s}, {t}) outside 0..{p}"
        )));
    }
    if s == t {
        return Err(SnlError::InvalidInput("source and sink patch coincide".into()));
    }
    Ok(())
}

fn flow_with_cut(gamma: &CorrespondenceGraph, mut net: SplitNetwork, s: usize, t: usize) -> FlowResult {
    let value = net.max_flow(s, t, usize::MAX);
    let reach = net.residual_reachable(s);
    let mut cut_s = BTreeSet::new();
    let mut cut_t = BTreeSet::new();
    for p in 0..gamma.n_patches() {
        if reach[p] { &mut cut_s } else { &mut cut_t }.insert(GammaVertex::Patch(p));
    }
    for k in 0..gamma.n_nodes {
        if reach[net.node_in(k)] { &mut cut_s } else { &mut cut_t }.insert(GammaVertex::Node(k));
    }
    FlowResult {
        source: s,
        sink: t,
        value,
        cut_s,
        cut_t,
    }
}

/// Max flow between patch vertices `s` and `t` with unit node capacities.
pub fn max_flow_unit_vertex(gamma: &CorrespondenceGraph, s: usize, t: usize) -> Result<FlowResult> {
    check_patch_pair(gamma, s, t)?;
    Ok(flow_with_cut(gamma, gamma.network(), s, t))
}

/// Which patch pairs the connectivity test checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSchedule {
    /// The anchor patch (or patch 0 without anchors) against every other.
    #[default]
    Anchored,
    /// Every unordered pair.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiConnectivity {
    pub connected: bool,
    /// Smallest flow found, capped at `k`.
    pub min_flow: usize,
    pub pairs_checked: usize,
    /// First violating pair in schedule order, with its full max flow.
    pub witness: Option<FlowResult>,
}

pub fn is_quasi_k_connected(gamma: &CorrespondenceGraph, k: usize, schedule: PairSchedule) -> QuasiConnectivity {
    let p = gamma.n_patches();
    let pairs: Vec<(usize, usize)> = match schedule {
        PairSchedule::Anchored => {
            let fixed = gamma.anchor_patch.unwrap_or(0);
            (0..p).filter(|&t| t != fixed).map(|t| (fixed, t)).collect()
        }
        PairSchedule::Exhaustive => (0..p).flat_map(|s| (s + 1..p).map(move |t| (s, t))).collect(),
    };
    if pairs.is_empty() {
        return QuasiConnectivity {
            connected: true,
            min_flow: k,
            pairs_checked: 0,
            witness: None,
        };
    }
    let base = gamma.network();
    let flows: Vec<usize> = pairs
        .par_iter()
        .map(|&(s, t)| base.clone().max_flow(s, t, k))
        .collect();
    let min_flow = flows.iter().copied().min().unwrap_or(k);
    let witness = pairs
        .iter()
        .zip(&flows)
        .find(|(_, &f)| f < k)
        .map(|(&(s, t), _)| flow_with_cut(gamma, base.clone(), s, t));
    QuasiConnectivity {
        connected: witness.is_none(),
        min_flow,
        pairs_checked: pairs.len(),
        witness,
    }
}

/// Node unions of the source-side and sink-side patches of a cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutSets {
    pub a: BTreeSet<NodeId>,
    pub b: BTreeSet<NodeId>,
}

impl CutSets {
    pub fn overlap(&self) -> usize {
        self.a.intersection(&self.b).count()
    }
}

/// `A = ∪ C_α` over source-side patches and `B = ∪ C_β` over sink-side
/// patches. Errors if `|A ∩ B|` differs from the flow value, which would
/// mean the flow or cut is wrong.
pub fn min_cut_patch_sets(flow: &FlowResult, gamma: &CorrespondenceGraph) -> Result<CutSets> {
    let union = |side: &BTreeSet<GammaVertex>| -> BTreeSet<NodeId> {
        side.iter()
            .filter_map(|v| match v {
                GammaVertex::Patch(p) => Some(*p),
                GammaVertex::Node(_) => None,
            })
            .flat_map(|p| gamma.members(p).iter().copied())
            .collect()
    };
    let sets = CutSets {
        a: union(&flow.cut_s),
        b: union(&flow.cut_t),
    };
    if sets.overlap() != flow.value {
        return Err(SnlError::Internal(format!(
            "cut overlap {} differs from flow value {}",
            sets.overlap(),
            flow.value
        )));
    }
    Ok(sets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RigidityStatus {
    Rigid,
    /// Augmentation found no clique to add across a deficient cut.
    Stalled,
    /// The test failed and augmentation was disabled.
    Flexible,
}

/// One appended clique; `i` and `j` are the cut-crossing pair it joins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmentation {
    pub i: NodeId,
    pub j: NodeId,
    pub clique_size: usize,
}

#[derive(Debug, Clone)]
pub struct AugmentOptions {
    pub schedule: PairSchedule,
    pub pgd: PgdParams,
    /// Upper bound on appended cliques; `None` allows one per node.
    pub max_rounds: Option<usize>,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            schedule: PairSchedule::Anchored,
            pgd: PgdParams::default(),
            max_rounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub cfg: Configuration,
    pub status: RigidityStatus,
    pub augmentations: Vec<Augmentation>,
    /// Minimum flow over the final round's checked pairs, capped at `d + 1`.
    pub quasi_k: usize,
    /// Pairs checked over all rounds.
    pub pairs_checked: usize,
}

/// Appends cliques until the correspondence graph is quasi
/// `(d+1)`-connected, or no cut-crossing pair admits a clique of at least
/// `d + 1` members.
pub fn augment_configuration(cfg: &Configuration, g: &MeasurementGraph, d: usize, opts: &AugmentOptions) -> Result<AugmentOutcome> {
    let k = d + 1;
    let mut cfg = cfg.clone();
    let mut augmentations = Vec::new();
    let mut pairs_checked = 0;
    let max_rounds = opts.max_rounds.unwrap_or(cfg.n_nodes);
    loop {
        let gamma = build_correspondence_graph(&cfg);
        let test = is_quasi_k_connected(&gamma, k, opts.schedule);
        pairs_checked += test.pairs_checked;
        let Some(witness) = test.witness else {
            return Ok(AugmentOutcome {
                cfg,
                status: RigidityStatus::Rigid,
                augmentations,
                quasi_k: test.min_flow,
                pairs_checked,
            });
        };
        let stalled = |cfg: Configuration, augmentations| AugmentOutcome {
            cfg,
            status: RigidityStatus::Stalled,
            augmentations,
            quasi_k: test.min_flow,
            pairs_checked,
        };
        if augmentations.len() >= max_rounds {
            return Ok(stalled(cfg, augmentations));
        }
        let sets = min_cut_patch_sets(&witness, &gamma)?;
        let only_a: Vec<NodeId> = sets.a.difference(&sets.b).copied().collect();
        let only_b: Vec<NodeId> = sets.b.difference(&sets.a).copied().collect();
        let found = only_a.iter().find_map(|&i| {
            only_b.iter().find_map(|&j| {
                clique_through_pair(g, i, j, &opts.pgd)
                    .filter(|c| c.len() >= k)
                    .map(|c| (i, j, c))
            })
        });
        match found {
            Some((i, j, clique)) => {
                log::debug!("augmenting with clique of {} through ({i}, {j})", clique.len());
                augmentations.push(Augmentation {
                    i,
                    j,
                    clique_size: clique.len(),
                });
                cfg.patches.push(clique);
            }
            None => return Ok(stalled(cfg, augmentations)),
        }
    }
}

/// Serializable summary of the rigidity stage; node ids are one-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub quasi_k: usize,
    pub pairs_checked: usize,
    pub augmentations: Vec<AugmentationRecord>,
    pub status: RigidityStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentationRecord {
    pub i: NodeId,
    pub j: NodeId,
    pub clique_size: usize,
}

impl From<&AugmentOutcome> for RigidityReport {
    fn from(o: &AugmentOutcome) -> Self {
        Self {
            quasi_k: o.quasi_k,
            pairs_checked: o.pairs_checked,
            augmentations: o
                .augmentations
                .iter()
                .map(|a| AugmentationRecord {
                    i: a.i + 1,
                    j: a.j + 1,
                    clique_size: a.clique_size,
                })
                .collect(),
            status: o.status,
        }
    }
}

/// A second solution of the registration problem for a configuration whose
/// correspondence graph has a cut of size `k ≤ d`: patches on the side of
/// the cut without the anchor patch are mirrored across the affine hull of
/// the cut nodes, which fixes every cut node. Returns moved positions for
/// all nodes, or `None` when the cut is too large to flex.
pub fn flex_witness(gamma: &CorrespondenceGraph, flow: &FlowResult, truth: &[Point], d: usize) -> Option<Vec<Point>> {
    let sets = min_cut_patch_sets(flow, gamma).ok()?;
    if flow.value > d {
        return None;
    }
    let anchor_on_sink = gamma
        .anchor_patch
        .is_some_and(|p| flow.cut_t.contains(&GammaVertex::Patch(p)));
    let (fixed, moving) = if anchor_on_sink { (&sets.b, &sets.a) } else { (&sets.a, &sets.b) };
    let cut: Vec<NodeId> = sets.a.intersection(&sets.b).copied().collect();

    let (rotation, translation) = if cut.is_empty() {
        (-DMatrix::<f64>::identity(d, d), Point::zeros(d))
    } else {
        let base = &truth[cut[0]];
        let spans = DMatrix::from_columns(
            &cut[1..]
                .iter()
                .map(|&v| &truth[v] - base)
                .collect::<Vec<_>>(),
        );
        // reflect the orthogonal complement of the span of the cut
        let mut reflect = -DMatrix::<f64>::identity(d, d);
        if spans.ncols() > 0 {
            let svd = spans.svd(true, false);
            let u = svd.u.expect("requested");
            for (c, &s) in svd.singular_values.iter().enumerate() {
                if s > 1e-12 {
                    let col = u.column(c);
                    reflect += 2.0 * &col * col.transpose();
                }
            }
        }
        let t = base - &reflect * base;
        (reflect, t)
    };
    Some(
        truth
            .iter()
            .enumerate()
            .map(|(v, p)| {
                if moving.contains(&v) && !fixed.contains(&v) {
                    &rotation * p + &translation
                } else {
                    p.clone()
                }
            })
            .collect(),
    )
}
