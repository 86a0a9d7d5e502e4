//! Maximal-clique cover of the measurement graph.
//!
//! A clique is first located inside the one-hop neighbourhood of a vertex
//! by projected gradient ascent on the regularized Motzkin–Straus program
//! `max xᵀ(A + ½I)x` over the unit simplex, whose strict local maxima are
//! the characteristic vectors of maximal cliques. The rounded support is
//! then grown greedily into a maximal clique of the whole graph.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::graph::{InducedSubgraph, MeasurementGraph, NodeId};
use crate::numerics::project_simplex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Sorted ascending.
    pub members: Vec<NodeId>,
    /// Vertex the clique was grown for.
    pub source: NodeId,
}

impl Clique {
    pub fn new(mut members: Vec<NodeId>, source: NodeId) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members, source }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &Clique) -> bool {
        self.members.iter().all(|&v| other.contains(v))
    }

    /// All-pairs edge check against `g`.
    pub fn is_clique_in(&self, g: &MeasurementGraph) -> bool {
        self.members
            .iter()
            .enumerate()
            .all(|(k, &u)| self.members[k + 1..].iter().all(|&v| g.has_edge(u, v)))
    }

    /// No vertex outside the clique is adjacent to every member.
    pub fn is_maximal_in(&self, g: &MeasurementGraph) -> bool {
        let Some(&first) = self.members.first() else {
            return false;
        };
        !g.neighbor_ids(first)
            .any(|v| !self.contains(v) && self.members.iter().all(|&u| g.has_edge(u, v)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgdParams {
    /// Ascent step; `None` selects `1 / (2‖A + ½I‖_∞)`.
    pub step: Option<f64>,
    pub max_iter: usize,
    /// Support threshold used when rounding the limit point.
    pub tol: f64,
}

impl Default for PgdParams {
    fn default() -> Self {
        Self {
            step: None,
            max_iter: 500,
            tol: 1e-4,
        }
    }
}

/// Locates a clique of `sub` by projected gradient ascent. `source`, when
/// it belongs to `sub`, gets twice the weight of the other vertices in the
/// starting point. Returns global ids, sorted.
pub fn find_clique_pgd(sub: &InducedSubgraph, source: Option<NodeId>, params: &PgdParams) -> Vec<NodeId> {
    let n = sub.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return sub.vertices.clone();
    }
    let row_sum = |a: usize| 0.5 + (0..n).filter(|&b| sub.is_edge(a, b)).count() as f64;
    let inf_norm = (0..n).map(row_sum).fold(0.0, f64::max);
    let step = params.step.unwrap_or(1.0 / (2.0 * inf_norm));

    let mut x = vec![1.0; n];
    if let Some(s) = source.and_then(|s| sub.local_index(s)) {
        x[s] = 2.0;
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);

    let mut y = vec![0.0; n];
    for _ in 0..params.max_iter {
        // y = x + step * 2 (A + ½I) x
        for a in 0..n {
            let mut ax = 0.5 * x[a];
            for b in 0..n {
                if sub.is_edge(a, b) {
                    ax += x[b];
                }
            }
            y[a] = x[a] + 2.0 * step * ax;
        }
        let next = project_simplex(&y);
        let change = next
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        x = next;
        if change < 1e-14 {
            break;
        }
    }

    let mut support: Vec<usize> = (0..n).filter(|&a| x[a] > params.tol).collect();
    if support.is_empty() {
        // the simplex always has mass somewhere; keep the heaviest vertex
        let best = (0..n).max_by(|&a, &b| x[a].total_cmp(&x[b]).then(b.cmp(&a))).unwrap();
        support.push(best);
    }
    while !sub.is_clique(&support) {
        // drop the lightest vertex; ties drop the larger id
        let (k, _) = support
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| x[a].total_cmp(&x[b]).then(b.cmp(&a)))
            .unwrap();
        support.remove(k);
    }
    support.into_iter().map(|a| sub.vertices[a]).collect()
}

/// Greedily appends vertices, scanned in ascending id order, that are
/// adjacent to every current member.
pub fn expand_to_maximal(c: &Clique, g: &MeasurementGraph) -> Clique {
    let Some(&first) = c.members.first() else {
        return c.clone();
    };
    let mut members = c.members.clone();
    for v in g.neighbor_ids(first) {
        if members.binary_search(&v).is_err() && members.iter().all(|&u| g.has_edge(u, v)) {
            let pos = members.binary_search(&v).unwrap_err();
            members.insert(pos, v);
        }
    }
    Clique {
        members,
        source: c.source,
    }
}

/// Maximal clique containing `i`, searched in its neighbourhood graph.
pub fn clique_for_vertex(g: &MeasurementGraph, i: NodeId, params: &PgdParams) -> Clique {
    let sub = g.neighborhood_graph(i);
    let mut members = find_clique_pgd(&sub, Some(i), params);
    // every vertex of the neighbourhood graph is adjacent to i
    if let Err(pos) = members.binary_search(&i) {
        members.insert(pos, i);
    }
    expand_to_maximal(&Clique { members, source: i }, g)
}

/// Maximal clique containing both `i` and `j`, searched in their common
/// neighbourhood graph. `None` when the two are not adjacent.
pub fn clique_through_pair(g: &MeasurementGraph, i: NodeId, j: NodeId, params: &PgdParams) -> Option<Clique> {
    if i == j || !g.has_edge(i, j) {
        return None;
    }
    let sub = g.common_neighborhood_graph(i, j);
    let mut members = find_clique_pgd(&sub, Some(i), params);
    for v in [i, j] {
        if let Err(pos) = members.binary_search(&v) {
            members.insert(pos, v);
        }
    }
    Some(expand_to_maximal(&Clique { members, source: i }, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueCover {
    pub cliques: Vec<Clique>,
    pub covered: BTreeSet<NodeId>,
    /// Indices into `cliques` of cliques with fewer than `dim + 1` members.
    pub undersized: Vec<usize>,
}

impl CliqueCover {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Text dump, one `clique <k>: <members…>` line per clique with
    /// one-based ids.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.cliques.iter().enumerate() {
            let ids: Vec<String> = c.members.iter().map(|v| (v + 1).to_string()).collect();
            out.push_str(&format!("clique {}: {}\n", k + 1, ids.join(" ")));
        }
        out
    }
}

/// One maximal clique per vertex not already covered by a clique of at
/// least `dim + 1` members, vertices visited in ascending order. Redundant
/// cliques (subsets of retained ones) are discarded.
pub fn build_clique_cover(g: &MeasurementGraph, params: &PgdParams) -> CliqueCover {
    let n = g.n_nodes();
    let need = g.dim() + 1;
    let candidates: Vec<Clique> = (0..n)
        .into_par_iter()
        .map(|i| clique_for_vertex(g, i, params))
        .collect();

    let mut well_covered = vec![false; n];
    let mut cliques: Vec<Clique> = Vec::new();
    for cand in candidates {
        if well_covered[cand.source] {
            continue;
        }
        if cliques.iter().any(|c| cand.is_subset_of(c)) {
            continue;
        }
        cliques.retain(|c| !c.is_subset_of(&cand));
        if cand.len() >= need {
            for &v in &cand.members {
                well_covered[v] = true;
            }
        }
        cliques.push(cand);
    }
    let covered = cliques.iter().flat_map(|c| c.members.iter().copied()).collect();
    let undersized = cliques
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() < need)
        .map(|(k, _)| k)
        .collect();
    CliqueCover {
        cliques,
        covered,
        undersized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_rgg, GraphBuilder};

    fn graph(n: usize, edges: &[(usize, usize)]) -> MeasurementGraph {
        let mut b = GraphBuilder::new(2, n, vec![], 1.0).unwrap();
        for &(i, j) in edges {
            b.add_measurement(i, j, 1.0).unwrap();
        }
        b.build()
    }

    fn complete(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    /// Brute-force clique number.
    fn omega(g: &MeasurementGraph) -> usize {
        let n = g.n_nodes();
        assert!(n <= 20);
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if vs.len() > best && vs.iter().enumerate().all(|(k, &u)| vs[k + 1..].iter().all(|&v| g.has_edge(u, v))) {
                best = vs.len();
            }
        }
        best
    }

    #[test]
    fn pgd_on_complete_graph() {
        let g = graph(5, &complete(5));
        let sub = g.induced((0..5).collect());
        assert_eq!(find_clique_pgd(&sub, None, &PgdParams::default()), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn pgd_on_single_edge() {
        let g = graph(2, &[(0, 1)]);
        let sub = g.induced(vec![0, 1]);
        assert_eq!(find_clique_pgd(&sub, None, &PgdParams::default()), vec![0, 1]);
    }

    #[test]
    fn pgd_on_k4_with_pendant() {
        let mut edges = complete(4);
        edges.push((3, 4));
        let g = graph(5, &edges);
        assert_eq!(omega(&g), 4);
        let sub = g.induced((0..5).collect());
        assert_eq!(find_clique_pgd(&sub, None, &PgdParams::default()), vec![0, 1, 2, 3]);
    }

    #[test]
    fn expansion_examples() {
        let g = graph(5, &complete(4));
        let k4 = Clique::new(vec![0, 1, 2, 3], 0);
        assert_eq!(expand_to_maximal(&k4, &g), k4);
        let grown = expand_to_maximal(&Clique::new(vec![1, 2], 1), &g);
        assert_eq!(grown.members, vec![0, 1, 2, 3]);
        assert!(grown.is_maximal_in(&g));
        // source vertex missing but adjacent to all members
        let mut edges = complete(3);
        edges.extend([(0, 3), (1, 3), (2, 3)]);
        let g = graph(4, &edges);
        let c = clique_for_vertex(&g, 3, &PgdParams::default());
        assert!(c.contains(3));
        assert_eq!(c.members, vec![0, 1, 2, 3]);
    }

    #[test]
    fn cover_of_complete_graph() {
        let g = graph(6, &complete(6));
        let cover = build_clique_cover(&g, &PgdParams::default());
        assert_eq!(cover.len(), 1);
        assert_eq!(cover.cliques[0].members, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn cover_of_two_triangles() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let cover = build_clique_cover(&g, &PgdParams::default());
        assert_eq!(cover.len(), 2);
        assert!(cover.undersized.is_empty());
    }

    #[test]
    fn undersized_cliques_are_flagged() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let cover = build_clique_cover(&g, &PgdParams::default());
        assert_eq!(cover.len(), 3);
        assert_eq!(cover.undersized.len(), 3);
        assert_eq!(cover.covered.len(), 4);
    }

    #[test]
    fn pair_clique_requires_adjacency() {
        let g = graph(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert!(clique_through_pair(&g, 0, 3, &PgdParams::default()).is_none());
        let c = clique_through_pair(&g, 0, 1, &PgdParams::default()).unwrap();
        assert_eq!(c.members, vec![0, 1, 2]);
    }

    #[test]
    fn rgg_cover_invariants() {
        let g = generate_rgg(300, 20, 0.17, 8, false).unwrap();
        let cover = build_clique_cover(&g, &PgdParams::default());
        for c in &cover.cliques {
            assert!(c.is_clique_in(&g));
            assert!(c.is_maximal_in(&g));
        }
        for v in 0..g.n_sensors() {
            assert!(cover.covered.contains(&v), "sensor {v} uncovered");
        }
        for (a, ca) in cover.cliques.iter().enumerate() {
            for (b, cb) in cover.cliques.iter().enumerate() {
                if a != b {
                    assert!(!ca.is_subset_of(cb));
                }
            }
        }
    }

    #[test]
    fn near_maximum_on_small_geometric_graphs() {
        // A single barycenter start can settle on a smaller maximal clique,
        // so the bound is checked as a rate.
        let mut misses = Vec::new();
        let mut total = 0;
        for (n, k, r) in [(16, 4, 0.45), (12, 3, 0.5), (16, 4, 0.6), (14, 2, 0.35)] {
            for seed in 0..100 {
                let g = generate_rgg(n, k, r, seed, false).unwrap();
                let w = omega(&g);
                let sub = g.induced((0..g.n_nodes()).collect());
                let found = find_clique_pgd(&sub, None, &PgdParams::default());
                let c = expand_to_maximal(&Clique::new(found, 0), &g);
                assert!(c.is_clique_in(&g));
                total += 1;
                if c.len() + 1 < w {
                    misses.push((n, seed));
                }
            }
        }
        assert!(misses.len() * 20 <= total, "{} misses out of {total}: {misses:?}", misses.len());
    }

    #[test]
    fn dump_format() {
        let g = graph(3, &complete(3));
        let cover = build_clique_cover(&g, &PgdParams::default());
        assert_eq!(cover.dump(), "clique 1: 1 2 3\n");
    }
}
