//! Measurement graphs: nodes, range measurements and anchor positions.
//!
//! Node ids are zero-based inside the library. Sensors occupy
//! `0..n_sensors` and anchors `n_sensors..n_sensors + n_anchors`. The text
//! file format and CSV outputs use one-based ids.

mod generate;
mod io;

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Result, SnlError};

pub use generate::{apply_noise, generate_rgg, graph_from_points, RggConfig};
pub use io::{load_graph, load_points, parse_graph, save_graph, write_graph};

pub type NodeId = usize;

/// A location in `R^d`.
pub type Point = DVector<f64>;

/// Range measurements between nodes, plus the known anchor positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGraph {
    dim: usize,
    n_sensors: usize,
    radio_range: f64,
    anchor_positions: Vec<Point>,
    /// Sorted by neighbour id.
    adjacency: Vec<Vec<(NodeId, f64)>>,
    ground_truth: Option<Vec<Point>>,
}

impl MeasurementGraph {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_anchors(&self) -> usize {
        self.anchor_positions.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn is_anchor(&self, v: NodeId) -> bool {
        v >= self.n_sensors
    }

    pub fn anchor_ids(&self) -> std::ops::Range<NodeId> {
        self.n_sensors..self.n_nodes()
    }

    /// Position of an anchor node, `None` for sensors.
    pub fn anchor_position(&self, v: NodeId) -> Option<&Point> {
        v.checked_sub(self.n_sensors)
            .and_then(|k| self.anchor_positions.get(k))
    }

    pub fn anchor_positions(&self) -> &[Point] {
        &self.anchor_positions
    }

    /// Neighbours of `v` with their measured distances, sorted by id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[v]
    }

    pub fn neighbor_ids(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn distance(&self, i: NodeId, j: NodeId) -> Option<f64> {
        let row = self.adjacency.get(i)?;
        row.binary_search_by_key(&j, |&(u, _)| u)
            .ok()
            .map(|k| row[k].1)
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.distance(i, j).is_some()
    }

    /// Every edge once, as `(i, j, d_ij)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, d)| (i, j, d))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn ground_truth(&self) -> Option<&[Point]> {
        self.ground_truth.as_deref()
    }

    /// True sensor positions, when the graph was simulated.
    pub fn true_sensor_positions(&self) -> Option<&[Point]> {
        self.ground_truth.as_deref().map(|g| &g[..self.n_sensors])
    }

    /// Subgraph induced by `i` and its one-hop neighbours.
    pub fn neighborhood_graph(&self, i: NodeId) -> InducedSubgraph {
        let mut vertices: Vec<NodeId> = self.neighbor_ids(i).collect();
        vertices.push(i);
        vertices.sort_unstable();
        self.induced(vertices)
    }

    /// Subgraph induced by the intersection of the closed neighbourhoods
    /// of `i` and `j`.
    pub fn common_neighborhood_graph(&self, i: NodeId, j: NodeId) -> InducedSubgraph {
        let closed = |v: NodeId| {
            let mut s: Vec<NodeId> = self.neighbor_ids(v).collect();
            s.push(v);
            s.sort_unstable();
            s
        };
        let a = closed(i);
        let b = closed(j);
        let common = a
            .into_iter()
            .filter(|v| b.binary_search(v).is_ok())
            .collect();
        self.induced(common)
    }

    /// Subgraph induced by a sorted vertex list.
    pub fn induced(&self, vertices: Vec<NodeId>) -> InducedSubgraph {
        let n = vertices.len();
        let mut adj = vec![false; n * n];
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(u, v) {
                    adj[a * n + b] = true;
                    adj[b * n + a] = true;
                }
            }
        }
        InducedSubgraph { vertices, adj }
    }

    /// A copy with ground truth removed.
    pub fn without_ground_truth(&self) -> Self {
        Self {
            ground_truth: None,
            ..self.clone()
        }
    }
}

/// A small induced subgraph with dense local adjacency. Local index `a`
/// corresponds to global id `vertices[a]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedSubgraph {
    pub vertices: Vec<NodeId>,
    adj: Vec<bool>,
}

impl InducedSubgraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.len() + b]
    }

    pub fn local_index(&self, v: NodeId) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count() / 2
    }

    /// Whether the local vertex set forms a clique.
    pub fn is_clique(&self, local: &[usize]) -> bool {
        local
            .iter()
            .enumerate()
            .all(|(k, &a)| local[k + 1..].iter().all(|&b| self.is_edge(a, b)))
    }
}

/// Collects nodes and measurements, symmetrizing duplicates on `build`.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    dim: usize,
    n_sensors: usize,
    radio_range: f64,
    anchor_positions: Vec<Point>,
    measurements: BTreeMap<(NodeId, NodeId), (f64, usize)>,
    ground_truth: Option<Vec<Point>>,
}

impl GraphBuilder {
    pub fn new(dim: usize, n_sensors: usize, anchor_positions: Vec<Point>, radio_range: f64) -> Result<Self> {
        if dim == 0 {
            return Err(SnlError::InvalidInput("dimension must be positive".into()));
        }
        if !(radio_range > 0.0) || !radio_range.is_finite() {
            return Err(SnlError::InvalidInput(format!(
                "radio range must be positive and finite, got {radio_range}"
            )));
        }
        for (k, a) in anchor_positions.iter().enumerate() {
            check_point(a, dim, &format!("anchor {}", n_sensors + k))?;
        }
        Ok(Self {
            dim,
            n_sensors,
            radio_range,
            anchor_positions,
            measurements: BTreeMap::new(),
            ground_truth: None,
        })
    }

    fn n_nodes(&self) -> usize {
        self.n_sensors + self.anchor_positions.len()
    }

    /// Records a measurement. Repeated measurements of the same unordered
    /// pair are averaged. Anchor–anchor measurements carry no information
    /// and are dropped.
    pub fn add_measurement(&mut self, i: NodeId, j: NodeId, dist: f64) -> Result<()> {
        let n = self.n_nodes();
        if i >= n || j >= n {
            return Err(SnlError::InvalidInput(format!(
                "edge ({i}, {j}) references a node outside 0..{n}"
            )));
        }
        if i == j {
            return Err(SnlError::InvalidInput(format!("self edge at node {i}")));
        }
        if !(dist > 0.0) || !dist.is_finite() {
            return Err(SnlError::InvalidInput(format!(
                "edge ({i}, {j}) has non-positive or non-finite distance {dist}"
            )));
        }
        if i >= self.n_sensors && j >= self.n_sensors {
            return Ok(());
        }
        let key = (i.min(j), i.max(j));
        let e = self.measurements.entry(key).or_insert((0.0, 0));
        e.0 += dist;
        e.1 += 1;
        Ok(())
    }

    /// Full node positions (sensors then anchors). Anchor entries must agree
    /// with the anchor positions.
    pub fn ground_truth(&mut self, positions: Vec<Point>) -> Result<()> {
        if positions.len() != self.n_nodes() {
            return Err(SnlError::DimensionMismatch(format!(
                "ground truth has {} points for {} nodes",
                positions.len(),
                self.n_nodes()
            )));
        }
        for (v, p) in positions.iter().enumerate() {
            check_point(p, self.dim, &format!("truth {v}"))?;
        }
        self.ground_truth = Some(positions);
        Ok(())
    }

    pub fn build(self) -> MeasurementGraph {
        let n = self.n_nodes();
        let mut adjacency = vec![Vec::new(); n];
        for (&(i, j), &(sum, count)) in &self.measurements {
            let d = sum / count as f64;
            adjacency[i].push((j, d));
            adjacency[j].push((i, d));
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(u, _)| u);
        }
        MeasurementGraph {
            dim: self.dim,
            n_sensors: self.n_sensors,
            radio_range: self.radio_range,
            anchor_positions: self.anchor_positions,
            adjacency,
            ground_truth: self.ground_truth,
        }
    }
}

fn check_point(p: &Point, dim: usize, what: &str) -> Result<()> {
    if p.len() != dim {
        return Err(SnlError::DimensionMismatch(format!(
            "{what} has {} coordinates, expected {dim}",
            p.len()
        )));
    }
    if !p.iter().all(|c| c.is_finite()) {
        return Err(SnlError::InvalidInput(format!("{what} has non-finite coordinates")));
    }
    Ok(())
}
