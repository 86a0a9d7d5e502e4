use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::{GraphBuilder, MeasurementGraph, Point};
use crate::error::{Result, SnlError};

/// ChaCha stream used for node placement.
const POSITION_STREAM: u64 = 0;
/// ChaCha stream used for measurement noise.
const NOISE_STREAM: u64 = 1;

/// Random geometric graph on the cube `[-0.5, 0.5]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RggConfig {
    pub dim: usize,
    pub n_sensors: usize,
    /// Total number of anchors, corner anchors included.
    pub n_anchors: usize,
    pub radio_range: f64,
    pub seed: u64,
    /// Pin the first `2^dim` anchors to the corners of the cube.
    pub corner_anchors: bool,
}

impl RggConfig {
    pub fn new(n_sensors: usize, n_anchors: usize, radio_range: f64, seed: u64) -> Self {
        Self {
            dim: 2,
            n_sensors,
            n_anchors,
            radio_range,
            seed,
            corner_anchors: false,
        }
    }

    pub fn with_corner_anchors(mut self, on: bool) -> Self {
        self.corner_anchors = on;
        self
    }

    pub fn generate(&self) -> Result<MeasurementGraph> {
        if self.n_sensors == 0 || self.n_anchors == 0 {
            return Err(SnlError::InvalidInput(
                "need at least one sensor and one anchor".into(),
            ));
        }
        if !(self.radio_range > 0.0) {
            return Err(SnlError::InvalidInput(format!(
                "radio range must be positive, got {}",
                self.radio_range
            )));
        }
        let corners = if self.corner_anchors { 1usize << self.dim } else { 0 };
        if corners > self.n_anchors {
            return Err(SnlError::InvalidInput(format!(
                "{} corner anchors requested but only {} anchors in total",
                corners, self.n_anchors
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(POSITION_STREAM);
        let uniform_point = |rng: &mut ChaCha20Rng| {
            Point::from_fn(self.dim, |_, _| rng.random::<f64>() - 0.5)
        };
        let sensors: Vec<Point> = (0..self.n_sensors).map(|_| uniform_point(&mut rng)).collect();
        let mut anchors: Vec<Point> = (0..corners)
            .map(|c| Point::from_fn(self.dim, |k, _| if (c >> k) & 1 == 1 { 0.5 } else { -0.5 }))
            .collect();
        anchors.extend((corners..self.n_anchors).map(|_| uniform_point(&mut rng)));
        graph_from_points(self.dim, sensors, anchors, self.radio_range)
    }
}

/// Convenience wrapper for planar instances.
pub fn generate_rgg(
    n_sensors: usize,
    n_anchors: usize,
    radio_range: f64,
    seed: u64,
    corner_anchors: bool,
) -> Result<MeasurementGraph> {
    RggConfig::new(n_sensors, n_anchors, radio_range, seed)
        .with_corner_anchors(corner_anchors)
        .generate()
}

/// Exact-distance graph over the given points: an edge joins every
/// sensor–sensor or sensor–anchor pair within `radio_range`.
pub fn graph_from_points(
    dim: usize,
    sensors: Vec<Point>,
    anchors: Vec<Point>,
    radio_range: f64,
) -> Result<MeasurementGraph> {
    let n = sensors.len();
    let mut b = GraphBuilder::new(dim, n, anchors.clone(), radio_range)?;
    let all: Vec<Point> = sensors.into_iter().chain(anchors).collect();
    for i in 0..n {
        for j in i + 1..all.len() {
            let d = (&all[i] - &all[j]).norm();
            if d <= radio_range && d > 0.0 {
                b.add_measurement(i, j, d)?;
            }
        }
    }
    b.ground_truth(all)?;
    Ok(b.build())
}

/// Multiplicative Gaussian noise: each ordered pair gets
/// `|1 + ε| · true distance` with `ε ~ N(0, η²)`, and the two directions
/// of a pair are averaged. Anchor positions stay exact.
pub fn apply_noise(g: &MeasurementGraph, eta: f64, seed: u64) -> Result<MeasurementGraph> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(SnlError::InvalidInput(format!("noise level must be ≥ 0, got {eta}")));
    }
    let truth = g
        .ground_truth()
        .ok_or_else(|| SnlError::InvalidInput("noise model needs ground truth".into()))?;
    if eta == 0.0 {
        return Ok(g.clone());
    }
    let normal = Normal::new(0.0, eta).expect("valid standard deviation");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let mut b = GraphBuilder::new(g.dim(), g.n_sensors(), g.anchor_positions().to_vec(), g.radio_range())?;
    for (i, j, _) in g.edges() {
        let exact = (&truth[i] - &truth[j]).norm();
        let forward = (1.0 + normal.sample(&mut rng)).abs() * exact;
        let backward = (1.0 + normal.sample(&mut rng)).abs() * exact;
        b.add_measurement(i, j, forward)?;
        b.add_measurement(j, i, backward)?;
    }
    b.ground_truth(truth.to_vec())?;
    Ok(b.build())
}
