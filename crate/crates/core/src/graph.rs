//! Weighted undirected camera graph.
//!
//! Nodes are cameras, edges are the surviving match pairs. Each edge carries
//!
//! ```text
//! w_e(i, j) = exp(-k ‖p_i - p_j‖) / (1 - exp(-d_i · d_j))
//! ```
//!
//! and each node carries its hop-count betweenness centrality `w_n(i)`,
//! summed over unordered endpoint pairs. The per-camera sampling probability
//! is `max(p_min, w_n(i) / max_j w_n(j))`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraId, CameraPose, PoseSet, StateCode};
use crate::pairing::PairSet;
use crate::quadrant_filter::state_code;

/// Default lower clamp on sampling probabilities.
pub const DEFAULT_MIN_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeightParams {
    /// Distance decay.
    pub k: f64,
    /// Floor for the orientation denominator.
    pub epsilon: f64,
}

impl Default for EdgeWeightParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            epsilon: 1e-6,
        }
    }
}

impl EdgeWeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "k must be positive, got {}",
                self.k
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-3) {
            return Err(Error::InvalidParams(format!(
                "epsilon must lie in (0, 1e-3], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeight {
    pub value: f64,
    /// The denominator fell to `epsilon` or below (relative angle near or
    /// beyond 90°) and was replaced by `epsilon`.
    pub guarded: bool,
}

/// Edge weight from positions and directions; `distance_scale` multiplies
/// the Euclidean distance before the decay.
pub fn edge_weight_scaled(
    ci: &CameraPose,
    cj: &CameraPose,
    params: &EdgeWeightParams,
    distance_scale: f64,
) -> EdgeWeight {
    let dist = (ci.position - cj.position).norm() * distance_scale;
    let numerator = (-params.k * dist).exp();
    let dot = ci.direction.dot(&cj.direction);
    let denominator = 1.0 - (-dot).exp();
    if denominator > params.epsilon {
        EdgeWeight {
            value: numerator / denominator,
            guarded: false,
        }
    } else {
        EdgeWeight {
            value: numerator / params.epsilon,
            guarded: true,
        }
    }
}

pub fn edge_weight(ci: &CameraPose, cj: &CameraPose, params: &EdgeWeightParams) -> EdgeWeight {
    edge_weight_scaled(ci, cj, params, 1.0)
}

/// Plain adjacency lists over nodes `0..n`, neighbours sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self loop at {a}")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub count: usize,
    /// Component index per node, numbered in order of first appearance.
    pub labels: Vec<usize>,
}

impl Components {
    pub fn is_connected(&self) -> bool {
        self.count <= 1
    }
}

pub fn connectivity(adj: &Adjacency) -> Components {
    let n = adj.node_count();
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = count;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in adj.neighbors(v) {
                if labels[w] == usize::MAX {
                    labels[w] = count;
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    Components { count, labels }
}

/// Dependency of every node on paths out of `source` (one Brandes pass).
fn single_source_dependency(adj: &Adjacency, source: usize, acc: &mut [f64]) {
    let n = adj.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    dist[source] = 0;
    sigma[source] = 1.0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in adj.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        for &v in adj.neighbors(w) {
            if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
        }
        if w != source {
            acc[w] += delta[w];
        }
    }
}

const SOURCES_PER_TASK: usize = 32;

/// Hop-count betweenness over unordered endpoint pairs.
///
/// Sources are processed in fixed-size blocks and the block sums are added
/// in order, so the result does not depend on the thread count.
pub fn betweenness(adj: &Adjacency) -> Result<Vec<f64>> {
    let components = connectivity(adj);
    if !components.is_connected() {
        return Err(Error::Disconnected {
            components: components.count,
        });
    }
    let n = adj.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCES_PER_TASK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            for &s in chunk {
                single_source_dependency(adj, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // Every unordered pair was visited from both ends.
    total.iter_mut().for_each(|v| *v /= 2.0);
    Ok(total)
}

pub fn degree_centrality(adj: &Adjacency) -> Vec<f64> {
    (0..adj.node_count())
        .map(|v| adj.degree(v) as f64)
        .collect()
}

/// `max(p_min, w / max w)`; all-zero weights give a uniform 1.0.
pub fn sampling_probabilities(node_weights: &[f64], p_min: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p_min) {
        return Err(Error::InvalidParams(format!(
            "p_min must lie in [0, 1), got {p_min}"
        )));
    }
    if let Some(bad) = node_weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidInput(format!(
            "node weight {bad} is not a finite non-negative value"
        )));
    }
    let max = node_weights.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![1.0; node_weights.len()]);
    }
    Ok(node_weights.iter().map(|w| (w / max).max(p_min)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum NodeWeighting {
    #[default]
    Betweenness,
    Degree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub edge: EdgeWeightParams,
    pub min_probability: f64,
    pub weighting: NodeWeighting,
    /// Rescale distances so the median edge length is 1.
    pub normalize_positions: bool,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            edge: EdgeWeightParams::default(),
            min_probability: DEFAULT_MIN_PROBABILITY,
            weighting: NodeWeighting::Betweenness,
            normalize_positions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub a: CameraId,
    pub b: CameraId,
    pub weight: f64,
    pub guarded: bool,
    /// State code of `(a, b)` with `a < b`.
    pub state: StateCode,
}

#[derive(Debug, Clone)]
pub struct CameraGraph {
    names: Vec<String>,
    adjacency: Adjacency,
    /// Sorted by `(a, b)`.
    edges: Vec<GraphEdge>,
    /// Per node, `(neighbour id, edge index)` sorted by id.
    incident: Vec<Vec<(CameraId, usize)>>,
    node_weights: Vec<f64>,
    probabilities: Vec<f64>,
    distance_scale: f64,
}

impl CameraGraph {
    pub fn build(poses: &PoseSet, pairs: &PairSet, params: &GraphParams) -> Result<Self> {
        params.edge.validate()?;
        let n = poses.len();
        for &(a, b) in pairs.keys() {
            poses.require(a)?;
            poses.require(b)?;
        }
        let distance_scale = if params.normalize_positions {
            median_edge_length(poses, pairs)
                .filter(|m| *m > 0.0)
                .map_or(1.0, |m| 1.0 / m)
        } else {
            1.0
        };

        let edges: Vec<GraphEdge> = pairs
            .keys()
            .map(|&(a, b)| {
                let (ci, cj) = (
                    &poses.as_slice()[a as usize - 1],
                    &poses.as_slice()[b as usize - 1],
                );
                let w = edge_weight_scaled(ci, cj, &params.edge, distance_scale);
                GraphEdge {
                    a,
                    b,
                    weight: w.value,
                    guarded: w.guarded,
                    state: state_code(ci, cj),
                }
            })
            .collect();

        let adjacency = Adjacency::from_edges(
            n,
            edges.iter().map(|e| (e.a as usize - 1, e.b as usize - 1)),
        )?;
        let mut incident = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            incident[e.a as usize - 1].push((e.b, idx));
            incident[e.b as usize - 1].push((e.a, idx));
        }
        for list in &mut incident {
            list.sort_unstable();
        }

        let node_weights = match params.weighting {
            NodeWeighting::Betweenness => betweenness(&adjacency)?,
            NodeWeighting::Degree => degree_centrality(&adjacency),
        };
        let probabilities = sampling_probabilities(&node_weights, params.min_probability)?;
        let guarded = edges.iter().filter(|e| e.guarded).count();
        if guarded > 0 {
            log::warn!("{guarded} edge(s) hit the denominator floor (relative angle >= 90°)");
        }

        Ok(Self {
            names: poses.iter().map(|p| p.name.clone()).collect(),
            adjacency,
            edges,
            incident,
            node_weights,
            probabilities,
            distance_scale,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, id: CameraId) -> Option<&str> {
        self.index(id).ok().map(|i| self.names[i].as_str())
    }

    fn index(&self, id: CameraId) -> Result<usize> {
        let i = (id as usize).wrapping_sub(1);
        if i < self.names.len() {
            Ok(i)
        } else {
            Err(Error::UnknownCamera(id))
        }
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn weight(&self, a: CameraId, b: CameraId) -> Option<f64> {
        let i = self.index(a).ok()?;
        self.incident[i]
            .binary_search_by_key(&b, |&(other, _)| other)
            .ok()
            .map(|pos| self.edges[self.incident[i][pos].1].weight)
    }

    /// `(neighbour, edge weight)` in ascending neighbour id.
    pub fn neighbors(&self, id: CameraId) -> Result<impl Iterator<Item = (CameraId, f64)> + '_> {
        let i = self.index(id)?;
        Ok(self.incident[i]
            .iter()
            .map(move |&(other, e)| (other, self.edges[e].weight)))
    }

    pub fn node_weight(&self, id: CameraId) -> Result<f64> {
        Ok(self.node_weights[self.index(id)?])
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn sampling_probability(&self, id: CameraId) -> Result<f64> {
        Ok(self.probabilities[self.index(id)?])
    }

    pub fn sampling_probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn guarded_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.guarded).count()
    }

    pub fn distance_scale(&self) -> f64 {
        self.distance_scale
    }

    pub fn components(&self) -> Components {
        connectivity(&self.adjacency)
    }

    /// Neighbour with the largest edge weight, lowest id on ties.
    pub fn target_camera(&self, id: CameraId) -> Result<CameraId> {
        target_camera(self.neighbors(id)?).ok_or(Error::IsolatedNode(id))
    }
}

/// Argmax over `(id, weight)`, taking the first of equal maxima.
/// Feed neighbours in ascending id order to prefer the lower id.
pub fn target_camera(neighbors: impl IntoIterator<Item = (CameraId, f64)>) -> Option<CameraId> {
    let mut best: Option<(CameraId, f64)> = None;
    for (id, w) in neighbors {
        match best {
            Some((_, bw)) if w <= bw => {}
            _ => best = Some((id, w)),
        }
    }
    best.map(|(id, _)| id)
}

fn median_edge_length(poses: &PoseSet, pairs: &PairSet) -> Option<f64> {
    let mut lengths: Vec<f64> = pairs
        .keys()
        .filter_map(|&(a, b)| Some((poses.get(a)?.position - poses.get(b)?.position).norm()))
        .collect();
    if lengths.is_empty() {
        return None;
    }
    lengths.sort_by(f64::total_cmp);
    let mid = lengths.len() / 2;
    Some(if lengths.len() % 2 == 1 {
        lengths[mid]
    } else {
        0.5 * (lengths[mid - 1] + lengths[mid])
    })
}
