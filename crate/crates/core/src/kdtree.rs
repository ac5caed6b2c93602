//! A static 3-d tree with incremental nearest-neighbour retrieval.
//!
//! [`KdTree::nearest_iter`] yields every indexed point in non-decreasing
//! distance from the query, breaking exact distance ties by ascending point
//! index. Retrieval is best-first over a single heap holding both subtrees
//! (keyed by the distance to their bounding box) and points, so the caller
//! can stop after any number of results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl Aabb {
    fn of(points: &[[f64; 3]], idx: &[usize]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in idx {
            for a in 0..3 {
                min[a] = min[a].min(points[i][a]);
                max[a] = max[a].max(points[i][a]);
            }
        }
        Self { min, max }
    }

    fn dist2(&self, q: &[f64; 3]) -> f64 {
        let mut d = 0.0;
        for ((&x, &lo), &hi) in q.iter().zip(&self.min).zip(&self.max) {
            let v = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    fn widest_axis(&self) -> usize {
        let spread = |a: usize| self.max[a] - self.min[a];
        (0..3)
            .max_by(|&a, &b| spread(a).total_cmp(&spread(b)).then(b.cmp(&a)))
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

/// Squared Euclidean distance.
#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; 3] {
        &self.points[index]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let bounds = Aabb::of(&self.points, &self.order[start..end]);
        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = bounds.widest_axis();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    /// All points ordered by distance to `query`, ties by index.
    pub fn nearest_iter(&self, query: [f64; 3]) -> NearestIter<'_> {
        let mut heap = BinaryHeap::new();
        if !self.nodes.is_empty() {
            heap.push(Candidate {
                dist2: self.nodes[0].bounds.dist2(&query),
                item: Item::Node(0),
            });
        }
        NearestIter {
            tree: self,
            query,
            heap,
        }
    }

    /// The `k` nearest points as `(index, distance)`.
    pub fn knn(&self, query: [f64; 3], k: usize) -> Vec<(usize, f64)> {
        self.nearest_iter(query).take(k).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Node(usize),
    Point(usize),
}

impl Item {
    // Nodes sort before points at equal distance so a subtree that may hold
    // an equally distant, lower-indexed point is opened first.
    fn rank(&self) -> (u8, usize) {
        match *self {
            Item::Node(n) => (0, n),
            Item::Point(p) => (1, p),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist2: f64,
    item: Item,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist2
            .total_cmp(&self.dist2)
            .then_with(|| other.item.rank().cmp(&self.item.rank()))
    }
}

pub struct NearestIter<'a> {
    tree: &'a KdTree,
    query: [f64; 3],
    heap: BinaryHeap<Candidate>,
}

impl Iterator for NearestIter<'_> {
    /// `(point index, Euclidean distance)`
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(c) = self.heap.pop() {
            match c.item {
                Item::Point(p) => return Some((p, c.dist2.sqrt())),
                Item::Node(n) => match self.tree.nodes[n].kind {
                    NodeKind::Leaf { start, end } => {
                        for &p in &self.tree.order[start..end] {
                            self.heap.push(Candidate {
                                dist2: dist2(&self.query, &self.tree.points[p]),
                                item: Item::Point(p),
                            });
                        }
                    }
                    NodeKind::Split { left, right } => {
                        for child in [left, right] {
                            self.heap.push(Candidate {
                                dist2: self.tree.nodes[child].bounds.dist2(&self.query),
                                item: Item::Node(child),
                            });
                        }
                    }
                },
            }
        }
        None
    }
}
