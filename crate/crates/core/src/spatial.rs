//! A k-dimensional binary search tree over previously accepted samples.
//!
//! Points are inserted in chain order without rebalancing (MCMC order is
//! close enough to random for logarithmic expected depth), and
//! nearest-neighbor queries are exact: hyperplane pruning only skips
//! subtrees that provably cannot beat the current best squared distance.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Node {
    point: Vec<f64>,
    axis: usize,
    left: Option<u32>,
    right: Option<u32>,
}

/// k-d tree supporting insertion and exact nearest-neighbor distance queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    dimension: usize,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        SpatialIndex { dimension, nodes: Vec::new() }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Inserts a copy of `point`. Duplicates are allowed and count toward
    /// [`len`](SpatialIndex::len). Ties on the splitting axis go left.
    pub fn insert(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: point.len() });
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if self.nodes.is_empty() {
            self.nodes.push(Node { point: point.to_vec(), axis: 0, left: None, right: None });
            return Ok(());
        }
        let new_index = self.nodes.len() as u32;
        let mut cur = 0usize;
        loop {
            let axis = self.nodes[cur].axis;
            let go_left = point[axis] <= self.nodes[cur].point[axis];
            let slot = if go_left { self.nodes[cur].left } else { self.nodes[cur].right };
            match slot {
                Some(child) => cur = child as usize,
                None => {
                    let child_axis = (axis + 1) % self.dimension;
                    self.nodes.push(Node {
                        point: point.to_vec(),
                        axis: child_axis,
                        left: None,
                        right: None,
                    });
                    if go_left {
                        self.nodes[cur].left = Some(new_index);
                    } else {
                        self.nodes[cur].right = Some(new_index);
                    }
                    return Ok(());
                }
            }
        }
    }

    /// Minimum squared L2 distance from `query` to any stored point.
    /// An empty index returns `+inf` ("unexplored everywhere").
    pub fn nearest_sq_distance(&self, query: &[f64]) -> Result<f64> {
        self.nearest_sq_distance_counted(query).map(|(d, _)| d)
    }

    /// Like [`nearest_sq_distance`](SpatialIndex::nearest_sq_distance) but
    /// also reports how many nodes the search visited (for cost diagnostics).
    pub fn nearest_sq_distance_counted(&self, query: &[f64]) -> Result<(f64, usize)> {
        if query.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: query.len() });
        }
        if self.nodes.is_empty() {
            return Ok((f64::INFINITY, 0));
        }
        let mut best = f64::INFINITY;
        let mut visited = 0usize;
        self.search(0, query, &mut best, &mut visited);
        Ok((best, visited))
    }

    fn search(&self, idx: usize, query: &[f64], best: &mut f64, visited: &mut usize) {
        let node = &self.nodes[idx];
        *visited += 1;
        let d2 = sq_distance(query, &node.point);
        if d2 < *best {
            *best = d2;
        }
        let diff = query[node.axis] - node.point[node.axis];
        let (near, far) =
            if diff <= 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        if let Some(child) = near {
            self.search(child as usize, query, best, visited);
        }
        // Points on the far side are at least diff² away along this axis.
        if let Some(child) = far {
            if diff * diff < *best {
                self.search(child as usize, query, best, visited);
            }
        }
    }

    #[cfg(test)]
    fn check_axis_ordering(&self) -> bool {
        fn walk(nodes: &[Node], idx: usize) -> bool {
            let node = &nodes[idx];
            if let Some(l) = node.left {
                let child = &nodes[l as usize];
                if child.point[node.axis] > node.point[node.axis] {
                    return false;
                }
                if !walk(nodes, l as usize) {
                    return false;
                }
            }
            if let Some(r) = node.right {
                let child = &nodes[r as usize];
                if child.point[node.axis] <= node.point[node.axis] {
                    return false;
                }
                if !walk(nodes, r as usize) {
                    return false;
                }
            }
            true
        }
        self.nodes.is_empty() || walk(&self.nodes, 0)
    }
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
