use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf,
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// A tree node covering `indices[start..end]` of its [`KdTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub start: usize,
    pub end: usize,
    pub kind: NodeKind,
}

impl Node {
    pub fn count(&self) -> usize {
        self.end - self.start
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    /// Squared distance from `q` to the nearest point of the bounding box.
    #[inline]
    pub fn min_sq_dist(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&lo, &hi), &v) in self.lo.iter().zip(&self.hi).zip(q) {
            let d = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            acc += d * d;
        }
        acc
    }

    /// Squared distance from `q` to the farthest corner of the bounding box.
    #[inline]
    pub fn max_sq_dist(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&lo, &hi), &v) in self.lo.iter().zip(&self.hi).zip(q) {
            let d = (v - lo).abs().max((hi - v).abs());
            acc += d * d;
        }
        acc
    }
}

/// Axis-aligned space-partitioning tree over the rows of a borrowed matrix.
///
/// Internal nodes split at the lower median of their widest dimension (ties
/// between dimensions go to the lowest index; ties between equal
/// coordinates are broken by point index), so the structure is a pure
/// function of the input.
#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a Matrix,
    indices: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a Matrix, leaf_size: usize) -> Result<Self> {
        if leaf_size == 0 {
            return Err(Error::validation("leaf size must be at least 1"));
        }
        if !points.is_finite() {
            return Err(Error::validation("tree points must be finite"));
        }
        let mut tree = Self { points, indices: (0..points.rows()).collect(), nodes: Vec::new(), leaf_size };
        if points.rows() > 0 {
            tree.build_node(0, points.rows());
        }
        Ok(tree)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let d = self.points.cols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.indices[start..end] {
            for (j, &v) in self.points.row(i).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let id = self.nodes.len();
        let count = end - start;
        if count <= self.leaf_size || d == 0 {
            self.nodes.push(Node { lo, hi, start, end, kind: NodeKind::Leaf });
            return id;
        }

        let mut dim = 0;
        for j in 1..d {
            if hi[j] - lo[j] > hi[dim] - lo[dim] {
                dim = j;
            }
        }
        let mid = (count - 1) / 2;
        let points = self.points;
        let key =
            |a: &usize, b: &usize| -> Ordering { points.row(*a)[dim].total_cmp(&points.row(*b)[dim]).then(a.cmp(b)) };
        self.indices[start..end].select_nth_unstable_by(mid, key);
        let value = points.row(self.indices[start + mid])[dim];

        self.nodes.push(Node { lo, hi, start, end, kind: NodeKind::Leaf });
        let left = self.build_node(start, start + mid + 1);
        let right = self.build_node(start + mid + 1, end);
        self.nodes[id].kind = NodeKind::Split { dim, value, left, right };
        id
    }

    pub fn points(&self) -> &'a Matrix {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> Option<&Node> {
        self.nodes.first()
    }

    /// Original row indices held by `node`.
    pub fn node_points(&self, node: &Node) -> &[usize] {
        &self.indices[node.start..node.end]
    }

    /// Structural audit: leaves partition the point set, boxes contain
    /// their points, and splits separate children by the split value.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.len();
        if n == 0 {
            return if self.nodes.is_empty() { Ok(()) } else { Err("empty tree has nodes".into()) };
        }
        let mut seen = vec![0usize; n];
        for (id, node) in self.nodes.iter().enumerate() {
            for &i in self.node_points(node) {
                let row = self.points.row(i);
                for (j, &v) in row.iter().enumerate() {
                    if v < node.lo[j] || v > node.hi[j] {
                        return Err(format!("node {id} box misses point {i}"));
                    }
                }
            }
            match node.kind {
                NodeKind::Leaf => {
                    if node.count() > self.leaf_size {
                        return Err(format!("leaf {id} holds {} > {}", node.count(), self.leaf_size));
                    }
                    for &i in self.node_points(node) {
                        seen[i] += 1;
                    }
                }
                NodeKind::Split { dim, value, left, right } => {
                    let (l, r) = (&self.nodes[left], &self.nodes[right]);
                    if l.start != node.start || l.end != r.start || r.end != node.end {
                        return Err(format!("node {id} children do not tile its range"));
                    }
                    if self.node_points(l).iter().any(|&i| self.points.row(i)[dim] > value)
                        || self.node_points(r).iter().any(|&i| self.points.row(i)[dim] < value)
                    {
                        return Err(format!("node {id} split on dim {dim} at {value} is violated"));
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(format!("point {i} appears in {} leaves", seen[i]));
        }
        Ok(())
    }

    pub(crate) fn check_queries(&self, queries: &Matrix) -> Result<()> {
        if self.is_empty() {
            return Err(Error::validation("reference set is empty"));
        }
        if queries.cols() != self.dim() {
            return Err(Error::shape(format!(
                "queries have {} dimensions, references have {}",
                queries.cols(),
                self.dim()
            )));
        }
        if !queries.is_finite() {
            return Err(Error::validation("queries must be finite"));
        }
        Ok(())
    }
}

pub fn kdtree_build(points: &Matrix, leaf_size: usize) -> Result<KdTree<'_>> {
    KdTree::build(points, leaf_size)
}
