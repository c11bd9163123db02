use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::trees::kdtree::{KdTree, NodeKind};

/// Per-query neighbor lists, row-major `m x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl Neighbors {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_queries(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn indices(&self, query: usize) -> &[usize] {
        &self.indices[query * self.k..(query + 1) * self.k]
    }

    pub fn distances(&self, query: usize) -> &[f64] {
        &self.distances[query * self.k..(query + 1) * self.k]
    }

    pub fn index_matrix(&self) -> Matrix {
        let data = self.indices.iter().map(|&i| i as f64).collect();
        Matrix::from_vec(self.num_queries(), self.k, data).expect("consistent shape")
    }

    pub fn distance_matrix(&self) -> Matrix {
        Matrix::from_vec(self.num_queries(), self.k, self.distances.clone()).expect("consistent shape")
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Nearest,
    Furthest,
}

/// Bounded candidate list kept sorted best-first. For nearest search "best"
/// is smaller squared distance, for furthest larger; equal distances rank
/// the lower point index first.
struct Candidates {
    k: usize,
    dir: Direction,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize, dir: Direction) -> Self {
        Self { k, dir, items: Vec::with_capacity(k + 1) }
    }

    #[inline]
    fn better(&self, a: (f64, usize), b: (f64, usize)) -> bool {
        match self.dir {
            Direction::Nearest => a.0 < b.0 || (a.0 == b.0 && a.1 < b.1),
            Direction::Furthest => a.0 > b.0 || (a.0 == b.0 && a.1 < b.1),
        }
    }

    #[inline]
    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    /// Squared distance of the current k-th candidate.
    #[inline]
    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::NAN, |c| c.0)
    }

    fn offer(&mut self, cand: (f64, usize)) {
        if self.full() && !self.better(cand, *self.items.last().unwrap()) {
            return;
        }
        let pos = self.items.iter().position(|&c| self.better(cand, c)).unwrap_or(self.items.len());
        self.items.insert(pos, cand);
        if self.items.len() > self.k {
            self.items.pop();
        }
    }
}

impl KdTree<'_> {
    /// Exact k nearest neighbors of each query row, ascending distance,
    /// ties to the lower reference index.
    pub fn knn(&self, queries: &Matrix, k: usize) -> Result<Neighbors> {
        self.search(queries, k, Direction::Nearest)
    }

    /// Exact k furthest neighbors of each query row, descending distance,
    /// ties to the lower reference index.
    pub fn kfn(&self, queries: &Matrix, k: usize) -> Result<Neighbors> {
        self.search(queries, k, Direction::Furthest)
    }

    fn search(&self, queries: &Matrix, k: usize, dir: Direction) -> Result<Neighbors> {
        self.check_queries(queries)?;
        if k == 0 || k > self.len() {
            return Err(Error::validation(format!(
                "k must be in 1..={} for {} reference points, got {k}",
                self.len(),
                self.len()
            )));
        }
        let mut indices = Vec::with_capacity(queries.rows() * k);
        let mut distances = Vec::with_capacity(queries.rows() * k);
        for q in queries.iter_rows() {
            let mut cands = Candidates::new(k, dir);
            self.descend(0, q, &mut cands);
            for (d2, i) in cands.items {
                indices.push(i);
                distances.push(d2.sqrt());
            }
        }
        Ok(Neighbors { k, indices, distances })
    }

    /// Squared-distance bound of `node` in the direction of the search.
    #[inline]
    fn node_bound(&self, node: usize, q: &[f64], dir: Direction) -> f64 {
        let n = &self.nodes()[node];
        match dir {
            Direction::Nearest => n.min_sq_dist(q),
            Direction::Furthest => n.max_sq_dist(q),
        }
    }

    #[inline]
    fn can_prune(bound: f64, cands: &Candidates) -> bool {
        if !cands.full() {
            return false;
        }
        // Strict: a node touching the k-th distance may still hold a
        // lower-index tie.
        match cands.dir {
            Direction::Nearest => bound > cands.worst(),
            Direction::Furthest => bound < cands.worst(),
        }
    }

    fn descend(&self, node: usize, q: &[f64], cands: &mut Candidates) {
        let n = &self.nodes()[node];
        match n.kind {
            NodeKind::Leaf => {
                for &i in self.node_points(n) {
                    cands.offer((squared_distance(q, self.points().row(i)), i));
                }
            }
            NodeKind::Split { left, right, .. } => {
                let bl = self.node_bound(left, q, cands.dir);
                let br = self.node_bound(right, q, cands.dir);
                let left_first = match cands.dir {
                    Direction::Nearest => bl <= br,
                    Direction::Furthest => bl >= br,
                };
                let order = if left_first { [(left, bl), (right, br)] } else { [(right, br), (left, bl)] };
                for (child, bound) in order {
                    if !Self::can_prune(bound, cands) {
                        self.descend(child, q, cands);
                    }
                }
            }
        }
    }
}

pub fn knn_search(tree: &KdTree<'_>, queries: &Matrix, k: usize) -> Result<Neighbors> {
    tree.knn(queries, k)
}

pub fn kfn_search(tree: &KdTree<'_>, queries: &Matrix, k: usize) -> Result<Neighbors> {
    tree.kfn(queries, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Matrix {
        Matrix::from_rows(&[[0.0], [1.0], [4.0]]).unwrap()
    }

    #[test]
    fn self_match() {
        let refs = line();
        let t = KdTree::build(&refs, 1).unwrap();
        let r = t.knn(&Matrix::from_rows(&[[4.0]]).unwrap(), 1).unwrap();
        assert_eq!(r.indices(0), &[2]);
        assert_eq!(r.distances(0), &[0.0]);
    }

    #[test]
    fn two_nearest_on_a_line() {
        let refs = line();
        let t = KdTree::build(&refs, 1).unwrap();
        let r = t.knn(&Matrix::from_rows(&[[1.9]]).unwrap(), 2).unwrap();
        assert_eq!(r.indices(0), &[1, 0]);
        assert!((r.distances(0)[0] - 0.9).abs() < 1e-15);
        assert!((r.distances(0)[1] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn furthest_of_two() {
        let refs = Matrix::from_rows(&[[0.0, 0.0], [3.0, 0.0]]).unwrap();
        let t = KdTree::build(&refs, 1).unwrap();
        let r = t.kfn(&Matrix::from_rows(&[[1.0, 0.0], [2.5, 1.0]]).unwrap(), 1).unwrap();
        assert_eq!(r.indices(0), &[1]);
        assert_eq!(r.indices(1), &[0]);
    }

    #[test]
    fn kfn_all_points_sorted_descending() {
        let refs = line();
        let t = KdTree::build(&refs, 1).unwrap();
        let r = t.kfn(&Matrix::from_rows(&[[0.5]]).unwrap(), 3).unwrap();
        assert_eq!(r.indices(0), &[2, 0, 1]);
        assert_eq!(r.distances(0), &[3.5, 0.5, 0.5]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let refs = Matrix::from_rows(&[[2.0], [0.0], [2.0], [0.0]]).unwrap();
        let t = KdTree::build(&refs, 1).unwrap();
        let r = t.knn(&Matrix::from_rows(&[[1.0]]).unwrap(), 3).unwrap();
        assert_eq!(r.indices(0), &[0, 1, 2]);
    }

    #[test]
    fn validation_errors() {
        let refs = line();
        let t = KdTree::build(&refs, 2).unwrap();
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(t.knn(&q, 0).is_err());
        assert!(t.knn(&q, 4).is_err());
        assert!(matches!(t.kfn(&Matrix::zeros(1, 2), 1), Err(Error::Shape(_))));
    }
}
