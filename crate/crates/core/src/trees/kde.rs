use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::trees::kdtree::{KdTree, NodeKind};
use crate::trees::kernel::Kernel;

/// Traversal state for one query. `lower` is a running lower bound on the
/// exact profile sum: exact leaf sums plus `count * K_lower` for every node
/// still on the frontier or approximated.
struct Accumulator {
    total: f64,
    lower: f64,
    n: f64,
    rel_tol: f64,
}

impl KdTree<'_> {
    /// Kernel density estimate `(1/n) sum_i K(|q - x_i|)` at each query.
    ///
    /// A node whose kernel values are bracketed tightly enough is replaced
    /// by `count * (K_upper + K_lower) / 2`; its worst-case error
    /// `count * (K_upper - K_lower) / 2` is charged against a budget of
    /// `rel_tol * lower * count / n`. Approximated nodes are disjoint and
    /// `lower` never exceeds the exact sum, so the total error stays within
    /// `rel_tol` times the exact density. `rel_tol = 0` only accepts nodes
    /// whose bounds coincide, which is exact.
    pub fn kde<K: Kernel + ?Sized>(&self, queries: &Matrix, kernel: &K, rel_tol: f64) -> Result<Vec<f64>> {
        self.check_queries(queries)?;
        if !(rel_tol >= 0.0 && rel_tol.is_finite()) {
            return Err(Error::validation(format!("relative tolerance must be >= 0, got {rel_tol}")));
        }
        let scale = kernel.normalizer(self.dim())? / self.len() as f64;
        let root = self.root().expect("non-empty tree has a root");
        let mut out = Vec::with_capacity(queries.rows());
        for q in queries.iter_rows() {
            let (kl, ku) = bracket(kernel, root.min_sq_dist(q), root.max_sq_dist(q));
            let mut acc = Accumulator { total: 0.0, lower: root.count() as f64 * kl, n: self.len() as f64, rel_tol };
            self.kde_visit(0, q, kernel, kl, ku, &mut acc);
            out.push(acc.total * scale);
        }
        Ok(out)
    }

    fn kde_visit<K: Kernel + ?Sized>(&self, id: usize, q: &[f64], kernel: &K, kl: f64, ku: f64, acc: &mut Accumulator) {
        let node = &self.nodes()[id];
        let count = node.count() as f64;
        let max_err = count * (ku - kl) / 2.0;
        if max_err <= acc.rel_tol * acc.lower * count / acc.n {
            acc.total += count * (ku + kl) / 2.0;
            return;
        }
        match node.kind {
            NodeKind::Leaf => {
                let mut exact = 0.0;
                for &i in self.node_points(node) {
                    exact += kernel.value(squared_distance(q, self.points().row(i)).sqrt());
                }
                acc.total += exact;
                acc.lower += exact - count * kl;
            }
            NodeKind::Split { left, right, .. } => {
                let (l, r) = (&self.nodes()[left], &self.nodes()[right]);
                let (kl_l, ku_l) = bracket(kernel, l.min_sq_dist(q), l.max_sq_dist(q));
                let (kl_r, ku_r) = bracket(kernel, r.min_sq_dist(q), r.max_sq_dist(q));
                acc.lower += l.count() as f64 * kl_l + r.count() as f64 * kl_r - count * kl;
                // Heavier child first tightens the bound sooner.
                if ku_l >= ku_r {
                    self.kde_visit(left, q, kernel, kl_l, ku_l, acc);
                    self.kde_visit(right, q, kernel, kl_r, ku_r, acc);
                } else {
                    self.kde_visit(right, q, kernel, kl_r, ku_r, acc);
                    self.kde_visit(left, q, kernel, kl_l, ku_l, acc);
                }
            }
        }
    }
}

#[inline]
fn bracket<K: Kernel + ?Sized>(kernel: &K, min_sq: f64, max_sq: f64) -> (f64, f64) {
    (kernel.value_lower(max_sq.sqrt()), kernel.value_upper(min_sq.sqrt()))
}

pub fn kde<K: Kernel + ?Sized>(tree: &KdTree<'_>, queries: &Matrix, kernel: &K, rel_tol: f64) -> Result<Vec<f64>> {
    tree.kde(queries, kernel, rel_tol)
}
