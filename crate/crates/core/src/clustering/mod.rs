//! k-means clustering.
//!
//! [`kmeans_lloyd`] is the reference algorithm. [`kmeans_hamerly`] prunes
//! point-centroid distance evaluations with Hamerly's bounds and returns the
//! identical result (same centroids, assignments, inertia and iteration
//! count, bit for bit), because both variants share the assignment
//! tie-break, the centroid update and the empty-cluster repair below.

mod hamerly;
mod init;
mod lloyd;

use std::fmt;
use std::str::FromStr;

pub use hamerly::kmeans_hamerly;
pub use init::kmeanspp_init;
pub use lloyd::{kmeans_lloyd, kmeans_lloyd_traced};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Exact distance evaluations performed (point-centroid and
    /// centroid-centroid).
    pub distance_computations: u64,
}

impl KMeansResult {
    /// Bitwise equality of everything except the distance counter.
    pub fn same_clustering(&self, other: &Self) -> bool {
        self.centroids.bit_eq(&other.centroids)
            && self.assignments == other.assignments
            && self.inertia.to_bits() == other.inertia.to_bits()
            && self.iterations == other.iterations
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMeansVariant {
    Lloyd,
    Hamerly,
}

impl KMeansVariant {
    pub const ALL: [KMeansVariant; 2] = [KMeansVariant::Lloyd, KMeansVariant::Hamerly];

    pub fn name(self) -> &'static str {
        match self {
            KMeansVariant::Lloyd => "lloyd",
            KMeansVariant::Hamerly => "hamerly",
        }
    }
}

impl fmt::Display for KMeansVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KMeansVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lloyd" => Ok(KMeansVariant::Lloyd),
            "hamerly" => Ok(KMeansVariant::Hamerly),
            other => Err(Error::validation(format!("unknown k-means variant {other:?}; expected lloyd or hamerly"))),
        }
    }
}

/// Iteration cap and convergence tolerance on the largest centroid move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-6 }
    }
}

/// Trained k-means model: just the centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    centroids: Matrix,
}

impl KMeansModel {
    pub fn new(centroids: Matrix) -> Result<Self> {
        if centroids.rows() == 0 {
            return Err(Error::validation("k-means model needs at least one centroid"));
        }
        if !centroids.is_finite() {
            return Err(Error::validation("centroids must be finite"));
        }
        Ok(Self { centroids })
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    /// Nearest-centroid label for each row (ties to the lowest index).
    pub fn assign(&self, x: &Matrix) -> Result<Vec<usize>> {
        if x.cols() != self.centroids.cols() {
            return Err(Error::shape(format!("model has {} dimensions, data has {}", self.centroids.cols(), x.cols())));
        }
        Ok(x.iter_rows().map(|r| nearest(r, &self.centroids).0).collect())
    }
}

/// Seeds with k-means++ from `rng`, then runs the chosen variant.
pub fn kmeans(
    x: &Matrix,
    k: usize,
    variant: KMeansVariant,
    config: KMeansConfig,
    rng: &mut SeededRng,
) -> Result<KMeansResult> {
    let init = kmeanspp_init(x, k, rng)?;
    run_variant(x, &init, variant, config)
}

pub fn run_variant(x: &Matrix, init: &Matrix, variant: KMeansVariant, config: KMeansConfig) -> Result<KMeansResult> {
    match variant {
        KMeansVariant::Lloyd => kmeans_lloyd(x, init, config.max_iter, config.tol),
        KMeansVariant::Hamerly => kmeans_hamerly(x, init, config.max_iter, config.tol),
    }
}

fn validate(x: &Matrix, init: &Matrix, tol: f64) -> Result<()> {
    let k = init.rows();
    if k == 0 {
        return Err(Error::validation("k-means needs at least one centroid"));
    }
    if k > x.rows() {
        return Err(Error::validation(format!("cannot form {k} clusters from {} points", x.rows())));
    }
    if init.cols() != x.cols() {
        return Err(Error::shape(format!("centroids have {} dimensions, data has {}", init.cols(), x.cols())));
    }
    if !x.is_finite() || !init.is_finite() {
        return Err(Error::validation("k-means input must be finite"));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::validation(format!("tolerance must be >= 0, got {tol}")));
    }
    Ok(())
}

/// Index and squared distance of the nearest centroid; ties go to the
/// lowest index.
#[inline]
pub(crate) fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter_rows().enumerate() {
        let d2 = squared_distance(point, c);
        if d2 < best.1 {
            best = (j, d2);
        }
    }
    best
}

/// Mean update shared by both variants. A cluster left empty by the
/// assignment step takes the point farthest from its own centroid (by
/// `own_sq_dist`, ties to the lowest point index) among clusters that can
/// spare one. `assignments` is updated in place.
pub(crate) fn update_centroids(x: &Matrix, assignments: &mut [usize], own_sq_dist: &[f64], k: usize) -> Matrix {
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    if counts.contains(&0) {
        let mut moved = vec![false; assignments.len()];
        for j in 0..k {
            if counts[j] != 0 {
                continue;
            }
            let mut pick: Option<usize> = None;
            for i in 0..assignments.len() {
                if moved[i] || counts[assignments[i]] < 2 {
                    continue;
                }
                if pick.is_none_or(|p| own_sq_dist[i] > own_sq_dist[p]) {
                    pick = Some(i);
                }
            }
            let i = pick.expect("k <= n guarantees a donor cluster");
            counts[assignments[i]] -= 1;
            assignments[i] = j;
            counts[j] = 1;
            moved[i] = true;
        }
    }

    let mut sums = Matrix::zeros(k, x.cols());
    for (row, &a) in x.iter_rows().zip(assignments.iter()) {
        for (s, v) in sums.row_mut(a).iter_mut().zip(row) {
            *s += v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        let c = c as f64;
        for s in sums.row_mut(j) {
            *s /= c;
        }
    }
    sums
}

/// Euclidean move of each centroid.
pub(crate) fn centroid_drift(old: &Matrix, new: &Matrix) -> Vec<f64> {
    old.iter_rows().zip(new.iter_rows()).map(|(a, b)| squared_distance(a, b).sqrt()).collect()
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Recomputes inertia from centroids and assignments.
pub fn inertia(x: &Matrix, centroids: &Matrix, assignments: &[usize]) -> f64 {
    x.iter_rows().zip(assignments).map(|(r, &a)| squared_distance(r, centroids.row(a))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_parsing() {
        assert_eq!("hamerly".parse::<KMeansVariant>().unwrap(), KMeansVariant::Hamerly);
        assert!("elkan".parse::<KMeansVariant>().is_err());
    }

    #[test]
    fn nearest_ties_to_lowest_index() {
        let c = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        assert_eq!(nearest(&[0.0], &c).0, 0);
    }

    #[test]
    fn empty_cluster_takes_farthest_point() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let mut assign = vec![0, 0, 0];
        let own = [0.0, 1.0, 25.0];
        let c = update_centroids(&x, &mut assign, &own, 2);
        assert_eq!(assign, vec![0, 0, 1]);
        assert_eq!(c.row(0), &[0.5]);
        assert_eq!(c.row(1), &[5.0]);
    }

    #[test]
    fn model_assigns_nearest() {
        let m = KMeansModel::new(Matrix::from_rows(&[[0.0, 0.0], [10.0, 0.0]]).unwrap()).unwrap();
        let x = Matrix::from_rows(&[[1.0, 1.0], [9.0, -1.0], [5.0, 0.0]]).unwrap();
        assert_eq!(m.assign(&x).unwrap(), vec![0, 1, 0]);
        assert!(m.assign(&Matrix::zeros(1, 3)).is_err());
    }
}
