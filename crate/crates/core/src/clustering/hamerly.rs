use super::{centroid_drift, max_of, update_centroids, validate, KMeansResult};
use crate::error::Result;
use crate::matrix::{squared_distance, Matrix};

/// Relative slack on the pruning test. Bounds carry rounding from repeated
/// drift updates; a point is skipped only when its assigned centroid wins by
/// more than this margin, so the skip can never disagree with an exact scan.
const PRUNE_GUARD: f64 = 1e-9;

/// Per-point Hamerly bounds: `upper` on the distance to the assigned
/// centroid, `lower` on the distance to every other centroid.
struct Bounds {
    assignments: Vec<usize>,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

/// Hamerly's accelerated k-means. Returns exactly what [`kmeans_lloyd`]
/// returns on the same input, while skipping most point-centroid distance
/// evaluations once clusters settle.
///
/// [`kmeans_lloyd`]: super::kmeans_lloyd
#[allow(clippy::needless_range_loop)] // bounds, assignments and drift are parallel arrays
pub fn kmeans_hamerly(x: &Matrix, init: &Matrix, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    validate(x, init, tol)?;
    let n = x.rows();
    let k = init.rows();
    let mut centroids = init.clone();
    let mut bounds = Bounds { assignments: vec![0; n], upper: vec![f64::INFINITY; n], lower: vec![0.0; n] };
    let mut counter = 0u64;
    let mut iterations = 0;
    let mut first = true;

    while iterations < max_iter {
        assign_pass(x, &centroids, &mut bounds, first, &mut counter);
        first = false;

        let mut counts = vec![0usize; k];
        for &a in &bounds.assignments {
            counts[a] += 1;
        }
        let own = if counts.contains(&0) {
            counter += n as u64;
            x.iter_rows().zip(&bounds.assignments).map(|(r, &a)| squared_distance(r, centroids.row(a))).collect()
        } else {
            vec![0.0; n]
        };
        let before = bounds.assignments.clone();
        let updated = update_centroids(x, &mut bounds.assignments, &own, k);
        let drift = centroid_drift(&centroids, &updated);
        counter += k as u64;

        let (top_idx, top, second) = top_two(&drift);
        for i in 0..n {
            let a = bounds.assignments[i];
            if a != before[i] {
                bounds.upper[i] = f64::INFINITY;
                bounds.lower[i] = 0.0;
                continue;
            }
            bounds.upper[i] += drift[a];
            bounds.lower[i] -= if a == top_idx { second } else { top };
        }

        centroids = updated;
        iterations += 1;
        if max_of(&drift) <= tol {
            break;
        }
    }

    assign_pass(x, &centroids, &mut bounds, first, &mut counter);
    let mut inertia = 0.0;
    for (row, &a) in x.iter_rows().zip(&bounds.assignments) {
        inertia += squared_distance(row, centroids.row(a));
    }
    counter += n as u64;

    Ok(KMeansResult { centroids, assignments: bounds.assignments, inertia, iterations, distance_computations: counter })
}

fn assign_pass(x: &Matrix, centroids: &Matrix, b: &mut Bounds, first: bool, counter: &mut u64) {
    let k = centroids.rows() as u64;
    if first {
        for (i, row) in x.iter_rows().enumerate() {
            rescan(i, row, centroids, b);
            *counter += k;
        }
        return;
    }

    let half = half_separation(centroids, counter);
    for (i, row) in x.iter_rows().enumerate() {
        let a = b.assignments[i];
        let bound = half[a].max(b.lower[i]);
        if prunable(b.upper[i], bound) {
            continue;
        }
        b.upper[i] = squared_distance(row, centroids.row(a)).sqrt();
        *counter += 1;
        if prunable(b.upper[i], bound) {
            continue;
        }
        rescan(i, row, centroids, b);
        *counter += k;
    }
}

#[inline]
fn prunable(upper: f64, bound: f64) -> bool {
    upper + PRUNE_GUARD * upper < bound
}

/// Full scan with the same tie rule as the reference assignment.
fn rescan(i: usize, row: &[f64], centroids: &Matrix, b: &mut Bounds) {
    let mut best = (0usize, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (j, c) in centroids.iter_rows().enumerate() {
        let d2 = squared_distance(row, c);
        if d2 < best.1 {
            second = best.1;
            best = (j, d2);
        } else if d2 < second {
            second = d2;
        }
    }
    b.assignments[i] = best.0;
    b.upper[i] = best.1.sqrt();
    b.lower[i] = second.sqrt();
}

/// Half the distance from each centroid to its closest other centroid.
fn half_separation(centroids: &Matrix, counter: &mut u64) -> Vec<f64> {
    let k = centroids.rows();
    let mut s = vec![f64::INFINITY; k];
    for j in 0..k {
        for l in j + 1..k {
            let d = squared_distance(centroids.row(j), centroids.row(l)).sqrt();
            *counter += 1;
            s[j] = s[j].min(d);
            s[l] = s[l].min(d);
        }
    }
    s.iter_mut().for_each(|v| *v *= 0.5);
    s
}

/// `(argmax, max, second max)`; second is 0 when there is one value.
fn top_two(values: &[f64]) -> (usize, f64, f64) {
    let mut top = (0usize, f64::NEG_INFINITY);
    let mut second = f64::NEG_INFINITY;
    for (j, &v) in values.iter().enumerate() {
        if v > top.1 {
            second = top.1;
            top = (j, v);
        } else if v > second {
            second = v;
        }
    }
    (top.0, top.1.max(0.0), second.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kmeans_lloyd;

    #[test]
    fn matches_lloyd_on_square() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]).unwrap();
        let init = Matrix::from_rows(&[[0.0, 0.0], [10.0, 0.0]]).unwrap();
        let h = kmeans_hamerly(&x, &init, 100, 1e-6).unwrap();
        let l = kmeans_lloyd(&x, &init, 100, 1e-6).unwrap();
        assert!(h.same_clustering(&l));
        assert_eq!(h.inertia, 1.0);
    }

    #[test]
    fn single_centroid_needs_no_rescans() {
        let x = Matrix::from_rows(&[[0.0], [2.0], [4.0], [10.0]]).unwrap();
        let init = Matrix::from_rows(&[[4.0]]).unwrap();
        let h = kmeans_hamerly(&x, &init, 100, 0.0).unwrap();
        // init is the data mean: 4 initial distances, one drift, a fully
        // pruned final pass, then 4 for the inertia.
        assert_eq!(h.iterations, 1);
        assert_eq!(h.distance_computations, 4 + 1 + 4);
        assert_eq!(h.centroids.row(0), &[4.0]);
        assert!(h.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn top_two_values() {
        assert_eq!(top_two(&[1.0, 3.0, 2.0]), (1, 3.0, 2.0));
        assert_eq!(top_two(&[5.0]), (0, 5.0, 0.0));
    }
}
