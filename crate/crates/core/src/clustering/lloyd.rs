use super::{centroid_drift, max_of, nearest, update_centroids, validate, KMeansResult};
use crate::error::Result;
use crate::matrix::Matrix;

/// Lloyd's algorithm: alternate nearest-centroid assignment and mean update
/// until no centroid moves more than `tol` or `max_iter` updates are done.
/// A final assignment pass against the returned centroids fixes the
/// reported assignments and inertia.
pub fn kmeans_lloyd(x: &Matrix, init: &Matrix, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    lloyd(x, init, max_iter, tol, None)
}

/// As [`kmeans_lloyd`], also returning the inertia measured at every
/// assignment step (the last entry is the final pass).
pub fn kmeans_lloyd_traced(x: &Matrix, init: &Matrix, max_iter: usize, tol: f64) -> Result<(KMeansResult, Vec<f64>)> {
    let mut trace = Vec::new();
    let r = lloyd(x, init, max_iter, tol, Some(&mut trace))?;
    Ok((r, trace))
}

fn lloyd(
    x: &Matrix,
    init: &Matrix,
    max_iter: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<KMeansResult> {
    validate(x, init, tol)?;
    let n = x.rows();
    let k = init.rows();
    let mut centroids = init.clone();
    let mut assignments = vec![0usize; n];
    let mut own = vec![0.0f64; n];
    let mut distances = 0u64;
    let mut iterations = 0;

    while iterations < max_iter {
        assign_all(x, &centroids, &mut assignments, &mut own);
        distances += (n * k) as u64;
        if let Some(t) = trace.as_deref_mut() {
            t.push(own.iter().sum());
        }
        let updated = update_centroids(x, &mut assignments, &own, k);
        let drift = centroid_drift(&centroids, &updated);
        distances += k as u64;
        centroids = updated;
        iterations += 1;
        if max_of(&drift) <= tol {
            break;
        }
    }

    assign_all(x, &centroids, &mut assignments, &mut own);
    distances += (n * k) as u64;
    let inertia: f64 = own.iter().sum();
    if let Some(t) = trace {
        t.push(inertia);
    }

    Ok(KMeansResult { centroids, assignments, inertia, iterations, distance_computations: distances })
}

fn assign_all(x: &Matrix, centroids: &Matrix, assignments: &mut [usize], own: &mut [f64]) {
    for (i, row) in x.iter_rows().enumerate() {
        let (a, d2) = nearest(row, centroids);
        assignments[i] = a;
        own[i] = d2;
    }
}
