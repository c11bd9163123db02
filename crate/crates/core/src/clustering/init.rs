use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::SeededRng;

/// k-means++ seeding: the first centroid is a uniformly chosen row, each
/// later one a row drawn with probability proportional to its squared
/// distance from the nearest centroid chosen so far.
pub fn kmeanspp_init(x: &Matrix, k: usize, rng: &mut SeededRng) -> Result<Matrix> {
    let n = x.rows();
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if k > n {
        return Err(Error::validation(format!("cannot choose {k} centroids from {n} points")));
    }
    if !x.is_finite() {
        return Err(Error::validation("k-means input must be finite"));
    }

    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.next_index(n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut d2: Vec<f64> = x.iter_rows().map(|r| squared_distance(r, x.row(first))).collect();

    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                cum += w;
                if cum > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave target == total; fall back to the last
            // positive-weight row.
            pick.or_else(|| d2.iter().rposition(|&w| w > 0.0)).unwrap()
        } else {
            // Every remaining row duplicates a centroid.
            let slot = rng.next_index(n - chosen.len());
            (0..n).filter(|&i| !is_chosen[i]).nth(slot).unwrap()
        };
        chosen.push(pick);
        is_chosen[pick] = true;
        let c = x.row(pick);
        for (i, w) in d2.iter_mut().enumerate() {
            let d = squared_distance(x.row(i), c);
            if d < *w {
                *w = d;
            }
        }
    }

    Ok(x.select_rows(&chosen))
}
