use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

/// Feature matrix paired with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(format!("{} feature rows but {} labels", features.rows(), labels.len())));
        }
        Ok(Self { features, labels })
    }

    /// Converts float labels (as read from CSV) to class indices; every
    /// value must be a non-negative integer.
    pub fn from_float_labels(features: Matrix, labels: &[f64]) -> Result<Self> {
        let labels = labels
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::validation(format!("label {v} at row {i} is not a non-negative integer")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, labels)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// `max(label) + 1`, or 0 for an empty dataset.
    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { features: self.features.select_rows(indices), labels: indices.iter().map(|&i| self.labels[i]).collect() }
    }
}

/// Shuffles row indices with Fisher-Yates and takes the first
/// `round(n * test_fraction)` as the test set. Returns `(train, test)`.
pub fn train_test_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    rng: &mut SeededRng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = split_indices(ds.len(), test_fraction, rng)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Index form of [`train_test_split`]: `(train_indices, test_indices)`.
pub fn split_indices(n: usize, test_fraction: f64, rng: &mut SeededRng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::validation(format!("test fraction {test_fraction} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let train = order.split_off(n_test.min(n));
    Ok((train, order))
}

/// Isotropic Gaussian blobs: `per_center` points around each row of
/// `centers` with standard deviation `spread`, labeled by center index.
/// Rows are grouped by center in order.
pub fn make_blobs(centers: &Matrix, per_center: usize, spread: f64, rng: &mut SeededRng) -> Result<LabeledDataset> {
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::validation(format!("spread must be >= 0, got {spread}")));
    }
    let d = centers.cols();
    let mut data = Vec::with_capacity(centers.rows() * per_center * d);
    let mut labels = Vec::with_capacity(centers.rows() * per_center);
    for (c, center) in centers.iter_rows().enumerate() {
        for _ in 0..per_center {
            data.extend(center.iter().map(|&m| m + spread * rng.normal()));
            labels.push(c);
        }
    }
    LabeledDataset::new(Matrix::from_vec(labels.len(), d, data)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> LabeledDataset {
        let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        LabeledDataset::new(features, (0..n).map(|i| i % 2).collect()).unwrap()
    }

    #[test]
    fn split_sizes_and_pairing() {
        let ds = toy(10);
        let (train, test) = train_test_split(&ds, 0.3, &mut SeededRng::new(1)).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        let mut seen: Vec<usize> =
            train.features().iter_rows().chain(test.features().iter_rows()).map(|r| r[0] as usize).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for part in [&train, &test] {
            for (row, &label) in part.features().iter_rows().zip(part.labels()) {
                assert_eq!(row[0] as usize % 2, label);
            }
        }
    }

    #[test]
    fn zero_fraction_empty_test() {
        let (train, test) = train_test_split(&toy(5), 0.0, &mut SeededRng::new(2)).unwrap();
        assert_eq!((train.len(), test.len()), (5, 0));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy(20);
        let a = train_test_split(&ds, 0.25, &mut SeededRng::new(42)).unwrap();
        let b = train_test_split(&ds, 0.25, &mut SeededRng::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_fraction_and_labels() {
        assert!(split_indices(3, 1.5, &mut SeededRng::new(0)).is_err());
        let m = Matrix::zeros(2, 1);
        assert!(LabeledDataset::from_float_labels(m.clone(), &[0.0, 1.5]).is_err());
        assert!(LabeledDataset::from_float_labels(m.clone(), &[0.0, -1.0]).is_err());
        assert!(LabeledDataset::new(m, vec![0]).is_err());
    }
}
