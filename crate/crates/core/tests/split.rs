use mlkit::dataset::split_indices;
use mlkit::{train_test_split, LabeledDataset, Matrix, SeededRng};

#[test]
fn split_partitions_every_size_and_fraction() {
    for n in 0..=100usize {
        for tenth in 0..=10 {
            let f = tenth as f64 / 10.0;
            let (train, test) = split_indices(n, f, &mut SeededRng::new(n as u64 * 31 + tenth)).unwrap();
            assert_eq!(test.len(), (n as f64 * f).round() as usize, "n={n} f={f}");
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>(), "n={n} f={f}");
        }
    }
}

#[test]
fn split_is_deterministic_and_keeps_pairs() {
    let x = Matrix::from_vec(40, 2, (0..80).map(|v| v as f64).collect()).unwrap();
    let ds = LabeledDataset::new(x, (0..40).map(|i| i % 3).collect()).unwrap();
    let a = train_test_split(&ds, 0.25, &mut SeededRng::new(9)).unwrap();
    let b = train_test_split(&ds, 0.25, &mut SeededRng::new(9)).unwrap();
    assert_eq!(a, b);
    for part in [&a.0, &a.1] {
        for (row, &label) in part.features().iter_rows().zip(part.labels()) {
            let original = (row[0] / 2.0) as usize;
            assert_eq!(label, original % 3);
        }
    }
}

#[test]
fn fraction_outside_unit_interval_rejected() {
    assert!(split_indices(5, 1.5, &mut SeededRng::new(0)).is_err());
    assert!(split_indices(5, -0.1, &mut SeededRng::new(0)).is_err());
}
