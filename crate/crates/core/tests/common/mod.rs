#![allow(dead_code)]

use mlkit::{Matrix, SeededRng};

pub fn random_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut SeededRng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform_range(lo, hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Matrix with entries snapped to a coarse grid so that exact ties occur.
pub fn grid_matrix(rows: usize, cols: usize, levels: usize, rng: &mut SeededRng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.next_index(levels) as f64).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
