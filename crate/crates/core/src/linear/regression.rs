use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::matrix::Matrix;

/// Ridge-regularized least squares. `weights[0]` is the unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegressionModel {
    weights: Vec<f64>,
    lambda: f64,
}

impl LinearRegressionModel {
    pub fn from_parts(weights: Vec<f64>, lambda: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("weights must include an intercept"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("weights must be finite"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { weights, lambda })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.weights[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.weights[1..]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of input features.
    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        Ok(x.iter_rows().map(|row| linear_score(&self.weights, row)).collect())
    }
}

/// `weights[0] + row . weights[1..]`.
#[inline]
pub(crate) fn linear_score(weights: &[f64], row: &[f64]) -> f64 {
    let mut s = weights[0];
    for (w, v) in weights[1..].iter().zip(row) {
        s += w * v;
    }
    s
}

pub(crate) fn check_dim(expected: usize, x: &Matrix) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::shape(format!("model expects {expected} features, data has {}", x.cols())));
    }
    Ok(())
}

/// Solves `(X~^T X~ + lambda I~) beta = X~^T y`, where `X~` has a leading
/// ones column and `I~` is the identity with the intercept entry zeroed.
pub fn linreg_train(x: &Matrix, y: &[f64], lambda: f64) -> Result<LinearRegressionModel> {
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::validation("linear regression needs at least one row"));
    }
    if y.len() != n {
        return Err(Error::shape(format!("{n} rows but {} responses", y.len())));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("training data must be finite"));
    }

    let p = d + 1;
    let mut gram = Matrix::zeros(p, p);
    let mut rhs = vec![0.0; p];
    let mut aug = vec![1.0; p];
    for (row, &yi) in x.iter_rows().zip(y) {
        aug[1..].copy_from_slice(row);
        for i in 0..p {
            rhs[i] += aug[i] * yi;
            for j in 0..=i {
                gram[(i, j)] += aug[i] * aug[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    for i in 1..p {
        gram[(i, i)] += lambda;
    }

    let weights = cholesky_solve(&gram, &rhs).map_err(|err| match err {
        Error::RankDeficient(msg) => {
            Error::RankDeficient(format!("{msg}; {n} rows for {p} unknowns (duplicated or constant columns?)"))
        }
        other => other,
    })?;
    LinearRegressionModel::from_parts(weights, lambda)
}

pub fn linreg_predict(model: &LinearRegressionModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}
