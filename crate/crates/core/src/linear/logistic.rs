use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linear::regression::{check_dim, linear_score};
use crate::matrix::Matrix;
use crate::optimize::{GradientDescent, LineSearch, Objective, OptimizationReport, PartitionedObjective};

/// Binary logistic regression; `weights[0]` is the unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegressionModel {
    weights: Vec<f64>,
    lambda: f64,
    decision_threshold: f64,
}

impl LogisticRegressionModel {
    pub fn from_parts(weights: Vec<f64>, lambda: f64, decision_threshold: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("weights must include an intercept"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("weights must be finite"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(decision_threshold > 0.0 && decision_threshold < 1.0) {
            return Err(Error::validation(format!("decision threshold must lie in (0, 1), got {decision_threshold}")));
        }
        Ok(Self { weights, lambda, decision_threshold })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self = Self::from_parts(self.weights, self.lambda, threshold)?;
        Ok(self)
    }

    /// Linear scores `w0 + x . w`.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        Ok(x.iter_rows().map(|r| linear_score(&self.weights, r)).collect())
    }

    /// Labels (1 iff probability is strictly above the threshold) and
    /// class-1 probabilities.
    pub fn classify(&self, x: &Matrix) -> Result<(Vec<usize>, Vec<f64>)> {
        let probs: Vec<f64> = self.scores(x)?.into_iter().map(sigmoid).collect();
        let labels = probs.iter().map(|&p| usize::from(p > self.decision_threshold)).collect();
        Ok((labels, probs))
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss plus `(lambda / 2) * ||w[1..]||^2`.
pub struct LogisticObjective<'a> {
    x: &'a Matrix,
    y: Vec<f64>,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(ds: &'a LabeledDataset, lambda: f64) -> Result<Self> {
        validate_binary(ds)?;
        Ok(Self { x: ds.features(), y: ds.labels().iter().map(|&l| l as f64).collect(), lambda })
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        0.5 * self.lambda * w[1..].iter().map(|v| v * v).sum::<f64>()
    }

    fn example_loss(&self, w: &[f64], i: usize) -> f64 {
        let z = linear_score(w, self.x.row(i));
        softplus(z) - self.y[i] * z
    }

    fn add_example_gradient(&self, w: &[f64], i: usize, scale: f64, grad: &mut [f64]) {
        let row = self.x.row(i);
        let r = (sigmoid(linear_score(w, row)) - self.y[i]) * scale;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }

    fn n(&self) -> f64 {
        self.y.len() as f64
    }
}

impl Objective for LogisticObjective<'_> {
    fn evaluate(&self, w: &[f64]) -> f64 {
        let total: f64 = (0..self.y.len()).map(|i| self.example_loss(w, i)).sum();
        total / self.n() + self.penalty(w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; w.len()];
        for i in 0..self.y.len() {
            self.add_example_gradient(w, i, 1.0, &mut grad);
        }
        let n = self.n();
        for g in grad.iter_mut() {
            *g /= n;
        }
        for (g, wj) in grad[1..].iter_mut().zip(&w[1..]) {
            *g += self.lambda * wj;
        }
        grad
    }
}

impl PartitionedObjective for LogisticObjective<'_> {
    fn num_examples(&self) -> usize {
        self.y.len()
    }

    fn evaluate_examples(&self, w: &[f64], examples: &[usize]) -> f64 {
        let share = self.penalty(w) / self.n();
        examples.iter().map(|&i| self.example_loss(w, i) / self.n() + share).sum()
    }

    fn gradient_examples(&self, w: &[f64], examples: &[usize]) -> Vec<f64> {
        let n = self.n();
        let mut grad = vec![0.0; w.len()];
        for &i in examples {
            self.add_example_gradient(w, i, 1.0 / n, &mut grad);
        }
        let share = examples.len() as f64 / n;
        for (g, wj) in grad[1..].iter_mut().zip(&w[1..]) {
            *g += share * self.lambda * wj;
        }
        grad
    }
}

fn validate_binary(ds: &LabeledDataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::validation("logistic regression needs at least one row"));
    }
    if let Some((i, &l)) = ds.labels().iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(Error::validation(format!("logistic regression labels must be 0 or 1; row {i} has {l}")));
    }
    Ok(())
}

/// Loss and analytic gradient at `weights` (length `d + 1`).
pub fn logreg_objective(weights: &[f64], ds: &LabeledDataset, lambda: f64) -> Result<(f64, Vec<f64>)> {
    if weights.len() != ds.dim() + 1 {
        return Err(Error::shape(format!(
            "expected {} weights for {} features, got {}",
            ds.dim() + 1,
            ds.dim(),
            weights.len()
        )));
    }
    let f = LogisticObjective::new(ds, lambda)?;
    Ok((f.evaluate(weights), f.gradient(weights)))
}

/// Default optimizer for [`logreg_train`].
pub fn default_logreg_optimizer() -> GradientDescent {
    GradientDescent { step: 1.0, max_iters: 10_000, tol: 1e-12, line_search: LineSearch::Backtracking }
}

/// Minimizes the penalized logistic loss from zero weights. Divergence (for
/// example unbounded weights on separable data) yields a non-converged
/// report rather than an error.
pub fn logreg_train(
    ds: &LabeledDataset,
    lambda: f64,
    optimizer: &GradientDescent,
) -> Result<(LogisticRegressionModel, OptimizationReport)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    let f = LogisticObjective::new(ds, lambda)?;
    let first = ds.labels()[0];
    if ds.labels().iter().all(|&l| l == first) {
        return Err(Error::validation(format!("logistic regression needs both classes; every label is {first}")));
    }
    if !ds.features().is_finite() {
        return Err(Error::validation("training data must be finite"));
    }
    let init = vec![0.0; ds.dim() + 1];
    let report = optimizer.minimize_lenient(&f, &init)?;
    let model = LogisticRegressionModel::from_parts(report.final_params.clone(), lambda, 0.5)?;
    Ok((model, report))
}

pub fn logreg_classify(model: &LogisticRegressionModel, x: &Matrix) -> Result<(Vec<usize>, Vec<f64>)> {
    model.classify(x)
}
