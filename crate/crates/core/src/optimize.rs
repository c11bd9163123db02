//! Differentiable-objective contract plus the two optimizers every model in
//! the toolkit trains with: full-batch gradient descent (fixed step or
//! Armijo backtracking) and mini-batch SGD with `1/t` step decay.

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A differentiable scalar objective.
pub trait Objective {
    fn evaluate(&self, params: &[f64]) -> f64;

    /// Gradient with the same length as `params`.
    fn gradient(&self, params: &[f64]) -> Vec<f64>;
}

/// An objective that decomposes into `num_examples` additive terms. Summing
/// the per-example terms over every example must reproduce
/// [`Objective::evaluate`] (and likewise the gradient).
pub trait PartitionedObjective: Objective {
    fn num_examples(&self) -> usize;

    /// Sum of the terms for the listed examples.
    fn evaluate_examples(&self, params: &[f64], examples: &[usize]) -> f64;

    /// Sum of the per-example gradient terms for the listed examples.
    fn gradient_examples(&self, params: &[f64], examples: &[usize]) -> Vec<f64>;

    fn evaluate_partial(&self, params: &[f64], begin: usize, count: usize) -> f64 {
        let idx: Vec<usize> = (begin..begin + count).collect();
        self.evaluate_examples(params, &idx)
    }

    fn gradient_partial(&self, params: &[f64], begin: usize, count: usize) -> Vec<f64> {
        let idx: Vec<usize> = (begin..begin + count).collect();
        self.gradient_examples(params, &idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub final_params: Vec<f64>,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss at the initial point followed by the loss after each iteration
    /// (GD) or each epoch (SGD).
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    Fixed,
    /// Armijo backtracking from the configured step: sufficient-decrease
    /// constant `1e-4`, halving factor `0.5`, at most 30 halvings.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDescent {
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub line_search: LineSearch,
}

impl Default for GradientDescent {
    fn default() -> Self {
        Self { step: 0.01, max_iters: 10_000, tol: 1e-10, line_search: LineSearch::Fixed }
    }
}

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_HALVINGS: usize = 30;

fn validate_start(step: f64, init: &[f64]) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::validation(format!("step size must be positive, got {step}")));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("initial point is not finite"));
    }
    Ok(())
}

#[inline]
fn loss_converged(prev: f64, current: f64, tol: f64) -> bool {
    (current - prev).abs() <= tol * prev.abs().max(1.0)
}

impl GradientDescent {
    /// Runs descent from `init`, returning the best iterate seen.
    pub fn minimize<F: Objective + ?Sized>(&self, f: &F, init: &[f64]) -> Result<OptimizationReport> {
        let (report, divergence) = self.run(f, init)?;
        match divergence {
            Some(err) => Err(err),
            None => Ok(report),
        }
    }

    /// Like [`minimize`](Self::minimize) but divergence is reported as a
    /// non-converged report holding the best finite iterate.
    pub fn minimize_lenient<F: Objective + ?Sized>(&self, f: &F, init: &[f64]) -> Result<OptimizationReport> {
        self.run(f, init).map(|(report, _)| report)
    }

    fn run<F: Objective + ?Sized>(&self, f: &F, init: &[f64]) -> Result<(OptimizationReport, Option<Error>)> {
        validate_start(self.step, init)?;
        let mut x = init.to_vec();
        let mut loss = f.evaluate(&x);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: 0, what: "loss" });
        }
        let mut best = (x.clone(), loss);
        let mut trace = vec![loss];
        let mut iterations = 0;
        let mut converged = false;
        let mut divergence = None;

        for t in 1..=self.max_iters {
            let g = f.gradient(&x);
            debug_assert_eq!(g.len(), x.len());
            if g.iter().any(|v| !v.is_finite()) {
                divergence = Some(Error::Divergence { iteration: t, what: "gradient" });
                break;
            }
            let (next, next_loss) = match self.line_search {
                LineSearch::Fixed => {
                    let next: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - self.step * gi).collect();
                    let l = f.evaluate(&next);
                    (next, l)
                }
                LineSearch::Backtracking => backtrack(f, &x, &g, loss, self.step),
            };
            iterations = t;
            if !next_loss.is_finite() {
                divergence = Some(Error::Divergence { iteration: t, what: "loss" });
                break;
            }
            trace.push(next_loss);
            if next_loss < best.1 {
                best = (next.clone(), next_loss);
            }
            let done = loss_converged(loss, next_loss, self.tol);
            x = next;
            loss = next_loss;
            if done {
                converged = true;
                break;
            }
        }

        let report =
            OptimizationReport { final_params: best.0, final_loss: best.1, iterations, converged, loss_trace: trace };
        Ok((report, divergence))
    }
}

fn backtrack<F: Objective + ?Sized>(f: &F, x: &[f64], g: &[f64], loss: f64, step: f64) -> (Vec<f64>, f64) {
    let g_norm2: f64 = g.iter().map(|v| v * v).sum();
    let mut t = step;
    let mut halvings = 0;
    loop {
        let candidate: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - t * gi).collect();
        let l = f.evaluate(&candidate);
        if (l.is_finite() && l <= loss - ARMIJO_C * t * g_norm2) || halvings == MAX_HALVINGS {
            return (candidate, l);
        }
        t *= BACKTRACK_FACTOR;
        halvings += 1;
    }
}

/// Full-batch gradient descent with a fixed step.
pub fn gradient_descent<F: Objective + ?Sized>(
    f: &F,
    init: &[f64],
    step: f64,
    max_iters: usize,
    tol: f64,
) -> Result<OptimizationReport> {
    GradientDescent { step, max_iters, tol, line_search: LineSearch::Fixed }.minimize(f, init)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub step: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Step at update `t` is `step / (1 + t * decay)`.
    pub decay: f64,
    /// Relative full-objective loss change, checked once per epoch.
    pub tol: f64,
}

impl Default for Sgd {
    fn default() -> Self {
        Self { step: 0.01, batch_size: 32, epochs: 100, decay: 0.0, tol: 0.0 }
    }
}

impl Sgd {
    pub fn minimize<F: PartitionedObjective + ?Sized>(
        &self,
        f: &F,
        init: &[f64],
        rng: &mut SeededRng,
    ) -> Result<OptimizationReport> {
        let (report, divergence) = self.run(f, init, rng)?;
        match divergence {
            Some(err) => Err(err),
            None => Ok(report),
        }
    }

    /// Divergence becomes a non-converged report holding the last finite
    /// iterate.
    pub fn minimize_lenient<F: PartitionedObjective + ?Sized>(
        &self,
        f: &F,
        init: &[f64],
        rng: &mut SeededRng,
    ) -> Result<OptimizationReport> {
        self.run(f, init, rng).map(|(report, _)| report)
    }

    fn run<F: PartitionedObjective + ?Sized>(
        &self,
        f: &F,
        init: &[f64],
        rng: &mut SeededRng,
    ) -> Result<(OptimizationReport, Option<Error>)> {
        validate_start(self.step, init)?;
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be at least 1"));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(Error::validation(format!("decay must be non-negative, got {}", self.decay)));
        }
        let m = f.num_examples();
        if m == 0 {
            return Err(Error::validation("objective has no examples"));
        }

        let mut x = init.to_vec();
        let mut loss = f.evaluate(&x);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: 0, what: "loss" });
        }
        let mut trace = vec![loss];
        let mut order: Vec<usize> = (0..m).collect();
        let mut updates = 0usize;
        let mut converged = false;
        let mut divergence = None;
        let mut last_good = (x.clone(), loss);

        'epochs: for _ in 0..self.epochs {
            if self.batch_size >= m {
                // Full batch: no reordering, so the run matches gradient descent.
                let g = f.gradient(&x);
                if g.iter().any(|v| !v.is_finite()) {
                    divergence = Some(Error::Divergence { iteration: updates + 1, what: "gradient" });
                    break 'epochs;
                }
                let lr = self.step_at(updates);
                apply_step(&mut x, &g, lr);
                updates += 1;
            } else {
                rng.shuffle(&mut order);
                for batch in order.chunks(self.batch_size) {
                    let g = f.gradient_examples(&x, batch);
                    if g.iter().any(|v| !v.is_finite()) {
                        divergence = Some(Error::Divergence { iteration: updates + 1, what: "gradient" });
                        break 'epochs;
                    }
                    let lr = self.step_at(updates) * (m as f64 / batch.len() as f64);
                    apply_step(&mut x, &g, lr);
                    updates += 1;
                }
            }
            let next_loss = f.evaluate(&x);
            if !next_loss.is_finite() {
                divergence = Some(Error::Divergence { iteration: updates, what: "loss" });
                break;
            }
            trace.push(next_loss);
            last_good = (x.clone(), next_loss);
            let done = loss_converged(loss, next_loss, self.tol);
            loss = next_loss;
            if done {
                converged = true;
                break;
            }
        }

        let report = OptimizationReport {
            final_params: last_good.0,
            final_loss: last_good.1,
            iterations: updates,
            converged,
            loss_trace: trace,
        };
        Ok((report, divergence))
    }

    #[inline]
    fn step_at(&self, t: usize) -> f64 {
        self.step / (1.0 + t as f64 * self.decay)
    }
}

#[inline]
fn apply_step(x: &mut [f64], g: &[f64], lr: f64) {
    for (xi, gi) in x.iter_mut().zip(g) {
        *xi -= lr * gi;
    }
}

/// Mini-batch SGD.
pub fn sgd<F: PartitionedObjective + ?Sized>(
    f: &F,
    init: &[f64],
    step: f64,
    batch_size: usize,
    epochs: usize,
    rng: &mut SeededRng,
) -> Result<OptimizationReport> {
    Sgd { step, batch_size, epochs, ..Sgd::default() }.minimize(f, init, rng)
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences, `max_i |g_i - n_i| / max(1, |n_i|)`.
pub fn check_gradient<F: Objective + ?Sized>(f: &F, point: &[f64], eps: f64) -> f64 {
    assert!(eps > 0.0, "eps must be positive");
    let analytic = f.gradient(point);
    let mut probe = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let up = f.evaluate(&probe);
        probe[i] = point[i] - eps;
        let down = f.evaluate(&probe);
        probe[i] = point[i];
        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}
