//! A small feedforward classifier built from three layer kinds, trained by
//! mean negative log-likelihood with hand-written backpropagation.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optimize::{Objective, OptimizationReport, PartitionedObjective, Sgd};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `y = W x + b` with `W` of shape `out x in`.
    Linear {
        weights: Matrix,
        bias: Vec<f64>,
    },
    Relu,
    /// Row-wise `z - log(sum(exp(z)))`.
    LogSoftmax,
}

impl Layer {
    pub fn linear(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape(format!("bias has {} entries, weights have {} rows", bias.len(), weights.rows())));
        }
        Ok(Layer::Linear { weights, bias })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Linear { .. } => "linear",
            Layer::Relu => "relu",
            Layer::LogSoftmax => "logsoftmax",
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Layer::Linear { weights, bias } => weights.as_slice().len() + bias.len(),
            _ => 0,
        }
    }

    fn output_width(&self, input: usize) -> usize {
        match self {
            Layer::Linear { weights, .. } => weights.rows(),
            _ => input,
        }
    }

    fn forward_row(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear { weights, bias } => weights
                .iter_rows()
                .zip(bias)
                .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
                .collect(),
            Layer::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
            Layer::LogSoftmax => log_softmax(x),
        }
    }
}

/// Stable log-softmax: shift by the maximum before exponentiating.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Ordered layer stack over `input_dim` features. Construction checks that
/// each Linear layer's input width matches the width flowing into it.
#[derive(Debug, Clone, PartialEq)]
pub struct FfnModel {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl FfnModel {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Linear { weights, .. } = layer {
                if weights.cols() != width {
                    return Err(Error::shape(format!(
                        "layer {i} (linear) expects {} inputs, previous width is {width}",
                        weights.cols()
                    )));
                }
            }
            width = layer.output_width(width);
        }
        Ok(Self { input_dim, layers })
    }

    /// `Linear, ReLU` per hidden width, then `Linear(classes), LogSoftmax`,
    /// with all parameters zero.
    pub fn classifier(input_dim: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        if input_dim == 0 || classes == 0 || hidden.contains(&0) {
            return Err(Error::validation("layer widths must be at least 1"));
        }
        let mut layers = Vec::with_capacity(2 * hidden.len() + 2);
        let mut width = input_dim;
        for &h in hidden {
            layers.push(Layer::Linear { weights: Matrix::zeros(h, width), bias: vec![0.0; h] });
            layers.push(Layer::Relu);
            width = h;
        }
        layers.push(Layer::Linear { weights: Matrix::zeros(classes, width), bias: vec![0.0; classes] });
        layers.push(Layer::LogSoftmax);
        Self::new(input_dim, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_dim(&self) -> usize {
        self.layers.iter().fold(self.input_dim, |w, l| l.output_width(w))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// Each Linear's weights (row-major) then bias, in layer order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            if let Layer::Linear { weights, bias } = layer {
                out.extend_from_slice(weights.as_slice());
                out.extend_from_slice(bias);
            }
        }
        out
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_params() {
            return Err(Error::shape(format!("model has {} parameters, got {}", self.num_params(), params.len())));
        }
        let mut next = self.clone();
        next.set_params(params);
        Ok(next)
    }

    fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for layer in &mut self.layers {
            if let Layer::Linear { weights, bias } = layer {
                let w = weights.as_mut_slice();
                w.copy_from_slice(&params[offset..offset + w.len()]);
                offset += w.len();
                let nb = bias.len();
                bias.copy_from_slice(&params[offset..offset + nb]);
                offset += nb;
            }
        }
    }

    fn ends_in_log_softmax(&self) -> bool {
        matches!(self.layers.last(), Some(Layer::LogSoftmax))
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols == self.input_dim {
            return Ok(());
        }
        let at = self.layers.iter().position(|l| matches!(l, Layer::Linear { .. })).unwrap_or(0);
        Err(Error::shape(format!("layer {at} expects {} inputs, got {cols}", self.input_dim)))
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x.cols())?;
        let width = self.output_dim();
        let mut data = Vec::with_capacity(x.rows() * width);
        for row in x.iter_rows() {
            let mut a = row.to_vec();
            for layer in &self.layers {
                a = layer.forward_row(&a);
            }
            data.extend(a);
        }
        Matrix::from_vec(x.rows(), width, data)
    }

    /// Argmax of each output row; ties go to the lower class.
    pub fn classify(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.forward(x)?.iter_rows().map(argmax).collect())
    }

    fn check_dataset(&self, ds: &LabeledDataset) -> Result<()> {
        if !self.ends_in_log_softmax() {
            return Err(Error::validation("loss requires a final logsoftmax layer"));
        }
        self.check_input(ds.dim())?;
        let classes = self.output_dim();
        if let Some(&bad) = ds.labels().iter().find(|&&y| y >= classes) {
            return Err(Error::validation(format!("label {bad} out of range for {classes} output classes")));
        }
        Ok(())
    }

    /// Adds `scale * d(-log p[y])/d(params)` for one example into `grad` and
    /// returns `-log p[y]`.
    fn backprop_row(&self, x: &[f64], y: usize, scale: f64, grad: &mut [f64]) -> f64 {
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        inputs.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward_row(inputs.last().unwrap());
            inputs.push(next);
        }
        let out = inputs.last().unwrap();
        let loss = -out[y];

        let mut g = vec![0.0; out.len()];
        g[y] = -scale;
        let mut offset = grad.len();
        for (layer, (input, output)) in self.layers.iter().zip(inputs.iter().zip(&inputs[1..])).rev() {
            g = match layer {
                Layer::LogSoftmax => {
                    let total: f64 = g.iter().sum();
                    g.iter().zip(output).map(|(gi, o)| gi - o.exp() * total).collect()
                }
                Layer::Relu => g.iter().zip(input).map(|(&gi, &v)| if v > 0.0 { gi } else { 0.0 }).collect(),
                Layer::Linear { weights, bias } => {
                    offset -= bias.len();
                    for (gb, gi) in grad[offset..offset + bias.len()].iter_mut().zip(&g) {
                        *gb += gi;
                    }
                    let n_in = weights.cols();
                    offset -= weights.as_slice().len();
                    let mut back = vec![0.0; n_in];
                    for (r, &gi) in g.iter().enumerate() {
                        let gw = &mut grad[offset + r * n_in..offset + (r + 1) * n_in];
                        for ((gwj, &xj), (bj, &wj)) in gw.iter_mut().zip(input).zip(back.iter_mut().zip(weights.row(r)))
                        {
                            *gwj += gi * xj;
                            *bj += gi * wj;
                        }
                    }
                    back
                }
            };
        }
        debug_assert_eq!(offset, 0);
        loss
    }

    /// Mean negative log-likelihood and its parameter gradient.
    pub fn loss_grad(&self, ds: &LabeledDataset) -> Result<(f64, Vec<f64>)> {
        self.check_dataset(ds)?;
        if ds.is_empty() {
            return Err(Error::validation("dataset is empty"));
        }
        let rows: Vec<usize> = (0..ds.len()).collect();
        Ok(self.loss_grad_rows(ds, &rows, 1.0 / ds.len() as f64))
    }

    fn loss_grad_rows(&self, ds: &LabeledDataset, rows: &[usize], scale: f64) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.num_params()];
        let mut loss = 0.0;
        for &i in rows {
            loss += self.backprop_row(ds.features().row(i), ds.labels()[i], scale, &mut grad);
        }
        (loss * scale, grad)
    }

    fn loss_rows(&self, ds: &LabeledDataset, rows: &[usize], scale: f64) -> f64 {
        let mut loss = 0.0;
        for &i in rows {
            let mut a = ds.features().row(i).to_vec();
            for layer in &self.layers {
                a = layer.forward_row(&a);
            }
            loss -= a[ds.labels()[i]];
        }
        loss * scale
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Mean NLL of a fixed architecture as a function of its flattened
/// parameters, decomposed per example.
pub struct FfnObjective<'a> {
    template: FfnModel,
    ds: &'a LabeledDataset,
}

impl<'a> FfnObjective<'a> {
    pub fn new(model: &FfnModel, ds: &'a LabeledDataset) -> Result<Self> {
        model.check_dataset(ds)?;
        if ds.is_empty() {
            return Err(Error::validation("dataset is empty"));
        }
        Ok(Self { template: model.clone(), ds })
    }

    fn at(&self, params: &[f64]) -> FfnModel {
        let mut m = self.template.clone();
        m.set_params(params);
        m
    }

    fn scale(&self) -> f64 {
        1.0 / self.ds.len() as f64
    }
}

impl Objective for FfnObjective<'_> {
    fn evaluate(&self, params: &[f64]) -> f64 {
        let rows: Vec<usize> = (0..self.ds.len()).collect();
        self.evaluate_examples(params, &rows)
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let rows: Vec<usize> = (0..self.ds.len()).collect();
        self.gradient_examples(params, &rows)
    }
}

impl PartitionedObjective for FfnObjective<'_> {
    fn num_examples(&self) -> usize {
        self.ds.len()
    }

    fn evaluate_examples(&self, params: &[f64], examples: &[usize]) -> f64 {
        self.at(params).loss_rows(self.ds, examples, self.scale())
    }

    fn gradient_examples(&self, params: &[f64], examples: &[usize]) -> Vec<f64> {
        self.at(params).loss_grad_rows(self.ds, examples, self.scale()).1
    }
}

pub fn ffn_forward(model: &FfnModel, x: &Matrix) -> Result<Matrix> {
    model.forward(x)
}

pub fn ffn_loss_grad(model: &FfnModel, ds: &LabeledDataset) -> Result<(f64, Vec<f64>)> {
    model.loss_grad(ds)
}

pub fn ffn_classify(model: &FfnModel, x: &Matrix) -> Result<Vec<usize>> {
    model.classify(x)
}

/// Glorot-uniform draw for every Linear layer in order (weights row-major
/// from `U[-a, a]` with `a = sqrt(6 / (in + out))`), zero biases.
pub fn glorot_init(model: &FfnModel, rng: &mut SeededRng) -> FfnModel {
    let mut m = model.clone();
    for layer in &mut m.layers {
        if let Layer::Linear { weights, bias } = layer {
            let a = (6.0 / (weights.rows() + weights.cols()) as f64).sqrt();
            for w in weights.as_mut_slice() {
                *w = rng.uniform_range(-a, a);
            }
            bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }
    m
}

/// Re-initializes `model` from `rng` and trains it with `optimizer`.
/// Divergence ends training early with `converged = false`.
pub fn ffn_train(
    model: &FfnModel,
    ds: &LabeledDataset,
    optimizer: &Sgd,
    rng: &mut SeededRng,
) -> Result<(FfnModel, OptimizationReport)> {
    let objective = FfnObjective::new(model, ds)?;
    let init = glorot_init(model, rng).params();
    let report = optimizer.minimize_lenient(&objective, &init, rng)?;
    let trained = objective.at(&report.final_params);
    Ok((trained, report))
}
