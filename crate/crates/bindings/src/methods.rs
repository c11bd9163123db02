//! Entry points of the shipped methods. Each receives its inputs with
//! defaults applied and calls the library exactly as a direct user would.

use mlkit::clustering::{inertia, kmeans, KMeansConfig, KMeansModel, KMeansVariant};
use mlkit::linear::{linreg_train, logreg_train};
use mlkit::model_io::Model;
use mlkit::neural::{ffn_train, FfnModel};
use mlkit::optimize::{GradientDescent, LineSearch, Sgd};
use mlkit::trees::{KdTree, KernelKind};
use mlkit::{LabeledDataset, Matrix, SeededRng};

use crate::error::BindingError;
use crate::registry::{MethodSpec, ParamSpec};
use crate::value::{ParamPack, ParamType, Value};

/// Name of the seed parameter on every stochastic method.
pub const SEED_PARAM: &str = "seed";

pub(crate) fn builtin() -> Vec<MethodSpec> {
    vec![linear_regression(), logistic_regression(), kmeans_spec(), knn(), kfn(), kde(), ffn()]
}

struct Ctx {
    method: &'static str,
}

impl Ctx {
    fn invalid(&self, message: impl Into<String>) -> BindingError {
        BindingError::InvalidArguments { method: self.method.to_string(), message: message.into() }
    }

    fn lib<T>(&self, r: mlkit::Result<T>) -> Result<T, BindingError> {
        r.map_err(|source| BindingError::Run { method: self.method.to_string(), source })
    }

    /// Value that is optional in the signature but required in this mode.
    fn need<T>(&self, v: Option<T>, name: &str, why: &str) -> Result<T, BindingError> {
        v.ok_or_else(|| self.invalid(format!("{name} is required {why}")))
    }

    fn count(&self, p: &ParamPack, name: &str) -> Result<Option<usize>, BindingError> {
        match p.int(name)? {
            None => Ok(None),
            Some(v) => usize::try_from(v).map(Some).map_err(|_| self.invalid(format!("{name} must be >= 0, got {v}"))),
        }
    }

    fn seed(&self, p: &ParamPack) -> Result<u64, BindingError> {
        let v = p.int(SEED_PARAM)?.unwrap_or(0);
        u64::try_from(v).map_err(|_| self.invalid(format!("seed must be >= 0, got {v}")))
    }

    fn model<'a>(&self, p: &'a ParamPack, name: &str) -> Result<Option<&'a Model>, BindingError> {
        Ok(p.model(name)?.map(|m| m.as_ref()))
    }

    fn labeled(&self, x: &Matrix, labels: &[f64]) -> Result<LabeledDataset, BindingError> {
        self.lib(LabeledDataset::from_float_labels(x.clone(), labels))
    }

    fn exclusive(&self, p: &ParamPack, train: &str) -> Result<bool, BindingError> {
        match (p.contains(train), p.contains("input_model")) {
            (true, true) => Err(self.invalid(format!("give either {train} (to train) or input_model, not both"))),
            (false, false) => Err(self.invalid(format!("give {train} to train or input_model to reuse a model"))),
            (training, _) => Ok(training),
        }
    }
}

fn labels_to_values(labels: &[usize]) -> Vec<f64> {
    labels.iter().map(|&l| l as f64).collect()
}

const INPUT_MODEL_DOC: &str = "Previously trained model to reuse instead of training.";
const TEST_DOC: &str = "Points to predict, one per row.";

fn linear_regression() -> MethodSpec {
    MethodSpec {
        name: "linear_regression",
        summary: "Ridge-regularized least-squares linear regression.",
        detail: "Trains on input and responses, or loads input_model; predicts test when given. \
                 The intercept is not penalized.",
        params: vec![
            ParamSpec::optional("input", ParamType::Matrix, "Training points, one per row."),
            ParamSpec::optional("responses", ParamType::DoubleVector, "Training target for each input row."),
            ParamSpec::with_default("lambda", Value::Double(0.0), "Ridge penalty on the coefficients."),
            ParamSpec::optional("input_model", ParamType::Model("linear_regression"), INPUT_MODEL_DOC),
            ParamSpec::optional("test", ParamType::Matrix, TEST_DOC),
            ParamSpec::output("output_model", ParamType::Model("linear_regression"), "The trained or loaded model."),
            ParamSpec::output("predictions", ParamType::DoubleVector, "Predicted response for each test row."),
        ],
        run: run_linear_regression,
    }
}

fn run_linear_regression(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let cx = Ctx { method: "linear_regression" };
    let model = if cx.exclusive(p, "input")? {
        let x = p.matrix("input")?.expect("checked");
        let y = cx.need(p.double_vector("responses")?, "responses", "for training")?;
        cx.lib(linreg_train(x, y, p.double("lambda")?.unwrap_or(0.0)))?
    } else {
        match cx.model(p, "input_model")? {
            Some(Model::LinearRegression(m)) => m.clone(),
            _ => unreachable!("type-checked by the registry"),
        }
    };
    let mut out = ParamPack::new();
    if let Some(test) = p.matrix("test")? {
        out.set("predictions", Value::DoubleVector(cx.lib(model.predict(test))?));
    }
    out.set("output_model", Value::model(model));
    Ok(out)
}

fn logistic_regression() -> MethodSpec {
    MethodSpec {
        name: "logistic_regression",
        summary: "Binary L2-regularized logistic regression.",
        detail: "Trains from zero weights with backtracking gradient descent on input and labels (0 or 1), \
                 or loads input_model; classifies test when given.",
        params: vec![
            ParamSpec::optional("input", ParamType::Matrix, "Training points, one per row."),
            ParamSpec::optional("labels", ParamType::DoubleVector, "Class (0 or 1) of each input row."),
            ParamSpec::with_default("lambda", Value::Double(0.0), "L2 penalty on the coefficients."),
            ParamSpec::with_default("step_size", Value::Double(1.0), "Initial step of each line search."),
            ParamSpec::with_default("max_iterations", Value::Int(10_000), "Gradient descent iteration cap."),
            ParamSpec::with_default("tolerance", Value::Double(1e-12), "Relative loss change that stops training."),
            ParamSpec::optional(
                "decision_boundary",
                ParamType::Double,
                "Probability above which a point is labeled 1; 0.5 for new models, stored value for loaded ones.",
            ),
            ParamSpec::optional("input_model", ParamType::Model("logistic_regression"), INPUT_MODEL_DOC),
            ParamSpec::optional("test", ParamType::Matrix, TEST_DOC),
            ParamSpec::output("output_model", ParamType::Model("logistic_regression"), "The trained or loaded model."),
            ParamSpec::output("predictions", ParamType::DoubleVector, "Predicted class of each test row."),
            ParamSpec::output("probabilities", ParamType::DoubleVector, "Probability of class 1 for each test row."),
        ],
        run: run_logistic_regression,
    }
}

fn run_logistic_regression(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let cx = Ctx { method: "logistic_regression" };
    let mut model = if cx.exclusive(p, "input")? {
        let x = p.matrix("input")?.expect("checked");
        let labels = cx.need(p.double_vector("labels")?, "labels", "for training")?;
        let ds = cx.labeled(x, labels)?;
        let optimizer = GradientDescent {
            step: p.double("step_size")?.unwrap_or(1.0),
            max_iters: cx.count(p, "max_iterations")?.unwrap_or(10_000),
            tol: p.double("tolerance")?.unwrap_or(1e-12),
            line_search: LineSearch::Backtracking,
        };
        cx.lib(logreg_train(&ds, p.double("lambda")?.unwrap_or(0.0), &optimizer))?.0
    } else {
        match cx.model(p, "input_model")? {
            Some(Model::LogisticRegression(m)) => m.clone(),
            _ => unreachable!("type-checked by the registry"),
        }
    };
    if let Some(t) = p.double("decision_boundary")? {
        model = cx.lib(model.with_threshold(t))?;
    }
    let mut out = ParamPack::new();
    if let Some(test) = p.matrix("test")? {
        let (labels, probs) = cx.lib(model.classify(test))?;
        out.set("predictions", Value::DoubleVector(labels_to_values(&labels)));
        out.set("probabilities", Value::DoubleVector(probs));
    }
    out.set("output_model", Value::model(model));
    Ok(out)
}

fn kmeans_spec() -> MethodSpec {
    MethodSpec {
        name: "kmeans",
        summary: "k-means clustering with k-means++ seeding.",
        detail: "Clusters input into the requested number of clusters, or assigns input to the centroids \
                 of input_model. Both variants return identical clusterings; hamerly skips most distance \
                 evaluations.",
        params: vec![
            ParamSpec::required("input", ParamType::Matrix, "Points, one per row."),
            ParamSpec::optional("clusters", ParamType::Int, "Number of clusters; required when training."),
            ParamSpec::with_default("variant", Value::String("lloyd".into()), "Algorithm: lloyd, hamerly."),
            ParamSpec::with_default("max_iterations", Value::Int(1000), "Iteration cap."),
            ParamSpec::with_default(
                "tolerance",
                Value::Double(1e-6),
                "Largest centroid move that counts as converged.",
            ),
            ParamSpec::with_default(SEED_PARAM, Value::Int(0), "Seed for k-means++ initialization."),
            ParamSpec::optional("input_model", ParamType::Model("kmeans"), INPUT_MODEL_DOC),
            ParamSpec::output("centroids", ParamType::Matrix, "Final centroids, one per row."),
            ParamSpec::output("assignments", ParamType::DoubleVector, "Cluster index of each input row."),
            ParamSpec::output("inertia", ParamType::Double, "Sum of squared distances to assigned centroids."),
            ParamSpec::output("iterations", ParamType::Int, "Centroid updates performed."),
            ParamSpec::output("distance_computations", ParamType::Int, "Distance evaluations performed."),
            ParamSpec::output("output_model", ParamType::Model("kmeans"), "The centroids as a reusable model."),
        ],
        run: run_kmeans,
    }
}

fn run_kmeans(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let cx = Ctx { method: "kmeans" };
    let x = p.matrix("input")?.expect("required");
    let mut out = ParamPack::new();
    if let Some(model) = cx.model(p, "input_model")? {
        if p.contains("clusters") {
            return Err(cx.invalid("give either clusters (to train) or input_model, not both"));
        }
        let Model::KMeans(model) = model else { unreachable!("type-checked by the registry") };
        let assignments = cx.lib(model.assign(x))?;
        out.set("inertia", Value::Double(inertia(x, model.centroids(), &assignments)));
        out.set("assignments", Value::DoubleVector(labels_to_values(&assignments)));
        out.set("centroids", Value::Matrix(model.centroids().clone()));
        out.set("output_model", Value::model(model.clone()));
        return Ok(out);
    }
    let k = cx.need(cx.count(p, "clusters")?, "clusters", "for training")?;
    let variant: KMeansVariant = cx.lib(p.string("variant")?.unwrap_or("lloyd").parse())?;
    let config = KMeansConfig {
        max_iter: cx.count(p, "max_iterations")?.unwrap_or(1000),
        tol: p.double("tolerance")?.unwrap_or(1e-6),
    };
    let r = cx.lib(kmeans(x, k, variant, config, &mut SeededRng::new(cx.seed(p)?)))?;
    out.set("assignments", Value::DoubleVector(labels_to_values(&r.assignments)));
    out.set("inertia", Value::Double(r.inertia));
    out.set("iterations", Value::Int(r.iterations as i64));
    out.set("distance_computations", Value::Int(r.distance_computations as i64));
    out.set("output_model", Value::model(cx.lib(KMeansModel::new(r.centroids.clone()))?));
    out.set("centroids", Value::Matrix(r.centroids));
    Ok(out)
}

fn neighbor_spec(name: &'static str, summary: &'static str, run: crate::registry::RunFn) -> MethodSpec {
    MethodSpec {
        name,
        summary,
        detail: "Exact kd-tree search; ties go to the lower reference index. \
                 Searches the reference set itself when no query is given.",
        params: vec![
            ParamSpec::required("reference", ParamType::Matrix, "Reference points, one per row."),
            ParamSpec::optional("query", ParamType::Matrix, "Query points; defaults to the reference set."),
            ParamSpec::required("k", ParamType::Int, "Neighbors per query."),
            ParamSpec::with_default("leaf_size", Value::Int(20), "Maximum points per kd-tree leaf."),
            ParamSpec::output("neighbors", ParamType::Matrix, "Reference indices, one row per query."),
            ParamSpec::output("distances", ParamType::Matrix, "Euclidean distances matching neighbors."),
        ],
        run,
    }
}

fn knn() -> MethodSpec {
    neighbor_spec("knn", "k nearest neighbors, nearest first.", run_knn)
}

fn kfn() -> MethodSpec {
    neighbor_spec("kfn", "k furthest neighbors, furthest first.", run_kfn)
}

fn run_neighbors(p: &ParamPack, cx: Ctx, furthest: bool) -> Result<ParamPack, BindingError> {
    let refs = p.matrix("reference")?.expect("required");
    let query = p.matrix("query")?.unwrap_or(refs);
    let k = cx.count(p, "k")?.expect("required");
    let tree = cx.lib(KdTree::build(refs, cx.count(p, "leaf_size")?.unwrap_or(20)))?;
    let nb = cx.lib(if furthest { tree.kfn(query, k) } else { tree.knn(query, k) })?;
    Ok(ParamPack::new()
        .with("neighbors", Value::Matrix(nb.index_matrix()))
        .with("distances", Value::Matrix(nb.distance_matrix())))
}

fn run_knn(p: &ParamPack) -> Result<ParamPack, BindingError> {
    run_neighbors(p, Ctx { method: "knn" }, false)
}

fn run_kfn(p: &ParamPack) -> Result<ParamPack, BindingError> {
    run_neighbors(p, Ctx { method: "kfn" }, true)
}

fn kde() -> MethodSpec {
    MethodSpec {
        name: "kde",
        summary: "Kernel density estimation with a relative error guarantee.",
        detail: "Each estimate is within rel_error times the exact density; rel_error 0 is exact. \
                 Evaluates at the reference points when no query is given.",
        params: vec![
            ParamSpec::required("reference", ParamType::Matrix, "Reference points, one per row."),
            ParamSpec::optional("query", ParamType::Matrix, "Query points; defaults to the reference set."),
            ParamSpec::with_default("kernel", Value::String("gaussian".into()), "Kernel: gaussian, epanechnikov."),
            ParamSpec::with_default("bandwidth", Value::Double(1.0), "Kernel bandwidth."),
            ParamSpec::with_default("rel_error", Value::Double(0.05), "Allowed relative error per estimate."),
            ParamSpec::with_default("leaf_size", Value::Int(20), "Maximum points per kd-tree leaf."),
            ParamSpec::output("predictions", ParamType::DoubleVector, "Density estimate at each query."),
        ],
        run: run_kde,
    }
}

fn run_kde(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let cx = Ctx { method: "kde" };
    let refs = p.matrix("reference")?.expect("required");
    let query = p.matrix("query")?.unwrap_or(refs);
    let kind: KernelKind = cx.lib(p.string("kernel")?.unwrap_or("gaussian").parse())?;
    let kernel = cx.lib(kind.with_bandwidth(p.double("bandwidth")?.unwrap_or(1.0)))?;
    let tree = cx.lib(KdTree::build(refs, cx.count(p, "leaf_size")?.unwrap_or(20)))?;
    let dens = cx.lib(tree.kde(query, &kernel, p.double("rel_error")?.unwrap_or(0.05)))?;
    Ok(ParamPack::new().with("predictions", Value::DoubleVector(dens)))
}

fn ffn() -> MethodSpec {
    MethodSpec {
        name: "ffn",
        summary: "Feedforward neural network classifier.",
        detail: "Linear and ReLU layers per hidden width, then a linear layer and log-softmax over the classes \
                 present in labels. Trains with mini-batch SGD from a seeded Glorot initialization, or loads \
                 input_model; classifies test when given.",
        params: vec![
            ParamSpec::optional("input", ParamType::Matrix, "Training points, one per row."),
            ParamSpec::optional("labels", ParamType::DoubleVector, "Class (0, 1, ...) of each input row."),
            ParamSpec::with_default(
                "hidden_layers",
                Value::String("8".into()),
                "Comma-separated hidden widths; empty for none.",
            ),
            ParamSpec::with_default("step_size", Value::Double(0.1), "SGD step size."),
            ParamSpec::with_default("batch_size", Value::Int(32), "Examples per SGD update."),
            ParamSpec::with_default("epochs", Value::Int(100), "Passes over the training set."),
            ParamSpec::with_default(SEED_PARAM, Value::Int(0), "Seed for initialization and shuffling."),
            ParamSpec::optional("input_model", ParamType::Model("ffn"), INPUT_MODEL_DOC),
            ParamSpec::optional("test", ParamType::Matrix, TEST_DOC),
            ParamSpec::output("output_model", ParamType::Model("ffn"), "The trained or loaded network."),
            ParamSpec::output("predictions", ParamType::DoubleVector, "Predicted class of each test row."),
            ParamSpec::output("final_loss", ParamType::Double, "Training loss after the last epoch."),
        ],
        run: run_ffn,
    }
}

/// Parses `"8,4"` into `[8, 4]`; the empty string means no hidden layers.
pub fn parse_hidden_layers(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(format!("bad hidden layer width {w:?}")),
        })
        .collect()
}

fn run_ffn(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let cx = Ctx { method: "ffn" };
    let mut out = ParamPack::new();
    let model = if cx.exclusive(p, "input")? {
        let x = p.matrix("input")?.expect("checked");
        let labels = cx.need(p.double_vector("labels")?, "labels", "for training")?;
        let ds = cx.labeled(x, labels)?;
        let hidden = parse_hidden_layers(p.string("hidden_layers")?.unwrap_or("8")).map_err(|m| cx.invalid(m))?;
        let arch = cx.lib(FfnModel::classifier(ds.dim(), &hidden, ds.num_classes().max(1)))?;
        let sgd = Sgd {
            step: p.double("step_size")?.unwrap_or(0.1),
            batch_size: cx.count(p, "batch_size")?.unwrap_or(32),
            epochs: cx.count(p, "epochs")?.unwrap_or(100),
            decay: 0.0,
            tol: 0.0,
        };
        let (model, report) = cx.lib(ffn_train(&arch, &ds, &sgd, &mut SeededRng::new(cx.seed(p)?)))?;
        out.set("final_loss", Value::Double(report.final_loss));
        model
    } else {
        match cx.model(p, "input_model")? {
            Some(Model::Ffn(m)) => m.clone(),
            _ => unreachable!("type-checked by the registry"),
        }
    };
    if let Some(test) = p.matrix("test")? {
        out.set("predictions", Value::DoubleVector(labels_to_values(&cx.lib(model.classify(test))?)));
    }
    out.set("output_model", Value::model(model));
    Ok(out)
}
