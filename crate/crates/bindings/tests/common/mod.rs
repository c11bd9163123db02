//! Fixtures plus two independent routes to each method's outputs: the
//! library API called directly, and the C boundary driven through raw
//! pointers. Shared with the acceptance target.
#![allow(dead_code)]

use std::ffi::CString;

use mlkit::clustering::{inertia, kmeans, KMeansConfig, KMeansModel, KMeansVariant};
use mlkit::dataset::make_blobs;
use mlkit::linear::{linreg_train, logreg_train, LogisticRegressionModel};
use mlkit::model_io::{Format, Model};
use mlkit::neural::{ffn_train, FfnModel};
use mlkit::optimize::{GradientDescent, LineSearch, Sgd};
use mlkit::trees::{KdTree, KernelKind};
use mlkit::{LabeledDataset, Matrix, SeededRng};
use mlkit_bindings::boundary::*;
use mlkit_bindings::{ParamPack, ParamType, Value};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-2.0, 2.0)).collect()).unwrap()
}

fn to_f64(labels: &[usize]) -> Vec<f64> {
    labels.iter().map(|&l| l as f64).collect()
}

pub struct Case {
    pub label: String,
    pub method: &'static str,
    pub inputs: ParamPack,
}

fn case(label: &str, method: &'static str, inputs: ParamPack) -> Case {
    Case { label: label.to_string(), method, inputs }
}

fn blobs(seed: u64) -> LabeledDataset {
    let centers = Matrix::from_rows(&[vec![-3.0, -3.0], vec![3.0, 3.0], vec![3.0, -3.0]]).unwrap();
    make_blobs(&centers, 30, 1.0, &mut SeededRng::new(seed)).unwrap()
}

/// Training and reuse invocations for all seven methods.
pub fn cases() -> Vec<Case> {
    let mut rng = SeededRng::new(2024);
    let x = random_matrix(40, 3, &mut rng);
    let test = random_matrix(7, 3, &mut rng);
    let y: Vec<f64> = x.iter_rows().map(|r| 1.0 + 2.0 * r[0] - r[1] + 0.5 * r[2] + 0.1 * rng.normal()).collect();

    let ds = blobs(5);
    let binary: Vec<f64> = ds.labels().iter().map(|&l| (l == 1) as u8 as f64).collect();
    let classes = to_f64(ds.labels());
    let points = ds.features().clone();
    let probe = random_matrix(9, 2, &mut rng);

    let lin_model = linreg_train(&x, &y, 0.0).unwrap();
    let log_model = LogisticRegressionModel::from_parts(vec![0.1, 1.0, 1.2], 0.0, 0.5).unwrap();
    let km_model = KMeansModel::new(Matrix::from_rows(&[vec![-3.0, -3.0], vec![3.0, 3.0]]).unwrap()).unwrap();
    let mut ffn_model = FfnModel::classifier(2, &[4], 3).unwrap();
    let params: Vec<f64> = (0..ffn_model.num_params()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    ffn_model = ffn_model.with_params(&params).unwrap();

    let refs = random_matrix(120, 3, &mut rng);
    let queries = random_matrix(15, 3, &mut rng);

    vec![
        case(
            "linreg train",
            "linear_regression",
            ParamPack::new()
                .with("input", Value::Matrix(x.clone()))
                .with("responses", Value::DoubleVector(y.clone()))
                .with("test", Value::Matrix(test.clone())),
        ),
        case(
            "linreg ridge",
            "linear_regression",
            ParamPack::new()
                .with("input", Value::Matrix(x.clone()))
                .with("responses", Value::DoubleVector(y.clone()))
                .with("lambda", Value::Double(0.5)),
        ),
        case(
            "linreg reuse",
            "linear_regression",
            ParamPack::new().with("input_model", Value::model(lin_model)).with("test", Value::Matrix(test.clone())),
        ),
        case(
            "logreg train",
            "logistic_regression",
            ParamPack::new()
                .with("input", Value::Matrix(points.clone()))
                .with("labels", Value::DoubleVector(binary.clone()))
                .with("lambda", Value::Double(0.01))
                .with("max_iterations", Value::Int(300))
                .with("test", Value::Matrix(probe.clone())),
        ),
        case(
            "logreg reuse",
            "logistic_regression",
            ParamPack::new()
                .with("input_model", Value::model(log_model))
                .with("decision_boundary", Value::Double(0.7))
                .with("test", Value::Matrix(probe.clone())),
        ),
        case(
            "kmeans lloyd",
            "kmeans",
            ParamPack::new()
                .with("input", Value::Matrix(points.clone()))
                .with("clusters", Value::Int(3))
                .with("seed", Value::Int(11)),
        ),
        case(
            "kmeans hamerly",
            "kmeans",
            ParamPack::new()
                .with("input", Value::Matrix(points.clone()))
                .with("clusters", Value::Int(4))
                .with("variant", Value::String("hamerly".into()))
                .with("tolerance", Value::Double(0.0)),
        ),
        case(
            "kmeans reuse",
            "kmeans",
            ParamPack::new().with("input", Value::Matrix(points.clone())).with("input_model", Value::model(km_model)),
        ),
        case(
            "knn",
            "knn",
            ParamPack::new()
                .with("reference", Value::Matrix(refs.clone()))
                .with("query", Value::Matrix(queries.clone()))
                .with("k", Value::Int(5))
                .with("leaf_size", Value::Int(4)),
        ),
        case(
            "knn self",
            "knn",
            ParamPack::new().with("reference", Value::Matrix(refs.clone())).with("k", Value::Int(3)),
        ),
        case(
            "kfn",
            "kfn",
            ParamPack::new()
                .with("reference", Value::Matrix(refs.clone()))
                .with("query", Value::Matrix(queries.clone()))
                .with("k", Value::Int(4)),
        ),
        case(
            "kde gaussian",
            "kde",
            ParamPack::new()
                .with("reference", Value::Matrix(refs.clone()))
                .with("query", Value::Matrix(queries.clone()))
                .with("bandwidth", Value::Double(0.4)),
        ),
        case(
            "kde epanechnikov exact",
            "kde",
            ParamPack::new()
                .with("reference", Value::Matrix(refs.clone()))
                .with("kernel", Value::String("epanechnikov".into()))
                .with("rel_error", Value::Double(0.0))
                .with("leaf_size", Value::Int(1)),
        ),
        case(
            "ffn train",
            "ffn",
            ParamPack::new()
                .with("input", Value::Matrix(points.clone()))
                .with("labels", Value::DoubleVector(classes.clone()))
                .with("hidden_layers", Value::String("6,4".into()))
                .with("batch_size", Value::Int(16))
                .with("epochs", Value::Int(20))
                .with("seed", Value::Int(3))
                .with("test", Value::Matrix(probe.clone())),
        ),
        case(
            "ffn reuse",
            "ffn",
            ParamPack::new().with("input_model", Value::model(ffn_model)).with("test", Value::Matrix(probe)),
        ),
    ]
}

fn m<'a>(p: &'a ParamPack, k: &str) -> Option<&'a Matrix> {
    p.matrix(k).unwrap()
}
fn v<'a>(p: &'a ParamPack, k: &str) -> Option<&'a [f64]> {
    p.double_vector(k).unwrap()
}
fn d(p: &ParamPack, k: &str, default: f64) -> f64 {
    p.double(k).unwrap().unwrap_or(default)
}
fn i(p: &ParamPack, k: &str, default: i64) -> i64 {
    p.int(k).unwrap().unwrap_or(default)
}
fn s<'a>(p: &'a ParamPack, k: &str, default: &'a str) -> &'a str {
    p.string(k).unwrap().unwrap_or(default)
}

/// Outputs computed by calling the library directly, written as a user of
/// the library would, independent of the binding entry points.
pub fn direct(method: &str, p: &ParamPack) -> ParamPack {
    let mut out = ParamPack::new();
    match method {
        "linear_regression" => {
            let model = match p.model("input_model").unwrap() {
                Some(mm) => match mm.as_ref() {
                    Model::LinearRegression(l) => l.clone(),
                    _ => panic!("wrong model"),
                },
                None => linreg_train(m(p, "input").unwrap(), v(p, "responses").unwrap(), d(p, "lambda", 0.0)).unwrap(),
            };
            if let Some(t) = m(p, "test") {
                out.set("predictions", Value::DoubleVector(model.predict(t).unwrap()));
            }
            out.set("output_model", Value::model(model));
        }
        "logistic_regression" => {
            let mut model = match p.model("input_model").unwrap() {
                Some(mm) => match mm.as_ref() {
                    Model::LogisticRegression(l) => l.clone(),
                    _ => panic!("wrong model"),
                },
                None => {
                    let ds = LabeledDataset::from_float_labels(m(p, "input").unwrap().clone(), v(p, "labels").unwrap())
                        .unwrap();
                    let gd = GradientDescent {
                        step: d(p, "step_size", 1.0),
                        max_iters: i(p, "max_iterations", 10_000) as usize,
                        tol: d(p, "tolerance", 1e-12),
                        line_search: LineSearch::Backtracking,
                    };
                    logreg_train(&ds, d(p, "lambda", 0.0), &gd).unwrap().0
                }
            };
            if let Some(t) = p.double("decision_boundary").unwrap() {
                model = model.with_threshold(t).unwrap();
            }
            if let Some(t) = m(p, "test") {
                let (labels, probs) = model.classify(t).unwrap();
                out.set("predictions", Value::DoubleVector(to_f64(&labels)));
                out.set("probabilities", Value::DoubleVector(probs));
            }
            out.set("output_model", Value::model(model));
        }
        "kmeans" => {
            let x = m(p, "input").unwrap();
            if let Some(mm) = p.model("input_model").unwrap() {
                let Model::KMeans(km) = mm.as_ref() else { panic!("wrong model") };
                let a = km.assign(x).unwrap();
                out.set("inertia", Value::Double(inertia(x, km.centroids(), &a)));
                out.set("assignments", Value::DoubleVector(to_f64(&a)));
                out.set("centroids", Value::Matrix(km.centroids().clone()));
                out.set("output_model", Value::model(km.clone()));
            } else {
                let variant: KMeansVariant = s(p, "variant", "lloyd").parse().unwrap();
                let config =
                    KMeansConfig { max_iter: i(p, "max_iterations", 1000) as usize, tol: d(p, "tolerance", 1e-6) };
                let mut rng = SeededRng::new(i(p, "seed", 0) as u64);
                let r = kmeans(x, i(p, "clusters", 0) as usize, variant, config, &mut rng).unwrap();
                out.set("centroids", Value::Matrix(r.centroids.clone()));
                out.set("assignments", Value::DoubleVector(to_f64(&r.assignments)));
                out.set("inertia", Value::Double(r.inertia));
                out.set("iterations", Value::Int(r.iterations as i64));
                out.set("distance_computations", Value::Int(r.distance_computations as i64));
                out.set("output_model", Value::model(KMeansModel::new(r.centroids).unwrap()));
            }
        }
        "knn" | "kfn" => {
            let refs = m(p, "reference").unwrap();
            let q = m(p, "query").unwrap_or(refs);
            let tree = KdTree::build(refs, i(p, "leaf_size", 20) as usize).unwrap();
            let k = i(p, "k", 0) as usize;
            let nb = if method == "knn" { tree.knn(q, k) } else { tree.kfn(q, k) }.unwrap();
            out.set("neighbors", Value::Matrix(nb.index_matrix()));
            out.set("distances", Value::Matrix(nb.distance_matrix()));
        }
        "kde" => {
            let refs = m(p, "reference").unwrap();
            let q = m(p, "query").unwrap_or(refs);
            let kind: KernelKind = s(p, "kernel", "gaussian").parse().unwrap();
            let kernel = kind.with_bandwidth(d(p, "bandwidth", 1.0)).unwrap();
            let tree = KdTree::build(refs, i(p, "leaf_size", 20) as usize).unwrap();
            out.set("predictions", Value::DoubleVector(tree.kde(q, &kernel, d(p, "rel_error", 0.05)).unwrap()));
        }
        "ffn" => {
            let model = match p.model("input_model").unwrap() {
                Some(mm) => match mm.as_ref() {
                    Model::Ffn(f) => f.clone(),
                    _ => panic!("wrong model"),
                },
                None => {
                    let ds = LabeledDataset::from_float_labels(m(p, "input").unwrap().clone(), v(p, "labels").unwrap())
                        .unwrap();
                    let hidden: Vec<usize> =
                        s(p, "hidden_layers", "8").split(',').map(|w| w.trim().parse().unwrap()).collect();
                    let arch = FfnModel::classifier(ds.dim(), &hidden, ds.num_classes()).unwrap();
                    let sgd = Sgd {
                        step: d(p, "step_size", 0.1),
                        batch_size: i(p, "batch_size", 32) as usize,
                        epochs: i(p, "epochs", 100) as usize,
                        decay: 0.0,
                        tol: 0.0,
                    };
                    let (model, report) =
                        ffn_train(&arch, &ds, &sgd, &mut SeededRng::new(i(p, "seed", 0) as u64)).unwrap();
                    out.set("final_loss", Value::Double(report.final_loss));
                    model
                }
            };
            if let Some(t) = m(p, "test") {
                out.set("predictions", Value::DoubleVector(to_f64(&model.classify(t).unwrap())));
            }
            out.set("output_model", Value::model(model));
        }
        other => panic!("no direct oracle for {other}"),
    }
    out
}

/// Packs hold the same names with bitwise-equal values.
pub fn same_outputs(a: &ParamPack, b: &ParamPack) -> Result<(), String> {
    let an: Vec<_> = a.names().collect();
    let bn: Vec<_> = b.names().collect();
    if an != bn {
        return Err(format!("names differ: {an:?} vs {bn:?}"));
    }
    for (k, va) in a.iter() {
        if !va.bit_eq(b.get(k).unwrap()) {
            return Err(format!("{k} differs"));
        }
    }
    Ok(())
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

pub fn last_error(h: u64) -> String {
    let mut needed = 0usize;
    unsafe {
        mlkit_pack_last_error(h, std::ptr::null_mut(), 0, &mut needed);
        let mut buf = vec![0u8; needed];
        assert_eq!(mlkit_pack_last_error(h, buf.as_mut_ptr(), buf.len(), &mut needed), OK);
        String::from_utf8(buf).unwrap()
    }
}

/// Copies every value into a fresh boundary pack.
pub fn push_inputs(h: u64, inputs: &ParamPack) {
    for (k, val) in inputs.iter() {
        let name = cstr(k);
        let n = name.as_ptr();
        let status = unsafe {
            match val {
                Value::Matrix(mm) => mlkit_pack_set_matrix(h, n, mm.rows(), mm.cols(), mm.as_slice().as_ptr()),
                Value::DoubleVector(vv) => mlkit_pack_set_double_vector(h, n, vv.len(), vv.as_ptr()),
                Value::Int(x) => mlkit_pack_set_int(h, n, *x),
                Value::Double(x) => mlkit_pack_set_double(h, n, *x),
                Value::String(x) => mlkit_pack_set_string(h, n, x.as_ptr(), x.len()),
                Value::Flag(x) => mlkit_pack_set_flag(h, n, i32::from(*x)),
                Value::Model(mm) => {
                    let bytes = mm.to_bytes(Format::Binary);
                    mlkit_pack_set_model_bytes(h, n, bytes.as_ptr(), bytes.len())
                }
            }
        };
        assert_eq!(status, OK, "setting {k}");
    }
}

/// Reads one value of a declared type back out of a boundary pack.
pub fn pull(h: u64, name: &str, ty: ParamType) -> Option<Value> {
    let c = cstr(name);
    let n = c.as_ptr();
    let mut present = 0;
    unsafe {
        assert_eq!(mlkit_pack_contains(h, n, &mut present), OK);
        if present == 0 {
            return None;
        }
        Some(match ty {
            ParamType::Matrix => {
                let (mut r, mut cc) = (0, 0);
                assert_eq!(mlkit_pack_get_matrix_dims(h, n, &mut r, &mut cc), OK);
                let mut buf = vec![0.0; r * cc];
                assert_eq!(mlkit_pack_copy_matrix(h, n, buf.as_mut_ptr(), buf.len()), OK);
                Value::Matrix(Matrix::from_vec(r, cc, buf).unwrap())
            }
            ParamType::DoubleVector => {
                let mut len = 0;
                assert_eq!(mlkit_pack_get_double_vector_len(h, n, &mut len), OK);
                let mut buf = vec![0.0; len];
                assert_eq!(mlkit_pack_copy_double_vector(h, n, buf.as_mut_ptr(), buf.len()), OK);
                Value::DoubleVector(buf)
            }
            ParamType::Int => {
                let mut x = 0;
                assert_eq!(mlkit_pack_get_int(h, n, &mut x), OK);
                Value::Int(x)
            }
            ParamType::Double => {
                let mut x = 0.0;
                assert_eq!(mlkit_pack_get_double(h, n, &mut x), OK);
                Value::Double(x)
            }
            ParamType::Flag => {
                let mut x = 0;
                assert_eq!(mlkit_pack_get_flag(h, n, &mut x), OK);
                Value::Flag(x != 0)
            }
            ParamType::String => {
                let mut needed = 0;
                mlkit_pack_get_string(h, n, std::ptr::null_mut(), 0, &mut needed);
                let mut buf = vec![0u8; needed];
                assert_eq!(mlkit_pack_get_string(h, n, buf.as_mut_ptr(), buf.len(), &mut needed), OK);
                Value::String(String::from_utf8(buf).unwrap())
            }
            ParamType::Model(_) => {
                let mut mh = 0;
                assert_eq!(mlkit_pack_get_model_handle(h, n, &mut mh), OK);
                let mut needed = 0;
                mlkit_model_serialize(mh, 1, std::ptr::null_mut(), 0, &mut needed);
                let mut buf = vec![0u8; needed];
                assert_eq!(mlkit_model_serialize(mh, 1, buf.as_mut_ptr(), buf.len(), &mut needed), OK);
                assert_eq!(mlkit_model_destroy(mh), OK);
                Value::Model(std::sync::Arc::new(Model::from_bytes(&buf).unwrap()))
            }
        })
    }
}

/// Runs `method` entirely through the C boundary. On failure returns the
/// status and the pack's last error.
pub fn via_boundary(method: &str, inputs: &ParamPack) -> Result<ParamPack, (Status, String)> {
    let spec = mlkit_bindings::registry().method(method).expect("registered");
    let h = mlkit_pack_create();
    push_inputs(h, inputs);
    let name = cstr(method);
    let status = unsafe { mlkit_pack_run(h, name.as_ptr()) };
    let result = if status == OK {
        let mut out = ParamPack::new();
        for p in spec.outputs() {
            if let Some(v) = pull(h, p.name, p.ty) {
                out.set(p.name, v);
            }
        }
        Ok(out)
    } else {
        Err((status, last_error(h)))
    };
    assert_eq!(mlkit_pack_destroy(h), OK);
    result
}

/// Direct, pack and boundary routes agree bitwise on `case`.
pub fn check_surfaces(c: &Case) -> Result<(), String> {
    let oracle = direct(c.method, &c.inputs);
    let pack = mlkit_bindings::run_method(c.method, &c.inputs).map_err(|e| format!("pack run failed: {e}"))?;
    same_outputs(&oracle, &pack).map_err(|e| format!("pack vs direct: {e}"))?;
    let fresh = via_boundary(c.method, &c.inputs).map_err(|(s, m)| format!("boundary status {s}: {m}"))?;
    same_outputs(&oracle, &fresh).map_err(|e| format!("boundary vs direct: {e}"))
}
