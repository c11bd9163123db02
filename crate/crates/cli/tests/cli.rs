use std::path::Path;
use std::process::Command;

use mlkit::csv::{load_csv, save_csv};
use mlkit::linear::linreg_train;
use mlkit::model_io::{load_model, Format, Model};
use mlkit::{Matrix, SeededRng};
use mlkit_bindings::{
    generate_help, registry, BindingError, MethodSpec, ParamPack, ParamSpec, ParamType, Registry, Value,
};
use mlkit_cli::{parse_argv, run, top_level_help, UsageError, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn mlkit(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mlkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("MLKIT_SEED")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn args(a: &[&str]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

fn write_csv(path: &Path, m: &Matrix) {
    save_csv(m, std::fs::File::create(path).unwrap()).unwrap();
}

fn read_csv(path: &Path) -> Matrix {
    load_csv(std::fs::File::open(path).unwrap(), false).unwrap()
}

fn fixture() -> (Matrix, Vec<f64>) {
    let mut rng = SeededRng::new(17);
    let x = Matrix::from_vec(30, 2, (0..60).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
    let y = x.iter_rows().map(|r| 0.3 + r[0] / 3.0 - 2.0 * r[1] + 0.01 * rng.normal()).collect();
    (x, y)
}

#[test]
fn linear_regression_train_then_predict_matches_direct_api() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, y) = fixture();
    write_csv(&d.join("x.csv"), &x);
    write_csv(&d.join("y.csv"), &Matrix::from_vec(y.len(), 1, y.clone()).unwrap());

    let (code, _, err) = mlkit(
        d,
        &[
            "linear_regression",
            "--input",
            "x.csv",
            "--responses",
            "y.csv",
            "--lambda",
            "0.1",
            "--output_model",
            "m.mlk",
        ],
    );
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, _, err) =
        mlkit(d, &["linear_regression", "--input_model", "m.mlk", "--test", "x.csv", "--predictions", "p.csv"]);
    assert_eq!(code, EXIT_OK, "{err}");

    let model = linreg_train(&x, &y, 0.1).unwrap();
    let expected = model.predict(&x).unwrap();
    let got = read_csv(&d.join("p.csv"));
    assert_eq!((got.rows(), got.cols()), (30, 1));
    assert!(mlkit::matrix::bits_equal(got.as_slice(), &expected));
    let (_, loaded) = load_model(std::fs::File::open(d.join("m.mlk")).unwrap()).unwrap();
    assert_eq!(std::fs::read(d.join("m.mlk")).unwrap(), Model::from(model).to_bytes(Format::Binary));
    assert_eq!(loaded.type_tag(), "linear_regression");
}

#[test]
fn text_model_flag_and_row_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, y) = fixture();
    write_csv(&d.join("x.csv"), &x);
    write_csv(&d.join("y.csv"), &Matrix::from_vec(1, y.len(), y.clone()).unwrap());
    let (code, _, err) = mlkit(
        d,
        &["linear_regression", "--text_model", "--input", "x.csv", "--responses", "y.csv", "--output_model", "m.mlk"],
    );
    assert_eq!(code, EXIT_OK, "{err}");
    let bytes = std::fs::read(d.join("m.mlk")).unwrap();
    assert_eq!(bytes, Model::from(linreg_train(&x, &y, 0.0).unwrap()).to_bytes(Format::Text));
}

#[test]
fn scalar_outputs_and_verbose_timings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, _) = fixture();
    write_csv(&d.join("x.csv"), &x);
    let (code, out, err) =
        mlkit(d, &["kmeans", "--input", "x.csv", "--clusters", "3", "--verbose", "--centroids", "c.csv"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(
        lines[0].starts_with("inertia=")
            && lines[1].starts_with("iterations=")
            && lines[2].starts_with("distance_computations=")
    );
    for phase in ["load", "run", "save"] {
        assert!(err.contains(&format!("timing {phase}: ")), "{err}");
    }
    assert_eq!(read_csv(&d.join("c.csv")).rows(), 3);
}

#[test]
fn seed_from_environment_unless_given() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, _) = fixture();
    write_csv(&d.join("x.csv"), &x);
    let bin = env!("CARGO_BIN_EXE_mlkit");
    let centroids = |seed_env: Option<&str>, extra: &[&str], out: &str| {
        let mut c = Command::new(bin);
        c.current_dir(d)
            .args(["kmeans", "--input", "x.csv", "--clusters", "4", "--max_iterations", "1", "--centroids", out])
            .args(extra);
        match seed_env {
            Some(s) => c.env("MLKIT_SEED", s),
            None => c.env_remove("MLKIT_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(d.join(out)).unwrap()
    };
    let default = centroids(None, &[], "a.csv");
    let env_zero = centroids(Some("0"), &[], "b.csv");
    let env_nine = centroids(Some("9"), &[], "c.csv");
    let flag_zero = centroids(Some("9"), &["--seed", "0"], "d.csv");
    assert_eq!(default, env_zero);
    assert_ne!(default, env_nine);
    assert_eq!(default, flag_zero);
    let status = Command::new(bin)
        .current_dir(d)
        .env("MLKIT_SEED", "-1")
        .args(["kmeans", "--input", "x.csv", "--clusters", "2"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn method_help_is_the_registry_help() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = mlkit(dir.path(), &["kmeans", "--help"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, generate_help("kmeans").unwrap());
    let (code, out, _) = mlkit(dir.path(), &["--help"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, top_level_help(registry()));
    for m in registry().names() {
        assert!(out.contains(&format!("  {m} ")), "{m}");
    }
    let (code, out, _) = mlkit(dir.path(), &["--version"]);
    assert_eq!((code, out.starts_with("mlkit ")), (EXIT_OK, true));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, _, err) = mlkit(d, &["kmeans", "--input", "missing.csv", "--clusters", "2"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("missing.csv"), "{err}");
    let (code, _, err) = mlkit(d, &["kmeans", "--bogus", "1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--bogus"), "{err}");
    assert_eq!(mlkit(d, &[]).0, EXIT_USAGE);
    assert_eq!(mlkit(d, &["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(mlkit(d, &["kmeans", "--input"]).0, EXIT_USAGE);
    assert_eq!(mlkit(d, &["kmeans", "--clusters", "2"]).0, EXIT_USAGE);
    assert_eq!(mlkit(d, &["kmeans", "--input", "x.csv", "--clusters", "two"]).0, EXIT_USAGE);
    assert_eq!(
        mlkit(d, &["kmeans", "--input", "x.csv", "--inertia", "i.txt"]).0,
        EXIT_USAGE,
        "scalar outputs are printed"
    );

    std::fs::write(d.join("bad.csv"), "1,2\n3\n").unwrap();
    let (code, _, err) = mlkit(d, &["kmeans", "--input", "bad.csv", "--clusters", "1"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("bad.csv") && err.contains("line 2"), "{err}");
    std::fs::write(d.join("x.csv"), "0\n1\n").unwrap();
    let (code, _, err) = mlkit(d, &["kmeans", "--input", "x.csv", "--clusters", "5"]);
    assert_eq!(code, EXIT_RUNTIME, "{err}");
    std::fs::write(d.join("m.mlk"), b"not a model").unwrap();
    let (code, _, err) = mlkit(d, &["kmeans", "--input", "x.csv", "--input_model", "m.mlk"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("m.mlk"), "{err}");
}

#[test]
fn parse_examples() {
    let inv = parse_argv(registry(), &args(&["kmeans", "--input", "x.csv", "--clusters", "3"])).unwrap();
    assert_eq!(inv.method.as_deref(), Some("kmeans"));
    assert_eq!(inv.flags.get("input").map(String::as_str), Some("x.csv"));
    assert_eq!(inv.flags.get("clusters").map(String::as_str), Some("3"));
    let syntax = |a: &[&str]| match parse_argv(registry(), &args(a)) {
        Err(UsageError::Syntax(msg)) => msg,
        other => panic!("{a:?}: {other:?}"),
    };
    assert!(syntax(&["kmeans", "--bogus", "1"]).contains("--bogus"));
    assert!(syntax(&["kmeans", "--input"]).contains("--input"));
    assert!(syntax(&["kmeans", "--input", "a", "--input", "b"]).contains("--input"));
    assert!(syntax(&["frobnicate"]).contains("frobnicate"));
    assert!(parse_argv(registry(), &args(&["--help"])).unwrap().globals.help);
    assert_eq!(parse_argv(registry(), &args(&[])), Err(UsageError::NoMethod));
    assert_eq!(
        parse_argv(registry(), &args(&["kmeans", "--clusters", "2"])),
        Err(UsageError::MissingRequired { method: "kmeans".into(), param: "input".into() })
    );
    let inv = parse_argv(registry(), &args(&["--verbose", "logistic_regression", "--lambda", "-0.5", "--text_model"]))
        .unwrap();
    assert!(inv.globals.verbose && inv.globals.text_model);
    assert_eq!(inv.flags.get("lambda").map(String::as_str), Some("-0.5"));
}

fn shout(p: &ParamPack) -> Result<ParamPack, BindingError> {
    let word = p.string("word").unwrap().unwrap_or("").to_uppercase();
    let word = if p.flag("twice").unwrap().unwrap_or(false) { format!("{word}{word}") } else { word };
    Ok(ParamPack::new().with("loud", Value::String(word)))
}

#[test]
fn registering_a_method_adds_a_subcommand() {
    let mut r = Registry::with_builtin();
    r.register(MethodSpec {
        name: "shout",
        summary: "Upper-cases a word.",
        detail: "Test-only.",
        params: vec![
            ParamSpec::required("word", ParamType::String, "Word."),
            ParamSpec::with_default("twice", Value::Flag(false), "Repeat it."),
            ParamSpec::output("loud", ParamType::String, "Result."),
        ],
        run: shout,
    })
    .unwrap();
    let r = r.seal();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(run(&r, &args(&["--help"]), None, &mut out, &mut err), EXIT_OK);
    assert!(String::from_utf8(out).unwrap().contains("  shout "));
    let mut out = Vec::new();
    assert_eq!(run(&r, &args(&["shout", "--word", "hi", "--twice"]), None, &mut out, &mut err), EXIT_OK);
    assert_eq!(String::from_utf8(out).unwrap(), "loud=HIHI\n");
    let mut out = Vec::new();
    assert_eq!(run(&r, &args(&["shout", "--help"]), None, &mut out, &mut err), EXIT_OK);
    assert_eq!(String::from_utf8(out).unwrap(), r.help("shout").unwrap());
}

#[test]
fn bindgen_writes_the_package() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mlkit-bindgen")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for (name, src) in mlkit_bindings::wrapper::generate_package(registry(), "python").unwrap() {
        assert_eq!(std::fs::read_to_string(dir.path().join(&name)).unwrap(), src, "{name}");
    }
    let one = Command::new(env!("CARGO_BIN_EXE_mlkit-bindgen")).args(["--method", "kde"]).output().unwrap();
    assert_eq!(
        String::from_utf8(one.stdout).unwrap(),
        mlkit_bindings::wrapper::generate_foreign_wrapper("kde", "python").unwrap()
    );
    let bad = Command::new(env!("CARGO_BIN_EXE_mlkit-bindgen"))
        .args(["--method", "kde", "--backend", "julia"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("julia"));
    let none = Command::new(env!("CARGO_BIN_EXE_mlkit-bindgen")).output().unwrap();
    assert_eq!(none.status.code(), Some(2));
}
