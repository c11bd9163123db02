//! Command-line front-end. Each registered method is a subcommand whose
//! flags are exactly its parameter names; nothing here is method-specific.
//!
//! Matrix parameters name CSV files (no header), vectors name single-column
//! or single-row CSV files, models name `.mlk` files, and scalars are given
//! inline. Scalar outputs are printed as `name=value`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::{Duration, Instant};

use mlkit::csv::{format_f64, load_csv, save_csv};
use mlkit::model_io::{load_model, save_model, Format};
use mlkit::Matrix;
use mlkit_bindings::methods::SEED_PARAM;
use mlkit_bindings::{BindingError, MethodSpec, ParamPack, ParamSpec, ParamType, Registry, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable supplying the seed when `--seed` is not given.
pub const SEED_ENV: &str = "MLKIT_SEED";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum UsageError {
    #[error("no method given; run with --help to list methods")]
    NoMethod,
    /// Rejected by the argument parser: unknown method or flag, missing or
    /// repeated value.
    #[error("{0}")]
    Syntax(String),
    #[error("{method} requires --{param}")]
    MissingRequired { method: String, param: String },
    #[error("--{param}: {message}")]
    BadValue { param: String, message: String },
    #[error("{SEED_ENV}: {0}")]
    BadSeedEnv(String),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    File { path: String, source: mlkit::Error },
    #[error("{0}")]
    Method(#[from] BindingError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GlobalFlags {
    pub help: bool,
    pub verbose: bool,
    pub version: bool,
    /// Write models in the text format instead of binary.
    pub text_model: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliInvocation {
    /// `None` only for method-less global invocations such as `--help`.
    pub method: Option<String>,
    /// Raw flag values by parameter name; flag-typed params map to `"true"`.
    pub flags: BTreeMap<String, String>,
    pub globals: GlobalFlags,
}

const GLOBAL_FLAGS: [(&str, &str); 4] = [
    ("help", "Print help"),
    ("verbose", "Print per-phase timings to standard error"),
    ("version", "Print the version"),
    ("text_model", "Write models in the text format"),
];

/// Flags a method accepts: its inputs, plus outputs that are written to files.
fn cli_params(method: &MethodSpec) -> impl Iterator<Item = &ParamSpec> {
    method.params.iter().filter(|p| p.is_input() || accepts_path(p))
}

/// Parser built from the registry. Help and version are plain flags so help
/// text comes from the registry, not from the parser.
fn command(registry: &Registry) -> clap::Command {
    use clap::{Arg, ArgAction, Command};
    let globals =
        GLOBAL_FLAGS.map(|(name, doc)| Arg::new(name).long(name).help(doc).action(ArgAction::SetTrue).global(true));
    let methods = registry.methods().iter().map(|m| {
        Command::new(m.name).about(m.summary).disable_help_flag(true).args(cli_params(m).map(|p| {
            let arg = Arg::new(p.name).long(p.name).help(p.doc);
            if p.ty == ParamType::Flag {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.action(ArgAction::Set).num_args(1).allow_negative_numbers(true)
            }
        }))
    });
    Command::new("mlkit")
        .no_binary_name(true)
        .disable_help_flag(true)
        .disable_version_flag(true)
        .disable_help_subcommand(true)
        .args(globals)
        .subcommands(methods)
}

/// First line of a parser error, without its `error: ` prefix.
fn syntax(e: clap::Error) -> UsageError {
    let text = e.to_string();
    let line = text.lines().next().unwrap_or_default();
    UsageError::Syntax(line.strip_prefix("error: ").unwrap_or(line).to_string())
}

/// Splits `args` (without the program name) into method, flags and global
/// flags. Parameter names and types come from `registry`. Required inputs
/// are checked here unless help was requested.
pub fn parse_argv(registry: &Registry, args: &[String]) -> Result<CliInvocation, UsageError> {
    let matches = command(registry).try_get_matches_from(args).map_err(syntax)?;
    let (method, sub) = match matches.subcommand() {
        Some((name, sub)) => (registry.get(name), sub),
        None => (None, &matches),
    };
    let flag = |name: &str| sub.get_flag(name);
    let globals = GlobalFlags {
        help: flag("help"),
        verbose: flag("verbose"),
        version: flag("version"),
        text_model: flag("text_model"),
    };
    let Some(method) = method else {
        if globals.help || globals.version {
            return Ok(CliInvocation { method: None, flags: BTreeMap::new(), globals });
        }
        return Err(UsageError::NoMethod);
    };
    let mut flags = BTreeMap::new();
    for p in cli_params(method) {
        let value = if p.ty == ParamType::Flag {
            sub.get_flag(p.name).then(|| "true".to_string())
        } else {
            sub.get_one::<String>(p.name).cloned()
        };
        if let Some(v) = value {
            flags.insert(p.name.to_string(), v);
        }
    }
    if !globals.help {
        if let Some(p) = method.inputs().find(|p| p.required && !flags.contains_key(p.name)) {
            return Err(UsageError::MissingRequired { method: method.name.into(), param: p.name.into() });
        }
    }
    Ok(CliInvocation { method: Some(method.name.to_string()), flags, globals })
}

/// Outputs written to files take a path; scalar outputs are printed.
fn accepts_path(p: &ParamSpec) -> bool {
    matches!(p.ty, ParamType::Matrix | ParamType::DoubleVector | ParamType::Model(_))
}

fn parse_scalar(p: &ParamSpec, raw: &str) -> Result<Value, UsageError> {
    let bad = |message: String| UsageError::BadValue { param: p.name.into(), message };
    Ok(match p.ty {
        ParamType::Int => Value::Int(raw.parse().map_err(|_| bad(format!("{raw:?} is not an integer")))?),
        ParamType::Double => Value::Double(raw.parse().map_err(|_| bad(format!("{raw:?} is not a number")))?),
        ParamType::String => Value::String(raw.to_string()),
        ParamType::Flag => Value::Flag(true),
        ParamType::Matrix | ParamType::DoubleVector | ParamType::Model(_) => unreachable!("file-backed"),
    })
}

/// Inline scalars, with the seed environment override applied.
fn scalar_inputs(method: &MethodSpec, inv: &CliInvocation, env_seed: Option<&str>) -> Result<ParamPack, UsageError> {
    let mut pack = ParamPack::new();
    for p in method.inputs().filter(|p| !accepts_path(p)) {
        if let Some(raw) = inv.flags.get(p.name) {
            pack.set(p.name, parse_scalar(p, raw)?);
        }
    }
    if let (Some(seed), Some(p)) = (env_seed, method.param(SEED_PARAM).filter(|p| p.is_input())) {
        if !pack.contains(SEED_PARAM) && p.ty == ParamType::Int {
            let v: u64 = seed
                .trim()
                .parse()
                .map_err(|_| UsageError::BadSeedEnv(format!("{seed:?} is not an unsigned integer")))?;
            let v = i64::try_from(v).map_err(|_| UsageError::BadSeedEnv(format!("{v} is too large")))?;
            pack.set(SEED_PARAM, Value::Int(v));
        }
    }
    Ok(pack)
}

fn file_err(path: &str) -> impl Fn(mlkit::Error) -> RunError + '_ {
    move |source| RunError::File { path: path.to_string(), source }
}

fn open(path: &str) -> Result<File, RunError> {
    File::open(path).map_err(|e| file_err(path)(e.into()))
}

/// A vector file holds one column or one row.
fn vector_from(m: Matrix, path: &str) -> Result<Vec<f64>, RunError> {
    if m.cols() <= 1 || m.rows() <= 1 {
        Ok(m.into_vec())
    } else {
        Err(file_err(path)(mlkit::Error::Shape(format!(
            "expected one column or one row, got {}x{}",
            m.rows(),
            m.cols()
        ))))
    }
}

fn load_input(p: &ParamSpec, path: &str) -> Result<Value, RunError> {
    let e = file_err(path);
    Ok(match p.ty {
        ParamType::Matrix => Value::Matrix(load_csv(open(path)?, false).map_err(&e)?),
        ParamType::DoubleVector => Value::DoubleVector(vector_from(load_csv(open(path)?, false).map_err(&e)?, path)?),
        ParamType::Model(_) => Value::model(load_model(open(path)?).map_err(&e)?.1),
        _ => unreachable!("scalar"),
    })
}

fn save_output(value: &Value, path: &str, format: Format) -> Result<(), RunError> {
    let e = file_err(path);
    let file = File::create(path).map_err(|io| e(io.into()))?;
    let mut w = BufWriter::new(file);
    match value {
        Value::Matrix(m) => save_csv(m, &mut w).map_err(&e)?,
        Value::DoubleVector(v) => {
            save_csv(&Matrix::from_vec(v.len(), 1, v.clone()).map_err(&e)?, &mut w).map_err(&e)?
        }
        Value::Model(m) => save_model(m, &mut w, format).map_err(&e)?,
        _ => unreachable!("scalar"),
    }
    w.flush().map_err(|io| e(io.into()))
}

fn print_scalar(out: &mut dyn Write, name: &str, v: &Value) -> std::io::Result<()> {
    match v {
        Value::Int(i) => writeln!(out, "{name}={i}"),
        Value::Double(d) => writeln!(out, "{name}={}", format_f64(*d)),
        Value::String(s) => writeln!(out, "{name}={s}"),
        Value::Flag(b) => writeln!(out, "{name}={b}"),
        _ => Ok(()),
    }
}

/// Top-level help listing every method.
pub fn top_level_help(registry: &Registry) -> String {
    let width = registry.names().map(str::len).max().unwrap_or(0);
    let mut s = String::from("usage: mlkit <method> [--<param> <value>...] [--verbose] [--text_model]\n       mlkit <method> --help\n\nMethods:\n");
    for m in registry.methods() {
        s.push_str(&format!("  {:width$}  {}\n", m.name, m.summary));
    }
    s.push_str("\nGlobal flags: --help, --verbose, --version, --text_model\n");
    s
}

struct Timings(Vec<(&'static str, Duration)>);

impl Timings {
    fn time<T>(&mut self, phase: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let r = f();
        self.0.push((phase, start.elapsed()));
        r
    }
}

fn execute(
    method: &MethodSpec,
    registry: &Registry,
    inv: &CliInvocation,
    scalars: ParamPack,
    stdout: &mut dyn Write,
    timings: &mut Timings,
) -> Result<(), RunError> {
    let format = if inv.globals.text_model { Format::Text } else { Format::Binary };
    let inputs = timings.time("load", || {
        let mut pack = scalars;
        for p in method.inputs().filter(|p| accepts_path(p)) {
            if let Some(path) = inv.flags.get(p.name) {
                pack.set(p.name, load_input(p, path)?);
            }
        }
        Ok::<_, RunError>(pack)
    })?;
    let outputs = timings.time("run", || registry.run(method.name, &inputs))?;
    timings.time("save", || {
        for p in method.outputs() {
            let Some(v) = outputs.get(p.name) else { continue };
            if accepts_path(p) {
                if let Some(path) = inv.flags.get(p.name) {
                    save_output(v, path, format)?;
                }
            } else {
                let _ = print_scalar(stdout, p.name, v);
            }
        }
        Ok::<_, RunError>(())
    })
}

/// Runs one invocation and returns the exit code: 0 success, 1 runtime
/// failure, 2 usage error (nothing executed).
pub fn run(
    registry: &Registry,
    args: &[String],
    env_seed: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let inv = match parse_argv(registry, args) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = writeln!(stderr, "mlkit: {e}");
            return EXIT_USAGE;
        }
    };
    let Some(name) = &inv.method else {
        let text =
            if inv.globals.help { top_level_help(registry) } else { format!("mlkit {}\n", env!("CARGO_PKG_VERSION")) };
        let _ = stdout.write_all(text.as_bytes());
        return EXIT_OK;
    };
    if inv.globals.help {
        let _ = stdout.write_all(registry.help(name).expect("parsed method exists").as_bytes());
        return EXIT_OK;
    }
    if inv.globals.version {
        let _ = writeln!(stdout, "mlkit {}", env!("CARGO_PKG_VERSION"));
        return EXIT_OK;
    }
    let method = registry.get(name).expect("parsed method exists");
    let scalars = match scalar_inputs(method, &inv, env_seed) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "mlkit: {e}");
            return EXIT_USAGE;
        }
    };
    let mut timings = Timings(Vec::new());
    let result = execute(method, registry, &inv, scalars, stdout, &mut timings);
    if inv.globals.verbose {
        for (phase, d) in &timings.0 {
            let _ = writeln!(stderr, "timing {phase}: {:.6} s", d.as_secs_f64());
        }
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "mlkit: {e}");
            EXIT_RUNTIME
        }
    }
}
