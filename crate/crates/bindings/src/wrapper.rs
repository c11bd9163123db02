//! Foreign wrapper source generation.
//!
//! A [`WrapperBackend`] turns one [`MethodSpec`] into source text for a host
//! language. Generated code only fills a pack through the boundary, runs it,
//! and reads the outputs back; the per-ecosystem runtime that loads the
//! shared library is hand-written and not produced here. Output depends only
//! on the registry, so regeneration is byte-stable.

use std::fmt::Write as _;

use crate::error::BindingError;
use crate::registry::{registry, MethodSpec, ParamSpec, Registry};
use crate::value::{ParamType, Value};

pub trait WrapperBackend: Sync {
    fn name(&self) -> &'static str;

    /// File holding the wrapper for `method`.
    fn file_name(&self, method: &str) -> String;

    /// Name of the shared hand-written runtime file the wrappers import.
    fn runtime_file(&self) -> &'static str;

    fn generate(&self, method: &MethodSpec) -> Result<String, BindingError>;

    /// Package index re-exporting every method, as `(file name, source)`.
    fn index(&self, methods: &[MethodSpec]) -> Option<(String, String)>;
}

/// Backends known to the generator.
pub fn backends() -> &'static [&'static dyn WrapperBackend] {
    &[&PythonBackend]
}

pub fn backend(name: &str) -> Result<&'static dyn WrapperBackend, BindingError> {
    backends().iter().copied().find(|b| b.name() == name).ok_or_else(|| BindingError::UnknownBackend(name.to_string()))
}

/// Wrapper source for `method` from the process registry.
pub fn generate_foreign_wrapper(method: &str, backend_name: &str) -> Result<String, BindingError> {
    generate_wrapper_in(registry(), method, backend_name)
}

pub fn generate_wrapper_in(registry: &Registry, method: &str, backend_name: &str) -> Result<String, BindingError> {
    let b = backend(backend_name)?;
    b.generate(registry.method(method)?)
}

/// Every generated file for the registry, in registration order, with the
/// index last. The runtime file is not included.
pub fn generate_package(registry: &Registry, backend_name: &str) -> Result<Vec<(String, String)>, BindingError> {
    let b = backend(backend_name)?;
    let mut files = registry
        .methods()
        .iter()
        .map(|m| Ok((b.file_name(m.name), b.generate(m)?)))
        .collect::<Result<Vec<_>, BindingError>>()?;
    files.extend(b.index(registry.methods()));
    Ok(files)
}

/// Python backend. Each method becomes a function taking keyword-only
/// arguments in declaration order and returning a `dict` of the outputs
/// present after the run. Parameters named after Python keywords get a
/// trailing underscore.
pub struct PythonBackend;

const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

const RUNTIME_MODULE: &str = "_runtime";

pub fn python_identifier(name: &str) -> String {
    if PY_KEYWORDS.contains(&name) {
        format!("{name}_")
    } else {
        name.to_string()
    }
}

fn py_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn py_float(v: f64) -> String {
    if v.is_nan() {
        return "float(\"nan\")".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "float(\"inf\")".into() } else { "-float(\"inf\")".into() };
    }
    let s = mlkit::csv::format_f64(v);
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn py_default(p: &ParamSpec) -> Result<String, BindingError> {
    Ok(match &p.default {
        None => "None".into(),
        Some(Value::Int(i)) => i.to_string(),
        Some(Value::Double(d)) => py_float(*d),
        Some(Value::String(s)) => py_str(s),
        Some(Value::Flag(b)) => if *b { "True" } else { "False" }.into(),
        Some(other) => {
            return Err(BindingError::Registration(format!(
                "default of {} ({}) has no Python literal",
                p.name,
                other.param_type()
            )))
        }
    })
}

/// Runtime accessor suffix for a type: `set_<kind>` / `get_<kind>`.
fn kind(ty: ParamType) -> &'static str {
    match ty {
        ParamType::Matrix => "matrix",
        ParamType::DoubleVector => "double_vector",
        ParamType::Int => "int",
        ParamType::Double => "double",
        ParamType::String => "string",
        ParamType::Flag => "flag",
        ParamType::Model(_) => "model",
    }
}

/// Docstring body: backslashes and quotes escaped so no sequence in the
/// help text can end the literal.
fn py_doc(text: &str) -> String {
    text.trim_end().replace('\\', "\\\\").replace('"', "\\\"")
}

impl WrapperBackend for PythonBackend {
    fn name(&self) -> &'static str {
        "python"
    }

    fn file_name(&self, method: &str) -> String {
        format!("{method}.py")
    }

    fn runtime_file(&self) -> &'static str {
        "_runtime.py"
    }

    fn generate(&self, m: &MethodSpec) -> Result<String, BindingError> {
        let help = m.help();
        let mut s = String::new();
        let _ = writeln!(s, "# Generated by mlkit-bindgen from the method registry. Do not edit.");
        let _ = writeln!(s, "from . import {RUNTIME_MODULE} as _rt\n\n");

        let args = m
            .inputs()
            .map(|p| {
                let id = python_identifier(p.name);
                Ok(if p.required { id } else { format!("{id}={}", py_default(p)?) })
            })
            .collect::<Result<Vec<_>, BindingError>>()?;
        if args.is_empty() {
            let _ = writeln!(s, "def {}():", m.name);
        } else {
            let _ = writeln!(s, "def {}(\n    *,", m.name);
            for a in &args {
                let _ = writeln!(s, "    {a},");
            }
            let _ = writeln!(s, "):");
        }
        let _ = writeln!(s, "    \"\"\"{}\n    \"\"\"", py_doc(&help).replace('\n', "\n    ").replace("    \n", "\n"));
        let _ = writeln!(s, "    _p = _rt.pack_create()");
        let _ = writeln!(s, "    try:");
        for p in m.inputs() {
            let id = python_identifier(p.name);
            let call = format!("_rt.set_{}(_p, {}, {id})", kind(p.ty), py_str(p.name));
            if p.required {
                let _ = writeln!(s, "        {call}");
            } else {
                let _ = writeln!(s, "        if {id} is not None:\n            {call}");
            }
        }
        let _ = writeln!(s, "        _rt.run(_p, {})", py_str(m.name));
        let _ = writeln!(s, "        _out = {{}}");
        for p in m.outputs() {
            let name = py_str(p.name);
            let _ = writeln!(
                s,
                "        if _rt.contains(_p, {name}):\n            _out[{name}] = _rt.get_{}(_p, {name})",
                kind(p.ty)
            );
        }
        let _ = writeln!(s, "        return _out");
        let _ = writeln!(s, "    finally:");
        let _ = writeln!(s, "        _rt.pack_destroy(_p)");
        Ok(s)
    }

    fn index(&self, methods: &[MethodSpec]) -> Option<(String, String)> {
        let mut s = String::from("# Generated by mlkit-bindgen from the method registry. Do not edit.\n");
        let _ = writeln!(s, "from .{RUNTIME_MODULE} import ModelHandle, MlkitError");
        for m in methods {
            let _ = writeln!(s, "from .{0} import {0}", m.name);
        }
        let names: Vec<String> = ["ModelHandle", "MlkitError"]
            .into_iter()
            .map(String::from)
            .chain(methods.iter().map(|m| m.name.to_string()))
            .map(|n| py_str(&n))
            .collect();
        let _ = writeln!(s, "\n__all__ = [{}]", names.join(", "));
        Some(("__init__.py".into(), s))
    }
}
