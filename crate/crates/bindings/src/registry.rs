use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::BindingError;
use crate::value::{ParamPack, ParamType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub direction: Direction,
    pub ty: ParamType,
    pub required: bool,
    pub default: Option<Value>,
    pub doc: &'static str,
}

impl ParamSpec {
    pub fn required(name: &'static str, ty: ParamType, doc: &'static str) -> Self {
        Self { name, direction: Direction::Input, ty, required: true, default: None, doc }
    }

    pub fn optional(name: &'static str, ty: ParamType, doc: &'static str) -> Self {
        Self { name, direction: Direction::Input, ty, required: false, default: None, doc }
    }

    pub fn with_default(name: &'static str, default: Value, doc: &'static str) -> Self {
        Self {
            name,
            direction: Direction::Input,
            ty: default.param_type(),
            required: false,
            default: Some(default),
            doc,
        }
    }

    pub fn output(name: &'static str, ty: ParamType, doc: &'static str) -> Self {
        Self { name, direction: Direction::Output, ty, required: false, default: None, doc }
    }

    pub fn is_input(&self) -> bool {
        self.direction == Direction::Input
    }
}

pub type RunFn = fn(&ParamPack) -> Result<ParamPack, BindingError>;

#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub detail: &'static str,
    pub params: Vec<ParamSpec>,
    /// Receives the inputs with defaults applied, returns the outputs.
    pub run: RunFn,
}

impl MethodSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| p.is_input())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| !p.is_input())
    }

    /// Deterministic help: summary, detail, then inputs and outputs in
    /// declaration order.
    pub fn help(&self) -> String {
        let m = self;
        let mut out = format!("{}: {}\n\n{}\n", m.name, m.summary, m.detail);
        for (title, dir) in [("Inputs", Direction::Input), ("Outputs", Direction::Output)] {
            let _ = write!(out, "\n{title}:\n");
            for p in m.params.iter().filter(|p| p.direction == dir) {
                let qualifier = match (&p.default, p.required, dir) {
                    (_, _, Direction::Output) => String::new(),
                    (_, true, _) => ", required".into(),
                    (Some(d), _, _) => format!(", default {}", display_value(d)),
                    (None, false, _) => ", optional".into(),
                };
                let _ = writeln!(out, "  {} ({}{qualifier})", p.name, p.ty);
                let _ = writeln!(out, "      {}", p.doc);
            }
        }
        out
    }

    fn validate(&self) -> Result<(), BindingError> {
        let bad = |msg: String| Err(BindingError::Registration(format!("method {}: {msg}", self.name)));
        if !is_identifier(self.name) {
            return bad("name is not an identifier".into());
        }
        let mut seen = HashSet::new();
        for p in &self.params {
            if !is_identifier(p.name) {
                return bad(format!("parameter {:?} is not an identifier", p.name));
            }
            if !seen.insert(p.name) {
                return bad(format!("duplicate parameter {:?}", p.name));
            }
            if p.required && p.default.is_some() {
                return bad(format!("required parameter {:?} has a default", p.name));
            }
            if !p.is_input() && (p.required || p.default.is_some()) {
                return bad(format!("output {:?} cannot be required or defaulted", p.name));
            }
            if let Some(d) = &p.default {
                if !d.matches(p.ty) {
                    return bad(format!("default of {:?} is not a {}", p.name, p.ty));
                }
            }
        }
        if self.outputs().next().is_none() {
            return bad("no output parameters".into());
        }
        Ok(())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Method table. Registration is open until [`seal`](Registry::seal);
/// afterwards the registry is read-only.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    methods: Vec<MethodSpec>,
    sealed: bool,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unsealed registry holding the shipped methods.
    pub fn with_builtin() -> Self {
        let mut r = Self::new();
        for spec in crate::methods::builtin() {
            r.register(spec).expect("builtin methods are valid");
        }
        r
    }

    pub fn register(&mut self, spec: MethodSpec) -> Result<(), BindingError> {
        if self.sealed {
            return Err(BindingError::Registration(format!("registry is sealed; cannot register {}", spec.name)));
        }
        spec.validate()?;
        if self.get(spec.name).is_some() {
            return Err(BindingError::Registration(format!("duplicate method {}", spec.name)));
        }
        self.methods.push(spec);
        Ok(())
    }

    pub fn seal(mut self) -> Self {
        self.sealed = true;
        self
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn get(&self, name: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn method(&self, name: &str) -> Result<&MethodSpec, BindingError> {
        self.get(name).ok_or_else(|| BindingError::UnknownMethod(name.to_string()))
    }

    /// Methods in registration order.
    pub fn methods(&self) -> &[MethodSpec] {
        &self.methods
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.iter().map(|m| m.name)
    }

    /// Validates `inputs` against the method, applies defaults, and runs it.
    /// `inputs` is not modified; the returned pack holds only outputs.
    pub fn run(&self, name: &str, inputs: &ParamPack) -> Result<ParamPack, BindingError> {
        let method = self.method(name)?;
        let mut effective = ParamPack::new();
        for (key, value) in inputs.iter() {
            let spec = method
                .param(key)
                .filter(|p| p.is_input())
                .ok_or_else(|| BindingError::UnknownParam { method: name.to_string(), param: key.to_string() })?;
            if !value.matches(spec.ty) {
                return Err(BindingError::TypeMismatch {
                    param: key.to_string(),
                    expected: spec.ty.to_string(),
                    actual: value.param_type().to_string(),
                });
            }
            effective.set(key, value.clone());
        }
        for spec in method.inputs() {
            if effective.contains(spec.name) {
                continue;
            }
            if spec.required {
                return Err(BindingError::MissingParam { method: name.to_string(), param: spec.name.to_string() });
            }
            if let Some(d) = &spec.default {
                effective.set(spec.name, d.clone());
            }
        }
        let outputs = (method.run)(&effective)?;
        debug_assert!(outputs.iter().all(|(k, v)| method.param(k).is_some_and(|p| !p.is_input() && v.matches(p.ty))));
        Ok(outputs)
    }

    /// Runs `name` on the values in `pack` and stores the outputs back into
    /// it. On failure the pack's error slot holds the message.
    pub fn run_in_place(&self, name: &str, pack: &mut ParamPack) -> Result<(), BindingError> {
        match self.run(name, pack) {
            Ok(outputs) => {
                for (k, v) in outputs.iter() {
                    pack.set(k, v.clone());
                }
                pack.set_error(None);
                Ok(())
            }
            Err(e) => {
                pack.set_error(Some(e.to_string()));
                Err(e)
            }
        }
    }

    /// Help text for `name`; see [`MethodSpec::help`].
    pub fn help(&self, name: &str) -> Result<String, BindingError> {
        Ok(self.method(name)?.help())
    }
}

/// Scalar rendering used in help text.
pub fn display_value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Double(d) => mlkit::csv::format_f64(*d),
        Value::String(s) => format!("{s:?}"),
        Value::Flag(b) => b.to_string(),
        Value::Matrix(m) => format!("<{}x{} matrix>", m.rows(), m.cols()),
        Value::DoubleVector(v) => format!("<{} values>", v.len()),
        Value::Model(m) => format!("<{} model>", m.type_tag()),
    }
}

static GLOBAL: OnceLock<Registry> = OnceLock::new();

/// The sealed process-wide registry of shipped methods.
pub fn registry() -> &'static Registry {
    GLOBAL.get_or_init(|| Registry::with_builtin().seal())
}

pub fn run_method(name: &str, inputs: &ParamPack) -> Result<ParamPack, BindingError> {
    registry().run(name, inputs)
}

pub fn generate_help(name: &str) -> Result<String, BindingError> {
    registry().help(name)
}
