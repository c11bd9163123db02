use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use mlkit::model_io::Model;
use mlkit::Matrix;

use crate::error::BindingError;

/// Declared type of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Matrix,
    DoubleVector,
    Int,
    Double,
    String,
    Flag,
    /// A model with the given envelope type tag.
    Model(&'static str),
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamType::Matrix => f.write_str("matrix"),
            ParamType::DoubleVector => f.write_str("double_vector"),
            ParamType::Int => f.write_str("int"),
            ParamType::Double => f.write_str("double"),
            ParamType::String => f.write_str("string"),
            ParamType::Flag => f.write_str("flag"),
            ParamType::Model(tag) => write!(f, "model:{tag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Matrix(Matrix),
    DoubleVector(Vec<f64>),
    Int(i64),
    Double(f64),
    String(String),
    Flag(bool),
    /// Shared so packs and boundary handles can hold the same loaded model.
    Model(Arc<Model>),
}

impl Value {
    pub fn model(m: impl Into<Model>) -> Self {
        Value::Model(Arc::new(m.into()))
    }

    /// The type this value would satisfy.
    pub fn param_type(&self) -> ParamType {
        match self {
            Value::Matrix(_) => ParamType::Matrix,
            Value::DoubleVector(_) => ParamType::DoubleVector,
            Value::Int(_) => ParamType::Int,
            Value::Double(_) => ParamType::Double,
            Value::String(_) => ParamType::String,
            Value::Flag(_) => ParamType::Flag,
            Value::Model(m) => ParamType::Model(m.type_tag()),
        }
    }

    pub fn matches(&self, ty: ParamType) -> bool {
        self.param_type() == ty
    }

    /// Exact bitwise equality (floats compared by bit pattern).
    pub fn bit_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Matrix(a), Value::Matrix(b)) => a.bit_eq(b),
            (Value::DoubleVector(a), Value::DoubleVector(b)) => mlkit::matrix::bits_equal(a, b),
            (Value::Double(a), Value::Double(b)) => a.to_bits() == b.to_bits(),
            (Value::Model(a), Value::Model(b)) => {
                a.to_bytes(mlkit::model_io::Format::Binary) == b.to_bytes(mlkit::model_io::Format::Binary)
            }
            (a, b) => a == b,
        }
    }
}

/// Named values for one invocation, plus the error left by a failed run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamPack {
    values: BTreeMap<String, Value>,
    error: Option<String>,
}

impl ParamPack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.values.remove(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }

    pub(crate) fn set_error(&mut self, message: Option<String>) {
        self.error = message;
    }

    /// Bitwise equality of the stored values; the error slot is ignored.
    pub fn bit_eq(&self, other: &ParamPack) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
    }

    fn typed<'a, T>(
        &'a self,
        name: &str,
        expected: ParamType,
        pick: impl FnOnce(&'a Value) -> Option<T>,
    ) -> Result<Option<T>, BindingError> {
        match self.values.get(name) {
            None => Ok(None),
            Some(v) => pick(v).map(Some).ok_or_else(|| BindingError::TypeMismatch {
                param: name.to_string(),
                expected: expected.to_string(),
                actual: v.param_type().to_string(),
            }),
        }
    }

    pub fn matrix(&self, name: &str) -> Result<Option<&Matrix>, BindingError> {
        self.typed(name, ParamType::Matrix, |v| match v {
            Value::Matrix(m) => Some(m),
            _ => None,
        })
    }

    pub fn double_vector(&self, name: &str) -> Result<Option<&[f64]>, BindingError> {
        self.typed(name, ParamType::DoubleVector, |v| match v {
            Value::DoubleVector(d) => Some(d.as_slice()),
            _ => None,
        })
    }

    pub fn int(&self, name: &str) -> Result<Option<i64>, BindingError> {
        self.typed(name, ParamType::Int, |v| match v {
            Value::Int(i) => Some(*i),
            _ => None,
        })
    }

    pub fn double(&self, name: &str) -> Result<Option<f64>, BindingError> {
        self.typed(name, ParamType::Double, |v| match v {
            Value::Double(d) => Some(*d),
            _ => None,
        })
    }

    pub fn string(&self, name: &str) -> Result<Option<&str>, BindingError> {
        self.typed(name, ParamType::String, |v| match v {
            Value::String(s) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn flag(&self, name: &str) -> Result<Option<bool>, BindingError> {
        self.typed(name, ParamType::Flag, |v| match v {
            Value::Flag(b) => Some(*b),
            _ => None,
        })
    }

    pub fn model(&self, name: &str) -> Result<Option<&Arc<Model>>, BindingError> {
        match self.values.get(name) {
            None => Ok(None),
            Some(Value::Model(m)) => Ok(Some(m)),
            Some(v) => Err(BindingError::TypeMismatch {
                param: name.to_string(),
                expected: "model".into(),
                actual: v.param_type().to_string(),
            }),
        }
    }
}
