//! Single-source binding layer for mlkit.
//!
//! Methods are declared once as [`MethodSpec`]s in a write-once
//! [`Registry`]. Every surface executes them the same way: fill a
//! [`ParamPack`], run it through the registry, read the outputs. The
//! command line interprets the registry directly, foreign languages reach it
//! through the flat [`boundary`], and [`wrapper`] emits their source.

pub mod boundary;
mod error;
pub mod methods;
mod registry;
mod value;
pub mod wrapper;

pub use error::BindingError;
pub use registry::{
    display_value, generate_help, registry, run_method, Direction, MethodSpec, ParamSpec, Registry, RunFn,
};
pub use value::{ParamPack, ParamType, Value};
