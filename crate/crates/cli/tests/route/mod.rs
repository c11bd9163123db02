//! Runs a fixture case through the command line: inputs written to files
//! or formatted inline, outputs read back from files and standard output.
//! Expects the bindings test fixtures mounted as `crate::common`.

use std::path::Path;

use mlkit::csv::{format_f64, load_csv, save_csv};
use mlkit::model_io::{load_model, save_model, Format};
use mlkit::Matrix;
use mlkit_bindings::{registry, ParamPack, ParamType, Value};

use crate::common::Case;

pub type Invoke<'a> = dyn Fn(&[String]) -> (i32, String, String) + 'a;

fn write_matrix(path: &Path, m: &Matrix) {
    save_csv(m, std::fs::File::create(path).unwrap()).unwrap();
}

pub fn via_cli(c: &Case, dir: &Path, invoke: &Invoke<'_>) -> Result<ParamPack, String> {
    let spec = registry().method(c.method).unwrap();
    let mut args = vec![c.method.to_string()];
    for (name, v) in c.inputs.iter() {
        let file = dir.join(format!("in_{name}"));
        let path = file.display().to_string();
        let raw = match v {
            Value::Matrix(m) => {
                write_matrix(&file, m);
                path
            }
            Value::DoubleVector(v) => {
                write_matrix(&file, &Matrix::from_vec(v.len(), 1, v.clone()).unwrap());
                path
            }
            Value::Model(m) => {
                save_model(m, &mut std::fs::File::create(&file).unwrap(), Format::Binary).unwrap();
                path
            }
            Value::Int(i) => i.to_string(),
            Value::Double(d) => format_f64(*d),
            Value::String(s) => s.clone(),
            Value::Flag(true) => {
                args.push(format!("--{name}"));
                continue;
            }
            Value::Flag(false) => continue,
        };
        args.push(format!("--{name}"));
        args.push(raw);
    }
    for p in spec.outputs() {
        if matches!(p.ty, ParamType::Matrix | ParamType::DoubleVector | ParamType::Model(_)) {
            let file = dir.join(format!("out_{}", p.name));
            let _ = std::fs::remove_file(&file);
            args.push(format!("--{}", p.name));
            args.push(file.display().to_string());
        }
    }
    let (code, stdout, stderr) = invoke(&args);
    if code != 0 {
        return Err(format!("exit {code}: {stderr}"));
    }
    let mut out = ParamPack::new();
    for p in spec.outputs() {
        let file = dir.join(format!("out_{}", p.name));
        let value = match p.ty {
            ParamType::Matrix | ParamType::DoubleVector | ParamType::Model(_) => {
                let Ok(f) = std::fs::File::open(&file) else { continue };
                match p.ty {
                    ParamType::Matrix => Value::Matrix(load_csv(f, false).map_err(|e| e.to_string())?),
                    ParamType::DoubleVector => {
                        Value::DoubleVector(load_csv(f, false).map_err(|e| e.to_string())?.into_vec())
                    }
                    _ => Value::model(load_model(f).map_err(|e| e.to_string())?.1),
                }
            }
            ty => {
                let prefix = format!("{}=", p.name);
                let Some(raw) = stdout.lines().find_map(|l| l.strip_prefix(&prefix)) else { continue };
                match ty {
                    ParamType::Int => Value::Int(raw.parse().map_err(|_| format!("bad int {raw}"))?),
                    ParamType::Double => Value::Double(raw.parse().map_err(|_| format!("bad double {raw}"))?),
                    ParamType::Flag => Value::Flag(raw == "true"),
                    _ => Value::String(raw.to_string()),
                }
            }
        };
        out.set(p.name, value);
    }
    Ok(out)
}
