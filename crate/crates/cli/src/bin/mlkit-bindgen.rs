//! Writes generated foreign wrappers for the registered methods.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use mlkit_bindings::registry;
use mlkit_bindings::wrapper::{generate_foreign_wrapper, generate_package};

#[derive(Parser)]
#[command(name = "mlkit-bindgen", about = "Generate foreign-language wrappers from the method registry")]
#[command(group(ArgGroup::new("target").required(true).args(["out", "method"])))]
struct Args {
    /// Wrapper backend.
    #[arg(long, default_value = "python")]
    backend: String,
    /// Directory receiving one file per method plus the package index.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the wrapper for a single method to standard output.
    #[arg(long)]
    method: Option<String>,
}

fn run(args: Args) -> Result<(), String> {
    if let Some(m) = args.method {
        print!("{}", generate_foreign_wrapper(&m, &args.backend).map_err(|e| e.to_string())?);
        return Ok(());
    }
    let dir = args.out.expect("group requires one target");
    let files = generate_package(registry(), &args.backend).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for (name, src) in files {
        let path = dir.join(name);
        std::fs::write(&path, src).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlkit-bindgen: {e}");
            ExitCode::FAILURE
        }
    }
}
