fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = std::env::var(mlkit_cli::SEED_ENV).ok();
    let code = mlkit_cli::run(
        mlkit_bindings::registry(),
        &args,
        seed.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
