fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = carpet_core::cli::run(std::env::args_os(), &mut out, &mut err);
    std::process::exit(code);
}
