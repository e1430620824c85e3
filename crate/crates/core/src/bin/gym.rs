fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GYM_LOG_LEVEL", "warn")).init();
    let code = forge_gym::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
