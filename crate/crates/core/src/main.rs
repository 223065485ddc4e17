fn main() {
    let filter = env_logger::Env::default().filter_or("ARBOR_LOG", "warn");
    env_logger::Builder::from_env(filter).init();
    std::process::exit(arbor::cli::main_with(std::env::args_os()));
}
