fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    camgraph::parallel::init_from_env();
    std::process::exit(camgraph::cli::run(std::env::args_os()));
}
