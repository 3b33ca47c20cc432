use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    weylvd::cli::configure_threads();
    let cli = weylvd::cli::Cli::parse();
    std::process::exit(weylvd::cli::run(cli));
}
