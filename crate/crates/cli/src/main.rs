use clap::Parser;
use sqrtlasso_cli::args::Args;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = Args::parse().into_config().and_then(|config| sqrtlasso_cli::run(&config));
    match result {
        Ok(table) => print!("{table}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
