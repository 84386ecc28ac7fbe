use clap::Parser;

use coupled_transport_cli::{configure_threads, exit_code, resolve, run, Cli};

fn main() {
    let cli = Cli::parse();
    let threads = std::env::var("SOLVER_THREADS").ok();
    let code = match configure_threads(threads.as_deref()).and_then(|()| resolve(cli)) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}
