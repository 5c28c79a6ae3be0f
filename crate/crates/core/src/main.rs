use clap::Parser;

use spectra::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("SPECTRA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("SPECTRA_THREADS ignored: {e}");
        }
    }
    let cli = Cli::parse();
    std::process::exit(run(&cli));
}
