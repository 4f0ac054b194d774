use clap::Parser;
use ghost_runtime::cli::{run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    let code = std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || run(&config))
        .expect("spawn interpreter thread")
        .join()
        .unwrap_or(2);
    std::process::exit(code);
}
