use clap::Parser;
use tensorsplit::cli::{init_logging, run, RunConfig};

fn main() {
    init_logging();
    std::process::exit(run(&RunConfig::parse()));
}
