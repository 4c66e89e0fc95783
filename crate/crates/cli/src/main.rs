use clap::Parser;
use frenet_kit_cli::{run, Cli, RunConfig};

fn main() {
    let config = RunConfig::from(Cli::parse());
    let code = run(
        &config,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
