use clap::Parser;

fn main() {
    let cli = astra_core::cli::Cli::parse();
    std::process::exit(astra_core::cli::run(cli));
}
