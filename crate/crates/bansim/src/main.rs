use clap::Parser;

fn main() {
    let cli = bansim::cli::Cli::parse();
    std::process::exit(bansim::cli::dispatch(cli));
}
