use clap::Parser;

fn main() {
    let cli = hcp::cli::Cli::parse();
    std::process::exit(hcp::cli::run(&cli));
}
