use clap::Parser;

fn main() {
    let cli = dephasim_cli::Cli::parse();
    std::process::exit(dephasim_cli::run(cli));
}
