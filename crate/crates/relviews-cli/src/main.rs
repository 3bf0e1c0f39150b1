use std::io::Write;

use clap::Parser;

use relviews_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let report = run(&cli);
    // A closed pipe on stdout is not an error of the check itself.
    let _ = writeln!(std::io::stdout().lock(), "{}", report.render(cli.format));
    std::process::exit(report.exit_code());
}
