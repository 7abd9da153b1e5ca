use std::process::exit;

fn main() {
    exit(cvdv_cli::cli_main(std::env::args().collect()));
}
