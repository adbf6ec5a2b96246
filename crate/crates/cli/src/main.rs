use std::process::exit;

fn main() {
    exit(spreadnuts::cli::run(std::env::args_os()));
}
