//! Command-line entry point; see [`jtugms::cli`].

fn main() {
    std::process::exit(jtugms::cli::run(std::env::args_os()));
}
