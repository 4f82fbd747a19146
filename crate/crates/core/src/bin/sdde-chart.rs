fn main() {
    std::process::exit(sdde_chart::cli::main_with_args(std::env::args_os()));
}
