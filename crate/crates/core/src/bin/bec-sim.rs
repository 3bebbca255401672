fn main() {
    std::process::exit(bec_sim::harness::main_with_args(std::env::args_os()));
}
