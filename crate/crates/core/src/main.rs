fn main() {
    std::process::exit(infoloss::cli::run());
}
