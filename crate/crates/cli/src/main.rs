fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(homogen_cli::run(args));
}
