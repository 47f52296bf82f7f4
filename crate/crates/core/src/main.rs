fn main() {
    std::process::exit(boolens::app::main(std::env::args_os()));
}
