fn main() {
    std::process::exit(homoclinic::main_with_args(std::env::args_os()));
}
