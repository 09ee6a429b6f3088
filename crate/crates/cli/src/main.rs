fn main() {
    std::process::exit(biobench::run(std::env::args_os()));
}
