fn main() {
    std::process::exit(staticverify::run(std::env::args().collect()));
}
