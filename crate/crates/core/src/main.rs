fn main() {
    twolevel::cli::run();
}
