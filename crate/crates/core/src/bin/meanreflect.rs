fn main() {
    std::process::exit(meanreflect::cli::dispatch(std::env::args_os()));
}
