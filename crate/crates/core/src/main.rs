fn main() {
    env_logger::init();
    std::process::exit(merge_game::cli::run(std::env::args_os()));
}
