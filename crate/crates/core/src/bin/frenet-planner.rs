fn main() {
    std::process::exit(frenet_planner::cli::main_from_env());
}
