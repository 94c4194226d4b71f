fn main() {
    std::process::exit(aoi_recruit_cli::cli_entry(std::env::args_os()));
}
