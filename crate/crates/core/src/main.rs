fn main() {
    std::process::exit(sponge_spectra::cli::run());
}
