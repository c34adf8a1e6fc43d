fn main() -> std::process::ExitCode {
    regime_lattice::io::app::main()
}
