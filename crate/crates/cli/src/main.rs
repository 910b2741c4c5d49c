fn main() {
    // Placeholder until the sweep driver lands.
    eprintln!("specshare: not yet wired up");
    std::process::exit(2);
}
