fn main() {
    // Placeholder until the solver stack lands.
}
