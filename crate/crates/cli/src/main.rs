fn main() {
    // Subcommand dispatch lands here once the core library is in place.
}
