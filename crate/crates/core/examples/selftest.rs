//! Runs the built-in self checks (oracle comparison, gradients, decoder fuzz, rate round
//! trip, HARQ timing, checkpoint corruption) and prints the table.
//!
//! `cargo run --release --example selftest`

use orsched::experiments::selftest_checks;

fn main() {
    let checks = selftest_checks();
    for c in &checks {
        println!("{:<4}  {:<22}  {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
}
