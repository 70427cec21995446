//! Closed-form probability that a binomial loading holds enough atoms.
//!
//! `cargo run --example baseline_success`

use redrec::analytics::{baseline_success, largest_reliable_size};

fn main() {
    for eps in [0.5, 0.6, 0.7, 0.9] {
        let n = largest_reliable_size(100, eps, 0.98);
        println!("eps {eps}: 100 traps reliably fill {n} sites (p0 = {:.4})", baseline_success(100, eps, n as i64));
    }
    let traps = 2048;
    for need in [1024, 1200, 1229, 1260, 1300] {
        println!("{traps} traps, eps 0.6, need {need}: p0 = {:.6e}", baseline_success(traps, 0.6, need));
    }
}
