//! Shared inputs for the pipeline benchmarks.

use ncfree::freeprob::Law;

pub const ANTICOMMUTATOR: &str = "x1*x2 + x2*x1";

pub const RATIONAL_DISTR: &str =
    "inv(4 - x1) + inv(4 - x1)*x2*inv((4 - x1) - x2*inv(4 - x1)*x2)*x2*inv(4 - x1)";

pub const RATIONAL_BROWN: &str = "inv(4 - x1)*x2*inv(4 - x1 - (0+4i)*x2*inv(4 - x1)*x2)";

pub fn semicircles(k: usize) -> Vec<Law> {
    (0..k)
        .map(|_| Law::semicircle(0.0, 1.0).expect("valid law"))
        .collect()
}

/// Free Poisson (rate 1) and a standard semicircle.
pub fn anticommutator_laws() -> Vec<Law> {
    vec![
        Law::marchenko_pastur(1.0, 1.0).expect("valid law"),
        Law::semicircle(0.0, 1.0).expect("valid law"),
    ]
}
