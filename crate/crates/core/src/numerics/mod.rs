//! Numerical kernel shared by the analysis modules.

mod fit;
mod ode;
mod quad;

pub use fit::{fit_basis, FitResult};
pub use ode::{solve_ode, solve_ode_two_sided, DenseSolution, OdeSpec, TwoSidedSolution};
pub use quad::{integrate, QuadratureSpec};

/// Fourth-order central first derivative.
pub fn d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative.
pub fn d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// `n` equally spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
