//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::Invalid(
                "quadrature tolerances must be positive and max_subdivisions >= 1".into(),
            ));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights attach to the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(Error::NonFiniteIntegrand(center));
    }
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(Error::NonFiniteIntegrand(x1));
        }
        if !f2.is_finite() {
            return Err(Error::NonFiniteIntegrand(x2));
        }
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    Ok(Segment {
        lo,
        hi,
        value,
        error,
    })
}

/// Integrates `f` over `[lo, hi]`; `lo > hi` flips the sign.
///
/// Interior nodes only are sampled, so integrable endpoint singularities
/// such as `1/sqrt(s)` at `s = 0` are handled by repeated bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate(f, hi, lo, spec).map(|v| -v);
    }
    let first = kronrod(&f, lo, hi)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;
    loop {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureDivergence {
                lo,
                hi,
                subdivisions,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Segment cannot be split further in floating point.
            return Err(Error::QuadratureDivergence {
                lo,
                hi,
                subdivisions,
                error: total_err,
            });
        }
        let left = kronrod(&f, worst.lo, mid)?;
        let right = kronrod(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // Re-sum periodically to stop cancellation drift in the running totals.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}
