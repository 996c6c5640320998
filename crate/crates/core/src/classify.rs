//! Symmetry classification from the sampled `(I, K)` profile.
//!
//! * six-dimensional algebra: `K = c2 I² + c1 I + c0`
//! * four-dimensional algebra: `K = μ/(I+ι)² + c2 (I+ι)² + c0`, `μ ≠ 0`
//! * otherwise only `∂t` and `u∂u` (plus the infinite-dimensional superposition
//!   part, which every linear PDE has).

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr, Var};
use crate::invariants::InvariantProfile;
use crate::numerics::{fit_basis, FitResult};

/// Relative rms tolerance of the fits, measured against `max|K| + 1`.
pub const FIT_TOL: f64 = 1e-7;
/// `|μ|` at or below this counts as zero.
pub const MU_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    SixDim { c2: f64, c1: f64, c0: f64 },
    FourDim { mu: f64, c2: f64, c0: f64 },
    NoExtra,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::SixDim { .. } => "six",
            Variant::FourDim { .. } => "four",
            Variant::NoExtra => "none",
        }
    }

    /// Dimension of the finite part of the symmetry algebra.
    pub fn dimension(&self) -> usize {
        match self {
            Variant::SixDim { .. } => 6,
            Variant::FourDim { .. } => 4,
            Variant::NoExtra => 2,
        }
    }
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryClass {
    pub variant: Variant,
    /// Offset making `I + ι` the natural variable; zero for the other variants.
    pub iota: f64,
    /// Relative rms residual of the accepted fit (or of the better failed fit).
    pub rms_residual: f64,
    pub max_residual: f64,
    /// Relative tolerance the residuals were compared against.
    pub threshold: f64,
    pub samples: usize,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::SixDim { c2, c1, c0 } => {
                write!(f, "six: K = {c2:.10}·I² + {c1:.10}·I + {c0:.10}")?
            }
            Variant::FourDim { mu, c2, c0 } => write!(
                f,
                "four: K = {mu:.10}/(I+{:.10})² + {c2:.10}·(I+{:.10})² + {c0:.10}",
                self.iota, self.iota
            )?,
            Variant::NoExtra => write!(f, "none")?,
        }
        write!(f, " (relative rms residual {:.3e})", self.rms_residual)
    }
}

fn quadratic_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    let one = |_: f64| 1.0;
    let lin = |s: f64| s;
    let sq = |s: f64| s * s;
    fit_basis(samples, &[&sq, &lin, &one])
}

fn pole_fit(samples: &[(f64, f64)], iota: f64) -> Result<FitResult> {
    let inv = move |s: f64| (s + iota).powi(-2);
    let one = |_: f64| 1.0;
    let sq = move |s: f64| (s + iota).powi(2);
    fit_basis(samples, &[&inv, &sq, &one])
}

/// Relative rms of a pole fit at offset `iota`; infinite when the fit fails.
fn pole_score(samples: &[(f64, f64)], iota: f64, scale: f64) -> f64 {
    match pole_fit(samples, iota) {
        Ok(f) => f.rms_residual / scale,
        Err(_) => f64::INFINITY,
    }
}

/// Minimizes the pole-fit residual over the pole location `p = -ι`, which must
/// lie outside the sampled I-range. Candidates are `p = 0` (when outside) and
/// log-spaced distances on both sides, followed by a golden-section polish in
/// log-distance around the best candidate.
fn search_pole(samples: &[(f64, f64)], scale: f64) -> (f64, f64) {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    const STEPS: usize = 121;
    let (dmin, dmax) = ((1e-7 * width).ln(), (1e3 * width).ln());
    let log_d = |k: usize| dmin + (dmax - dmin) * k as f64 / (STEPS - 1) as f64;

    let mut best = (f64::INFINITY, 0.0);
    if lo > 0.0 || hi < 0.0 {
        best = (pole_score(samples, 0.0, scale), 0.0);
    }
    // side = -1: pole below lo; side = +1: pole above hi.
    for side in [-1.0, 1.0] {
        let pole_at = |ld: f64| {
            if side < 0.0 {
                lo - ld.exp()
            } else {
                hi + ld.exp()
            }
        };
        let scores: Vec<f64> = (0..STEPS)
            .map(|k| pole_score(samples, -pole_at(log_d(k)), scale))
            .collect();
        let (kbest, &sbest) = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let (mut a, mut b) = (
            log_d(kbest.saturating_sub(1)),
            log_d((kbest + 1).min(STEPS - 1)),
        );
        let f = |ld: f64| pole_score(samples, -pole_at(ld), scale);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        for (s, ld) in [(sbest, log_d(kbest)), (fc, c), (fd, d)] {
            if s < best.0 {
                best = (s, -pole_at(ld));
            }
        }
    }
    best
}

/// Classifies an autonomous profile.
pub fn classify(profile: &InvariantProfile) -> Result<SymmetryClass> {
    classify_with_tol(profile, FIT_TOL)
}

pub fn classify_with_tol(profile: &InvariantProfile, tol: f64) -> Result<SymmetryClass> {
    if profile.is_time_dependent() {
        return Err(Error::Invalid(
            "classification needs autonomous coefficients; use timedep_classifiers".into(),
        ));
    }
    classify_samples(&profile.ik_samples(), tol)
}

/// Classifies raw `(I, K)` samples.
pub fn classify_samples(samples: &[(f64, f64)], tol: f64) -> Result<SymmetryClass> {
    if samples.len() < 64 {
        return Err(Error::Invalid(format!(
            "{} samples; classification needs at least 64",
            samples.len()
        )));
    }
    let kmax = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let scale = kmax + 1.0;
    let threshold = tol * scale;

    // The span of {1, I, I²} is shift invariant, so no offset search is needed.
    let quad = quadratic_fit(samples)?;
    if quad.rms_residual <= threshold {
        let [c2, c1, c0] = [
            quad.coefficients[0],
            quad.coefficients[1],
            quad.coefficients[2],
        ];
        return Ok(SymmetryClass {
            variant: Variant::SixDim { c2, c1, c0 },
            iota: 0.0,
            rms_residual: quad.rms_residual / scale,
            max_residual: quad.max_residual / scale,
            threshold: tol,
            samples: samples.len(),
        });
    }

    let (score, iota) = search_pole(samples, scale);
    if score <= tol {
        let fit = pole_fit(samples, iota)?;
        let [mu, c2, c0] = [
            fit.coefficients[0],
            fit.coefficients[1],
            fit.coefficients[2],
        ];
        if mu.abs() > MU_TOL {
            return Ok(SymmetryClass {
                variant: Variant::FourDim { mu, c2, c0 },
                iota,
                rms_residual: fit.rms_residual / scale,
                max_residual: fit.max_residual / scale,
                threshold: tol,
                samples: samples.len(),
            });
        }
    }
    let rms = (quad.rms_residual / scale).min(score);
    Ok(SymmetryClass {
        variant: Variant::NoExtra,
        iota: 0.0,
        rms_residual: rms,
        max_residual: quad.max_residual / scale,
        threshold: tol,
        samples: samples.len(),
    })
}

/// Classifiers of `u_t = u_xx + (m + n x) u_x + (q + r x) u` with
/// `m, n, q, r` functions of `t`:
///
/// * `c2 = (ṅ - n²)/4`
/// * `c1 = (ṁ - m n + 2r)/2`
/// * `c0 = q - n/2 - m²/4`
///
/// The PDE has a six-dimensional algebra for any choice; the triple feeds the
/// time-dependent generators and the map to the heat equation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDepClassifiers {
    pub c2: Expr,
    pub c1: Expr,
    pub c0: Expr,
}

impl TimeDepClassifiers {
    /// `(c2, c1, c0)` at time `t`.
    pub fn at(&self, t: f64) -> Result<(f64, f64, f64)> {
        Ok((
            self.c2.eval_xt(0.0, t)?,
            self.c1.eval_xt(0.0, t)?,
            self.c0.eval_xt(0.0, t)?,
        ))
    }

    /// Evaluates on `n` equally spaced times, failing at the first singular one.
    pub fn check_window(&self, t_min: f64, t_max: f64, n: usize) -> Result<()> {
        for t in crate::numerics::linspace(t_min, t_max, n) {
            let (a, b, c) = self.at(t)?;
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(Error::Singular(format!(
                    "classifiers not finite at t = {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds the classifiers from `m, n, q, r`, which may depend on `t` only.
pub fn timedep_classifiers(m: &Expr, n: &Expr, q: &Expr, r: &Expr) -> Result<TimeDepClassifiers> {
    for (name, e) in [("m", m), ("n", n), ("q", q), ("r", r)] {
        if e.depends_on(Var::X) {
            return Err(Error::Invalid(format!("{name}(t) must not depend on x")));
        }
        if let Some(p) = e.params().into_iter().next() {
            return Err(Error::UnboundParameter(p));
        }
    }
    let dn = differentiate(n, Var::T);
    let dm = differentiate(m, Var::T);
    let c2 = simplify(&((dn - n.clone() * n.clone()) / 4.0));
    let c1 = simplify(&((dm - m.clone() * n.clone() + 2.0 * r.clone()) / 2.0));
    let c0 = simplify(&(q.clone() - n.clone() / 2.0 - m.clone() * m.clone() / 4.0));
    Ok(TimeDepClassifiers { c2, c1, c0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, ParamEnv};
    use crate::invariants::{profile, CoefficientSet, WorkingDomain};
    use std::sync::Arc;

    fn classify_pde(
        a: &str,
        b: &str,
        c: &str,
        params: &[(&str, f64)],
        dom: WorkingDomain,
    ) -> SymmetryClass {
        let env = ParamEnv::from_pairs(params.iter().map(|(k, v)| (*k, *v))).unwrap();
        let set = Arc::new(CoefficientSet::parse(a, b, c, env).unwrap());
        classify(&profile(set, &dom).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn heat_and_ou() {
        let dom = WorkingDomain::new(-3.0, 3.0, 0.0, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let h = classify_pde("1", "0", "0", &[], dom);
        assert!(
            matches!(h.variant, Variant::SixDim { c2, c1, c0 } if c2.abs() < 1e-9 && c1.abs() < 1e-9 && c0.abs() < 1e-9)
        );
        let ou = classify_pde("1", "l*x", "l", &[("l", 1.0)], dom);
        match ou.variant {
            Variant::SixDim { c2, c1, c0 } => {
                assert!(close(c2, -0.25, 1e-8) && close(c1, 0.0, 1e-8) && close(c0, 0.5, 1e-8))
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn cir_is_four_dim() {
        let dom = WorkingDomain::new(0.0, 4.0, 0.0, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let c = classify_pde(
            "sigma*x",
            "m+n*x",
            "0",
            &[("sigma", 1.0), ("m", 1.0), ("n", 2.0)],
            dom,
        );
        match c.variant {
            Variant::FourDim { mu, c2, c0 } => {
                assert!(close(mu, 0.25, 1e-6), "{c}");
                assert!(close(c2, -0.25, 1e-6), "{c}");
                assert!(close(c0, -1.0, 1e-6), "{c}");
                assert!(c.iota.abs() < 1e-4, "{c}");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn shifted_pole_is_found() {
        let dom = WorkingDomain::new(1.0, 3.0, 0.0, 1.0)
            .unwrap()
            .with_x0(2.0)
            .unwrap();
        // K = 0.3/x² with x0 = 2: I = x - 2, ι = 2.
        let c = classify_pde("1", "0", "0.3/x^2", &[], dom);
        match c.variant {
            Variant::FourDim { mu, .. } => {
                assert!(close(mu, 0.3, 1e-6), "{c}");
                assert!(close(c.iota, 2.0, 1e-5), "{c}");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn oscillatory_k_is_no_extra() {
        let dom = WorkingDomain::new(-1.0, 2.0, 0.0, 1.0).unwrap();
        let c = classify_pde("1", "0", "sin(5*x)", &[], dom);
        assert_eq!(c.variant, Variant::NoExtra);
    }

    #[test]
    fn too_few_samples() {
        let s: Vec<_> = (0..10).map(|i| (i as f64, 0.0)).collect();
        assert!(classify_samples(&s, FIT_TOL).is_err());
    }

    #[test]
    fn timedep_spec_diff() {
        let z = parse("0").unwrap();
        let cl = timedep_classifiers(&z, &parse("-1/t").unwrap(), &z, &z).unwrap();
        let (c2, c1, c0) = cl.at(2.0).unwrap();
        assert!(c2.abs() < 1e-15 && c1.abs() < 1e-15);
        assert!(close(c0, 0.25, 1e-15));
        let cl = timedep_classifiers(
            &parse("t/cosh(t)").unwrap(),
            &parse("-tanh(t)").unwrap(),
            &z,
            &parse("-0.5/cosh(t)").unwrap(),
        )
        .unwrap();
        for t in [0.3, 1.0, 2.5] {
            let (c2, c1, c0) = cl.at(t).unwrap();
            let sech = 1.0 / t.cosh();
            assert!(close(c2, -0.25, 1e-14));
            assert!(close(c1, 0.0, 1e-14));
            assert!(close(
                c0,
                0.5 * t.tanh() - 0.25 * t * t * sech * sech,
                1e-14
            ));
        }
    }

    #[test]
    fn timedep_rejects_x() {
        let z = parse("0").unwrap();
        assert!(timedep_classifiers(&parse("x").unwrap(), &z, &z, &z).is_err());
    }
}
