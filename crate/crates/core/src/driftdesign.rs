//! Drift design for conserved-form PDEs `u_t = (p u_x + q u)_x`.
//!
//! The class of the PDE is fixed by `½Ω' - ¼Ω² = f(I)` with
//! `q = p'/2 + sqrt(p) Ω(I)`. Writing `Ω = -2v'/v` linearizes it to
//! `4v'' - g v = 0` with `g = cole_hopf_potential(f) = -4f`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{differentiate, Expr, ParamEnv, Var};
use crate::invariants::{
    profile, CoeffValues, CoefficientSet, Coefficients, InvariantProfile, WorkingDomain,
};
use crate::numerics::{linspace, solve_ode, DenseSolution, OdeSpec};

/// Target form of `f(I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetForm {
    /// `μ/I² + c2 I² + c0`.
    Four { mu: f64, c2: f64, c0: f64 },
    /// `c2 I² + c1 I + c0`.
    Six { c2: f64, c1: f64, c0: f64 },
}

impl TargetForm {
    pub fn f(&self, i: f64) -> f64 {
        match *self {
            TargetForm::Four { mu, c2, c0 } => mu / (i * i) + c2 * i * i + c0,
            TargetForm::Six { c2, c1, c0 } => (c2 * i + c1) * i + c0,
        }
    }

    pub fn f_prime(&self, i: f64) -> f64 {
        match *self {
            TargetForm::Four { mu, c2, .. } => -2.0 * mu / (i * i * i) + 2.0 * c2 * i,
            TargetForm::Six { c2, c1, .. } => 2.0 * c2 * i + c1,
        }
    }
}

/// Coefficient of the linear Cole–Hopf equation `4v'' - g v = 0` for a
/// Riccati right-hand side `f`.
pub fn cole_hopf_potential(f: f64) -> f64 {
    -4.0 * f
}

/// Samples used to locate zeros of `v` on the requested interval.
const ZERO_SCAN: usize = 4001;

/// `Ω(I) = -2v'/v` on an interval free of zeros of `v`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub form: TargetForm,
    /// `(v, v')` at the left end of the requested range.
    pub v_init: (f64, f64),
    /// Requested range in `I`.
    pub requested: (f64, f64),
    /// Sub-interval where `v` has no zero.
    pub valid: (f64, f64),
    sol: Arc<DenseSolution>,
}

impl RiccatiSolution {
    fn check(&self, i: f64) -> Result<()> {
        if i < self.valid.0 || i > self.valid.1 {
            return Err(Error::Invalid(format!(
                "I = {i} outside the Riccati solution's valid interval [{}, {}]",
                self.valid.0, self.valid.1
            )));
        }
        Ok(())
    }

    /// `(v, v')` at `i`.
    pub fn v(&self, i: f64) -> Result<(f64, f64)> {
        self.check(i)?;
        let y = self.sol.eval(i)?;
        Ok((y[0], y[1]))
    }

    pub fn omega(&self, i: f64) -> Result<f64> {
        let (v, dv) = self.v(i)?;
        Ok(-2.0 * dv / v)
    }

    /// `Ω' = 2f + ½Ω²`.
    pub fn omega_prime(&self, i: f64) -> Result<f64> {
        let w = self.omega(i)?;
        Ok(2.0 * self.form.f(i) + 0.5 * w * w)
    }

    /// `Ω'' = 2f' + Ω Ω'`.
    pub fn omega_second(&self, i: f64) -> Result<f64> {
        Ok(2.0 * self.form.f_prime(i) + self.omega(i)? * self.omega_prime(i)?)
    }

    /// `½Ω' - ¼Ω² - f` with `Ω'` from finite differences of `Ω`.
    pub fn residual(&self, i: f64) -> Result<f64> {
        let o = |s: f64| self.omega(s);
        // Ω ~ 2/distance near a zero of v; the step follows that scale
        let h = 1e-3 * (self.valid.1 - self.valid.0).min(1.0) / (1.0 + 0.5 * o(i)?.abs());
        let (lo, hi) = (self.valid.0 + 2.0 * h, self.valid.1 - 2.0 * h);
        let i = i.clamp(lo, hi);
        let d =
            (o(i - 2.0 * h)? - 8.0 * o(i - h)? + 8.0 * o(i + h)? - o(i + 2.0 * h)?) / (12.0 * h);
        let w = o(i)?;
        Ok(0.5 * d - 0.25 * w * w - self.form.f(i))
    }
}

/// Integrates `4v'' = g v` from `v_init` at the left end of `i_range` and
/// truncates at the first zero of `v`.
pub fn solve_omega_profile(
    form: TargetForm,
    v_init: (f64, f64),
    i_range: (f64, f64),
) -> Result<RiccatiSolution> {
    let (lo, hi) = i_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Invalid(format!(
            "I range [{lo}, {hi}] must be finite and ordered"
        )));
    }
    if v_init.0 == 0.0 && v_init.1 == 0.0 {
        return Err(Error::Invalid("v is identically zero".into()));
    }
    if v_init.0 == 0.0 {
        return Err(Error::Singular(format!(
            "v vanishes at the left endpoint I = {lo}"
        )));
    }
    if let TargetForm::Four { mu, .. } = form {
        if mu != 0.0 && lo <= 0.0 && hi >= 0.0 {
            return Err(Error::Singular(
                "the I range contains the pole I = 0 of μ/I²".into(),
            ));
        }
    }
    let rhs = move |i: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = 0.25 * cole_hopf_potential(form.f(i)) * y[0];
    };
    let spec = OdeSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..OdeSpec::default()
    };
    let sol = solve_ode(rhs, lo, &[v_init.0, v_init.1], hi, &spec)?;
    let mut valid_hi = hi;
    let mut prev = (lo, v_init.0);
    for i in linspace(lo, hi, ZERO_SCAN).into_iter().skip(1) {
        let v = sol.eval(i)?[0];
        if v == 0.0 || v.signum() != prev.1.signum() {
            // back off from the zero so Ω stays bounded
            valid_hi = prev.0 + 0.5 * (i - prev.0);
            valid_hi = valid_hi.min(prev.0 + 0.9 * (i - prev.0));
            let span = valid_hi - lo;
            valid_hi -= 1e-3 * span;
            break;
        }
        prev = (i, v);
    }
    Ok(RiccatiSolution {
        form,
        v_init,
        requested: i_range,
        valid: (lo, valid_hi),
        sol: Arc::new(sol),
    })
}

/// Drift `q(x) = p'/2 + sqrt(p) Ω(I(x))` and the conserved-form PDE it
/// defines: `a = p`, `b = p' + q`, `c = q'`.
#[derive(Clone)]
pub struct DesignedDrift {
    p: [Expr; 4],
    pub riccati: RiccatiSolution,
    profile: Arc<InvariantProfile>,
}

impl std::fmt::Debug for DesignedDrift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DesignedDrift")
            .field("p", &self.p[0].to_string())
            .field("form", &self.riccati.form)
            .finish()
    }
}

impl DesignedDrift {
    fn p_jet(&self, x: f64) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, e) in out.iter_mut().zip(&self.p) {
            *o = e.eval_xt(x, 0.0)?;
        }
        Ok(out)
    }

    pub fn i(&self, x: f64) -> Result<f64> {
        self.profile.i(x, 0.0)
    }

    /// `(q, q', q'')` at `x`.
    pub fn q_jet(&self, x: f64) -> Result<[f64; 3]> {
        let [p, p1, p2, p3] = self.p_jet(x)?;
        let i = self.i(x)?;
        let (w, w1, w2) = (
            self.riccati.omega(i)?,
            self.riccati.omega_prime(i)?,
            self.riccati.omega_second(i)?,
        );
        let sp = p.sqrt();
        let q = 0.5 * p1 + sp * w;
        let q1 = 0.5 * p2 + p1 * w / (2.0 * sp) + w1;
        let q2 = 0.5 * p3
            + (p2 / (2.0 * sp) - p1 * p1 / (4.0 * p * sp)) * w
            + p1 * w1 / (2.0 * p)
            + w2 / sp;
        Ok([q, q1, q2])
    }

    pub fn q(&self, x: f64) -> Result<f64> {
        Ok(self.q_jet(x)?[0])
    }
}

impl Coefficients for DesignedDrift {
    fn values(&self, x: f64, _t: f64) -> Result<CoeffValues> {
        let [p, p1, p2, p3] = self.p_jet(x)?;
        let [q, q1, q2] = self.q_jet(x)?;
        Ok(CoeffValues {
            a: p,
            a_x: p1,
            a_xx: p2,
            a_t: 0.0,
            b: p1 + q,
            b_x: p2 + q1,
            b_xx: p3 + q2,
            b_t: 0.0,
            c: q1,
            c_x: q2,
        })
    }

    fn is_time_dependent(&self) -> bool {
        false
    }
}

/// Builds the drift for diffusion `p(x)` on `dom`; `I` is measured from
/// `dom.x0` and must stay inside the Riccati solution's valid interval.
pub fn design_drift(
    p: &Expr,
    env: &ParamEnv,
    sol: &RiccatiSolution,
    dom: &WorkingDomain,
) -> Result<DesignedDrift> {
    let p0 = p.bind(env)?;
    if p0.depends_on(Var::T) {
        return Err(Error::Invalid("p must not depend on t".into()));
    }
    let p1 = differentiate(&p0, Var::X);
    let p2 = differentiate(&p1, Var::X);
    let p3 = differentiate(&p2, Var::X);
    let diffusion: Arc<dyn Coefficients> = Arc::new(CoefficientSet::new(
        p0.clone(),
        Expr::num(0.0),
        Expr::num(0.0),
        ParamEnv::new(),
    )?);
    let prof = Arc::new(profile(diffusion, dom)?);
    for x in [dom.x_min, dom.x_max] {
        let i = prof.i(x, 0.0)?;
        sol.check(i).map_err(|_| {
            Error::Invalid(format!(
                "I({x}) = {i} leaves the Riccati solution's valid interval [{}, {}]",
                sol.valid.0, sol.valid.1
            ))
        })?;
    }
    Ok(DesignedDrift {
        p: [p0, p1, p2, p3],
        riccati: sol.clone(),
        profile: prof,
    })
}

/// Parameters of the confluent hypergeometric reductions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KummerParams {
    /// `z = scale (I + shift)²` and Kummer parameter `a`.
    Six { scale: f64, shift: f64, a: f64 },
    /// Exponent `s = ½(1 ± sqrt(1+μ))` and coefficient
    /// `c0/(8 sqrt c2) + ¼ + s/2`, for both signs.
    Four { s: [f64; 2], coefficient: [f64; 2] },
}

impl KummerParams {
    /// Kummer variable `z(I)` of the six-dimensional reduction.
    pub fn z(&self, i: f64) -> Option<f64> {
        match *self {
            KummerParams::Six { scale, shift, .. } => Some(scale * (i + shift).powi(2)),
            KummerParams::Four { .. } => None,
        }
    }
}

pub fn kummer_params(form: TargetForm) -> Result<KummerParams> {
    match form {
        TargetForm::Six { c2, c1, c0 } => {
            if !(c2 > 0.0) {
                return Err(Error::Invalid("Kummer reduction needs c2 > 0".into()));
            }
            Ok(KummerParams::Six {
                scale: c2.sqrt() / 2.0,
                shift: c1 / (2.0 * c2),
                a: 0.25 * (1.0 + (4.0 * c0 * c2 - c1 * c1) / (8.0 * c2.powf(1.5))),
            })
        }
        TargetForm::Four { mu, c2, c0 } => {
            if !(c2 > 0.0) {
                return Err(Error::Invalid("Kummer reduction needs c2 > 0".into()));
            }
            if 1.0 + mu < 0.0 {
                return Err(Error::Invalid("exponent s is complex for μ < -1".into()));
            }
            let r = (1.0 + mu).sqrt();
            let s = [0.5 * (1.0 + r), 0.5 * (1.0 - r)];
            let base = c0 / (8.0 * c2.sqrt()) + 0.25;
            Ok(KummerParams::Four {
                s,
                coefficient: [base + s[0] / 2.0, base + s[1] / 2.0],
            })
        }
    }
}
