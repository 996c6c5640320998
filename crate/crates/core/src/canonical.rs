//! Point transformations to the heat equation `ũ_t̃ = ũ_x̃x̃` (first canonical
//! form) or to `ũ_t̃ = ũ_x̃x̃ + μ ũ/x̃²` (second canonical form).
//!
//! For `K = c2 I² + c1 I + c0` the map is
//!
//! ```text
//! t̃ = T(t),  x̃ = sqrt(Ṫ) (I + ω),
//! u = C (Ṫ a)^¼ exp[-∫b/(2a)dx + (T̈/8Ṫ)(I+ω)² + ω̇ I/2 - ∫(c2 ω² - ω̇²/4 - c0)dt] ũ(x̃, t̃)
//! ```
//!
//! with `{T, t} = 8 c2` and `ω̈ + 4 c2 ω = 2 c1`.

use std::fmt;
use std::sync::Arc;

use crate::classify::{SymmetryClass, Variant};
use crate::error::{Error, Result};
use crate::expr::{Expr, ParamEnv, Var};
use crate::invariants::{CoefficientSet, InvariantProfile};
use crate::numerics::{linspace, solve_ode_two_sided, OdeSpec, TwoSidedSolution};

/// `t ↦ (α t + β)/(γ t + δ)`, applied to `t`, `{cosh, sinh}(2λt)` or
/// `{cos, sin}(2λt)` depending on the case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl MobiusParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            delta,
        };
        if p.det() == 0.0 || !p.det().is_finite() {
            return Err(Error::Invalid(format!(
                "Möbius parameters ({alpha}, {beta}, {gamma}, {delta}) have zero determinant"
            )));
        }
        Ok(p)
    }

    /// `Δ = αδ - βγ`.
    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub const IDENTITY: MobiusParams = MobiusParams {
        alpha: 1.0,
        beta: 0.0,
        gamma: 0.0,
        delta: 1.0,
    };

    pub const SWAP: MobiusParams = MobiusParams {
        alpha: 0.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 0.0,
    };

    /// `(-1, 0, 0, 1)`: `T = -coth 2λt` or `-cot 2λt`.
    pub const NEG_IDENTITY: MobiusParams = MobiusParams {
        alpha: -1.0,
        beta: 0.0,
        gamma: 0.0,
        delta: 1.0,
    };

    /// Default per case, with `Ṫ > 0` on `t > 0`: `T = t` when flat,
    /// `tanh 2λt` when hyperbolic, and `-cot 2λt` (regular on `(0, π/2λ)`)
    /// when trigonometric.
    pub fn default_for(case: MapCase) -> Self {
        match case {
            MapCase::Flat => Self::IDENTITY,
            MapCase::Hyperbolic => Self::SWAP,
            MapCase::Trigonometric => Self::NEG_IDENTITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapCase {
    /// `c2 = 0`
    Flat,
    /// `c2 = -λ²`
    Hyperbolic,
    /// `c2 = λ²`
    Trigonometric,
}

impl MapCase {
    /// Case and `λ` for `c2`; `|c2| < FLAT_TOL` counts as flat.
    pub fn of(c2: f64) -> (MapCase, f64) {
        if c2.abs() < FLAT_TOL {
            (MapCase::Flat, 0.0)
        } else if c2 < 0.0 {
            (MapCase::Hyperbolic, (-c2).sqrt())
        } else {
            (MapCase::Trigonometric, c2.sqrt())
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapCase::Flat => "flat",
            MapCase::Hyperbolic => "hyperbolic",
            MapCase::Trigonometric => "trigonometric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `ũ_t̃ = ũ_x̃x̃`
    First,
    /// `ũ_t̃ = ũ_x̃x̃ + μ ũ / x̃²`
    Second,
}

/// `|c2|` below this is treated as the flat case.
pub const FLAT_TOL: f64 = 1e-9;

/// Closed-form solution of `{T, t} = 8 c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schwarzian {
    pub case: MapCase,
    pub lambda: f64,
    pub mobius: MobiusParams,
}

/// Builds `T` for constant `c2`. Any nonzero `Δ` is accepted here; the
/// orientation `Ṫ > 0` is enforced on the working window by
/// [`Schwarzian::check_window`].
pub fn solve_schwarzian(c2: f64, p: MobiusParams) -> Result<Schwarzian> {
    if !c2.is_finite() {
        return Err(Error::Invalid(format!("c2 = {c2} is not finite")));
    }
    let p = MobiusParams::new(p.alpha, p.beta, p.gamma, p.delta)?;
    let (case, lambda) = MapCase::of(c2);
    Ok(Schwarzian {
        case,
        lambda,
        mobius: p,
    })
}

impl Schwarzian {
    /// `(N, D, D', D'')` with `T = N / D`.
    fn parts(&self, t: f64) -> (f64, f64, f64, f64) {
        let MobiusParams {
            alpha,
            beta,
            gamma,
            delta,
        } = self.mobius;
        match self.case {
            MapCase::Flat => (alpha * t + beta, gamma * t + delta, gamma, 0.0),
            MapCase::Hyperbolic => {
                let w = 2.0 * self.lambda;
                let (ch, sh) = ((w * t).cosh(), (w * t).sinh());
                let d = gamma * ch + delta * sh;
                (
                    alpha * ch + beta * sh,
                    d,
                    w * (gamma * sh + delta * ch),
                    w * w * d,
                )
            }
            MapCase::Trigonometric => {
                let w = 2.0 * self.lambda;
                let (c, s) = ((w * t).cos(), (w * t).sin());
                let d = gamma * c + delta * s;
                (
                    alpha * c + beta * s,
                    d,
                    w * (delta * c - gamma * s),
                    -w * w * d,
                )
            }
        }
    }

    pub fn t_map(&self, t: f64) -> f64 {
        let (n, d, _, _) = self.parts(t);
        n / d
    }

    pub fn t_dot(&self, t: f64) -> f64 {
        let (_, d, _, _) = self.parts(t);
        let k = match self.case {
            MapCase::Flat => 1.0,
            _ => -2.0 * self.lambda,
        };
        k * self.mobius.det() / (d * d)
    }

    /// `ϱ = T̈ / Ṫ = -2 D'/D`.
    pub fn rho(&self, t: f64) -> f64 {
        let (_, d, dp, _) = self.parts(t);
        -2.0 * dp / d
    }

    pub fn t_ddot(&self, t: f64) -> f64 {
        self.rho(t) * self.t_dot(t)
    }

    /// `ϱ̇ = -2 D''/D + 2 (D'/D)²`.
    pub fn rho_dot(&self, t: f64) -> f64 {
        let (_, d, dp, dpp) = self.parts(t);
        -2.0 * dpp / d + 2.0 * (dp / d).powi(2)
    }

    /// `{T, t} = ϱ̇ - ϱ²/2`.
    pub fn schwarzian(&self, t: f64) -> f64 {
        let r = self.rho(t);
        self.rho_dot(t) - 0.5 * r * r
    }

    /// Zeros of the denominator in `[t_min, t_max]`, located by sign-change
    /// scanning and bisection.
    pub fn poles(&self, t_min: f64, t_max: f64) -> Vec<f64> {
        const N: usize = 4001;
        let ts = linspace(t_min, t_max, N);
        let den = |t: f64| self.parts(t).1;
        let mut out = Vec::new();
        for w in ts.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (mut fa, fb) = (den(a), den(b));
            if fa == 0.0 {
                if out.last() != Some(&a) {
                    out.push(a);
                }
                continue;
            }
            if fb == 0.0 {
                out.push(b);
                continue;
            }
            if fa.signum() == fb.signum() {
                continue;
            }
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = den(m);
                if fm == 0.0 || b - a <= 4.0 * f64::EPSILON * m.abs().max(1.0) {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Fails when the window contains a pole or `Ṫ <= 0` somewhere in it.
    pub fn check_window(&self, t_min: f64, t_max: f64) -> Result<()> {
        let poles = self.poles(t_min, t_max);
        if !poles.is_empty() {
            return Err(Error::Singular(format!(
                "T(t) has poles at t = {poles:?} inside [{t_min}, {t_max}]"
            )));
        }
        for t in linspace(t_min, t_max, 401) {
            let td = self.t_dot(t);
            if !(td > 0.0 && td.is_finite()) {
                return Err(Error::Singular(format!(
                    "dT/dt = {td} at t = {t}; choose Möbius parameters with the opposite sign of Δ"
                )));
            }
        }
        Ok(())
    }
}

/// Solution of `ω̈ + 4 c2(t) ω = 2 c1(t)` together with
/// `E(t) = ∫_{t0}^t (c2 ω² - ω̇²/4) ds`.
#[derive(Debug, Clone)]
pub struct OmegaSolution {
    sol: Option<TwoSidedSolution>,
}

impl OmegaSolution {
    /// `ω ≡ 0`, valid when `c1 ≡ 0` and the initial data vanish.
    pub fn zero() -> Self {
        Self { sol: None }
    }

    pub fn is_zero(&self) -> bool {
        self.sol.is_none()
    }

    /// `(ω, ω̇, E)` at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        match &self.sol {
            None => Ok((0.0, 0.0, 0.0)),
            Some(s) => {
                let y = s.eval(t)?;
                Ok((y[0], y[1], y[2]))
            }
        }
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.0)
    }

    pub fn omega_dot(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.1)
    }
}

/// Integrates `ω̈ + 4 c2 ω = 2 c1` from `(ω, ω̇)(t0) = initial` over
/// `window` (which must contain `t0`).
pub fn solve_omega(
    c2: &dyn Fn(f64) -> f64,
    c1: &dyn Fn(f64) -> f64,
    initial: (f64, f64),
    t0: f64,
    window: (f64, f64),
) -> Result<OmegaSolution> {
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let k2 = c2(t);
        dy[0] = y[1];
        dy[1] = 2.0 * c1(t) - 4.0 * k2 * y[0];
        dy[2] = k2 * y[0] * y[0] - 0.25 * y[1] * y[1];
    };
    let sol = solve_ode_two_sided(
        rhs,
        t0,
        &[initial.0, initial.1, 0.0],
        window,
        &OdeSpec::default(),
    )?;
    Ok(OmegaSolution { sol: Some(sol) })
}

/// The transformation of an autonomous six- or four-dimensional PDE to its
/// canonical form.
#[derive(Clone)]
pub struct HeatMap {
    pub schwarzian: Schwarzian,
    pub omega: OmegaSolution,
    /// Overall constant `C > 0`.
    pub constant: f64,
    pub target: Target,
    /// `c2, c1, c0` of `K` (with `c1 = 0` for the second canonical form).
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    /// `μ` of the second canonical form, zero for the first.
    pub mu: f64,
    /// Shift of I to its natural origin (second canonical form only).
    pub iota: f64,
    /// Time window the map is valid on.
    pub t_min: f64,
    pub t_max: f64,
    profile: Arc<InvariantProfile>,
}

impl fmt::Debug for HeatMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeatMap")
            .field("schwarzian", &self.schwarzian)
            .field("constant", &self.constant)
            .field("target", &self.target)
            .field("c2", &self.c2)
            .field("c1", &self.c1)
            .field("c0", &self.c0)
            .field("mu", &self.mu)
            .field("iota", &self.iota)
            .field("window", &(self.t_min, self.t_max))
            .finish()
    }
}

/// Padding of the ω solution beyond the window, so that finite differences
/// at the window ends stay inside it.
fn window_pad(t_min: f64, t_max: f64) -> f64 {
    0.02 * (t_max - t_min)
}

/// Builds the map for `cls` on the profile's time window. `ω` starts from
/// `(0, 0)` at `t_min`; the time integral is anchored at `t_min` and the
/// drift integral at the profile's drift anchor.
pub fn build_heat_map(
    profile: Arc<InvariantProfile>,
    cls: &SymmetryClass,
    p: MobiusParams,
    constant: f64,
    target: Target,
) -> Result<HeatMap> {
    if profile.is_time_dependent() {
        return Err(Error::Invalid(
            "heat maps need autonomous coefficients; use build_timedep_map".into(),
        ));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::Invalid(format!(
            "constant C = {constant} must be positive"
        )));
    }
    let (c2, c1, c0, mu, iota) = match (target, cls.variant) {
        (Target::First, Variant::SixDim { c2, c1, c0 }) => (c2, c1, c0, 0.0, 0.0),
        (Target::Second, Variant::FourDim { mu, c2, c0 }) => (c2, 0.0, c0, mu, cls.iota),
        (Target::First, Variant::FourDim { .. }) => {
            return Err(Error::Invalid(
                "a four-dimensional class maps to the second canonical form only".into(),
            ))
        }
        (Target::Second, Variant::SixDim { .. }) => {
            return Err(Error::Invalid(
                "a six-dimensional class maps to the heat equation; use the first target".into(),
            ))
        }
        (_, Variant::NoExtra) => {
            return Err(Error::Invalid(
                "no transformation exists for a class without extra symmetries".into(),
            ))
        }
    };
    let dom = profile.domain();
    let (t_min, t_max) = (dom.t_min, dom.t_max);
    let schwarzian = solve_schwarzian(c2, p)?;
    schwarzian.check_window(t_min, t_max)?;
    let omega = if c1 == 0.0 {
        OmegaSolution::zero()
    } else {
        let pad = window_pad(t_min, t_max);
        solve_omega(
            &|_| c2,
            &|_| c1,
            (0.0, 0.0),
            t_min,
            (t_min - pad, t_max + pad),
        )?
    };
    Ok(HeatMap {
        schwarzian,
        omega,
        constant,
        target,
        c2,
        c1,
        c0,
        mu,
        iota,
        t_min,
        t_max,
        profile,
    })
}

impl HeatMap {
    pub fn profile(&self) -> &Arc<InvariantProfile> {
        &self.profile
    }

    pub fn t_tilde(&self, t: f64) -> f64 {
        self.schwarzian.t_map(t)
    }

    /// `(t̃, x̃)` of `(x, t)`.
    pub fn coords(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let i = self.profile.i(x, t)? + self.iota;
        let w = self.omega.omega(t)?;
        Ok((self.t_tilde(t), self.schwarzian.t_dot(t).sqrt() * (i + w)))
    }

    /// `ln θ(x, t)` where `θ` is the multiplier of `ũ`.
    pub fn log_multiplier(&self, x: f64, t: f64) -> Result<f64> {
        let i = self.profile.i(x, t)? + self.iota;
        let (w, wd, e) = self.omega.eval(t)?;
        let td = self.schwarzian.t_dot(t);
        let a = self.profile.coeffs().abc(x, t)?.0;
        let drift = self.profile.drift_integral(x)?;
        let time_integral = e - self.c0 * (t - self.t_min);
        Ok(self.constant.ln() + 0.25 * (td * a).ln() - drift
            + self.schwarzian.rho(t) / 8.0 * (i + w).powi(2)
            + 0.5 * wd * i
            - time_integral)
    }

    pub fn multiplier(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.log_multiplier(x, t)?.exp())
    }

    /// `u(x, t) = θ(x, t) ũ(x̃, t̃)`.
    pub fn pull_back_at(&self, u_tilde: &dyn Fn(f64, f64) -> f64, x: f64, t: f64) -> Result<f64> {
        let (tt, xt) = self.coords(x, t)?;
        Ok(self.multiplier(x, t)? * u_tilde(xt, tt))
    }

    /// Evaluator of the pull-back of `u_tilde`; NaN where the map fails.
    pub fn pull_back<'a>(
        &'a self,
        u_tilde: impl Fn(f64, f64) -> f64 + Send + Sync + 'a,
    ) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'a {
        move |x, t| self.pull_back_at(&u_tilde, x, t).unwrap_or(f64::NAN)
    }

    /// Image of `ũ ≡ 1`.
    pub fn pull_back_constant(&self) -> impl Fn(f64, f64) -> f64 + Send + Sync + '_ {
        move |x, t| self.multiplier(x, t).unwrap_or(f64::NAN)
    }

    /// `(x̃, t̃, ũ)` for a solution `u` of the original PDE.
    pub fn push_forward_at(
        &self,
        u: &dyn Fn(f64, f64) -> f64,
        x: f64,
        t: f64,
    ) -> Result<(f64, f64, f64)> {
        let (tt, xt) = self.coords(x, t)?;
        Ok((xt, tt, u(x, t) / self.multiplier(x, t)?))
    }

    /// Source time `T(t_min) - (T(t_max) - T(t_min))` of the canonical heat
    /// kernel used by [`HeatMap::canonical_solution`].
    pub fn kernel_source_time(&self) -> f64 {
        let (a, b) = (self.t_tilde(self.t_min), self.t_tilde(self.t_max));
        a - (b - a)
    }

    /// A solution of the canonical PDE that is smooth on the image of the
    /// window: the heat kernel from [`HeatMap::kernel_source_time`] for the
    /// first form; for the second, `x̃^s` with `s² - s + μ = 0`, or its real
    /// part `√x̃ cos(β ln x̃)`, `β = √(μ - 1/4)`, when `μ > 1/4`.
    pub fn canonical_solution(&self) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        match self.target {
            Target::First => {
                let t0 = self.kernel_source_time();
                Ok(Arc::new(move |x: f64, t: f64| {
                    let s = t - t0;
                    (-x * x / (4.0 * s)).exp() / (4.0 * std::f64::consts::PI * s).sqrt()
                }))
            }
            Target::Second => {
                let disc = 1.0 - 4.0 * self.mu;
                if !disc.is_finite() {
                    return Err(Error::Invalid(format!("μ = {} is not finite", self.mu)));
                }
                if disc >= 0.0 {
                    let s = 0.5 * (1.0 + disc.sqrt());
                    Ok(Arc::new(move |x: f64, _t: f64| x.powf(s)))
                } else {
                    let beta = 0.5 * (-disc).sqrt();
                    Ok(Arc::new(move |x: f64, _t: f64| {
                        x.sqrt() * (beta * x.ln()).cos()
                    }))
                }
            }
        }
    }

    /// The canonical PDE the map lands on.
    pub fn target_pde(&self) -> Result<CoefficientSet> {
        let zero = Expr::num(0.0);
        let c = match self.target {
            Target::First => zero.clone(),
            Target::Second => Expr::num(self.mu) / Expr::x().powf(2.0),
        };
        CoefficientSet::new(Expr::num(1.0), zero, c, ParamEnv::new())
    }
}

/// Initial data of [`build_timedep_map`] at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeDepInit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_tilde: f64,
    pub log_multiplier: f64,
}

/// Map of `u_t = u_xx + (m + n x) u_x + (q + r x) u` to the heat equation:
///
/// ```text
/// u = exp(A x + B) ũ(e^α x + β, T),  A = e^α γ,
/// α̇ = n, γ̇ = e^{-α} r, β̇ = e^α (m + 2A), Ṫ = e^{2α}, Ḃ = A² + m A + q.
/// ```
#[derive(Debug, Clone)]
pub struct TimeDepMap {
    sol: TwoSidedSolution,
    pub t0: f64,
}

/// Solves the map's ODE system on `window` starting from `init` at `t0`.
pub fn build_timedep_map(
    m: &Expr,
    n: &Expr,
    q: &Expr,
    r: &Expr,
    t0: f64,
    window: (f64, f64),
    init: TimeDepInit,
) -> Result<TimeDepMap> {
    for (name, e) in [("m", m), ("n", n), ("q", q), ("r", r)] {
        if e.depends_on(Var::X) {
            return Err(Error::Invalid(format!("{name}(t) must not depend on x")));
        }
    }
    for t in linspace(window.0, window.1, 401) {
        for (name, e) in [("m", m), ("n", n), ("q", q), ("r", r)] {
            let v = e.eval_xt(0.0, t)?;
            if !v.is_finite() {
                return Err(Error::Singular(format!("{name}(t) is singular at t = {t}")));
            }
        }
    }
    let nan = |e: &Expr, t: f64| e.eval_xt(0.0, t).unwrap_or(f64::NAN);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (mm, nn, qq, rr) = (nan(m, t), nan(n, t), nan(q, t), nan(r, t));
        let ea = y[0].exp();
        let a = ea * y[2];
        dy[0] = nn;
        dy[1] = ea * (mm + 2.0 * a);
        dy[2] = rr / ea;
        dy[3] = ea * ea;
        dy[4] = a * a + mm * a + qq;
    };
    let y0 = [
        init.alpha,
        init.beta,
        init.gamma,
        init.t_tilde,
        init.log_multiplier,
    ];
    let spec = OdeSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..OdeSpec::default()
    };
    Ok(TimeDepMap {
        sol: solve_ode_two_sided(rhs, t0, &y0, window, &spec)?,
        t0,
    })
}

impl TimeDepMap {
    /// `[α, β, γ, T, B]` at `t`.
    pub fn state(&self, t: f64) -> Result<[f64; 5]> {
        let y = self.sol.eval(t)?;
        Ok([y[0], y[1], y[2], y[3], y[4]])
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[0])
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[1])
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[2])
    }

    pub fn t_tilde(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[3])
    }

    /// `(t̃, x̃)`.
    pub fn coords(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let [al, be, _, tt, _] = self.state(t)?;
        Ok((tt, al.exp() * x + be))
    }

    /// `A x + B`.
    pub fn log_multiplier(&self, x: f64, t: f64) -> Result<f64> {
        let [al, _, ga, _, b] = self.state(t)?;
        Ok(al.exp() * ga * x + b)
    }

    pub fn pull_back_at(&self, u_tilde: &dyn Fn(f64, f64) -> f64, x: f64, t: f64) -> Result<f64> {
        let (tt, xt) = self.coords(x, t)?;
        Ok(self.log_multiplier(x, t)?.exp() * u_tilde(xt, tt))
    }

    pub fn pull_back<'a>(
        &'a self,
        u_tilde: impl Fn(f64, f64) -> f64 + Send + Sync + 'a,
    ) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'a {
        move |x, t| self.pull_back_at(&u_tilde, x, t).unwrap_or(f64::NAN)
    }
}

/// The PDE `u_t = u_xx + (m + n x) u_x + (q + r x) u` as a coefficient set.
pub fn timedep_coefficients(m: &Expr, n: &Expr, q: &Expr, r: &Expr) -> Result<CoefficientSet> {
    let b = m.clone() + n.clone() * Expr::x();
    let c = q.clone() + r.clone() * Expr::x();
    CoefficientSet::new(
        Expr::num(1.0),
        crate::expr::simplify(&b),
        crate::expr::simplify(&c),
        ParamEnv::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use crate::expr::parse;
    use crate::invariants::{profile, WorkingDomain};
    use crate::numerics::d1;

    fn fd_schwarzian(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        let f1 = d1(&f, t, h);
        let f2 = crate::numerics::d2(&f, t, h);
        let f3 = (f(t - 3.0 * h) - 8.0 * f(t - 2.0 * h) + 13.0 * f(t - h) - 13.0 * f(t + h)
            + 8.0 * f(t + 2.0 * h)
            - f(t + 3.0 * h))
            / (8.0 * h * h * h);
        f3 / f1 - 1.5 * (f2 / f1).powi(2)
    }

    #[test]
    fn schwarzian_cases() {
        let s = solve_schwarzian(0.0, MobiusParams::IDENTITY).unwrap();
        assert_eq!(s.t_map(0.7), 0.7);
        assert_eq!(s.rho(0.7), 0.0);
        let s = solve_schwarzian(0.0, MobiusParams::SWAP).unwrap();
        assert!((s.t_map(0.5) - 2.0).abs() < 1e-15);
        assert!(s.schwarzian(0.5).abs() < 1e-12);
        let s = solve_schwarzian(-1.0, MobiusParams::SWAP).unwrap();
        let fd = fd_schwarzian(|t| s.t_map(t), 0.3, 1e-3);
        assert!((fd + 8.0).abs() < 1e-5, "{fd}");
        for (c2, p) in [
            (-0.7, MobiusParams::new(1.0, 2.0, 3.0, -1.0).unwrap()),
            (0.4, MobiusParams::SWAP),
        ] {
            let s = solve_schwarzian(c2, p).unwrap();
            for t in linspace(0.1, 0.9, 20) {
                let fd = fd_schwarzian(|t| s.t_map(t), t, 1e-3);
                assert!((fd - 8.0 * c2).abs() < 1e-5, "c2={c2} t={t} fd={fd}");
                assert!((s.schwarzian(t) - 8.0 * c2).abs() < 1e-10);
                let tdot = d1(|t| s.t_map(t), t, 1e-4);
                assert!((tdot - s.t_dot(t)).abs() < 1e-8 * tdot.abs().max(1.0));
            }
        }
    }

    #[test]
    fn poles_are_reported() {
        let s = solve_schwarzian(1.0, MobiusParams::SWAP).unwrap();
        // T = tan 2t: pole at π/4.
        let p = s.poles(0.1, 1.0);
        assert_eq!(p.len(), 1);
        assert!((p[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(s.check_window(0.1, 1.0).is_err());
        assert!(s.check_window(0.1, 0.7).is_ok());
    }

    #[test]
    fn omega_examples() {
        let c1 = 0.3;
        let w = solve_omega(&|_| 0.0, &|_| c1, (0.0, 0.0), 0.0, (0.0, 3.0)).unwrap();
        assert!((w.omega(2.0).unwrap() - 4.0 * c1).abs() < 1e-9);
        let r0 = 0.7;
        let w = solve_omega(
            &|t: f64| 0.25 * t.powi(-4),
            &|t: f64| r0 * t.powi(-3),
            (2.0 * r0 * 0.5, 2.0 * r0),
            0.5,
            (0.5, 2.0),
        )
        .unwrap();
        for t in linspace(0.5, 2.0, 30) {
            assert!((w.omega(t).unwrap() - 2.0 * r0 * t).abs() < 1e-9);
        }
    }

    fn map_for(a: &str, b: &str, c: &str, dom: WorkingDomain, p: MobiusParams) -> HeatMap {
        let set = Arc::new(CoefficientSet::parse(a, b, c, ParamEnv::new()).unwrap());
        let prof = Arc::new(profile(set, &dom).unwrap());
        let cls = classify(&prof).unwrap();
        build_heat_map(prof, &cls, p, 1.0, Target::First).unwrap()
    }

    #[test]
    fn identity_map_for_heat() {
        let dom = WorkingDomain::new(-2.0, 2.0, 0.1, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let m = map_for("1", "0", "0", dom, MobiusParams::IDENTITY);
        for (x, t) in [(0.3, 0.2), (-1.5, 0.9)] {
            let (tt, xt) = m.coords(x, t).unwrap();
            assert!((tt - t).abs() < 1e-15 && (xt - x).abs() < 1e-12);
            assert!((m.multiplier(x, t).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn brownian_map_matches_closed_form() {
        let dom = WorkingDomain::new(-2.0, 2.0, 0.1, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let p = MobiusParams::new(2.0, 1.0, 1.0, 3.0).unwrap();
        let m = map_for("(1+x^2)^2", "0", "0", dom, p);
        let x = 0.8;
        let t = 0.6;
        let d = t + 3.0;
        let (tt, xt) = m.coords(x, t).unwrap();
        assert!((tt - (2.0 * t + 1.0) / d).abs() < 1e-14);
        assert!((xt - 5f64.sqrt() / d * x.atan()).abs() < 1e-10);
        let ratio = |x: f64, t: f64| {
            let d = t + 3.0;
            let closed =
                d.powf(-0.5) * (1.0 + x * x).sqrt() * (-(x.atan().powi(2)) / (4.0 * d) + t).exp();
            m.multiplier(x, t).unwrap() / closed
        };
        let r0 = ratio(0.0, 0.1);
        for (x, t) in [(0.8, 0.6), (-1.7, 0.2), (1.9, 1.0)] {
            assert!((ratio(x, t) / r0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ou_map_matches_closed_form() {
        let dom = WorkingDomain::new(-6.0, 6.0, 0.05, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let p = MobiusParams::new(-1.0, 0.0, 0.0, 1.0).unwrap();
        let m = map_for("1", "x", "1", dom, p);
        for (x, t) in [(0.5, 0.3), (-2.0, 0.9)] {
            let (tt, xt) = m.coords(x, t).unwrap();
            assert!((tt + 1.0 / t.tanh()).abs() < 1e-12);
            assert!((xt - x / t.sinh()).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_orientation_rejected() {
        let dom = WorkingDomain::new(-2.0, 2.0, 0.1, 1.0).unwrap();
        let set = Arc::new(CoefficientSet::parse("1", "0", "0", ParamEnv::new()).unwrap());
        let prof = Arc::new(profile(set, &dom).unwrap());
        let cls = classify(&prof).unwrap();
        let p = MobiusParams::SWAP;
        assert!(matches!(
            build_heat_map(prof, &cls, p, 1.0, Target::First),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn timedep_identity_and_fokker_planck() {
        let z = parse("0").unwrap();
        let m = build_timedep_map(&z, &z, &z, &z, 0.5, (0.5, 2.0), TimeDepInit::default()).unwrap();
        let [a, b, g, tt, lm] = m.state(1.5).unwrap();
        assert_eq!((a, b, g, lm), (0.0, 0.0, 0.0, 0.0));
        assert!((tt - 1.0).abs() < 1e-12);

        let n = parse("sin(t)").unwrap();
        let m = build_timedep_map(
            &parse("t").unwrap(),
            &n,
            &n,
            &z,
            0.5,
            (0.5, 2.0),
            TimeDepInit::default(),
        )
        .unwrap();
        for t in linspace(0.6, 1.9, 10) {
            let [al, ..] = m.state(t).unwrap();
            assert!((m.log_multiplier(0.7, t).unwrap() - al).abs() < 1e-10);
            let tdot = d1(|s| m.t_tilde(s).unwrap(), t, 1e-3);
            assert!((tdot / (2.0 * al).exp() - 1.0).abs() < 1e-8);
        }
    }
}
