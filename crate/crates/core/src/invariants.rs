//! Semi-invariants of `u_t = a u_xx + b u_x + c u`.
//!
//! * `I(x) = ∫_{x0}^x ds / sqrt(a(s))`
//! * `J(x) = (sqrt a)' - b / sqrt a`
//! * `K(x) = ½ sqrt(a) J' - ¼ J² + c`, plus `½ ∫_{x0}^x ∂t(b/a) dx'` when the
//!   coefficients depend on time.
//!
//! `K` is unchanged by the gauge `u = θ(x) v`, which is what makes it usable
//! as a classifier.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr, ParamEnv, Var};
use crate::numerics::{integrate, linspace, QuadratureSpec};

/// Coefficients and the partial derivatives the invariants need, at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoeffValues {
    pub a: f64,
    pub a_x: f64,
    pub a_xx: f64,
    pub a_t: f64,
    pub b: f64,
    pub b_x: f64,
    pub b_xx: f64,
    pub b_t: f64,
    pub c: f64,
    pub c_x: f64,
}

impl CoeffValues {
    pub fn j(&self) -> f64 {
        (0.5 * self.a_x - self.b) / self.a.sqrt()
    }

    /// `∂J/∂x`.
    pub fn j_x(&self) -> f64 {
        let s = self.a.sqrt();
        (0.5 * self.a_xx - self.b_x) / s - (0.5 * self.a_x - self.b) * self.a_x / (2.0 * self.a * s)
    }

    /// The point-local part of K: `½ sqrt(a) J_x - ¼ J² + c`.
    pub fn k_local(&self) -> f64 {
        let j = self.j();
        0.5 * self.a.sqrt() * self.j_x() - 0.25 * j * j + self.c
    }

    /// `∂t(b/a)`.
    pub fn dt_b_over_a(&self) -> f64 {
        (self.b_t * self.a - self.b * self.a_t) / (self.a * self.a)
    }

    /// The expanded second-order semi-invariant
    /// `½b²a_x + (a a_xx - a_t - a_x²) b + (a a_x - a b) b_x + a b_t - a² b_xx + 2a² c_x`.
    pub fn khat2(&self) -> f64 {
        let v = self;
        0.5 * v.b * v.b * v.a_x
            + (v.a * v.a_xx - v.a_t - v.a_x * v.a_x) * v.b
            + (v.a * v.a_x - v.a * v.b) * v.b_x
            + v.a * v.b_t
            - v.a * v.a * v.b_xx
            + 2.0 * v.a * v.a * v.c_x
    }
}

/// Anything that can report the PDE coefficients and their derivatives.
pub trait Coefficients: Send + Sync {
    fn values(&self, x: f64, t: f64) -> Result<CoeffValues>;

    /// `(a, b, c)` only; cheaper where derivatives are not needed.
    fn abc(&self, x: f64, t: f64) -> Result<(f64, f64, f64)> {
        let v = self.values(x, t)?;
        Ok((v.a, v.b, v.c))
    }

    fn is_time_dependent(&self) -> bool;
}

/// Coefficients given as expressions, with their symbolic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub env: ParamEnv,
    time_dependent: bool,
    bound: [Expr; 10],
}

impl CoefficientSet {
    /// Binds the parameters and precomputes the derivatives.
    pub fn new(a: Expr, b: Expr, c: Expr, env: ParamEnv) -> Result<Self> {
        let (ab, bb, cb) = (a.bind(&env)?, b.bind(&env)?, c.bind(&env)?);
        let time_dependent = [&ab, &bb, &cb].iter().any(|e| e.depends_on(Var::T));
        let ab = simplify(&ab);
        let bb = simplify(&bb);
        let cb = simplify(&cb);
        let a_x = differentiate(&ab, Var::X);
        let b_x = differentiate(&bb, Var::X);
        let bound = [
            ab.clone(),
            a_x.clone(),
            differentiate(&a_x, Var::X),
            differentiate(&ab, Var::T),
            bb.clone(),
            b_x.clone(),
            differentiate(&b_x, Var::X),
            differentiate(&bb, Var::T),
            cb.clone(),
            differentiate(&cb, Var::X),
        ];
        Ok(Self {
            a,
            b,
            c,
            env,
            time_dependent,
            bound,
        })
    }

    /// Parses the three coefficient strings.
    pub fn parse(a: &str, b: &str, c: &str, env: ParamEnv) -> Result<Self> {
        Self::new(
            crate::expr::parse(a)?,
            crate::expr::parse(b)?,
            crate::expr::parse(c)?,
            env,
        )
    }

    /// Coefficient expressions with parameters substituted: `(a, b, c)`.
    pub fn bound(&self) -> (&Expr, &Expr, &Expr) {
        (&self.bound[0], &self.bound[4], &self.bound[8])
    }

    pub fn a_at(&self, x: f64, t: f64) -> Result<f64> {
        self.bound[0].eval_xt(x, t)
    }

    pub fn b_at(&self, x: f64, t: f64) -> Result<f64> {
        self.bound[4].eval_xt(x, t)
    }

    pub fn c_at(&self, x: f64, t: f64) -> Result<f64> {
        self.bound[8].eval_xt(x, t)
    }

    /// `K̂₂` at one point.
    pub fn khat2(&self, x: f64, t: f64) -> Result<f64> {
        let v = self.values(x, t)?;
        if v.a <= 0.0 {
            return Err(Error::NonPositiveDiffusion { x, t, value: v.a });
        }
        Ok(v.khat2())
    }
}

impl Coefficients for CoefficientSet {
    fn values(&self, x: f64, t: f64) -> Result<CoeffValues> {
        let e = |i: usize| self.bound[i].eval_xt(x, t);
        Ok(CoeffValues {
            a: e(0)?,
            a_x: e(1)?,
            a_xx: e(2)?,
            a_t: e(3)?,
            b: e(4)?,
            b_x: e(5)?,
            b_xx: e(6)?,
            b_t: e(7)?,
            c: e(8)?,
            c_x: e(9)?,
        })
    }

    fn abc(&self, x: f64, t: f64) -> Result<(f64, f64, f64)> {
        Ok((self.a_at(x, t)?, self.b_at(x, t)?, self.c_at(x, t)?))
    }

    fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }
}

impl fmt::Display for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "u_t = ({})·u_xx + ({})·u_x + ({})·u",
            self.a, self.b, self.c
        )
    }
}

/// Applies the gauge `u = θ(x) v`: the PDE for `v` has the same `a`,
/// `b + 2aθ'/θ` and `c + (aθ'' + bθ')/θ`.
pub fn gauge_transform(coeffs: &CoefficientSet, theta: &Expr) -> Result<CoefficientSet> {
    let th = theta.bind(&coeffs.env)?;
    let th_x = differentiate(&th, Var::X);
    let th_xx = differentiate(&th_x, Var::X);
    let (a, b, c) = coeffs.bound();
    let new_b = b.clone() + 2.0 * a.clone() * th_x.clone() / th.clone();
    let new_c = c.clone() + (a.clone() * th_xx + b.clone() * th_x) / th;
    CoefficientSet::new(
        a.clone(),
        simplify(&new_b),
        simplify(&new_c),
        ParamEnv::new(),
    )
}

/// Spatial and temporal window on which invariants are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Lower limit of the I integral.
    pub x0: f64,
    pub nx: usize,
    pub nt: usize,
    /// Distance kept from both spatial ends when sampling.
    pub margin: f64,
}

impl WorkingDomain {
    /// Domain with defaults: `x0` at the midpoint, 201 × 16 samples,
    /// margin `1e-3 (x_max - x_min)`.
    pub fn new(x_min: f64, x_max: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let d = Self {
            x_min,
            x_max,
            t_min,
            t_max,
            x0: 0.5 * (x_min + x_max),
            nx: 201,
            nt: 16,
            margin: 1e-3 * (x_max - x_min),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_x0(mut self, x0: f64) -> Result<Self> {
        self.x0 = x0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_counts(mut self, nx: usize, nt: usize) -> Result<Self> {
        self.nx = nx;
        self.nt = nt;
        self.validate()?;
        Ok(self)
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        self.margin = margin;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max
            && self.t_min < self.t_max
            && (self.x_min..=self.x_max).contains(&self.x0)
            && self.nx >= 32
            && self.nt >= 8
            && self.margin >= 0.0
            && 2.0 * self.margin < self.x_max - self.x_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "invalid working domain: x in [{}, {}], t in [{}, {}], x0 = {}, nx = {}, nt = {}, margin = {}",
                self.x_min, self.x_max, self.t_min, self.t_max, self.x0, self.nx, self.nt, self.margin
            )))
        }
    }

    /// Spatial sample points inside the margins.
    pub fn x_samples(&self) -> Vec<f64> {
        linspace(self.x_min + self.margin, self.x_max - self.margin, self.nx)
    }

    pub fn t_samples(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.nt)
    }
}

pub(crate) fn fine_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_subdivisions: 10_000,
    }
}

/// `x ↦ ∫_{anchor}^x f`, evaluated from the nearest cached node.
#[derive(Clone)]
pub(crate) struct Cumulative {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    nodes: Vec<f64>,
    values: Vec<f64>,
    spec: QuadratureSpec,
}

impl Cumulative {
    pub(crate) fn new(
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        anchor: f64,
        grid: &[f64],
        spec: QuadratureSpec,
    ) -> Result<Self> {
        let mut nodes: Vec<f64> = grid.to_vec();
        nodes.push(anchor);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let k = nodes
            .iter()
            .position(|&x| x == anchor)
            .expect("anchor inserted");
        let mut values = vec![0.0; nodes.len()];
        for i in k + 1..nodes.len() {
            values[i] = values[i - 1] + integrate(|s| f(s), nodes[i - 1], nodes[i], &spec)?;
        }
        for i in (0..k).rev() {
            values[i] = values[i + 1] - integrate(|s| f(s), nodes[i], nodes[i + 1], &spec)?;
        }
        Ok(Self {
            f,
            nodes,
            values,
            spec,
        })
    }

    pub(crate) fn eval(&self, x: f64) -> Result<f64> {
        let i = self.nodes.partition_point(|&n| n < x);
        let nearest = match i {
            0 => 0,
            i if i == self.nodes.len() => i - 1,
            i => {
                if x - self.nodes[i - 1] <= self.nodes[i] - x {
                    i - 1
                } else {
                    i
                }
            }
        };
        let node = self.nodes[nearest];
        if node == x {
            return Ok(self.values[nearest]);
        }
        let f = &self.f;
        Ok(self.values[nearest] + integrate(|s| f(s), node, x, &self.spec)?)
    }
}

/// One sampled point of an [`InvariantProfile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub x: f64,
    pub t: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

/// Evaluators for I, J, K on a working domain, plus a sampled grid.
#[derive(Clone)]
pub struct InvariantProfile {
    coeffs: Arc<dyn Coefficients>,
    domain: WorkingDomain,
    time_dependent: bool,
    i_cache: Option<Cumulative>,
    drift_cache: Option<Cumulative>,
    pub samples: Vec<ProfileSample>,
}

impl fmt::Debug for InvariantProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantProfile")
            .field("domain", &self.domain)
            .field("time_dependent", &self.time_dependent)
            .field("samples", &self.samples.len())
            .finish()
    }
}

fn nan_on_err(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn check_positive(coeffs: &dyn Coefficients, xs: &[f64], ts: &[f64]) -> Result<()> {
    for &t in ts {
        for &x in xs {
            let (a, _, _) = coeffs.abc(x, t)?;
            if !(a > 0.0) {
                return Err(Error::NonPositiveDiffusion { x, t, value: a });
            }
        }
    }
    Ok(())
}

/// Profile of autonomous coefficients.
pub fn profile(coeffs: Arc<dyn Coefficients>, dom: &WorkingDomain) -> Result<InvariantProfile> {
    dom.validate()?;
    if coeffs.is_time_dependent() {
        return Err(Error::Invalid(
            "coefficients depend on t; use profile_xt".into(),
        ));
    }
    let xs = dom.x_samples();
    let t = dom.t_min;
    check_positive(coeffs.as_ref(), &xs, &[t])?;

    let inv_sqrt_a: Arc<dyn Fn(f64) -> f64 + Send + Sync> = {
        let c = coeffs.clone();
        Arc::new(move |s| nan_on_err(c.abc(s, t).map(|v| 1.0 / v.0.sqrt())))
    };
    let i_cache = Cumulative::new(inv_sqrt_a, dom.x0, &xs, fine_quadrature())?;

    let half_b_over_a: Arc<dyn Fn(f64) -> f64 + Send + Sync> = {
        let c = coeffs.clone();
        Arc::new(move |s| nan_on_err(c.abc(s, t).map(|v| 0.5 * v.1 / v.0)))
    };
    let anchor = if half_b_over_a(dom.x0).is_finite() {
        dom.x0
    } else {
        0.5 * (dom.x_min + dom.x_max)
    };
    let drift_cache = Cumulative::new(half_b_over_a, anchor, &xs, fine_quadrature())?;

    let mut prof = InvariantProfile {
        coeffs,
        domain: *dom,
        time_dependent: false,
        i_cache: Some(i_cache),
        drift_cache: Some(drift_cache),
        samples: Vec::with_capacity(xs.len()),
    };
    for &x in &xs {
        let v = prof.coeffs.values(x, t)?;
        let sample = ProfileSample {
            x,
            t,
            i: prof.i(x, t)?,
            j: v.j(),
            k: v.k_local(),
        };
        if !sample.k.is_finite() {
            return Err(Error::Numerical(format!("K is not finite at x = {x}")));
        }
        prof.samples.push(sample);
    }
    Ok(prof)
}

/// Profile of possibly time-dependent coefficients, sampled on the space-time grid.
pub fn profile_xt(coeffs: Arc<dyn Coefficients>, dom: &WorkingDomain) -> Result<InvariantProfile> {
    dom.validate()?;
    let xs = dom.x_samples();
    let ts = dom.t_samples();
    check_positive(coeffs.as_ref(), &xs, &ts)?;
    let mut prof = InvariantProfile {
        coeffs,
        domain: *dom,
        time_dependent: true,
        i_cache: None,
        drift_cache: None,
        samples: Vec::with_capacity(xs.len() * ts.len()),
    };
    for &t in &ts {
        for &x in &xs {
            let v = prof.coeffs.values(x, t)?;
            prof.samples.push(ProfileSample {
                x,
                t,
                i: prof.i(x, t)?,
                j: v.j(),
                k: prof.k(x, t)?,
            });
        }
    }
    Ok(prof)
}

impl InvariantProfile {
    pub fn domain(&self) -> &WorkingDomain {
        &self.domain
    }

    pub fn x0(&self) -> f64 {
        self.domain.x0
    }

    pub fn coeffs(&self) -> &Arc<dyn Coefficients> {
        &self.coeffs
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn i(&self, x: f64, t: f64) -> Result<f64> {
        match &self.i_cache {
            Some(c) => c.eval(x),
            None => {
                let co = &self.coeffs;
                integrate(
                    |s| nan_on_err(co.abc(s, t).map(|v| 1.0 / v.0.sqrt())),
                    self.domain.x0,
                    x,
                    &fine_quadrature(),
                )
            }
        }
    }

    pub fn sqrt_a(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.coeffs.abc(x, t)?.0.sqrt())
    }

    pub fn j(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.coeffs.values(x, t)?.j())
    }

    pub fn k(&self, x: f64, t: f64) -> Result<f64> {
        let local = self.coeffs.values(x, t)?.k_local();
        if !self.time_dependent {
            return Ok(local);
        }
        let co = &self.coeffs;
        let extra = integrate(
            |s| nan_on_err(co.values(s, t).map(|v| v.dt_b_over_a())),
            self.domain.x0,
            x,
            &fine_quadrature(),
        )?;
        Ok(local + 0.5 * extra)
    }

    /// `∫ b/(2a) dx` from the profile's drift anchor (`x0` when the integrand
    /// is finite there, otherwise the domain midpoint). Autonomous only.
    pub fn drift_integral(&self, x: f64) -> Result<f64> {
        match &self.drift_cache {
            Some(c) => c.eval(x),
            None => Err(Error::Invalid(
                "drift integral is only cached for autonomous profiles".into(),
            )),
        }
    }

    /// `(I, K)` pairs of the sampled grid.
    pub fn ik_samples(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.i, s.k)).collect()
    }
}

/// `K̂₂` for expression coefficients at `(x, t)`.
pub fn khat2(coeffs: &CoefficientSet, x: f64, t: f64) -> Result<f64> {
    coeffs.khat2(x, t)
}
