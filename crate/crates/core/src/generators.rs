//! Symmetry generators `v = τ ∂t + ξ ∂x + φ u∂u` and their brackets.
//!
//! Every field is built from time functions `(τ, ρ, σ)`:
//!
//! ```text
//! ξ = sqrt(a) (½ τ̇ I + ρ)
//! φ = -⅛ τ̈ I² - ½ ρ̇ I + ¼ τ̇ I J + ½ ρ J + σ - (τ/2) ∫ b_t/a dx
//! ```
//!
//! subject to `τ⃛ + 16 c2 τ̇ + 8 ċ2 τ = 0`, `ρ̈ + 4 c2 ρ + 3 c1 τ̇ + 2 ċ1 τ = 0`
//! and `σ̇ = (c0 τ)˙ + c1 ρ - τ̈/4`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::classify::{timedep_classifiers, SymmetryClass, TimeDepClassifiers, Variant};
use crate::error::{Error, Result};
use crate::expr::{differentiate, parse, Expr, Var};
use crate::invariants::InvariantProfile;
use crate::numerics::{solve_ode_two_sided, OdeSpec, TwoSidedSolution};

/// `τ, τ̇, τ̈, τ⃛`, `ρ, ρ̇, ρ̈` and `σ, σ̇` at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrsJet {
    pub tau: [f64; 4],
    pub rho: [f64; 3],
    pub sigma: [f64; 2],
}

/// Source of `(τ, ρ, σ)` and their derivatives.
pub trait TimeData: Send + Sync {
    fn jet(&self, t: f64) -> Result<TrsJet>;
}

/// `(τ, ρ, σ)` given as expressions in `t`.
#[derive(Debug, Clone)]
pub struct SymbolicTrs {
    tau: [Expr; 4],
    rho: [Expr; 3],
    sigma: [Expr; 2],
}

impl SymbolicTrs {
    pub fn new(tau: Expr, rho: Expr, sigma: Expr) -> Result<Self> {
        for e in [&tau, &rho, &sigma] {
            if e.depends_on(Var::X) {
                return Err(Error::Invalid("τ, ρ, σ must depend on t only".into()));
            }
        }
        let d = |e: &Expr| differentiate(e, Var::T);
        let (t1, r1, s1) = (d(&tau), d(&rho), d(&sigma));
        let t2 = d(&t1);
        let t3 = d(&t2);
        let r2 = d(&r1);
        Ok(Self {
            tau: [tau, t1, t2, t3],
            rho: [rho, r1, r2],
            sigma: [sigma, s1],
        })
    }

    /// Parses `τ`, `ρ`, `σ`.
    pub fn parse(tau: &str, rho: &str, sigma: &str) -> Result<Self> {
        Self::new(parse(tau)?, parse(rho)?, parse(sigma)?)
    }
}

impl TimeData for SymbolicTrs {
    fn jet(&self, t: f64) -> Result<TrsJet> {
        let e = |e: &Expr| e.eval_xt(0.0, t);
        Ok(TrsJet {
            tau: [
                e(&self.tau[0])?,
                e(&self.tau[1])?,
                e(&self.tau[2])?,
                e(&self.tau[3])?,
            ],
            rho: [e(&self.rho[0])?, e(&self.rho[1])?, e(&self.rho[2])?],
            sigma: [e(&self.sigma[0])?, e(&self.sigma[1])?],
        })
    }
}

/// Spatial data the field formulas need.
#[derive(Clone)]
pub enum Geometry {
    /// Autonomous coefficients; `I` is shifted by `iota`.
    Profile {
        profile: Arc<InvariantProfile>,
        iota: f64,
    },
    /// `a = 1`, `b = m(t) + n(t) x`; `I = x`, `J = -b`, `∫_0^x b_t = ṁ x + ṅ x²/2`.
    LinearDrift {
        m: Expr,
        n: Expr,
        dm: Expr,
        dn: Expr,
    },
}

impl Geometry {
    pub fn linear_drift(m: &Expr, n: &Expr) -> Self {
        Geometry::LinearDrift {
            m: m.clone(),
            n: n.clone(),
            dm: differentiate(m, Var::T),
            dn: differentiate(n, Var::T),
        }
    }

    /// `(sqrt a, I, J, ∫ b_t/a dx)` at `(x, t)`.
    fn point(&self, x: f64, t: f64) -> Result<(f64, f64, f64, f64)> {
        match self {
            Geometry::Profile { profile, iota } => Ok((
                profile.sqrt_a(x, t)?,
                profile.i(x, t)? + iota,
                profile.j(x, t)?,
                0.0,
            )),
            Geometry::LinearDrift { m, n, dm, dn } => {
                let e = |e: &Expr| e.eval_xt(0.0, t);
                let b = e(m)? + e(n)? * x;
                Ok((1.0, x, -b, e(dm)? * x + 0.5 * e(dn)? * x * x))
            }
        }
    }
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    Trs {
        data: Arc<dyn TimeData>,
        geometry: Geometry,
    },
    Explicit {
        tau: Fn1,
        xi: Fn2,
        phi: Fn2,
    },
    Bracket {
        v: Box<VectorField>,
        w: Box<VectorField>,
    },
}

/// `τ(t) ∂t + ξ(x,t) ∂x + φ(x,t) u∂u`.
#[derive(Clone)]
pub struct VectorField {
    pub label: String,
    kind: FieldKind,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FieldKind::Trs { .. } => "trs",
            FieldKind::Explicit { .. } => "explicit",
            FieldKind::Bracket { .. } => "bracket",
        };
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("kind", &kind)
            .finish()
    }
}

/// Relative step of the finite differences in brackets.
const BRACKET_STEP: f64 = 1e-4;

fn fd_step(v: f64) -> f64 {
    BRACKET_STEP * v.abs().max(1.0)
}

fn d1<F: Fn(f64) -> Result<f64>>(f: F, s: f64) -> Result<f64> {
    let h = fd_step(s);
    Ok((f(s - 2.0 * h)? - 8.0 * f(s - h)? + 8.0 * f(s + h)? - f(s + 2.0 * h)?) / (12.0 * h))
}

impl VectorField {
    pub fn from_trs(label: impl Into<String>, data: Arc<dyn TimeData>, geometry: Geometry) -> Self {
        Self {
            label: label.into(),
            kind: FieldKind::Trs { data, geometry },
        }
    }

    pub fn explicit(
        label: impl Into<String>,
        tau: impl Fn(f64) -> f64 + Send + Sync + 'static,
        xi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        phi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            kind: FieldKind::Explicit {
                tau: Arc::new(tau),
                xi: Arc::new(xi),
                phi: Arc::new(phi),
            },
        }
    }

    /// `(τ, ρ, σ)` jet behind the field, when it was built from one.
    pub fn jet(&self, t: f64) -> Option<Result<TrsJet>> {
        match &self.kind {
            FieldKind::Trs { data, .. } => Some(data.jet(t)),
            _ => None,
        }
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        match &self.kind {
            FieldKind::Trs { data, .. } => Ok(data.jet(t)?.tau[0]),
            FieldKind::Explicit { tau, .. } => Ok(tau(t)),
            FieldKind::Bracket { v, w } => {
                Ok(v.tau(t)? * d1(|s| w.tau(s), t)? - w.tau(t)? * d1(|s| v.tau(s), t)?)
            }
        }
    }

    /// `(τ, ξ, φ)` at `(x, t)`.
    pub fn components(&self, x: f64, t: f64) -> Result<[f64; 3]> {
        match &self.kind {
            FieldKind::Trs { data, geometry } => {
                let j = data.jet(t)?;
                let (sa, i, jj, bt) = geometry.point(x, t)?;
                let [tau, td, tdd, _] = j.tau;
                let [rho, rd, _] = j.rho;
                let xi = sa * (0.5 * td * i + rho);
                let phi = -0.125 * tdd * i * i - 0.5 * rd * i
                    + 0.25 * td * i * jj
                    + 0.5 * rho * jj
                    + j.sigma[0]
                    - 0.5 * tau * bt;
                Ok([tau, xi, phi])
            }
            FieldKind::Explicit { tau, xi, phi } => Ok([tau(t), xi(x, t), phi(x, t)]),
            FieldKind::Bracket { v, w } => {
                let [tv, xv, _] = v.components(x, t)?;
                let [tw, xw, _] = w.components(x, t)?;
                // v(f) = τ_v f_t + ξ_v f_x
                let act = |tau: f64, xi: f64, f: &VectorField, k: usize| -> Result<f64> {
                    let ft = d1(|s| Ok(f.components(x, s)?[k]), t)?;
                    let fx = if k == 0 {
                        0.0
                    } else {
                        d1(|s| Ok(f.components(s, t)?[k]), x)?
                    };
                    Ok(tau * ft + xi * fx)
                };
                let mut out = [0.0; 3];
                for (k, o) in out.iter_mut().enumerate() {
                    *o = act(tv, xv, w, k)? - act(tw, xw, v, k)?;
                }
                Ok(out)
            }
        }
    }

    pub fn xi(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.components(x, t)?[1])
    }

    pub fn phi(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.components(x, t)?[2])
    }
}

/// Lie bracket `[v, w]`, evaluated by finite differences of the coefficients.
pub fn commutator(v: &VectorField, w: &VectorField) -> VectorField {
    VectorField {
        label: format!("[{}, {}]", v.label, w.label),
        kind: FieldKind::Bracket {
            v: Box::new(v.clone()),
            w: Box::new(w.clone()),
        },
    }
}

/// Antisymmetric table `[v_i, v_j] = Σ_k f[i][j][k] v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    n: usize,
    f: Vec<f64>,
}

impl StructureTable {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            f: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.f[self.idx(i, j, k)]
    }

    /// Sets `[v_i, v_j] = Σ coeffs[k] v_k` and the antisymmetric partner.
    pub fn set(&mut self, i: usize, j: usize, coeffs: &[f64]) {
        for (k, &c) in coeffs.iter().enumerate() {
            let a = self.idx(i, j, k);
            let b = self.idx(j, i, k);
            self.f[a] = c;
            self.f[b] = -c;
        }
    }

    /// Sets a bracket from 1-based `(k, coefficient)` pairs, matching how
    /// tables are written by hand.
    fn entry(&mut self, i: usize, j: usize, terms: &[(usize, f64)]) {
        let mut c = vec![0.0; self.n];
        for &(k, v) in terms {
            c[k - 1] += v;
        }
        self.set(i - 1, j - 1, &c);
    }

    pub fn bracket(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.get(i, j, k)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `f_ij^k + f_ji^k`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    m = m.max((self.get(i, j, k) + self.get(j, i, k)).abs());
                }
            }
        }
        m
    }

    /// Largest component of the Jacobi identity over all triples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.get(i, j, l) * self.get(l, k, m)
                                + self.get(j, k, l) * self.get(l, i, m)
                                + self.get(k, i, l) * self.get(l, j, m);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest entrywise difference.
    pub fn max_difference(&self, other: &StructureTable) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.f
            .iter()
            .zip(&other.f)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Nonzero brackets as `(i, j, coefficients)` with `i < j`, 0-based.
    pub fn nonzero(&self, tol: f64) -> Vec<(usize, usize, Vec<f64>)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let c = self.bracket(i, j);
                if c.iter().any(|v| v.abs() > tol) {
                    out.push((i, j, c));
                }
            }
        }
        out
    }
}

/// Basis of a symmetry class together with its expected structure table.
#[derive(Debug, Clone)]
pub struct Basis {
    pub fields: Vec<VectorField>,
    pub expected: StructureTable,
    /// `c2, c1, c0` the fields were built from.
    pub constants: (f64, f64, f64),
}

fn trs(tau: Expr, rho: Expr, sigma: Expr) -> Result<Arc<dyn TimeData>> {
    Ok(Arc::new(SymbolicTrs::new(tau, rho, sigma)?))
}

fn num(v: f64) -> Expr {
    Expr::num(v)
}

fn t() -> Expr {
    Expr::t()
}

fn exp_kt(k: f64) -> Expr {
    (k * t()).apply(crate::expr::Func::Exp)
}

fn cos_kt(k: f64) -> Expr {
    (k * t()).apply(crate::expr::Func::Cos)
}

fn sin_kt(k: f64) -> Expr {
    (k * t()).apply(crate::expr::Func::Sin)
}

/// `(τ, ρ, σ)` of each generator for the given class constants, in the
/// order of the printed bases.
pub fn trs_listing(variant: &Variant) -> Result<Vec<(Expr, Expr, Expr)>> {
    let z = || num(0.0);
    let flat = |c2: f64| c2.abs() < crate::canonical::FLAT_TOL;
    Ok(match *variant {
        Variant::FourDim { c2, c0, .. } => {
            let mut v = vec![(num(1.0), z(), z())];
            if flat(c2) {
                v.push((t(), z(), c0 * t()));
                v.push((t().powf(2.0), z(), c0 * t().powf(2.0) - 0.5 * t()));
            } else if c2 < 0.0 {
                let k = (-c2).sqrt();
                v.push((exp_kt(4.0 * k), z(), (c0 - k) * exp_kt(4.0 * k)));
                v.push((exp_kt(-4.0 * k), z(), (c0 + k) * exp_kt(-4.0 * k)));
            } else {
                let k = c2.sqrt();
                v.push((
                    cos_kt(4.0 * k),
                    z(),
                    c0 * cos_kt(4.0 * k) + k * sin_kt(4.0 * k),
                ));
                v.push((
                    sin_kt(4.0 * k),
                    z(),
                    c0 * sin_kt(4.0 * k) - k * cos_kt(4.0 * k),
                ));
            }
            v.push((z(), z(), num(1.0)));
            v
        }
        Variant::SixDim { c2, c1, c0 } => {
            let mut v = vec![(num(1.0), z(), z())];
            if flat(c2) {
                v.push((
                    t(),
                    -1.5 * c1 * t().powf(2.0),
                    c0 * t() - 0.5 * c1 * c1 * t().powf(3.0),
                ));
                v.push((
                    t().powf(2.0),
                    -c1 * t().powf(3.0),
                    -0.5 * t() + c0 * t().powf(2.0) - 0.25 * c1 * c1 * t().powf(4.0),
                ));
                v.push((z(), t(), 0.5 * c1 * t().powf(2.0)));
                v.push((z(), num(1.0), c1 * t()));
            } else if c2 < 0.0 {
                let k = (-c2).sqrt();
                let s = c1 * c1 / (4.0 * k * k);
                v.push((
                    exp_kt(4.0 * k),
                    -(c1 / k) * exp_kt(4.0 * k),
                    (c0 - k - s) * exp_kt(4.0 * k),
                ));
                v.push((
                    exp_kt(-4.0 * k),
                    (c1 / k) * exp_kt(-4.0 * k),
                    (c0 + k - s) * exp_kt(-4.0 * k),
                ));
                v.push((z(), exp_kt(2.0 * k), c1 / (2.0 * k) * exp_kt(2.0 * k)));
                v.push((z(), exp_kt(-2.0 * k), -c1 / (2.0 * k) * exp_kt(-2.0 * k)));
            } else {
                let k = c2.sqrt();
                let s = c0 + c1 * c1 / (4.0 * k * k);
                v.push((
                    cos_kt(4.0 * k),
                    -(c1 / k) * sin_kt(4.0 * k),
                    k * sin_kt(4.0 * k) + s * cos_kt(4.0 * k),
                ));
                v.push((
                    sin_kt(4.0 * k),
                    (c1 / k) * cos_kt(4.0 * k),
                    -k * cos_kt(4.0 * k) + s * sin_kt(4.0 * k),
                ));
                v.push((z(), cos_kt(2.0 * k), c1 / (2.0 * k) * sin_kt(2.0 * k)));
                v.push((z(), sin_kt(2.0 * k), -c1 / (2.0 * k) * cos_kt(2.0 * k)));
            }
            v.push((z(), z(), num(1.0)));
            v
        }
        Variant::NoExtra => {
            return Err(Error::Invalid(
                "no finite basis beyond ∂t and u∂u for this class".into(),
            ))
        }
    })
}

/// The expected structure table of the printed bases (1-based entries).
pub fn expected_table(variant: &Variant) -> Result<StructureTable> {
    let flat = |c2: f64| c2.abs() < crate::canonical::FLAT_TOL;
    Ok(match *variant {
        Variant::FourDim { c2, c0, .. } => {
            let mut f = StructureTable::zeros(4);
            if flat(c2) {
                f.entry(1, 2, &[(1, 1.0), (4, c0)]);
                f.entry(1, 3, &[(2, 2.0), (4, -0.5)]);
                f.entry(2, 3, &[(3, 1.0)]);
            } else if c2 < 0.0 {
                let k = (-c2).sqrt();
                f.entry(1, 2, &[(2, 4.0 * k)]);
                f.entry(1, 3, &[(3, -4.0 * k)]);
                f.entry(2, 3, &[(1, -8.0 * k), (4, -8.0 * c0 * k)]);
            } else {
                let k = c2.sqrt();
                f.entry(1, 2, &[(3, -4.0 * k)]);
                f.entry(1, 3, &[(2, 4.0 * k)]);
                f.entry(2, 3, &[(1, 4.0 * k), (4, 4.0 * k * c0)]);
            }
            f
        }
        Variant::SixDim { c2, c1, c0 } => {
            let mut f = StructureTable::zeros(6);
            if flat(c2) {
                f.entry(1, 2, &[(1, 1.0), (4, -3.0 * c1), (6, c0)]);
                f.entry(1, 3, &[(2, 2.0), (6, -0.5)]);
                f.entry(1, 4, &[(5, 1.0)]);
                f.entry(1, 5, &[(6, c1)]);
                f.entry(2, 3, &[(3, 1.0)]);
                f.entry(2, 4, &[(4, 0.5)]);
                f.entry(2, 5, &[(5, -0.5)]);
                f.entry(3, 5, &[(4, -1.0)]);
                f.entry(4, 5, &[(6, 0.5)]);
            } else if c2 < 0.0 {
                let k = (-c2).sqrt();
                let r = 4.0 * c0 + (c1 / k).powi(2);
                f.entry(1, 2, &[(2, 4.0 * k)]);
                f.entry(1, 3, &[(3, -4.0 * k)]);
                f.entry(1, 4, &[(4, 2.0 * k)]);
                f.entry(1, 5, &[(5, -2.0 * k)]);
                f.entry(2, 3, &[(1, -8.0 * k), (6, -2.0 * k * r)]);
                f.entry(2, 5, &[(4, -4.0 * k)]);
                f.entry(3, 4, &[(5, 4.0 * k)]);
                f.entry(4, 5, &[(6, 2.0 * k)]);
            } else {
                let k = c2.sqrt();
                let s = 4.0 * c0 - (c1 / k).powi(2);
                f.entry(1, 2, &[(3, -4.0 * k)]);
                f.entry(1, 3, &[(2, 4.0 * k)]);
                f.entry(1, 4, &[(5, -2.0 * k)]);
                f.entry(1, 5, &[(4, 2.0 * k)]);
                f.entry(2, 3, &[(1, 4.0 * k), (6, k * s)]);
                f.entry(2, 4, &[(5, 2.0 * k)]);
                f.entry(2, 5, &[(4, 2.0 * k)]);
                f.entry(3, 4, &[(4, -2.0 * k)]);
                f.entry(3, 5, &[(5, 2.0 * k)]);
                f.entry(4, 5, &[(6, -k)]);
            }
            f
        }
        Variant::NoExtra => return Err(Error::Invalid("no table for this class".into())),
    })
}

/// The generators of an autonomous PDE's class, built on its profile.
pub fn basis(profile: Arc<InvariantProfile>, cls: &SymmetryClass) -> Result<Basis> {
    if profile.is_time_dependent() {
        return Err(Error::Invalid(
            "use timedep_basis for time-dependent coefficients".into(),
        ));
    }
    let (constants, iota) = match cls.variant {
        Variant::SixDim { c2, c1, c0 } => ((c2, c1, c0), 0.0),
        Variant::FourDim { c2, c0, .. } => ((c2, 0.0, c0), cls.iota),
        Variant::NoExtra => {
            return Err(Error::Invalid(
                "the class has no generators beyond ∂t and u∂u".into(),
            ))
        }
    };
    let geometry = Geometry::Profile { profile, iota };
    let fields = trs_listing(&cls.variant)?
        .into_iter()
        .enumerate()
        .map(|(i, (a, b, c))| {
            Ok(VectorField::from_trs(
                format!("v{}", i + 1),
                trs(a, b, c)?,
                geometry.clone(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Basis {
        fields,
        expected: expected_table(&cls.variant)?,
        constants,
    })
}

/// Least-squares coefficients of `target` in the span of `fields`, sampled
/// at `points` on all three components. Returns the coefficients and the
/// largest pointwise residual.
pub fn decompose(
    target: &VectorField,
    fields: &[VectorField],
    points: &[(f64, f64)],
) -> Result<(Vec<f64>, f64)> {
    let rows = 3 * points.len();
    let n = fields.len();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut y = DVector::<f64>::zeros(rows);
    for (p, &(x, t)) in points.iter().enumerate() {
        let tv = target.components(x, t)?;
        for k in 0..3 {
            y[3 * p + k] = tv[k];
        }
        for (j, f) in fields.iter().enumerate() {
            let c = f.components(x, t)?;
            for k in 0..3 {
                a[(3 * p + k, j)] = c[k];
            }
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, nrm) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nrm);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let coeffs = svd
        .solve(&y, 1e-12 * smax)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let residual = (&a * &coeffs - &y).amax();
    Ok((
        coeffs.iter().zip(&norms).map(|(c, n)| c / n).collect(),
        residual,
    ))
}

/// Outcome of [`check_table`].
#[derive(Debug, Clone)]
pub struct TableCheck {
    pub computed: StructureTable,
    /// Largest pointwise difference between a bracket and its expected
    /// expansion, relative to the bracket's magnitude plus one.
    pub max_deviation: f64,
    /// Brackets whose deviation exceeds `tol`, as 1-based index pairs.
    pub failures: Vec<(usize, usize)>,
    pub jacobi_residual: f64,
    pub tol: f64,
}

impl TableCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Brackets every pair numerically, decomposes it on the basis and compares
/// pointwise against the expected table.
pub fn check_table(basis: &Basis, points: &[(f64, f64)], tol: f64) -> Result<TableCheck> {
    let n = basis.fields.len();
    let mut computed = StructureTable::zeros(n);
    let mut max_dev: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let br = commutator(&basis.fields[i], &basis.fields[j]);
            let (c, _) = decompose(&br, &basis.fields, points)?;
            computed.set(i, j, &c);
            let want = basis.expected.bracket(i, j);
            let mut dev: f64 = 0.0;
            for &(x, t) in points {
                let b = br.components(x, t)?;
                let mut e = [0.0; 3];
                for (k, f) in basis.fields.iter().enumerate() {
                    if want[k] != 0.0 {
                        let fc = f.components(x, t)?;
                        for m in 0..3 {
                            e[m] += want[k] * fc[m];
                        }
                    }
                }
                let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for m in 0..3 {
                    dev = dev.max((b[m] - e[m]).abs() / scale);
                }
            }
            if dev > tol {
                failures.push((i + 1, j + 1));
            }
            max_dev = max_dev.max(dev);
        }
    }
    Ok(TableCheck {
        jacobi_residual: computed.jacobi_residual(),
        computed,
        max_deviation: max_dev,
        failures,
        tol,
    })
}

/// Residuals of the determining equations for one field at `t`, given
/// `(c2, ċ2, c1, ċ1, c0, ċ0)`.
pub fn determining_residual(jet: &TrsJet, c: [f64; 6]) -> [f64; 3] {
    let [c2, dc2, c1, dc1, c0, dc0] = c;
    let [tau, td, tdd, tddd] = jet.tau;
    let [rho, _, rdd] = jet.rho;
    [
        tddd + 16.0 * c2 * td + 8.0 * dc2 * tau,
        rdd + 4.0 * c2 * rho + 3.0 * c1 * td + 2.0 * dc1 * tau,
        jet.sigma[1] - (dc0 * tau + c0 * td) - c1 * rho + 0.25 * tdd,
    ]
}

/// `(τ, ρ, σ)` of the time-dependent basis, from one ODE solution.
struct TimeDepData {
    sol: Arc<TwoSidedSolution>,
    cls: Arc<ClassifierJets>,
    kind: TimeDepKind,
}

#[derive(Clone, Copy)]
enum TimeDepKind {
    /// `τ = ψ_a ψ_b` with particular `ρ` in state slot `slot`.
    Tau {
        a: usize,
        b: usize,
        slot: usize,
    },
    /// `ρ = ψ_a`, `σ = ∫ c1 ψ_a` in state slot `s`.
    Rho {
        a: usize,
        s: usize,
    },
    Sigma,
}

struct ClassifierJets {
    c: [Expr; 6],
}

impl ClassifierJets {
    fn new(cls: &TimeDepClassifiers) -> Self {
        let d = |e: &Expr| differentiate(e, Var::T);
        Self {
            c: [
                cls.c2.clone(),
                d(&cls.c2),
                cls.c1.clone(),
                d(&cls.c1),
                cls.c0.clone(),
                d(&cls.c0),
            ],
        }
    }

    fn at(&self, t: f64) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        for (o, e) in out.iter_mut().zip(&self.c) {
            *o = e.eval_xt(0.0, t)?;
        }
        Ok(out)
    }
}

impl TimeData for TimeDepData {
    fn jet(&self, t: f64) -> Result<TrsJet> {
        let y = self.sol.eval(t)?;
        let [c2, dc2, c1, dc1, c0, dc0] = self.cls.at(t)?;
        // ψ, ψ', ψ'', ψ''' for ψ1 (index 0) and ψ2 (index 1)
        let psi = |i: usize| {
            let (p, dp) = (y[2 * i], y[2 * i + 1]);
            [p, dp, -4.0 * c2 * p, -4.0 * dc2 * p - 4.0 * c2 * dp]
        };
        match self.kind {
            TimeDepKind::Tau { a, b, slot } => {
                let (pa, pb) = (psi(a), psi(b));
                let tau = [
                    pa[0] * pb[0],
                    pa[1] * pb[0] + pa[0] * pb[1],
                    pa[2] * pb[0] + 2.0 * pa[1] * pb[1] + pa[0] * pb[2],
                    pa[3] * pb[0] + 3.0 * pa[2] * pb[1] + 3.0 * pa[1] * pb[2] + pa[0] * pb[3],
                ];
                let (rho, drho, s) = (y[slot], y[slot + 1], y[slot + 2]);
                let ddrho = -4.0 * c2 * rho - 3.0 * c1 * tau[1] - 2.0 * dc1 * tau[0];
                let sigma = c0 * tau[0] - 0.25 * tau[1] + s;
                let dsigma = dc0 * tau[0] + c0 * tau[1] - 0.25 * tau[2] + c1 * rho;
                Ok(TrsJet {
                    tau,
                    rho: [rho, drho, ddrho],
                    sigma: [sigma, dsigma],
                })
            }
            TimeDepKind::Rho { a, s } => {
                let p = psi(a);
                Ok(TrsJet {
                    tau: [0.0; 4],
                    rho: [p[0], p[1], p[2]],
                    sigma: [y[s], c1 * p[0]],
                })
            }
            TimeDepKind::Sigma => Ok(TrsJet {
                sigma: [1.0, 0.0],
                ..TrsJet::default()
            }),
        }
    }
}

/// Generators of `u_t = u_xx + (m + n x) u_x + (q + r x) u`, built from
/// `ψ̈ + 4 c2 ψ = 0` with `(ψ1, ψ̇1) = (1, 0)`, `(ψ2, ψ̇2) = (0, 1)` at `t0`.
/// Order: `τ ∈ {ψ1², ψ1ψ2, ψ2²}` (with particular `ρ`), `ρ ∈ {ψ1, ψ2}`,
/// `u∂u`. The spatial origin of `I` is `x = 0`.
pub fn timedep_basis(
    m: &Expr,
    n: &Expr,
    q: &Expr,
    r: &Expr,
    t0: f64,
    window: (f64, f64),
) -> Result<(Vec<VectorField>, TimeDepClassifiers)> {
    let cls = timedep_classifiers(m, n, q, r)?;
    cls.check_window(window.0, window.1, 401)?;
    let jets = Arc::new(ClassifierJets::new(&cls));
    let j2 = jets.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        let [c2, _, c1, dc1, _, _] = j2.at(t).unwrap_or([f64::NAN; 6]);
        for i in 0..2 {
            dy[2 * i] = y[2 * i + 1];
            dy[2 * i + 1] = -4.0 * c2 * y[2 * i];
        }
        let pairs = [(0, 0), (0, 1), (1, 1)];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let s = 4 + 3 * k;
            let (pa, dpa, pb, dpb) = (y[2 * a], y[2 * a + 1], y[2 * b], y[2 * b + 1]);
            let tau = pa * pb;
            let dtau = dpa * pb + pa * dpb;
            dy[s] = y[s + 1];
            dy[s + 1] = -4.0 * c2 * y[s] - 3.0 * c1 * dtau - 2.0 * dc1 * tau;
            dy[s + 2] = c1 * y[s];
        }
        dy[13] = c1 * y[0];
        dy[14] = c1 * y[2];
    };
    let mut y0 = [0.0; 15];
    y0[0] = 1.0;
    y0[3] = 1.0;
    let spec = OdeSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..OdeSpec::default()
    };
    let sol = Arc::new(solve_ode_two_sided(rhs, t0, &y0, window, &spec)?);
    let geometry = Geometry::linear_drift(m, n);
    let kinds = [
        TimeDepKind::Tau {
            a: 0,
            b: 0,
            slot: 4,
        },
        TimeDepKind::Tau {
            a: 0,
            b: 1,
            slot: 7,
        },
        TimeDepKind::Tau {
            a: 1,
            b: 1,
            slot: 10,
        },
        TimeDepKind::Rho { a: 0, s: 13 },
        TimeDepKind::Rho { a: 1, s: 14 },
        TimeDepKind::Sigma,
    ];
    let fields = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let data: Arc<dyn TimeData> = Arc::new(TimeDepData {
                sol: sol.clone(),
                cls: jets.clone(),
                kind,
            });
            VectorField::from_trs(format!("v{}", i + 1), data, geometry.clone())
        })
        .collect();
    Ok((fields, cls))
}

/// `(c2, ċ2, c1, ċ1, c0, ċ0)` of time-dependent classifiers at `t`.
pub fn classifier_jet(cls: &TimeDepClassifiers, t: f64) -> Result<[f64; 6]> {
    ClassifierJets::new(cls).at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use crate::expr::ParamEnv;
    use crate::invariants::{profile, CoefficientSet, WorkingDomain};
    use crate::numerics::linspace;

    fn points(x: (f64, f64), t: (f64, f64)) -> Vec<(f64, f64)> {
        let mut p = Vec::new();
        for xi in linspace(x.0, x.1, 4) {
            for ti in linspace(t.0, t.1, 3) {
                p.push((xi, ti));
            }
        }
        p
    }

    fn basis_for(a: &str, b: &str, c: &str, dom: WorkingDomain) -> Basis {
        let set = Arc::new(CoefficientSet::parse(a, b, c, ParamEnv::new()).unwrap());
        let prof = Arc::new(profile(set, &dom).unwrap());
        let cls = classify(&prof).unwrap();
        basis(prof, &cls).unwrap()
    }

    #[test]
    fn self_bracket_vanishes() {
        let dom = WorkingDomain::new(-2.0, 2.0, 0.1, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let b = basis_for("(1+x^2)^2", "0", "0", dom);
        let v = &b.fields[2];
        let br = commutator(v, v);
        for (x, t) in points((-1.5, 1.5), (0.2, 0.9)) {
            for c in br.components(x, t).unwrap() {
                assert!(c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn brownian_fields_match_listing() {
        let dom = WorkingDomain::new(-2.0, 2.0, 0.1, 1.0)
            .unwrap()
            .with_x0(0.0)
            .unwrap();
        let b = basis_for("(1+x^2)^2", "0", "0", dom);
        for (x, t) in points((-1.5, 1.5), (0.2, 0.9)) {
            let at = x.atan();
            let a = 1.0 + x * x;
            let want = [
                [t, 0.5 * a * at, 0.5 * (2.0 * t + x * at)],
                [
                    t * t,
                    t * at * a,
                    -0.25 * (2.0 * t - 4.0 * t * t - 4.0 * t * x * at + at * at),
                ],
                [0.0, t * a, t * x - 0.5 * at],
                [0.0, a, x],
            ];
            for (k, w) in want.iter().enumerate() {
                let got = b.fields[k + 1].components(x, t).unwrap();
                for m in 0..3 {
                    assert!(
                        (got[m] - w[m]).abs() < 1e-9,
                        "v{} comp {m}: {got:?} {w:?}",
                        k + 2
                    );
                }
            }
        }
    }

    #[test]
    fn tables_match_for_all_cases() {
        let cases = [
            ("1", "0", "0.3*x^2 - 0.4*x + 0.3", (-1.0, 1.5)),
            ("1", "0", "-0.49*x^2 - 0.4*x + 0.3", (-1.0, 1.5)),
            ("1", "0", "0.49*x^2 - 0.4*x + 0.3", (-1.0, 1.5)),
            ("1", "0", "0.5/x^2 + 0.3", (0.5, 2.0)),
            ("1", "0", "0.5/x^2 - 0.36*x^2 + 0.3", (0.5, 2.0)),
            ("1", "0", "0.5/x^2 + 0.36*x^2 + 0.3", (0.5, 2.0)),
        ];
        for (a, b, c, xr) in cases {
            let dom = WorkingDomain::new(xr.0, xr.1, 0.1, 0.3)
                .unwrap()
                .with_x0(xr.0)
                .unwrap();
            let set = Arc::new(CoefficientSet::parse(a, b, c, ParamEnv::new()).unwrap());
            let prof = Arc::new(profile(set, &dom).unwrap());
            let cls = classify(&prof).unwrap();
            let bs = basis(prof, &cls).unwrap();
            let chk =
                check_table(&bs, &points((xr.0 + 0.1, xr.1 - 0.1), (0.1, 0.3)), 1e-6).unwrap();
            assert!(
                chk.passed(),
                "{c}: {:?} dev {} computed {:?}",
                chk.failures,
                chk.max_deviation,
                chk.computed.nonzero(1e-7)
            );
            assert!(bs.expected.jacobi_residual() < 1e-9, "{c}");
        }
    }

    fn td_points() -> Vec<(f64, f64)> {
        points((-1.5, 1.5), (0.6, 1.6))
    }

    #[test]
    fn timedep_heat_gives_polynomial_tau() {
        let z = Expr::num(0.0);
        let (fields, _) = timedep_basis(&z, &z, &z, &z, 1.0, (0.5, 2.0)).unwrap();
        for t in [0.6, 1.0, 1.7] {
            let taus: Vec<f64> = fields[..3].iter().map(|f| f.tau(t).unwrap()).collect();
            let s = t - 1.0;
            assert!((taus[0] - 1.0).abs() < 1e-10);
            assert!((taus[1] - s).abs() < 1e-10);
            assert!((taus[2] - s * s).abs() < 1e-10);
        }
    }

    #[test]
    fn timedep_fields_satisfy_determining_equations() {
        let m = parse("t/cosh(t)").unwrap();
        let n = parse("-tanh(t)").unwrap();
        let q = Expr::num(0.0);
        let r = parse("-0.5/cosh(t)").unwrap();
        let (fields, cls) = timedep_basis(&m, &n, &q, &r, 0.5, (-1.0, 2.0)).unwrap();
        for t in [-0.8, 0.0, 0.5, 1.9] {
            let c = classifier_jet(&cls, t).unwrap();
            for f in &fields {
                let res = determining_residual(&f.jet(t).unwrap().unwrap(), c);
                assert!(res.iter().all(|v| v.abs() < 1e-8), "{}: {res:?}", f.label);
            }
        }
        // τ spans {1, cosh 2t, sinh 2t}
        let basis_fns = |t: f64| [1.0, (2.0 * t).cosh(), (2.0 * t).sinh()];
        for f in &fields[..3] {
            let ts = linspace(-0.9, 1.9, 12);
            let mut a = DMatrix::<f64>::zeros(ts.len(), 3);
            let mut y = DVector::<f64>::zeros(ts.len());
            for (i, &t) in ts.iter().enumerate() {
                let b = basis_fns(t);
                for k in 0..3 {
                    a[(i, k)] = b[k];
                }
                y[i] = f.tau(t).unwrap();
            }
            let c = a.clone().svd(true, true).solve(&y, 1e-14).unwrap();
            assert!((&a * c - y).amax() < 1e-8, "{}", f.label);
        }
    }

    #[test]
    fn closed_form_fields_lie_in_timedep_span() {
        let m = Expr::num(0.0);
        let n = parse("-1/t").unwrap();
        let z = Expr::num(0.0);
        let (fields, _) = timedep_basis(&m, &n, &z, &z, 1.0, (0.5, 2.0)).unwrap();
        let known = [
            VectorField::explicit(
                "a",
                |_| 1.0,
                |_, _| 0.0,
                |x, t| 0.5 / t - x * x / (4.0 * t * t),
            ),
            VectorField::explicit("b", |_| 0.0, |_, t| t, |_, _| 0.0),
            VectorField::explicit("c", |t| t * t, |x, t| 1.0 + x * t, |x, t| x / (2.0 * t)),
        ];
        for k in &known {
            let (_, res) = decompose(k, &fields, &td_points()).unwrap();
            assert!(res < 1e-8, "{} residual {res}", k.label);
        }
        let not = VectorField::explicit("bad", |_| 0.0, |x, _| x, |_, _| 0.0);
        let (_, res) = decompose(&not, &fields, &td_points()).unwrap();
        assert!(res > 1e-3);
        // closure under brackets
        for i in 0..6 {
            for j in i + 1..6 {
                let (_, res) =
                    decompose(&commutator(&fields[i], &fields[j]), &fields, &td_points()).unwrap();
                assert!(res < 1e-6, "[v{}, v{}] residual {res}", i + 1, j + 1);
            }
        }
    }
}
