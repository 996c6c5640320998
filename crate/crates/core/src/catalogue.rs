//! Closed-form solutions of the worked examples, each bound to its PDE.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ParamEnv;
use crate::invariants::{CoefficientSet, WorkingDomain};
use crate::special::{bessel_i_scaled, erf, MAX_ARG, MAX_ORDER};
use crate::verify::Grid;

/// Every entry name, in the order [`entry`] documents them.
pub const ROSTER: [&str; 16] = [
    "heat_kernel",
    "brownian_quadratic",
    "ou_fundamental",
    "ou_stationary",
    "cir_sol1",
    "cir_sol2",
    "timedep_drift",
    "vol_inv_v4",
    "vol_inv_v5",
    "vol_erf",
    "vol_v3",
    "vol_sl2_action",
    "vol_sigma_from_h",
    "radial_fundamental",
    "radial_2d",
    "canonical_bessel",
];

/// Default relative residual bound met on the declared grid.
pub const RESIDUAL_TOL: f64 = 1e-6;

type SolutionFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A PDE together with one of its closed-form solutions.
#[derive(Clone)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub coeffs: CoefficientSet,
    /// Parameter values in effect (defaults merged with overrides).
    pub params: ParamEnv,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Constraints the parameters must satisfy.
    pub notes: &'static str,
    pub residual_tol: f64,
    solution: SolutionFn,
}

impl fmt::Debug for CatalogueEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogueEntry")
            .field("name", &self.name)
            .field("coeffs", &self.coeffs.to_string())
            .field("params", &self.params)
            .field("x_range", &self.x_range)
            .field("t_range", &self.t_range)
            .finish()
    }
}

impl CatalogueEntry {
    pub fn u(&self, x: f64, t: f64) -> f64 {
        (self.solution)(x, t)
    }

    pub fn solution(&self) -> SolutionFn {
        self.solution.clone()
    }

    /// Residual grid on the declared domain with spacing `h`.
    pub fn grid(&self, h: f64) -> Result<Grid> {
        let (x0, x1) = self.x_range;
        let (t0, t1) = self.t_range;
        let nx = ((x1 - x0) / h).round() as usize + 1;
        Grid::new(x0, x1, nx, t0, t1, 9)
    }

    /// Working domain for classification.
    pub fn domain(&self) -> Result<WorkingDomain> {
        WorkingDomain::new(
            self.x_range.0,
            self.x_range.1,
            self.t_range.0,
            self.t_range.1,
        )
    }
}

/// Defaults for an entry's parameters, merged with user overrides.
struct Params {
    env: ParamEnv,
}

impl Params {
    fn merge(name: &str, defaults: &[(&str, f64)], overrides: &ParamEnv) -> Result<Self> {
        for (k, _) in overrides.iter() {
            if !defaults.iter().any(|(d, _)| *d == k) {
                let known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
                return Err(Error::Invalid(format!(
                    "entry `{name}` has no parameter `{k}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        let mut env = ParamEnv::new();
        for &(k, v) in defaults {
            let v = overrides.get(k).unwrap_or(v);
            if !v.is_finite() {
                return Err(Error::Invalid(format!("parameter `{k}` must be finite")));
            }
            env.insert(k, v)?;
        }
        Ok(Self { env })
    }

    fn get(&self, k: &str) -> f64 {
        self.env.get(k).expect("parameter present after merge")
    }
}

fn out_of_range(entry: &str, msg: impl Into<String>) -> Error {
    Error::Invalid(format!("entry `{entry}`: {}", msg.into()))
}

/// Entry with default parameters.
pub fn entry(name: &str) -> Result<CatalogueEntry> {
    entry_with(name, &ParamEnv::new())
}

/// Entry with some parameters overridden.
pub fn entry_with(name: &str, overrides: &ParamEnv) -> Result<CatalogueEntry> {
    match name {
        "heat_kernel" => heat_kernel(overrides),
        "brownian_quadratic" => brownian_quadratic(overrides),
        "ou_fundamental" => ou(overrides, false),
        "ou_stationary" => ou(overrides, true),
        "cir_sol1" => cir(overrides, false),
        "cir_sol2" => cir(overrides, true),
        "timedep_drift" => timedep_drift(overrides),
        "vol_inv_v4" => volatility("vol_inv_v4", overrides),
        "vol_inv_v5" => volatility("vol_inv_v5", overrides),
        "vol_erf" => volatility("vol_erf", overrides),
        "vol_v3" => volatility("vol_v3", overrides),
        "vol_sl2_action" => vol_sl2_action(overrides),
        "vol_sigma_from_h" => vol_sigma_from_h(overrides),
        "radial_fundamental" => radial(overrides, false),
        "radial_2d" => radial(overrides, true),
        "canonical_bessel" => canonical_bessel(overrides),
        _ => Err(Error::Invalid(format!(
            "unknown catalogue entry `{name}` (known: {})",
            ROSTER.join(", ")
        ))),
    }
}

/// Parameter names and defaults of an entry.
pub fn parameters(name: &str) -> Result<Vec<(String, f64)>> {
    Ok(entry(name)?
        .params
        .iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect())
}

/// `(4πt)^{-1/2} exp(-(x-y)²/(4t))`.
pub fn heat_kernel_fn(x: f64, t: f64, y: f64) -> f64 {
    (-(x - y).powi(2) / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

fn heat_kernel(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge("heat_kernel", &[("y", 0.0), ("C", 1.0)], ov)?;
    let (y, c) = (p.get("y"), p.get("C"));
    Ok(CatalogueEntry {
        name: "heat_kernel",
        description: "heat kernel with source at y",
        coeffs: CoefficientSet::parse("1", "0", "0", ParamEnv::new())?,
        params: p.env,
        x_range: (-4.0, 4.0),
        t_range: (0.1, 2.0),
        notes: "t > 0",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| c * heat_kernel_fn(x, t, y)),
    })
}

fn brownian_quadratic(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge("brownian_quadratic", &[("k", 1.0), ("C", 1.0)], ov)?;
    let (k, c) = (p.get("k"), p.get("C"));
    if k <= 0.0 {
        return Err(out_of_range("brownian_quadratic", "k must be positive"));
    }
    Ok(CatalogueEntry {
        name: "brownian_quadratic",
        description: "image of the constant heat solution for u_t = (1+k²x²)² u_xx",
        coeffs: CoefficientSet::parse("(1 + k^2*x^2)^2", "0", "0", p.env.clone())?,
        params: p.env,
        x_range: (-1.5, 1.5),
        t_range: (0.2, 1.5),
        notes: "k > 0, t > 0",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| {
            let at = (k * x).atan();
            c * t.powf(-0.5)
                * (1.0 + k * k * x * x).sqrt()
                * (-at * at / (4.0 * k * k * t) + k * k * t).exp()
        }),
    })
}

fn ou(ov: &ParamEnv, stationary: bool) -> Result<CatalogueEntry> {
    let name = if stationary {
        "ou_stationary"
    } else {
        "ou_fundamental"
    };
    let ell0 = ov.get("ell").unwrap_or(1.0);
    let p = Params::merge(name, &[("ell", 1.0), ("C", (ell0 / (2.0 * PI)).sqrt())], ov)?;
    let (ell, c) = (p.get("ell"), p.get("C"));
    if ell <= 0.0 {
        return Err(out_of_range(name, "ell must be positive"));
    }
    let solution: SolutionFn = if stationary {
        Arc::new(move |x, _| c * (-0.5 * ell * x * x).exp())
    } else {
        Arc::new(move |x, t| {
            let s = -(-2.0 * ell * t).exp_m1();
            c * s.powf(-0.5) * (-0.5 * ell * x * x / s).exp()
        })
    };
    Ok(CatalogueEntry {
        name,
        description: if stationary {
            "stationary Gaussian of u_t = u_xx + (ℓ x u)_x"
        } else {
            "fundamental solution of u_t = u_xx + (ℓ x u)_x with source at 0"
        },
        coeffs: CoefficientSet::parse("1", "ell*x", "ell", p.env.clone())?,
        params: p.env,
        x_range: (-4.0, 4.0),
        t_range: (0.1, 2.0),
        notes: "ell > 0; C = sqrt(ell/2π) normalizes to unit mass",
        residual_tol: RESIDUAL_TOL,
        solution,
    })
}

fn cir(ov: &ParamEnv, second: bool) -> Result<CatalogueEntry> {
    let name = if second { "cir_sol2" } else { "cir_sol1" };
    let p = Params::merge(name, &[("sigma", 1.0), ("n", 2.0), ("C", 1.0)], ov)?;
    let (s, n, c) = (p.get("sigma"), p.get("n"), p.get("C"));
    if s <= 0.0 || n <= 0.0 {
        return Err(out_of_range(name, "sigma and n must be positive"));
    }
    let m = if second { 1.5 * s } else { 0.5 * s };
    let mut env = p.env.clone();
    env.insert("m", m)?;
    let solution: SolutionFn = if second {
        Arc::new(move |x, t| {
            c * ((2.0 * n * t).exp() + (n * t).exp()).powf(-0.5)
                * x.powf(-0.5)
                * (-(n / s) * x / (1.0 + (-n * t).exp())).exp()
        })
    } else {
        Arc::new(move |x, t| {
            c * (1.0 + (n * t).exp()).powf(-0.5) * (-(n / s) * x / (1.0 + (-n * t).exp())).exp()
        })
    };
    Ok(CatalogueEntry {
        name,
        description: if second {
            "CIR model with m = 3σ/2, image of the constant heat solution"
        } else {
            "CIR model with m = σ/2, image of the constant heat solution"
        },
        coeffs: CoefficientSet::parse("sigma*x", "m + n*x", "0", env)?,
        params: p.env,
        // sol2 carries x^(-1/2), so its window keeps further from x = 0
        x_range: if second { (0.3, 3.0) } else { (0.2, 3.0) },
        t_range: (0.1, 1.5),
        notes: "sigma, n > 0; m fixed to sigma/2 (sol1) or 3 sigma/2 (sol2); x > 0",
        residual_tol: RESIDUAL_TOL,
        solution,
    })
}

fn timedep_drift(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge(
        "timedep_drift",
        &[("gamma", 0.7), ("delta", 1.2), ("q0", 0.3), ("C", 1.0)],
        ov,
    )?;
    let (g, d, q0, c) = (p.get("gamma"), p.get("delta"), p.get("q0"), p.get("C"));
    let t_range = (0.5, 2.0);
    if g * t_range.0 + d <= 0.0 || g * t_range.1 + d <= 0.0 {
        return Err(out_of_range(
            "timedep_drift",
            "gamma t + delta must stay positive on [0.5, 2]",
        ));
    }
    Ok(CatalogueEntry {
        name: "timedep_drift",
        description: "solution of u_t = u_xx - (x/t) u_x + q0 u from the constant heat solution",
        coeffs: CoefficientSet::parse("1", "-x/t", "q0", p.env.clone())?,
        params: p.env,
        x_range: (-2.0, 2.0),
        t_range,
        notes: "gamma t + delta > 0, t > 0",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| {
            let den = g * t + d;
            c * den.powf(-0.5) * t.sqrt() * (d * (x + t).powi(2) / (4.0 * t * den) + q0 * t).exp()
        }),
    })
}

/// `∫ dx / (α + βx + γx²)` in closed form (no additive constant).
pub fn quadratic_lamperti(alpha: f64, beta: f64, gamma: f64, x: f64) -> f64 {
    if gamma == 0.0 {
        return if beta == 0.0 {
            x / alpha
        } else {
            (alpha + beta * x).abs().ln() / beta
        };
    }
    let d = 4.0 * alpha * gamma - beta * beta;
    let s = 2.0 * gamma * x + beta;
    if d > 0.0 {
        2.0 / d.sqrt() * (s / d.sqrt()).atan()
    } else if d < 0.0 {
        let r = (-d).sqrt();
        ((s - r) / (s + r)).abs().ln() / r
    } else {
        -2.0 / s
    }
}

/// Volatility models of `u_t = ½σ² (u_xx + h u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolModel {
    /// `σ = α + βx + γx²`, `h = 0`.
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
    /// `σ = sin νx cos νx`, `h = ν²`.
    Trig { nu: f64 },
    /// `σ = α cos²νx + β cos νx sin νx + γ sin²νx`, `h = ν²`.
    FromH {
        alpha: f64,
        beta: f64,
        gamma: f64,
        nu: f64,
    },
}

impl VolModel {
    pub fn sigma(&self, x: f64) -> f64 {
        match *self {
            VolModel::Quadratic { alpha, beta, gamma } => alpha + beta * x + gamma * x * x,
            VolModel::Trig { nu } => (nu * x).sin() * (nu * x).cos(),
            VolModel::FromH {
                alpha,
                beta,
                gamma,
                nu,
            } => {
                let (s, c) = (nu * x).sin_cos();
                alpha * c * c + beta * c * s + gamma * s * s
            }
        }
    }

    /// Lamperti coordinate `ψ`, `ψ' = 1/σ`.
    pub fn psi(&self, x: f64) -> f64 {
        match *self {
            VolModel::Quadratic { alpha, beta, gamma } => quadratic_lamperti(alpha, beta, gamma, x),
            VolModel::Trig { nu } => (nu * x).tan().ln() / nu,
            VolModel::FromH {
                alpha,
                beta,
                gamma,
                nu,
            } => quadratic_lamperti(alpha, beta, gamma, (nu * x).tan()) / nu,
        }
    }

    /// `c0` with `¼(2σσ'' - σ'²) + hσ² = 2c0`.
    pub fn c0(&self) -> f64 {
        match *self {
            VolModel::Quadratic { alpha, beta, gamma } => (4.0 * alpha * gamma - beta * beta) / 8.0,
            VolModel::Trig { nu } => -nu * nu / 8.0,
            VolModel::FromH {
                alpha,
                beta,
                gamma,
                nu,
            } => sigma_from_fundamental(alpha, beta, gamma, nu).c0,
        }
    }

    /// `σ` as an expression string in the parameters `alpha, beta, gamma, nu`.
    fn sigma_source(&self) -> &'static str {
        match self {
            VolModel::Quadratic { .. } => "(alpha + beta*x + gamma*x^2)",
            VolModel::Trig { .. } => "(sin(nu*x)*cos(nu*x))",
            VolModel::FromH { .. } => {
                "(alpha*cos(nu*x)^2 + beta*cos(nu*x)*sin(nu*x) + gamma*sin(nu*x)^2)"
            }
        }
    }

    fn coefficients(&self, env: &ParamEnv) -> Result<CoefficientSet> {
        let s = self.sigma_source();
        let a = format!("0.5*{s}^2");
        let c = match self {
            VolModel::Quadratic { .. } => "0".to_string(),
            _ => format!("0.5*nu^2*{s}^2"),
        };
        CoefficientSet::parse(&a, "0", &c, env.clone())
    }
}

/// `σ = αφ1² + βφ1φ2 + γφ2²` for a fundamental pair with Wronskian `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFromH {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub wronskian: f64,
    /// `(4αγ - β²) W² / 8`.
    pub c0: f64,
}

impl SigmaFromH {
    pub fn sigma(&self, phi1: f64, phi2: f64) -> f64 {
        self.alpha * phi1 * phi1 + self.beta * phi1 * phi2 + self.gamma * phi2 * phi2
    }
}

pub fn sigma_from_fundamental(alpha: f64, beta: f64, gamma: f64, wronskian: f64) -> SigmaFromH {
    SigmaFromH {
        alpha,
        beta,
        gamma,
        wronskian,
        c0: (4.0 * alpha * gamma - beta * beta) * wronskian * wronskian / 8.0,
    }
}

fn check_sigma(name: &str, model: &VolModel, range: (f64, f64)) -> Result<()> {
    for i in 0..=200 {
        let x = range.0 + (range.1 - range.0) * i as f64 / 200.0;
        if !(model.sigma(x) > 0.0) {
            return Err(out_of_range(name, format!("σ is not positive at x={x}")));
        }
    }
    Ok(())
}

fn volatility(name: &'static str, ov: &ParamEnv) -> Result<CatalogueEntry> {
    let trig = ov.get("nu").is_some();
    let mut defaults = vec![("C", 1.0)];
    if trig {
        defaults.push(("nu", 1.0));
    } else {
        defaults.extend([("alpha", 1.0), ("beta", 0.5), ("gamma", 0.8)]);
    }
    if name == "vol_v3" {
        defaults.push(("C2", 0.7));
    }
    let p = Params::merge(name, &defaults, ov)?;
    let (model, x_range) = if trig {
        let nu = p.get("nu");
        if nu <= 0.0 {
            return Err(out_of_range(name, "nu must be positive"));
        }
        (VolModel::Trig { nu }, (0.3 / nu, 1.2 / nu))
    } else {
        (
            VolModel::Quadratic {
                alpha: p.get("alpha"),
                beta: p.get("beta"),
                gamma: p.get("gamma"),
            },
            (-1.0, 1.5),
        )
    };
    check_sigma(name, &model, x_range)?;
    let (c, c0) = (p.get("C"), model.c0());
    let m = model;
    let solution: SolutionFn = match name {
        "vol_inv_v4" => Arc::new(move |x, t| {
            let psi = m.psi(x);
            c * (m.sigma(x) / t).sqrt() * (c0 * t - psi * psi / (2.0 * t)).exp()
        }),
        "vol_inv_v5" => Arc::new(move |x, t| c * m.sigma(x).sqrt() * (c0 * t).exp()),
        "vol_erf" => Arc::new(move |x, t| {
            c * erf(m.psi(x) / (2.0 * t).sqrt()) * m.sigma(x).sqrt() * (c0 * t).exp()
        }),
        _ => {
            let c2 = p.get("C2");
            Arc::new(move |x, t| {
                let psi = m.psi(x);
                (c * t.powf(-0.5) + c2 * t.powf(-1.5) * psi)
                    * m.sigma(x).sqrt()
                    * (c0 * t - psi * psi / (2.0 * t)).exp()
            })
        }
    };
    let description = match name {
        "vol_inv_v4" => "invariant solution C sqrt(σ/t) exp[c0 t - ψ²/(2t)]",
        "vol_inv_v5" => "invariant solution C sqrt(σ) exp(c0 t)",
        "vol_erf" => "error-function solution C erf(ψ/sqrt(2t)) sqrt(σ) exp(c0 t)",
        _ => {
            "projective invariant solution (C t^{-1/2} + C2 t^{-3/2} ψ) sqrt(σ) exp[c0 t - ψ²/(2t)]"
        }
    };
    Ok(CatalogueEntry {
        name,
        description,
        coeffs: model.coefficients(&p.env)?,
        params: p.env,
        x_range,
        t_range: (0.2, 1.5),
        notes: "σ > 0 on the domain; quadratic σ = alpha + beta x + gamma x² by default, \
                or σ = sin(νx)cos(νx) with h = ν² when nu is given",
        residual_tol: RESIDUAL_TOL,
        solution,
    })
}

fn vol_sl2_action(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge(
        "vol_sl2_action",
        &[
            ("gamma", 1.5),
            ("r", -0.5),
            ("ma", 2.0),
            ("mb", 1.0),
            ("mc", 1.0),
            ("md", 3.0),
            ("C", 1.0),
        ],
        ov,
    )?;
    let (g, r, a, b, cc, d, c) = (
        p.get("gamma"),
        p.get("r"),
        p.get("ma"),
        p.get("mb"),
        p.get("mc"),
        p.get("md"),
        p.get("C"),
    );
    let det = a * d - b * cc;
    let (x_range, t_range) = ((0.0, 2.0), (0.1, 2.0));
    if det <= 0.0 || g <= 0.0 {
        return Err(out_of_range(
            "vol_sl2_action",
            "need ma md - mb mc > 0 and gamma > 0",
        ));
    }
    if r >= x_range.0 - 0.1 {
        return Err(out_of_range(
            "vol_sl2_action",
            "r must lie left of the domain [0, 2]",
        ));
    }
    for t in [t_range.0, t_range.1] {
        let den = cc * t + d;
        if den <= 0.0 || (a * t + b) / den <= 0.0 {
            return Err(out_of_range(
                "vol_sl2_action",
                "mc t + md and the image time must stay positive on [0.1, 2]",
            ));
        }
    }
    Ok(CatalogueEntry {
        name: "vol_sl2_action",
        description: "Möbius group action on the heat kernel for σ = γ(x-r)²",
        coeffs: CoefficientSet::parse("0.5*(gamma*(x - r)^2)^2", "0", "0", p.env.clone())?,
        params: p.env,
        x_range,
        t_range,
        notes: "ma md - mb mc > 0, x > r; U is the heat kernel at the image point",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| {
            let den = cc * t + d;
            let tt = (a * t + b) / den;
            let xt = -(2.0 * det).sqrt() / (g * den * (x - r));
            c * den.powf(-0.5)
                * (x - r)
                * (-cc / (2.0 * g * g * (x - r).powi(2) * den)).exp()
                * heat_kernel_fn(xt, tt, 0.0)
        }),
    })
}

fn vol_sigma_from_h(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge(
        "vol_sigma_from_h",
        &[
            ("alpha", 1.0),
            ("beta", 0.4),
            ("gamma", 0.9),
            ("nu", 0.8),
            ("C", 1.0),
        ],
        ov,
    )?;
    let model = VolModel::FromH {
        alpha: p.get("alpha"),
        beta: p.get("beta"),
        gamma: p.get("gamma"),
        nu: p.get("nu"),
    };
    let nu = p.get("nu");
    if nu <= 0.0 {
        return Err(out_of_range("vol_sigma_from_h", "nu must be positive"));
    }
    let x_range = (-1.2 / nu, 1.2 / nu);
    check_sigma("vol_sigma_from_h", &model, x_range)?;
    let (c, c0) = (p.get("C"), model.c0());
    Ok(CatalogueEntry {
        name: "vol_sigma_from_h",
        description: "σ from the fundamental pair {cos νx, sin νx} of φ'' + ν²φ = 0, invariant solution C sqrt(σ/t) exp[c0 t - ψ²/(2t)]",
        coeffs: model.coefficients(&p.env)?,
        params: p.env,
        x_range,
        t_range: (0.2, 1.5),
        notes: "h = ν², W = ν, (4 alpha gamma - beta²) W² = 8 c0; |νx| < π/2",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| {
            let psi = model.psi(x);
            c * (model.sigma(x) / t).sqrt() * (c0 * t - psi * psi / (2.0 * t)).exp()
        }),
    })
}

/// `I_ν(z)` times `exp(e)`, combined in log space.
fn bessel_i_times_exp(nu: f64, z: f64, e: f64) -> f64 {
    bessel_i_scaled(nu, z) * (z + e).exp()
}

fn radial(ov: &ParamEnv, two_d: bool) -> Result<CatalogueEntry> {
    let name = if two_d {
        "radial_2d"
    } else {
        "radial_fundamental"
    };
    let defaults: Vec<(&str, f64)> = if two_d {
        vec![("mu", -1.0), ("omega", 0.7), ("rho", 0.9), ("C", 1.0)]
    } else {
        vec![
            ("n", 3.0),
            ("mu", -0.75),
            ("omega", 0.7),
            ("rho", 0.9),
            ("C", 1.0),
        ]
    };
    let p = Params::merge(name, &defaults, ov)?;
    let n = if two_d { 2.0 } else { p.get("n") };
    let (mu, w, rho, c) = (p.get("mu"), p.get("omega"), p.get("rho"), p.get("C"));
    let nu2 = (n - 2.0).powi(2) / 4.0 - mu;
    if nu2 < 0.0 {
        return Err(out_of_range(
            name,
            "need mu <= (n-2)²/4 for a real Bessel order",
        ));
    }
    let nu = nu2.sqrt();
    let (x_range, t_range) = ((0.3, 3.0), (0.1, 1.5));
    if nu > MAX_ORDER || w <= 0.0 || rho <= 0.0 || 2.0 * w * t_range.1 >= PI {
        return Err(out_of_range(
            name,
            "need order <= 10, omega > 0, rho > 0, 2 omega t < π",
        ));
    }
    if w * x_range.1 * rho / (2.0 * w * t_range.0).sin() > MAX_ARG {
        return Err(out_of_range(
            name,
            "Bessel argument leaves the supported range",
        ));
    }
    let mut env = p.env.clone();
    if two_d {
        env.insert("n", 2.0)?;
    }
    Ok(CatalogueEntry {
        name,
        description: if two_d {
            "fundamental solution of the 2-d rotation-invariant PDE, radial variable"
        } else {
            "fundamental solution of u_t = u_rr + (n-1)/r u_r + (μ/r² + ω²r²) u"
        },
        coeffs: CoefficientSet::parse("1", "(n - 1)/x", "mu/x^2 + omega^2*x^2", env)?,
        params: p.env,
        x_range,
        t_range,
        notes: "Bessel order ν = sqrt((n-2)²/4 - μ); 0 < 2ωt < π; x is the radial variable",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |r, t| {
            let s = (2.0 * w * t).sin();
            let e = -0.5 * w * (r * r + rho * rho) / (2.0 * w * t).tan();
            c * (r * rho).powf((2.0 - n) / 2.0) / s * bessel_i_times_exp(nu, w * r * rho / s, e)
        }),
    })
}

fn canonical_bessel(ov: &ParamEnv) -> Result<CatalogueEntry> {
    let p = Params::merge(
        "canonical_bessel",
        &[("mu", -2.0), ("y", 1.2), ("C", 1.0)],
        ov,
    )?;
    let (mu, y, c) = (p.get("mu"), p.get("y"), p.get("C"));
    if mu > 0.25 || y <= 0.0 {
        return Err(out_of_range("canonical_bessel", "need mu <= 1/4 and y > 0"));
    }
    let nu = (0.25 - mu).sqrt();
    let (x_range, t_range) = ((0.3, 3.0), (0.1, 1.5));
    if nu > MAX_ORDER || x_range.1 * y / (2.0 * t_range.0) > MAX_ARG {
        return Err(out_of_range(
            "canonical_bessel",
            "Bessel order or argument out of range",
        ));
    }
    Ok(CatalogueEntry {
        name: "canonical_bessel",
        description: "fundamental solution of u_t = u_xx + μ u/x² with source at y",
        coeffs: CoefficientSet::parse("1", "0", "mu/x^2", p.env.clone())?,
        params: p.env,
        x_range,
        t_range,
        notes: "ν = sqrt(1/4 - μ); x, y > 0",
        residual_tol: RESIDUAL_TOL,
        solution: Arc::new(move |x, t| {
            let z = x * y / (2.0 * t);
            c * (x * y).sqrt() / (2.0 * t) * bessel_i_times_exp(nu, z, -(x * x + y * y) / (4.0 * t))
        }),
    })
}
