//! Subcommand implementations; each returns a JSON report and exit code.

use std::collections::BTreeMap;
use std::sync::Arc;

use diffusym::canonical::{
    build_heat_map, build_timedep_map, MapCase, MobiusParams, Target, TimeDepInit,
};
use diffusym::catalogue::{self, heat_kernel_fn, CatalogueEntry, ROSTER};
use diffusym::classify::{
    classify as classify_profile, timedep_classifiers, SymmetryClass, Variant,
};
use diffusym::expr::{parse, ParamEnv};
use diffusym::generators::{
    basis, check_table, classifier_jet, commutator, decompose, determining_residual, timedep_basis,
    VectorField,
};
use diffusym::invariants::{profile, CoefficientSet, Coefficients, InvariantProfile};
use diffusym::numerics::linspace;
use diffusym::verify::{evolve_compare, mass, residual, symmetry_check, Grid};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{Class, Header, Residual, Sample};
use crate::specfile::PdeSpec;
use crate::{CliError, Outcome, EXIT_NEGATIVE, EXIT_NUMERICAL, EXIT_OK};

/// Relative residual bound of pulled-back canonical solutions.
pub const TRANSFORM_TOL: f64 = 1e-5;
/// Tolerance of commutator-table and closure checks.
pub const TABLE_TOL: f64 = 1e-6;
/// Tolerance of the determining equations along the time grid.
pub const DETERMINING_TOL: f64 = 1e-8;
/// Finite-difference steps `(h, k)` of the symmetry test.
pub const SYMMETRY_STEPS: (f64, f64) = (5e-3, 5e-4);

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Merges `extra` object fields after the header's.
fn merged(header: &Header, extra: Value) -> Value {
    let mut out = to_value(header);
    if let (Value::Object(o), Value::Object(e)) = (&mut out, extra) {
        o.extend(e);
    }
    out
}

fn autonomous(spec: &PdeSpec) -> Result<(Arc<InvariantProfile>, SymmetryClass), CliError> {
    let coeffs = spec.coefficients()?;
    if coeffs.is_time_dependent() {
        return Err(CliError::Input(
            "coefficients depend on t; time-dependent PDEs use `form = timedep` with m, n, q, r"
                .into(),
        ));
    }
    let prof = Arc::new(profile(Arc::new(coeffs), &spec.domain()?)?);
    let cls = classify_profile(&prof)?;
    Ok((prof, cls))
}

/// `n × m` interior points of the spec's window, `frac` of the way in.
fn interior_points(spec: &PdeSpec, frac: f64, n: usize, m: usize) -> Vec<(f64, f64)> {
    let (x0, x1) = spec.x_range;
    let (t0, t1) = spec.t_range;
    let (dx, dt) = (frac * (x1 - x0), frac * (t1 - t0));
    let mut out = Vec::with_capacity(n * m);
    for t in linspace(t0 + dt, t1 - dt, m) {
        for x in linspace(x0 + dx, x1 - dx, n) {
            out.push((x, t));
        }
    }
    out
}

fn residual_grid(x: (f64, f64), t: (f64, f64), h: f64) -> Result<Grid, CliError> {
    let nx = ((x.1 - x.0) / h).round() as usize + 1;
    Ok(Grid::new(x.0, x.1, nx, t.0, t.1, 9)?)
}

pub fn classify(spec: &PdeSpec, expect: Option<&str>) -> Result<Outcome, CliError> {
    let (json, name) = if let Some([m, n, q, r]) = spec.timedep_parts()? {
        let cls = timedep_classifiers(&m, &n, &q, &r)?;
        cls.check_window(spec.t_range.0, spec.t_range.1, 201)?;
        let samples: Vec<Value> = linspace(spec.t_range.0, spec.t_range.1, 9)
            .into_iter()
            .map(|t| {
                let (c2, c1, c0) = cls.at(t)?;
                Ok(json!({"t": t, "c2": c2, "c1": c1, "c0": c0}))
            })
            .collect::<Result<_, CliError>>()?;
        let extra = json!({
            "variant": "six",
            "dimension": 6,
            "classifiers": {
                "c2": cls.c2.to_string(),
                "c1": cls.c1.to_string(),
                "c0": cls.c0.to_string(),
                "samples": samples,
            },
        });
        (merged(&Header::new("classify", spec, true), extra), "six")
    } else {
        let (_, cls) = autonomous(spec)?;
        let extra = to_value(&Class::from(&cls));
        (
            merged(&Header::new("classify", spec, false), extra),
            cls.variant.name(),
        )
    };
    let code = match expect {
        Some(e) if e != name => EXIT_NEGATIVE,
        _ => EXIT_OK,
    };
    Ok(Outcome { json, code })
}

fn parse_mobius(s: &str) -> Result<MobiusParams, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::Input(format!(
                "--mobius `{s}` is not four comma-separated numbers"
            ))
        })?;
    match v.as_slice() {
        [a, b, c, d] => Ok(MobiusParams::new(*a, *b, *c, *d)?),
        _ => Err(CliError::Input(format!(
            "--mobius `{s}` needs exactly four numbers"
        ))),
    }
}

#[derive(Serialize)]
struct MapSample {
    x: f64,
    t: f64,
    x_tilde: f64,
    t_tilde: f64,
    log_multiplier: f64,
    u: f64,
}

pub fn transform(
    spec: &PdeSpec,
    target: Option<&str>,
    mobius: Option<&str>,
) -> Result<Outcome, CliError> {
    let target = target.or(spec.target.as_deref());
    let points = interior_points(spec, 0.1, 3, 3);
    let grid = residual_grid(spec.x_range, spec.t_range, spec.h)?;
    if let Some([m, n, q, r]) = spec.timedep_parts()? {
        if target == Some("second") {
            return Err(CliError::Input(
                "time-dependent PDEs map to the heat equation (first target)".into(),
            ));
        }
        let (t_min, t_max) = spec.t_range;
        let t0 = spec.t0.unwrap_or(t_min);
        // the residual's time stencil reaches slightly past the window
        let pad = 0.01 * (t_max - t_min);
        let map = build_timedep_map(
            &m,
            &n,
            &q,
            &r,
            t0,
            (t_min - pad, t_max + pad),
            TimeDepInit::default(),
        )?;
        let (a, b) = (map.t_tilde(t_min)?, map.t_tilde(t_max)?);
        let source = a - (b - a);
        let kernel = move |x: f64, t: f64| heat_kernel_fn(x, t - source, 0.0);
        let u = |x: f64, t: f64| map.pull_back_at(&kernel, x, t).unwrap_or(f64::NAN);
        let samples = points
            .iter()
            .map(|&(x, t)| {
                let (tt, xt) = map.coords(x, t)?;
                Ok(MapSample {
                    x,
                    t,
                    x_tilde: xt,
                    t_tilde: tt,
                    log_multiplier: map.log_multiplier(x, t)?,
                    u: u(x, t),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let coeffs = spec.coefficients()?;
        let res = Residual::new(&residual(&coeffs, &u, &grid)?, &grid, TRANSFORM_TOL);
        let code = if res.passed { EXIT_OK } else { EXIT_NUMERICAL };
        let extra = json!({
            "map": {
                "kind": "timedep",
                "target": "first",
                "t0": t0,
                "kernel_source_time": source,
            },
            "samples": to_value(&samples),
            "pulled_back_residual": to_value(&res),
        });
        return Ok(Outcome {
            json: merged(&Header::new("transform", spec, true), extra),
            code,
        });
    }
    let header = Header::new("transform", spec, false);
    let (prof, cls) = autonomous(spec)?;
    let target = match (target, cls.variant) {
        (Some("first"), _) => Target::First,
        (Some("second"), _) => Target::Second,
        (Some(t), _) => {
            return Err(CliError::Input(format!(
                "unknown target `{t}` (first|second)"
            )))
        }
        (None, Variant::SixDim { .. }) => Target::First,
        (None, Variant::FourDim { .. }) => Target::Second,
        (None, Variant::NoExtra) => {
            let extra = json!({"class": to_value(&Class::from(&cls)), "map": Value::Null});
            return Ok(Outcome {
                json: merged(&header, extra),
                code: EXIT_NEGATIVE,
            });
        }
    };
    let c2 = match cls.variant {
        Variant::SixDim { c2, .. } | Variant::FourDim { c2, .. } => c2,
        Variant::NoExtra => 0.0,
    };
    let (case, lambda) = MapCase::of(c2);
    let p = match mobius {
        Some(s) => parse_mobius(s)?,
        None => spec
            .mobius_params()?
            .unwrap_or_else(|| MobiusParams::default_for(case)),
    };
    let map = build_heat_map(prof, &cls, p, spec.constant, target)?;
    let canonical = map.canonical_solution()?;
    let u = |x: f64, t: f64| map.pull_back_at(&*canonical, x, t).unwrap_or(f64::NAN);
    let samples = points
        .iter()
        .map(|&(x, t)| {
            let (tt, xt) = map.coords(x, t)?;
            Ok(MapSample {
                x,
                t,
                x_tilde: xt,
                t_tilde: tt,
                log_multiplier: map.log_multiplier(x, t)?,
                u: u(x, t),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let res = Residual::new(
        &residual(map.profile().coeffs().as_ref(), &u, &grid)?,
        &grid,
        TRANSFORM_TOL,
    );
    let code = if res.passed { EXIT_OK } else { EXIT_NUMERICAL };
    let canonical_name = match target {
        Target::First => "heat kernel from the source time",
        Target::Second if map.mu > 0.25 => "sqrt(x) cos(beta ln x) with beta^2 = mu - 1/4",
        Target::Second => "power solution x^s with s^2 - s + mu = 0",
    };
    let extra = json!({
        "class": to_value(&Class::from(&cls)),
        "map": {
            "kind": "autonomous",
            "target": if target == Target::First { "first" } else { "second" },
            "case": case.name(),
            "lambda": lambda,
            "mobius": [p.alpha, p.beta, p.gamma, p.delta],
            "constant": map.constant,
            "mu": map.mu,
            "iota": map.iota,
            "omega_zero": map.omega.is_zero(),
            "window": [map.t_min, map.t_max],
            "kernel_source_time": map.kernel_source_time(),
            "canonical_solution": canonical_name,
        },
        "samples": to_value(&samples),
        "pulled_back_residual": to_value(&res),
    });
    Ok(Outcome {
        json: merged(&header, extra),
        code,
    })
}

#[derive(Serialize)]
struct FieldReport {
    label: String,
    /// `[τ, ξ, φ]` at the sample points.
    components: Vec<[f64; 3]>,
}

fn field_reports(
    fields: &[VectorField],
    points: &[(f64, f64)],
) -> Result<Vec<FieldReport>, CliError> {
    fields
        .iter()
        .map(|f| {
            Ok(FieldReport {
                label: f.label.clone(),
                components: points
                    .iter()
                    .map(|&(x, t)| f.components(x, t))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Bracket {
    i: usize,
    j: usize,
    coefficients: Vec<f64>,
}

fn brackets(table: &diffusym::generators::StructureTable) -> Vec<Bracket> {
    table
        .nonzero(1e-9)
        .into_iter()
        .map(|(i, j, c)| Bracket {
            i: i + 1,
            j: j + 1,
            coefficients: c,
        })
        .collect()
}

#[derive(Serialize)]
struct SymmetryReport {
    field: String,
    q: [f64; 2],
    ratio: f64,
    passed: bool,
}

pub fn generators(spec: &PdeSpec) -> Result<Outcome, CliError> {
    let sample_points = interior_points(spec, 0.2, 2, 2);
    let check_points = interior_points(spec, 0.1, 5, 4);
    if let Some([m, n, q, r]) = spec.timedep_parts()? {
        let (t_min, t_max) = spec.t_range;
        let t0 = spec.t0.unwrap_or(t_min);
        let (fields, cls) = timedep_basis(&m, &n, &q, &r, t0, (t_min, t_max))?;
        let mut closure: f64 = 0.0;
        let mut table = Vec::new();
        for i in 0..fields.len() {
            for j in i + 1..fields.len() {
                let (c, res) =
                    decompose(&commutator(&fields[i], &fields[j]), &fields, &check_points)?;
                closure = closure.max(res);
                if c.iter().any(|v| v.abs() > 1e-9) {
                    table.push(Bracket {
                        i: i + 1,
                        j: j + 1,
                        coefficients: c
                            .into_iter()
                            .map(|v| if v.abs() > 1e-9 { v } else { 0.0 })
                            .collect(),
                    });
                }
            }
        }
        let mut determining: f64 = 0.0;
        for t in linspace(t_min, t_max, 9) {
            let c = classifier_jet(&cls, t)?;
            for f in &fields {
                if let Some(jet) = f.jet(t) {
                    for v in determining_residual(&jet?, c) {
                        determining = determining.max(v.abs());
                    }
                }
            }
        }
        let passed = closure <= TABLE_TOL && determining <= DETERMINING_TOL;
        let (symmetry, sym_ok) = symmetry_reports(spec, &fields, &check_points)?;
        let extra = json!({
            "variant": "six",
            "t0": t0,
            "sample_points": sample_points,
            "fields": to_value(&field_reports(&fields, &sample_points)?),
            "computed_table": to_value(&table),
            "closure_residual": closure,
            "determining_residual": determining,
            "passed": passed,
            "symmetry": to_value(&symmetry),
        });
        return Ok(Outcome {
            json: merged(&Header::new("generators", spec, true), extra),
            code: if passed && sym_ok {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            },
        });
    }
    let header = Header::new("generators", spec, false);
    let (prof, cls) = autonomous(spec)?;
    if cls.variant == Variant::NoExtra {
        let extra = json!({
            "class": to_value(&Class::from(&cls)),
            "fields": ["∂t", "u∂u"],
            "passed": true,
        });
        return Ok(Outcome {
            json: merged(&header, extra),
            code: EXIT_OK,
        });
    }
    let b = basis(prof, &cls)?;
    let chk = check_table(&b, &check_points, TABLE_TOL)?;
    let (symmetry, sym_ok) = symmetry_reports(spec, &b.fields, &check_points)?;
    let extra = json!({
        "class": to_value(&Class::from(&cls)),
        "sample_points": sample_points,
        "fields": to_value(&field_reports(&b.fields, &sample_points)?),
        "expected_table": to_value(&brackets(&b.expected)),
        "computed_table": to_value(&brackets(&chk.computed)),
        "max_deviation": chk.max_deviation,
        "failures": chk.failures,
        "jacobi_residual": chk.jacobi_residual,
        "tol": chk.tol,
        "passed": chk.passed(),
        "symmetry": to_value(&symmetry),
    });
    Ok(Outcome {
        json: merged(&header, extra),
        code: if chk.passed() && sym_ok {
            EXIT_OK
        } else {
            EXIT_NUMERICAL
        },
    })
}

/// A closed-form solution to check, with the window it is valid on.
struct Source {
    json: Value,
    u: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    x_range: (f64, f64),
    t_range: (f64, f64),
    tol: f64,
}

/// Solution named by the flags, else by the spec's `[verify]` section:
/// entries win over expressions at each level.
fn solution_source(
    spec: &PdeSpec,
    entry: Option<&str>,
    solution: Option<&str>,
) -> Result<Option<Source>, CliError> {
    let src = match (
        entry,
        solution,
        spec.entry.as_deref(),
        spec.solution.as_deref(),
    ) {
        (Some(name), _, _, _) | (None, None, Some(name), _) => {
            let e = entry_for(spec, name)?;
            let x = (
                spec.x_range.0.max(e.x_range.0),
                spec.x_range.1.min(e.x_range.1),
            );
            let t = (
                spec.t_range.0.max(e.t_range.0),
                spec.t_range.1.min(e.t_range.1),
            );
            if !(x.0 < x.1 && t.0 <= t.1) {
                return Err(CliError::Input(format!(
                    "entry `{name}` has no overlap with the spec's window"
                )));
            }
            let params: BTreeMap<&str, f64> = e.params.iter().collect();
            Source {
                json: json!({"entry": e.name, "entry_params": params}),
                u: e.solution(),
                x_range: x,
                t_range: t,
                tol: e.residual_tol,
            }
        }
        (None, Some(s), _, _) | (None, None, None, Some(s)) => {
            let expr = parse(s)?.bind(&spec.env()?)?;
            Source {
                json: json!({"solution": s}),
                u: Arc::new(move |x, t| expr.eval_xt(x, t).unwrap_or(f64::NAN)),
                x_range: spec.x_range,
                t_range: spec.t_range,
                tol: 1e-6,
            }
        }
        (None, None, None, None) => return Ok(None),
    };
    Ok(Some(src))
}

/// Symmetry tests of `fields` against the spec's `[verify]` solution, if any.
fn symmetry_reports(
    spec: &PdeSpec,
    fields: &[VectorField],
    points: &[(f64, f64)],
) -> Result<(Vec<SymmetryReport>, bool), CliError> {
    let Some(src) = solution_source(spec, None, None)? else {
        return Ok((Vec::new(), true));
    };
    let coeffs = spec.coefficients()?;
    let (xr, tr) = (src.x_range, src.t_range);
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, t)| x > xr.0 && x < xr.1 && t > tr.0 && t < tr.1)
        .collect();
    if inside.is_empty() {
        return Err(CliError::Input(
            "the [verify] solution has no overlap with the spec's window".into(),
        ));
    }
    let sol = src.u;
    let u = move |x: f64, t: f64| sol(x, t);
    let mut out = Vec::new();
    let mut ok = true;
    for f in fields {
        let s = symmetry_check(&coeffs, f, &u, &inside, SYMMETRY_STEPS)?;
        ok &= s.passed;
        out.push(SymmetryReport {
            field: f.label.clone(),
            q: s.q,
            ratio: s.ratio,
            passed: s.passed,
        });
    }
    Ok((out, ok))
}

/// Catalogue entry with the spec's parameters applied where the entry has them.
fn entry_for(spec: &PdeSpec, name: &str) -> Result<CatalogueEntry, CliError> {
    let known = catalogue::parameters(name)?;
    let mut ov = ParamEnv::new();
    for (k, v) in &spec.params {
        if known.iter().any(|(n, _)| n == k) {
            ov.insert(k.clone(), *v)?;
        }
    }
    Ok(catalogue::entry_with(name, &ov)?)
}

#[derive(Serialize)]
struct Evolution {
    h: f64,
    tau: f64,
    steps: usize,
    final_l2_error: f64,
    max_l2_error: f64,
    relative_final_error: f64,
    mass_drift: f64,
}

pub fn verify(
    spec: &PdeSpec,
    entry: Option<&str>,
    solution: Option<&str>,
    tol: Option<f64>,
) -> Result<Outcome, CliError> {
    let coeffs = spec.coefficients()?;
    let Some(Source {
        json: source,
        u,
        x_range,
        t_range,
        tol: default_tol,
    }) = solution_source(spec, entry, solution)?
    else {
        return Err(CliError::Input(
            "nothing to verify: pass --entry or --solution, or set [verify] in the spec".into(),
        ));
    };
    let tol = tol.unwrap_or(default_tol);
    let grid = residual_grid(x_range, t_range, spec.h)?;
    let uf = |x: f64, t: f64| u(x, t);
    let res = Residual::new(&residual(&coeffs, &uf, &grid)?, &grid, tol);
    let evolution = if t_range.1 > t_range.0 {
        let eg = Grid::with_steps(x_range.0, x_range.1, spec.h, t_range.0, t_range.1, spec.h)?;
        let init = |x: f64| u(x, t_range.0);
        let ev = evolve_compare(&coeffs, &init, &uf, &eg)?;
        Some(Evolution {
            h: eg.h(),
            tau: eg.tau(),
            steps: eg.nt - 1,
            final_l2_error: ev.final_error,
            max_l2_error: ev.max_error,
            relative_final_error: ev.final_error / ev.scale,
            mass_drift: ev.mass_drift(),
        })
    } else {
        None
    };
    let masses = json!({
        "t_min": mass(&uf, t_range.0, x_range, None)?,
        "t_max": mass(&uf, t_range.1, x_range, None)?,
    });
    let samples: Vec<Sample> = interior_points(spec, 0.25, 3, 2)
        .into_iter()
        .filter(|&(x, t)| x >= x_range.0 && x <= x_range.1 && t >= t_range.0 && t <= t_range.1)
        .map(|(x, t)| Sample { x, t, u: u(x, t) })
        .collect();
    let extra = json!({
        "source": source,
        "x_range": [x_range.0, x_range.1],
        "t_range": [t_range.0, t_range.1],
        "residual": to_value(&res),
        "evolution": to_value(&evolution),
        "mass": masses,
        "samples": to_value(&samples),
    });
    Ok(Outcome {
        json: merged(
            &Header::new("verify", spec, coeffs.is_time_dependent()),
            extra,
        ),
        code: if res.passed { EXIT_OK } else { EXIT_NEGATIVE },
    })
}

fn coefficient_json(c: &CoefficientSet) -> Value {
    let (a, b, cc) = c.bound();
    json!({"a": a.to_string(), "b": b.to_string(), "c": cc.to_string()})
}

pub fn catalogue_list() -> Result<Outcome, CliError> {
    let entries = ROSTER
        .iter()
        .map(|name| {
            let e = catalogue::entry(name)?;
            let params: BTreeMap<&str, f64> = e.params.iter().collect();
            Ok(json!({
                "name": e.name,
                "description": e.description,
                "pde": coefficient_json(&e.coeffs),
                "params": params,
                "x_range": [e.x_range.0, e.x_range.1],
                "t_range": [e.t_range.0, e.t_range.1],
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Outcome {
        json: json!({"command": "catalogue list", "entries": entries}),
        code: EXIT_OK,
    })
}

pub fn catalogue_show(name: &str) -> Result<Outcome, CliError> {
    let e = catalogue::entry(name)?;
    let params: BTreeMap<&str, f64> = e.params.iter().collect();
    let grid = e.grid(1.0 / 128.0)?;
    let sol = e.solution();
    let u = |x: f64, t: f64| sol(x, t);
    let res = Residual::new(&residual(&e.coeffs, &u, &grid)?, &grid, e.residual_tol);
    let (x0, x1) = e.x_range;
    let (t0, t1) = e.t_range;
    let samples: Vec<Sample> = [0.25, 0.5, 0.75]
        .iter()
        .flat_map(|fx| [0.0, 1.0].map(|ft| (x0 + fx * (x1 - x0), t0 + ft * (t1 - t0))))
        .map(|(x, t)| Sample { x, t, u: u(x, t) })
        .collect();
    let json = json!({
        "command": "catalogue show",
        "name": e.name,
        "description": e.description,
        "pde": coefficient_json(&e.coeffs),
        "params": params,
        "x_range": [x0, x1],
        "t_range": [t0, t1],
        "notes": e.notes,
        "residual": to_value(&res),
        "samples": to_value(&samples),
    });
    Ok(Outcome {
        json,
        code: if res.passed { EXIT_OK } else { EXIT_NUMERICAL },
    })
}
