//! JSON report pieces shared by the subcommands.

use std::collections::BTreeMap;

use diffusym::classify::{SymmetryClass, Variant};
use diffusym::verify::{Grid, ResidualReport};
use serde::Serialize;

use crate::specfile::PdeSpec;

#[derive(Debug, Serialize)]
pub struct Pde {
    pub a: String,
    pub b: String,
    pub c: String,
    pub time_dependent: bool,
}

#[derive(Debug, Serialize)]
pub struct Domain {
    pub x: [f64; 2],
    pub t: [f64; 2],
    pub x0: Option<f64>,
}

/// Fields every spec-driven report starts with.
#[derive(Debug, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub spec: String,
    pub pde: Pde,
    pub params: BTreeMap<String, f64>,
    pub domain: Domain,
}

impl Header {
    pub fn new(command: &'static str, spec: &PdeSpec, time_dependent: bool) -> Self {
        let [a, b, c] = spec.coefficient_strings();
        Header {
            command,
            spec: spec.name.clone(),
            pde: Pde {
                a,
                b,
                c,
                time_dependent,
            },
            params: spec.params.iter().cloned().collect(),
            domain: Domain {
                x: [spec.x_range.0, spec.x_range.1],
                t: [spec.t_range.0, spec.t_range.1],
                x0: spec.x0,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Class {
    pub variant: &'static str,
    pub dimension: usize,
    /// `{c2, c1, c0}` (six) or `{mu, c2, c0}` (four); absent otherwise.
    pub constants: Option<BTreeMap<&'static str, f64>>,
    pub iota: f64,
    pub fit_rms_residual: f64,
    pub fit_max_residual: f64,
    pub fit_threshold: f64,
    pub samples: usize,
}

impl From<&SymmetryClass> for Class {
    fn from(c: &SymmetryClass) -> Self {
        let constants = match c.variant {
            Variant::SixDim { c2, c1, c0 } => {
                Some(BTreeMap::from([("c2", c2), ("c1", c1), ("c0", c0)]))
            }
            Variant::FourDim { mu, c2, c0 } => {
                Some(BTreeMap::from([("mu", mu), ("c2", c2), ("c0", c0)]))
            }
            Variant::NoExtra => None,
        };
        Class {
            variant: c.variant.name(),
            dimension: c.variant.dimension(),
            constants,
            iota: c.iota,
            fit_rms_residual: c.rms_residual,
            fit_max_residual: c.max_residual,
            fit_threshold: c.threshold,
            samples: c.samples,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub rms: f64,
    pub scale: f64,
    pub relative: f64,
    pub worst: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub nt: usize,
    pub tol: f64,
    pub passed: bool,
}

impl Residual {
    pub fn new(r: &ResidualReport, grid: &Grid, tol: f64) -> Self {
        Residual {
            max_abs: r.max_abs,
            rms: r.rms,
            scale: r.scale,
            relative: r.relative,
            worst: [r.worst.0, r.worst.1],
            h: grid.h(),
            nx: grid.nx,
            nt: grid.nt,
            tol,
            passed: r.relative <= tol,
        }
    }
}

/// `(x, t)` sample of a scalar field.
#[derive(Debug, Serialize)]
pub struct Sample {
    pub x: f64,
    pub t: f64,
    pub u: f64,
}
