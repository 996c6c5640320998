//! The `.pde` spec file: an INI-like keyed text format.
//!
//! ```text
//! # comment (also `;`)
//! [pde]
//! name = ou
//! a = 1
//! b = ell*x
//! c = ell
//! [params]
//! ell = 1
//! [domain]
//! x = -4, 4
//! t = 0.1, 2
//! x0 = 0
//! ```
//!
//! Time-dependent PDEs `u_t = u_xx + (m + n x) u_x + (q + r x) u` set
//! `form = timedep` and give `m`, `n`, `q`, `r` (functions of `t`) instead
//! of `a`, `b`, `c`. Optional sections: `[map]` (`mobius`, `target`,
//! `constant`, `t0`) and `[verify]` (`entry`, `solution`, `h`).

use std::collections::BTreeMap;
use std::path::Path;

use diffusym::canonical::MobiusParams;
use diffusym::expr::{parse, Expr, ParamEnv};
use diffusym::invariants::{CoefficientSet, WorkingDomain};

use crate::CliError;

/// Which family the coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PdeForm {
    General {
        a: String,
        b: String,
        c: String,
    },
    TimeDep {
        m: String,
        n: String,
        q: String,
        r: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSpec {
    pub name: String,
    pub form: PdeForm,
    /// Parameters in file order.
    pub params: Vec<(String, f64)>,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub x0: Option<f64>,
    pub mobius: Option<[f64; 4]>,
    pub target: Option<String>,
    pub constant: f64,
    /// Reference time of the time-dependent map.
    pub t0: Option<f64>,
    pub entry: Option<String>,
    pub solution: Option<String>,
    pub h: f64,
}

type Sections = BTreeMap<String, Vec<(String, String, usize)>>;

const KNOWN: [(&str, &[&str]); 5] = [
    ("pde", &["name", "form", "a", "b", "c", "m", "n", "q", "r"]),
    ("params", &[]),
    ("domain", &["x", "t", "x0"]),
    ("map", &["mobius", "target", "constant", "t0"]),
    ("verify", &["entry", "solution", "h"]),
];

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("line {line}: {msg}"))
}

fn sections(text: &str) -> Result<Sections, CliError> {
    let mut out = Sections::new();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim()
                .to_string();
            if !KNOWN.iter().any(|(n, _)| *n == name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(&name) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            out.insert(name.clone(), Vec::new());
            current = Some(name);
            continue;
        }
        let sec = current
            .as_ref()
            .ok_or_else(|| err(line, "key outside of any section"))?;
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let allowed = KNOWN
            .iter()
            .find(|(n, _)| n == sec)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if sec != "params" && !allowed.contains(&key.as_str()) {
            return Err(err(line, format!("unknown key `{key}` in [{sec}]")));
        }
        let entries = out.get_mut(sec).expect("section inserted above");
        if entries.iter().any(|(k, _, _)| *k == key) {
            return Err(err(line, format!("duplicate key `{key}` in [{sec}]")));
        }
        entries.push((key, value, line));
    }
    Ok(out)
}

fn number(v: &str, line: usize) -> Result<f64, CliError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(line, format!("`{v}` is not a finite number")))
}

fn numbers(v: &str, line: usize) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|p| number(p.trim(), line)).collect()
}

fn pair(v: &str, line: usize) -> Result<(f64, f64), CliError> {
    match numbers(v, line)?.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        [_, _] => Err(err(line, "range must be increasing")),
        _ => Err(err(line, "expected `lo, hi`")),
    }
}

impl PdeSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let secs = sections(text)?;
        let empty = Vec::new();
        let get = |sec: &str, key: &str| -> Option<(String, usize)> {
            secs.get(sec)
                .unwrap_or(&empty)
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, l)| (v.clone(), *l))
        };
        let need = |sec: &str, key: &str| {
            get(sec, key).ok_or_else(|| CliError::Input(format!("missing `{key}` in [{sec}]")))
        };
        if !secs.contains_key("pde") {
            return Err(CliError::Input("missing [pde] section".into()));
        }
        let name = get("pde", "name")
            .map(|v| v.0)
            .unwrap_or_else(|| "pde".into());
        let form = match get("pde", "form").map(|v| v.0).as_deref() {
            None | Some("general") => {
                for k in ["m", "n", "q", "r"] {
                    if let Some((_, l)) = get("pde", k) {
                        return Err(err(l, format!("`{k}` needs `form = timedep`")));
                    }
                }
                PdeForm::General {
                    a: need("pde", "a")?.0,
                    b: get("pde", "b").map(|v| v.0).unwrap_or_else(|| "0".into()),
                    c: get("pde", "c").map(|v| v.0).unwrap_or_else(|| "0".into()),
                }
            }
            Some("timedep") => {
                for k in ["a", "b", "c"] {
                    if let Some((_, l)) = get("pde", k) {
                        return Err(err(
                            l,
                            format!("`{k}` is fixed by `form = timedep`; give m, n, q, r"),
                        ));
                    }
                }
                let or0 = |k: &str| get("pde", k).map(|v| v.0).unwrap_or_else(|| "0".into());
                PdeForm::TimeDep {
                    m: or0("m"),
                    n: or0("n"),
                    q: or0("q"),
                    r: or0("r"),
                }
            }
            Some(other) => {
                let l = get("pde", "form").map(|v| v.1).unwrap_or(0);
                return Err(err(l, format!("unknown form `{other}` (general|timedep)")));
            }
        };
        let mut params = Vec::new();
        for (k, v, l) in secs.get("params").unwrap_or(&empty) {
            params.push((k.clone(), number(v, *l)?));
        }
        let (xv, xl) = need("domain", "x")?;
        let (tv, tl) = need("domain", "t")?;
        let x0 = get("domain", "x0")
            .map(|(v, l)| number(&v, l))
            .transpose()?;
        let mobius = match get("map", "mobius") {
            Some((v, l)) => match numbers(&v, l)?.as_slice() {
                [a, b, c, d] => Some([*a, *b, *c, *d]),
                _ => return Err(err(l, "mobius needs four numbers `a, b, c, d`")),
            },
            None => None,
        };
        let target = get("map", "target").map(|v| v.0);
        let constant = get("map", "constant")
            .map(|(v, l)| number(&v, l))
            .transpose()?
            .unwrap_or(1.0);
        let t0 = get("map", "t0").map(|(v, l)| number(&v, l)).transpose()?;
        let h = get("verify", "h")
            .map(|(v, l)| number(&v, l))
            .transpose()?
            .unwrap_or(1.0 / 128.0);
        if !(h > 0.0) {
            return Err(CliError::Input("[verify] h must be positive".into()));
        }
        Ok(PdeSpec {
            name,
            form,
            params,
            x_range: pair(&xv, xl)?,
            t_range: pair(&tv, tl)?,
            x0,
            mobius,
            target,
            constant,
            t0,
            entry: get("verify", "entry").map(|v| v.0),
            solution: get("verify", "solution").map(|v| v.0),
            h,
        })
    }

    pub fn env(&self) -> Result<ParamEnv, CliError> {
        Ok(ParamEnv::from_pairs(
            self.params.iter().map(|(k, v)| (k.as_str(), *v)),
        )?)
    }

    pub fn domain(&self) -> Result<WorkingDomain, CliError> {
        let d = WorkingDomain::new(
            self.x_range.0,
            self.x_range.1,
            self.t_range.0,
            self.t_range.1,
        )?;
        Ok(match self.x0 {
            Some(x0) => d.with_x0(x0)?,
            None => d,
        })
    }

    /// `m, n, q, r` with parameters bound, for the time-dependent form.
    pub fn timedep_parts(&self) -> Result<Option<[Expr; 4]>, CliError> {
        let PdeForm::TimeDep { m, n, q, r } = &self.form else {
            return Ok(None);
        };
        let env = self.env()?;
        let mut out = Vec::with_capacity(4);
        for s in [m, n, q, r] {
            out.push(parse(s)?.bind(&env)?);
        }
        Ok(Some(out.try_into().expect("four parts")))
    }

    pub fn coefficients(&self) -> Result<CoefficientSet, CliError> {
        match &self.form {
            PdeForm::General { a, b, c } => Ok(CoefficientSet::parse(a, b, c, self.env()?)?),
            PdeForm::TimeDep { .. } => {
                let [m, n, q, r] = self.timedep_parts()?.expect("timedep form");
                Ok(diffusym::canonical::timedep_coefficients(&m, &n, &q, &r)?)
            }
        }
    }

    pub fn mobius_params(&self) -> Result<Option<MobiusParams>, CliError> {
        self.mobius
            .map(|[a, b, c, d]| MobiusParams::new(a, b, c, d).map_err(CliError::from))
            .transpose()
    }

    /// Coefficient strings as written (`a, b, c`, or `1, m + n*x, q + r*x`).
    pub fn coefficient_strings(&self) -> [String; 3] {
        match &self.form {
            PdeForm::General { a, b, c } => [a.clone(), b.clone(), c.clone()],
            PdeForm::TimeDep { m, n, q, r } => [
                "1".into(),
                format!("({m}) + ({n})*x"),
                format!("({q}) + ({r})*x"),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = "# OU\n[pde]\nname = ou\na = 1\nb = ell*x\nc = ell\n[params]\nell = 1\n[domain]\nx = -4, 4\nt = 0.1, 2\nx0 = 0\n";

    #[test]
    fn parses_minimal_file() {
        let s = PdeSpec::parse_str(OU).unwrap();
        assert_eq!(s.name, "ou");
        assert_eq!(s.params, vec![("ell".to_string(), 1.0)]);
        assert_eq!(s.x_range, (-4.0, 4.0));
        assert_eq!(s.x0, Some(0.0));
        assert_eq!(s.h, 1.0 / 128.0);
        assert!(s.coefficients().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "[pde]\na = 1\n[domain]\nx = 1, 0\nt = 0, 1\n",
            "[pde]\na = 1\nzz = 3\n[domain]\nx = 0, 1\nt = 0, 1\n",
            "[nope]\n",
            "a = 1\n",
            "[pde]\na = 1\n[domain]\nx = 0, 1\n",
            "[pde]\na = 1\n[map]\nmobius = 1, 2\n[domain]\nx = 0, 1\nt = 0, 1\n",
            "[pde]\nform = timedep\na = 1\n[domain]\nx = 0, 1\nt = 0, 1\n",
        ] {
            assert!(
                matches!(PdeSpec::parse_str(bad), Err(CliError::Input(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn timedep_form() {
        let s = PdeSpec::parse_str(
            "[pde]\nform = timedep\nn = -1/t\n[domain]\nx = -2, 2\nt = 0.5, 2\n",
        )
        .unwrap();
        let c = s.coefficients().unwrap();
        assert_eq!(c.b_at(1.0, 2.0).unwrap(), -0.5);
        assert_eq!(c.a_at(1.0, 2.0).unwrap(), 1.0);
    }
}
