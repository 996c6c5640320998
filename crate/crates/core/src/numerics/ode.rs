//! Dormand–Prince 5(4) integrator with the pair's continuous extension.

use crate::error::{Error, Result};

/// Tolerances and options for [`solve_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; `None` picks one from the initial derivative.
    pub initial_step: Option<f64>,
    /// Keep every step so the solution can be queried anywhere on the interval.
    pub dense: bool,
    pub max_steps: usize,
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: None,
            dense: true,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with the five coefficient vectors of its interpolant.
#[derive(Debug, Clone)]
struct Step {
    t0: f64,
    h: f64,
    coeffs: [Vec<f64>; 5],
}

impl Step {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

/// Continuous solution produced by [`solve_ode`].
#[derive(Debug, Clone)]
pub struct DenseSolution {
    t0: f64,
    t_end: f64,
    y_end: Vec<f64>,
    steps: Vec<Step>,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn final_state(&self) -> &[f64] {
        &self.y_end
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// State at `t`, which must lie in the integration interval.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.y_end.len()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (lo, hi) = if self.t0 <= self.t_end {
            (self.t0, self.t_end)
        } else {
            (self.t_end, self.t0)
        };
        if !(t >= lo && t <= hi) {
            return Err(Error::Invalid(format!(
                "t = {t} outside the solved interval [{lo}, {hi}]"
            )));
        }
        if t == self.t_end || self.steps.is_empty() {
            if t != self.t_end {
                return Err(Error::Invalid(
                    "solution was computed without dense output".into(),
                ));
            }
            out.copy_from_slice(&self.y_end);
            return Ok(());
        }
        let forward = self.t_end > self.t0;
        // Steps are ordered along the direction of integration.
        let idx = self
            .steps
            .partition_point(|s| {
                if forward {
                    s.t0 + s.h <= t
                } else {
                    s.t0 + s.h >= t
                }
            })
            .min(self.steps.len() - 1);
        self.steps[idx].eval(t, out);
        Ok(())
    }

    /// One component of the state at `t`.
    pub fn component(&self, t: f64, i: usize) -> Result<f64> {
        Ok(self.eval(t)?[i])
    }
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteRhs(t))
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `rhs(t, y, dy)` writes the derivative into `dy`.
pub fn solve_ode<F>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    spec: &OdeSpec,
) -> Result<DenseSolution>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(spec.rel_tol > 0.0 && spec.abs_tol > 0.0) {
        return Err(Error::Invalid("ODE tolerances must be positive".into()));
    }
    let n = y0.len();
    let mut sol = DenseSolution {
        t0,
        t_end,
        y_end: y0.to_vec(),
        steps: Vec::new(),
    };
    if t0 == t_end {
        return Ok(sol);
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1);
    check_finite(t, &k1)?;

    let scale = |yi: f64| spec.abs_tol + spec.rel_tol * yi.abs();
    let mut h = match spec.initial_step {
        Some(h) if h > 0.0 => h.min(span),
        _ => {
            let d0 = (y.iter().map(|v| (v / scale(*v)).powi(2)).sum::<f64>() / n as f64).sqrt();
            let d1 = (k1
                .iter()
                .zip(&y)
                .map(|(k, v)| (k / scale(*v)).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt();
            let h0 = if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            };
            h0.min(span).min(0.1 * span.max(1e-3))
        }
    };

    let mut stage = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut y1 = vec![0.0; n];
    let mut steps = 0usize;
    let mut rejected_last = false;

    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(Error::StepUnderflow(t));
        }
        steps += 1;
        if steps > spec.max_steps {
            return Err(Error::StepUnderflow(t));
        }
        let hs = h * dir;

        for i in 0..n {
            stage[i] = y[i] + hs * A21 * k1[i];
        }
        rhs(t + C2 * hs, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * hs, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * hs, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * hs, &stage, &mut k5);
        for i in 0..n {
            stage[i] =
                y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + hs, &stage, &mut k6);
        for i in 0..n {
            y1[i] =
                y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        rhs(t_new, &y1, &mut k7);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = spec.abs_tol + spec.rel_tol * y[i].abs().max(y1[i].abs());
            err += (e / sk).powi(2);
            finite &= y1[i].is_finite() && k7[i].is_finite();
        }
        let err = (err / n as f64).sqrt();
        if !finite || !err.is_finite() {
            // Shrink aggressively; a persistent failure ends in step underflow.
            h *= 0.1;
            rejected_last = true;
            continue;
        }

        let mut fac = 0.9 * err.powf(-0.2);
        if err <= 1.0 {
            if spec.dense {
                let r1 = y.clone();
                let r2: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
                let r3: Vec<f64> = (0..n).map(|i| hs * k1[i] - r2[i]).collect();
                let r4: Vec<f64> = (0..n).map(|i| r2[i] - hs * k7[i] - r3[i]).collect();
                let r5: Vec<f64> = (0..n)
                    .map(|i| {
                        hs * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i])
                    })
                    .collect();
                sol.steps.push(Step {
                    t0: t,
                    h: hs,
                    coeffs: [r1, r2, r3, r4, r5],
                });
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                break;
            }
            if rejected_last {
                fac = fac.min(1.0);
            }
            rejected_last = false;
            h *= fac.clamp(0.2, 10.0);
        } else {
            rejected_last = true;
            h *= fac.clamp(0.2, 1.0);
        }
    }
    check_finite(t, &y)?;
    sol.y_end = y;
    Ok(sol)
}

/// Solution continued in both directions from an interior initial time.
#[derive(Debug, Clone)]
pub struct TwoSidedSolution {
    t0: f64,
    y0: Vec<f64>,
    backward: DenseSolution,
    forward: DenseSolution,
}

impl TwoSidedSolution {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `(lo, hi)` covered by the solution.
    pub fn interval(&self) -> (f64, f64) {
        (self.backward.t_end(), self.forward.t_end())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if t == self.t0 {
            Ok(self.y0.clone())
        } else if t > self.t0 {
            self.forward.eval(t)
        } else {
            self.backward.eval(t)
        }
    }
}

/// Integrates from `t0` backward to `lo` and forward to `hi`
/// (`lo <= t0 <= hi`).
pub fn solve_ode_two_sided<F>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    (lo, hi): (f64, f64),
    spec: &OdeSpec,
) -> Result<TwoSidedSolution>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(lo <= t0 && t0 <= hi) {
        return Err(Error::Invalid(format!(
            "initial time {t0} outside [{lo}, {hi}]"
        )));
    }
    Ok(TwoSidedSolution {
        t0,
        y0: y0.to_vec(),
        backward: solve_ode(&rhs, t0, y0, lo, spec)?,
        forward: solve_ode(&rhs, t0, y0, hi, spec)?,
    })
}
