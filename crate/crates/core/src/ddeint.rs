//! Method of steps for `x'(t) = f(x(t + d(x_t)))` with a dense C¹ history.
//!
//! The history is one piecewise cubic Hermite function on `[-h, t_end]`.
//! The right-hand side reads the state only through the history, so the two
//! midpoint stages of the classical Runge–Kutta scheme coincide and a step is
//! Simpson's rule `x₊ = x + dt (k₁ + 4k₂ + k₄)/6`. Stages whose delayed
//! argument falls into the step being computed read a provisional Hermite
//! piece, refined by `K_corr` corrector passes.

use serde::Serialize;

use crate::delay::{residual, DelayFunctional, ScalarField};
use crate::error::{Error, Result};
use crate::funcspace::{hermite_deriv, hermite_value, locate, GridSpec, IntervalFunction};

pub const DEFAULT_CORRECTIONS: usize = 3;
/// Residual of the initial segment above which integration warns.
pub const COMPATIBILITY_TOL: f64 = 1e-6;
/// Largest last corrector update, relative to `max(1, |x|)`, accepted for a step.
const CORRECTOR_TOL: f64 = 1e-6;

/// Dense solution `x : [-h, t_end] → ℝ`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    h: f64,
    dt: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    initial: IntervalFunction,
    /// Index of the node `t = 0`.
    origin: usize,
    /// `φ₀'(0) - F(φ₀)` at the start.
    initial_residual: f64,
}

/// Node data of the history together with `d(x_t)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub dx: f64,
    pub delay: f64,
    pub residual: f64,
}

impl Trajectory {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn initial(&self) -> &IntervalFunction {
        &self.initial
    }

    pub fn initial_residual(&self) -> f64 {
        self.initial_residual
    }

    /// Step times `0, dt, …, t_end`.
    pub fn step_times(&self) -> &[f64] {
        &self.times[self.origin..]
    }

    pub fn value(&self, t: f64) -> f64 {
        eval_dense(&self.times, &self.values, &self.derivs, t).0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        eval_dense(&self.times, &self.values, &self.derivs, t).1
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return Err(Error::OutOfRange {
                t,
                lo: 0.0,
                hi: self.t_end(),
            });
        }
        Ok(())
    }

    /// `x_t` on `[-h, 0]`: the history nodes inside `[t - h, t]`, shifted.
    ///
    /// The pieces of the segment are exactly the pieces of the history.
    pub fn segment(&self, t: f64) -> Result<IntervalFunction> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        window(
            &self.times,
            &self.values,
            &self.derivs,
            t,
            self.h,
            self.initial.samples(),
        )
    }

    /// `x_t` re-interpolated on the uniform grid.
    pub fn segment_on_grid(&self, t: f64, grid: GridSpec) -> Result<IntervalFunction> {
        self.check_time(t)?;
        let nodes = grid.uniform_nodes(self.h);
        let values = nodes.iter().map(|&s| self.value(t + s)).collect();
        let derivs = nodes.iter().map(|&s| self.deriv(t + s)).collect();
        IntervalFunction::from_data(self.h, nodes, values, derivs, grid.samples)
    }

    /// Largest jump of `x'` across a step node, comparing the one-sided
    /// derivatives of the two adjacent Hermite pieces.
    pub fn max_derivative_jump(&self) -> f64 {
        let (t, v, d) = (&self.times, &self.values, &self.derivs);
        (self.origin.max(1)..t.len() - 1)
            .map(|i| {
                let left = hermite_deriv(v[i - 1], d[i - 1], v[i], d[i], t[i] - t[i - 1], 1.0);
                let right = hermite_deriv(v[i], d[i], v[i + 1], d[i + 1], t[i + 1] - t[i], 0.0);
                (right - left).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One row per step node.
    pub fn rows(&self, f: &ScalarField, d: &dyn DelayFunctional) -> Result<Vec<TrajectoryRow>> {
        self.step_times()
            .iter()
            .map(|&t| {
                let seg = self.segment(t)?;
                Ok(TrajectoryRow {
                    t,
                    x: seg.value(0.0),
                    dx: seg.deriv(0.0),
                    delay: d.eval(&seg)?,
                    residual: residual(f, d, &seg)?,
                })
            })
            .collect()
    }
}

fn eval_dense(times: &[f64], values: &[f64], derivs: &[f64], t: f64) -> (f64, f64) {
    let i = locate(times, t);
    let (a, b) = (times[i], times[i + 1]);
    let dt = b - a;
    let s = ((t - a) / dt).clamp(0.0, 1.0);
    if t == a {
        return (values[i], derivs[i]);
    }
    if t == b {
        return (values[i + 1], derivs[i + 1]);
    }
    (
        hermite_value(values[i], derivs[i], values[i + 1], derivs[i + 1], dt, s),
        hermite_deriv(values[i], derivs[i], values[i + 1], derivs[i + 1], dt, s),
    )
}

/// Segment of the dense data at time `t` (the data must reach `t`).
fn window(
    times: &[f64],
    values: &[f64],
    derivs: &[f64],
    t: f64,
    h: f64,
    samples: usize,
) -> Result<IntervalFunction> {
    let lo = t - h;
    let tol = 1e-14 * h;
    let first = times.partition_point(|&x| x <= lo + tol);
    let last = times.partition_point(|&x| x < t - tol);
    let mut nodes = Vec::with_capacity(last - first + 2);
    let mut vals = Vec::with_capacity(last - first + 2);
    let mut ders = Vec::with_capacity(last - first + 2);
    let (v0, d0) = eval_dense(times, values, derivs, lo);
    nodes.push(-h);
    vals.push(v0);
    ders.push(d0);
    for i in first..last {
        nodes.push(times[i] - t);
        vals.push(values[i]);
        ders.push(derivs[i]);
    }
    let (v1, d1) = eval_dense(times, values, derivs, t);
    nodes.push(0.0);
    vals.push(v1);
    ders.push(d1);
    IntervalFunction::from_data(h, nodes, vals, ders, samples)
}

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    pub t_end: f64,
    pub dt: f64,
    pub corrections: usize,
}

impl StepConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            corrections: DEFAULT_CORRECTIONS,
        }
    }
}

struct Stepper<'a> {
    f: &'a ScalarField,
    d: &'a dyn DelayFunctional,
    h: f64,
    samples: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl Stepper<'_> {
    /// `f(x(τ + d(x_τ)))` from the current data, which must reach `τ`.
    fn stage(&self, tau: f64) -> Result<f64> {
        let seg = window(&self.times, &self.values, &self.derivs, tau, self.h, self.samples)?;
        let r = self.d.eval(&seg)?;
        if !(r < 0.0) {
            return Err(Error::ContractViolation(format!(
                "delayed argument {} not before stage time {tau}",
                tau + r
            )));
        }
        Ok(self.f.value(seg.value(r)))
    }

    fn set_last(&mut self, x: f64, dx: f64) {
        let n = self.values.len() - 1;
        self.values[n] = x;
        self.derivs[n] = dx;
    }

    fn step(&mut self, t: f64, dt: f64, corrections: usize) -> Result<()> {
        let n = self.values.len() - 1;
        let (x, k1) = (self.values[n], self.derivs[n]);
        let next = t + dt;
        self.times.push(next);
        self.values.push(x + dt * k1);
        self.derivs.push(k1);
        let mut change = f64::INFINITY;
        for _ in 0..corrections.max(1) {
            let k2 = self.stage(t + 0.5 * dt)?;
            let k4 = self.stage(next)?;
            let x_new = x + dt * (k1 + 4.0 * k2 + k4) / 6.0;
            change = (x_new - self.values[n + 1]).abs();
            self.set_last(x_new, k4);
        }
        let x_new = self.values[n + 1];
        if change > CORRECTOR_TOL * x_new.abs().max(1.0) {
            return Err(Error::StepSizeTooLarge {
                t,
                reason: format!("corrector still moving by {change:e}"),
            });
        }
        let slope = self.stage(next)?;
        self.set_last(x_new, slope);
        Ok(())
    }
}

/// Integrate from `φ₀` up to `t_end` with fixed steps `dt`.
///
/// A nonzero residual of `φ₀` larger than [`COMPATIBILITY_TOL`] is reported
/// in the trajectory but does not stop the integration.
pub fn integrate(
    f: &ScalarField,
    d: &dyn DelayFunctional,
    phi0: &IntervalFunction,
    cfg: StepConfig,
) -> Result<Trajectory> {
    let h = phi0.h();
    if d.h() != h {
        return Err(Error::IncompatibleDomain(h, d.h()));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidDomain(format!("dt = {} must be positive", cfg.dt)));
    }
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::InvalidDomain(format!("t_end = {} must be non-negative", cfg.t_end)));
    }
    let initial_residual = residual(f, d, phi0)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut st = Stepper {
        f,
        d,
        h,
        samples: phi0.samples(),
        times: phi0.nodes().to_vec(),
        values: phi0.values().to_vec(),
        derivs: phi0.derivs().to_vec(),
    };
    let origin = st.times.len() - 1;
    st.times.reserve(steps);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let dt = if k + 1 == steps { cfg.t_end - t } else { cfg.dt };
        st.step(t, dt, cfg.corrections)?;
    }
    Ok(Trajectory {
        h,
        dt: cfg.dt,
        times: st.times,
        values: st.values,
        derivs: st.derivs,
        initial: phi0.clone(),
        origin,
        initial_residual,
    })
}

/// `φ'(0) - F(φ)` for `φ = x_t` at each sample time.
pub fn manifold_residual_along(
    traj: &Trajectory,
    f: &ScalarField,
    d: &dyn DelayFunctional,
    sample_times: &[f64],
) -> Result<Vec<f64>> {
    sample_times
        .iter()
        .map(|&t| residual(f, d, &traj.segment(t)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::IntegralDelay;

    fn d() -> IntegralDelay {
        IntegralDelay::reference(1.0).unwrap()
    }

    #[test]
    fn equilibrium_stays() {
        let zero = IntervalFunction::zero(1.0, GridSpec::default()).unwrap();
        let tr = integrate(&ScalarField::sin(), &d(), &zero, StepConfig::new(0.5, 0.01)).unwrap();
        assert!(tr.step_times().iter().all(|&t| tr.value(t) == 0.0));
        let res = manifold_residual_along(&tr, &ScalarField::sin(), &d(), &[0.0, 0.25, 0.5]).unwrap();
        assert!(res.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constant_field_is_linear() {
        let g = 0.7;
        let phi0 = IntervalFunction::fit(1.0, GridSpec::default(), |t| 0.2 + g * t, |_| g).unwrap();
        let f = ScalarField::constant(g);
        let tr = integrate(&f, &d(), &phi0, StepConfig::new(1.5, 0.01)).unwrap();
        for &t in tr.step_times() {
            assert!((tr.value(t) - (0.2 + g * t)).abs() < 1e-12);
        }
        let seg = tr.segment(1.234).unwrap();
        for &s in seg.nodes() {
            assert!((seg.value(s) - (0.2 + g * (1.234 + s))).abs() < 1e-12);
        }
        let res = manifold_residual_along(&tr, &f, &d(), &[0.3, 0.77, 1.5]).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn segment_at_zero_is_initial() {
        let phi0 = IntervalFunction::fit(1.0, GridSpec::default(), |t| 1.0 + 0.1 * t, |_| 0.1).unwrap();
        let tr = integrate(&ScalarField::zero(), &d(), &phi0, StepConfig::new(0.1, 0.01)).unwrap();
        assert_eq!(tr.segment(0.0).unwrap(), phi0);
        assert!(tr.segment(0.2).is_err());
        assert!((tr.initial_residual() - 0.1).abs() < 1e-15);
    }
}
