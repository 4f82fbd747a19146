//! Delay functionals `d : C¹ → (-h, 0)`, the right-hand side
//! `F(φ) = f(φ(d(φ)))`, its derivative, and the open sets `U_b`, `U_b^×`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::{merge_nodes, same_domain, IntervalFunction};
use crate::quadrature::{gauss_legendre_8, integrate_panels};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function together with its derivative, both in closed form.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    value: RealFn,
    deriv: RealFn,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("name", &self.name).finish()
    }
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            deriv: Arc::new(deriv),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn sin() -> Self {
        Self::new("sin", f64::sin, f64::cos)
    }

    pub fn square() -> Self {
        Self::new("square", |x| x * x, |x| 2.0 * x)
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x, |_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c, |_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `Σ coefficients[k] x^k`.
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        let c = Arc::new(coefficients);
        let cd = Arc::clone(&c);
        Self::new(
            format!("polynomial({:?})", c),
            move |x| c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            move |x| {
                cd.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a)
            },
        )
    }

    /// `δ(w) = -h / (1 + e^{w})`: maps ℝ onto `(-h, 0)`, increasing, `sup |δ'| = h/4`.
    pub fn logistic_delay(h: f64) -> Self {
        Self::scaled_logistic_delay(h, 1.0, 0.0)
    }

    /// `δ(w) = -h / (1 + e^{rate (w - shift)})`; `sup |δ'| = h·rate/4`.
    pub fn scaled_logistic_delay(h: f64, rate: f64, shift: f64) -> Self {
        Self::new(
            format!("logistic(h={h}, rate={rate}, shift={shift})"),
            move |w| {
                let z = rate * (w - shift);
                if z > 0.0 {
                    let e = (-z).exp();
                    -h * e / (1.0 + e)
                } else {
                    -h / (1.0 + z.exp())
                }
            },
            move |w| {
                let z = rate * (w - shift);
                let e = (-z.abs()).exp();
                h * rate * e / ((1.0 + e) * (1.0 + e))
            },
        )
    }

    /// `v(y) = 0` for `y ≤ 0` and `scale·(y - ln(1 + y))` for `y > 0`.
    ///
    /// C¹, `v' = scale·y/(1+y) ∈ (0, scale)` on `(0, ∞)`, and `v(y) → ∞`.
    pub fn log_ramp(scale: f64) -> Self {
        Self::new(
            format!("log-ramp(scale={scale})"),
            move |y| if y > 0.0 { scale * (y - y.ln_1p()) } else { 0.0 },
            move |y| if y > 0.0 { scale * y / (1.0 + y) } else { 0.0 },
        )
    }

    /// Largest relative mismatch between `deriv` and a central difference
    /// with step `1e-5`, over `points`; relative to `max(1, |deriv|)`.
    pub fn derivative_mismatch(&self, points: &[f64]) -> f64 {
        let step = 1e-5;
        points
            .iter()
            .map(|&x| {
                let fd = (self.value(x + step) - self.value(x - step)) / (2.0 * step);
                let d = self.deriv(x);
                (fd - d).abs() / d.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Check the derivative pairing at `points` (relative error ≤ 1e-6).
    pub fn check_derivative(&self, points: &[f64]) -> Result<()> {
        let worst = self.derivative_mismatch(points);
        if worst > 1e-6 {
            return Err(Error::ContractViolation(format!(
                "derivative of {} mismatches finite differences (rel. error {worst:e})",
                self.name
            )));
        }
        Ok(())
    }

    /// `max |value|` over `samples + 1` equispaced points of `[lo, hi]`.
    pub fn sampled_sup(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|k| self.value(lo + (hi - lo) * k as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `max |deriv|` over `samples + 1` equispaced points of `[lo, hi]`.
    pub fn sampled_deriv_sup(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|k| self.deriv(lo + (hi - lo) * k as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Strict monotonicity on `samples + 1` equispaced points of `[lo, hi]`.
    pub fn is_strictly_monotone_on(&self, lo: f64, hi: f64, samples: usize) -> bool {
        let vals: Vec<f64> = (0..=samples)
            .map(|k| self.value(lo + (hi - lo) * k as f64 / samples as f64))
            .collect();
        vals.windows(2).all(|w| w[1] > w[0]) || vals.windows(2).all(|w| w[1] < w[0])
    }
}

/// A continuously differentiable delay functional with a continuous linear
/// extension of its derivative from C¹ to C.
pub trait DelayFunctional: Send + Sync + fmt::Debug {
    fn h(&self) -> f64;

    /// `d(φ) ∈ (-h, 0)`.
    fn eval(&self, phi: &IntervalFunction) -> Result<f64>;

    /// `D_e d(φ) χ`, using only the values of `dir`.
    fn ext_deriv_apply(&self, phi: &IntervalFunction, dir: &IntervalFunction) -> Result<f64>;

    /// `Dd(φ) χ` for a C¹ direction.
    fn deriv_apply(&self, phi: &IntervalFunction, dir: &IntervalFunction) -> Result<f64> {
        self.ext_deriv_apply(phi, dir)
    }

    /// Upper bound for `|D_e d(φ)|_{L(C, ℝ)}` over `{φ : |φ'(-h)| < b}`.
    fn ded_bound(&self, b: f64) -> f64;

    /// `d(plus) - d(minus)`.
    fn difference(&self, plus: &IntervalFunction, minus: &IntervalFunction) -> Result<f64> {
        Ok(self.eval(plus)? - self.eval(minus)?)
    }
}

/// `d(φ) = δ(∫_{-h}^0 w(t) v(φ(t)) dt)` with weight `w ≡ 1` unless given.
///
/// The integral uses the 8-point Gauss–Legendre rule on every Hermite piece
/// of the integrand's node set, each piece split into `subdivisions` parts.
#[derive(Debug, Clone)]
pub struct IntegralDelay {
    h: f64,
    delta: ScalarField,
    v: ScalarField,
    delta_deriv_sup: f64,
    v_deriv_sup: f64,
    weight: Option<IntervalFunction>,
    weight_l1_bound: f64,
    subdivisions: usize,
}

impl IntegralDelay {
    /// `delta_deriv_sup` and `v_deriv_sup` are certified bounds for `sup |δ'|`, `sup |v'|`.
    pub fn new(
        h: f64,
        delta: ScalarField,
        v: ScalarField,
        delta_deriv_sup: f64,
        v_deriv_sup: f64,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidDomain(format!("h = {h} must be positive")));
        }
        if !(delta_deriv_sup >= 0.0 && v_deriv_sup >= 0.0)
            || !delta_deriv_sup.is_finite()
            || !v_deriv_sup.is_finite()
        {
            return Err(Error::ContractViolation(
                "derivative bounds must be finite and non-negative".into(),
            ));
        }
        // range check of δ on a sample of arguments (δ saturates in floating point far out)
        for k in 0..=2000 {
            let w = -30.0 + 0.03 * k as f64;
            let d = delta.value(w);
            if !(d > -h && d < 0.0) {
                return Err(Error::ContractViolation(format!(
                    "delta({w}) = {d} outside (-{h}, 0)"
                )));
            }
        }
        Ok(Self {
            h,
            delta,
            v,
            delta_deriv_sup,
            v_deriv_sup,
            weight: None,
            weight_l1_bound: h,
            subdivisions: 1,
        })
    }

    /// Logistic `δ` and log-ramp `v`; bound `h · h/4 · 1`.
    pub fn reference(h: f64) -> Result<Self> {
        Self::new(
            h,
            ScalarField::logistic_delay(h),
            ScalarField::log_ramp(1.0),
            h / 4.0,
            1.0,
        )
    }

    /// Use a grid-defined weight `w` inside the integral.
    pub fn with_weight(mut self, weight: IntervalFunction) -> Result<Self> {
        if weight.h() != self.h {
            return Err(Error::IncompatibleDomain(weight.h(), self.h));
        }
        // ∫|w| with a 10% margin; |w| has kinks where w changes sign
        let l1 = integrate_panels(weight.nodes(), 4, |t| weight.value(t).abs());
        self.weight_l1_bound = 1.1 * l1;
        self.weight = Some(weight);
        Ok(self)
    }

    pub fn with_subdivisions(mut self, subdivisions: usize) -> Self {
        self.subdivisions = subdivisions.max(1);
        self
    }

    pub fn delta(&self) -> &ScalarField {
        &self.delta
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    pub fn delta_deriv_sup(&self) -> f64 {
        self.delta_deriv_sup
    }

    pub fn v_deriv_sup(&self) -> f64 {
        self.v_deriv_sup
    }

    #[inline]
    fn weight_at(&self, t: f64) -> f64 {
        self.weight.as_ref().map_or(1.0, |w| w.value(t))
    }

    fn breaks(&self, a: &IntervalFunction, b: Option<&IntervalFunction>) -> Vec<f64> {
        let mut nodes = match b {
            Some(b) => merge_nodes(a.nodes(), b.nodes(), self.h),
            None => a.nodes().to_vec(),
        };
        if let Some(w) = &self.weight {
            nodes = merge_nodes(&nodes, w.nodes(), self.h);
        }
        nodes
    }

    /// `∫_{-h}^0 w(t) v(φ(t)) dt`.
    pub fn inner_integral(&self, phi: &IntervalFunction) -> Result<f64> {
        if phi.h() != self.h {
            return Err(Error::IncompatibleDomain(phi.h(), self.h));
        }
        let breaks = self.breaks(phi, None);
        Ok(integrate_panels(&breaks, self.subdivisions, |t| {
            self.weight_at(t) * self.v.value(phi.value(t))
        }))
    }
}

impl DelayFunctional for IntegralDelay {
    fn h(&self) -> f64 {
        self.h
    }

    fn eval(&self, phi: &IntervalFunction) -> Result<f64> {
        let w = self.inner_integral(phi)?;
        let d = self.delta.value(w);
        if !(d > -self.h && d < 0.0) {
            return Err(Error::ContractViolation(format!(
                "d(phi) = {d} outside (-{}, 0)",
                self.h
            )));
        }
        Ok(d)
    }

    fn ext_deriv_apply(&self, phi: &IntervalFunction, dir: &IntervalFunction) -> Result<f64> {
        same_domain(phi, dir)?;
        let w = self.inner_integral(phi)?;
        let breaks = self.breaks(phi, Some(dir));
        let lin = integrate_panels(&breaks, self.subdivisions, |t| {
            self.weight_at(t) * self.v.deriv(phi.value(t)) * dir.value(t)
        });
        Ok(self.delta.deriv(w) * lin)
    }

    fn ded_bound(&self, _b: f64) -> f64 {
        self.weight_l1_bound * self.delta_deriv_sup * self.v_deriv_sup
    }

    /// `d(plus) - d(minus)` without cancellation: the inner integrals are
    /// differenced under the integral sign and `δ` is differenced through
    /// `∫ δ'` over the short interval between the two arguments.
    fn difference(&self, plus: &IntervalFunction, minus: &IntervalFunction) -> Result<f64> {
        same_domain(plus, minus)?;
        if minus.h() != self.h {
            return Err(Error::IncompatibleDomain(minus.h(), self.h));
        }
        let breaks = self.breaks(plus, Some(minus));
        let dw = integrate_panels(&breaks, self.subdivisions, |t| {
            self.weight_at(t) * (self.v.value(plus.value(t)) - self.v.value(minus.value(t)))
        });
        let w = self.inner_integral(minus)?;
        Ok(gauss_legendre_8(0.0, dw, &|s| self.delta.deriv(w + s)))
    }
}

/// `F(φ) = f(φ(d(φ)))`.
pub fn rhs(f: &ScalarField, d: &dyn DelayFunctional, phi: &IntervalFunction) -> Result<f64> {
    let r = d.eval(phi)?;
    Ok(f.value(phi.value(r)))
}

/// `DF(φ)χ = f'(φ(d(φ))) [χ(d(φ)) + φ'(d(φ)) Dd(φ)χ]`.
///
/// With `extended`, `Dd(φ)` is replaced by its extension `D_e d(φ)` and `dir`
/// is only used through its values.
pub fn rhs_deriv(
    f: &ScalarField,
    d: &dyn DelayFunctional,
    phi: &IntervalFunction,
    dir: &IntervalFunction,
    extended: bool,
) -> Result<f64> {
    same_domain(phi, dir)?;
    let r = d.eval(phi)?;
    let dd = if extended {
        d.ext_deriv_apply(phi, dir)?
    } else {
        d.deriv_apply(phi, dir)?
    };
    Ok(f.deriv(phi.value(r)) * (dir.value(r) + phi.deriv(r) * dd))
}

/// `φ'(0) - F(φ)`; zero exactly on the solution manifold.
pub fn residual(f: &ScalarField, d: &dyn DelayFunctional, phi: &IntervalFunction) -> Result<f64> {
    Ok(phi.deriv(0.0) - rhs(f, d, phi)?)
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::InvalidDomain(format!("b = {b} must be positive")));
    }
    Ok(())
}

/// `φ ∈ U_b`: `|φ'| < b` on `[-h, d(φ)]` (sampled, strict).
pub fn in_ub(d: &dyn DelayFunctional, phi: &IntervalFunction, b: f64) -> Result<bool> {
    check_b(b)?;
    let r = d.eval(phi)?;
    Ok(phi.max_abs_deriv_on(-phi.h(), r) < b)
}

/// `(φ, r) ∈ U_b^×`: `-h < r < 0` and `|φ'| < b` on `[-h, r]` (sampled, strict).
pub fn in_ub_times(phi: &IntervalFunction, r: f64, b: f64) -> Result<bool> {
    check_b(b)?;
    if !(r > -phi.h() && r < 0.0) {
        return Ok(false);
    }
    Ok(phi.max_abs_deriv_on(-phi.h(), r) < b)
}
