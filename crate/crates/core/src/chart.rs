//! The maps `A`, `B`, `T`, `Y` and the chart `Π = P∘T∘Γ` with its inverse.
//!
//! For `(φ, r) ∈ C¹ × (-h, 0)`:
//!
//! * `A(φ, r) = φ - f(φ(r)) χ(φ(r), r)`, `T(φ, r) = (A(φ, r), r)`,
//! * `B(ψ, r) = ψ + f(ψ(r)) χ(ψ(r), r)`, `Y(ψ, r) = (B(ψ, r), r)`.
//!
//! Since `χ(v, r)` vanishes on `[-h, r]`, `A(φ, r)(r) = φ(r)` and `Y` inverts
//! `T`. With `r = d(φ)`, `A(φ, d(φ))'(0) = φ'(0) - F(φ)`, so the solution
//! manifold is carried into `X₀`. The inverse solves `r = d(B(ψ, r))` by
//! fixed-point iteration; on `U_b^×` the map `r ↦ d(B(ψ, r))` has Lipschitz
//! constant at most `1/2` for the bound function chosen by [`ChartAtlas`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::delay::{in_ub, in_ub_times, residual, DelayFunctional, ScalarField};
use crate::error::{Error, Result};
use crate::funcspace::{GridSpec, IntervalFunction};
use crate::transversal::{BoundFunction, TransversalFamily};

pub const MAX_ITERATIONS: usize = 200;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const MANIFOLD_TOL: f64 = 1e-8;

/// An element of `C¹ × (-h, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub phi: IntervalFunction,
    pub r: f64,
}

impl StatePair {
    pub fn new(phi: IntervalFunction, r: f64) -> Result<Self> {
        let h = phi.h();
        if !(r > -h && r < 0.0) {
            return Err(Error::OutOfRange { t: r, lo: -h, hi: 0.0 });
        }
        Ok(Self { phi, r })
    }
}

/// One step of the inverse iteration: `r_k` and `|r_k - r_{k-1}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub r: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct InverseChart {
    pub phi: IntervalFunction,
    pub r: f64,
    /// `|d(B(ψ, r)) - r|` at the returned `r`.
    pub fixed_point_residual: f64,
    pub log: Vec<IterationRecord>,
}

impl InverseChart {
    /// Successive step ratios `|r_{k+1} - r_k| / |r_k - r_{k-1}|`.
    pub fn step_ratios(&self) -> Vec<f64> {
        self.log
            .windows(2)
            .filter(|w| w[0].step > 0.0)
            .map(|w| w[1].step / w[0].step)
            .collect()
    }
}

/// `f`, `d`, `b` and the transversal family with
/// `H(v) = 1 / (2(b+1) c (1 + |f(v)| + |f'(v)|))`, `c = d.ded_bound(b)`.
#[derive(Debug)]
pub struct ChartAtlas {
    f: ScalarField,
    d: Arc<dyn DelayFunctional>,
    b: f64,
    c: f64,
    chi: TransversalFamily,
    grid: GridSpec,
}

impl ChartAtlas {
    pub fn new(f: ScalarField, d: Arc<dyn DelayFunctional>, b: f64, grid: GridSpec) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidDomain(format!("b = {b} must be positive")));
        }
        let c = d.ded_bound(b);
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::ContractViolation(format!(
                "extended derivative bound c = {c} must be positive and finite"
            )));
        }
        let fb = f.clone();
        let bound = BoundFunction::new(move |v| {
            1.0 / (2.0 * (b + 1.0) * c * (1.0 + fb.value(v).abs() + fb.deriv(v).abs()))
        });
        let chi = TransversalFamily::new(d.h(), bound, grid)?;
        Ok(Self {
            f,
            d,
            b,
            c,
            chi,
            grid,
        })
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn delay(&self) -> &dyn DelayFunctional {
        self.d.as_ref()
    }

    pub fn delay_arc(&self) -> Arc<dyn DelayFunctional> {
        Arc::clone(&self.d)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn h(&self) -> f64 {
        self.d.h()
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn family(&self) -> &TransversalFamily {
        &self.chi
    }

    /// `H(v)`.
    pub fn bound_at(&self, v: f64) -> f64 {
        self.chi.bound().value(v)
    }

    /// `φ + sign · f(φ(r)) χ(φ(r), r)`.
    fn shift(&self, phi: &IntervalFunction, r: f64, sign: f64) -> Result<IntervalFunction> {
        if phi.h() != self.h() {
            return Err(Error::IncompatibleDomain(phi.h(), self.h()));
        }
        let v = phi.eval(r)?;
        let chi = self.chi.chi(v, r)?;
        let fv = self.f.value(v);
        if fv == 0.0 {
            return Ok(phi.clone());
        }
        IntervalFunction::axpy(sign * fv, &chi, phi)
    }

    pub fn a_map(&self, phi: &IntervalFunction, r: f64) -> Result<IntervalFunction> {
        self.shift(phi, r, -1.0)
    }

    pub fn b_map(&self, psi: &IntervalFunction, r: f64) -> Result<IntervalFunction> {
        self.shift(psi, r, 1.0)
    }

    pub fn t_map(&self, sp: &StatePair) -> Result<StatePair> {
        Ok(StatePair {
            phi: self.a_map(&sp.phi, sp.r)?,
            r: sp.r,
        })
    }

    pub fn y_map(&self, sp: &StatePair) -> Result<StatePair> {
        Ok(StatePair {
            phi: self.b_map(&sp.phi, sp.r)?,
            r: sp.r,
        })
    }

    /// `Γ(φ) = (φ, d(φ))`.
    pub fn graph(&self, phi: &IntervalFunction) -> Result<StatePair> {
        let r = self.d.eval(phi)?;
        Ok(StatePair { phi: phi.clone(), r })
    }

    pub fn in_ub(&self, phi: &IntervalFunction) -> Result<bool> {
        in_ub(self.d.as_ref(), phi, self.b)
    }

    pub fn in_ub_times(&self, sp: &StatePair) -> Result<bool> {
        in_ub_times(&sp.phi, sp.r, self.b)
    }

    /// `Π(φ) = A(φ, d(φ))` for `φ ∈ U_b`.
    pub fn chart_forward(&self, phi: &IntervalFunction) -> Result<IntervalFunction> {
        let r = self.d.eval(phi)?;
        let max_slope = phi.max_abs_deriv_on(-phi.h(), r);
        if !(max_slope < self.b) {
            return Err(Error::NotInUb {
                b: self.b,
                max_slope,
            });
        }
        self.a_map(phi, r)
    }

    /// `D₂(d∘B)(ψ, r)1 = D_e d(B(ψ, r)) [f'(ψ(r)) ψ'(r) χ + f(ψ(r)) Dχ (ψ'(r), 1)]`.
    pub fn d2db(&self, psi: &IntervalFunction, r: f64) -> Result<f64> {
        let v = psi.eval(r)?;
        let slope = psi.deriv(r);
        let fv = self.f.value(v);
        let dfv = self.f.deriv(v);
        if fv == 0.0 && dfv == 0.0 {
            return Ok(0.0);
        }
        let chi = self.chi.chi(v, r)?;
        let dchi = self.chi.dchi(v, r, slope, 1.0)?;
        let dir = IntervalFunction::lincomb(dfv * slope, &chi, fv, &dchi)?;
        let at = if fv == 0.0 {
            psi.clone()
        } else {
            IntervalFunction::axpy(fv, &chi, psi)?
        };
        self.d.ext_deriv_apply(&at, &dir)
    }

    /// `r ↦ d(B(ψ, r))`.
    pub fn fixed_point_map(&self, psi: &IntervalFunction, r: f64) -> Result<f64> {
        let phi = self.b_map(psi, r)?;
        self.d.eval(&phi).map_err(|e| match e {
            Error::ContractViolation(_) => Error::IterateEscaped(r),
            other => other,
        })
    }

    /// Solve `r = d(B(ψ, r))` from `r₀` (default `-h/2`) and return `(B(ψ, r), r)`.
    pub fn chart_inverse(&self, psi: &IntervalFunction, r0: Option<f64>) -> Result<InverseChart> {
        let h = self.h();
        let mut r = r0.unwrap_or(-h / 2.0);
        if !(r > -h && r < 0.0) {
            return Err(Error::IterateEscaped(r));
        }
        let mut log = vec![IterationRecord {
            k: 0,
            r,
            step: f64::NAN,
        }];
        let mut last_step = f64::INFINITY;
        for k in 1..=MAX_ITERATIONS {
            let next = self.fixed_point_map(psi, r)?;
            if !(next > -h && next < 0.0) {
                return Err(Error::IterateEscaped(next));
            }
            last_step = (next - r).abs();
            r = next;
            log.push(IterationRecord {
                k,
                r,
                step: last_step,
            });
            if last_step <= FIXED_POINT_TOL {
                let phi = self.b_map(psi, r)?;
                let d_phi = self.d.eval(&phi)?;
                let max_slope = phi.max_abs_deriv_on(-h, d_phi);
                if !(max_slope < self.b) {
                    return Err(Error::NotInImage(format!(
                        "B(psi, r) has max |phi'| = {max_slope} >= b = {} on [-h, {d_phi}]",
                        self.b
                    )));
                }
                return Ok(InverseChart {
                    phi,
                    r,
                    fixed_point_residual: (d_phi - r).abs(),
                    log,
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            last_step,
        })
    }

    /// Inverse chart on `X₀`: a point of `X_{F,b}`.
    ///
    /// `|ψ'(0)| ≤ x0_tol` is required and `|φ'(0) - F(φ)| ≤ residual_tol` checked.
    pub fn chart_manifold_with(
        &self,
        psi: &IntervalFunction,
        x0_tol: f64,
        residual_tol: f64,
    ) -> Result<IntervalFunction> {
        let slope0 = psi.deriv(0.0);
        if !(slope0.abs() <= x0_tol) {
            return Err(Error::NotInX0(slope0));
        }
        let inv = self.chart_inverse(psi, None)?;
        let res = residual(&self.f, self.d.as_ref(), &inv.phi)?;
        if !(res.abs() <= residual_tol) {
            return Err(Error::ResidualTooLarge(res));
        }
        Ok(inv.phi)
    }

    pub fn chart_manifold(&self, psi: &IntervalFunction) -> Result<IntervalFunction> {
        self.chart_manifold_with(psi, MANIFOLD_TOL, MANIFOLD_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::IntegralDelay;

    fn atlas(f: ScalarField) -> ChartAtlas {
        let d = Arc::new(IntegralDelay::reference(1.0).unwrap());
        ChartAtlas::new(f, d, 1.0, GridSpec::default()).unwrap()
    }

    fn wave() -> IntervalFunction {
        IntervalFunction::fit(
            1.0,
            GridSpec::default(),
            |t| 0.3 + 0.2 * (3.0 * t).sin(),
            |t| 0.6 * (3.0 * t).cos(),
        )
        .unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let a = atlas(ScalarField::zero());
        let phi = wave();
        assert_eq!(a.a_map(&phi, -0.4).unwrap(), phi);
        assert_eq!(a.b_map(&phi, -0.4).unwrap(), phi);
        assert_eq!(a.chart_forward(&phi).unwrap(), phi);
        let d2 = a.d2db(&phi, -0.4).unwrap();
        assert_eq!(d2, 0.0);
        let inv = a.chart_inverse(&phi, None).unwrap();
        assert_eq!(inv.phi, phi);
        assert_eq!(inv.log.len(), 3);
        assert!((inv.r - a.delay().eval(&phi).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn reference_bound_constant() {
        let a = atlas(ScalarField::sin());
        assert!((a.c() - 0.25).abs() < 1e-15);
        // 1 / (2·2·0.25·(1 + 0 + 1)) at v = 0
        assert!((a.bound_at(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn maps_invert_each_other() {
        let a = atlas(ScalarField::sin());
        let phi = wave();
        for &r in &[-0.9, -0.5, -0.2, -0.05] {
            let psi = a.a_map(&phi, r).unwrap();
            assert_eq!(psi.value(r), phi.value(r));
            for &t in phi.nodes().iter().filter(|&&t| t <= r) {
                assert_eq!(psi.value(t), phi.value(t));
            }
            let back = a.b_map(&psi, r).unwrap();
            assert!(back.distance_c1(&phi).unwrap() < 1e-10);
        }
    }

    #[test]
    fn chart_roundtrip() {
        let a = atlas(ScalarField::sin());
        let phi = wave();
        let psi = a.chart_forward(&phi).unwrap();
        let inv = a.chart_inverse(&psi, None).unwrap();
        let r = a.delay().eval(&phi).unwrap();
        assert!((inv.r - r).abs() < 1e-10);
        assert!(inv.phi.distance_c1(&phi).unwrap() < 1e-8);
        assert!(inv.step_ratios().iter().all(|&q| q <= 0.5));
    }

    #[test]
    fn forward_requires_ub() {
        let a = atlas(ScalarField::sin());
        let steep = IntervalFunction::fit(1.0, GridSpec::default(), |t| 2.0 * t, |_| 2.0).unwrap();
        assert!(matches!(a.chart_forward(&steep), Err(Error::NotInUb { .. })));
    }

    #[test]
    fn zero_is_fixed() {
        let a = atlas(ScalarField::sin());
        let zero = IntervalFunction::zero(1.0, GridSpec::default()).unwrap();
        assert_eq!(a.chart_forward(&zero).unwrap(), zero);
        assert_eq!(a.chart_manifold(&zero).unwrap(), zero);
    }
}
