//! Continuously differentiable families of transversals `χ : ℝ × (-h, 0) → C¹`
//! to the flat space `X₀ = {φ : φ'(0) = 0}`.
//!
//! [`TransversalFamily`] builds `χ` with
//!
//! * `χ(v, r)'(0) = 1`,
//! * `χ(v, r)(t) = 0` for `t ∈ [-h, r]`,
//! * `|χ(v, r)|_C ≤ H(v)` and `|D(I∘χ)(v, r)|_{L(ℝ², C)} ≤ H(v)`,
//!
//! for a prescribed positive bound function `H`. It is glued from quadratic
//! bumps `ψₙ` supported near `t = 0` by smooth cutoffs `aₙ` that switch between
//! nested rectangles exhausting `ℝ × (-h, 0)`.

use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::funcspace::{GridSpec, IntervalFunction};

/// Points used to sample `H` on `[-n-2, n+2]`.
const BOUND_SAMPLES: usize = 10_000;
/// Safety factor applied to the sampled minimum of `H`.
const BOUND_SAFETY: f64 = 0.9;
/// Largest rectangle index the family will build.
const MAX_LEVEL: usize = 1_000_000;

/// A continuous positive function `H : ℝ → (0, ∞)`.
#[derive(Clone)]
pub struct BoundFunction(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for BoundFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundFunction")
    }
}

impl BoundFunction {
    pub fn new(h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(h))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    #[inline]
    pub fn value(&self, v: f64) -> f64 {
        (self.0)(v)
    }
}

/// The open rectangle `(-m, m) × (-h + h/(3m), -h/(3m))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub v_half: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Rect {
    pub fn new(h: f64, m: f64) -> Self {
        Self {
            v_half: m,
            r_lo: -h + h / (3.0 * m),
            r_hi: -h / (3.0 * m),
        }
    }

    pub fn contains(&self, v: f64, r: f64) -> bool {
        v.abs() < self.v_half && r > self.r_lo && r < self.r_hi
    }

    pub fn closure_contains(&self, v: f64, r: f64) -> bool {
        v.abs() <= self.v_half && r >= self.r_lo && r <= self.r_hi
    }

    /// `cl self ⊂ other`.
    pub fn compactly_inside(&self, other: &Rect) -> bool {
        self.v_half < other.v_half && self.r_lo > other.r_lo && self.r_hi < other.r_hi
    }
}

/// `rect(h, m)`; `U_n = rect(n)`, `U_{n,0} = rect(n + 1/3)`, `U_{n,1} = rect(n + 2/3)`.
pub fn rect(h: f64, m: f64) -> Result<Rect> {
    if !(m >= 1.0) {
        return Err(Error::InvalidDomain(format!("rectangle index {m} < 1")));
    }
    Ok(Rect::new(h, m))
}

/// The affine transversal `χ(v, r)(t) = t - r`, independent of `v`.
pub fn affine_chi(_v: f64, r: f64, h: f64, grid: GridSpec) -> Result<IntervalFunction> {
    if !(r > -h && r < 0.0) {
        return Err(Error::OutOfRange { t: r, lo: -h, hi: 0.0 });
    }
    IntervalFunction::fit(h, grid, |t| t - r, |_| 1.0)
}

/// A C¹ bump with `ψ'(0) = 1`, `ψ = 0` on `[-h, z]` and `|ψ|_C < ε`.
///
/// With `z* = max(z, -ε)`, `ψ(t) = (t - z*)² / (2|z*|)` on `[z*, 0]` and zero
/// before; so `|ψ|_C = |z*|/2`. The nodes are `{-h, z, z*, 0}`, which makes
/// the Hermite representation exact.
pub fn bump_psi(h: f64, z: f64, eps: f64, samples: usize) -> Result<IntervalFunction> {
    if !(z > -h && z < 0.0) {
        return Err(Error::OutOfRange { t: z, lo: -h, hi: 0.0 });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidDomain(format!("bump size {eps} must be positive")));
    }
    let zs = z.max(-eps);
    let mut nodes = vec![-h, z, zs, 0.0];
    nodes.dedup();
    let n = nodes.len();
    let mut values = vec![0.0; n];
    let mut derivs = vec![0.0; n];
    values[n - 1] = -zs / 2.0;
    derivs[n - 1] = 1.0;
    IntervalFunction::from_data(h, nodes, values, derivs, samples)
}

/// `ρ(s) = 3s² - 2s³` clamped to `[0, 1]`, with derivative.
#[inline]
fn smoothstep(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
    }
}

/// Cutoff `aₙ`: one on `U_{n,0}`, zero off `cl U_{n,1}`, a tensor product of
/// two smoothstep ramps across the bands between the two rectangles.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub n: usize,
    pub inner: Rect,
    pub outer: Rect,
}

impl Cutoff {
    pub fn new(h: f64, n: usize) -> Self {
        let n_f = n as f64;
        Self {
            n,
            inner: Rect::new(h, n_f + 1.0 / 3.0),
            outer: Rect::new(h, n_f + 2.0 / 3.0),
        }
    }

    /// Width of the `v`-transition band.
    pub fn gap_v(&self) -> f64 {
        self.outer.v_half - self.inner.v_half
    }

    /// Width of each of the two `r`-transition bands.
    pub fn gap_r(&self) -> f64 {
        self.inner.r_lo - self.outer.r_lo
    }

    /// `(aₙ(v, r), ∇aₙ(v, r))`.
    pub fn value_grad(&self, v: f64, r: f64) -> (f64, [f64; 2]) {
        let gv = self.gap_v();
        let (rho_v, drho_v) = smoothstep((self.outer.v_half - v.abs()) / gv);
        let dv = -v.signum() * drho_v / gv;

        let gl = self.inner.r_lo - self.outer.r_lo;
        let gu = self.outer.r_hi - self.inner.r_hi;
        let (rho_r, dr) = if r < self.inner.r_lo {
            let (p, dp) = smoothstep((r - self.outer.r_lo) / gl);
            (p, dp / gl)
        } else if r > self.inner.r_hi {
            let (p, dp) = smoothstep((self.outer.r_hi - r) / gu);
            (p, -dp / gu)
        } else {
            (1.0, 0.0)
        };
        (rho_v * rho_r, [dv * rho_r, rho_v * dr])
    }

    pub fn value(&self, v: f64, r: f64) -> f64 {
        self.value_grad(v, r).0
    }

    /// `√((1.5/gap_v)² + (1.5/gap_r)²) ≥ sup |∇aₙ|`.
    pub fn gradient_bound(&self) -> f64 {
        let gl = self.inner.r_lo - self.outer.r_lo;
        let gu = self.outer.r_hi - self.inner.r_hi;
        let gr = gl.min(gu);
        (1.5 / self.gap_v()).hypot(1.5 / gr)
    }
}

/// Per-index data of the construction.
#[derive(Debug, Clone)]
pub struct Level {
    pub n: usize,
    /// `Aₙ`, increasing.
    pub a_bound: f64,
    /// `Hₙ`, a lower bound for `H` on `[-n-2, n+2]`.
    pub h_min: f64,
    /// `εₙ = Hₙ / (1 + 2Aₙ)`, decreasing.
    pub eps: f64,
    /// Support cut `zₙ = -h / (3(n + 2))`.
    pub z: f64,
    pub psi: IntervalFunction,
}

/// The family `χ` for a given bound function `H`.
///
/// Level data is built on demand and memoized behind a lock; evaluation
/// after that is read-only.
pub struct TransversalFamily {
    h: f64,
    bound: BoundFunction,
    samples: usize,
    levels: RwLock<Vec<Arc<Level>>>,
}

impl fmt::Debug for TransversalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransversalFamily")
            .field("h", &self.h)
            .field("levels", &self.levels.read().map(|l| l.len()).unwrap_or(0))
            .finish()
    }
}

impl TransversalFamily {
    pub fn new(h: f64, bound: BoundFunction, grid: GridSpec) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidDomain(format!("h = {h} must be positive")));
        }
        Ok(Self {
            h,
            bound,
            samples: grid.samples,
            levels: RwLock::new(Vec::new()),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bound(&self) -> &BoundFunction {
        &self.bound
    }

    fn build_level(&self, n: usize, prev: Option<&Level>) -> Result<Level> {
        let cutoff = Cutoff::new(self.h, n);
        let a_bound = prev.map_or(0.0, |p| p.a_bound).max(cutoff.gradient_bound());

        let span = n as f64 + 2.0;
        let mut sampled = f64::INFINITY;
        for k in 0..=BOUND_SAMPLES {
            let v = -span + 2.0 * span * k as f64 / BOUND_SAMPLES as f64;
            sampled = sampled.min(self.bound.value(v));
        }
        if !(sampled > 0.0 && sampled.is_finite()) {
            return Err(Error::ContractViolation(format!(
                "bound function has sampled minimum {sampled} on [-{span}, {span}]"
            )));
        }
        let h_min = prev.map_or(f64::INFINITY, |p| p.h_min).min(BOUND_SAFETY * sampled);
        let eps = prev
            .map_or(f64::INFINITY, |p| p.eps)
            .min(h_min / (1.0 + 2.0 * a_bound));
        let z = -self.h / (3.0 * (n as f64 + 2.0));
        let psi = bump_psi(self.h, z, eps, self.samples)?;
        Ok(Level {
            n,
            a_bound,
            h_min,
            eps,
            z,
            psi,
        })
    }

    /// Level data for index `n ≥ 1`.
    pub fn level(&self, n: usize) -> Result<Arc<Level>> {
        if n == 0 || n > MAX_LEVEL {
            return Err(Error::InvalidDomain(format!("level index {n} out of range")));
        }
        {
            let levels = self.levels.read().expect("level cache poisoned");
            if let Some(l) = levels.get(n - 1) {
                return Ok(Arc::clone(l));
            }
        }
        let mut levels = self.levels.write().expect("level cache poisoned");
        while levels.len() < n {
            let next = levels.len() + 1;
            let lvl = self.build_level(next, levels.last().map(|l| l.as_ref()))?;
            levels.push(Arc::new(lvl));
        }
        Ok(Arc::clone(&levels[n - 1]))
    }

    /// `(Aₙ, Hₙ, εₙ)`.
    pub fn constants(&self, n: usize) -> Result<(f64, f64, f64)> {
        let l = self.level(n)?;
        Ok((l.a_bound, l.h_min, l.eps))
    }

    pub fn cutoff(&self, n: usize) -> Cutoff {
        Cutoff::new(self.h, n)
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if !(r > -self.h && r < 0.0) {
            return Err(Error::OutOfRange {
                t: r,
                lo: -self.h,
                hi: 0.0,
            });
        }
        Ok(())
    }

    /// Whether `(v, r)` lies in `dom₁ = U_{2,0}` or `domₙ = U_{n+1,0} \ cl Uₙ`.
    pub fn in_domain(&self, n: usize, v: f64, r: f64) -> bool {
        let h = self.h;
        match n {
            0 => false,
            1 => Rect::new(h, 2.0 + 1.0 / 3.0).contains(v, r),
            _ => {
                Rect::new(h, n as f64 + 4.0 / 3.0).contains(v, r)
                    && !Rect::new(h, n as f64).closure_contains(v, r)
            }
        }
    }

    /// Smallest `n` with `(v, r) ∈ domₙ`.
    pub fn domain_index(&self, v: f64, r: f64) -> Result<usize> {
        self.check_r(r)?;
        if !v.is_finite() {
            return Err(Error::InvalidDomain(format!("v = {v} is not finite")));
        }
        let h = self.h;
        // (v, r) ∈ rect(m) iff m > max(|v|, h/(3|r|), h/(3(r+h)))
        let need = v.abs().max(h / (3.0 * -r)).max(h / (3.0 * (r + h)));
        let guess = (need - 4.0 / 3.0).floor().max(1.0);
        if guess > MAX_LEVEL as f64 {
            return Err(Error::InvalidDomain(format!(
                "({v}, {r}) needs a rectangle beyond index {MAX_LEVEL}"
            )));
        }
        let start = (guess as usize).saturating_sub(2).max(1);
        (start..start + 6)
            .find(|&n| self.in_domain(n, v, r))
            .ok_or_else(|| Error::ContractViolation(format!("no domain contains ({v}, {r})")))
    }

    /// `σₙ(v, r)`: `ψ₂` for `n = 1`, else `aₙ ψₙ + (1 - aₙ) ψₙ₊₁`.
    pub fn sigma(&self, n: usize, v: f64, r: f64) -> Result<IntervalFunction> {
        if n == 1 {
            return Ok(self.level(2)?.psi.clone());
        }
        let a = self.cutoff(n).value(v, r);
        let lo = self.level(n)?;
        let hi = self.level(n + 1)?;
        if a == 1.0 {
            Ok(lo.psi.clone())
        } else if a == 0.0 {
            Ok(hi.psi.clone())
        } else {
            IntervalFunction::lincomb(a, &lo.psi, 1.0 - a, &hi.psi)
        }
    }

    /// `χ(v, r)`.
    pub fn chi(&self, v: f64, r: f64) -> Result<IntervalFunction> {
        let n = self.domain_index(v, r)?;
        self.sigma(n, v, r)
    }

    /// `D(I∘χ)(v, r)(v̂, r̂)` as a C-element (only its values are meaningful).
    pub fn dchi(&self, v: f64, r: f64, dv: f64, dr: f64) -> Result<IntervalFunction> {
        let n = self.domain_index(v, r)?;
        if n == 1 {
            return Ok(self.level(2)?.psi.scaled(0.0));
        }
        let (_, grad) = self.cutoff(n).value_grad(v, r);
        let g = grad[0] * dv + grad[1] * dr;
        let lo = self.level(n)?;
        let hi = self.level(n + 1)?;
        IntervalFunction::lincomb(g, &lo.psi, -g, &hi.psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 1.0;

    fn family() -> TransversalFamily {
        TransversalFamily::new(H, BoundFunction::constant(1.0), GridSpec::default()).unwrap()
    }

    #[test]
    fn affine_transversal() {
        let g = GridSpec::default();
        let chi = affine_chi(7.0, -0.5, H, g).unwrap();
        assert_eq!(chi.eval(-0.5).unwrap(), 0.0);
        assert_eq!(chi.eval_deriv(0.0).unwrap(), 1.0);
        assert_eq!(chi.eval(0.0).unwrap(), 0.5);
        assert_eq!(affine_chi(0.0, -0.3, H, g).unwrap(), affine_chi(9.0, -0.3, H, g).unwrap());
        assert!(affine_chi(0.0, 0.0, H, g).is_err());
        assert!(affine_chi(0.0, -1.0, H, g).is_err());
    }

    #[test]
    fn bump_examples() {
        let psi = bump_psi(H, -0.5, 0.1, 2048).unwrap();
        assert!((psi.eval(0.0).unwrap() - 0.05).abs() < 1e-16);
        assert_eq!(psi.eval_deriv(0.0).unwrap(), 1.0);
        assert_eq!(psi.eval(-0.2).unwrap(), 0.0);
        // quadratic shape on the support
        assert!((psi.eval(-0.05).unwrap() - 0.05 * 0.05 / 0.2).abs() < 1e-16);

        let psi = bump_psi(H, -0.05, 1.0, 2048).unwrap();
        assert!((psi.eval(0.0).unwrap() - 0.025).abs() < 1e-16);
        assert_eq!(psi.eval(-0.05).unwrap(), 0.0);

        assert!(bump_psi(H, 0.0, 1.0, 2048).is_err());
        assert!(bump_psi(H, -1.0, 1.0, 2048).is_err());
        assert!(bump_psi(H, -0.5, 0.0, 2048).is_err());
    }

    #[test]
    fn rectangles() {
        let r = rect(H, 1.0).unwrap();
        assert_eq!(r.v_half, 1.0);
        assert!((r.r_lo + 2.0 / 3.0).abs() < 1e-15);
        assert!((r.r_hi + 1.0 / 3.0).abs() < 1e-15);
        let r = rect(H, 2.0 + 1.0 / 3.0).unwrap();
        assert!((r.v_half - 7.0 / 3.0).abs() < 1e-15);
        assert!((r.r_lo + 6.0 / 7.0).abs() < 1e-15);
        assert!((r.r_hi + 1.0 / 7.0).abs() < 1e-15);
        for k in 3..40 {
            let m = k as f64 / 3.0;
            assert!(Rect::new(H, m).compactly_inside(&Rect::new(H, m + 1.0 / 3.0)));
        }
        assert!(rect(H, 0.5).is_err());
    }

    #[test]
    fn cutoff_plateaus_and_band() {
        let c = Cutoff::new(H, 3);
        assert_eq!(c.value_grad(0.0, -0.5), (1.0, [0.0, 0.0]));
        assert_eq!(c.value_grad(3.2, -0.5), (1.0, [0.0, 0.0]));
        assert_eq!(c.value_grad(3.7, -0.5), (0.0, [0.0, 0.0]));
        assert_eq!(c.value_grad(0.0, -0.01), (0.0, [0.0, 0.0]));
        // midpoint of the v-band on the negative side: ρ = 1/2, ∂_v = 1.5/gap
        let (a, g) = c.value_grad(-3.5, -0.5);
        assert!((a - 0.5).abs() < 1e-12);
        assert!((g[0] - 1.5 / c.gap_v()).abs() < 1e-9);
        assert_eq!(g[1], 0.0);
        let (_, g) = c.value_grad(3.5, -0.5);
        assert!((g[0] + 1.5 / c.gap_v()).abs() < 1e-9);
    }

    #[test]
    fn constants_for_unit_bound() {
        let fam = family();
        // n = 1: gap_v = 1/3, gap_r = h/(9·(4/3)(5/3)) = 1/20
        let a1 = (4.5f64).hypot(30.0);
        let (a, hm, e) = fam.constants(1).unwrap();
        assert!((a - a1).abs() < 1e-9);
        assert!((hm - 0.9).abs() < 1e-15);
        assert!((e - 0.9 / (1.0 + 2.0 * a1)).abs() < 1e-12);
        let mut prev = fam.constants(1).unwrap();
        for n in 2..8 {
            let cur = fam.constants(n).unwrap();
            assert!(cur.0 >= prev.0);
            assert!(cur.2 <= prev.2);
            assert!(cur.2 > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn domain_indices() {
        let fam = family();
        assert_eq!(fam.domain_index(0.0, -0.5).unwrap(), 1);
        // overlap dom₂ ∩ dom₁ = U_{2,0} \ cl U₂
        assert_eq!(fam.domain_index(2.2, -0.5).unwrap(), 1);
        assert!(fam.in_domain(2, 2.2, -0.5));
        let s1 = fam.sigma(1, 2.2, -0.5).unwrap();
        let s2 = fam.sigma(2, 2.2, -0.5).unwrap();
        assert_eq!(s1, s2);
        // scan: smallest n with 10 < n + 4/3
        let scan = (1..100).find(|&n| fam.in_domain(n, 10.0, -0.5)).unwrap();
        assert_eq!(scan, 9);
        assert_eq!(fam.domain_index(10.0, -0.5).unwrap(), 9);
        assert_eq!(fam.domain_index(-10.0, -0.5).unwrap(), 9);
        assert!(fam.domain_index(0.0, 0.0).is_err());
    }

    #[test]
    fn domain_index_agrees_with_scan() {
        let fam = family();
        for i in 0..200 {
            let v = -15.0 + 0.151 * i as f64;
            for j in 1..50 {
                let r = -H + j as f64 * H / 50.0 - 0.003;
                let scan = (1..200).find(|&n| fam.in_domain(n, v, r)).unwrap();
                assert_eq!(fam.domain_index(v, r).unwrap(), scan, "v={v} r={r}");
            }
        }
    }

    #[test]
    fn chi_on_plateau_is_psi2() {
        let fam = family();
        let chi = fam.chi(0.0, -0.5).unwrap();
        assert_eq!(chi, fam.level(2).unwrap().psi);
        let zero = fam.dchi(0.0, -0.5, 1.0, 1.0).unwrap();
        assert_eq!(zero.norm_c(), 0.0);
    }

    #[test]
    fn dchi_zero_direction() {
        let fam = family();
        let d = fam.dchi(3.5, -0.5, 0.0, 0.0).unwrap();
        assert_eq!(d.norm_c(), 0.0);
    }

    #[test]
    fn concurrent_level_cache() {
        let fam = Arc::new(family());
        let handles: Vec<_> = (0..8)
            .map(|k| {
                let fam = Arc::clone(&fam);
                std::thread::spawn(move || fam.level(5 + k).unwrap().eps)
            })
            .collect();
        let eps: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for (k, e) in eps.iter().enumerate() {
            assert_eq!(*e, fam.level(5 + k).unwrap().eps);
        }
    }
}
