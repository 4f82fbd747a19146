//! Points of the solution manifold, `X₀` utilities, and three scenarios
//! showing why the chart needs its hypotheses.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::delay::{residual, rhs, rhs_deriv, DelayFunctional, IntegralDelay, ScalarField};
use crate::error::{Error, Result};
use crate::funcspace::{merge_nodes, GridSpec, IntervalFunction};

const MAX_BISECTIONS: usize = 200;

/// One bisection step: the bracket after the step and `z` at its midpoint.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BisectionRecord {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    pub phi: IntervalFunction,
    /// Line parameter of the returned point.
    pub s: f64,
    pub residual: f64,
    pub log: Vec<BisectionRecord>,
}

/// Bisection for a zero of `z(s) = Φ(s)'(0) - F(Φ(s))` with
/// `Φ(s) = start + s·(end - start)`, `s ∈ [0, 1]`, `z(0) < 0 < z(1)`.
pub fn find_point_between(
    f: &ScalarField,
    d: &dyn DelayFunctional,
    start: &IntervalFunction,
    end: &IntervalFunction,
    tol: f64,
) -> Result<ManifoldPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidDomain(format!("tolerance {tol} must be positive")));
    }
    let dir = IntervalFunction::axpy(-1.0, start, end)?;
    let point = |s: f64| IntervalFunction::axpy(s, &dir, start);
    let z = |phi: &IntervalFunction| residual(f, d, phi);

    let z0 = z(start)?;
    let z1 = z(end)?;
    if !(z0 < 0.0 && z1 > 0.0) {
        return Err(Error::SignConditionFailed { z0, z1 });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut log = Vec::new();
    for k in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let phi = point(mid)?;
        let zm = z(&phi)?;
        if zm < 0.0 {
            lo = mid;
        } else if zm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
        log.push(BisectionRecord { k, lo, hi, z: zm });
        if zm.abs() <= tol || hi - lo <= f64::EPSILON {
            return Ok(ManifoldPoint {
                phi,
                s: mid,
                residual: zm,
                log,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
        last_step: hi - lo,
    })
}

/// A point of `X_F` in `{|φ|_C ≤ 1}`, bisecting between `φ± = ±sin(Mt)`.
///
/// `M = ⌈c⌉ + 1` with `c` the sampled `sup_{|ξ|≤1} |f(ξ)|` enlarged by 10%,
/// so `φ₋'(0) < -c ≤ F ≤ c < φ₊'(0)`.
pub fn find_point(
    f: &ScalarField,
    d: &dyn DelayFunctional,
    grid: GridSpec,
    tol: f64,
) -> Result<ManifoldPoint> {
    let h = d.h();
    let c = 1.1 * f.sampled_sup(-1.0, 1.0, 10_000);
    let m = c.ceil() + 1.0;
    let plus = IntervalFunction::fit(h, grid, |t| (m * t).sin(), |t| m * (m * t).cos())?;
    find_point_between(f, d, &plus.scaled(-1.0), &plus, tol)
}

/// `η(t) = t (1 + t/h)²`: `η(-h) = η'(-h) = 0`, `η'(0) = 1`.
pub fn x0_normal(h: f64, nodes: Vec<f64>, samples: usize) -> Result<IntervalFunction> {
    IntervalFunction::fit_on_nodes(
        h,
        nodes,
        samples,
        |t| t * (1.0 + t / h).powi(2),
        |t| (1.0 + t / h) * (1.0 + 3.0 * t / h),
    )
}

/// `φ - φ'(0)·η`, an element of `X₀` on the nodes of `φ`.
pub fn project_x0(phi: &IntervalFunction) -> Result<IntervalFunction> {
    let slope = phi.deriv(0.0);
    if slope == 0.0 {
        return Ok(phi.clone());
    }
    let eta = x0_normal(phi.h(), phi.nodes().to_vec(), phi.samples())?;
    IntervalFunction::axpy(-slope, &eta, phi)
}

/// `t²(t + h)²`, an `X₀` direction vanishing to first order at both ends.
pub fn x0_bump(h: f64, grid: GridSpec) -> Result<IntervalFunction> {
    IntervalFunction::fit(
        h,
        grid,
        |t| (t * (t + h)).powi(2),
        |t| 2.0 * t * (t + h) * (2.0 * t + h),
    )
}

/// A continuous linear functional on C¹:
/// `φ ↦ Σ aᵢ φ(tᵢ) + Σ bⱼ φ'(sⱼ) + ∫ w φ`.
#[derive(Debug, Clone, Default)]
pub struct LinearFunctional {
    pub values: Vec<(f64, f64)>,
    pub derivs: Vec<(f64, f64)>,
    pub weight: Option<IntervalFunction>,
}

impl LinearFunctional {
    pub fn point_value(t: f64) -> Self {
        Self {
            values: vec![(t, 1.0)],
            ..Self::default()
        }
    }

    pub fn point_deriv(t: f64) -> Self {
        Self {
            derivs: vec![(t, 1.0)],
            ..Self::default()
        }
    }

    pub fn integral(weight: IntervalFunction) -> Self {
        Self {
            weight: Some(weight),
            ..Self::default()
        }
    }

    pub fn apply(&self, phi: &IntervalFunction) -> Result<f64> {
        let mut acc = 0.0;
        for &(t, a) in &self.values {
            acc += a * phi.eval(t)?;
        }
        for &(t, b) in &self.derivs {
            acc += b * phi.eval_deriv(t)?;
        }
        if let Some(w) = &self.weight {
            let nodes = merge_nodes(w.nodes(), phi.nodes(), phi.h());
            acc += crate::quadrature::integrate_panels(&nodes, 1, |t| w.value(t) * phi.value(t));
        }
        Ok(acc)
    }
}

/// `Z = ⋂ ker ℓᵢ`, a closed subspace of finite codimension.
///
/// Kernel elements are computed in the Hermite basis of a grid: each basis
/// function carries a unit value or unit slope at one node.
#[derive(Debug, Clone)]
pub struct SubspaceZ {
    h: f64,
    grid: GridSpec,
    functionals: Vec<LinearFunctional>,
    /// Orthonormal kernel basis in Hermite coordinates, one column each.
    kernel: DMatrix<f64>,
}

impl SubspaceZ {
    pub fn new(h: f64, grid: GridSpec, functionals: Vec<LinearFunctional>) -> Result<Self> {
        let nodes = grid.uniform_nodes(h);
        let n = nodes.len();
        let dim = 2 * n;
        let k = functionals.len();
        let mut l = DMatrix::zeros(k, dim);
        for j in 0..dim {
            let mut values = vec![0.0; n];
            let mut derivs = vec![0.0; n];
            if j < n {
                values[j] = 1.0;
            } else {
                derivs[j - n] = 1.0;
            }
            let e = IntervalFunction::from_data(h, nodes.clone(), values, derivs, grid.samples)?;
            for (i, ell) in functionals.iter().enumerate() {
                l[(i, j)] = ell.apply(&e)?;
            }
        }
        if k > 0 {
            let gram = &l * l.transpose();
            let eig = SymmetricEigen::new(gram);
            let max = eig.eigenvalues.amax();
            let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            if !(max > 0.0 && min > 1e-12 * max) {
                return Err(Error::KernelSearchFailed(format!(
                    "functionals are linearly dependent (Gram eigenvalues in [{min:e}, {max:e}])"
                )));
            }
        }
        let kernel = if k == 0 {
            DMatrix::identity(dim, dim)
        } else {
            let eig = SymmetricEigen::new(l.transpose() * &l);
            let max = eig.eigenvalues.amax();
            let cols: Vec<DVector<f64>> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &ev)| ev <= 1e-12 * max)
                .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
                .collect();
            if cols.len() != dim - k {
                return Err(Error::KernelSearchFailed(format!(
                    "kernel dimension {} differs from {} - {k}",
                    cols.len(),
                    dim
                )));
            }
            DMatrix::from_columns(&cols)
        };
        Ok(Self {
            h,
            grid,
            functionals,
            kernel,
        })
    }

    pub fn codimension(&self) -> usize {
        self.functionals.len()
    }

    pub fn functionals(&self) -> &[LinearFunctional] {
        &self.functionals
    }

    fn to_function(&self, coeffs: &DVector<f64>) -> Result<IntervalFunction> {
        let nodes = self.grid.uniform_nodes(self.h);
        let n = nodes.len();
        let values = coeffs.rows(0, n).iter().copied().collect();
        let derivs = coeffs.rows(n, n).iter().copied().collect();
        IntervalFunction::from_data(self.h, nodes, values, derivs, self.grid.samples)
    }

    /// Orthogonal projection (in Hermite coordinates) of `phi`'s grid data onto `Z`.
    pub fn project(&self, phi: &IntervalFunction) -> Result<IntervalFunction> {
        let nodes = self.grid.uniform_nodes(self.h);
        let mut c = DVector::zeros(2 * nodes.len());
        for (i, &t) in nodes.iter().enumerate() {
            c[i] = phi.eval(t)?;
            c[nodes.len() + i] = phi.eval_deriv(t)?;
        }
        let proj = &self.kernel * (self.kernel.transpose() * c);
        self.to_function(&proj)
    }

    /// `max |ℓᵢ(φ)|`.
    pub fn defect(&self, phi: &IntervalFunction) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ell in &self.functionals {
            worst = worst.max(ell.apply(phi)?.abs());
        }
        Ok(worst)
    }
}

/// One row of the growth table `n ↦ D_e F(𝐧)𝟏`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Prop4Row {
    pub n: usize,
    pub extended: f64,
    pub plain: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop4Report {
    pub rows: Vec<Prop4Row>,
    /// Whether `|D_e F(𝐧)𝟏|` increases strictly along the table.
    pub strictly_increasing: bool,
}

/// `D_e F(𝐧)𝟏 = f'(n)` on constant functions `𝐧`, `n = 1..=nmax`.
pub fn scenario_prop4(
    f: &ScalarField,
    d: &dyn DelayFunctional,
    grid: GridSpec,
    nmax: usize,
) -> Result<Prop4Report> {
    let h = d.h();
    let one = IntervalFunction::constant(1.0, h, grid)?;
    let mut rows = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let phi = IntervalFunction::constant(n as f64, h, grid)?;
        rows.push(Prop4Row {
            n,
            extended: rhs_deriv(f, d, &phi, &one, true)?,
            plain: rhs_deriv(f, d, &phi, &one, false)?,
        });
    }
    let strictly_increasing = rows
        .windows(2)
        .all(|w| w[1].extended.abs() > w[0].extended.abs());
    Ok(Prop4Report {
        rows,
        strictly_increasing,
    })
}

#[derive(Debug, Clone)]
pub struct Prop5Report {
    pub s: f64,
    pub w_s: f64,
    pub c: f64,
    pub phi: IntervalFunction,
    pub psi: IntervalFunction,
    pub d_phi: f64,
    pub d_psi: f64,
    pub f_phi: f64,
    pub f_psi: f64,
    pub gap: f64,
    /// `max |φ(t) - ψ(t)|` over the nodes in `[-h, s]`.
    pub node_mismatch: f64,
}

/// Bisection for `g(x) = target` with `g` increasing, expanding the bracket upwards.
fn solve_increasing(g: impl Fn(f64) -> f64, target: f64, mut lo: f64, what: &str) -> Result<f64> {
    if !(g(lo) < target) {
        return Err(Error::ParameterSearchFailed(format!(
            "{what}: value at {lo} already reaches {target}"
        )));
    }
    let mut step = 1.0;
    let mut hi = lo + step;
    let mut grow = 0;
    while !(g(hi) > target) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        grow += 1;
        if grow > 200 || !hi.is_finite() {
            return Err(Error::ParameterSearchFailed(format!("{what}: {target} not reached")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(hi)
}

/// Two functions in `U_b`, equal on `[-h, s]`, whose right-hand sides differ.
///
/// `w_s` solves `δ(w_s) = s/2` (so `δ > s` beyond it), `c` solves
/// `v(c) = 2 w_s / h`. `φ = 𝐜`, and `ψ = c + k (t - s)²` on `(s, 0]` with
/// `k = b / (4|s|)`, so `|ψ'| ≤ b/2`. Both delays exceed `s`, hence
/// `F(ψ) = f(ψ(d(ψ))) ≠ f(c) = F(φ)` for injective `f`.
pub fn scenario_prop5(
    f: &ScalarField,
    delay: &IntegralDelay,
    b: f64,
    s: f64,
    grid: GridSpec,
) -> Result<Prop5Report> {
    let h = delay.h();
    if !(s > -h && s < 0.0) {
        return Err(Error::OutOfRange { t: s, lo: -h, hi: 0.0 });
    }
    if !(b > 0.0) {
        return Err(Error::InvalidDomain(format!("b = {b} must be positive")));
    }
    let delta = delay.delta();
    let v = delay.v();
    let mut w_s = solve_increasing(|w| delta.value(w), 0.5 * s, -50.0, "w_s")?;
    if w_s <= 0.0 {
        w_s = 1.0;
    }
    let c = solve_increasing(|y| v.value(y), 2.0 * w_s / h, 0.0, "c")?;

    let k = b / (4.0 * -s);
    let nodes = merge_nodes(&grid.uniform_nodes(h), &[-h, s, 0.0], h);
    let phi = IntervalFunction::constant(c, h, grid)?;
    let psi = IntervalFunction::fit_on_nodes(
        h,
        nodes,
        grid.samples,
        |t| if t > s { c + k * (t - s) * (t - s) } else { c },
        |t| if t > s { 2.0 * k * (t - s) } else { 0.0 },
    )?;
    let node_mismatch = psi
        .nodes()
        .iter()
        .filter(|&&t| t <= s)
        .map(|&t| (psi.value(t) - phi.value(t)).abs())
        .fold(0.0, f64::max);
    let d_phi = delay.eval(&phi)?;
    let d_psi = delay.eval(&psi)?;
    let f_phi = rhs(f, delay, &phi)?;
    let f_psi = rhs(f, delay, &psi)?;
    Ok(Prop5Report {
        s,
        w_s,
        c,
        phi,
        psi,
        d_phi,
        d_psi,
        f_phi,
        f_psi,
        gap: (f_phi - f_psi).abs(),
        node_mismatch,
    })
}

#[derive(Debug, Clone)]
pub struct Prop6Report {
    pub phi: IntervalFunction,
    pub d_phi: f64,
    pub d_2phi: f64,
    pub d_4phi: f64,
    pub gap: f64,
    pub kernel_defect: f64,
}

/// A nonzero `φ ∈ Z` with `|φ'| < b/2` and `max φ > 0`, and `d(φ)`, `d(2φ)`, `d(4φ)`.
///
/// Candidates `cos(kπ(t+h)/h)`, `k = 0, 1, …` are projected onto `Z`; the first
/// projection of non-negligible size is used.
pub fn scenario_prop6(
    delay: &dyn DelayFunctional,
    z: &SubspaceZ,
    b: f64,
    grid: GridSpec,
) -> Result<Prop6Report> {
    let h = delay.h();
    if !(b > 0.0) {
        return Err(Error::InvalidDomain(format!("b = {b} must be positive")));
    }
    let mut chosen = None;
    for k in 0..16 {
        let w = k as f64 * std::f64::consts::PI / h;
        let cand = IntervalFunction::fit(h, grid, |t| (w * (t + h)).cos(), |t| -w * (w * (t + h)).sin())?;
        let p = z.project(&cand)?;
        if p.norm_c1() > 1e-6 * cand.norm_c1() {
            chosen = Some(p);
            break;
        }
    }
    let mut phi = chosen
        .ok_or_else(|| Error::KernelSearchFailed("no candidate has a nonzero projection".into()))?;
    if phi.norm_c() == 0.0 || phi.max_abs_on(-h, 0.0) == 0.0 {
        return Err(Error::KernelSearchFailed("projection vanishes".into()));
    }
    let max_val = phi.sample_points().iter().map(|&t| phi.value(t)).fold(f64::MIN, f64::max);
    if max_val <= 0.0 {
        phi = phi.scaled(-1.0);
    }
    let slope = phi.max_abs_deriv();
    if slope > 0.0 {
        phi = phi.scaled(0.4 * b / slope);
    }
    let max_val = phi.sample_points().iter().map(|&t| phi.value(t)).fold(f64::MIN, f64::max);
    if !(max_val > 0.0) {
        return Err(Error::KernelSearchFailed(
            "kernel element is non-positive after sign flip".into(),
        ));
    }
    let d_phi = delay.eval(&phi)?;
    let d_2phi = delay.eval(&phi.scaled(2.0))?;
    let d_4phi = delay.eval(&phi.scaled(4.0))?;
    Ok(Prop6Report {
        kernel_defect: z.defect(&phi)?,
        phi,
        d_phi,
        d_2phi,
        d_4phi,
        gap: (d_phi - d_2phi).abs(),
    })
}
