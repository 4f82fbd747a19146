//! Seeded property suites shared by the `selftest` command and the tests.
//!
//! Every suite draws instance `i` from its own stream ([`instance_rng`]),
//! evaluates instances in parallel and reduces them in index order, so a
//! report depends only on the seed and the settings.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{ChartAtlas, StatePair};
use crate::ddeint::{integrate, manifold_residual_along, StepConfig};
use crate::delay::{in_ub_times, residual, rhs, rhs_deriv, DelayFunctional, IntegralDelay, ScalarField};
use crate::error::Result;
use crate::funcspace::{GridSpec, IntervalFunction};
use crate::manifold::{
    find_point, find_point_between, project_x0, scenario_prop4, scenario_prop5, scenario_prop6,
    x0_bump, LinearFunctional, SubspaceZ,
};
use crate::sampling::{instance_rng, random_function, random_r, FunctionLaw};

/// Suite thresholds. The defaults are the documented tolerance table.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub chi_slope: f64,
    pub dchi_bound_slack: f64,
    pub roundtrip_c1: f64,
    pub roundtrip_r: f64,
    pub fixed_point: f64,
    pub contraction_slack: f64,
    pub fd_step: f64,
    pub fd_rel: f64,
    pub find_point: f64,
    pub x0: f64,
    pub manifold_residual: f64,
    pub perturbation_max: f64,
    pub prop4: f64,
    pub prop5_gap: f64,
    pub prop6_gap: f64,
    pub closed_form: f64,
    pub order_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chi_slope: 1e-10,
            dchi_bound_slack: 1e-9,
            roundtrip_c1: 1e-8,
            roundtrip_r: 1e-10,
            fixed_point: crate::chart::FIXED_POINT_TOL,
            contraction_slack: 1e-6,
            fd_step: 1e-5,
            fd_rel: 1e-5,
            find_point: 1e-10,
            x0: 1e-8,
            manifold_residual: 1e-8,
            perturbation_max: 1e-2,
            prop4: 1e-8,
            prop5_gap: 1e-3,
            prop6_gap: 1e-12,
            closed_form: 1e-10,
            order_ratio: 8.0,
        }
    }
}

/// Instance counts per suite.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub transversal: usize,
    pub directions: usize,
    pub diffeo: usize,
    pub contraction: usize,
    pub roundtrip: usize,
    pub perturbations: usize,
    pub derivative: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Self {
            transversal: 1000,
            directions: 16,
            diffeo: 1000,
            contraction: 1000,
            roundtrip: 200,
            perturbations: 20,
            derivative: 100,
        }
    }
}

/// Parameters of the integrator suite.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorRuns {
    /// Generic run: `φ₀ = y0 + s t` with `s` chosen so that `φ₀ ∈ X_F`.
    pub y0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    /// Constant field `f ≡ gamma` with `φ₀ = x0 + gamma t`.
    pub gamma: f64,
    pub x0: f64,
    pub closed_form_t_end: f64,
    pub closed_form_dt: f64,
    pub corrections: usize,
}

impl Default for IntegratorRuns {
    fn default() -> Self {
        Self {
            y0: 1.0,
            t_end: 0.4,
            dt: 2e-3,
            samples: 1000,
            gamma: 0.5,
            x0: 0.2,
            closed_form_t_end: 1.0,
            closed_form_dt: 1e-2,
            corrections: crate::ddeint::DEFAULT_CORRECTIONS,
        }
    }
}

/// Parameters of the scenario suite.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub nmax: usize,
    pub s: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self { nmax: 10, s: -0.5 }
    }
}

/// A measured quantity against its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: "<=",
            threshold,
            passed: measured <= threshold,
        }
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: ">=",
            threshold,
            passed: measured >= threshold,
        }
    }

    pub fn above(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: ">",
            threshold,
            passed: measured > threshold,
        }
    }

    pub fn equals(name: &str, measured: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: "==",
            threshold: expected,
            passed: measured == expected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<Check>) -> Self {
        Self {
            name: name.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(analytic: f64, reference: f64) -> f64 {
    let den = analytic.abs().max(reference.abs());
    if den == 0.0 {
        0.0
    } else {
        (analytic - reference).abs() / den
    }
}

/// Everything a suite needs: `f`, the integral delay, `b` and the grid.
#[derive(Debug, Clone)]
pub struct Setup {
    pub f: ScalarField,
    pub delay: Arc<IntegralDelay>,
    pub b: f64,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Setup {
    pub fn reference(seed: u64) -> Result<Self> {
        Ok(Self {
            f: ScalarField::sin(),
            delay: Arc::new(IntegralDelay::reference(1.0)?),
            b: 1.0,
            grid: GridSpec::default(),
            seed,
        })
    }

    pub fn h(&self) -> f64 {
        self.delay.h()
    }

    pub fn atlas(&self) -> Result<ChartAtlas> {
        ChartAtlas::new(self.f.clone(), self.delay.clone(), self.b, self.grid)
    }

    fn law(&self, slope: f64) -> FunctionLaw {
        FunctionLaw::with_slope(slope)
    }

    /// Stream for instance `i` of suite `suite`.
    fn rng(&self, suite: u64, i: usize) -> rand_chacha::ChaCha8Rng {
        instance_rng(self.seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15), i as u64)
    }

    fn r_range(&self) -> (f64, f64) {
        let h = self.h();
        (-0.99 * h, -0.01 * h)
    }
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

/// One line of the transversal check table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransversalRow {
    pub v: f64,
    pub r: f64,
    pub n: usize,
    pub d0err: f64,
    pub suppmax: f64,
    #[serde(rename = "normC")]
    pub norm_c: f64,
    #[serde(rename = "H")]
    pub bound: f64,
    pub dchi: f64,
}

/// Properties (2), (4), (5), (6) of the transversal family on random `(v, r)`.
pub fn transversal_suite(
    setup: &Setup,
    atlas: &ChartAtlas,
    counts: &Counts,
    tol: &Tolerances,
) -> Result<(SuiteReport, Vec<TransversalRow>)> {
    let fam = atlas.family();
    let (lo, hi) = setup.r_range();
    let rows: Vec<TransversalRow> = (0..counts.transversal)
        .into_par_iter()
        .map(|i| {
            let mut rng = setup.rng(1, i);
            let v: f64 = rng.gen_range(-10.0..=10.0);
            let r = random_r(&mut rng, lo, hi);
            let n = fam.domain_index(v, r)?;
            let chi = fam.chi(v, r)?;
            let mut dchi: f64 = 0.0;
            for _ in 0..counts.directions {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let g = fam.dchi(v, r, th.cos(), th.sin())?;
                dchi = dchi.max(g.norm_c());
            }
            Ok(TransversalRow {
                v,
                r,
                n,
                d0err: (chi.deriv(0.0) - 1.0).abs(),
                suppmax: chi.max_abs_on(-setup.h(), r).max(chi.value(r).abs()),
                norm_c: chi.norm_c(),
                bound: atlas.bound_at(v),
                dchi,
            })
        })
        .collect::<Result<_>>()?;
    let checks = vec![
        Check::at_most("max |chi'(0) - 1|", max_of(rows.iter().map(|r| r.d0err)), tol.chi_slope),
        Check::equals("max |chi| on [-h, r]", max_of(rows.iter().map(|r| r.suppmax)), 0.0),
        Check::at_most(
            "max |chi|_C / H(v)",
            max_of(rows.iter().map(|r| r.norm_c / r.bound)),
            1.0,
        ),
        Check::at_most(
            "max |dchi|_C / H(v)",
            max_of(rows.iter().map(|r| r.dchi / r.bound)),
            1.0 + tol.dchi_bound_slack,
        ),
    ];
    Ok((SuiteReport::new("transversal", checks), rows))
}

/// `Y∘T = id = T∘Y` and preservation of `U_b^×` in both directions.
pub fn diffeo_suite(setup: &Setup, atlas: &ChartAtlas, counts: &Counts, tol: &Tolerances) -> Result<SuiteReport> {
    let (lo, hi) = setup.r_range();
    let out: Vec<(f64, f64, u32)> = (0..counts.diffeo)
        .into_par_iter()
        .map(|i| {
            let mut rng = setup.rng(2, i);
            // slopes up to 2b so that both sides of U_b^× are visited
            let phi = random_function(&mut rng, setup.h(), setup.grid, setup.law(2.0 * setup.b))?;
            let r = random_r(&mut rng, lo, hi);
            let sp = StatePair::new(phi, r)?;
            let t = atlas.t_map(&sp)?;
            let y = atlas.y_map(&sp)?;
            let yt = atlas.y_map(&t)?;
            let ty = atlas.t_map(&y)?;
            let inside = in_ub_times(&sp.phi, r, setup.b)?;
            let mut violations = 0;
            if in_ub_times(&t.phi, r, setup.b)? != inside {
                violations += 1;
            }
            if in_ub_times(&y.phi, r, setup.b)? != inside {
                violations += 1;
            }
            Ok((yt.phi.distance_c1(&sp.phi)?, ty.phi.distance_c1(&sp.phi)?, violations))
        })
        .collect::<Result<_>>()?;
    let inside = out.len();
    let checks = vec![
        Check::at_most("max |Y(T(sp)) - sp|_C1", max_of(out.iter().map(|o| o.0)), tol.roundtrip_c1),
        Check::at_most("max |T(Y(sp)) - sp|_C1", max_of(out.iter().map(|o| o.1)), tol.roundtrip_c1),
        Check::equals(
            "U_b^x membership changes",
            out.iter().map(|o| o.2 as f64).sum(),
            0.0,
        ),
        Check::at_least("pairs", inside as f64, 1.0),
    ];
    Ok(SuiteReport::new("diffeomorphism", checks))
}

/// Finite-difference reference for `D₂(d∘B)(ψ, r)1`.
pub fn d2db_fd(atlas: &ChartAtlas, psi: &IntervalFunction, r: f64, step: f64) -> Result<f64> {
    let plus = atlas.b_map(psi, r + step)?;
    let minus = atlas.b_map(psi, r - step)?;
    Ok(atlas.delay().difference(&plus, &minus)? / (2.0 * step))
}

fn random_pair_in_ub_times(setup: &Setup, suite: u64, i: usize) -> Result<(IntervalFunction, f64)> {
    let (lo, hi) = setup.r_range();
    let mut rng = setup.rng(suite, i);
    let psi = random_function(&mut rng, setup.h(), setup.grid, setup.law(0.95 * setup.b))?;
    let r = random_r(&mut rng, lo, hi);
    Ok((psi, r))
}

/// `|D₂(d∘B)| ≤ 1/2` on `U_b^×`, its finite-difference agreement, and an
/// empirical Lipschitz constant of `r ↦ d(B(ψ, r))`.
pub fn contraction_suite(
    setup: &Setup,
    atlas: &ChartAtlas,
    counts: &Counts,
    tol: &Tolerances,
) -> Result<SuiteReport> {
    let (lo, hi) = setup.r_range();
    let out: Vec<(f64, Option<f64>, f64)> = (0..counts.contraction)
        .into_par_iter()
        .map(|i| {
            let (psi, r) = random_pair_in_ub_times(setup, 3, i)?;
            let an = atlas.d2db(&psi, r)?;
            let fd = if i < counts.derivative {
                Some(relative_error(an, d2db_fd(atlas, &psi, r, tol.fd_step)?))
            } else {
                None
            };
            let mut rng = setup.rng(31, i);
            let s = (r + rng.gen_range(-0.05..0.05) * setup.h()).clamp(lo, hi);
            let lip = if s != r {
                let dp = atlas.delay().difference(&atlas.b_map(&psi, s)?, &atlas.b_map(&psi, r)?)?;
                (dp / (s - r)).abs()
            } else {
                0.0
            };
            Ok((an.abs(), fd, lip))
        })
        .collect::<Result<_>>()?;
    let fd: Vec<f64> = out.iter().filter_map(|o| o.1).collect();
    let checks = vec![
        Check::at_most("max |d2dB|", max_of(out.iter().map(|o| o.0)), 0.5 + tol.contraction_slack),
        Check::at_most("max rel. error d2dB vs FD", max_of(fd.iter().copied()), tol.fd_rel),
        Check::equals(
            "FD instances above tolerance",
            fd.iter().filter(|&&e| e > tol.fd_rel).count() as f64,
            0.0,
        ),
        Check::at_most(
            "empirical Lipschitz constant of r -> d(B(psi, r))",
            max_of(out.iter().map(|o| o.2)),
            0.5 + tol.contraction_slack,
        ),
    ];
    Ok(SuiteReport::new("contraction", checks))
}

/// `chart_inverse(chart_forward(φ)) = (φ, d(φ))` with contracting steps.
pub fn roundtrip_suite(setup: &Setup, atlas: &ChartAtlas, counts: &Counts, tol: &Tolerances) -> Result<SuiteReport> {
    let out: Vec<(f64, f64, f64, f64, f64)> = (0..counts.roundtrip)
        .into_par_iter()
        .map(|i| {
            let mut rng = setup.rng(4, i);
            let phi = random_function(&mut rng, setup.h(), setup.grid, setup.law(0.95 * setup.b))?;
            let r = atlas.delay().eval(&phi)?;
            let psi = atlas.chart_forward(&phi)?;
            let samples = phi.sample_points();
            let below = psi.nodes().iter().chain(samples.iter()).filter(|&&t| t <= r);
            let mut keep: f64 = 0.0;
            for &t in below {
                keep = keep.max((psi.value(t) - phi.value(t)).abs());
            }
            let inv = atlas.chart_inverse(&psi, None)?;
            let ratio = max_of(inv.step_ratios().into_iter());
            Ok((
                inv.phi.distance_c1(&phi)?,
                (inv.r - r).abs(),
                ratio,
                inv.fixed_point_residual,
                keep,
            ))
        })
        .collect::<Result<_>>()?;
    let checks = vec![
        Check::at_most("max C1 error of recovered phi", max_of(out.iter().map(|o| o.0)), tol.roundtrip_c1),
        Check::at_most("max |r - d(phi)|", max_of(out.iter().map(|o| o.1)), tol.roundtrip_r),
        Check::at_most(
            "max step ratio |r_{k+1} - r_k| / |r_k - r_{k-1}|",
            max_of(out.iter().map(|o| o.2)),
            0.5 * (1.0 + tol.contraction_slack),
        ),
        Check::at_most("max |d(phi) - r| at exit", max_of(out.iter().map(|o| o.3)), tol.fixed_point),
        Check::equals("max |Pi(phi) - phi| on [-h, d(phi)]", max_of(out.iter().map(|o| o.4)), 0.0),
    ];
    Ok(SuiteReport::new("roundtrip", checks))
}

/// The chart on the solution manifold: `find_point`, `Π` into `X₀`, and back.
pub fn manifold_chart_suite(
    setup: &Setup,
    atlas: &ChartAtlas,
    counts: &Counts,
    tol: &Tolerances,
) -> Result<SuiteReport> {
    let d = setup.delay.as_ref();
    let point = find_point(&setup.f, d, setup.grid, tol.find_point)?;
    let phi = point.phi;
    let res = residual(&setup.f, d, &phi)?;
    let psi = atlas.chart_forward(&phi)?;
    let back = atlas.chart_manifold_with(&psi, tol.x0, tol.manifold_residual)?;
    let h = setup.h();
    let bump = x0_bump(h, setup.grid)?;
    let bump = bump.scaled(1.0 / bump.norm_c1());
    let perturbed: Vec<(f64, f64)> = (0..counts.perturbations)
        .into_par_iter()
        .map(|j| {
            let size = tol.perturbation_max * (j + 1) as f64 / counts.perturbations as f64;
            let dir = if j % 2 == 0 {
                bump.clone()
            } else {
                let mut rng = setup.rng(5, j);
                let g = random_function(&mut rng, h, setup.grid, setup.law(1.0))?;
                let g = project_x0(&g)?;
                let n = g.norm_c1();
                if n > 0.0 {
                    g.scaled(1.0 / n)
                } else {
                    bump.clone()
                }
            };
            let target = IntervalFunction::axpy(size, &dir, &psi)?;
            let target = project_x0(&target)?;
            match atlas.chart_manifold_with(&target, tol.x0, f64::INFINITY) {
                Ok(p) => Ok((residual(&setup.f, d, &p)?.abs(), size)),
                Err(_) => Ok((f64::INFINITY, size)),
            }
        })
        .collect::<Result<_>>()?;
    let checks = vec![
        Check::at_most("|residual(phi*)|", res.abs(), tol.find_point),
        Check::at_most("|Pi(phi*)'(0)|", psi.deriv(0.0).abs(), tol.x0),
        Check::at_most("|chart_manifold(Pi(phi*)) - phi*|_C1", back.distance_c1(&phi)?, tol.roundtrip_c1),
        Check::at_most(
            "max residual over X0 perturbations",
            perturbed.iter().map(|p| p.0).fold(0.0, f64::max),
            tol.manifold_residual,
        ),
        Check::at_most(
            "largest perturbation size",
            perturbed.iter().map(|p| p.1).fold(0.0, f64::max),
            tol.perturbation_max,
        ),
    ];
    Ok(SuiteReport::new("manifold-chart", checks))
}

/// `DF`, `D_e d`, `Dχ`, `D₂(d∘B)` against central finite differences.
pub fn derivative_suite(setup: &Setup, atlas: &ChartAtlas, counts: &Counts, tol: &Tolerances) -> Result<SuiteReport> {
    let h = setup.h();
    let d: &dyn DelayFunctional = setup.delay.as_ref();
    let e = tol.fd_step;
    let (lo, hi) = setup.r_range();
    let fam = atlas.family();
    let out: Vec<[f64; 4]> = (0..counts.derivative)
        .into_par_iter()
        .map(|i| {
            let mut rng = setup.rng(6, i);
            let phi = random_function(&mut rng, h, setup.grid, setup.law(0.95 * setup.b))?;
            let dir = random_function(&mut rng, h, setup.grid, setup.law(2.0))?;
            let plus = IntervalFunction::axpy(e, &dir, &phi)?;
            let minus = IntervalFunction::axpy(-e, &dir, &phi)?;

            let df = rhs_deriv(&setup.f, d, &phi, &dir, true)?;
            let df_fd = (rhs(&setup.f, d, &plus)? - rhs(&setup.f, d, &minus)?) / (2.0 * e);

            let dd = d.ext_deriv_apply(&phi, &dir)?;
            let dd_fd = d.difference(&plus, &minus)? / (2.0 * e);

            let v: f64 = rng.gen_range(-10.0..=10.0);
            let r = random_r(&mut rng, lo, hi);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (dv, dr) = (th.cos(), th.sin());
            let an = fam.dchi(v, r, dv, dr)?;
            let cp = fam.chi(v + e * dv, r + e * dr)?;
            let cm = fam.chi(v - e * dv, r - e * dr)?;
            let fd = IntervalFunction::lincomb(0.5 / e, &cp, -0.5 / e, &cm)?;
            let den = an.norm_c().max(fd.norm_c());
            let dchi_err = if den == 0.0 { 0.0 } else { fd.distance_c(&an)? / den };

            let (psi, rr) = random_pair_in_ub_times(setup, 61, i)?;
            let b_an = atlas.d2db(&psi, rr)?;
            let b_fd = d2db_fd(atlas, &psi, rr, e)?;

            Ok([
                relative_error(df, df_fd),
                relative_error(dd, dd_fd),
                dchi_err,
                relative_error(b_an, b_fd),
            ])
        })
        .collect::<Result<_>>()?;
    let names = ["DF_apply", "integral_delay_Dd", "dchi", "d2dB"];
    let mut checks = Vec::new();
    for (k, name) in names.iter().enumerate() {
        checks.push(Check::at_most(
            &format!("max rel. error {name} vs FD"),
            max_of(out.iter().map(|o| o[k])),
            tol.fd_rel,
        ));
    }
    for (k, name) in names.iter().enumerate() {
        checks.push(Check::equals(
            &format!("{name} instances above tolerance"),
            out.iter().filter(|o| o[k] > tol.fd_rel).count() as f64,
            0.0,
        ));
    }
    Ok(SuiteReport::new("derivative-oracles", checks))
}

/// The three counterexample scenarios on the reference delay.
pub fn scenario_suite(setup: &Setup, params: &ScenarioParams, tol: &Tolerances) -> Result<SuiteReport> {
    let d = setup.delay.as_ref();
    let p4 = scenario_prop4(&ScalarField::square(), d, setup.grid, params.nmax)?;
    let p4_err = max_of(p4.rows.iter().map(|r| (r.extended - 2.0 * r.n as f64).abs()));
    let p5 = scenario_prop5(&ScalarField::identity(), d, setup.b, params.s, setup.grid)?;
    let z = SubspaceZ::new(setup.h(), setup.grid, vec![LinearFunctional::point_value(-setup.h())])?;
    let p6 = scenario_prop6(d, &z, setup.b, setup.grid)?;
    let checks = vec![
        Check::at_most("prop4 max |DF(n)1 - 2n|", p4_err, tol.prop4),
        Check::equals("prop4 strictly increasing", p4.strictly_increasing as u8 as f64, 1.0),
        Check::above("prop5 |F(phi) - F(psi)|", p5.gap, tol.prop5_gap),
        Check::equals("prop5 max |phi - psi| at nodes in [-h, s]", p5.node_mismatch, 0.0),
        Check::above("prop6 |d(phi) - d(2phi)|", p6.gap, tol.prop6_gap),
    ];
    Ok(SuiteReport::new("scenarios", checks))
}

/// `φ₀ = y0 + s t` on the solution manifold, found by bisection in `s ∈ [-1, 1]`.
pub fn affine_start(f: &ScalarField, d: &dyn DelayFunctional, grid: GridSpec, y0: f64, tol: f64) -> Result<IntervalFunction> {
    let h = d.h();
    let lo = IntervalFunction::fit(h, grid, |t| y0 - t, |_| -1.0)?;
    let hi = IntervalFunction::fit(h, grid, |t| y0 + t, |_| 1.0)?;
    Ok(find_point_between(f, d, &lo, &hi, tol)?.phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderStudy {
    pub dt: Vec<f64>,
    pub max_residual: Vec<f64>,
}

/// Max manifold residual along generic runs with steps `dt` and `dt/2`.
pub fn order_study(setup: &Setup, runs: &IntegratorRuns, tol: &Tolerances) -> Result<OrderStudy> {
    let d = setup.delay.as_ref();
    let phi0 = affine_start(&setup.f, d, setup.grid, runs.y0, tol.find_point.min(1e-13))?;
    let times: Vec<f64> = (1..=runs.samples)
        .map(|k| runs.t_end * k as f64 / runs.samples as f64)
        .collect();
    let dts = [runs.dt, 0.5 * runs.dt];
    let maxes: Vec<f64> = dts
        .par_iter()
        .map(|&dt| {
            let cfg = StepConfig {
                t_end: runs.t_end,
                dt,
                corrections: runs.corrections,
            };
            let tr = integrate(&setup.f, d, &phi0, cfg)?;
            let res = manifold_residual_along(&tr, &setup.f, d, &times)?;
            Ok(max_of(res.iter().map(|r| r.abs())))
        })
        .collect::<Result<_>>()?;
    Ok(OrderStudy {
        dt: dts.to_vec(),
        max_residual: maxes,
    })
}

/// Closed-form solutions and the residual order study.
pub fn integrator_suite(setup: &Setup, runs: &IntegratorRuns, tol: &Tolerances) -> Result<SuiteReport> {
    let d = setup.delay.as_ref();
    let h = setup.h();
    let cfg = StepConfig {
        t_end: runs.closed_form_t_end,
        dt: runs.closed_form_dt,
        corrections: runs.corrections,
    };
    let zero = IntervalFunction::zero(h, setup.grid)?;
    let eq = integrate(&ScalarField::sin(), d, &zero, cfg)?;
    let eq_err = max_of(eq.step_times().iter().map(|&t| eq.value(t).abs()));

    let (g, x0) = (runs.gamma, runs.x0);
    let phi0 = IntervalFunction::fit(h, setup.grid, |t| x0 + g * t, |_| g)?;
    let lin = integrate(&ScalarField::constant(g), d, &phi0, cfg)?;
    let n = 4 * ((runs.closed_form_t_end / runs.closed_form_dt).round() as usize).max(1);
    let lin_err = max_of((0..=n).map(|k| {
        let t = runs.closed_form_t_end * k as f64 / n as f64;
        (lin.value(t) - (x0 + g * t)).abs()
    }));

    let study = order_study(setup, runs, tol)?;
    let ratio = study.max_residual[0] / study.max_residual[1];
    let checks = vec![
        Check::at_most("equilibrium max |x|", eq_err, tol.closed_form),
        Check::at_most("affine max |x - (x0 + gamma t)|", lin_err, tol.closed_form),
        Check::at_least("residual ratio dt -> dt/2", ratio, tol.order_ratio),
        Check::at_most("max residual at dt/2", study.max_residual[1], 1e-6),
    ];
    Ok(SuiteReport::new("integrator", checks))
}
