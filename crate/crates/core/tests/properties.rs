//! Randomized invariants of every module.

use std::sync::Arc;
use std::sync::OnceLock;

use proptest::prelude::*;
use sdde_chart::chart::{ChartAtlas, StatePair};
use sdde_chart::ddeint::{integrate, StepConfig};
use sdde_chart::delay::{in_ub_times, residual, rhs_deriv, DelayFunctional, IntegralDelay, ScalarField};
use sdde_chart::manifold::{find_point, project_x0, scenario_prop4};
use sdde_chart::sampling::{instance_rng, random_function, FunctionLaw};
use sdde_chart::{GridSpec, IntervalFunction};

const H: f64 = 1.0;

fn grid() -> GridSpec {
    GridSpec::default()
}

fn delay() -> Arc<IntegralDelay> {
    static D: OnceLock<Arc<IntegralDelay>> = OnceLock::new();
    D.get_or_init(|| Arc::new(IntegralDelay::reference(H).unwrap())).clone()
}

fn atlas() -> &'static ChartAtlas {
    static A: OnceLock<ChartAtlas> = OnceLock::new();
    A.get_or_init(|| ChartAtlas::new(ScalarField::sin(), delay(), 1.0, grid()).unwrap())
}

fn func(seed: u64, slope: f64) -> IntervalFunction {
    random_function(&mut instance_rng(seed, 0), H, grid(), FunctionLaw::with_slope(slope)).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hermite_fit_reproduces_cubics(
        c in prop::array::uniform4(-3.0f64..3.0),
        ts in prop::collection::vec(-1.0f64..=0.0, 100),
    ) {
        let p = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
        let dp = |t: f64| c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]);
        let phi = IntervalFunction::fit(H, grid(), p, dp).unwrap();
        for t in ts {
            prop_assert!((phi.eval(t).unwrap() - p(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_is_continuous_at_nodes(seed in any::<u64>()) {
        let phi = func(seed, 3.0);
        for i in 1..phi.pieces() {
            let t = phi.nodes()[i];
            let left = phi.piece_deriv(i - 1, t);
            let right = phi.piece_deriv(i, t);
            prop_assert!((left - right).abs() <= 1e-12);
        }
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(a in -5.0f64..5.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let phi = func(s1, 2.0);
        let psi = func(s2, 2.0);
        let zero = IntervalFunction::zero(H, grid()).unwrap();
        let scaled = IntervalFunction::axpy(a, &phi, &zero).unwrap();
        prop_assert!((scaled.norm_c() - a.abs() * phi.norm_c()).abs() <= 1e-12 * (1.0 + phi.norm_c()));
        let sum = IntervalFunction::axpy(1.0, &phi, &psi).unwrap();
        prop_assert!(sum.norm_c() <= phi.norm_c() + psi.norm_c() + 1e-12);
        prop_assert!(sum.norm_c1() <= phi.norm_c1() + psi.norm_c1() + 1e-12);
    }

    #[test]
    fn extended_derivative_is_linear(a in -3.0f64..3.0, s in any::<u64>()) {
        let d = delay();
        let phi = func(s, 1.0);
        let x1 = func(s.wrapping_add(1), 4.0);
        let x2 = func(s.wrapping_add(2), 4.0);
        let comb = IntervalFunction::axpy(a, &x1, &x2).unwrap();
        let lhs = d.ext_deriv_apply(&phi, &comb).unwrap();
        let rhs = a * d.ext_deriv_apply(&phi, &x1).unwrap() + d.ext_deriv_apply(&phi, &x2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn extended_and_plain_derivatives_agree_on_c1(s in any::<u64>()) {
        let d = delay();
        let f = ScalarField::sin();
        let phi = func(s, 1.0);
        let dir = func(s.wrapping_add(7), 3.0);
        let e = rhs_deriv(&f, d.as_ref(), &phi, &dir, true).unwrap();
        let p = rhs_deriv(&f, d.as_ref(), &phi, &dir, false).unwrap();
        prop_assert!((e - p).abs() <= 1e-10);
    }

    #[test]
    fn extended_derivative_respects_bound(s in any::<u64>(), b in 0.1f64..3.0) {
        let d = delay();
        let phi = func(s, 0.99 * b);
        let dir = func(s.wrapping_add(3), 5.0);
        let unit = dir.scaled(1.0 / dir.norm_c());
        let val = d.ext_deriv_apply(&phi, &unit).unwrap();
        prop_assert!(val.abs() <= d.ded_bound(b) * (1.0 + 1e-9));
        let r = d.eval(&phi).unwrap();
        prop_assert!(r > -H && r < 0.0);
    }

    #[test]
    fn transversal_properties(v in -10.0f64..=10.0, r in -0.99f64..-0.01, th in 0.0f64..std::f64::consts::TAU) {
        let at = atlas();
        let fam = at.family();
        let chi = fam.chi(v, r).unwrap();
        prop_assert!((chi.deriv(0.0) - 1.0).abs() <= 1e-10);
        prop_assert_eq!(chi.max_abs_on(-H, r), 0.0);
        prop_assert_eq!(chi.value(r), 0.0);
        prop_assert!(chi.norm_c() <= at.bound_at(v));
        let g = fam.dchi(v, r, th.cos(), th.sin()).unwrap();
        prop_assert!(g.norm_c() <= at.bound_at(v) * (1.0 + 1e-9));
    }

    #[test]
    fn overlapping_pieces_agree(v in -10.0f64..=10.0, r in -0.99f64..-0.01) {
        let fam = atlas().family();
        let n = fam.domain_index(v, r).unwrap();
        if fam.in_domain(n + 1, v, r) {
            let a = fam.sigma(n, v, r).unwrap();
            let b = fam.sigma(n + 1, v, r).unwrap();
            prop_assert!(a.distance_c(&b).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn chi_has_no_jumps_along_paths(v in -9.0f64..9.0, r0 in -0.9f64..-0.05) {
        let fam = atlas().family();
        let step = 1e-4;
        let mut prev = fam.chi(v, r0).unwrap();
        for k in 1..=200 {
            let t = k as f64 * step;
            let next = fam.chi(v + t, r0 + 0.2 * t).unwrap();
            prop_assert!(next.distance_c(&prev).unwrap() <= 10.0 * step);
            prev = next;
        }
    }

    #[test]
    fn t_and_y_are_inverse_and_preserve_u_b(s in any::<u64>(), r in -0.99f64..-0.01) {
        let at = atlas();
        let phi = func(s, 2.0);
        let sp = StatePair::new(phi, r).unwrap();
        let t = at.t_map(&sp).unwrap();
        let y = at.y_map(&sp).unwrap();
        prop_assert!(at.y_map(&t).unwrap().phi.distance_c1(&sp.phi).unwrap() <= 1e-8);
        prop_assert!(at.t_map(&y).unwrap().phi.distance_c1(&sp.phi).unwrap() <= 1e-8);
        let inside = in_ub_times(&sp.phi, r, 1.0).unwrap();
        prop_assert_eq!(in_ub_times(&t.phi, r, 1.0).unwrap(), inside);
        prop_assert_eq!(in_ub_times(&y.phi, r, 1.0).unwrap(), inside);
    }

    #[test]
    fn delay_of_b_is_half_lipschitz_in_r(s in any::<u64>(), r in -0.99f64..-0.01, dr in -0.05f64..0.05) {
        let at = atlas();
        let psi = func(s, 0.95);
        let r2 = (r + dr).clamp(-0.99, -0.01);
        prop_assume!(r2 != r);
        let diff = at.delay().difference(&at.b_map(&psi, r2).unwrap(), &at.b_map(&psi, r).unwrap()).unwrap();
        prop_assert!((diff / (r2 - r)).abs() <= 0.5 + 1e-6);
        prop_assert!(at.d2db(&psi, r).unwrap().abs() <= 0.5 + 1e-6);
    }

    #[test]
    fn inverse_does_not_depend_on_start(s in any::<u64>(), r0 in -0.95f64..-0.05) {
        let at = atlas();
        let phi = func(s, 0.95);
        let psi = at.chart_forward(&phi).unwrap();
        let a = at.chart_inverse(&psi, None).unwrap();
        let b = at.chart_inverse(&psi, Some(r0)).unwrap();
        prop_assert!((a.r - b.r).abs() <= 1e-10);
        prop_assert!(a.phi.distance_c1(&phi).unwrap() <= 1e-8);
        prop_assert!(a.step_ratios().iter().all(|&q| q <= 0.5 * (1.0 + 1e-6)));
    }

    #[test]
    fn find_point_lands_on_the_manifold(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0) {
        let d = delay();
        let f = ScalarField::polynomial(vec![c0, c1]);
        let p = find_point(&f, d.as_ref(), grid(), 1e-10).unwrap();
        prop_assert!(p.residual.abs() <= 1e-10);
        prop_assert!((residual(&f, d.as_ref(), &p.phi).unwrap() - p.residual).abs() <= 1e-15);
        prop_assert!(p.phi.norm_c() <= 1.0 + 1e-12);
        for rec in p.log.iter().filter(|r| r.hi > r.lo) {
            prop_assert_eq!(rec.hi - rec.lo, 0.5f64.powi(rec.k as i32));
        }
        let at = ChartAtlas::new(f, d, 3.0, grid()).unwrap();
        prop_assert!(at.chart_forward(&p.phi).unwrap().deriv(0.0).abs() <= 1e-8);
    }

    #[test]
    fn projection_onto_x0_kills_the_slope_at_zero(s in any::<u64>()) {
        let phi = func(s, 5.0);
        prop_assert!(project_x0(&phi).unwrap().deriv(0.0).abs() <= 1e-12);
    }

    #[test]
    fn prop4_table_is_linear_for_squares(nmax in 1usize..30) {
        let rep = scenario_prop4(&ScalarField::square(), delay().as_ref(), grid(), nmax).unwrap();
        for row in &rep.rows {
            prop_assert!((row.extended - 2.0 * row.n as f64).abs() <= 1e-8);
            prop_assert!((row.plain - row.extended).abs() <= 1e-8);
        }
        prop_assert!(rep.strictly_increasing);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn affine_solutions_are_reproduced(gamma in -1.0f64..1.0, x0 in -2.0f64..2.0) {
        let phi0 = IntervalFunction::fit(H, grid(), |t| x0 + gamma * t, |_| gamma).unwrap();
        let traj = integrate(&ScalarField::constant(gamma), delay().as_ref(), &phi0, StepConfig::new(1.0, 0.01)).unwrap();
        for k in 0..=40 {
            let t = k as f64 / 40.0;
            prop_assert!((traj.value(t) - (x0 + gamma * t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn history_stays_c1(y0 in 0.5f64..1.5) {
        let f = ScalarField::sin();
        let d = delay();
        let phi0 = sdde_chart::verify::affine_start(&f, d.as_ref(), grid(), y0, 1e-12).unwrap();
        let traj = integrate(&f, d.as_ref(), &phi0, StepConfig::new(0.5, 0.01)).unwrap();
        prop_assert!(traj.max_derivative_jump() <= 1e-10);
        for &t in traj.step_times() {
            let seg = traj.segment(t).unwrap();
            prop_assert!(d.eval(&seg).unwrap() < 0.0);
        }
    }
}
