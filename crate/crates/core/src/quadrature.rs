//! Composite Gauss–Legendre quadrature over panel breakpoints.

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre rule on `[a, b]`.
#[inline]
pub fn gauss_legendre_8(a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..4 {
        let dx = half * GL8_NODES[k];
        acc += GL8_WEIGHTS[k] * (g(mid - dx) + g(mid + dx));
    }
    acc * half
}

/// Sum of 8-point rules over consecutive panels `[breaks[i], breaks[i+1]]`,
/// each split into `subdivisions` equal parts.
pub fn integrate_panels(breaks: &[f64], subdivisions: usize, g: impl Fn(f64) -> f64) -> f64 {
    let sub = subdivisions.max(1);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if sub == 1 {
            total += gauss_legendre_8(a, b, &g);
        } else {
            let step = (b - a) / sub as f64;
            for k in 0..sub {
                let lo = a + step * k as f64;
                let hi = if k + 1 == sub { b } else { lo + step };
                total += gauss_legendre_8(lo, hi, &g);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_fifteen() {
        let g = |x: f64| x.powi(15) + 3.0 * x.powi(8) - x;
        let exact = |x: f64| x.powi(16) / 16.0 + x.powi(9) / 3.0 - x * x / 2.0;
        let got = gauss_legendre_8(-0.3, 1.7, &g);
        let want = exact(1.7) - exact(-0.3);
        assert!((got - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn composite_panels() {
        let breaks = [-1.0, -0.6, -0.1, 0.0];
        let got = integrate_panels(&breaks, 3, f64::exp);
        assert!((got - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
