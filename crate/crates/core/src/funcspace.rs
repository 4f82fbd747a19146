//! Exactly-C¹ functions on `[-h, 0]` stored as piecewise cubic Hermite data.
//!
//! An [`IntervalFunction`] keeps one value and one derivative per node. Between
//! nodes it is the cubic Hermite interpolant of the two end pairs, so the
//! represented function is C¹ by construction: both neighbouring pieces
//! reproduce the stored derivative at a shared node.
//!
//! Sup-norms are evaluated on a uniform sampling grid of `samples + 1` points
//! together with all nodes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_SAMPLES: usize = 2048;

/// Two nodes closer than this (relative to `h`) are merged on a common grid.
const MERGE_TOL: f64 = 1e-14;

/// Node count and norm-sampling resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: usize,
    pub samples: usize,
}

impl GridSpec {
    pub fn new(nodes: usize, samples: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidGrid(format!("node count {nodes} < 8")));
        }
        if samples < 16 * nodes {
            return Err(Error::InvalidGrid(format!(
                "sampling resolution {samples} < 16 * {nodes}"
            )));
        }
        Ok(Self { nodes, samples })
    }

    /// `nodes + 1` equispaced points from `-h` to `0`; the end points are exact.
    pub fn uniform_nodes(&self, h: f64) -> Vec<f64> {
        uniform_points(h, self.nodes)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
            samples: DEFAULT_SAMPLES,
        }
    }
}

pub(crate) fn uniform_points(h: f64, intervals: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=intervals)
        .map(|j| -h + h * j as f64 / intervals as f64)
        .collect();
    pts[0] = -h;
    pts[intervals] = 0.0;
    pts
}

/// Cubic Hermite value on a piece of width `dt` at local coordinate `s ∈ [0, 1]`.
#[inline]
pub(crate) fn hermite_value(y0: f64, m0: f64, y1: f64, m1: f64, dt: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * dt * m0 + h01 * y1 + h11 * dt * m1
}

/// Derivative (with respect to `t`) of the Hermite piece.
#[inline]
pub(crate) fn hermite_deriv(y0: f64, m0: f64, y1: f64, m1: f64, dt: f64, s: f64) -> f64 {
    let s2 = s * s;
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -6.0 * s2 + 6.0 * s;
    let d11 = 3.0 * s2 - 2.0 * s;
    (d00 * y0 + d01 * y1) / dt + d10 * m0 + d11 * m1
}

/// Index of the Hermite piece `[nodes[i], nodes[i+1]]` containing `t`.
#[inline]
pub(crate) fn locate(nodes: &[f64], t: f64) -> usize {
    let idx = nodes.partition_point(|&x| x <= t);
    idx.saturating_sub(1).min(nodes.len() - 2)
}

/// A C¹ function `[-h, 0] → ℝ` in piecewise cubic Hermite form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalFunction")]
pub struct IntervalFunction {
    h: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    samples: usize,
}

#[derive(Deserialize)]
struct RawIntervalFunction {
    h: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl TryFrom<RawIntervalFunction> for IntervalFunction {
    type Error = Error;

    fn try_from(raw: RawIntervalFunction) -> Result<Self> {
        Self::from_data(raw.h, raw.nodes, raw.values, raw.derivs, raw.samples)
    }
}

impl IntervalFunction {
    /// Build from explicit Hermite data, validating the node layout.
    pub fn from_data(
        h: f64,
        nodes: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        samples: usize,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!("h = {h} must be positive")));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if values.len() != nodes.len() || derivs.len() != nodes.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values and {} derivatives",
                nodes.len(),
                values.len(),
                derivs.len()
            )));
        }
        if nodes[0] != -h || *nodes.last().unwrap() != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "nodes must run from -h = {} to 0, got [{}, {}]",
                -h,
                nodes[0],
                nodes.last().unwrap()
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        if values.iter().chain(derivs.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite Hermite data".into()));
        }
        if samples == 0 {
            return Err(Error::InvalidGrid("sampling resolution must be positive".into()));
        }
        Ok(Self {
            h,
            nodes,
            values,
            derivs,
            samples,
        })
    }

    /// The constant function with value `y`.
    pub fn constant(y: f64, h: f64, grid: GridSpec) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidDomain(format!("h = {h} must be positive")));
        }
        let nodes = grid.uniform_nodes(h);
        let n = nodes.len();
        Self::from_data(h, nodes, vec![y; n], vec![0.0; n], grid.samples)
    }

    pub fn zero(h: f64, grid: GridSpec) -> Result<Self> {
        Self::constant(0.0, h, grid)
    }

    /// Hermite fit of a closed-form function on the uniform grid.
    pub fn fit(
        h: f64,
        grid: GridSpec,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidDomain(format!("h = {h} must be positive")));
        }
        Self::fit_on_nodes(h, grid.uniform_nodes(h), grid.samples, f, df)
    }

    /// Hermite fit of a closed-form function on the given nodes.
    pub fn fit_on_nodes(
        h: f64,
        nodes: Vec<f64>,
        samples: usize,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = nodes.iter().map(|&t| f(t)).collect();
        let derivs = nodes.iter().map(|&t| df(t)).collect();
        Self::from_data(h, nodes, values, derivs, samples)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(1);
        self
    }

    /// Number of Hermite pieces.
    pub fn pieces(&self) -> usize {
        self.nodes.len() - 1
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if (-self.h..=0.0).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                t,
                lo: -self.h,
                hi: 0.0,
            })
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.value(t))
    }

    pub fn eval_deriv(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.deriv(t))
    }

    /// Unchecked evaluation; arguments are clamped into `[-h, 0]`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(-self.h, 0.0);
        let i = locate(&self.nodes, t);
        if self.nodes[i] == t {
            return self.values[i];
        }
        self.piece_value(i, t)
    }

    /// Unchecked derivative; arguments are clamped into `[-h, 0]`.
    pub fn deriv(&self, t: f64) -> f64 {
        let t = t.clamp(-self.h, 0.0);
        let i = locate(&self.nodes, t);
        if self.nodes[i] == t {
            return self.derivs[i];
        }
        self.piece_deriv(i, t)
    }

    /// Value of piece `i` (the cubic on `[nodes[i], nodes[i+1]]`) at `t`.
    pub fn piece_value(&self, i: usize, t: f64) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let dt = b - a;
        hermite_value(
            self.values[i],
            self.derivs[i],
            self.values[i + 1],
            self.derivs[i + 1],
            dt,
            (t - a) / dt,
        )
    }

    /// Derivative of piece `i` at `t`; used for one-sided limits at nodes.
    pub fn piece_deriv(&self, i: usize, t: f64) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let dt = b - a;
        hermite_deriv(
            self.values[i],
            self.derivs[i],
            self.values[i + 1],
            self.derivs[i + 1],
            dt,
            (t - a) / dt,
        )
    }

    /// Derivative of the evaluation map, `(φ̂, t̂) ↦ φ̂(t) + φ'(t) t̂`, on the open interval.
    pub fn ev_diff(&self, t: f64, dir: &IntervalFunction, t_hat: f64) -> Result<f64> {
        if !(t > -self.h && t < 0.0) {
            return Err(Error::OutOfRange {
                t,
                lo: -self.h,
                hi: 0.0,
            });
        }
        same_domain(self, dir)?;
        Ok(dir.value(t) + self.deriv(t) * t_hat)
    }

    /// Sorted points used for sup-norms: the uniform sampling grid plus all nodes.
    pub fn sample_points(&self) -> Vec<f64> {
        let mut pts = uniform_points(self.h, self.samples);
        pts.extend_from_slice(&self.nodes);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn sampled_max(&self, lo: f64, hi: f64, g: impl Fn(&Self, f64) -> f64) -> f64 {
        let mut best: f64 = 0.0;
        for t in self.sample_points() {
            if t < lo || t > hi {
                continue;
            }
            best = best.max(g(self, t).abs());
        }
        for t in [lo, hi] {
            if (-self.h..=0.0).contains(&t) {
                best = best.max(g(self, t).abs());
            }
        }
        best
    }

    /// `max |φ|` over the sampling grid.
    pub fn norm_c(&self) -> f64 {
        self.sampled_max(-self.h, 0.0, Self::value)
    }

    /// `max |φ'|` over the sampling grid.
    pub fn max_abs_deriv(&self) -> f64 {
        self.sampled_max(-self.h, 0.0, Self::deriv)
    }

    /// `max |φ| + max |φ'|`, the two maxima taken separately.
    pub fn norm_c1(&self) -> f64 {
        self.norm_c() + self.max_abs_deriv()
    }

    /// `max |φ(t)|` over sampled `t ∈ [lo, hi]` (end points included).
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        self.sampled_max(lo, hi, Self::value)
    }

    /// `max |φ'(t)|` over sampled `t ∈ [lo, hi]` (end points included).
    pub fn max_abs_deriv_on(&self, lo: f64, hi: f64) -> f64 {
        self.sampled_max(lo, hi, Self::deriv)
    }

    /// Re-express the function on a finer node set containing its own nodes.
    ///
    /// When `nodes` refines `self.nodes()` the result represents the same
    /// cubic pieces; otherwise it is the Hermite interpolant on `nodes`.
    pub fn resample(&self, nodes: Vec<f64>) -> Result<Self> {
        let values = nodes.iter().map(|&t| self.value(t)).collect();
        let derivs = nodes.iter().map(|&t| self.deriv(t)).collect();
        Self::from_data(self.h, nodes, values, derivs, self.samples)
    }

    /// `a·x + y` on the union of both node sets.
    ///
    /// On the common refinement both inputs are cubic on every piece, so the
    /// result is exact up to rounding.
    pub fn axpy(a: f64, x: &IntervalFunction, y: &IntervalFunction) -> Result<Self> {
        same_domain(x, y)?;
        let nodes = merge_nodes(&x.nodes, &y.nodes, x.h);
        let values = nodes.iter().map(|&t| a * x.value(t) + y.value(t)).collect();
        let derivs = nodes.iter().map(|&t| a * x.deriv(t) + y.deriv(t)).collect();
        Self::from_data(x.h, nodes, values, derivs, x.samples.max(y.samples))
    }

    /// `a·x + b·y` on the union of both node sets.
    pub fn lincomb(a: f64, x: &IntervalFunction, b: f64, y: &IntervalFunction) -> Result<Self> {
        same_domain(x, y)?;
        let nodes = merge_nodes(&x.nodes, &y.nodes, x.h);
        let values = nodes
            .iter()
            .map(|&t| a * x.value(t) + b * y.value(t))
            .collect();
        let derivs = nodes
            .iter()
            .map(|&t| a * x.deriv(t) + b * y.deriv(t))
            .collect();
        Self::from_data(x.h, nodes, values, derivs, x.samples.max(y.samples))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            h: self.h,
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            derivs: self.derivs.iter().map(|v| a * v).collect(),
            samples: self.samples,
        }
    }

    /// `|self - other|_{C¹}` on the sampling grid of the common refinement.
    pub fn distance_c1(&self, other: &IntervalFunction) -> Result<f64> {
        Ok(Self::axpy(-1.0, other, self)?.norm_c1())
    }

    /// `|self - other|_C` on the sampling grid of the common refinement.
    pub fn distance_c(&self, other: &IntervalFunction) -> Result<f64> {
        Ok(Self::axpy(-1.0, other, self)?.norm_c())
    }

    /// Write `t,value,deriv` rows over the sampling points.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        wtr.write_record(["t", "value", "deriv"])?;
        for t in self.sample_points() {
            wtr.serialize((t, self.value(t), self.deriv(t)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn same_domain(x: &IntervalFunction, y: &IntervalFunction) -> Result<()> {
    if x.h != y.h {
        return Err(Error::IncompatibleDomain(x.h, y.h));
    }
    Ok(())
}

/// Sorted union of two node sets; near-coincident nodes are merged.
pub(crate) fn merge_nodes(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    if a == b {
        return a.to_vec();
    }
    let tol = MERGE_TOL * h;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&last) if next - last <= tol => {}
            _ => out.push(next),
        }
    }
    // the end points must stay exact
    let n = out.len();
    out[0] = -h;
    if out[n - 1] != 0.0 {
        if -out[n - 1] <= tol {
            out[n - 1] = 0.0;
        } else {
            out.push(0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn square() -> IntervalFunction {
        IntervalFunction::fit(1.0, grid(), |t| t * t, |t| 2.0 * t).unwrap()
    }

    #[test]
    fn grid_spec_rejects_coarse_grids() {
        assert!(GridSpec::new(7, 2048).is_err());
        assert!(GridSpec::new(64, 1023).is_err());
        assert!(GridSpec::new(64, 1024).is_ok());
    }

    #[test]
    fn constant_function() {
        let zero = IntervalFunction::constant(0.0, 1.0, grid()).unwrap();
        assert_eq!(zero.eval(-0.3).unwrap(), 0.0);
        assert_eq!(zero.eval_deriv(0.0).unwrap(), 0.0);
        let three = IntervalFunction::constant(3.0, 1.0, grid()).unwrap();
        assert_eq!(three.eval(-1.0).unwrap(), 3.0);
        assert_eq!(three.eval(0.0).unwrap(), 3.0);
        assert!(matches!(
            IntervalFunction::constant(1.0, 0.0, grid()),
            Err(Error::InvalidDomain(_))
        ));
    }

    #[test]
    fn reproduces_quadratics() {
        let sq = square();
        assert!((sq.eval(-0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((sq.eval_deriv(-0.5).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn sine_fit_accuracy() {
        let g = GridSpec::new(64, 2048).unwrap();
        let s = IntervalFunction::fit(1.0, g, f64::sin, f64::cos).unwrap();
        assert!((s.eval(-0.7).unwrap() - (-0.7f64).sin()).abs() < 1e-10);
        // derivative error of the cubic Hermite piece: |f''''| dt³ θ(1-θ)|1-2θ| / 12,
        // here dt = 1/64 and θ = 0.2, i.e. about 2e-8
        let dt: f64 = 1.0 / 64.0;
        let bound = 0.7f64.sin() * dt.powi(3) * 0.2 * 0.8 * 0.6 / 12.0;
        let err = (s.eval_deriv(-0.7).unwrap() - (-0.7f64).cos()).abs();
        assert!(err < 1.05 * bound, "{err} vs {bound}");
        let fine = IntervalFunction::fit(1.0, GridSpec::new(128, 2048).unwrap(), f64::sin, f64::cos)
            .unwrap();
        assert!((fine.eval_deriv(-0.7).unwrap() - (-0.7f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn out_of_range() {
        let sq = square();
        assert!(matches!(sq.eval(0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(sq.eval_deriv(-1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn ev_diff_formula() {
        let sq = square();
        let one = IntervalFunction::constant(1.0, 1.0, grid()).unwrap();
        let zero = IntervalFunction::zero(1.0, grid()).unwrap();
        assert!((sq.ev_diff(-0.5, &one, 2.0).unwrap() + 1.0).abs() < 1e-14);
        assert_eq!(sq.ev_diff(-0.5, &one, 0.0).unwrap(), 1.0);
        assert!((sq.ev_diff(-0.5, &zero, 3.0).unwrap() + 3.0).abs() < 1e-14);
        assert!(sq.ev_diff(0.0, &one, 1.0).is_err());
        assert!(sq.ev_diff(-1.0, &one, 1.0).is_err());
    }

    #[test]
    fn norms() {
        let c = IntervalFunction::constant(-3.0, 1.0, grid()).unwrap();
        assert_eq!(c.norm_c(), 3.0);
        assert_eq!(c.norm_c1(), 3.0);
        let lin = IntervalFunction::fit(1.0, grid(), |t| t, |_| 1.0).unwrap();
        assert_eq!(lin.norm_c(), 1.0);
        assert_eq!(lin.norm_c1(), 2.0);
    }

    #[test]
    fn sin5_norms_against_dense_reference() {
        let s = IntervalFunction::fit(1.0, grid(), |t| (5.0 * t).sin(), |t| 5.0 * (5.0 * t).cos())
            .unwrap();
        // dense reference at 10⁶ points
        let (mut mv, mut md) = (0.0f64, 0.0f64);
        for j in 0..=1_000_000 {
            let t = -1.0 + j as f64 * 1e-6;
            mv = mv.max((5.0 * t).sin().abs());
            md = md.max((5.0 * (5.0 * t).cos()).abs());
        }
        assert!((s.norm_c() - mv).abs() < 1e-3);
        assert!((s.norm_c1() - (mv + md)).abs() < 1e-3);
        assert!((s.norm_c() - 1.0).abs() < 1e-3);
        assert!((s.norm_c1() - 6.0).abs() < 1e-3);

        let err = |m: usize| (s.clone().with_samples(m).norm_c() - mv).abs();
        assert!(err(2048) <= err(512));
    }

    #[test]
    fn axpy_examples() {
        let lin = IntervalFunction::fit(1.0, grid(), |t| t, |_| 1.0).unwrap();
        let sq = square();
        let zero = IntervalFunction::zero(1.0, grid()).unwrap();
        assert_eq!(IntervalFunction::axpy(0.0, &lin, &sq).unwrap(), sq);
        assert_eq!(IntervalFunction::axpy(1.0, &lin, &zero).unwrap(), lin);
        let out = IntervalFunction::axpy(2.0, &lin, &sq).unwrap();
        for (k, &t) in out.nodes().iter().enumerate() {
            assert_eq!(out.values()[k], 2.0 * t + t * t);
            assert_eq!(out.derivs()[k], 2.0 + 2.0 * t);
        }
        let other = IntervalFunction::zero(2.0, grid()).unwrap();
        assert!(matches!(
            IntervalFunction::axpy(1.0, &lin, &other),
            Err(Error::IncompatibleDomain(..))
        ));
    }

    #[test]
    fn merge_keeps_endpoints_and_order() {
        let a = vec![-1.0, -0.5, 0.0];
        let b = vec![-1.0, -0.25, -0.5 + 1e-17, 0.0];
        let m = merge_nodes(&a, &b, 1.0);
        assert_eq!(m, vec![-1.0, -0.5, -0.25, 0.0]);
    }

    #[test]
    fn json_and_csv() {
        let sq = square();
        let s = serde_json::to_string(&sq).unwrap();
        let back: IntervalFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sq);
        let bad = r#"{"h":1.0,"nodes":[-1.0,-0.5],"values":[0,0],"derivs":[0,0]}"#;
        assert!(serde_json::from_str::<IntervalFunction>(bad).is_err());
        let mut buf = Vec::new();
        sq.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,value,deriv\n-1.0,1.0,-2.0\n"));
    }
}
