//! Piecewise cubic Hermite functions on `[-h, 0]`: fitting, norms, linear
//! operations and JSON round trips.

use sdde_chart::{GridSpec, IntervalFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default();
    let phi = IntervalFunction::fit(1.0, grid, |t| (3.0 * t).sin(), |t| 3.0 * (3.0 * t).cos())?;
    let psi = IntervalFunction::fit(1.0, grid, |t| t * t, |t| 2.0 * t)?;
    println!("|phi|_C = {:.6}, |phi|_C1 = {:.6}", phi.norm_c(), phi.norm_c1());

    let sum = IntervalFunction::axpy(0.5, &psi, &phi)?;
    println!("(phi + psi/2)(-0.25) = {:.9}", sum.eval(-0.25)?);
    println!("max |phi'| on [-1, -0.5] = {:.6}", phi.max_abs_deriv_on(-1.0, -0.5));

    let text = serde_json::to_string(&phi)?;
    let back: IntervalFunction = serde_json::from_str(&text)?;
    assert_eq!(back, phi);
    println!("JSON round trip: {} bytes, {} pieces", text.len(), back.pieces());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
