//! The transversal family `χ(v, r)`: slope 1 at zero, support in `(r, 0]`,
//! size below `H(v)`, and its derivative in `(v, r)`.

use std::sync::Arc;

use sdde_chart::chart::ChartAtlas;
use sdde_chart::delay::{IntegralDelay, ScalarField};
use sdde_chart::GridSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let atlas = ChartAtlas::new(
        ScalarField::sin(),
        Arc::new(IntegralDelay::reference(1.0)?),
        1.0,
        GridSpec::default(),
    )?;
    let fam = atlas.family();
    println!("{:>6} {:>6} {:>3} {:>12} {:>12} {:>12}", "v", "r", "n", "chi'(0)", "|chi|_C", "H(v)");
    for (v, r) in [(0.0, -0.5), (2.0, -0.2), (-7.5, -0.05), (9.0, -0.01)] {
        let chi = fam.chi(v, r)?;
        println!(
            "{v:>6} {r:>6} {:>3} {:>12.9} {:>12.3e} {:>12.3e}",
            fam.domain_index(v, r)?,
            chi.deriv(0.0),
            chi.norm_c(),
            atlas.bound_at(v)
        );
        assert_eq!(chi.max_abs_on(-1.0, r), 0.0);
    }
    // Dχ vanishes where a single cutoff is active; it lives on the overlap bands
    for k in 0..=8 {
        let r = -0.16 + 0.0075 * k as f64;
        let g = fam.dchi(2.0, r, 0.0, 1.0)?;
        println!("|D_r chi(2, {r:.4})|_C = {:.3e}", g.norm_c());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
