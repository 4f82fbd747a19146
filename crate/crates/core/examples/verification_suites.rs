//! The seeded verification suites at reduced instance counts.

use sdde_chart::verify::{self, Counts, IntegratorRuns, ScenarioParams, Setup, Tolerances};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let setup = Setup::reference(7)?;
    let atlas = setup.atlas()?;
    let tol = Tolerances::default();
    let counts = Counts {
        transversal: 50,
        diffeo: 50,
        contraction: 50,
        roundtrip: 20,
        perturbations: 5,
        derivative: 10,
        ..Counts::default()
    };
    let (transversal, _) = verify::transversal_suite(&setup, &atlas, &counts, &tol)?;
    let suites = [
        transversal,
        verify::diffeo_suite(&setup, &atlas, &counts, &tol)?,
        verify::roundtrip_suite(&setup, &atlas, &counts, &tol)?,
        verify::scenario_suite(&setup, &ScenarioParams::default(), &tol)?,
        verify::integrator_suite(&setup, &IntegratorRuns::default(), &tol)?,
    ];
    for suite in &suites {
        println!("[{}]", suite.name);
        for c in &suite.checks {
            let mark = if c.passed { "ok" } else { "--" };
            println!("  {mark} {:<55} {:>12.3e} {} {:.3e}", c.name, c.measured, c.relation, c.threshold);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
