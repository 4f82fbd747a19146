//! Driving the command layer from code: a TOML configuration with overrides,
//! one command, and the report files it writes.

use clap::Parser;
use sdde_chart::cli::{load_config, run, Cli};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let text = r#"
        seed = 11
        [delay]
        preset = "integral"
        [delay.delta]
        kind = "scaled-logistic"
        rate = 2.0
        shift = 0.5
        [delay.v]
        kind = "log-ramp"
        scale = 1.0
    "#;
    let config = load_config(text, &["f.preset=\"identity\"".into()])?;
    println!("f = {}, delta rate = {:?}", config.f.preset, config.delay.delta.as_ref().and_then(|d| d.rate));

    let bad = load_config(text, &["delay.delta.rate=-1".into()]);
    println!("rejected: {}", bad.unwrap_err());

    let out = std::env::temp_dir().join(format!("sdde-chart-example-{}", std::process::id()));
    let cli = Cli::try_parse_from([
        "sdde-chart",
        "scenario",
        "prop4",
        "--out",
        out.to_str().ok_or("non-UTF-8 temp dir")?,
    ])?;
    let report = run(&cli)?;
    println!("{}: passed = {}, {}", report.command, report.passed, report.metrics["hypothesis"]);
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
