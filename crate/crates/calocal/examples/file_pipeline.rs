//! The five-stage file pipeline driven through the library API, writing the
//! same artifacts the `calocal` binary produces: event files, a truth
//! profile, predicted coefficients, a JSON-lines report, metrics, and
//! figure CSVs.
//!
//! Run with: `cargo run --release --example file_pipeline`

use calocal::cli;

fn main() -> calocal::Result<()> {
    let dir = tempfile::tempdir()?;
    let root = dir.path();
    std::fs::write(
        root.join("config.toml"),
        r#"
[detector]
n_rows = 12
n_cols = 12

[shower]
n_events = 1200

[train]
epochs = 20
critic_hidden = [64, 32]
mask_half_width = 4

[metrics]
n_bins = 40
"#,
    )?;
    let p = |name: &str| root.join(name);

    cli::cmd_simulate(&p("config.toml"), Some(1), &p("undamaged.calo"), None)?;
    cli::cmd_simulate(&p("config.toml"), Some(2), &p("source.calo"), None)?;
    cli::cmd_damage(
        &p("config.toml"),
        &p("source.calo"),
        &p("damaged.calo"),
        &p("truth.csv"),
        None,
    )?;
    cli::cmd_calibrate(
        &p("config.toml"),
        &p("undamaged.calo"),
        &p("damaged.calo"),
        &p("coeffs.csv"),
        &p("report.jsonl"),
        Some(&p("truth.csv")),
        Some(5),
    )?;
    cli::cmd_evaluate(
        &p("config.toml"),
        &p("damaged.calo"),
        &p("undamaged.calo"),
        &p("coeffs.csv"),
        Some(&p("truth.csv")),
        &p("metrics.json"),
    )?;
    cli::cmd_report(&p("report.jsonl"), &p("figs"))?;

    println!("\nmetrics.json:");
    println!("{}", std::fs::read_to_string(p("metrics.json"))?);
    println!("artifacts written under {}:", root.display());
    let mut names: Vec<String> = std::fs::read_dir(root)?
        .chain(std::fs::read_dir(p("figs"))?)
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    names.sort();
    for n in names {
        println!("  {n}");
    }
    Ok(())
}
