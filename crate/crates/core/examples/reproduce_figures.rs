//! Reduced-size figure reproduction through the library, written the same
//! way the CLI writes them.
//!
//! `cargo run --release --example reproduce_figures -- out/`

use std::path::PathBuf;
use std::time::Instant;

use linksim::cli::write_figure;
use linksim::config::RunConfig;
use linksim::engine::Engine;
use linksim::figures;

fn main() -> linksim::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    let cfg = RunConfig::from_toml_str(
        r#"
[run]
slots = 50000

[alg1]
search_slots = 10000
rate_points = 12
delta_points = 6
refinement_rounds = 1

[fig1]
snr_db = [0.0, 6.0, 12.0, 18.0]

[fig2]
beta = [0.2, 0.9]
snr_db = [6.0, 12.0]
"#,
    )?;
    cfg.validate()?;
    let engine = Engine::new(0)?;
    let seed = 1;
    for (stem, run) in [("fig1", figures::fig1 as fn(_, _, _) -> _), ("fig2", figures::fig2)] {
        let started = Instant::now();
        let table = run(&cfg, seed, &engine)?;
        write_figure(&dir, stem, &cfg, seed, &table, started.elapsed().as_secs_f64())?;
        println!("{} ({} rows)", dir.join(format!("{stem}.csv")).display(), table.rows.len());
    }
    Ok(())
}
