//! Type I / Type II error frequencies of both tests on star graphs, printed
//! as a CSV table. Small by default; pass `--full` for 500 repetitions.

use graphtest::simulation::{run_error_experiment, SimConfig};

fn main() -> graphtest::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let cfg = if full {
        SimConfig::default()
    } else {
        SimConfig { repetitions: 20, permutations: 100, ..SimConfig::default() }
    };
    eprintln!("{} repetitions per delta, M = {}", cfg.repetitions, cfg.permutations);
    let report = run_error_experiment(&cfg)?;
    print!("{}", report.to_csv());
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}
