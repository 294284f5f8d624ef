// Scaling the gain parameter ρ over two decades leaves convergence intact.

use satsync::analysis::{self, MetricsConfig, RunResult};
use satsync::scenario::{self, Overrides};

pub fn run_example() -> satsync::Result<Vec<RunResult>> {
    let ov = Overrides {
        horizon: Some(300.0),
        record_every: Some(100),
        ..Default::default()
    };
    let r = scenario::parse_scenario("preset = \"example1\"\n", None, &ov)?;
    let runs = analysis::gain_margin_sweep(&r.scenario()?, &r.protocol_spec(), &[1.0, 10.0, 100.0], MetricsConfig::default(), 2)?;
    for run in &runs {
        println!(
            "rho={:<6} converged={:<5} settled at {:?} s, controller {}",
            run.rho,
            run.report.converged,
            run.report.convergence_time,
            &run.controller_hash[..12]
        );
    }
    Ok(runs)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
