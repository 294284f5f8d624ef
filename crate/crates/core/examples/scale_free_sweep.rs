// One controller, designed from the agent model alone, on seeded random
// graphs of growing size.

use satsync::analysis::{self, MetricsConfig, RunResult, SweepSettings};
use satsync::scenario::{self, Overrides};
use satsync::sim::StepConfig;

pub fn run_example() -> satsync::Result<Vec<RunResult>> {
    let r = scenario::parse_scenario("preset = \"example1\"\n", None, &Overrides::default())?;
    let settings = SweepSettings {
        x_r0: r.x_r0.clone(),
        step: StepConfig {
            dt: 1e-3,
            horizon: 400.0,
            record_every: 100,
        },
        metrics: MetricsConfig::default(),
        seed: 1,
        jobs: 2,
    };
    let runs = analysis::scale_free_sweep(&r.model, &r.protocol_spec(), &[3, 10, 25], &settings)?;
    for run in &runs {
        println!(
            "N={:<3} converged={:<5} settled at {:?} s, controller {}",
            run.agents,
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
