// The 7-state mixed-case example (P6, ρ = 1, published 7×4 F and 3×7 K) on
// the 3-node and 10-node reference graphs.

use satsync::analysis::{self, MetricsConfig, RunResult};
use satsync::presets::Preset;
use satsync::scenario::{self, Overrides};

pub fn run_example() -> satsync::Result<Vec<RunResult>> {
    let preset = Preset::Example2;
    let base = scenario::parse_scenario("preset = \"example2\"\n", None, &Overrides::default())?;
    let dec = base.decomposition().expect("example2 is a mixed-case model");
    println!("partition (A_S, A_F, A_ω) = {:?}, ω = {:?}", dec.partition(), dec.omegas);
    let mut runs = Vec::new();
    for (label, graph) in preset.graphs() {
        let sc = base.scenario_on(graph)?;
        let run = analysis::run_scenario(label, &sc, base.verify(), MetricsConfig::default())?;
        println!(
            "{label:<8} N={:<3} converged={:<5} final-window error={:.3e} terminal ē={:.3e}",
            run.agents,
            run.report.converged,
            run.report.final_window_error,
            run.report.terminal_ebar.unwrap_or(0.0)
        );
        runs.push(run);
    }
    Ok(runs)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
