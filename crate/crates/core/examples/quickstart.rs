// Smallest end-to-end run: a harmonic oscillator network tracking its
// exosystem through saturated inputs with automatically synthesized gains.

use satsync::agent::AgentModel;
use satsync::analysis::{self, MetricsConfig, RunResult};
use satsync::gains;
use satsync::graph::CommGraph;
use satsync::linalg::Matrix;
use satsync::protocol::{build_protocol, ProtocolKind};
use satsync::sim::Scenario;

pub fn run_example() -> satsync::Result<RunResult> {
    let model = AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., -1., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        Matrix::identity(2, 2),
    )?;
    println!("model class: {:?}, coupling: {:?}", model.class(), model.coupling());

    let kind = ProtocolKind::P1;
    let gains = gains::synthesize(&model, kind, 1.0, None)?;
    let report = gains::verify_gains(&model, kind, &gains);
    println!("gain checks passed: {}", report.passed());

    let protocol = build_protocol(kind, &model, None, &gains)?;
    let graph = CommGraph::example_a();
    let scenario = Scenario::seeded(model, graph, protocol, vec![1.0, 0.0], 1, 1e-3, 30.0, 10);
    let run = analysis::run_scenario("quickstart", &scenario, report, MetricsConfig::default())?;
    println!(
        "converged: {} (final-window error {:.3e}, settled at t = {:?})",
        run.report.converged, run.report.final_window_error, run.report.convergence_time
    );
    Ok(run)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
