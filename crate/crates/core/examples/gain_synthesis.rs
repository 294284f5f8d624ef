// Gains synthesized from the agent model alone for every protocol kind,
// each checked against its design conditions.

use satsync::agent::AgentModel;
use satsync::gains::{self, VerifyReport};
use satsync::linalg::Matrix;
use satsync::presets;
use satsync::protocol::ProtocolKind;

fn oscillator(c: Matrix) -> satsync::Result<AgentModel> {
    AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., -1., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        c,
    )
}

fn double_integrator(c: Matrix) -> satsync::Result<AgentModel> {
    AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., 0., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        c,
    )
}

pub fn run_example() -> satsync::Result<Vec<(ProtocolKind, VerifyReport)>> {
    let full = Matrix::identity(2, 2);
    let position = Matrix::from_row_slice(1, 2, &[1., 0.]);
    let example2 = presets::example2_model();
    let cases = [
        (ProtocolKind::P1, oscillator(full.clone())?),
        (ProtocolKind::P2, oscillator(position.clone())?),
        (ProtocolKind::P3, double_integrator(full)?),
        (ProtocolKind::P4, double_integrator(position)?),
        (ProtocolKind::P5, AgentModel::new(example2.a().clone(), example2.b().clone(), Matrix::identity(7, 7))?),
        (ProtocolKind::P6, example2),
    ];
    let mut out = Vec::new();
    for (kind, model) in cases {
        let g = gains::synthesize(&model, kind, 1.0, None)?;
        let report = gains::verify_gains(&model, kind, &g);
        println!("{kind}: {:?} model, all checks passed = {}", model.class(), report.passed());
        for c in &report.checks {
            println!("    {:<22} {:<5} {}", c.name, c.passed, c.detail);
        }
        out.push((kind, report));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
