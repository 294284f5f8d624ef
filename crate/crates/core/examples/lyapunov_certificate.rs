// Lyapunov functions sampled along closed-loop trajectories.
//
// The full-state neutrally stable protocol gets a certificate `V = Σ x̃ᵢᵀPx̃ᵢ + eᵀP̄e`
// and the full-state double-integrator protocol gets the trace built from
// `P_d = −K₁`, a network Lyapunov solve and the saturation potential.

use satsync::analysis::{self, LyapunovCertificate};
use satsync::agent::AgentModel;
use satsync::gains::{self, GainSet};
use satsync::graph::CommGraph;
use satsync::linalg::Matrix;
use satsync::presets;
use satsync::protocol::{build_protocol, ProtocolKind};
use satsync::sim::{self, Scenario};

pub struct CertificateRun {
    pub label: &'static str,
    pub samples: usize,
    pub v_start: f64,
    pub v_end: f64,
    /// Largest `(V_{k+1} − V_k) / (1 + V_k)` over the run.
    pub worst_increase: f64,
}

pub fn neutral_run(rho: f64, horizon: f64) -> satsync::Result<(LyapunovCertificate, CertificateRun)> {
    let model = AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., -1., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        Matrix::identity(2, 2),
    )?;
    let mut gains = GainSet::new(rho);
    gains.p = Some(gains::solve_p_neutral(model.a())?);
    let protocol = build_protocol(ProtocolKind::P1, &model, None, &gains)?;
    let graph = CommGraph::example_b();
    let sc = Scenario::seeded(model.clone(), graph.clone(), protocol, vec![1.0, 0.0], 7, 1e-3, horizon, 10);
    let traj = sim::simulate(&sc)?;
    let p = gains.p.clone().expect("set above");
    let cert = analysis::lyapunov_certificate_p1(&model, &graph, rho, &p, Some(&traj))?;
    let run = CertificateRun {
        label: "P1 neutrally stable",
        samples: cert.v_trace.len(),
        v_start: cert.v_trace[0],
        v_end: *cert.v_trace.last().expect("non-empty trace"),
        worst_increase: analysis::worst_increase(&cert.v_trace),
    };
    Ok((cert, run))
}

pub fn double_integrator_run(horizon: f64) -> satsync::Result<CertificateRun> {
    let model = AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., 0., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        Matrix::identity(2, 2),
    )?;
    let mut gains = GainSet::new(1.0);
    gains.k = Some(presets::example1_k());
    let protocol = build_protocol(ProtocolKind::P3, &model, None, &gains)?;
    let graph = CommGraph::example_a();
    let sc = Scenario::seeded(model.clone(), graph.clone(), protocol, vec![1.0, 0.5], 7, 1e-3, horizon, 10);
    let traj = sim::simulate(&sc)?;
    let trace = analysis::lyapunov_trace_p3(&model, &graph, 1.0, &presets::example1_k(), &traj)?;
    Ok(CertificateRun {
        label: "P3 double integrator",
        samples: trace.v_trace.len(),
        v_start: trace.v_trace[0],
        v_end: *trace.v_trace.last().expect("non-empty trace"),
        worst_increase: analysis::worst_increase(&trace.v_trace),
    })
}

pub fn run_example() -> satsync::Result<Vec<CertificateRun>> {
    let (cert, p1) = neutral_run(1.0, 30.0)?;
    println!("network Lyapunov residual λmax = {:.3e}, γ = {}", cert.residual_max, cert.gamma_term);
    let p3 = double_integrator_run(30.0)?;
    let runs = vec![p1, p3];
    for r in &runs {
        println!(
            "{:<22} samples={:<5} V(0)={:<12.5e} V(T)={:<12.5e} worst relative increase={:.3e}",
            r.label, r.samples, r.v_start, r.v_end, r.worst_increase
        );
    }
    Ok(runs)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
