//! Synchronization metrics, Lyapunov certificates, parameter sweeps and
//! report export.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{saturation_potential, AgentModel, Coupling, MixedDecomposition, ModelClass};
use crate::error::{Error, Result};
use crate::gains::{GainSet, VerifyReport};
use crate::graph::CommGraph;
use crate::linalg::{self, Matrix};
use crate::protocol::{build_protocol, ProtocolKind, ProtocolRealization};
use crate::sim::{self, Scenario, StepConfig, TrajectoryRecord};

pub const DEFAULT_TOL: f64 = 1e-2;
pub const DEFAULT_WINDOW: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub tol: f64,
    pub window: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            tol: DEFAULT_TOL,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub times: Vec<f64>,
    /// `maxᵢ ‖xᵢ − x_r‖`.
    pub max_error: Vec<f64>,
    /// `maxᵢⱼ ‖xᵢ − xⱼ‖`.
    pub pairwise_error: Vec<f64>,
    pub converged: bool,
    /// Start of the terminal band where `max_error < tol`.
    pub convergence_time: Option<f64>,
    pub tol: f64,
    pub window: f64,
    /// Largest `max_error` over the final window.
    pub final_window_error: f64,
    /// `‖e‖∞` at the last sample.
    pub terminal_e: f64,
    /// `‖ē‖∞` at the last sample, partial-state runs only.
    pub terminal_ebar: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn sync_metrics(traj: &TrajectoryRecord, cfg: MetricsConfig) -> Result<SyncReport> {
    let last = traj
        .times
        .last()
        .copied()
        .ok_or_else(|| Error::Simulation("empty trajectory".into()))?;
    if cfg.window > last + 1e-12 {
        return Err(Error::Simulation(format!(
            "window {} exceeds the horizon {last}",
            cfg.window
        )));
    }
    let n = traj.n;
    let max_error: Vec<f64> = (0..traj.len()).map(|k| traj.max_tracking_error(k)).collect();
    let pairwise_error = traj
        .x
        .iter()
        .map(|x| {
            let agents: Vec<&[f64]> = x.chunks(n).collect();
            let mut worst: f64 = 0.0;
            for i in 0..agents.len() {
                for j in i + 1..agents.len() {
                    let d: Vec<f64> = agents[i].iter().zip(agents[j]).map(|(a, b)| a - b).collect();
                    worst = worst.max(norm(&d));
                }
            }
            worst
        })
        .collect();
    let start = last - cfg.window;
    let final_window_error = traj
        .times
        .iter()
        .zip(&max_error)
        .filter(|(t, _)| **t >= start - 1e-12)
        .map(|(_, e)| *e)
        .fold(0.0, f64::max);
    let converged = final_window_error < cfg.tol;
    let convergence_time = converged.then(|| {
        let k = max_error.iter().rposition(|&e| e >= cfg.tol).map_or(0, |k| k + 1);
        traj.times[k]
    });
    Ok(SyncReport {
        times: traj.times.clone(),
        max_error,
        pairwise_error,
        converged,
        convergence_time,
        tol: cfg.tol,
        window: cfg.window,
        final_window_error,
        terminal_e: traj.e.last().map_or(0.0, |e| inf_norm(e)),
        terminal_ebar: traj.ebar.last().map(|e| inf_norm(e)),
    })
}

/// `I ⊗ A − L̄ ⊗ I`.
pub fn error_matrix(a: &Matrix, lbar: &Matrix) -> Matrix {
    let n = a.nrows();
    let count = lbar.nrows();
    linalg::kron(&Matrix::identity(count, count), a) - linalg::kron(lbar, &Matrix::identity(n, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    pub p: Matrix,
    pub pbar: Matrix,
    /// `1 + ρ‖BᵀP‖²`.
    pub gamma_term: f64,
    /// `λ_max(MᵀP̄ + P̄M + γI)`.
    pub residual_max: f64,
    pub v_trace: Vec<f64>,
}

impl LyapunovCertificate {
    /// `V = x̃ᵀ(I⊗P)x̃ + eᵀP̄e` at every recorded sample.
    pub fn evaluate(&self, traj: &TrajectoryRecord) -> Vec<f64> {
        let n = traj.n;
        (0..traj.len())
            .map(|k| {
                let x_r = &traj.x_r[k];
                let mut v = 0.0;
                for x in traj.x[k].chunks(n) {
                    let xt: Vec<f64> = x.iter().zip(x_r).map(|(a, b)| a - b).collect();
                    v += quad(&self.p, &xt);
                }
                v + quad(&self.pbar, &traj.e[k])
            })
            .collect()
    }
}

fn quad(p: &Matrix, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            acc += x[i] * p[(i, j)] * x[j];
        }
    }
    acc
}

fn require_rootset(graph: &CommGraph) -> Result<()> {
    if graph.check_rootset() {
        Ok(())
    } else {
        Err(Error::Graph("graph fails the root-set condition".into()))
    }
}

/// Certificate for the full-state neutrally stable protocol, with `V`
/// sampled along `traj` when one is given.
pub fn lyapunov_certificate_p1(
    model: &AgentModel,
    graph: &CommGraph,
    rho: f64,
    p: &Matrix,
    traj: Option<&TrajectoryRecord>,
) -> Result<LyapunovCertificate> {
    if model.class() != ModelClass::NeutrallyStable || model.coupling() != Coupling::Full {
        return Err(Error::Model(
            "certificate needs a neutrally stable model with full-state coupling".into(),
        ));
    }
    require_rootset(graph)?;
    let lbar = graph.laplacian()?.expanded;
    let m = error_matrix(model.a(), &lbar);
    let bp = model.b().transpose() * p;
    let gamma = 1.0 + rho * linalg::norm2(&bp).powi(2);
    let dim = m.nrows();
    let rhs = Matrix::identity(dim, dim) * gamma;
    let pbar = linalg::solve_lyapunov(&m, &rhs)?;
    let residual_max = linalg::max_sym_eigenvalue(&(m.transpose() * &pbar + &pbar * &m + &rhs))?;
    let mut cert = LyapunovCertificate {
        p: p.clone(),
        pbar,
        gamma_term: gamma,
        residual_max,
        v_trace: Vec::new(),
    };
    if let Some(traj) = traj {
        cert.v_trace = cert.evaluate(traj);
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleIntegratorTrace {
    pub p_d: Matrix,
    pub p_big_d: Matrix,
    pub gamma: f64,
    pub epsilon: f64,
    pub v_trace: Vec<f64>,
}

/// Lyapunov function of the full-state double-integrator protocol,
/// `V = ρ x̃ᵀ(I⊗blkdiag(0, P_d))x̃ + eᵀP_D e + Σᵢ 2∫₀^{uᵢ}σ` with `P_d = −K₁`.
pub fn lyapunov_trace_p3(
    model: &AgentModel,
    graph: &CommGraph,
    rho: f64,
    k: &Matrix,
    traj: &TrajectoryRecord,
) -> Result<DoubleIntegratorTrace> {
    if model.class() != ModelClass::DoubleIntegrator || model.coupling() != Coupling::Full {
        return Err(Error::Model(
            "trace needs a double-integrator model with full-state coupling".into(),
        ));
    }
    require_rootset(graph)?;
    let mm = model.m();
    let perm = model
        .classification()
        .di_permutation
        .clone()
        .expect("double integrators carry a permutation");
    let k1 = k.view((0, 0), (mm, mm)).into_owned();
    let k2 = k.view((0, mm), (mm, mm)).into_owned();
    if (&k1 - k1.transpose()).amax() > 1e-12 {
        return Err(Error::Model("K1 must be symmetric for this Lyapunov function".into()));
    }
    let p_d = -k1;
    let epsilon = -linalg::max_sym_eigenvalue(&(&k2 + k2.transpose()))? / 2.0;
    if epsilon <= 0.0 {
        return Err(Error::Model("K2 must be negative definite".into()));
    }
    let lbar = graph.laplacian()?.expanded;
    let m = error_matrix(model.a(), &lbar);
    let gamma = 1.0 + rho / epsilon * linalg::norm2(k).powi(2) * linalg::norm2(&m).powi(2);
    let dim = m.nrows();
    let p_big_d = linalg::solve_lyapunov(&m, &(Matrix::identity(dim, dim) * gamma))?;

    let n = model.n();
    let v_trace = (0..traj.len())
        .map(|s| {
            let x_r = &traj.x_r[s];
            let mut v = quad(&p_big_d, &traj.e[s]);
            for x in traj.x[s].chunks(n) {
                let vel: Vec<f64> = perm[mm..].iter().map(|&i| x[i] - x_r[i]).collect();
                v += rho * quad(&p_d, &vel);
            }
            v + saturation_potential(&traj.u[s])
        })
        .collect();
    Ok(DoubleIntegratorTrace {
        p_d,
        p_big_d,
        gamma,
        epsilon,
        v_trace,
    })
}

/// Largest value of `(V_{k+1} − V_k) / (1 + V_k)`.
pub fn worst_increase(v: &[f64]) -> f64 {
    v.windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Deviation of the recorded `e` (and `ē`) from independent integration of
/// the linear error dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorOracle {
    pub e_deviation: f64,
    pub ebar_deviation: Option<f64>,
}

pub fn error_oracle(scenario: &Scenario, traj: &TrajectoryRecord) -> Result<ErrorOracle> {
    let n = scenario.model.n();
    let count = scenario.agents();
    let lbar = scenario.graph.laplacian()?.expanded;
    let m = error_matrix(scenario.model.a(), &lbar);
    let dim = n * count;
    let cfg = scenario.step_config();
    let deviation = |rec: &[Vec<f64>], oracle: &[Vec<f64>], off: usize| {
        rec.iter()
            .zip(oracle)
            .flat_map(|(r, o)| r.iter().zip(&o[off..off + dim]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    };
    if let Some(f) = &scenario.protocol.f {
        let afc = scenario.model.a() - f * scenario.model.c();
        let ebar_m = linalg::kron(&Matrix::identity(count, count), &afc);
        let mut joint = Matrix::zeros(2 * dim, 2 * dim);
        joint.view_mut((0, 0), (dim, dim)).copy_from(&m);
        joint.view_mut((0, dim), (dim, dim)).fill_with_identity();
        joint.view_mut((dim, dim), (dim, dim)).copy_from(&ebar_m);
        let mut z0 = traj.e[0].clone();
        z0.extend(&traj.ebar[0]);
        let (_, oracle) = sim::exosystem_reference(&joint, &z0, cfg)?;
        Ok(ErrorOracle {
            e_deviation: deviation(&traj.e, &oracle, 0),
            ebar_deviation: Some(deviation(&traj.ebar, &oracle, dim)),
        })
    } else {
        let (_, oracle) = sim::exosystem_reference(&m, &traj.e[0], cfg)?;
        Ok(ErrorOracle {
            e_deviation: deviation(&traj.e, &oracle, 0),
            ebar_deviation: None,
        })
    }
}

/// Hex SHA-256 over the kind, dimensions and exact bits of every controller
/// matrix.
pub fn controller_hash(r: &ProtocolRealization) -> String {
    let mut h = Sha256::new();
    h.update(r.kind.name().as_bytes());
    h.update(r.rho.to_le_bytes());
    for (name, m) in r.matrices() {
        h.update(name.as_bytes());
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for v in m.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// One simulated run with its metrics.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub agents: usize,
    pub rho: f64,
    pub horizon: f64,
    pub report: SyncReport,
    pub controller_hash: String,
    pub verification: VerifyReport,
    pub trajectory: TrajectoryRecord,
}

pub fn run_scenario(
    name: impl Into<String>,
    scenario: &Scenario,
    verification: VerifyReport,
    metrics: MetricsConfig,
) -> Result<RunResult> {
    let trajectory = sim::simulate(scenario)?;
    let report = sync_metrics(&trajectory, metrics)?;
    Ok(RunResult {
        name: name.into(),
        agents: scenario.agents(),
        rho: scenario.protocol.rho,
        horizon: scenario.horizon,
        report,
        controller_hash: controller_hash(&scenario.protocol),
        verification,
        trajectory,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Simulation(format!("thread pool: {e}")))
}

/// Everything needed to rebuild a protocol with different parameters.
#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub gains: GainSet,
    pub decomp: Option<MixedDecomposition>,
}

impl ProtocolSpec {
    pub fn build(&self, model: &AgentModel) -> Result<ProtocolRealization> {
        build_protocol(self.kind, model, self.decomp.as_ref(), &self.gains)
    }
}

/// Re-runs `base` once per `ρ`, everything else unchanged.
pub fn gain_margin_sweep(
    base: &Scenario,
    spec: &ProtocolSpec,
    rhos: &[f64],
    metrics: MetricsConfig,
    jobs: usize,
) -> Result<Vec<RunResult>> {
    if let Some(r) = rhos.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Protocol(format!("rho must be positive, got {r}")));
    }
    pool(jobs)?.install(|| {
        rhos.par_iter()
            .map(|&rho| {
                let mut spec = spec.clone();
                spec.gains.rho = rho;
                let mut sc = base.clone();
                sc.protocol = spec.build(&sc.model)?;
                let verification = crate::gains::verify_gains(&sc.model, spec.kind, &spec.gains);
                run_scenario(format!("rho_{rho}"), &sc, verification, metrics)
            })
            .collect()
    })
}

/// Simulation settings shared by every run of a scale-free sweep.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub x_r0: Vec<f64>,
    pub step: StepConfig,
    pub metrics: MetricsConfig,
    pub seed: u64,
    pub jobs: usize,
}

/// Runs one protocol realization, built once from the model, on a seeded
/// random root-set graph for every `N`.
pub fn scale_free_sweep(
    model: &AgentModel,
    spec: &ProtocolSpec,
    ns: &[usize],
    settings: &SweepSettings,
) -> Result<Vec<RunResult>> {
    let protocol = spec.build(model)?;
    let verification = crate::gains::verify_gains(model, spec.kind, &spec.gains);
    pool(settings.jobs)?.install(|| {
        ns.par_iter()
            .map(|&count| {
                let seed = settings.seed.wrapping_add(count as u64);
                let graph = CommGraph::random(count, &[0], seed)?;
                let sc = Scenario::seeded(
                    model.clone(),
                    graph,
                    protocol.clone(),
                    settings.x_r0.clone(),
                    seed,
                    settings.step.dt,
                    settings.step.horizon,
                    settings.step.record_every,
                );
                run_scenario(format!("n_{count}"), &sc, verification.clone(), settings.metrics)
            })
            .collect()
    })
}

/// Machine-readable digest of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub agents: usize,
    pub rho: f64,
    pub horizon: f64,
    pub converged: bool,
    pub convergence_time: Option<f64>,
    pub tol: f64,
    pub window: f64,
    pub final_window_error: f64,
    pub terminal_e: f64,
    pub terminal_ebar: Option<f64>,
    pub controller_hash: String,
    pub verification: VerifyReport,
    pub trajectory_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
}

impl RunResult {
    pub fn summary(&self, trajectory_file: Option<String>) -> RunSummary {
        RunSummary {
            name: self.name.clone(),
            agents: self.agents,
            rho: self.rho,
            horizon: self.horizon,
            converged: self.report.converged,
            convergence_time: self.report.convergence_time,
            tol: self.report.tol,
            window: self.report.window,
            final_window_error: self.report.final_window_error,
            terminal_e: self.report.terminal_e,
            terminal_ebar: self.report.terminal_ebar,
            controller_hash: self.controller_hash.clone(),
            verification: self.verification.clone(),
            trajectory_file,
        }
    }
}

/// Writes `content` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes `summary.json` and one trajectory file per run into `dir`.
pub fn export_report(results: &[RunResult], dir: &Path, prefix: &str) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut summary = Summary::default();
    for r in results {
        let file = format!("{prefix}{}.csv", r.name);
        let mut buf = Vec::new();
        sim::write_trajectory_csv(&r.trajectory, &mut buf)?;
        write_atomic(&dir.join(&file), &buf)?;
        summary.runs.push(r.summary(Some(file)));
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Simulation(format!("{}: {e}", path.display())))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.json")
}
