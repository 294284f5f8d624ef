//! Subcommand implementations behind the `satsync` binary.
//!
//! Every command returns [`Exit`] on a completed run and an [`Error`] on
//! validation or I/O failure; [`exit_code`] maps both onto process codes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{self, RunResult, RunSummary, SweepSettings, SyncReport};
use crate::error::{Error, Result};
use crate::gains::{self, VerifyReport};
use crate::presets::Preset;
use crate::scenario::{self, GainSource, MatrixSpec, Overrides, ResolvedScenario};
use crate::sim;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    /// A check failed or a run that must converge did not.
    Failed,
}

/// `0` on success, `1` on a failed check, `2` on usage, validation or I/O
/// errors.
pub fn exit_code(r: &Result<Exit>) -> i32 {
    match r {
        Ok(Exit::Success) => 0,
        Ok(Exit::Failed) => 1,
        Err(_) => 2,
    }
}

fn exit_if(ok: bool) -> Exit {
    if ok {
        Exit::Success
    } else {
        Exit::Failed
    }
}

/// Part of the manifest that depends only on the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBody {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub gain_source: GainSource,
    pub graph: String,
    pub verification: VerifyReport,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub duration_seconds: f64,
}

/// Run manifest. `body_sha256` covers `body` only, so repeated runs with the
/// same inputs agree on it while `wall_clock` may differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub body: ManifestBody,
    pub body_sha256: String,
    pub wall_clock: WallClock,
}

impl Manifest {
    pub fn new(body: ManifestBody, started: Instant) -> Self {
        let canonical = serde_json::to_vec(&body).expect("manifest serializes");
        Manifest {
            body_sha256: hex::encode(Sha256::digest(&canonical)),
            body,
            wall_clock: WallClock {
                duration_seconds: started.elapsed().as_secs_f64(),
            },
        }
    }

    pub fn body_hash_matches(&self) -> bool {
        let canonical = serde_json::to_vec(&self.body).expect("manifest serializes");
        hex::encode(Sha256::digest(&canonical)) == self.body_sha256
    }
}

/// Contents of `report.json` for a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub summary: RunSummary,
    pub metrics: SyncReport,
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("report serializes");
    s.push(b'\n');
    s
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn body(command: &str, r: &ResolvedScenario, echo: &str, verification: VerifyReport, outputs: &[&str]) -> ManifestBody {
    ManifestBody {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        scenario: r.name.clone(),
        scenario_sha256: hex::encode(Sha256::digest(echo.as_bytes())),
        gain_source: r.gain_source,
        graph: r.graph_note.clone(),
        verification,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    }
}

/// Runs `r` once and writes a complete run directory. The manifest is
/// written last.
fn write_run(command: &str, r: &ResolvedScenario, dir: &Path, started: Instant) -> Result<RunResult> {
    prepare_dir(dir)?;
    let echo = r.echo().to_toml();
    analysis::write_atomic(&dir.join(SCENARIO_FILE), echo.as_bytes())?;
    let sc = r.scenario()?;
    let verification = r.verify();
    let run = analysis::run_scenario(r.name.clone(), &sc, verification.clone(), r.metrics)?;
    let mut csv = Vec::new();
    sim::write_trajectory_csv(&run.trajectory, &mut csv)?;
    analysis::write_atomic(&dir.join(TRAJECTORY_FILE), &csv)?;
    let report = RunReport {
        summary: run.summary(Some(TRAJECTORY_FILE.to_string())),
        metrics: run.report.clone(),
    };
    analysis::write_atomic(&dir.join(REPORT_FILE), &json(&report))?;
    let outputs = [SCENARIO_FILE, TRAJECTORY_FILE, REPORT_FILE];
    let manifest = Manifest::new(body(command, r, &echo, verification, &outputs), started);
    analysis::write_atomic(&dir.join(MANIFEST_FILE), &json(&manifest))?;
    Ok(run)
}

fn run_line(run: &RunResult) -> String {
    let r = &run.report;
    format!(
        "{:<12} N={:<3} rho={:<8} converged={:<5} final_error={:.3e} t_conv={}",
        run.name,
        run.agents,
        run.rho,
        r.converged,
        r.final_window_error,
        r.convergence_time.map_or("-".to_string(), |t| format!("{t:.2}")),
    )
}

/// Simulates one scenario. Convergence is reported, not turned into the
/// exit status.
pub fn cmd_simulate(path: &Path, out_dir: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<Exit> {
    let started = Instant::now();
    let r = scenario::load_scenario(path, ov)?;
    let run = write_run("simulate", &r, out_dir, started)?;
    let _ = writeln!(out, "{}", run_line(&run));
    Ok(Exit::Success)
}

pub fn print_report(report: &VerifyReport, out: &mut dyn Write) {
    for c in &report.checks {
        let margin = c.margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
        let _ = writeln!(
            out,
            "{} {:<28} margin={:<11} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            margin,
            c.detail
        );
    }
}

/// Checks the graph, model and gains of a scenario.
pub fn cmd_verify(path: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<Exit> {
    let r = scenario::load_scenario(path, ov)?;
    let report = r.verify();
    print_report(&report, out);
    let _ = writeln!(out, "{}", if report.passed() { "all checks passed" } else { "verification failed" });
    Ok(exit_if(report.passed()))
}

/// Synthesizes gains for the scenario's model and protocol kind and prints
/// them as a `[protocol]` section.
pub fn cmd_synthesize(path: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<Exit> {
    let mut r = scenario::load_scenario(path, ov)?;
    let rho = r.gains.rho;
    let p_d = r.gains.p_d.clone();
    r.gains = gains::synthesize(&r.model, r.kind, rho, p_d.as_ref())?;
    r.gain_source = GainSource::Auto;
    let report = r.verify();
    let spec = |m: &Option<crate::linalg::Matrix>| m.as_ref().map(MatrixSpec::from_matrix);
    let section = scenario::ProtocolSection {
        kind: Some(r.kind),
        rho: Some(rho),
        gains: Some(GainSource::Explicit),
        p: spec(&r.gains.p),
        f: spec(&r.gains.f),
        k: spec(&r.gains.k),
        p_d: spec(&r.gains.p_d),
    };
    let doc = scenario::ScenarioFile {
        protocol: Some(section),
        ..Default::default()
    };
    let _ = write!(out, "{}", doc.to_toml());
    let mut lines = Vec::new();
    print_report(&report, &mut lines);
    for line in String::from_utf8_lossy(&lines).lines() {
        let _ = writeln!(out, "# {line}");
    }
    Ok(exit_if(report.passed()))
}

/// One row of the reproduction summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceRow {
    pub graph: String,
    pub directory: String,
    pub passed: bool,
    pub run: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceSummary {
    pub preset: String,
    pub tol: f64,
    pub window: f64,
    pub horizon: f64,
    pub passed: bool,
    pub rows: Vec<ReproduceRow>,
}

/// Runs a preset on both reference graphs. Non-convergence is a failure.
pub fn cmd_reproduce(name: &str, out_dir: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<Exit> {
    let preset = Preset::from_name(name)
        .ok_or_else(|| Error::scenario("preset", format!("unknown preset `{name}`, expected example1 or example2")))?;
    let base = scenario::parse_scenario(&format!("preset = \"{}\"\n", preset.name()), None, ov)?;
    prepare_dir(out_dir)?;
    let mut rows = Vec::new();
    for (label, graph) in preset.graphs() {
        let started = Instant::now();
        let mut r = base.clone();
        r.name = format!("{}_{label}", preset.name());
        r.graph_note = format!("reference {}, unit weights", label.replace('_', " "));
        r.graph = graph;
        let run = write_run("reproduce", &r, &out_dir.join(label), started)?;
        let _ = writeln!(out, "{} {}", if run.report.converged { "PASS" } else { "FAIL" }, run_line(&run));
        rows.push(ReproduceRow {
            graph: label.to_string(),
            directory: label.to_string(),
            passed: run.report.converged,
            run: run.summary(Some(format!("{label}/{TRAJECTORY_FILE}"))),
        });
    }
    let summary = ReproduceSummary {
        preset: preset.name().to_string(),
        tol: base.metrics.tol,
        window: base.metrics.window,
        horizon: base.step.horizon,
        passed: rows.iter().all(|r| r.passed),
        rows,
    };
    analysis::write_atomic(&out_dir.join(SUMMARY_FILE), &json(&summary))?;
    Ok(exit_if(summary.passed))
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    Rho(Vec<f64>),
    Agents(Vec<usize>),
}

impl SweepSpec {
    /// Exactly one non-empty list must be given.
    pub fn from_lists(rho: Option<Vec<f64>>, n: Option<Vec<usize>>) -> Result<Self> {
        match (rho, n) {
            (Some(r), None) if !r.is_empty() => Ok(SweepSpec::Rho(r)),
            (None, Some(n)) if !n.is_empty() => Ok(SweepSpec::Agents(n)),
            (Some(_), Some(_)) => Err(Error::scenario("sweep", "give either --rho or --n, not both")),
            _ => Err(Error::scenario("sweep", "empty sweep: give a non-empty --rho or --n list")),
        }
    }
}

/// Runs a ρ-sweep or an N-sweep and writes one trajectory per run plus a
/// summary table.
pub fn cmd_sweep(
    path: &Path,
    sweep: &SweepSpec,
    out_dir: &Path,
    ov: &Overrides,
    jobs: usize,
    out: &mut dyn Write,
) -> Result<Exit> {
    let started = Instant::now();
    let r = scenario::load_scenario(path, ov)?;
    if jobs == 0 {
        return Err(Error::scenario("jobs", "must be at least 1"));
    }
    prepare_dir(out_dir)?;
    let echo = r.echo().to_toml();
    analysis::write_atomic(&out_dir.join(SCENARIO_FILE), echo.as_bytes())?;
    let spec = r.protocol_spec();
    let results = match sweep {
        SweepSpec::Rho(rhos) => analysis::gain_margin_sweep(&r.scenario()?, &spec, rhos, r.metrics, jobs)?,
        SweepSpec::Agents(ns) => {
            if ns.contains(&0) {
                return Err(Error::scenario("sweep", "agent counts must be positive"));
            }
            let settings = SweepSettings {
                x_r0: r.x_r0.clone(),
                step: r.step,
                metrics: r.metrics,
                seed: r.seed,
                jobs,
            };
            analysis::scale_free_sweep(&r.model, &spec, ns, &settings)?
        }
    };
    let summary = analysis::export_report(&results, out_dir, &format!("{}_", r.name))?;
    for run in &results {
        let _ = writeln!(out, "{}", run_line(run));
    }
    let mut outputs: Vec<&str> = vec![SCENARIO_FILE];
    outputs.extend(summary.runs.iter().filter_map(|s| s.trajectory_file.as_deref()));
    outputs.push(SUMMARY_FILE);
    let verification = r.verify();
    let manifest = Manifest::new(body("sweep", &r, &echo, verification, &outputs), started);
    analysis::write_atomic(&out_dir.join(MANIFEST_FILE), &json(&manifest))?;
    Ok(Exit::Success)
}

/// Paths of the files a run directory must contain.
pub fn run_dir_files(dir: &Path) -> [PathBuf; 4] {
    [SCENARIO_FILE, MANIFEST_FILE, TRAJECTORY_FILE, REPORT_FILE].map(|f| dir.join(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Exit::Success)), 0);
        assert_eq!(exit_code(&Ok(Exit::Failed)), 1);
        assert_eq!(exit_code(&Err(Error::Simulation("x".into()))), 2);
    }

    #[test]
    fn sweep_spec_rules() {
        assert!(SweepSpec::from_lists(None, None).is_err());
        assert!(SweepSpec::from_lists(Some(vec![]), None).is_err());
        assert!(SweepSpec::from_lists(Some(vec![1.0]), Some(vec![3])).is_err());
        assert_eq!(SweepSpec::from_lists(None, Some(vec![3])).unwrap(), SweepSpec::Agents(vec![3]));
    }

    #[test]
    fn manifest_hash_ignores_wall_clock() {
        let r = scenario::parse_scenario("preset = \"example1\"\n", None, &Overrides::default()).unwrap();
        let b = body("simulate", &r, "echo", VerifyReport::default(), &[SCENARIO_FILE]);
        let m1 = Manifest::new(b.clone(), Instant::now());
        let mut m2 = Manifest::new(b, Instant::now());
        m2.wall_clock.duration_seconds += 1.0;
        assert_eq!(m1.body_sha256, m2.body_sha256);
        assert!(m2.body_hash_matches());
        m2.body.scenario.push('x');
        assert!(!m2.body_hash_matches());
    }

    #[test]
    fn unknown_preset_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let r = cmd_reproduce("example3", dir.path(), &Overrides::default(), &mut Vec::new());
        assert_eq!(exit_code(&r), 2);
    }
}
