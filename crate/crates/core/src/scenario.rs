//! Scenario files: a TOML document describing one closed-loop experiment.
//!
//! ```toml
//! name = "demo"
//! preset = "example1"
//!
//! [graph]
//! kind = "random"
//! n = 10
//! roots = [1]
//! seed = 4
//!
//! [protocol]
//! rho = 10.0
//!
//! [sim]
//! horizon = 60.0
//! ```
//!
//! A preset fills in the model, the published gains, the protocol kind, the
//! small reference graph and the exosystem start; every other section
//! overrides those defaults field by field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentModel, ModelClass};
use crate::analysis::{MetricsConfig, ProtocolSpec};
use crate::error::{Error, Result};
use crate::gains::{self, GainSet, VerifyReport};
use crate::graph::{CommGraph, EdgeEntry, GraphFile, GraphKind};
use crate::linalg::Matrix;
use crate::presets::Preset;
use crate::protocol::ProtocolKind;
use crate::sim::{self, Scenario, StepConfig};

pub const DEFAULT_RECORD_EVERY: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

/// Dense row-major matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn from_matrix(m: &Matrix) -> Self {
        MatrixSpec {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }

    pub fn to_matrix(&self, field: &str) -> Result<Matrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::scenario(
                field,
                format!(
                    "{}x{} matrix needs {} entries, got {}",
                    self.rows,
                    self.cols,
                    self.rows * self.cols,
                    self.data.len()
                ),
            ));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::scenario(field, "matrix entries must be finite"));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub a: MatrixSpec,
    pub b: MatrixSpec,
    pub c: MatrixSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    ExampleA,
    ExampleB,
    Inline,
    File,
    Path,
    Star,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// 1-based root indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Graph file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeEntry>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSource {
    /// Synthesized from the agent model.
    Auto,
    /// Read from the protocol section, or from the preset.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ProtocolKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_d: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_r0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| toml_error(text, &e))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let line = inner
                .span()
                .map(|s| format!("line {}: ", line_of(text, s.start)))
                .unwrap_or_default();
            Error::scenario(field, format!("{line}{}", inner.message()))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file is always serializable")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map_or(0, |s| line_of(text, s.start));
    Error::scenario("document", format!("line {line}: {}", e.message()))
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub record_every: Option<usize>,
}

/// A scenario with presets expanded, generators run and gains resolved.
///
/// Holds gains rather than a built protocol. [`Self::verify`] accepts inputs
/// such as `ρ ≤ 0` that [`Self::scenario`] rejects.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub preset: Option<Preset>,
    pub model: AgentModel,
    pub graph: CommGraph,
    pub graph_note: String,
    pub kind: ProtocolKind,
    pub gains: GainSet,
    pub gain_source: GainSource,
    pub x_r0: Vec<f64>,
    pub x0: Option<Vec<Vec<f64>>>,
    pub controller0: Option<Vec<Vec<f64>>>,
    pub step: StepConfig,
    pub seed: u64,
    pub metrics: MetricsConfig,
}

fn preset_kind(p: Preset) -> ProtocolKind {
    match p {
        Preset::Example1 => ProtocolKind::P4,
        Preset::Example2 => ProtocolKind::P6,
    }
}

fn preset_gains(p: Preset, rho: f64) -> GainSet {
    let mut g = GainSet::new(rho);
    g.k = Some(p.k());
    g.f = Some(p.f());
    g
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::scenario(field, format!("must be positive, got {v}")))
    }
}

fn zero_based(field: &str, roots: &[usize], n: usize) -> Result<Vec<usize>> {
    roots
        .iter()
        .map(|&r| {
            if (1..=n).contains(&r) {
                Ok(r - 1)
            } else {
                Err(Error::scenario(field, format!("root {r} outside 1..={n}")))
            }
        })
        .collect()
}

fn resolve_graph(sec: &GraphSection, base: Option<&Path>) -> Result<(CommGraph, String)> {
    let need_n = || {
        sec.n
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::scenario("graph.n", "required and positive for this graph kind"))
    };
    let roots = |n: usize| zero_based("graph.roots", sec.roots.as_deref().unwrap_or(&[1]), n);
    let wrap = |e: Error| match e {
        Error::Scenario { .. } => e,
        other => Error::scenario("graph", other.to_string()),
    };
    let (g, note) = match sec.kind {
        GraphSource::ExampleA => (CommGraph::example_a(), "example graph A, unit weights".to_string()),
        GraphSource::ExampleB => (CommGraph::example_b(), "example graph B, unit weights".to_string()),
        GraphSource::Path | GraphSource::Star | GraphSource::Random => {
            let n = need_n()?;
            let kind = match sec.kind {
                GraphSource::Path => GraphKind::Path,
                GraphSource::Star => GraphKind::Star,
                _ => GraphKind::Random,
            };
            let seed = sec.seed.unwrap_or(DEFAULT_SEED);
            let g = CommGraph::generate(kind, n, &roots(n)?, seed).map_err(wrap)?;
            (g, format!("generated {kind:?} graph, n = {n}, seed = {seed}").to_lowercase())
        }
        GraphSource::Inline => {
            let n = need_n()?;
            let file = GraphFile {
                n,
                roots: sec.roots.clone().unwrap_or_default(),
                edges: sec.edges.clone().unwrap_or_default(),
            };
            (CommGraph::try_from(file).map_err(wrap)?, "inline graph".to_string())
        }
        GraphSource::File => {
            let rel = sec
                .file
                .as_ref()
                .ok_or_else(|| Error::scenario("graph.file", "required for kind = \"file\""))?;
            let path = base.map_or_else(|| PathBuf::from(rel), |b| b.join(rel));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            (CommGraph::parse(&text).map_err(wrap)?, format!("graph file {rel}"))
        }
    };
    Ok((g, note))
}

fn state_list(field: &str, v: &[Vec<f64>], count: usize, len: usize) -> Result<Vec<Vec<f64>>> {
    if v.len() != count || v.iter().any(|x| x.len() != len) {
        return Err(Error::scenario(
            field,
            format!("needs {count} vectors of length {len}"),
        ));
    }
    Ok(v.to_vec())
}

/// Parses and resolves a scenario document. Relative graph files are looked
/// up in `base`.
pub fn parse_scenario(text: &str, base: Option<&Path>, ov: &Overrides) -> Result<ResolvedScenario> {
    resolve(&ScenarioFile::from_toml(text)?, base, ov)
}

pub fn load_scenario(path: &Path, ov: &Overrides) -> Result<ResolvedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path.parent(), ov)
}

pub fn resolve(file: &ScenarioFile, base: Option<&Path>, ov: &Overrides) -> Result<ResolvedScenario> {
    let preset = file.preset;
    let model = match (&file.model, preset) {
        (Some(m), _) => AgentModel::new(
            m.a.to_matrix("model.a")?,
            m.b.to_matrix("model.b")?,
            m.c.to_matrix("model.c")?,
        )
        .map_err(|e| Error::scenario("model", e.to_string()))?,
        (None, Some(p)) => p.model(),
        (None, None) => return Err(Error::scenario("model", "required when no preset is given")),
    };
    let (graph, graph_note) = match (&file.graph, preset) {
        (Some(g), _) => resolve_graph(g, base)?,
        (None, Some(_)) => (CommGraph::example_a(), "example graph A, unit weights".to_string()),
        (None, None) => return Err(Error::scenario("graph", "required when no preset is given")),
    };

    let proto = file.protocol.clone().unwrap_or_default();
    let kind = match (proto.kind, preset) {
        (Some(k), _) => k,
        (None, Some(p)) => preset_kind(p),
        (None, None) => return Err(Error::scenario("protocol.kind", "required when no preset is given")),
    };
    let rho = ov.rho.or(proto.rho).unwrap_or(1.0);
    if !rho.is_finite() {
        return Err(Error::scenario("protocol.rho", "must be finite"));
    }
    let explicit_given = proto.p.is_some() || proto.f.is_some() || proto.k.is_some();
    let gain_source = proto.gains.unwrap_or(if preset.is_some() || explicit_given {
        GainSource::Explicit
    } else {
        GainSource::Auto
    });
    let p_d = proto.p_d.as_ref().map(|m| m.to_matrix("protocol.p_d")).transpose()?;
    let gains = match gain_source {
        GainSource::Auto => {
            if explicit_given {
                return Err(Error::scenario(
                    "protocol.gains",
                    "explicit matrices given together with gains = \"auto\"",
                ));
            }
            if model.class() != kind.required_class() {
                return Err(Error::scenario(
                    "protocol.kind",
                    format!("{kind} needs a {:?} model, got {:?}", kind.required_class(), model.class()),
                ));
            }
            let mut g = gains::synthesize(&model, kind, rho.abs().max(f64::MIN_POSITIVE), p_d.as_ref())
                .map_err(|e| Error::scenario("protocol.gains", e.to_string()))?;
            g.rho = rho;
            g
        }
        GainSource::Explicit => {
            let mut g = preset.map_or_else(|| GainSet::new(rho), |p| preset_gains(p, rho));
            if let Some(p) = &proto.p {
                g.p = Some(p.to_matrix("protocol.p")?);
            }
            if let Some(f) = &proto.f {
                g.f = Some(f.to_matrix("protocol.f")?);
            }
            if let Some(k) = &proto.k {
                g.k = Some(k.to_matrix("protocol.k")?);
            }
            if p_d.is_some() {
                g.p_d = p_d;
            }
            g
        }
    };

    let sim_sec = file.sim.clone().unwrap_or_default();
    let dt = positive("sim.dt", ov.dt.or(sim_sec.dt).unwrap_or(sim::DEFAULT_DT))?;
    if dt > 0.1 {
        return Err(Error::scenario("sim.dt", format!("must not exceed 0.1, got {dt}")));
    }
    let default_horizon = preset.map_or(sim::DEFAULT_HORIZON, Preset::horizon);
    let horizon = positive("sim.horizon", ov.horizon.or(sim_sec.horizon).unwrap_or(default_horizon))?;
    let record_every = ov.record_every.or(sim_sec.record_every).unwrap_or(DEFAULT_RECORD_EVERY);
    if record_every == 0 {
        return Err(Error::scenario("sim.record_every", "must be at least 1"));
    }
    let step = StepConfig {
        dt,
        horizon,
        record_every,
    };
    step.validate().map_err(|e| Error::scenario("sim", e.to_string()))?;
    let seed = ov.seed.or(sim_sec.seed).unwrap_or(DEFAULT_SEED);
    let n = model.n();
    let x_r0 = match (&sim_sec.x_r0, preset) {
        (Some(v), _) => v.clone(),
        (None, Some(p)) => p.x_r0(),
        (None, None) => vec![1.0; n],
    };
    if x_r0.len() != n {
        return Err(Error::scenario("sim.x_r0", format!("needs length {n}")));
    }
    let count = graph.len();
    let x0 = sim_sec.x0.as_ref().map(|v| state_list("sim.x0", v, count, n)).transpose()?;
    let controller0 = match &sim_sec.controller0 {
        Some(v) => {
            let n_c = if kind.is_partial() { 2 * n } else { n };
            Some(state_list("sim.controller0", v, count, n_c)?)
        }
        None => None,
    };

    let an = file.analysis.clone().unwrap_or_default();
    let metrics = MetricsConfig {
        tol: positive("analysis.tol", an.tol.unwrap_or(crate::analysis::DEFAULT_TOL))?,
        window: positive("analysis.window", an.window.unwrap_or(crate::analysis::DEFAULT_WINDOW))?,
    };
    if metrics.window > horizon {
        return Err(Error::scenario(
            "analysis.window",
            format!("window {} exceeds the horizon {horizon}", metrics.window),
        ));
    }

    Ok(ResolvedScenario {
        name: file
            .name
            .clone()
            .or_else(|| preset.map(|p| p.name().to_string()))
            .unwrap_or_else(|| "scenario".to_string()),
        preset,
        model,
        graph,
        graph_note,
        kind,
        gains,
        gain_source,
        x_r0,
        x0,
        controller0,
        step,
        seed,
        metrics,
    })
}

impl ResolvedScenario {
    pub fn decomposition(&self) -> Option<agent::MixedDecomposition> {
        (self.model.class() == ModelClass::MixedCase)
            .then(|| agent::mixed_decompose(self.model.a(), self.model.b(), self.model.c(), agent::DEFAULT_TOL).ok())
            .flatten()
    }

    pub fn protocol_spec(&self) -> ProtocolSpec {
        ProtocolSpec {
            kind: self.kind,
            gains: self.gains.clone(),
            decomp: self.decomposition(),
        }
    }

    /// Gain conditions plus the graph and model checks a run relies on.
    pub fn verify(&self) -> VerifyReport {
        let mut report = VerifyReport::default();
        let roots = self.graph.root_indices().len();
        report.push(
            "root set",
            self.graph.check_rootset(),
            f64::NAN,
            format!(
                "{roots} root(s); every agent must be reachable from a root"
            ),
        );
        let c = self.model.classification();
        report.push(
            "controllable and observable",
            c.controllable && c.observable,
            f64::NAN,
            format!("controllable = {}, observable = {}", c.controllable, c.observable),
        );
        report.checks.extend(gains::verify_gains(&self.model, self.kind, &self.gains).checks);
        report
    }

    /// The runnable scenario on the resolved graph.
    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_on(self.graph.clone())
    }

    /// The same protocol and settings on another graph. Initial conditions
    /// come from the file only when the agent count matches.
    pub fn scenario_on(&self, graph: CommGraph) -> Result<Scenario> {
        let protocol = self.protocol_spec().build(&self.model)?;
        let mut sc = Scenario::seeded(
            self.model.clone(),
            graph,
            protocol,
            self.x_r0.clone(),
            self.seed,
            self.step.dt,
            self.step.horizon,
            self.step.record_every,
        );
        if let Some(x0) = self.x0.as_ref().filter(|v| v.len() == sc.agents()) {
            sc.x0 = x0.clone();
        }
        if let Some(c0) = self.controller0.as_ref().filter(|v| v.len() == sc.agents()) {
            sc.controller0 = c0.clone();
        }
        sc.validate()?;
        Ok(sc)
    }

    /// A fully explicit document that resolves to the same scenario.
    pub fn echo(&self) -> ScenarioFile {
        let spec = |m: &Option<Matrix>| m.as_ref().map(MatrixSpec::from_matrix);
        let gf = self.graph.to_file();
        let count = self.graph.len();
        let x0 = self
            .x0
            .clone()
            .unwrap_or_else(|| sim::seeded_states(count, self.model.n(), self.seed));
        ScenarioFile {
            name: Some(self.name.clone()),
            preset: None,
            model: Some(ModelSection {
                a: MatrixSpec::from_matrix(self.model.a()),
                b: MatrixSpec::from_matrix(self.model.b()),
                c: MatrixSpec::from_matrix(self.model.c()),
            }),
            graph: Some(GraphSection {
                kind: GraphSource::Inline,
                n: Some(gf.n),
                roots: Some(gf.roots),
                seed: None,
                file: None,
                edges: Some(gf.edges),
            }),
            protocol: Some(ProtocolSection {
                kind: Some(self.kind),
                rho: Some(self.gains.rho),
                gains: Some(GainSource::Explicit),
                p: spec(&self.gains.p),
                f: spec(&self.gains.f),
                k: spec(&self.gains.k),
                p_d: spec(&self.gains.p_d),
            }),
            sim: Some(SimSection {
                dt: Some(self.step.dt),
                horizon: Some(self.step.horizon),
                record_every: Some(self.step.record_every),
                seed: Some(self.seed),
                x_r0: Some(self.x_r0.clone()),
                x0: Some(x0),
                controller0: self.controller0.clone(),
            }),
            analysis: Some(AnalysisSection {
                tol: Some(self.metrics.tol),
                window: Some(self.metrics.window),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn parse(text: &str) -> Result<ResolvedScenario> {
        parse_scenario(text, None, &Overrides::default())
    }

    #[test]
    fn preset_example1_expands() {
        let r = parse("preset = \"example1\"\n").unwrap();
        assert_eq!(r.kind, ProtocolKind::P4);
        assert_eq!(r.gains.k, Some(presets::example1_k()));
        assert_eq!(r.gains.f, Some(presets::example1_f()));
        assert_eq!(r.gains.rho, 1.0);
        assert_eq!(r.graph, CommGraph::example_a());
        assert_eq!(r.gain_source, GainSource::Explicit);
        assert_eq!(r.step.horizon, 30.0);
        assert!(r.verify().passed());
    }

    #[test]
    fn preset_example2_expands() {
        let r = parse("preset = \"example2\"\n").unwrap();
        assert_eq!(r.kind, ProtocolKind::P6);
        assert_eq!(r.model.n(), 7);
        assert_eq!(r.gains.f.as_ref().unwrap().shape(), (7, 4));
        assert_eq!(r.gains.k.as_ref().unwrap().shape(), (3, 7));
        assert_eq!(r.step.horizon, 60.0);
        assert!(r.verify().passed(), "{:?}", r.verify().failures().collect::<Vec<_>>());
    }

    #[test]
    fn nonpositive_dt_rejected_with_path() {
        let err = parse("preset = \"example1\"\n[sim]\ndt = 0.0\n").unwrap_err();
        assert!(matches!(err, Error::Scenario { ref field, .. } if field == "sim.dt"), "{err}");
        assert!(parse("preset = \"example1\"\n[sim]\ndt = -1e-3\n").is_err());
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let err = parse("preset = \"example1\"\n[sim]\nstep = 0.1\n").unwrap_err();
        let Error::Scenario { field, msg } = err else { panic!() };
        assert_eq!(field, "sim.step");
        assert!(msg.contains("unknown field") && msg.contains("line 3"), "{msg}");
        assert!(parse("colour = 1\n").is_err());
    }

    #[test]
    fn bad_matrix_reports_field() {
        let text = "[model]\na = { rows = 2, cols = 2, data = [0, 1, 0] }\n\
                    b = { rows = 2, cols = 1, data = [0, 1] }\nc = { rows = 1, cols = 2, data = [1, 0] }\n\
                    [graph]\nkind = \"example_a\"\n[protocol]\nkind = \"P4\"\n";
        let err = parse(text).unwrap_err();
        assert!(matches!(err, Error::Scenario { ref field, .. } if field == "model.a"), "{err}");
    }

    #[test]
    fn auto_gains_and_generated_graph() {
        let text = "[model]\na = { rows = 2, cols = 2, data = [0, 1, -1, 0] }\n\
                    b = { rows = 2, cols = 1, data = [0, 1] }\nc = { rows = 2, cols = 2, data = [1, 0, 0, 1] }\n\
                    [graph]\nkind = \"random\"\nn = 6\nroots = [2]\nseed = 3\n\
                    [protocol]\nkind = \"P1\"\nrho = 10.0\n";
        let r = parse(text).unwrap();
        assert_eq!(r.gain_source, GainSource::Auto);
        assert_eq!(r.gains.rho, 10.0);
        assert!(r.gains.p.is_some());
        assert_eq!(r.graph, CommGraph::random(6, &[1], 3).unwrap());
        assert!(r.verify().passed());
        r.scenario().unwrap();
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            dt: Some(1e-2),
            horizon: Some(7.0),
            rho: Some(3.0),
            seed: Some(9),
            record_every: Some(2),
        };
        let r = parse_scenario("preset = \"example1\"\n[sim]\ndt = 1e-3\n", None, &ov).unwrap();
        assert_eq!((r.step.dt, r.step.horizon, r.step.record_every), (1e-2, 7.0, 2));
        assert_eq!((r.gains.rho, r.seed), (3.0, 9));
    }

    #[test]
    fn nonpositive_rho_still_resolves_for_verification() {
        let r = parse("preset = \"example1\"\n[protocol]\nrho = -1.0\n").unwrap();
        assert!(!r.verify().passed());
        assert!(r.scenario().is_err());
    }

    #[test]
    fn empty_roots_fail_verification() {
        let r = parse("preset = \"example1\"\n[graph]\nkind = \"inline\"\nn = 2\nroots = []\nedges = [{ from = 1, to = 2 }]\n")
            .unwrap();
        let report = r.verify();
        assert_eq!(report.failures().next().unwrap().name, "root set");
        assert!(r.scenario().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let r = parse("preset = \"example2\"\n[graph]\nkind = \"example_b\"\n").unwrap();
        let text = r.echo().to_toml();
        let again = parse(&text).unwrap();
        assert_eq!(again.echo(), r.echo());
        let (a, b) = (r.scenario().unwrap(), again.scenario().unwrap());
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.protocol, b.protocol);
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn graph_file_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g.toml"), CommGraph::example_b().serialize()).unwrap();
        let r = parse_scenario(
            "preset = \"example1\"\n[graph]\nkind = \"file\"\nfile = \"g.toml\"\n",
            Some(dir.path()),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(r.graph, CommGraph::example_b());
    }
}
