//! The stacked closed loop (exosystem, agents, controllers, network) and a
//! fixed-step RK4 integrator.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{sat, AgentModel};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::linalg::Matrix;
use crate::protocol::ProtocolRealization;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 30.0;
pub const MAX_STEPS: f64 = 1e7;
/// Half-width of the box seeded initial agent states are drawn from.
pub const IC_RANGE: f64 = 5.0;

/// Autonomous vector field `ż = f(z)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&mut self, z: &[f64], dz: &mut [f64]);
}

/// `ż = M z`.
pub struct LinearField {
    m: Dense,
}

impl LinearField {
    pub fn new(m: &Matrix) -> Self {
        LinearField { m: Dense::from(m) }
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.m.rows
    }

    fn eval(&mut self, z: &[f64], dz: &mut [f64]) {
        dz.fill(0.0);
        self.m.mul_add(z, dz);
    }
}

/// Row-major dense matrix for allocation-free products in the hot loop.
#[derive(Debug, Clone)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    zero: bool,
}

impl From<&Matrix> for Dense {
    fn from(m: &Matrix) -> Self {
        let (rows, cols) = m.shape();
        let data: Vec<f64> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| m[(i, j)]))
            .collect();
        let zero = data.iter().all(|&v| v == 0.0);
        Dense {
            rows,
            cols,
            data,
            zero,
        }
    }
}

impl Dense {
    /// `y += M x`.
    #[inline]
    fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        if self.zero {
            return;
        }
        for (row, out) in self.data.chunks_exact(self.cols).zip(y.iter_mut()) {
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *out += acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
}

impl StepConfig {
    pub fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::Simulation(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::Simulation(format!(
                "horizon must be at least dt, got {}",
                self.horizon
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Simulation("record_every must be at least 1".into()));
        }
        let steps = (self.horizon / self.dt - 1e-9).ceil();
        if steps > MAX_STEPS {
            return Err(Error::Simulation(format!("{steps} steps exceed the limit of 1e7")));
        }
        Ok(steps as usize)
    }
}

/// Classical RK4 from `z0`. `observe(t, z)` is called at `t = 0`, every
/// `record_every` steps, and at the final step.
pub fn integrate<F: VectorField>(
    f: &mut F,
    z0: &[f64],
    cfg: StepConfig,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>> {
    let steps = cfg.validate()?;
    let d = f.dim();
    if z0.len() != d {
        return Err(Error::dim(format!("initial state has length {}, expected {d}", z0.len())));
    }
    let dt = cfg.dt;
    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    observe(0.0, &z);
    for step in 1..=steps {
        f.eval(&z, &mut k1);
        for i in 0..d {
            tmp[i] = z[i] + 0.5 * dt * k1[i];
        }
        f.eval(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = z[i] + 0.5 * dt * k2[i];
        }
        f.eval(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = z[i] + dt * k3[i];
        }
        f.eval(&tmp, &mut k4);
        let mut finite = true;
        for i in 0..d {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            finite &= z[i].is_finite();
        }
        let t = step as f64 * dt;
        if !finite {
            return Err(Error::NonFiniteState { time: t });
        }
        if step % cfg.record_every == 0 || step == steps {
            observe(t, &z);
        }
    }
    Ok(z)
}

/// Samples of `ẋ_r = A x_r` at every recorded time.
pub fn exosystem_reference(a: &Matrix, x_r0: &[f64], cfg: StepConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    integrate(&mut LinearField::new(a), x_r0, cfg, |t, z| {
        times.push(t);
        states.push(z.to_vec());
    })?;
    Ok((times, states))
}

/// A fully specified closed-loop run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: AgentModel,
    pub graph: CommGraph,
    pub protocol: ProtocolRealization,
    pub x_r0: Vec<f64>,
    pub x0: Vec<Vec<f64>>,
    pub controller0: Vec<Vec<f64>>,
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub seed: u64,
}

impl Scenario {
    /// Agent states drawn uniformly from `[−5, 5]ⁿ`, controllers at zero.
    #[allow(clippy::too_many_arguments)]
    pub fn seeded(
        model: AgentModel,
        graph: CommGraph,
        protocol: ProtocolRealization,
        x_r0: Vec<f64>,
        seed: u64,
        dt: f64,
        horizon: f64,
        record_every: usize,
    ) -> Self {
        let n = model.n();
        let count = graph.len();
        let x0 = seeded_states(count, n, seed);
        let controller0 = vec![vec![0.0; protocol.n_c]; count];
        Scenario {
            model,
            graph,
            protocol,
            x_r0,
            x0,
            controller0,
            dt,
            horizon,
            record_every,
            seed,
        }
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            dt: self.dt,
            horizon: self.horizon,
            record_every: self.record_every,
        }
    }

    pub fn agents(&self) -> usize {
        self.graph.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, count) = (self.model.n(), self.graph.len());
        self.graph.validate()?;
        if !self.graph.check_rootset() {
            return Err(Error::Simulation(
                "graph fails the root-set condition: some agent cannot be reached from a root".into(),
            ));
        }
        if self.protocol.n != n || self.protocol.m != self.model.m() || self.protocol.p != self.model.p() {
            return Err(Error::dim("protocol was built for a different model"));
        }
        if self.x_r0.len() != n {
            return Err(Error::dim(format!("x_r0 must have length {n}")));
        }
        if self.x0.len() != count || self.x0.iter().any(|x| x.len() != n) {
            return Err(Error::dim(format!("x0 must hold {count} vectors of length {n}")));
        }
        if self.controller0.len() != count || self.controller0.iter().any(|x| x.len() != self.protocol.n_c) {
            return Err(Error::dim(format!(
                "controller0 must hold {count} vectors of length {}",
                self.protocol.n_c
            )));
        }
        self.step_config().validate()?;
        Ok(())
    }

    /// Initial stacked state `(x_r, x₁..x_N, xc₁..xc_N)`.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut z = self.x_r0.clone();
        self.x0.iter().for_each(|x| z.extend(x));
        self.controller0.iter().for_each(|x| z.extend(x));
        z
    }
}

pub fn seeded_states(count: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(-IC_RANGE..=IC_RANGE)).collect())
        .collect()
}

/// The assembled right-hand side of the closed loop.
pub struct ClosedLoop {
    n: usize,
    m: usize,
    p: usize,
    n_c: usize,
    count: usize,
    partial: bool,
    a: Dense,
    b: Dense,
    c: Dense,
    a_c: Dense,
    b_c: Dense,
    c_c: Dense,
    d_c: Dense,
    f_c: Dense,
    h_c: Dense,
    a_c_root: Dense,
    b_c_root: Dense,
    neighbors: Vec<Vec<(usize, f64)>>,
    roots: Vec<bool>,
    u: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    y_r: Vec<f64>,
    xi: Vec<f64>,
    zeta_bar: Vec<f64>,
    zeta_hat: Vec<f64>,
}

pub fn assemble(scenario: &Scenario) -> Result<ClosedLoop> {
    scenario.validate()?;
    let r = &scenario.protocol;
    let (n, m, p) = (r.n, r.m, r.p);
    let count = scenario.agents();
    Ok(ClosedLoop {
        n,
        m,
        p,
        n_c: r.n_c,
        count,
        partial: r.kind.is_partial(),
        a: Dense::from(scenario.model.a()),
        b: Dense::from(scenario.model.b()),
        c: Dense::from(scenario.model.c()),
        a_c: Dense::from(&r.a_c),
        b_c: Dense::from(&r.b_c),
        c_c: Dense::from(&r.c_c),
        d_c: Dense::from(&r.d_c),
        f_c: Dense::from(&r.f_c),
        h_c: Dense::from(&r.h_c),
        a_c_root: Dense::from(&r.a_c_root),
        b_c_root: Dense::from(&r.b_c_root),
        neighbors: scenario.graph.in_neighbors(),
        roots: scenario.graph.roots().to_vec(),
        u: vec![0.0; count * m],
        s: vec![0.0; count * m],
        y: vec![0.0; count * p],
        y_r: vec![0.0; p],
        xi: vec![0.0; count * r.xi_dim],
        zeta_bar: vec![0.0; count * p],
        zeta_hat: vec![0.0; count * r.xi_dim],
    })
}

impl ClosedLoop {
    fn xi_dim(&self) -> usize {
        if self.partial {
            self.n + self.m
        } else {
            self.n
        }
    }

    /// Controls and their saturations for the stacked state.
    pub fn controls(&mut self, z: &[f64]) -> (&[f64], &[f64]) {
        let (n, m, n_c) = (self.n, self.m, self.n_c);
        let xc_base = n + self.count * n;
        for i in 0..self.count {
            let xc = &z[xc_base + i * n_c..xc_base + (i + 1) * n_c];
            let u = &mut self.u[i * m..(i + 1) * m];
            u.fill(0.0);
            self.f_c.mul_add(xc, u);
            for k in 0..m {
                self.s[i * m + k] = sat(u[k]);
            }
        }
        (&self.u, &self.s)
    }
}

impl VectorField for ClosedLoop {
    fn dim(&self) -> usize {
        self.n + self.count * (self.n + self.n_c)
    }

    fn eval(&mut self, z: &[f64], dz: &mut [f64]) {
        let (n, m, p, n_c, count) = (self.n, self.m, self.p, self.n_c, self.count);
        let xd = self.xi_dim();
        let x_base = n;
        let xc_base = n + count * n;
        self.controls(z);

        let x_r = &z[..n];
        self.y_r.fill(0.0);
        self.c.mul_add(x_r, &mut self.y_r);
        for i in 0..count {
            let x = &z[x_base + i * n..x_base + (i + 1) * n];
            let xc = &z[xc_base + i * n_c..xc_base + (i + 1) * n_c];
            let y = &mut self.y[i * p..(i + 1) * p];
            y.fill(0.0);
            self.c.mul_add(x, y);
            let xi = &mut self.xi[i * xd..(i + 1) * xd];
            xi.fill(0.0);
            self.h_c.mul_add(xc, &mut xi[..n]);
            if self.partial {
                xi[n..].copy_from_slice(&self.s[i * m..(i + 1) * m]);
            }
        }
        for i in 0..count {
            let zb = &mut self.zeta_bar[i * p..(i + 1) * p];
            let zh = &mut self.zeta_hat[i * xd..(i + 1) * xd];
            zb.fill(0.0);
            zh.fill(0.0);
            for &(j, w) in &self.neighbors[i] {
                for k in 0..p {
                    zb[k] += w * (self.y[i * p + k] - self.y[j * p + k]);
                }
                for k in 0..xd {
                    zh[k] += w * (self.xi[i * xd + k] - self.xi[j * xd + k]);
                }
            }
            if self.roots[i] {
                for k in 0..p {
                    zb[k] += self.y[i * p + k] - self.y_r[k];
                }
            }
        }

        let (dx_r, rest) = dz.split_at_mut(n);
        let (dx, dxc) = rest.split_at_mut(count * n);
        dx_r.fill(0.0);
        self.a.mul_add(x_r, dx_r);
        for i in 0..count {
            let s = &self.s[i * m..(i + 1) * m];
            let x = &z[x_base + i * n..x_base + (i + 1) * n];
            let out = &mut dx[i * n..(i + 1) * n];
            out.fill(0.0);
            self.a.mul_add(x, out);
            self.b.mul_add(s, out);

            let xc = &z[xc_base + i * n_c..xc_base + (i + 1) * n_c];
            let out = &mut dxc[i * n_c..(i + 1) * n_c];
            out.fill(0.0);
            self.a_c.mul_add(xc, out);
            self.b_c.mul_add(s, out);
            self.c_c.mul_add(&self.zeta_bar[i * p..(i + 1) * p], out);
            self.d_c.mul_add(&self.zeta_hat[i * xd..(i + 1) * xd], out);
            if self.roots[i] {
                self.a_c_root.mul_add(xc, out);
                self.b_c_root.mul_add(s, out);
            }
        }
    }
}

/// Recorded closed-loop trajectory. Per-time blocks are stored flat:
/// `x[k]` holds `N·n` values agent by agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub agents: usize,
    pub n: usize,
    pub m: usize,
    pub partial: bool,
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
    /// Empty for full-state kinds.
    pub xhat: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub sat_u: Vec<Vec<f64>>,
    pub x_r: Vec<Vec<f64>>,
    /// `eᵢ = x̃ᵢ − χᵢ`.
    pub e: Vec<Vec<f64>>,
    /// `ē = (L̄ ⊗ I) x̃ − x̂`, partial-state kinds only.
    pub ebar: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    fn empty(agents: usize, n: usize, m: usize, partial: bool) -> Self {
        TrajectoryRecord {
            agents,
            n,
            m,
            partial,
            times: Vec::new(),
            x: Vec::new(),
            chi: Vec::new(),
            xhat: Vec::new(),
            u: Vec::new(),
            sat_u: Vec::new(),
            x_r: Vec::new(),
            e: Vec::new(),
            ebar: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agent<'a>(&self, block: &'a [f64], i: usize, width: usize) -> &'a [f64] {
        &block[i * width..(i + 1) * width]
    }

    /// Controller initial values reconstructed from sample `k`.
    pub fn controller_at(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..self.agents)
            .map(|i| {
                let mut xc = Vec::new();
                if self.partial {
                    xc.extend_from_slice(&self.xhat[k][i * n..(i + 1) * n]);
                }
                xc.extend_from_slice(&self.chi[k][i * n..(i + 1) * n]);
                xc
            })
            .collect()
    }

    pub fn x_at(&self, k: usize) -> Vec<Vec<f64>> {
        self.x[k].chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `maxᵢ ‖xᵢ − x_r‖` at sample `k`.
    pub fn max_tracking_error(&self, k: usize) -> f64 {
        let x_r = &self.x_r[k];
        self.x[k]
            .chunks(self.n)
            .map(|x| x.iter().zip(x_r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Recomputes `e` and `ē` from the stored states.
    pub fn recompute_errors(&mut self, lbar: &Matrix) {
        let n = self.n;
        self.e.clear();
        self.ebar.clear();
        for k in 0..self.len() {
            let x_r = &self.x_r[k];
            let xt: Vec<f64> = self.x[k].iter().enumerate().map(|(idx, v)| v - x_r[idx % n]).collect();
            self.e.push(xt.iter().zip(&self.chi[k]).map(|(a, b)| a - b).collect());
            if self.partial {
                let mut eb: Vec<f64> = self.xhat[k].iter().map(|v| -v).collect();
                for i in 0..self.agents {
                    for j in 0..self.agents {
                        let l = lbar[(i, j)];
                        if l != 0.0 {
                            for s in 0..n {
                                eb[i * n + s] += l * xt[j * n + s];
                            }
                        }
                    }
                }
                self.ebar.push(eb);
            }
        }
    }
}

pub fn simulate(scenario: &Scenario) -> Result<TrajectoryRecord> {
    let mut f = assemble(scenario)?;
    let (n, m, n_c) = (f.n, f.m, f.n_c);
    let count = f.count;
    let partial = f.partial;
    let chi_off = scenario.protocol.chi_offset();
    let mut rec = TrajectoryRecord::empty(count, n, m, partial);
    let mut probe = assemble(scenario)?;
    let xc_base = n + count * n;
    integrate(&mut f, &scenario.initial_state(), scenario.step_config(), |t, z| {
        rec.times.push(t);
        rec.x_r.push(z[..n].to_vec());
        rec.x.push(z[n..xc_base].to_vec());
        let mut chi = Vec::with_capacity(count * n);
        let mut xhat = Vec::new();
        for i in 0..count {
            let xc = &z[xc_base + i * n_c..xc_base + (i + 1) * n_c];
            chi.extend_from_slice(&xc[chi_off..chi_off + n]);
            if partial {
                xhat.extend_from_slice(&xc[..n]);
            }
        }
        rec.chi.push(chi);
        if partial {
            rec.xhat.push(xhat);
        }
        let (u, s) = probe.controls(z);
        rec.u.push(u.to_vec());
        rec.sat_u.push(s.to_vec());
    })?;
    rec.recompute_errors(&scenario.graph.laplacian()?.expanded);
    Ok(rec)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(n: usize, m: usize, partial: bool) -> Vec<String> {
    let mut h = vec!["t".to_string(), "agent".to_string()];
    let mut push = |name: &str, k: usize| (0..k).for_each(|i| h.push(format!("{name}{i}")));
    push("x", n);
    push("chi", n);
    if partial {
        push("xhat", n);
    }
    push("u", m);
    push("sat_u", m);
    push("xr", n);
    h
}

/// One row per `(time, agent)`, agents numbered from 1.
pub fn write_trajectory_csv<W: Write>(rec: &TrajectoryRecord, out: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Simulation(format!("trajectory export: {e}"));
    let (n, m) = (rec.n, rec.m);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n, m, rec.partial)).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::new();
    for k in 0..rec.len() {
        for i in 0..rec.agents {
            row.clear();
            row.push(fmt17(rec.times[k]));
            row.push((i + 1).to_string());
            row.extend(rec.x[k][i * n..(i + 1) * n].iter().map(|&v| fmt17(v)));
            row.extend(rec.chi[k][i * n..(i + 1) * n].iter().map(|&v| fmt17(v)));
            if rec.partial {
                row.extend(rec.xhat[k][i * n..(i + 1) * n].iter().map(|&v| fmt17(v)));
            }
            row.extend(rec.u[k][i * m..(i + 1) * m].iter().map(|&v| fmt17(v)));
            row.extend(rec.sat_u[k][i * m..(i + 1) * m].iter().map(|&v| fmt17(v)));
            row.extend(rec.x_r[k].iter().map(|&v| fmt17(v)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Simulation(format!("trajectory export: {e}")))?;
    Ok(())
}

/// Parses a trajectory file back; `e` and `ē` are left empty.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryRecord> {
    let bad = |msg: String| Error::Simulation(format!("trajectory import: {msg}"));
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let count = |prefix: &str| {
        header
            .iter()
            .filter(|h| h.strip_prefix(prefix).is_some_and(|d| d.parse::<usize>().is_ok()))
            .count()
    };
    let n = count("x");
    let partial = count("xhat") > 0;
    let m = count("sat_u");
    if header.iter().collect::<Vec<_>>() != trajectory_header(n, m, partial) {
        return Err(bad("unexpected header".into()));
    }
    let mut rec = TrajectoryRecord::empty(0, n, m, partial);
    let mut agents = 0;
    for row in r.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let vals: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        let t = vals[0];
        let agent = vals[1] as usize;
        if agent == 1 {
            rec.times.push(t);
            rec.x.push(Vec::new());
            rec.chi.push(Vec::new());
            if partial {
                rec.xhat.push(Vec::new());
            }
            rec.u.push(Vec::new());
            rec.sat_u.push(Vec::new());
            rec.x_r.push(Vec::new());
        }
        agents = agents.max(agent);
        let k = rec.times.len() - 1;
        let mut at = 2;
        let mut take = |len: usize| {
            let s = vals[at..at + len].to_vec();
            at += len;
            s
        };
        rec.x[k].extend(take(n));
        rec.chi[k].extend(take(n));
        if partial {
            rec.xhat[k].extend(take(n));
        }
        rec.u[k].extend(take(m));
        rec.sat_u[k].extend(take(m));
        let x_r = take(n);
        if agent == 1 {
            rec.x_r[k] = x_r;
        }
    }
    rec.agents = agents;
    Ok(rec)
}
