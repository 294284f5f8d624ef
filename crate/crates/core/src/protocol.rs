//! Per-agent controller realizations and the network signals they consume.
//!
//! Every protocol is realized as
//!
//! ```text
//! ẋc = (Ac + ι·Ac_root) xc + (Bc + ι·Bc_root) σ(u) + Cc ζ̄ + Dc ζ̂
//! u  = Fc xc
//! ξ  = Hc xc            (full-state kinds)
//! ξ  = (Hc xc, σ(u))    (partial-state kinds)
//! ```
//!
//! where `ι` is 1 for root agents and 0 otherwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentModel, Coupling, MixedDecomposition, ModelClass};
use crate::error::{Error, Result};
use crate::gains::GainSet;
use crate::graph::CommGraph;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::P1,
        ProtocolKind::P2,
        ProtocolKind::P3,
        ProtocolKind::P4,
        ProtocolKind::P5,
        ProtocolKind::P6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::P1 => "P1",
            ProtocolKind::P2 => "P2",
            ProtocolKind::P3 => "P3",
            ProtocolKind::P4 => "P4",
            ProtocolKind::P5 => "P5",
            ProtocolKind::P6 => "P6",
        }
    }

    /// Partial-state kinds run an observer and exchange `σ(u)`.
    pub fn is_partial(self) -> bool {
        matches!(self, ProtocolKind::P2 | ProtocolKind::P4 | ProtocolKind::P6)
    }

    pub fn required_class(self) -> ModelClass {
        match self {
            ProtocolKind::P1 | ProtocolKind::P2 => ModelClass::NeutrallyStable,
            ProtocolKind::P3 | ProtocolKind::P4 => ModelClass::DoubleIntegrator,
            ProtocolKind::P5 | ProtocolKind::P6 => ModelClass::MixedCase,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Protocol(format!("unknown protocol kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRealization {
    pub kind: ProtocolKind,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub n_c: usize,
    pub xi_dim: usize,
    pub rho: f64,
    pub a_c: Matrix,
    pub b_c: Matrix,
    pub c_c: Matrix,
    pub d_c: Matrix,
    pub f_c: Matrix,
    pub h_c: Matrix,
    pub a_c_root: Matrix,
    pub b_c_root: Matrix,
    /// Observer gain (partial-state kinds).
    pub f: Option<Matrix>,
    /// Mixed-case transformation, kept for diagnostics.
    pub gamma_x: Option<Matrix>,
}

impl ProtocolRealization {
    /// Columns of `xc` holding `χ`.
    pub fn chi_offset(&self) -> usize {
        if self.kind.is_partial() {
            self.n
        } else {
            0
        }
    }

    /// The state feedback `u = G χ`.
    pub fn feedback(&self) -> Matrix {
        self.f_c.columns(self.chi_offset(), self.n).into_owned()
    }

    /// All controller matrices in a fixed order, for hashing and equality.
    pub fn matrices(&self) -> [(&'static str, &Matrix); 8] {
        [
            ("A_c", &self.a_c),
            ("B_c", &self.b_c),
            ("C_c", &self.c_c),
            ("D_c", &self.d_c),
            ("F_c", &self.f_c),
            ("H_c", &self.h_c),
            ("A_c_root", &self.a_c_root),
            ("B_c_root", &self.b_c_root),
        ]
    }
}

/// Builds the state feedback `G` in `u = Gχ`.
fn feedback_gain(
    kind: ProtocolKind,
    model: &AgentModel,
    decomp: Option<&MixedDecomposition>,
    gains: &GainSet,
) -> Result<Matrix> {
    let (n, m) = (model.n(), model.m());
    let rho = gains.rho;
    let need = |g: &Option<Matrix>, name: &str| {
        g.clone()
            .ok_or_else(|| Error::Protocol(format!("{kind} needs gain {name}")))
    };
    let g = match kind.required_class() {
        ModelClass::NeutrallyStable => {
            let p = need(&gains.p, "P")?;
            if p.shape() != (n, n) {
                return Err(Error::dim(format!("P must be {n}x{n}")));
            }
            -(model.b().transpose() * p) * rho
        }
        ModelClass::DoubleIntegrator => {
            let k = need(&gains.k, "K")?;
            if k.shape() != (m, n) {
                return Err(Error::dim(format!("K must be {m}x{n}")));
            }
            let perm = model
                .classification()
                .di_permutation
                .as_ref()
                .ok_or_else(|| Error::Protocol("model has no double-integrator ordering".into()))?;
            let mut g = Matrix::zeros(m, n);
            for (k_col, &state) in perm.iter().enumerate() {
                g.set_column(state, &(k.column(k_col) * rho));
            }
            g
        }
        ModelClass::MixedCase => {
            let k = need(&gains.k, "K")?;
            if k.shape() != (m, n) {
                return Err(Error::dim(format!("K must be {m}x{n}")));
            }
            let dec = decomp.ok_or_else(|| Error::Protocol(format!("{kind} needs the mixed decomposition")))?;
            k * &dec.gamma_x * rho
        }
        ModelClass::Unsupported => unreachable!("every kind targets a supported class"),
    };
    Ok(g)
}

pub fn build_protocol(
    kind: ProtocolKind,
    model: &AgentModel,
    decomp: Option<&MixedDecomposition>,
    gains: &GainSet,
) -> Result<ProtocolRealization> {
    if !(gains.rho > 0.0 && gains.rho.is_finite()) {
        return Err(Error::Protocol(format!("rho must be positive, got {}", gains.rho)));
    }
    if model.class() != kind.required_class() {
        return Err(Error::Protocol(format!(
            "{kind} needs a {:?} model, got {:?}",
            kind.required_class(),
            model.class()
        )));
    }
    if !kind.is_partial() && model.coupling() != Coupling::Full {
        return Err(Error::Protocol(format!("{kind} needs full-state coupling (C = I)")));
    }
    let (n, m, p) = (model.n(), model.m(), model.p());
    let a = model.a();
    let b = model.b();
    let eye = Matrix::identity(n, n);
    let g = feedback_gain(kind, model, decomp, gains)?;

    let realization = if kind.is_partial() {
        let f = gains
            .f
            .clone()
            .ok_or_else(|| Error::Protocol(format!("{kind} needs gain F")))?;
        if f.shape() != (n, p) {
            return Err(Error::dim(format!("F must be {n}x{p}")));
        }
        let n_c = 2 * n;
        let mut a_c = Matrix::zeros(n_c, n_c);
        a_c.view_mut((0, 0), (n, n)).copy_from(&(a - &f * model.c()));
        a_c.view_mut((n, 0), (n, n)).copy_from(&eye);
        a_c.view_mut((n, n), (n, n)).copy_from(a);
        let mut b_c = Matrix::zeros(n_c, m);
        b_c.view_mut((n, 0), (n, m)).copy_from(b);
        let mut c_c = Matrix::zeros(n_c, p);
        c_c.view_mut((0, 0), (n, p)).copy_from(&f);
        let mut d_c = Matrix::zeros(n_c, n + m);
        d_c.view_mut((0, n), (n, m)).copy_from(b);
        d_c.view_mut((n, 0), (n, n)).copy_from(&-&eye);
        let mut f_c = Matrix::zeros(m, n_c);
        f_c.view_mut((0, n), (m, n)).copy_from(&g);
        let mut h_c = Matrix::zeros(n, n_c);
        h_c.view_mut((0, n), (n, n)).copy_from(&eye);
        let mut a_c_root = Matrix::zeros(n_c, n_c);
        a_c_root.view_mut((n, n), (n, n)).copy_from(&-&eye);
        let mut b_c_root = Matrix::zeros(n_c, m);
        b_c_root.view_mut((0, 0), (n, m)).copy_from(b);
        ProtocolRealization {
            kind,
            n,
            m,
            p,
            n_c,
            xi_dim: n + m,
            rho: gains.rho,
            a_c,
            b_c,
            c_c,
            d_c,
            f_c,
            h_c,
            a_c_root,
            b_c_root,
            f: Some(f),
            gamma_x: decomp.map(|d| d.gamma_x.clone()),
        }
    } else {
        ProtocolRealization {
            kind,
            n,
            m,
            p,
            n_c: n,
            xi_dim: n,
            rho: gains.rho,
            a_c: a.clone(),
            b_c: b.clone(),
            c_c: eye.clone(),
            d_c: -&eye,
            f_c: g,
            h_c: eye.clone(),
            a_c_root: -&eye,
            b_c_root: Matrix::zeros(n, m),
            f: None,
            gamma_x: decomp.map(|d| d.gamma_x.clone()),
        }
    };
    Ok(realization)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSignals {
    pub zeta_bar: Vec<Vec<f64>>,
    pub zeta_hat_1: Vec<Vec<f64>>,
    /// Empty for full-state kinds.
    pub zeta_hat_2: Vec<Vec<f64>>,
}

fn diff_sum(graph: &CommGraph, i: usize, values: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for j in 0..graph.len() {
        let w = graph.weight(i, j);
        if w != 0.0 {
            for k in 0..dim {
                out[k] += w * (values[i][k] - values[j][k]);
            }
        }
    }
    out
}

/// `ζ̄ᵢ = Σⱼ aᵢⱼ(yᵢ − yⱼ) + ιᵢ(yᵢ − y_r)` and `ζ̂ᵢ = Σⱼ aᵢⱼ(ξᵢ − ξⱼ)`.
pub fn compute_network_signals(
    kind: ProtocolKind,
    n: usize,
    graph: &CommGraph,
    y: &[Vec<f64>],
    y_r: &[f64],
    xi: &[Vec<f64>],
) -> Result<NetworkSignals> {
    let count = graph.len();
    let p = y_r.len();
    if y.len() != count || xi.len() != count {
        return Err(Error::dim(format!("expected values for {count} agents")));
    }
    if y.iter().any(|v| v.len() != p) {
        return Err(Error::dim(format!("every output must have length {p}")));
    }
    let xi_dim = xi.first().map_or(n, Vec::len);
    if xi.iter().any(|v| v.len() != xi_dim) || xi_dim < n || (!kind.is_partial() && xi_dim != n) {
        return Err(Error::dim("inconsistent exchanged vector lengths".to_string()));
    }
    let mut signals = NetworkSignals {
        zeta_bar: Vec::with_capacity(count),
        zeta_hat_1: Vec::with_capacity(count),
        zeta_hat_2: Vec::new(),
    };
    for i in 0..count {
        let mut zb = diff_sum(graph, i, y, p);
        if graph.is_root(i) {
            for k in 0..p {
                zb[k] += y[i][k] - y_r[k];
            }
        }
        signals.zeta_bar.push(zb);
        let zh = diff_sum(graph, i, xi, xi_dim);
        signals.zeta_hat_1.push(zh[..n].to_vec());
        if kind.is_partial() {
            signals.zeta_hat_2.push(zh[n..].to_vec());
        }
    }
    Ok(signals)
}

/// `ζ̄ᵢ = Σⱼ ℓ̄ᵢⱼ(yⱼ − y_r)`, the expanded-Laplacian form of the same signal.
pub fn zeta_bar_from_laplacian(lbar: &Matrix, y: &[Vec<f64>], y_r: &[f64]) -> Vec<Vec<f64>> {
    (0..lbar.nrows())
        .map(|i| {
            (0..y_r.len())
                .map(|k| (0..lbar.ncols()).map(|j| lbar[(i, j)] * (y[j][k] - y_r[k])).sum())
                .collect()
        })
        .collect()
}
