//! Gain synthesis and verification for the six protocols.

use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentModel, Coupling, MixedDecomposition, ModelClass};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::protocol::ProtocolKind;

/// Strict definiteness margins must exceed this to pass.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Relative tolerance for equality-type residuals.
pub const EQUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainSet {
    pub p: Option<Matrix>,
    pub f: Option<Matrix>,
    pub k: Option<Matrix>,
    pub lambda: Option<Matrix>,
    pub p_d: Option<Matrix>,
    pub rho: f64,
}

impl GainSet {
    pub fn new(rho: f64) -> Self {
        GainSet {
            rho,
            ..Default::default()
        }
    }
}

/// Splits `A` into its Hurwitz part and its imaginary-axis part. Returns a
/// basis `T = [T_s T_c]` of both invariant subspaces and `dim T_s`.
fn neutral_splitting(a: &Matrix, tol: f64) -> Result<(Matrix, usize)> {
    let n = linalg::ensure_square(a)?;
    let central = |m: &Matrix| -> Result<Matrix> {
        let spectrum = linalg::eigenvalues(m)?;
        let scale = linalg::norm2(m).max(1.0);
        let axis = agent::CLUSTER_TOL * scale;
        let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
        if spectrum.eigenvalues.iter().any(|z| z.norm() <= axis) {
            let ker = linalg::canonical_basis(&linalg::null_space(m, tol)?);
            cols.extend(ker.column_iter().map(|c| c.into_owned()));
        }
        let mut omegas: Vec<f64> = Vec::new();
        for z in &spectrum.eigenvalues {
            if z.re.abs() <= axis && z.im > axis && omegas.iter().all(|w| (w - z.im).abs() > axis) {
                omegas.push(z.im);
            }
        }
        for omega in omegas {
            let w = linalg::complex_null_space(m, omega, tol)?;
            for col in w.column_iter() {
                let (re, im) = agent::realify_eigenvector(&col.into_owned());
                cols.push(re);
                cols.push(im);
            }
        }
        let count = spectrum.eigenvalues.iter().filter(|z| z.re.abs() <= axis).count();
        if cols.len() != count {
            return Err(Error::Synthesis(format!(
                "imaginary-axis eigenvalues are not semi-simple ({} eigenvectors for {count} eigenvalues)",
                cols.len()
            )));
        }
        if spectrum.abscissa() > axis {
            return Err(Error::Synthesis(
                "A has eigenvalues in the open right half plane".into(),
            ));
        }
        Ok(if cols.is_empty() {
            Matrix::zeros(n, 0)
        } else {
            Matrix::from_columns(&cols)
        })
    };
    let t_c = central(a)?;
    let w_c = central(&a.transpose())?;
    let n_s = n - t_c.ncols();
    let t_s = if n_s == 0 {
        Matrix::zeros(n, 0)
    } else if w_c.ncols() == 0 {
        Matrix::identity(n, n)
    } else {
        linalg::null_space(&w_c.transpose(), tol)?
    };
    if t_s.ncols() != n_s {
        return Err(Error::Synthesis("could not split the state space".into()));
    }
    let mut t = Matrix::zeros(n, n);
    t.view_mut((0, 0), (n, n_s)).copy_from(&t_s);
    t.view_mut((0, n_s), (n, n - n_s)).copy_from(&t_c);
    Ok((t, n_s))
}

/// Positive definite `P` with `PA + AᵀP ⪯ 0` for neutrally stable `A`.
pub fn solve_p_neutral(a: &Matrix) -> Result<Matrix> {
    let n = linalg::ensure_square(a)?;
    linalg::ensure_finite(a)?;
    let (t, n_s) = neutral_splitting(a, agent::DEFAULT_TOL)?;
    let t_inv = linalg::inverse(&t)?;
    let mut block = Matrix::identity(n, n);
    if n_s > 0 {
        let a_t = &t_inv * a * &t;
        let a_s = a_t.view((0, 0), (n_s, n_s)).into_owned();
        let p_s = linalg::solve_lyapunov(&a_s, &Matrix::identity(n_s, n_s))?;
        block.view_mut((0, 0), (n_s, n_s)).copy_from(&p_s);
    }
    let p = t_inv.transpose() * block * &t_inv;
    Ok(linalg::sym_part(&p))
}

/// `λ_max(PA + AᵀP)`.
pub fn neutral_residual(a: &Matrix, p: &Matrix) -> Result<f64> {
    linalg::max_sym_eigenvalue(&(p * a + a.transpose() * p))
}

pub fn design_f(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    let y = linalg::solve_filter_riccati(a, c)?;
    let f = &y * c.transpose();
    if !linalg::is_hurwitz(&(a - &f * c), linalg::EIG_TOL)? {
        return Err(Error::Synthesis("A - FC is not Hurwitz".into()));
    }
    Ok(f)
}

/// Default double-integrator gain `K = (−I, −I)`, in `(position, velocity)`
/// coordinates.
pub fn design_k_double(m: usize) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::Synthesis("input dimension must be positive".into()));
    }
    let mut k = Matrix::zeros(m, 2 * m);
    for i in 0..m {
        k[(i, i)] = -1.0;
        k[(i, m + i)] = -1.0;
    }
    Ok(k)
}

/// `Λ = blkdiag(Λ₀, 0, I)` with `Λ₀ = blkdiag(0, P_d)`.
pub fn compute_lambda(dec: &MixedDecomposition, p_d: &Matrix) -> Result<Matrix> {
    let q = dec.q;
    if p_d.shape() != (q, q) {
        return Err(Error::dim(format!(
            "P_d must be {q}x{q}, got {}x{}",
            p_d.nrows(),
            p_d.ncols()
        )));
    }
    if q > 0 && !linalg::is_positive_definite(p_d, 0.0)? {
        return Err(Error::Synthesis("P_d must be positive definite".into()));
    }
    let (_, n_f, n_w) = dec.partition();
    Ok(linalg::block_diag(&[
        &Matrix::zeros(q, q),
        p_d,
        &Matrix::zeros(n_f, n_f),
        &Matrix::identity(n_w, n_w),
    ]))
}

/// Result of the mixed-case gain construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedGain {
    pub k: Matrix,
    pub lambda: Matrix,
    pub beta: f64,
    /// `−λ_max(KB̃ + B̃ᵀKᵀ)`.
    pub margin: f64,
}

/// Orthogonal projector onto the left null space of `a`.
fn left_null_projector(a: &Matrix) -> Result<Matrix> {
    let z = linalg::null_space(&a.transpose(), agent::DEFAULT_TOL)?;
    Ok(&z * z.transpose())
}

/// `K` in transformed coordinates with `KÃ + B̃ᵀΛ = 0` and
/// `KB̃ + B̃ᵀKᵀ ≺ 0`.
pub fn design_k_mixed(dec: &MixedDecomposition, p_d: &Matrix) -> Result<MixedGain> {
    let lambda = compute_lambda(dec, p_d)?;
    let a = &dec.a_tilde;
    let b = &dec.b_tilde;
    let k0 = -(b.transpose() * &lambda) * linalg::pseudo_inverse(a, agent::DEFAULT_TOL)?;
    let proj = left_null_projector(a)?;
    let free = b.transpose() * proj;
    for e in -4..=10 {
        let beta = 2f64.powi(e);
        let k = &k0 - &free * beta;
        let lmax = linalg::max_sym_eigenvalue(&(&k * b + b.transpose() * k.transpose()))?;
        if lmax < -STRICT_MARGIN {
            return Ok(MixedGain {
                k,
                lambda,
                beta,
                margin: -lmax,
            });
        }
    }
    Err(Error::Synthesis(
        "no scaling in 2^-4..2^10 makes KB + BᵀKᵀ negative definite".into(),
    ))
}

/// Equality and inequality margins of a mixed-case gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedCheck {
    /// `‖KÃ + B̃ᵀΛ‖₂` at `p_d`.
    pub equality_residual: f64,
    pub equality_tol: f64,
    /// `λ_max(KB̃ + B̃ᵀKᵀ)`.
    pub inequality_max: f64,
    /// The `P_d` used; the residual-minimizing one when none was given.
    #[serde(skip)]
    pub p_d: Matrix,
    pub p_d_min_eigenvalue: f64,
}

impl MixedCheck {
    pub fn passed(&self) -> bool {
        self.equality_residual <= self.equality_tol
            && self.inequality_max < -STRICT_MARGIN
            && (self.p_d.nrows() == 0 || self.p_d_min_eigenvalue > 0.0)
    }
}

pub fn verify_k_mixed(dec: &MixedDecomposition, k: &Matrix, p_d: Option<&Matrix>) -> Result<MixedCheck> {
    let (n_s, n_f, n_w) = dec.partition();
    let n = dec.n();
    let q = dec.q;
    if k.shape() != (dec.m, n) {
        return Err(Error::dim(format!(
            "K must be {}x{n}, got {}x{}",
            dec.m,
            k.nrows(),
            k.ncols()
        )));
    }
    let a = &dec.a_tilde;
    let b = &dec.b_tilde;
    let p_d = match p_d {
        Some(p) => p.clone(),
        None => least_squares_p_d(dec, k)?,
    };
    if p_d.shape() != (q, q) {
        return Err(Error::dim(format!("P_d must be {q}x{q}")));
    }
    let lambda = linalg::block_diag(&[
        &Matrix::zeros(q, q),
        &p_d,
        &Matrix::zeros(n_f, n_f),
        &Matrix::identity(n_w, n_w),
    ]);
    debug_assert_eq!(lambda.nrows(), n_s + n_f + n_w);
    let residual = linalg::norm2(&(k * a + b.transpose() * &lambda));
    let scale = 1.0 + linalg::norm2(k) * linalg::norm2(a) + linalg::norm2(b);
    Ok(MixedCheck {
        equality_residual: residual,
        equality_tol: EQUALITY_TOL * scale,
        inequality_max: linalg::max_sym_eigenvalue(&(k * b + b.transpose() * k.transpose()))?,
        p_d_min_eigenvalue: if q == 0 {
            f64::INFINITY
        } else {
            linalg::min_sym_eigenvalue(&p_d)?
        },
        p_d,
    })
}

/// Symmetric `P_d` minimizing `‖KÃ + B̃ᵀΛ(P_d)‖_F`.
fn least_squares_p_d(dec: &MixedDecomposition, k: &Matrix) -> Result<Matrix> {
    let q = dec.q;
    if q == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let (_, n_f, n_w) = dec.partition();
    let n = dec.n();
    let b = &dec.b_tilde;
    let mut fixed = Matrix::zeros(n, n);
    fixed
        .view_mut((2 * q + n_f, 2 * q + n_f), (n_w, n_w))
        .fill_with_identity();
    let r0 = k * &dec.a_tilde + b.transpose() * fixed;
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i..q).map(move |j| (i, j))).collect();
    let mut design = Matrix::zeros(r0.len(), pairs.len());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let mut e = Matrix::zeros(n, n);
        e[(q + i, q + j)] = 1.0;
        e[(q + j, q + i)] = 1.0;
        let basis = b.transpose() * e;
        design.column_mut(col).copy_from_slice(basis.as_slice());
    }
    let rhs = -nalgebra::DVector::from_column_slice(r0.as_slice());
    let sol = linalg::pseudo_inverse(&design, 1e-12)? * rhs;
    let mut p_d = Matrix::zeros(q, q);
    for (&(i, j), &v) in pairs.iter().zip(sol.iter()) {
        p_d[(i, j)] = v;
        p_d[(j, i)] = v;
    }
    Ok(p_d)
}

/// Automatic gains for a protocol kind, built from the agent model alone.
pub fn synthesize(
    model: &AgentModel,
    kind: ProtocolKind,
    rho: f64,
    p_d: Option<&Matrix>,
) -> Result<GainSet> {
    let mut gains = GainSet::new(rho);
    match kind.required_class() {
        ModelClass::NeutrallyStable => gains.p = Some(solve_p_neutral(model.a())?),
        ModelClass::DoubleIntegrator => gains.k = Some(design_k_double(model.m())?),
        ModelClass::MixedCase => {
            let dec = agent::mixed_decompose(model.a(), model.b(), model.c(), agent::DEFAULT_TOL)?;
            let p_d = p_d.cloned().unwrap_or_else(|| Matrix::identity(dec.q, dec.q));
            let mixed = design_k_mixed(&dec, &p_d)?;
            gains.k = Some(mixed.k);
            gains.lambda = Some(mixed.lambda);
            gains.p_d = Some(p_d);
        }
        ModelClass::Unsupported => unreachable!("every kind targets a supported class"),
    }
    if kind.is_partial() {
        gains.f = Some(design_f(model.a(), model.c())?);
    }
    Ok(gains)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Signed distance to the pass threshold, where one is defined.
    pub margin: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn push(&mut self, name: &str, passed: bool, margin: f64, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            margin: (!margin.is_nan()).then_some(margin),
            detail: detail.into(),
        });
    }

    fn missing(&mut self, name: &str) {
        self.push(name, false, f64::NAN, "gain not supplied");
    }
}

/// Checks every condition the protocol kind places on the model and gains.
pub fn verify_gains(model: &AgentModel, kind: ProtocolKind, gains: &GainSet) -> VerifyReport {
    let mut r = VerifyReport::default();
    let rho_ok = gains.rho > 0.0 && gains.rho.is_finite();
    r.push(
        "rho",
        rho_ok,
        gains.rho,
        if rho_ok {
            "rho is positive".to_string()
        } else {
            format!("rho must be positive, got {}", gains.rho)
        },
    );

    let class_ok = model.class() == kind.required_class();
    r.push(
        "model class",
        class_ok,
        f64::NAN,
        format!(
            "{} needs {:?}, model is {:?}",
            kind.name(),
            kind.required_class(),
            model.class()
        ),
    );
    if !kind.is_partial() {
        let full = model.coupling() == Coupling::Full;
        r.push(
            "coupling",
            full,
            f64::NAN,
            if full {
                "full-state coupling (C = I)"
            } else {
                "full-state protocol needs C = I"
            },
        );
    }

    match kind.required_class() {
        ModelClass::NeutrallyStable => check_p(&mut r, model, gains),
        ModelClass::DoubleIntegrator => check_k_double(&mut r, model, gains),
        ModelClass::MixedCase => check_k_mixed(&mut r, model, gains),
        ModelClass::Unsupported => {}
    }
    if kind.is_partial() {
        check_f(&mut r, model, gains);
    }
    r
}

fn check_p(r: &mut VerifyReport, model: &AgentModel, gains: &GainSet) {
    let Some(p) = &gains.p else {
        return r.missing("P");
    };
    let n = model.n();
    if p.shape() != (n, n) {
        return r.push("P", false, f64::NAN, format!("P must be {n}x{n}"));
    }
    let symmetric = (p - p.transpose()).amax() <= EQUALITY_TOL * (1.0 + p.amax());
    let min = linalg::min_sym_eigenvalue(p).unwrap_or(f64::NAN);
    r.push(
        "P positive definite",
        symmetric && min > 0.0,
        min,
        format!("symmetric: {symmetric}, min eigenvalue {min:.6e}"),
    );
    let lmax = neutral_residual(model.a(), p).unwrap_or(f64::NAN);
    let tol = EQUALITY_TOL * linalg::norm2(model.a()).max(1.0);
    r.push(
        "PA + A'P <= 0",
        lmax <= tol,
        -lmax,
        format!("max eigenvalue {lmax:.6e}, tolerance {tol:.1e}"),
    );
}

fn check_k_double(r: &mut VerifyReport, model: &AgentModel, gains: &GainSet) {
    let Some(k) = &gains.k else {
        return r.missing("K");
    };
    let m = model.m();
    if k.shape() != (m, 2 * m) {
        return r.push("K", false, f64::NAN, format!("K must be {m}x{}", 2 * m));
    }
    for (name, off) in [("K1 negative definite", 0), ("K2 negative definite", m)] {
        let blk = k.view((0, off), (m, m)).into_owned();
        let lmax = linalg::max_sym_eigenvalue(&blk).unwrap_or(f64::NAN);
        r.push(
            name,
            lmax < -STRICT_MARGIN,
            -lmax,
            format!("max eigenvalue of symmetric part {lmax:.6e}"),
        );
    }
}

fn check_k_mixed(r: &mut VerifyReport, model: &AgentModel, gains: &GainSet) {
    let Some(k) = &gains.k else {
        return r.missing("K");
    };
    let dec = match agent::mixed_decompose(model.a(), model.b(), model.c(), agent::DEFAULT_TOL) {
        Ok(d) => d,
        Err(e) => return r.push("decomposition", false, f64::NAN, e.to_string()),
    };
    match verify_k_mixed(&dec, k, gains.p_d.as_ref()) {
        Ok(c) => {
            let p_d_ok = dec.q == 0 || c.p_d_min_eigenvalue > 0.0;
            r.push(
                "KA + B'Lambda = 0",
                c.equality_residual <= c.equality_tol && p_d_ok,
                c.equality_tol - c.equality_residual,
                format!(
                    "residual {:.6e}, tolerance {:.1e}, P_d min eigenvalue {:.6e}{}",
                    c.equality_residual,
                    c.equality_tol,
                    c.p_d_min_eigenvalue,
                    if gains.p_d.is_some() {
                        ""
                    } else {
                        " (residual-minimizing P_d)"
                    }
                ),
            );
            r.push(
                "KB + B'K' < 0",
                c.inequality_max < -STRICT_MARGIN,
                -c.inequality_max,
                format!("max eigenvalue {:.6e}", c.inequality_max),
            );
        }
        Err(e) => r.push("K", false, f64::NAN, e.to_string()),
    }
}

fn check_f(r: &mut VerifyReport, model: &AgentModel, gains: &GainSet) {
    let Some(f) = &gains.f else {
        return r.missing("F");
    };
    if f.shape() != (model.n(), model.p()) {
        return r.push(
            "F",
            false,
            f64::NAN,
            format!("F must be {}x{}", model.n(), model.p()),
        );
    }
    let closed = model.a() - f * model.c();
    let abscissa = linalg::eigenvalues(&closed)
        .map(|s| s.abscissa())
        .unwrap_or(f64::NAN);
    r.push(
        "A - FC Hurwitz",
        abscissa < -linalg::EIG_TOL,
        -abscissa,
        format!("spectral abscissa {abscissa:.6e}"),
    );
}
