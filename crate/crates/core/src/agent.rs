//! Agent models `ẋ = Ax + Bσ(u), y = Cx`, the saturation nonlinearity,
//! structural classification and the mixed-case coordinate change.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Complex64, Matrix};

/// Eigenvalues closer than this are treated as one multiple eigenvalue, and
/// eigenvalues with real part within it are treated as lying on the axis.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Largest accepted condition number of the mixed-case transformation.
pub const MAX_GAMMA_COND: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelClass {
    NeutrallyStable,
    DoubleIntegrator,
    MixedCase,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Full,
    Partial,
}

/// A multiple eigenvalue on the imaginary axis with its multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisEigenvalue {
    pub omega: f64,
    pub algebraic: usize,
    pub geometric: usize,
    pub semisimple: bool,
}

/// Numerical evidence behind a classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: ModelClass,
    pub controllable: bool,
    pub observable: bool,
    pub spectral_abscissa: f64,
    /// Imaginary-axis eigenvalues with `omega ≥ 0`.
    pub axis_eigenvalues: Vec<AxisEigenvalue>,
    pub zero_geometric: usize,
    pub zero_algebraic: usize,
    /// Number of size-2 Jordan blocks at zero (mixed case only).
    pub q: Option<usize>,
    /// For double integrators: state order `(positions, velocities)`.
    pub di_permutation: Option<Vec<usize>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    classification: Classification,
    coupling: Coupling,
}

impl AgentModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        Self::with_tol(a, b, c, DEFAULT_TOL)
    }

    pub fn with_tol(a: Matrix, b: Matrix, c: Matrix, tol: f64) -> Result<Self> {
        let classification = classify(&a, &b, &c, tol)?;
        let coupling = if c == Matrix::identity(a.nrows(), a.nrows()) {
            Coupling::Full
        } else {
            Coupling::Partial
        };
        Ok(AgentModel {
            a,
            b,
            c,
            classification,
            coupling,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn class(&self) -> ModelClass {
        self.classification.class
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }
}

pub fn sat(w: f64) -> f64 {
    w.clamp(-1.0, 1.0)
}

pub fn saturate(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&w| sat(w)).collect()
}

/// `2 Σ ∫₀^{uₖ} σ(s) ds`.
pub fn saturation_potential(u: &[f64]) -> f64 {
    u.iter()
        .map(|&w| {
            let a = w.abs();
            if a <= 1.0 {
                w * w
            } else {
                2.0 * a - 1.0
            }
        })
        .sum()
}

fn check_dims(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<usize> {
    let n = linalg::ensure_square(a)?;
    if n == 0 {
        return Err(Error::Model("state dimension must be positive".into()));
    }
    if b.nrows() != n || b.ncols() == 0 {
        return Err(Error::dim(format!(
            "B is {}x{}, expected {n} rows and at least one column",
            b.nrows(),
            b.ncols()
        )));
    }
    if c.ncols() != n || c.nrows() == 0 {
        return Err(Error::dim(format!(
            "C is {}x{}, expected {n} columns and at least one row",
            c.nrows(),
            c.ncols()
        )));
    }
    for m in [a, b, c] {
        linalg::ensure_finite(m)?;
    }
    Ok(n)
}

pub fn check_controllable_observable(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    tol: f64,
) -> Result<(bool, bool)> {
    let n = check_dims(a, b, c)?;
    let ctrb = linalg::rank(&linalg::controllability_matrix(a, b), tol)? == n;
    let obsv = linalg::rank(&linalg::observability_matrix(a, c), tol)? == n;
    Ok((ctrb, obsv))
}

/// `A − iωI` in real form: `A` itself for `ω = 0`, otherwise the
/// `2n × 2n` matrix `[[A, ωI], [−ωI, A]]` whose rank is twice the complex rank.
fn shifted_real_form(a: &Matrix, omega: f64) -> Matrix {
    if omega == 0.0 {
        return a.clone();
    }
    let n = a.nrows();
    let mut m = Matrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((n, n), (n, n)).copy_from(a);
    for i in 0..n {
        m[(i, n + i)] = omega;
        m[(n + i, i)] = -omega;
    }
    m
}

fn kernel_dims(a: &Matrix, omega: f64, tol: f64) -> Result<(usize, usize)> {
    let m = shifted_real_form(a, omega);
    let k = if omega == 0.0 { 1 } else { 2 };
    let dim = m.nrows();
    let r1 = linalg::rank(&m, tol)?;
    let r2 = linalg::rank(&(&m * &m), tol)?;
    Ok(((dim - r1) / k, (dim - r2) / k))
}

/// Groups eigenvalues on or near the closed upper half plane into clusters
/// of radius `CLUSTER_TOL`, returning `(centre, size)` pairs.
fn cluster(eigs: &[Complex64], scale: f64) -> Vec<(Complex64, usize)> {
    let radius = CLUSTER_TOL * scale;
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for &z in eigs {
        match out.iter_mut().find(|(c, _)| (*c - z).norm() <= radius) {
            Some((c, k)) => {
                *c = (*c * *k as f64 + z) / (*k as f64 + 1.0);
                *k += 1;
            }
            None => out.push((z, 1)),
        }
    }
    out
}

/// Recognises `A = [[0, I], [0, 0]]`, `B = [0; I]` up to a simultaneous
/// state permutation, returning the `(positions, velocities)` order.
fn double_integrator_permutation(a: &Matrix, b: &Matrix, tol: f64) -> Option<Vec<usize>> {
    let n = a.nrows();
    let m = b.ncols();
    if n != 2 * m {
        return None;
    }
    let is = |x: f64, v: f64| (x - v).abs() <= tol;
    let mut vel = vec![usize::MAX; m];
    for row in 0..n {
        let ones: Vec<usize> = (0..m).filter(|&k| is(b[(row, k)], 1.0)).collect();
        let zeros = (0..m).filter(|&k| is(b[(row, k)], 0.0)).count();
        match (ones.as_slice(), zeros) {
            ([k], z) if z == m - 1 && vel[*k] == usize::MAX => vel[*k] = row,
            ([], z) if z == m => {}
            _ => return None,
        }
    }
    if vel.contains(&usize::MAX) {
        return None;
    }
    let mut pos = vec![usize::MAX; m];
    for (k, &v) in vel.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&r| is(a[(r, v)], 1.0)).collect();
        match rows.as_slice() {
            [r] if !vel.contains(r) && !pos.contains(r) => pos[k] = *r,
            _ => return None,
        }
    }
    for i in 0..n {
        for j in 0..n {
            let expected = vel.iter().zip(&pos).any(|(&v, &p)| i == p && j == v);
            if !is(a[(i, j)], if expected { 1.0 } else { 0.0 }) {
                return None;
            }
        }
    }
    pos.extend(vel);
    Some(pos)
}

pub fn classify(a: &Matrix, b: &Matrix, c: &Matrix, tol: f64) -> Result<Classification> {
    let n = check_dims(a, b, c)?;
    let m = b.ncols();
    let (controllable, observable) = check_controllable_observable(a, b, c, tol)?;
    let spectrum = linalg::eigenvalues(a)?;
    let scale = linalg::norm2(a).max(1.0);
    let mut notes = Vec::new();

    let zero_geometric = n - linalg::rank(a, tol)?;
    let a2 = a * a;
    let k2 = n - linalg::rank(&a2, tol)?;
    let k3 = n - linalg::rank(&(&a2 * a), tol)?;

    let upper: Vec<Complex64> = spectrum
        .eigenvalues
        .iter()
        .copied()
        .filter(|z| z.im >= -CLUSTER_TOL * scale)
        .collect();
    let mut axis_eigenvalues = Vec::new();
    let mut zero_algebraic = 0;
    for (centre, _) in cluster(&upper, scale) {
        if centre.re.abs() > CLUSTER_TOL * scale {
            continue;
        }
        let omega = if centre.im.abs() <= CLUSTER_TOL * scale {
            0.0
        } else {
            centre.im
        };
        let algebraic = spectrum
            .eigenvalues
            .iter()
            .filter(|z| (**z - Complex64::new(0.0, omega)).norm() <= CLUSTER_TOL * scale)
            .count();
        let (geometric, ker2) = kernel_dims(a, omega, tol)?;
        if omega == 0.0 {
            zero_algebraic = algebraic;
        }
        axis_eigenvalues.push(AxisEigenvalue {
            omega,
            algebraic,
            geometric,
            semisimple: geometric == algebraic && ker2 == geometric,
        });
    }
    axis_eigenvalues.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    let abscissa = spectrum.abscissa();

    let di_permutation = double_integrator_permutation(a, b, tol);
    let mut q = None;
    let class = if di_permutation.is_some() {
        ModelClass::DoubleIntegrator
    } else if !(controllable && observable) {
        notes.push("model is not both controllable and observable".into());
        ModelClass::Unsupported
    } else if abscissa <= CLUSTER_TOL * scale && axis_eigenvalues.iter().all(|e| e.semisimple) {
        ModelClass::NeutrallyStable
    } else {
        match mixed_structure(a, m, zero_geometric, k2, k3, &spectrum.eigenvalues, scale) {
            Ok(qq) => {
                q = Some(qq);
                ModelClass::MixedCase
            }
            Err(why) => {
                notes.push(why);
                ModelClass::Unsupported
            }
        }
    };

    Ok(Classification {
        class,
        controllable,
        observable,
        spectral_abscissa: abscissa,
        axis_eigenvalues,
        zero_geometric,
        zero_algebraic,
        q,
        di_permutation,
        notes,
    })
}

/// Checks the mixed-case structure and returns `q`: zero has geometric
/// multiplicity `m` and Jordan blocks of size at most two, every other
/// eigenvalue is simple and purely imaginary.
fn mixed_structure(
    a: &Matrix,
    m: usize,
    k1: usize,
    k2: usize,
    k3: usize,
    eigs: &[Complex64],
    scale: f64,
) -> std::result::Result<usize, String> {
    let n = a.nrows();
    if k1 != m {
        return Err(format!(
            "zero eigenvalue has geometric multiplicity {k1}, expected {m}"
        ));
    }
    if k3 != k2 {
        return Err("zero eigenvalue has a Jordan block larger than two".into());
    }
    let mut rest: Vec<Complex64> = eigs.to_vec();
    rest.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    rest.truncate(n - k2);
    for z in &rest {
        if z.re.abs() > CLUSTER_TOL * scale || z.im.abs() <= CLUSTER_TOL * scale {
            return Err(format!("eigenvalue {z} is not purely imaginary and nonzero"));
        }
    }
    if cluster(&rest, scale).len() != rest.len() {
        return Err("nonzero imaginary-axis eigenvalues are not simple".into());
    }
    Ok(k2 - k1)
}

/// Coordinates `x̃ = Γₓ x` in which `Ã = blkdiag(A_S, A_F, A_ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDecomposition {
    pub gamma_x: Matrix,
    pub gamma_x_inv: Matrix,
    pub a_s: Matrix,
    pub a_f: Matrix,
    pub a_omega: Matrix,
    /// Exactly structured `blkdiag(A_S, A_F, A_ω)`.
    pub a_tilde: Matrix,
    pub b_tilde: Matrix,
    pub c_tilde: Matrix,
    pub m: usize,
    pub q: usize,
    pub omegas: Vec<f64>,
}

impl MixedDecomposition {
    pub fn n(&self) -> usize {
        self.gamma_x.nrows()
    }

    /// Sizes of the `(A_S, A_F, A_ω)` blocks.
    pub fn partition(&self) -> (usize, usize, usize) {
        (2 * self.q, self.m - self.q, self.n() - self.m - self.q)
    }

    /// `‖Γₓ A Γₓ⁻¹ − Ã‖₂`.
    pub fn residual(&self, a: &Matrix) -> f64 {
        linalg::norm2(&(&self.gamma_x * a * &self.gamma_x_inv - &self.a_tilde))
    }
}

pub fn mixed_decompose(a: &Matrix, b: &Matrix, c: &Matrix, tol: f64) -> Result<MixedDecomposition> {
    let n = check_dims(a, b, c)?;
    let m = b.ncols();
    let scale = linalg::norm2(a).max(1.0);
    let k1 = n - linalg::rank(a, tol)?;
    let a2 = a * a;
    let k2 = n - linalg::rank(&a2, tol)?;
    let k3 = n - linalg::rank(&(&a2 * a), tol)?;
    let eigs = linalg::eigenvalues(a)?.eigenvalues;
    let q = mixed_structure(a, m, k1, k2, k3, &eigs, scale).map_err(Error::Model)?;

    let ker1 = linalg::canonical_basis(&linalg::null_space(a, tol)?);
    let ker2 = linalg::canonical_basis(&linalg::null_space(&a2, tol)?);

    let mut positions: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut velocities = Vec::new();
    for v in ker2.column_iter() {
        if positions.len() == q {
            break;
        }
        let p = a * v;
        if independent_of(&positions, &p, tol)? {
            positions.push(p);
            velocities.push(v.into_owned());
        }
    }
    if positions.len() != q {
        return Err(Error::Model(format!(
            "found {} of {q} double-integrator chains",
            positions.len()
        )));
    }
    let mut singles = Vec::new();
    let mut span = positions.clone();
    for f in ker1.column_iter() {
        if singles.len() == m - q {
            break;
        }
        let f = f.into_owned();
        if independent_of(&span, &f, tol)? {
            span.push(f.clone());
            singles.push(f);
        }
    }
    if singles.len() != m - q {
        return Err(Error::Model("could not complete the kernel basis".into()));
    }

    let mut omegas: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im > CLUSTER_TOL * scale)
        .map(|z| snap(z.im))
        .collect();
    omegas.sort_by(f64::total_cmp);
    let mut oscillators = Vec::new();
    for &omega in &omegas {
        let w = linalg::complex_null_space(a, omega, tol)?;
        if w.ncols() != 1 {
            return Err(Error::Model(format!(
                "eigenvalue i*{omega} has {} eigenvectors, expected one",
                w.ncols()
            )));
        }
        let (re, im) = realify_eigenvector(&w.column(0).into_owned());
        oscillators.push((re, im));
    }

    let mut columns: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    columns.extend(positions);
    columns.extend(velocities);
    columns.extend(singles);
    for (re, im) in oscillators {
        columns.push(re);
        columns.push(im);
    }
    if columns.len() != n {
        return Err(Error::Model(format!(
            "assembled {} basis vectors for a {n}-dimensional state",
            columns.len()
        )));
    }
    let t = Matrix::from_columns(&columns);
    let gamma_x = linalg::inverse(&t)?;
    let cond = linalg::condition_number(&gamma_x);
    if cond > MAX_GAMMA_COND {
        return Err(Error::Model(format!(
            "transformation is ill-conditioned (condition number {cond:.3e})"
        )));
    }

    let mut a_s = Matrix::zeros(2 * q, 2 * q);
    for k in 0..q {
        a_s[(k, q + k)] = 1.0;
    }
    let a_f = Matrix::zeros(m - q, m - q);
    let n_omega = 2 * omegas.len();
    let mut a_omega = Matrix::zeros(n_omega, n_omega);
    for (k, &omega) in omegas.iter().enumerate() {
        a_omega[(2 * k, 2 * k + 1)] = omega;
        a_omega[(2 * k + 1, 2 * k)] = -omega;
    }
    let a_tilde = linalg::block_diag(&[&a_s, &a_f, &a_omega]);
    let dec = MixedDecomposition {
        b_tilde: &gamma_x * b,
        c_tilde: c * &t,
        gamma_x,
        gamma_x_inv: t,
        a_s,
        a_f,
        a_omega,
        a_tilde,
        m,
        q,
        omegas,
    };
    let residual = dec.residual(a);
    if residual > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "decomposition residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(dec)
}

/// Real and imaginary parts of a complex eigenvector scaled so that its
/// first entry of maximal modulus is exactly 1.
pub(crate) fn realify_eigenvector(
    w: &nalgebra::DVector<Complex64>,
) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
    let max = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let k = w
        .iter()
        .position(|z| z.norm() >= (1.0 - 1e-8) * max)
        .expect("nonzero eigenvector");
    let pivot = w[k];
    let w = w.map(|z| z / pivot);
    (w.map(|z| snap(z.re)), w.map(|z| snap(z.im)))
}

/// Rounds values within `1e-12` of an integer onto it.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 {
        r
    } else {
        x
    }
}

fn independent_of(set: &[nalgebra::DVector<f64>], v: &nalgebra::DVector<f64>, tol: f64) -> Result<bool> {
    if v.amax() <= tol {
        return Ok(false);
    }
    let mut cols = set.to_vec();
    cols.push(v.clone());
    Ok(linalg::rank(&Matrix::from_columns(&cols), tol)? == cols.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    #[test]
    fn saturate_examples() {
        assert_eq!(saturate(&[0.5, -0.25]), vec![0.5, -0.25]);
        assert_eq!(saturate(&[3.0, -7.0]), vec![1.0, -1.0]);
        assert_eq!(saturate(&[1.0]), vec![1.0]);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(saturation_potential(&[0.0]), 0.0);
        assert_eq!(saturation_potential(&[1.0]), 1.0);
        assert_eq!(saturation_potential(&[2.0]), 3.0);
    }

    proptest! {
        #[test]
        fn saturate_properties(v in prop::collection::vec(-10.0f64..10.0, 1..6),
                               w in prop::collection::vec(-10.0f64..10.0, 1..6)) {
            let s = saturate(&v);
            prop_assert_eq!(saturate(&s), s.clone());
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let sn = saturate(&neg);
            for (a, b) in s.iter().zip(&sn) {
                prop_assert_eq!(*a, -*b);
            }
            for (k, (x, y)) in v.iter().zip(&w).enumerate() {
                let (sx, sy) = (sat(*x), sat(*y));
                prop_assert!((sx - sy).abs() <= (x - y).abs());
                prop_assert!(s[k.min(s.len() - 1)].abs() <= 1.0);
            }
        }

        #[test]
        fn potential_gradient_is_twice_sat(u in prop::collection::vec(-4.0f64..4.0, 1..4)) {
            let h = 1e-6;
            for k in 0..u.len() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (saturation_potential(&up) - saturation_potential(&dn)) / (2.0 * h);
                prop_assert!((fd - 2.0 * sat(u[k])).abs() <= 1e-6, "{} vs {}", fd, 2.0 * sat(u[k]));
            }
        }
    }

    #[test]
    fn skew_model_is_neutrally_stable() {
        let model = AgentModel::new(
            m(2, 2, &[0., 1., -1., 0.]),
            m(2, 1, &[0., 1.]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(model.class(), ModelClass::NeutrallyStable);
        assert_eq!(model.coupling(), Coupling::Full);
        let cls = model.classification();
        assert_eq!(cls.axis_eigenvalues.len(), 1);
        assert!((cls.axis_eigenvalues[0].omega - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example1_is_double_integrator() {
        let model = presets::example1_model();
        assert_eq!(model.class(), ModelClass::DoubleIntegrator);
        assert_eq!(model.coupling(), Coupling::Partial);
        assert_eq!(model.classification().di_permutation, Some(vec![0, 1]));
    }

    #[test]
    fn interleaved_double_integrator_is_recognised() {
        // states (p1, v1, p2, v2)
        let a = m(4, 4, &[0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0.]);
        let b = m(4, 2, &[0., 0., 1., 0., 0., 0., 0., 1.]);
        let cls = classify(&a, &b, &Matrix::identity(4, 4), DEFAULT_TOL).unwrap();
        assert_eq!(cls.class, ModelClass::DoubleIntegrator);
        assert_eq!(cls.di_permutation, Some(vec![0, 2, 1, 3]));
    }

    #[test]
    fn example2_is_mixed() {
        let model = presets::example2_model();
        let cls = model.classification();
        assert_eq!(cls.class, ModelClass::MixedCase);
        assert_eq!(cls.q, Some(2));
        assert_eq!(model.m(), 3);
        assert_eq!(cls.zero_geometric, 3);
        assert_eq!(cls.zero_algebraic, 5);
        let osc: Vec<_> = cls.axis_eigenvalues.iter().filter(|e| e.omega > 0.0).collect();
        assert_eq!(osc.len(), 1);
        assert_eq!(osc[0].algebraic, 1);
        assert!((osc[0].omega - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controllability_examples() {
        let e1 = presets::example1_model();
        assert_eq!(
            check_controllable_observable(e1.a(), e1.b(), e1.c(), DEFAULT_TOL).unwrap(),
            (true, true)
        );
        assert_eq!(
            check_controllable_observable(
                &Matrix::zeros(2, 2),
                &m(2, 1, &[1., 0.]),
                &Matrix::identity(2, 2),
                DEFAULT_TOL
            )
            .unwrap(),
            (false, true)
        );
        let e2 = presets::example2_model();
        assert_eq!(
            check_controllable_observable(e2.a(), e2.b(), e2.c(), DEFAULT_TOL).unwrap(),
            (true, true)
        );
    }

    #[test]
    fn inconsistent_dimensions_rejected() {
        let err = classify(
            &Matrix::zeros(2, 2),
            &Matrix::zeros(3, 1),
            &Matrix::identity(2, 2),
            DEFAULT_TOL,
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn unstable_model_is_unsupported() {
        let cls = classify(
            &m(1, 1, &[1.0]),
            &m(1, 1, &[1.0]),
            &m(1, 1, &[1.0]),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(cls.class, ModelClass::Unsupported);
    }

    #[test]
    fn example2_decomposition_is_identity() {
        let model = presets::example2_model();
        let dec = mixed_decompose(model.a(), model.b(), model.c(), DEFAULT_TOL).unwrap();
        assert_eq!(dec.partition(), (4, 1, 2));
        assert_eq!(dec.gamma_x, Matrix::identity(7, 7));
        assert_eq!(dec.a_omega, m(2, 2, &[0., 1., -1., 0.]));
        assert_eq!(&dec.a_tilde, model.a());
        assert_eq!(&dec.b_tilde, model.b());
    }

    #[test]
    fn block_form_input_is_reproduced() {
        // A_S for q = 1, one single integrator, one oscillator with ω = 2
        let a = linalg::block_diag(&[
            &m(2, 2, &[0., 1., 0., 0.]),
            &Matrix::zeros(1, 1),
            &m(2, 2, &[0., 2., -2., 0.]),
        ]);
        let b = m(5, 2, &[0., 0., 1., 0., 0., 1., 1., 0., 0., 1.]);
        let c = Matrix::identity(5, 5);
        let dec = mixed_decompose(&a, &b, &c, DEFAULT_TOL).unwrap();
        assert!((dec.gamma_x.determinant().abs() - 1.0).abs() < 1e-12);
        assert_eq!(dec.a_tilde, a);
        assert!(dec.residual(&a) <= 1e-12);
    }

    #[test]
    fn triple_jordan_block_rejected() {
        let a = m(3, 3, &[0., 1., 0., 0., 0., 1., 0., 0., 0.]);
        let b = m(3, 1, &[0., 0., 1.]);
        let c = m(1, 3, &[1., 0., 0.]);
        assert!(mixed_decompose(&a, &b, &c, DEFAULT_TOL).is_err());
        assert_eq!(classify(&a, &b, &c, DEFAULT_TOL).unwrap().class, ModelClass::Unsupported);
    }

    #[test]
    fn random_similarity_of_mixed_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = presets::example2_model();
        for _ in 0..10 {
            let s = Matrix::from_fn(7, 7, |i, j| {
                (if i == j { 2.0 } else { 0.0 }) + rng.gen_range(-0.5..0.5)
            });
            let s_inv = linalg::inverse(&s).unwrap();
            let a = &s * base.a() * &s_inv;
            let b = &s * base.b();
            let c = base.c() * &s_inv;
            let dec = mixed_decompose(&a, &b, &c, DEFAULT_TOL).unwrap();
            assert!(dec.residual(&a) <= 1e-8 * linalg::norm2(&a));
            assert!(linalg::norm2(&(&dec.a_omega + dec.a_omega.transpose())) <= 1e-8);
            assert_eq!(dec.q, 2);
        }
    }
}
