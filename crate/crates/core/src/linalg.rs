//! Dense real linear algebra shared by every other module.
//!
//! Everything here operates on small, well-scaled matrices (agent dimension
//! up to about 20, stacked network dimension up to a few hundred), so the
//! routines favour determinism and simple direct methods over asymptotic
//! efficiency. Decompositions (Schur, SVD, LU) come from `nalgebra`; the
//! Lyapunov and Riccati solvers are built on top of them.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Complex64 = Complex<f64>;

/// Default tolerance for every spectral predicate.
pub const EIG_TOL: f64 = 1e-9;

/// Relative singular-value threshold used for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a square matrix together with the tolerance they were
/// computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest real part (spectral abscissa). `-inf` for an empty spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every non-real eigenvalue has its conjugate in the spectrum
    /// (matched greedily within `tol`).
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.eigenvalues.len()];
        for (i, z) in self.eigenvalues.iter().enumerate() {
            if used[i] || z.im.abs() <= tol {
                used[i] = true;
                continue;
            }
            used[i] = true;
            let partner = self
                .eigenvalues
                .iter()
                .enumerate()
                .find(|(j, w)| !used[*j] && (**w - z.conj()).norm() <= tol);
            match partner {
                Some((j, _)) => used[j] = true,
                None => return false,
            }
        }
        true
    }
}

pub(crate) fn ensure_square(a: &Matrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub(crate) fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteMatrix)
    }
}

/// Kronecker product: block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Block-diagonal assembly; empty blocks are allowed and contribute nothing.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn eigenvalues(a: &Matrix) -> Result<Spectrum> {
    ensure_square(a)?;
    ensure_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            tol: EIG_TOL,
        });
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(Spectrum {
        eigenvalues: schur.complex_eigenvalues().iter().copied().collect(),
        tol: EIG_TOL,
    })
}

/// True iff every eigenvalue has real part `< -tol`.
pub fn is_hurwitz(a: &Matrix, tol: f64) -> Result<bool> {
    Ok(eigenvalues(a)?.abscissa() < -tol)
}

pub fn sym_part(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    ensure_square(a)?;
    ensure_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<f64> = sym_part(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn max_sym_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(sym_eigenvalues(a)?
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY))
}

pub fn min_sym_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(sym_eigenvalues(a)?.first().copied().unwrap_or(f64::INFINITY))
}

/// Definiteness of the symmetric part `(a + aᵀ)/2`.
pub fn is_negative_definite(a: &Matrix, tol: f64) -> Result<bool> {
    Ok(max_sym_eigenvalue(a)? < -tol)
}

pub fn is_positive_definite(a: &Matrix, tol: f64) -> Result<bool> {
    Ok(min_sym_eigenvalue(a)? > tol)
}

fn svd(a: &Matrix) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    ensure_finite(a)?;
    nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    Ok(svd(a)?.singular_values.iter().copied().collect())
}

/// Induced 2-norm (largest singular value).
pub fn norm2(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a)
        .map(|s| s.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// 2-norm condition number; `inf` for singular input.
pub fn condition_number(a: &Matrix) -> f64 {
    match singular_values(a) {
        Ok(s) if !s.is_empty() => {
            let max = s.iter().copied().fold(0.0, f64::max);
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            if min == 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        _ => f64::INFINITY,
    }
}

/// Numerical rank with singular values compared against `rel_tol * σ_max`.
pub fn rank(a: &Matrix, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let max = s.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * max).count())
}

/// Orthonormal basis (as columns) of the right null space of `a`.
pub fn null_space(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let n = a.ncols();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    // Pad wide matrices with zero rows so the SVD returns a full V.
    let padded = if a.nrows() < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), a.shape()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let dec = svd(&padded)?;
    let s = &dec.singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let r = if max == 0.0 {
        0
    } else {
        s.iter().filter(|&&v| v > rel_tol * max).count()
    };
    let v_t = dec
        .v_t
        .ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    Ok(v_t.rows(r, n - r).transpose())
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn range_basis(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if a.is_empty() {
        return Ok(Matrix::zeros(a.nrows(), 0));
    }
    let dec = svd(a)?;
    let s = &dec.singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let r = if max == 0.0 {
        0
    } else {
        s.iter().filter(|&&v| v > rel_tol * max).count()
    };
    let u = dec.u.ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    Ok(u.columns(0, r).into_owned())
}

/// Orthonormal basis of the null space of the complex matrix `a - i·omega·I`.
pub fn complex_null_space(
    a: &Matrix,
    omega: f64,
    rel_tol: f64,
) -> Result<DMatrix<Complex64>> {
    let n = ensure_square(a)?;
    let shifted = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let re = a[(i, j)];
        if i == j {
            Complex64::new(re, -omega)
        } else {
            Complex64::new(re, 0.0)
        }
    });
    let dec = nalgebra::SVD::try_new(shifted, false, true, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("complex SVD did not converge".into()))?;
    let s = &dec.singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let r = if max == 0.0 {
        0
    } else {
        s.iter().filter(|&&v| v > rel_tol * max).count()
    };
    let v_t = dec
        .v_t
        .ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    Ok(v_t.rows(r, n - r).adjoint())
}

pub fn pseudo_inverse(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if a.is_empty() {
        return Ok(Matrix::zeros(a.ncols(), a.nrows()));
    }
    let dec = svd(a)?;
    let max = dec.singular_values.iter().copied().fold(0.0, f64::max);
    dec.pseudo_inverse(rel_tol * max.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numerical(e.to_string()))
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

/// Canonical basis for the column span of `basis`: the rows of the reduced
/// row-echelon form of `basisᵀ`, returned as columns. Coordinate-aligned
/// subspaces come back as unit vectors.
pub fn canonical_basis(basis: &Matrix) -> Matrix {
    let (n, k) = basis.shape();
    let mut m = basis.transpose();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, val) = (pivot_row..k)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-10 * scale {
            continue;
        }
        m.swap_rows(pivot_row, best);
        let p = m[(pivot_row, col)];
        for c in 0..n {
            m[(pivot_row, c)] /= p;
        }
        for r in 0..k {
            if r != pivot_row {
                let f = m[(r, col)];
                if f != 0.0 {
                    for c in 0..n {
                        let v = m[(pivot_row, c)];
                        m[(r, c)] -= f * v;
                    }
                }
            }
        }
        m[(pivot_row, col)] = 1.0;
        pivot_row += 1;
    }
    m.iter_mut().for_each(|v| {
        if v.abs() < 1e-12 {
            *v = 0.0
        }
    });
    m.rows(0, pivot_row).transpose()
}

/// Controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Matrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = a * &blk;
    }
    out
}

/// Observability matrix `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(a: &Matrix, c: &Matrix) -> Matrix {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Solves `aᵀ P + P a = -q` by vectorization, without checking stability
/// of `a` or definiteness of `q`.
pub(crate) fn lyapunov_vectorized(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if q.shape() != (n, n) {
        return Err(Error::dim(format!(
            "Lyapunov right-hand side must be {n}x{n}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let eye = Matrix::identity(n, n);
    let at = a.transpose();
    let op = kron(&eye, &at) + kron(&at, &eye);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    let p = Matrix::from_column_slice(n, n, sol.as_slice());
    Ok(sym_part(&p))
}

/// Solves `aᵀ P + P a = -q` for Hurwitz `a` and symmetric positive definite
/// `q`. The returned `P` is symmetric positive definite.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    if !is_hurwitz(a, EIG_TOL)? {
        return Err(Error::NotHurwitz);
    }
    if !is_positive_definite(q, 0.0)? {
        return Err(Error::Numerical(
            "Lyapunov right-hand side must be positive definite".into(),
        ));
    }
    let p = lyapunov_vectorized(a, q)?;
    let residual = lyapunov_residual(a, &p, q);
    let scale = q.norm().max(f64::MIN_POSITIVE);
    if residual > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(p)
}

/// Frobenius norm of `aᵀP + Pa + q`.
pub fn lyapunov_residual(a: &Matrix, p: &Matrix, q: &Matrix) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

/// Frobenius norm of `aY + Yaᵀ - Y cᵀ c Y + I`.
pub fn filter_riccati_residual(a: &Matrix, c: &Matrix, y: &Matrix) -> f64 {
    let n = a.nrows();
    (a * y + y * a.transpose() - y * c.transpose() * c * y + Matrix::identity(n, n)).norm()
}

pub fn is_observable(a: &Matrix, c: &Matrix, tol: f64) -> Result<bool> {
    let n = ensure_square(a)?;
    if c.ncols() != n {
        return Err(Error::dim(format!(
            "C has {} columns, expected {n}",
            c.ncols()
        )));
    }
    Ok(rank(&observability_matrix(a, c), tol)? == n)
}

/// Stabilizing solution `Y ⪰ 0` of the filter Riccati equation
/// `aY + Yaᵀ - Y cᵀ c Y + I = 0`.
///
/// Works on the dual control problem `(aᵀ, cᵀ)`: an initial stabilizing gain
/// comes from the Bass construction (a Lyapunov solve on the shifted matrix
/// `-(aᵀ + αI)`), then Kleinman's Newton iteration refines it.
pub fn solve_filter_riccati(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if !is_observable(a, c, RANK_TOL)? {
        return Err(Error::Unobservable);
    }
    let ad = a.transpose();
    let bd = c.transpose();
    let eye = Matrix::identity(n, n);

    let alpha = a.norm() + 1.0;
    let shifted = -(&ad + &eye * alpha);
    // shifted · W + W · shiftedᵀ = -2 bd bdᵀ
    let w = lyapunov_vectorized(&shifted.transpose(), &(&bd * bd.transpose() * 2.0))?;
    let mut gain = bd.transpose() * inverse(&w)?;
    if !is_hurwitz(&(&ad - &bd * &gain), 0.0)? {
        return Err(Error::Numerical(
            "Bass initialization did not produce a stabilizing gain".into(),
        ));
    }

    let mut x = Matrix::zeros(n, n);
    for _ in 0..200 {
        let closed = &ad - &bd * &gain;
        let q = &eye + gain.transpose() * &gain;
        x = lyapunov_vectorized(&closed, &q)?;
        let next = bd.transpose() * &x;
        let step = (&next - &gain).norm();
        let size = next.norm();
        gain = next;
        if step <= 1e-12 * (1.0 + size) {
            break;
        }
    }
    let residual = filter_riccati_residual(a, c, &x);
    let scale = 1.0 + x.norm() * x.norm() * (c.transpose() * c).norm();
    if residual > 1e-6 * scale {
        return Err(Error::Numerical(format!(
            "Riccati residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn kron_identity_is_block_diagonal() {
        let blk = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron(&Matrix::identity(2, 2), &blk);
        assert_eq!(k, block_diag(&[&blk, &blk]));
    }

    #[test]
    fn kron_with_scalar_one() {
        let blk = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(kron(&blk, &m(1, 1, &[1.0])), blk);
    }

    #[test]
    fn kron_shift_by_identity() {
        let k = kron(&m(2, 2, &[0.0, 1.0, 0.0, 0.0]), &Matrix::identity(2, 2));
        let mut expected = Matrix::zeros(4, 4);
        expected[(0, 2)] = 1.0;
        expected[(1, 3)] = 1.0;
        assert_eq!(k, expected);
    }

    #[test]
    fn eigenvalues_of_rotation_block() {
        let s = eigenvalues(&m(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        let mut im: Vec<f64> = s.eigenvalues.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-12 && (im[1] - 1.0).abs() < 1e-12);
        assert!(s.eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn eigenvalues_of_identity() {
        let s = eigenvalues(&Matrix::identity(3, 3)).unwrap();
        assert!(s.eigenvalues.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        // λ² + λ + 2 = 0  →  λ = -1/2 ± i·√7/2
        let s = eigenvalues(&m(2, 2, &[-1.0, 1.0, -2.0, 0.0])).unwrap();
        for z in &s.eigenvalues {
            assert!((z.re + 0.5).abs() < 1e-12);
            assert!((z.im.abs() - 7f64.sqrt() / 2.0).abs() < 1e-12);
        }
        assert!(s.is_conjugate_closed(1e-9));
    }

    #[test]
    fn eigenvalues_reject_non_square() {
        assert!(matches!(
            eigenvalues(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn hurwitz_predicate() {
        assert!(is_hurwitz(&-Matrix::identity(2, 2), EIG_TOL).unwrap());
        assert!(!is_hurwitz(&m(2, 2, &[0.0, 1.0, -1.0, 0.0]), EIG_TOL).unwrap());
        assert!(is_hurwitz(&m(2, 2, &[-1.0, 1.0, -2.0, 0.0]), EIG_TOL).unwrap());
        assert!(is_hurwitz(&Matrix::zeros(2, 3), EIG_TOL).is_err());
    }

    #[test]
    fn negative_definite_predicate() {
        assert!(is_negative_definite(&m(1, 1, &[-10.0]), EIG_TOL).unwrap());
        assert!(!is_negative_definite(&Matrix::zeros(2, 2), EIG_TOL).unwrap());
        // symmetric part [[-1, 50], [50, -1]] has eigenvalue 49
        assert!(!is_negative_definite(&m(2, 2, &[-1.0, 100.0, 0.0, -1.0]), EIG_TOL).unwrap());
    }

    #[test]
    fn lyapunov_diagonal_case() {
        let p = solve_lyapunov(&-Matrix::identity(2, 2), &(Matrix::identity(2, 2) * 2.0)).unwrap();
        assert!((p - Matrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn lyapunov_residual_oracle() {
        let a = m(2, 2, &[-1.0, 1.0, -2.0, 0.0]);
        let q = Matrix::identity(2, 2);
        let p = solve_lyapunov(&a, &q).unwrap();
        // substitute back
        assert!(lyapunov_residual(&a, &p, &q) <= 1e-8 * q.norm());
        assert!((&p - p.transpose()).amax() <= 1e-12);
        assert!(is_positive_definite(&p, 0.0).unwrap());
    }

    #[test]
    fn lyapunov_rejects_zero_eigenvalue() {
        let a = m(2, 2, &[0.0, 1.0, 0.0, -1.0]);
        assert!(matches!(
            solve_lyapunov(&a, &Matrix::identity(2, 2)),
            Err(Error::NotHurwitz)
        ));
    }

    #[test]
    fn riccati_scalar_case() {
        // -y² + 1 = 0 with y ≥ 0
        let y = solve_filter_riccati(&m(1, 1, &[0.0]), &m(1, 1, &[1.0])).unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riccati_double_integrator_position_output() {
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        let y = solve_filter_riccati(&a, &c).unwrap();
        assert!(filter_riccati_residual(&a, &c, &y) <= 1e-6);
        let f = &y * c.transpose();
        assert!(is_hurwitz(&(&a - &f * &c), EIG_TOL).unwrap());
    }

    #[test]
    fn riccati_rejects_unobservable_pair() {
        let a = m(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        assert!(matches!(solve_filter_riccati(&a, &c), Err(Error::Unobservable)));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = m(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&a, RANK_TOL).unwrap();
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).amax() < 1e-14);
    }

    #[test]
    fn canonical_basis_recovers_unit_vectors() {
        // rotated basis of span{e1, e3}
        let s = 0.5f64.sqrt();
        let b = m(3, 2, &[s, s, 0.0, 0.0, s, -s]);
        let c = canonical_basis(&b);
        assert_eq!(c, m(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
    }
}
