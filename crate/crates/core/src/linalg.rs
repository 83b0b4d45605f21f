//! Dense complex matrix utilities.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Every "is this matrix
//! invertible?" question in the crate is answered by [`is_invertible`], which
//! compares the extreme singular values against [`INV_RTOL`].
//!
//! Products, inverses and eigenvalues of matrices larger than
//! [`LARGE_DIM`] are delegated to `faer`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type MatC = DMatrix<C64>;

/// Dimension above which the heavy kernels run through `faer`.
pub const LARGE_DIM: usize = 64;

fn as_faer(m: &MatC) -> faer::MatRef<'_, C64> {
    faer::MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

fn from_faer(m: faer::MatRef<'_, C64>) -> MatC {
    MatC::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn is_large(m: &MatC) -> bool {
    m.nrows().min(m.ncols()) > LARGE_DIM
}

/// Matrix product.
pub fn matmul(a: &MatC, b: &MatC) -> MatC {
    if is_large(a) && is_large(b) {
        from_faer((as_faer(a) * as_faer(b)).as_ref())
    } else {
        a * b
    }
}

/// Relative singular-value threshold for numerical invertibility.
pub const INV_RTOL: f64 = 1e-10;
/// Relative tolerance used for SVD ranks.
pub const RANK_RTOL: f64 = 1e-10;
/// Relative tolerance of the Hermitian test in [`hermitian_eig`].
pub const HERM_RTOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<MatC> {
    if entries.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    if entries
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    Ok(MatC::from_row_slice(rows, cols, entries))
}

/// Real matrix literal helper, mostly for tests and fixtures.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> MatC {
    assert_eq!(entries.len(), rows * cols);
    MatC::from_row_iterator(rows, cols, entries.iter().map(|&x| re(x)))
}

pub fn identity(n: usize) -> MatC {
    MatC::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> MatC {
    MatC::zeros(rows, cols)
}

pub fn is_finite(m: &MatC) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry modulus.
pub fn max_norm(m: &MatC) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Singular values in descending order; empty for degenerate shapes.
pub fn singular_values(m: &MatC) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Numerical invertibility: square, finite, and σ_min > [`INV_RTOL`]·σ_max.
pub fn is_invertible(m: &MatC) -> bool {
    if !m.is_square() || !is_finite(m) {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let s = singular_values(m);
    let smax = s[0];
    let smin = s[s.len() - 1];
    smax > 0.0 && smin > INV_RTOL * smax
}

/// Inverse after passing the [`is_invertible`] test.
pub fn checked_inverse(m: &MatC) -> Option<MatC> {
    if !is_invertible(m) {
        return None;
    }
    lu_inverse(m)
}

/// LU inverse without the singular-value test; `None` if LU breaks down or
/// the result is not finite. Meant for hot loops whose inputs are invertible
/// by construction.
pub fn lu_inverse(m: &MatC) -> Option<MatC> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let inv = if is_large(m) {
        use faer::linalg::solvers::DenseSolveCore;
        from_faer(as_faer(m).partial_piv_lu().inverse().as_ref())
    } else {
        m.clone().lu().try_inverse()?
    };
    if is_finite(&inv) {
        Some(inv)
    } else {
        None
    }
}

/// Size above which [`domain_inverse`] switches from the SVD test to a
/// 1-norm condition number computed from the LU inverse.
pub const SVD_TEST_MAX_DIM: usize = 64;

/// Inverse used for domain-membership decisions during evaluation.
///
/// Small matrices go through [`checked_inverse`]. For large ones a full SVD
/// is too slow, so the test becomes `κ₁(m) ≤ n / INV_RTOL`, which brackets the
/// 2-norm test up to the factor `n` relating the two norms.
pub fn domain_inverse(m: &MatC) -> Option<MatC> {
    let n = m.nrows();
    if n <= SVD_TEST_MAX_DIM {
        return checked_inverse(m);
    }
    let inv = lu_inverse(m)?;
    let kappa = one_norm(m) * one_norm(&inv);
    if kappa.is_finite() && kappa * INV_RTOL <= n as f64 {
        Some(inv)
    } else {
        None
    }
}

/// Maximum absolute column sum.
pub fn one_norm(m: &MatC) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of the block matrix `[[a, b], [c, d]]` via the Schur complement
/// of `d`.
pub fn schur_inverse(a: &MatC, b: &MatC, c: &MatC, d: &MatC) -> Result<MatC> {
    let k = a.nrows();
    let l = d.nrows();
    if !a.is_square() || !d.is_square() || b.shape() != (k, l) || c.shape() != (l, k) {
        return Err(Error::ShapeMismatch("schur_inverse blocks".into()));
    }
    let dinv = checked_inverse(d).ok_or_else(|| Error::SingularBlock("D".into()))?;
    let dinv_c = &dinv * c;
    let b_dinv = b * &dinv;
    let s = a - b * &dinv_c;
    let sinv =
        checked_inverse(&s).ok_or_else(|| Error::SingularBlock("Schur complement".into()))?;
    let mut out = zeros(k + l, k + l);
    // [[S⁻¹, −S⁻¹BD⁻¹], [−D⁻¹CS⁻¹, D⁻¹ + D⁻¹CS⁻¹BD⁻¹]]
    let top_right = -(&sinv * &b_dinv);
    let bottom_left = -(&dinv_c * &sinv);
    let bottom_right = &dinv + &dinv_c * &sinv * &b_dinv;
    out.view_mut((0, 0), (k, k)).copy_from(&sinv);
    out.view_mut((0, k), (k, l)).copy_from(&top_right);
    out.view_mut((k, 0), (l, k)).copy_from(&bottom_left);
    out.view_mut((k, k), (l, l)).copy_from(&bottom_right);
    Ok(out)
}

/// Assembles `[[a, b], [c, d]]`.
pub fn block2(a: &MatC, b: &MatC, c: &MatC, d: &MatC) -> MatC {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    debug_assert_eq!(b.shape(), (r1, c2));
    debug_assert_eq!(c.shape(), (r2, c1));
    let mut out = zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

pub fn block_diag(a: &MatC, b: &MatC) -> MatC {
    block2(
        a,
        &zeros(a.nrows(), b.ncols()),
        &zeros(b.nrows(), a.ncols()),
        b,
    )
}

pub fn hstack(a: &MatC, b: &MatC) -> MatC {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &MatC, b: &MatC) -> MatC {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Kronecker product: block `(i, j)` equals `a[(i, j)] * b`.
pub fn kron(a: &MatC, b: &MatC) -> MatC {
    a.kronecker(b)
}

/// Adds `a ⊗ b` into `out`, skipping zero entries of `a`.
pub fn add_kron_into(out: &mut MatC, a: &MatC, b: &MatC) {
    let (p, q) = b.shape();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            let mut blk = out.view_mut((i * p, j * q), (p, q));
            blk.zip_apply(b, |x, y| *x += s * y);
        }
    }
}

/// `(B − B*) / 2i`, the imaginary part of a square matrix.
pub fn imag_part(b: &MatC) -> MatC {
    (b - b.adjoint()) * c(0.0, -0.5)
}

/// `(B + B*) / 2`.
pub fn real_part(b: &MatC) -> MatC {
    (b + b.adjoint()) * re(0.5)
}

/// Deviation from Hermitian symmetry in max-norm.
pub fn hermitian_defect(a: &MatC) -> f64 {
    max_norm(&(a - a.adjoint()))
}

/// Smallest eigenvalue of the imaginary part.
pub fn min_imag_eig(b: &MatC) -> f64 {
    let im = imag_part(b);
    if im.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(im)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

/// True iff the smallest eigenvalue of `(B − B*)/2i` is at least `eps`.
pub fn in_upper_half_plane(b: &MatC, eps: f64) -> bool {
    b.is_square() && min_imag_eig(b) >= eps
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and a
/// unitary matrix of eigenvectors (columns).
pub fn hermitian_eig(a: &MatC) -> Result<(Vec<f64>, MatC)> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(
            "hermitian_eig needs a square matrix".into(),
        ));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let scale = max_norm(a);
    let dev = hermitian_defect(a);
    if dev > HERM_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let sym = real_part(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix, ascending, without eigenvectors.
pub fn hermitian_eigenvalues(a: &MatC) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = max_norm(a);
    let dev = hermitian_defect(a);
    if dev > HERM_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let h = real_part(a);
    let mut v: Vec<f64> = if is_large(&h) {
        as_faer(&h)
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| Error::ConvergenceFailure)?
    } else {
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(Error::ConvergenceFailure)?;
        eig.eigenvalues.iter().copied().collect()
    };
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

fn schur(a: &MatC) -> Result<(MatC, MatC)> {
    let n = a.nrows();
    let limit = 1000 * n.max(1);
    let s = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, limit)
        .ok_or(Error::ConvergenceFailure)?;
    Ok(s.unpack())
}

/// Complex Schur form `A = Q T Q*` with `T` upper triangular.
pub fn complex_schur(a: &MatC) -> Result<(MatC, MatC)> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("schur needs a square matrix".into()));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    schur(a)
}

/// All eigenvalues of a general square matrix, with multiplicity.
pub fn general_eigenvalues(a: &MatC) -> Result<Vec<C64>> {
    if is_large(a) && a.is_square() {
        if !is_finite(a) {
            return Err(Error::NonFinite);
        }
        return as_faer(a)
            .eigenvalues()
            .map_err(|_| Error::ConvergenceFailure);
    }
    let (_, t) = complex_schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Unitary factor of a QR decomposition with the phases of `diag(R)` moved
/// into `Q`, so that a complex Gaussian input yields a Haar unitary.
pub fn qr_unitary(m: &MatC) -> MatC {
    let qr = as_faer(m).qr();
    let (q, r) = (qr.compute_Q(), qr.R());
    let n = m.nrows();
    MatC::from_fn(n, n, |i, j| {
        let d = if j < r.nrows() { r[(j, j)] } else { ONE };
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q[(i, j)] * ph
    })
}

/// Eigenvalues and unit-norm eigenvectors of a general matrix, obtained from
/// the Schur form by triangular back substitution. Near-defective matrices
/// yield an ill-conditioned eigenvector matrix; callers check
/// [`condition_number`] before relying on it.
pub fn eig_decomposition(a: &MatC) -> Result<(Vec<C64>, MatC)> {
    let (q, t) = complex_schur(a)?;
    let n = t.nrows();
    let lam: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tiny = f64::EPSILON * max_norm(&t).max(f64::MIN_POSITIVE);
    let mut y = zeros(n, n);
    for k in 0..n {
        y[(k, k)] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            let mut den = t[(j, j)] - lam[k];
            if den.norm() < tiny {
                den = re(tiny);
            }
            y[(j, k)] = -s / den;
        }
    }
    let mut v = q * y;
    for k in 0..n {
        let nrm = v.column(k).norm();
        if nrm > 0.0 {
            v.column_mut(k).unscale_mut(nrm);
        }
    }
    Ok((lam, v))
}

/// 2-norm condition number σ_max/σ_min (infinite when singular).
pub fn condition_number(m: &MatC) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (None, None) => 1.0,
        _ => f64::INFINITY,
    }
}

/// Numerical rank with relative tolerance [`RANK_RTOL`].
pub fn rank(m: &MatC) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > RANK_RTOL * smax).count(),
        _ => 0,
    }
}

/// Orthonormal basis (columns) of the column space of `m`.
///
/// `scale` is the reference magnitude for the rank decision; columns whose
/// singular values fall below `RANK_RTOL * scale` are dropped.
pub fn orthonormal_range(m: &MatC, scale: f64) -> MatC {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return zeros(rows, 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let s = &svd.singular_values;
    let reference = scale.max(s.max());
    if reference == 0.0 {
        return zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..s.len())
        .filter(|&i| s[i] > RANK_RTOL * reference)
        .collect();
    let mut out = zeros(rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the column space of an
/// orthonormal `basis` inside `C^n`.
pub fn orthogonal_complement(basis: &MatC, n: usize) -> MatC {
    if basis.ncols() == 0 {
        return identity(n);
    }
    if basis.ncols() >= n {
        return zeros(n, 0);
    }
    let proj = identity(n) - basis * basis.adjoint();
    orthonormal_range(&proj, 1.0)
}

/// Least-squares solution of `a x = b` through the SVD pseudo-inverse.
pub fn lstsq(a: &MatC, b: &DVector<C64>) -> Option<DVector<C64>> {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, RANK_RTOL * smax.max(f64::MIN_POSITIVE)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> MatC {
        MatC::from_fn(n, m, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn schur_inverse_block_diagonal() {
        let a = real_matrix(1, 1, &[2.0]);
        let z = zeros(1, 1);
        let d = real_matrix(1, 1, &[1.0]);
        let inv = schur_inverse(&a, &z, &z, &d).unwrap();
        assert!(max_norm(&(inv - real_matrix(2, 2, &[0.5, 0.0, 0.0, 1.0]))) < 1e-15);
        let i2 = identity(2);
        let inv = schur_inverse(&i2, &zeros(2, 2), &zeros(2, 2), &i2).unwrap();
        assert!(max_norm(&(inv - identity(4))) < 1e-15);
    }

    #[test]
    fn schur_inverse_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(3, 3, &mut rng) + identity(3) * re(3.0);
        let b = random(3, 2, &mut rng);
        let cm = random(2, 3, &mut rng);
        let d = random(2, 2, &mut rng) + identity(2) * re(3.0);
        let inv = schur_inverse(&a, &b, &cm, &d).unwrap();
        let full = block2(&a, &b, &cm, &d);
        let direct = full.clone().try_inverse().unwrap();
        assert!(max_norm(&(&inv - direct)) < 1e-10);
        assert!(max_norm(&(&inv * &full - identity(5))) < 1e-10);
    }

    #[test]
    fn schur_inverse_reports_singular_block() {
        let err =
            schur_inverse(&identity(1), &zeros(1, 1), &zeros(1, 1), &zeros(1, 1)).unwrap_err();
        assert_eq!(err, Error::SingularBlock("D".into()));
    }

    #[test]
    fn half_plane_tests() {
        assert!(in_upper_half_plane(&(identity(2) * I), 0.5));
        let sym = real_matrix(2, 2, &[1.0, 2.0, 2.0, -1.0]);
        assert!(!in_upper_half_plane(&sym, 1e-12));
        // Im of [[2i, 1], [0, 2i]] is [[2, -i/2], [i/2, 2]] with eigenvalues 2 ± 1/2.
        let b = MatC::from_row_slice(2, 2, &[c(0.0, 2.0), ONE, ZERO, c(0.0, 2.0)]);
        assert!((min_imag_eig(&b) - 1.5).abs() < 1e-12);
        assert!(in_upper_half_plane(&b, 1.0));
        assert!(!in_upper_half_plane(&b, 1.6));
    }

    #[test]
    fn hermitian_eig_basics() {
        let (v, _) = hermitian_eig(&real_matrix(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v, vec![1.0, 3.0]);
        let (v, _) = hermitian_eig(&real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(5, 5, &mut rng);
        let h = &a + a.adjoint();
        let (vals, u) = hermitian_eig(&h).unwrap();
        let d = MatC::from_diagonal(&DVector::from_iterator(5, vals.iter().map(|&x| re(x))));
        assert!(max_norm(&(&u * d * u.adjoint() - &h)) < 1e-9 * max_norm(&h));
        assert!(max_norm(&(u.adjoint() * &u - identity(5))) < 1e-10);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn general_eigenvalue_examples() {
        let nil = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = general_eigenvalues(&nil).unwrap();
        assert!(e.iter().all(|z| z.norm() < 1e-12));
        let rot = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut e = general_eigenvalues(&rot).unwrap();
        e.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap());
        assert!((e[0] - I).norm() < 1e-12 && (e[1] + I).norm() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_agree_on_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random(6, 6, &mut rng);
        let h = &a + a.adjoint();
        let herm = hermitian_eigenvalues(&h).unwrap();
        let mut gen: Vec<f64> = general_eigenvalues(&h)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        gen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in herm.iter().zip(&gen) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn eig_decomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(7, 7, &mut rng);
        let (lam, v) = eig_decomposition(&a).unwrap();
        for k in 0..7 {
            let col = v.column(k).into_owned();
            let resid = &a * &col - &col * lam[k];
            assert!(resid.norm() < 1e-10);
        }
    }

    #[test]
    fn hermitization_spectrum_is_plus_minus_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random(4, 4, &mut rng);
        let h = block2(&zeros(4, 4), &a, &a.adjoint(), &zeros(4, 4));
        let eig = hermitian_eigenvalues(&h).unwrap();
        let mut expected: Vec<f64> = singular_values(&a);
        expected.extend(singular_values(&a).iter().map(|s| -s));
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in eig.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn ranks_and_ranges() {
        let m = real_matrix(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(rank(&m), 1);
        let basis = orthonormal_range(&m, 0.0);
        assert_eq!(basis.ncols(), 1);
        let comp = orthogonal_complement(&basis, 3);
        assert_eq!(comp.ncols(), 2);
        assert!(max_norm(&(basis.adjoint() * &comp)) < 1e-12);
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert_eq!(
            from_row_major(1, 1, &[c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        );
        assert!(from_row_major(1, 2, &[ONE]).is_err());
    }
}
