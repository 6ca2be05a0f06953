//! Structural predicates and structured exponentials.
//!
//! All generators in this problem are orthogonal projectors or skew-Hermitian
//! matrices, so the exponentials are computed in closed form (projectors) or
//! through a Hermitian eigendecomposition (skew-Hermitian); no general
//! scaling-and-squaring path is needed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tol;

use super::matrix::{frobenius_norm, CMatrix};

/// ||A^H A - I||_F; infinite for non-square input.
pub fn unitarity_residual(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let gram = &a.adjoint() * a;
    frobenius_norm(&(&gram - &CMatrix::identity(a.rows())))
}

/// ||A - A^H||_F; infinite for non-square input.
pub fn hermitian_residual(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    frobenius_norm(&(a - &a.adjoint()))
}

/// ||A + A^H||_F; infinite for non-square input.
pub fn skew_residual(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    frobenius_norm(&(a + &a.adjoint()))
}

/// max(||A - A^H||_F, ||A^2 - A||_F); infinite for non-square input.
pub fn projector_residual(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    hermitian_residual(a).max(frobenius_norm(&(&(a * a) - a)))
}

pub fn is_unitary(a: &CMatrix, tol: f64) -> bool {
    unitarity_residual(a) <= tol
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    hermitian_residual(a) <= tol
}

pub fn is_projector(a: &CMatrix, tol: f64) -> bool {
    projector_residual(a) <= tol
}

pub(crate) fn to_na(m: &CMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

pub(crate) fn from_na(m: &DMatrix<Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Eigendecomposition A = V diag(lambda) V^H of a Hermitian matrix.
///
/// The Hermitian part is taken first so roundoff asymmetry cannot leak into
/// the eigenvectors. Returns real eigenvalues and the unitary V.
pub(crate) fn hermitian_eig(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    debug_assert!(a.is_square());
    let sym = a.adjoint();
    let herm = (&(a + &sym)).scale_re(0.5);
    let eig = to_na(&herm).symmetric_eigen();
    let vals = eig.eigenvalues.iter().cloned().collect();
    (vals, from_na(&eig.eigenvectors))
}

/// Apply the spectral function z -> f(lambda) to a Hermitian matrix.
fn hermitian_spectral_map(a: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (vals, v) = hermitian_eig(a);
    let n = a.rows();
    // V diag(f(lambda)) V^H
    let mut scaled = v.clone();
    for c in 0..n {
        let fz = f(vals[c]);
        for r in 0..n {
            scaled[(r, c)] *= fz;
        }
    }
    &scaled * &v.adjoint()
}

/// exp(i theta P) = I + (e^{i theta} - 1) P for an orthogonal projector P.
pub fn projector_exponential(p: &CMatrix, theta: f64) -> Result<CMatrix> {
    let res = projector_residual(p);
    if res > tol::STRUCTURAL {
        return Err(Error::NotProjector { residual: res, tol: tol::STRUCTURAL });
    }
    let phase = Complex64::new(0.0, theta).exp() - Complex64::ONE;
    Ok(&CMatrix::identity(p.rows()) + &p.scale(phase))
}

/// exp(t X) for skew-Hermitian X, via the Hermitian eigendecomposition of iX.
///
/// With A := iX Hermitian and A = V diag(lambda) V^H, the exponential is
/// exp(tX) = V diag(e^{-i t lambda}) V^H, unitary by construction.
pub fn expm_skew(x: &CMatrix, t: f64) -> Result<CMatrix> {
    let res = skew_residual(x);
    let gate = tol::SKEW_GATE * 1f64.max(frobenius_norm(x));
    if res > gate {
        return Err(Error::NotSkewHermitian { residual: res, tol: gate });
    }
    let skew = (&(x - &x.adjoint())).scale_re(0.5);
    let a = skew.scale(Complex64::new(0.0, 1.0));
    Ok(hermitian_spectral_map(&a, |lam| Complex64::new(0.0, -t * lam).exp()))
}

/// Eigendecomposition route for exp(i theta A), A Hermitian.
///
/// Reference path used to cross-check the closed-form projector exponential;
/// kept separate from `projector_exponential` on purpose.
pub fn expm_hermitian_eig(a: &CMatrix, theta: f64) -> Result<CMatrix> {
    let res = hermitian_residual(a);
    if res > tol::STRUCTURAL {
        return Err(Error::NotSkewHermitian { residual: res, tol: tol::STRUCTURAL });
    }
    Ok(hermitian_spectral_map(a, |lam| Complex64::new(0.0, theta * lam).exp()))
}

/// Haar-distributed unitary, deterministic per seed.
///
/// Ginibre matrix with iid standard complex normal entries, QR-decomposed,
/// with the R diagonal phases folded back into Q.
pub fn random_unitary(n: usize, seed: u64) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draw = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    };
    let mut g = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            g[(r, c)] = draw();
        }
    }
    let qr = to_na(&g).qr();
    let rmat = qr.r();
    let q = qr.q();
    let mut u = from_na(&q);
    for c in 0..n {
        let d = rmat[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
        for r in 0..n {
            u[(r, c)] *= phase;
        }
    }
    Ok(u)
}

/// Unitary similarity driving the diagonal of a traceless matrix to zero.
///
/// Returns (W, X') with X' = W^H X W and max_j |X'_jj| <= ZERO_DIAG. Each
/// step picks the diagonal pair with the largest separation and applies the
/// 2x2 rotation that maps both entries to their mean; since the trace is
/// preserved and sum |d_j|^2 drops by |d_j - d_k|^2 / 2 per step, the
/// diagonal contracts geometrically to the zero mean.
pub fn zero_diagonal_similarity(x: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !x.is_square() {
        return Err(Error::NotSquare { rows: x.rows(), cols: x.cols() });
    }
    let n = x.rows();
    let tr = x.trace();
    if tr.norm() > tol::STRUCTURAL * 1f64.max(frobenius_norm(x)) {
        return Err(Error::NonzeroTrace { magnitude: tr.norm() });
    }

    let mut out = x.clone();
    let mut w = CMatrix::identity(n);
    // Remove the (tiny) exact-trace defect so the mean of the diagonal is 0.
    let shift = tr / Complex64::new(n as f64, 0.0);
    for i in 0..n {
        out[(i, i)] -= shift;
    }

    let max_steps = 200 * n * n + 100;
    for _ in 0..max_steps {
        let (mut j, mut k, mut best) = (0usize, 0usize, -1.0f64);
        for a in 0..n {
            for b in (a + 1)..n {
                let sep = (out[(a, a)] - out[(b, b)]).norm();
                if sep > best {
                    best = sep;
                    j = a;
                    k = b;
                }
            }
        }
        let max_diag = (0..n).map(|i| out[(i, i)].norm()).fold(0.0, f64::max);
        if max_diag <= tol::ZERO_DIAG {
            break;
        }
        let (q00, q01, q10, q11) = equalizing_rotation(
            out[(j, j)],
            out[(j, k)],
            out[(k, j)],
            out[(k, k)],
        );
        // out <- G^H out G and w <- w G, G acting on the (j,k) plane.
        for r in 0..n {
            let (xj, xk) = (out[(r, j)], out[(r, k)]);
            out[(r, j)] = xj * q00 + xk * q10;
            out[(r, k)] = xj * q01 + xk * q11;
            let (wj, wk) = (w[(r, j)], w[(r, k)]);
            w[(r, j)] = wj * q00 + wk * q10;
            w[(r, k)] = wj * q01 + wk * q11;
        }
        for c in 0..n {
            let (xj, xk) = (out[(j, c)], out[(k, c)]);
            out[(j, c)] = q00.conj() * xj + q10.conj() * xk;
            out[(k, c)] = q01.conj() * xj + q11.conj() * xk;
        }
    }
    Ok((w, out))
}

/// 2x2 unitary Q (entries row-major) with both diagonal entries of Q^H T Q
/// equal to (a + b) / 2, for T = [[a, x], [y, b]].
///
/// Existence follows from the numerical range of the traceless part being an
/// origin-centered ellipse. Writing the first column as (cos t, e^{i p} sin t)
/// we need sigma cos 2t + sin t cos t (x e^{ip} + y e^{-ip}) = 0 with
/// sigma = (a - b)/2, which reduces to a phase choice and tan 2t = 2|sigma|/r.
fn equalizing_rotation(
    a: Complex64,
    x: Complex64,
    y: Complex64,
    b: Complex64,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let sigma = (a - b) / Complex64::new(2.0, 0.0);
    let one = Complex64::ONE;
    if sigma.norm() == 0.0 {
        return (one, Complex64::ZERO, Complex64::ZERO, one);
    }
    let sigma_hat = sigma / sigma.norm();
    let big_a = x * sigma_hat.conj();
    let big_b = y * sigma_hat.conj();
    // Pick the phase p making (A e^{ip} + B e^{-ip}) real and non-positive.
    let s_coef = big_a.re - big_b.re;
    let c_coef = big_a.im + big_b.im;
    let mut p = if s_coef == 0.0 && c_coef == 0.0 { 0.0 } else { (-c_coef).atan2(s_coef) };
    let eval = |p: f64| {
        (big_a * Complex64::new(0.0, p).exp() + big_b * Complex64::new(0.0, -p).exp()).re
    };
    if eval(p) > 0.0 {
        p += std::f64::consts::PI;
    }
    let r = -eval(p);
    debug_assert!(r >= -1e-12);
    let theta = 0.5 * (2.0 * sigma.norm()).atan2(r.max(0.0));
    let (ct, st) = (theta.cos(), theta.sin());
    let eip = Complex64::new(0.0, p).exp();
    // Columns: v1 = (ct, e^{ip} st), v2 = (-e^{-ip} st, ct).
    (
        Complex64::new(ct, 0.0),
        -eip.conj() * st,
        eip * st,
        Complex64::new(ct, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{commutator, CVector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn structural_checks_on_identity() {
        let i3 = CMatrix::identity(3);
        assert!(is_unitary(&i3, tol::STRUCTURAL));
        assert!(is_hermitian(&i3, tol::STRUCTURAL));
        assert!(is_projector(&i3, tol::STRUCTURAL));
    }

    #[test]
    fn projector_is_not_unitary() {
        let p = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(is_projector(&p, tol::STRUCTURAL));
        assert!(!is_unitary(&p, tol::STRUCTURAL));
    }

    #[test]
    fn projector_exponential_theta_zero_is_identity() {
        let p = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let u = projector_exponential(&p, 0.0).unwrap();
        assert!(u.max_abs_diff(&CMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn projector_exponential_pi_flips_range() {
        let p = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let u = projector_exponential(&p, std::f64::consts::PI).unwrap();
        let want = CMatrix::diag(&[c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(u.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn projector_exponential_rejects_non_projector() {
        let m = CMatrix::diag(&[c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(projector_exponential(&m, 1.0), Err(Error::NotProjector { .. })));
    }

    #[test]
    fn projector_exponential_matches_eigendecomposition_route() {
        // Rank-one projector onto the uniform state of C^2.
        let k = CVector::uniform(2);
        let p = CMatrix::outer(&k, &k);
        let theta = std::f64::consts::FRAC_PI_2;
        let closed = projector_exponential(&p, theta).unwrap();
        let eig = expm_hermitian_eig(&p, theta).unwrap();
        assert!(frobenius_norm(&(&closed - &eig)) <= 1e-12);
        assert!(is_unitary(&closed, tol::STRUCTURAL));
    }

    #[test]
    fn expm_skew_zero_time() {
        let x = CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)])
            .unwrap();
        let u = expm_skew(&x, 0.0).unwrap();
        assert!(u.max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn expm_skew_rotation_quarter_turn() {
        let x = CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)])
            .unwrap();
        let u = expm_skew(&x, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(u.max_abs_diff(&x) < 1e-14, "quarter turn of J equals J itself");
        // Generic angle against the closed rotation form.
        let t = 0.37;
        let u = expm_skew(&x, t).unwrap();
        let want = CMatrix::from_re_im(
            2,
            2,
            &[(t.cos(), 0.0), (t.sin(), 0.0), (-t.sin(), 0.0), (t.cos(), 0.0)],
        )
        .unwrap();
        assert!(u.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn expm_skew_rejects_non_skew() {
        let m = CMatrix::identity(2);
        assert!(matches!(expm_skew(&m, 1.0), Err(Error::NotSkewHermitian { .. })));
    }

    #[test]
    fn expm_skew_group_law() {
        // Random-ish fixed skew-Hermitian generator.
        let x = {
            let m = CMatrix::from_fn(4, 4, |r, cc| c((r as f64 - cc as f64) * 0.3, 0.2 * (r * cc) as f64));
            (&(&m - &m.adjoint())).scale_re(0.5)
        };
        let s = 0.3;
        let t = 0.9;
        let a = expm_skew(&x, s).unwrap();
        let b = expm_skew(&x, t).unwrap();
        let ab = &a * &b;
        let direct = expm_skew(&x, s + t).unwrap();
        assert!(frobenius_norm(&(&ab - &direct)) < 1e-10);
        assert!(is_unitary(&direct, tol::STRUCTURAL));
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let u1 = random_unitary(16, 7).unwrap();
        let u2 = random_unitary(16, 7).unwrap();
        assert_eq!(u1, u2, "same seed must reproduce identical bytes");
        assert!(unitarity_residual(&u1) <= 1e-10);
        let u3 = random_unitary(16, 8).unwrap();
        assert!(u1.max_abs_diff(&u3) > 1e-3, "different seeds should differ");
    }

    #[test]
    fn random_unitary_dim_one() {
        let u = random_unitary(1, 3).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_rejects_zero_dim() {
        assert!(random_unitary(0, 1).is_err());
    }

    #[test]
    fn zero_diagonal_noop_when_already_zero() {
        let x = CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 2.0), (-1.0, 2.0), (0.0, 0.0)])
            .unwrap();
        let (w, xp) = zero_diagonal_similarity(&x).unwrap();
        assert!(w.max_abs_diff(&CMatrix::identity(2)) < 1e-14);
        assert!(xp.max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn zero_diagonal_2x2_diag_i() {
        let x = CMatrix::diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let (w, xp) = zero_diagonal_similarity(&x).unwrap();
        assert!(xp[(0, 0)].norm() <= tol::ZERO_DIAG);
        assert!(xp[(1, 1)].norm() <= tol::ZERO_DIAG);
        assert!((xp[(0, 1)].norm() - 1.0).abs() < 1e-12);
        // Similarity must reproduce the input: W X' W^H = X.
        let back = &(&w * &xp) * &w.adjoint();
        assert!(frobenius_norm(&(&back - &x)) < 1e-12);
    }

    #[test]
    fn zero_diagonal_random_traceless_skew() {
        let n = 8;
        let u = random_unitary(n, 42).unwrap();
        // Traceless skew-Hermitian built from a commutator of Hermitians.
        let h1 = &(&u + &u.adjoint()).scale_re(0.5) * &CMatrix::identity(n);
        let h2 = CMatrix::diag(&(0..n).map(|i| c(i as f64, 0.0)).collect::<Vec<_>>());
        let x = commutator(&h1, &h2).unwrap();
        let (w, xp) = zero_diagonal_similarity(&x).unwrap();
        let max_diag = (0..n).map(|i| xp[(i, i)].norm()).fold(0.0, f64::max);
        assert!(max_diag <= 1e-12, "max diag {max_diag}");
        assert!(unitarity_residual(&w) <= 1e-12);
        let back = &(&w * &xp) * &w.adjoint();
        assert!(frobenius_norm(&(&back - &x)) <= 1e-11);
    }

    #[test]
    fn zero_diagonal_rejects_nonzero_trace() {
        let x = CMatrix::identity(3);
        assert!(matches!(zero_diagonal_similarity(&x), Err(Error::NonzeroTrace { .. })));
    }
}
