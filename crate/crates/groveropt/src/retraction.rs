//! Retractions on U(N): the exact exponential step and the 5-factor product.
//!
//! The product retraction for a tangent direction z = x X0 + y Y0 is
//!
//!   R_U(z) = e^{i a1 H} e^{i b1 psi0} e^{i (a2-a1) H} e^{i b2 psi0} e^{-i a2 H} U
//!
//! with A = atan2(y, x), R = sqrt(x^2 + y^2), a1 = A + pi/2, a2 = A - pi/2,
//! b1 = -R/2, b2 = R/2. The curve gamma(t) = R_U(t z) keeps a1, a2 fixed and
//! scales b1, b2 by t; its velocity at t = 0 is exactly x X0 + y Y0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, CMatrix};
use crate::problem::{SearchInstance, TangentCoords};
use crate::tol;

/// Which update family an optimizer step uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetractionKind {
    #[serde(rename = "exp")]
    ExpExact,
    Product5,
}

/// The five angles of the product retraction plus the polar data they came
/// from. Invariants: a1 - a2 = pi, b2 = -b1 = R/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetractionParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub big_a: f64,
    pub big_r: f64,
}

/// Angles for the tangent direction (x, y); atan2(0, 0) is taken as 0 so the
/// zero tangent collapses the product to the identity.
pub fn product5_params(x: f64, y: f64) -> RetractionParams {
    let big_a = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
    let big_r = x.hypot(y);
    RetractionParams {
        a1: big_a + std::f64::consts::FRAC_PI_2,
        a2: big_a - std::f64::consts::FRAC_PI_2,
        b1: -big_r / 2.0,
        b2: big_r / 2.0,
        big_a,
        big_r,
    }
}

/// One exact exponential step: U+ = exp(t [H, psi_U]) U.
pub fn exp_step(inst: &SearchInstance, u: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidConfig(format!("non-finite step size {t}")));
    }
    let grad = inst.gradient(u)?;
    let v = crate::linalg::expm_skew(&grad, t)?;
    Ok(&v * u)
}

/// The positive one-shot step t0* = arccos(sqrt(q0)) / gamma0; a single
/// exponential step of this size from the identity attains f = 1.
pub fn one_shot_step(inst: &SearchInstance) -> Result<f64> {
    if inst.is_degenerate() {
        return Err(Error::DegenerateInstance { q0: inst.q0(), gamma0: inst.gamma0() });
    }
    Ok(inst.q0().sqrt().acos() / inst.gamma0())
}

/// Apply the five factors (rightmost first) to a matrix, using the
/// projector structure of H and psi0: e^{i th P} M = M + (e^{i th} - 1) P M.
fn apply_product5(inst: &SearchInstance, u: &CMatrix, p: &RetractionParams, t: f64) -> CMatrix {
    let phase = |theta: f64| num_complex::Complex64::new(0.0, theta).exp() - num_complex::Complex64::ONE;
    let h_factor = |theta: f64, m: &CMatrix| -> CMatrix {
        &*m + &inst.apply_h_left(m).scale(phase(theta))
    };
    let p_factor = |theta: f64, m: &CMatrix| -> CMatrix {
        &*m + &inst.apply_psi0_left(m).scale(phase(theta))
    };
    let m = h_factor(-p.a2, u);
    let m = p_factor(t * p.b2, &m);
    let m = h_factor(p.a2 - p.a1, &m);
    let m = p_factor(t * p.b1, &m);
    h_factor(p.a1, &m)
}

/// The 5-factor product for coordinates (x, y) applied to a state ket;
/// factors use the O(N) ket fast paths.
pub fn product5_apply_ket(
    inst: &SearchInstance,
    ket: &crate::linalg::CVector,
    x: f64,
    y: f64,
) -> crate::linalg::CVector {
    let p = product5_params(x, y);
    let factor = |theta: f64, hside: bool, v: &crate::linalg::CVector| {
        let phase = num_complex::Complex64::new(0.0, theta).exp() - num_complex::Complex64::ONE;
        let pv = if hside { inst.apply_h(v) } else { inst.apply_psi0(v) };
        v.add(&pv.scale(phase))
    };
    let v = factor(-p.a2, true, ket);
    let v = factor(p.b2, false, &v);
    let v = factor(p.a2 - p.a1, true, &v);
    let v = factor(p.b1, false, &v);
    factor(p.a1, true, &v)
}

/// R_U(z) for z given in tangent coordinates; the coordinates must certify
/// membership of span{X0, Y0} (residual below the gate).
pub fn product5_retraction(
    inst: &SearchInstance,
    u: &CMatrix,
    coords: &TangentCoords,
) -> Result<CMatrix> {
    if inst.is_degenerate() {
        return Err(Error::DegenerateInstance { q0: inst.q0(), gamma0: inst.gamma0() });
    }
    if !(coords.x.is_finite() && coords.y.is_finite()) {
        return Err(Error::InvalidConfig("non-finite tangent coordinates".into()));
    }
    if coords.residual > tol::OUT_OF_PLANE {
        return Err(Error::OutOfPlane { residual: coords.residual, tol: tol::OUT_OF_PLANE });
    }
    let p = product5_params(coords.x, coords.y);
    Ok(apply_product5(inst, u, &p, 1.0))
}

/// gamma(t; x, y) applied to u: a1, a2 from the direction only, b1, b2
/// scaled by t.
pub fn retraction_curve(
    inst: &SearchInstance,
    u: &CMatrix,
    x: f64,
    y: f64,
    t: f64,
) -> Result<CMatrix> {
    if inst.is_degenerate() {
        return Err(Error::DegenerateInstance { q0: inst.q0(), gamma0: inst.gamma0() });
    }
    let p = product5_params(x, y);
    Ok(apply_product5(inst, u, &p, t))
}

/// First and second order bound ratios of the product retraction at step
/// scale * z:
///
///   ratio1 = ||R_U(s z) - U||_F / ||s z||_F          (<= 1)
///   ratio2 = ||R_U(s z) - U - s z U||_F / ||s z||_F^2 (<= 1/(4 c0))
///
/// Both approach their bounds as the scale goes to zero.
pub fn bounds_ratios(
    inst: &SearchInstance,
    u: &CMatrix,
    coords: &TangentCoords,
    scale: f64,
) -> Result<(f64, f64)> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let base = inst.base_directions()?;
    let (x, y) = (scale * coords.x, scale * coords.y);
    let eta = &base.x0.scale_re(x) + &base.y0.scale_re(y);
    let eta_norm = frobenius_norm(&eta);
    if eta_norm == 0.0 {
        return Err(Error::InvalidConfig("zero-norm tangent direction".into()));
    }
    let p = product5_params(x, y);
    let retracted = apply_product5(inst, u, &p, 1.0);
    let diff = &retracted - u;
    let ratio1 = frobenius_norm(&diff) / eta_norm;
    let dev = &diff - &(&eta * u);
    let ratio2 = frobenius_norm(&dev) / (eta_norm * eta_norm);
    Ok((ratio1, ratio2))
}
