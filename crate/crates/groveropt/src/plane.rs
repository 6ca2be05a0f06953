//! Plane-reduced dynamics: O(1)-per-step scalar recursions reproducing the
//! dense iteration for both update kinds.
//!
//! Every factor e^{i theta H}, e^{i theta psi0} and every gradient generator
//! preserves the Grover plane and annihilates its orthogonal complement, so
//! the whole trajectory is determined by the 2x2 compressions h2, p2 of H
//! and psi0 and a 2-component reduced ket. One preprocessing pass fixes the
//! plane; each step afterwards costs a fixed number of scalar operations
//! independent of N.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::SearchInstance;
use crate::retraction::{product5_params, RetractionKind};

type C2 = [Complex64; 2];
type M2 = [[Complex64; 2]; 2];

fn m2_from(m: &crate::linalg::CMatrix) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn m2_vec(m: &M2, v: &C2) -> C2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[Complex64::ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn m2_sub(a: &M2, b: &M2) -> M2 {
    let mut out = [[Complex64::ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][c] - b[r][c];
        }
    }
    out
}

fn commut2(a: &M2, b: &M2) -> M2 {
    m2_sub(&m2_mul(a, b), &m2_mul(b, a))
}

fn outer2(v: &C2) -> M2 {
    [[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]]
}

/// Re Tr(A^H B) on 2x2 blocks.
fn inner2(a: &M2, b: &M2) -> f64 {
    let mut acc = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            acc += (a[r][c].conj() * b[r][c]).re;
        }
    }
    acc
}

fn norm2(a: &M2) -> f64 {
    inner2(a, a).max(0.0).sqrt()
}

/// exp(t G) v for a skew-Hermitian 2x2 G, through the su(2) closed form:
/// with A = -iG = a0 I + a.sigma, exp(tG) = e^{i t a0}(cos(t|a|) I
/// + i sin(t|a|) (a/|a|).sigma).
fn exp2_skew_apply(g: &M2, t: f64, v: &C2) -> C2 {
    let i = Complex64::new(0.0, 1.0);
    // A = -i G is Hermitian.
    let a00 = (-i * g[0][0]).re;
    let a11 = (-i * g[1][1]).re;
    let a01 = -i * g[0][1];
    let a0 = 0.5 * (a00 + a11);
    let ax = a01.re;
    let ay = -a01.im;
    let az = 0.5 * (a00 - a11);
    let na = (ax * ax + ay * ay + az * az).sqrt();
    let phase = (i * Complex64::new(t * a0, 0.0)).exp();
    if na == 0.0 {
        return [phase * v[0], phase * v[1]];
    }
    let (c, s) = ((t * na).cos(), (t * na).sin());
    let (ux, uy, uz) = (ax / na, ay / na, az / na);
    // cos I + i sin (u . sigma)
    let m: M2 = [
        [
            Complex64::new(c, s * uz),
            Complex64::new(s * uy, s * ux),
        ],
        [
            Complex64::new(-s * uy, s * ux),
            Complex64::new(c, -s * uz),
        ],
    ];
    let w = m2_vec(&m, v);
    [phase * w[0], phase * w[1]]
}

/// 2x2 compressions of the instance to the Grover plane, with the reduced
/// base directions and their Gram matrix.
#[derive(Clone, Debug)]
pub struct ReducedInstance {
    h2: M2,
    p2: M2,
    x2: M2,
    y2: M2,
    gram: [[f64; 2]; 2],
    q0: f64,
    c0: f64,
}

impl ReducedInstance {
    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Objective of a reduced ket.
    pub fn q_of(&self, ket: &C2) -> f64 {
        let hv = m2_vec(&self.h2, ket);
        (ket[0].conj() * hv[0] + ket[1].conj() * hv[1]).re.clamp(0.0, 1.0)
    }

    /// Objective after the 5-factor product for tangent coordinates (x, y),
    /// applied to a reduced ket. Used as the O(1) pullback evaluation.
    pub fn product5_q(&self, ket: &C2, x: f64, y: f64) -> f64 {
        let p = product5_params(x, y);
        let factor = |theta: f64, proj: &M2, v: &C2| -> C2 {
            let phase = Complex64::new(0.0, theta).exp() - Complex64::ONE;
            let pv = m2_vec(proj, v);
            [v[0] + phase * pv[0], v[1] + phase * pv[1]]
        };
        let v = factor(-p.a2, &self.h2, ket);
        let v = factor(p.b2, &self.p2, &v);
        let v = factor(p.a2 - p.a1, &self.h2, &v);
        let v = factor(p.b1, &self.p2, &v);
        let v = factor(p.a1, &self.h2, &v);
        self.q_of(&v)
    }

    /// Gradient compression [h2, |v><v|], its norm, and tangent coordinates.
    fn gradient_data(&self, ket: &C2) -> (f64, f64, f64) {
        let g = commut2(&self.h2, &outer2(ket));
        let gnorm = norm2(&g);
        let bx = inner2(&self.x2, &g);
        let by = inner2(&self.y2, &g);
        let det = self.gram[0][0] * self.gram[1][1] - self.gram[0][1] * self.gram[1][0];
        let x = (self.gram[1][1] * bx - self.gram[0][1] * by) / det;
        let y = (self.gram[0][0] * by - self.gram[1][0] * bx) / det;
        (x, y, gnorm)
    }
}

/// Scalar state of the reduced process: gradient coordinates (x, y), the
/// objective q, the accumulated plane angle phi with sin^2 phi = q, and the
/// reduced 2-component ket the recursion runs on.
#[derive(Clone, Debug)]
pub struct PlaneState {
    pub x: f64,
    pub y: f64,
    pub q: f64,
    pub phi: f64,
    ket: C2,
}

impl PlaneState {
    pub fn ket(&self) -> [Complex64; 2] {
        self.ket
    }

    pub fn ket_norm(&self) -> f64 {
        (self.ket[0].norm_sqr() + self.ket[1].norm_sqr()).sqrt()
    }

    /// Frobenius norm of the reduced gradient [h2, |v><v|].
    pub fn grad_norm(&self, red: &ReducedInstance) -> f64 {
        let (_, _, g) = red.gradient_data(&self.ket);
        g
    }
}

/// One-shot preprocessing: fix the plane compressions and the initial state.
///
/// The initial ket is e1 = |psi0> itself, so q = q0, phi = arcsin(sqrt(q0)),
/// and the initial gradient is X0 with coordinates (1, 0).
pub fn reduce_instance(inst: &SearchInstance) -> Result<(ReducedInstance, PlaneState)> {
    let plane = inst.grover_plane()?;
    let h2 = m2_from(&plane.h2);
    let p2 = m2_from(&plane.p2);
    let x2 = commut2(&h2, &p2);
    let y2 = {
        let c = commut2(&h2, &x2);
        let i = Complex64::new(0.0, 1.0);
        [[i * c[0][0], i * c[0][1]], [i * c[1][0], i * c[1][1]]]
    };
    let gram = [[inner2(&x2, &x2), inner2(&x2, &y2)], [inner2(&y2, &x2), inner2(&y2, &y2)]];
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    if det.abs() <= 1e-28 {
        return Err(Error::DegenerateGram);
    }
    let red = ReducedInstance { h2, p2, x2, y2, gram, q0: inst.q0(), c0: inst.c0() };
    let ket = [Complex64::ONE, Complex64::ZERO];
    let (x, y, _) = red.gradient_data(&ket);
    let q = red.q_of(&ket);
    let state = PlaneState { x, y, q, phi: q.sqrt().asin(), ket };
    Ok((red, state))
}

/// phi candidates solving sin^2 phi = q are {a + k pi} and {-a + k pi} with
/// a = arcsin(sqrt(q)); pick the lift closest to the previous angle.
fn nearest_phi_lift(prev: f64, q: f64) -> f64 {
    let a = q.clamp(0.0, 1.0).sqrt().asin();
    let pi = std::f64::consts::PI;
    let mut best = a;
    let mut best_dist = f64::INFINITY;
    for branch in [a, -a] {
        let k = ((prev - branch) / pi).round();
        for kk in [k - 1.0, k, k + 1.0] {
            let cand = branch + kk * pi;
            let d = (cand - prev).abs();
            if d < best_dist {
                best_dist = d;
                best = cand;
            }
        }
    }
    best
}

/// Advance the reduced state by one step of the chosen kind.
///
/// Exp update: the plane rotation view gives phi+ = phi + t gamma(q) and the
/// ket rotates by the su(2) exponential of the reduced gradient. Product
/// update: the five reduced factors I + (e^{i theta} - 1) {h2|p2} are
/// multiplied onto the ket with the step folded into b1, b2 as t*(x, y).
pub fn plane_step(
    red: &ReducedInstance,
    state: &PlaneState,
    t: f64,
    kind: RetractionKind,
) -> PlaneState {
    let ket = state.ket;
    let new_ket = match kind {
        RetractionKind::ExpExact => {
            let g = commut2(&red.h2, &outer2(&ket));
            exp2_skew_apply(&g, t, &ket)
        }
        RetractionKind::Product5 => {
            let p = product5_params(t * state.x, t * state.y);
            let factor = |theta: f64, proj: &M2, v: &C2| -> C2 {
                let phase = Complex64::new(0.0, theta).exp() - Complex64::ONE;
                let pv = m2_vec(proj, v);
                [v[0] + phase * pv[0], v[1] + phase * pv[1]]
            };
            let v = factor(-p.a2, &red.h2, &ket);
            let v = factor(p.b2, &red.p2, &v);
            let v = factor(p.a2 - p.a1, &red.h2, &v);
            let v = factor(p.b1, &red.p2, &v);
            factor(p.a1, &red.h2, &v)
        }
    };
    let q = red.q_of(&new_ket);
    let phi = match kind {
        RetractionKind::ExpExact => {
            let gamma = (state.q.clamp(0.0, 1.0) * (1.0 - state.q.clamp(0.0, 1.0))).sqrt();
            state.phi + t * gamma
        }
        RetractionKind::Product5 => nearest_phi_lift(state.phi, q),
    };
    debug_assert!((q - phi.sin().powi(2)).abs() <= 1e-9, "q {q} vs sin^2 phi {}", phi.sin().powi(2));
    let (x, y, _) = red.gradient_data(&new_ket);
    PlaneState { x, y, q, phi, ket: new_ket }
}

/// Apply a schedule of (step, kind) pairs; returns the initial state followed
/// by one state per step.
pub fn plane_trajectory(
    inst: &SearchInstance,
    schedule: &[(f64, RetractionKind)],
) -> Result<Vec<PlaneState>> {
    let (red, mut state) = reduce_instance(inst)?;
    let mut out = Vec::with_capacity(schedule.len() + 1);
    out.push(state.clone());
    for &(t, kind) in schedule {
        state = plane_step(&red, &state, t, kind);
        out.push(state.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::problem::TangentCoords;
    use crate::retraction::{exp_step, one_shot_step, product5_retraction};

    fn inst(n: usize, m: usize) -> SearchInstance {
        SearchInstance::from_marked(n, &(0..m).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn reduce_initial_state() {
        let (_, st) = reduce_instance(&inst(4, 1)).unwrap();
        assert!((st.q - 0.25).abs() < 1e-14);
        assert!((st.phi - std::f64::consts::FRAC_PI_6).abs() < 1e-14);
        assert!((st.x - 1.0).abs() < 1e-10 && st.y.abs() < 1e-10);

        let (_, st) = reduce_instance(&inst(2, 1)).unwrap();
        assert!((st.q - 0.5).abs() < 1e-14);
        assert!((st.phi - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn reduced_gram_matches_dense() {
        let inst = inst(8, 3);
        let (red, _) = reduce_instance(&inst).unwrap();
        let dense = inst.base_directions().unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(
                    (red.gram[r][c] - dense.gram[r][c]).abs() < 1e-12,
                    "gram[{r}][{c}]: {} vs {}",
                    red.gram[r][c],
                    dense.gram[r][c]
                );
            }
        }
    }

    #[test]
    fn exp_step_matches_spec_example() {
        // N=4 M=1, t=1: phi+ = pi/6 + sqrt(3)/4, q+ = sin^2(phi+) ~ 0.6685.
        let (red, st) = reduce_instance(&inst(4, 1)).unwrap();
        let st2 = plane_step(&red, &st, 1.0, RetractionKind::ExpExact);
        let want_phi = std::f64::consts::FRAC_PI_6 + 3f64.sqrt() / 4.0;
        assert!((st2.phi - want_phi).abs() < 1e-12);
        assert!((st2.q - want_phi.sin().powi(2)).abs() < 1e-12);
        assert!((st2.q - 0.6685).abs() < 1e-4);
    }

    #[test]
    fn exp_step_zero_keeps_state() {
        let (red, st) = reduce_instance(&inst(4, 1)).unwrap();
        let st2 = plane_step(&red, &st, 0.0, RetractionKind::ExpExact);
        assert_eq!(st2.q, st.q);
        assert_eq!(st2.phi, st.phi);
    }

    #[test]
    fn one_shot_in_plane_coordinates() {
        let inst = inst(4, 1);
        let t = one_shot_step(&inst).unwrap();
        let (red, st) = reduce_instance(&inst).unwrap();
        let st2 = plane_step(&red, &st, t, RetractionKind::ExpExact);
        assert!(1.0 - st2.q <= 1e-12, "q+ = {}", st2.q);
    }

    #[test]
    fn exp_steps_match_dense_simulation() {
        let inst = inst(16, 1);
        let (red, mut st) = reduce_instance(&inst).unwrap();
        let mut u = CMatrix::identity(16);
        for k in 0..40 {
            let t = 0.5;
            st = plane_step(&red, &st, t, RetractionKind::ExpExact);
            u = exp_step(&inst, &u, t).unwrap();
            let qd = inst.objective(&u).unwrap();
            assert!((st.q - qd).abs() <= 1e-10, "step {k}: plane {} dense {qd}", st.q);
        }
    }

    #[test]
    fn product5_steps_match_dense_simulation() {
        let inst = inst(16, 1);
        let (red, mut st) = reduce_instance(&inst).unwrap();
        let mut u = CMatrix::identity(16);
        for k in 0..40 {
            let t = 0.8;
            // Dense step uses the dense gradient coordinates; both paths
            // compute their own coords and must stay in lockstep.
            let g = inst.gradient(&u).unwrap();
            let c = inst.tangent_coords(&g).unwrap();
            let scaled = TangentCoords { x: t * c.x, y: t * c.y, residual: c.residual };
            u = product5_retraction(&inst, &u, &scaled).unwrap();
            st = plane_step(&red, &st, t, RetractionKind::Product5);
            let qd = inst.objective(&u).unwrap();
            assert!((st.q - qd).abs() <= 1e-10, "step {k}: plane {} dense {qd}", st.q);
            assert!((st.x - t * 0.0).is_finite());
            // Coordinates agree as well.
            let g2 = inst.gradient(&u).unwrap();
            let c2 = inst.tangent_coords(&g2).unwrap();
            assert!((st.x - c2.x).abs() <= 1e-9 && (st.y - c2.y).abs() <= 1e-9, "step {k}");
        }
    }

    #[test]
    fn mixed_schedule_preserves_norm_and_q_range() {
        let inst = inst(64, 1);
        let schedule: Vec<(f64, RetractionKind)> = (0..100)
            .map(|k| {
                if k % 3 == 0 {
                    (0.4, RetractionKind::ExpExact)
                } else {
                    (0.7, RetractionKind::Product5)
                }
            })
            .collect();
        let states = plane_trajectory(&inst, &schedule).unwrap();
        assert_eq!(states.len(), 101);
        for st in &states {
            assert!((st.ket_norm() - 1.0).abs() <= 1e-12);
            assert!((0.0..=1.0).contains(&st.q));
            assert!((st.q - st.phi.sin().powi(2)).abs() <= 1e-9);
        }
    }

    #[test]
    fn empty_schedule_returns_initial() {
        let states = plane_trajectory(&inst(4, 1), &[]).unwrap();
        assert_eq!(states.len(), 1);
        assert!((states[0].q - 0.25).abs() < 1e-14);
    }

    #[test]
    fn monotone_phase_for_positive_exp_steps() {
        let (red, mut st) = reduce_instance(&inst(16, 1)).unwrap();
        let mut prev = st.phi;
        while st.phi < std::f64::consts::FRAC_PI_2 - 0.05 {
            st = plane_step(&red, &st, 0.3, RetractionKind::ExpExact);
            assert!(st.phi > prev, "phi must strictly increase below pi/2");
            prev = st.phi;
        }
    }

    #[test]
    fn su2_exponential_matches_dense_expm() {
        // Compare the closed form against the dense eigendecomposition route
        // on the reduced gradient of a rotated state.
        let inst = inst(4, 1);
        let (red, st) = reduce_instance(&inst).unwrap();
        let st1 = plane_step(&red, &st, 0.7, RetractionKind::ExpExact);
        let g2 = commut2(&red.h2, &outer2(&st1.ket()));
        let gm = CMatrix::from_fn(2, 2, |r, c| g2[r][c]);
        let dense = crate::linalg::expm_skew(&gm, 1.3).unwrap();
        let fast = exp2_skew_apply(&g2, 1.3, &st1.ket());
        let slow = gm_apply(&dense, &st1.ket());
        assert!((fast[0] - slow[0]).norm() < 1e-12);
        assert!((fast[1] - slow[1]).norm() < 1e-12);
    }

    fn gm_apply(m: &CMatrix, v: &[Complex64; 2]) -> [Complex64; 2] {
        [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
    }

    #[test]
    fn phi_lift_tracks_past_the_pole() {
        let pi = std::f64::consts::PI;
        // Just below the pole, q near 1; continuing should lift past pi/2.
        let phi = nearest_phi_lift(1.55, 0.999);
        assert!(phi > 1.5 && phi < 1.6);
        let phi2 = nearest_phi_lift(1.60, 0.999);
        assert!(phi2 > pi / 2.0, "past the pole the lift continues increasing");
    }
}
