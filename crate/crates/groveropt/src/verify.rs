//! Theorem-keyed verification suites: gradient checks, plane invariance,
//! retraction bounds, the su(n) commutator decomposition, and the complexity
//! certificates. Every suite is deterministic per seed and emits a
//! machine-readable report; negative controls must fail.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::candidate::{check_velocity, CandidateProduct};
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, frobenius_inner, frobenius_norm, hermitian_residual, random_unitary,
    skew_residual, zero_diagonal_similarity, CMatrix, CVector,
};
use crate::optimizer::{
    baseline_iteration_bound, estimate_lipschitz, pl_gap_certificate, pl_iteration_bound, run,
    Engine, OptimizerConfig, Outcome, StepPolicy, StopRule,
};
use crate::problem::SearchInstance;
use crate::retraction::{bounds_ratios, exp_step, product5_retraction, RetractionKind};
use crate::tol;

/// One recorded violation: which input, what was observed, what was expected,
/// and at which tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub input: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
}

/// Machine-readable suite outcome; verdict is "pass" iff failures is empty.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub failures: Vec<Failure>,
    pub verdict: String,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            trials: 0,
            failures: Vec::new(),
            verdict: String::new(),
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, input: impl Into<String>, observed: f64, expected: f64, tolerance: f64) {
        self.failures.push(Failure { input: input.into(), observed, expected, tolerance });
    }

    fn check(
        &mut self,
        ok: bool,
        input: impl Into<String>,
        observed: f64,
        expected: f64,
        tolerance: f64,
    ) {
        if !ok {
            self.fail(input, observed, expected, tolerance);
        }
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.failures.is_empty() { "pass" } else { "fail" }.to_string();
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Single finite-difference comparison of the directional derivative against
/// the gradient inner product.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FdGradientCheck {
    /// <grad f(U), direction> under the Frobenius inner product.
    pub inner: f64,
    /// (f(exp(h direction) U) - f(U)) / h.
    pub fd: f64,
    pub abs_err: f64,
}

/// Forward-difference check of the gradient along one skew-Hermitian
/// direction at step h.
pub fn fd_gradient_check(
    inst: &SearchInstance,
    u: &CMatrix,
    direction: &CMatrix,
    h: f64,
) -> Result<FdGradientCheck> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("need h > 0, got {h}")));
    }
    let grad = inst.gradient(u)?;
    let inner = frobenius_inner(&grad, direction)?;
    let stepped = &crate::linalg::expm_skew(direction, h)? * u;
    let fd = (inst.objective(&stepped)? - inst.objective(u)?) / h;
    Ok(FdGradientCheck { inner, fd, abs_err: (fd - inner).abs() })
}

/// Random skew-Hermitian direction with unit Frobenius norm.
fn random_skew(n: usize, rng: &mut ChaCha12Rng) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    let skew = (&(&m - &m.adjoint())).scale_re(0.5);
    let norm = frobenius_norm(&skew);
    skew.scale_re(1.0 / norm)
}

/// Gradient validation suite: directional derivatives across random (U,
/// direction) pairs at h = 1e-5, orthogonal-direction and stationary-point
/// spot checks, and the O(h) decay of the finite-difference error.
pub fn gradient_suite(inst: &SearchInstance, trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("gradient");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = inst.n();
    let h = 1e-5;
    for trial in 0..trials {
        let u = random_unitary(n, seed.wrapping_add(trial as u64).wrapping_mul(0x9e37_79b9))?;
        let d = random_skew(n, &mut rng);
        let chk = fd_gradient_check(inst, &u, &d, h)?;
        report.trials += 1;
        report.check(chk.abs_err <= 1e-5, format!("trial {trial} fd"), chk.abs_err, 0.0, 1e-5);

        if trial < 10 {
            // Orthogonal direction: first-order change vanishes.
            let grad = inst.gradient(&u)?;
            let gn2 = frobenius_inner(&grad, &grad)?;
            if gn2 > 1e-12 {
                let coef = frobenius_inner(&grad, &d)? / gn2;
                let orth = &d - &grad.scale_re(coef);
                let onorm = frobenius_norm(&orth);
                if onorm > 1e-6 {
                    let orth = orth.scale_re(1.0 / onorm);
                    let chk = fd_gradient_check(inst, &u, &orth, h)?;
                    report.check(
                        chk.inner.abs() <= 1e-10 && chk.fd.abs() <= 1e-5,
                        format!("trial {trial} orthogonal"),
                        chk.fd.abs(),
                        0.0,
                        1e-5,
                    );
                }
            }
            // O(h) decay: halving h roughly halves the error, down to the
            // roundoff floor.
            let coarse = fd_gradient_check(inst, &u, &d, 1e-4)?;
            let fine = fd_gradient_check(inst, &u, &d, 5e-5)?;
            let floor = 1e-9;
            let ok = fine.abs_err <= 0.7 * coarse.abs_err + floor
                && (coarse.abs_err <= floor || fine.abs_err >= 0.3 * coarse.abs_err - floor);
            report.check(
                ok,
                format!("trial {trial} decay ratio"),
                fine.abs_err / coarse.abs_err.max(1e-300),
                0.5,
                0.2,
            );
        }
    }
    // Stationary point: all directional derivatives vanish at the maximizer.
    let t_star = crate::retraction::one_shot_step(inst)?;
    let u_star = exp_step(inst, &CMatrix::identity(n), t_star)?;
    for trial in 0..5 {
        let d = random_skew(n, &mut rng);
        let chk = fd_gradient_check(inst, &u_star, &d, h)?;
        report.trials += 1;
        report.check(
            chk.fd.abs() <= 1e-4 && chk.inner.abs() <= 1e-9,
            format!("maximizer trial {trial}"),
            chk.fd.abs(),
            0.0,
            1e-4,
        );
    }
    Ok(report.finish())
}

/// Plane invariance under random mixed schedules of raw factors, product
/// retraction steps, and exponential steps. With `inject_fault` an off-plane
/// perturbation is applied halfway; the suite must then fail.
pub fn plane_invariance_suite(
    inst: &SearchInstance,
    steps: usize,
    seed: u64,
    inject_fault: bool,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("plane");
    let plane = inst.grover_plane()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut u = CMatrix::identity(inst.n());
    let phase = |theta: f64| Complex64::new(0.0, theta).exp() - Complex64::ONE;
    for k in 0..steps {
        let pick: f64 = rng.random();
        let theta: f64 = (rng.random::<f64>() - 0.5) * std::f64::consts::TAU;
        if pick < 0.4 {
            u = &u + &inst.apply_h_left(&u).scale(phase(theta));
        } else if pick < 0.8 {
            u = &u + &inst.apply_psi0_left(&u).scale(phase(theta));
        } else if pick < 0.9 {
            let grad = inst.gradient(&u)?;
            let c = inst.tangent_coords(&grad)?;
            let t: f64 = rng.random::<f64>();
            let scaled = crate::problem::TangentCoords {
                x: t * c.x,
                y: t * c.y,
                residual: c.residual,
            };
            u = product5_retraction(inst, &u, &scaled)?;
        } else {
            let t: f64 = rng.random::<f64>();
            u = exp_step(inst, &u, t)?;
        }
        if inject_fault && k == steps / 2 {
            // Rotate the current state partly out of the plane: negative
            // control for the residual checks below.
            let ket = u.matvec(inst.psi0_ket());
            let mut w = CVector::basis(inst.n(), inst.n() - 1);
            let a = plane.e1.inner(&w);
            let b = plane.e2.inner(&w);
            w = w.sub(&plane.e1.scale(a)).sub(&plane.e2.scale(b));
            let wn = w.norm();
            if wn > 1e-6 {
                let w = w.scale(Complex64::new(1.0 / wn, 0.0));
                let kmat = &CMatrix::outer(&w, &ket) - &CMatrix::outer(&ket, &w);
                u = &crate::linalg::expm_skew(&kmat, 1e-3)? * &u;
            }
        }
        let ket = u.matvec(inst.psi0_ket());
        let res = inst.plane_residual_of_ket(&ket)?;
        report.trials += 1;
        report.check(
            res <= tol::PLANE_RESIDUAL,
            format!("step {k} ket residual"),
            res,
            0.0,
            tol::PLANE_RESIDUAL,
        );
        let grad = inst.gradient(&u)?;
        let tres = inst.tangent_coords(&grad)?.residual;
        report.check(
            tres <= tol::PLANE_RESIDUAL,
            format!("step {k} tangent residual"),
            tres,
            0.0,
            tol::PLANE_RESIDUAL,
        );
    }
    Ok(report.finish())
}

/// Write a traceless skew-Hermitian X as a commutator [A, B] of Hermitian
/// matrices.
///
/// Construction: W^H X W = X' with zero diagonal, A' = diag(0, 1, ..., n-1),
/// B'_jk = X'_jk / (j - k) off the diagonal; then [A', B'] = X' entrywise and
/// conjugating back by W gives [A, B] = X.
pub fn commutator_decompose(x: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = x.rows();
    let sres = skew_residual(x);
    let gate = tol::SKEW_GATE * 1f64.max(frobenius_norm(x));
    if sres > gate {
        return Err(Error::NotSkewHermitian { residual: sres, tol: gate });
    }
    let tr = x.trace().norm();
    if tr > 1e-10 * 1f64.max(frobenius_norm(x)) {
        return Err(Error::NonzeroTrace { magnitude: tr });
    }
    if frobenius_norm(x) <= 1e-14 {
        return Ok((CMatrix::zeros(n, n), CMatrix::zeros(n, n)));
    }
    let (w, xp) = zero_diagonal_similarity(x)?;
    let a_diag = CMatrix::diag(&(0..n).map(|i| Complex64::new(i as f64, 0.0)).collect::<Vec<_>>());
    let mut b_prime = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if r != c {
                b_prime[(r, c)] = xp[(r, c)] / Complex64::new(r as f64 - c as f64, 0.0);
            }
        }
    }
    let a = &(&w * &a_diag) * &w.adjoint();
    let b = &(&w * &b_prime) * &w.adjoint();
    Ok((a, b))
}

/// Random traceless skew-Hermitian matrix with unit-scale entries.
fn random_traceless_skew(n: usize, rng: &mut ChaCha12Rng) -> CMatrix {
    let mut m = random_skew(n, rng).scale_re((n as f64).sqrt());
    let shift = m.trace() / Complex64::new(n as f64, 0.0);
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    m
}

/// Decomposition suite over random traceless skew-Hermitian inputs.
pub fn commutator_suite(dim: usize, trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("commutator");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let x = random_traceless_skew(dim, &mut rng);
        let (a, b) = commutator_decompose(&x)?;
        let herm = hermitian_residual(&a).max(hermitian_residual(&b));
        let recon = frobenius_norm(&(&commutator(&a, &b)? - &x));
        report.trials += 1;
        report.check(herm <= 1e-12, format!("trial {trial} hermiticity"), herm, 0.0, 1e-12);
        report.check(recon <= 1e-10, format!("trial {trial} reconstruction"), recon, 0.0, 1e-10);
    }
    Ok(report.finish())
}

/// Retraction bound suite: no violations of either inequality across random
/// (U, direction, scale) triples, and tightness of the second-order constant
/// at the smallest scale.
pub fn bounds_suite(
    inst: &SearchInstance,
    trials: usize,
    scales: &[f64],
    seed: u64,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("retraction-bounds");
    let beta = 1.0 / (4.0 * inst.c0());
    let min_scale = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut max_ratio2_at_min = 0.0f64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let u = random_unitary(inst.n(), seed.wrapping_add(trial as u64).wrapping_mul(31))?;
        // Two axis directions first, then random angles: the tightness limit
        // is direction-independent but the axes make the check deterministic.
        let ang = match trial {
            0 => 0.0,
            1 => std::f64::consts::FRAC_PI_2,
            _ => rng.random::<f64>() * std::f64::consts::TAU,
        };
        let coords =
            crate::problem::TangentCoords { x: ang.cos(), y: ang.sin(), residual: 0.0 };
        for &scale in scales {
            let (r1, r2) = bounds_ratios(inst, &u, &coords, scale)?;
            report.trials += 1;
            report.check(
                r1 <= 1.0 + 1e-9,
                format!("trial {trial} scale {scale} ratio1"),
                r1,
                1.0,
                1e-9,
            );
            report.check(
                r2 <= beta + 1e-6,
                format!("trial {trial} scale {scale} ratio2"),
                r2,
                beta,
                1e-6,
            );
            if scale == min_scale {
                max_ratio2_at_min = max_ratio2_at_min.max(r2);
            }
        }
    }
    report.check(
        max_ratio2_at_min >= 0.99 * beta,
        "tightness of 1/(4 c0) at smallest scale",
        max_ratio2_at_min,
        beta,
        0.01 * beta,
    );
    report.notes.push(format!("beta = 1/(4 c0) = {beta:.6}"));
    report.notes.push("zero directions are skipped: the ratios are undefined at eta = 0".into());
    Ok(report.finish())
}

/// The P1-P3 candidate tester on the built-in product and the two shipped
/// negative controls.
pub fn candidate_suite(inst: &SearchInstance, h: f64, eps: f64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("candidate-p123");
    let grid = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-2.0, 0.5), (0.0, 0.0)];
    let builtin = check_velocity(inst, &CandidateProduct::builtin_product5(), &grid, h, eps)?;
    report.trials += grid.len() as u64;
    report.check(builtin.pass, "builtin product5", if builtin.pass { 1.0 } else { 0.0 }, 1.0, 0.0);
    for r in &builtin.records {
        report.check(
            r.p1 && r.p2 && r.p3,
            format!("builtin seed ({}, {})", r.x, r.y),
            r.err,
            0.0,
            eps,
        );
    }
    // Negative controls must fail overall.
    for (name, cand) in [
        ("single-factor", CandidateProduct::negative_single_factor()),
        ("swapped-signs", CandidateProduct::negative_swapped()),
    ] {
        let rep = check_velocity(inst, &cand, &grid, h, eps)?;
        report.trials += grid.len() as u64;
        report.check(
            !rep.pass,
            format!("negative control {name} must fail"),
            if rep.pass { 1.0 } else { 0.0 },
            0.0,
            0.0,
        );
    }
    Ok(report.finish())
}

/// Baseline and PL complexity certificates over a matrix of (n, m, eps)
/// cells, plus the one-shot comparison and the textbook reference count
/// (reported, never asserted).
pub fn complexity_suite(cells: &[(usize, usize, f64)], seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("complexity");
    for &(n, m, eps) in cells {
        let inst = SearchInstance::from_marked(n, &(0..m).collect::<Vec<_>>())?;
        let cell = format!("(n={n}, m={m}, eps={eps})");
        let l = 1.1 * estimate_lipschitz(&inst, 200, seed ^ (n as u64) << 16 ^ (m as u64))?;

        // Baseline certificate: fixed step 1/L reaches grad norm <= eps
        // within ceil(2 L / eps^2).
        let bound = baseline_iteration_bound(l, eps);
        let config = OptimizerConfig {
            retraction: RetractionKind::Product5,
            step_policy: StepPolicy::InvLipschitz,
            epsilon: eps,
            max_iters: bound + 10,
            l_rie: Some(l),
            seed,
            engine: Engine::Both,
            stop: StopRule::Grad,
        };
        let trace = run(&inst, &config)?;
        report.trials += 1;
        report.check(
            trace.outcome == Outcome::ConvergedGrad && trace.iterations() <= bound,
            format!("{cell} baseline certificate"),
            trace.iterations() as f64,
            bound as f64,
            0.0,
        );

        // PL certificate: gap <= eps_pl within ceil(6 L ln(1/eps_pl)).
        for eps_pl in [1e-2, 1e-3] {
            let pl_bound = pl_iteration_bound(l, eps_pl)?;
            let config = OptimizerConfig {
                retraction: RetractionKind::Product5,
                step_policy: StepPolicy::InvLipschitz,
                epsilon: eps_pl,
                max_iters: pl_bound + 10,
                l_rie: Some(l),
                seed,
                engine: Engine::Both,
                stop: StopRule::Gap,
            };
            let trace = run(&inst, &config)?;
            report.trials += 1;
            let cert = pl_gap_certificate(&trace)?;
            report.check(
                trace.outcome == Outcome::ConvergedGap && trace.iterations() <= pl_bound,
                format!("{cell} PL certificate eps={eps_pl}"),
                trace.iterations() as f64,
                pl_bound as f64,
                0.0,
            );
            report.check(
                cert.mu_fitted > 0.0,
                format!("{cell} PL constant positive eps={eps_pl}"),
                cert.mu_fitted,
                2.0 * inst.q0(),
                0.0,
            );
        }

        // One-shot comparison: a single exact exponential step.
        let config = OptimizerConfig {
            retraction: RetractionKind::ExpExact,
            step_policy: StepPolicy::OneShot,
            epsilon: 1e-10,
            max_iters: 3,
            l_rie: None,
            seed,
            engine: if n > 128 { Engine::Plane } else { Engine::Both },
            stop: StopRule::Gap,
        };
        let trace = run(&inst, &config)?;
        report.trials += 1;
        report.check(
            trace.iterations() == 1 && trace.final_record().gap <= 1e-10,
            format!("{cell} one-shot"),
            trace.iterations() as f64,
            1.0,
            0.0,
        );

        let textbook = (std::f64::consts::FRAC_PI_4 * (n as f64 / m as f64).sqrt()).round();
        report.notes.push(format!(
            "{cell}: L_hat = {l:.4}, baseline bound = {bound}, textbook count (pi/4) sqrt(N/M) = {textbook} (context only)"
        ));
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst_4_1() -> SearchInstance {
        SearchInstance::from_marked(4, &[0]).unwrap()
    }

    #[test]
    fn fd_check_at_identity_along_gradient() {
        let inst = inst_4_1();
        let id = CMatrix::identity(4);
        let grad = inst.gradient(&id).unwrap();
        let chk = fd_gradient_check(&inst, &id, &grad, 1e-5).unwrap();
        // <X0, X0> = c0^2 = 0.375.
        assert!((chk.inner - 0.375).abs() < 1e-12);
        assert!(chk.abs_err <= 1e-4);
    }

    #[test]
    fn gradient_suite_passes() {
        let report = gradient_suite(&SearchInstance::from_marked(16, &[0]).unwrap(), 40, 3).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn plane_suite_passes_and_fault_injection_fails() {
        let inst = SearchInstance::from_marked(16, &[0]).unwrap();
        let ok = plane_invariance_suite(&inst, 60, 5, false).unwrap();
        assert!(ok.passed(), "{:?}", ok.failures);
        let bad = plane_invariance_suite(&inst, 60, 5, true).unwrap();
        assert!(!bad.passed(), "fault injection must be detected");
    }

    #[test]
    fn commutator_decompose_2x2_example() {
        let x = CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)])
            .unwrap();
        let (a, b) = commutator_decompose(&x).unwrap();
        assert!(hermitian_residual(&a) <= 1e-12);
        assert!(hermitian_residual(&b) <= 1e-12);
        let recon = commutator(&a, &b).unwrap();
        assert!(frobenius_norm(&(&recon - &x)) <= 1e-12);
    }

    #[test]
    fn commutator_decompose_zero() {
        let z = CMatrix::zeros(3, 3);
        let (a, b) = commutator_decompose(&z).unwrap();
        assert_eq!(frobenius_norm(&a), 0.0);
        assert_eq!(frobenius_norm(&b), 0.0);
    }

    #[test]
    fn commutator_decompose_rejects_bad_input() {
        assert!(commutator_decompose(&CMatrix::identity(2)).is_err());
        // Skew-Hermitian but with nonzero trace.
        let x = CMatrix::diag(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0)]);
        assert!(matches!(commutator_decompose(&x), Err(Error::NonzeroTrace { .. })));
    }

    #[test]
    fn commutator_suite_dims() {
        for dim in [2usize, 8] {
            let report = commutator_suite(dim, 10, 7).unwrap();
            assert!(report.passed(), "dim {dim}: {:?}", report.failures);
        }
    }

    #[test]
    fn bounds_suite_small() {
        let report = bounds_suite(&inst_4_1(), 50, &[1.0, 1e-2, 1e-4], 13).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn candidate_suite_small() {
        let report = candidate_suite(&inst_4_1(), 1e-6, 1e-4).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn complexity_suite_one_cell() {
        let report = complexity_suite(&[(16, 1, 0.1)], 2).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert!(!report.notes.is_empty());
    }
}
