//! Riemannian gradient ascent on U(N) with pluggable retraction and step
//! policy, Lipschitz estimation, the two theorem-derived iteration bounds,
//! and trace capture.
//!
//! Baseline bound: T >= ceil(2 L / eps^2) steps of size 1/L drive the minimum
//! gradient norm below eps. PL bound: T = ceil(6 L ln(1/eps)) steps drive the
//! optimality gap 1 - q below eps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, CMatrix, CVector};
use crate::plane::{plane_step, reduce_instance, PlaneState, ReducedInstance};
use crate::problem::{SearchInstance, TangentCoords};
use crate::retraction::{
    exp_step, one_shot_step, product5_apply_ket, product5_retraction, RetractionKind,
};
use crate::tol;

/// How the step size t_k is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    Fixed { t: f64 },
    OneShot,
    InvLipschitz,
}

/// Which simulation path(s) carry the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Dense,
    Plane,
    Both,
}

/// Stopping rule: gradient norm below epsilon (baseline mode) or optimality
/// gap 1 - q below epsilon (PL mode).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    #[default]
    Grad,
    Gap,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub retraction: RetractionKind,
    pub step_policy: StepPolicy,
    pub epsilon: f64,
    pub max_iters: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_rie: Option<f64>,
    pub seed: u64,
    pub engine: Engine,
    #[serde(default)]
    pub stop: StopRule,
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let StepPolicy::Fixed { t } = self.step_policy {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("fixed step must be positive, got {t}")));
            }
        }
        if let Some(l) = self.l_rie {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("l_rie must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

/// One row of the optimizer trace; CSV column order is the field order.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub q: f64,
    pub f: f64,
    pub grad_norm: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub plane_residual: f64,
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ConvergedGrad,
    ConvergedGap,
    MaxIters,
    Degenerate,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub m: usize,
    pub q0: f64,
    pub c0: f64,
}

impl InstanceSummary {
    pub fn of(inst: &SearchInstance) -> Self {
        InstanceSummary { n: inst.n(), m: inst.rank_h(), q0: inst.q0(), c0: inst.c0() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub config: OptimizerConfig,
    pub instance: InstanceSummary,
    pub outcome: Outcome,
    /// Step-defining Lipschitz constant actually used (override or estimate).
    pub l_rie_effective: Option<f64>,
    pub records: Vec<IterationRecord>,
}

impl Trace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("trace records are nonempty")
    }

    /// Number of steps taken (records minus the initial state).
    pub fn iterations(&self) -> u64 {
        self.records.len() as u64 - 1
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Read trace records back from CSV, reporting the failing row on error.
pub fn read_trace_csv<R: std::io::Read>(r: R) -> Result<Vec<IterationRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    {
        let headers = rdr.headers().map_err(|e| Error::TraceFormat { row: 1, msg: e.to_string() })?;
        let want = ["k", "q", "f", "grad_norm", "x", "y", "t", "plane_residual", "gap"];
        let got: Vec<&str> = headers.iter().collect();
        if got != want {
            return Err(Error::TraceFormat { row: 1, msg: format!("bad header {got:?}") });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<IterationRecord>().enumerate() {
        match rec {
            Ok(r) => out.push(r),
            Err(e) => {
                return Err(Error::TraceFormat { row: i + 2, msg: e.to_string() });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::TooFewRecords(0));
    }
    Ok(out)
}

/// ceil(2 L / eps^2): iterations guaranteeing min_k ||grad f(U_k)|| <= eps
/// for fixed step 1/L.
pub fn baseline_iteration_bound(l: f64, eps: f64) -> u64 {
    assert!(l > 0.0 && eps > 0.0, "baseline bound needs positive L and eps");
    (2.0 * l / (eps * eps) - 1e-9).ceil().max(0.0) as u64
}

/// ceil(6 L ln(1/eps)): iterations guaranteeing the gap 1 - q_T <= eps under
/// the PL inequality. Natural logarithm.
pub fn pl_iteration_bound(l: f64, eps: f64) -> Result<u64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidConfig(format!("PL bound needs positive L, got {l}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig(format!("PL bound needs eps in (0,1), got {eps}")));
    }
    Ok((6.0 * l * (-eps.ln()) - 1e-9).ceil().max(0.0) as u64)
}

const LIPSCHITZ_SAFETY: f64 = 1.1;
const LIPSCHITZ_SAMPLES: usize = 200;
const FD_STEP: f64 = 1e-5;

enum BaseKet {
    Reduced([Complex64; 2]),
    Dense(CVector),
}

/// Estimated Lipschitz constant of the pullback gradient of f through the
/// 5-factor retraction.
///
/// For a base point U and tangent coordinates p = (x, y), the pullback is
/// phi_U(p) = f(R_U(p)); its gradient is measured by central differences and
/// the estimate is the largest difference quotient
///
///   || grad phi_U(p) - grad phi_U(p') ||  /  || p - p' ||
///
/// in the metric of eta = x X0 + y Y0 (coordinates carry a factor c0). Base
/// points mix factor-product-reachable iterates (a sweep along the one-shot
/// curve, which passes through the large-gradient region q ~ 1/2) with
/// Haar-random states. Deterministic per seed, and the sample stream is a
/// prefix of any longer stream: more samples can only increase the estimate.
pub fn estimate_lipschitz(inst: &SearchInstance, samples: usize, seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 samples, got {samples}")));
    }
    let (red, st0) = reduce_instance(inst)?;
    let t_star = one_shot_step(inst)?;

    let mut bases: Vec<BaseKet> = Vec::new();
    let mut st = st0;
    bases.push(BaseKet::Reduced(st.ket()));
    for _ in 0..28 {
        st = plane_step(&red, &st, t_star / 16.0, RetractionKind::ExpExact);
        bases.push(BaseKet::Reduced(st.ket()));
    }
    let mut haar_rng = ChaCha12Rng::seed_from_u64(seed ^ 0xa5a5_5a5a_1234_5678);
    for _ in 0..8 {
        let mut v = CVector::zeros(inst.n());
        for i in 0..inst.n() {
            let re: f64 = StandardNormal.sample(&mut haar_rng);
            let im: f64 = StandardNormal.sample(&mut haar_rng);
            v[i] = Complex64::new(re, im);
        }
        let norm = v.norm();
        bases.push(BaseKet::Dense(v.scale(Complex64::new(1.0 / norm, 0.0))));
    }

    let c0sq = inst.c0() * inst.c0();
    let phi = |base: &BaseKet, x: f64, y: f64| -> f64 {
        match base {
            BaseKet::Reduced(v) => red.product5_q(v, x, y),
            BaseKet::Dense(v) => inst.objective_of_ket(&product5_apply_ket(inst, v, x, y)),
        }
    };
    let grad_fd = |base: &BaseKet, x: f64, y: f64| -> [f64; 2] {
        [
            (phi(base, x + FD_STEP, y) - phi(base, x - FD_STEP, y)) / (2.0 * FD_STEP),
            (phi(base, x, y + FD_STEP) - phi(base, x, y - FD_STEP)) / (2.0 * FD_STEP),
        ]
    };

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut l_hat = 0.0f64;
    for _ in 0..samples {
        let base = &bases[rng.random_range(0..bases.len())];
        let r = 0.1 + 0.9 * rng.random::<f64>();
        let ang = tau * rng.random::<f64>();
        let p1 = (r * ang.cos(), r * ang.sin());
        let near: f64 = rng.random();
        let p2 = if near < 0.75 {
            let dang = tau * rng.random::<f64>();
            let dr = 0.05 * r;
            (p1.0 + dr * dang.cos(), p1.1 + dr * dang.sin())
        } else {
            (0.0, 0.0)
        };
        let g1 = grad_fd(base, p1.0, p1.1);
        let g2 = grad_fd(base, p2.0, p2.1);
        let dist = (p1.0 - p2.0).hypot(p1.1 - p2.1);
        if dist > 1e-9 {
            let dg = ((g1[0] - g2[0]).powi(2) + (g1[1] - g2[1]).powi(2)).sqrt();
            l_hat = l_hat.max(dg / (c0sq * dist));
        }
    }
    Ok(l_hat)
}

struct DensePath {
    u: CMatrix,
}

struct PlanePath {
    red: ReducedInstance,
    st: PlaneState,
}

struct Observation {
    q: f64,
    f: f64,
    grad_norm: f64,
    x: f64,
    y: f64,
    plane_residual: f64,
    coords_residual: f64,
}

/// Run gradient ascent per the config; deterministic for fixed
/// (instance, config, seed).
pub fn run(inst: &SearchInstance, config: &OptimizerConfig) -> Result<Trace> {
    config.validate()?;
    let summary = InstanceSummary::of(inst);

    if inst.is_degenerate() {
        // Already at a stationary extremum: single record, flagged outcome.
        let q = inst.q0();
        let rec = IterationRecord {
            k: 0,
            q,
            f: q,
            grad_norm: 0.0,
            x: 0.0,
            y: 0.0,
            t: 0.0,
            plane_residual: 0.0,
            gap: 1.0 - q,
        };
        return Ok(Trace {
            config: config.clone(),
            instance: summary,
            outcome: Outcome::Degenerate,
            l_rie_effective: config.l_rie,
            records: vec![rec],
        });
    }

    let l_eff = match (config.step_policy, config.l_rie) {
        (StepPolicy::InvLipschitz, Some(l)) => Some(l),
        (StepPolicy::InvLipschitz, None) => Some(
            LIPSCHITZ_SAFETY
                * estimate_lipschitz(inst, LIPSCHITZ_SAMPLES, config.seed ^ 0x4c49_5053)?,
        ),
        (_, l) => l,
    };

    let mut dense = match config.engine {
        Engine::Dense | Engine::Both => Some(DensePath { u: CMatrix::identity(inst.n()) }),
        Engine::Plane => None,
    };
    let mut plane = match config.engine {
        Engine::Plane | Engine::Both => {
            let (red, st) = reduce_instance(inst)?;
            Some(PlanePath { red, st })
        }
        Engine::Dense => None,
    };

    let observe = |dense: &Option<DensePath>, plane: &Option<PlanePath>, k: u64| -> Result<Observation> {
        let dense_obs = dense
            .as_ref()
            .map(|d| -> Result<_> {
                let ket = d.u.matvec(inst.psi0_ket());
                let q = inst.objective_of_ket(&ket);
                let grad = inst.gradient_of_ket(&ket);
                let gn = frobenius_norm(&grad);
                let coords = inst.tangent_coords(&grad)?;
                let pres = inst.plane_residual_of_ket(&ket)?;
                Ok((q, gn, coords, pres))
            })
            .transpose()?;
        let plane_obs = plane.as_ref().map(|p| {
            let q = p.st.q;
            let gn = p.st.grad_norm(&p.red);
            (q, gn, p.st.x, p.st.y, (p.st.ket_norm() - 1.0).abs())
        });
        if let (Some((qd, ..)), Some((qp, ..))) = (&dense_obs, &plane_obs) {
            let delta = (qd - qp).abs();
            if delta > tol::ENGINE_AGREEMENT {
                return Err(Error::EngineMismatch { iter: k, delta, tol: tol::ENGINE_AGREEMENT });
            }
        }
        let obs = match (&dense_obs, &plane_obs) {
            (Some((qd, gn, coords, pres)), Some((qp, ..))) => Observation {
                q: *qp,
                f: *qd,
                grad_norm: *gn,
                x: coords.x,
                y: coords.y,
                plane_residual: *pres,
                coords_residual: coords.residual,
            },
            (Some((qd, gn, coords, pres)), None) => Observation {
                q: *qd,
                f: *qd,
                grad_norm: *gn,
                x: coords.x,
                y: coords.y,
                plane_residual: *pres,
                coords_residual: coords.residual,
            },
            (None, Some((qp, gn, x, y, drift))) => Observation {
                q: *qp,
                f: *qp,
                grad_norm: *gn,
                x: *x,
                y: *y,
                plane_residual: *drift,
                coords_residual: 0.0,
            },
            (None, None) => unreachable!("at least one engine is active"),
        };
        Ok(obs)
    };

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut k: u64 = 0;
    let outcome = loop {
        let obs = observe(&dense, &plane, k)?;
        let gap = 1.0 - obs.q;

        // Fixed-step ascent must not lose objective value; a drop past the
        // slack indicates the step exceeded the smoothness budget.
        if let Some(prev) = records.last() {
            let fixed_kind =
                matches!(config.step_policy, StepPolicy::Fixed { .. } | StepPolicy::InvLipschitz);
            if fixed_kind && obs.f < prev.f - tol::MONOTONE_SLACK {
                return Err(Error::SmoothnessViolation { iter: k, drop: prev.f - obs.f });
            }
        }

        let stopped = match config.stop {
            StopRule::Grad => obs.grad_norm <= config.epsilon,
            StopRule::Gap => gap <= config.epsilon,
        };
        if stopped || k >= config.max_iters {
            records.push(IterationRecord {
                k,
                q: obs.q,
                f: obs.f,
                grad_norm: obs.grad_norm,
                x: obs.x,
                y: obs.y,
                t: 0.0,
                plane_residual: obs.plane_residual,
                gap,
            });
            break if stopped {
                match config.stop {
                    StopRule::Grad => Outcome::ConvergedGrad,
                    StopRule::Gap => Outcome::ConvergedGap,
                }
            } else {
                Outcome::MaxIters
            };
        }

        let t = match config.step_policy {
            StepPolicy::Fixed { t } => t,
            StepPolicy::InvLipschitz => 1.0 / l_eff.expect("l_eff set for inv-Lipschitz"),
            StepPolicy::OneShot => {
                let gamma = (obs.q.clamp(0.0, 1.0) * (1.0 - obs.q.clamp(0.0, 1.0))).sqrt();
                if gamma < 1e-12 {
                    0.0
                } else {
                    obs.q.clamp(0.0, 1.0).sqrt().acos() / gamma
                }
            }
        };

        records.push(IterationRecord {
            k,
            q: obs.q,
            f: obs.f,
            grad_norm: obs.grad_norm,
            x: obs.x,
            y: obs.y,
            t,
            plane_residual: obs.plane_residual,
            gap,
        });

        if let Some(d) = dense.as_mut() {
            d.u = match config.retraction {
                RetractionKind::ExpExact => exp_step(inst, &d.u, t)?,
                RetractionKind::Product5 => {
                    let coords = TangentCoords {
                        x: t * obs.x,
                        y: t * obs.y,
                        residual: t.abs() * obs.coords_residual,
                    };
                    product5_retraction(inst, &d.u, &coords)?
                }
            };
        }
        if let Some(p) = plane.as_mut() {
            p.st = plane_step(&p.red, &p.st, t, config.retraction);
        }
        k += 1;
    };

    Ok(Trace {
        config: config.clone(),
        instance: summary,
        outcome,
        l_rie_effective: l_eff,
        records,
    })
}

/// Empirical PL certificate fitted along a trace.
#[derive(Clone, Debug, Serialize)]
pub struct PlCertificate {
    /// min_k grad_norm_k^2 / gap_k: largest mu with grad^2 >= mu * gap on
    /// the whole trace.
    pub mu_fitted: f64,
    /// 2 q0: the algebraic floor from grad^2 = 2 q (1-q) >= 2 q0 * gap while
    /// q is nondecreasing.
    pub mu_floor: f64,
    pub decay_ratio_max: f64,
    pub decay_ratio_geomean: f64,
    pub first_reach: Option<u64>,
    pub bound_iters: Option<u64>,
    pub reached_within_bound: Option<bool>,
}

/// Fit the PL constant and geometric decay of the gap along a trace and
/// compare against the ceil(6 L ln(1/eps)) bound when L is available.
pub fn pl_gap_certificate(trace: &Trace) -> Result<PlCertificate> {
    if trace.records.len() < 2 {
        return Err(Error::TooFewRecords(trace.records.len()));
    }
    let eps = trace.config.epsilon;
    let mut mu = f64::INFINITY;
    for r in &trace.records {
        if r.gap > 1e-13 {
            mu = mu.min(r.grad_norm * r.grad_norm / r.gap);
        }
    }
    if !mu.is_finite() {
        mu = 0.0;
    }
    let mut ratio_max: f64 = 0.0;
    let mut log_sum = 0.0;
    let mut log_count = 0usize;
    for w in trace.records.windows(2) {
        if w[0].gap > 1e-13 && w[1].gap > 1e-15 {
            let ratio = w[1].gap / w[0].gap;
            ratio_max = ratio_max.max(ratio);
            if ratio > 0.0 {
                log_sum += ratio.ln();
                log_count += 1;
            }
        }
    }
    let geomean = if log_count > 0 { (log_sum / log_count as f64).exp() } else { 0.0 };
    let first_reach = trace.records.iter().find(|r| r.gap <= eps).map(|r| r.k);
    let l = trace.l_rie_effective.or(trace.config.l_rie);
    let bound_iters = match l {
        Some(l) if eps < 1.0 => Some(pl_iteration_bound(l, eps)?),
        _ => None,
    };
    let reached_within_bound = match (first_reach, bound_iters) {
        (Some(k), Some(b)) => Some(k <= b),
        (None, Some(_)) => Some(false),
        _ => None,
    };
    Ok(PlCertificate {
        mu_fitted: mu,
        mu_floor: 2.0 * trace.instance.q0,
        decay_ratio_max: ratio_max,
        decay_ratio_geomean: geomean,
        first_reach,
        bound_iters,
        reached_within_bound,
    })
}

/// Replayable run description: the JSON config file schema. Every field is
/// optional so files and CLI flags can be overlaid; unspecified fields fall
/// back to defaults at build time.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retraction: Option<RetractionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_policy: Option<StepPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_rie: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopRule>,
}

impl RunSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fields set on `self` win over `base`.
    pub fn overlaid_on(self, base: RunSpec) -> RunSpec {
        RunSpec {
            n: self.n.or(base.n),
            marked: self.marked.or(base.marked),
            retraction: self.retraction.or(base.retraction),
            step_policy: self.step_policy.or(base.step_policy),
            epsilon: self.epsilon.or(base.epsilon),
            max_iters: self.max_iters.or(base.max_iters),
            l_rie: self.l_rie.or(base.l_rie),
            seed: self.seed.or(base.seed),
            engine: self.engine.or(base.engine),
            stop: self.stop.or(base.stop),
        }
    }

    /// Materialize the instance and the effective config (defaults applied).
    pub fn build(self) -> Result<(SearchInstance, OptimizerConfig)> {
        let n = self.n.ok_or_else(|| Error::InvalidConfig("n is required".into()))?;
        let marked = self.marked.unwrap_or_else(|| vec![0]);
        let inst = SearchInstance::from_marked(n, &marked)?;
        let config = OptimizerConfig {
            retraction: self.retraction.unwrap_or(RetractionKind::Product5),
            step_policy: self.step_policy.unwrap_or(StepPolicy::InvLipschitz),
            epsilon: self.epsilon.unwrap_or(1e-2),
            max_iters: self.max_iters.unwrap_or(100_000),
            l_rie: self.l_rie,
            seed: self.seed.unwrap_or(0),
            engine: self.engine.unwrap_or(Engine::Both),
            stop: self.stop.unwrap_or_default(),
        };
        Ok((inst, config))
    }
}

/// Condensed, serializable view of a finished run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceSummary {
    pub config: OptimizerConfig,
    pub instance: InstanceSummary,
    pub outcome: Outcome,
    pub l_rie_effective: Option<f64>,
    pub iterations: u64,
    pub final_record: IterationRecord,
    pub baseline_bound: Option<u64>,
    pub pl_bound: Option<u64>,
}

impl TraceSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        let l = trace.l_rie_effective.or(trace.config.l_rie);
        let eps = trace.config.epsilon;
        TraceSummary {
            config: trace.config.clone(),
            instance: trace.instance,
            outcome: trace.outcome,
            l_rie_effective: trace.l_rie_effective,
            iterations: trace.iterations(),
            final_record: *trace.final_record(),
            baseline_bound: l.map(|l| baseline_iteration_bound(l, eps)),
            pl_bound: l.and_then(|l| pl_iteration_bound(l, eps).ok()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, m: usize) -> SearchInstance {
        SearchInstance::from_marked(n, &(0..m).collect::<Vec<_>>()).unwrap()
    }

    fn cfg() -> OptimizerConfig {
        OptimizerConfig {
            retraction: RetractionKind::ExpExact,
            step_policy: StepPolicy::OneShot,
            epsilon: 1e-10,
            max_iters: 50,
            l_rie: None,
            seed: 1,
            engine: Engine::Both,
            stop: StopRule::Gap,
        }
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(baseline_iteration_bound(10.0, 0.1), 2000);
        assert_eq!(baseline_iteration_bound(1.0, 1.0), 2);
        assert_eq!(baseline_iteration_bound(0.5, 0.05), 400);

        assert_eq!(pl_iteration_bound(10.0, 0.01).unwrap(), 277);
        assert_eq!(pl_iteration_bound(1.0, 1.0 / std::f64::consts::E).unwrap(), 6);
        assert_eq!(pl_iteration_bound(2.0, 0.1).unwrap(), 28);
        assert!(pl_iteration_bound(1.0, 1.0).is_err());
        assert!(pl_iteration_bound(1.0, 1.5).is_err());
    }

    #[test]
    fn one_shot_single_iteration() {
        let inst = inst(4, 1);
        let trace = run(&inst, &cfg()).unwrap();
        assert_eq!(trace.outcome, Outcome::ConvergedGap);
        assert_eq!(trace.iterations(), 1);
        assert!(trace.final_record().gap <= 1e-10);
        // The first step size is t0*.
        let t0 = one_shot_step(&inst).unwrap();
        assert!((trace.records[0].t - t0).abs() < 1e-12);
    }

    #[test]
    fn one_shot_plane_engine_large_n() {
        let inst = inst(1024, 1);
        let mut c = cfg();
        c.engine = Engine::Plane;
        let trace = run(&inst, &c).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert!(trace.final_record().gap <= 1e-10);
    }

    #[test]
    fn max_iters_zero_keeps_initial_record() {
        let inst = inst(4, 1);
        let mut c = cfg();
        c.max_iters = 0;
        c.epsilon = 1e-15;
        let trace = run(&inst, &c).unwrap();
        assert_eq!(trace.outcome, Outcome::MaxIters);
        assert_eq!(trace.records.len(), 1);
        assert!((trace.records[0].q - 0.25).abs() < 1e-13);
    }

    #[test]
    fn deterministic_traces() {
        let inst = inst(16, 1);
        let c = OptimizerConfig {
            retraction: RetractionKind::Product5,
            step_policy: StepPolicy::InvLipschitz,
            epsilon: 0.1,
            max_iters: 5000,
            l_rie: None,
            seed: 42,
            engine: Engine::Both,
            stop: StopRule::Grad,
        };
        let t1 = run(&inst, &c).unwrap();
        let t2 = run(&inst, &c).unwrap();
        assert_eq!(t1.records.len(), t2.records.len());
        for (a, b) in t1.records.iter().zip(&t2.records) {
            assert_eq!(a.q, b.q);
            assert_eq!(a.grad_norm, b.grad_norm);
            assert_eq!(a.t, b.t);
        }
        assert_eq!(t1.l_rie_effective, t2.l_rie_effective);
    }

    #[test]
    fn inverse_lipschitz_is_monotone_and_certified() {
        let inst = inst(16, 1);
        let c = OptimizerConfig {
            retraction: RetractionKind::Product5,
            step_policy: StepPolicy::InvLipschitz,
            epsilon: 0.1,
            max_iters: 10_000,
            l_rie: None,
            seed: 3,
            engine: Engine::Both,
            stop: StopRule::Grad,
        };
        let trace = run(&inst, &c).unwrap();
        assert_eq!(trace.outcome, Outcome::ConvergedGrad);
        for w in trace.records.windows(2) {
            assert!(w[1].f >= w[0].f - tol::MONOTONE_SLACK);
        }
        let l = trace.l_rie_effective.unwrap();
        let bound = baseline_iteration_bound(l, 0.1);
        assert!(trace.iterations() <= bound, "{} > bound {bound}", trace.iterations());
        // Gradient norm identity along the trace.
        for r in &trace.records {
            let want = (2.0 * r.q * (1.0 - r.q)).sqrt();
            assert!((r.grad_norm - want).abs() <= 1e-8);
            assert!(r.plane_residual <= 1e-8);
        }
    }

    #[test]
    fn engine_both_agrees_with_single_engines() {
        let inst = inst(16, 1);
        for retraction in [RetractionKind::ExpExact, RetractionKind::Product5] {
            let mk = |engine| OptimizerConfig {
                retraction,
                step_policy: StepPolicy::Fixed { t: 0.7 },
                epsilon: 1e-3,
                max_iters: 40,
                l_rie: None,
                seed: 5,
                engine,
                stop: StopRule::Gap,
            };
            let td = run(&inst, &mk(Engine::Dense)).unwrap();
            let tp = run(&inst, &mk(Engine::Plane)).unwrap();
            let tb = run(&inst, &mk(Engine::Both)).unwrap();
            assert_eq!(td.records.len(), tp.records.len());
            assert_eq!(td.records.len(), tb.records.len());
            for ((a, b), c) in td.records.iter().zip(&tp.records).zip(&tb.records) {
                assert!((a.q - b.q).abs() <= 1e-9);
                assert!((a.q - c.f).abs() <= 1e-12);
                assert!((b.q - c.q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_instance_outcome() {
        let h = CMatrix::diag(&[Complex64::ONE, Complex64::ZERO]);
        let ket = CVector::basis(2, 0);
        let inst = SearchInstance::from_parts(h, ket).unwrap();
        let trace = run(&inst, &cfg()).unwrap();
        assert_eq!(trace.outcome, Outcome::Degenerate);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn lipschitz_estimator_properties() {
        let inst2 = inst(2, 1);
        let l1 = estimate_lipschitz(&inst2, 100, 9).unwrap();
        let l2 = estimate_lipschitz(&inst2, 100, 9).unwrap();
        assert!(l1 > 0.0 && l1.is_finite());
        assert_eq!(l1, l2, "deterministic per seed");
        // Doubling samples never decreases the max.
        let l200 = estimate_lipschitz(&inst2, 200, 9).unwrap();
        assert!(l200 >= l1);
        assert!(estimate_lipschitz(&inst2, 1, 9).is_err());
    }

    #[test]
    fn lipschitz_grows_with_dimension() {
        let l16 = estimate_lipschitz(&inst(16, 1), 200, 7).unwrap();
        let l64 = estimate_lipschitz(&inst(64, 1), 200, 7).unwrap();
        let l256 = estimate_lipschitz(&inst(256, 1), 200, 7).unwrap();
        assert!(l64 > l16, "l16={l16} l64={l64}");
        assert!(l256 > l64, "l64={l64} l256={l256}");
        // Log-log slope against N/M near 1/2.
        let slope = ((l256 / l16).ln()) / ((256.0f64 / 16.0).ln());
        assert!((slope - 0.5).abs() <= 0.15, "slope {slope}");
    }

    #[test]
    fn csv_round_trip() {
        let inst = inst(4, 1);
        let trace = run(&inst, &cfg()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,q,f,grad_norm,x,y,t,plane_residual,gap"));
        let records = read_trace_csv(&buf[..]).unwrap();
        assert_eq!(records.len(), trace.records.len());
        assert_eq!(records[0].k, 0);
    }

    #[test]
    fn csv_reports_bad_rows() {
        let text = "k,q,f,grad_norm,x,y,t,plane_residual,gap\n0,0.25,0.25,0.6,1,0,2.4,0,0.75\n1,bad,0,0,0,0,0,0,0\n";
        match read_trace_csv(text.as_bytes()) {
            Err(Error::TraceFormat { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected TraceFormat error, got {other:?}"),
        }
        assert!(matches!(
            read_trace_csv("not,a,trace\n1,2,3\n".as_bytes()),
            Err(Error::TraceFormat { row: 1, .. })
        ));
    }

    #[test]
    fn pl_certificate_on_gap_run() {
        let inst = inst(16, 1);
        let c = OptimizerConfig {
            retraction: RetractionKind::Product5,
            step_policy: StepPolicy::InvLipschitz,
            epsilon: 1e-3,
            max_iters: 10_000,
            l_rie: None,
            seed: 11,
            engine: Engine::Plane,
            stop: StopRule::Gap,
        };
        let trace = run(&inst, &c).unwrap();
        assert_eq!(trace.outcome, Outcome::ConvergedGap);
        let cert = pl_gap_certificate(&trace).unwrap();
        assert!(cert.mu_fitted > 0.0);
        assert!(cert.mu_fitted >= cert.mu_floor - 1e-9, "{} < {}", cert.mu_fitted, cert.mu_floor);
        assert_eq!(cert.reached_within_bound, Some(true));
        assert!(cert.decay_ratio_max < 1.0);
    }

    #[test]
    fn pl_certificate_needs_records() {
        let inst = inst(4, 1);
        let mut c = cfg();
        c.max_iters = 0;
        c.epsilon = 1e-15;
        let trace = run(&inst, &c).unwrap();
        assert!(matches!(pl_gap_certificate(&trace), Err(Error::TooFewRecords(1))));
    }

    #[test]
    fn run_spec_json_and_overlay() {
        let text = r#"{
            "n": 16, "marked": [0],
            "retraction": "product5",
            "step_policy": {"kind": "fixed", "t": 0.5},
            "epsilon": 0.05, "max_iters": 100, "seed": 7, "engine": "dense"
        }"#;
        let spec = RunSpec::from_json_str(text).unwrap();
        let over = RunSpec { epsilon: Some(0.2), ..Default::default() };
        let merged = over.overlaid_on(spec);
        let (inst, config) = merged.build().unwrap();
        assert_eq!(inst.n(), 16);
        assert_eq!(config.epsilon, 0.2, "explicit overlay wins");
        assert_eq!(config.max_iters, 100);
        assert!(matches!(config.step_policy, StepPolicy::Fixed { t } if t == 0.5));
        assert_eq!(config.stop, StopRule::Grad, "default stop rule");
    }

    #[test]
    fn config_validation() {
        let inst = inst(4, 1);
        let mut c = cfg();
        c.epsilon = -1.0;
        assert!(run(&inst, &c).is_err());
        let mut c = cfg();
        c.step_policy = StepPolicy::Fixed { t: 0.0 };
        assert!(run(&inst, &c).is_err());
    }
}
