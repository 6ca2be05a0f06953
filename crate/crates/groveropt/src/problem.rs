//! The Grover optimization instance on U(N).
//!
//! f(U) = Tr(H U psi0 U^H) with H an orthogonal projector and psi0 = |k><k| a
//! rank-one projector. The gradient generator is the commutator [H, psi_U];
//! it vanishes exactly at the global extrema f in {0, 1}. All dynamics built
//! from e^{i theta H} / e^{i theta psi0} factors stay inside the Grover plane
//! span{|psi0>, H|psi0>}, and every gradient along the way stays inside
//! span_R{X0, Y0} with X0 = [H, psi0], Y0 = i[H, X0].

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_inner, frobenius_norm, is_projector, projector_residual, unitarity_residual,
    CMatrix, CVector,
};
use crate::tol;

/// The fixed tangent directions X0 = [H, psi0], Y0 = i[H, X0] and their Gram
/// matrix under the Frobenius inner product.
#[derive(Clone, Debug)]
pub struct BaseDirections {
    pub x0: CMatrix,
    pub y0: CMatrix,
    /// [[<X0,X0>, <X0,Y0>], [<Y0,X0>, <Y0,Y0>]]
    pub gram: [[f64; 2]; 2],
}

/// Orthonormal basis of the Grover plane and the 2x2 compressions of H and
/// psi0 to it.
#[derive(Clone, Debug)]
pub struct GroverPlane {
    pub e1: CVector,
    pub e2: CVector,
    pub h2: CMatrix,
    pub p2: CMatrix,
}

/// Real coefficients of a tangent matrix in span_R{X0, Y0}, with the
/// Frobenius distance from the input to its reconstruction.
#[derive(Clone, Copy, Debug)]
pub struct TangentCoords {
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

/// Which stationary class a small-gradient point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StationaryClass {
    Interior,
    Min,
    Max,
}

/// Problem data: dimension, projector, initial state, and derived scalars.
#[derive(Clone, Debug)]
pub struct SearchInstance {
    n: usize,
    marked: Option<Vec<usize>>,
    rank_h: usize,
    h: CMatrix,
    psi0_ket: CVector,
    psi0: CMatrix,
    q0: f64,
    gamma0: f64,
    c0: f64,
    base: Option<BaseDirections>,
    plane: Option<GroverPlane>,
}

#[derive(Deserialize)]
struct InstanceFile {
    n: usize,
    #[serde(default)]
    marked: Option<Vec<usize>>,
    #[serde(default)]
    h: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    psi0: Option<Vec<[f64; 2]>>,
}

impl SearchInstance {
    /// Marked-set instance: H the 0/1 diagonal projector onto `marked`,
    /// |psi0> the uniform superposition, so q0 = M/N.
    pub fn from_marked(n: usize, marked: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut sorted: Vec<usize> = marked.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != marked.len() {
            return Err(Error::InvalidMarkedSet { n, reason: "duplicate indices".into() });
        }
        if sorted.iter().any(|&i| i >= n) {
            return Err(Error::InvalidMarkedSet { n, reason: "index out of range".into() });
        }
        let m = sorted.len();
        if m == 0 || m == n {
            return Err(Error::InvalidMarkedSet {
                n,
                reason: format!("degenerate marked set of size {m}: gamma0 = 0, plane undefined"),
            });
        }
        let h = CMatrix::from_fn(n, n, |r, c| {
            if r == c && sorted.binary_search(&r).is_ok() {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        });
        let ket = CVector::uniform(n);
        Self::build(n, Some(sorted), h, ket)
    }

    /// Explicit instance from a projector and a unit initial state. Degenerate
    /// data (q0 at {0,1}) is accepted but flagged; plane-dependent operations
    /// refuse it.
    pub fn from_parts(h: CMatrix, psi0_ket: CVector) -> Result<Self> {
        let n = psi0_ket.dim();
        if !h.is_square() || h.rows() != n {
            return Err(Error::ShapeMismatch { r1: h.rows(), c1: h.cols(), r2: n, c2: 1 });
        }
        if !is_projector(&h, tol::STRUCTURAL) {
            return Err(Error::NotProjector {
                residual: projector_residual(&h),
                tol: tol::STRUCTURAL,
            });
        }
        let norm = psi0_ket.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitKet { norm });
        }
        Self::build(n, None, h, psi0_ket)
    }

    /// Load either form from the JSON instance format.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        match (file.marked, file.h, file.psi0) {
            (Some(marked), None, None) => Self::from_marked(file.n, &marked),
            (None, Some(h), Some(psi0)) => {
                let h = CMatrix::from_re_im(
                    file.n,
                    file.n,
                    &h.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>(),
                )?;
                let ket = CVector::from_re_im(
                    &psi0.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>(),
                )?;
                if ket.dim() != file.n {
                    return Err(Error::ShapeMismatch { r1: ket.dim(), c1: 1, r2: file.n, c2: 1 });
                }
                Self::from_parts(h, ket)
            }
            _ => Err(Error::InvalidConfig(
                "instance file needs either \"marked\" or both \"h\" and \"psi0\"".into(),
            )),
        }
    }

    fn build(n: usize, marked: Option<Vec<usize>>, h: CMatrix, ket: CVector) -> Result<Self> {
        let hk = h.matvec(&ket);
        let q0 = ket.inner(&hk).re;
        let gamma0 = (q0.clamp(0.0, 1.0) * (1.0 - q0.clamp(0.0, 1.0))).max(0.0).sqrt();
        let psi0 = CMatrix::outer(&ket, &ket);
        let rank_h = h.trace().re.round() as usize;

        let (base, plane) = if gamma0 > tol::DEGENERATE_GAMMA {
            (Some(Self::make_base(&ket, &hk)), Some(Self::make_plane(&ket, &hk, q0, gamma0)?))
        } else {
            (None, None)
        };
        let c0 = base.as_ref().map(|b| b.gram[0][0].max(0.0).sqrt()).unwrap_or(0.0);

        Ok(SearchInstance {
            n,
            marked,
            rank_h,
            h,
            psi0_ket: ket,
            psi0,
            q0,
            gamma0,
            c0,
            base,
            plane,
        })
    }

    /// X0 and Y0 from ket outer products: with u = H|k>,
    /// X0 = u k^H - k u^H and Y0 = i (u k^H + k u^H - 2 u u^H).
    fn make_base(ket: &CVector, hk: &CVector) -> BaseDirections {
        let uk = CMatrix::outer(hk, ket);
        let ku = CMatrix::outer(ket, hk);
        let uu = CMatrix::outer(hk, hk);
        let x0 = &uk - &ku;
        let y0 = (&(&uk + &ku) - &uu.scale_re(2.0)).scale(Complex64::new(0.0, 1.0));
        let gram = [
            [
                frobenius_inner(&x0, &x0).expect("same shape"),
                frobenius_inner(&x0, &y0).expect("same shape"),
            ],
            [
                frobenius_inner(&y0, &x0).expect("same shape"),
                frobenius_inner(&y0, &y0).expect("same shape"),
            ],
        ];
        BaseDirections { x0, y0, gram }
    }

    fn make_plane(ket: &CVector, hk: &CVector, q0: f64, gamma0: f64) -> Result<GroverPlane> {
        // e2 = (H - q0 I)|psi0> / gamma0, orthogonal to e1 = |psi0> with
        // norm gamma0 by construction.
        let e1 = ket.clone();
        let e2 = hk
            .sub(&ket.scale(Complex64::new(q0, 0.0)))
            .scale(Complex64::new(1.0 / gamma0, 0.0));
        // H e1 = hk and H e2 = (H - q0 H)|psi0>/gamma0 = (1-q0)/gamma0 hk.
        let he = [hk.clone(), hk.scale(Complex64::new((1.0 - q0) / gamma0, 0.0))];
        let basis = [&e1, &e2];
        let mut h2 = CMatrix::zeros(2, 2);
        let mut p2 = CMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                h2[(r, c)] = basis[r].inner(&he[c]);
                p2[(r, c)] = basis[r].inner(ket) * ket.inner(basis[c]);
            }
        }
        Ok(GroverPlane { e1, e2, h2, p2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Marked indices for marked-set instances.
    pub fn marked(&self) -> Option<&[usize]> {
        self.marked.as_deref()
    }

    /// rank(H) = Tr H rounded; equals M for marked-set instances.
    pub fn rank_h(&self) -> usize {
        self.rank_h
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn psi0_ket(&self) -> &CVector {
        &self.psi0_ket
    }

    pub fn psi0(&self) -> &CMatrix {
        &self.psi0
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn is_degenerate(&self) -> bool {
        self.base.is_none()
    }

    pub fn base_directions(&self) -> Result<&BaseDirections> {
        self.base.as_ref().ok_or(Error::DegenerateInstance { q0: self.q0, gamma0: self.gamma0 })
    }

    pub fn grover_plane(&self) -> Result<&GroverPlane> {
        self.plane.as_ref().ok_or(Error::DegenerateInstance { q0: self.q0, gamma0: self.gamma0 })
    }

    /// H|v>, using the diagonal fast path for marked-set instances.
    pub fn apply_h(&self, v: &CVector) -> CVector {
        match &self.marked {
            Some(marked) => {
                let mut out = CVector::zeros(self.n);
                for &i in marked {
                    out[i] = v[i];
                }
                out
            }
            None => self.h.matvec(v),
        }
    }

    /// psi0|v> = <psi0|v> |psi0>.
    pub fn apply_psi0(&self, v: &CVector) -> CVector {
        let amp = self.psi0_ket.inner(v);
        self.psi0_ket.scale(amp)
    }

    /// H * M by rows (diagonal fast path when available).
    pub fn apply_h_left(&self, m: &CMatrix) -> CMatrix {
        match &self.marked {
            Some(marked) => {
                let mut out = CMatrix::zeros(m.rows(), m.cols());
                for &r in marked {
                    for c in 0..m.cols() {
                        out[(r, c)] = m[(r, c)];
                    }
                }
                out
            }
            None => &self.h * m,
        }
    }

    /// psi0 * M = |k> (k^H M) as a rank-one update.
    pub fn apply_psi0_left(&self, m: &CMatrix) -> CMatrix {
        let k = &self.psi0_ket;
        let mut row = vec![Complex64::ZERO; m.cols()];
        for (c, item) in row.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for r in 0..m.rows() {
                acc += k[r].conj() * m[(r, c)];
            }
            *item = acc;
        }
        CMatrix::from_fn(m.rows(), m.cols(), |r, c| k[r] * row[c])
    }

    fn check_unitary(&self, u: &CMatrix) -> Result<()> {
        if u.rows() != self.n || u.cols() != self.n {
            return Err(Error::ShapeMismatch { r1: u.rows(), c1: u.cols(), r2: self.n, c2: self.n });
        }
        let res = unitarity_residual(u);
        if res > tol::STRUCTURAL * (self.n as f64).sqrt().max(1.0) {
            return Err(Error::NotUnitary { residual: res, tol: tol::STRUCTURAL });
        }
        Ok(())
    }

    /// f(U) = Tr(H U psi0 U^H) = <U psi0| H |U psi0>, clamped to [0, 1].
    pub fn objective(&self, u: &CMatrix) -> Result<f64> {
        self.check_unitary(u)?;
        Ok(self.objective_of_ket(&u.matvec(&self.psi0_ket)))
    }

    /// Objective of an explicit state ket (assumed unit norm).
    pub fn objective_of_ket(&self, ket: &CVector) -> f64 {
        let q = ket.inner(&self.apply_h(ket)).re;
        debug_assert!(q > -tol::OBJECTIVE_SLACK && q < 1.0 + tol::OBJECTIVE_SLACK);
        q.clamp(0.0, 1.0)
    }

    /// Gradient generator [H, psi_U]; skew-Hermitian with Frobenius norm
    /// sqrt(2 q (1-q)).
    pub fn gradient(&self, u: &CMatrix) -> Result<CMatrix> {
        self.check_unitary(u)?;
        Ok(self.gradient_of_ket(&u.matvec(&self.psi0_ket)))
    }

    /// [H, |k><k|] for an explicit state ket.
    pub fn gradient_of_ket(&self, ket: &CVector) -> CMatrix {
        let hk = self.apply_h(ket);
        &CMatrix::outer(&hk, ket) - &CMatrix::outer(ket, &hk)
    }

    /// Least-squares coefficients of a skew-Hermitian z in span_R{X0, Y0},
    /// solved through the 2x2 Gram system.
    pub fn tangent_coords(&self, z: &CMatrix) -> Result<TangentCoords> {
        let base = self.base_directions()?;
        let res = crate::linalg::skew_residual(z);
        let gate = tol::SKEW_GATE * 1f64.max(frobenius_norm(z));
        if res > gate {
            return Err(Error::NotSkewHermitian { residual: res, tol: gate });
        }
        let bx = frobenius_inner(&base.x0, z)?;
        let by = frobenius_inner(&base.y0, z)?;
        let g = &base.gram;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det.abs() <= 1e-14 * (g[0][0] * g[1][1]).abs().max(1e-300) {
            return Err(Error::DegenerateGram);
        }
        let x = (g[1][1] * bx - g[0][1] * by) / det;
        let y = (g[0][0] * by - g[1][0] * bx) / det;
        let recon = &base.x0.scale_re(x) + &base.y0.scale_re(y);
        let residual = frobenius_norm(&(z - &recon));
        Ok(TangentCoords { x, y, residual })
    }

    /// Off-plane mass of a state ket: || v - e1<e1|v> - e2<e2|v> ||.
    pub fn plane_residual_of_ket(&self, ket: &CVector) -> Result<f64> {
        let plane = self.grover_plane()?;
        let a = plane.e1.inner(ket);
        let b = plane.e2.inner(ket);
        let proj = plane.e1.scale(a).add(&plane.e2.scale(b));
        Ok(ket.sub(&proj).norm())
    }

    /// Labels a point as interior or as the global min/max: a gradient norm
    /// below `tol` forces f within tol^2 (+ roundoff) of {0, 1}.
    pub fn classify_stationary(&self, u: &CMatrix, tol_grad: f64) -> Result<StationaryClass> {
        let g = self.gradient(u)?;
        let gnorm = frobenius_norm(&g);
        if gnorm > tol_grad {
            return Ok(StationaryClass::Interior);
        }
        let f = self.objective(u)?;
        let delta = tol_grad * tol_grad + 1e-12;
        if f <= delta {
            Ok(StationaryClass::Min)
        } else if 1.0 - f <= delta {
            Ok(StationaryClass::Max)
        } else {
            Err(Error::StationarityViolation { f, grad_norm: gnorm, tol: tol_grad })
        }
    }
}
