//! Machine-checkable candidate product retractions and the P1-P3 tester.
//!
//! A candidate is an ordered list of factors e^{i c_j G_j} with G_j either H
//! or psi0 and c_j a coefficient expression over {t, x, y, A, R, pi} with
//! +, -, *, / and parentheses. Candidates arrive as JSON
//! `{"factors": [{"gen": "H"|"psi0", "coef": "<expr>"}, ...]}` and are tested
//! for:
//!
//!   P1  structure: nonempty product of the two allowed factor types with
//!       finite real coefficients,
//!   P2  gamma(0; x, y) = I exactly,
//!   P3  the finite-difference velocity test
//!       || (gamma(h; x, y) - I)/h - (x X0 + y Y0) ||_F <= eps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, CMatrix};
use crate::problem::SearchInstance;
use crate::retraction::product5_params;

/// Generator tag of one product factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    H,
    #[serde(rename = "psi0")]
    Psi0,
}

/// Variables available to coefficient expressions.
#[derive(Clone, Copy, Debug)]
pub struct CoefEnv {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub big_a: f64,
    pub big_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    T,
    X,
    Y,
    BigA,
    BigR,
    Pi,
}

impl Expr {
    fn eval(&self, env: &CoefEnv) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => env.t,
            Expr::Var(Var::X) => env.x,
            Expr::Var(Var::Y) => env.y,
            Expr::Var(Var::BigA) => env.big_a,
            Expr::Var(Var::BigR) => env.big_r,
            Expr::Var(Var::Pi) => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(Error::Expr("division by zero".into()));
                }
                a.eval(env)? / d
            }
        })
    }
}

/// A coefficient expression, kept with its source text for serialization.
#[derive(Clone, Debug)]
pub struct CoefExpr {
    src: String,
    ast: Expr,
}

impl CoefExpr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { bytes: src.as_bytes(), pos: 0 };
        let ast = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(Error::Expr(format!("trailing input at byte {} in {src:?}", p.pos)));
        }
        Ok(CoefExpr { src: src.to_string(), ast })
    }

    pub fn eval(&self, env: &CoefEnv) -> Result<f64> {
        let v = self.ast.eval(env)?;
        if !v.is_finite() {
            return Err(Error::Expr(format!("non-finite value from {:?}", self.src)));
        }
        Ok(v)
    }

    pub fn src(&self) -> &str {
        &self.src
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' {
                Expr::Add(Box::new(acc), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == b'*' {
                Expr::Mul(Box::new(acc), Box::new(rhs))
            } else {
                Expr::Div(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Expr("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Expr(format!("bad number literal {text:?}")))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        let var = match name {
            "t" => Var::T,
            "x" => Var::X,
            "y" => Var::Y,
            "A" => Var::BigA,
            "R" => Var::BigR,
            "pi" => Var::Pi,
            _ => return Err(Error::Expr(format!("unknown symbol {name:?}"))),
        };
        Ok(Expr::Var(var))
    }
}

/// One factor e^{i coef * gen} of a candidate product.
#[derive(Clone, Debug)]
pub struct Factor {
    pub gen: Generator,
    pub coef: CoefExpr,
}

/// An ordered product of H / psi0 exponential factors.
#[derive(Clone, Debug)]
pub struct CandidateProduct {
    pub factors: Vec<Factor>,
}

#[derive(Serialize, Deserialize)]
struct FactorFile {
    gen: Generator,
    coef: String,
}

#[derive(Serialize, Deserialize)]
struct CandidateFile {
    factors: Vec<FactorFile>,
}

impl CandidateProduct {
    pub fn new(factors: Vec<(Generator, &str)>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|(gen, src)| Ok(Factor { gen, coef: CoefExpr::parse(src)? }))
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return Err(Error::MalformedCandidate("empty factor list".into()));
        }
        Ok(CandidateProduct { factors })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CandidateFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedCandidate(e.to_string()))?;
        if file.factors.is_empty() {
            return Err(Error::MalformedCandidate("empty factor list".into()));
        }
        let factors = file
            .factors
            .into_iter()
            .map(|f| Ok(Factor { gen: f.gen, coef: CoefExpr::parse(&f.coef)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateProduct { factors })
    }

    pub fn to_json_string(&self) -> String {
        let file = CandidateFile {
            factors: self
                .factors
                .iter()
                .map(|f| FactorFile { gen: f.gen, coef: f.coef.src().to_string() })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    /// The 5-factor product of the verified retraction.
    pub fn builtin_product5() -> Self {
        Self::new(vec![
            (Generator::H, "A + pi/2"),
            (Generator::Psi0, "-t*R/2"),
            (Generator::H, "-pi"),
            (Generator::Psi0, "t*R/2"),
            (Generator::H, "pi/2 - A"),
        ])
        .expect("builtin parses")
    }

    /// Negative control: a single H factor cannot produce x X0 + y Y0.
    pub fn negative_single_factor() -> Self {
        Self::new(vec![(Generator::H, "t*x")]).expect("builtin parses")
    }

    /// Negative control: b1 and b2 swapped flips the velocity sign, so P2
    /// still holds but P3 fails.
    pub fn negative_swapped() -> Self {
        Self::new(vec![
            (Generator::H, "A + pi/2"),
            (Generator::Psi0, "t*R/2"),
            (Generator::H, "-pi"),
            (Generator::Psi0, "-t*R/2"),
            (Generator::H, "pi/2 - A"),
        ])
        .expect("builtin parses")
    }

    /// gamma(t; x, y): evaluate every coefficient and multiply the factors
    /// (leftmost factor applied last).
    pub fn evaluate(&self, inst: &SearchInstance, t: f64, x: f64, y: f64) -> Result<CMatrix> {
        let p = product5_params(x, y);
        let env = CoefEnv { t, x, y, big_a: p.big_a, big_r: p.big_r };
        let mut m = CMatrix::identity(inst.n());
        for f in self.factors.iter().rev() {
            let theta = f.coef.eval(&env)?;
            let phase = Complex64::new(0.0, theta).exp() - Complex64::ONE;
            m = match f.gen {
                Generator::H => &m + &inst.apply_h_left(&m).scale(phase),
                Generator::Psi0 => &m + &inst.apply_psi0_left(&m).scale(phase),
            };
        }
        Ok(m)
    }
}

/// Per-seed outcome of the P1-P3 tests.
#[derive(Clone, Debug, Serialize)]
pub struct SeedRecord {
    pub x: f64,
    pub y: f64,
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
    /// Finite-difference velocity error of P3.
    pub err: f64,
}

/// Full tester report; `pass` means every seed passed all three properties.
#[derive(Clone, Debug, Serialize)]
pub struct VelocityReport {
    pub candidate: String,
    pub h: f64,
    pub eps: f64,
    pub records: Vec<SeedRecord>,
    pub pass: bool,
}

/// Run the P1/P2/P3 checks for each seed (x, y).
///
/// P2 compares gamma(0) to the identity at 1e-12; P3 runs the displayed
/// finite-difference inequality at step h and tolerance eps.
pub fn check_velocity(
    inst: &SearchInstance,
    cand: &CandidateProduct,
    seeds: &[(f64, f64)],
    h: f64,
    eps: f64,
) -> Result<VelocityReport> {
    if !(h > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("need h > 0 and eps > 0, got h={h} eps={eps}")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seed set must be nonempty".into()));
    }
    if cand.factors.is_empty() {
        return Err(Error::MalformedCandidate("empty factor list".into()));
    }
    let base = inst.base_directions()?;
    let identity = CMatrix::identity(inst.n());
    let mut records = Vec::with_capacity(seeds.len());
    for &(x, y) in seeds {
        // P1: the product structure is guaranteed by the type; the remaining
        // structural requirement is that every coefficient evaluates to a
        // finite real at this seed.
        let mut p1 = true;
        let mut p2 = false;
        let mut p3 = false;
        let mut err = f64::NAN;
        match (cand.evaluate(inst, 0.0, x, y), cand.evaluate(inst, h, x, y)) {
            (Ok(at_zero), Ok(at_h)) => {
                p2 = frobenius_norm(&(&at_zero - &identity)) <= 1e-12;
                let fd = (&at_h - &identity).scale_re(1.0 / h);
                let target = &base.x0.scale_re(x) + &base.y0.scale_re(y);
                err = frobenius_norm(&(&fd - &target));
                p3 = err <= eps;
            }
            _ => p1 = false,
        }
        records.push(SeedRecord { x, y, p1, p2, p3, err });
    }
    let pass = records.iter().all(|r| r.p1 && r.p2 && r.p3);
    Ok(VelocityReport { candidate: cand.to_json_string(), h, eps, records, pass })
}
