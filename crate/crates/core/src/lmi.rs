//! Block matrices of the delay-dependent stability LMIs.
//!
//! Every matrix acts on the augmented vector
//!
//! ```text
//! ζ₀(k) = col{x(k), x(k−h₁), x(k−h), x(k−h₂), ν₁, ν₂, ν₃, ν₄, ν₅, ν₆}   (10n entries)
//! ```
//!
//! and is materialized densely; `e_i` picks block `i` (1-based) of `ζ₀`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{asymmetry, block_diag, symmetrize, vstack};

/// Number of n-blocks in the augmented vector.
pub const BLOCKS: usize = 10;

/// `x(k+1) = A x(k) + A_d x(k − h(k))` with `h₁ ≤ h(k) ≤ h₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem {
    a: DMatrix<f64>,
    ad: DMatrix<f64>,
    h1: usize,
    h2: usize,
}

impl DelaySystem {
    pub fn new(a: DMatrix<f64>, ad: DMatrix<f64>, h1: usize, h2: usize) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension must be >= 1".into()));
        }
        for (what, m) in [("A", &a), ("Ad", &ad)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: if m.nrows() != n { m.nrows() } else { m.ncols() },
                });
            }
        }
        if h1 < 1 || h1 > h2 {
            return Err(Error::InvalidDelayBounds {
                h1: h1 as i64,
                h2: h2 as i64,
            });
        }
        Ok(Self { a, ad, h1, h2 })
    }

    /// Same matrices, different delay interval.
    pub fn with_bounds(&self, h1: usize, h2: usize) -> Result<Self> {
        Self::new(self.a.clone(), self.ad.clone(), h1, h2)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn ad(&self) -> &DMatrix<f64> {
        &self.ad
    }

    pub fn h1(&self) -> usize {
        self.h1
    }

    pub fn h2(&self) -> usize {
        self.h2
    }

    /// Interval width `h₂ − h₁`.
    pub fn h12(&self) -> usize {
        self.h2 - self.h1
    }

    fn check_delay(&self, h: usize) -> Result<()> {
        if h < self.h1 || h > self.h2 {
            return Err(Error::DelayOutOfRange {
                h: h as i64,
                h1: self.h1,
                h2: self.h2,
            });
        }
        Ok(())
    }
}

/// Block row selectors `e_i = e_i* ⊗ I_n`, each `n × 10n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorSet {
    n: usize,
    e: Vec<DMatrix<f64>>,
}

impl SelectorSet {
    pub fn new(n: usize) -> Self {
        let e = (0..BLOCKS)
            .map(|i| {
                let mut m = DMatrix::zeros(n, BLOCKS * n);
                m.view_mut((0, i * n), (n, n)).fill_with_identity();
                m
            })
            .collect();
        Self { n, e }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Selector for block `i`, 1-based.
    pub fn e(&self, i: usize) -> &DMatrix<f64> {
        &self.e[i - 1]
    }

    pub fn zero(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.n, BLOCKS * self.n)
    }
}

/// `T(h) = h + 1`.
pub fn t_coeff(h: i64) -> f64 {
    (h + 1) as f64
}

/// `γ(h) = T(h)T(h+1)/2`; the formula gives `γ(−1) = 0`, used when `h₁ = h₂`.
pub fn gamma_coeff(h: i64) -> f64 {
    debug_assert!(h >= -1);
    t_coeff(h) * t_coeff(h + 1) / 2.0
}

/// `(T(h), γ(h))` for `h ≥ 0`.
pub fn interval_coeffs(h: i64) -> Result<(i64, i64)> {
    if h < 0 {
        return Err(Error::InvalidArgument(format!(
            "interval coefficient for negative h = {h}"
        )));
    }
    Ok((h + 1, (h + 1) * (h + 2) / 2))
}

/// `(c₁, c₂, c₃)` scaling the refined terms on the `[k−h₁, k]` window.
pub fn scalar_coeffs(h1: i64) -> Result<(f64, f64, f64)> {
    if h1 < 1 {
        return Err(Error::InvalidArgument(format!("h1 must be >= 1, got {h1}")));
    }
    if h1 == 1 {
        return Ok((1.0, 1.0, 1.0));
    }
    let h = h1 as f64;
    let c1 = (h + 1.0) / (h - 1.0);
    let c2 = (h + 1.0) * (h + 2.0).powi(2) / ((h - 1.0) * (h * h + 11.0));
    let c3 = (h + 2.0) / (h - 1.0);
    Ok((c1, c2, c3))
}

/// Difference operators `Γ₁ … Γ₆` over the augmented vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gammas {
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub g3: DMatrix<f64>,
    pub g4: DMatrix<f64>,
    pub g5: DMatrix<f64>,
    pub g6: DMatrix<f64>,
}

/// Rows of `Γ₁,Γ₂,Γ₃`: `e_a − e_b`, `e_a + e_b − 2e_c`, `e_a − e_b + 6e_c − 6e_d`.
fn three_term(sel: &SelectorSet, a: usize, b: usize, c: usize, d: usize) -> DMatrix<f64> {
    let (ea, eb, ec, ed) = (sel.e(a), sel.e(b), sel.e(c), sel.e(d));
    vstack(&[ea - eb, ea + eb - ec * 2.0, ea - eb + ec * 6.0 - ed * 6.0])
}

pub fn build_gammas(sel: &SelectorSet) -> Gammas {
    let e = |i| sel.e(i);
    Gammas {
        g1: three_term(sel, 1, 2, 5, 8),
        g2: three_term(sel, 2, 3, 6, 9),
        g3: three_term(sel, 3, 4, 7, 10),
        g4: vstack(&[e(2) - e(5), e(2) - e(5) * 4.0 + e(8) * 3.0]),
        g5: vstack(&[e(3) - e(6), e(4) - e(7)]),
        g6: vstack(&[e(3) - e(6) * 4.0 + e(9) * 3.0, e(4) - e(7) * 4.0 + e(10) * 3.0]),
    }
}

/// `𝒜 = (A − I)e₁ + A_d e₃`, so that `Δx(k) = 𝒜ζ₀(k)`.
pub fn increment_map(sys: &DelaySystem, sel: &SelectorSet) -> DMatrix<f64> {
    let n = sys.n();
    (sys.a() - DMatrix::<f64>::identity(n, n)) * sel.e(1) + sys.ad() * sel.e(3)
}

/// `Ω(h)`, `Ω₁`, `Ω₂` with `x̃(k) = (Ω(h) − Ω₂)ζ₀(k)` and `x̃(k+1) = (Ω(h) − Ω₁)ζ₀(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Omegas {
    pub omega: DMatrix<f64>,
    pub omega1: DMatrix<f64>,
    pub omega2: DMatrix<f64>,
}

pub fn build_omegas(sys: &DelaySystem, h: usize, sel: &SelectorSet) -> Result<Omegas> {
    sys.check_delay(h)?;
    let (h, h1, h2) = (h as i64, sys.h1() as i64, sys.h2() as i64);
    let e = |i| sel.e(i);
    let t1 = t_coeff(h1);
    let omega = vstack(&[
        e(1).clone(),
        e(5) * t1,
        e(6) * t_coeff(h - h1) + e(7) * t_coeff(h2 - h),
        e(8) * gamma_coeff(h1),
    ]);
    let omega1 = vstack(&[-increment_map(sys, sel), e(2).clone(), e(3) + e(4), e(5) * t1]);
    let omega2 = vstack(&[sel.zero(), e(1).clone(), e(2) + e(3), e(1) * t1]);
    Ok(Omegas { omega, omega1, omega2 })
}

/// Shape of the coupling matrix `X` in the reciprocally convex bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XStructure {
    /// Unrestricted `3n × 3n` matrix.
    #[serde(rename = "full")]
    Full,
    /// `X = diag{X₁, X₂, X₃}`.
    #[serde(rename = "blockdiag")]
    BlockDiagonal,
}

impl XStructure {
    pub fn as_str(self) -> &'static str {
        match self {
            XStructure::Full => "full",
            XStructure::BlockDiagonal => "blockdiag",
        }
    }
}

impl std::str::FromStr for XStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(XStructure::Full),
            "blockdiag" | "block-diagonal" => Ok(XStructure::BlockDiagonal),
            other => Err(Error::InvalidArgument(format!(
                "unknown X structure '{other}' (expected full or blockdiag)"
            ))),
        }
    }
}

impl std::fmt::Display for XStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decision matrices of the Lyapunov–Krasovskii functional.
#[derive(Debug, Clone, PartialEq)]
pub struct LkfVariables {
    pub p: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub x_structure: XStructure,
}

impl LkfVariables {
    pub const SYMMETRY_TOL: f64 = 1e-10;

    /// Symmetric `n × n` blocks in storage order.
    pub const SMALL_NAMES: [&'static str; 6] = ["Q1", "Q2", "R1", "R2", "S1", "S2"];

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: DMatrix<f64>,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        r1: DMatrix<f64>,
        r2: DMatrix<f64>,
        s1: DMatrix<f64>,
        s2: DMatrix<f64>,
        x: DMatrix<f64>,
        x_structure: XStructure,
    ) -> Result<Self> {
        let vars = Self {
            p,
            q1,
            q2,
            r1,
            r2,
            s1,
            s2,
            x,
            x_structure,
        };
        vars.validate()?;
        Ok(vars)
    }

    pub fn zeros(n: usize, x_structure: XStructure) -> Self {
        let z = || DMatrix::zeros(n, n);
        Self {
            p: DMatrix::zeros(4 * n, 4 * n),
            q1: z(),
            q2: z(),
            r1: z(),
            r2: z(),
            s1: z(),
            s2: z(),
            x: DMatrix::zeros(3 * n, 3 * n),
            x_structure,
        }
    }

    pub fn n(&self) -> usize {
        self.q1.nrows()
    }

    pub fn small_blocks(&self) -> [&DMatrix<f64>; 6] {
        [&self.q1, &self.q2, &self.r1, &self.r2, &self.s1, &self.s2]
    }

    fn small_blocks_mut(&mut self) -> [&mut DMatrix<f64>; 6] {
        [
            &mut self.q1,
            &mut self.q2,
            &mut self.r1,
            &mut self.r2,
            &mut self.s1,
            &mut self.s2,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidArgument("empty LKF variables".into()));
        }
        let square = |what, m: &DMatrix<f64>, size: usize| {
            if m.nrows() != size || m.ncols() != size {
                Err(Error::DimensionMismatch {
                    what,
                    expected: size,
                    found: if m.nrows() != size { m.nrows() } else { m.ncols() },
                })
            } else {
                Ok(())
            }
        };
        square("P", &self.p, 4 * n)?;
        for (name, m) in Self::SMALL_NAMES.iter().zip(self.small_blocks()) {
            square(name, m, n)?;
        }
        square("X", &self.x, 3 * n)?;
        if asymmetry(&self.p) > Self::SYMMETRY_TOL {
            return Err(Error::NotSymmetric("P"));
        }
        for (name, m) in Self::SMALL_NAMES.iter().zip(self.small_blocks()) {
            if asymmetry(m) > Self::SYMMETRY_TOL {
                return Err(Error::NotSymmetric(name));
            }
        }
        if self.x_structure == XStructure::BlockDiagonal {
            for bi in 0..3 {
                for bj in 0..3 {
                    if bi != bj && self.x.view((bi * n, bj * n), (n, n)).iter().any(|v| *v != 0.0) {
                        return Err(Error::InvalidArgument(
                            "block-diagonal X has nonzero off-diagonal blocks".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of free scalars: symmetric entries of `P, Q_i, R_i, S_i` plus `X`.
    pub fn decision_count(n: usize, x_structure: XStructure) -> usize {
        let sym = |k: usize| k * (k + 1) / 2;
        let x = match x_structure {
            XStructure::Full => 9 * n * n,
            XStructure::BlockDiagonal => 3 * n * n,
        };
        sym(4 * n) + 6 * sym(n) + x
    }

    /// Inverse of [`LkfVariables::to_decision_vector`].
    pub fn from_decision_vector(n: usize, x_structure: XStructure, y: &[f64]) -> Result<Self> {
        let expected = Self::decision_count(n, x_structure);
        if y.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "decision vector",
                expected,
                found: y.len(),
            });
        }
        let mut vars = Self::zeros(n, x_structure);
        let mut it = y.iter().copied();
        fill_symmetric(&mut vars.p, &mut it);
        for m in vars.small_blocks_mut() {
            fill_symmetric(m, &mut it);
        }
        match x_structure {
            XStructure::Full => {
                for i in 0..3 * n {
                    for j in 0..3 * n {
                        vars.x[(i, j)] = it.next().unwrap();
                    }
                }
            }
            XStructure::BlockDiagonal => {
                for b in 0..3 {
                    for i in 0..n {
                        for j in 0..n {
                            vars.x[(b * n + i, b * n + j)] = it.next().unwrap();
                        }
                    }
                }
            }
        }
        Ok(vars)
    }

    /// Upper triangles (row-major) of `P, Q₁, Q₂, R₁, R₂, S₁, S₂`, then `X`
    /// row-major (full) or its three diagonal blocks row-major.
    pub fn to_decision_vector(&self) -> Vec<f64> {
        let n = self.n();
        let mut y = Vec::with_capacity(Self::decision_count(n, self.x_structure));
        push_upper(&self.p, &mut y);
        for m in self.small_blocks() {
            push_upper(m, &mut y);
        }
        match self.x_structure {
            XStructure::Full => {
                for i in 0..3 * n {
                    for j in 0..3 * n {
                        y.push(self.x[(i, j)]);
                    }
                }
            }
            XStructure::BlockDiagonal => {
                for b in 0..3 {
                    for i in 0..n {
                        for j in 0..n {
                            y.push(self.x[(b * n + i, b * n + j)]);
                        }
                    }
                }
            }
        }
        y
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.p *= t;
        for m in out.small_blocks_mut() {
            *m *= t;
        }
        out.x *= t;
        out
    }

    /// `tr P + Σ tr(Q_i + R_i + S_i)`.
    pub fn trace_sum(&self) -> f64 {
        self.p.trace() + self.small_blocks().iter().map(|m| m.trace()).sum::<f64>()
    }
}

fn fill_symmetric(m: &mut DMatrix<f64>, it: &mut impl Iterator<Item = f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let v = it.next().unwrap();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn push_upper(m: &DMatrix<f64>, y: &mut Vec<f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            y.push(m[(i, j)]);
        }
    }
}

/// `R̃₂ = diag{R₂, 3R₂, 5R₂}`.
pub fn r2_tilde(r2: &DMatrix<f64>) -> DMatrix<f64> {
    block_diag(&[r2, &(r2 * 3.0), &(r2 * 5.0)])
}

/// The coupled block `[R̃₂ X; Xᵀ R̃₂]`, required to be positive semidefinite.
pub fn assemble_rcc(vars: &LkfVariables) -> Result<DMatrix<f64>> {
    vars.validate()?;
    let n3 = 3 * vars.n();
    let rt = r2_tilde(&vars.r2);
    let mut m = DMatrix::zeros(2 * n3, 2 * n3);
    m.view_mut((0, 0), (n3, n3)).copy_from(&rt);
    m.view_mut((n3, n3), (n3, n3)).copy_from(&rt);
    m.view_mut((0, n3), (n3, n3)).copy_from(&vars.x);
    m.view_mut((n3, 0), (n3, n3)).copy_from(&vars.x.transpose());
    Ok(m)
}

/// `Mᵀ W M`.
fn congruence(m: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    m.transpose() * w * m
}

/// `Π(h)` for `h ∈ [h₁, h₂]`; symmetrized before return.
pub fn assemble_pi(sys: &DelaySystem, vars: &LkfVariables, h: usize) -> Result<DMatrix<f64>> {
    vars.validate()?;
    let n = sys.n();
    if vars.n() != n {
        return Err(Error::DimensionMismatch {
            what: "LKF variables",
            expected: n,
            found: vars.n(),
        });
    }
    let sel = SelectorSet::new(n);
    let om = build_omegas(sys, h, &sel)?;
    let gm = build_gammas(&sel);
    let incr = increment_map(sys, &sel);
    let (h1, h12) = (sys.h1() as i64, sys.h12() as i64);
    let (c1, c2, c3) = scalar_coeffs(h1)?;
    let e = |i| sel.e(i);

    // Π₀
    let diff = &om.omega2 - &om.omega1;
    let cross = om.omega.transpose() * &vars.p * &diff;
    let pi0 = &cross + cross.transpose() + congruence(&om.omega1, &vars.p) - congruence(&om.omega2, &vars.p);

    // Π₁
    let pi1 = congruence(e(1), &vars.q1) - congruence(e(2), &vars.q1) + congruence(e(2), &vars.q2)
        - congruence(e(4), &vars.q2);

    // Π₂
    let weight = &vars.r1 * (h1 * h1) as f64
        + &vars.r2 * (h12 * h12) as f64
        + &vars.s1 * gamma_coeff(h1 - 1)
        + &vars.s2 * gamma_coeff(h12 - 1);
    let pi2 = congruence(&incr, &weight);

    // Π₃
    let r1_tilde = block_diag(&[&vars.r1, &(&vars.r1 * (3.0 * c1)), &(&vars.r1 * (5.0 * c2))]);
    let pi3 = congruence(&gm.g1, &r1_tilde);

    // Π₄
    let stacked = vstack(&[gm.g2.clone(), gm.g3.clone()]);
    let pi4 = congruence(&stacked, &assemble_rcc(vars)?);

    // Π₅
    let s1_hat = block_diag(&[&vars.s1, &(&vars.s1 * (2.0 * c3))]);
    let pi5 = congruence(&gm.g4, &s1_hat) * (2.0 * (h1 + 1) as f64 / h1 as f64);

    // Π₆
    let s2_hat = block_diag(&[&vars.s2, &vars.s2]);
    let pi6 = congruence(&gm.g5, &s2_hat) * 2.0 + congruence(&gm.g6, &s2_hat) * 4.0;

    let pi = pi0 + pi1 + pi2 - pi3 - pi4 - pi5 - pi6;
    Ok(symmetrize(&pi))
}

/// `Π(h₁)`, `Π(h₂)` and the coupled RCC block for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledLmi {
    pub pi_h1: DMatrix<f64>,
    pub pi_h2: DMatrix<f64>,
    pub rcc_block: DMatrix<f64>,
}

pub fn assemble(sys: &DelaySystem, vars: &LkfVariables) -> Result<AssembledLmi> {
    Ok(AssembledLmi {
        pi_h1: assemble_pi(sys, vars, sys.h1())?,
        pi_h2: assemble_pi(sys, vars, sys.h2())?,
        rcc_block: symmetrize(&assemble_rcc(vars)?),
    })
}

/// `diag{R₁/α, R₂/(1−α)} − [R₁ X; Xᵀ R₂]`, positive semidefinite for
/// `α ∈ (0, 1)` whenever the coupled block is.
pub fn reciprocal_convexity_gap(
    r1: &DMatrix<f64>,
    r2: &DMatrix<f64>,
    x: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1)")));
    }
    let (n, m) = (r1.nrows(), r2.nrows());
    if x.nrows() != n || x.ncols() != m {
        return Err(Error::DimensionMismatch {
            what: "X rows",
            expected: n,
            found: x.nrows(),
        });
    }
    let mut d = DMatrix::zeros(n + m, n + m);
    d.view_mut((0, 0), (n, n)).copy_from(&(r1 * (1.0 / alpha - 1.0)));
    d.view_mut((n, n), (m, m))
        .copy_from(&(r2 * (1.0 / (1.0 - alpha) - 1.0)));
    d.view_mut((0, n), (n, m)).copy_from(&(-x));
    d.view_mut((n, 0), (m, n)).copy_from(&(-x.transpose()));
    Ok(d)
}
