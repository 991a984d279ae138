//! Discrete Jensen summation inequalities and their refinements.
//!
//! For a sequence `u: Z[a, b] -> R^n` of length `ℓ = b - a + 1` and `R ≻ 0`:
//!
//! ```text
//! J₁(u) = Σ uₖᵀRuₖ − (1/ℓ) υ₁ᵀRυ₁                         ≥ 0
//! J₂(u) = ΣₖΣ_{s≤k} uₛᵀRuₛ − 2/(ℓ(ℓ+1)) υ₂ᵀRυ₂            ≥ 0
//! ```
//!
//! where `υ₁, υ₂, υ₃` are the single, double and triple partial sums. The
//! refined bounds give strictly positive lower bounds on both gaps in terms
//! of the combinations `ζ₁, ζ₂, ζ₄` of those partial sums.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{asymmetry, min_eigenvalue, quad_form, Accumulator, VectorAccumulator, COMPENSATION_THRESHOLD};

/// A finite vector sequence indexed over `start ..= end`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSequence {
    start: i64,
    values: Vec<DVector<f64>>,
}

impl FiniteSequence {
    pub fn new(start: i64, values: Vec<DVector<f64>>) -> Result<Self> {
        let first = values.first().ok_or(Error::EmptySequence)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "sequence vectors must have dimension >= 1".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "sequence element",
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(Self { start, values })
    }

    /// Builds a sequence from plain rows, one row per index.
    pub fn from_rows(start: i64, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(start, rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    fn compensated(&self) -> bool {
        self.len() > COMPENSATION_THRESHOLD
    }
}

/// Symmetric positive definite weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPositiveMatrix(DMatrix<f64>);

impl SymmetricPositiveMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                what: "weight matrix columns",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("weight matrix must be non-empty".into()));
        }
        if asymmetry(&m) > Self::SYMMETRY_TOL {
            return Err(Error::NotSymmetric("R"));
        }
        let lmin = min_eigenvalue(&m);
        if lmin <= Self::POSITIVITY_TOL {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    fn form(&self, v: &DVector<f64>) -> f64 {
        quad_form(v, &self.0)
    }
}

/// Partial sums of a sequence and the derived combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateVectors {
    /// `Σ_k u_k`
    pub v1: DVector<f64>,
    /// `Σ_k Σ_{s≤k} u_s`
    pub v2: DVector<f64>,
    /// `Σ_k Σ_{s≤k} Σ_{i≤s} u_i`
    pub v3: DVector<f64>,
    pub zeta1: DVector<f64>,
    pub zeta2: DVector<f64>,
    pub zeta4: DVector<f64>,
}

pub fn aggregate(u: &FiniteSequence) -> AggregateVectors {
    let n = u.dim();
    let comp = u.compensated();
    let mut first = VectorAccumulator::new(n, comp);
    let mut second = VectorAccumulator::new(n, comp);
    let mut v2 = VectorAccumulator::new(n, comp);
    let mut v3 = VectorAccumulator::new(n, comp);
    for x in u.values() {
        first.add(x);
        let p1 = first.value();
        v2.add(&p1);
        second.add(&p1);
        v3.add(&second.value());
    }
    let (v1, v2, v3) = (first.value(), v2.value(), v3.value());

    let l = u.len() as f64;
    let zeta1 = &v1 - &v2 * (2.0 / (l + 1.0));
    let zeta2 = &v1 - &v2 * (6.0 / (l + 1.0)) + &v3 * (12.0 / ((l + 1.0) * (l + 2.0)));
    let zeta4 = &v2 - &v3 * (3.0 / (l + 2.0));
    AggregateVectors {
        v1,
        v2,
        v3,
        zeta1,
        zeta2,
        zeta4,
    }
}

fn check_dims(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<()> {
    if u.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            what: "weight matrix R (sequence dimension is the expected value)",
            expected: u.dim(),
            found: r.dim(),
        });
    }
    Ok(())
}

/// `Σ_k u_kᵀ R u_k`.
pub fn single_sum_energy(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let mut acc = Accumulator::new(u.compensated());
    for x in u.values() {
        acc.add(r.form(x));
    }
    Ok(acc.value())
}

/// `Σ_k Σ_{s≤k} u_sᵀ R u_s`; term `s` appears `b − s + 1` times.
pub fn double_sum_energy(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let len = u.len();
    let mut acc = Accumulator::new(u.compensated());
    for (i, x) in u.values().iter().enumerate() {
        acc.add((len - i) as f64 * r.form(x));
    }
    Ok(acc.value())
}

/// Right-hand side of the single Jensen inequality, `(1/ℓ) υ₁ᵀRυ₁`.
pub fn jensen_single_rhs(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let agg = aggregate(u);
    Ok(r.form(&agg.v1) / u.len() as f64)
}

/// Right-hand side of the double Jensen inequality, `2/(ℓ(ℓ+1)) υ₂ᵀRυ₂`.
pub fn jensen_double_rhs(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let agg = aggregate(u);
    let l = u.len() as f64;
    Ok(2.0 / (l * (l + 1.0)) * r.form(&agg.v2))
}

/// Gap `J₁(u)` of the single Jensen inequality.
pub fn jensen_single_gap(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    Ok(single_sum_energy(u, r)? - jensen_single_rhs(u, r)?)
}

/// Gap `J₂(u)` of the double Jensen inequality.
pub fn jensen_double_gap(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    Ok(double_sum_energy(u, r)? - jensen_double_rhs(u, r)?)
}

/// Weights of `ζ₁ᵀRζ₁` and `ζ₂ᵀRζ₂` in the refined single bound, `None` for `ℓ = 1`.
pub fn refined_single_coefficients(len: usize) -> Option<(f64, f64)> {
    if len < 2 {
        return None;
    }
    let l = len as f64;
    let c1 = 3.0 * (l + 1.0) / (l * (l - 1.0));
    let c2 = 5.0 * (l + 1.0) * (l + 2.0).powi(2) / (l * (l - 1.0) * (l * l + 11.0));
    Some((c1, c2))
}

/// Weight of `ζ₄ᵀRζ₄` in the refined double bound, `None` for `ℓ = 1`.
pub fn refined_double_coefficient(len: usize) -> Option<f64> {
    if len < 2 {
        return None;
    }
    let l = len as f64;
    Some(16.0 * (l + 2.0) / (l * (l * l - 1.0)))
}

/// Lower bound on `J₁(u)`; zero when `ℓ = 1` (both ζ's vanish).
pub fn refined_single_bound(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let Some((c1, c2)) = refined_single_coefficients(u.len()) else {
        return Ok(0.0);
    };
    let agg = aggregate(u);
    Ok(c1 * r.form(&agg.zeta1) + c2 * r.form(&agg.zeta2))
}

/// Lower bound on `J₂(u)`; zero when `ℓ = 1`.
pub fn refined_double_bound(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let Some(c) = refined_double_coefficient(u.len()) else {
        return Ok(0.0);
    };
    let agg = aggregate(u);
    Ok(c * r.form(&agg.zeta4))
}

/// `(1/ℓ)(υ₁ᵀRυ₁ + 3ζ₁ᵀRζ₁ + 5ζ₂ᵀRζ₂)`, a lower bound on `Σ u_kᵀRu_k`.
pub fn corollary_single_bound(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let agg = aggregate(u);
    let l = u.len() as f64;
    Ok((r.form(&agg.v1) + 3.0 * r.form(&agg.zeta1) + 5.0 * r.form(&agg.zeta2)) / l)
}

/// `2/(ℓ(ℓ+1)) (υ₂ᵀRυ₂ + 8ζ₄ᵀRζ₄)`, a lower bound on `ΣΣ u_sᵀRu_s`.
pub fn corollary_double_bound(u: &FiniteSequence, r: &SymmetricPositiveMatrix) -> Result<f64> {
    check_dims(u, r)?;
    let agg = aggregate(u);
    let l = u.len() as f64;
    Ok(2.0 / (l * (l + 1.0)) * (r.form(&agg.v2) + 8.0 * r.form(&agg.zeta4)))
}

/// Both sides of the summation reordering identity
///
/// ```text
/// Σ_{s=a}^{b} Σ_{i=a}^{s} v(i) = (b − a + 2) Σ_{s=a}^{b} v(s) − Σ_{s=a}^{b} Σ_{i=s}^{b} v(i)
/// ```
///
/// evaluated independently; the caller compares them.
pub fn reorder_identity_check(v: &FiniteSequence) -> (DVector<f64>, DVector<f64>) {
    let n = v.dim();
    let comp = v.compensated();

    let mut running = VectorAccumulator::new(n, comp);
    let mut lhs = VectorAccumulator::new(n, comp);
    for x in v.values() {
        running.add(x);
        lhs.add(&running.value());
    }

    let mut total = VectorAccumulator::new(n, comp);
    let mut tails = VectorAccumulator::new(n, comp);
    let mut suffix = VectorAccumulator::new(n, comp);
    for x in v.values().iter().rev() {
        total.add(x);
        suffix.add(x);
        tails.add(&suffix.value());
    }
    let width = (v.end() - v.start() + 2) as f64;
    let rhs = total.value() * width - tails.value();
    (lhs.value(), rhs)
}
