//! The stability conditions as a semidefinite feasibility problem.
//!
//! Strict inequalities are imposed with a margin `ε` under a trace
//! normalization (the constraint set is a cone, so without it the solver
//! may return the origin):
//!
//! ```text
//! P ⪰ εI,  Q_i, R_i, S_i ⪰ εI,  [R̃₂ X; Xᵀ R̃₂] ⪰ 0,  Π(h₁) ⪯ −εI,  Π(h₂) ⪯ −εI,
//! tr P + Σ tr(Q_i + R_i + S_i) = 1
//! ```
//!
//! The default `ε` is zero. Strictness comes instead from maximizing a
//! common slack `t` measured against the magnitude each matrix is expected
//! to have (a sum over an `m`-step window makes its weight scale like
//! `1/m`). A fixed `ε` under unit trace rejects certificates whose
//! eigenvalues legitimately spread over more than `1/ε`.
//!
//! The solver only sees an [`LmiProgram`]; any returned point is re-checked
//! by [`verify_certificate`], which reassembles every matrix from scratch.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lmi::{assemble, assemble_pi, assemble_rcc, gamma_coeff, DelaySystem, LkfVariables, XStructure};
use crate::numeric::{max_eigenvalue, min_eigenvalue};

/// Default fixed margin; strictness comes from slack maximization.
pub const DEFAULT_MARGIN: f64 = 0.0;
/// Value of the trace normalization.
pub const TRACE_NORMALIZATION: f64 = 1.0;
/// Positivity margins must exceed this fraction of the matrix trace.
pub const POSITIVITY_REL_TOL: f64 = 1e-9;
/// `max eig Π` must be below minus this fraction of `|tr Π|`.
pub const NEGATIVITY_REL_TOL: f64 = 1e-9;
/// The coupled block may dip this far (relative to its trace) below zero.
pub const RCC_REL_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    pub system: DelaySystem,
    pub x_structure: XStructure,
    /// Fixed margin `ε ≥ 0` added on top of the maximized slack.
    pub margin: f64,
    pub normalize: bool,
}

pub fn pose(sys: &DelaySystem, x_structure: XStructure) -> FeasibilityProblem {
    FeasibilityProblem {
        system: sys.clone(),
        x_structure,
        margin: DEFAULT_MARGIN,
        normalize: true,
    }
}

/// `F₀ + Σ_j y_j F_j ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub name: String,
    /// Diagonal weights `w` for a strict inequality: a backend may push
    /// the block into the interior as `F(z) ⪰ t·diag(w)`. `None` for `⪰ 0`.
    pub slack: Option<Vec<f64>>,
    pub constant: DMatrix<f64>,
    /// Nonzero coefficient matrices keyed by decision index.
    pub coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl LmiBlock {
    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (j, f) in &self.coeffs {
            m += f * y[*j];
        }
        m
    }
}

/// Solver-independent LMI feasibility program over a scaled decision
/// vector `z`; the variables are `y_j = scale_j · z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProgram {
    pub num_vars: usize,
    /// Natural magnitude of each decision variable.
    pub scale: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    /// Rows `(a, b)` of `aᵀy = b`.
    pub equalities: Vec<(Vec<f64>, f64)>,
}

impl FeasibilityProblem {
    pub fn decision_count(&self) -> usize {
        LkfVariables::decision_count(self.system.n(), self.x_structure)
    }

    /// Delays at which `Π(h) ≺ 0` is imposed; one point when `h₁ = h₂`.
    pub fn pi_points(&self) -> Vec<usize> {
        let (h1, h2) = (self.system.h1(), self.system.h2());
        if h1 == h2 {
            vec![h1]
        } else {
            vec![h1, h2]
        }
    }

    /// Magnitudes the LKF terms suggest for each matrix: a window sum over
    /// `m` steps weighs like `m`, so its matrix is expected near `1/m`.
    fn natural_scales(&self) -> NaturalScales {
        let h1 = self.system.h1() as f64;
        let h12 = self.system.h12() as f64;
        let g = |v: i64| gamma_coeff(v).max(1.0);
        let p_blocks = [1.0, h1, h12.max(1.0), g(self.system.h1() as i64 - 1).max(h1)];
        NaturalScales {
            p_blocks,
            small: [
                1.0 / h1,
                1.0 / h12.max(1.0),
                1.0 / (h1 * h1),
                1.0 / h12.max(1.0).powi(2),
                1.0 / g(self.system.h1() as i64 - 1),
                1.0 / g(self.system.h12() as i64 - 1),
            ],
            x: 1.0 / h12.max(1.0).powi(2),
        }
    }

    /// Expands every constraint in the decision basis. All maps are linear
    /// in the variables, so column `j` is the assembly at the `j`-th
    /// (scaled) unit vector.
    pub fn program(&self) -> Result<LmiProgram> {
        let n = self.system.n();
        let m = self.decision_count();
        let eps = self.margin;
        let points = self.pi_points();
        let ns = self.natural_scales();

        let mut scale = Vec::with_capacity(m);
        let basis: Vec<LkfVariables> = (0..m)
            .map(|j| {
                let mut y = vec![0.0; m];
                y[j] = 1.0;
                let unit = LkfVariables::from_decision_vector(n, self.x_structure, &y)?;
                let s = ns.of(&unit, n);
                scale.push(s);
                Ok(unit.scaled(s))
            })
            .collect::<Result<_>>()?;

        let mut blocks = Vec::new();
        let mut push = |name: String,
                        slack: Option<Vec<f64>>,
                        constant: DMatrix<f64>,
                        f: &dyn Fn(&LkfVariables) -> Result<DMatrix<f64>>|
         -> Result<()> {
            let mut coeffs = Vec::new();
            for (j, b) in basis.iter().enumerate() {
                let fj = f(b)?;
                if fj.iter().any(|v| *v != 0.0) {
                    coeffs.push((j, fj));
                }
            }
            blocks.push(LmiBlock {
                name,
                slack,
                constant,
                coeffs,
            });
            Ok(())
        };

        let shifted = |size: usize| DMatrix::<f64>::identity(size, size) * -eps;
        let p_weights = (0..4 * n).map(|i| ns.p_blocks[i / n].powi(-2)).collect();
        push("P".into(), Some(p_weights), shifted(4 * n), &|v| Ok(v.p.clone()))?;
        for (idx, name) in LkfVariables::SMALL_NAMES.iter().enumerate() {
            let w = vec![ns.small[idx]; n];
            push((*name).into(), Some(w), shifted(n), &|v| {
                Ok(v.small_blocks()[idx].clone())
            })?;
        }
        push("RCC".into(), None, DMatrix::zeros(6 * n, 6 * n), &|v| assemble_rcc(v))?;
        for h in points {
            let sys = &self.system;
            push(
                format!("Pi({h})"),
                Some(vec![1.0; 10 * n]),
                shifted(10 * n),
                &move |v| Ok(-assemble_pi(sys, v, h)?),
            )?;
        }

        let mut equalities = Vec::new();
        if self.normalize {
            let row = basis.iter().map(LkfVariables::trace_sum).collect();
            equalities.push((row, TRACE_NORMALIZATION));
        }
        Ok(LmiProgram {
            num_vars: m,
            scale,
            blocks,
            equalities,
        })
    }
}

struct NaturalScales {
    /// Length of the window behind each block of `x̃`.
    p_blocks: [f64; 4],
    small: [f64; 6],
    x: f64,
}

impl NaturalScales {
    /// Scale of the single matrix entry set in the unit `v`.
    fn of(&self, v: &LkfVariables, n: usize) -> f64 {
        if let Some(k) = v.p.iter().position(|e| *e != 0.0) {
            let (i, j) = (k % (4 * n), k / (4 * n));
            return 1.0 / (self.p_blocks[i / n] * self.p_blocks[j / n]);
        }
        for (idx, m) in v.small_blocks().iter().enumerate() {
            if m.iter().any(|e| *e != 0.0) {
                return self.small[idx];
            }
        }
        self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Feasible,
    Infeasible,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Feasible => "feasible",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::NumericalFailure => "numerical-failure",
        }
    }
}

/// Raw result of a conic backend.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutcome {
    pub status: SolverStatus,
    /// Candidate decision vector, when the backend produced one.
    pub point: Option<Vec<f64>>,
}

/// Narrow boundary to a conic solver: program in, candidate point out.
pub trait ConicBackend {
    fn solve(&self, program: &LmiProgram) -> BackendOutcome;
}

/// Eigenvalue margins of every constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
    /// Smallest eigenvalue of `[R̃₂ X; Xᵀ R̃₂]`.
    pub rcc: f64,
    /// Largest eigenvalue of `Π(h₁)`.
    pub pi_h1: f64,
    /// Largest eigenvalue of `Π(h₂)`.
    pub pi_h2: f64,
}

impl Margins {
    pub fn positivity(&self) -> [(&'static str, f64); 7] {
        [
            ("P", self.p),
            ("Q1", self.q1),
            ("Q2", self.q2),
            ("R1", self.r1),
            ("R2", self.r2),
            ("S1", self.s1),
            ("S2", self.s2),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub margins: Margins,
    pub verified: bool,
}

/// Recomputes all constraint matrices from `vars` and checks their spectra.
///
/// Thresholds are relative to each matrix's trace, so the verdict does not
/// change when `vars` is scaled by a positive factor.
pub fn verify_certificate(sys: &DelaySystem, vars: &LkfVariables) -> Result<Verification> {
    let lmi = assemble(sys, vars)?;
    let small = vars.small_blocks();
    let margins = Margins {
        p: min_eigenvalue(&vars.p),
        q1: min_eigenvalue(small[0]),
        q2: min_eigenvalue(small[1]),
        r1: min_eigenvalue(small[2]),
        r2: min_eigenvalue(small[3]),
        s1: min_eigenvalue(small[4]),
        s2: min_eigenvalue(small[5]),
        rcc: min_eigenvalue(&lmi.rcc_block),
        pi_h1: max_eigenvalue(&lmi.pi_h1),
        pi_h2: max_eigenvalue(&lmi.pi_h2),
    };

    let traces = [
        vars.p.trace(),
        small[0].trace(),
        small[1].trace(),
        small[2].trace(),
        small[3].trace(),
        small[4].trace(),
        small[5].trace(),
    ];
    let positive = margins
        .positivity()
        .iter()
        .zip(traces)
        .all(|((_, m), tr)| *m > POSITIVITY_REL_TOL * tr.abs());
    let rcc_ok = margins.rcc >= -RCC_REL_SLACK * lmi.rcc_block.trace().abs();
    let neg = |max: f64, pi: &DMatrix<f64>| max < -NEGATIVITY_REL_TOL * pi.trace().abs();
    let negative = neg(margins.pi_h1, &lmi.pi_h1) && neg(margins.pi_h2, &lmi.pi_h2);
    let finite = margins.positivity().iter().all(|(_, m)| m.is_finite())
        && margins.rcc.is_finite()
        && margins.pi_h1.is_finite()
        && margins.pi_h2.is_finite();

    Ok(Verification {
        margins,
        verified: finite && positive && rcc_ok && negative,
    })
}

/// Solved variables with their independently verified margins.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub system: DelaySystem,
    pub vars: LkfVariables,
    pub margins: Margins,
    pub verified: bool,
    pub solver_status: SolverStatus,
}

impl StabilityCertificate {
    /// Builds a certificate for given variables, running verification.
    pub fn from_vars(sys: &DelaySystem, vars: LkfVariables, solver_status: SolverStatus) -> Result<Self> {
        let v = verify_certificate(sys, &vars)?;
        Ok(Self {
            system: sys.clone(),
            vars,
            margins: v.margins,
            verified: v.verified,
            solver_status,
        })
    }

    /// Re-runs verification on the stored variables.
    pub fn reverify(&self) -> Result<Verification> {
        verify_certificate(&self.system, &self.vars)
    }
}

/// Solves with the given backend and verifies whatever point comes back.
pub fn solve_with(problem: &FeasibilityProblem, backend: &dyn ConicBackend) -> Result<StabilityCertificate> {
    let program = problem.program()?;
    let outcome = backend.solve(&program);
    let n = problem.system.n();
    let vars = match &outcome.point {
        Some(z) if z.len() == program.num_vars && z.iter().all(|v| v.is_finite()) => {
            let y: Vec<f64> = z.iter().zip(&program.scale).map(|(z, s)| z * s).collect();
            LkfVariables::from_decision_vector(n, problem.x_structure, &y)?
        }
        _ => LkfVariables::zeros(n, problem.x_structure),
    };
    StabilityCertificate::from_vars(&problem.system, vars, outcome.status)
}

#[cfg(feature = "solver")]
pub use backend::ClarabelBackend;

/// Solves with the bundled interior-point backend.
#[cfg(feature = "solver")]
pub fn solve(problem: &FeasibilityProblem) -> Result<StabilityCertificate> {
    solve_with(problem, &ClarabelBackend::from_env())
}

#[cfg(feature = "solver")]
mod backend {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{
        DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus, SupportedConeT,
    };

    // Link the system OpenBLAS for the dense PSD-cone kernels.
    extern crate openblas_src;

    use super::{BackendOutcome, ConicBackend, LmiProgram, SolverStatus};

    /// Environment variable enabling solver iteration logs.
    pub const VERBOSE_ENV: &str = "DELAYSTAB_SOLVER_VERBOSE";

    #[derive(Debug, Clone)]
    pub struct ClarabelBackend {
        pub verbose: bool,
        pub max_iter: u32,
    }

    impl Default for ClarabelBackend {
        fn default() -> Self {
            Self {
                verbose: false,
                max_iter: 200,
            }
        }
    }

    impl ClarabelBackend {
        pub fn from_env() -> Self {
            let verbose = std::env::var(VERBOSE_ENV)
                .map(|v| !v.is_empty() && v != "0")
                .unwrap_or(false);
            Self {
                verbose,
                ..Self::default()
            }
        }
    }

    /// Scaled upper triangle, column by column, as the PSD triangle cone expects.
    fn svec_index(i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        j * (j + 1) / 2 + i
    }

    struct Round {
        status: ClarabelStatus,
        x: Vec<f64>,
        t: f64,
    }

    impl ClarabelBackend {
        /// Maximizes `t` subject to `F(z) − t·diag(w) ⪰ 0` on every strict block.
        fn round(&self, program: &LmiProgram) -> Option<Round> {
            let nv = program.num_vars;
            let t_col = nv;
            let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv + 1];
            let mut b = Vec::new();
            let mut cones = Vec::new();
            let s2 = std::f64::consts::SQRT_2;

            let mut row0 = 0;
            for (a, rhs) in &program.equalities {
                for (j, v) in a.iter().enumerate() {
                    if *v != 0.0 {
                        cols[j].push((row0, *v));
                    }
                }
                b.push(*rhs);
                row0 += 1;
            }
            if !program.equalities.is_empty() {
                cones.push(SupportedConeT::ZeroConeT(program.equalities.len()));
            }

            // s = svec(F₀ + Σ y_j F_j − t W) = b − A y  ⇒  b = svec(F₀), A[:, j] = −svec(F_j)
            for block in &program.blocks {
                let k = block.size();
                let scale = |i: usize, j: usize| if i == j { 1.0 } else { s2 };
                for j in 0..k {
                    for i in 0..=j {
                        b.push(block.constant[(i, j)] * scale(i, j));
                    }
                }
                for (var, f) in &block.coeffs {
                    for j in 0..k {
                        for i in 0..=j {
                            let v = f[(i, j)];
                            if v != 0.0 {
                                cols[*var].push((row0 + svec_index(i, j), -v * scale(i, j)));
                            }
                        }
                    }
                }
                if let Some(slack) = &block.slack {
                    for (i, w) in slack.iter().enumerate() {
                        cols[t_col].push((row0 + svec_index(i, i), *w));
                    }
                }
                row0 += k * (k + 1) / 2;
                cones.push(SupportedConeT::PSDTriangleConeT(k));
            }

            let mut colptr = Vec::with_capacity(nv + 2);
            let mut rowval = Vec::new();
            let mut nzval = Vec::new();
            colptr.push(0);
            for mut col in cols {
                col.sort_by_key(|(r, _)| *r);
                for (r, v) in col {
                    rowval.push(r);
                    nzval.push(v);
                }
                colptr.push(rowval.len());
            }
            let a = CscMatrix::new(row0, nv + 1, colptr, rowval, nzval);
            let p = CscMatrix::zeros((nv + 1, nv + 1));
            let mut q = vec![0.0; nv + 1];
            q[t_col] = -1.0;

            let settings = DefaultSettingsBuilder::default()
                .verbose(self.verbose)
                .max_iter(self.max_iter)
                .build()
                .ok()?;
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).ok()?;
            solver.solve();
            let x = solver.solution.x.clone();
            let t = x.get(t_col).copied().unwrap_or(f64::NAN);
            Some(Round {
                status: solver.solution.status,
                x: x[..nv].to_vec(),
                t,
            })
        }
    }

    fn classify(status: ClarabelStatus, t: f64) -> SolverStatus {
        match status {
            ClarabelStatus::Solved | ClarabelStatus::AlmostSolved if t > 0.0 => SolverStatus::Feasible,
            ClarabelStatus::Solved | ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => {
                SolverStatus::Infeasible
            }
            _ => SolverStatus::NumericalFailure,
        }
    }

    /// The program is feasible iff the optimal slack is nonnegative; a zero
    /// objective would leave the interior-point method without a central
    /// path and it stalls on thin feasible sets.
    impl ConicBackend for ClarabelBackend {
        fn solve(&self, program: &LmiProgram) -> BackendOutcome {
            match self.round(program) {
                Some(r) => BackendOutcome {
                    status: classify(r.status, r.t),
                    point: Some(r.x),
                },
                None => BackendOutcome {
                    status: SolverStatus::NumericalFailure,
                    point: None,
                },
            }
        }
    }

}
