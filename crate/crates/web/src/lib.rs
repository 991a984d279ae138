//! Browser bindings: a summation-inequality explorer, a trajectory simulator
//! and a ΔV check against a bundled certificate.
//!
//! Every export takes plain numbers or strings and returns a JSON string.
//! The solver is not available in the browser, so certificates are only
//! verified here, never produced.

use delaystab::certificate::CertificateDoc;
use delaystab::sdp::verify_certificate;
use delaystab::simulate::{delta_v_along, lkf_series, random_history, simulate, DelayPattern, DelaySequence};
use delaystab::summation::*;
use delaystab::{DelaySystem, Error};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Certificate for the two-state benchmark at `(h₁, h₂) = (2, 20)`.
pub const BUNDLED_CERTIFICATE: &str = include_str!("../assets/example1_h1_2_h2_20.json");

type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Serialize, PartialEq)]
pub struct InequalityReport {
    pub length: usize,
    pub single_energy: f64,
    pub jensen_single_rhs: f64,
    pub corollary_single: f64,
    pub jensen_single_gap: f64,
    pub refined_single: f64,
    pub double_energy: f64,
    pub jensen_double_rhs: f64,
    pub corollary_double: f64,
    pub jensen_double_gap: f64,
    pub refined_double: f64,
}

/// Both summation inequalities for a sequence given row-major (`ℓ × n`).
pub fn inequality_report(values: &[f64], n: usize, weight: &[f64]) -> Result<InequalityReport> {
    if n == 0 || values.is_empty() || !values.len().is_multiple_of(n) {
        return Err(Error::InvalidArgument(format!(
            "{} values do not form rows of length {n}",
            values.len()
        )));
    }
    if weight.len() != n * n {
        return Err(Error::DimensionMismatch {
            what: "weight",
            expected: n * n,
            found: weight.len(),
        });
    }
    let rows: Vec<Vec<f64>> = values.chunks(n).map(<[f64]>::to_vec).collect();
    let u = FiniteSequence::from_rows(0, &rows)?;
    let r = SymmetricPositiveMatrix::new(DMatrix::from_row_slice(n, n, weight))?;
    Ok(InequalityReport {
        length: rows.len(),
        single_energy: single_sum_energy(&u, &r)?,
        jensen_single_rhs: jensen_single_rhs(&u, &r)?,
        corollary_single: corollary_single_bound(&u, &r)?,
        jensen_single_gap: jensen_single_gap(&u, &r)?,
        refined_single: refined_single_bound(&u, &r)?,
        double_energy: double_sum_energy(&u, &r)?,
        jensen_double_rhs: jensen_double_rhs(&u, &r)?,
        corollary_double: corollary_double_bound(&u, &r)?,
        jensen_double_gap: jensen_double_gap(&u, &r)?,
        refined_double: refined_double_bound(&u, &r)?,
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct TrajectoryReport {
    pub delays: Vec<usize>,
    /// `‖x(k)‖∞` for `k = 0, …, K`.
    pub sup_norms: Vec<f64>,
    /// `x(k)` for `k = 0, …, K`.
    pub states: Vec<Vec<f64>>,
}

/// Rolls out `x(k+1) = A x(k) + A_d x(k − h(k))` from a constant initial segment.
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    a: &[f64],
    ad: &[f64],
    n: usize,
    h1: usize,
    h2: usize,
    delays: &str,
    steps: usize,
    init: &[f64],
) -> Result<TrajectoryReport> {
    let sys = system(a, ad, n, h1, h2)?;
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            found: init.len(),
        });
    }
    let seq = DelaySequence::from_spec(delays, h1, h2)?;
    let phi = vec![DVector::from_row_slice(init); h2 + 1];
    let t = simulate(&sys, &seq, &phi, steps)?;
    Ok(TrajectoryReport {
        delays: t.delays().to_vec(),
        sup_norms: t.sup_norms(),
        states: (0..=t.last_index()).map(|k| t.state(k).as_slice().to_vec()).collect(),
    })
}

fn system(a: &[f64], ad: &[f64], n: usize, h1: usize, h2: usize) -> Result<DelaySystem> {
    for (what, m) in [("A", a), ("Ad", ad)] {
        if m.len() != n * n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n * n,
                found: m.len(),
            });
        }
    }
    DelaySystem::new(
        DMatrix::from_row_slice(n, n, a),
        DMatrix::from_row_slice(n, n, ad),
        h1,
        h2,
    )
}

#[derive(Debug, Serialize, PartialEq)]
pub struct LyapunovReport {
    pub h1: usize,
    pub h2: usize,
    pub verified: bool,
    pub pi_h1_max_eig: f64,
    pub pi_h2_max_eig: f64,
    pub delays: Vec<usize>,
    /// `V(x^[k])` for `k = 0, …, K`.
    pub v: Vec<f64>,
    /// `V(x^[k+1]) − V(x^[k])`.
    pub dv_exact: Vec<f64>,
    /// `ζ₀(k)ᵀ Π(h(k)) ζ₀(k)`.
    pub quad_bound: Vec<f64>,
    pub violations: usize,
}

/// Verifies the bundled certificate and tracks `V` and `ΔV` along a run with
/// random delays and a random initial segment drawn from `seed`.
pub fn lyapunov_run(seed: u64, steps: usize) -> Result<LyapunovReport> {
    let cert = CertificateDoc::from_json(BUNDLED_CERTIFICATE)?.to_certificate()?;
    let sys = &cert.system;
    let check = verify_certificate(sys, &cert.vars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = random_history(sys, &mut rng);
    let seq = DelaySequence::new(DelayPattern::UniformRandom { seed }, sys.h1(), sys.h2())?;
    let t = simulate(sys, &seq, &phi, steps)?;
    let chain = delta_v_along(&t, &cert.vars)?;
    Ok(LyapunovReport {
        h1: sys.h1(),
        h2: sys.h2(),
        verified: check.verified,
        pi_h1_max_eig: check.margins.pi_h1,
        pi_h2_max_eig: check.margins.pi_h2,
        delays: t.delays().to_vec(),
        v: lkf_series(&t, &cert.vars)?,
        violations: chain.iter().filter(|c| !c.holds(1e-8)).count(),
        dv_exact: chain.iter().map(|c| c.dv_exact).collect(),
        quad_bound: chain.iter().map(|c| c.quad_bound).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = inequalityReport)]
pub fn inequality_report_js(values: Vec<f64>, n: usize, weight: Vec<f64>) -> std::result::Result<String, JsError> {
    to_js(inequality_report(&values, n, &weight))
}

#[wasm_bindgen(js_name = simulateTrajectory)]
#[allow(clippy::too_many_arguments)]
pub fn trajectory_js(
    a: Vec<f64>,
    ad: Vec<f64>,
    n: usize,
    h1: usize,
    h2: usize,
    delays: &str,
    steps: usize,
    init: Vec<f64>,
) -> std::result::Result<String, JsError> {
    to_js(trajectory(&a, &ad, n, h1, h2, delays, steps, &init))
}

#[wasm_bindgen(js_name = lyapunovRun)]
pub fn lyapunov_run_js(seed: u32, steps: usize) -> std::result::Result<String, JsError> {
    to_js(lyapunov_run(seed as u64, steps))
}

#[wasm_bindgen(js_name = bundledCertificate)]
pub fn bundled_certificate() -> String {
    BUNDLED_CERTIFICATE.to_string()
}
