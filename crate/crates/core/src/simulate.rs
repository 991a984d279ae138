//! Trajectories of `x(k+1) = A x(k) + A_d x(k − h(k))` and the functional
//! evaluated along them.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lmi::{assemble_pi, gamma_coeff, t_coeff, DelaySystem, LkfVariables, BLOCKS};
use crate::numeric::quad_form;

/// How `h(k)` is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayPattern {
    Constant(usize),
    /// Independent uniform draws from `[h₁, h₂]`.
    UniformRandom {
        seed: u64,
    },
    /// `h(k) = h₁ + round((h₂ − h₁)·|sin(ω k)|)`.
    Sinusoidal {
        omega: f64,
    },
    /// Repeats the list cyclically.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySequence {
    pattern: DelayPattern,
    h1: usize,
    h2: usize,
}

impl DelaySequence {
    pub fn new(pattern: DelayPattern, h1: usize, h2: usize) -> Result<Self> {
        if h1 > h2 {
            return Err(Error::InvalidDelayBounds {
                h1: h1 as i64,
                h2: h2 as i64,
            });
        }
        let in_range = |h: usize| {
            if h < h1 || h > h2 {
                Err(Error::DelayOutOfRange { h: h as i64, h1, h2 })
            } else {
                Ok(())
            }
        };
        match &pattern {
            DelayPattern::Constant(h) => in_range(*h)?,
            DelayPattern::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidArgument("explicit delay list is empty".into()));
                }
                list.iter().try_for_each(|h| in_range(*h))?;
            }
            DelayPattern::Sinusoidal { omega } if !omega.is_finite() => {
                return Err(Error::InvalidArgument("sinusoidal frequency must be finite".into()));
            }
            _ => {}
        }
        Ok(Self { pattern, h1, h2 })
    }

    /// `h(k) = h₁ + (h₂ − h₁)|sin(kπ/2)|`, alternating between the two bounds.
    pub fn alternating_sine(h1: usize, h2: usize) -> Result<Self> {
        Self::new(
            DelayPattern::Sinusoidal {
                omega: std::f64::consts::FRAC_PI_2,
            },
            h1,
            h2,
        )
    }

    /// Parses `constant[:H]`, `random[:SEED]`, `sine[:OMEGA]` or `list:H,H,…`.
    /// Bare `constant` uses `h₁`; bare `sine` is [`Self::alternating_sine`].
    pub fn from_spec(spec: &str, h1: usize, h2: usize) -> Result<Self> {
        let (kind, arg) = spec.split_once(':').map_or((spec, None), |(k, a)| (k, Some(a)));
        let bad = |what: &str| Error::InvalidArgument(format!("delays {spec:?}: {what}"));
        let pattern = match (kind, arg) {
            ("constant", Some(a)) => DelayPattern::Constant(a.trim().parse().map_err(|_| bad("expected an integer"))?),
            ("constant", None) => DelayPattern::Constant(h1),
            ("random", a) => DelayPattern::UniformRandom {
                seed: a
                    .map_or(Ok(0), |a| a.trim().parse())
                    .map_err(|_| bad("expected an integer seed"))?,
            },
            ("sine", None) => return Self::alternating_sine(h1, h2),
            ("sine", Some(a)) => DelayPattern::Sinusoidal {
                omega: a.trim().parse().map_err(|_| bad("expected a frequency"))?,
            },
            ("list", Some(a)) => DelayPattern::Explicit(
                a.split(',')
                    .map(|h| h.trim().parse().map_err(|_| bad("expected integers")))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(bad("use constant:H, random[:SEED], sine[:OMEGA] or list:H,H,...")),
        };
        Self::new(pattern, h1, h2)
    }

    pub fn bounds(&self) -> (usize, usize) {
        (self.h1, self.h2)
    }

    pub fn pattern(&self) -> &DelayPattern {
        &self.pattern
    }

    /// First `steps` delays `h(0), …, h(steps − 1)`.
    pub fn generate(&self, steps: usize) -> Vec<usize> {
        match &self.pattern {
            DelayPattern::Constant(h) => vec![*h; steps],
            DelayPattern::UniformRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..steps).map(|_| rng.random_range(self.h1..=self.h2)).collect()
            }
            DelayPattern::Sinusoidal { omega } => {
                let width = (self.h2 - self.h1) as f64;
                (0..steps)
                    .map(|k| {
                        let off = (width * (omega * k as f64).sin().abs()).round() as usize;
                        self.h1 + off.min(self.h2 - self.h1)
                    })
                    .collect()
            }
            DelayPattern::Explicit(list) => list.iter().copied().cycle().take(steps).collect(),
        }
    }
}

/// Constant initial segment `φ(k) = x0` for `k ∈ [−h₂, 0]`.
pub fn constant_history(sys: &DelaySystem, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    vec![x0.clone(); sys.h2() + 1]
}

/// A simulated state history `x(−h₂), …, x(K)` with its delays `h(0), …, h(K−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    system: DelaySystem,
    states: Vec<DVector<f64>>,
    delays: Vec<usize>,
}

pub fn simulate(sys: &DelaySystem, delays: &DelaySequence, phi: &[DVector<f64>], steps: usize) -> Result<Trajectory> {
    let n = sys.n();
    let h2 = sys.h2();
    if phi.len() != h2 + 1 {
        return Err(Error::InitialSegmentLength {
            expected: h2 + 1,
            found: phi.len(),
        });
    }
    if let Some(bad) = phi.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            found: bad.len(),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("simulation needs at least one step".into()));
    }
    let hs = delays.generate(steps);
    if let Some(&h) = hs.iter().find(|&&h| h < sys.h1() || h > h2) {
        return Err(Error::DelayOutOfRange {
            h: h as i64,
            h1: sys.h1(),
            h2,
        });
    }

    let mut states = Vec::with_capacity(h2 + 1 + steps);
    states.extend(phi.iter().cloned());
    for (k, &h) in hs.iter().enumerate() {
        // x(k) sits at offset k + h₂
        let now = k + h2;
        let next = sys.a() * &states[now] + sys.ad() * &states[now - h];
        states.push(next);
    }
    Ok(Trajectory {
        system: sys.clone(),
        states,
        delays: hs,
    })
}

impl Trajectory {
    pub fn system(&self) -> &DelaySystem {
        &self.system
    }

    /// Number of simulated steps `K`.
    pub fn steps(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn first_index(&self) -> i64 {
        -(self.system.h2() as i64)
    }

    pub fn last_index(&self) -> i64 {
        self.delays.len() as i64
    }

    /// `x(k)` for `k ∈ [−h₂, K]`.
    pub fn state(&self, k: i64) -> &DVector<f64> {
        &self.states[(k - self.first_index()) as usize]
    }

    pub fn try_state(&self, k: i64) -> Result<&DVector<f64>> {
        if k < self.first_index() || k > self.last_index() {
            return Err(self.history_error(k));
        }
        Ok(self.state(k))
    }

    /// `h(k)` for `k ∈ [0, K)`.
    pub fn delay(&self, k: i64) -> Result<usize> {
        if k < 0 || k >= self.delays.len() as i64 {
            return Err(Error::InsufficientHistory {
                k,
                first: 0,
                last: self.delays.len() as i64 - 1,
            });
        }
        Ok(self.delays[k as usize])
    }

    fn history_error(&self, k: i64) -> Error {
        Error::InsufficientHistory {
            k,
            first: self.first_index(),
            last: self.last_index(),
        }
    }

    /// `Σ_{i=m−len}^{m} x(i)`.
    fn window_sum(&self, m: i64, len: i64) -> DVector<f64> {
        let mut acc = DVector::zeros(self.system.n());
        for i in (m - len)..=m {
            acc += self.state(i);
        }
        acc
    }

    /// `Σ_{s=0}^{len} Σ_{i=m−s}^{m} x(i)`; index `i` is counted `len − (m − i) + 1` times.
    fn nested_window_sum(&self, m: i64, len: i64) -> DVector<f64> {
        let mut acc = DVector::zeros(self.system.n());
        for i in (m - len)..=m {
            acc += self.state(i) * (len - (m - i) + 1) as f64;
        }
        acc
    }

    /// Sup-norm of every state from `k = 0` on.
    pub fn sup_norms(&self) -> Vec<f64> {
        (0..=self.last_index()).map(|k| self.state(k).amax()).collect()
    }

    /// First `k ≥ 0` from which `‖x‖∞ < threshold` holds for `window` consecutive steps.
    pub fn settles_below(&self, threshold: f64, window: usize) -> Option<i64> {
        let mut run = 0usize;
        for k in 0..=self.last_index() {
            if self.state(k).amax() < threshold {
                run += 1;
                if run >= window {
                    return Some(k + 1 - window as i64);
                }
            } else {
                run = 0;
            }
        }
        None
    }

    /// CSV with header `k,h_k,x_1,…,x_n[,V]`, one row per `k ∈ [0, K]`; `h_k` is
    /// empty on the last row.
    pub fn write_csv<W: Write>(&self, mut out: W, lkf: Option<&[f64]>) -> std::io::Result<()> {
        let n = self.system.n();
        let mut header = String::from("k,h_k");
        for i in 1..=n {
            header.push_str(&format!(",x_{i}"));
        }
        if lkf.is_some() {
            header.push_str(",V");
        }
        writeln!(out, "{header}")?;
        for k in 0..=self.last_index() {
            let mut row = format!("{k},");
            if let Some(h) = self.delays.get(k as usize) {
                row.push_str(&h.to_string());
            }
            for v in self.state(k).iter() {
                row.push_str(&format!(",{v}"));
            }
            if let Some(vals) = lkf {
                row.push(',');
                if let Some(v) = vals.get(k as usize) {
                    row.push_str(&v.to_string());
                }
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// `ζ₀(k)`, ordered `col{x(k), x(k−h₁), x(k−h), x(k−h₂), ν₁, …, ν₆}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub zeta0: DVector<f64>,
}

impl AugmentedState {
    /// Block `i` (1-based) of `ζ₀`.
    pub fn block(&self, i: usize) -> DVector<f64> {
        let n = self.zeta0.len() / BLOCKS;
        self.zeta0.rows((i - 1) * n, n).into_owned()
    }
}

pub fn augmented_state(traj: &Trajectory, k: i64) -> Result<AugmentedState> {
    let h = traj.delay(k)? as i64;
    let sys = traj.system();
    let n = sys.n();
    let (h1, h2) = (sys.h1() as i64, sys.h2() as i64);

    let parts = [
        traj.state(k).clone(),
        traj.state(k - h1).clone(),
        traj.state(k - h).clone(),
        traj.state(k - h2).clone(),
        traj.window_sum(k, h1) / t_coeff(h1),
        traj.window_sum(k - h1, h - h1) / t_coeff(h - h1),
        traj.window_sum(k - h, h2 - h) / t_coeff(h2 - h),
        traj.nested_window_sum(k, h1) / gamma_coeff(h1),
        traj.nested_window_sum(k - h1, h - h1) / gamma_coeff(h - h1),
        traj.nested_window_sum(k - h, h2 - h) / gamma_coeff(h2 - h),
    ];
    let mut zeta0 = DVector::zeros(BLOCKS * n);
    for (i, p) in parts.iter().enumerate() {
        zeta0.rows_mut(i * n, n).copy_from(p);
    }
    Ok(AugmentedState { zeta0 })
}

fn increment(traj: &Trajectory, i: i64) -> DVector<f64> {
    traj.state(i + 1) - traj.state(i)
}

/// Value of the Lyapunov–Krasovskii functional on the segment ending at `k`.
pub fn lkf_value(traj: &Trajectory, vars: &LkfVariables, k: i64) -> Result<f64> {
    let sys = traj.system();
    let n = sys.n();
    if vars.n() != n {
        return Err(Error::DimensionMismatch {
            what: "LKF variables",
            expected: n,
            found: vars.n(),
        });
    }
    if k < 0 || k > traj.last_index() {
        return Err(traj.history_error(k));
    }
    let (h1, h2) = (sys.h1() as i64, sys.h2() as i64);
    let h12 = h2 - h1;

    // x̃(k)
    let mut xt = DVector::zeros(4 * n);
    xt.rows_mut(0, n).copy_from(traj.state(k));
    let mut recent = DVector::zeros(n);
    let mut recent_nested = DVector::zeros(n);
    for i in (k - h1)..k {
        recent += traj.state(i);
        recent_nested += traj.state(i) * (i - k + h1 + 1) as f64;
    }
    let mut older = DVector::zeros(n);
    for i in (k - h2)..(k - h1) {
        older += traj.state(i);
    }
    xt.rows_mut(n, n).copy_from(&recent);
    xt.rows_mut(2 * n, n).copy_from(&older);
    xt.rows_mut(3 * n, n).copy_from(&recent_nested);
    let mut v = quad_form(&xt, &vars.p);

    for i in (k - h1)..k {
        v += quad_form(traj.state(i), &vars.q1);
    }
    for i in (k - h2)..(k - h1) {
        v += quad_form(traj.state(i), &vars.q2);
    }

    for i in (k - h2)..k {
        let dx = increment(traj, i);
        // t = i − k ∈ [−h₂, −1]
        let t = i - k;
        let mut w = 0.0;
        if t >= -h1 {
            let u = -t;
            w += h1 as f64 * (h1 - u + 1) as f64 * quad_form(&dx, &vars.r1);
            w += ((h1 - u + 1) * (h1 + u)) as f64 / 2.0 * quad_form(&dx, &vars.s1);
        }
        if h12 > 0 {
            let r2_count = t.min(-h1 - 1) + h2 + 1;
            w += (h12 * r2_count) as f64 * quad_form(&dx, &vars.r2);
            let j0 = (-t).max(h1 + 1) - h1;
            if j0 <= h12 {
                let s2_count = ((h12 - j0 + 1) * (j0 + h12)) as f64 / 2.0;
                w += s2_count * quad_form(&dx, &vars.s2);
            }
        }
        v += w;
    }
    Ok(v)
}

/// `ΔV` and its quadratic upper bound at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaVCheck {
    pub k: i64,
    pub delay: usize,
    /// `V(x^[k+1]) − V(x^[k])`
    pub dv_exact: f64,
    /// `ζ₀(k)ᵀ Π(h(k)) ζ₀(k)`
    pub quad_bound: f64,
    pub zeta_norm: f64,
}

impl DeltaVCheck {
    /// `dv_exact ≤ quad_bound` up to `rel_tol · max(1, |dv_exact|)`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.dv_exact <= self.quad_bound + rel_tol * self.dv_exact.abs().max(1.0)
    }
}

pub fn delta_v_chain_check(traj: &Trajectory, vars: &LkfVariables, k: i64) -> Result<DeltaVCheck> {
    let h = traj.delay(k)?;
    let pi = assemble_pi(traj.system(), vars, h)?;
    delta_v_with(traj, vars, k, h, &pi)
}

fn delta_v_with(traj: &Trajectory, vars: &LkfVariables, k: i64, h: usize, pi: &DMatrix<f64>) -> Result<DeltaVCheck> {
    let zeta = augmented_state(traj, k)?.zeta0;
    let dv_exact = lkf_value(traj, vars, k + 1)? - lkf_value(traj, vars, k)?;
    Ok(DeltaVCheck {
        k,
        delay: h,
        dv_exact,
        quad_bound: quad_form(&zeta, pi),
        zeta_norm: zeta.norm(),
    })
}

/// Runs the ΔV check at every step `0 ≤ k < K`, assembling each `Π(h)` once.
pub fn delta_v_along(traj: &Trajectory, vars: &LkfVariables) -> Result<Vec<DeltaVCheck>> {
    let sys = traj.system();
    let mut cache: Vec<Option<DMatrix<f64>>> = vec![None; sys.h2() + 1];
    (0..traj.steps() as i64)
        .map(|k| {
            let h = traj.delay(k)?;
            if cache[h].is_none() {
                cache[h] = Some(assemble_pi(sys, vars, h)?);
            }
            delta_v_with(traj, vars, k, h, cache[h].as_ref().unwrap())
        })
        .collect()
}

/// `V(x^[k])` for `k = 0, …, K`.
pub fn lkf_series(traj: &Trajectory, vars: &LkfVariables) -> Result<Vec<f64>> {
    (0..=traj.last_index()).map(|k| lkf_value(traj, vars, k)).collect()
}

/// Random initial segment with entries uniform in `[-1, 1]`.
pub fn random_history(sys: &DelaySystem, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    (0..=sys.h2())
        .map(|_| DVector::from_fn(sys.n(), |_, _| rng.random_range(-1.0..=1.0)))
        .collect()
}
