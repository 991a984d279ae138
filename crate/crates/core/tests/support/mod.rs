//! Literal nested-loop transcriptions used as oracles. Nothing here calls
//! into the production assembly or prefix-sum code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use delaystab::lmi::{DelaySystem, LkfVariables};
use delaystab::simulate::Trajectory;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0))
}

pub fn random_mat(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0))
}

/// `MᵀM + shift·I` for a random square `M`.
pub fn random_spd(rng: &mut impl Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let m = random_mat(rng, n, n);
    m.transpose() * &m + DMatrix::identity(n, n) * shift
}

pub fn quad(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

/// `υ₁, υ₂, υ₃` by literal triple loops over `u[0..ℓ]`.
pub fn nested_sums(u: &[DVector<f64>]) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let n = u[0].len();
    let l = u.len();
    let mut v1 = DVector::zeros(n);
    let mut v2 = DVector::zeros(n);
    let mut v3 = DVector::zeros(n);
    for k in 0..l {
        v1 += &u[k];
        for s in 0..=k {
            v2 += &u[s];
            for i in 0..=s {
                v3 += &u[i];
            }
        }
    }
    (v1, v2, v3)
}

pub struct Direct {
    pub single_lhs: f64,
    pub single_rhs: f64,
    pub double_lhs: f64,
    pub double_rhs: f64,
    pub zeta1: DVector<f64>,
    pub zeta2: DVector<f64>,
    pub zeta4: DVector<f64>,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
}

/// Both sides of both Jensen inequalities and the ζ vectors, by direct summation.
pub fn direct(u: &[DVector<f64>], r: &DMatrix<f64>) -> Direct {
    let l = u.len() as f64;
    let (v1, v2, v3) = nested_sums(u);
    let mut single_lhs = 0.0;
    let mut double_lhs = 0.0;
    for k in 0..u.len() {
        single_lhs += quad(&u[k], r);
        for s in 0..=k {
            double_lhs += quad(&u[s], r);
        }
    }
    let zeta1 = &v1 - &v2 * (2.0 / (l + 1.0));
    let zeta2 = &v1 - &v2 * (6.0 / (l + 1.0)) + &v3 * (12.0 / ((l + 1.0) * (l + 2.0)));
    let zeta4 = &v2 - &v3 * (3.0 / (l + 2.0));
    Direct {
        single_rhs: quad(&v1, r) / l,
        double_rhs: 2.0 / (l * (l + 1.0)) * quad(&v2, r),
        single_lhs,
        double_lhs,
        zeta1,
        zeta2,
        zeta4,
        v1,
        v2,
    }
}

/// Block selector `e_i` built entry by entry.
fn sel(n: usize, i: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, 10 * n);
    for r in 0..n {
        m[(r, (i - 1) * n + r)] = 1.0;
    }
    m
}

fn stack(parts: Vec<DMatrix<f64>>) -> DMatrix<f64> {
    let cols = parts[0].ncols();
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for p in parts {
        for i in 0..p.nrows() {
            for j in 0..cols {
                out[(r0 + i, j)] = p[(i, j)];
            }
        }
        r0 += p.nrows();
    }
    out
}

fn diag(parts: Vec<DMatrix<f64>>) -> DMatrix<f64> {
    let size: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(size, size);
    let mut o = 0;
    for p in parts {
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                out[(o + i, o + j)] = p[(i, j)];
            }
        }
        o += p.nrows();
    }
    out
}

/// `Π(h)` transcribed term by term from the printed definitions.
pub fn literal_pi(sys: &DelaySystem, v: &LkfVariables, h: usize) -> DMatrix<f64> {
    let n = sys.n();
    let e = |i| sel(n, i);
    let id = DMatrix::<f64>::identity(n, n);
    let (h1, h2, hh) = (sys.h1() as f64, sys.h2() as f64, h as f64);
    let h12 = h2 - h1;
    let t = |x: f64| x + 1.0;
    let g = |x: f64| t(x) * t(x + 1.0) / 2.0;
    let (c1, c2, c3) = if sys.h1() == 1 {
        (1.0, 1.0, 1.0)
    } else {
        (
            (h1 + 1.0) / (h1 - 1.0),
            (h1 + 1.0) * (h1 + 2.0) * (h1 + 2.0) / ((h1 - 1.0) * (h1 * h1 + 11.0)),
            (h1 + 2.0) / (h1 - 1.0),
        )
    };
    let a_cal = (sys.a() - &id) * e(1) + sys.ad() * e(3);

    let om = stack(vec![
        e(1),
        e(5) * t(h1),
        e(6) * t(hh - h1) + e(7) * t(h2 - hh),
        e(8) * g(h1),
    ]);
    let om1 = stack(vec![-a_cal.clone(), e(2), e(3) + e(4), e(5) * t(h1)]);
    let om2 = stack(vec![e(1) * 0.0, e(1), e(2) + e(3), e(1) * t(h1)]);

    let g1 = stack(vec![
        e(1) - e(2),
        e(1) + e(2) - e(5) * 2.0,
        e(1) - e(2) + e(5) * 6.0 - e(8) * 6.0,
    ]);
    let g2 = stack(vec![
        e(2) - e(3),
        e(2) + e(3) - e(6) * 2.0,
        e(2) - e(3) + e(6) * 6.0 - e(9) * 6.0,
    ]);
    let g3 = stack(vec![
        e(3) - e(4),
        e(3) + e(4) - e(7) * 2.0,
        e(3) - e(4) + e(7) * 6.0 - e(10) * 6.0,
    ]);
    let g4 = stack(vec![e(2) - e(5), e(2) - e(5) * 4.0 + e(8) * 3.0]);
    let g5 = stack(vec![e(3) - e(6), e(4) - e(7)]);
    let g6 = stack(vec![e(3) - e(6) * 4.0 + e(9) * 3.0, e(4) - e(7) * 4.0 + e(10) * 3.0]);

    let r1t = diag(vec![v.r1.clone(), &v.r1 * (3.0 * c1), &v.r1 * (5.0 * c2)]);
    let r2t = diag(vec![v.r2.clone(), &v.r2 * 3.0, &v.r2 * 5.0]);
    let s1h = diag(vec![v.s1.clone(), &v.s1 * (2.0 * c3)]);
    let s2h = diag(vec![v.s2.clone(), v.s2.clone()]);

    let he = |m: DMatrix<f64>| &m + m.transpose();
    let pi0 = he(om.transpose() * &v.p * (&om2 - &om1)) + om1.transpose() * &v.p * &om1 - om2.transpose() * &v.p * &om2;
    let pi1 = e(1).transpose() * &v.q1 * e(1) - e(2).transpose() * &v.q1 * e(2) + e(2).transpose() * &v.q2 * e(2)
        - e(4).transpose() * &v.q2 * e(4);
    let inner = &v.r1 * (h1 * h1) + &v.r2 * (h12 * h12) + &v.s1 * g(h1 - 1.0) + &v.s2 * g(h12 - 1.0);
    let pi2 = a_cal.transpose() * inner * &a_cal;
    let pi3 = g1.transpose() * r1t * &g1;
    let mut big = DMatrix::zeros(6 * n, 6 * n);
    for i in 0..3 * n {
        for j in 0..3 * n {
            big[(i, j)] = r2t[(i, j)];
            big[(3 * n + i, 3 * n + j)] = r2t[(i, j)];
            big[(i, 3 * n + j)] = v.x[(i, j)];
            big[(3 * n + j, i)] = v.x[(i, j)];
        }
    }
    let g23 = stack(vec![g2, g3]);
    let pi4 = g23.transpose() * big * &g23;
    let pi5 = g4.transpose() * s1h * &g4 * (2.0 * (h1 + 1.0) / h1);
    let pi6 = g5.transpose() * &s2h * &g5 * 2.0 + g6.transpose() * &s2h * &g6 * 4.0;
    pi0 + pi1 + pi2 - pi3 - pi4 - pi5 - pi6
}

/// `ζ₀(k)` from the printed ν displays with literal double loops.
pub fn literal_zeta0(traj: &Trajectory, k: i64) -> DVector<f64> {
    let sys = traj.system();
    let n = sys.n();
    let (h1, h2) = (sys.h1() as i64, sys.h2() as i64);
    let h = traj.delays()[k as usize] as i64;
    let x = |i: i64| traj.state(i).clone();
    let t = |v: i64| (v + 1) as f64;
    let g = |v: i64| t(v) * t(v + 1) / 2.0;

    let single = |from: i64, to: i64| {
        let mut s = DVector::zeros(n);
        for i in from..=to {
            s += x(i);
        }
        s
    };
    let nu1 = single(k - h1, k) / t(h1);
    let nu2 = single(k - h, k - h1) / t(h - h1);
    let nu3 = single(k - h2, k - h) / t(h2 - h);

    let mut nu4 = DVector::zeros(n);
    for s in -h1..=0 {
        for i in (k + s)..=k {
            nu4 += x(i);
        }
    }
    let mut nu5 = DVector::zeros(n);
    for s in -h..=-h1 {
        for i in (k + s)..=(k - h1) {
            nu5 += x(i);
        }
    }
    let mut nu6 = DVector::zeros(n);
    for s in -h2..=-h {
        for i in (k + s)..=(k - h) {
            nu6 += x(i);
        }
    }
    let parts = [
        x(k),
        x(k - h1),
        x(k - h),
        x(k - h2),
        nu1,
        nu2,
        nu3,
        nu4 / g(h1),
        nu5 / g(h - h1),
        nu6 / g(h2 - h),
    ];
    let mut z = DVector::zeros(10 * n);
    for (b, p) in parts.iter().enumerate() {
        for r in 0..n {
            z[b * n + r] = p[r];
        }
    }
    z
}

/// The functional `V(x^[k])` with every sum written out as printed.
pub fn literal_lkf(traj: &Trajectory, v: &LkfVariables, k: i64) -> f64 {
    let sys = traj.system();
    let n = sys.n();
    let (h1, h2) = (sys.h1() as i64, sys.h2() as i64);
    let h12 = (h2 - h1) as f64;
    let x = |i: i64| traj.state(i).clone();
    let dx = |i: i64| traj.state(i + 1) - traj.state(i);

    let mut s2 = DVector::zeros(n);
    for s in (k - h1)..=(k - 1) {
        s2 += x(s);
    }
    let mut s3 = DVector::zeros(n);
    for s in (k - h2)..=(k - h1 - 1) {
        s3 += x(s);
    }
    let mut s4 = DVector::zeros(n);
    for s in -h1..=-1 {
        for i in (k + s)..=(k - 1) {
            s4 += x(i);
        }
    }
    let mut xt = DVector::zeros(4 * n);
    for r in 0..n {
        xt[r] = x(k)[r];
        xt[n + r] = s2[r];
        xt[2 * n + r] = s3[r];
        xt[3 * n + r] = s4[r];
    }
    let mut val = quad(&xt, &v.p);
    for s in (k - h1)..=(k - 1) {
        val += quad(&x(s), &v.q1);
    }
    for s in (k - h2)..=(k - h1 - 1) {
        val += quad(&x(s), &v.q2);
    }
    for s in -h1..=-1 {
        for i in (k + s)..=(k - 1) {
            val += h1 as f64 * quad(&dx(i), &v.r1);
        }
    }
    for s in -h2..=(-h1 - 1) {
        for i in (k + s)..=(k - 1) {
            val += h12 * quad(&dx(i), &v.r2);
        }
    }
    for s in -h1..=-1 {
        for i in -h1..=s {
            for j in (k + i)..=(k - 1) {
                val += quad(&dx(j), &v.s1);
            }
        }
    }
    for s in -h2..=(-h1 - 1) {
        for i in -h2..=s {
            for j in (k + i)..=(k - 1) {
                val += quad(&dx(j), &v.s2);
            }
        }
    }
    val
}

/// Random positive definite decision matrices; `X` zero or random.
pub fn random_vars(rng: &mut impl Rng, n: usize, structure: delaystab::XStructure, with_x: bool) -> LkfVariables {
    let mut v = LkfVariables::zeros(n, structure);
    v.p = random_spd(rng, 4 * n, 0.1);
    v.q1 = random_spd(rng, n, 0.1);
    v.q2 = random_spd(rng, n, 0.1);
    v.r1 = random_spd(rng, n, 0.1);
    v.r2 = random_spd(rng, n, 0.1);
    v.s1 = random_spd(rng, n, 0.1);
    v.s2 = random_spd(rng, n, 0.1);
    if with_x {
        match structure {
            delaystab::XStructure::Full => v.x = random_mat(rng, 3 * n, 3 * n) * 0.3,
            delaystab::XStructure::BlockDiagonal => {
                for b in 0..3 {
                    let blk = random_mat(rng, n, n) * 0.3;
                    v.x.view_mut((b * n, b * n), (n, n)).copy_from(&blk);
                }
            }
        }
    }
    v
}

/// Relative difference `‖a − b‖_max / max(1, ‖b‖_max)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}
