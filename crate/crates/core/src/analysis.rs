//! Largest admissible upper delay bound for a fixed lower bound.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
#[cfg(feature = "solver")]
use crate::lmi::DelaySystem;
use crate::lmi::XStructure;
use crate::sdp::{Margins, SolverStatus, StabilityCertificate};

/// One feasibility test during a search.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub h2: usize,
    pub status: SolverStatus,
    pub verified: bool,
    pub margins: Margins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayBoundResult {
    pub h1: usize,
    /// Largest verified `h₂ ≤ limit`, `None` if even `h₂ = h₁` fails.
    pub h2_max: Option<usize>,
    /// The search stopped at the cap rather than at a failing `h₂`.
    pub at_limit: bool,
    pub x_structure: XStructure,
    /// Attempts in the order they were made.
    pub log: Vec<Attempt>,
    /// Re-verified certificate at `h2_max`.
    pub certificate: Option<StabilityCertificate>,
    /// `h₂` values below `h2_max` found infeasible by the confirmation pass.
    pub non_monotone: Vec<usize>,
}

/// Searches `h₂ ∈ [h₁, limit]` using `check(h₂)` as the feasibility oracle.
///
/// Doubling steps from `h₁` bracket the frontier, bisection narrows it, and a
/// final linear pass over `[h2_max − 2, h2_max + 2]` moves the answer up if a
/// larger value turns out feasible. A value counts as feasible only when its
/// certificate is verified.
pub fn max_delay_with<F>(h1: usize, limit: usize, x_structure: XStructure, mut check: F) -> Result<DelayBoundResult>
where
    F: FnMut(usize) -> Result<StabilityCertificate>,
{
    if h1 < 1 || limit < h1 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= h1 <= limit, got h1 = {h1}, limit = {limit}"
        )));
    }
    let mut log = Vec::new();
    let mut seen: BTreeMap<usize, Option<StabilityCertificate>> = BTreeMap::new();
    let mut ok = |h2: usize| -> Result<bool> {
        if let Some(c) = seen.get(&h2) {
            return Ok(c.is_some());
        }
        let cert = check(h2)?;
        log.push(Attempt {
            h2,
            status: cert.solver_status,
            verified: cert.verified,
            margins: cert.margins,
        });
        let verified = cert.verified;
        seen.insert(h2, verified.then_some(cert));
        Ok(verified)
    };

    if !ok(h1)? {
        return Ok(DelayBoundResult {
            h1,
            h2_max: None,
            at_limit: false,
            x_structure,
            log,
            certificate: None,
            non_monotone: Vec::new(),
        });
    }

    let mut lo = h1;
    let mut step = 1;
    while lo < limit {
        let hi = (lo + step).min(limit);
        if ok(hi)? {
            lo = hi;
            step *= 2;
            continue;
        }
        let mut hi = hi;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        break;
    }

    loop {
        let mut moved = false;
        for cand in (lo + 1)..=(lo + 2).min(limit) {
            if ok(cand)? {
                lo = cand;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let mut non_monotone = Vec::new();
    for cand in lo.saturating_sub(2).max(h1)..lo {
        if !ok(cand)? {
            non_monotone.push(cand);
        }
    }

    let certificate = seen.remove(&lo).flatten();
    Ok(DelayBoundResult {
        h1,
        h2_max: Some(lo),
        at_limit: lo == limit,
        x_structure,
        log,
        certificate,
        non_monotone,
    })
}

/// Runs [`max_delay_with`] for each lower bound, `jobs` searches at a time.
/// Results come back in the order of `h1_list`.
pub fn sweep_with<F>(
    h1_list: &[usize],
    limit: usize,
    x_structure: XStructure,
    jobs: usize,
    check: F,
) -> Result<Vec<DelayBoundResult>>
where
    F: Fn(usize, usize) -> Result<StabilityCertificate> + Sync,
{
    if h1_list.is_empty() {
        return Err(Error::InvalidArgument("empty h1 list".into()));
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<DelayBoundResult>>>> = Mutex::new(vec![None; h1_list.len()]);
    let workers = jobs.clamp(1, h1_list.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&h1) = h1_list.get(i) else { break };
                let res = max_delay_with(h1, limit.max(h1), x_structure, |h2| check(h1, h2));
                slots.lock().unwrap()[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect()
}

#[cfg(feature = "solver")]
fn solve_at(sys: &DelaySystem, x_structure: XStructure, h1: usize, h2: usize) -> Result<StabilityCertificate> {
    let problem = crate::sdp::pose(&sys.with_bounds(h1, h2)?, x_structure);
    crate::sdp::solve(&problem)
}

/// Largest verified `h₂` for the matrices of `sys` and lower bound `h1`.
#[cfg(feature = "solver")]
pub fn max_delay(sys: &DelaySystem, h1: usize, limit: usize, x_structure: XStructure) -> Result<DelayBoundResult> {
    let mut res = max_delay_with(h1, limit, x_structure, |h2| solve_at(sys, x_structure, h1, h2))?;
    recheck(&mut res)?;
    Ok(res)
}

/// [`max_delay`] over several lower bounds.
#[cfg(feature = "solver")]
pub fn table_sweep(
    sys: &DelaySystem,
    h1_list: &[usize],
    limit: usize,
    x_structure: XStructure,
    jobs: usize,
) -> Result<Vec<DelayBoundResult>> {
    let mut out = sweep_with(h1_list, limit, x_structure, jobs, |h1, h2| {
        solve_at(sys, x_structure, h1, h2)
    })?;
    for r in &mut out {
        recheck(r)?;
    }
    Ok(out)
}

/// Re-verifies the stored certificate; a failure withdraws the bound.
pub fn recheck(res: &mut DelayBoundResult) -> Result<()> {
    if let Some(cert) = &res.certificate {
        if !cert.reverify()?.verified {
            res.h2_max = None;
            res.certificate = None;
            res.at_limit = false;
        }
    } else {
        res.h2_max = None;
    }
    Ok(())
}

/// CSV with header `h1,h2_max,x_structure,verified`; `h2_max` is empty when none.
pub fn write_csv<W: Write>(mut out: W, results: &[DelayBoundResult]) -> std::io::Result<()> {
    writeln!(out, "h1,h2_max,x_structure,verified")?;
    for r in results {
        let h2 = r.h2_max.map(|v| v.to_string()).unwrap_or_default();
        let verified = r.certificate.as_ref().is_some_and(|c| c.verified);
        writeln!(out, "{},{},{},{}", r.h1, h2, r.x_structure, verified)?;
    }
    Ok(())
}

/// Two-row table in the layout `h1 | … / h2_max | …`.
pub fn format_table(results: &[DelayBoundResult]) -> String {
    let cells: Vec<(String, String)> = results
        .iter()
        .map(|r| {
            let h2 = match (r.h2_max, r.at_limit) {
                (Some(v), true) => format!("{v} (at-limit)"),
                (Some(v), false) => v.to_string(),
                (None, _) => "none".to_string(),
            };
            (r.h1.to_string(), h2)
        })
        .collect();
    let width = cells.iter().map(|(a, b)| a.len().max(b.len())).max().unwrap_or(1);
    let xs = results.first().map_or("", |r| r.x_structure.as_str());
    let label = format!("h2 ({xs})");
    let lw = label.len().max(12);
    let mut row1 = format!("{:<lw$}", "h1");
    let mut row2 = format!("{label:<lw$}");
    for (a, b) in &cells {
        row1.push_str(&format!(" {a:>width$}"));
        row2.push_str(&format!(" {b:>width$}"));
    }
    format!("{row1}\n{row2}\n")
}
