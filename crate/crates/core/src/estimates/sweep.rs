//! Quotients across a family of step coefficients.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical::PacketProblem;
use super::{estimate_quotient, Estimate, QuotientKind};
use crate::coefficients::{step_family_on, Coefficient, StepCoefficient};
use crate::error::{Error, Result};
use crate::norms::LittlewoodPaleyBank;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub n_jumps: Vec<usize>,
    pub bv_targets: Vec<f64>,
    pub m: f64,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    /// Equal jumps alternating up and down from `m` instead of a seeded random path.
    #[serde(default)]
    pub alternating: bool,
}

impl FamilySpec {
    /// Growing jump count at total variation 2.
    pub fn uniformity() -> Self {
        Self { n_jumps: vec![1, 4, 16, 64], bv_targets: vec![2.0], m: 1.0, seed: 7, lo: 0.0, hi: 16.0, alternating: false }
    }

    /// Two barriers of height TV/4 on a background `m`.
    pub fn control() -> Self {
        Self { n_jumps: vec![4], bv_targets: vec![1.0, 2.0, 4.0, 8.0], m: 1.0, seed: 7, lo: 0.0, hi: 16.0, alternating: true }
    }

    pub fn members(&self) -> Result<Vec<(usize, f64, Coefficient)>> {
        if self.n_jumps.is_empty() || self.bv_targets.is_empty() {
            return Err(Error::InvalidParameter("empty family".into()));
        }
        let mut out = vec![];
        for &bv in &self.bv_targets {
            for &n in &self.n_jumps {
                let c = if self.alternating {
                    alternating_steps(n, bv, self.m, self.lo, self.hi)?
                } else {
                    step_family_on(n, bv, self.m, self.seed, self.lo, self.hi)?
                };
                out.push((n, bv, Coefficient::Step(c)));
            }
        }
        Ok(out)
    }
}

/// `n_jumps` evenly spaced jumps of size `tv / n_jumps`, alternating between `m` and `m + tv/n_jumps`.
pub fn alternating_steps(n_jumps: usize, tv: f64, m: f64, lo: f64, hi: f64) -> Result<StepCoefficient> {
    if n_jumps == 0 || !(tv > 0.0 && m > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("infeasible barrier family ({n_jumps} jumps, TV {tv}, m {m})")));
    }
    let b = tv / n_jumps as f64;
    let breakpoints = (0..n_jumps).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n_jumps as f64).collect();
    let values = (0..=n_jumps).map(|i| if i % 2 == 0 { m } else { m + b }).collect();
    StepCoefficient::new(breakpoints, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_jumps: usize,
    pub tv: f64,
    /// `sup a + TV(a)`.
    pub bv_norm: f64,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: QuotientKind,
    pub rows: Vec<SweepRow>,
    pub max: f64,
    pub min: f64,
    pub spread: f64,
}

impl SweepTable {
    pub fn from_rows(kind: QuotientKind, rows: Vec<SweepRow>) -> Self {
        let max = rows.iter().map(|r| r.quotient).fold(f64::NEG_INFINITY, f64::max);
        let min = rows.iter().map(|r| r.quotient).fold(f64::INFINITY, f64::min);
        Self { kind, rows, max, min, spread: max / min }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_jumps,tv,bv_norm,quotient\n");
        for r in &self.rows {
            writeln!(s, "{},{:.12e},{:.12e},{:.12e}", r.n_jumps, r.tv, r.bv_norm, r.quotient).unwrap();
        }
        writeln!(s, "spread,,,{:.12e}", self.spread).unwrap();
        s
    }

    /// +1 or -1 when the quotient is monotone in TV (rows sorted by TV), else 0.
    pub fn trend(&self) -> i32 {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.tv.total_cmp(&b.tv));
        let q: Vec<f64> = rows.iter().map(|r| r.quotient).collect();
        if q.windows(2).all(|w| w[1] >= w[0]) {
            1
        } else if q.windows(2).all(|w| w[1] <= w[0]) {
            -1
        } else {
            0
        }
    }
}

/// One quotient per family member, evaluated in parallel and reported in family order.
/// Each member runs on `problem` with its box widened to the member's wave speeds.
pub fn uniformity_sweep(
    family: &FamilySpec,
    est: &Estimate,
    problem: &PacketProblem,
    bank: &LittlewoodPaleyBank,
) -> Result<SweepTable> {
    est.validate()?;
    let members = family.members()?;
    let rows = members
        .par_iter()
        .map(|(n, _, a)| {
            let p = problem.fitted(a.value_at(problem.center), a.max(), family.lo, family.hi);
            let r = estimate_quotient(a, &p.datum(bank)?, &p.window()?, est, bank)?;
            Ok(SweepRow { n_jumps: *n, tv: a.total_variation(), bv_norm: r.bv_norm, quotient: r.quotient })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(est.kind(), rows))
}
