//! Exhaustive search over checked subspaces S.
//!
//! Fidelity and success of a step depend on S only, so candidates are
//! isotropic subspaces in canonical reduced form, enumerated in
//! lexicographic order of their basis rows and split into contiguous
//! shards by the value of the first row.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bellstate::BellDiagonal;
use crate::error::{Error, Result};
use crate::gf2::{len_mask, solve_affine, swap_pairs, AffineSolution, Subspace};
use crate::pipeline::format_sig;
use crate::protocol::{apply_step, cheap_scores, make_step, StepOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Objective {
    #[default]
    Fidelity,
    Success,
    /// Fidelity, with candidates below the success threshold scored −∞.
    FidelityAtMinSuccess(f64),
    /// −ln(n/(m·s)) − ln((1−F_out)/(1−F_in)). A heuristic trade-off between
    /// pair cost and infidelity reduction, not a yield.
    InverseYieldProxy,
}

impl Objective {
    pub fn score(&self, fidelity: f64, success: f64, n: usize, m: usize, f_in: f64) -> f64 {
        match *self {
            Objective::Fidelity => fidelity,
            Objective::Success => success,
            Objective::FidelityAtMinSuccess(t) => {
                if success >= t {
                    fidelity
                } else {
                    f64::NEG_INFINITY
                }
            }
            Objective::InverseYieldProxy => {
                let cost = -(n as f64 / (m as f64 * success)).ln();
                let gain = if f_in >= 1.0 {
                    0.0
                } else {
                    -((1.0 - fidelity) / (1.0 - f_in)).ln()
                };
                cost + gain
            }
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Fidelity => write!(f, "fidelity"),
            Objective::Success => write!(f, "success"),
            Objective::FidelityAtMinSuccess(t) => write!(f, "fidelity-at-min-success:{t}"),
            Objective::InverseYieldProxy => write!(f, "yield-proxy"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" => Ok(Objective::Fidelity),
            "success" => Ok(Objective::Success),
            "yield-proxy" => Ok(Objective::InverseYieldProxy),
            _ => {
                let t = s
                    .strip_prefix("fidelity-at-min-success:")
                    .ok_or_else(|| Error::Parse(format!("unknown objective {s:?}")))?;
                let t: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad threshold {t:?}")))?;
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::Domain(format!("threshold {t} outside (0,1]")));
                }
                Ok(Objective::FidelityAtMinSuccess(t))
            }
        }
    }
}

/// Number of k-dimensional isotropic subspaces of Z₂^{2n}:
/// Π_{i<k} (4^{n−i} − 1)/(2^{i+1} − 1). Saturates at u128::MAX.
pub fn isotropic_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        let shift = 2 * (n - i) as u32;
        if shift >= 128 {
            return u128::MAX;
        }
        num = match num.checked_mul((1u128 << shift) - 1) {
            Some(v) => v,
            None => return u128::MAX,
        };
        den *= (1u128 << (i + 1)) - 1;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    num / den
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inclusive range of first-row values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkRange {
    pub lo: u128,
    pub hi: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationSpace {
    pub n: usize,
    pub k: usize,
}

/// Splits the first-row values 1..4ⁿ−1 into at most `shards` contiguous
/// ranges of near-equal width.
pub fn search_partition(space: EnumerationSpace, shards: usize) -> Result<Vec<WorkRange>> {
    if shards == 0 {
        return Err(Error::Domain("shard count must be positive".into()));
    }
    if space.n == 0 || space.n > 63 {
        return Err(Error::Dimension(format!("{} pairs not supported", space.n)));
    }
    let total = len_mask(2 * space.n);
    let shards = (shards as u128).min(total);
    let (q, r) = (total / shards, total % shards);
    let mut out = Vec::with_capacity(shards as usize);
    let mut lo = 1u128;
    for i in 0..shards {
        let width = q + u128::from(i < r);
        out.push(WorkRange {
            lo,
            hi: lo + width - 1,
        });
        lo += width;
    }
    Ok(out)
}

pub fn enumerate_isotropic(n: usize, k: usize) -> IsotropicIter {
    IsotropicIter::new(
        n,
        k,
        WorkRange {
            lo: 0,
            hi: u128::MAX,
        },
    )
}

pub fn enumerate_isotropic_range(n: usize, k: usize, range: WorkRange) -> IsotropicIter {
    IsotropicIter::new(n, k, range)
}

struct Frame {
    /// Current pivot bit (counted from the least significant end).
    pivot: usize,
    sol: Option<AffineSolution>,
    next: u128,
    count: u128,
}

/// Depth-first walk over reduced bases. Row r has its pivot strictly below
/// the pivot of row r−1, vanishes above its pivot and at later pivots,
/// and commutes with all earlier rows. Rows at each depth are produced in
/// ascending order, so whole bases come out in lexicographic order.
pub struct IsotropicIter {
    n: usize,
    k: usize,
    range: WorkRange,
    rows: Vec<u128>,
    stack: Vec<Frame>,
    done: bool,
}

impl IsotropicIter {
    fn new(n: usize, k: usize, range: WorkRange) -> Self {
        let done = n == 0 || k > n;
        let mut it = Self {
            n,
            k,
            range,
            rows: Vec::with_capacity(k),
            stack: Vec::with_capacity(k),
            done,
        };
        if !done && k > 0 {
            it.stack.push(Frame {
                pivot: 0,
                sol: None,
                next: 0,
                count: 0,
            });
        }
        it
    }

    fn len_bits(&self) -> usize {
        2 * self.n
    }

    /// Solutions with the given pivot at the current depth.
    fn solutions(&self, pivot: usize) -> Option<AffineSolution> {
        let len = self.len_bits();
        let mut cons: Vec<(u128, bool)> = (pivot + 1..len).map(|b| (1u128 << b, false)).collect();
        cons.push((1u128 << pivot, true));
        cons.extend(self.rows.iter().map(|&r| (swap_pairs(r), false)));
        solve_affine(len, &cons)
    }

    fn pivot_allowed(&self, pivot: usize) -> bool {
        let depth = self.rows.len();
        let upper = self
            .rows
            .last()
            .map_or(self.len_bits(), |&r| 127 - r.leading_zeros() as usize);
        pivot < upper
            && pivot >= self.k - depth - 1
            && self.rows.iter().all(|&r| (r >> pivot) & 1 == 0)
    }
}

impl Iterator for IsotropicIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        if self.k == 0 {
            self.done = true;
            return Some(Subspace::zero(self.n).expect("n ≥ 1"));
        }
        let len = self.len_bits();
        loop {
            let depth = self.stack.len() - 1;
            let frame = self.stack.last_mut().expect("nonempty stack");
            if frame.next < frame.count {
                let v = frame
                    .sol
                    .as_ref()
                    .expect("solution present")
                    .nth_ascending(frame.next);
                frame.next += 1;
                if depth == 0 {
                    if v > self.range.hi {
                        self.done = true;
                        return None;
                    }
                    if v < self.range.lo {
                        continue;
                    }
                }
                self.rows.push(v);
                if self.rows.len() == self.k {
                    let s = Subspace::from_reduced(self.n, self.rows.clone());
                    self.rows.pop();
                    return Some(s);
                }
                self.stack.push(Frame {
                    pivot: 0,
                    sol: None,
                    next: 0,
                    count: 0,
                });
                continue;
            }
            // Advance to the next admissible pivot at this depth.
            let start = if frame.sol.is_none() && frame.count == 0 && frame.next == 0 {
                frame.pivot
            } else {
                frame.pivot + 1
            };
            let mut chosen = None;
            for pivot in start..len {
                if depth == 0 {
                    let (lo, hi) = (1u128 << pivot, (1u128 << pivot) << 1);
                    if lo > self.range.hi {
                        break;
                    }
                    if hi <= self.range.lo {
                        continue;
                    }
                }
                if !self.pivot_allowed(pivot) {
                    continue;
                }
                if let Some(sol) = self.solutions(pivot) {
                    chosen = Some((pivot, sol));
                    break;
                }
            }
            let frame = self.stack.last_mut().expect("nonempty stack");
            match chosen {
                Some((pivot, sol)) => {
                    let count = 1u128 << sol.dim();
                    let mut next = 0;
                    if depth == 0 && self.range.lo > sol.particular {
                        // First index whose value reaches lo.
                        let (mut a, mut b) = (0u128, count);
                        while a < b {
                            let mid = a + (b - a) / 2;
                            if sol.nth_ascending(mid) < self.range.lo {
                                a = mid + 1;
                            } else {
                                b = mid;
                            }
                        }
                        next = a;
                    }
                    *frame = Frame {
                        pivot,
                        sol: Some(sol),
                        next,
                        count,
                    };
                }
                None => {
                    self.stack.pop();
                    if self.stack.is_empty() {
                        self.done = true;
                        return None;
                    }
                    self.rows.pop();
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchEntry {
    pub subspace: Subspace,
    pub score: f64,
    pub fidelity: f64,
    pub success: f64,
    /// Full output state; absent when the step never succeeds.
    pub outcome: Option<StepOutcome>,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub n: usize,
    pub m: usize,
    pub objective: Objective,
    pub best: Vec<SearchEntry>,
    pub states_evaluated: u64,
    pub wall_time: Duration,
    /// Every candidate received the same score.
    pub degenerate: bool,
}

impl SearchReport {
    pub fn to_csv(&self) -> String {
        let k = self.n - self.m;
        let mut out = String::from("rank,score,success");
        for i in 1..=k {
            out.push_str(&format!(",S_row{i}"));
        }
        out.push('\n');
        for (rank, e) in self.best.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}",
                rank + 1,
                format_sig(e.score),
                format_sig(e.success)
            ));
            for r in e.subspace.basis() {
                out.push_str(&format!(",{r}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub top_k: usize,
    pub shards: usize,
    /// Refuse searches with more candidates than this.
    pub max_candidates: u128,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            top_k: 10,
            shards: rayon::current_num_threads().max(1) * 4,
            max_candidates: 5_000_000,
        }
    }
}

pub const MAX_SEARCH_PAIRS: usize = 8;

#[derive(Clone)]
struct Scored {
    score: f64,
    fidelity: f64,
    success: f64,
    subspace: Subspace,
}

/// Higher score first, then ascending basis.
fn rank_order(a: &Scored, b: &Scored) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.subspace.cmp(&b.subspace))
}

struct ShardResult {
    top: Vec<Scored>,
    count: u64,
    min: f64,
    max: f64,
}

fn merge_top(mut top: Vec<Scored>, k: usize) -> Vec<Scored> {
    top.sort_by(rank_order);
    top.truncate(k);
    top
}

pub fn best_step(
    p: &BellDiagonal,
    n: usize,
    m: usize,
    objective: Objective,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    if m == 0 || m >= n {
        return Err(Error::Dimension(format!(
            "need 1 ≤ m < n, got m={m}, n={n}"
        )));
    }
    if n > MAX_SEARCH_PAIRS {
        return Err(Error::Resource(format!(
            "search is limited to n ≤ {MAX_SEARCH_PAIRS}, got {n}"
        )));
    }
    let k = n - m;
    let total = isotropic_count(n, k);
    if total > opts.max_candidates {
        return Err(Error::Resource(format!(
            "{total} candidate subspaces exceed the limit of {}",
            opts.max_candidates
        )));
    }
    let start = Instant::now();
    let top_k = opts.top_k.max(1);
    let f_in = p.fidelity();
    let ranges = search_partition(EnumerationSpace { n, k }, opts.shards)?;
    let shards: Vec<ShardResult> = ranges
        .par_iter()
        .map(|&range| {
            let mut top: Vec<Scored> = Vec::new();
            let (mut count, mut min, mut max) = (0u64, f64::INFINITY, f64::NEG_INFINITY);
            for s in enumerate_isotropic_range(n, k, range) {
                count += 1;
                let (fidelity, success, score) = match cheap_scores(p, &s, m) {
                    Ok((f, su)) => (f, su, objective.score(f, su, n, m, f_in)),
                    Err(_) => (0.0, 0.0, f64::NEG_INFINITY),
                };
                min = min.min(score);
                max = max.max(score);
                top.push(Scored {
                    score,
                    fidelity,
                    success,
                    subspace: s,
                });
                if top.len() >= 4 * top_k {
                    top = merge_top(top, top_k);
                }
            }
            ShardResult {
                top: merge_top(top, top_k),
                count,
                min,
                max,
            }
        })
        .collect();
    let count: u64 = shards.iter().map(|s| s.count).sum();
    if count == 0 {
        return Err(Error::Degenerate("no candidate subspaces".into()));
    }
    let min = shards.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let max = shards
        .iter()
        .map(|s| s.max)
        .fold(f64::NEG_INFINITY, f64::max);
    let merged = merge_top(shards.into_iter().flat_map(|s| s.top).collect(), top_k);
    let best = merged
        .into_iter()
        .map(|c| {
            let outcome = make_step(n, m, &c.subspace.basis())
                .and_then(|step| apply_step(p, &step))
                .ok();
            SearchEntry {
                subspace: c.subspace,
                score: c.score,
                fidelity: c.fidelity,
                success: c.success,
                outcome,
            }
        })
        .collect();
    Ok(SearchReport {
        n,
        m,
        objective,
        best,
        states_evaluated: count,
        wall_time: start.elapsed(),
        degenerate: count > 1 && (max - min).abs() <= 1e-12,
    })
}
