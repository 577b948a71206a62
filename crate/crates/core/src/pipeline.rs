//! Recurrence schedules followed by hashing, and the inverse yield L.
//!
//! Cost model: a step on n pairs that succeeds with probability s consumes
//! n/s input pairs per output pair on average; failed trials are discarded.
//! Hashing then turns the final state into 1 − H pure pairs per pair, so
//!
//!   L = Π_i (n_i / s_i) / max(0, 1 − H(final)).

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bellstate::{sort_descending, werner, BellDiagonal};
use crate::error::{Error, Result};
use crate::protocol::{apply_step, dej_step, proposed_step, DistillationStep};

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledStep {
    pub name: String,
    pub step: DistillationStep,
    pub reorder: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schedule {
    pub steps: Vec<ScheduledStep>,
    pub hashing: bool,
}

impl Schedule {
    pub fn hashing_only() -> Self {
        Self {
            steps: Vec::new(),
            hashing: true,
        }
    }

    pub fn push(&mut self, name: &str, step: DistillationStep) {
        self.steps.push(ScheduledStep {
            name: name.to_string(),
            step,
            reorder: true,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Counts of steps by name, e.g. "proposed×3 + dej×1 + hashing".
    pub fn summary(&self) -> String {
        let mut parts: Vec<(String, usize)> = Vec::new();
        for s in &self.steps {
            match parts.last_mut() {
                Some((name, count)) if *name == s.name => *count += 1,
                _ => parts.push((s.name.clone(), 1)),
            }
        }
        let mut out: Vec<String> = parts.iter().map(|(n, c)| format!("{n}×{c}")).collect();
        if self.hashing {
            out.push("hashing".into());
        }
        if out.is_empty() {
            "none".into()
        } else {
            out.join(" + ")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub fidelity: f64,
    pub success: f64,
    pub cost_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YieldResult {
    pub per_step: Vec<StepRecord>,
    pub final_state: BellDiagonal,
    /// Product of the per-step cost multipliers.
    pub cost: f64,
    pub hashing_yield: f64,
    pub l: f64,
    pub log10_l: f64,
}

pub fn hashing_yield(q: &BellDiagonal) -> f64 {
    (1.0 - q.entropy()).max(0.0)
}

/// Runs the steps in order. Without terminal hashing, L is the bare
/// recurrence cost.
pub fn run_recurrence(p0: &BellDiagonal, sched: &Schedule) -> Result<YieldResult> {
    let mut state = *p0;
    let mut per_step = Vec::with_capacity(sched.len());
    let mut cost = 1.0;
    for s in &sched.steps {
        if s.step.m() != 1 {
            return Err(Error::Unsupported(format!(
                "recurrence needs single-pair outputs, step {} keeps {}",
                s.name,
                s.step.m()
            )));
        }
        let out = apply_step(&state, &s.step)?;
        let q = out.state.to_bell_diagonal()?;
        state = if s.reorder {
            let (sorted, map) = sort_descending(&q);
            debug_assert_eq!(map.permute(&q), sorted);
            sorted
        } else {
            q
        };
        let multiplier = s.step.n() as f64 / out.success;
        cost *= multiplier;
        per_step.push(StepRecord {
            fidelity: state.fidelity(),
            success: out.success,
            cost_multiplier: multiplier,
        });
    }
    let (hy, l) = if sched.hashing {
        let y = hashing_yield(&state);
        (y, if y > 0.0 { cost / y } else { f64::INFINITY })
    } else {
        (f64::NAN, cost)
    };
    Ok(YieldResult {
        per_step,
        final_state: state,
        cost,
        hashing_yield: hy,
        l,
        log10_l: l.log10(),
    })
}

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub max_steps: usize,
    pub main: (String, DistillationStep),
    /// Optional single step allowed after the repeated main step.
    pub finisher: Option<(String, DistillationStep)>,
}

impl OptimizeOptions {
    /// k proposed steps, optionally one DEJ step, then hashing.
    pub fn proposed() -> Self {
        Self {
            max_steps: 25,
            main: ("proposed".into(), proposed_step()),
            finisher: Some(("dej".into(), dej_step())),
        }
    }

    /// k DEJ steps, then hashing.
    pub fn dej() -> Self {
        Self {
            max_steps: 25,
            main: ("dej".into(), dej_step()),
            finisher: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizedSchedule {
    pub schedule: Schedule,
    pub result: YieldResult,
    /// Every candidate had L = +∞; the schedule maximizes final fidelity.
    pub all_infinite: bool,
}

/// Minimizes L over k = 0..=max_steps repetitions of the main step, each
/// optionally followed by the finisher. Ties go to the shorter schedule.
/// Candidates stop once the main step no longer succeeds.
pub fn optimize_schedule(p0: &BellDiagonal, opts: &OptimizeOptions) -> Result<OptimizedSchedule> {
    let mut best: Option<(Schedule, YieldResult)> = None;
    let mut best_fid: Option<(Schedule, YieldResult)> = None;
    let mut consider = |sched: Schedule, res: YieldResult| {
        let better_l = best
            .as_ref()
            .is_none_or(|(s, r)| res.l < r.l || (res.l == r.l && sched.len() < s.len()));
        if better_l && res.l.is_finite() {
            best = Some((sched.clone(), res.clone()));
        }
        let f = res.final_state.fidelity();
        let better_f = best_fid.as_ref().is_none_or(|(s, r)| {
            let g = r.final_state.fidelity();
            f > g || (f == g && sched.len() < s.len())
        });
        if better_f {
            best_fid = Some((sched, res));
        }
    };
    let mut sched = Schedule::hashing_only();
    for k in 0..=opts.max_steps {
        if k > 0 {
            sched.push(&opts.main.0, opts.main.1.clone());
        }
        let res = match run_recurrence(p0, &sched) {
            Ok(r) => r,
            Err(Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        };
        consider(sched.clone(), res);
        if let Some((name, step)) = &opts.finisher {
            let mut with = sched.clone();
            with.push(name, step.clone());
            match run_recurrence(p0, &with) {
                Ok(r) => consider(with, r),
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    match (best, best_fid) {
        (Some((schedule, result)), _) => Ok(OptimizedSchedule {
            schedule,
            result,
            all_infinite: false,
        }),
        (None, Some((schedule, result))) => Ok(OptimizedSchedule {
            schedule,
            result,
            all_infinite: true,
        }),
        (None, None) => Err(Error::Degenerate("no schedule could be evaluated".into())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub f: f64,
    pub log10_l_proposed: f64,
    pub log10_l_dej: f64,
    pub k_proposed: usize,
    pub k_dej: usize,
}

/// Optimized log₁₀ L for both pipelines at each Werner fidelity. Each side
/// picks its own best number of recurrence steps before hashing.
pub fn figure1_sweep(f_grid: &[f64]) -> Result<Vec<SweepRow>> {
    let proposed = OptimizeOptions::proposed();
    let dej = OptimizeOptions::dej();
    f_grid
        .par_iter()
        .map(|&f| {
            let p = werner(f)?;
            let a = optimize_schedule(&p, &proposed)?;
            let b = optimize_schedule(&p, &dej)?;
            Ok(SweepRow {
                f,
                log10_l_proposed: a.result.log10_l,
                log10_l_dej: b.result.log10_l,
                k_proposed: a.schedule.len(),
                k_dej: b.schedule.len(),
            })
        })
        .collect()
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub const SWEEP_HEADER: &str = "F,log10L_proposed,log10L_dej,k_proposed,k_dej";

pub const SWEEP_COMMENT: &str =
    "# both sides: optimal number of recurrence steps with reordering, \
then hashing; proposed side may end with one n=2 step; k = total recurrence steps";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_COMMENT}\n{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_sig(r.f),
            format_sig(r.log10_l_proposed),
            format_sig(r.log10_l_dej),
            r.k_proposed,
            r.k_dej
        );
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == SWEEP_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
    }
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::Parse(format!("expected 5 fields in {line:?}")));
        }
        let num = |s: &str| parse_sig(s);
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad count {s:?}")))
        };
        rows.push(SweepRow {
            f: num(cells[0])?,
            log10_l_proposed: num(cells[1])?,
            log10_l_dej: num(cells[2])?,
            k_proposed: int(cells[3])?,
            k_dej: int(cells[4])?,
        });
    }
    Ok(rows)
}

pub const SIG_DIGITS: usize = 12;

/// 12 significant digits in the shortest of fixed or exponent notation,
/// trailing zeros removed; infinities as "+inf"/"-inf".
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn parse_sig(s: &str) -> Result<f64> {
    match s.trim() {
        "+inf" | "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: {t:?}"))),
    }
}

/// Werner fidelity where hashing starts to give positive yield, by
/// bisection on H(werner(F)) = 1 over [lo, hi].
pub fn hashing_threshold(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let g = |f: f64| werner(f).map(|p| p.entropy() - 1.0);
    let (mut a, mut b) = (lo, hi);
    if g(a)? <= 0.0 || g(b)? > 0.0 {
        return Err(Error::Domain(format!(
            "[{lo}, {hi}] does not bracket the threshold"
        )));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if g(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
