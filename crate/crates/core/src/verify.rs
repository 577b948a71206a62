//! Self-checks shared by the `verify` command and the acceptance tests.
//! Each check returns a `CheckResult`; time limits count as part of the
//! pass condition.

use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bellstate::{werner, BellDiagonal};
use crate::gf2::{is_symplectic, PauliVector, Subspace, SymplecticMatrix};
use crate::pipeline::{figure1_sweep, hashing_threshold, linear_grid};
use crate::protocol::{
    apply_step, brute_force_oracle, dej_step, listed_proposed_subspace, proposed_readings,
    proposed_step, random_bell_diagonal, random_ordered_bell_diagonal, random_step, s_sum,
    DistillationStep, RowReading,
};
use crate::search::{best_step, Objective, SearchOptions};
use crate::symplectic::{
    cnot_generators, decompose_two_qubit, enumerate_sp4, gamma_table, matches_cnot,
    random_symplectic, recompose, s6_verify_with, unitary_cross_check, GammaTable,
};

pub const EXACT_TOL: f64 = 1e-12;
pub const SEED: u64 = 0x5eed_2024;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {:>8.3}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub gamma: GammaTable,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            gamma: gamma_table(),
            seed: SEED,
        }
    }
}

fn timed(
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    body: impl FnOnce() -> (bool, String),
) -> CheckResult {
    let start = Instant::now();
    let (ok, mut detail) = body();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    if !in_time {
        detail.push_str(&format!("; exceeded {:?}", limit.expect("limit")));
    }
    CheckResult {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed,
        limit,
    }
}

pub fn check_group_count() -> CheckResult {
    timed(1, "sp4 group count", Some(Duration::from_secs(1)), || {
        let all = enumerate_sp4();
        let set: HashSet<&SymplecticMatrix> = all.iter().collect();
        let valid = all
            .iter()
            .all(|a| is_symplectic(a.as_matrix()).unwrap_or(false));
        let closed = all.iter().all(|a| {
            set.contains(&a.inverse())
                && all
                    .iter()
                    .all(|b| set.contains(&a.compose(b).expect("same size")))
        });
        let ok = all.len() == 720 && set.len() == 720 && valid && closed;
        (
            ok,
            format!(
                "{} matrices, {} distinct, symplectic={valid}, closed={closed}",
                all.len(),
                set.len()
            ),
        )
    })
}

pub fn check_s6(table: &GammaTable) -> CheckResult {
    timed(2, "S6 isomorphism", Some(Duration::from_secs(1)), || {
        let ok = s6_verify_with(table);
        (ok, format!("15x15 conjugation identity holds: {ok}"))
    })
}

pub fn check_cnot() -> CheckResult {
    timed(3, "CNOT factorization", None, || {
        let gens = cnot_generators();
        let forward = matches_cnot(&gens);
        let mut rev = gens.clone();
        rev.reverse();
        let reverse = matches_cnot(&rev);
        (
            forward,
            format!(
                "π1000·π1001·π0001 = CNOT on 16 vectors: {forward} (reversed order: {reverse})"
            ),
        )
    })
}

/// Instances for the closed-form/oracle comparison: named steps on Werner
/// inputs plus 500 random (p, S).
pub fn oracle_instances(seed: u64) -> Vec<(BellDiagonal, DistillationStep)> {
    let mut out = Vec::new();
    for f in [0.55, 0.65, 0.75, 0.85, 0.95] {
        let p = werner(f).expect("valid fidelity");
        out.push((p, dej_step()));
        out.push((p, proposed_step()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..500 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..n);
        let step = random_step(n, m, &mut rng).expect("random isotropic subspace");
        out.push((random_bell_diagonal(&mut rng), step));
    }
    out
}

pub fn check_oracle(instances: &[(BellDiagonal, DistillationStep)]) -> CheckResult {
    timed(
        4,
        "closed form vs oracle",
        Some(Duration::from_secs(30)),
        || {
            let mut worst = 0.0f64;
            let mut failures = 0;
            for (p, step) in instances {
                match (apply_step(p, step), brute_force_oracle(p, step)) {
                    (Ok(a), Ok(b)) => {
                        let d = a
                            .state
                            .coefficients()
                            .iter()
                            .zip(b.state.coefficients())
                            .map(|(x, y)| (x - y).abs())
                            .fold((a.success - b.success).abs(), f64::max);
                        worst = worst.max(d);
                        if d > EXACT_TOL {
                            failures += 1;
                        }
                    }
                    _ => failures += 1,
                }
            }
            (
                failures == 0,
                format!("{} instances, max deviation {worst:.2e}", instances.len()),
            )
        },
    )
}

pub fn check_success_identity(instances: &[(BellDiagonal, DistillationStep)]) -> CheckResult {
    timed(5, "success-rate identity", None, || {
        let mut worst = 0.0f64;
        let mut failures = 0;
        for (p, step) in instances {
            let lhs = s_sum(p, step.subspace());
            let kept = match brute_force_oracle(p, step) {
                Ok(o) => o.success,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            let rhs = 2f64.powi((step.n() - step.m()) as i32) * kept;
            let d = (lhs - rhs).abs();
            worst = worst.max(d);
            if d > EXACT_TOL {
                failures += 1;
            }
        }
        (
            failures == 0,
            format!("{} instances, max deviation {worst:.2e}", instances.len()),
        )
    })
}

pub fn check_dej_numbers() -> CheckResult {
    timed(6, "n=2 step on F=0.8", None, || {
        let p = werner(0.8).expect("valid");
        let step = dej_step();
        let (Ok(o), Ok(c)) = (brute_force_oracle(&p, &step), apply_step(&p, &step)) else {
            return (false, "step failed".into());
        };
        let (s, f) = (173.0 / 225.0, 145.0 / 173.0);
        let ok = [o.success, c.success]
            .iter()
            .all(|x| (x - s).abs() < EXACT_TOL)
            && [o.fidelity(), c.fidelity()]
                .iter()
                .all(|x| (x - f).abs() < EXACT_TOL);
        (
            ok,
            format!("success {:.12}, fidelity {:.12}", o.success, o.fidelity()),
        )
    })
}

pub fn check_decomposition(seed: u64) -> CheckResult {
    timed(
        7,
        "two-pair decomposition",
        Some(Duration::from_secs(10)),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut failures = 0;
            let mut max_ops = 0;
            for n in 2..=4 {
                for _ in 0..100 {
                    let a = random_symplectic(n, &mut rng).expect("n ≥ 1");
                    match decompose_two_qubit(&a) {
                        Ok(ops) => {
                            max_ops = max_ops.max(ops.len());
                            if recompose(n, &ops).ok().as_ref() != Some(&a) {
                                failures += 1;
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
            (
                failures == 0,
                format!("300 matrices, {failures} mismatches, longest factorization {max_ops}"),
            )
        },
    )
}

pub fn check_unitary() -> CheckResult {
    timed(8, "unitary cross-check", None, || {
        let passed = (1u128..16)
            .filter(|&u| {
                let v = PauliVector::new(2, u).expect("4 bits");
                unitary_cross_check(&v).unwrap_or(false)
            })
            .count();
        (passed == 15, format!("{passed}/15 generators match"))
    })
}

pub fn check_proposed_reading() -> CheckResult {
    timed(9, "n=4 generator product", None, || {
        let readings = proposed_readings();
        let forward: Vec<RowReading> = readings
            .iter()
            .filter(|(_, reversed)| !reversed)
            .map(|(r, _)| *r)
            .collect();
        let swapped: Vec<PauliVector> = listed_proposed_subspace()
            .basis()
            .iter()
            .map(PauliVector::swap_pairs)
            .collect();
        let uses_it = forward == [RowReading::A]
            && proposed_step().subspace() == &Subspace::span(4, &swapped).expect("4 pairs");
        (
            forward.len() == 1 && uses_it,
            format!("matching readings {forward:?}; all orders {readings:?}"),
        )
    })
}

pub fn check_yield_dominance() -> CheckResult {
    timed(
        10,
        "yield dominance sweep",
        Some(Duration::from_secs(120)),
        || {
            let rows = match figure1_sweep(&linear_grid(0.55, 0.95, 9)) {
                Ok(r) => r,
                Err(e) => return (false, e.to_string()),
            };
            let finite = rows
                .iter()
                .all(|r| r.log10_l_proposed.is_finite() && r.log10_l_dej.is_finite());
            let losing: Vec<String> = rows
                .iter()
                .filter(|r| r.log10_l_proposed > r.log10_l_dej + EXACT_TOL)
                .map(|r| {
                    format!(
                        "F={:.2}: {:.4} > {:.4}",
                        r.f, r.log10_l_proposed, r.log10_l_dej
                    )
                })
                .collect();
            let detail = if losing.is_empty() {
                format!("all {} points finite={finite}, n=4 ≤ n=2", rows.len())
            } else {
                format!(
                    "finite={finite}; n=4 pipeline worse at {}",
                    losing.join(", ")
                )
            };
            (finite && losing.is_empty(), detail)
        },
    )
}

pub fn check_dej_optimal(seed: u64) -> CheckResult {
    timed(11, "n=2 fidelity optimality", None, || {
        let mut inputs: Vec<BellDiagonal> = [0.55, 0.65, 0.75, 0.85, 0.95]
            .iter()
            .map(|&f| werner(f).expect("valid"))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        inputs.extend((0..10).map(|_| random_ordered_bell_diagonal(&mut rng)));
        let target = Subspace::span(2, &["1111".parse().expect("literal")]).expect("2 pairs");
        let opts = SearchOptions {
            top_k: 15,
            shards: 1,
            ..SearchOptions::default()
        };
        let mut misses = 0;
        for p in &inputs {
            let Ok(r) = best_step(p, 2, 1, Objective::Fidelity, &opts) else {
                misses += 1;
                continue;
            };
            let top = r.best[0].score;
            let hit = r
                .best
                .iter()
                .any(|e| e.subspace == target && (e.score - top).abs() <= EXACT_TOL);
            if r.states_evaluated != 15 || !hit {
                misses += 1;
            }
        }
        (
            misses == 0,
            format!(
                "{} ordered inputs, {misses} where 1111 is not an argmax",
                inputs.len()
            ),
        )
    })
}

pub fn check_hashing_threshold() -> CheckResult {
    timed(12, "hashing threshold", None, || {
        match hashing_threshold(0.5, 1.0, 1e-12) {
            Ok(f) => (f > 0.80 && f < 0.82, format!("F* = {f:.10}")),
            Err(e) => (false, e.to_string()),
        }
    })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckResult> {
    let instances = oracle_instances(opts.seed);
    vec![
        check_group_count(),
        check_s6(&opts.gamma),
        check_cnot(),
        check_oracle(&instances),
        check_success_identity(&instances),
        check_dej_numbers(),
        check_decomposition(opts.seed),
        check_unitary(),
        check_proposed_reading(),
        check_yield_dominance(),
        check_dej_optimal(opts.seed),
        check_hashing_threshold(),
    ]
}
