//! Reference values computed independently (direct summation over the kept
//! set, no signed transform) and frozen here.

use bellperm::bellstate::{werner, BellDiagonal};
use bellperm::pipeline::{figure1_sweep, linear_grid, optimize_schedule, OptimizeOptions};
use bellperm::protocol::{apply_step, dej_step, proposed_step};
use bellperm::search::{best_step, isotropic_count, Objective, SearchOptions};

const SWEEP: [(f64, f64, f64); 9] = [
    (0.55, 4.415785865144, 3.771355721081),
    (0.60, 3.101817401648, 2.697221565091),
    (0.65, 2.322302832236, 2.056794821488),
    (0.70, 1.831797050743, 1.628008416167),
    (0.75, 1.404298164177, 1.297390053956),
    (0.80, 1.030633435909, 1.030633435909),
    (0.85, 0.769965404111, 0.769965404111),
    (0.90, 0.428864213616, 0.428864213616),
    (0.95, 0.197667688909, 0.197667688909),
];

#[test]
fn sweep_matches_reference() {
    let rows = figure1_sweep(&linear_grid(0.55, 0.95, 9)).unwrap();
    for (row, (f, prop, dej)) in rows.iter().zip(SWEEP) {
        assert!((row.f - f).abs() < 1e-12);
        assert!((row.log10_l_proposed - prop).abs() < 1e-9, "F={f}");
        assert!((row.log10_l_dej - dej).abs() < 1e-9, "F={f}");
    }
}

#[test]
fn four_pair_step_outputs() {
    let out = apply_step(&werner(0.8).unwrap(), &proposed_step()).unwrap();
    assert!((out.fidelity() - 41.0 / 43.0).abs() < 1e-12);
    assert!((out.success - 0.430637037037037).abs() < 1e-12);
    let p = BellDiagonal::new([0.7, 0.15, 0.1, 0.05]).unwrap();
    let out = apply_step(&p, &proposed_step()).unwrap();
    assert!((out.fidelity() - 0.8756886119389505).abs() < 1e-12);
    assert!((out.success - 0.276825).abs() < 1e-12);
}

#[test]
fn four_pair_step_is_a_fidelity_argmax() {
    let opts = SearchOptions {
        top_k: 11475,
        ..SearchOptions::default()
    };
    for p in [
        werner(0.8).unwrap(),
        BellDiagonal::new([0.7, 0.15, 0.1, 0.05]).unwrap(),
    ] {
        let r = best_step(&p, 4, 1, Objective::Fidelity, &opts).unwrap();
        assert_eq!(r.states_evaluated as u128, isotropic_count(4, 3));
        assert_eq!(r.states_evaluated, 11475);
        let own = apply_step(&p, &proposed_step()).unwrap().fidelity();
        let top = r.best[0].score;
        assert!(top >= own - 1e-12);
        assert!(r
            .best
            .iter()
            .any(|e| &e.subspace == proposed_step().subspace() && (e.score - top).abs() < 1e-12));
    }
}

#[test]
fn search_agrees_with_step_command() {
    let p = werner(0.8).unwrap();
    let r = best_step(&p, 2, 1, Objective::Fidelity, &SearchOptions::default()).unwrap();
    let top = &r.best[0];
    let full = top.outcome.as_ref().unwrap();
    assert!((full.fidelity() - top.score).abs() < 1e-12);
    let dej = apply_step(&p, &dej_step()).unwrap();
    assert!((dej.fidelity() - top.score).abs() < 1e-12);
}

#[test]
fn recurrence_fidelity_climbs() {
    let opts = OptimizeOptions::proposed();
    for f in [0.65, 0.75, 0.85, 0.9] {
        let mut sched = bellperm::Schedule::hashing_only();
        for _ in 0..6 {
            sched.push("proposed", opts.main.1.clone());
        }
        let r = bellperm::run_recurrence(&werner(f).unwrap(), &sched).unwrap();
        let mut prev = f;
        for rec in &r.per_step {
            if prev > 1.0 - 1e-6 {
                break;
            }
            assert!(rec.fidelity >= prev, "F={f}");
            prev = rec.fidelity;
        }
    }
    let o = optimize_schedule(&werner(0.95).unwrap(), &opts).unwrap();
    assert!(o.result.l.is_finite());
}
