use bellperm::bellstate::{
    p_of_s, product_s_weight, product_weight, s_of_p, sort_descending, werner, BellDiagonal,
};
use bellperm::gf2::{
    enumerate_coset, is_symplectic, mat_mul, mat_vec, rref, symplectic_inner, BitMatrix,
    PauliVector, Subspace, SymplecticMatrix,
};
use bellperm::protocol::{apply_step, brute_force_oracle, make_step, s_sum};
use bellperm::symplectic::{
    complete_isotropic, decompose_two_qubit, random_isotropic, random_symplectic, recompose,
    Transvection,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec_of(n: usize) -> impl Strategy<Value = PauliVector> {
    let mask = if n == 64 {
        u128::MAX
    } else {
        (1u128 << (2 * n)) - 1
    };
    any::<u128>().prop_map(move |b| PauliVector::new(n, b & mask).unwrap())
}

fn sized_vectors() -> impl Strategy<Value = (PauliVector, PauliVector, PauliVector)> {
    (1usize..=8).prop_flat_map(|n| (vec_of(n), vec_of(n), vec_of(n)))
}

fn symplectic(max_n: usize) -> impl Strategy<Value = SymplecticMatrix> {
    (1..=max_n, any::<u64>())
        .prop_map(|(n, seed)| random_symplectic(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
}

fn probs() -> impl Strategy<Value = BellDiagonal> {
    prop::array::uniform4(0.001f64..1.0).prop_map(|w| BellDiagonal::normalized(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inner_is_alternating_and_bilinear((u, v, w) in sized_vectors()) {
        prop_assert!(!symplectic_inner(&u, &u).unwrap());
        prop_assert_eq!(symplectic_inner(&u, &v).unwrap(), symplectic_inner(&v, &u).unwrap());
        let lhs = symplectic_inner(&(u ^ v), &w).unwrap();
        let rhs = symplectic_inner(&u, &w).unwrap() ^ symplectic_inner(&v, &w).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn symplectic_maps_preserve_inner(a in symplectic(6), seed in any::<u64>()) {
        let n = a.n_pairs();
        let mask = (1u128 << (2 * n)) - 1;
        let v = PauliVector::new(n, (seed as u128 * 0x9e37_79b9_7f4a_7c15) & mask).unwrap();
        let w = PauliVector::new(n, (seed as u128).rotate_left(17) & mask).unwrap();
        let (av, aw) = (a.apply(&v).unwrap(), a.apply(&w).unwrap());
        prop_assert_eq!(symplectic_inner(&av, &aw).unwrap(), symplectic_inner(&v, &w).unwrap());
    }

    #[test]
    fn group_closure(a in symplectic(5), seed in any::<u64>()) {
        let b = random_symplectic(a.n_pairs(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let ab = mat_mul(a.as_matrix(), b.as_matrix()).unwrap();
        prop_assert!(is_symplectic(&ab).unwrap());
        prop_assert!(is_symplectic(a.inverse().as_matrix()).unwrap());
        prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
        prop_assert!(a.inverse().compose(&a).unwrap().is_identity());
    }

    #[test]
    fn identity_and_form_act_as_expected(v in (1usize..=8).prop_flat_map(vec_of)) {
        let n = v.n_pairs();
        prop_assert_eq!(mat_vec(&BitMatrix::identity(n).unwrap(), &v).unwrap(), v);
        let p = SymplecticMatrix::form(n).unwrap();
        prop_assert_eq!(p.apply(&v).unwrap(), v.swap_pairs());
    }

    #[test]
    fn transvections_are_symplectic_involutions(u in (1usize..=8).prop_flat_map(vec_of)) {
        prop_assume!(!u.is_zero());
        let t = Transvection::new(u).unwrap().matrix();
        prop_assert!(is_symplectic(t.as_matrix()).unwrap());
        prop_assert!(t.compose(&t).unwrap().is_identity());
        prop_assert_eq!(t.inverse(), t);
    }

    #[test]
    fn rref_is_canonical(vs in prop::collection::vec(vec_of(4), 0..6)) {
        let s = rref(4, &vs).unwrap();
        prop_assert_eq!(&rref(4, &s.basis()).unwrap(), &s);
        for v in &vs {
            prop_assert!(s.contains(v));
        }
        let mut rev = vs.clone();
        rev.reverse();
        prop_assert_eq!(&rref(4, &rev).unwrap(), &s);
        prop_assert!(s.dim() <= vs.len());
    }

    #[test]
    fn cosets_have_full_size(vs in prop::collection::vec(vec_of(3), 0..4), shift in vec_of(3)) {
        let s = Subspace::span(3, &vs).unwrap();
        let mut elems: Vec<PauliVector> = enumerate_coset(&s, &shift).unwrap().collect();
        prop_assert_eq!(elems.len(), 1 << s.dim());
        for e in &elems {
            prop_assert!(s.contains(&(*e ^ shift)));
        }
        elems.sort();
        elems.dedup();
        prop_assert_eq!(elems.len(), 1 << s.dim());
    }

    #[test]
    fn completion_is_symplectic(n in 1usize..=6, k_frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let k = ((n as f64) * k_frac).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_isotropic(n, k, &mut rng).unwrap();
        let positions: Vec<usize> = (n - k..n).map(|j| 2 * j + 2).collect();
        let b = complete_isotropic(&s, &positions).unwrap();
        prop_assert!(is_symplectic(b.as_matrix()).unwrap());
        for (p, v) in positions.iter().zip(s.basis()) {
            prop_assert_eq!(b.row(p - 1), v);
        }
    }

    #[test]
    fn decomposition_recomposes(a in symplectic(4)) {
        let ops = decompose_two_qubit(&a).unwrap();
        prop_assert_eq!(recompose(a.n_pairs(), &ops).unwrap(), a);
    }

    #[test]
    fn s_transform_round_trip(p in probs()) {
        let s = s_of_p(&p);
        prop_assert!((s.get(0) - 1.0).abs() < 1e-12);
        let back = p_of_s(&s).unwrap();
        for (a, b) in back.probs().iter().zip(p.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn product_s_weight_is_signed_sum(p in probs(), n in 1usize..=3, raw in any::<u64>()) {
        let len = 2 * n;
        let x = PauliVector::new(n, raw as u128 & ((1 << len) - 1)).unwrap();
        let direct: f64 = (0u128..1 << len)
            .map(|w| {
                let w = PauliVector::new(n, w).unwrap();
                let sign = if symplectic_inner(&x, &w).unwrap() { -1.0 } else { 1.0 };
                sign * product_weight(&p, &w)
            })
            .sum();
        prop_assert!((product_s_weight(&s_of_p(&p), &x) - direct).abs() < 1e-12);
    }

    #[test]
    fn sorting_relabels_exactly(p in probs()) {
        let (sorted, map) = sort_descending(&p);
        prop_assert!(sorted.is_ordered());
        prop_assert_eq!(map.permute(&p), sorted);
        let mut a = p.probs();
        let mut b = sorted.probs();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        prop_assert!(sorted.entropy() >= 0.0 && sorted.entropy() <= 2.0 + 1e-12);
    }

    #[test]
    fn step_matches_oracle(p in probs(), n in 2usize..=4, m_raw in any::<usize>(), seed in any::<u64>()) {
        let m = 1 + m_raw % (n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_isotropic(n, n - m, &mut rng).unwrap();
        let step = make_step(n, m, &s.basis()).unwrap();
        let a = apply_step(&p, &step).unwrap();
        let b = brute_force_oracle(&p, &step).unwrap();
        prop_assert!((a.success - b.success).abs() < 1e-12);
        let total: f64 = a.state.coefficients().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (x, y) in a.state.coefficients().iter().zip(b.state.coefficients()) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() < 1e-12);
        }
        let identity = s_sum(&p, step.subspace()) - 2f64.powi((n - m) as i32) * b.success;
        prop_assert!(identity.abs() < 1e-12);
    }

    /// Completing the same S with different output rows only relabels the
    /// output distribution.
    #[test]
    fn completion_choice_only_relabels(p in probs(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_isotropic(3, 2, &mut rng).unwrap();
        let step = make_step(3, 1, &s.basis()).unwrap();
        // Left-multiplying B by a symplectic map on the first pair keeps S.
        let g = random_symplectic(1, &mut rng).unwrap();
        let mut rows: Vec<PauliVector> = step.matrix().rows().collect();
        let (r0, r1) = (rows[0], rows[1]);
        let pick = |bits: [bool; 2]| {
            let mut v = PauliVector::zero(3).unwrap();
            if bits[0] { v ^= r0; }
            if bits[1] { v ^= r1; }
            v
        };
        rows[0] = pick([g.as_matrix().get(0, 0), g.as_matrix().get(0, 1)]);
        rows[1] = pick([g.as_matrix().get(1, 0), g.as_matrix().get(1, 1)]);
        let other = bellperm::protocol::DistillationStep::from_matrix(
            1,
            SymplecticMatrix::new(BitMatrix::new(rows).unwrap()).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(other.subspace(), step.subspace());
        let mut a = apply_step(&p, &step).unwrap().state.coefficients().to_vec();
        let mut b = apply_step(&p, &other).unwrap().state.coefficients().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn werner_grid_improves_under_two_pair_step() {
    for f in [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95] {
        let out = apply_step(&werner(f).unwrap(), &bellperm::protocol::dej_step()).unwrap();
        assert!(out.fidelity() > f, "F={f}");
    }
}

#[test]
fn singular_matrix_is_not_symplectic() {
    let m: BitMatrix = "1000\n1000\n0010\n0001".parse().unwrap();
    assert!(!is_symplectic(&m).unwrap());
    assert!(is_symplectic(&BitMatrix::identity(3).unwrap()).unwrap());
    assert!(is_symplectic(SymplecticMatrix::form(3).unwrap().as_matrix()).unwrap());
}
