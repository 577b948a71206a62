//! Group structure of the P-orthogonal matrices: transvection generators,
//! the 720-element group for two pairs and its S₆ picture, completion of
//! partial symplectic bases, two-pair factorization and generator search.
//!
//! Composition convention: a sequence of generators `[t₁, t₂, …, t_k]`
//! stands for the matrix product `t₁·t₂·…·t_k`, so the rightmost factor
//! acts first on a vector. This matches the left-to-right order in which
//! the corresponding unitaries are written.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{
    inner_bits, len_mask, pos_bit, rref_insert, rref_reduce, solve_affine, swap_pairs, BitMatrix,
    PauliVector, Subspace, SymplecticMatrix,
};

/// Generator π_u: x ↦ x + u(uᵀPx).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transvection {
    u: PauliVector,
}

impl Transvection {
    pub fn new(u: PauliVector) -> Result<Self> {
        if u.is_zero() {
            return Err(Error::InvalidGenerator(
                "transvection vector must be nonzero".into(),
            ));
        }
        Ok(Self { u })
    }

    pub fn u(&self) -> PauliVector {
        self.u
    }

    pub fn n_pairs(&self) -> usize {
        self.u.n_pairs()
    }

    pub fn apply(&self, x: &PauliVector) -> Result<PauliVector> {
        if self.u.inner(x)? {
            Ok(*x ^ self.u)
        } else {
            Ok(*x)
        }
    }

    pub fn matrix(&self) -> SymplecticMatrix {
        SymplecticMatrix::from_raw_unchecked(transvection_raw(self.u.len(), self.u.bits()))
    }
}

impl fmt::Debug for Transvection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "π[{}]", self.u)
    }
}

impl fmt::Display for Transvection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.u)
    }
}

/// I + u·uᵀ·P: row i is eᵢ, plus Pu when uᵢ = 1.
fn transvection_raw(len: usize, u: u128) -> BitMatrix {
    let pu = swap_pairs(u);
    let rows = (0..len)
        .map(|i| {
            let e = pos_bit(len, i);
            if u & e != 0 {
                e ^ pu
            } else {
                e
            }
        })
        .collect();
    BitMatrix::from_raw(rows, len)
}

pub fn transvection_matrix(t: &Transvection, n_pairs: usize) -> Result<SymplecticMatrix> {
    if t.n_pairs() != n_pairs {
        return Err(Error::Dimension(format!(
            "transvection on {} pairs requested for {n_pairs}",
            t.n_pairs()
        )));
    }
    Ok(t.matrix())
}

/// Product `seq[0]·seq[1]·…` (last element acts first).
pub fn compose(n_pairs: usize, seq: &[Transvection]) -> Result<SymplecticMatrix> {
    let mut acc = SymplecticMatrix::identity(n_pairs)?.into_inner();
    for t in seq {
        if t.n_pairs() != n_pairs {
            return Err(Error::Dimension("generators of mixed sizes".into()));
        }
        acc = right_mul_transvection(&acc, t.u.bits());
    }
    Ok(SymplecticMatrix::from_raw_unchecked(acc))
}

/// M·(I + u uᵀP) = M + (Mu)(Pu)ᵀ.
fn right_mul_transvection(m: &BitMatrix, u: u128) -> BitMatrix {
    let mu = m.mul_vec_raw(u);
    let pu = swap_pairs(u);
    let len = m.ncols();
    let rows = m
        .raw_rows()
        .iter()
        .enumerate()
        .map(|(i, &r)| if mu & pos_bit(len, i) != 0 { r ^ pu } else { r })
        .collect();
    BitMatrix::from_raw(rows, len)
}

/// |Sp(2n, 2)| = 2^{n²} Π_{i=1..n} (4^i − 1), for n ≤ 4 (fits in u64).
pub fn group_order(n_pairs: u32) -> u64 {
    assert!(n_pairs <= 4);
    let mut order = 1u64 << (n_pairs * n_pairs);
    for i in 1..=n_pairs {
        order *= 4u64.pow(i) - 1;
    }
    order
}

/// All 4×4 P-orthogonal matrices, built column by column: a₁ any nonzero
/// vector, a₂ with a₁ᵀPa₂ = 1, a₃ commuting with both, a₄ commuting with
/// a₁ and a₂ but not with a₃.
pub fn enumerate_sp4() -> Vec<SymplecticMatrix> {
    let mut out = Vec::with_capacity(720);
    for a1 in 1u128..16 {
        for a2 in (1u128..16).filter(|&a2| inner_bits(a1, a2)) {
            for a3 in (1u128..16).filter(|&a3| !inner_bits(a1, a3) && !inner_bits(a2, a3)) {
                for a4 in (1u128..16)
                    .filter(|&a4| !inner_bits(a1, a4) && !inner_bits(a2, a4) && inner_bits(a3, a4))
                {
                    let cols = BitMatrix::from_raw(vec![a1, a2, a3, a4], 4);
                    out.push(SymplecticMatrix::from_raw_unchecked(
                        cols.transpose().expect("4x4"),
                    ));
                }
            }
        }
    }
    out
}

fn sp4() -> &'static [SymplecticMatrix] {
    static SP4: OnceLock<Vec<SymplecticMatrix>> = OnceLock::new();
    SP4.get_or_init(enumerate_sp4)
}

/// Transposition p_{i,j} of {1,…,6}, stored with i < j.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Transposition {
    i: u8,
    j: u8,
}

impl Transposition {
    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i == j || !(1..=6).contains(&i) || !(1..=6).contains(&j) {
            return Err(Error::Domain(format!(
                "p_{{{i},{j}}} is not a transposition of 1..=6"
            )));
        }
        Ok(Self {
            i: i.min(j),
            j: i.max(j),
        })
    }

    pub fn pair(&self) -> (u8, u8) {
        (self.i, self.j)
    }

    pub fn apply(&self, k: u8) -> u8 {
        if k == self.i {
            self.j
        } else if k == self.j {
            self.i
        } else {
            k
        }
    }

    /// χ_q(p) = q p q⁻¹ with q = self.
    pub fn conjugate(&self, p: &Transposition) -> Transposition {
        Transposition::new(self.apply(p.i), self.apply(p.j)).expect("conjugate of a transposition")
    }
}

impl fmt::Display for Transposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{},{}", self.i, self.j)
    }
}

/// γ indexed by `u − 1` for the nonzero 4-bit vectors u.
pub type GammaTable = [Transposition; 15];

pub fn gamma_table() -> GammaTable {
    const PAIRS: [(u8, u8); 15] = [
        (5, 6), // 0001
        (4, 6), // 0010
        (4, 5), // 0011
        (2, 3), // 0100
        (1, 4), // 0101
        (1, 5), // 0110
        (1, 6), // 0111
        (1, 3), // 1000
        (2, 4), // 1001
        (2, 5), // 1010
        (2, 6), // 1011
        (1, 2), // 1100
        (3, 4), // 1101
        (3, 5), // 1110
        (3, 6), // 1111
    ];
    PAIRS.map(|(i, j)| Transposition { i, j })
}

pub fn s6_gamma(u: &PauliVector) -> Result<Transposition> {
    if u.n_pairs() != 2 || u.is_zero() {
        return Err(Error::Domain(format!(
            "γ is defined on nonzero 4-bit vectors, got {u}"
        )));
    }
    Ok(gamma_table()[u.bits() as usize - 1])
}

pub fn s6_verify() -> bool {
    s6_verify_with(&gamma_table())
}

/// Checks that `table` is a bijection onto the 15 transpositions and that
/// γ(π_u(x)) = χ_{γ(u)}(γ(x)) for all nonzero u, x.
pub fn s6_verify_with(table: &GammaTable) -> bool {
    let mut seen = table.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != 15 {
        return false;
    }
    (1u128..16).all(|u| {
        (1u128..16).all(|x| {
            let image = if inner_bits(u, x) { x ^ u } else { x };
            let g = |v: u128| table[v as usize - 1];
            g(image) == g(u).conjugate(&g(x))
        })
    })
}

/// Completes fixed rows (0-indexed position, vector) to a symplectic matrix
/// B, i.e. one with rowᵢᵀ P rowⱼ = P_ij. Free rows are filled in position
/// order, each with the lexicographically smallest admissible vector.
pub fn complete_rows(n_pairs: usize, fixed: &[(usize, PauliVector)]) -> Result<SymplecticMatrix> {
    let len = 2 * n_pairs;
    if fixed.is_empty() {
        return SymplecticMatrix::identity(n_pairs);
    }
    let mut rows: Vec<Option<u128>> = vec![None; len];
    let mut span = Vec::new();
    for &(pos, v) in fixed {
        if pos >= len || v.len() != len {
            return Err(Error::Dimension(format!(
                "row {pos} / vector {v} outside {len}x{len}"
            )));
        }
        if rows[pos].is_some() {
            return Err(Error::Constraint(format!("row {} fixed twice", pos + 1)));
        }
        rows[pos] = Some(v.bits());
        if !rref_insert(&mut span, v.bits()) {
            return Err(Error::Constraint(
                "fixed rows are linearly dependent".into(),
            ));
        }
    }
    for &(p, v) in fixed {
        for &(q, w) in fixed {
            if p < q && inner_bits(v.bits(), w.bits()) != (p ^ 1 == q) {
                return Err(Error::Constraint(format!(
                    "rows {} and {} violate the pairing relations",
                    p + 1,
                    q + 1
                )));
            }
        }
    }
    for i in 0..len {
        if rows[i].is_some() {
            continue;
        }
        let constraints: Vec<(u128, bool)> = rows
            .iter()
            .enumerate()
            .filter_map(|(j, r)| r.map(|d| (swap_pairs(d), j == i ^ 1)))
            .collect();
        let sol = solve_affine(len, &constraints)
            .ok_or_else(|| Error::Constraint("inconsistent completion system".into()))?;
        let v = if rows[i ^ 1].is_some() {
            sol.particular
        } else {
            // Homogeneous system: smallest solution outside the current span
            // is the kernel basis vector with the lowest pivot not in it.
            *sol.kernel
                .iter()
                .rev()
                .find(|&&k| rref_reduce(&span, k) != 0)
                .ok_or_else(|| Error::Constraint("no independent completion row".into()))?
        };
        if !rref_insert(&mut span, v) {
            return Err(Error::Constraint(
                "completion produced a dependent row".into(),
            ));
        }
        rows[i] = Some(v);
    }
    let m = BitMatrix::from_raw(rows.into_iter().map(Option::unwrap).collect(), len);
    SymplecticMatrix::new(m)
}

/// Symplectic B whose rows at the 1-based `row_positions` are the reduced
/// basis of the isotropic subspace `s`, in basis order.
pub fn complete_isotropic(s: &Subspace, row_positions: &[usize]) -> Result<SymplecticMatrix> {
    if !s.is_isotropic() {
        return Err(Error::Constraint("subspace is not isotropic".into()));
    }
    if row_positions.len() != s.dim() {
        return Err(Error::Dimension(format!(
            "{} positions for a {}-dimensional subspace",
            row_positions.len(),
            s.dim()
        )));
    }
    if row_positions.contains(&0) {
        return Err(Error::Dimension("row positions are 1-based".into()));
    }
    let fixed: Vec<(usize, PauliVector)> = row_positions
        .iter()
        .map(|&p| p - 1)
        .zip(s.basis())
        .collect();
    complete_rows(s.n_pairs(), &fixed)
}

/// A 4×4 (or, for a single pair, 2×2) symplectic block acting on pairs
/// `k` and `l` of an `n`-pair system.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TwoQubitOp {
    block: SymplecticMatrix,
    k: usize,
    l: Option<usize>,
    n: usize,
}

impl TwoQubitOp {
    pub fn new(block: SymplecticMatrix, k: usize, l: usize, n: usize) -> Result<Self> {
        if block.n_pairs() != 2 || k == l || k >= n || l >= n {
            return Err(Error::Dimension(format!(
                "two-pair op on pairs ({k},{l}) of {n} needs a 4x4 block and distinct pairs"
            )));
        }
        Ok(Self {
            block,
            k,
            l: Some(l),
            n,
        })
    }

    /// Formal single-pair op, used only when the whole system is one pair.
    pub fn single(block: SymplecticMatrix) -> Result<Self> {
        if block.n_pairs() != 1 {
            return Err(Error::Dimension("single-pair op needs a 2x2 block".into()));
        }
        Ok(Self {
            block,
            k: 0,
            l: None,
            n: 1,
        })
    }

    pub fn block(&self) -> &SymplecticMatrix {
        &self.block
    }

    pub fn pairs(&self) -> (usize, Option<usize>) {
        (self.k, self.l)
    }

    fn indices(&self) -> Vec<usize> {
        let mut idx = vec![2 * self.k, 2 * self.k + 1];
        if let Some(l) = self.l {
            idx.extend([2 * l, 2 * l + 1]);
        }
        idx
    }

    /// The block placed in an identity matrix on rows/columns
    /// 2k, 2k+1, 2l, 2l+1 (0-indexed).
    pub fn embed(&self) -> SymplecticMatrix {
        let idx = self.indices();
        let mut m = BitMatrix::identity_raw(2 * self.n);
        for (r, &ri) in idx.iter().enumerate() {
            for (c, &ci) in idx.iter().enumerate() {
                m.set(ri, ci, self.block.as_matrix().get(r, c));
            }
        }
        SymplecticMatrix::from_raw_unchecked(m)
    }

    /// E·W computed on the affected rows only.
    fn left_apply(&self, w: &BitMatrix) -> BitMatrix {
        let idx = self.indices();
        let old = w.raw_rows();
        let mut rows = old.to_vec();
        for (r, &ri) in idx.iter().enumerate() {
            let mut acc = 0u128;
            for (c, &ci) in idx.iter().enumerate() {
                if self.block.as_matrix().get(r, c) {
                    acc ^= old[ci];
                }
            }
            rows[ri] = acc;
        }
        BitMatrix::from_raw(rows, w.ncols())
    }
}

/// Product of the embedded ops in list order.
pub fn recompose(n_pairs: usize, ops: &[TwoQubitOp]) -> Result<SymplecticMatrix> {
    let mut acc = SymplecticMatrix::identity(n_pairs)?;
    for op in ops {
        acc = acc.compose(&op.embed())?;
    }
    Ok(acc)
}

/// First 4×4 symplectic G (in enumeration order) with G·from = to for
/// every listed pair.
fn find_sp4(constraints: &[(u128, u128)]) -> SymplecticMatrix {
    sp4()
        .iter()
        .find(|g| {
            let m = g.as_matrix();
            constraints
                .iter()
                .all(|&(from, to)| m.mul_vec_raw(from) == to)
        })
        .cloned()
        .expect("Sp(4,2) acts transitively on admissible column pairs")
}

fn pair_bits(v: u128, len: usize, j: usize) -> u128 {
    (v >> (len - 2 - 2 * j)) & 3
}

/// Factors A into embedded two-pair operations whose product, in list
/// order, equals A. Columns are cleared pair by pair: first the phase
/// column of pair c is swept onto e_{2c} with single-column moves, then the
/// flip column onto e_{2c+1} with moves that fix e_{2c}. Each move is a
/// 4×4 symplectic matrix looked up in the 720-element group; the final
/// in-pair corrections fix the helper pair so finished pairs stay intact.
pub fn decompose_two_qubit(a: &SymplecticMatrix) -> Result<Vec<TwoQubitOp>> {
    let n = a.n_pairs();
    if a.is_identity() {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![TwoQubitOp::single(a.clone())?]);
    }
    let len = 2 * n;
    let mut w = a.as_matrix().clone();
    let mut applied: Vec<TwoQubitOp> = Vec::new();
    let mut push = |w: &mut BitMatrix, g: SymplecticMatrix, k: usize, l: usize| {
        if g.is_identity() {
            return;
        }
        let op = TwoQubitOp::new(g, k, l, n).expect("valid pair indices");
        *w = op.left_apply(w);
        applied.push(op);
    };
    const E1: u128 = 0b1000;
    const E2: u128 = 0b0100;
    const E3: u128 = 0b0010;
    const E4: u128 = 0b0001;
    for c in 0..n {
        let helper = if c + 1 < n { c + 1 } else { c - 1 };
        let col = |w: &BitMatrix, j: usize| w.column(j).expect("square").bits();

        for l in c + 1..n {
            let a_col = col(&w, 2 * c);
            let al = pair_bits(a_col, len, l);
            if al != 0 {
                let alpha = (pair_bits(a_col, len, c) << 2) | al;
                push(&mut w, find_sp4(&[(alpha, E1)]), c, l);
            }
        }
        let ac = pair_bits(col(&w, 2 * c), len, c);
        if ac != 0b10 {
            push(
                &mut w,
                find_sp4(&[(ac << 2, E1), (E3, E3), (E4, E4)]),
                c,
                helper,
            );
        }

        for l in c + 1..n {
            let b_col = col(&w, 2 * c + 1);
            let bl = pair_bits(b_col, len, l);
            if bl != 0 {
                let beta = (pair_bits(b_col, len, c) << 2) | bl;
                push(&mut w, find_sp4(&[(E1, E1), (beta, E2)]), c, l);
            }
        }
        let bc = pair_bits(col(&w, 2 * c + 1), len, c);
        if bc != 0b01 {
            push(
                &mut w,
                find_sp4(&[(E1, E1), (bc << 2, E2), (E3, E3), (E4, E4)]),
                c,
                helper,
            );
        }
    }
    debug_assert!(w.is_identity());
    if !w.is_identity() {
        return Err(Error::Constraint(
            "reduction did not reach the identity".into(),
        ));
    }
    // G_t⋯G_1·A = I, so A = G_1⁻¹⋯G_t⁻¹.
    Ok(applied
        .into_iter()
        .map(|op| TwoQubitOp {
            block: op.block.inverse(),
            ..op
        })
        .collect())
}

/// Generators used by the CNOT identity, in product order.
pub const CNOT_GENERATORS: [&str; 3] = ["1000", "1001", "0001"];

/// Binary action of CNOT (control pair 1, target pair 2) on (z₁,x₁,z₂,x₂):
/// z₁′ = z₁+z₂, x₁′ = x₁, z₂′ = z₂, x₂′ = x₁+x₂.
pub fn cnot_symplectic() -> SymplecticMatrix {
    "1010\n0100\n0010\n0101"
        .parse()
        .expect("CNOT is symplectic")
}

pub fn cnot_generators() -> Vec<Transvection> {
    CNOT_GENERATORS
        .iter()
        .map(|s| Transvection::new(s.parse().expect("literal")).expect("nonzero"))
        .collect()
}

/// True iff the product of `seq` maps all 16 vectors exactly like CNOT.
pub fn matches_cnot(seq: &[Transvection]) -> bool {
    let Ok(m) = compose(2, seq) else {
        return false;
    };
    let cnot = cnot_symplectic();
    (0u128..16).all(|x| m.as_matrix().mul_vec_raw(x) == cnot.as_matrix().mul_vec_raw(x))
}

/// Transvections whose vector touches at most two pairs, ascending.
pub fn local_generators(n_pairs: usize) -> Vec<Transvection> {
    let len = 2 * n_pairs;
    let mut out = Vec::new();
    // Enumerate by support instead of scanning 4ⁿ words.
    for k in 0..n_pairs {
        for a in 1u128..4 {
            out.push(a << (len - 2 - 2 * k));
            for l in k + 1..n_pairs {
                for b in 1u128..4 {
                    out.push((a << (len - 2 - 2 * k)) | (b << (len - 2 - 2 * l)));
                }
            }
        }
    }
    out.sort_unstable();
    out.into_iter()
        .map(|u| Transvection {
            u: PauliVector::from_raw(len, u),
        })
        .collect()
}

/// Shortest product of local generators equal to A, lexicographically
/// smallest among the shortest. Meets in the middle: a length-L sequence
/// is a prefix of ⌈L/2⌉ generators times a suffix of ⌊L/2⌋.
pub fn generator_sequence_search(
    a: &SymplecticMatrix,
    max_len: usize,
) -> Result<Option<Vec<Transvection>>> {
    let n = a.n_pairs();
    if a.is_identity() {
        return Ok(Some(Vec::new()));
    }
    let gens = local_generators(n);
    // levels[h]: all length-h sequences in lexicographic order with products.
    let mut levels: Vec<Vec<(Vec<usize>, BitMatrix)>> =
        vec![vec![(Vec::new(), BitMatrix::identity_raw(2 * n))]];
    for len in 1..=max_len {
        let h1 = len.div_ceil(2);
        let h2 = len / 2;
        while levels.len() <= h1 {
            let prev = levels.last().expect("nonempty");
            let mut next = Vec::with_capacity(prev.len() * gens.len());
            for (seq, m) in prev {
                for (gi, g) in gens.iter().enumerate() {
                    let mut s = seq.clone();
                    s.push(gi);
                    next.push((s, right_mul_transvection(m, g.u.bits())));
                }
            }
            levels.push(next);
        }
        let mut suffixes: HashMap<&[u128], &[usize]> = HashMap::new();
        for (seq, m) in &levels[h2] {
            suffixes.entry(m.raw_rows()).or_insert(seq.as_slice());
        }
        for (seq, m) in &levels[h1] {
            let target = SymplecticMatrix::from_raw_unchecked(m.clone())
                .inverse()
                .as_matrix()
                .mul_raw(a.as_matrix());
            if let Some(suffix) = suffixes.get(target.raw_rows()) {
                return Ok(Some(
                    seq.iter().chain(suffix.iter()).map(|&i| gens[i]).collect(),
                ));
            }
        }
    }
    Ok(None)
}

/// Dense complex matrix of dimension 2^n for n ≤ 3 pairs' worth of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallUnitary {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SmallUnitary {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    /// σ₀₀ = I, σ₀₁ = σx, σ₁₀ = σz, σ₁₁ = σy.
    pub fn pauli(label: u8) -> Self {
        let (z, o, i) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        );
        let entries = match label {
            0 => vec![o, z, z, o],
            1 => vec![z, o, o, z],
            2 => vec![o, z, z, -o],
            3 => vec![z, -i, i, z],
            _ => panic!("pair label out of range"),
        };
        Self { dim: 2, entries }
    }

    /// σ_v = σ_{v₁} ⊗ σ_{v₂} ⊗ ⋯, first pair as the leftmost factor.
    pub fn pauli_tensor(v: &PauliVector) -> Self {
        v.labels()
            .map(Self::pauli)
            .reduce(|acc, p| acc.kron(&p))
            .expect("at least one pair")
    }

    /// U_u = (I + iσ_u)/√2.
    pub fn generator(u: &PauliVector) -> Self {
        let s = Self::pauli_tensor(u);
        let id = Self::identity(s.dim);
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let entries = id
            .entries
            .iter()
            .zip(&s.entries)
            .map(|(a, b)| (a + Complex64::new(0.0, 1.0) * b) * k)
            .collect();
        Self {
            dim: s.dim,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.entries[i * self.dim + j];
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        entries[(i * other.dim + k) * d + j * other.dim + l] =
                            a * other.entries[k * other.dim + l];
                    }
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        assert_eq!(d, other.dim);
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                for j in 0..d {
                    entries[i * d + j] += a * other.entries[k * d + j];
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j].conj();
            }
        }
        Self { dim: d, entries }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// If self = c·other for a unit-modulus c (within `tol`), returns c.
    pub fn phase_relative_to(&self, other: &Self, tol: f64) -> Option<Complex64> {
        let d = self.dim as f64;
        let c = other
            .adjoint()
            .mul(self)
            .entries
            .iter()
            .step_by(self.dim + 1)
            .sum::<Complex64>()
            / d;
        if (c.norm() - 1.0).abs() > tol {
            return None;
        }
        let scaled = Self {
            dim: other.dim,
            entries: other.entries.iter().map(|e| e * c).collect(),
        };
        (self.max_abs_diff(&scaled) <= tol).then_some(c)
    }
}

pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Checks U_u σ_x U_u† = (phase)·σ_{π_u(x)} for every x, with U_u unitary.
pub fn unitary_cross_check(u: &PauliVector) -> Result<bool> {
    let n = u.n_pairs();
    if n > 2 {
        return Err(Error::Unsupported(format!(
            "unitary cross-check is limited to 2 pairs, got {n}"
        )));
    }
    let t = Transvection::new(*u)?;
    let g = SmallUnitary::generator(u);
    let g_dag = g.adjoint();
    if g.mul(&g_dag).max_abs_diff(&SmallUnitary::identity(g.dim())) > 1e-12 {
        return Ok(false);
    }
    for x in 0..=len_mask(2 * n) {
        let xv = PauliVector::from_raw(2 * n, x);
        let conj = g.mul(&SmallUnitary::pauli_tensor(&xv)).mul(&g_dag);
        let image = SmallUnitary::pauli_tensor(&t.apply(&xv)?);
        if conj.phase_relative_to(&image, UNITARY_TOLERANCE).is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Product of `4n² + 8` random nonzero transvections.
pub fn random_symplectic<R: Rng + ?Sized>(n_pairs: usize, rng: &mut R) -> Result<SymplecticMatrix> {
    let len = 2 * n_pairs;
    let mut acc = SymplecticMatrix::identity(n_pairs)?.into_inner();
    for _ in 0..4 * n_pairs * n_pairs + 8 {
        let u = loop {
            let u = rng.gen::<u128>() & len_mask(len);
            if u != 0 {
                break u;
            }
        };
        acc = right_mul_transvection(&acc, u);
    }
    Ok(SymplecticMatrix::from_raw_unchecked(acc))
}

/// Random `k`-dimensional isotropic subspace: the flip-position rows of the
/// first `k` pairs of a random symplectic matrix.
pub fn random_isotropic<R: Rng + ?Sized>(
    n_pairs: usize,
    k: usize,
    rng: &mut R,
) -> Result<Subspace> {
    if k > n_pairs {
        return Err(Error::Dimension(format!(
            "isotropic dimension {k} exceeds {n_pairs}"
        )));
    }
    let a = random_symplectic(n_pairs, rng)?;
    let rows: Vec<PauliVector> = (0..k).map(|j| a.row(2 * j + 1)).collect();
    Subspace::span(n_pairs, &rows)
}
