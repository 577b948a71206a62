//! One distillation step on n i.i.d. Bell-diagonal pairs keeping m of them.
//!
//! A step is stored as the symplectic matrix B = AP. Rows 2m+2, 2m+4, …, 2n
//! of B (1-based) span the checked subspace S; the first 2m rows fix the
//! output labels.
//!
//! Closed form for the output: with s the signed transform of p,
//!
//!   success  = 2^{−(n−m)} Σ_{x∈S} s_x
//!   q_y      = 2^{n−m} Σ_{x∈S+t(y)} p_x / Σ_{x∈S} s_x
//!
//! where t(y) = PAᵀPȳ. Since A⁻¹ = PAᵀP and B = AP, the columns of PAᵀP
//! are the pair-swapped rows of B, so t(y) = Σ_j y_j · row_{j⊕1}(B) over
//! the first 2m rows (0-based j, ⊕1 swapping the two rows of a pair).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bellstate::{product_raw, s_of_p, BellDiagonal, JointBellState};
use crate::error::{Error, Result};
use crate::gf2::{pos_bit, PauliVector, Subspace, SymplecticMatrix};
use crate::symplectic::{complete_rows, compose, random_isotropic, Transvection};

/// Success below this is treated as zero.
pub const SUCCESS_FLOOR: f64 = 1e-15;

/// Largest n for which the 4ⁿ-term oracle runs.
pub const ORACLE_MAX_PAIRS: usize = 8;

#[derive(Clone, PartialEq, Eq)]
pub struct DistillationStep {
    n: usize,
    m: usize,
    b: SymplecticMatrix,
    s: Subspace,
}

impl DistillationStep {
    /// Wraps B = AP directly.
    pub fn from_matrix(m: usize, b: SymplecticMatrix) -> Result<Self> {
        let n = b.n_pairs();
        if m == 0 || m >= n {
            return Err(Error::Dimension(format!(
                "need 1 ≤ m < n, got m={m}, n={n}"
            )));
        }
        let rows: Vec<PauliVector> = (m..n).map(|j| b.row(2 * j + 1)).collect();
        let s = Subspace::span(n, &rows)?;
        Ok(Self { n, m, b, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &SymplecticMatrix {
        &self.b
    }

    /// A = B·P.
    pub fn a_matrix(&self) -> SymplecticMatrix {
        self.b.times_form()
    }

    pub fn subspace(&self) -> &Subspace {
        &self.s
    }

    pub fn output_rows(&self) -> Vec<PauliVector> {
        (0..2 * self.m).map(|i| self.b.row(i)).collect()
    }

    /// t(y) for a raw 2m-bit label.
    pub(crate) fn shift_raw(&self, y: u128) -> u128 {
        let rows = self.b.as_matrix().raw_rows();
        let len = 2 * self.m;
        (0..len)
            .filter(|&j| y & pos_bit(len, j) != 0)
            .fold(0, |acc, j| acc ^ rows[j ^ 1])
    }

    pub fn shift(&self, y: &PauliVector) -> Result<PauliVector> {
        if y.n_pairs() != self.m {
            return Err(Error::Dimension(format!(
                "label {y} for {} output pairs",
                self.m
            )));
        }
        Ok(PauliVector::from_raw(2 * self.n, self.shift_raw(y.bits())))
    }

    /// "n m", the S basis, then the 2m output rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m);
        for r in self.s.basis() {
            out.push_str(&format!("{r}\n"));
        }
        for r in self.output_rows() {
            out.push_str(&format!("{r}\n"));
        }
        out
    }
}

impl fmt::Debug for DistillationStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DistillationStep(n={}, m={}, S={:?})",
            self.n, self.m, self.s
        )
    }
}

impl FromStr for DistillationStep {
    type Err = Error;

    /// Reads the `to_text` format; the output rows are optional and, when
    /// absent, the matrix is completed deterministically.
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty step".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad header {header:?}")))
            })
            .collect::<Result<_>>()?;
        let [n, m] = nums[..] else {
            return Err(Error::Parse(format!(
                "header must be \"n m\", got {header:?}"
            )));
        };
        if m == 0 || m >= n {
            return Err(Error::Dimension(format!(
                "need 1 ≤ m < n, got m={m}, n={n}"
            )));
        }
        let vectors: Vec<PauliVector> = lines.map(str::parse).collect::<Result<_>>()?;
        if vectors.iter().any(|v| v.n_pairs() != n) {
            return Err(Error::Dimension(format!("rows must have {} bits", 2 * n)));
        }
        match vectors.len() {
            k if k == n - m => make_step(n, m, &vectors),
            k if k == n - m + 2 * m => {
                let (basis, outputs) = vectors.split_at(n - m);
                let mut fixed: Vec<(usize, PauliVector)> =
                    outputs.iter().copied().enumerate().collect();
                fixed.extend(s_positions(n, m).into_iter().zip(basis.iter().copied()));
                Self::from_matrix(m, complete_rows(n, &fixed)?)
            }
            k => Err(Error::Parse(format!(
                "expected {} or {} rows after the header, got {k}",
                n - m,
                n + m
            ))),
        }
    }
}

/// 0-based positions of the S rows: 2j+1 for j = m..n.
fn s_positions(n: usize, m: usize) -> Vec<usize> {
    (m..n).map(|j| 2 * j + 1).collect()
}

#[derive(Clone, PartialEq, Debug)]
pub struct StepOutcome {
    pub state: JointBellState,
    pub success: f64,
}

impl StepOutcome {
    pub fn fidelity(&self) -> f64 {
        self.state.fidelity()
    }
}

/// Completes the isotropic basis to B with the basis at rows 2m+2, …, 2n.
pub fn make_step(n: usize, m: usize, s_basis: &[PauliVector]) -> Result<DistillationStep> {
    if m == 0 || m >= n {
        return Err(Error::Dimension(format!(
            "need 1 ≤ m < n, got m={m}, n={n}"
        )));
    }
    if s_basis.len() != n - m {
        return Err(Error::Dimension(format!(
            "{} basis vectors given, {} needed",
            s_basis.len(),
            n - m
        )));
    }
    let fixed: Vec<(usize, PauliVector)> = s_positions(n, m)
        .into_iter()
        .zip(s_basis.iter().copied())
        .collect();
    DistillationStep::from_matrix(m, complete_rows(n, &fixed)?)
}

/// Sum of `table` products over `shift + span(basis)`.
#[inline]
pub(crate) fn coset_sum(table: &[f64; 4], n: usize, basis: &[u128], shift: u128) -> f64 {
    let mut x = shift;
    let mut acc = product_raw(table, n, x);
    for i in 1u64..1 << basis.len() {
        x ^= basis[i.trailing_zeros() as usize];
        acc += product_raw(table, n, x);
    }
    acc
}

/// Σ_{x∈S} s_x.
pub fn s_sum(p: &BellDiagonal, s: &Subspace) -> f64 {
    coset_sum(&s_of_p(p).values(), s.n_pairs(), s.raw_basis(), 0)
}

/// Fidelity and success from S alone.
pub fn cheap_scores(p: &BellDiagonal, s: &Subspace, m: usize) -> Result<(f64, f64)> {
    let n = s.n_pairs();
    if s.dim() + m != n {
        return Err(Error::Dimension(format!(
            "dim S = {} with m = {m}, n = {n}",
            s.dim()
        )));
    }
    let k = (n - m) as i32;
    let denom = s_sum(p, s);
    let success = denom * 2f64.powi(-k);
    if success <= SUCCESS_FLOOR {
        return Err(Error::Degenerate(
            "step never succeeds on this input".into(),
        ));
    }
    let kept = coset_sum(&p.probs(), n, s.raw_basis(), 0);
    Ok((2f64.powi(k) * kept / denom, success))
}

pub fn apply_step(p: &BellDiagonal, step: &DistillationStep) -> Result<StepOutcome> {
    let (n, m) = (step.n, step.m);
    let k = (n - m) as i32;
    let denom = s_sum(p, &step.s);
    let success = denom * 2f64.powi(-k);
    if success <= SUCCESS_FLOOR {
        return Err(Error::Degenerate(
            "step never succeeds on this input".into(),
        ));
    }
    let probs = p.probs();
    let basis = step.s.raw_basis();
    let scale = 2f64.powi(k) / denom;
    let q: Vec<f64> = (0u128..1 << (2 * m))
        .map(|y| scale * coset_sum(&probs, n, basis, step.shift_raw(y)))
        .collect();
    Ok(StepOutcome {
        state: JointBellState::new(m, q)?,
        success,
    })
}

/// Direct evaluation: z = A·x for every input label x, kept when the flip
/// bits of pairs m+1…n of z vanish, output label = first 2m bits of z.
pub fn brute_force_oracle(p: &BellDiagonal, step: &DistillationStep) -> Result<StepOutcome> {
    let (n, m) = (step.n, step.m);
    if n > ORACLE_MAX_PAIRS {
        return Err(Error::Resource(format!(
            "oracle enumerates 4^{n} labels; limit is n = {ORACLE_MAX_PAIRS}"
        )));
    }
    let a = step.a_matrix();
    let flip_mask: u128 = (m..n)
        .map(|j| pos_bit(2 * n, 2 * j + 1))
        .fold(0, |a, b| a | b);
    let probs = p.probs();
    let mut q = vec![0.0; 1 << (2 * m)];
    let mut kept = 0.0;
    for x in 0u128..1 << (2 * n) {
        let z = a.as_matrix().mul_vec_raw(x);
        if z & flip_mask != 0 {
            continue;
        }
        let w = product_raw(&probs, n, x);
        q[(z >> (2 * (n - m))) as usize] += w;
        kept += w;
    }
    if kept <= SUCCESS_FLOOR {
        return Err(Error::Degenerate(
            "step never succeeds on this input".into(),
        ));
    }
    for v in q.iter_mut() {
        *v /= kept;
    }
    Ok(StepOutcome {
        state: JointBellState::new(m, q)?,
        success: kept,
    })
}

/// n = 2, m = 1, S = span{1111}.
pub fn dej_step() -> DistillationStep {
    make_step(2, 1, &["1111".parse().expect("literal")]).expect("isotropic")
}

/// The four generator vectors of the n = 4 scheme, in product order.
pub const PROPOSED_GENERATORS: [&str; 4] = ["10010000", "01000001", "10001100", "00011000"];

/// Span of rows 4, 6, 8 of the generator product A (the listed vectors).
pub const PROPOSED_LISTED_SPAN: [&str; 3] = ["10111110", "01101100", "11101011"];

/// Rows 1 and 2 of A.
pub const PROPOSED_LISTED_OUTPUT: [&str; 2] = ["01100010", "10101010"];

pub fn proposed_generators() -> Vec<Transvection> {
    PROPOSED_GENERATORS
        .iter()
        .map(|s| Transvection::new(s.parse().expect("literal")).expect("nonzero"))
        .collect()
}

/// A = π₁·π₂·π₃·π₄ for the four generators.
pub fn proposed_a_matrix() -> SymplecticMatrix {
    compose(4, &proposed_generators()).expect("4-pair generators")
}

pub fn listed_proposed_subspace() -> Subspace {
    let rows: Vec<PauliVector> = PROPOSED_LISTED_SPAN
        .iter()
        .map(|s| s.parse().expect("literal"))
        .collect();
    Subspace::span(4, &rows).expect("4 pairs")
}

/// Which matrix carries the listed span in rows 4, 6, 8.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowReading {
    /// Rows of A itself.
    A,
    /// Rows of AP.
    AP,
}

/// Readings (matrix, reversed product order) under which rows 4, 6, 8
/// span the listed subspace.
pub fn proposed_readings() -> Vec<(RowReading, bool)> {
    let listed = listed_proposed_subspace();
    let mut gens = proposed_generators();
    let forward = compose(4, &gens).expect("4 pairs");
    gens.reverse();
    let reverse = compose(4, &gens).expect("4 pairs");
    let mut out = Vec::new();
    for (reversed, a) in [(false, forward), (true, reverse)] {
        for (reading, mat) in [(RowReading::A, a.clone()), (RowReading::AP, a.times_form())] {
            let rows = [mat.row(3), mat.row(5), mat.row(7)];
            if Subspace::span(4, &rows).expect("4 pairs") == listed {
                out.push((reading, reversed));
            }
        }
    }
    out
}

/// n = 4, m = 1 step built from the generator product A, with B = AP.
/// The listed vectors are rows of A; the checked subspace is therefore
/// their pair-swapped images.
pub fn proposed_step() -> DistillationStep {
    DistillationStep::from_matrix(1, proposed_a_matrix().times_form()).expect("n = 4, m = 1")
}

/// Random step with S drawn uniformly enough for property tests.
pub fn random_step<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<DistillationStep> {
    let s = random_isotropic(n, n - m, rng)?;
    make_step(n, m, &s.basis())
}

/// Random full-support distribution.
pub fn random_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonal {
    let w: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>() + 1e-3);
    BellDiagonal::normalized(w).expect("positive weights")
}

/// Random input sorted descending with p₀₀ above one half.
pub fn random_ordered_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonal {
    let f = 0.5 + 0.5 * rng.gen::<f64>().max(1e-6);
    let mut rest: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>() + 1e-6);
    rest.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = rest.iter().sum();
    let r = rest.map(|x| x / total * (1.0 - f));
    BellDiagonal::normalized([f, r[0], r[1], r[2]]).expect("positive weights")
}
