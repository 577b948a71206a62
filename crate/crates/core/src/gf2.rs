//! Bit-packed linear algebra over Z₂ with the pairwise symplectic form.
//!
//! A [`PauliVector`] holds `2n` bits. Positions are numbered 1..=2n in text
//! and documentation (position 1 is the leftmost character of the bitstring)
//! and 0..2n internally. Pair `j` (0-indexed) owns internal positions `2j`
//! (phase bit) and `2j + 1` (flip bit). Internally position `i` lives at bit
//! `2n - 1 - i` of a `u128`, so integer order on the packed word is the same
//! as lexicographic order on bitstrings.
//!
//! Per-pair labels: `00` Φ⁺ / σ₀, `01` Ψ⁺ / σx, `10` Φ⁻ / σz, `11` Ψ⁻ / σy.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported pair count (two bits per pair in a `u128`).
pub const MAX_PAIRS: usize = 64;

const LOW_OF_PAIR: u128 = 0x5555_5555_5555_5555_5555_5555_5555_5555;

/// Applies P: exchanges the two bits of every pair.
#[inline]
pub(crate) fn swap_pairs(bits: u128) -> u128 {
    ((bits & LOW_OF_PAIR) << 1) | ((bits >> 1) & LOW_OF_PAIR)
}

#[inline]
pub(crate) fn parity(bits: u128) -> bool {
    bits.count_ones() & 1 == 1
}

/// vᵀPw on packed words.
#[inline]
pub(crate) fn inner_bits(v: u128, w: u128) -> bool {
    parity(v & swap_pairs(w))
}

#[inline]
pub(crate) fn len_mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

/// Packed bit for 0-indexed position `pos` in a vector of `len` bits.
#[inline]
pub(crate) fn pos_bit(len: usize, pos: usize) -> u128 {
    1u128 << (len - 1 - pos)
}

#[inline]
fn leading_bit(v: u128) -> u32 {
    127 - v.leading_zeros()
}

fn check_pairs(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PAIRS {
        return Err(Error::Dimension(format!(
            "pair count must be in 1..={MAX_PAIRS}, got {n}"
        )));
    }
    Ok(())
}

/// Element of Z₂^{2n}; labels a product of Bell states or a Pauli tensor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliVector {
    len: u8,
    bits: u128,
}

impl PauliVector {
    pub fn new(n_pairs: usize, bits: u128) -> Result<Self> {
        check_pairs(n_pairs)?;
        let len = 2 * n_pairs;
        if bits & !len_mask(len) != 0 {
            return Err(Error::Dimension(format!(
                "bits {bits:#x} do not fit in {len} positions"
            )));
        }
        Ok(Self::from_raw(len, bits))
    }

    pub fn zero(n_pairs: usize) -> Result<Self> {
        Self::new(n_pairs, 0)
    }

    /// Unit vector with a one at 0-indexed `pos`.
    pub fn unit(n_pairs: usize, pos: usize) -> Result<Self> {
        check_pairs(n_pairs)?;
        if pos >= 2 * n_pairs {
            return Err(Error::Dimension(format!("position {pos} out of range")));
        }
        Ok(Self::from_raw(2 * n_pairs, pos_bit(2 * n_pairs, pos)))
    }

    /// Builds a vector from per-pair labels (each in 0..4, phase bit high).
    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        check_pairs(labels.len())?;
        let mut bits = 0u128;
        for &l in labels {
            if l > 3 {
                return Err(Error::Domain(format!("pair label {l} is not two bits")));
            }
            bits = (bits << 2) | l as u128;
        }
        Ok(Self::from_raw(2 * labels.len(), bits))
    }

    #[inline]
    pub(crate) fn from_raw(len: usize, bits: u128) -> Self {
        debug_assert!((2..=128).contains(&len) && len.is_multiple_of(2));
        debug_assert_eq!(bits & !len_mask(len), 0);
        Self {
            len: len as u8,
            bits,
        }
    }

    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn n_pairs(&self) -> usize {
        self.len as usize / 2
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len(), "position {pos} out of range");
        self.bits & pos_bit(self.len(), pos) != 0
    }

    pub fn with_bit(mut self, pos: usize, value: bool) -> Self {
        assert!(pos < self.len(), "position {pos} out of range");
        let b = pos_bit(self.len(), pos);
        if value {
            self.bits |= b;
        } else {
            self.bits &= !b;
        }
        self
    }

    /// Two-bit label of pair `j` (0-indexed).
    #[inline]
    pub fn pair_label(&self, j: usize) -> u8 {
        assert!(j < self.n_pairs());
        ((self.bits >> (self.len() - 2 - 2 * j)) & 3) as u8
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.n_pairs()).map(move |j| self.pair_label(j))
    }

    /// Number of pairs carrying a non-identity label.
    pub fn support(&self) -> usize {
        self.labels().filter(|&l| l != 0).count()
    }

    /// P·v (exchange both bits of every pair).
    pub fn swap_pairs(&self) -> Self {
        Self::from_raw(self.len(), swap_pairs(self.bits))
    }

    pub fn inner(&self, other: &PauliVector) -> Result<bool> {
        symplectic_inner(self, other)
    }

    /// First `2m` positions as a vector over `m` pairs.
    pub fn prefix_pairs(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n_pairs() {
            return Err(Error::Dimension(format!("cannot take {m} leading pairs")));
        }
        Ok(Self::from_raw(2 * m, self.bits >> (self.len() - 2 * m)))
    }
}

impl BitXor for PauliVector {
    type Output = PauliVector;

    /// Panics on length mismatch.
    fn bitxor(self, rhs: Self) -> Self {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        Self::from_raw(self.len(), self.bits ^ rhs.bits)
    }
}

impl BitXorAssign for PauliVector {
    fn bitxor_assign(&mut self, rhs: Self) {
        *self = *self ^ rhs;
    }
}

impl fmt::Display for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.len())
    }
}

impl fmt::Debug for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliVector({self})")
    }
}

impl FromStr for PauliVector {
    type Err = Error;

    /// Accepts `0`/`1` characters; spaces and underscores are ignored so the
    /// pair-grouped form `10 11 11 10` parses too.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u128;
        let mut len = 0usize;
        for c in s.chars() {
            match c {
                '0' | '1' => {
                    if len == 128 {
                        return Err(Error::Parse(format!("bitstring too long: {s:?}")));
                    }
                    bits = (bits << 1) | (c == '1') as u128;
                    len += 1;
                }
                ' ' | '_' | '\t' => {}
                _ => return Err(Error::Parse(format!("invalid character {c:?} in {s:?}"))),
            }
        }
        if len == 0 || !len.is_multiple_of(2) {
            return Err(Error::Parse(format!(
                "bitstring {s:?} must have a positive even length"
            )));
        }
        Ok(Self::from_raw(len, bits))
    }
}

/// vᵀPw = Σⱼ (v₂ⱼ₋₁w₂ⱼ + v₂ⱼw₂ⱼ₋₁) mod 2. Zero iff σ_v and σ_w commute.
pub fn symplectic_inner(v: &PauliVector, w: &PauliVector) -> Result<bool> {
    if v.len != w.len {
        return Err(Error::Dimension(format!(
            "inner product of lengths {} and {}",
            v.len(),
            w.len()
        )));
    }
    Ok(inner_bits(v.bits, w.bits))
}

/// The block-diagonal form P = diag([[0,1],[1,0]], …) for `n` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    n: usize,
}

impl SymplecticForm {
    pub fn new(n_pairs: usize) -> Result<Self> {
        check_pairs(n_pairs)?;
        Ok(Self { n: n_pairs })
    }

    pub fn n_pairs(&self) -> usize {
        self.n
    }

    /// Entry P_ij (0-indexed).
    pub fn entry(&self, i: usize, j: usize) -> bool {
        i != j && i / 2 == j / 2
    }

    pub fn apply(&self, v: &PauliVector) -> Result<PauliVector> {
        if v.n_pairs() != self.n {
            return Err(Error::Dimension("form and vector sizes differ".into()));
        }
        Ok(v.swap_pairs())
    }

    pub fn matrix(&self) -> BitMatrix {
        let len = 2 * self.n;
        BitMatrix::from_raw((0..len).map(|i| pos_bit(len, i ^ 1)).collect(), len)
    }
}

/// Dense bit matrix; every row is a [`PauliVector`] of the same length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: Vec<u128>,
    cols: usize,
}

impl BitMatrix {
    pub fn new(rows: Vec<PauliVector>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Dimension("matrix needs at least one row".into()))?;
        let cols = first.len();
        if rows.len() > 128 {
            return Err(Error::Dimension("more than 128 rows".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("rows have different lengths".into()));
        }
        Ok(Self::from_raw(rows.iter().map(|r| r.bits).collect(), cols))
    }

    pub fn identity(n_pairs: usize) -> Result<Self> {
        check_pairs(n_pairs)?;
        Ok(Self::identity_raw(2 * n_pairs))
    }

    pub(crate) fn identity_raw(len: usize) -> Self {
        Self::from_raw((0..len).map(|i| pos_bit(len, i)).collect(), len)
    }

    pub(crate) fn from_raw(rows: Vec<u128>, cols: usize) -> Self {
        debug_assert!(!rows.is_empty() && (2..=128).contains(&cols) && cols.is_multiple_of(2));
        Self { rows, cols }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows.len() == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.nrows() && j < self.cols);
        self.rows[i] & pos_bit(self.cols, j) != 0
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.nrows() && j < self.cols);
        let b = pos_bit(self.cols, j);
        if value {
            self.rows[i] |= b;
        } else {
            self.rows[i] &= !b;
        }
    }

    pub fn row(&self, i: usize) -> PauliVector {
        PauliVector::from_raw(self.cols, self.rows[i])
    }

    pub fn rows(&self) -> impl Iterator<Item = PauliVector> + '_ {
        self.rows
            .iter()
            .map(|&r| PauliVector::from_raw(self.cols, r))
    }

    pub(crate) fn raw_rows(&self) -> &[u128] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Result<PauliVector> {
        if !self.nrows().is_multiple_of(2) {
            return Err(Error::Dimension("odd row count".into()));
        }
        let len = self.nrows();
        let mut bits = 0u128;
        for (i, &r) in self.rows.iter().enumerate() {
            if r & pos_bit(self.cols, j) != 0 {
                bits |= pos_bit(len, i);
            }
        }
        Ok(PauliVector::from_raw(len, bits))
    }

    pub fn transpose(&self) -> Result<BitMatrix> {
        let cols = (0..self.cols)
            .map(|j| self.column(j).map(|c| c.bits))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_raw(cols, self.nrows()))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, &r)| r == pos_bit(self.cols, i))
    }

    /// A·x over Z₂.
    pub fn mul_vec(&self, x: &PauliVector) -> Result<PauliVector> {
        if x.len() != self.cols || !self.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.nrows(),
                self.cols,
                x.len()
            )));
        }
        Ok(PauliVector::from_raw(
            self.nrows(),
            self.mul_vec_raw(x.bits),
        ))
    }

    #[inline]
    pub(crate) fn mul_vec_raw(&self, x: u128) -> u128 {
        let len = self.rows.len();
        let mut out = 0u128;
        for (i, &r) in self.rows.iter().enumerate() {
            if parity(r & x) {
                out |= 1u128 << (len - 1 - i);
            }
        }
        out
    }

    /// A·B over Z₂.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.nrows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows(),
                self.cols,
                other.nrows(),
                other.cols
            )));
        }
        Ok(self.mul_raw(other))
    }

    pub(crate) fn mul_raw(&self, other: &BitMatrix) -> BitMatrix {
        let rows = self
            .rows
            .iter()
            .map(|&r| {
                let mut acc = 0u128;
                for (k, &orow) in other.rows.iter().enumerate() {
                    if r & pos_bit(self.cols, k) != 0 {
                        acc ^= orow;
                    }
                }
                acc
            })
            .collect();
        BitMatrix::from_raw(rows, other.cols)
    }

    /// Right multiplication by P: swaps the two bits of every pair in each row.
    pub(crate) fn times_form(&self) -> BitMatrix {
        BitMatrix::from_raw(
            self.rows.iter().map(|&r| swap_pairs(r)).collect(),
            self.cols,
        )
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.rows().map(|r| r.to_string()))
            .finish()
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    /// One row bitstring per non-empty line.
    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<PauliVector>>>()?;
        BitMatrix::new(rows)
    }
}

pub fn mat_mul(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix> {
    a.mul(b)
}

pub fn mat_vec(a: &BitMatrix, x: &PauliVector) -> Result<PauliVector> {
    a.mul_vec(x)
}

/// True iff AᵀPA = P.
pub fn is_symplectic(a: &BitMatrix) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "symplectic test needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(is_symplectic_raw(a))
}

/// Columns cᵢ of A must satisfy cᵢᵀPcⱼ = P_ij.
fn is_symplectic_raw(a: &BitMatrix) -> bool {
    let t = a.transpose().expect("square matrix with even size");
    let len = a.ncols();
    let form = SymplecticForm { n: len / 2 };
    for i in 0..len {
        for j in i..len {
            if inner_bits(t.rows[i], t.rows[j]) != form.entry(i, j) {
                return false;
            }
        }
    }
    true
}

/// A bit matrix satisfying AᵀPA = P.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymplecticMatrix(BitMatrix);

impl SymplecticMatrix {
    pub fn new(inner: BitMatrix) -> Result<Self> {
        if !is_symplectic(&inner)? {
            return Err(Error::Constraint("matrix does not satisfy AᵀPA = P".into()));
        }
        Ok(Self(inner))
    }

    pub(crate) fn from_raw_unchecked(inner: BitMatrix) -> Self {
        debug_assert!(is_symplectic_raw(&inner));
        Self(inner)
    }

    pub fn identity(n_pairs: usize) -> Result<Self> {
        Ok(Self(BitMatrix::identity(n_pairs)?))
    }

    pub fn form(n_pairs: usize) -> Result<Self> {
        Ok(Self(SymplecticForm::new(n_pairs)?.matrix()))
    }

    pub fn n_pairs(&self) -> usize {
        self.0.cols / 2
    }

    pub fn as_matrix(&self) -> &BitMatrix {
        &self.0
    }

    pub fn into_inner(self) -> BitMatrix {
        self.0
    }

    pub fn row(&self, i: usize) -> PauliVector {
        self.0.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = PauliVector> + '_ {
        self.0.rows()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// A⁻¹ = PAᵀP.
    pub fn inverse(&self) -> SymplecticMatrix {
        let t = self.0.transpose().expect("square");
        // Left P swaps row pairs, right P swaps bits inside rows.
        let len = t.cols;
        let rows = (0..len).map(|i| swap_pairs(t.rows[i ^ 1])).collect();
        Self(BitMatrix::from_raw(rows, len))
    }

    /// Matrix product self·other (other is applied first to a vector).
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        Ok(Self(self.0.mul(&other.0)?))
    }

    pub fn apply(&self, x: &PauliVector) -> Result<PauliVector> {
        self.0.mul_vec(x)
    }

    /// B·P, also symplectic.
    pub fn times_form(&self) -> SymplecticMatrix {
        Self(self.0.times_form())
    }
}

impl fmt::Display for SymplecticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for SymplecticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymplecticMatrix{:?}", self.0)
    }
}

impl FromStr for SymplecticMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.parse()?)
    }
}

pub fn symplectic_inverse(a: &SymplecticMatrix) -> SymplecticMatrix {
    a.inverse()
}

/// Inserts `v` into a fully reduced basis sorted by descending pivot.
/// Returns false when `v` is already in the span.
pub(crate) fn rref_insert(basis: &mut Vec<u128>, v: u128) -> bool {
    let v = rref_reduce(basis, v);
    if v == 0 {
        return false;
    }
    let piv = leading_bit(v);
    for b in basis.iter_mut() {
        if (*b >> piv) & 1 == 1 {
            *b ^= v;
        }
    }
    let at = basis
        .iter()
        .position(|&b| leading_bit(b) < piv)
        .unwrap_or(basis.len());
    basis.insert(at, v);
    true
}

/// Clears every pivot bit of `basis` from `v`. With a fully reduced basis
/// this yields the smallest element of `v + span(basis)`.
#[inline]
pub(crate) fn rref_reduce(basis: &[u128], mut v: u128) -> u128 {
    for &b in basis {
        if (v >> leading_bit(b)) & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// Subspace of Z₂^{2n} held as a fully reduced row-echelon basis with
/// leftmost pivots, rows ordered by pivot (leftmost first). Equal subspaces
/// have identical representations; the derived order is lexicographic on
/// the basis rows.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    n: usize,
    basis: Vec<u128>,
}

impl Subspace {
    pub fn span(n_pairs: usize, vectors: &[PauliVector]) -> Result<Self> {
        check_pairs(n_pairs)?;
        let mut basis = Vec::new();
        for v in vectors {
            if v.n_pairs() != n_pairs {
                return Err(Error::Dimension(format!(
                    "vector {v} does not have {n_pairs} pairs"
                )));
            }
            rref_insert(&mut basis, v.bits);
        }
        Ok(Self { n: n_pairs, basis })
    }

    pub fn zero(n_pairs: usize) -> Result<Self> {
        Self::span(n_pairs, &[])
    }

    pub(crate) fn from_reduced(n: usize, basis: Vec<u128>) -> Self {
        Self { n, basis }
    }

    pub fn n_pairs(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> Vec<PauliVector> {
        self.basis
            .iter()
            .map(|&b| PauliVector::from_raw(2 * self.n, b))
            .collect()
    }

    pub(crate) fn raw_basis(&self) -> &[u128] {
        &self.basis
    }

    pub fn contains(&self, v: &PauliVector) -> bool {
        v.n_pairs() == self.n && rref_reduce(&self.basis, v.bits) == 0
    }

    /// All basis vectors mutually P-orthogonal.
    pub fn is_isotropic(&self) -> bool {
        self.basis
            .iter()
            .enumerate()
            .all(|(i, &a)| self.basis[i + 1..].iter().all(|&b| !inner_bits(a, b)))
    }

    pub fn elements(&self) -> CosetIter {
        CosetIter::new(2 * self.n, &self.basis, 0)
    }

    pub fn coset(&self, shift: &PauliVector) -> Result<CosetIter> {
        if shift.n_pairs() != self.n {
            return Err(Error::Dimension("coset shift has the wrong length".into()));
        }
        Ok(CosetIter::new(2 * self.n, &self.basis, shift.bits))
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.basis().iter().map(|r| r.to_string()))
            .finish()
    }
}

pub fn rref(n_pairs: usize, vectors: &[PauliVector]) -> Result<Subspace> {
    Subspace::span(n_pairs, vectors)
}

pub fn enumerate_coset(s: &Subspace, shift: &PauliVector) -> Result<CosetIter> {
    s.coset(shift)
}

/// Walks `shift + span(basis)` in Gray-code order.
#[derive(Clone, Debug)]
pub struct CosetIter {
    len: usize,
    basis: Vec<u128>,
    current: u128,
    index: u128,
    total: u128,
}

impl CosetIter {
    fn new(len: usize, basis: &[u128], shift: u128) -> Self {
        assert!(basis.len() < 128, "coset too large to enumerate");
        Self {
            len,
            basis: basis.to_vec(),
            current: shift,
            index: 0,
            total: 1u128 << basis.len(),
        }
    }

    #[inline]
    pub(crate) fn next_raw(&mut self) -> Option<u128> {
        if self.index == self.total {
            return None;
        }
        let out = self.current;
        self.index += 1;
        if self.index < self.total {
            self.current ^= self.basis[self.index.trailing_zeros() as usize];
        }
        Some(out)
    }
}

impl Iterator for CosetIter {
    type Item = PauliVector;

    fn next(&mut self) -> Option<PauliVector> {
        let len = self.len;
        self.next_raw().map(|b| PauliVector::from_raw(len, b))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.index) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CosetIter {}

/// Solution set `particular + span(kernel)` of a linear system over Z₂;
/// `kernel` is fully reduced and `particular` is the smallest solution.
#[derive(Clone, Debug)]
pub(crate) struct AffineSolution {
    pub particular: u128,
    pub kernel: Vec<u128>,
}

impl AffineSolution {
    pub fn dim(&self) -> usize {
        self.kernel.len()
    }

    /// k-th solution in ascending integer (= lexicographic) order.
    pub fn nth_ascending(&self, k: u128) -> u128 {
        let d = self.kernel.len();
        let mut v = self.particular;
        for (i, &b) in self.kernel.iter().enumerate() {
            if (k >> (d - 1 - i)) & 1 == 1 {
                v ^= b;
            }
        }
        v
    }
}

/// Solves `parity(a_j & v) = c_j` for v ∈ Z₂^len.
pub(crate) fn solve_affine(len: usize, constraints: &[(u128, bool)]) -> Option<AffineSolution> {
    // Fully reduced rows (coefficients, rhs), descending pivots.
    let mut rows: Vec<(u128, bool)> = Vec::new();
    for &(a, c) in constraints {
        let (mut a, mut c) = (a, c);
        for &(b, d) in &rows {
            if (a >> leading_bit(b)) & 1 == 1 {
                a ^= b;
                c ^= d;
            }
        }
        if a == 0 {
            if c {
                return None;
            }
            continue;
        }
        let piv = leading_bit(a);
        for row in rows.iter_mut() {
            if (row.0 >> piv) & 1 == 1 {
                row.0 ^= a;
                row.1 ^= c;
            }
        }
        rows.push((a, c));
    }
    let pivots: u128 = rows
        .iter()
        .fold(0, |acc, &(a, _)| acc | (1u128 << leading_bit(a)));
    let mut particular = 0u128;
    for &(a, c) in &rows {
        if c {
            particular |= 1u128 << leading_bit(a);
        }
    }
    let mut kernel = Vec::new();
    for bit in 0..len {
        let f = 1u128 << bit;
        if pivots & f != 0 {
            continue;
        }
        let mut k = f;
        for &(a, _) in &rows {
            if a & f != 0 {
                k |= 1u128 << leading_bit(a);
            }
        }
        rref_insert(&mut kernel, k);
    }
    let particular = rref_reduce(&kernel, particular);
    Some(AffineSolution { particular, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(s: &str) -> PauliVector {
        s.parse().unwrap()
    }

    #[test]
    fn inner_examples() {
        assert!(symplectic_inner(&pv("01"), &pv("10")).unwrap());
        assert!(!symplectic_inner(&pv("0110"), &pv("0110")).unwrap());
        assert!(symplectic_inner(&pv("0011"), &pv("0101")).unwrap());
        assert!(matches!(
            symplectic_inner(&pv("01"), &pv("0101")),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn text_form_and_labels() {
        let v = pv("00 11 01");
        assert_eq!(v.to_string(), "001101");
        assert_eq!(v.labels().collect::<Vec<_>>(), vec![0, 3, 1]);
        assert_eq!(PauliVector::from_labels(&[0, 3, 1]).unwrap(), v);
        assert!(v.get(2) && v.get(3) && !v.get(4) && v.get(5));
        assert!("011".parse::<PauliVector>().is_err());
        assert!("01x0".parse::<PauliVector>().is_err());
        assert!(PauliVector::zero(0).is_err());
        assert!(PauliVector::new(1, 0b100).is_err());
    }

    #[test]
    fn symplectic_examples() {
        let id = BitMatrix::identity(3).unwrap();
        assert!(is_symplectic(&id).unwrap());
        assert!(is_symplectic(&SymplecticForm::new(3).unwrap().matrix()).unwrap());
        // Columns 1 and 2 identical.
        let m: BitMatrix = "1100\n1100\n0011\n0001".parse().unwrap();
        assert!(!is_symplectic(&m).unwrap());
        let rect = BitMatrix::new(vec![pv("0101"), pv("1100")]).unwrap();
        assert!(is_symplectic(&rect).is_err());
    }

    #[test]
    fn form_swaps_pairs() {
        let p = SymplecticForm::new(3).unwrap();
        assert_eq!(p.matrix().mul_vec(&pv("100111")).unwrap(), pv("011011"));
        assert_eq!(p.apply(&pv("100111")).unwrap(), pv("011011"));
        let id = BitMatrix::identity(3).unwrap();
        assert_eq!(id.mul_vec(&pv("100111")).unwrap(), pv("100111"));
        assert!(p.matrix().mul(&p.matrix()).unwrap().is_identity());
    }

    #[test]
    fn inverse_of_transvection_like_matrix() {
        // I + u uᵀ P with u = 1111.
        let t: SymplecticMatrix = "0111\n1011\n1101\n1110".parse().unwrap();
        assert_eq!(t.inverse(), t);
        assert!(t.compose(&t.inverse()).unwrap().is_identity());
        let id = SymplecticMatrix::identity(2).unwrap();
        assert_eq!(id.inverse(), id);
    }

    #[test]
    fn rref_examples() {
        let s = rref(2, &[pv("1111"), pv("1111")]).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.basis(), vec![pv("1111")]);
        let s = rref(2, &[pv("0001"), pv("0010"), pv("0011")]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis(), vec![pv("0010"), pv("0001")]);
        let s = rref(2, &[]).unwrap();
        assert_eq!(s.dim(), 0);
        assert_eq!(s.elements().collect::<Vec<_>>(), vec![pv("0000")]);
        // Canonical form does not depend on the generating set.
        let a = rref(2, &[pv("1100"), pv("0110")]).unwrap();
        let b = rref(2, &[pv("1010"), pv("0110")]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coset_examples() {
        let s = rref(2, &[pv("1111")]).unwrap();
        let mut zero: Vec<_> = s.coset(&pv("0000")).unwrap().collect();
        zero.sort();
        assert_eq!(zero, vec![pv("0000"), pv("1111")]);
        let mut shifted: Vec<_> = s.coset(&pv("0100")).unwrap().collect();
        shifted.sort();
        assert_eq!(shifted, vec![pv("0100"), pv("1011")]);
        let dim0 = Subspace::zero(2).unwrap();
        assert_eq!(
            dim0.coset(&pv("0110")).unwrap().collect::<Vec<_>>(),
            vec![pv("0110")]
        );
    }

    #[test]
    fn solve_affine_ascending() {
        // v₀ ⊕ v₁ = 1 on 3 bits (bit indices 2 and 1 of the word).
        let sol = solve_affine(3, &[(0b110, true)]).unwrap();
        assert_eq!(sol.dim(), 2);
        let all: Vec<u128> = (0..4).map(|k| sol.nth_ascending(k)).collect();
        assert_eq!(all, vec![0b010, 0b011, 0b100, 0b101]);
        assert!(solve_affine(3, &[(0b110, true), (0b110, false)]).is_none());
    }
}
