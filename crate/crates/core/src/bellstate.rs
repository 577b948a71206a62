//! Bell-diagonal states and the signed transform.
//!
//! Labels follow the pair bits (phase, flip): index 0 = 00 = Φ⁺, 1 = 01 = Ψ⁺,
//! 2 = 10 = Φ⁻, 3 = 11 = Ψ⁻.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::{inner_bits, PauliVector};

pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct BellDiagonal {
    p: [f64; 4],
}

impl BellDiagonal {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter()
            .any(|&x| !x.is_finite() || !(-SUM_TOLERANCE..=1.0 + SUM_TOLERANCE).contains(&x))
        {
            return Err(Error::Domain(format!("probabilities {p:?} outside [0,1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self {
            p: p.map(|x| x.clamp(0.0, 1.0)),
        })
    }

    /// Rescales nonnegative weights to unit sum.
    pub fn normalized(w: [f64; 4]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) || sum <= 0.0 {
            return Err(Error::Degenerate(format!("cannot normalize {w:?}")));
        }
        Self::new(w.map(|x| x / sum))
    }

    pub fn probs(&self) -> [f64; 4] {
        self.p
    }

    pub fn get(&self, label: u8) -> f64 {
        self.p[label as usize]
    }

    pub fn fidelity(&self) -> f64 {
        self.p[0]
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.p)
    }

    pub fn is_ordered(&self) -> bool {
        self.p.windows(2).all(|w| w[0] >= w[1])
    }
}

impl fmt::Display for BellDiagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.p;
        write!(f, "{a},{b},{c},{d}")
    }
}

impl FromStr for BellDiagonal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!(
                "expected four comma-separated values, got {s:?}"
            )));
        }
        let mut p = [0.0; 4];
        for (slot, text) in p.iter_mut().zip(&parts) {
            *slot = text
                .parse()
                .map_err(|_| Error::Parse(format!("not a number: {text:?}")))?;
        }
        Self::new(p)
    }
}

/// (F, (1−F)/3, (1−F)/3, (1−F)/3).
pub fn werner(f: f64) -> Result<BellDiagonal> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(format!("Werner fidelity {f} outside [0,1]")));
    }
    let r = (1.0 - f) / 3.0;
    BellDiagonal::new([f, r, r, r])
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SVector {
    s: [f64; 4],
}

impl SVector {
    pub fn new(s: [f64; 4]) -> Self {
        Self { s }
    }

    pub fn values(&self) -> [f64; 4] {
        self.s
    }

    pub fn get(&self, label: u8) -> f64 {
        self.s[label as usize]
    }
}

/// s_v = Σ_x (−1)^{vᵀPx} p_x on a single pair.
fn signed_sum(w: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (v, o) in out.iter_mut().enumerate() {
        *o = (0..4)
            .map(|x| {
                if inner_bits(v as u128, x as u128) {
                    -w[x]
                } else {
                    w[x]
                }
            })
            .sum();
    }
    out
}

pub fn s_of_p(p: &BellDiagonal) -> SVector {
    SVector::new(signed_sum(&p.p))
}

/// The ±1 matrix squares to 4I.
pub fn p_of_s(s: &SVector) -> Result<BellDiagonal> {
    BellDiagonal::new(signed_sum(&s.s).map(|x| x / 4.0))
}

/// Π_j p_{x_j} over the pairs of x.
pub fn product_weight(p: &BellDiagonal, x: &PauliVector) -> f64 {
    x.labels().map(|l| p.get(l)).product()
}

pub fn product_s_weight(s: &SVector, x: &PauliVector) -> f64 {
    x.labels().map(|l| s.get(l)).product()
}

/// Per-pair lookup over raw bits, pair 0 in the top two bits.
pub(crate) fn product_raw(table: &[f64; 4], n_pairs: usize, x: u128) -> f64 {
    (0..n_pairs)
        .map(|j| table[((x >> (2 * (n_pairs - 1 - j))) & 3) as usize])
        .product()
}

/// Distribution over the 4^m labels of m pairs, indexed by the raw 2m-bit
/// label.
#[derive(Clone, PartialEq, Debug)]
pub struct JointBellState {
    m: usize,
    q: Vec<f64>,
}

impl JointBellState {
    pub fn new(m: usize, q: Vec<f64>) -> Result<Self> {
        if m == 0 || m > 8 || q.len() != 1 << (2 * m) {
            return Err(Error::Dimension(format!(
                "{} coefficients for {m} pairs",
                q.len()
            )));
        }
        if q.iter().any(|&x| !x.is_finite() || x < -SUM_TOLERANCE) {
            return Err(Error::Domain("negative or non-finite coefficient".into()));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("coefficients sum to {sum}, not 1")));
        }
        Ok(Self {
            m,
            q: q.into_iter().map(|x| x.max(0.0)).collect(),
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn get(&self, y: &PauliVector) -> Result<f64> {
        if y.n_pairs() != self.m {
            return Err(Error::Dimension(format!("label {y} for {} pairs", self.m)));
        }
        Ok(self.q[y.bits() as usize])
    }

    pub fn fidelity(&self) -> f64 {
        self.q[0]
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.q)
    }

    pub fn to_bell_diagonal(&self) -> Result<BellDiagonal> {
        if self.m != 1 {
            return Err(Error::Dimension(format!(
                "{}-pair state is not a single pair",
                self.m
            )));
        }
        BellDiagonal::normalized([self.q[0], self.q[1], self.q[2], self.q[3]])
    }
}

impl From<BellDiagonal> for JointBellState {
    fn from(p: BellDiagonal) -> Self {
        Self {
            m: 1,
            q: p.p.to_vec(),
        }
    }
}

pub fn fidelity(q: &JointBellState) -> f64 {
    q.fidelity()
}

pub fn shannon_entropy(q: &JointBellState) -> f64 {
    q.entropy()
}

fn entropy_bits(q: &[f64]) -> f64 {
    -q.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// x ↦ A₁x + b₁ on the labels of one pair. `a` holds the two rows of A₁
/// as 2-bit words.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SinglePairAffineMap {
    a: [u8; 2],
    b: u8,
}

impl SinglePairAffineMap {
    pub const IDENTITY: Self = Self {
        a: [0b10, 0b01],
        b: 0,
    };

    pub fn new(a: [u8; 2], b: u8) -> Result<Self> {
        let map = Self { a, b };
        if a.iter().any(|&r| r > 3) || b > 3 {
            return Err(Error::Domain("entries must be 2-bit words".into()));
        }
        let mut images: Vec<u8> = (0..4).map(|x| map.apply(x)).collect();
        images.sort_unstable();
        images.dedup();
        if images.len() != 4 {
            return Err(Error::Constraint("linear part is singular".into()));
        }
        Ok(map)
    }

    /// All 24 maps, identity first, the rest by (rows, shift).
    pub fn all() -> Vec<Self> {
        let mut out = vec![Self::IDENTITY];
        for r0 in 1..4u8 {
            for r1 in 1..4u8 {
                for b in 0..4u8 {
                    if let Ok(m) = Self::new([r0, r1], b) {
                        if m != Self::IDENTITY {
                            out.push(m);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn linear(&self) -> [u8; 2] {
        self.a
    }

    pub fn shift(&self) -> u8 {
        self.b
    }

    pub fn apply(&self, x: u8) -> u8 {
        let bit = |row: u8| ((row & x).count_ones() & 1) as u8;
        ((bit(self.a[0]) << 1) | bit(self.a[1])) ^ self.b
    }

    /// Relabeled state: out[φ(x)] = p[x].
    pub fn permute(&self, p: &BellDiagonal) -> BellDiagonal {
        let mut out = [0.0; 4];
        for x in 0..4u8 {
            out[self.apply(x) as usize] = p.p[x as usize];
        }
        BellDiagonal { p: out }
    }
}

impl fmt::Display for SinglePairAffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:02b};{:02b}]+{:02b}", self.a[0], self.a[1], self.b)
    }
}

/// Sorts the probabilities into descending order and returns an affine
/// relabeling that realizes it, preferring the identity on ties.
pub fn sort_descending(p: &BellDiagonal) -> (BellDiagonal, SinglePairAffineMap) {
    let mut sorted = p.p;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let map = SinglePairAffineMap::all()
        .into_iter()
        .find(|m| m.permute(p).p == sorted)
        .expect("affine maps realize every permutation of four labels");
    (BellDiagonal { p: sorted }, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn werner_examples() {
        assert_eq!(werner(1.0).unwrap().probs(), [1.0, 0.0, 0.0, 0.0]);
        assert!(werner(0.25)
            .unwrap()
            .probs()
            .iter()
            .all(|&x| close(x, 0.25)));
        let w = werner(0.8).unwrap().probs();
        assert!(close(w[0], 0.8) && close(w[3], 1.0 / 15.0));
        assert!(werner(1.5).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn s_transform_examples() {
        let pure = BellDiagonal::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s_of_p(&pure).values(), [1.0; 4]);
        let uniform = werner(0.25).unwrap();
        let s = s_of_p(&uniform).values();
        assert!(close(s[0], 1.0) && s[1..].iter().all(|&x| close(x, 0.0)));
        let s = s_of_p(&werner(0.8).unwrap());
        assert!(close(s.get(3), 11.0 / 15.0));
        // Row two of the ±1 matrix is (1, 1, −1, −1).
        let p = BellDiagonal::new([0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!(close(s_of_p(&p).get(1), 0.4));
        let back = p_of_s(&s_of_p(&p)).unwrap();
        for (a, b) in back.probs().iter().zip(p.probs()) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn product_weights() {
        let w = werner(0.8).unwrap();
        let x: PauliVector = "001101".parse().unwrap();
        assert!(close(product_weight(&w, &x), 4.0 / 1125.0));
        let zero = PauliVector::zero(3).unwrap();
        assert!(close(product_weight(&w, &zero), 0.512));
        let pure = BellDiagonal::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(product_weight(&pure, &x), 0.0);
        assert_eq!(product_raw(&w.probs(), 3, x.bits()), product_weight(&w, &x));
    }

    #[test]
    fn entropy_and_fidelity() {
        let point = JointBellState::new(2, {
            let mut q = vec![0.0; 16];
            q[0] = 1.0;
            q
        })
        .unwrap();
        assert_eq!(point.fidelity(), 1.0);
        assert_eq!(shannon_entropy(&point), 0.0);
        let uniform = JointBellState::new(1, vec![0.25; 4]).unwrap();
        assert!(close(shannon_entropy(&uniform), 2.0));
        assert!(close(
            fidelity(&JointBellState::new(2, vec![1.0 / 16.0; 16]).unwrap()),
            1.0 / 16.0
        ));
        assert!((werner(0.8107).unwrap().entropy() - 1.0).abs() < 2e-3);
    }

    #[test]
    fn sorting_examples() {
        let p = BellDiagonal::new([0.4, 0.3, 0.2, 0.1]).unwrap();
        assert_eq!(sort_descending(&p).1, SinglePairAffineMap::IDENTITY);
        let p = BellDiagonal::new([0.1, 0.6, 0.2, 0.1]).unwrap();
        let (sorted, map) = sort_descending(&p);
        assert_eq!(sorted.probs(), [0.6, 0.2, 0.1, 0.1]);
        assert_eq!(map.apply(0b01), 0b00);
        assert_eq!(map.permute(&p), sorted);
        let u = werner(0.25).unwrap();
        assert_eq!(sort_descending(&u).1, SinglePairAffineMap::IDENTITY);
    }

    #[test]
    fn affine_maps_cover_s4() {
        let maps = SinglePairAffineMap::all();
        assert_eq!(maps.len(), 24);
        let mut perms: Vec<[u8; 4]> = maps
            .iter()
            .map(|m| [m.apply(0), m.apply(1), m.apply(2), m.apply(3)])
            .collect();
        perms.sort_unstable();
        perms.dedup();
        assert_eq!(perms.len(), 24);
        assert!(SinglePairAffineMap::new([1, 1], 0).is_err());
    }

    #[test]
    fn text_form() {
        let p: BellDiagonal = "0.25, 0.25,0.25,0.25".parse().unwrap();
        assert_eq!(p.probs(), [0.25; 4]);
        assert!("0.5,0.5,0.5".parse::<BellDiagonal>().is_err());
        assert!("0.5,0.5,0.5,0.5".parse::<BellDiagonal>().is_err());
        assert!("a,b,c,d".parse::<BellDiagonal>().is_err());
    }
}
