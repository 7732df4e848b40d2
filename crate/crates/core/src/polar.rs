//! GF(2) polar encoding with the generator `B_N F^{⊗n}`.
//!
//! Input and coded positions are 0-based internally. Anything crossing a
//! user-facing boundary (config files, CSV, the C ABI) uses the 1-based
//! `u_1..u_N` numbering and is converted with [`PolarCodeSpec::from_one_based`]
//! or [`PolarCodeSpec::info_set_one_based`].
//!
//! Since `B_N` and `F^{⊗n}` commute, `x = (u F^{⊗n}) B_N`: the natural-order
//! butterfly is applied to `u` and the outputs are read in bit-reversed order.
//! Successive cancellation decodes `u` in index order against that layout.

use crate::error::{contract, Result};

/// Reverses the low `n` bits of `index`.
pub fn bit_reversal(index: usize, n: u32) -> Result<usize> {
    if n as usize >= usize::BITS as usize || index >> n != 0 {
        return contract(format!("index {index} out of range for {n} bits"));
    }
    Ok(reverse_bits(index, n))
}

#[inline]
pub(crate) fn reverse_bits(index: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        index.reverse_bits() >> (usize::BITS - n)
    }
}

/// A block of binary symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitBlock(Vec<u8>);

impl BitBlock {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return contract(format!("non-binary symbol {} at position {pos}", bits[pos]));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    /// Elementwise XOR; lengths must match.
    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        if self.len() != other.len() {
            return contract(format!("xor of lengths {} and {}", self.len(), other.len()));
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl std::ops::Index<usize> for BitBlock {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

/// Code parameters: length `N = 2^n`, the information set and the two-stage split `(p, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCodeSpec {
    n: u32,
    p: u32,
    q: u32,
    /// Sorted, 0-based.
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarCodeSpec {
    /// Builds a spec from a 0-based information set. `p` is the base-code
    /// exponent of the two-stage split; `q = n - p`.
    pub fn new(n: u32, p: u32, info_set: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n == 0 || n > 24 {
            return contract(format!("n = {n} must be in 1..=24"));
        }
        if p == 0 || p > n {
            return contract(format!("split p = {p} must satisfy 1 <= p <= n = {n}"));
        }
        let len = 1usize << n;
        let mut frozen = vec![true; len];
        let mut info: Vec<usize> = Vec::new();
        for i in info_set {
            if i >= len {
                return contract(format!("information index {i} out of range for N = {len}"));
            }
            if !frozen[i] {
                return contract(format!("duplicate information index {i}"));
            }
            frozen[i] = false;
            info.push(i);
        }
        info.sort_unstable();
        Ok(Self {
            n,
            p,
            q: n - p,
            info_set: info,
            frozen,
        })
    }

    /// Same as [`PolarCodeSpec::new`] but takes 1-based indices `u_1..u_N`.
    pub fn from_one_based(n: u32, p: u32, info_set: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut zero_based = Vec::new();
        for i in info_set {
            if i == 0 {
                return contract("1-based information index 0");
            }
            zero_based.push(i - 1);
        }
        Self::new(n, p, zero_based)
    }

    /// A spec whose every input is an information bit, as used by genie-aided estimation.
    pub fn all_information(n: u32, p: u32) -> Result<Self> {
        Self::new(n, p, 0..(1usize << n.min(24)))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn split(&self) -> (u32, u32) {
        (self.p, self.q)
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn info_set_one_based(&self) -> Vec<usize> {
        self.info_set.iter().map(|i| i + 1).collect()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Places `message` on the information positions (ascending) and zeros elsewhere.
    pub fn embed_message(&self, message: &[u8]) -> Result<BitBlock> {
        if message.len() != self.k() {
            return contract(format!("message length {} != k = {}", message.len(), self.k()));
        }
        let mut u = vec![0u8; self.len()];
        for (&pos, &bit) in self.info_set.iter().zip(message) {
            u[pos] = bit & 1;
        }
        Ok(BitBlock(u))
    }

    /// Picks the information bits out of a full input vector.
    pub fn extract_message(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }
}

/// In-place `v <- v F^{⊗n}` over GF(2) (natural order, no bit reversal).
pub(crate) fn butterfly_in_place(v: &mut [u8]) {
    let len = v.len();
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for j in block..block + half {
                v[j] ^= v[j + half];
            }
        }
        half <<= 1;
    }
}

/// `x = u B_N F^{⊗n}` for a slice whose length is a power of two.
pub(crate) fn encode_slice(u: &[u8]) -> Vec<u8> {
    let len = u.len();
    let n = len.trailing_zeros();
    let mut y = u.to_vec();
    butterfly_in_place(&mut y);
    (0..len).map(|j| y[reverse_bits(j, n)]).collect()
}

/// Single-stage encoder `x = u B_N F^{⊗n}`. The generator is an involution.
pub fn encode(u: &BitBlock, spec: &PolarCodeSpec) -> Result<BitBlock> {
    if u.len() != spec.len() {
        return contract(format!("input length {} != N = {}", u.len(), spec.len()));
    }
    Ok(BitBlock(encode_slice(u.as_slice())))
}

/// Two-stage encoder for `B_{2^n}(F^{⊗p} ⊗ F^{⊗q})`.
///
/// Stage one runs `2^p` length-`2^q` encoders over consecutive input blocks.
/// Stage two runs `2^q` length-`2^p` encoders; encoder `b` takes output `b` of
/// every stage-one encoder and writes codeword bits `b·2^p .. (b+1)·2^p`, which
/// is row `b` of the rate-matching matrix.
pub fn encode_two_stage(u: &BitBlock, spec: &PolarCodeSpec) -> Result<BitBlock> {
    if u.len() != spec.len() {
        return contract(format!("input length {} != N = {}", u.len(), spec.len()));
    }
    let (p, q) = spec.split();
    let cols = 1usize << p;
    let rows = 1usize << q;
    let inner: Vec<Vec<u8>> = u
        .as_slice()
        .chunks_exact(rows)
        .map(encode_slice)
        .collect();
    let mut x = Vec::with_capacity(spec.len());
    let mut row = vec![0u8; cols];
    for b in 0..rows {
        for (c, out) in inner.iter().enumerate() {
            row[c] = out[b];
        }
        x.extend(encode_slice(&row));
    }
    Ok(BitBlock(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense `B_N F^{⊗n}` for small N.
    fn generator_matrix(n: u32) -> Vec<Vec<u8>> {
        let len = 1usize << n;
        let kron = |i: usize, j: usize| u8::from(j & i == j);
        // (u B)_k = u_{br(k)}, so row i of B F is row br(i) of F^{⊗n}.
        (0..len)
            .map(|i| (0..len).map(|j| kron(reverse_bits(i, n), j)).collect())
            .collect()
    }

    fn matrix_encode(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
        let len = u.len();
        (0..len)
            .map(|j| (0..len).fold(0u8, |acc, i| acc ^ (u[i] & g[i][j])))
            .collect()
    }

    fn spec(n: u32, p: u32) -> PolarCodeSpec {
        PolarCodeSpec::all_information(n, p).unwrap()
    }

    fn bits_of(value: usize, len: usize) -> BitBlock {
        BitBlock::new((0..len).map(|i| ((value >> i) & 1) as u8).collect()).unwrap()
    }

    #[test]
    fn bit_reversal_examples() {
        assert_eq!(bit_reversal(0, 2).unwrap(), 0);
        assert_eq!(bit_reversal(1, 2).unwrap(), 2);
        assert_eq!(bit_reversal(3, 3).unwrap(), 6);
        assert!(bit_reversal(4, 2).is_err());
    }

    #[test]
    fn bit_reversal_is_an_involutive_bijection() {
        for n in 1..=10 {
            let mut seen = vec![false; 1 << n];
            for i in 0..(1usize << n) {
                let r = bit_reversal(i, n).unwrap();
                assert_eq!(bit_reversal(r, n).unwrap(), i);
                assert!(!seen[r]);
                seen[r] = true;
            }
        }
    }

    #[test]
    fn encode_examples() {
        let s8 = spec(3, 1);
        assert_eq!(encode(&BitBlock::zeros(8), &s8).unwrap(), BitBlock::zeros(8));
        let s2 = spec(1, 1);
        let x = encode(&BitBlock::new(vec![0, 1]).unwrap(), &s2).unwrap();
        assert_eq!(x.as_slice(), &[1, 1]);
        let s4 = spec(2, 1);
        let x = encode(&BitBlock::new(vec![0, 0, 0, 1]).unwrap(), &s4).unwrap();
        assert_eq!(x.as_slice(), &[1, 1, 1, 1]);
    }

    #[test]
    fn encode_rejects_length_mismatch() {
        assert!(encode(&BitBlock::zeros(4), &spec(3, 1)).is_err());
        assert!(encode_two_stage(&BitBlock::zeros(4), &spec(3, 1)).is_err());
    }

    #[test]
    fn butterfly_matches_matrix_oracle_exhaustively() {
        for n in 1..=4u32 {
            let len = 1usize << n;
            let g = generator_matrix(n);
            for p in 1..=n {
                let s = spec(n, p);
                for value in 0..(1usize << len) {
                    let u = bits_of(value, len);
                    let expect = matrix_encode(u.as_slice(), &g);
                    assert_eq!(encode(&u, &s).unwrap().as_slice(), &expect[..]);
                    assert_eq!(encode_two_stage(&u, &s).unwrap().as_slice(), &expect[..]);
                    assert_eq!(encode(&encode(&u, &s).unwrap(), &s).unwrap(), u);
                }
            }
        }
    }

    #[test]
    fn butterfly_matches_matrix_oracle_n32() {
        let g = generator_matrix(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = BitBlock::new((0..32).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let expect = matrix_encode(u.as_slice(), &g);
            assert_eq!(encode(&u, &spec(5, 2)).unwrap().as_slice(), &expect[..]);
        }
    }

    #[test]
    fn two_stage_matches_single_stage_n4096() {
        let s = spec(12, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let u = BitBlock::new((0..4096).map(|_| rng.random_range(0..2)).collect()).unwrap();
            assert_eq!(encode_two_stage(&u, &s).unwrap(), encode(&u, &s).unwrap());
        }
        assert_eq!(encode_two_stage(&BitBlock::zeros(4096), &s).unwrap(), BitBlock::zeros(4096));
    }

    #[test]
    fn spec_validation() {
        assert!(PolarCodeSpec::new(0, 1, []).is_err());
        assert!(PolarCodeSpec::new(3, 0, []).is_err());
        assert!(PolarCodeSpec::new(3, 4, []).is_err());
        assert!(PolarCodeSpec::new(3, 1, [8]).is_err());
        assert!(PolarCodeSpec::new(3, 1, [2, 2]).is_err());
        assert!(PolarCodeSpec::from_one_based(3, 1, [0]).is_err());
        let s = PolarCodeSpec::from_one_based(2, 1, [4, 3]).unwrap();
        assert_eq!(s.info_set(), &[2, 3]);
        assert_eq!(s.info_set_one_based(), vec![3, 4]);
        assert_eq!(s.split(), (1, 1));
        assert!(s.is_frozen(0) && !s.is_frozen(3));
    }

    #[test]
    fn embed_and_extract_message() {
        let s = PolarCodeSpec::new(3, 1, [7, 3, 5]).unwrap();
        let u = s.embed_message(&[1, 0, 1]).unwrap();
        assert_eq!(u.as_slice(), &[0, 0, 0, 1, 0, 0, 0, 1]);
        assert_eq!(s.extract_message(u.as_slice()), vec![1, 0, 1]);
        assert!(s.embed_message(&[1]).is_err());
    }

    #[test]
    fn bitblock_rejects_non_binary() {
        assert!(BitBlock::new(vec![0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn encode_is_linear_and_involutive(n in 1u32..=10, seed in any::<u64>()) {
            let len = 1usize << n;
            let s = spec(n, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = BitBlock::new((0..len).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let v = BitBlock::new((0..len).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let lhs = encode(&u.xor(&v).unwrap(), &s).unwrap();
            let rhs = encode(&u, &s).unwrap().xor(&encode(&v, &s).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(encode(&encode(&u, &s).unwrap(), &s).unwrap(), u);
        }

        #[test]
        fn stage_equivalence_for_every_split(n in 1u32..=10, seed in any::<u64>()) {
            let len = 1usize << n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = BitBlock::new((0..len).map(|_| rng.random_range(0..2)).collect()).unwrap();
            for p in 1..=n {
                let s = spec(n, p);
                prop_assert_eq!(encode_two_stage(&u, &s).unwrap(), encode(&u, &s).unwrap());
            }
        }
    }
}
