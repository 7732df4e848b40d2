//! Successive-cancellation decoding in the LLR domain.
//!
//! The decoder walks the code tree iteratively over the natural-order view
//! of the received LLRs, keeping one LLR buffer and one partial-sum buffer
//! per level (O(N) memory in total).

use crate::channel::LlrSoftVector;
use crate::error::{contract, Result};
use crate::polar::{reverse_bits, BitBlock, PolarCodeSpec};

/// Check-node rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckNode {
    /// `2·atanh(tanh(a/2)·tanh(b/2))`, evaluated in a stable log form.
    #[default]
    Exact,
    MinSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Decided input bits, natural input order; frozen positions are 0.
    pub u: BitBlock,
    /// `u` restricted to the information set.
    pub info_bits: Vec<u8>,
    /// Genie mode only: whether the fresh decision at each index was wrong.
    pub genie_errors: Option<Vec<bool>>,
}

/// Exact check-node update.
pub fn f_exact(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let (x, y) = (a.abs(), b.abs());
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let diff = (x - y).abs();
    let diff = if diff.is_nan() { 0.0 } else { diff };
    let mag = x.min(y) + (-(x + y)).exp().ln_1p() - (-diff).exp().ln_1p();
    sign * mag.max(0.0)
}

pub fn f_min_sum(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs())
}

/// Variable-node update given the partial sum `u` of the upper branch.
pub fn g(a: f64, b: f64, u: u8) -> f64 {
    if u == 0 {
        b + a
    } else {
        b - a
    }
}

/// Hard decision: LLR ≥ 0 (including an exact tie) decides 0.
fn hard(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Reusable SC decoder with scratch buffers for one code length.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    n: u32,
    check_node: CheckNode,
    alpha: Vec<Vec<f64>>,
    left: Vec<Vec<u8>>,
    cur: Vec<u8>,
    next: Vec<u8>,
}

impl ScDecoder {
    pub fn new(n: u32, check_node: CheckNode) -> Self {
        let alpha = (0..=n).map(|l| vec![0.0; 1 << l]).collect();
        let left = (0..=n).map(|l| vec![0u8; 1 << l]).collect();
        let len = 1usize << n;
        Self {
            n,
            check_node,
            alpha,
            left,
            cur: Vec::with_capacity(len),
            next: Vec::with_capacity(len),
        }
    }

    pub fn decode(&mut self, llrs: &LlrSoftVector, spec: &PolarCodeSpec) -> Result<DecodeResult> {
        self.run(llrs.as_slice(), spec, None)
    }

    /// Genie-aided pass: each decision is compared with `true_u` and then replaced by it.
    pub fn genie_decode(
        &mut self,
        llrs: &LlrSoftVector,
        spec: &PolarCodeSpec,
        true_u: &BitBlock,
    ) -> Result<DecodeResult> {
        if true_u.len() != spec.len() {
            return contract(format!(
                "true input has length {}, code length is {}",
                true_u.len(),
                spec.len()
            ));
        }
        self.run(llrs.as_slice(), spec, Some(true_u.as_slice()))
    }

    fn run(&mut self, llrs: &[f64], spec: &PolarCodeSpec, genie: Option<&[u8]>) -> Result<DecodeResult> {
        let n = self.n;
        let len = 1usize << n;
        if spec.n() != n {
            return contract(format!("decoder built for n = {n}, code has n = {}", spec.n()));
        }
        if llrs.len() != len {
            return contract(format!("{} LLRs for a code of length {len}", llrs.len()));
        }
        let f = match self.check_node {
            CheckNode::Exact => f_exact,
            CheckNode::MinSum => f_min_sum,
        };
        for (k, a) in self.alpha[n as usize].iter_mut().enumerate() {
            *a = llrs[reverse_bits(k, n)];
        }
        let frozen = spec.frozen_mask();
        let mut u = vec![0u8; len];
        let mut flags = genie.map(|_| vec![false; len]);

        for i in 0..len {
            // Descend: one g step where this leaf's subtree is a right child, then f steps.
            let start = if i == 0 {
                n as usize
            } else {
                let l = i.trailing_zeros() as usize + 1;
                let h = 1usize << (l - 1);
                let (lower, upper) = self.alpha.split_at_mut(l);
                let parent = &upper[0];
                let child = &mut lower[l - 1];
                let beta = &self.left[l - 1];
                for j in 0..h {
                    child[j] = g(parent[j], parent[j + h], beta[j]);
                }
                l - 1
            };
            for l in (1..=start).rev() {
                let h = 1usize << (l - 1);
                let (lower, upper) = self.alpha.split_at_mut(l);
                let parent = &upper[0];
                let child = &mut lower[l - 1];
                for j in 0..h {
                    child[j] = f(parent[j], parent[j + h]);
                }
            }
            let llr = self.alpha[0][0];
            let fresh = if frozen[i] { 0 } else { hard(llr) };
            let bit = match genie {
                Some(truth) => {
                    if let Some(fl) = flags.as_mut() {
                        fl[i] = hard(llr) != truth[i];
                    }
                    truth[i]
                }
                None => fresh,
            };
            u[i] = fresh;

            // Propagate partial sums up until this node is a left child.
            self.cur.clear();
            self.cur.push(bit);
            let mut l = 0usize;
            while l < n as usize && (i >> l) & 1 == 1 {
                let left = &self.left[l];
                self.next.clear();
                self.next.extend(left.iter().zip(&self.cur).map(|(a, b)| a ^ b));
                self.next.extend_from_slice(&self.cur);
                std::mem::swap(&mut self.cur, &mut self.next);
                l += 1;
            }
            if l < n as usize {
                self.left[l].copy_from_slice(&self.cur);
            }
        }

        let u = BitBlock::new(u)?;
        let info_bits = spec.extract_message(u.as_slice());
        Ok(DecodeResult {
            u,
            info_bits,
            genie_errors: flags,
        })
    }
}

pub fn sc_decode(llrs: &LlrSoftVector, spec: &PolarCodeSpec) -> Result<DecodeResult> {
    ScDecoder::new(spec.n(), CheckNode::Exact).decode(llrs, spec)
}

pub fn genie_sc_decode(llrs: &LlrSoftVector, spec: &PolarCodeSpec, true_u: &BitBlock) -> Result<Vec<bool>> {
    let r = ScDecoder::new(spec.n(), CheckNode::Exact).genie_decode(llrs, spec, true_u)?;
    Ok(r.genie_errors.unwrap_or_default())
}
