//! Rate matching over the `2^q × 2^p` codeword arrangement.
//!
//! The codeword is laid out row-major (`(i, j)` holds `x[i·2^p + j]`), so
//! column `j` gathers output `j` of every second-stage base code. Columns are
//! permuted by the reverse of the puncturing order and read column by column
//! as a circular array: fewer than `N` bits punctures whole columns, more
//! than `N` repeats from the start. Each emitted column is assigned one BICM
//! reliability class.

use serde::{Deserialize, Serialize};

use crate::channel::{LlrSoftVector, Modulation};
use crate::error::{contract, Result};
use crate::polar::{BitBlock, PolarCodeSpec};
use crate::puncturing::PuncturingSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarqMode {
    /// Chase combining: every transmission repeats the same bits.
    Cc,
    /// Incremental redundancy: transmission `r` starts at a later column.
    Ir,
}

/// One transmission: `l` bits, 1-based transmission index `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxPlan {
    pub l: usize,
    pub r: usize,
    pub mode: HarqMode,
}

impl TxPlan {
    pub fn new(l: usize, r: usize, mode: HarqMode) -> Self {
        Self { l, r, mode }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatcher {
    p: u32,
    q: u32,
    /// Puncturing order of the base code.
    order: Vec<usize>,
    modulation: Modulation,
    /// Maximum number of transmissions.
    t: usize,
    /// Shift the BICM assignment across Chase-combining retransmissions too.
    cc_bicm_shift: bool,
}

impl RateMatcher {
    pub fn new(spec: &PolarCodeSpec, seq: &PuncturingSequence, modulation: Modulation, t: usize) -> Result<Self> {
        let (p, q) = spec.split();
        if seq.p() != p {
            return contract(format!(
                "sequence has base length {}, code expects 2^{p}",
                seq.base_len()
            ));
        }
        if t == 0 {
            return contract("at least one transmission is required");
        }
        Ok(Self {
            p,
            q,
            order: seq.order().to_vec(),
            modulation,
            t,
            cc_bicm_shift: false,
        })
    }

    pub fn with_cc_bicm_shift(mut self, on: bool) -> Self {
        self.cc_bicm_shift = on;
        self
    }

    pub fn code_len(&self) -> usize {
        1 << (self.p + self.q)
    }

    pub fn columns(&self) -> usize {
        1 << self.p
    }

    pub fn rows(&self) -> usize {
        1 << self.q
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn max_transmissions(&self) -> usize {
        self.t
    }

    /// Original column index held by permuted column `j`.
    pub fn permuted_column(&self, j: usize) -> usize {
        self.order[self.order.len() - 1 - j]
    }

    /// The codeword as `2^q` rows of `2^p` bits.
    pub fn arrange(&self, codeword: &BitBlock) -> Result<Vec<Vec<u8>>> {
        self.check_len(codeword.len(), "codeword")?;
        Ok(codeword
            .as_slice()
            .chunks_exact(self.columns())
            .map(<[u8]>::to_vec)
            .collect())
    }

    /// 0-based permuted column where transmission `plan.r` starts reading.
    pub fn start_column(&self, plan: &TxPlan) -> usize {
        match plan.mode {
            HarqMode::Cc => 0,
            HarqMode::Ir => (plan.r - 1) * self.columns() / self.t,
        }
    }

    fn validate(&self, plan: &TxPlan) -> Result<()> {
        if plan.l == 0 {
            return contract("a transmission must carry at least one bit");
        }
        if plan.r == 0 || plan.r > self.t {
            return contract(format!("transmission index {} outside 1..={}", plan.r, self.t));
        }
        Ok(())
    }

    fn check_len(&self, got: usize, what: &str) -> Result<()> {
        if got != self.code_len() {
            return contract(format!("{what} has length {got}, code length is {}", self.code_len()));
        }
        Ok(())
    }

    /// Flat codeword position of every emitted bit, in emission order.
    pub fn emitted_positions(&self, plan: &TxPlan) -> Result<Vec<usize>> {
        self.validate(plan)?;
        let len = self.code_len();
        let rows = self.rows();
        let width = self.columns();
        let start = self.start_column(plan) * rows;
        Ok((0..plan.l)
            .map(|t| {
                let g = (start + t) % len;
                let (j, i) = (g / rows, g % rows);
                i * width + self.permuted_column(j)
            })
            .collect())
    }

    pub fn rate_match(&self, codeword: &BitBlock, plan: &TxPlan) -> Result<BitBlock> {
        self.check_len(codeword.len(), "codeword")?;
        let bits = self
            .emitted_positions(plan)?
            .into_iter()
            .map(|j| codeword[j])
            .collect();
        BitBlock::new(bits)
    }

    /// Adds each received LLR into its codeword position. Repeated and
    /// retransmitted bits combine additively; positions never sent stay 0.
    pub fn de_rate_match(&self, llrs: &LlrSoftVector, plan: &TxPlan, acc: &mut LlrSoftVector) -> Result<()> {
        self.check_len(acc.len(), "accumulator")?;
        if llrs.len() != plan.l {
            return contract(format!("{} LLRs for a transmission of {} bits", llrs.len(), plan.l));
        }
        let positions = self.emitted_positions(plan)?;
        let a = acc.as_mut_slice();
        for (&j, &v) in positions.iter().zip(llrs.as_slice()) {
            a[j] += v;
        }
        Ok(())
    }

    /// Reliability class of each emitted column, in emission order.
    ///
    /// Emitted columns are split into `G` consecutive groups as equally as
    /// possible (earlier groups larger); group `g` goes to class `g`. Under IR
    /// the grouping follows the emission order, so it moves with the start
    /// column; under CC it is fixed unless the CC shift is enabled.
    pub fn assign_bicm_columns(&self, plan: &TxPlan) -> Result<Vec<usize>> {
        self.validate(plan)?;
        let rows = self.rows();
        let emitted = plan.l.div_ceil(rows);
        let groups = self.modulation.subchannel_count();
        let shift = match plan.mode {
            HarqMode::Cc if self.cc_bicm_shift => (plan.r - 1) * self.columns() / self.t,
            _ => 0,
        };
        Ok((0..emitted)
            .map(|e| group_of((e + emitted - shift % emitted) % emitted, emitted, groups))
            .collect())
    }

    /// Reliability class of every emitted bit.
    pub fn bit_classes(&self, plan: &TxPlan) -> Result<Vec<usize>> {
        let cols = self.assign_bicm_columns(plan)?;
        let rows = self.rows();
        Ok((0..plan.l).map(|t| cols[t / rows]).collect())
    }

    /// How emitted bits occupy symbol bit slots for this transmission.
    pub fn symbol_map(&self, plan: &TxPlan) -> Result<SymbolMap> {
        SymbolMap::new(&self.bit_classes(plan)?, self.modulation)
    }
}

fn group_of(e: usize, emitted: usize, groups: usize) -> usize {
    let base = emitted / groups;
    let extra = emitted % groups;
    let big = extra * (base + 1);
    if e < big {
        e / (base + 1)
    } else {
        extra + (e - big) / base.max(1)
    }
}

/// Placement of emitted bits into symbol bit slots.
///
/// Class `c` bits fill slots `2c` and `2c+1` of consecutive symbols (slot 0
/// only for BPSK). Slots left over when classes have unequal sizes are
/// padding: they carry a known zero bit and their LLRs are discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMap {
    bits_per_symbol: usize,
    /// For each symbol slot, the emitted-bit index it carries.
    slots: Vec<Option<usize>>,
}

impl SymbolMap {
    pub fn new(classes: &[usize], modulation: Modulation) -> Result<Self> {
        let m = modulation.bits_per_symbol();
        let per_class = if modulation == Modulation::Bpsk { 1 } else { 2 };
        let groups = modulation.subchannel_count();
        let mut counts = vec![0usize; groups];
        for &c in classes {
            if c >= groups {
                return contract(format!("class {c} out of range for {modulation}"));
            }
            counts[c] += 1;
        }
        let symbols = counts.iter().map(|c| c.div_ceil(per_class)).max().unwrap_or(0);
        let mut slots = vec![None; symbols * m];
        let mut fill = vec![0usize; groups];
        for (idx, &c) in classes.iter().enumerate() {
            let k = fill[c];
            fill[c] += 1;
            let slot = (k / per_class) * m + per_class * c + k % per_class;
            slots[slot] = Some(idx);
        }
        Ok(Self { bits_per_symbol: m, slots })
    }

    pub fn symbols(&self) -> usize {
        self.slots.len() / self.bits_per_symbol
    }

    pub fn pad_slots(&self) -> usize {
        self.slots.iter().filter(|s| s.is_none()).count()
    }

    /// Symbol-ordered bit stream (padding as 0).
    pub fn pack(&self, bits: &[u8]) -> Vec<u8> {
        self.slots.iter().map(|s| s.map_or(0, |i| bits[i])).collect()
    }

    /// Emission-ordered LLRs from symbol-ordered LLRs; padding dropped.
    pub fn unpack(&self, slot_llrs: &[f64], emitted: usize) -> LlrSoftVector {
        let mut out = vec![0.0; emitted];
        for (s, &v) in self.slots.iter().zip(slot_llrs) {
            if let Some(i) = s {
                out[*i] = v;
            }
        }
        LlrSoftVector(out)
    }
}
