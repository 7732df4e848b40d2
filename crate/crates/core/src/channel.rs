//! Modulation, channel models and per-bit LLR demapping.
//!
//! LLR sign convention: positive favours bit 0. BPSK maps bit 0 to +1.
//! Gray QAM is a product of two Gray PAMs: even bit positions of a symbol
//! label the in-phase axis, odd positions the quadrature axis, and position
//! `2j`/`2j+1` is the `j`-th most significant bit of its axis. Bits at the
//! same significance see the same BICM subchannel.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Finite stand-in for an infinite LLR.
pub const DEFAULT_LLR_SURROGATE: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }

    /// Number of distinct BICM reliability classes.
    pub fn subchannel_count(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            _ => self.bits_per_symbol() / 2,
        }
    }

    /// PAM levels per real axis.
    fn pam_levels(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            _ => 1 << (self.bits_per_symbol() / 2),
        }
    }

    fn amplitude_scale(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            _ => {
                let l = self.pam_levels() as f64;
                (3.0 / (2.0 * (l * l - 1.0))).sqrt()
            }
        }
    }

    pub fn snr_convention(self) -> SnrConvention {
        match self {
            Modulation::Bpsk => SnrConvention::PerRealDimension,
            _ => SnrConvention::PerComplexSymbol,
        }
    }

    /// Constellation point for a group of `bits_per_symbol` bits.
    pub fn map_symbol(self, bits: &[u8]) -> Complex64 {
        match self {
            Modulation::Bpsk => Complex64::new(bpsk(bits[0]), 0.0),
            _ => {
                let scale = self.amplitude_scale();
                let levels = self.pam_levels();
                let (i_bits, q_bits) = split_axes(bits);
                Complex64::new(
                    pam_amplitude(&i_bits, levels) * scale,
                    pam_amplitude(&q_bits, levels) * scale,
                )
            }
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

fn bpsk(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn split_axes(bits: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let i_bits = bits.iter().step_by(2).copied().collect();
    let q_bits = bits.iter().skip(1).step_by(2).copied().collect();
    (i_bits, q_bits)
}

/// Binary-reflected Gray label of PAM level `k` (0 = most positive), MSB first.
fn gray_label(k: usize, width: usize) -> Vec<u8> {
    let g = k ^ (k >> 1);
    (0..width).map(|b| ((g >> (width - 1 - b)) & 1) as u8).collect()
}

fn pam_amplitude(bits: &[u8], levels: usize) -> f64 {
    // Invert the Gray label: binary b_0 = g_0, b_i = b_{i-1} ^ g_i.
    let mut k = 0usize;
    let mut acc = 0u8;
    for &g in bits {
        acc ^= g;
        k = (k << 1) | acc as usize;
    }
    ((levels - 1) as f64) - 2.0 * k as f64
}

/// How an SNR in dB maps to the per-real-dimension noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrConvention {
    /// `SNR = 1/σ²` (BPSK).
    PerRealDimension,
    /// `SNR = 1/(2σ²)` (complex QAM, unit symbol energy).
    PerComplexSymbol,
}

impl SnrConvention {
    pub fn noise_var(self, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        match self {
            SnrConvention::PerRealDimension => 1.0 / snr,
            SnrConvention::PerComplexSymbol => 1.0 / (2.0 * snr),
        }
    }

    /// Mean of the BPSK channel LLR `2y/σ²` at this SNR.
    pub fn bpsk_mean_llr(self, snr_db: f64) -> f64 {
        2.0 / self.noise_var(snr_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelKind {
    Bec { erasure: f64 },
    Awgn,
    FastFading,
}

/// A channel: its kind and the noise variance per real dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub noise_var: f64,
}

impl ChannelSpec {
    pub fn bec(erasure: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&erasure) {
            return contract(format!("erasure probability {erasure} outside [0, 1]"));
        }
        Ok(Self {
            kind: ChannelKind::Bec { erasure },
            noise_var: 0.0,
        })
    }

    pub fn awgn(noise_var: f64) -> Result<Self> {
        Self::gaussian(ChannelKind::Awgn, noise_var)
    }

    pub fn fast_fading(noise_var: f64) -> Result<Self> {
        Self::gaussian(ChannelKind::FastFading, noise_var)
    }

    /// Gaussian channel at `snr_db` under the modulation's SNR convention.
    pub fn at_snr_db(kind: ChannelKind, snr_db: f64, modulation: Modulation) -> Result<Self> {
        match kind {
            ChannelKind::Bec { erasure } => Self::bec(erasure),
            _ => Self::gaussian(kind, modulation.snr_convention().noise_var(snr_db)),
        }
    }

    fn gaussian(kind: ChannelKind, noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return contract(format!("noise variance {noise_var} must be positive and finite"));
        }
        Ok(Self { kind, noise_var })
    }

    pub fn is_bec(&self) -> bool {
        matches!(self.kind, ChannelKind::Bec { .. })
    }
}

/// Per-coded-bit LLRs. Never-transmitted positions hold exactly 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrSoftVector(pub Vec<f64>);

impl LlrSoftVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// Resets every entry to 0.
    pub fn clear(&mut self) {
        self.0.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// A received sample together with the channel gain the receiver knows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Received {
    pub value: Complex64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodOptions {
    /// Magnitude used for certain bits and as the clipping bound.
    pub llr_surrogate: f64,
    /// Max-log approximation instead of the exact log-sum.
    pub max_log: bool,
}

impl Default for DemodOptions {
    fn default() -> Self {
        Self {
            llr_surrogate: DEFAULT_LLR_SURROGATE,
            max_log: false,
        }
    }
}

pub fn modulate(bits: &[u8], modulation: Modulation) -> Result<Vec<Complex64>> {
    let m = modulation.bits_per_symbol();
    if bits.len() % m != 0 {
        return contract(format!(
            "{} bits do not fill whole {modulation} symbols of {m} bits",
            bits.len()
        ));
    }
    Ok(bits.chunks_exact(m).map(|c| modulation.map_symbol(c)).collect())
}

/// Sends `symbols` through the channel: `r = a·s + n`.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[Complex64],
    channel: &ChannelSpec,
    modulation: Modulation,
    rng: &mut R,
) -> Vec<Received> {
    let sigma = channel.noise_var.sqrt();
    let complex = modulation != Modulation::Bpsk;
    symbols
        .iter()
        .map(|&s| match channel.kind {
            ChannelKind::Bec { erasure } => {
                if rng.random::<f64>() < erasure {
                    Received {
                        value: Complex64::new(0.0, 0.0),
                        gain: Complex64::new(0.0, 0.0),
                    }
                } else {
                    Received {
                        value: s,
                        gain: Complex64::new(1.0, 0.0),
                    }
                }
            }
            ChannelKind::Awgn | ChannelKind::FastFading => {
                let gain = if channel.kind == ChannelKind::FastFading {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    let a = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                    if complex {
                        a
                    } else {
                        // Rayleigh amplitude with unit mean power.
                        Complex64::new(a.norm(), 0.0)
                    }
                } else {
                    Complex64::new(1.0, 0.0)
                };
                let n_re: f64 = StandardNormal.sample(rng);
                let noise = if complex {
                    let n_im: f64 = StandardNormal.sample(rng);
                    Complex64::new(n_re, n_im) * sigma
                } else {
                    Complex64::new(n_re * sigma, 0.0)
                };
                Received {
                    value: gain * s + noise,
                    gain,
                }
            }
        })
        .collect()
}

/// Per-bit LLRs for a received symbol sequence, `bits_per_symbol` per symbol.
pub fn demodulate(
    received: &[Received],
    channel: &ChannelSpec,
    modulation: Modulation,
    opts: &DemodOptions,
) -> Result<LlrSoftVector> {
    let clip = opts.llr_surrogate;
    let mut out = Vec::with_capacity(received.len() * modulation.bits_per_symbol());
    match channel.kind {
        ChannelKind::Bec { .. } => {
            if modulation != Modulation::Bpsk {
                return Err(Error::Unsupported(format!(
                    "erasure channel with {modulation}"
                )));
            }
            for r in received {
                out.push(if r.gain.norm_sqr() == 0.0 || r.value.re == 0.0 {
                    0.0
                } else {
                    clip.copysign(r.value.re)
                });
            }
        }
        ChannelKind::Awgn | ChannelKind::FastFading => {
            let sigma2 = channel.noise_var;
            match modulation {
                Modulation::Bpsk => {
                    for r in received {
                        let llr = 2.0 * r.gain.re * r.value.re / sigma2;
                        out.push(llr.clamp(-clip, clip));
                    }
                }
                _ => {
                    let demapper = PamDemapper::new(modulation);
                    let half = modulation.bits_per_symbol() / 2;
                    let mut i_llr = vec![0.0; half];
                    let mut q_llr = vec![0.0; half];
                    for r in received {
                        let g2 = r.gain.norm_sqr();
                        if g2 == 0.0 {
                            out.extend(std::iter::repeat_n(0.0, 2 * half));
                            continue;
                        }
                        // Coherent equalisation keeps the noise circular with variance σ²/|a|².
                        let z = r.value * r.gain.conj() / g2;
                        let eff = sigma2 / g2;
                        demapper.axis_llrs(z.re, eff, opts.max_log, &mut i_llr);
                        demapper.axis_llrs(z.im, eff, opts.max_log, &mut q_llr);
                        for j in 0..half {
                            out.push(i_llr[j].clamp(-clip, clip));
                            out.push(q_llr[j].clamp(-clip, clip));
                        }
                    }
                }
            }
        }
    }
    Ok(LlrSoftVector(out))
}

/// Exact per-axis demapper. Since the Gray QAM labelling factorises over the
/// two axes, summing over the PAM points of one axis is the same as summing
/// over the full constellation.
struct PamDemapper {
    amplitudes: Vec<f64>,
    labels: Vec<Vec<u8>>,
}

impl PamDemapper {
    fn new(modulation: Modulation) -> Self {
        let levels = modulation.pam_levels();
        let width = levels.trailing_zeros() as usize;
        let scale = modulation.amplitude_scale();
        Self {
            amplitudes: (0..levels)
                .map(|k| ((levels - 1) as f64 - 2.0 * k as f64) * scale)
                .collect(),
            labels: (0..levels).map(|k| gray_label(k, width)).collect(),
        }
    }

    fn axis_llrs(&self, v: f64, noise_var: f64, max_log: bool, out: &mut [f64]) {
        let metrics: Vec<f64> = self
            .amplitudes
            .iter()
            .map(|a| -(v - a) * (v - a) / (2.0 * noise_var))
            .collect();
        for (j, slot) in out.iter_mut().enumerate() {
            let mut zero = f64::NEG_INFINITY;
            let mut one = f64::NEG_INFINITY;
            for (m, label) in metrics.iter().zip(&self.labels) {
                let acc = if label[j] == 0 { &mut zero } else { &mut one };
                *acc = if max_log { acc.max(*m) } else { log_add(*acc, *m) };
            }
            *slot = zero - one;
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// BICM reliability class of a bit position inside a symbol.
pub fn bicm_subchannel_of(position: usize, modulation: Modulation) -> Result<usize> {
    if position >= modulation.bits_per_symbol() {
        return contract(format!(
            "bit position {position} out of range for {modulation}"
        ));
    }
    Ok(position / 2)
}
