//! Bit-channel reliability: Gaussian-approximation density evolution, the
//! exact erasure-channel recursion, Monte-Carlo genie estimation and
//! information-set selection.
//!
//! All recursions run on the natural-order view of the coded block
//! (`nat[k] = coded[br(k)]`), so their outputs are indexed by input bit.

use std::io::{Read, Write};
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{demodulate, modulate, transmit, ChannelSpec, DemodOptions, LlrSoftVector, Modulation};
use crate::decoder::{CheckNode, ScDecoder};
use crate::error::{contract, Error, Result};
use crate::polar::{encode, reverse_bits, BitBlock, PolarCodeSpec};
use crate::rate_matching::{RateMatcher, TxPlan};
use crate::rng::trial_rng;

/// How a profile was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ga,
    Bec,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ga => "ga",
            Method::Bec => "bec",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

/// The channel condition a profile was designed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignPoint {
    SnrDb(f64),
    Erasure(f64),
    Unspecified,
}

impl std::fmt::Display for DesignPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DesignPoint::SnrDb(s) => write!(f, "snr{s}dB"),
            DesignPoint::Erasure(e) => write!(f, "eps{e}"),
            DesignPoint::Unspecified => f.write_str("none"),
        }
    }
}

/// Estimated error probability per input index, plus GA mean LLRs.
///
/// The BEC method stores the Bhattacharyya parameter `Z_i`, which upper
/// bounds the genie error probability and may exceed 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    pub method: Method,
    pub design: DesignPoint,
    pub mean_llr: Option<Vec<f64>>,
    pub error_prob: Vec<f64>,
}

impl ReliabilityProfile {
    pub fn len(&self) -> usize {
        self.error_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.error_prob.is_empty()
    }

    /// Writes `index,mean_llr,error_prob` rows, 1-based index.
    /// `mean_llr` is left empty for methods without one.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "mean_llr", "error_prob"])?;
        for (i, p) in self.error_prob.iter().enumerate() {
            let m = match &self.mean_llr {
                Some(v) => format!("{:e}", v[i]),
                None => String::new(),
            };
            wtr.write_record([(i + 1).to_string(), m, format!("{p:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, method: Method, design: DesignPoint) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut means = Vec::new();
        let mut probs = Vec::new();
        let mut have_means = true;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields", row + 1)));
            }
            let idx: usize = parse_field(&rec[0], row)?;
            if idx != row + 1 {
                return Err(Error::Parse(format!("row {}: index {idx} out of order", row + 1)));
            }
            if rec[1].is_empty() {
                have_means = false;
            } else {
                means.push(parse_field::<f64>(&rec[1], row)?);
            }
            probs.push(parse_field::<f64>(&rec[2], row)?);
        }
        Ok(Self {
            method,
            design,
            mean_llr: (have_means && !probs.is_empty()).then_some(means),
            error_prob: probs,
        })
    }

    /// Cache key over `(N, method, design point, puncturing pattern)`.
    pub fn cache_key(n_len: usize, method: Method, design: DesignPoint, punctured: &[usize]) -> String {
        let mut sorted = punctured.to_vec();
        sorted.sort_unstable();
        // FNV-1a over the sorted pattern: stable across builds and platforms.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &i in &sorted {
            for b in (i as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("N{n_len}-{method}-{design}-{h:016x}")
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, row: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {}: bad value `{s}`", row + 1)))
}

// ---------------------------------------------------------------------------
// φ(x) = 1 - E[tanh(u/2)], u ~ N(x, 2x)

const GRID_MIN: f64 = 1e-6;
const GRID_MAX: f64 = 200.0;
const GRID_KNOTS: usize = 8192;

/// `ln φ` tabulated on a log grid with monotone cubic (Fritsch–Carlson)
/// slopes in `(ln x, ln φ)` coordinates.
struct PhiTable {
    t0: f64,
    dt: f64,
    ly: Vec<f64>,
    slope: Vec<f64>,
    /// Offset added to the asymptotic tail so it meets the table at `GRID_MAX`.
    tail_offset: f64,
}

fn table() -> &'static PhiTable {
    static TABLE: OnceLock<PhiTable> = OnceLock::new();
    TABLE.get_or_init(PhiTable::build)
}

impl PhiTable {
    fn build() -> Self {
        let t0 = GRID_MIN.ln();
        let dt = (GRID_MAX.ln() - t0) / (GRID_KNOTS - 1) as f64;
        let ly: Vec<f64> = (0..GRID_KNOTS)
            .map(|k| phi_quadrature((t0 + k as f64 * dt).exp()).ln())
            .collect();
        let slope = pchip_slopes(&ly, dt);
        let tail_offset = ly[GRID_KNOTS - 1] - ln_phi_asymptotic(GRID_MAX);
        Self { t0, dt, ly, slope, tail_offset }
    }

    fn ln_phi(&self, x: f64) -> f64 {
        if x < GRID_MIN {
            // φ is linear to first order near 0; join (0, 1) to the first knot.
            let y0 = self.ly[0].exp();
            return (-(1.0 - y0) * x / GRID_MIN).ln_1p();
        }
        if x > GRID_MAX {
            return ln_phi_asymptotic(x) + self.tail_offset;
        }
        let t = x.ln();
        let pos = ((t - self.t0) / self.dt).clamp(0.0, (GRID_KNOTS - 1) as f64);
        let k = (pos as usize).min(GRID_KNOTS - 2);
        self.hermite(k, t - (self.t0 + k as f64 * self.dt))
    }

    fn hermite(&self, k: usize, s: f64) -> f64 {
        let h = self.dt;
        let u = s / h;
        let (y0, y1, m0, m1) = (self.ly[k], self.ly[k + 1], self.slope[k], self.slope[k + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * h * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * h * m1
    }

    fn hermite_deriv(&self, k: usize, s: f64) -> f64 {
        let h = self.dt;
        let u = s / h;
        let (y0, y1, m0, m1) = (self.ly[k], self.ly[k + 1], self.slope[k], self.slope[k + 1]);
        let u2 = u * u;
        ((6.0 * u2 - 6.0 * u) * y0 + (6.0 * u - 6.0 * u2) * y1) / h
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (3.0 * u2 - 2.0 * u) * m1
    }

    /// Solves `ln φ(x) = target` for `x ≥ 0`; `target ≤ 0`.
    fn inverse_ln(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        if target > self.ly[0] {
            let y0 = self.ly[0].exp();
            return GRID_MIN * (-target.exp_m1()) / (1.0 - y0);
        }
        let last = self.ly[GRID_KNOTS - 1];
        if target < last {
            return self.inverse_tail(target);
        }
        // ly is decreasing: find k with ly[k] >= target >= ly[k+1].
        let k = self.ly.partition_point(|&v| v >= target).saturating_sub(1).min(GRID_KNOTS - 2);
        // Safeguarded Newton on the monotone cubic segment.
        let (mut lo, mut hi) = (0.0, self.dt);
        let mut s = self.dt * (self.ly[k] - target) / (self.ly[k] - self.ly[k + 1]).max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let f = self.hermite(k, s) - target;
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let d = self.hermite_deriv(k, s);
            let mut next = if d < 0.0 { s - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-14 {
                s = next;
                break;
            }
            s = next;
        }
        (self.t0 + k as f64 * self.dt + s).exp()
    }

    fn inverse_tail(&self, target: f64) -> f64 {
        let f = |x: f64| ln_phi_asymptotic(x) + self.tail_offset - target;
        let mut lo = GRID_MAX;
        let mut hi = GRID_MAX;
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut x = (-4.0 * target).clamp(lo, hi);
        for _ in 0..200 {
            let v = f(x);
            if v > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = -0.5 / x - 0.25 + 10.0 / (7.0 * x * x) / (1.0 - 10.0 / (7.0 * x));
            let mut next = x - v / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x {
                return next;
            }
            x = next;
        }
        x
    }
}

fn ln_phi_asymptotic(x: f64) -> f64 {
    0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (-10.0 / (7.0 * x)).ln_1p()
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        m[k] = if d[k - 1] * d[k] <= 0.0 {
            0.0
        } else {
            2.0 / (1.0 / d[k - 1] + 1.0 / d[k])
        };
    }
    let end = |d0: f64, d1: f64| {
        let s = (3.0 * d0 - d1) / 2.0;
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(d[0], d[1]);
    m[n - 1] = end(d[n - 2], d[n - 3]);
    m
}

/// Direct evaluation of φ by adaptive Gauss–Kronrod quadrature of
/// `E[2/(1+e^u)]`, which avoids the cancellation in `1 - E[tanh(u/2)]`.
fn phi_quadrature(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let s = (2.0 * x).sqrt();
    let norm = -0.5 * (4.0 * std::f64::consts::PI * x).ln();
    let f = |u: f64| {
        let softplus = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
        (std::f64::consts::LN_2 - softplus - (u - x) * (u - x) / (4.0 * x) + norm).exp()
    };
    let (a, b) = (x - 40.0 * s, x + 40.0 * s);
    let mut cuts = vec![a, b];
    for c in [-x, 0.0, x] {
        if c > a && c < b {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    adaptive(&f, &cuts)
}

/// Globally adaptive Gauss–Kronrod: repeatedly bisects the interval with the
/// largest error estimate until the total estimate is below a relative
/// tolerance or the subdivision limit is reached.
fn adaptive(f: &impl Fn(f64) -> f64, cuts: &[f64]) -> f64 {
    const REL_TOL: f64 = 1e-14;
    const MAX_INTERVALS: usize = 2000;
    let mut parts: Vec<(f64, f64, f64, f64)> = cuts
        .windows(2)
        .map(|w| {
            let (v, e) = gauss_kronrod(f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= REL_TOL * total.abs() || parts.len() >= MAX_INTERVALS {
            return total;
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (a + b);
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = gauss_kronrod(f, lo, hi);
            parts.push((lo, hi, v, e));
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// φ(x) for `x ≥ 0`: `φ(0) = 1`, strictly decreasing towards 0.
pub fn phi(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return contract(format!("phi argument {x} must be non-negative"));
    }
    Ok(if x == 0.0 { 1.0 } else { ln_phi(x).exp() })
}

/// Inverse of [`phi`] on `(0, 1]`.
pub fn phi_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0 && y <= 1.0) {
        return contract(format!("phi_inverse argument {y} outside (0, 1]"));
    }
    Ok(table().inverse_ln(y.ln()))
}

/// `ln φ(x)`, finite far beyond where φ itself underflows.
pub fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    table().ln_phi(x)
}

/// Check-node update of the mean LLR:
/// `φ⁻¹(1 - (1 - φ(a))(1 - φ(b)))`, evaluated as `φa + φb - φa·φb` in the log domain.
pub fn check_node_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    if a.is_infinite() {
        return b;
    }
    if b.is_infinite() {
        return a;
    }
    let (la, lb) = (ln_phi(a), ln_phi(b));
    let (hi, lo) = if la > lb { (la, lb) } else { (lb, la) };
    let ly = hi + ((lo - hi).exp() - lo.exp()).ln_1p();
    table().inverse_ln(ly.min(0.0))
}

/// `Q(√(mean/2))`: the GA estimate of a bit-channel's error probability.
pub fn bit_error_prob(mean_llr: f64) -> Result<f64> {
    if mean_llr.is_nan() || mean_llr < 0.0 {
        return contract(format!("mean LLR {mean_llr} must be non-negative"));
    }
    Ok(q_function((mean_llr / 2.0).sqrt()))
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// GA mean LLRs of the input bits (natural input order) from per-coded-position means.
pub(crate) fn ga_means(channel_means: &[f64]) -> Vec<f64> {
    let len = channel_means.len();
    let n = len.trailing_zeros();
    let mut m: Vec<f64> = (0..len).map(|k| channel_means[reverse_bits(k, n)]).collect();
    let mut h = len / 2;
    while h >= 1 {
        for block in m.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = check_node_mean(x, y);
                *b = x + y;
            }
        }
        h /= 2;
    }
    m
}

fn check_len(spec: &PolarCodeSpec, got: usize, what: &str) -> Result<()> {
    if got != spec.len() {
        return contract(format!("{what} has length {got}, code length is {}", spec.len()));
    }
    Ok(())
}

/// Gaussian-approximation density evolution. Punctured positions carry mean 0.
pub fn ga_evolve(spec: &PolarCodeSpec, channel_means: &[f64]) -> Result<ReliabilityProfile> {
    check_len(spec, channel_means.len(), "channel means")?;
    if let Some(m) = channel_means.iter().find(|m| m.is_nan() || **m < 0.0) {
        return contract(format!("channel mean {m} must be non-negative"));
    }
    let means = ga_means(channel_means);
    let error_prob = means.iter().map(|&m| q_function((m / 2.0).sqrt())).collect();
    Ok(ReliabilityProfile {
        method: Method::Ga,
        design: DesignPoint::Unspecified,
        mean_llr: Some(means),
        error_prob,
    })
}

/// GA profile of a BPSK-equivalent design at `snr_db` with the given coded positions punctured.
pub fn ga_profile(
    spec: &PolarCodeSpec,
    snr_db: f64,
    convention: crate::channel::SnrConvention,
    punctured: &[usize],
) -> Result<ReliabilityProfile> {
    let mu = convention.bpsk_mean_llr(snr_db);
    let mut means = vec![mu; spec.len()];
    for &j in punctured {
        if j >= spec.len() {
            return contract(format!("punctured position {j} out of range"));
        }
        means[j] = 0.0;
    }
    let mut p = ga_evolve(spec, &means)?;
    p.design = DesignPoint::SnrDb(snr_db);
    Ok(p)
}

/// Exact Bhattacharyya recursion on the erasure channel.
pub fn bhattacharyya_bec(spec: &PolarCodeSpec, erasure_probs: &[f64]) -> Result<ReliabilityProfile> {
    check_len(spec, erasure_probs.len(), "erasure probabilities")?;
    if let Some(z) = erasure_probs.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return contract(format!("erasure probability {z} outside [0, 1]"));
    }
    let len = spec.len();
    let n = spec.n();
    let mut z: Vec<f64> = (0..len).map(|k| erasure_probs[reverse_bits(k, n)]).collect();
    let mut h = len / 2;
    while h >= 1 {
        for block in z.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y - x * y;
                *b = x * y;
            }
        }
        h /= 2;
    }
    Ok(ReliabilityProfile {
        method: Method::Bec,
        design: DesignPoint::Unspecified,
        mean_llr: None,
        error_prob: z,
    })
}

/// The `k` indices with the smallest error probability, ascending; ties go to the smaller index.
pub fn select_information_set(profile: &ReliabilityProfile, k: usize) -> Result<Vec<usize>> {
    if k > profile.len() {
        return contract(format!("k = {k} exceeds profile length {}", profile.len()));
    }
    let mut order: Vec<usize> = (0..profile.len()).collect();
    order.sort_by(|&a, &b| {
        profile.error_prob[a]
            .total_cmp(&profile.error_prob[b])
            .then(a.cmp(&b))
    });
    let mut info = order[..k].to_vec();
    info.sort_unstable();
    Ok(info)
}

/// `Σ_{i ∈ info} P(E_i)`.
pub fn union_bound(profile: &ReliabilityProfile, info_set: &[usize]) -> Result<f64> {
    let mut sum = 0.0;
    for &i in info_set {
        match profile.error_prob.get(i) {
            Some(p) => sum += p,
            None => return contract(format!("index {i} outside profile of length {}", profile.len())),
        }
    }
    Ok(sum)
}

/// Codewords used by [`genie_monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodewordSource {
    /// All-zero input; valid for symmetric channels with unbiased tie-breaking.
    #[default]
    AllZero,
    /// Uniform random input on every index. Needed when exact-zero LLRs
    /// occur (erasures), since ties decide 0 and would otherwise never err.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenieOptions {
    pub source: CodewordSource,
    pub check_node: CheckNode,
    pub demod: DemodOptions,
    pub seed: u64,
    /// Trials per parallel work unit; does not affect results.
    pub chunk: usize,
}

impl Default for GenieOptions {
    fn default() -> Self {
        Self {
            source: CodewordSource::AllZero,
            check_node: CheckNode::Exact,
            demod: DemodOptions::default(),
            seed: 0,
            chunk: 1024,
        }
    }
}

pub const DEFAULT_GENIE_TRIALS: u64 = 100_000;

/// Genie-aided SC estimate of every bit-channel's first-error probability.
///
/// Without a rate matcher all `N` coded bits are sent once in natural
/// order (zero-padded to whole symbols); with one, the bits of `plan` are
/// sent and untransmitted positions get zero LLR. Trial `i` draws from its
/// own stream, so the estimate is independent of the worker count.
pub fn genie_monte_carlo(
    spec: &PolarCodeSpec,
    chan: &ChannelSpec,
    modulation: Modulation,
    rate_matcher: Option<(&RateMatcher, &TxPlan)>,
    trials: u64,
    opts: &GenieOptions,
) -> Result<ReliabilityProfile> {
    if trials == 0 {
        return contract("genie Monte-Carlo needs at least one trial");
    }
    if opts.chunk == 0 {
        return contract("chunk size must be at least 1");
    }
    let len = spec.len();
    let m = modulation.bits_per_symbol();
    let mapping = match rate_matcher {
        Some((rm, plan)) => {
            if rm.code_len() != len || rm.modulation() != modulation {
                return contract("rate matcher does not match code length or modulation");
            }
            Some((rm, plan, rm.symbol_map(plan)?, rm.emitted_positions(plan)?))
        }
        None => None,
    };
    let chunks = trials.div_ceil(opts.chunk as u64);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut decoder = ScDecoder::new(spec.n(), opts.check_node);
            let mut counts = vec![0u64; len];
            let mut acc = LlrSoftVector::zeros(len);
            let lo = c * opts.chunk as u64;
            for t in lo..(lo + opts.chunk as u64).min(trials) {
                let mut rng = trial_rng(opts.seed, 0, t);
                let u = match opts.source {
                    CodewordSource::AllZero => BitBlock::zeros(len),
                    CodewordSource::Random => BitBlock::new((0..len).map(|_| rng.random_range(0..2u8)).collect())?,
                };
                let x = encode(&u, spec)?;
                match &mapping {
                    Some((rm, plan, map, positions)) => {
                        let bits: Vec<u8> = positions.iter().map(|&j| x[j]).collect();
                        let rx = transmit(&modulate(&map.pack(&bits), modulation)?, chan, modulation, &mut rng);
                        let slot = demodulate(&rx, chan, modulation, &opts.demod)?;
                        acc.clear();
                        rm.de_rate_match(&map.unpack(slot.as_slice(), plan.l), plan, &mut acc)?;
                    }
                    None => {
                        let mut bits = x.into_vec();
                        bits.resize(len.div_ceil(m) * m, 0);
                        let rx = transmit(&modulate(&bits, modulation)?, chan, modulation, &mut rng);
                        let mut llr = demodulate(&rx, chan, modulation, &opts.demod)?;
                        llr.0.truncate(len);
                        acc = llr;
                    }
                }
                let r = decoder.genie_decode(&acc, spec, &u)?;
                for (n, &e) in counts.iter_mut().zip(r.genie_errors.iter().flatten()) {
                    *n += u64::from(e);
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0u64; len];
    for c in counts {
        for (a, b) in total.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(ReliabilityProfile {
        method: Method::MonteCarlo,
        design: DesignPoint::Unspecified,
        mean_llr: None,
        error_prob: total.into_iter().map(|e| e as f64 / trials as f64).collect(),
    })
}
