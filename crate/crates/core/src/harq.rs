//! HARQ link simulation: Chase combining and incremental redundancy over
//! the rate-matched polar code, BER/BLER sweeps and normalised throughput.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{demodulate, modulate, transmit, ChannelKind, ChannelSpec, DemodOptions, LlrSoftVector, Modulation};
use crate::decoder::{CheckNode, ScDecoder};
use crate::error::{config_err, contract, Result};
use crate::polar::{encode, PolarCodeSpec};
use crate::rate_matching::{HarqMode, RateMatcher, SymbolMap, TxPlan};
use crate::rng::trial_rng;

/// Where information bits come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageSource {
    #[default]
    Random,
    AllZero,
}

/// Link parameters shared by every block of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Bits sent per transmission.
    pub l: usize,
    pub mode: HarqMode,
    pub check_node: CheckNode,
    pub demod: DemodOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockOutcome {
    pub success: bool,
    pub transmissions: usize,
    /// Information-bit errors after the last decoding attempt.
    pub bit_errors: usize,
}

/// One HARQ process: owns the LLR accumulator and decoder scratch.
pub struct HarqSession<'a> {
    spec: &'a PolarCodeSpec,
    rm: &'a RateMatcher,
    link: LinkConfig,
    plans: Vec<(TxPlan, SymbolMap, Vec<usize>)>,
    acc: LlrSoftVector,
    decoder: ScDecoder,
}

impl<'a> HarqSession<'a> {
    pub fn new(spec: &'a PolarCodeSpec, rm: &'a RateMatcher, link: LinkConfig) -> Result<Self> {
        if rm.code_len() != spec.len() {
            return contract(format!(
                "rate matcher length {} does not match code length {}",
                rm.code_len(),
                spec.len()
            ));
        }
        let plans = (1..=rm.max_transmissions())
            .map(|r| {
                let plan = TxPlan::new(link.l, r, link.mode);
                Ok((plan, rm.symbol_map(&plan)?, rm.emitted_positions(&plan)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            rm,
            decoder: ScDecoder::new(spec.n(), link.check_node),
            link,
            plans,
            acc: LlrSoftVector::zeros(spec.len()),
        })
    }

    pub fn accumulator(&self) -> &LlrSoftVector {
        &self.acc
    }

    /// Sends one information block with up to `t` transmissions, stopping at
    /// the first attempt whose decoded information bits equal `message`.
    pub fn run_block<R: Rng + ?Sized>(
        &mut self,
        message: &[u8],
        channel: &ChannelSpec,
        rng: &mut R,
    ) -> Result<BlockOutcome> {
        let u = self.spec.embed_message(message)?;
        let x = encode(&u, self.spec)?;
        let modulation = self.rm.modulation();
        self.acc.clear();
        let mut outcome = BlockOutcome::default();
        for (plan, map, positions) in &self.plans {
            let bits: Vec<u8> = positions.iter().map(|&j| x[j]).collect();
            let symbols = modulate(&map.pack(&bits), modulation)?;
            let rx = transmit(&symbols, channel, modulation, rng);
            let slot_llrs = demodulate(&rx, channel, modulation, &self.link.demod)?;
            let llrs = map.unpack(slot_llrs.as_slice(), plan.l);
            self.rm.de_rate_match(&llrs, plan, &mut self.acc)?;
            let decoded = self.decoder.decode(&self.acc, self.spec)?;
            outcome.transmissions = plan.r;
            outcome.bit_errors = decoded.info_bits.iter().zip(message).filter(|(a, b)| a != b).count();
            if outcome.bit_errors == 0 {
                outcome.success = true;
                break;
            }
        }
        Ok(outcome)
    }
}

/// `R·log2(M)·(1 − BLER)/t̄`.
pub fn throughput(rate: f64, order: usize, bler: f64, t_bar: f64) -> Result<f64> {
    if !(t_bar >= 1.0) {
        return contract(format!("mean transmissions {t_bar} below 1"));
    }
    if !(0.0..=1.0).contains(&bler) {
        return contract(format!("BLER {bler} outside [0, 1]"));
    }
    if !(order >= 2 && order.is_power_of_two()) {
        return contract(format!("modulation order {order} is not a power of two"));
    }
    Ok(rate * order.trailing_zeros() as f64 * (1.0 - bler) / t_bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingRule {
    pub max_blocks: u64,
    /// Stop once this many block errors have been seen (0 disables).
    pub target_block_errors: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_blocks: 100_000,
            target_block_errors: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub snr_db: f64,
    pub blocks: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub transmissions: u64,
    pub ber: f64,
    pub bler: f64,
    pub t_bar: f64,
    pub throughput: f64,
}

pub const RESULTS_HEADER: [&str; 8] = [
    "snr_db",
    "blocks",
    "bit_errors",
    "block_errors",
    "ber",
    "bler",
    "t_bar",
    "throughput",
];

/// Writes a `# seed=…` comment line, the header and one row per result.
pub fn write_results_csv<W: std::io::Write>(mut w: W, seed: u64, rows: &[SimResult]) -> Result<()> {
    writeln!(w, "# seed={seed}")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULTS_HEADER)?;
    for r in rows {
        wtr.write_record([
            format!("{}", r.snr_db),
            r.blocks.to_string(),
            r.bit_errors.to_string(),
            r.block_errors.to_string(),
            format!("{:e}", r.ber),
            format!("{:e}", r.bler),
            format!("{}", r.t_bar),
            format!("{}", r.throughput),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spec: PolarCodeSpec,
    pub rm: RateMatcher,
    pub link: LinkConfig,
    pub channel: ChannelKind,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    pub stopping: StoppingRule,
    pub messages: MessageSource,
    /// Blocks simulated per parallel batch; does not affect results.
    pub batch: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.link.l == 0 {
            return config_err("l", "must be at least 1");
        }
        if self.stopping.max_blocks == 0 {
            return config_err("max_blocks", "must be at least 1");
        }
        if self.batch == 0 {
            return config_err("batch", "must be at least 1");
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return config_err("snr_db", "every SNR point must be finite");
        }
        if self.rm.code_len() != self.spec.len() {
            return config_err("p", "rate matcher and code disagree on the code length");
        }
        if let ChannelKind::Bec { erasure } = self.channel {
            if !(0.0..=1.0).contains(&erasure) {
                return config_err("erasure", "must lie in [0, 1]");
            }
            if self.rm.modulation() != Modulation::Bpsk {
                return config_err("modulation", "the erasure channel carries BPSK only");
            }
        }
        Ok(())
    }

    /// Information rate per transmission, `k/L`.
    pub fn rate(&self) -> f64 {
        self.spec.k() as f64 / self.link.l as f64
    }
}

/// Simulates every SNR point. Block `b` at point `s` always uses the same
/// random stream, and a point stops at exactly the block where its stopping
/// rule is met, so results are identical for any worker count or batch size.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SimResult>> {
    cfg.validate()?;
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(idx, &snr)| simulate_point(cfg, idx as u64, snr))
        .collect()
}

fn simulate_point(cfg: &SweepConfig, point: u64, snr_db: f64) -> Result<SimResult> {
    let channel = ChannelSpec::at_snr_db(cfg.channel, snr_db, cfg.rm.modulation())?;
    let k = cfg.spec.k();
    let mut blocks = 0u64;
    let mut bit_errors = 0u64;
    let mut block_errors = 0u64;
    let mut transmissions = 0u64;
    let stop = &cfg.stopping;
    'outer: while blocks < stop.max_blocks {
        let count = (cfg.batch as u64).min(stop.max_blocks - blocks);
        let outcomes: Vec<BlockOutcome> = (blocks..blocks + count)
            .into_par_iter()
            .map_init(
                || HarqSession::new(&cfg.spec, &cfg.rm, cfg.link.clone()),
                |session, b| {
                    let session = session.as_mut().map_err(|e| crate::Error::Contract(e.to_string()))?;
                    let mut rng = trial_rng(cfg.seed, point, b);
                    let message: Vec<u8> = match cfg.messages {
                        MessageSource::Random => (0..k).map(|_| rng.random_range(0..2u8)).collect(),
                        MessageSource::AllZero => vec![0; k],
                    };
                    session.run_block(&message, &channel, &mut rng)
                },
            )
            .collect::<Result<_>>()?;
        for o in outcomes {
            blocks += 1;
            transmissions += o.transmissions as u64;
            bit_errors += o.bit_errors as u64;
            if !o.success {
                block_errors += 1;
                if stop.target_block_errors > 0 && block_errors >= stop.target_block_errors {
                    break 'outer;
                }
            }
        }
    }
    let bler = block_errors as f64 / blocks as f64;
    let t_bar = transmissions as f64 / blocks as f64;
    Ok(SimResult {
        snr_db,
        blocks,
        bit_errors,
        block_errors,
        transmissions,
        ber: bit_errors as f64 / (blocks as f64 * k.max(1) as f64),
        bler,
        t_bar,
        throughput: throughput(cfg.rate(), cfg.rm.modulation().order(), bler, t_bar)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puncturing::{DesignChannel, PuncturingSequence};

    fn setup(n: u32, p: u32, k: usize, modulation: Modulation, t: usize) -> (PolarCodeSpec, RateMatcher) {
        let design = DesignChannel::default();
        let base = design.base_code(n, k).unwrap();
        let spec = PolarCodeSpec::new(n, p, base.info_set().to_vec()).unwrap();
        let seq = if p == 5 {
            PuncturingSequence::reference_32()
        } else {
            PuncturingSequence::new((0..1usize << p).collect()).unwrap()
        };
        let rm = RateMatcher::new(&spec, &seq, modulation, t).unwrap();
        (spec, rm)
    }

    fn link(l: usize, mode: HarqMode) -> LinkConfig {
        LinkConfig {
            l,
            mode,
            check_node: CheckNode::Exact,
            demod: DemodOptions::default(),
        }
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(0.5, 2, 1.0, 1.0).unwrap(), 0.0);
        assert!((throughput(11.0 / 32.0, 16, 0.0, 1.0).unwrap() - 1.375).abs() < 1e-15);
        assert!((throughput(0.5, 2, 0.5, 2.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(throughput(0.5, 2, 0.0, 0.5).is_err());
    }

    #[test]
    fn noiseless_block_succeeds_first_time() {
        for m in [Modulation::Bpsk, Modulation::Qam16, Modulation::Qam64] {
            let (spec, rm) = setup(8, 5, 88, m, 4);
            let mut s = HarqSession::new(&spec, &rm, link(200, HarqMode::Ir)).unwrap();
            let ch = ChannelSpec::awgn(1e-6).unwrap();
            let mut rng = trial_rng(1, 0, 0);
            let msg: Vec<u8> = (0..88).map(|_| rng.random_range(0..2)).collect();
            let o = s.run_block(&msg, &ch, &mut rng).unwrap();
            assert_eq!(o, BlockOutcome { success: true, transmissions: 1, bit_errors: 0 }, "{m}");
        }
    }

    #[test]
    fn useless_channel_exhausts_transmissions() {
        let (spec, rm) = setup(6, 5, 30, Modulation::Bpsk, 3);
        let mut s = HarqSession::new(&spec, &rm, link(64, HarqMode::Cc)).unwrap();
        let ch = ChannelSpec::awgn(1e8).unwrap();
        let mut rng = trial_rng(2, 0, 0);
        let msg: Vec<u8> = (0..30).map(|_| rng.random_range(0..2)).collect();
        let o = s.run_block(&msg, &ch, &mut rng).unwrap();
        assert!(!o.success);
        assert_eq!(o.transmissions, 3);
    }

    #[test]
    fn cc_accumulator_is_additive_on_deterministic_channel() {
        // An erasure channel with ε = 0 is deterministic, and 8 bits per
        // transmission cannot carry 30 information bits, so all three
        // transmissions happen and each adds the same surrogate LLRs.
        let (spec, rm) = setup(6, 5, 30, Modulation::Bpsk, 3);
        let ch = ChannelSpec::bec(0.0).unwrap();
        let mut rng = trial_rng(5, 0, 0);
        let msg: Vec<u8> = (0..30).map(|_| rng.random_range(0..2)).collect();
        let mut s = HarqSession::new(&spec, &rm, link(8, HarqMode::Cc)).unwrap();
        let o = s.run_block(&msg, &ch, &mut rng).unwrap();
        assert!(!o.success);
        assert_eq!(o.transmissions, 3);

        let x = encode(&spec.embed_message(&msg).unwrap(), &spec).unwrap();
        let plan = TxPlan::new(8, 1, HarqMode::Cc);
        let bits = rm.rate_match(&x, &plan).unwrap();
        let llr = LlrSoftVector(bits.as_slice().iter().map(|&b| if b == 0 { 300.0 } else { -300.0 }).collect());
        let mut single = LlrSoftVector::zeros(64);
        rm.de_rate_match(&llr, &plan, &mut single).unwrap();
        assert_eq!(single.0.iter().filter(|v| **v != 0.0).count(), 8);
        for (a, b) in single.0.iter().zip(&s.accumulator().0) {
            assert_eq!(3.0 * a, *b);
        }
    }

    fn small_sweep(mode: HarqMode, t: usize, batch: usize) -> SweepConfig {
        let (spec, rm) = setup(6, 5, 30, Modulation::Qam16, t);
        SweepConfig {
            spec,
            rm,
            link: link(48, mode),
            channel: ChannelKind::Awgn,
            snr_db: vec![2.0, 4.0, 6.0],
            seed: 99,
            stopping: StoppingRule { max_blocks: 300, target_block_errors: 40 },
            messages: MessageSource::Random,
            batch,
        }
    }

    #[test]
    fn sweep_is_independent_of_batching_and_workers() {
        let a = sweep(&small_sweep(HarqMode::Ir, 2, 7)).unwrap();
        let b = sweep(&small_sweep(HarqMode::Ir, 2, 64)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| sweep(&small_sweep(HarqMode::Ir, 2, 64))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        for r in &a {
            assert!(r.bler <= 1.0 && r.t_bar >= 1.0 && r.t_bar <= 2.0);
            assert!(r.ber <= r.bler);
            assert!(r.block_errors <= r.blocks);
        }
    }

    #[test]
    fn cc_equals_ir_with_one_transmission() {
        let a = sweep(&small_sweep(HarqMode::Ir, 1, 32)).unwrap();
        let b = sweep(&small_sweep(HarqMode::Cc, 1, 32)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.t_bar == 1.0));
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut c = small_sweep(HarqMode::Cc, 1, 32);
        c.link.l = 0;
        assert!(matches!(sweep(&c), Err(crate::Error::Config { field, .. }) if field == "l"));
        let mut c = small_sweep(HarqMode::Cc, 1, 32);
        c.channel = ChannelKind::Bec { erasure: 0.1 };
        assert!(matches!(sweep(&c), Err(crate::Error::Config { field, .. }) if field == "modulation"));
    }

    #[test]
    fn results_csv_layout() {
        let rows = sweep(&small_sweep(HarqMode::Cc, 1, 32)).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&mut buf, 99, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=99"));
        assert_eq!(lines.next(), Some("snr_db,blocks,bit_errors,block_errors,ber,bler,t_bar,throughput"));
        assert_eq!(lines.count(), 3);
    }
}
