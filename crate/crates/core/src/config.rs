//! Run configuration: one TOML document describing the code, construction,
//! puncturing, link and stopping rule, plus the builders that turn it into
//! library objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelSpec, DemodOptions, Modulation, SnrConvention, DEFAULT_LLR_SURROGATE};
use crate::construction::{
    bhattacharyya_bec, ga_profile, genie_monte_carlo, select_information_set, CodewordSource, DesignPoint,
    GenieOptions, Method, ReliabilityProfile, DEFAULT_GENIE_TRIALS,
};
use crate::decoder::CheckNode;
use crate::error::{config_err, Error, Result};
use crate::harq::{LinkConfig, MessageSource, StoppingRule, SweepConfig};
use crate::polar::PolarCodeSpec;
use crate::puncturing::{ppa, DesignChannel, PpaOptions, PpaResult, PuncturingSequence};
use crate::rate_matching::{HarqMode, RateMatcher, TxPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; generated by the caller when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub code: CodeConfig,
    #[serde(default)]
    pub construction: ConstructionConfig,
    #[serde(default)]
    pub puncturing: PuncturingConfig,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub stopping: StoppingRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// `log2` of the mother code length.
    pub n: u32,
    /// Information bits.
    pub k: usize,
    /// `log2` of the base (puncturing) length.
    #[serde(default = "default_p")]
    pub p: u32,
    /// `log2` of the rows; must equal `n − p` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
}

fn default_p() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstructionConfig {
    pub method: Method,
    /// Design SNR for GA and Monte-Carlo.
    pub snr_db: f64,
    /// Design erasure probability for the BEC method.
    pub erasure: f64,
    /// SNR convention for the design point; defaults to the modulation's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<SnrConvention>,
    /// Transmitted length the information set is chosen for; the
    /// untransmitted positions count as punctured. Defaults to `link.l`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_len: Option<usize>,
    pub trials: u64,
    pub codeword_source: CodewordSource,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            method: Method::Ga,
            snr_db: 3.5,
            erasure: 0.5,
            convention: None,
            selection_len: None,
            trials: DEFAULT_GENIE_TRIALS,
            codeword_source: CodewordSource::AllZero,
        }
    }
}

/// Where the puncturing sequence comes from: `"reference"`, `"derive"` or a file path.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SequenceSource {
    #[default]
    Reference,
    Derive,
    File(PathBuf),
}

impl From<String> for SequenceSource {
    fn from(s: String) -> Self {
        match s.as_str() {
            "reference" => SequenceSource::Reference,
            "derive" => SequenceSource::Derive,
            _ => SequenceSource::File(PathBuf::from(s)),
        }
    }
}

impl From<SequenceSource> for String {
    fn from(s: SequenceSource) -> Self {
        match s {
            SequenceSource::Reference => "reference".into(),
            SequenceSource::Derive => "derive".into(),
            SequenceSource::File(p) => p.to_string_lossy().into_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PuncturingConfig {
    pub sequence: SequenceSource,
    pub design: DesignChannel,
    /// Information bits of the base code used by the derivation; defaults
    /// to `round(11·2^p/32)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_k: Option<usize>,
    pub tie_rel_tol: f64,
}

impl Default for PuncturingConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceSource::Reference,
            design: DesignChannel::default(),
            base_k: None,
            tie_rel_tol: PpaOptions::default().tie_rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Default for SnrGrid {
    fn default() -> Self {
        SnrGrid::List(vec![3.5])
    }
}

impl SnrGrid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            SnrGrid::List(ref v) => v.clone(),
            SnrGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Vec::new();
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Vec::new();
                }
                // Rounded to 1e-9 dB so printed grids stay clean.
                (0..=count as usize)
                    .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub modulation: Modulation,
    pub channel: ChannelKind,
    pub mode: HarqMode,
    /// Maximum transmissions per block.
    pub t: usize,
    /// Bits per transmission; defaults to the mother code length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    pub check_node: CheckNode,
    pub llr_surrogate: f64,
    pub max_log: bool,
    pub cc_bicm_shift: bool,
    pub messages: MessageSource,
    pub snr_db: SnrGrid,
    pub batch: usize,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            modulation: Modulation::Bpsk,
            channel: ChannelKind::Awgn,
            mode: HarqMode::Ir,
            t: 1,
            l: None,
            check_node: CheckNode::Exact,
            llr_surrogate: DEFAULT_LLR_SURROGATE,
            max_log: false,
            cc_bicm_shift: false,
            messages: MessageSource::Random,
            snr_db: SnrGrid::default(),
            batch: 256,
        }
    }
}

/// Pulls the dotted field path out of a deserialisation message.
fn field_of(msg: &str) -> String {
    let mut path = msg
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("in `").and_then(|r| r.strip_suffix('`')))
        .unwrap_or("")
        .to_string();
    let first = msg.lines().next().unwrap_or("");
    if first.starts_with("missing field") || first.starts_with("unknown field") {
        if let Some(name) = first.split('`').nth(1) {
            if !path.is_empty() {
                path.push('.');
            }
            path.push_str(name);
        }
    }
    if path.is_empty() {
        "config".into()
    } else {
        path
    }
}

impl RunConfig {
    /// Parses a TOML table, e.g. one assembled from a file plus flag overrides.
    pub fn from_value(value: toml::Value) -> Result<Self> {
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| {
            let msg = e.to_string();
            Error::Config {
                field: field_of(&msg),
                reason: msg.lines().next().unwrap_or("").to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config {
            field: "config".into(),
            reason: e.message().to_string(),
        })?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            field: "config".into(),
            reason: e.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        1usize << self.code.n
    }

    pub fn q(&self) -> u32 {
        self.code.n - self.code.p
    }

    pub fn l(&self) -> usize {
        self.link.l.unwrap_or(self.len())
    }

    pub fn base_k(&self) -> usize {
        let base = 1usize << self.code.p;
        self.puncturing.base_k.unwrap_or((11 * base + 16) / 32)
    }

    pub fn convention(&self) -> SnrConvention {
        self.construction
            .convention
            .unwrap_or_else(|| self.link.modulation.snr_convention())
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.code;
        if !(1..=20).contains(&c.n) {
            return config_err("code.n", format!("{} outside 1..=20", c.n));
        }
        if c.p > c.n {
            return config_err("code.p", format!("{} exceeds n = {}", c.p, c.n));
        }
        if let Some(q) = c.q {
            if c.p + q != c.n {
                return config_err("code.q", format!("p + q = {} but n = {}", c.p + q, c.n));
            }
        }
        if c.k > self.len() {
            return config_err("code.k", format!("{} exceeds N = {}", c.k, self.len()));
        }
        let k_len = self.len();
        let cons = &self.construction;
        if !cons.snr_db.is_finite() {
            return config_err("construction.snr_db", "must be finite");
        }
        if !(0.0..=1.0).contains(&cons.erasure) {
            return config_err("construction.erasure", "must lie in [0, 1]");
        }
        if cons.trials == 0 {
            return config_err("construction.trials", "must be at least 1");
        }
        if let Some(s) = cons.selection_len {
            if s == 0 || s > k_len {
                return config_err("construction.selection_len", format!("{s} outside 1..={k_len}"));
            }
        }
        let base = 1usize << c.p;
        if let Some(bk) = self.puncturing.base_k {
            if bk > base {
                return config_err("puncturing.base_k", format!("{bk} exceeds base length {base}"));
            }
        }
        if !(self.puncturing.tie_rel_tol >= 0.0) {
            return config_err("puncturing.tie_rel_tol", "must be non-negative");
        }
        if self.puncturing.sequence == SequenceSource::Reference && c.p != 5 {
            return config_err("puncturing.sequence", "the reference sequence has base length 32 (p = 5)");
        }
        match self.puncturing.design {
            DesignChannel::Ga { snr_db, .. } if !snr_db.is_finite() => {
                return config_err("puncturing.design.snr_db", "must be finite");
            }
            DesignChannel::Bec { erasure } if !(0.0..=1.0).contains(&erasure) => {
                return config_err("puncturing.design.erasure", "must lie in [0, 1]");
            }
            _ => {}
        }
        let link = &self.link;
        if link.t == 0 || link.t > 64 {
            return config_err("link.t", format!("{} outside 1..=64", link.t));
        }
        if let Some(l) = link.l {
            if l == 0 || l > k_len {
                return config_err("link.l", format!("{l} outside 1..={k_len}"));
            }
        }
        if !(link.llr_surrogate > 0.0 && link.llr_surrogate.is_finite()) {
            return config_err("link.llr_surrogate", "must be positive and finite");
        }
        if link.batch == 0 {
            return config_err("link.batch", "must be at least 1");
        }
        let points = link.snr_db.points();
        if points.is_empty() || points.iter().any(|s| !s.is_finite()) {
            return config_err("link.snr_db", "needs at least one finite SNR point");
        }
        if let ChannelKind::Bec { erasure } = link.channel {
            if !(0.0..=1.0).contains(&erasure) {
                return config_err("link.channel.erasure", "must lie in [0, 1]");
            }
            if link.modulation != Modulation::Bpsk {
                return config_err("link.modulation", "the erasure channel carries BPSK only");
            }
        }
        if self.stopping.max_blocks == 0 {
            return config_err("stopping.max_blocks", "must be at least 1");
        }
        Ok(())
    }

    /// The puncturing sequence, plus PPA diagnostics when it was derived.
    pub fn sequence(&self) -> Result<(PuncturingSequence, Option<PpaResult>)> {
        let seq = match &self.puncturing.sequence {
            SequenceSource::Reference => (PuncturingSequence::reference_32(), None),
            SequenceSource::Derive => {
                let design = self.puncturing.design;
                let base = design.base_code(self.code.p, self.base_k())?;
                let res = ppa(&base, &design, &PpaOptions { tie_rel_tol: self.puncturing.tie_rel_tol })?;
                (res.sequence.clone(), Some(res))
            }
            SequenceSource::File(path) => (PuncturingSequence::from_text(&std::fs::read_to_string(path)?)?, None),
        };
        if seq.0.base_len() != 1usize << self.code.p {
            return config_err(
                "puncturing.sequence",
                format!("sequence length {} but 2^p = {}", seq.0.base_len(), 1usize << self.code.p),
            );
        }
        Ok(seq)
    }

    fn selection_len(&self) -> usize {
        self.construction.selection_len.unwrap_or(self.l())
    }

    /// Reliability profile of the mother code, with the positions left out of
    /// a first transmission of `selection_len` bits treated as punctured.
    pub fn construct(&self, seq: &PuncturingSequence, seed: u64) -> Result<ReliabilityProfile> {
        let all = PolarCodeSpec::all_information(self.code.n, self.code.p)?;
        let sel = self.selection_len();
        let rm = RateMatcher::new(&all, seq, self.link.modulation, 1)?;
        let plan = TxPlan::new(sel, 1, HarqMode::Ir);
        let sent = rm.emitted_positions(&plan)?;
        let mut is_sent = vec![false; self.len()];
        for &j in &sent {
            is_sent[j] = true;
        }
        let punctured: Vec<usize> = (0..self.len()).filter(|&j| !is_sent[j]).collect();
        let cons = &self.construction;
        match cons.method {
            Method::Ga => ga_profile(&all, cons.snr_db, self.convention(), &punctured),
            Method::Bec => {
                let mut eps = vec![cons.erasure; self.len()];
                for &j in &punctured {
                    eps[j] = 1.0;
                }
                let mut p = bhattacharyya_bec(&all, &eps)?;
                p.design = DesignPoint::Erasure(cons.erasure);
                Ok(p)
            }
            Method::MonteCarlo => {
                let chan = ChannelSpec::awgn(self.convention().noise_var(cons.snr_db))?;
                let opts = GenieOptions {
                    source: cons.codeword_source,
                    check_node: self.link.check_node,
                    demod: self.demod(),
                    seed,
                    ..Default::default()
                };
                let matcher = (sel < self.len()).then_some((&rm, &plan));
                let mut p = genie_monte_carlo(&all, &chan, Modulation::Bpsk, matcher, cons.trials, &opts)?;
                p.design = DesignPoint::SnrDb(cons.snr_db);
                Ok(p)
            }
        }
    }

    fn demod(&self) -> DemodOptions {
        DemodOptions {
            llr_surrogate: self.link.llr_surrogate,
            max_log: self.link.max_log,
        }
    }

    /// Everything `harq::sweep` needs.
    pub fn sweep_config(&self, seed: u64) -> Result<SweepConfig> {
        let (seq, _) = self.sequence()?;
        let profile = self.construct(&seq, seed)?;
        let info = select_information_set(&profile, self.code.k)?;
        let spec = PolarCodeSpec::new(self.code.n, self.code.p, info)?;
        let rm = RateMatcher::new(&spec, &seq, self.link.modulation, self.link.t)?
            .with_cc_bicm_shift(self.link.cc_bicm_shift);
        Ok(SweepConfig {
            spec,
            rm,
            link: LinkConfig {
                l: self.l(),
                mode: self.link.mode,
                check_node: self.link.check_node,
                demod: self.demod(),
            },
            channel: self.link.channel,
            snr_db: self.link.snr_db.points(),
            seed,
            stopping: self.stopping,
            messages: self.link.messages,
            batch: self.link.batch,
        })
    }
}
