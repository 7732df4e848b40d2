//! Nested puncturing sequences for the base code: the greedy progressive
//! search, an exhaustive oracle, expansion to whole-column patterns on the
//! long code, and the erasure-channel sum-capacity check.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelSpec, SnrConvention};
use crate::construction::{bhattacharyya_bec, check_node_mean, q_function, select_information_set, ReliabilityProfile};
use crate::error::{contract, Error, Result};
use crate::polar::{reverse_bits, PolarCodeSpec};

const REFERENCE_32: &str = include_str!("../data/reference_sequence_32.txt");

/// Channel the union-bound metric is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignChannel {
    /// Gaussian approximation with BPSK-equivalent channel means `2/σ²`,
    /// where `σ²` follows from `snr_db` under `convention`.
    Ga { snr_db: f64, convention: SnrConvention },
    /// Exact Bhattacharyya recursion; the metric sums `Z_i`.
    Bec { erasure: f64 },
}

impl Default for DesignChannel {
    /// 3.5 dB with `SNR = 1/(2σ²)`: the design point of the shipped 32-entry sequence.
    fn default() -> Self {
        DesignChannel::Ga {
            snr_db: 3.5,
            convention: SnrConvention::PerComplexSymbol,
        }
    }
}

impl DesignChannel {
    fn validate(&self) -> Result<()> {
        match *self {
            DesignChannel::Ga { snr_db, .. } if !snr_db.is_finite() => {
                contract(format!("design SNR {snr_db} is not finite"))
            }
            DesignChannel::Bec { erasure } if !(0.0..=1.0).contains(&erasure) => {
                contract(format!("design erasure {erasure} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// Per-input error estimates with the given coded positions punctured.
    pub fn profile(&self, spec: &PolarCodeSpec, punctured: &[usize]) -> Result<Vec<f64>> {
        MetricEvaluator::new(spec, self)?.profile(punctured)
    }

    /// Union bound over `spec`'s information set.
    pub fn metric(&self, spec: &PolarCodeSpec, punctured: &[usize]) -> Result<f64> {
        MetricEvaluator::new(spec, self)?.metric(punctured)
    }

    /// Code of length `2^n` whose `k` information bits are the most reliable
    /// under this design channel without puncturing.
    pub fn base_code(&self, n: u32, k: usize) -> Result<PolarCodeSpec> {
        let all = PolarCodeSpec::all_information(n, n)?;
        let profile = ReliabilityProfile {
            method: crate::construction::Method::Ga,
            design: crate::construction::DesignPoint::Unspecified,
            mean_llr: None,
            error_prob: self.profile(&all, &[])?,
        };
        PolarCodeSpec::new(n, n, select_information_set(&profile, k)?)
    }
}

/// Repeated union-bound evaluation for one code and design channel.
///
/// Channel means only take the values `μ` and 0, so the same check-node
/// arguments recur across patterns; results are memoised.
pub struct MetricEvaluator<'a> {
    spec: &'a PolarCodeSpec,
    design: DesignChannel,
    /// Unpunctured per-position value (GA mean or erasure probability).
    fill: f64,
    /// Value of a punctured position.
    hole: f64,
    work: Vec<f64>,
    cn_memo: HashMap<(u64, u64), f64>,
    q_memo: HashMap<u64, f64>,
}

impl<'a> MetricEvaluator<'a> {
    pub fn new(spec: &'a PolarCodeSpec, design: &DesignChannel) -> Result<Self> {
        design.validate()?;
        let (fill, hole) = match *design {
            DesignChannel::Ga { snr_db, convention } => (convention.bpsk_mean_llr(snr_db), 0.0),
            DesignChannel::Bec { erasure } => (erasure, 1.0),
        };
        Ok(Self {
            spec,
            design: *design,
            fill,
            hole,
            work: vec![0.0; spec.len()],
            cn_memo: HashMap::new(),
            q_memo: HashMap::new(),
        })
    }

    fn evolve(&mut self, punctured: &[usize]) -> Result<()> {
        let len = self.spec.len();
        let n = self.spec.n();
        self.work.iter_mut().for_each(|v| *v = self.fill);
        for &j in punctured {
            if j >= len {
                return contract(format!("punctured position {j} outside code of length {len}"));
            }
            self.work[reverse_bits(j, n)] = self.hole;
        }
        let ga = matches!(self.design, DesignChannel::Ga { .. });
        let mut h = len / 2;
        while h >= 1 {
            for start in (0..len).step_by(2 * h) {
                for j in start..start + h {
                    let (a, b) = (self.work[j], self.work[j + h]);
                    if ga {
                        let key = if a.to_bits() <= b.to_bits() { (a.to_bits(), b.to_bits()) } else { (b.to_bits(), a.to_bits()) };
                        self.work[j] = *self.cn_memo.entry(key).or_insert_with(|| check_node_mean(a, b));
                        self.work[j + h] = a + b;
                    } else {
                        self.work[j] = a + b - a * b;
                        self.work[j + h] = a * b;
                    }
                }
            }
            h /= 2;
        }
        Ok(())
    }

    fn error_prob(&mut self, i: usize) -> f64 {
        let v = self.work[i];
        match self.design {
            DesignChannel::Ga { .. } => *self.q_memo.entry(v.to_bits()).or_insert_with(|| q_function((v / 2.0).sqrt())),
            DesignChannel::Bec { .. } => v,
        }
    }

    pub fn profile(&mut self, punctured: &[usize]) -> Result<Vec<f64>> {
        self.evolve(punctured)?;
        Ok((0..self.spec.len()).map(|i| self.error_prob(i)).collect())
    }

    pub fn metric(&mut self, punctured: &[usize]) -> Result<f64> {
        self.evolve(punctured)?;
        let spec = self.spec;
        Ok(spec.info_set().iter().map(|&i| self.error_prob(i)).sum())
    }
}

/// A nested puncturing order on the base code: `order[m]` is the
/// `(m+1)`-th coded position to puncture (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturingSequence {
    order: Vec<usize>,
}

impl PuncturingSequence {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let len = order.len();
        if len == 0 || !len.is_power_of_two() {
            return contract(format!("sequence length {len} is not a power of two"));
        }
        let mut seen = vec![false; len];
        for &j in &order {
            if j >= len || std::mem::replace(&mut seen[j], true) {
                return contract(format!("sequence is not a permutation of 0..{len} (entry {j})"));
            }
        }
        Ok(Self { order })
    }

    /// The shipped 32-entry sequence for the rate-11/32 base code at 3.5 dB.
    pub fn reference_32() -> Self {
        Self::from_text(REFERENCE_32).expect("bundled sequence is valid")
    }

    pub fn base_len(&self) -> usize {
        self.order.len()
    }

    /// `log2` of the base length.
    pub fn p(&self) -> u32 {
        self.order.len().trailing_zeros()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The first `m` punctured positions.
    pub fn pattern(&self, m: usize) -> Result<&[usize]> {
        if m > self.order.len() {
            return contract(format!("m = {m} exceeds base length {}", self.order.len()));
        }
        Ok(&self.order[..m])
    }

    /// One line of comma-separated 0-based indices.
    pub fn to_text(&self) -> String {
        let mut s = self.order.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
        s.push('\n');
        s
    }

    /// Parses [`Self::to_text`] output; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let body: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if body.len() != 1 {
            return Err(Error::Parse(format!("expected one sequence line, found {}", body.len())));
        }
        let order = body[0]
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad sequence entry `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(order).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpaOptions {
    /// Candidates within this relative distance of the best metric are tied;
    /// ties go to the smallest coded index.
    pub tie_rel_tol: f64,
}

impl Default for PpaOptions {
    fn default() -> Self {
        Self { tie_rel_tol: 1e-12 }
    }
}

/// Diagnostics for one greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct PpaStep {
    pub chosen: usize,
    pub metric: f64,
    /// Best candidate other than the chosen one, with its metric.
    pub runner_up: Option<(usize, f64)>,
    /// All candidates that tied with the best (including the chosen one).
    pub tied: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpaResult {
    pub sequence: PuncturingSequence,
    pub steps: Vec<PpaStep>,
    /// Number of metric evaluations; `N'(N'+1)/2`.
    pub evaluations: usize,
}

/// Progressive puncturing: at each step, puncture the not-yet-punctured
/// position whose removal gives the smallest union bound, keeping the
/// information set of `base` fixed.
pub fn ppa(base: &PolarCodeSpec, design: &DesignChannel, opts: &PpaOptions) -> Result<PpaResult> {
    design.validate()?;
    let len = base.len();
    let mut punctured: Vec<usize> = Vec::with_capacity(len);
    let mut is_punctured = vec![false; len];
    let mut steps = Vec::with_capacity(len);
    let mut evaluations = 0usize;
    let mut eval = MetricEvaluator::new(base, design)?;
    let mut prev_metric = eval.metric(&[])?;

    for _ in 0..len {
        let candidates: Vec<usize> = (0..len).filter(|&c| !is_punctured[c]).collect();
        let mut trial = punctured.clone();
        trial.push(0);
        let metrics: Vec<f64> = candidates
            .iter()
            .map(|&c| {
                let last = trial.len() - 1;
                trial[last] = c;
                eval.metric(&trial)
            })
            .collect::<Result<_>>()?;
        evaluations += candidates.len();

        let best = metrics.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = opts.tie_rel_tol * best.abs();
        let tied: Vec<usize> = candidates
            .iter()
            .zip(&metrics)
            .filter(|(_, &m)| m - best <= tol)
            .map(|(&c, _)| c)
            .collect();
        let chosen = tied[0];
        let runner_up = candidates
            .iter()
            .zip(&metrics)
            .filter(|(&c, _)| c != chosen)
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
            .map(|(&c, &m)| (c, m));
        let metric = metrics[candidates.iter().position(|&c| c == chosen).unwrap_or(0)];
        debug_assert!(metric >= prev_metric * (1.0 - 1e-9));
        prev_metric = metric;

        punctured.push(chosen);
        is_punctured[chosen] = true;
        steps.push(PpaStep { chosen, metric, runner_up, tied });
    }
    Ok(PpaResult {
        sequence: PuncturingSequence::new(punctured)?,
        steps,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Evaluates every `m`-subset; refused when `C(N', m)` exceeds the budget.
    Full,
    /// Depth-first search pruned by the monotonicity of the metric under
    /// puncturing, seeded with the greedy prefix; exact. The metric is
    /// invariant under XOR-translation of the pattern, so only patterns
    /// containing position 0 are searched. The budget caps visited nodes.
    #[default]
    BranchAndBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub pattern: Vec<usize>,
    pub metric: f64,
    /// Metric evaluations performed.
    pub evaluated: u128,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// A size-`m` puncturing pattern minimising the union bound. In full mode
/// ties go to the lexicographically smallest pattern.
pub fn exhaustive_search(
    base: &PolarCodeSpec,
    design: &DesignChannel,
    m: usize,
    mode: SearchMode,
    budget: u128,
) -> Result<ExhaustiveResult> {
    let mut eval = MetricEvaluator::new(base, design)?;
    let len = base.len();
    if m > len {
        return contract(format!("m = {m} exceeds base length {len}"));
    }
    match mode {
        SearchMode::Full => {
            let required = binomial(len, m);
            if required > budget {
                return Err(Error::EnumerationBudget { required, budget });
            }
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut comb: Vec<usize> = (0..m).collect();
            let mut evaluated = 0u128;
            loop {
                let v = eval.metric(&comb)?;
                evaluated += 1;
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((comb.clone(), v));
                }
                if !next_combination(&mut comb, len) {
                    break;
                }
            }
            let (pattern, metric) = best.unwrap_or_default();
            Ok(ExhaustiveResult { pattern, metric, evaluated })
        }
        SearchMode::BranchAndBound => {
            let greedy = ppa(base, design, &PpaOptions::default())?;
            let seed = greedy.sequence.pattern(m)?.to_vec();
            let seed_metric = eval.metric(&seed)?;
            if m == 0 {
                return Ok(ExhaustiveResult { pattern: seed, metric: seed_metric, evaluated: 1 });
            }
            let mut search = Bnb {
                eval,
                len,
                m,
                budget,
                evaluated: 0,
                best: (seed, seed_metric),
                current: Vec::with_capacity(m),
            };
            // Translation invariance: every pattern has a translate containing 0.
            search.current.push(0);
            search.visit(1)?;
            let (pattern, metric) = search.best;
            Ok(ExhaustiveResult { pattern, metric, evaluated: search.evaluated })
        }
    }
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct Bnb<'a> {
    eval: MetricEvaluator<'a>,
    len: usize,
    m: usize,
    budget: u128,
    evaluated: u128,
    best: (Vec<usize>, f64),
    current: Vec<usize>,
}

impl Bnb<'_> {
    /// Evaluates `current` and, unless pruned, extends it with positions `≥ from`.
    fn visit(&mut self, from: usize) -> Result<()> {
        self.evaluated += 1;
        if self.evaluated > self.budget {
            return Err(Error::EnumerationBudget {
                required: self.evaluated,
                budget: self.budget,
            });
        }
        let v = self.eval.metric(&self.current)?;
        // Every completion of this partial pattern is at least as bad.
        if v >= self.best.1 {
            return Ok(());
        }
        let depth = self.current.len();
        if depth == self.m {
            self.best = (self.current.clone(), v);
            return Ok(());
        }
        let remaining = self.m - depth;
        for c in from..=self.len - remaining {
            self.current.push(c);
            self.visit(c + 1)?;
            self.current.pop();
        }
        Ok(())
    }
}

/// Punctured positions of the long code: the same base columns in every row
/// of the `2^q × 2^p` arrangement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularPattern {
    pub code_len: usize,
    /// Sorted, 0-based flat positions.
    pub positions: Vec<usize>,
}

impl RegularPattern {
    pub fn one_based(&self) -> Vec<usize> {
        self.positions.iter().map(|j| j + 1).collect()
    }
}

pub fn expand_regular(seq: &PuncturingSequence, spec: &PolarCodeSpec, m: usize) -> Result<RegularPattern> {
    let (p, q) = spec.split();
    if seq.p() != p {
        return contract(format!("sequence has base length {}, code expects 2^{p}", seq.base_len()));
    }
    let cols = seq.pattern(m)?;
    let width = 1usize << p;
    let mut positions: Vec<usize> = (0..1usize << q)
        .flat_map(|row| cols.iter().map(move |&c| row * width + c))
        .collect();
    positions.sort_unstable();
    Ok(RegularPattern { code_len: spec.len(), positions })
}

/// Exact sum of the bit-channel capacities of the punctured base code on an
/// erasure channel, against `(N' - m)(1 - ε)`.
pub fn sum_capacity_check(base_len: usize, pattern: &[usize], channel: &ChannelSpec) -> Result<(f64, f64)> {
    let ChannelKind::Bec { erasure } = channel.kind else {
        return Err(Error::Unsupported(
            "sum-capacity check needs exact bit-channel capacities (erasure channel only)".into(),
        ));
    };
    if base_len == 0 || !base_len.is_power_of_two() {
        return contract(format!("base length {base_len} is not a power of two"));
    }
    let n = base_len.trailing_zeros();
    let spec = PolarCodeSpec::all_information(n, n.max(1))?;
    let mut z = vec![erasure; base_len];
    let mut seen = vec![false; base_len];
    for &j in pattern {
        if j >= base_len || std::mem::replace(&mut seen[j], true) {
            return contract(format!("invalid pattern entry {j}"));
        }
        z[j] = 1.0;
    }
    let zs = bhattacharyya_bec(&spec, &z)?.error_prob;
    let lhs = zs.iter().map(|z| 1.0 - z).sum();
    let rhs = (base_len - pattern.len()) as f64 * (1.0 - erasure);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bec(e: f64) -> DesignChannel {
        DesignChannel::Bec { erasure: e }
    }

    #[test]
    fn reference_asset_round_trips() {
        let s = PuncturingSequence::reference_32();
        assert_eq!(s.base_len(), 32);
        assert_eq!(&s.order()[..4], &[0, 16, 8, 24]);
        assert_eq!(PuncturingSequence::from_text(&s.to_text()).unwrap(), s);
        assert!(PuncturingSequence::from_text("0,1,1,3").is_err());
        assert!(PuncturingSequence::from_text("0,1,2").is_err());
        assert!(PuncturingSequence::from_text("0,x").is_err());
        assert!(PuncturingSequence::from_text("# c\n1,0\n").is_ok());
    }

    #[test]
    fn ppa_two_symmetric_inputs_tie_to_zero() {
        let base = PolarCodeSpec::new(1, 1, [1]).unwrap();
        let r = ppa(&base, &DesignChannel::default(), &PpaOptions::default()).unwrap();
        assert_eq!(r.sequence.order(), &[0, 1]);
        assert_eq!(r.steps[0].tied, vec![0, 1]);
        assert_eq!(r.evaluations, 3);
    }

    #[test]
    fn ppa_counts_and_nesting() {
        let design = DesignChannel::Ga { snr_db: 2.0, convention: SnrConvention::PerRealDimension };
        let base = design.base_code(4, 6).unwrap();
        let r = ppa(&base, &design, &PpaOptions::default()).unwrap();
        assert_eq!(r.evaluations, 16 * 17 / 2);
        for w in r.steps.windows(2) {
            assert!(w[1].metric >= w[0].metric * (1.0 - 1e-12));
        }
    }

    #[test]
    fn ppa_matches_exhaustive_on_n4_bec() {
        let design = bec(0.5);
        let base = design.base_code(2, 2).unwrap();
        let r = ppa(&base, &design, &PpaOptions::default()).unwrap();
        for m in 0..=4 {
            let ex = exhaustive_search(&base, &design, m, SearchMode::Full, 1000).unwrap();
            let prefix = design.metric(&base, r.sequence.pattern(m).unwrap()).unwrap();
            assert!((prefix - ex.metric).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn exhaustive_examples() {
        let design = bec(0.4);
        let base = design.base_code(3, 4).unwrap();
        let r0 = exhaustive_search(&base, &design, 0, SearchMode::Full, 10).unwrap();
        assert!(r0.pattern.is_empty());
        assert!((r0.metric - design.metric(&base, &[]).unwrap()).abs() < 1e-15);

        let full = exhaustive_search(&base, &design, 2, SearchMode::Full, 100).unwrap();
        assert_eq!(full.evaluated, 28);
        let mut brute = f64::INFINITY;
        for a in 0..8 {
            for b in a + 1..8 {
                brute = brute.min(design.metric(&base, &[a, b]).unwrap());
            }
        }
        assert_eq!(full.metric, brute);
        let bnb = exhaustive_search(&base, &design, 2, SearchMode::BranchAndBound, 1000).unwrap();
        assert_eq!(bnb.metric, full.metric);

        assert!(matches!(
            exhaustive_search(&base, &design, 4, SearchMode::Full, 10),
            Err(Error::EnumerationBudget { required: 70, budget: 10 })
        ));
        assert!(exhaustive_search(&base, &design, 9, SearchMode::Full, 10).is_err());
    }

    #[test]
    fn branch_and_bound_is_exact_on_ga() {
        let design = DesignChannel::Ga { snr_db: 3.0, convention: SnrConvention::PerRealDimension };
        let base = design.base_code(4, 8).unwrap();
        for m in 1..=6 {
            let full = exhaustive_search(&base, &design, m, SearchMode::Full, 1 << 20).unwrap();
            let bnb = exhaustive_search(&base, &design, m, SearchMode::BranchAndBound, 1 << 20).unwrap();
            assert!((full.metric - bnb.metric).abs() <= 1e-12 * full.metric);
        }
    }

    #[test]
    fn ppa_near_optimal_small_codes() {
        for (n, k) in [(3u32, 4usize), (4, 6), (4, 11)] {
            for design in [
                bec(0.3),
                DesignChannel::Ga { snr_db: 1.0, convention: SnrConvention::PerRealDimension },
            ] {
                let base = design.base_code(n, k).unwrap();
                let r = ppa(&base, &design, &PpaOptions::default()).unwrap();
                for m in 0..=base.len() {
                    let ex = exhaustive_search(&base, &design, m, SearchMode::BranchAndBound, u128::MAX).unwrap();
                    let pm = design.metric(&base, r.sequence.pattern(m).unwrap()).unwrap();
                    assert!(pm <= 1.05 * ex.metric + 1e-15, "n={n} k={k} m={m}: {pm} vs {}", ex.metric);
                }
            }
        }
    }

    #[test]
    fn expand_regular_examples() {
        let spec = PolarCodeSpec::all_information(4, 2).unwrap();
        let seq = PuncturingSequence::new(vec![0, 2, 1, 3]).unwrap();
        assert!(expand_regular(&seq, &spec, 0).unwrap().positions.is_empty());
        assert_eq!(expand_regular(&seq, &spec, 1).unwrap().one_based(), vec![1, 5, 9, 13]);
        assert!(expand_regular(&seq, &spec, 5).is_err());

        let long = PolarCodeSpec::all_information(12, 5).unwrap();
        let r = expand_regular(&PuncturingSequence::reference_32(), &long, 1).unwrap();
        assert_eq!(r.positions.len(), 128);
        assert!(r.positions.iter().all(|j| j % 32 == 0));
        assert!(expand_regular(&PuncturingSequence::reference_32(), &spec, 1).is_err());
    }

    #[test]
    fn sum_capacity_examples() {
        let ch = ChannelSpec::bec(0.5).unwrap();
        for pat in [[0usize], [1]] {
            let (l, r) = sum_capacity_check(2, &pat, &ch).unwrap();
            assert!((l - 0.5).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
        }
        let ch = ChannelSpec::bec(0.3).unwrap();
        let (l, _) = sum_capacity_check(8, &[], &ch).unwrap();
        assert!((l - 8.0 * 0.7).abs() < 1e-12);
        let (l, _) = sum_capacity_check(8, &[0, 1, 2, 3, 4, 5, 6, 7], &ch).unwrap();
        assert_eq!(l, 0.0);
        assert!(matches!(
            sum_capacity_check(8, &[], &ChannelSpec::awgn(1.0).unwrap()),
            Err(Error::Unsupported(_))
        ));
        assert!(sum_capacity_check(8, &[1, 1], &ch).is_err());
    }

    #[test]
    fn default_design_reproduces_reference_sequence() {
        let design = DesignChannel::default();
        let base = design.base_code(5, 11).unwrap();
        let r = ppa(&base, &design, &PpaOptions::default()).unwrap();
        assert_eq!(r.sequence, PuncturingSequence::reference_32());
    }

    proptest::proptest! {
        #[test]
        fn metric_is_translation_invariant(mask in 0usize..32, bits in proptest::prelude::any::<u32>(), bec_mode in proptest::prelude::any::<bool>()) {
            let design = if bec_mode { bec(0.3) } else { DesignChannel::default() };
            let base = design.base_code(5, 11).unwrap();
            let pat: Vec<usize> = (0..32).filter(|j| bits >> j & 1 == 1).collect();
            let moved: Vec<usize> = pat.iter().map(|j| j ^ mask).collect();
            let a = design.metric(&base, &pat).unwrap();
            let b = design.metric(&base, &moved).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(32, 10), 64_512_240);
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(3, 5), 0);
    }
}
