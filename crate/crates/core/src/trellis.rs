//! Length-constrained Viterbi decoding of VLC bitstreams.
//!
//! The decoder state at bit instant `k` is `(n, m)`: `n` the internal node of
//! the code tree and `m` the symbol count, either modulo an aggregation
//! parameter `T` or exact (the bit/symbol trellis). `T = 1` is the bit-level
//! trellis. From `(n, m)` bit `b` leads to `(child, m)` when the child is an
//! internal node and to `(root, m + 1)` when it is a leaf. Only paths ending
//! in `(root, L(S) mod T)` (resp. `(root, L(S))`) are admissible.
//!
//! Path metric: sum over bits of `ln P(b | n) + ln p(y_k | b)`, accumulated
//! left to right. For AWGN the channel term drops the per-bit constant,
//! which leaves the ranking of paths unchanged. Among paths with equal
//! metric the one with the lexicographically smaller bit labels wins, for
//! every `T`. Metrics count as equal when they agree to within
//! [`TIE_REL_TOL`]: two paths made of the same terms summed in a different
//! order can otherwise differ in the last bit.

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::channel::{transmit, ChannelSpec, Received};
use crate::codes::{BranchPriors, Child, CodeError, CodeTree, SourceModel, VlcCode, ROOT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("aggregation parameter must be >= 1")]
    ZeroAggregation,
    #[error("received {got} values, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("hard bits need a BSC and soft samples need an AWGN channel")]
    ChannelMismatch,
    #[error("no admissible path ends in the termination state")]
    Infeasible(Box<DecodeResult>),
    #[error("trellis too large ({0} states per bit instant)")]
    TooLarge(usize),
}

/// How the symbol clock is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateModel {
    /// Symbol count modulo `T`.
    Aggregated(u32),
    /// Exact symbol count.
    BitSymbol,
}

impl std::fmt::Display for StateModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Aggregated(t) => write!(f, "{t}"),
            Self::BitSymbol => write!(f, "bit/symbol"),
        }
    }
}

impl std::str::FromStr for StateModel {
    type Err = String;

    /// `"bit/symbol"` (also `"bs"`, `"exact"`) or a positive integer `T`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bit/symbol" | "bitsymbol" | "bs" | "exact" => Ok(Self::BitSymbol),
            other => match other.parse::<u32>() {
                Ok(t) if t >= 1 => Ok(Self::Aggregated(t)),
                _ => Err(format!("T must be a positive integer or \"bit/symbol\", got {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrellisConfig {
    model: StateModel,
    num_symbols: usize,
    num_bits: usize,
}

impl TrellisConfig {
    pub fn new(model: StateModel, num_symbols: usize, num_bits: usize) -> Result<Self, DecodeError> {
        if model == StateModel::Aggregated(0) {
            return Err(DecodeError::ZeroAggregation);
        }
        Ok(Self {
            model,
            num_symbols,
            num_bits,
        })
    }

    pub fn aggregated(t: u32, num_symbols: usize, num_bits: usize) -> Result<Self, DecodeError> {
        Self::new(StateModel::Aggregated(t), num_symbols, num_bits)
    }

    pub fn bit_symbol(num_symbols: usize, num_bits: usize) -> Self {
        Self {
            model: StateModel::BitSymbol,
            num_symbols,
            num_bits,
        }
    }

    pub fn model(&self) -> StateModel {
        self.model
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    /// `L(S) mod T`, or `L(S)` itself on the bit/symbol trellis.
    pub fn termination_residue(&self) -> usize {
        match self.model {
            StateModel::Aggregated(t) => self.num_symbols % t as usize,
            StateModel::BitSymbol => self.num_symbols,
        }
    }

    /// Number of distinct symbol-counter values per code-tree node.
    pub fn counter_slots(&self) -> usize {
        match self.model {
            StateModel::Aggregated(t) => t as usize,
            StateModel::BitSymbol => self.num_symbols + 1,
        }
    }

    /// Side information needed to signal the termination residue, in bits.
    pub fn residue_cost_bits(&self) -> f64 {
        (self.counter_slots() as f64).log2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub symbols: Vec<usize>,
    /// Bit labels of the winning path; always `L(X)` long.
    pub path_bits: Vec<u8>,
    pub log_metric: f64,
    /// Transitions examined during the forward pass.
    pub branch_ops: u64,
    /// False when no admissible path exists; the result then holds the best
    /// unconstrained path.
    pub feasible: bool,
}

/// Per-bit channel log-likelihoods `[ln p(y | 0), ln p(y | 1)]`, up to a
/// per-bit constant.
pub fn bit_metrics(received: &Received, channel: &ChannelSpec) -> Result<Vec<[f64; 2]>, DecodeError> {
    match (received, channel) {
        (Received::Hard(bits), ChannelSpec::Bsc { p }) => {
            let (hit, miss) = ((-p).ln_1p(), p.ln());
            Ok(bits
                .iter()
                .map(|&y| if y == 0 { [hit, miss] } else { [miss, hit] })
                .collect())
        }
        (Received::Soft(samples), ChannelSpec::Awgn { .. }) => {
            let sigma = channel.noise_sigma().unwrap_or(0.0);
            if sigma == 0.0 {
                return Ok(samples
                    .iter()
                    .map(|&y| match y.partial_cmp(&0.0) {
                        Some(Ordering::Greater) => [0.0, f64::NEG_INFINITY],
                        Some(Ordering::Less) => [f64::NEG_INFINITY, 0.0],
                        _ => [0.0, 0.0],
                    })
                    .collect());
            }
            // -(y - s)^2 / 2σ² = y s / σ² + (terms independent of s)
            let scale = 1.0 / (sigma * sigma);
            Ok(samples.iter().map(|&y| [y * scale, -y * scale]).collect())
        }
        _ => Err(DecodeError::ChannelMismatch),
    }
}

const UNREACHED: u32 = u32::MAX;

/// Relative tolerance under which two path metrics are treated as tied.
pub const TIE_REL_TOL: f64 = 1e-11;

/// Orders path metrics, with near-equal finite values reported as equal.
pub fn compare_metrics(a: f64, b: f64) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    if a.is_finite() && b.is_finite() && (a - b).abs() <= TIE_REL_TOL * a.abs().max(b.abs()).max(1.0) {
        return Ordering::Equal;
    }
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Viterbi decoder for one (code, source) pair. Cheap to share across
/// threads; each call allocates its own trellis.
#[derive(Debug, Clone)]
pub struct SoftDecoder {
    tree: CodeTree,
    log_prior: Vec<[f64; 2]>,
    children: Vec<[Child; 2]>,
}

impl SoftDecoder {
    pub fn new(code: &VlcCode, source: &SourceModel) -> Result<Self, DecodeError> {
        let tree = CodeTree::build(code)?;
        let priors = BranchPriors::new(&tree, source)?;
        let log_prior = (0..tree.num_internal())
            .map(|n| [priors.log_prior(n, 0), priors.log_prior(n, 1)])
            .collect();
        let children = (0..tree.num_internal())
            .map(|n| [tree.child(n, 0), tree.child(n, 1)])
            .collect();
        Ok(Self {
            tree,
            log_prior,
            children,
        })
    }

    pub fn tree(&self) -> &CodeTree {
        &self.tree
    }

    /// `ln P(bit | node)`.
    pub fn log_prior(&self, node: usize, bit: u8) -> f64 {
        self.log_prior[node][bit as usize]
    }

    /// Decodes a received frame. An infeasible termination is reported as
    /// `feasible = false`, not as an error.
    pub fn decode(
        &self,
        config: &TrellisConfig,
        received: &Received,
        channel: &ChannelSpec,
    ) -> Result<DecodeResult, DecodeError> {
        if received.len() != config.num_bits() {
            return Err(DecodeError::LengthMismatch {
                got: received.len(),
                expected: config.num_bits(),
            });
        }
        let metrics = bit_metrics(received, channel)?;
        self.decode_metrics(config, &metrics)
    }

    /// Like [`SoftDecoder::decode`] but turns an infeasible result into
    /// [`DecodeError::Infeasible`].
    pub fn decode_strict(
        &self,
        config: &TrellisConfig,
        received: &Received,
        channel: &ChannelSpec,
    ) -> Result<DecodeResult, DecodeError> {
        let r = self.decode(config, received, channel)?;
        if r.feasible {
            Ok(r)
        } else {
            Err(DecodeError::Infeasible(Box::new(r)))
        }
    }

    /// Core Viterbi pass over precomputed per-bit channel metrics.
    pub fn decode_metrics(
        &self,
        config: &TrellisConfig,
        metrics: &[[f64; 2]],
    ) -> Result<DecodeResult, DecodeError> {
        let slots = config.counter_slots();
        let gamma = self.tree.num_internal();
        let width = gamma
            .checked_mul(slots)
            .filter(|w| *w < (UNREACHED >> 1) as usize)
            .ok_or(DecodeError::TooLarge(gamma.saturating_mul(slots)))?;
        let steps = metrics.len();
        let wrap = matches!(config.model(), StateModel::Aggregated(_));

        let mut metric = vec![f64::NEG_INFINITY; width];
        let mut reached = vec![false; width];
        let mut next_metric = vec![f64::NEG_INFINITY; width];
        let mut next_reached = vec![false; width];
        // back[k * width + s]: (predecessor << 1 | bit) of state s at instant k + 1
        let mut back = vec![UNREACHED; steps * width];
        let mut ops: u64 = 0;

        let start = ROOT * slots;
        metric[start] = 0.0;
        reached[start] = true;

        for (k, bm) in metrics.iter().enumerate() {
            next_reached.iter_mut().for_each(|r| *r = false);
            let (done, rest) = back.split_at_mut(k * width);
            let row = &mut rest[..width];
            for s in 0..width {
                if !reached[s] {
                    continue;
                }
                let node = s / slots;
                let count = s % slots;
                for bit in 0..2u8 {
                    let dest = match self.children[node][bit as usize] {
                        Child::Missing => continue,
                        Child::Node(c) => c * slots + count,
                        Child::Leaf(_) => {
                            let next = count + 1;
                            if next < slots {
                                ROOT * slots + next
                            } else if wrap {
                                ROOT * slots + next % slots
                            } else {
                                ops += 1;
                                continue;
                            }
                        }
                    };
                    ops += 1;
                    let cand = metric[s] + self.log_prior[node][bit as usize] + bm[bit as usize];
                    let code = ((s as u32) << 1) | u32::from(bit);
                    let take = if !next_reached[dest] {
                        true
                    } else {
                        match compare_metrics(cand, next_metric[dest]) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => {
                                let prev = row[dest];
                                let order = compare_prefixes(done, width, k, s, (prev >> 1) as usize)
                                    .then(bit.cmp(&((prev & 1) as u8)));
                                order == Ordering::Less
                            }
                        }
                    };
                    if take {
                        next_metric[dest] = cand;
                        next_reached[dest] = true;
                        row[dest] = code;
                    }
                }
            }
            std::mem::swap(&mut metric, &mut next_metric);
            std::mem::swap(&mut reached, &mut next_reached);
        }

        let target = ROOT * slots + config.termination_residue() % slots;
        let admissible = config.termination_residue() < slots || wrap;
        let (end, feasible) = if admissible && reached[target] {
            (Some(target), true)
        } else {
            let pick = |filter: &dyn Fn(usize) -> bool| {
                (0..width)
                    .filter(|&s| reached[s] && filter(s))
                    .reduce(|a, b| {
                        match compare_metrics(metric[b], metric[a]) {
                            Ordering::Greater => b,
                            Ordering::Less => a,
                            Ordering::Equal => {
                                if compare_prefixes(&back, width, steps, b, a) == Ordering::Less {
                                    b
                                } else {
                                    a
                                }
                            }
                        }
                    })
            };
            (pick(&|s| s / slots == ROOT).or_else(|| pick(&|_| true)), false)
        };

        let mut path_bits = vec![0u8; steps];
        let log_metric = match end {
            Some(e) => {
                let mut s = e;
                for k in (0..steps).rev() {
                    let code = back[k * width + s];
                    path_bits[k] = (code & 1) as u8;
                    s = (code >> 1) as usize;
                }
                metric[e]
            }
            None => f64::NEG_INFINITY,
        };
        let mut symbols = Vec::new();
        self.tree.parse_from(ROOT, &path_bits, &mut symbols)?;
        Ok(DecodeResult {
            symbols,
            path_bits,
            log_metric,
            branch_ops: ops,
            feasible,
        })
    }
}

/// Lexicographic order of the bit labels of the survivors ending in states
/// `a` and `b` at instant `t`. `back` must hold instants `1..=t`.
fn compare_prefixes(back: &[u32], width: usize, t: usize, a: usize, b: usize) -> Ordering {
    let (mut a, mut b) = (a, b);
    let mut order = Ordering::Equal;
    let mut k = t;
    // Walk back until the two survivors merge; the earliest differing bit
    // decides.
    while a != b && k > 0 {
        let ca = back[(k - 1) * width + a];
        let cb = back[(k - 1) * width + b];
        let (ba, bb) = (ca & 1, cb & 1);
        if ba != bb {
            order = ba.cmp(&bb);
        }
        a = (ca >> 1) as usize;
        b = (cb >> 1) as usize;
        k -= 1;
    }
    order
}

/// Aggregated (or bit/symbol) decoding of one frame.
pub fn viterbi_decode(
    code: &VlcCode,
    source: &SourceModel,
    config: &TrellisConfig,
    received: &Received,
    channel: &ChannelSpec,
) -> Result<DecodeResult, DecodeError> {
    SoftDecoder::new(code, source)?.decode(config, received, channel)
}

/// Decoding on the bit/symbol trellis (exact symbol count).
pub fn exact_bit_symbol_decode(
    code: &VlcCode,
    source: &SourceModel,
    num_symbols: usize,
    received: &Received,
    channel: &ChannelSpec,
) -> Result<DecodeResult, DecodeError> {
    let config = TrellisConfig::bit_symbol(num_symbols, received.len());
    viterbi_decode(code, source, &config, received, channel)
}

/// Measured `D_T / D_bal`: ratio of explored transitions at parameter `t`
/// to those of the bit-level trellis, summed over `trials` random frames.
#[allow(clippy::too_many_arguments)]
pub fn complexity_ratio<R: Rng + ?Sized>(
    decoder: &SoftDecoder,
    code: &VlcCode,
    source: &SourceModel,
    num_symbols: usize,
    t: u32,
    trials: usize,
    channel: &ChannelSpec,
    rng: &mut R,
) -> Result<f64, DecodeError> {
    let (mut ops_t, mut ops_1) = (0u64, 0u64);
    for _ in 0..trials.max(1) {
        let symbols = source.sample(rng, num_symbols);
        let bits = code.encode(&symbols)?;
        let received = transmit(&bits, channel, rng);
        let cfg_t = TrellisConfig::aggregated(t, num_symbols, bits.len())?;
        let cfg_1 = TrellisConfig::aggregated(1, num_symbols, bits.len())?;
        ops_t += decoder.decode(&cfg_t, &received, channel)?.branch_ops;
        ops_1 += decoder.decode(&cfg_1, &received, channel)?.branch_ops;
    }
    Ok(ops_t as f64 / ops_1 as f64)
}

/// `reach[k][t]`: whether the root state with exactly `t` decoded symbols
/// is reachable at bit instant `k` (ignoring the channel).
pub fn reachable_root_counts(tree: &CodeTree, num_bits: usize) -> Vec<Vec<bool>> {
    let gamma = tree.num_internal();
    let slots = num_bits + 1;
    let mut cur = vec![false; gamma * slots];
    cur[ROOT * slots] = true;
    let mut out = Vec::with_capacity(num_bits + 1);
    out.push(cur[..slots].to_vec());
    for _ in 0..num_bits {
        let mut next = vec![false; gamma * slots];
        for s in (0..cur.len()).filter(|&s| cur[s]) {
            let (node, count) = (s / slots, s % slots);
            for bit in 0..2u8 {
                match tree.child(node, bit) {
                    Child::Node(c) => next[c * slots + count] = true,
                    Child::Leaf(_) if count + 1 < slots => next[ROOT * slots + count + 1] = true,
                    _ => {}
                }
            }
        }
        out.push(next[ROOT * slots..(ROOT + 1) * slots].to_vec());
        cur = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::rng::frame_rng;

    fn setup(id: &str) -> (VlcCode, SourceModel, SoftDecoder) {
        let cat = Catalog::builtin();
        let e = cat.get(id).unwrap();
        let dec = SoftDecoder::new(&e.code, &e.source).unwrap();
        (e.code.clone(), e.source.clone(), dec)
    }

    #[test]
    fn config_residue() {
        let c = TrellisConfig::aggregated(7, 100, 220).unwrap();
        assert_eq!(c.termination_residue(), 2);
        assert_eq!(c.counter_slots(), 7);
        assert_eq!(TrellisConfig::bit_symbol(100, 220).termination_residue(), 100);
        assert_eq!(
            TrellisConfig::aggregated(0, 1, 1),
            Err(DecodeError::ZeroAggregation)
        );
        assert!((TrellisConfig::aggregated(8, 1, 1).unwrap().residue_cost_bits() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn model_parsing() {
        assert_eq!("5".parse::<StateModel>(), Ok(StateModel::Aggregated(5)));
        assert_eq!("bit/symbol".parse::<StateModel>(), Ok(StateModel::BitSymbol));
        assert!("0".parse::<StateModel>().is_err());
        assert!("x".parse::<StateModel>().is_err());
        assert_eq!(StateModel::BitSymbol.to_string().parse::<StateModel>(), Ok(StateModel::BitSymbol));
    }

    #[test]
    fn noiseless_decoding_is_identity() {
        for id in ["C5", "C7", "C10", "C13", "C17"] {
            let (code, source, dec) = setup(id);
            let mut rng = frame_rng(11, 0);
            let syms = source.sample(&mut rng, 60);
            let bits = code.encode(&syms).unwrap();
            for (rx, ch) in [
                (Received::Hard(bits.clone()), ChannelSpec::bsc(0.0).unwrap()),
                (
                    transmit(&bits, &ChannelSpec::awgn(f64::INFINITY).unwrap(), &mut rng),
                    ChannelSpec::awgn(f64::INFINITY).unwrap(),
                ),
            ] {
                for model in [
                    StateModel::Aggregated(1),
                    StateModel::Aggregated(3),
                    StateModel::BitSymbol,
                ] {
                    let cfg = TrellisConfig::new(model, 60, bits.len()).unwrap();
                    let r = dec.decode(&cfg, &rx, &ch).unwrap();
                    assert!(r.feasible);
                    assert_eq!(r.symbols, syms, "{id} {model}");
                    assert_eq!(r.path_bits, bits);
                }
            }
        }
    }

    #[test]
    fn path_validity_and_residue() {
        let (code, source, dec) = setup("C7");
        let ch = ChannelSpec::awgn(2.0).unwrap();
        for f in 0..50 {
            let mut rng = frame_rng(3, f);
            let syms = source.sample(&mut rng, 40);
            let bits = code.encode(&syms).unwrap();
            let rx = transmit(&bits, &ch, &mut rng);
            for t in [1, 2, 5] {
                let cfg = TrellisConfig::aggregated(t, 40, bits.len()).unwrap();
                let r = dec.decode(&cfg, &rx, &ch).unwrap();
                assert!(r.feasible);
                assert_eq!(code.encode(&r.symbols).unwrap(), r.path_bits);
                assert_eq!(r.symbols.len() % t as usize, 40 % t as usize);
            }
        }
    }

    #[test]
    fn mismatches_rejected() {
        let (_, _, dec) = setup("C5");
        let cfg = TrellisConfig::aggregated(1, 2, 4).unwrap();
        let rx = Received::Hard(vec![0, 1, 0, 0]);
        assert_eq!(
            dec.decode(&cfg, &rx, &ChannelSpec::awgn(3.0).unwrap()),
            Err(DecodeError::ChannelMismatch)
        );
        let short = Received::Hard(vec![0, 1]);
        assert!(matches!(
            dec.decode(&cfg, &short, &ChannelSpec::bsc(0.1).unwrap()),
            Err(DecodeError::LengthMismatch { got: 2, expected: 4 })
        ));
    }

    #[test]
    fn infeasible_termination_reported() {
        // C5 codewords are 2 or 3 bits: three bits cannot hold two symbols.
        let (_, _, dec) = setup("C5");
        let cfg = TrellisConfig::bit_symbol(2, 3);
        let rx = Received::Hard(vec![1, 0, 0]);
        let ch = ChannelSpec::bsc(0.1).unwrap();
        let r = dec.decode(&cfg, &rx, &ch).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.symbols, vec![3]);
        assert!(matches!(
            dec.decode_strict(&cfg, &rx, &ch),
            Err(DecodeError::Infeasible(_))
        ));
    }

    #[test]
    fn lexicographic_tie_break() {
        // Uniform priors and a BSC: the two 1-symbol codewords "10" and
        // "11" tie on received "1?" with an erased-looking second bit.
        let code = VlcCode::from_strs(&["0", "10", "11"]).unwrap();
        let source = SourceModel::with_probs(&[0.5, 0.25, 0.25]).unwrap();
        let dec = SoftDecoder::new(&code, &source).unwrap();
        let cfg = TrellisConfig::bit_symbol(1, 2);
        let ch = ChannelSpec::awgn(3.0).unwrap();
        let r = dec.decode(&cfg, &Received::Soft(vec![-1.0, 0.0]), &ch).unwrap();
        assert_eq!(r.path_bits, vec![1, 0]);
    }

    #[test]
    fn odd_length_code_parity() {
        // Every codeword has odd length, so after k bits the root can only
        // be reached with a symbol count of the same parity as k.
        let code = VlcCode::from_strs(&["0", "100", "101", "110", "111"]).unwrap();
        let tree = CodeTree::build(&code).unwrap();
        let reach = reachable_root_counts(&tree, 60);
        for (k, row) in reach.iter().enumerate() {
            for (t, r) in row.iter().enumerate() {
                if (k + t) % 2 == 1 {
                    assert!(!r, "k={k} t={t}");
                }
            }
            if k % 2 == 1 {
                assert!(row.iter().step_by(2).all(|r| !r));
            }
        }
        assert!(reach[3][1] && reach[3][3] && reach[4][2]);
    }

    #[test]
    fn bit_symbol_equals_large_t() {
        let (code, source, dec) = setup("C5");
        let ch = ChannelSpec::awgn(5.0).unwrap();
        for f in 0..30 {
            let mut rng = frame_rng(21, f);
            let syms = source.sample(&mut rng, 30);
            let bits = code.encode(&syms).unwrap();
            let rx = transmit(&bits, &ch, &mut rng);
            let a = dec
                .decode(&TrellisConfig::aggregated(31, 30, bits.len()).unwrap(), &rx, &ch)
                .unwrap();
            let b = dec.decode(&TrellisConfig::bit_symbol(30, bits.len()), &rx, &ch).unwrap();
            assert_eq!(a.symbols, b.symbols);
            assert_eq!(a.log_metric, b.log_metric);
        }
    }

    #[test]
    fn complexity_ratio_t1_is_one() {
        let (code, source, dec) = setup("C5");
        let ch = ChannelSpec::awgn(6.0).unwrap();
        let mut rng = frame_rng(1, 1);
        let r = complexity_ratio(&dec, &code, &source, 100, 1, 3, &ch, &mut rng).unwrap();
        assert_eq!(r, 1.0);
    }
}
