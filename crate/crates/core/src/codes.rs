//! Memoryless sources, prefix-free variable-length codes and the code-tree
//! automaton used by every decoder in the crate.
//!
//! Bits are carried as `u8` values in `{0, 1}`. Symbols are referred to by
//! their index in the source alphabet.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

/// Tolerance on `sum(probs) == 1` for sources built from binary floats.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Looser tolerance for sources parsed from rounded decimal tables. The
/// parsed probabilities are renormalized and the deficit is kept.
pub const DECIMAL_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("codeword {prefix} (symbol {prefix_symbol}) is a prefix of codeword {word} (symbol {word_symbol})")]
    PrefixViolation {
        prefix: String,
        prefix_symbol: usize,
        word: String,
        word_symbol: usize,
    },
    #[error("codeword {word} appears twice (symbols {first} and {second})")]
    DuplicateCodeword {
        word: String,
        first: usize,
        second: usize,
    },
    #[error("codeword for symbol {0} is empty")]
    EmptyCodeword(usize),
    #[error("invalid bit character {0:?} in codeword")]
    InvalidBit(char),
    #[error("code has no codewords")]
    EmptyCode,
    #[error("unknown symbol index {0}")]
    UnknownSymbol(usize),
    #[error("decoder reached a missing branch at bit position {position}")]
    DeadEnd { position: usize },
    #[error("internal node {node} has no child for bit {bit}")]
    MissingChild { node: usize, bit: u8 },
    #[error("node {0} is not an internal node of the code tree")]
    NotInternal(usize),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("alphabet size mismatch: source has {source_len} symbols, code has {code_len} codewords")]
    AlphabetMismatch { source_len: usize, code_len: usize },
}

/// A memoryless source: an ordered alphabet with symbol probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    symbols: Vec<String>,
    probs: Vec<f64>,
    decimals: Option<Vec<String>>,
    deficit: f64,
}

impl SourceModel {
    pub fn new(symbols: Vec<String>, probs: Vec<f64>) -> Result<Self, CodeError> {
        Self::check_shape(&symbols, &probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(CodeError::InvalidSource(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            symbols,
            probs,
            decimals: None,
            deficit: 0.0,
        })
    }

    /// Builds a source from decimal probability strings. Sums within
    /// [`DECIMAL_SUM_TOL`] of one are renormalized; the original strings are
    /// retained for reporting.
    pub fn from_decimals(symbols: Vec<String>, decimals: Vec<String>) -> Result<Self, CodeError> {
        let raw = decimals
            .iter()
            .map(|d| {
                d.trim()
                    .parse::<f64>()
                    .map_err(|_| CodeError::InvalidSource(format!("bad probability {d:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Self::check_shape(&symbols, &raw)?;
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > DECIMAL_SUM_TOL {
            return Err(CodeError::InvalidSource(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        let probs = if (sum - 1.0).abs() > PROB_SUM_TOL {
            raw.iter().map(|p| p / sum).collect()
        } else {
            raw
        };
        Ok(Self {
            symbols,
            probs,
            decimals: Some(decimals),
            deficit: 1.0 - sum,
        })
    }

    /// Source with symbols named `a1..an`.
    pub fn with_probs(probs: &[f64]) -> Result<Self, CodeError> {
        let symbols = (1..=probs.len()).map(|i| format!("a{i}")).collect();
        Self::new(symbols, probs.to_vec())
    }

    fn check_shape(symbols: &[String], probs: &[f64]) -> Result<(), CodeError> {
        if symbols.is_empty() {
            return Err(CodeError::InvalidSource("empty alphabet".into()));
        }
        if symbols.len() != probs.len() {
            return Err(CodeError::InvalidSource(format!(
                "{} symbols but {} probabilities",
                symbols.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(CodeError::InvalidSource(format!(
                "probability {p} is not strictly positive"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Decimal strings the source was parsed from, if any.
    pub fn decimals(&self) -> Option<&[String]> {
        self.decimals.as_deref()
    }

    /// `1 - sum` of the probabilities as parsed, before renormalization.
    pub fn normalization_deficit(&self) -> f64 {
        self.deficit
    }

    /// Shannon entropy in bits per symbol.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|p| p * p.log2()).sum::<f64>()
    }

    /// Draws `n` i.i.d. symbols.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        let dist = WeightedIndex::new(&self.probs).expect("validated probabilities");
        (0..n).map(|_| dist.sample(rng)).collect()
    }
}

/// A binary codeword.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword(Vec<u8>);

impl Codeword {
    pub fn parse(s: &str) -> Result<Self, CodeError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(CodeError::InvalidBit(other)),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Codeword)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Codeword({self})")
    }
}

/// A prefix-free binary code, one codeword per source symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct VlcCode {
    codewords: Vec<Codeword>,
    min_len: usize,
    max_len: usize,
}

impl VlcCode {
    pub fn new(codewords: Vec<Codeword>) -> Result<Self, CodeError> {
        if codewords.is_empty() {
            return Err(CodeError::EmptyCode);
        }
        if let Some(i) = codewords.iter().position(Codeword::is_empty) {
            return Err(CodeError::EmptyCodeword(i));
        }
        for (i, a) in codewords.iter().enumerate() {
            for (j, b) in codewords.iter().enumerate().skip(i + 1) {
                if a == b {
                    return Err(CodeError::DuplicateCodeword {
                        word: a.to_string(),
                        first: i,
                        second: j,
                    });
                }
                let (short, si, long, li) = if a.len() <= b.len() {
                    (a, i, b, j)
                } else {
                    (b, j, a, i)
                };
                if long.bits().starts_with(short.bits()) {
                    return Err(CodeError::PrefixViolation {
                        prefix: short.to_string(),
                        prefix_symbol: si,
                        word: long.to_string(),
                        word_symbol: li,
                    });
                }
            }
        }
        let min_len = codewords.iter().map(Codeword::len).min().unwrap_or(0);
        let max_len = codewords.iter().map(Codeword::len).max().unwrap_or(0);
        Ok(Self {
            codewords,
            min_len,
            max_len,
        })
    }

    /// Parses codewords written as `"0"`/`"1"` strings.
    pub fn from_strs<S: AsRef<str>>(words: &[S]) -> Result<Self, CodeError> {
        let cws = words
            .iter()
            .map(|w| Codeword::parse(w.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cws)
    }

    pub fn codewords(&self) -> &[Codeword] {
        &self.codewords
    }

    pub fn codeword(&self, symbol: usize) -> &Codeword {
        &self.codewords[symbol]
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Length of the shortest codeword, in bits.
    pub fn min_len(&self) -> usize {
        self.min_len
    }

    /// Length of the longest codeword, in bits.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// `sum 2^-len(c)`; equal to one for complete codes.
    pub fn kraft_sum(&self) -> f64 {
        self.codewords
            .iter()
            .map(|c| (-(c.len() as f64)).exp2())
            .sum()
    }

    pub fn encode(&self, symbols: &[usize]) -> Result<Vec<u8>, CodeError> {
        let mut out = Vec::with_capacity(symbols.len() * self.max_len);
        self.encode_into(symbols, &mut out)?;
        Ok(out)
    }

    pub fn encode_into(&self, symbols: &[usize], out: &mut Vec<u8>) -> Result<(), CodeError> {
        for &s in symbols {
            let cw = self
                .codewords
                .get(s)
                .ok_or(CodeError::UnknownSymbol(s))?;
            out.extend_from_slice(cw.bits());
        }
        Ok(())
    }
}

/// Index of an internal node in a [`CodeTree`]. The root is always `0`.
pub type NodeId = usize;

pub const ROOT: NodeId = 0;

/// Outcome of following one branch of the code tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Node(NodeId),
    Leaf(usize),
    Missing,
}

/// Internal-node automaton of a prefix code. Internal nodes are the proper
/// prefixes of the codewords, ordered by length and then lexicographically,
/// so the root (empty prefix) is node 0.
#[derive(Debug, Clone)]
pub struct CodeTree {
    prefixes: Vec<Vec<u8>>,
    children: Vec<[Child; 2]>,
    /// Symbols whose codeword passes through (or ends below) each node.
    leaves_below: Vec<Vec<usize>>,
    num_symbols: usize,
}

impl CodeTree {
    pub fn build(code: &VlcCode) -> Result<Self, CodeError> {
        // VlcCode already guarantees prefix-freeness and nonempty codewords.
        let mut prefixes: Vec<Vec<u8>> = code
            .codewords()
            .iter()
            .flat_map(|cw| (0..cw.len()).map(move |l| cw.bits()[..l].to_vec()))
            .collect();
        prefixes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        prefixes.dedup();

        let index_of = |p: &[u8]| prefixes.binary_search_by(|q| {
            q.len().cmp(&p.len()).then_with(|| q.as_slice().cmp(p))
        });

        let mut children = vec![[Child::Missing; 2]; prefixes.len()];
        for (n, prefix) in prefixes.iter().enumerate() {
            for bit in 0..2u8 {
                let mut ext = prefix.clone();
                ext.push(bit);
                if let Ok(c) = index_of(&ext) {
                    children[n][bit as usize] = Child::Node(c);
                } else if let Some(s) = code.codewords().iter().position(|cw| cw.bits() == ext) {
                    children[n][bit as usize] = Child::Leaf(s);
                }
            }
        }

        let mut leaves_below = vec![Vec::new(); prefixes.len()];
        for (s, cw) in code.codewords().iter().enumerate() {
            for l in 0..cw.len() {
                let n = index_of(&cw.bits()[..l]).expect("prefix was inserted");
                leaves_below[n].push(s);
            }
        }

        Ok(Self {
            prefixes,
            children,
            leaves_below,
            num_symbols: code.len(),
        })
    }

    /// Number of internal nodes (including the root).
    pub fn num_internal(&self) -> usize {
        self.prefixes.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn prefix(&self, node: NodeId) -> &[u8] {
        &self.prefixes[node]
    }

    /// Display label such as `n_ε` or `n_10`.
    pub fn label(&self, node: NodeId) -> String {
        if self.prefixes[node].is_empty() {
            "n_ε".to_string()
        } else {
            let bits: String = self.prefixes[node].iter().map(|b| char::from(b'0' + b)).collect();
            format!("n_{bits}")
        }
    }

    pub fn node_by_prefix(&self, prefix: &str) -> Option<NodeId> {
        let bits = Codeword::parse(prefix).ok()?;
        self.prefixes.iter().position(|p| p.as_slice() == bits.bits())
    }

    pub fn child(&self, node: NodeId, bit: u8) -> Child {
        self.children[node][bit as usize]
    }

    /// True when every internal node has both children.
    pub fn is_complete(&self) -> bool {
        self.children
            .iter()
            .all(|c| c.iter().all(|x| *x != Child::Missing))
    }

    /// Source symbols whose codeword starts with this node's prefix.
    pub fn symbols_below(&self, node: NodeId) -> &[usize] {
        &self.leaves_below[node]
    }

    /// Feeds `bits` into the decoder starting at `start`, pushing decoded
    /// symbols to `out`. Returns the node holding any trailing partial
    /// codeword.
    pub fn parse_from(
        &self,
        start: NodeId,
        bits: &[u8],
        out: &mut Vec<usize>,
    ) -> Result<NodeId, CodeError> {
        let mut node = start;
        for (position, &b) in bits.iter().enumerate() {
            match self.child(node, b) {
                Child::Node(c) => node = c,
                Child::Leaf(s) => {
                    out.push(s);
                    node = ROOT;
                }
                Child::Missing => return Err(CodeError::DeadEnd { position }),
            }
        }
        Ok(node)
    }

    /// Greedy prefix parse from the root.
    pub fn hard_decode(&self, bits: &[u8]) -> Result<(Vec<usize>, NodeId), CodeError> {
        let mut out = Vec::with_capacity(bits.len());
        let end = self.parse_from(ROOT, bits, &mut out)?;
        Ok((out, end))
    }

    /// Number of symbols completed when parsing `bits` from `start`, and the
    /// end node. Allocation-free variant of [`CodeTree::parse_from`].
    pub fn count_from(&self, start: NodeId, bits: &[u8]) -> Result<(usize, NodeId), CodeError> {
        let mut node = start;
        let mut count = 0;
        for (position, &b) in bits.iter().enumerate() {
            match self.child(node, b) {
                Child::Node(c) => node = c,
                Child::Leaf(_) => {
                    count += 1;
                    node = ROOT;
                }
                Child::Missing => return Err(CodeError::DeadEnd { position }),
            }
        }
        Ok((count, node))
    }
}

/// Per-node branch probabilities derived from the source statistics.
#[derive(Debug, Clone)]
pub struct BranchPriors {
    node_mass: Vec<f64>,
    prior: Vec<[f64; 2]>,
    log_prior: Vec<[f64; 2]>,
}

impl BranchPriors {
    pub fn new(tree: &CodeTree, source: &SourceModel) -> Result<Self, CodeError> {
        if source.len() != tree.num_symbols() {
            return Err(CodeError::AlphabetMismatch {
                source_len: source.len(),
                code_len: tree.num_symbols(),
            });
        }
        let node_mass: Vec<f64> = (0..tree.num_internal())
            .map(|n| tree.symbols_below(n).iter().map(|&s| source.prob(s)).sum())
            .collect();
        let child_mass = |c: Child| match c {
            Child::Node(m) => node_mass[m],
            Child::Leaf(s) => source.prob(s),
            Child::Missing => 0.0,
        };
        let prior: Vec<[f64; 2]> = (0..tree.num_internal())
            .map(|n| {
                let m = node_mass[n];
                [
                    child_mass(tree.child(n, 0)) / m,
                    child_mass(tree.child(n, 1)) / m,
                ]
            })
            .collect();
        let log_prior = prior.iter().map(|p| [p[0].ln(), p[1].ln()]).collect();
        Ok(Self {
            node_mass,
            prior,
            log_prior,
        })
    }

    /// Total source probability of the leaves below `node`.
    pub fn node_mass(&self, node: NodeId) -> f64 {
        self.node_mass[node]
    }

    /// `P(next bit = bit | decoder at node)`.
    pub fn branch_prior(&self, node: NodeId, bit: u8) -> Result<f64, CodeError> {
        let p = self
            .prior
            .get(node)
            .ok_or(CodeError::NotInternal(node))?[bit as usize];
        if p == 0.0 {
            return Err(CodeError::MissingChild { node, bit });
        }
        Ok(p)
    }

    /// Natural-log branch priors; `-inf` on missing branches.
    pub fn log_prior(&self, node: NodeId, bit: u8) -> f64 {
        self.log_prior[node][bit as usize]
    }
}

/// Mean description length in bits per symbol.
pub fn mdl(code: &VlcCode, source: &SourceModel) -> Result<f64, CodeError> {
    check_alphabet(code, source)?;
    Ok(code
        .codewords()
        .iter()
        .zip(source.probs())
        .map(|(c, p)| p * c.len() as f64)
        .sum())
}

/// `mdl - H(source)`, bits per symbol.
pub fn excess_rate(code: &VlcCode, source: &SourceModel) -> Result<f64, CodeError> {
    Ok(mdl(code, source)? - source.entropy())
}

pub(crate) fn check_alphabet(code: &VlcCode, source: &SourceModel) -> Result<(), CodeError> {
    if code.len() != source.len() {
        return Err(CodeError::AlphabetMismatch {
            source_len: source.len(),
            code_len: code.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c5() -> VlcCode {
        VlcCode::from_strs(&["01", "00", "11", "100", "101"]).unwrap()
    }

    fn c0() -> VlcCode {
        VlcCode::from_strs(&["0", "10", "11"]).unwrap()
    }

    fn table1_source() -> SourceModel {
        SourceModel::with_probs(&[0.4, 0.2, 0.2, 0.1, 0.1]).unwrap()
    }

    #[test]
    fn c0_tree_has_root_and_n1() {
        let t = CodeTree::build(&c0()).unwrap();
        assert_eq!(t.num_internal(), 2);
        assert_eq!(t.label(0), "n_ε");
        assert_eq!(t.label(1), "n_1");
    }

    // Oracle: every proper prefix of every codeword, enumerated directly.
    #[test]
    fn c5_tree_matches_prefix_enumeration() {
        let code = c5();
        let mut expected: Vec<String> = code
            .codewords()
            .iter()
            .flat_map(|c| {
                let s = c.to_string();
                (0..s.len()).map(move |l| s[..l].to_string()).collect::<Vec<_>>()
            })
            .collect();
        expected.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        expected.dedup();
        let t = CodeTree::build(&code).unwrap();
        let got: Vec<String> = (0..t.num_internal())
            .map(|n| t.prefix(n).iter().map(|b| char::from(b'0' + b)).collect())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec!["", "0", "1", "10"]);
    }

    #[test]
    fn prefix_violation_and_duplicates_rejected() {
        assert!(matches!(
            VlcCode::from_strs(&["0", "01"]),
            Err(CodeError::PrefixViolation { .. })
        ));
        assert!(matches!(
            VlcCode::from_strs(&["01", "1", "01"]),
            Err(CodeError::DuplicateCodeword { .. })
        ));
        assert!(matches!(
            VlcCode::from_strs(&["0", ""]),
            Err(CodeError::EmptyCodeword(1))
        ));
        assert!(matches!(
            VlcCode::from_strs(&["0", "1x"]),
            Err(CodeError::InvalidBit('x'))
        ));
    }

    #[test]
    fn encode_examples() {
        assert_eq!(c5().encode(&[0, 1]).unwrap(), vec![0, 1, 0, 0]);
        assert!(c5().encode(&[]).unwrap().is_empty());
        let c7 = VlcCode::from_strs(&["0", "10", "110", "1110", "1111"]).unwrap();
        assert_eq!(c7.encode(&[4]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(c5().encode(&[5]), Err(CodeError::UnknownSymbol(5)));
    }

    #[test]
    fn hard_decode_examples() {
        let t = CodeTree::build(&c5()).unwrap();
        assert_eq!(t.hard_decode(&[0, 1, 0, 0]).unwrap(), (vec![0, 1], ROOT));
        let (s, n) = t.hard_decode(&[1, 0]).unwrap();
        assert!(s.is_empty());
        assert_eq!(t.label(n), "n_10");
        let (s, n) = t.hard_decode(&[0, 0, 0]).unwrap();
        assert_eq!(s, vec![1]);
        assert_eq!(t.label(n), "n_0");
    }

    #[test]
    fn incomplete_code_dead_end() {
        let code = VlcCode::from_strs(&["0", "10"]).unwrap();
        let t = CodeTree::build(&code).unwrap();
        assert!(!t.is_complete());
        assert_eq!(
            t.hard_decode(&[0, 1, 1]),
            Err(CodeError::DeadEnd { position: 2 })
        );
        let src = SourceModel::with_probs(&[0.5, 0.5]).unwrap();
        let pri = BranchPriors::new(&t, &src).unwrap();
        assert_eq!(
            pri.branch_prior(1, 1),
            Err(CodeError::MissingChild { node: 1, bit: 1 })
        );
    }

    #[test]
    fn mdl_and_excess_rate() {
        let src = table1_source();
        assert!((mdl(&c5(), &src).unwrap() - 2.2).abs() < 1e-12);
        assert!((excess_rate(&c5(), &src).unwrap() - 0.0781).abs() < 5e-5);
    }

    #[test]
    fn branch_priors() {
        let t = CodeTree::build(&c0()).unwrap();
        let src = SourceModel::with_probs(&[0.5, 0.25, 0.25]).unwrap();
        let pri = BranchPriors::new(&t, &src).unwrap();
        assert!((pri.branch_prior(ROOT, 0).unwrap() - 0.5).abs() < 1e-15);
        let s = pri.branch_prior(ROOT, 0).unwrap() + pri.branch_prior(ROOT, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-15);

        let t5 = CodeTree::build(&c5()).unwrap();
        let pri5 = BranchPriors::new(&t5, &table1_source()).unwrap();
        let n10 = t5.node_by_prefix("10").unwrap();
        assert!((pri5.branch_prior(n10, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pri5.node_mass(ROOT) - 1.0).abs() < 1e-15);
        assert_eq!(pri5.branch_prior(9, 0), Err(CodeError::NotInternal(9)));
    }

    #[test]
    fn decimal_source_renormalizes() {
        let s = SourceModel::from_decimals(
            vec!["x".into(), "y".into()],
            vec!["0.4999999".into(), "0.5".into()],
        )
        .unwrap();
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((s.normalization_deficit() - 1e-7).abs() < 1e-15);
        assert!(SourceModel::with_probs(&[0.5, 0.4]).is_err());
        assert!(SourceModel::with_probs(&[1.0, 0.0]).is_err());
    }

    fn arb_code() -> impl Strategy<Value = VlcCode> {
        // Random complete codes: grow a full binary tree by splitting leaves.
        proptest::collection::vec(any::<prop::sample::Index>(), 1..7).prop_map(|splits| {
            let mut leaves: Vec<String> = vec!["0".into(), "1".into()];
            for ix in splits {
                let i = ix.index(leaves.len());
                let w = leaves.remove(i);
                leaves.push(format!("{w}0"));
                leaves.push(format!("{w}1"));
            }
            VlcCode::from_strs(&leaves).unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_length_bounds(
            code in arb_code(),
            raw in proptest::collection::vec(any::<prop::sample::Index>(), 0..40),
        ) {
            let seq: Vec<usize> = raw.iter().map(|i| i.index(code.len())).collect();
            let bits = code.encode(&seq).unwrap();
            let tree = CodeTree::build(&code).unwrap();
            prop_assert_eq!(tree.hard_decode(&bits).unwrap(), (seq.clone(), ROOT));
            prop_assert!(bits.len() >= seq.len() * code.min_len());
            prop_assert!(bits.len() <= seq.len() * code.max_len());
            prop_assert!((code.kraft_sum() - 1.0).abs() < 1e-12);
            prop_assert!(tree.is_complete());
        }
    }
}
