//! Error state diagram of a VLC and the quantities derived from it: the gain
//! polynomial `G(y)` (distribution of the symbol-count discrepancy after one
//! bit error) and the error-span distribution (MEPL / VEPL).
//!
//! Branch exponents are `emitted - decoded` symbols on the branch, so the
//! coefficient of `y^i` in `G` is the probability that the decoder ends up
//! `i` symbols *short* of the encoder. The discrepancy reported elsewhere in
//! the crate as ΔS is `decoded - emitted`, i.e. the reflection of `G`.
//!
//! `G` is obtained by series accumulation of the absorbing walk rather than
//! by inverting `I - H`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use thiserror::Error;

use crate::codes::{check_alphabet, mdl, Child, CodeError, CodeTree, SourceModel, VlcCode, ROOT};
use crate::laurent::LaurentPoly;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("walk not absorbed: residual mass {residual:e} after {steps} steps")]
    NotAbsorbed { residual: f64, steps: usize },
    #[error("source has no decimal probabilities; exact matrix unavailable")]
    NoDecimals,
    #[error("probability {0:?} is not a plain decimal")]
    BadDecimal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsdState {
    /// Loss of synchronization: entered by the bit error.
    Loss,
    /// Decoder at an internal node while the encoder is at the root.
    Node(usize),
    /// Encoder and decoder back at the root together (absorbing).
    Sync,
}

/// One contribution to the transition matrix. Several edges can share the
/// same `(from, to, exponent)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EsdEdge {
    pub from: usize,
    pub to: usize,
    pub exponent: i64,
    pub symbol: usize,
    /// Bit position flipped inside the codeword, for edges out of `Loss`.
    pub flipped: Option<usize>,
}

/// Transition matrix with exact rational coefficients, keyed by exponent.
pub type ExactMatrix = Vec<Vec<BTreeMap<i64, Ratio<i128>>>>;

#[derive(Debug, Clone)]
pub struct ErrorStateDiagram {
    states: Vec<EsdState>,
    labels: Vec<String>,
    edges: Vec<EsdEdge>,
    weights: Vec<f64>,
    matrix: Vec<Vec<LaurentPoly>>,
}

impl ErrorStateDiagram {
    /// Builds the diagram with states ordered `[Loss, internal non-root
    /// nodes in tree order, Sync]`.
    ///
    /// * `Loss` row: for each symbol and each bit of its codeword, the
    ///   corrupted codeword is parsed from the root; weight `p_i / mdl`.
    /// * internal node `n`: each codeword is parsed starting at `n`;
    ///   weight `p_i`.
    ///
    /// A parse ending at the root goes to `Sync`.
    pub fn build(code: &VlcCode, source: &SourceModel) -> Result<Self, SyncError> {
        check_alphabet(code, source)?;
        let tree = CodeTree::build(code)?;
        for n in 0..tree.num_internal() {
            for bit in 0..2u8 {
                if tree.child(n, bit) == Child::Missing {
                    return Err(CodeError::DeadEnd {
                        position: tree.prefix(n).len(),
                    }
                    .into());
                }
            }
        }
        let gamma = tree.num_internal();
        let sync = gamma;
        let state_of = |node: usize| if node == ROOT { sync } else { node };

        let mut states = vec![EsdState::Loss];
        let mut labels = vec!["n_l".to_string()];
        for n in 1..gamma {
            states.push(EsdState::Node(n));
            labels.push(tree.label(n));
        }
        states.push(EsdState::Sync);
        labels.push("n_s".to_string());

        let mean_len = mdl(code, source)?;
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (s, cw) in code.codewords().iter().enumerate() {
            for j in 0..cw.len() {
                let mut bits = cw.bits().to_vec();
                bits[j] ^= 1;
                let (decoded, end) = tree.count_from(ROOT, &bits)?;
                edges.push(EsdEdge {
                    from: 0,
                    to: state_of(end),
                    exponent: 1 - decoded as i64,
                    symbol: s,
                    flipped: Some(j),
                });
                weights.push(source.prob(s) / mean_len);
            }
        }
        for n in 1..gamma {
            for (s, cw) in code.codewords().iter().enumerate() {
                let (decoded, end) = tree.count_from(n, cw.bits())?;
                edges.push(EsdEdge {
                    from: n,
                    to: state_of(end),
                    exponent: 1 - decoded as i64,
                    symbol: s,
                    flipped: None,
                });
                weights.push(source.prob(s));
            }
        }

        let size = states.len();
        let mut matrix = vec![vec![LaurentPoly::zero(); size]; size];
        for (e, w) in edges.iter().zip(&weights) {
            matrix[e.from][e.to].add_shifted(&LaurentPoly::unit(), *w, e.exponent);
        }
        Ok(Self {
            states,
            labels,
            edges,
            weights,
            matrix,
        })
    }

    pub fn states(&self) -> &[EsdState] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn sync_index(&self) -> usize {
        self.states.len() - 1
    }

    pub fn edges(&self) -> &[EsdEdge] {
        &self.edges
    }

    /// Transition matrix entries as polynomials in `y`.
    pub fn matrix(&self) -> &[Vec<LaurentPoly>] {
        &self.matrix
    }

    pub fn entry(&self, from: usize, to: usize) -> &LaurentPoly {
        &self.matrix[from][to]
    }

    /// Same matrix with exact rational coefficients, computed from the
    /// decimal strings the source was parsed from.
    pub fn exact_matrix(
        &self,
        code: &VlcCode,
        source: &SourceModel,
    ) -> Result<ExactMatrix, SyncError> {
        let decimals = source.decimals().ok_or(SyncError::NoDecimals)?;
        let probs = decimals
            .iter()
            .map(|d| parse_decimal(d))
            .collect::<Result<Vec<_>, _>>()?;
        let total: Ratio<i128> = probs.iter().copied().sum();
        let mean_len: Ratio<i128> = probs
            .iter()
            .zip(code.codewords())
            .map(|(p, c)| *p * Ratio::from_integer(c.len() as i128))
            .sum::<Ratio<i128>>()
            / total;
        let size = self.size();
        let mut m = vec![vec![BTreeMap::new(); size]; size];
        for e in &self.edges {
            let p = probs[e.symbol] / total;
            let w = if e.flipped.is_some() { p / mean_len } else { p };
            *m[e.from][e.to]
                .entry(e.exponent)
                .or_insert_with(|| Ratio::from_integer(0)) += w;
        }
        Ok(m)
    }

    /// Adjacency list, one `from<TAB>to<TAB>polynomial` line per nonzero
    /// entry.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let terms: Vec<String> = p
                    .iter()
                    .map(|(e, c)| match e {
                        0 => format!("{c}"),
                        1 => format!("{c}*y"),
                        _ => format!("{c}*y^{e}"),
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}",
                    self.labels[i],
                    self.labels[j],
                    terms.join(" + ")
                );
            }
        }
        out
    }

    /// Runs the absorbing walk from `Loss` until the un-absorbed mass drops
    /// below `tol`.
    pub fn absorb(&self, tol: f64, max_steps: usize) -> Result<Absorption, SyncError> {
        let sync = self.sync_index();
        let mut current = vec![LaurentPoly::zero(); sync];
        current[0] = LaurentPoly::unit();
        let mut gain = LaurentPoly::zero();
        let mut span = Vec::new();
        let mut residual = 1.0;
        let mut steps = 0;
        while residual >= tol {
            if steps == max_steps {
                return Err(SyncError::NotAbsorbed { residual, steps });
            }
            let mut next = vec![LaurentPoly::zero(); sync];
            let mut absorbed = LaurentPoly::zero();
            for (e, w) in self.edges.iter().zip(&self.weights) {
                let src = &current[e.from];
                if src.is_zero() {
                    continue;
                }
                if e.to == sync {
                    absorbed.add_shifted(src, *w, e.exponent);
                } else {
                    next[e.to].add_shifted(src, *w, e.exponent);
                }
            }
            span.push(absorbed.mass());
            gain.add_assign(&absorbed);
            current = next;
            residual = current.iter().map(LaurentPoly::mass).sum();
            steps += 1;
        }
        Ok(Absorption {
            gain,
            span,
            residual,
        })
    }
}

/// Result of the absorbing walk.
#[derive(Debug, Clone)]
pub struct Absorption {
    /// `G(y)`: exponent = emitted - decoded.
    pub gain: LaurentPoly,
    /// `span[k - 1]` = probability of first reaching `Sync` at step `k`.
    pub span: Vec<f64>,
    pub residual: f64,
}

impl Absorption {
    /// Error-span distribution as a polynomial in `z` (exponents `k >= 1`).
    pub fn span_poly(&self) -> LaurentPoly {
        LaurentPoly::from_dense(1, self.span.clone())
    }

    /// Mean error propagation length, in symbols.
    pub fn mepl(&self) -> f64 {
        self.span_poly().mean().unwrap_or(0.0)
    }

    /// Variance of the error propagation length.
    pub fn vepl(&self) -> f64 {
        self.span_poly().variance().unwrap_or(0.0)
    }

    /// Standard deviation of the error propagation length.
    pub fn epl_std_dev(&self) -> f64 {
        self.vepl().sqrt()
    }
}

/// `G(y)` for a diagram; see [`ErrorStateDiagram::absorb`].
pub fn gain_polynomial(
    esd: &ErrorStateDiagram,
    tol: f64,
    max_steps: usize,
) -> Result<LaurentPoly, SyncError> {
    Ok(esd.absorb(tol, max_steps)?.gain)
}

/// Error-span distribution in `z`.
pub fn error_span_poly(
    esd: &ErrorStateDiagram,
    tol: f64,
    max_steps: usize,
) -> Result<LaurentPoly, SyncError> {
    Ok(esd.absorb(tol, max_steps)?.span_poly())
}

pub fn mepl(esd: &ErrorStateDiagram) -> Result<f64, SyncError> {
    Ok(esd.absorb(DEFAULT_TOL, DEFAULT_MAX_STEPS)?.mepl())
}

pub fn vepl(esd: &ErrorStateDiagram) -> Result<f64, SyncError> {
    Ok(esd.absorb(DEFAULT_TOL, DEFAULT_MAX_STEPS)?.vepl())
}

fn parse_decimal(s: &str) -> Result<Ratio<i128>, SyncError> {
    let bad = || SyncError::BadDecimal(s.to_string());
    let s = s.trim();
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 30 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: i128 = digits.parse().map_err(|_| bad())?;
    let denom = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    Ok(Ratio::new(numer, denom))
}
