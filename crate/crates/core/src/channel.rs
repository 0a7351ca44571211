//! Binary channels and the end-to-end statistics of the symbol-count
//! discrepancy ΔS for a frame of `L(S)` symbols sent through them.
//!
//! Convention: ΔS = (decoded symbols) - (emitted symbols). The gain
//! polynomial `G(y)` from [`crate::sync_analysis`] is indexed the other way
//! round, so [`DeltaSAnalysis::delta_s`] is the reflection of `G̃(y)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::codes::{check_alphabet, excess_rate, mdl, CodeError, SourceModel, VlcCode};
use crate::laurent::{LaurentError, LaurentPoly};
use crate::sync_analysis::{ErrorStateDiagram, SyncError, DEFAULT_MAX_STEPS, DEFAULT_TOL};

/// Tail mass allowed to be dropped from the error-count distribution.
pub const ERROR_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("crossover probability {0} outside [0, 0.5]")]
    InvalidCrossover(f64),
    #[error("Eb/N0 must be a number or +inf, got {0}")]
    InvalidEbN0(f64),
    #[error("eta must lie in (0, 1/e), got {0}")]
    InvalidEta(f64),
    #[error("frame must contain at least one symbol")]
    EmptyFrame,
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    /// Binary symmetric channel with crossover probability `p`.
    Bsc { p: f64 },
    /// Unit-energy BPSK over AWGN. `+inf` dB is the noiseless limit.
    Awgn { ebn0_db: f64 },
}

impl ChannelSpec {
    pub fn bsc(p: f64) -> Result<Self, ChannelError> {
        if !(0.0..=0.5).contains(&p) {
            return Err(ChannelError::InvalidCrossover(p));
        }
        Ok(Self::Bsc { p })
    }

    pub fn awgn(ebn0_db: f64) -> Result<Self, ChannelError> {
        if ebn0_db.is_nan() || ebn0_db == f64::NEG_INFINITY {
            return Err(ChannelError::InvalidEbN0(ebn0_db));
        }
        Ok(Self::Awgn { ebn0_db })
    }

    /// Bit error probability of hard decisions on this channel.
    pub fn crossover(&self) -> f64 {
        match *self {
            Self::Bsc { p } => p,
            Self::Awgn { ebn0_db } => crossover_from_ebn0(ebn0_db),
        }
    }

    /// Noise standard deviation per real sample (AWGN only).
    pub fn noise_sigma(&self) -> Option<f64> {
        match *self {
            Self::Bsc { .. } => None,
            Self::Awgn { ebn0_db } => Some(noise_sigma(ebn0_db)),
        }
    }
}

/// `p = erfc(sqrt(Eb/N0)) / 2` with `Eb/N0` given in dB.
pub fn crossover_from_ebn0(ebn0_db: f64) -> f64 {
    0.5 * libm::erfc(db_to_linear(ebn0_db).sqrt())
}

/// `sigma = sqrt(N0 / 2)` for unit symbol energy.
pub fn noise_sigma(ebn0_db: f64) -> f64 {
    (0.5 / db_to_linear(ebn0_db)).sqrt()
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// What comes out of the channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Hard(Vec<u8>),
    Soft(Vec<f64>),
}

impl Received {
    pub fn len(&self) -> usize {
        match self {
            Self::Hard(b) => b.len(),
            Self::Soft(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bitwise hard decisions (`y < 0` → 1).
    pub fn hard_bits(&self) -> Vec<u8> {
        match self {
            Self::Hard(b) => b.clone(),
            Self::Soft(s) => s.iter().map(|y| u8::from(*y < 0.0)).collect(),
        }
    }
}

/// BSC: independent flips. AWGN: `x -> 1 - 2x` plus Gaussian noise.
pub fn transmit<R: Rng + ?Sized>(bits: &[u8], channel: &ChannelSpec, rng: &mut R) -> Received {
    match *channel {
        ChannelSpec::Bsc { p } => Received::Hard(
            bits.iter()
                .map(|b| if p > 0.0 && rng.random::<f64>() < p { b ^ 1 } else { *b })
                .collect(),
        ),
        ChannelSpec::Awgn { ebn0_db } => {
            let sigma = noise_sigma(ebn0_db);
            let modulate = |b: u8| 1.0 - 2.0 * f64::from(b);
            if sigma == 0.0 {
                return Received::Soft(bits.iter().map(|b| modulate(*b)).collect());
            }
            let noise = Normal::new(0.0, sigma).expect("finite positive sigma");
            Received::Soft(
                bits.iter()
                    .map(|b| modulate(*b) + noise.sample(rng))
                    .collect(),
            )
        }
    }
}

/// Distribution of the bitstream length for `num_symbols` i.i.d. symbols;
/// exponent = length in bits.
pub fn bitstream_length_pmf(
    code: &VlcCode,
    source: &SourceModel,
    num_symbols: usize,
) -> Result<LaurentPoly, ChannelError> {
    check_alphabet(code, source)?;
    let single = LaurentPoly::from_pairs(
        code.codewords()
            .iter()
            .zip(source.probs())
            .map(|(c, p)| (c.len() as i64, *p)),
    );
    let mut result = LaurentPoly::unit();
    let mut base = single;
    let mut n = num_symbols;
    while n > 0 {
        if n & 1 == 1 {
            result = result.mul(&base);
        }
        n >>= 1;
        if n > 0 {
            base = base.mul(&base);
        }
    }
    Ok(result)
}

/// `P(E = e) = sum_k C(k, e) p^e (1-p)^(k-e) P(L(X) = k)`, truncated once
/// the remaining tail is below `tail_tol`.
pub fn error_count_pmf(length_pmf: &LaurentPoly, p: f64, tail_tol: f64) -> LaurentPoly {
    let total = length_pmf.mass();
    if p == 0.0 {
        return LaurentPoly::monomial(0, total);
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let max_len = length_pmf.max_exponent().unwrap_or(0).max(0) as u64;
    let lengths: Vec<(u64, f64, f64)> = length_pmf
        .iter()
        .filter(|(k, _)| *k >= 0)
        .map(|(k, pk)| (k as u64, pk, ln_factorial(k as u64)))
        .collect();
    let mut out = Vec::new();
    let mut cum = 0.0;
    for e in 0..=max_len {
        let lf_e = ln_factorial(e);
        let pe: f64 = lengths
            .iter()
            .filter(|(k, _, _)| *k >= e)
            .map(|&(k, pk, lf_k)| {
                let ln_binom = lf_k - lf_e - ln_factorial(k - e);
                pk * (ln_binom + e as f64 * lp + (k - e) as f64 * lq).exp()
            })
            .sum();
        out.push(pe);
        cum += pe;
        if total - cum < tail_tol {
            break;
        }
    }
    LaurentPoly::from_dense(0, out)
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `G̃ = sum_e P(E = e) G^e` under the independent-errors approximation.
/// Inherits `gain`'s window.
pub fn multi_error_gain(gain: &LaurentPoly, error_pmf: &LaurentPoly) -> LaurentPoly {
    let mut acc = LaurentPoly::zero();
    let mut power = match gain.window() {
        Some(w) => LaurentPoly::unit().with_window(w),
        None => LaurentPoly::unit(),
    };
    let top = error_pmf.max_exponent().unwrap_or(0);
    for e in 0..=top {
        let pe = error_pmf.coeff(e);
        if pe > 0.0 {
            // carries pe * lost(G^e) into the accumulator
            acc.add_shifted(&power, pe, 0);
        }
        if e < top {
            power = power.mul(gain);
        }
    }
    match gain.window() {
        Some(w) => acc.with_window(w),
        None => acc,
    }
}

/// End-to-end ΔS statistics for one (code, frame length, channel) triple.
#[derive(Debug, Clone)]
pub struct DeltaSAnalysis {
    /// `G(y)` of the single-error diagram (exponent = emitted - decoded).
    pub gain: LaurentPoly,
    /// `P(ΔS = i)` with ΔS = decoded - emitted.
    pub delta_s: LaurentPoly,
    pub p_sync: f64,
    /// `H(ΔS)` in bits.
    pub h_delta_s: f64,
    pub d_eta: u64,
    pub eta: f64,
    pub crossover: f64,
    pub length_pmf: LaurentPoly,
    pub error_pmf: LaurentPoly,
    /// Window bound `D = l_M * L(S)` applied to every channel-level polynomial.
    pub window: i64,
    /// Mass discarded by windowing, underflow and error-count truncation.
    pub lost_mass: f64,
}

impl DeltaSAnalysis {
    /// `P(ΔS = i)`.
    pub fn p_delta_s(&self, i: i64) -> f64 {
        self.delta_s.coeff(i)
    }

    /// `H(ΔS mod T)` in bits.
    pub fn entropy_mod(&self, t: u32) -> f64 {
        constraint_entropy_mod(&self.delta_s, t)
    }
}

/// Analysis record plus the hard-decoding criteria of the same code.
#[derive(Debug, Clone)]
pub struct CodeCriteria {
    pub analysis: DeltaSAnalysis,
    pub mepl: f64,
    pub vepl: f64,
    pub epl_std_dev: f64,
    pub mdl: f64,
    pub excess_rate: f64,
}

/// Full analytic pipeline: diagram, `G`, length and error-count
/// distributions, `G̃`, then `P(ΔS = 0)`, `H(ΔS)` and `d_eta`.
pub fn criteria(
    code: &VlcCode,
    source: &SourceModel,
    num_symbols: usize,
    channel: &ChannelSpec,
    eta: f64,
) -> Result<CodeCriteria, ChannelError> {
    if !(eta > 0.0 && eta < (-1f64).exp()) {
        return Err(ChannelError::InvalidEta(eta));
    }
    if num_symbols == 0 {
        return Err(ChannelError::EmptyFrame);
    }
    let esd = ErrorStateDiagram::build(code, source)?;
    let absorption = esd.absorb(DEFAULT_TOL, DEFAULT_MAX_STEPS)?;
    let window = (code.max_len() * num_symbols) as i64;
    let gain = absorption.gain.clone().with_window(window);
    let length_pmf = bitstream_length_pmf(code, source, num_symbols)?;
    let p = channel.crossover();
    let error_pmf = error_count_pmf(&length_pmf, p, ERROR_TAIL_TOL);
    let g_tilde = multi_error_gain(&gain, &error_pmf);
    let delta_s = g_tilde.reflect();
    let lost_mass = g_tilde.lost_mass() + (length_pmf.mass() - error_pmf.mass()).max(0.0);
    let d_eta = delta_s.pseudo_degree(eta)?;
    let analysis = DeltaSAnalysis {
        p_sync: delta_s.coeff(0),
        h_delta_s: delta_s.entropy(),
        d_eta,
        eta,
        crossover: p,
        gain: absorption.gain.clone(),
        delta_s,
        length_pmf,
        error_pmf,
        window,
        lost_mass,
    };
    Ok(CodeCriteria {
        analysis,
        mepl: absorption.mepl(),
        vepl: absorption.vepl(),
        epl_std_dev: absorption.epl_std_dev(),
        mdl: mdl(code, source)?,
        excess_rate: excess_rate(code, source)?,
    })
}

/// `H(ΔS mod T)` in bits.
pub fn constraint_entropy_mod(delta_s: &LaurentPoly, t: u32) -> f64 {
    delta_s
        .fold_mod(t.max(1))
        .map(|f| f.entropy())
        .unwrap_or(0.0)
}

/// Bounds on `H(ΔS mod 2 d_eta + 1)`:
/// `H(ΔS) + (L_X - 2 d_eta - 1) eta log2(eta) <= H(ΔS mod 2 d_eta + 1) <= H(ΔS)`,
/// with `L_X` the largest possible bitstream length.
pub fn entropy_bounds(
    delta_s: &LaurentPoly,
    eta: f64,
    max_bits: usize,
) -> Result<(f64, f64), ChannelError> {
    let d = delta_s.pseudo_degree(eta)?;
    let h = delta_s.entropy();
    let count = max_bits as f64 - 2.0 * d as f64 - 1.0;
    Ok((h + count * eta * eta.log2(), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crossover_values() {
        // Closed form: erfc(sqrt(10^0.6)) / 2 and erfc(1) / 2.
        assert!((crossover_from_ebn0(6.0) - 2.3883e-3).abs() < 1e-7);
        assert!((crossover_from_ebn0(0.0) - 0.0786496).abs() < 1e-7);
        assert!((crossover_from_ebn0(-200.0) - 0.5).abs() < 1e-9);
        assert_eq!(crossover_from_ebn0(f64::INFINITY), 0.0);
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelSpec::bsc(0.6).is_err());
        assert!(ChannelSpec::bsc(-0.1).is_err());
        assert!(ChannelSpec::awgn(f64::NAN).is_err());
        assert!(ChannelSpec::awgn(f64::INFINITY).is_ok());
    }

    #[test]
    fn length_pmf_examples() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let one = bitstream_length_pmf(&e.code, &e.source, 1).unwrap();
        assert!((one.coeff(2) - 0.8).abs() < 1e-15 && (one.coeff(3) - 0.2).abs() < 1e-15);
        let two = bitstream_length_pmf(&e.code, &e.source, 2).unwrap();
        for (k, v) in [(4, 0.64), (5, 0.32), (6, 0.04)] {
            assert!((two.coeff(k) - v).abs() < 1e-15);
        }
        for id in ["C5", "C10", "C17"] {
            let e = cat.get(id).unwrap();
            let pmf = bitstream_length_pmf(&e.code, &e.source, 37).unwrap();
            let m = mdl(&e.code, &e.source).unwrap();
            assert!((pmf.mean().unwrap() - 37.0 * m).abs() < 1e-9);
            assert_eq!(pmf.min_exponent(), Some(37 * e.code.min_len() as i64));
            assert_eq!(pmf.max_exponent(), Some(37 * e.code.max_len() as i64));
        }
    }

    #[test]
    fn error_pmf_examples() {
        let len = LaurentPoly::monomial(10, 1.0);
        assert_eq!(error_count_pmf(&len, 0.0, 1e-12), LaurentPoly::unit());
        let pmf = error_count_pmf(&len, 0.1, 1e-15);
        // Binomial(10, 0.1) directly.
        let mut c = 1.0;
        for e in 0..=10u32 {
            let expect = c * 0.1f64.powi(e as i32) * 0.9f64.powi(10 - e as i32);
            assert!((pmf.coeff(e as i64) - expect).abs() < 1e-14, "e={e}");
            c = c * (10 - e) as f64 / (e + 1) as f64;
        }
    }

    // Oracle: draw a frame length from the length p.m.f. by sampling
    // symbols, flip each bit with probability p, count the flips.
    #[test]
    fn error_pmf_matches_simulation() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let p = crossover_from_ebn0(6.0);
        let len = bitstream_length_pmf(&e.code, &e.source, 100).unwrap();
        let pmf = error_count_pmf(&len, p, 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let syms = e.source.sample(&mut rng, 100);
            let bits = e.code.encode(&syms).unwrap();
            let errs = bits.iter().filter(|_| rng.random::<f64>() < p).count();
            if errs < 4 {
                counts[errs] += 1;
            }
        }
        for (k, c) in counts.iter().enumerate() {
            let q = pmf.coeff(k as i64);
            let sigma = (q * (1.0 - q) / trials as f64).sqrt();
            let emp = *c as f64 / trials as f64;
            assert!((emp - q).abs() < 4.0 * sigma, "e={k}: {emp} vs {q}");
        }
    }

    #[test]
    fn multi_error_gain_edges() {
        let g = LaurentPoly::from_pairs([(-1, 0.0625), (0, 0.8352), (1, 0.1023)]);
        assert_eq!(multi_error_gain(&g, &LaurentPoly::unit()), LaurentPoly::unit());
        assert_eq!(multi_error_gain(&g, &LaurentPoly::monomial(1, 1.0)), g);
    }

    #[test]
    fn c5_example_pmf() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let ch = ChannelSpec::awgn(6.0).unwrap();
        let c = criteria(&e.code, &e.source, 100, &ch, 1e-6).unwrap();
        let a = &c.analysis;
        let expect = [
            (-3, 0.0000235),
            (-2, 0.0013201),
            (-1, 0.0493389),
            (0, 0.9186664),
            (1, 0.0301524),
            (2, 0.0004930),
            (3, 0.0000053),
        ];
        for (i, v) in expect {
            assert!((a.p_delta_s(i) - v).abs() < 1e-4, "i={i}");
        }
        assert_eq!(a.d_eta, 3);
        assert!((a.delta_s.mass() - 1.0).abs() < 1e-9);
        assert!(a.lost_mass < 1e-9);
        assert!((a.h_delta_s - 0.497).abs() < 5e-3);
    }

    #[test]
    fn entropy_mod_and_bounds() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let ch = ChannelSpec::awgn(6.0).unwrap();
        let a = criteria(&e.code, &e.source, 100, &ch, 1e-6).unwrap().analysis;
        assert_eq!(a.entropy_mod(1), 0.0);
        let gap = a.h_delta_s - a.entropy_mod(7);
        assert!((0.0..=0.04900).contains(&gap));
        let (lo, hi) = entropy_bounds(&a.delta_s, 1e-6, 300).unwrap();
        let h7 = a.entropy_mod(7);
        assert!(lo <= h7 && h7 <= hi);

        let e13 = cat.get("C13").unwrap();
        let a13 = criteria(&e13.code, &e13.source, 100, &ch, 1e-6).unwrap().analysis;
        assert!(a13.entropy_mod(2) < 1e-12);
    }

    #[test]
    fn criteria_rejects_bad_eta() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let ch = ChannelSpec::awgn(6.0).unwrap();
        assert!(matches!(
            criteria(&e.code, &e.source, 100, &ch, 0.5),
            Err(ChannelError::InvalidEta(_))
        ));
    }

    #[test]
    fn transmit_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits = vec![0, 1, 1, 0, 1];
        let bsc = ChannelSpec::bsc(0.0).unwrap();
        assert_eq!(transmit(&bits, &bsc, &mut rng), Received::Hard(bits.clone()));
        let clean = ChannelSpec::awgn(f64::INFINITY).unwrap();
        assert_eq!(
            transmit(&bits, &clean, &mut rng),
            Received::Soft(vec![1.0, -1.0, -1.0, 1.0, -1.0])
        );
    }

    #[test]
    fn awgn_hard_flip_rate() {
        let ch = ChannelSpec::awgn(6.0).unwrap();
        let p = ch.crossover();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000_000usize;
        let zeros = vec![0u8; n];
        let flips = transmit(&zeros, &ch, &mut rng)
            .hard_bits()
            .iter()
            .filter(|b| **b == 1)
            .count();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((flips as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }
}
