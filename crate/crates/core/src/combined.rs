//! Combined trellis decoding: two decoders with coprime parameters `T1`,
//! `T2`, and a fall-back to `T1 * T2` only when they disagree.

use thiserror::Error;

use crate::channel::{transmit, ChannelSpec, Received};
use crate::codes::{SourceModel, VlcCode};
use crate::rng::frame_rng;
use crate::trellis::{DecodeError, DecodeResult, SoftDecoder, TrellisConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombinedError {
    #[error("T1 = {0} and T2 = {1} must both be >= 1 and coprime")]
    NotCoprime(u32, u32),
    #[error("T1 * T2 overflows")]
    Overflow,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombinedConfig {
    t1: u32,
    t2: u32,
}

impl CombinedConfig {
    pub fn new(t1: u32, t2: u32) -> Result<Self, CombinedError> {
        if t1 == 0 || t2 == 0 || gcd(t1.into(), t2.into()) != 1 {
            return Err(CombinedError::NotCoprime(t1, t2));
        }
        t1.checked_mul(t2).ok_or(CombinedError::Overflow)?;
        Ok(Self { t1, t2 })
    }

    pub fn t1(&self) -> u32 {
        self.t1
    }

    pub fn t2(&self) -> u32 {
        self.t2
    }

    pub fn t3(&self) -> u32 {
        self.t1 * self.t2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedOutcome {
    pub result: DecodeResult,
    /// Whether the two component decoders returned the same symbols.
    pub agreed: bool,
    /// Branch operations over every decode that was run.
    pub ops_total: u64,
}

/// Runs `T1` and `T2`; returns their common estimate when they agree, else
/// the `T1 * T2` estimate.
pub fn combined_decode(
    decoder: &SoftDecoder,
    config: &CombinedConfig,
    num_symbols: usize,
    received: &Received,
    channel: &ChannelSpec,
) -> Result<CombinedOutcome, CombinedError> {
    let n = received.len();
    let cfg = |t| TrellisConfig::aggregated(t, num_symbols, n);
    let first = decoder.decode_strict(&cfg(config.t1)?, received, channel)?;
    let second = decoder.decode_strict(&cfg(config.t2)?, received, channel)?;
    let mut ops_total = first.branch_ops + second.branch_ops;
    if first.symbols == second.symbols {
        return Ok(CombinedOutcome {
            result: first,
            agreed: true,
            ops_total,
        });
    }
    let third = decoder.decode_strict(&cfg(config.t3())?, received, channel)?;
    ops_total += third.branch_ops;
    Ok(CombinedOutcome {
        result: third,
        agreed: false,
        ops_total,
    })
}

/// `rho_star = 1 - (T1 + T2) / (T1 T2)`: the disagreement rate below which
/// the combined scheme is cheaper than decoding at `T1 T2` directly.
pub fn rho_star(t1: u32, t2: u32) -> f64 {
    let (a, b) = (f64::from(t1), f64::from(t2));
    1.0 - (a + b) / (a * b)
}

/// `D_mtd = (T1 + T2 + rho T1 T2) D_bal`.
pub fn cost_projection(t1: u32, t2: u32, rho: f64, d_bal: f64) -> f64 {
    let (a, b) = (f64::from(t1), f64::from(t2));
    (a + b + rho * a * b) * d_bal
}

/// Binomial proportion with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// `z * sqrt(p (1 - p) / n)`.
    pub fn half_width(&self, z: f64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.value();
        z * (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub rho: Proportion,
    /// Mean branch operations of the `T = 1` decode.
    pub d_bal: f64,
    /// Mean measured branch operations of the combined scheme.
    pub d_mtd: f64,
    /// Mean branch operations of a direct `T1 T2` decode.
    pub d_direct: f64,
    pub rho_star: f64,
}

impl CostModel {
    pub fn projected_d_mtd(&self, t1: u32, t2: u32) -> f64 {
        cost_projection(t1, t2, self.rho.value(), self.d_bal)
    }
}

/// Monte-Carlo disagreement rate of the `T1` and `T2` decoders together with
/// the measured cost of each scheme. Frame `i` uses `frame_rng(seed, i)`.
pub fn rho_estimate(
    code: &VlcCode,
    source: &SourceModel,
    config: &CombinedConfig,
    channel: &ChannelSpec,
    num_symbols: usize,
    trials: u64,
    seed: u64,
) -> Result<CostModel, CombinedError> {
    let decoder = SoftDecoder::new(code, source).map_err(CombinedError::Decode)?;
    let trials = trials.max(1);
    let (mut disagree, mut bal, mut mtd, mut direct) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..trials {
        let mut rng = frame_rng(seed, i);
        let symbols = source.sample(&mut rng, num_symbols);
        let bits = code.encode(&symbols).map_err(DecodeError::from)?;
        let received = transmit(&bits, channel, &mut rng);
        let outcome = combined_decode(&decoder, config, num_symbols, &received, channel)?;
        disagree += u64::from(!outcome.agreed);
        mtd += outcome.ops_total;
        let n = bits.len();
        bal += decoder
            .decode(&TrellisConfig::aggregated(1, num_symbols, n)?, &received, channel)?
            .branch_ops;
        direct += decoder
            .decode(&TrellisConfig::aggregated(config.t3(), num_symbols, n)?, &received, channel)?
            .branch_ops;
    }
    let n = trials as f64;
    Ok(CostModel {
        rho: Proportion {
            successes: disagree,
            trials,
        },
        d_bal: bal as f64 / n,
        d_mtd: mtd as f64 / n,
        d_direct: direct as f64 / n,
        rho_star: rho_star(config.t1, config.t2),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterChoice {
    pub t1: u32,
    pub t2: u32,
    /// No coprime split into two factors `> 1` exists.
    pub no_benefit: bool,
    pub caveat: Option<String>,
}

/// Coprime split `T1 * T2 = target` with the smallest `|T2 - T1|`.
pub fn choose_parameters(target: u32) -> ParameterChoice {
    let best = (2..)
        .take_while(|a| a * a <= target)
        .filter(|a| target.is_multiple_of(*a) && gcd((*a).into(), (target / a).into()) == 1)
        .last();
    let caveat = Some(
        "assumes the disagreement rate grows with T2 - T1; codes whose lengths \
         share a common parity (odd-length codes) can violate this for even T"
            .to_string(),
    );
    match best {
        Some(a) => ParameterChoice {
            t1: a,
            t2: target / a,
            no_benefit: false,
            caveat,
        },
        None => ParameterChoice {
            t1: 1,
            t2: target,
            no_benefit: true,
            caveat,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn coprime_required() {
        assert!(CombinedConfig::new(3, 4).is_ok());
        assert_eq!(CombinedConfig::new(2, 4), Err(CombinedError::NotCoprime(2, 4)));
        assert!(CombinedConfig::new(0, 3).is_err());
        assert_eq!(CombinedConfig::new(1, 7).unwrap().t3(), 7);
    }

    #[test]
    fn cost_formulas() {
        assert_eq!(cost_projection(3, 4, 0.0, 1.0), 7.0);
        assert_eq!(cost_projection(2, 3, 1.0, 1.0), 11.0);
        assert!((rho_star(3, 4) - 0.41667).abs() < 5e-6);
        // At rho = rho_star the combined scheme costs exactly T1 T2 D_bal.
        let r = rho_star(5, 7);
        assert!((cost_projection(5, 7, r, 2.0) - 70.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_choice() {
        let c = choose_parameters(12);
        assert_eq!((c.t1, c.t2, c.no_benefit), (3, 4, false));
        let c = choose_parameters(6);
        assert_eq!((c.t1, c.t2), (2, 3));
        let c = choose_parameters(9);
        assert_eq!((c.t1, c.t2, c.no_benefit), (1, 9, true));
        assert!(choose_parameters(7).no_benefit);
        let c = choose_parameters(30);
        assert_eq!((c.t1, c.t2), (5, 6));
    }

    #[test]
    fn residue_projection_exhaustive() {
        for t1 in 1..=100u64 {
            for t2 in 1..=100 / t1 {
                if gcd(t1, t2) != 1 {
                    continue;
                }
                let t3 = t1 * t2;
                for l in 0..2 * t3 {
                    for m in 0..t3 {
                        let joint = l % t3 == m;
                        let split = l % t1 == m % t1 && l % t2 == m % t2;
                        assert_eq!(joint, split, "T1={t1} T2={t2} L={l} m={m}");
                    }
                }
            }
        }
        // Without coprimality the projection loses information.
        let (t1, t2, l, m) = (2u64, 2u64, 1u64, 3u64);
        assert!(l % t1 == m % t1 && l % t2 == m % t2 && l % (t1 * t2) != m);
    }

    #[test]
    fn noiseless_frames_agree() {
        let cat = Catalog::builtin();
        let e = cat.get("C7").unwrap();
        let clean = ChannelSpec::awgn(f64::INFINITY).unwrap();
        let cfg = CombinedConfig::new(3, 4).unwrap();
        let m = rho_estimate(&e.code, &e.source, &cfg, &clean, 50, 20, 5).unwrap();
        assert_eq!(m.rho.value(), 0.0);
        assert!((m.d_mtd / m.d_bal - 7.0).abs() < 1.0);
    }

    #[test]
    fn proportion_interval() {
        let p = Proportion {
            successes: 25,
            trials: 100,
        };
        assert!((p.half_width(1.0) - 0.0433013).abs() < 1e-6);
        assert_eq!(Proportion { successes: 0, trials: 0 }.value(), 0.0);
    }
}
