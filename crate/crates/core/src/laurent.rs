//! Laurent polynomials with real coefficients.
//!
//! Every distribution of the symbol-count discrepancy is carried as a
//! Laurent polynomial: the coefficient of `y^i` is a probability and `i` may
//! be negative. Storage is a contiguous coefficient run starting at the
//! lowest nonzero exponent, trimmed at both ends; interior zeros are allowed
//! and are never reported by [`LaurentPoly::iter`].
//!
//! A polynomial may carry a symmetric window `[-D, D]`. Products falling
//! outside the window, and coefficients below [`UNDERFLOW`] in magnitude, are
//! dropped and added to a running `lost_mass` so callers can check that the
//! truncation stayed negligible.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Coefficients smaller than this in magnitude are discarded.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("polynomial has zero mass")]
    ZeroMass,
    #[error("no pseudo-degree: lost mass {lost:e} is not below eta = {eta:e}")]
    NotConverged { eta: f64, lost: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    low: i64,
    coeffs: Vec<f64>,
    window: Option<i64>,
    lost: f64,
}

impl Default for LaurentPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self {
            low: 0,
            coeffs: Vec::new(),
            window: None,
            lost: 0.0,
        }
    }

    /// The multiplicative identity `y^0`.
    pub fn unit() -> Self {
        Self::monomial(0, 1.0)
    }

    pub fn monomial(exponent: i64, coeff: f64) -> Self {
        Self::from_dense(exponent, vec![coeff])
    }

    /// Polynomial whose coefficient of `y^(low + k)` is `coeffs[k]`.
    pub fn from_dense(low: i64, coeffs: Vec<f64>) -> Self {
        let mut p = Self {
            low,
            coeffs,
            window: None,
            lost: 0.0,
        };
        p.normalize();
        p
    }

    /// Sums coefficients of repeated exponents.
    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(pairs: I) -> Self {
        let map: BTreeMap<i64, f64> = pairs.into_iter().fold(BTreeMap::new(), |mut m, (e, c)| {
            *m.entry(e).or_insert(0.0) += c;
            m
        });
        let (Some((&lo, _)), Some((&hi, _))) = (map.first_key_value(), map.last_key_value()) else {
            return Self::zero();
        };
        let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
        for (e, c) in map {
            coeffs[(e - lo) as usize] = c;
        }
        Self::from_dense(lo, coeffs)
    }

    /// Restricts the polynomial to exponents in `[-bound, bound]`, moving the
    /// excess into the lost mass. Later products inherit the window.
    pub fn with_window(mut self, bound: i64) -> Self {
        self.window = Some(match self.window {
            Some(w) => w.min(bound),
            None => bound,
        });
        self.apply_window();
        self.normalize();
        self
    }

    pub fn window(&self) -> Option<i64> {
        self.window
    }

    /// Mass discarded by windowing and underflow so far.
    pub fn lost_mass(&self) -> f64 {
        self.lost
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn min_exponent(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.low)
    }

    pub fn max_exponent(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.low + self.coeffs.len() as i64 - 1)
    }

    pub fn coeff(&self, exponent: i64) -> f64 {
        let k = exponent - self.low;
        if k < 0 {
            return 0.0;
        }
        self.coeffs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Nonzero `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(k, c)| (self.low + k as i64, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.iter().count()
    }

    /// `p(y^-1)`: negates every exponent.
    pub fn reflect(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        let low = match self.max_exponent() {
            Some(hi) => -hi,
            None => 0,
        };
        Self {
            low,
            coeffs,
            window: self.window,
            lost: self.lost,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone().merge_meta(self);
        }
        if other.is_zero() {
            return self.clone().merge_meta(other);
        }
        let lo = self.low.min(other.low);
        let hi = self.max_exponent().unwrap().max(other.max_exponent().unwrap());
        let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
        for (src, base) in [(self, self.low), (other, other.low)] {
            let off = (base - lo) as usize;
            for (k, c) in src.coeffs.iter().enumerate() {
                coeffs[off + k] += c;
            }
        }
        let mut p = Self {
            low: lo,
            coeffs,
            window: min_window(self.window, other.window),
            lost: self.lost + other.lost,
        };
        p.apply_window();
        p.normalize();
        p
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Self) {
        *self = self.add(other);
    }

    /// In-place `self += factor * y^shift * other`, ignoring windows.
    pub fn add_shifted(&mut self, other: &Self, factor: f64, shift: i64) {
        if other.is_zero() || factor == 0.0 {
            return;
        }
        let olo = other.low + shift;
        let ohi = olo + other.coeffs.len() as i64 - 1;
        if self.coeffs.is_empty() {
            self.low = olo;
            self.coeffs = other.coeffs.iter().map(|c| c * factor).collect();
        } else {
            let lo = self.low.min(olo);
            let hi = (self.low + self.coeffs.len() as i64 - 1).max(ohi);
            if lo < self.low {
                let pad = (self.low - lo) as usize;
                self.coeffs.splice(0..0, std::iter::repeat_n(0.0, pad));
                self.low = lo;
            }
            self.coeffs.resize((hi - lo + 1) as usize, 0.0);
            let off = (olo - self.low) as usize;
            for (d, c) in self.coeffs[off..].iter_mut().zip(&other.coeffs) {
                *d += factor * c;
            }
        }
        self.lost += other.lost * factor.abs();
        self.normalize();
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut p = Self {
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            window: self.window,
            lost: self.lost * factor.abs(),
        };
        p.normalize();
        p
    }

    /// Convolution product, truncated to the tighter of the two windows.
    pub fn mul(&self, other: &Self) -> Self {
        let window = min_window(self.window, other.window);
        let lost = self.lost + other.lost;
        if self.is_zero() || other.is_zero() {
            return Self {
                window,
                lost,
                ..Self::zero()
            };
        }
        let mut p = Self {
            low: self.low + other.low,
            coeffs: self.full_mul(other),
            window,
            lost,
        };
        p.apply_window();
        p.normalize();
        p
    }

    fn full_mul(&self, other: &Self) -> Vec<f64> {
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![0.0; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (o, b) in out[i..i + other.coeffs.len()].iter_mut().zip(&other.coeffs) {
                *o += a * b;
            }
        }
        out
    }

    /// `e`-fold convolution power; `power(0)` is the unit.
    pub fn power(&self, e: u32) -> Self {
        let mut acc = Self {
            window: self.window,
            ..Self::unit()
        };
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Sum of the coefficients (the value at `y = 1`).
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Mean exponent under the (normalized) coefficient weights.
    pub fn mean(&self) -> Result<f64, LaurentError> {
        let m = self.positive_mass()?;
        Ok(self.iter().map(|(e, c)| e as f64 * c).sum::<f64>() / m)
    }

    pub fn variance(&self) -> Result<f64, LaurentError> {
        let m = self.positive_mass()?;
        let mu = self.mean()?;
        Ok(self
            .iter()
            .map(|(e, c)| (e as f64 - mu).powi(2) * c)
            .sum::<f64>()
            / m)
    }

    fn positive_mass(&self) -> Result<f64, LaurentError> {
        let m = self.mass();
        if m > 0.0 {
            Ok(m)
        } else {
            Err(LaurentError::ZeroMass)
        }
    }

    /// Folds exponents modulo `t`: the result has exponents in `[0, t)` and
    /// residue `r` carries the total coefficient of all `i ≡ r (mod t)`.
    pub fn fold_mod(&self, t: u32) -> Result<Self, LaurentError> {
        if t == 0 {
            return Err(LaurentError::InvalidParameter("modulus must be >= 1".into()));
        }
        let t = t as i64;
        let mut res = vec![0.0; t as usize];
        for (e, c) in self.iter() {
            res[e.rem_euclid(t) as usize] += c;
        }
        let mut p = Self::from_dense(0, res);
        p.lost = self.lost;
        Ok(p)
    }

    /// Shannon entropy in bits of the renormalized coefficients; `0 log 0`
    /// is taken as zero.
    pub fn entropy(&self) -> f64 {
        let m = self.mass();
        if m <= 0.0 {
            return 0.0;
        }
        -self
            .coeffs
            .iter()
            .filter(|c| **c > 0.0)
            .map(|c| {
                let q = c / m;
                q * q.log2()
            })
            .sum::<f64>()
    }

    /// Total coefficient mass at exponents with `|i| > d`.
    pub fn tail_mass(&self, d: u64) -> f64 {
        self.iter()
            .filter(|(e, _)| e.unsigned_abs() > d)
            .map(|(_, c)| c)
            .sum()
    }

    /// Smallest `d >= 1` such that the mass outside `[-d, d]` is below `eta`.
    pub fn pseudo_degree(&self, eta: f64) -> Result<u64, LaurentError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(LaurentError::InvalidParameter(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        if self.lost >= eta {
            return Err(LaurentError::NotConverged {
                eta,
                lost: self.lost,
            });
        }
        let reach = self
            .min_exponent()
            .map(|lo| lo.unsigned_abs().max(self.max_exponent().unwrap().unsigned_abs()))
            .unwrap_or(0);
        // Accumulate |i| > d tails from the outside in.
        let mut by_abs = vec![0.0; reach as usize + 1];
        for (e, c) in self.iter() {
            by_abs[e.unsigned_abs() as usize] += c;
        }
        let mut tail = 0.0;
        let mut best = reach.max(1);
        for d in (1..=reach.max(1)).rev() {
            // tail now holds the mass with |i| > d
            if tail < eta {
                best = d;
            } else {
                break;
            }
            tail += by_abs.get(d as usize).copied().unwrap_or(0.0);
        }
        Ok(best)
    }

    /// Lines of `exponent<TAB>coefficient` in increasing exponent order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (e, c) in self.iter() {
            let _ = writeln!(s, "{e}\t{c:e}");
        }
        s
    }

    fn merge_meta(mut self, other: &Self) -> Self {
        self.window = min_window(self.window, other.window);
        self.lost += other.lost;
        self.apply_window();
        self.normalize();
        self
    }

    fn apply_window(&mut self) {
        let Some(w) = self.window else { return };
        if self.coeffs.is_empty() {
            return;
        }
        let hi = self.low + self.coeffs.len() as i64 - 1;
        if hi > w {
            let keep = (w - self.low + 1).max(0) as usize;
            self.lost += self.coeffs[keep.min(self.coeffs.len())..].iter().sum::<f64>();
            self.coeffs.truncate(keep);
        }
        if self.low < -w && !self.coeffs.is_empty() {
            let cut = ((-w - self.low) as usize).min(self.coeffs.len());
            self.lost += self.coeffs[..cut].iter().sum::<f64>();
            self.coeffs.drain(..cut);
            self.low = -w;
        }
    }

    fn normalize(&mut self) {
        for c in self.coeffs.iter_mut() {
            if c.abs() < UNDERFLOW {
                if *c > 0.0 {
                    self.lost += *c;
                }
                *c = 0.0;
            }
        }
        let Some(first) = self.coeffs.iter().position(|c| *c != 0.0) else {
            self.coeffs.clear();
            self.low = 0;
            return;
        };
        let last = self.coeffs.iter().rposition(|c| *c != 0.0).unwrap();
        self.coeffs.truncate(last + 1);
        self.coeffs.drain(..first);
        self.low += first as i64;
    }
}

fn min_window(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}
