//! Per-frame error measures.

/// Unit-cost insert/delete/substitute edit distance.
pub fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    strsim::generic_levenshtein(&a.to_vec(), &b.to_vec())
}

/// Edit distance normalized by the emitted length.
pub fn nld(emitted: &[usize], decoded: &[usize]) -> f64 {
    if emitted.is_empty() {
        return if decoded.is_empty() { 0.0 } else { 1.0 };
    }
    levenshtein(emitted, decoded) as f64 / emitted.len() as f64
}

/// Positions where two equal-length bit vectors differ.
pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
