use std::cmp::Ordering;

/// A point in the search space. All coordinates are finite.
pub type Point = Vec<f64>;

/// Squared Euclidean distance between two points of equal dimension.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Lexicographic order on coordinate vectors; coordinates are never NaN here.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("non-finite coordinate") {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// Bit-exact hash key for a point; used to exclude already-explored
/// candidates, where grid points are shared bit-for-bit.
pub(crate) fn bit_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| x.to_bits()).collect()
}
