//! Independent oracles shared by unit tests.

use num_bigint::BigInt;
use num_rational::BigRational;

/// Textbook Otsu: for every split recompute class weights and means from
/// scratch and maximize `w0 * w1 * (mu0 - mu1)^2` in exact rationals.
pub fn exhaustive_otsu(hist: &[u64]) -> usize {
    let total: u64 = hist.iter().sum();
    let mut best: Option<(usize, BigRational)> = None;
    for t in 0..hist.len() {
        let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for (i, &c) in hist.iter().enumerate() {
            if i <= t {
                n0 += c;
                s0 += i as u64 * c;
            } else {
                n1 += c;
                s1 += i as u64 * c;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let r = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let w0 = r(n0, total);
        let w1 = r(n1, total);
        let diff = r(s0, n0) - r(s1, n1);
        let var = w0 * w1 * &diff * &diff;
        if best.as_ref().is_none_or(|(_, b)| var > *b) {
            best = Some((t, var));
        }
    }
    best.map(|(t, _)| t)
        .unwrap_or_else(|| hist.iter().position(|&c| c > 0).unwrap())
}
