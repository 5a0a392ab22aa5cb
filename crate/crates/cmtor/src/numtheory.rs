//! Integer primitives: primality, segmented sieving, factorization, divisors,
//! and exact rational helpers shared by the rest of the crate.

use num::BigRational;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumTheoryError {
    #[error("range inverted: lo={lo} > hi={hi}")]
    RangeInverted { lo: u64, hi: u64 },
    #[error("cannot factorize 0")]
    ZeroInput,
}

/// Prime factorization of a positive integer, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Number of divisors, from the exponents.
    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn reconstruct(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product::<u64>()
            .max(1)
    }
}

/// Trial-division factorization. All inputs in this crate are far below 2^63.
pub fn factorize(n: u64) -> Result<Factorization, NumTheoryError> {
    if n == 0 {
        return Err(NumTheoryError::ZeroInput);
    }
    let mut m = n;
    let mut factors = Vec::new();
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while *m % p == 0 {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut p = 5;
    while p * p <= m {
        push(p, &mut m);
        push(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { value: n, factors })
}

/// All divisors of `n`, ascending.
pub fn divisors(n: u64) -> Result<Vec<u64>, NumTheoryError> {
    let f = factorize(n)?;
    let mut divs = vec![1u64];
    for &(p, e) in &f.factors {
        let prev = divs.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            divs.extend(prev.iter().map(|d| d * pe));
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Simple sieve of all primes up to `limit` inclusive.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Optional residue filter for a [`PrimeStream`].
#[derive(Debug, Clone, Copy)]
pub struct ResidueFilter {
    pub modulus: u64,
    pub allowed: &'static [u64],
}

const SEGMENT_ODDS: usize = 1 << 20; // odds per segment: covers 2^21 integers

/// Segmented sieve over `[lo, hi]`, yielding primes ascending.
/// Memory stays bounded by the segment size regardless of `hi`.
pub struct PrimeStream {
    lo: u64,
    hi: u64,
    filter: Option<ResidueFilter>,
    base: Vec<u64>,
    seg_start: u64, // first odd candidate of current segment
    seg: Vec<u64>,  // bitset over odds, 1 = composite
    idx: usize,
    emitted_two: bool,
}

pub fn sieve_segmented(lo: u64, hi: u64) -> Result<PrimeStream, NumTheoryError> {
    sieve_segmented_filtered(lo, hi, None)
}

pub fn sieve_segmented_filtered(
    lo: u64,
    hi: u64,
    filter: Option<ResidueFilter>,
) -> Result<PrimeStream, NumTheoryError> {
    if lo > hi {
        return Err(NumTheoryError::RangeInverted { lo, hi });
    }
    let base = small_primes(hi.integer_sqrt());
    let mut s = PrimeStream {
        lo,
        hi,
        filter,
        base,
        seg_start: 0,
        seg: Vec::new(),
        idx: SEGMENT_ODDS,
        emitted_two: lo > 2,
    };
    s.seg_start = if lo <= 3 { 3 } else { lo | 1 };
    s.load_segment();
    Ok(s)
}

trait IntegerSqrt {
    fn integer_sqrt(self) -> u64;
}
impl IntegerSqrt for u64 {
    fn integer_sqrt(self) -> u64 {
        if self < 2 {
            return self;
        }
        let mut x = (self as f64).sqrt() as u64 + 1;
        while x * x > self {
            x -= 1;
        }
        x
    }
}
pub fn isqrt(n: u64) -> u64 {
    n.integer_sqrt()
}

impl PrimeStream {
    fn load_segment(&mut self) {
        if self.seg_start > self.hi {
            self.seg = Vec::new();
            self.idx = 0;
            return;
        }
        let words = SEGMENT_ODDS / 64;
        self.seg.clear();
        self.seg.resize(words, 0);
        let start = self.seg_start; // odd
        let end = (start + 2 * SEGMENT_ODDS as u64 - 1).min(self.hi.max(start));
        for &p in self.base.iter().skip(1) {
            // odd base primes only
            let p2 = p * p;
            if p2 > end {
                break;
            }
            // first odd multiple of p that is >= max(p^2, start)
            let mut m = if p2 >= start {
                p2
            } else {
                let mut k = start.div_ceil(p) * p;
                if k % 2 == 0 {
                    k += p;
                }
                k
            };
            while m <= end {
                let bit = ((m - start) / 2) as usize;
                self.seg[bit / 64] |= 1u64 << (bit % 64);
                m += 2 * p;
            }
        }
        self.idx = 0;
    }

    fn passes(&self, n: u64) -> bool {
        match self.filter {
            None => true,
            Some(f) => f.allowed.contains(&(n % f.modulus)),
        }
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if !self.emitted_two {
            self.emitted_two = true;
            if self.lo <= 2 && 2 <= self.hi && self.passes(2) {
                return Some(2);
            }
        }
        loop {
            if self.seg.is_empty() {
                return None;
            }
            while self.idx < SEGMENT_ODDS {
                let i = self.idx;
                self.idx += 1;
                let n = self.seg_start + 2 * i as u64;
                if n > self.hi {
                    return None;
                }
                if self.seg[i / 64] & (1u64 << (i % 64)) == 0 && n > 1 && self.passes(n) {
                    return Some(n);
                }
            }
            self.seg_start += 2 * SEGMENT_ODDS as u64;
            if self.seg_start > self.hi {
                return None;
            }
            self.load_segment();
        }
    }
}

/// Exact rational from an integer pair.
pub fn ratio(num: i64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_u(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Truncated (not rounded) decimal expansion with `digits` fractional digits,
/// matching the paper's trailing-dots style. Requires a value in [0, 10).
pub fn decimal_truncate(x: &BigRational, digits: usize) -> String {
    assert!(!x.is_negative(), "decimal_truncate expects a nonnegative value");
    let num = x.numer();
    let den = x.denom();
    let ip = num / den;
    let mut rem = num - &ip * den;
    let mut s = format!("{ip}.");
    for _ in 0..digits {
        rem *= 10;
        let d = &rem / den;
        s.push(char::from(b'0' + d.to_u8().unwrap_or(0)));
        rem -= d * den;
    }
    s
}

/// Parse assertion helper used by tests: value of a rational as f64.
pub fn to_f64(x: &BigRational) -> f64 {
    let num = x.numer();
    let den = x.denom();
    if num.is_zero() {
        return 0.0;
    }
    // scale to keep precision for very large numerator/denominator
    num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn sieve_first_primes() {
        let ps: Vec<u64> = sieve_segmented(2, 30).unwrap().collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn sieve_prime_count_to_1e6() {
        // [DERIVED] independent naive sieve oracle
        let naive = small_primes(1_000_000).len();
        let seg = sieve_segmented(2, 1_000_000).unwrap().count();
        assert_eq!(naive, 78498);
        assert_eq!(seg, naive);
    }

    #[test]
    fn sieve_window_above_1e9_with_filter() {
        // [DERIVED] trial-division oracle on the 100-wide window
        let f = ResidueFilter { modulus: 4, allowed: &[3] };
        let got: Vec<u64> = sieve_segmented_filtered(1_000_000_000, 1_000_000_100, Some(f))
            .unwrap()
            .collect();
        let mut want = Vec::new();
        for n in 1_000_000_000u64..=1_000_000_100 {
            if n % 4 == 3 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0) {
                want.push(n);
            }
        }
        assert_eq!(got, want);
        assert!(!want.is_empty());
    }

    #[test]
    fn sieve_range_inverted() {
        assert!(matches!(
            sieve_segmented(10, 2),
            Err(NumTheoryError::RangeInverted { .. })
        ));
    }

    #[test]
    fn segmented_matches_naive_on_windows() {
        let all = small_primes(40_000);
        for lo in [3u64, 9_999, 29_000] {
            let hi = lo + 10_000;
            let seg: Vec<u64> = sieve_segmented(lo, hi).unwrap().collect();
            let want: Vec<u64> = all.iter().copied().filter(|&p| p >= lo && p <= hi).collect();
            assert_eq!(seg, want, "window [{lo},{hi}]");
        }
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(913).unwrap().factors, vec![(11, 1), (83, 1)]);
        assert_eq!(factorize(1).unwrap().factors, vec![]);
        assert_eq!(factorize(45).unwrap().factors, vec![(3, 2), (5, 1)]);
        assert_eq!(factorize(0), Err(NumTheoryError::ZeroInput));
    }

    #[test]
    fn factorize_reconstruct_to_1e5() {
        for n in 1..=100_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(f.reconstruct(), n);
        }
    }

    #[test]
    fn divisors_examples() {
        assert_eq!(divisors(45).unwrap(), vec![1, 3, 5, 9, 15, 45]);
        assert_eq!(divisors(1).unwrap(), vec![1]);
        assert_eq!(divisors(99).unwrap(), vec![1, 3, 9, 11, 33, 99]);
    }

    #[test]
    fn divisors_count_matches_tau() {
        for n in 1..=5_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(divisors(n).unwrap().len() as u64, f.tau());
        }
    }

    #[test]
    fn rational_examples() {
        assert_eq!(ratio(1, 2) + ratio(1, 3), ratio(5, 6));
        assert!(ratio(11, 15) > ratio(4, 15));
        let p = (BigRational::one() - ratio(1, 2))
            * (BigRational::one() - ratio(1, 3))
            * (BigRational::one() - ratio(1, 5));
        assert_eq!(p, ratio(4, 15)); // [PAPER] §1 upper bound 4/15
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for n in 0..5_000u64 {
            let naive = n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), naive, "n={n}");
        }
        assert!(is_prime(2_147_483_647)); // 2^31 - 1
        assert!(!is_prime(2_147_483_649));
    }

    #[test]
    fn decimal_truncation() {
        assert_eq!(decimal_truncate(&ratio(1, 3), 5), "0.33333");
        assert_eq!(decimal_truncate(&ratio(2, 3), 5), "0.66666"); // truncated, not rounded
        assert_eq!(decimal_truncate(&ratio(4, 15), 5), "0.26666");
    }
}
