//! Exact-rational densities of sets of multiples and stratification densities
//! of d-Olson classes.
//!
//! The core engine computes d(M(H)) for a finite H by dominance pruning,
//! factoring out elements coprime to the rest, greedy prime splitting, and a
//! direct inclusion-exclusion base case, all in exact rational arithmetic.

use crate::classnum::ClassNumberCache;
use crate::numtheory::{factorize, ratio};
use crate::odt::{self, OdtError};
use num::BigRational;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DensityError {
    #[error("element 0 is not allowed in a set of multiples")]
    ZeroElement,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("stratum query inconsistent: forbidden generator {g} divides the profile lcm {l}")]
    InconsistentStratum { g: u64, l: u64 },
    #[error("z = {z} is below the largest profile element {max}")]
    ThresholdTooSmall { z: u64, max: u64 },
    #[error(transparent)]
    Odt(#[from] OdtError),
}

/// A finite set generating a set of multiples M(H). Stored sorted, deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplesSet {
    elements: Vec<u64>,
}

impl MultiplesSet {
    pub fn new(elements: impl IntoIterator<Item = u64>) -> Result<Self, DensityError> {
        let mut v: Vec<u64> = elements.into_iter().collect();
        if v.iter().any(|&x| x == 0) {
            return Err(DensityError::ZeroElement);
        }
        v.sort_unstable();
        v.dedup();
        Ok(MultiplesSet { elements: v })
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Remove every element that is a multiple of another; M(H) is unchanged.
    pub fn prune(&self) -> MultiplesSet {
        let mut out: Vec<u64> = Vec::with_capacity(self.elements.len());
        for &x in &self.elements {
            if !out.iter().any(|&y| x % y == 0) {
                out.push(x);
            }
        }
        MultiplesSet { elements: out }
    }
}

/// Universe for the density: all integers, or odd integers (densities still
/// taken relative to all integers, so an odd m contributes 1/(2m)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Universe {
    All,
    Odd,
}

/// Direct inclusion-exclusion over all subsets; exact. Caller keeps |H| small.
fn direct_ie(h: &[u64]) -> BigRational {
    let n = h.len();
    debug_assert!(n <= 20);
    // subset lcm DP in arbitrary precision (subset lcms overflow u64 easily);
    // group terms by lcm to keep the rational sum short
    let mut lcms: Vec<BigUint> = vec![BigUint::one(); 1 << n];
    let mut grouped: HashMap<BigUint, i64> = HashMap::new();
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let l = lcms[rest].lcm(&BigUint::from(h[low]));
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        *grouped.entry(l.clone()).or_insert(0) += sign;
        lcms[mask] = l;
    }
    let mut sum = BigRational::zero();
    for (l, c) in grouped {
        if c != 0 {
            sum += BigRational::new(BigInt::from(c), BigInt::from(l));
        }
    }
    sum
}

/// Elements coprime to every other element, and the rest (Lemma 4.1 split).
pub fn factor_out_relprime(h: &MultiplesSet) -> (Vec<u64>, MultiplesSet) {
    let els = &h.elements;
    let mut rel = Vec::new();
    let mut rest = Vec::new();
    for (i, &x) in els.iter().enumerate() {
        if els
            .iter()
            .enumerate()
            .all(|(j, &y)| i == j || x.gcd(&y) == 1)
        {
            rel.push(x);
        } else {
            rest.push(x);
        }
    }
    (rel, MultiplesSet { elements: rest })
}

/// The p-scaled set {h / gcd(h,p)} and the p-sieved set {h : p ∤ h} (Lemma 4.2).
pub fn p_split(h: &MultiplesSet, p: u64) -> Result<(MultiplesSet, MultiplesSet), DensityError> {
    if !crate::numtheory::is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    let scaled = MultiplesSet::new(h.elements.iter().map(|&x| x / x.gcd(&p)))?;
    let sieved = MultiplesSet::new(h.elements.iter().copied().filter(|&x| x % p != 0))?;
    Ok((scaled, sieved))
}

/// Above this size the engine splits on a prime instead of running direct
/// inclusion-exclusion. The greedy split makes lcm terms collapse, so a low
/// cap is much faster than exhaustive IE on wide sets and gives the same
/// exact rational.
const IE_CAP: usize = 16;

fn density_rec(h: &MultiplesSet) -> BigRational {
    let h = h.prune();
    if h.is_empty() {
        return BigRational::zero();
    }
    if h.elements[0] == 1 {
        return BigRational::one();
    }
    let (rel, rest) = factor_out_relprime(&h);
    let base = if rest.len() <= IE_CAP {
        direct_ie(rest.elements())
    } else {
        // greedy Lemma 4.2 split: prime dividing the most elements
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for &x in rest.elements() {
            for (p, _) in factorize(x).expect("nonzero").factors {
                *counts.entry(p).or_insert(0) += 1;
            }
        }
        let (&p, _) = counts
            .iter()
            .max_by_key(|&(&p, &c)| (c, std::cmp::Reverse(p)))
            .expect("rest nonempty");
        let (scaled, sieved) = p_split(&rest, p).expect("p from a factorization");
        let inv_p = ratio(1, p);
        &inv_p * density_rec(&scaled) + (BigRational::one() - inv_p) * density_rec(&sieved)
    };
    // 1 - d(M(H)) = (1 - d(M(rest))) * prod (1 - 1/r) over coprime-to-rest r
    let mut one_minus = BigRational::one() - base;
    for r in rel {
        one_minus *= BigRational::one() - ratio(1, r);
    }
    BigRational::one() - one_minus
}

/// Exact asymptotic density of M(H).
pub fn density_of_multiples(h: &MultiplesSet) -> BigRational {
    density_of_multiples_in(h, Universe::All)
}

/// Density of the multiples of H restricted to the chosen universe, relative
/// to all integers. In the odd universe, even elements have no odd multiples
/// and are dropped; an odd m contributes through 1/(2m).
pub fn density_of_multiples_in(h: &MultiplesSet, universe: Universe) -> BigRational {
    match universe {
        Universe::All => density_rec(h),
        Universe::Odd => {
            let odd = MultiplesSet {
                elements: h.elements.iter().copied().filter(|x| x % 2 == 1).collect(),
            };
            density_rec(&odd) / BigRational::from(BigInt::from(2))
        }
    }
}

/// 1 - d(M(first `take` generators)) for the generator set computed to `limit`:
/// the §4.1-style upper bound for the density of non-Olson degrees.
pub fn olson_density_interval_upper(
    limit: u64,
    take: usize,
    cache: &ClassNumberCache,
) -> Result<BigRational, DensityError> {
    let gens = odt::olson_generators(limit, cache)?;
    let vals = gens.values();
    let h = MultiplesSet::new(vals.into_iter().take(take))?;
    Ok(BigRational::one() - density_of_multiples(&h))
}

/// Exact-rational bounds on an asymptotic density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityInterval {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl DensityInterval {
    pub fn new(lower: BigRational, upper: BigRational) -> Self {
        assert!(!lower.is_negative() && lower <= upper && upper <= BigRational::one());
        DensityInterval { lower, upper }
    }
}

/// A d-Olson stratum: the set of odd n whose divisor profile within the
/// threshold family truncated at z matches that of d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StratumQuery {
    pub d: u64,
    pub z: u64,
}

#[derive(Debug, Clone)]
pub struct StratumUpper {
    /// Exact density of A_z: odd n with lcm(profile) | n avoiding the rest of
    /// the truncated family.
    pub upper: BigRational,
    /// The family elements dividing d (the profile D(d, G ∩ [1,z])).
    pub profile: Vec<u64>,
    /// Set when a forbidden element divides the profile lcm: the stratum is empty.
    pub empty: bool,
}

/// d(A_z) for the stratum of q.d at truncation q.z, computed exactly.
pub fn stratum_upper(
    q: StratumQuery,
    cache: &ClassNumberCache,
) -> Result<StratumUpper, DensityError> {
    if q.d % 2 == 0 {
        return Err(DensityError::Odt(OdtError::EvenDegree(q.d)));
    }
    let family = odt::threshold_family_values(q.z, cache)?;
    let profile: Vec<u64> = family.iter().copied().filter(|&g| q.d % g == 0).collect();
    let max_p = profile.iter().copied().max().unwrap_or(1);
    if max_p > q.z {
        return Err(DensityError::ThresholdTooSmall { z: q.z, max: max_p });
    }
    let l: u64 = profile.iter().fold(1u64, |a, &g| a.lcm(&g));
    let mut forbidden = Vec::new();
    for &g in &family {
        if q.d % g == 0 {
            continue;
        }
        if l % g == 0 {
            return Err(DensityError::InconsistentStratum { g, l });
        }
        forbidden.push(g);
    }
    // odd n, L | n, no forbidden g | n: density 1/(2L) minus the odd-universe
    // density of the multiples of {lcm(L, g)}
    let joined = MultiplesSet::new(forbidden.iter().map(|&g| l.lcm(&g)))?;
    let upper = ratio(1, 2 * l) - density_of_multiples_in(&joined, Universe::Odd);
    Ok(StratumUpper {
        upper,
        profile,
        empty: false,
    })
}

/// Interval for the true stratum density: [upper - tail, upper], where `tail`
/// is a certified upper bound on the density lost past the truncation z
/// (supplied by the bounds module).
pub fn stratum_density(
    q: StratumQuery,
    cache: &ClassNumberCache,
    tail: &BigRational,
) -> Result<DensityInterval, DensityError> {
    let s = stratum_upper(q, cache)?;
    let lower = (&s.upper - tail).max(BigRational::zero());
    Ok(DensityInterval::new(lower, s.upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classnum::batch_class_numbers;
    use crate::numtheory::decimal_truncate;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn cache() -> &'static ClassNumberCache {
        static CACHE: OnceLock<ClassNumberCache> = OnceLock::new();
        CACHE.get_or_init(|| batch_class_numbers(100_000).unwrap())
    }

    fn ms(v: &[u64]) -> MultiplesSet {
        MultiplesSet::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn basic_densities() {
        assert_eq!(density_of_multiples(&ms(&[2, 3, 5])), ratio(11, 15));
        assert_eq!(density_of_multiples(&ms(&[])), BigRational::zero());
        assert_eq!(density_of_multiples(&ms(&[1])), BigRational::one());
        assert_eq!(density_of_multiples(&ms(&[7])), ratio(1, 7));
        assert!(MultiplesSet::new([0, 3]).is_err());
    }

    #[test]
    fn odd_universe() {
        // odd multiples of 3 have density 1/6; even elements contribute nothing
        assert_eq!(
            density_of_multiples_in(&ms(&[3]), Universe::Odd),
            ratio(1, 6)
        );
        assert_eq!(
            density_of_multiples_in(&ms(&[2, 3]), Universe::Odd),
            ratio(1, 6)
        );
    }

    #[test]
    fn p_split_examples() {
        let (scaled, sieved) = p_split(&ms(&[6, 10, 15]), 5).unwrap();
        assert_eq!(scaled.elements(), &[2, 3, 6]);
        assert_eq!(sieved.elements(), &[6]);
        assert!(p_split(&ms(&[3]), 6).is_err());
    }

    #[test]
    fn relprime_examples() {
        let (rel, rest) = factor_out_relprime(&ms(&[4, 9, 25]));
        assert_eq!(rel, vec![4, 9, 25]);
        assert!(rest.is_empty());
    }

    fn chain_sets() -> (Vec<u64>, MultiplesSet) {
        let gens = odt::olson_generators(100_000, cache()).unwrap();
        let h = MultiplesSet::new(gens.values().into_iter().take(38)).unwrap();
        assert_eq!(*h.elements().last().unwrap(), 32927);
        let (rel, h_prime) = factor_out_relprime(&h);
        (rel, h_prime)
    }

    #[test]
    fn section41_chain_constants() {
        let (rel, h_prime) = chain_sets();
        assert_eq!(rel, vec![2, 3, 5, 11129, 27491]);

        let (h2, sieved) = p_split(&h_prime, 11).unwrap();
        let d_sieved = density_of_multiples(&sieved);
        assert_eq!(decimal_truncate(&d_sieved, 15), "0.004217267361708");

        let (rel2, h3) = factor_out_relprime(&h2);
        assert_eq!(rel2, vec![641, 653, 1013, 1133, 1601]);
        assert_eq!(h3.prune().len(), 26);
        let one_minus_d3 = BigRational::one() - density_of_multiples(&h3);
        assert_eq!(decimal_truncate(&one_minus_d3, 15), "0.979914305743609");

        let one_minus_d2 = BigRational::one() - density_of_multiples(&h2);
        assert_eq!(decimal_truncate(&one_minus_d2, 15), "0.974452539520107");

        let d_hp = density_of_multiples(&h_prime);
        assert_eq!(decimal_truncate(&d_hp, 15), "0.006156375826997");

        // Lemma 4.2 identity at the paper's split
        let lhs = d_hp;
        let rhs = ratio(1, 11) * density_of_multiples(&h2)
            + ratio(10, 11) * density_of_multiples(&sieved);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn olson_upper_values() {
        let c = cache();
        let full = olson_density_interval_upper(100_000, 38, c).unwrap();
        assert_eq!(decimal_truncate(&full, 15), "0.264991512979231");
        assert_eq!(olson_density_interval_upper(12, 3, c).unwrap(), ratio(4, 15));
        // 4-element direct IE oracle for {2,3,5,913}
        let d4 = direct_ie(&[2, 3, 5, 913]);
        assert_eq!(
            olson_density_interval_upper(100_000, 4, c).unwrap(),
            BigRational::one() - d4
        );
    }

    #[test]
    fn stratum_olson() {
        let c = cache();
        let s = stratum_upper(StratumQuery { d: 1, z: 32927 }, c).unwrap();
        assert_eq!(s.profile, vec![1]);
        // d(A_z) for the Olson stratum equals the §4.1 value
        assert_eq!(decimal_truncate(&s.upper, 15), "0.264991512979231");
        // trivial z: forbidden set empty up to z = 2 → all odd n
        let t = stratum_upper(StratumQuery { d: 1, z: 2 }, c).unwrap();
        assert_eq!(t.upper, ratio(1, 2));
    }

    #[test]
    fn stratum_d3() {
        let c = cache();
        let s = stratum_upper(StratumQuery { d: 3, z: 32927 }, c).unwrap();
        assert_eq!(s.profile, vec![1, 3]);
        assert_eq!(decimal_truncate(&s.upper, 17), "0.06375162161546481");
        let lo = ratio(62, 1000);
        let hi = ratio(64, 1000);
        assert!(s.upper > lo && s.upper < hi);
    }

    #[test]
    fn stratum_interval() {
        let c = cache();
        let tail = ratio(9, 10_000); // stand-in certified tail
        let iv = stratum_density(StratumQuery { d: 1, z: 32927 }, c, &tail).unwrap();
        assert!(iv.lower < iv.upper);
        assert!(iv.lower > ratio(264, 1000));
        assert!(iv.upper < ratio(265, 1000));
    }

    fn counting_oracle(h: &[u64], n: u64) -> BigRational {
        let count = (1..=n).filter(|&x| h.iter().any(|&m| x % m == 0)).count();
        ratio(count as i64, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]

        #[test]
        fn lemma_identities_hold(raw in prop::collection::vec(1u64..=500, 1..=8), p_idx in 0usize..15) {
            let h = ms(&raw);
            let d = density_of_multiples(&h);
            // Lemma 4.1
            let (rel, rest) = factor_out_relprime(&h);
            let mut rhs = BigRational::one() - density_of_multiples(&rest);
            for r in rel {
                rhs *= BigRational::one() - ratio(1, r);
            }
            prop_assert_eq!(BigRational::one() - &d, rhs);
            // Lemma 4.2 at every prime below 50 (indexed to keep cases cheap)
            let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
            let p = primes[p_idx];
            let (scaled, sieved) = p_split(&h, p).unwrap();
            let inv = ratio(1, p);
            let split = &inv * density_of_multiples(&scaled)
                + (BigRational::one() - &inv) * density_of_multiples(&sieved);
            prop_assert_eq!(&d, &split);
            // pruning invariance and range
            prop_assert_eq!(&d, &density_of_multiples(&h.prune()));
            prop_assert!(!d.is_negative() && d <= BigRational::one());
        }

        #[test]
        fn matches_counting_oracle(raw in prop::collection::vec(1u64..=60, 1..=5)) {
            let h = ms(&raw);
            let l = raw.iter().fold(1u64, |a, &x| a.lcm(&x));
            if l <= 500_000 {
                prop_assert_eq!(density_of_multiples(&h), counting_oracle(h.elements(), l));
            }
        }

        #[test]
        fn monotone_under_superset(raw in prop::collection::vec(1u64..=300, 2..=8)) {
            let h_small = ms(&raw[..raw.len() - 1]);
            let h_big = ms(&raw);
            prop_assert!(density_of_multiples(&h_small) <= density_of_multiples(&h_big));
        }
    }
}
