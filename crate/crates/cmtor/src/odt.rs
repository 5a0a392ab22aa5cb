//! The Strong Odd Degree Theorem engine: realizability thresholds for every
//! candidate torsion group, enumeration of the groups realized in a given odd
//! degree, Olson predicates, equivalence fingerprints, and the generator set
//! characterizing Olson degrees.

use crate::classnum::{ClassNumError, ClassNumberCache};
use crate::numtheory::{divisors, is_prime, NumTheoryError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OdtError {
    #[error("Z/{0}^{1}Z is never realizable in odd degree (ell ≡ 7 mod 8)")]
    NeverRealizableInOddDegree(u64, u32),
    #[error("degree {0} is even; the odd-degree classification does not apply")]
    EvenDegree(u64),
    #[error("invalid group parameters: ell={ell}, n={n} (need ell prime ≡ 3 mod 4, n ≥ 1)")]
    BadGroup { ell: u64, n: u32 },
    #[error(transparent)]
    ClassNum(#[from] ClassNumError),
    #[error(transparent)]
    NumTheory(#[from] NumTheoryError),
}

/// A torsion group that can occur for a CM elliptic curve over an odd-degree
/// number field (the closed universe of the Odd Degree Theorem).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TorsionGroup {
    Trivial,
    Z2,
    Z4,
    Z2xZ2,
    /// Z/ell^n Z with ell prime ≡ 3 (mod 4), n ≥ 1.
    Cyclic { ell: u64, n: u32 },
    /// Z/2ell^n Z with ell prime ≡ 3 (mod 4), n ≥ 1.
    TwoTimesCyclic { ell: u64, n: u32 },
}

impl TorsionGroup {
    pub fn order(&self) -> u64 {
        match *self {
            TorsionGroup::Trivial => 1,
            TorsionGroup::Z2 => 2,
            TorsionGroup::Z4 | TorsionGroup::Z2xZ2 => 4,
            TorsionGroup::Cyclic { ell, n } => ell.pow(n),
            TorsionGroup::TwoTimesCyclic { ell, n } => 2 * ell.pow(n),
        }
    }

    fn validate(&self) -> Result<(), OdtError> {
        match *self {
            TorsionGroup::Cyclic { ell, n } | TorsionGroup::TwoTimesCyclic { ell, n } => {
                if n == 0 || ell % 4 != 3 || !is_prime(ell) {
                    Err(OdtError::BadGroup { ell, n })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Canonical sort key: order, then kind tag, then ell.
    fn sort_key(&self) -> (u64, u8, u64) {
        let tag = match self {
            TorsionGroup::Trivial => 0,
            TorsionGroup::Z2 => 0,
            TorsionGroup::Z4 => 0,
            TorsionGroup::Cyclic { .. } => 0,
            TorsionGroup::Z2xZ2 => 1,
            TorsionGroup::TwoTimesCyclic { .. } => 0,
        };
        let ell = match *self {
            TorsionGroup::Cyclic { ell, .. } | TorsionGroup::TwoTimesCyclic { ell, .. } => ell,
            _ => 0,
        };
        (self.order(), tag, ell)
    }
}

impl std::fmt::Display for TorsionGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TorsionGroup::Z2xZ2 => write!(f, "Z/2Z + Z/2Z"),
            g => write!(f, "Z/{}Z", g.order()),
        }
    }
}

/// Divisibility threshold of a group per the Strong Odd Degree Theorem:
/// the group occurs in odd degree d iff `value` divides d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    pub group: TorsionGroup,
    pub value: u64,
    pub always_realizable: bool,
}

/// The exponent delta of ell in the threshold.
pub fn delta(ell: u64, n: u32) -> Result<u32, OdtError> {
    if ell % 4 != 3 || n == 0 {
        return Err(OdtError::BadGroup { ell, n });
    }
    Ok(if ell > 3 {
        3 * n / 2 - 1
    } else if n == 1 {
        0
    } else {
        3 * n / 2 - 2
    })
}

/// Threshold with the class number supplied by the caller (checked variants
/// below fetch it from a cache). Returns u128 to survive the ell^delta ladder.
pub(crate) fn threshold_value(ell: u64, n: u32, h: u64, two_times: bool) -> Result<u128, OdtError> {
    if two_times && ell == 3 && n == 1 {
        return Ok(1);
    }
    if !two_times && ell % 8 == 7 {
        return Err(OdtError::NeverRealizableInOddDegree(ell, n));
    }
    let d = delta(ell, n)?;
    let base = h as u128 * ((ell - 1) / 2).max(1) as u128;
    let ladder = (ell as u128).checked_pow(d).unwrap_or(u128::MAX);
    let v = base.saturating_mul(ladder);
    Ok(if two_times && ell % 8 == 3 {
        v.saturating_mul(3)
    } else {
        v
    })
}

pub fn threshold(group: TorsionGroup, cache: &ClassNumberCache) -> Result<Threshold, OdtError> {
    group.validate()?;
    let (value, always) = match group {
        TorsionGroup::Trivial | TorsionGroup::Z2 | TorsionGroup::Z4 | TorsionGroup::Z2xZ2 => {
            (1u128, true)
        }
        TorsionGroup::Cyclic { ell, n } => {
            if ell % 8 == 7 {
                return Err(OdtError::NeverRealizableInOddDegree(ell, n));
            }
            let h = cache.get(ell)?;
            let v = threshold_value(ell, n, h, false)?;
            (v, v == 1)
        }
        TorsionGroup::TwoTimesCyclic { ell, n } => {
            let h = cache.get(ell)?;
            let v = threshold_value(ell, n, h, true)?;
            (v, v == 1)
        }
    };
    let value = u64::try_from(value).unwrap_or(u64::MAX);
    Ok(Threshold {
        group,
        value,
        always_realizable: always,
    })
}

pub fn realizable(
    group: TorsionGroup,
    d: u64,
    cache: &ClassNumberCache,
) -> Result<bool, OdtError> {
    if d % 2 == 0 {
        return Err(OdtError::EvenDegree(d));
    }
    match threshold(group, cache) {
        Ok(t) => Ok(t.always_realizable || d % t.value == 0),
        Err(OdtError::NeverRealizableInOddDegree(..)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// All groups realized in odd degree d, canonically sorted.
///
/// Enumeration: the four universal groups, then for each divisor e of d with
/// ell = 2e + 1 prime ≡ 3 (mod 4), climb the n-ladder while the threshold
/// stays ≤ d (Z/3 and Z/6 arise from ell = 3 via the divisor 1).
pub fn groups(d: u64, cache: &ClassNumberCache) -> Result<Vec<TorsionGroup>, OdtError> {
    groups_impl(d, &mut |ell| Ok(cache.get(ell)?))
}

/// Like [`groups`], but computes each needed class number directly from form
/// counts; useful for isolated large degrees where no bulk cache is at hand.
pub fn groups_on_demand(d: u64) -> Result<Vec<TorsionGroup>, OdtError> {
    groups_impl(d, &mut |ell| Ok(crate::classnum::class_number(ell)?))
}

/// T_CM(d) without a cache; see [`groups_on_demand`].
pub fn t_cm_on_demand(d: u64) -> Result<u64, OdtError> {
    Ok(groups_on_demand(d)?.iter().map(|g| g.order()).max().unwrap())
}

fn groups_impl(
    d: u64,
    class_no: &mut dyn FnMut(u64) -> Result<u64, OdtError>,
) -> Result<Vec<TorsionGroup>, OdtError> {
    if d % 2 == 0 {
        return Err(OdtError::EvenDegree(d));
    }
    let mut out = vec![
        TorsionGroup::Trivial,
        TorsionGroup::Z2,
        TorsionGroup::Z4,
        TorsionGroup::Z2xZ2,
    ];
    for e in divisors(d)? {
        let Some(ell) = e.checked_mul(2).and_then(|x| x.checked_add(1)) else {
            continue;
        };
        if ell % 4 != 3 || !is_prime(ell) {
            continue;
        }
        let h = class_no(ell)?;
        if ell % 8 == 3 {
            let mut n = 1;
            loop {
                let t = threshold_value(ell, n, h, false)?;
                if t > d as u128 {
                    break;
                }
                if d as u128 % t == 0 {
                    out.push(TorsionGroup::Cyclic { ell, n });
                }
                n += 1;
            }
        }
        let mut n = 1;
        loop {
            let t = threshold_value(ell, n, h, true)?;
            if t > d as u128 {
                break;
            }
            if d as u128 % t == 0 {
                out.push(TorsionGroup::TwoTimesCyclic { ell, n });
            }
            n += 1;
        }
    }
    out.sort_by_key(|g| g.sort_key());
    out.dedup();
    Ok(out)
}

/// T_CM(d): the maximum order among the realized groups.
pub fn t_cm(d: u64, cache: &ClassNumberCache) -> Result<u64, OdtError> {
    Ok(groups(d, cache)?.iter().map(|g| g.order()).max().unwrap())
}

/// Canonical encoding of the non-universal part of the realized set. The six
/// groups realizable in every odd degree (trivial, Z/2, Z/3, Z/4, Z/6,
/// Z/2+Z/2) are omitted, so the empty fingerprint characterizes Olson degrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub realized: Vec<(u8, u64, u32)>, // (kind tag: 0 cyclic / 1 two-times, ell, n)
}

impl Fingerprint {
    pub fn is_empty(&self) -> bool {
        self.realized.is_empty()
    }

    /// Stable one-line rendering used by checkpoints.
    pub fn canonical_string(&self) -> String {
        let parts: Vec<String> = self
            .realized
            .iter()
            .map(|&(t, l, n)| format!("{}{}^{}", if t == 0 { "c" } else { "t" }, l, n))
            .collect();
        parts.join("+")
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(Fingerprint { realized: vec![] });
        }
        let mut realized = Vec::new();
        for part in s.split('+') {
            let (kind, rest) = part.split_at(1);
            let tag = match kind {
                "c" => 0,
                "t" => 1,
                _ => return None,
            };
            let (l, n) = rest.split_once('^')?;
            realized.push((tag, l.parse().ok()?, n.parse().ok()?));
        }
        Some(Fingerprint { realized })
    }
}

pub fn fingerprint(d: u64, cache: &ClassNumberCache) -> Result<Fingerprint, OdtError> {
    Ok(fingerprint_of(&groups(d, cache)?))
}

/// Fingerprint of an already-computed realized set.
pub fn fingerprint_of(groups: &[TorsionGroup]) -> Fingerprint {
    let mut realized = Vec::new();
    for &g in groups {
        match g {
            TorsionGroup::Cyclic { ell, n } => {
                if (ell, n) != (3, 1) {
                    realized.push((0u8, ell, n));
                }
            }
            TorsionGroup::TwoTimesCyclic { ell, n } => {
                if (ell, n) != (3, 1) {
                    realized.push((1u8, ell, n));
                }
            }
            _ => {}
        }
    }
    realized.sort_unstable();
    Fingerprint { realized }
}

pub fn is_olson(d: u64, cache: &ClassNumberCache) -> Result<bool, OdtError> {
    Ok(fingerprint(d, cache)?.is_empty())
}

pub fn equivalent(d: u64, d2: u64, cache: &ClassNumberCache) -> Result<bool, OdtError> {
    Ok(fingerprint(d, cache)? == fingerprint(d2, cache)?)
}

/// The generator set of Proposition 1.3 pruned as in §4.1: traverse primes
/// ell ≡ 3 (mod 4), 3 < ell <= limit in increasing order and keep
/// g = (ell-1)/2 * h unless it is divisible by a preexisting element.
/// The element 2 (for even degrees) is adjoined up front.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub elements: Vec<(u64, Vec<u64>)>, // (value, witness primes), sorted by value
    pub limit: u64,
}

impl GeneratorSet {
    pub fn values(&self) -> Vec<u64> {
        self.elements.iter().map(|e| e.0).collect()
    }
}

pub fn olson_generators(limit: u64, cache: &ClassNumberCache) -> Result<GeneratorSet, OdtError> {
    if cache.covered_limit() < limit {
        return Err(OdtError::ClassNum(ClassNumError::CacheInsufficient {
            needed: limit,
            covered: cache.covered_limit(),
        }));
    }
    let mut elements: Vec<(u64, Vec<u64>)> = vec![(2, vec![])];
    for (ell, h) in cache.iter() {
        if ell <= 3 || ell > limit {
            continue;
        }
        let g = (ell - 1) / 2 * h;
        if let Some(e) = elements.iter_mut().find(|e| g % e.0 == 0) {
            if e.0 == g {
                e.1.push(ell);
            }
            continue;
        }
        elements.push((g, vec![ell]));
    }
    elements.sort_unstable_by_key(|e| e.0);
    Ok(GeneratorSet { elements, limit })
}

/// r(d): the number of divisors e of d realized as (ell-1)/2 * h for some
/// prime ell ≡ 3 (mod 4). Any witness satisfies (ell-1)/2 | e, so ell ranges
/// over 2m + 1 for divisors m of e.
pub fn r_count(d: u64, cache: &ClassNumberCache) -> Result<u64, OdtError> {
    if d % 2 == 0 {
        return Err(OdtError::EvenDegree(d));
    }
    let mut r = 0;
    for e in divisors(d)? {
        let mut found = false;
        for m in divisors(e)? {
            let ell = 2 * m + 1;
            if ell % 4 == 3 && is_prime(ell) && (ell - 1) / 2 * cache.get(ell)? == e {
                found = true;
                break;
            }
        }
        if found {
            r += 1;
        }
    }
    Ok(r)
}

/// All distinct threshold values <= z over the full family of Theorem 1.2
/// (every realizable group's threshold), ascending. Requires class numbers
/// for ell <= 2z + 1.
pub fn threshold_family_values(z: u64, cache: &ClassNumberCache) -> Result<Vec<u64>, OdtError> {
    let need = 2 * z + 1;
    if cache.covered_limit() < need {
        return Err(OdtError::ClassNum(ClassNumError::CacheInsufficient {
            needed: need,
            covered: cache.covered_limit(),
        }));
    }
    let mut vals = std::collections::BTreeSet::new();
    for (ell, h) in cache.iter() {
        if ell > need {
            break;
        }
        let base = h as u128 * ((ell - 1) / 2).max(1) as u128;
        if ell != 3 && base > z as u128 {
            continue;
        }
        if ell % 8 == 3 {
            for two_times in [false, true] {
                let mut n = 1;
                loop {
                    let t = threshold_value(ell, n, h, two_times)?;
                    if t > z as u128 {
                        break;
                    }
                    vals.insert(t as u64);
                    n += 1;
                }
            }
        } else {
            let mut n = 1;
            loop {
                let t = threshold_value(ell, n, h, true)?;
                if t > z as u128 {
                    break;
                }
                vals.insert(t as u64);
                n += 1;
            }
        }
    }
    Ok(vals.into_iter().collect())
}
