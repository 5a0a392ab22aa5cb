//! Class numbers h of Q(sqrt(-ell)) for primes ell ≡ 3 (mod 4), computed
//! unconditionally by counting reduced binary quadratic forms, with a
//! persistent text cache and the derived L(1, (-ell/.)) values.

use crate::numtheory::{is_prime, isqrt, sieve_segmented_filtered, ResidueFilter};
use rayon::prelude::*;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassNumError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not ≡ 3 (mod 4)")]
    BadResidue(u64),
    #[error("ell = 3 is out of scope for l_value (w ≠ 2)")]
    EllThree,
    #[error("cache does not cover {needed} (covered_limit = {covered})")]
    CacheInsufficient { needed: u64, covered: u64 },
    #[error("genus-theory tripwire: even class number {h} at ell = {ell}")]
    EvenClassNumber { ell: u64, h: u64 },
    #[error("cache file corrupt: {0}")]
    CorruptCache(String),
    #[error("io: {0}")]
    Io(String),
}

/// Class number of discriminant -ell by direct enumeration of reduced forms
/// ax^2 + bxy + cy^2 with b^2 - 4ac = -ell, |b| <= a <= c, and b > 0 when
/// |b| = a or a = c. Primitivity is automatic for prime discriminants.
pub fn class_number(ell: u64) -> Result<u64, ClassNumError> {
    if !is_prime(ell) {
        return Err(ClassNumError::NotPrime(ell));
    }
    if ell % 4 != 3 {
        return Err(ClassNumError::BadResidue(ell));
    }
    if ell == 3 {
        return Ok(1); // single reduced form (1,1,1)
    }
    let mut h = 0u64;
    let amax = isqrt(ell / 3);
    for a in 1..=amax {
        let fa = 4 * a;
        let mut b = 1;
        while b <= a {
            let m = b * b + ell;
            if m % fa == 0 {
                let c = m / fa;
                if c >= a {
                    h += 1;
                    if b < a && a < c {
                        h += 1; // the -b companion
                    }
                }
            }
            b += 2;
        }
    }
    if h % 2 == 0 {
        return Err(ClassNumError::EvenClassNumber { ell, h });
    }
    Ok(h)
}

/// Persistent map ell -> h for all primes ell ≡ 3 (mod 4) up to `covered_limit`.
#[derive(Debug, Clone, Default)]
pub struct ClassNumberCache {
    entries: Vec<(u64, u32)>, // sorted by ell
    covered_limit: u64,
}

impl ClassNumberCache {
    pub fn covered_limit(&self) -> u64 {
        self.covered_limit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, ell: u64) -> Result<u64, ClassNumError> {
        if ell > self.covered_limit {
            return Err(ClassNumError::CacheInsufficient {
                needed: ell,
                covered: self.covered_limit,
            });
        }
        match self.entries.binary_search_by_key(&ell, |e| e.0) {
            Ok(i) => Ok(self.entries[i].1 as u64),
            Err(_) => {
                if !is_prime(ell) {
                    Err(ClassNumError::NotPrime(ell))
                } else {
                    Err(ClassNumError::BadResidue(ell))
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.entries.iter().map(|&(l, h)| (l, h as u64))
    }

    /// Extend coverage to `limit` if needed; existing entries never change.
    pub fn ensure(&mut self, limit: u64) -> Result<(), ClassNumError> {
        if limit <= self.covered_limit {
            return Ok(());
        }
        let ext = batch_class_numbers_range(self.covered_limit + 1, limit)?;
        self.entries.extend(ext);
        self.covered_limit = limit;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassNumError> {
        let f = std::fs::File::create(path).map_err(|e| ClassNumError::Io(e.to_string()))?;
        let mut w = BufWriter::new(f);
        let io = |e: std::io::Error| ClassNumError::Io(e.to_string());
        writeln!(w, "#covered_limit={}", self.covered_limit).map_err(io)?;
        for &(l, h) in &self.entries {
            writeln!(w, "{l},{h}").map_err(io)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassNumError> {
        let f = std::fs::File::open(path).map_err(|e| ClassNumError::Io(e.to_string()))?;
        let mut lines = std::io::BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| ClassNumError::CorruptCache("empty file".into()))?
            .map_err(|e| ClassNumError::Io(e.to_string()))?;
        let covered_limit = header
            .strip_prefix("#covered_limit=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ClassNumError::CorruptCache(format!("bad header: {header}")))?;
        let mut entries = Vec::new();
        let mut last = 0u64;
        for line in lines {
            let line = line.map_err(|e| ClassNumError::Io(e.to_string()))?;
            let (l, h) = line
                .split_once(',')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| ClassNumError::CorruptCache(format!("bad line: {line}")))?;
            if l <= last {
                return Err(ClassNumError::CorruptCache(format!(
                    "non-ascending ell at {l}"
                )));
            }
            last = l;
            entries.push((l, h));
        }
        Ok(ClassNumberCache {
            entries,
            covered_limit,
        })
    }
}

/// Populate a cache for every prime ell ≡ 3 (mod 4), ell <= limit.
pub fn batch_class_numbers(limit: u64) -> Result<ClassNumberCache, ClassNumError> {
    let entries = batch_class_numbers_range(3, limit)?;
    Ok(ClassNumberCache {
        entries,
        covered_limit: limit,
    })
}

// Window span in discriminant units; 1 << 21 keeps the u16 count slice
// (1 << 19 entries) inside L2 while the (a,b) pair scan stays negligible.
const WINDOW_SPAN: u64 = 1 << 21;

/// Form counts for all eligible ell in [lo, hi] by a single global sweep over
/// reduced forms: for every (a, b odd <= a, c >= a) the discriminant
/// 4ac - b^2 gets its count bumped (by 2 when the -b companion is distinct).
/// Cost is O(hi^{3/2}), far below per-prime enumeration over the same range.
fn batch_class_numbers_range(lo: u64, hi: u64) -> Result<Vec<(u64, u32)>, ClassNumError> {
    let lo = lo.max(3);
    if hi < lo {
        return Ok(Vec::new());
    }
    let w0 = (lo - 3) / WINDOW_SPAN;
    let w1 = (hi - 3) / WINDOW_SPAN;
    let windows: Vec<u64> = (w0..=w1).collect();
    let mut out: Vec<Vec<(u64, u32)>> = windows
        .par_iter()
        .map(|&w| window_counts(3 + w * WINDOW_SPAN, lo, hi))
        .collect::<Result<_, _>>()?;
    let mut entries = Vec::new();
    for v in out.iter_mut() {
        entries.append(v);
    }
    Ok(entries)
}

fn window_counts(base: u64, lo: u64, hi: u64) -> Result<Vec<(u64, u32)>, ClassNumError> {
    // discriminants D ≡ 3 (mod 4) in [max(base, lo), min(base+span-1, hi)]
    let d_lo = base.max(lo);
    let d_hi = (base + WINDOW_SPAN - 1).min(hi);
    if d_lo > d_hi {
        return Ok(Vec::new());
    }
    let first = if d_lo % 4 == 3 {
        d_lo
    } else {
        d_lo + (7 - d_lo % 4) % 4
    };
    if first > d_hi {
        return Ok(Vec::new());
    }
    let n = ((d_hi - first) / 4 + 1) as usize;
    let mut counts = vec![0u16; n];
    let amax = isqrt(d_hi / 3);
    for a in 1..=amax {
        let fa = 4 * a;
        let mut b = 1u64;
        while b <= a {
            let bb = b * b;
            // c >= a and D = fa*c - bb in [first, d_hi]
            let c_from_d = (first + bb).div_ceil(fa);
            let mut c = c_from_d.max(a);
            let c_hi = (d_hi + bb) / fa;
            if c <= c_hi {
                if c == a {
                    // a = c: only the +b form is reduced
                    let d = fa * c - bb;
                    if d >= first {
                        bump(&mut counts, ((d - first) / 4) as usize, 1);
                    }
                    c += 1;
                }
                if b == a {
                    // |b| = a: only the +b form
                    let mut idx = ((fa * c - bb - first) / 4) as usize;
                    while c <= c_hi {
                        bump(&mut counts, idx, 1);
                        idx += a as usize;
                        c += 1;
                    }
                } else if c <= c_hi {
                    let mut idx = ((fa * c - bb - first) / 4) as usize;
                    let steps = c_hi - c + 1;
                    for _ in 0..steps {
                        bump(&mut counts, idx, 2);
                        idx += a as usize;
                    }
                }
            }
            b += 2;
        }
    }
    // read off the primes ≡ 3 (mod 4)
    let filter = ResidueFilter { modulus: 4, allowed: &[3] };
    let mut out = Vec::new();
    for ell in sieve_segmented_filtered(first.max(3), d_hi, Some(filter))
        .map_err(|e| ClassNumError::Io(e.to_string()))?
    {
        let h = if ell == 3 {
            1
        } else {
            counts[((ell - first) / 4) as usize] as u64
        };
        if h % 2 == 0 {
            return Err(ClassNumError::EvenClassNumber { ell, h });
        }
        out.push((ell, h as u32));
    }
    Ok(out)
}

#[inline]
fn bump(counts: &mut [u16], idx: usize, by: u16) {
    counts[idx] += by;
}

/// L(1, (-ell/.)) = pi * h / sqrt(ell) for ell > 3 (class number formula, w = 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LValue {
    pub ell: u64,
    pub value: f64,
}

pub fn l_value(ell: u64, h: u64) -> Result<LValue, ClassNumError> {
    if ell == 3 {
        return Err(ClassNumError::EllThree);
    }
    if !is_prime(ell) {
        return Err(ClassNumError::NotPrime(ell));
    }
    if ell % 4 != 3 {
        return Err(ClassNumError::BadResidue(ell));
    }
    Ok(LValue {
        ell,
        value: std::f64::consts::PI * h as f64 / (ell as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent brute-force oracle: enumerate ALL (a, b, c) with
    /// 0 < a <= sqrt(ell/3), |b| <= a, checking the reduction conditions.
    fn oracle(ell: u64) -> u64 {
        if ell == 3 {
            return 1;
        }
        let mut h = 0;
        for a in 1..=isqrt(ell / 3) {
            for b in -(a as i64)..=(a as i64) {
                let num = b * b + ell as i64;
                if num % (4 * a as i64) != 0 {
                    continue;
                }
                let c = num / (4 * a as i64);
                if c < a as i64 {
                    continue;
                }
                // reduced: b > 0 required when |b| = a or a = c
                if (b.unsigned_abs() == a || c == a as i64) && b <= 0 {
                    continue;
                }
                h += 1;
            }
        }
        h
    }

    #[test]
    fn class_number_examples() {
        assert_eq!(class_number(7).unwrap(), 1);
        assert_eq!(class_number(167).unwrap(), 11); // [PAPER] 913 = 11 * 83
        assert_eq!(class_number(163).unwrap(), 1); // [PAPER] §7 degree-81 row
        assert_eq!(class_number(23).unwrap(), 3);
    }

    #[test]
    fn class_number_rejects_bad_input() {
        assert_eq!(class_number(15), Err(ClassNumError::NotPrime(15)));
        assert_eq!(class_number(13), Err(ClassNumError::BadResidue(13)));
    }

    #[test]
    fn batch_limit_50() {
        let cache = batch_class_numbers(50).unwrap();
        let want = [(3, 1), (7, 1), (11, 1), (19, 1), (23, 3), (31, 3), (43, 1), (47, 5)];
        let got: Vec<(u64, u64)> = cache.iter().collect();
        assert_eq!(got, want.map(|(l, h)| (l as u64, h as u64)));
    }

    #[test]
    fn batch_limit_3() {
        let cache = batch_class_numbers(3).unwrap();
        assert_eq!(cache.iter().collect::<Vec<_>>(), vec![(3, 1)]);
    }

    #[test]
    fn batch_matches_oracle_to_1e4() {
        let cache = batch_class_numbers(10_000).unwrap();
        let mut seen = 0;
        for (ell, h) in cache.iter() {
            assert_eq!(h, oracle(ell), "ell={ell}");
            assert_eq!(h, class_number(ell).unwrap(), "ell={ell}");
            assert_eq!(h % 2, 1, "genus tripwire at {ell}");
            seen += 1;
        }
        assert!(seen > 600);
    }

    #[test]
    fn batch_is_monotone_under_extension() {
        let small = batch_class_numbers(2_000).unwrap();
        let big = batch_class_numbers(6_000).unwrap();
        let prefix: Vec<_> = big.iter().take_while(|&(l, _)| l <= 2_000).collect();
        assert_eq!(small.iter().collect::<Vec<_>>(), prefix);

        let mut ext = small.clone();
        ext.ensure(6_000).unwrap();
        assert_eq!(ext.iter().collect::<Vec<_>>(), big.iter().collect::<Vec<_>>());
    }

    #[test]
    fn cache_roundtrip() {
        let cache = batch_class_numbers(500).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.cache");
        cache.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("#covered_limit=500\n"));
        assert!(text.contains("\n23,3\n"));
        let back = ClassNumberCache::load(&path).unwrap();
        assert_eq!(back.covered_limit(), 500);
        assert_eq!(back.iter().collect::<Vec<_>>(), cache.iter().collect::<Vec<_>>());
    }

    #[test]
    fn class_number_one_discriminants() {
        for ell in [3u64, 7, 11, 19, 43, 67, 163] {
            assert_eq!(class_number(ell).unwrap(), 1, "ell={ell}");
        }
    }

    #[test]
    fn l_values() {
        let v = l_value(7, 1).unwrap().value;
        assert!((v - std::f64::consts::PI / 7f64.sqrt()).abs() < 1e-12);
        assert!((v - 1.187410).abs() < 1e-5);
        let v = l_value(163, 1).unwrap().value;
        assert!((v - std::f64::consts::PI / 163f64.sqrt()).abs() < 1e-12);
        assert!((v - 0.246069).abs() < 1e-5);
        let v = l_value(23, 3).unwrap().value;
        assert!((v - 3.0 * std::f64::consts::PI / 23f64.sqrt()).abs() < 1e-12);
        assert!((v - 1.965202).abs() < 1e-5);
        assert_eq!(l_value(3, 1), Err(ClassNumError::EllThree));
    }
}
