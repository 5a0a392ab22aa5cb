//! Analytic estimates: the partial sums of the Theorem 1.4 lower-bound
//! pipeline, Brun–Titchmarsh quadrature, certified tails for stratum density
//! intervals, and the Theorem 1.3 ratio records.
//!
//! Floating-point parts are upper bounds by construction: negative integrand
//! terms are dropped, divisors are rounded down, and small multiplicative
//! slack absorbs rounding. Fixed-point sums round every term up.

use crate::classnum::{l_value, ClassNumError, ClassNumberCache};
use crate::numtheory::{sieve_segmented_filtered, NumTheoryError, ResidueFilter};
use crate::odt::{self, OdtError};
use num::BigRational;
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(transparent)]
    ClassNum(#[from] ClassNumError),
    #[error(transparent)]
    NumTheory(#[from] NumTheoryError),
    #[error(transparent)]
    Odt(#[from] OdtError),
    #[error("cutoff {cutoff} above supported class-number range {ceiling}")]
    CutoffTooLarge { cutoff: u64, ceiling: u64 },
    #[error("adaptive quadrature failed to converge")]
    QuadratureDiverged,
}

/// 96 fractional bits; value = acc / 2^96 with every term rounded up.
const FP_SHIFT: u32 = 96;

fn fp_term(c_num: u64, denom: u128) -> u128 {
    let num = (c_num as u128) << FP_SHIFT;
    num.div_ceil(denom)
}

fn fp_to_rational(acc: u128) -> BigRational {
    BigRational::new(BigInt::from(acc), BigInt::from(1u128 << FP_SHIFT))
}

/// Primes ℓ ≡ 3 (mod 4) with gcd((ℓ-1)/2, 30) = 1 lie in 3 of the 16 reduced
/// classes mod 60.
const CLASSES_COPRIME_30: &[u64] = &[23, 47, 59];
/// ℓ ≡ 3 (mod 4), ℓ ≡ 1 (mod 3), ℓ ≢ 1 (mod 5): the extra classes that can
/// still meet a 3-but-not-9 stratum.
const CLASSES_D3: &[u64] = &[7, 19, 23, 43, 47, 59];
/// All reduced classes mod 60 with ℓ ≡ 3 (mod 4).
const CLASSES_ALL: &[u64] = &[7, 11, 19, 23, 31, 43, 47, 59];

/// Σ 1/g_ℓ over primes 3 < ℓ ≤ cutoff, ℓ ≡ 3 (mod 4), gcd(g_ℓ, 30) = 1,
/// where g_ℓ = (ℓ-1)/2 · h. Exact.
pub fn sum1_partial(cutoff: u64, cache: &ClassNumberCache) -> Result<BigRational, BoundsError> {
    if cutoff > cache.covered_limit() {
        return Err(BoundsError::CutoffTooLarge {
            cutoff,
            ceiling: cache.covered_limit(),
        });
    }
    let mut terms: Vec<(BigInt, BigInt)> = Vec::new();
    for (ell, h) in cache.iter() {
        if ell <= 3 || ell > cutoff {
            continue;
        }
        let g = (ell - 1) / 2 * h;
        if g % 3 != 0 && g % 5 != 0 {
            terms.push((BigInt::from(1), BigInt::from(g)));
        }
    }
    // pairwise tree sum of unreduced fractions keeps the bignum work quasi-linear
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some((n1, d1)) = it.next() {
            match it.next() {
                Some((n2, d2)) => next.push((&n1 * &d2 + &n2 * &d1, d1 * d2)),
                None => next.push((n1, d1)),
            }
        }
        terms = next;
    }
    Ok(match terms.pop() {
        Some((n, d)) => BigRational::new(n, d),
        None => BigRational::from(BigInt::from(0)),
    })
}

/// Σ over primes ℓ ∈ (lo, hi], gcd((ℓ-1)/2, 30) = 1, of 1/(100·(ℓ-1)/2):
/// the §4.2 Watkins-floor sum. Returned as an exact rational that upper-bounds
/// the true sum (each term rounded up at 96 fractional bits; independent of
/// chunking).
pub fn sum2(lo: u64, hi: u64) -> Result<BigRational, BoundsError> {
    sum2_with_progress(lo, hi, false)
}

pub fn sum2_with_progress(lo: u64, hi: u64, progress: bool) -> Result<BigRational, BoundsError> {
    if lo >= hi {
        if lo == hi {
            return Ok(BigRational::from(BigInt::from(0)));
        }
        return Err(BoundsError::NumTheory(NumTheoryError::RangeInverted {
            lo,
            hi,
        }));
    }
    const CHUNK: u64 = 100_000_000;
    let total = (hi - lo).div_ceil(CHUNK);
    let mut acc: u128 = 0;
    let mut k = 0;
    let mut start = lo;
    while start < hi {
        let end = (start + CHUNK).min(hi);
        k += 1;
        if progress {
            eprintln!("segment {k}/{total}");
        }
        let filter = ResidueFilter {
            modulus: 60,
            allowed: CLASSES_COPRIME_30,
        };
        for ell in sieve_segmented_filtered(start + 1, end, Some(filter))? {
            acc += fp_term(1, 50 * (ell as u128 - 1));
        }
        start = end;
    }
    Ok(fp_to_rational(acc))
}

const SPLIT_2P8E9: f64 = 2.8e9;
const WATKINS_H: f64 = 101.0;
/// Corollary 4.4 constant, nudged down so the f64 evaluation stays a valid
/// class-number lower bound.
const COR44_C: f64 = 0.040999;

fn epsilon0() -> f64 {
    0.999 / (1e6f64).ln()
}

fn ln10(x: f64) -> f64 {
    x * std::f64::consts::LN_10
}

/// Brun–Titchmarsh bound on the count of our primes in (3, t]: with k of the
/// 16 reduced classes mod 60 allowed, Π(t) ≤ 2·(k/16)·t/log(t/60).
fn pi_bound(t: f64, k: u32) -> f64 {
    (k as f64 / 8.0) * t / (t / 60.0).ln()
}

/// -d/dt [ log t / ((t-1)√t) ]
fn neg_f1_prime(t: f64) -> f64 {
    let s = t.sqrt();
    let lt = t.ln();
    -1.0 / (t * (t - 1.0) * s) + lt * (1.0 / ((t - 1.0) * (t - 1.0) * s))
        + lt * 0.5 / ((t - 1.0) * t * s)
}

/// -d/dt [ 1 / ((t-1) t^{1/2-ε₀}) ]
fn neg_f2_prime(t: f64) -> f64 {
    let e0 = epsilon0();
    let tp = t.powf(0.5 - e0);
    1.0 / ((t - 1.0) * (t - 1.0) * tp) + (0.5 - e0) / ((t - 1.0) * tp * t)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, BoundsError> {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, BoundsError> {
        if depth > 48 {
            return Err(BoundsError::QuadratureDiverged);
        }
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if (left + right - whole).abs() <= 15.0 * tol {
            Ok(left + right + (left + right - whole) / 15.0)
        } else {
            Ok(rec(f, a, fa, m, fm, flm, left, tol / 2.0, depth + 1)?
                + rec(f, m, fm, b, fb, frm, right, tol / 2.0, depth + 1)?)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 0)
}

/// The Σ₃″-style Brun–Titchmarsh tail: upper bound on
/// Σ_{ℓ > from, class-conditioned} 1/((ℓ-1)/2 · h_floor(ℓ)) with the
/// Corollary 4.4 floors, via the two integrated-by-parts Stieltjes integrals.
pub fn bt_tail(from: f64, k: u32, tol: f64) -> Result<f64, BoundsError> {
    let u115 = ln10(115.0);
    let u130 = ln10(130.0);
    // I1 over the 0.041√t/log t regime, extended to ∞ per the paper
    let g1 = move |u: f64| {
        let t = u.exp();
        pi_bound(t, k) * neg_f1_prime(t) * t
    };
    let a1 = from.ln();
    let i1 = if a1 < u115 {
        adaptive_simpson(&g1, a1, u115, tol)?
    } else {
        0.0
    };
    // remainder of I1 past 10^115 plus I2's truncation at 10^130 are below
    // e^{-u/2} and t^{ε₀-1/2} scales respectively; both < 10^-50
    let rem = 2e-50;
    let g2 = move |u: f64| {
        let t = u.exp();
        pi_bound(t, k) * neg_f2_prime(t) * t
    };
    let a2 = a1.max(u115);
    let i2 = adaptive_simpson(&g2, a2, u130, tol)?;
    let total = (2.0 / COR44_C) * i1.max(0.0) + (2.0 / 3e4) * i2.max(0.0) + rem;
    Ok(total * (1.0 + 1e-9))
}

/// The two pieces of Σ₃ from §4.2: the single possible exceptional
/// discriminant (Watkins floor) and the Brun–Titchmarsh main term.
#[derive(Debug, Clone, Copy)]
pub struct Sum3Tail {
    pub exceptional: f64,
    pub main: f64,
}

pub fn sum3_tail() -> Result<Sum3Tail, BoundsError> {
    Ok(Sum3Tail {
        exceptional: 1.0 / ((SPLIT_2P8E9 - 1.0) / 2.0 * 100.0),
        main: bt_tail(SPLIT_2P8E9, 3, 1e-10)?,
    })
}

/// Which compatibility profile applies to the stratum of d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StratumKind {
    /// gcd(d,15) = 1: stratum members avoid 3 and 5.
    Olson,
    /// 3‖d, 5∤d: members are ≡ ±3 (mod 9) and avoid 5.
    ThreeBand,
    /// No structural exclusions assumed.
    Generic,
}

impl StratumKind {
    pub fn for_degree(d: u64) -> StratumKind {
        if d % 15 != 0 && d % 3 != 0 && d % 5 != 0 {
            StratumKind::Olson
        } else if d % 3 == 0 && d % 9 != 0 && d % 5 != 0 {
            StratumKind::ThreeBand
        } else {
            StratumKind::Generic
        }
    }

    /// Density coefficient for a family value v: an upper bound on the density
    /// of stratum-compatible odd multiples of v is coeff/v. None means no odd
    /// multiple of v can lie in the stratum.
    fn coeff(self, v3: u32, v5: bool) -> Option<(u64, u64)> {
        match self {
            // n odd, 3∤n, 5∤n: (1/2)(2/3)(4/5) = 4/15
            StratumKind::Olson => {
                if v3 > 0 || v5 {
                    None
                } else {
                    Some((4, 15))
                }
            }
            // n odd, 3‖n, 5∤n
            StratumKind::ThreeBand => {
                if v5 || v3 >= 2 {
                    None
                } else if v3 == 1 {
                    Some((4, 15))
                } else {
                    Some((4, 45))
                }
            }
            // n odd: 1/2
            StratumKind::Generic => Some((1, 2)),
        }
    }

    /// Worst-case per-prime coefficient when h is unknown, together with the
    /// allowed residue classes mod 60. Covers every ladder member: for Olson
    /// and ThreeBand at most one member per (ℓ, n) pair can be compatible at
    /// weight 4/15 (or two at 4/45 + 4/45·, which is smaller); Generic takes
    /// both members, 1/2·(1 + 1/3) = 2/3.
    fn sieve_profile(self) -> (f64, &'static [u64]) {
        match self {
            StratumKind::Olson => (4.0 / 15.0, CLASSES_COPRIME_30),
            StratumKind::ThreeBand => (4.0 / 15.0, CLASSES_D3),
            StratumKind::Generic => (2.0 / 3.0, CLASSES_ALL),
        }
    }
}

/// Regime boundaries for [`certified_tail`]. Class numbers are exact for
/// ℓ ≤ l0; the Watkins floor h ≥ 101 covers (l0, 2.8·10⁹]; the Corollary 4.4
/// floor is applied prime-by-prime on (2.8·10⁹, l1]; Brun–Titchmarsh
/// quadrature bounds the rest.
#[derive(Debug, Clone, Copy)]
pub struct TailParams {
    pub l0: u64,
    pub l1: u64,
}

impl Default for TailParams {
    fn default() -> Self {
        TailParams {
            l0: 100_000_000,
            l1: 14_000_000_000,
        }
    }
}

/// Certified upper bound on the density of odd integers in a given stratum
/// pattern that are divisible by some threshold-family value g > z.
#[derive(Debug, Clone)]
pub struct TailEstimate {
    pub z: u64,
    pub explicit_part: BigRational,
    pub watkins_part: f64,
    pub siegel_part: f64,
    pub total_upper: f64,
}

fn v3_v5(mut v: u128) -> (u32, bool) {
    let mut v3 = 0;
    while v % 3 == 0 {
        v3 += 1;
        v /= 3;
    }
    (v3, v % 5 == 0)
}

const LADDER_CAP: u128 = 1_000_000_000_000_000_000; // enumerate members up to 10^18

/// Exact ladder enumeration for one prime with known h; returns the
/// fixed-point sum of coeff/v over family members v > z, v ≤ cap, plus an f64
/// bound on the ignored remainder past the cap.
fn explicit_ladder(ell: u64, h: u64, z: u64, kind: StratumKind) -> (u128, f64) {
    let mut acc: u128 = 0;
    let mut rem = 0.0;
    let two_times_options: &[bool] = if ell % 8 == 3 {
        &[false, true]
    } else {
        &[true]
    };
    for &two_times in two_times_options {
        let mut n = 1u32;
        loop {
            let v = match odt::threshold_value(ell, n, h, two_times) {
                Ok(v) => v,
                Err(_) => break,
            };
            if v > LADDER_CAP {
                // remaining members only grow; bound their sum by a geometric
                // series at the worst coefficient
                rem += (4.0 / 15.0) / (v as f64) * (ell as f64 / (ell as f64 - 1.0)) * 2.0;
                break;
            }
            if v > z as u128 {
                let (v3, v5) = v3_v5(v);
                if let Some((cn, cd)) = kind.coeff(v3, v5) {
                    acc += fp_term(cn, cd as u128 * v);
                }
            }
            n += 1;
        }
    }
    (acc, rem)
}

/// Certified tail for a stratum at truncation z: bounds the density of
/// stratum-pattern odd n divisible by some family value g > z, i.e. the gap
/// between d(A_z) and the true stratum density.
pub fn certified_tail(
    z: u64,
    kind: StratumKind,
    params: TailParams,
    cache: &ClassNumberCache,
) -> Result<TailEstimate, BoundsError> {
    if cache.covered_limit() < params.l0 {
        return Err(BoundsError::ClassNum(ClassNumError::CacheInsufficient {
            needed: params.l0,
            covered: cache.covered_limit(),
        }));
    }
    // exact regime: every family member from ℓ ≤ l0 with its true class number
    let mut acc: u128 = 0;
    let mut slack = 0.0;
    for (ell, h) in cache.iter() {
        if ell > params.l0 {
            break;
        }
        let (a, rem) = explicit_ladder(ell, h, z, kind);
        acc += a;
        slack += rem;
    }
    let explicit_part = fp_to_rational(acc);
    let explicit_f64 = crate::numtheory::to_f64(&explicit_part) * (1.0 + 1e-12);

    let (coeff, classes) = kind.sieve_profile();
    let k = classes.len() as u32;
    let filter = ResidueFilter {
        modulus: 60,
        allowed: classes,
    };

    // Watkins regime: h ≥ 101 on (l0, 2.8e9]
    let mut watkins_part = 0.0;
    let wat_hi = (params.l1.min(2_800_000_000)).max(params.l0);
    for ell in sieve_segmented_filtered(params.l0 + 1, wat_hi, Some(filter))? {
        let lf = ell as f64;
        let lambda = 1.0 + 1.0 / (lf * (lf - 1.0));
        watkins_part += coeff * lambda / (WATKINS_H * (lf - 1.0) / 2.0);
    }

    // Corollary 4.4 regime, prime by prime on (2.8e9, l1]
    let mut cor44 = 0.0;
    if params.l1 > 2_800_000_000 {
        for ell in sieve_segmented_filtered(2_800_000_001, params.l1, Some(filter))? {
            let lf = ell as f64;
            let hmin = WATKINS_H.max(COR44_C * lf.sqrt() / lf.ln());
            cor44 += coeff / (hmin * (lf - 1.0) / 2.0);
        }
        cor44 *= 1.0 + 1.0 / (2.8e9 * (2.8e9 - 1.0)); // ladder factor λ
    }

    // Brun–Titchmarsh quadrature past l1, plus the single possible exception
    let bt = coeff * bt_tail(params.l1.max(2_800_000_000) as f64, k, 1e-10)?;
    let exceptional = coeff / (WATKINS_H * (SPLIT_2P8E9 - 1.0) / 2.0);
    let siegel_part = cor44 + bt + exceptional;

    let total_upper =
        (explicit_f64 + watkins_part + siegel_part + slack) * (1.0 + 1e-9) + 1e-12;
    Ok(TailEstimate {
        z,
        explicit_part,
        watkins_part,
        siegel_part,
        total_upper,
    })
}

/// A running-minimum record of L(1,(-ℓ/·))·loglog ℓ, with the degree
/// d = h·(ℓ-1)/2 in which Z/ℓ or Z/2ℓ first occurs.
#[derive(Debug, Clone)]
pub struct RatioRecord {
    pub ell: u64,
    pub d: u64,
    pub t_cm: u64,
    pub ratio: f64,
    pub l_value_product: f64,
}

/// Primes ℓ ≤ limit (ℓ ≡ 3 mod 4, ℓ > 3) where L(1)·loglog ℓ reaches a new
/// minimum; for each, T_CM at d = h·(ℓ-1)/2 and the Theorem 1.3 ratio.
pub fn record_search(limit: u64, cache: &ClassNumberCache) -> Result<Vec<RatioRecord>, BoundsError> {
    if limit > cache.covered_limit() {
        return Err(BoundsError::CutoffTooLarge {
            cutoff: limit,
            ceiling: cache.covered_limit(),
        });
    }
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for (ell, h) in cache.iter() {
        if ell <= 3 || ell > limit {
            continue;
        }
        let lv = l_value(ell, h)?.value * (ell as f64).ln().ln();
        if lv < best {
            best = lv;
            let d = (ell - 1) / 2 * h;
            debug_assert!(d % 2 == 1);
            let t_cm = odt::t_cm_on_demand(d)?;
            let df = d as f64;
            out.push(RatioRecord {
                ell,
                d,
                t_cm,
                ratio: t_cm as f64 / (df * df.ln().ln()).powf(2.0 / 3.0),
                l_value_product: lv,
            });
        }
    }
    Ok(out)
}
