//! Rational interval enclosures for transcendental values.
//!
//! Every function here returns a pair of exact rationals that provably
//! bracket the true value. Series are summed exactly and truncated with an
//! explicit tail bound; arguments are first rounded outward to dyadic
//! rationals so that term sizes stay proportional to the working precision.
//! Callers that need a specific output width go through [`refine`], which
//! retries at doubled working precision, or [`decide_less`] /
//! [`certified_floor`] / [`certified_ceil`], which refine until the
//! comparison is decided or the precision ceiling is hit.

use crate::rational::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Largest working precision any adaptive loop will try.
pub const MAX_PRECISION_BITS: u32 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertifiedError {
    #[error("enclosure bounds are out of order")]
    Disordered,
    #[error("enclosure of width {width} exceeds 2^-{requested}")]
    TooWide { width: String, requested: u32 },
    #[error("requested precision {requested} exceeds the maximum {max}")]
    PrecisionTooHigh { requested: u32, max: u32 },
    #[error("comparison still undecided at {0} working bits")]
    Undecidable(u32),
    #[error("logarithm of a non-positive value")]
    LogDomain,
    #[error("division by an enclosure that touches zero")]
    DivByZero,
}

/// Interval known to contain a real value, with a width guarantee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedReal {
    lower: Rational,
    upper: Rational,
    precision_bits: u32,
}

impl CertifiedReal {
    pub fn new(lower: Rational, upper: Rational, precision_bits: u32) -> Result<Self, CertifiedError> {
        if lower > upper {
            return Err(CertifiedError::Disordered);
        }
        let width = &upper - &lower;
        if width > pow2_inv(precision_bits) {
            return Err(CertifiedError::TooWide {
                width: width.to_string(),
                requested: precision_bits,
            });
        }
        Ok(CertifiedReal {
            lower,
            upper,
            precision_bits,
        })
    }

    /// Zero-width enclosure of an exactly known value.
    pub fn exact(value: Rational, precision_bits: u32) -> Self {
        CertifiedReal {
            lower: value.clone(),
            upper: value,
            precision_bits,
        }
    }

    pub fn lower(&self) -> &Rational {
        &self.lower
    }

    pub fn upper(&self) -> &Rational {
        &self.upper
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lower + &self.upper) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lower <= value && value <= &self.upper
    }

    pub(crate) fn enc(&self) -> Enc {
        Enc {
            lo: self.lower.clone(),
            hi: self.upper.clone(),
        }
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            decimal_string(&self.lower, 12, RoundDir::Down),
            decimal_string(&self.upper, 12, RoundDir::Up)
        )
    }
}

/// `1 / 2^bits`.
pub(crate) fn pow2_inv(bits: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundDir {
    Down,
    Up,
}

/// Decimal rendering of a rational with outward rounding control.
pub fn decimal_string(x: &Rational, digits: usize, dir: RoundDir) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = x * Rational::from_integer(scale.clone());
    let n = match dir {
        RoundDir::Down => scaled.floor().to_integer(),
        RoundDir::Up => scaled.ceil().to_integer(),
    };
    let negative = n.is_negative();
    let mag = n.magnitude().to_string();
    let mag = if mag.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int_part, frac_part) = mag.split_at(mag.len() - digits);
    format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
}

/// Plain interval without a width promise; the working representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Enc {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enc {
    pub fn point(v: Rational) -> Self {
        Enc { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Enc) -> Enc {
        Enc {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Enc) -> Enc {
        Enc {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn scale(&self, k: &Rational) -> Enc {
        if k.is_negative() {
            Enc {
                lo: &self.hi * k,
                hi: &self.lo * k,
            }
        } else {
            Enc {
                lo: &self.lo * k,
                hi: &self.hi * k,
            }
        }
    }

    pub fn offset(&self, k: &Rational) -> Enc {
        Enc {
            lo: &self.lo + k,
            hi: &self.hi + k,
        }
    }

    pub fn mul(&self, other: &Enc) -> Enc {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().expect("nonempty").clone();
        let hi = candidates.iter().max().expect("nonempty").clone();
        Enc { lo, hi }
    }

    /// Reciprocal of an interval that does not touch zero.
    pub fn recip(&self) -> Result<Enc, CertifiedError> {
        if (self.lo.is_negative() || self.lo.is_zero()) && (!self.hi.is_negative() || self.hi.is_zero()) {
            return Err(CertifiedError::DivByZero);
        }
        Ok(Enc {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        })
    }

    pub fn div(&self, other: &Enc) -> Result<Enc, CertifiedError> {
        Ok(self.mul(&other.recip()?))
    }

    /// Enclosure of `|value - point|`.
    pub fn abs_distance_to(&self, point: &Rational) -> Enc {
        if &self.lo >= point {
            Enc {
                lo: &self.lo - point,
                hi: &self.hi - point,
            }
        } else if &self.hi <= point {
            Enc {
                lo: point - &self.hi,
                hi: point - &self.lo,
            }
        } else {
            let hi = std::cmp::max(&self.hi - point, point - &self.lo);
            Enc {
                lo: Rational::zero(),
                hi,
            }
        }
    }

    /// Outward rounding to denominators `2^bits`; keeps containment.
    pub fn dyadic(&self, bits: u32) -> Enc {
        Enc {
            lo: dyadic_below(&self.lo, bits),
            hi: dyadic_above(&self.hi, bits),
        }
    }
}

pub(crate) fn dyadic_below(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let n = (x * Rational::from_integer(scale.clone())).floor().to_integer();
    Rational::new(n, scale)
}

pub(crate) fn dyadic_above(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let n = (x * Rational::from_integer(scale.clone())).ceil().to_integer();
    Rational::new(n, scale)
}

/// `ln 2`, enclosed to roughly `work` bits.
pub(crate) fn ln2(work: u32) -> Enc {
    ln_on_one_two(&Rational::from_integer(2.into()), work)
}

/// `ln z` for exact rational `z` in (1, 2], via `2 atanh((z-1)/(z+1))`.
///
/// The reduced argument lies in [0, 1/3], so every series term is positive;
/// all intermediates are kept as outward-rounded dyadics of `f` fractional
/// bits, which keeps term sizes proportional to the working precision.
fn ln_on_one_two(z: &Rational, work: u32) -> Enc {
    let f = work + 10;
    debug_assert!(z > &Rational::one() && z <= &Rational::from_integer(2.into()));
    let r = (z - Rational::one()) / (z + Rational::one());
    let r_lo = dyadic_below(&r, f);
    let r_hi = dyadic_above(&r, f);
    let r2_lo = dyadic_below(&(&r_lo * &r_lo), f);
    let r2_hi = dyadic_above(&(&r_hi * &r_hi), f);
    // r <= 1/3 so r^2 < 1/8 even after rounding; the geometric tail factor
    // 1/(1 - r^2) is at most 8/7
    let tail_factor = Rational::new(8.into(), 7.into());
    let target = pow2_inv(work + 4);
    let mut pow_lo = r_lo;
    let mut pow_hi = r_hi;
    let mut sum_lo = Rational::zero();
    let mut sum_hi = Rational::zero();
    let mut odd = BigInt::one();
    loop {
        let odd_rat = Rational::from_integer(odd.clone());
        sum_lo = dyadic_below(&(&sum_lo + &pow_lo / &odd_rat), f);
        sum_hi = dyadic_above(&(&sum_hi + &pow_hi / &odd_rat), f);
        odd += 2;
        pow_lo = dyadic_below(&(&pow_lo * &r2_lo), f);
        pow_hi = dyadic_above(&(&pow_hi * &r2_hi), f);
        let tail = &pow_hi / Rational::from_integer(odd.clone()) * &tail_factor;
        if tail <= target {
            let two = Rational::from_integer(2.into());
            return Enc {
                lo: &sum_lo * &two,
                hi: (&sum_hi + &tail) * &two,
            };
        }
    }
}

/// Natural logarithm of a positive rational.
pub(crate) fn ln_rat(x: &Rational, work: u32) -> Result<Enc, CertifiedError> {
    if !x.is_positive() {
        return Err(CertifiedError::LogDomain);
    }
    if x.is_one() {
        return Ok(Enc::point(Rational::zero()));
    }
    // normalize to y = x / 2^k with y in (1, 2]
    let mut k: i64 = (x.numer().bits() as i64) - (x.denom().bits() as i64);
    let two = Rational::from_integer(2.into());
    let mut y = x / pow2_rat(k);
    while y > two {
        y /= &two;
        k += 1;
    }
    while y <= Rational::one() {
        y *= &two;
        k -= 1;
    }
    let guard = 8 + 64 - (k.unsigned_abs().leading_zeros());
    let inner_work = work + guard;
    let ln_y = ln_on_one_two(&y, inner_work);
    if k == 0 {
        return Ok(ln_y);
    }
    let k_rat = Rational::from_integer(BigInt::from(k));
    Ok(ln_y.add(&ln2(inner_work).scale(&k_rat)))
}

fn pow2_rat(k: i64) -> Rational {
    if k >= 0 {
        Rational::from_integer(BigInt::one() << (k as u64))
    } else {
        Rational::new(BigInt::one(), BigInt::one() << ((-k) as u64))
    }
}

/// Monotone image of an interval under `ln`.
pub(crate) fn ln_enc(e: &Enc, work: u32) -> Result<Enc, CertifiedError> {
    let lo = ln_rat(&e.lo, work)?;
    let hi = ln_rat(&e.hi, work)?;
    Ok(Enc {
        lo: lo.lo,
        hi: hi.hi,
    })
}

/// `exp` of an exact rational.
pub(crate) fn exp_rat(x: &Rational, work: u32) -> Enc {
    if x.is_zero() {
        return Enc::point(Rational::one());
    }
    if x.is_negative() {
        let pos = exp_rat(&-x.clone(), work + 4);
        return pos.recip().expect("exp is positive");
    }
    // halve into [0, 1/2], Taylor, then square back up; each squaring at
    // most doubles the relative error, so spend 2 extra bits per halving
    let mut halvings = 0u32;
    let half = Rational::new(1.into(), 2.into());
    let mut v = x.clone();
    while v > half {
        v /= Rational::from_integer(2.into());
        halvings += 1;
    }
    let f = work + 2 * halvings + 12;
    let mut enc = exp_taylor_small(&v, f);
    for _ in 0..halvings {
        // values stay >= 1, so f-bit dyadic rounding keeps the relative
        // error below 2^-f per squaring
        enc = Enc {
            lo: dyadic_below(&(&enc.lo * &enc.lo), f),
            hi: dyadic_above(&(&enc.hi * &enc.hi), f),
        };
    }
    enc
}

/// Taylor series on [0, 1/2] over f-bit dyadic enclosures.
fn exp_taylor_small(v: &Rational, f: u32) -> Enc {
    debug_assert!(!v.is_negative() && v <= &Rational::new(1.into(), 2.into()));
    let v_lo = dyadic_below(v, f);
    let v_hi = dyadic_above(v, f);
    let target = pow2_inv(f.saturating_sub(6));
    let mut sum_lo = Rational::one();
    let mut sum_hi = Rational::one();
    let mut term_lo = Rational::one();
    let mut term_hi = Rational::one();
    let mut j = BigInt::one();
    loop {
        let j_rat = Rational::from_integer(j.clone());
        term_lo = dyadic_below(&(&term_lo * &v_lo / &j_rat), f);
        term_hi = dyadic_above(&(&term_hi * &v_hi / &j_rat), f);
        sum_lo = dyadic_below(&(&sum_lo + &term_lo), f);
        sum_hi = dyadic_above(&(&sum_hi + &term_hi), f);
        j += 1;
        // remaining tail <= term * (v/(j+1)) / (1 - v) <= 2 * term * v
        let bound = &term_hi * &v_hi * Rational::from_integer(2.into());
        if bound <= target {
            return Enc {
                lo: sum_lo,
                hi: sum_hi + bound,
            };
        }
    }
}

/// Monotone image of an interval under `exp`.
pub(crate) fn exp_enc(e: &Enc, work: u32) -> Enc {
    let lo = exp_rat(&e.lo, work);
    let hi = exp_rat(&e.hi, work);
    Enc {
        lo: lo.lo,
        hi: hi.hi,
    }
}

/// `pi` via Machin's formula `16 atan(1/5) - 4 atan(1/239)`.
pub(crate) fn pi(work: u32) -> Enc {
    let a5 = atan_recip(5, work + 6);
    let a239 = atan_recip(239, work + 6);
    a5.scale(&Rational::from_integer(16.into()))
        .sub(&a239.scale(&Rational::from_integer(4.into())))
}

/// `atan(1/k)` by the alternating series; tail bounded by the next term.
fn atan_recip(k: u32, work: u32) -> Enc {
    let target = pow2_inv(work + 4);
    let k2 = Rational::from_integer(BigInt::from(k) * BigInt::from(k));
    let mut term = Rational::new(1.into(), k.into());
    let mut sum = Rational::zero();
    let mut odd = BigInt::one();
    let mut sign = true;
    loop {
        sum += if sign { term.clone() } else { -term.clone() } / Rational::from_integer(odd.clone());
        odd += 2;
        term /= &k2;
        sign = !sign;
        let bound = &term / Rational::from_integer(odd.clone());
        if bound <= target {
            return Enc {
                lo: &sum - &bound,
                hi: &sum + &bound,
            };
        }
    }
}

/// Retries `f` at doubled working precision until the enclosure is narrower
/// than `2^-target_bits`, then rounds it outward to dyadics.
pub(crate) fn refine<F>(f: F, target_bits: u32) -> Result<CertifiedReal, CertifiedError>
where
    F: Fn(u32) -> Result<Enc, CertifiedError>,
{
    if target_bits > MAX_PRECISION_BITS {
        return Err(CertifiedError::PrecisionTooHigh {
            requested: target_bits,
            max: MAX_PRECISION_BITS,
        });
    }
    let mut work = target_bits.saturating_add(12);
    loop {
        let e = f(work)?;
        if e.width() <= pow2_inv(target_bits + 1) {
            let rounded = e.dyadic(target_bits + 3);
            return CertifiedReal::new(rounded.lo, rounded.hi, target_bits);
        }
        if work >= MAX_PRECISION_BITS {
            return Err(CertifiedError::Undecidable(work));
        }
        work = (work * 2).min(MAX_PRECISION_BITS);
    }
}

/// Decides `value < threshold` for the value enclosed by `f`.
pub(crate) fn decide_less<F>(f: F, threshold: &Rational) -> Result<bool, CertifiedError>
where
    F: Fn(u32) -> Result<Enc, CertifiedError>,
{
    let mut work = 32u32;
    loop {
        let e = f(work)?;
        if &e.hi < threshold {
            return Ok(true);
        }
        if &e.lo >= threshold {
            return Ok(false);
        }
        if work >= MAX_PRECISION_BITS {
            return Err(CertifiedError::Undecidable(work));
        }
        work = (work * 2).min(MAX_PRECISION_BITS);
    }
}

/// Floor of the value enclosed by `f`, refined until unambiguous.
pub(crate) fn certified_floor<F>(f: F) -> Result<BigInt, CertifiedError>
where
    F: Fn(u32) -> Result<Enc, CertifiedError>,
{
    let mut work = 32u32;
    loop {
        let e = f(work)?;
        let lo = e.lo.floor().to_integer();
        let hi = e.hi.floor().to_integer();
        if lo == hi {
            return Ok(lo);
        }
        if work >= MAX_PRECISION_BITS {
            return Err(CertifiedError::Undecidable(work));
        }
        work = (work * 2).min(MAX_PRECISION_BITS);
    }
}

/// Ceiling of the value enclosed by `f`, refined until unambiguous.
pub(crate) fn certified_ceil<F>(f: F) -> Result<BigInt, CertifiedError>
where
    F: Fn(u32) -> Result<Enc, CertifiedError>,
{
    let mut work = 32u32;
    loop {
        let e = f(work)?;
        let lo = e.lo.ceil().to_integer();
        let hi = e.hi.ceil().to_integer();
        if lo == hi {
            return Ok(lo);
        }
        if work >= MAX_PRECISION_BITS {
            return Err(CertifiedError::Undecidable(work));
        }
        work = (work * 2).min(MAX_PRECISION_BITS);
    }
}
