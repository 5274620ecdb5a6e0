//! Certified evaluation of the Gauss measure, Levy's constant, and the
//! closed-form bounds and schedules used by the refinement search.
//!
//! Every returned [`CertifiedReal`] brackets the true value; comparisons that
//! cannot be decided at the precision ceiling surface as errors rather than
//! guesses.

use crate::certified::{
    certified_ceil, certified_floor, exp_enc, exp_rat, ln2, ln_enc, ln_rat, pi, refine,
    CertifiedError, CertifiedReal, Enc,
};
use crate::cylinder::{cf_cylinder, Interval};
use crate::rational::{CfWord, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Output precision used by the bound calculators without an explicit knob.
pub const DEFAULT_PRECISION_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Certified(#[from] CertifiedError),
    #[error("interval must lie inside [0, 1]")]
    NotInUnit,
    #[error("delta must lie in (0, 1]")]
    DeltaOutOfRange,
    #[error("delta {delta} outside the admissible range [6/{n}, 1/{base}]")]
    DeltaOutsideBernsteinRange { delta: String, n: u64, base: u32 },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("base must be at least 2")]
    BadBase,
    #[error("step index must be at least 1")]
    BadStep,
    #[error("schedule value does not fit the machine word")]
    ScheduleOverflow,
    #[error("continued fraction word must be nonempty")]
    EmptyWord,
}

/// The existential constants of the subinterval-abundance bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundConstants {
    pub k: u32,
    pub c: u32,
    pub n1: u32,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { k: 1, c: 1, n1: 10 }
    }
}

/// Per-step parameters: largest base `t`, discrepancy budget `epsilon = 1/t`,
/// and relative order `n0 = floor(log s) + n_start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub s: BigInt,
    pub t: u32,
    pub epsilon: Rational,
    pub n0: u64,
    pub n_start: u32,
}

fn int_rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `log2` of an exact power of two, if the ratio is one.
fn exact_log2(ratio: &Rational) -> Option<BigInt> {
    let num = ratio.numer();
    let den = ratio.denom();
    let pow2 = |n: &BigInt| n.is_positive() && n.magnitude().count_ones() == 1;
    if den.is_one() && pow2(num) {
        return Some(BigInt::from(num.bits() - 1));
    }
    if num.is_one() && pow2(den) {
        return Some(-BigInt::from(den.bits() - 1));
    }
    None
}

/// Gauss measure `mu((l, r)) = log2((1 + r) / (1 + l))`.
pub fn gauss_measure(iv: &Interval, precision_bits: u32) -> Result<CertifiedReal, MeasureError> {
    if !iv.is_in_unit() {
        return Err(MeasureError::NotInUnit);
    }
    let ratio = (Rational::one() + iv.right()) / (Rational::one() + iv.left());
    if let Some(k) = exact_log2(&ratio) {
        return Ok(CertifiedReal::exact(Rational::from_integer(k), precision_bits));
    }
    Ok(refine(
        |w| ln_rat(&ratio, w)?.div(&ln2(w)),
        precision_bits,
    )?)
}

/// Gauss measure of the cylinder of a nonempty word.
pub fn gauss_measure_word(v: &CfWord, precision_bits: u32) -> Result<CertifiedReal, MeasureError> {
    if v.is_empty() {
        return Err(MeasureError::EmptyWord);
    }
    gauss_measure(cf_cylinder(v).interval(), precision_bits)
}

/// Levy's constant `pi^2 / (12 log 2)` as a working enclosure.
pub(crate) fn levy_enc(work: u32) -> Result<Enc, CertifiedError> {
    let p = pi(work);
    p.mul(&p).div(&ln2(work).scale(&int_rat(12)))
}

/// Levy's constant `pi^2 / (12 log 2) = 1.18656911...`.
pub fn levy_constant(precision_bits: u32) -> Result<CertifiedReal, MeasureError> {
    Ok(refine(levy_enc, precision_bits)?)
}

/// `M(delta, k) = ceil(k - log(delta^2 / (2 log 2)))`.
pub fn deviation_m(delta: &Rational, k: u32) -> Result<BigInt, MeasureError> {
    if !delta.is_positive() || delta > &Rational::one() {
        return Err(MeasureError::DeltaOutOfRange);
    }
    let m = certified_ceil(|w| {
        let ln_delta = ln_rat(delta, w)?;
        let ln_2ln2 = ln_enc(&ln2(w).scale(&int_rat(2)), w)?;
        Ok(ln_delta
            .scale(&int_rat(-2))
            .add(&ln_2ln2)
            .offset(&int_rat(k as i64)))
    })?;
    Ok(m)
}

/// Large-deviation bound `6 M e^{-delta^2 n / (2M)}` with `M = M(delta, k)`.
pub fn kpw_bound(delta: &Rational, n: u64, k: u32) -> Result<CertifiedReal, MeasureError> {
    kpw_bound_at(delta, n, k, DEFAULT_PRECISION_BITS)
}

pub fn kpw_bound_at(
    delta: &Rational,
    n: u64,
    k: u32,
    precision_bits: u32,
) -> Result<CertifiedReal, MeasureError> {
    if !delta.is_positive() || delta > &Rational::one() {
        return Err(MeasureError::DeltaOutOfRange);
    }
    if n == 0 {
        return Err(MeasureError::ZeroN);
    }
    let m = deviation_m(delta, k)?;
    let m_rat = Rational::from_integer(m);
    let exponent = -(delta * delta * int_rat(n as i64)) / (&m_rat * int_rat(2));
    let factor = &m_rat * int_rat(6);
    Ok(refine(
        move |w| Ok(exp_rat(&exponent, w).scale(&factor)),
        precision_bits,
    )?)
}

/// `2 b^{n+1} e^{-b delta^2 n / 6}` without the delta-window precondition.
pub fn bernstein_formula_at(
    base: u32,
    delta: &Rational,
    n: u64,
    precision_bits: u32,
) -> Result<CertifiedReal, MeasureError> {
    if base < 2 {
        return Err(MeasureError::BadBase);
    }
    if n == 0 {
        return Err(MeasureError::ZeroN);
    }
    let factor = Rational::from_integer(BigInt::from(base).pow(n as u32 + 1) * BigInt::from(2));
    let exponent = -(int_rat(base as i64) * delta * delta * int_rat(n as i64)) / int_rat(6);
    Ok(refine(
        move |w| Ok(exp_rat(&exponent, w).scale(&factor)),
        precision_bits,
    )?)
}

/// Bad-block mass bound `2 b^{n+1} e^{-b delta^2 n / 6}` for
/// `6/n <= delta <= 1/b`.
pub fn bernstein_bound(base: u32, delta: &Rational, n: u64) -> Result<CertifiedReal, MeasureError> {
    if base < 2 {
        return Err(MeasureError::BadBase);
    }
    if n == 0 {
        return Err(MeasureError::ZeroN);
    }
    let low = Rational::new(6.into(), BigInt::from(n));
    let high = Rational::new(1.into(), BigInt::from(base));
    if delta < &low || delta > &high {
        return Err(MeasureError::DeltaOutsideBernsteinRange {
            delta: delta.to_string(),
            n,
            base,
        });
    }
    bernstein_formula_at(base, delta, n, DEFAULT_PRECISION_BITS)
}

/// `A(b) = 384 e^{4C} b^2 e^{b eps^2 (C / (3 log b) + 1/2)}`.
pub fn a_of_b(base: u32, epsilon: &Rational, c: u32) -> Result<CertifiedReal, MeasureError> {
    a_of_b_at(base, epsilon, c, DEFAULT_PRECISION_BITS)
}

pub fn a_of_b_at(
    base: u32,
    epsilon: &Rational,
    c: u32,
    precision_bits: u32,
) -> Result<CertifiedReal, MeasureError> {
    if base < 2 {
        return Err(MeasureError::BadBase);
    }
    let front = int_rat(384) * int_rat((base as i64) * (base as i64));
    let b_eps2 = int_rat(base as i64) * epsilon * epsilon;
    let c_rat = int_rat(c as i64);
    Ok(refine(
        move |w| {
            let e4c = exp_rat(&(&c_rat * int_rat(4)), w);
            let lnb = ln_rat(&int_rat(base as i64), w)?;
            let inner = lnb
                .scale(&int_rat(3))
                .recip()?
                .scale(&c_rat)
                .offset(&Rational::new(1.into(), 2.into()));
            let tail = exp_enc(&inner.scale(&b_eps2), w);
            Ok(e4c.mul(&tail).scale(&front))
        },
        precision_bits,
    )?)
}

/// Largest integer `m >= 0` with `m^5 <= x`; `x` must be nonnegative.
fn fifth_root_floor(x: &Rational) -> BigInt {
    debug_assert!(!x.is_negative());
    let mut m = BigInt::zero();
    loop {
        let next: BigInt = &m + BigInt::one();
        if Rational::from_integer(next.pow(5)) <= *x {
            m = next;
        } else {
            return m;
        }
    }
}

/// Step parameters `t(s) = max(2, floor((log s)^(1/5)))`, `epsilon = 1/t`,
/// `n0 = floor(log s) + n_start`.
pub fn schedule(s: &BigInt, n_start: u32) -> Result<Schedule, MeasureError> {
    if s < &BigInt::one() {
        return Err(MeasureError::BadStep);
    }
    let (t, n0) = if s.is_one() {
        (2u32, n_start as u64)
    } else {
        let s_rat = Rational::from_integer(s.clone());
        // floor((log s)^(1/5)) is unambiguous once the enclosure of log s
        // separates from the nearest fifth power
        let mut work = 32u32;
        let t_raw = loop {
            let e = ln_rat(&s_rat, work)?;
            let lo_root = fifth_root_floor(&e.lo);
            let next_root: BigInt = &lo_root + BigInt::one();
            let next_pow = Rational::from_integer(next_root.pow(5));
            if next_pow > e.hi {
                break lo_root;
            }
            if work >= crate::certified::MAX_PRECISION_BITS {
                return Err(MeasureError::Certified(CertifiedError::Undecidable(work)));
            }
            work = (work * 2).min(crate::certified::MAX_PRECISION_BITS);
        };
        let t = t_raw.to_u32().ok_or(MeasureError::ScheduleOverflow)?.max(2);
        let floor_log = certified_floor(|w| ln_rat(&s_rat, w))?
            .to_u64()
            .ok_or(MeasureError::ScheduleOverflow)?;
        (t, floor_log + n_start as u64)
    };
    Ok(Schedule {
        s: s.clone(),
        t,
        epsilon: Rational::new(1.into(), BigInt::from(t)),
        n0,
        n_start,
    })
}

/// Certified bounds `[2nL/log b - 2C/log b - 3, 2nL/log b + 2C/log b + 3]`
/// for the number of base-b digits added by a relative-order-n refinement.
pub fn nb_window(
    n: u64,
    base: u32,
    c: u32,
    precision_bits: u32,
) -> Result<(CertifiedReal, CertifiedReal), MeasureError> {
    if base < 2 {
        return Err(MeasureError::BadBase);
    }
    if n == 0 {
        return Err(MeasureError::ZeroN);
    }
    let two_n = int_rat(2 * n as i64);
    let two_c = int_rat(2 * c as i64);
    let side = |sign: i64| {
        let two_n = two_n.clone();
        let two_c = two_c.clone();
        move |w: u32| -> Result<Enc, CertifiedError> {
            let lev = levy_enc(w)?;
            let lnb = ln_rat(&int_rat(base as i64), w)?;
            let num = lev.scale(&two_n).offset(&(&two_c * int_rat(sign)));
            num.div(&lnb).map(|e| e.offset(&int_rat(3 * sign)))
        }
    };
    let lower = refine(side(-1), precision_bits)?;
    let upper = refine(side(1), precision_bits)?;
    Ok((lower, upper))
}

/// Certified relative-length window `[e^{-2nL-2C}/4, 2 e^{-2nL+2C}]` for
/// subcylinders of relative order n.
pub fn relative_length_window(
    n: u64,
    c: u32,
    precision_bits: u32,
) -> Result<(CertifiedReal, CertifiedReal), MeasureError> {
    if n == 0 {
        return Err(MeasureError::ZeroN);
    }
    let two_n = int_rat(2 * n as i64);
    let two_c = int_rat(2 * c as i64);
    let exponent = |sign: i64| {
        let two_n = two_n.clone();
        let two_c = two_c.clone();
        move |w: u32| -> Result<Enc, CertifiedError> {
            let lev = levy_enc(w)?;
            Ok(exp_enc(
                &lev.scale(&-two_n.clone()).offset(&(&two_c * int_rat(sign))),
                w,
            ))
        }
    };
    let lower = refine(
        {
            let f = exponent(-1);
            move |w| Ok(f(w)?.scale(&Rational::new(1.into(), 4.into())))
        },
        precision_bits,
    )?;
    let upper = refine(
        {
            let f = exponent(1);
            move |w| Ok(f(w)?.scale(&int_rat(2)))
        },
        precision_bits,
    )?;
    Ok((lower, upper))
}
