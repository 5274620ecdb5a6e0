//! Independent high-precision oracles and helpers for the integration
//! suites. These deliberately avoid the crate's own evaluation paths: logs
//! come from the Mercator series, exponentials from the plain alternating
//! Taylor series, both with explicit bracketing.

#![allow(dead_code)]

use cfnorm::rational::{rat, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Lower/upper bracket around a real value.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub lo: Rational,
    pub hi: Rational,
}

impl Bracket {
    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn scale(&self, k: &Rational) -> Bracket {
        assert!(k.is_positive());
        Bracket {
            lo: &self.lo * k,
            hi: &self.hi * k,
        }
    }

    /// Division for positive brackets.
    pub fn div(&self, other: &Bracket) -> Bracket {
        assert!(other.lo.is_positive());
        Bracket {
            lo: &self.lo / &other.hi,
            hi: &self.hi / &other.lo,
        }
    }

    pub fn widen(&self, slack: &Rational) -> Bracket {
        Bracket {
            lo: &self.lo - slack,
            hi: &self.hi + slack,
        }
    }
}

fn pow10_inv(digits: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(10u32).pow(digits as u32))
}

/// `ln(1 + u)` for -1 < u < 1 by the Mercator series with bracketing.
pub fn oracle_ln_1p(u: &Rational, digits: usize) -> Bracket {
    assert!(u.abs() < Rational::one());
    let target = pow10_inv(digits + 2);
    let mut sum = Rational::zero();
    let mut power = u.clone();
    let mut j = 1u32;
    loop {
        let term = &power / Rational::from_integer(BigInt::from(j));
        sum += if j % 2 == 1 { term.clone() } else { -term.clone() };
        power *= u;
        j += 1;
        let next = power.abs() / Rational::from_integer(BigInt::from(j));
        // |remaining tail| <= next / (1 - |u|)
        let slack = &next / (Rational::one() - u.abs());
        if slack <= target {
            return Bracket {
                lo: &sum - &slack,
                hi: &sum + &slack,
            };
        }
    }
}

/// `ln 2 = -ln(1 - 1/2)`.
pub fn oracle_ln2(digits: usize) -> Bracket {
    let b = oracle_ln_1p(&rat(-1, 2), digits);
    Bracket { lo: -b.hi, hi: -b.lo }
}

/// `log2(x)` for x with `x/2^k` in (1/2, 3/2) for some integer k.
pub fn oracle_log2(x: &Rational, digits: usize) -> Bracket {
    assert!(x.is_positive());
    let two = Rational::from_integer(2.into());
    let mut k = 0i64;
    let mut y = x.clone();
    while y >= rat(3, 2) {
        y /= &two;
        k += 1;
    }
    while y <= rat(1, 2) {
        y *= &two;
        k -= 1;
    }
    let ln_y = oracle_ln_1p(&(&y - Rational::one()), digits + 2);
    let ln2 = oracle_ln2(digits + 2);
    let ratio = if ln_y.lo.is_negative() {
        // ln y in (-ln 2, 0]: divide the negated bracket and flip
        let neg = Bracket {
            lo: -ln_y.hi.clone(),
            hi: -ln_y.lo.clone(),
        };
        let q = neg.div(&ln2);
        Bracket { lo: -q.hi, hi: -q.lo }
    } else {
        ln_y.div(&ln2)
    };
    let k_rat = Rational::from_integer(BigInt::from(k));
    Bracket {
        lo: &k_rat + ratio.lo,
        hi: &k_rat + ratio.hi,
    }
}

/// `e^{-a}` for a >= 0 by the alternating Taylor series.
pub fn oracle_exp_neg(a: &Rational, digits: usize) -> Bracket {
    assert!(!a.is_negative());
    let target = pow10_inv(digits + 2);
    let mut sum = Rational::one();
    let mut term = Rational::one();
    let mut j = 1u32;
    let mut sign = -1i32;
    loop {
        term = term * a / Rational::from_integer(BigInt::from(j));
        sum += if sign > 0 { term.clone() } else { -term.clone() };
        j += 1;
        sign = -sign;
        // once terms decrease, consecutive partial sums bracket the value
        let next = &term * a / Rational::from_integer(BigInt::from(j));
        if Rational::from_integer(BigInt::from(j)) > a * rat(2, 1) && next <= target {
            return Bracket {
                lo: std::cmp::min(sum.clone(), &sum + if sign > 0 { next.clone() } else { -next.clone() }),
                hi: std::cmp::max(sum.clone(), &sum + if sign > 0 { next } else { -next }),
            };
        }
    }
}

/// `atan(1/k)` by the alternating series, bracketed by the next term.
pub fn oracle_atan_recip(k: u32, digits: usize) -> Bracket {
    let target = pow10_inv(digits + 2);
    let k2 = Rational::from_integer(BigInt::from(k) * BigInt::from(k));
    let mut power = rat(1, k as i64);
    let mut sum = Rational::zero();
    let mut odd = 1u64;
    let mut positive = true;
    loop {
        let term = &power / Rational::from_integer(BigInt::from(odd));
        sum += if positive { term.clone() } else { -term.clone() };
        odd += 2;
        positive = !positive;
        power /= &k2;
        let next = &power / Rational::from_integer(BigInt::from(odd));
        if next <= target {
            return Bracket {
                lo: &sum - &next,
                hi: &sum + &next,
            };
        }
    }
}

/// `pi = 4 (atan(1/2) + atan(1/3))`.
pub fn oracle_pi(digits: usize) -> Bracket {
    oracle_atan_recip(2, digits + 2)
        .add(&oracle_atan_recip(3, digits + 2))
        .scale(&rat(4, 1))
}

/// Greedy base-b digits of a rational in [0, 1).
pub fn greedy_digits(x: &Rational, base: u32, count: usize) -> Vec<u32> {
    use num_traits::ToPrimitive;
    let mut digits = Vec::with_capacity(count);
    let mut cur = x.clone();
    let b = Rational::from_integer(BigInt::from(base));
    for _ in 0..count {
        let scaled = cur * &b;
        let d = scaled.floor();
        digits.push(d.to_integer().to_u32().expect("digit below base"));
        cur = &scaled - d;
    }
    digits
}

/// Deterministic 64-bit generator (SplitMix64).
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}
