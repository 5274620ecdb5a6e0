//! Exact rationals, finite continued-fraction words, and the shift maps.
//!
//! A finite word `[a_1, ..., a_n]` of positive integers stands for the value
//! `1/(a_1 + 1/(a_2 + ...))` in (0, 1]. The empty word stands for the whole
//! unit interval and has no value. Rationals in (0, 1] have exactly one
//! canonical word: the last digit is at least 2 unless the word is `[1]`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Exact fraction with arbitrary-precision parts, always in lowest terms.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfError {
    #[error("continued fraction digits must be positive (digit {position} is 0)")]
    ZeroDigit { position: usize },
    #[error("empty continued fraction word has no value")]
    EmptyWord,
    #[error("value {value} lies outside (0, 1]")]
    OutOfUnitRange { value: String },
    #[error("partial quotient does not fit in 64 bits")]
    DigitTooLarge,
    #[error("word does not start with digit 1")]
    MissingLeadingOne,
    #[error("word is too short to drop its leading digit")]
    TooShort,
    #[error("cannot parse {input:?} as a rational")]
    ParseRational { input: String },
    #[error("cannot parse {input:?} as a digit word")]
    ParseWord { input: String },
}

/// Builds `num/den` from machine integers. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn rational_from_str(s: &str) -> Result<Rational, CfError> {
    let err = || CfError::ParseRational {
        input: s.to_string(),
    };
    let mut parts = s.splitn(2, '/');
    let num: BigInt = parts.next().ok_or_else(err)?.trim().parse().map_err(|_| err())?;
    match parts.next() {
        None => Ok(Rational::from_integer(num)),
        Some(d) => {
            let den: BigInt = d.trim().parse().map_err(|_| err())?;
            if den.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Finite word of positive partial quotients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CfWord {
    digits: Vec<u64>,
}

impl CfWord {
    pub fn new(digits: Vec<u64>) -> Result<Self, CfError> {
        if let Some(position) = digits.iter().position(|&d| d == 0) {
            return Err(CfError::ZeroDigit { position });
        }
        Ok(CfWord { digits })
    }

    pub fn empty() -> Self {
        CfWord { digits: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn first(&self) -> Option<u64> {
        self.digits.first().copied()
    }

    pub fn last(&self) -> Option<u64> {
        self.digits.last().copied()
    }

    /// Word with `block` appended.
    pub fn concat(&self, block: &CfWord) -> CfWord {
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&block.digits);
        CfWord { digits }
    }

    /// Word with the last digit incremented; `None` for the empty word.
    pub fn with_last_incremented(&self) -> Option<CfWord> {
        if self.digits.is_empty() {
            return None;
        }
        let mut digits = self.digits.clone();
        *digits.last_mut().expect("nonempty") += 1;
        Some(CfWord { digits })
    }

    /// Canonical words never end in 1, except the single-digit word `[1]`.
    pub fn is_canonical(&self) -> bool {
        self.digits.len() <= 1 || *self.digits.last().expect("nonempty") >= 2
    }

    /// Rewrites `[.., a, 1]` as `[.., a+1]`; identity on canonical words.
    pub fn canonicalize(mut self) -> CfWord {
        if self.digits.len() >= 2 && *self.digits.last().expect("nonempty") == 1 {
            self.digits.pop();
            *self.digits.last_mut().expect("nonempty") += 1;
        }
        self
    }

    /// Parses digits separated by commas or whitespace, e.g. `"1,2,1"`.
    pub fn parse(s: &str) -> Result<Self, CfError> {
        let err = || CfError::ParseWord {
            input: s.to_string(),
        };
        let mut digits = Vec::new();
        for tok in s.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            digits.push(tok.parse::<u64>().map_err(|_| err())?);
        }
        CfWord::new(digits)
    }
}

impl fmt::Display for CfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

/// One row of the convergent recurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentPair {
    pub p: BigInt,
    pub q: BigInt,
    pub index: i64,
}

/// All convergents of `word`, indices -1 through n.
///
/// Seeds are `p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`; after that
/// `p_n = a_n p_{n-1} + p_{n-2}` and likewise for `q`.
pub fn convergents(word: &CfWord) -> Vec<ConvergentPair> {
    let mut out = Vec::with_capacity(word.len() + 2);
    out.push(ConvergentPair {
        p: BigInt::one(),
        q: BigInt::zero(),
        index: -1,
    });
    out.push(ConvergentPair {
        p: BigInt::zero(),
        q: BigInt::one(),
        index: 0,
    });
    for (i, &a) in word.digits().iter().enumerate() {
        let a = BigInt::from(a);
        let n = out.len();
        let p = &a * &out[n - 1].p + &out[n - 2].p;
        let q = &a * &out[n - 1].q + &out[n - 2].q;
        out.push(ConvergentPair {
            p,
            q,
            index: (i + 1) as i64,
        });
    }
    out
}

/// The last two convergents `((p_{n-1}, q_{n-1}), (p_n, q_n))`.
pub fn tail_convergents(word: &CfWord) -> (ConvergentPair, ConvergentPair) {
    let all = convergents(word);
    let n = all.len();
    (all[n - 2].clone(), all[n - 1].clone())
}

/// Value `p_n / q_n` of a nonempty word.
pub fn cf_to_rational(word: &CfWord) -> Result<Rational, CfError> {
    if word.is_empty() {
        return Err(CfError::EmptyWord);
    }
    let (_, last) = tail_convergents(word);
    Ok(Rational::new(last.p, last.q))
}

/// Canonical expansion of a rational in (0, 1].
pub fn rational_to_cf(x: &Rational) -> Result<CfWord, CfError> {
    if !x.is_positive() || x > &Rational::one() {
        return Err(CfError::OutOfUnitRange {
            value: x.to_string(),
        });
    }
    let mut digits = Vec::new();
    let mut cur = x.clone();
    loop {
        let recip = cur.recip();
        let a = recip.floor().to_integer();
        digits.push(a.to_u64().ok_or(CfError::DigitTooLarge)?);
        let rem = recip - Rational::from_integer(a);
        if rem.is_zero() {
            break;
        }
        cur = rem;
    }
    CfWord::new(digits)
}

/// Gauss map `T(x) = 1/x - floor(1/x)`, with `T(0) = 0`.
pub fn gauss_map(x: &Rational) -> Rational {
    assert!(
        !x.is_negative() && x <= &Rational::one(),
        "gauss_map input must lie in [0, 1]"
    );
    if x.is_zero() {
        return Rational::zero();
    }
    let recip = x.recip();
    &recip - recip.floor()
}

/// Base-b shift `S_b(x) = b x - floor(b x)`.
pub fn bary_shift(x: &Rational, base: u32) -> Rational {
    assert!(base >= 2, "base must be at least 2");
    assert!(
        !x.is_negative() && x <= &Rational::one(),
        "bary_shift input must lie in [0, 1]"
    );
    let scaled = x * Rational::from_integer(BigInt::from(base));
    &scaled - scaled.floor()
}

/// `[1, a_2, .., a_n] -> [a_2, .., a_n]`; the value maps as `u -> 1/u - 1`.
pub fn drop_leading_one(word: &CfWord) -> Result<CfWord, CfError> {
    match word.first() {
        None => Err(CfError::TooShort),
        Some(d) if d != 1 => Err(CfError::MissingLeadingOne),
        Some(_) if word.len() < 2 => Err(CfError::TooShort),
        Some(_) => CfWord::new(word.digits()[1..].to_vec()),
    }
}

/// `[a_1, .., a_n] -> [1, a_1, .., a_n]`; inverse of [`drop_leading_one`].
pub fn prepend_one(word: &CfWord) -> CfWord {
    let mut digits = Vec::with_capacity(word.len() + 1);
    digits.push(1);
    digits.extend_from_slice(word.digits());
    CfWord { digits }
}
