//! Pattern-frequency discrepancies for the two digit systems.
//!
//! For a cf word the discrepancy of a pattern `v` over the first `n` digits
//! is `|count/n - mu(I_v)|`, where only windows lying fully inside the first
//! `n` digits count. The base-b discrepancy is the exact maximum deviation of
//! single-digit frequencies from `1/b`. The concatenation checks evaluate,
//! on concrete words, the hypotheses and conclusions of the standard bounds
//! for the discrepancy of `wu`, `vu`, and `uv` in terms of the parts.

use crate::certified::{CertifiedError, CertifiedReal};
use crate::measures::{gauss_measure_word, MeasureError};
use crate::rational::{CfWord, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiscrepancyError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Certified(#[from] CertifiedError),
    #[error("word must be nonempty")]
    EmptyWord,
    #[error("pattern must be nonempty")]
    EmptyPattern,
    #[error("digit {digit} is not a base-{base} digit")]
    DigitOutOfRange { digit: u32, base: u32 },
    #[error("epsilon must lie in (0, 1)")]
    BadEpsilon,
}

/// Certified discrepancy of one cf pattern in a digit prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CfDiscrepancyResult {
    pub pattern: CfWord,
    pub prefix_length: usize,
    pub occurrence_count: usize,
    pub value: CertifiedReal,
}

/// Exact base-b simple discrepancy with per-digit deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct BaryDiscrepancyResult {
    pub base: u32,
    pub prefix_length: usize,
    pub per_digit: BTreeMap<u32, Rational>,
    pub value: Rational,
}

/// Occurrences of `pattern` in `word` counting only fully contained windows.
pub fn count_occurrences(word: &[u64], pattern: &[u64]) -> usize {
    if pattern.is_empty() || pattern.len() > word.len() {
        return 0;
    }
    word.windows(pattern.len()).filter(|w| *w == pattern).count()
}

/// `|count/n - mu(I_v)|` over the first `n = |w|` digits.
pub fn cf_discrepancy(
    w: &CfWord,
    v: &CfWord,
    precision_bits: u32,
) -> Result<CfDiscrepancyResult, DiscrepancyError> {
    cf_discrepancy_prefix(w, v, w.len(), precision_bits)
}

/// Same, over the first `n` digits of `w` only.
pub fn cf_discrepancy_prefix(
    w: &CfWord,
    v: &CfWord,
    n: usize,
    precision_bits: u32,
) -> Result<CfDiscrepancyResult, DiscrepancyError> {
    if w.is_empty() || n == 0 || n > w.len() {
        return Err(DiscrepancyError::EmptyWord);
    }
    if v.is_empty() {
        return Err(DiscrepancyError::EmptyPattern);
    }
    let count = count_occurrences(&w.digits()[..n], v.digits());
    let frequency = Rational::new(BigInt::from(count), BigInt::from(n));
    let mu = gauss_measure_word(v, precision_bits + 2)?;
    let enc = mu.enc().abs_distance_to(&frequency);
    let value = CertifiedReal::new(enc.lo, enc.hi, precision_bits)?;
    Ok(CfDiscrepancyResult {
        pattern: v.clone(),
        prefix_length: n,
        occurrence_count: count,
        value,
    })
}

/// Exact max over digits of `|count_v/n - 1/b|`.
pub fn bary_discrepancy(word: &[u32], base: u32) -> Result<BaryDiscrepancyResult, DiscrepancyError> {
    assert!(base >= 2, "base must be at least 2");
    if word.is_empty() {
        return Err(DiscrepancyError::EmptyWord);
    }
    if let Some(&digit) = word.iter().find(|&&d| d >= base) {
        return Err(DiscrepancyError::DigitOutOfRange { digit, base });
    }
    let n = word.len();
    let target = Rational::new(BigInt::one(), BigInt::from(base));
    let mut counts = vec![0usize; base as usize];
    for &d in word {
        counts[d as usize] += 1;
    }
    let mut per_digit = BTreeMap::new();
    let mut value = Rational::zero();
    for (digit, &count) in counts.iter().enumerate() {
        let dev = (Rational::new(BigInt::from(count), BigInt::from(n)) - &target).abs();
        if dev > value {
            value = dev.clone();
        }
        per_digit.insert(digit as u32, dev);
    }
    Ok(BaryDiscrepancyResult {
        base,
        prefix_length: n,
        per_digit,
        value,
    })
}

/// Verdict on one implication of a concatenation bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcatItem {
    pub label: &'static str,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    pub implication_holds: bool,
}

impl ConcatItem {
    fn new(label: &'static str, hypothesis: bool, conclusion: bool) -> Self {
        ConcatItem {
            label,
            hypothesis_holds: hypothesis,
            conclusion_holds: conclusion,
            implication_holds: !hypothesis || conclusion,
        }
    }
}

/// Report over the three items of a concatenation bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcatReport {
    pub items: Vec<ConcatItem>,
}

impl ConcatReport {
    pub fn all_implications_hold(&self) -> bool {
        self.items.iter().all(|i| i.implication_holds)
    }
}

/// Certified strict comparison of a cf discrepancy against a threshold.
///
/// Decides `|count/n - mu(I_v)| < threshold` by refining the measure
/// enclosure; errors only if the comparison is undecidable at the precision
/// ceiling.
pub fn cf_discrepancy_below(
    w: &CfWord,
    v: &CfWord,
    n: usize,
    threshold: &Rational,
) -> Result<bool, DiscrepancyError> {
    if threshold <= &Rational::zero() {
        // a nonnegative quantity is never strictly below a nonpositive bound
        return Ok(false);
    }
    if w.is_empty() || n == 0 || n > w.len() {
        return Err(DiscrepancyError::EmptyWord);
    }
    if v.is_empty() {
        return Err(DiscrepancyError::EmptyPattern);
    }
    let count = count_occurrences(&w.digits()[..n], v.digits());
    let frequency = Rational::new(BigInt::from(count), BigInt::from(n));
    let mu_word = v.clone();
    Ok(crate::certified::decide_less(
        move |work| {
            let mu = gauss_measure_word(&mu_word, work)
                .map_err(|_| CertifiedError::Undecidable(work))?;
            Ok(mu.enc().abs_distance_to(&frequency))
        },
        threshold,
    )?)
}

/// Evaluates the three concatenation implications for cf words.
///
/// With `n = |w|`, `s = |u|`, `k = |v|`:
/// 1. `D_v(w) < eps` and `D_v(u) < eps - (k-1)/s` imply `D_v(wu) < eps`;
/// 2. `D_v(w) < eps` and `s/n < eps` imply
///    (a) `D_v over n+l digits of wu < 2 eps` for every `1 <= l <= s`, and
///    (b) `D_v(uw) < 2 eps`.
pub fn check_cf_concat(
    w: &CfWord,
    u: &CfWord,
    v: &CfWord,
    epsilon: &Rational,
) -> Result<ConcatReport, DiscrepancyError> {
    if !epsilon.is_positive() || epsilon >= &Rational::one() {
        return Err(DiscrepancyError::BadEpsilon);
    }
    if w.is_empty() {
        return Err(DiscrepancyError::EmptyWord);
    }
    if v.is_empty() {
        return Err(DiscrepancyError::EmptyPattern);
    }
    let n = w.len();
    let s = u.len();
    let k = v.len();
    let wu = w.concat(u);
    let uw = u.concat(w);
    let two_eps = epsilon * Rational::from_integer(2.into());

    let d_w_below = cf_discrepancy_below(w, v, n, epsilon)?;

    // item 1
    let hyp1 = if s == 0 {
        false
    } else {
        let thr = epsilon - Rational::new(BigInt::from(k as i64 - 1), BigInt::from(s));
        d_w_below && cf_discrepancy_below(u, v, s, &thr)?
    };
    let concl1 = cf_discrepancy_below(&wu, v, n + s, epsilon)?;
    let item1 = ConcatItem::new("item1", hyp1, concl1);

    // items 2a and 2b share the hypothesis
    let ratio_small = Rational::new(BigInt::from(s), BigInt::from(n)) < *epsilon;
    let hyp2 = d_w_below && ratio_small;
    let mut concl2a = true;
    for l in 1..=s {
        if !cf_discrepancy_below(&wu, v, n + l, &two_eps)? {
            concl2a = false;
            break;
        }
    }
    let item2a = ConcatItem::new("item2a", hyp2, concl2a);
    let concl2b = cf_discrepancy_below(&uw, v, n + s, &two_eps)?;
    let item2b = ConcatItem::new("item2b", hyp2, concl2b);

    Ok(ConcatReport {
        items: vec![item1, item2a, item2b],
    })
}

/// Evaluates the three concatenation implications for base-b words.
///
/// 1. `D(u) < eps` and `D(v) < eps` imply `D(uv) < eps`;
/// 2. `D(v) < eps` and `|u|/|v| < eps` imply
///    (a) `D over |v|+l digits of vu < 2 eps` for every `1 <= l <= |u|`, and
///    (b) `D(uv) < 2 eps`.
pub fn check_bary_concat(
    u: &[u32],
    v: &[u32],
    base: u32,
    epsilon: &Rational,
) -> Result<ConcatReport, DiscrepancyError> {
    if !epsilon.is_positive() {
        return Err(DiscrepancyError::BadEpsilon);
    }
    if v.is_empty() {
        return Err(DiscrepancyError::EmptyWord);
    }
    let two_eps = epsilon * Rational::from_integer(2.into());
    let d = |word: &[u32]| -> Result<Rational, DiscrepancyError> {
        Ok(bary_discrepancy(word, base)?.value)
    };
    let d_v = d(v)?;
    let d_u = if u.is_empty() { None } else { Some(d(u)?) };

    let mut uv = u.to_vec();
    uv.extend_from_slice(v);
    let mut vu = v.to_vec();
    vu.extend_from_slice(u);

    // item 1
    let hyp1 = match &d_u {
        None => false,
        Some(du) => du < epsilon && &d_v < epsilon,
    };
    let concl1 = d(&uv)? < *epsilon;
    let item1 = ConcatItem::new("item1", hyp1, concl1);

    // item 2: hypothesis |u|/|v| < eps
    let ratio = Rational::new(BigInt::from(u.len()), BigInt::from(v.len()));
    let hyp2 = &d_v < epsilon && ratio < *epsilon;
    let mut concl2a = true;
    for l in 1..=u.len() {
        if d(&vu[..v.len() + l])? >= two_eps {
            concl2a = false;
            break;
        }
    }
    let item2a = ConcatItem::new("item2a", hyp2, concl2a);
    let concl2b = d(&uv)? < two_eps;
    let item2b = ConcatItem::new("item2b", hyp2, concl2b);

    Ok(ConcatReport {
        items: vec![item1, item2a, item2b],
    })
}
