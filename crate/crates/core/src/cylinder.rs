//! Cylinder intervals for the two digit systems.
//!
//! A cf-ary cylinder of order n is the set of reals whose continued-fraction
//! expansion begins with a fixed n-digit word; it is an open interval whose
//! endpoints are the word's value and the value with the last digit
//! incremented, swapped when n is odd. A b-ary cylinder of order k is
//! `(a/b^k, (a+1)/b^k)`, here generalized to a width of one or two
//! consecutive units. All intervals are open; boundary points belong to no
//! cylinder, which sidesteps the dual base-b representations of b-adic
//! rationals.

use crate::rational::{tail_convergents, CfWord, ConvergentPair, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Hard ceiling on the relative order accepted by block enumeration.
pub const MAX_RELATIVE_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CylinderError {
    #[error("interval endpoints must satisfy left < right")]
    EmptyInterval,
    #[error("interval must lie inside the unit interval")]
    NotInUnit,
    #[error("interval of length {length} is not shorter than {base}^-{order}")]
    TooLongForOrder {
        length: String,
        base: u32,
        order: u64,
    },
    #[error("cylinder start {start} plus width {width} exceeds {base}^{order}")]
    IndexOutOfRange {
        start: String,
        width: u8,
        base: u32,
        order: u64,
    },
    #[error("cylinder width must be 1 or 2 units, got {0}")]
    BadWidth(u8),
    #[error("window bounds must satisfy 0 < low < high")]
    BadWindow,
    #[error("relative order {n} exceeds the maximum {max}")]
    OrderTooLarge { n: usize, max: usize },
    #[error("relative order must be at least 1")]
    OrderZero,
}

/// Open interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    left: Rational,
    right: Rational,
}

impl Interval {
    pub fn new(left: Rational, right: Rational) -> Result<Self, CylinderError> {
        if left >= right {
            return Err(CylinderError::EmptyInterval);
        }
        Ok(Interval { left, right })
    }

    /// The unit interval (0, 1).
    pub fn unit() -> Self {
        Interval {
            left: Rational::zero(),
            right: Rational::one(),
        }
    }

    pub fn left(&self) -> &Rational {
        &self.left
    }

    pub fn right(&self) -> &Rational {
        &self.right
    }

    pub fn length(&self) -> Rational {
        &self.right - &self.left
    }

    pub fn midpoint(&self) -> Rational {
        (&self.left + &self.right) / Rational::from_integer(2.into())
    }

    /// Open-interval membership.
    pub fn contains(&self, x: &Rational) -> bool {
        &self.left < x && x < &self.right
    }

    /// Subset relation between open intervals.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    pub fn is_in_unit(&self) -> bool {
        !self.left.is_negative() && self.right <= Rational::one()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.left, self.right)
    }
}

/// A cf-ary cylinder: word, interval, and the two final convergents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfCylinder {
    word: CfWord,
    interval: Interval,
    tail: (ConvergentPair, ConvergentPair),
}

impl CfCylinder {
    pub fn word(&self) -> &CfWord {
        &self.word
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// `((p_{n-1}, q_{n-1}), (p_n, q_n))`.
    pub fn tail(&self) -> &(ConvergentPair, ConvergentPair) {
        &self.tail
    }

    pub fn length(&self) -> Rational {
        self.interval.length()
    }

    pub fn order(&self) -> usize {
        self.word.len()
    }
}

/// Builds the cylinder of `word`. The empty word yields the unit interval.
pub fn cf_cylinder(word: &CfWord) -> CfCylinder {
    let tail = tail_convergents(word);
    let interval = if word.is_empty() {
        Interval::unit()
    } else {
        let (prev, last) = (&tail.0, &tail.1);
        let value = Rational::new(last.p.clone(), last.q.clone());
        let value_plus = Rational::new(&last.p + &prev.p, &last.q + &prev.q);
        if word.len().is_multiple_of(2) {
            Interval::new(value, value_plus).expect("even-order endpoints ordered")
        } else {
            Interval::new(value_plus, value).expect("odd-order endpoints ordered")
        }
    };
    CfCylinder {
        word: word.clone(),
        interval,
        tail,
    }
}

/// Exact length `1/(q_n (q_n + q_{n-1}))`; equals 1 for the empty word.
pub fn cf_cylinder_length(word: &CfWord) -> Rational {
    let (prev, last) = tail_convergents(word);
    Rational::new(BigInt::one(), &last.q * (&last.q + &prev.q))
}

pub(crate) fn length_from_tail(prev_q: &BigInt, last_q: &BigInt) -> Rational {
    Rational::new(BigInt::one(), last_q * (last_q + prev_q))
}

/// A b-ary cylinder of one or two consecutive units of the same order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaryCylinder {
    base: u32,
    order: u64,
    start_index: BigUint,
    width_units: u8,
}

impl BaryCylinder {
    pub fn new(
        base: u32,
        order: u64,
        start_index: BigUint,
        width_units: u8,
    ) -> Result<Self, CylinderError> {
        assert!(base >= 2, "base must be at least 2");
        if width_units != 1 && width_units != 2 {
            return Err(CylinderError::BadWidth(width_units));
        }
        let capacity = BigUint::from(base).pow(
            order
                .to_u32()
                .expect("cylinder order far beyond practical range"),
        );
        if &start_index + BigUint::from(width_units) > capacity {
            return Err(CylinderError::IndexOutOfRange {
                start: start_index.to_string(),
                width: width_units,
                base,
                order,
            });
        }
        Ok(BaryCylinder {
            base,
            order,
            start_index,
            width_units,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn start_index(&self) -> &BigUint {
        &self.start_index
    }

    pub fn width_units(&self) -> u8 {
        self.width_units
    }

    pub fn length(&self) -> Rational {
        Rational::new(
            BigInt::from(self.width_units),
            BigInt::from(self.unit_denominator()),
        )
    }

    fn unit_denominator(&self) -> BigUint {
        BigUint::from(self.base).pow(self.order.to_u32().expect("order in range"))
    }

    pub fn interval(&self) -> Interval {
        let den = BigInt::from(self.unit_denominator());
        let left = Rational::new(BigInt::from(self.start_index.clone()), den.clone());
        let right = Rational::new(
            BigInt::from(&self.start_index + BigUint::from(self.width_units)),
            den,
        );
        Interval::new(left, right).expect("width is positive")
    }

    /// The digit words of the constituent unit cylinders, most significant first.
    pub fn unit_words(&self) -> Vec<Vec<u32>> {
        (0..self.width_units)
            .map(|i| {
                digits_of_index(
                    self.base,
                    self.order,
                    &(&self.start_index + BigUint::from(i)),
                )
            })
            .collect()
    }
}

impl fmt::Display for BaryCylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}/{base}^{o}, {}/{base}^{o})",
            self.start_index,
            &self.start_index + BigUint::from(self.width_units),
            base = self.base,
            o = self.order
        )
    }
}

/// Base-b digits of `index`, padded to `len` digits, most significant first.
pub fn digits_of_index(base: u32, len: u64, index: &BigUint) -> Vec<u32> {
    let mut digits = vec![0u32; len.to_usize().expect("length in range")];
    let mut rest = index.clone();
    let b = BigUint::from(base);
    for slot in digits.iter_mut().rev() {
        let (q, r) = num_integer::Integer::div_rem(&rest, &b);
        *slot = r.to_u32().expect("digit below base");
        rest = q;
    }
    assert!(rest.is_zero(), "index does not fit in {len} digits");
    digits
}

/// Minimal-width order-m cylinder containing `iv`.
///
/// Requires `|iv| < b^-m`; the result has width 2 exactly when no single
/// order-m cylinder contains the interval.
pub fn enclosing_bary(iv: &Interval, base: u32, order: u64) -> Result<BaryCylinder, CylinderError> {
    assert!(base >= 2, "base must be at least 2");
    if !iv.is_in_unit() {
        return Err(CylinderError::NotInUnit);
    }
    let scale = BigInt::from(base).pow(order.to_u32().expect("order in range"));
    let unit = Rational::new(BigInt::one(), scale.clone());
    if iv.length() >= unit {
        return Err(CylinderError::TooLongForOrder {
            length: iv.length().to_string(),
            base,
            order,
        });
    }
    let start = (iv.left() * Rational::from_integer(scale.clone()))
        .floor()
        .to_integer();
    let start_plus_one = Rational::new(&start + 1, scale);
    let width = if iv.right() <= &start_plus_one { 1 } else { 2 };
    BaryCylinder::new(
        base,
        order,
        start.to_biguint().expect("start is nonnegative"),
        width,
    )
}

/// Longest digit word shared by the base-b expansions of every point of `iv`.
///
/// `iv` must lie inside (0, 1). Expansions are the greedy ones, so a word
/// `d_1..d_k` is determined exactly when `iv` fits in `[a/b^k, (a+1)/b^k)`.
pub fn bary_digits_common_prefix(iv: &Interval, base: u32) -> Vec<u32> {
    assert!(base >= 2, "base must be at least 2");
    assert!(iv.is_in_unit(), "interval must lie inside the unit interval");
    let mut digits = Vec::new();
    let mut scale = BigInt::one();
    let base_big = BigInt::from(base);
    let mut prev_index = BigInt::zero();
    loop {
        scale *= &base_big;
        let a = (iv.left() * Rational::from_integer(scale.clone()))
            .floor()
            .to_integer();
        let fits = iv.right() <= &Rational::new(&a + 1, scale.clone());
        if !fits {
            return digits;
        }
        digits.push((&a - &prev_index * &base_big).to_u32().expect("digit below base"));
        prev_index = a;
    }
}

/// One parent interval being subdivided, with absolute child-length bounds.
#[derive(Debug, Clone)]
pub(crate) struct SearchTrack {
    pub q_prev: BigInt,
    pub q_last: BigInt,
    /// Children must be at least this long (absolute, not relative).
    pub min_len: Rational,
    /// Final blocks must be at most this long (absolute).
    pub max_len: Rational,
}

impl SearchTrack {
    pub fn from_tail(tail: &(ConvergentPair, ConvergentPair), min_len: Rational, max_len: Rational) -> Self {
        SearchTrack {
            q_prev: tail.0.q.clone(),
            q_last: tail.1.q.clone(),
            min_len,
            max_len,
        }
    }
}

/// Digit-block candidate produced by [`BlockSearch`].
#[derive(Debug, Clone)]
pub(crate) struct BlockCandidate {
    pub digits: Vec<u64>,
}

/// Depth-first enumeration of digit blocks of a fixed length whose child
/// cylinders land inside every track's length window.
///
/// Blocks stream ordered by ascending left endpoint of the track-0 child
/// cylinder. At each level the digit direction follows the orientation of the
/// prefix cylinder: children accumulate toward the prefix value, which is the
/// left endpoint at even word length and the right endpoint at odd length.
/// A prefix rejected by `prefix_ok` has its whole subtree skipped; the
/// callback must be monotone (a bad prefix has no good extensions) for the
/// stream to stay complete.
pub(crate) struct BlockSearch<F: Fn(&[u64]) -> bool> {
    n: usize,
    track0_parent_len: usize,
    tracks: Vec<SearchTrack>,
    prefix_ok: F,
    digits: Vec<u64>,
    levels: Vec<Level>,
    started: bool,
    pending_advance: bool,
    done: bool,
}

struct Level {
    digit: u64,
    ascending: bool,
    cap: u64,
    /// `(q_prev, q_last)` per track before this level's digit is applied.
    qs_before: Vec<(BigInt, BigInt)>,
}

impl<F: Fn(&[u64]) -> bool> BlockSearch<F> {
    pub fn new(tracks: Vec<SearchTrack>, n: usize, track0_parent_len: usize, prefix_ok: F) -> Self {
        assert!(!tracks.is_empty());
        BlockSearch {
            n,
            track0_parent_len,
            tracks,
            prefix_ok,
            digits: Vec::new(),
            levels: Vec::new(),
            started: false,
            pending_advance: false,
            done: false,
        }
    }

    fn current_qs(&self) -> Vec<(BigInt, BigInt)> {
        match self.levels.last() {
            None => self
                .tracks
                .iter()
                .map(|t| (t.q_prev.clone(), t.q_last.clone()))
                .collect(),
            Some(level) => {
                let d = BigInt::from(level.digit);
                level
                    .qs_before
                    .iter()
                    .map(|(prev, last)| {
                        let next = &d * last + prev;
                        (last.clone(), next)
                    })
                    .collect()
            }
        }
    }

    /// Largest digit whose child still meets every track's lower length bound.
    fn level_cap(&self, qs: &[(BigInt, BigInt)]) -> u64 {
        let mut cap = u64::MAX;
        for (track, (q_prev, q_last)) in self.tracks.iter().zip(qs) {
            // child length 1/(q'(q'+q)) >= min_len  <=>  q'(q'+q) <= 1/min_len
            let bound = track.min_len.recip();
            let fits = |d: u64| -> bool {
                let q_next = BigInt::from(d) * q_last + q_prev;
                let prod = &q_next * (&q_next + q_last);
                Rational::from_integer(prod) <= bound
            };
            if !fits(1) {
                return 0;
            }
            let mut lo = 1u64;
            let mut hi = 2u64;
            while hi < u64::MAX / 2 && fits(hi) {
                lo = hi;
                hi *= 2;
            }
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cap = cap.min(lo);
        }
        cap
    }

    /// Descends one level, placing that level's first digit.
    fn descend(&mut self) -> bool {
        let qs_before = self.current_qs();
        let cap = self.level_cap(&qs_before);
        if cap == 0 {
            return false;
        }
        let word_len_before = self.track0_parent_len + self.digits.len();
        let ascending = word_len_before % 2 == 1;
        let digit = if ascending { 1 } else { cap };
        self.levels.push(Level {
            digit,
            ascending,
            cap,
            qs_before,
        });
        self.digits.push(digit);
        true
    }

    /// Moves to the next sibling, climbing up when a level is exhausted.
    fn next_sibling_or_up(&mut self) {
        loop {
            let Some(level) = self.levels.last_mut() else {
                self.done = true;
                return;
            };
            let exhausted = if level.ascending {
                level.digit >= level.cap
            } else {
                level.digit <= 1
            };
            if exhausted {
                self.levels.pop();
                self.digits.pop();
                continue;
            }
            if level.ascending {
                level.digit += 1;
            } else {
                level.digit -= 1;
            }
            *self.digits.last_mut().expect("level implies digit") = level.digit;
            return;
        }
    }

    fn final_accept(&self, qs: &[(BigInt, BigInt)]) -> bool {
        self.tracks.iter().zip(qs).all(|(track, (q_prev, q_last))| {
            let len = length_from_tail(q_prev, q_last);
            track.min_len <= len && len <= track.max_len
        })
    }
}

impl<F: Fn(&[u64]) -> bool> Iterator for BlockSearch<F> {
    type Item = BlockCandidate;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if !self.descend() {
                self.done = true;
                return None;
            }
        } else if self.pending_advance {
            self.pending_advance = false;
            self.next_sibling_or_up();
        }
        loop {
            if self.done {
                return None;
            }
            // a digit was just placed at the top level; vet the prefix
            if !(self.prefix_ok)(&self.digits) {
                self.next_sibling_or_up();
                continue;
            }
            if self.digits.len() == self.n {
                // caps already enforce the lower length bounds
                let qs = self.current_qs();
                if self.final_accept(&qs) {
                    self.pending_advance = true;
                    return Some(BlockCandidate {
                        digits: self.digits.clone(),
                    });
                }
                self.next_sibling_or_up();
                continue;
            }
            if !self.descend() {
                self.next_sibling_or_up();
            }
        }
    }
}

/// Streams every n-digit extension block of `parent` whose child cylinder has
/// relative length in `[len_low, len_high]`, ordered by ascending left
/// endpoint of the child cylinder.
pub fn enumerate_relative_cylinders(
    parent: &CfWord,
    n: usize,
    len_low: &Rational,
    len_high: &Rational,
) -> Result<impl Iterator<Item = CfWord>, CylinderError> {
    if n == 0 {
        return Err(CylinderError::OrderZero);
    }
    if n > MAX_RELATIVE_ORDER {
        return Err(CylinderError::OrderTooLarge {
            n,
            max: MAX_RELATIVE_ORDER,
        });
    }
    if !len_low.is_positive() || len_low >= len_high {
        return Err(CylinderError::BadWindow);
    }
    let parent_len = cf_cylinder_length(parent);
    let tail = tail_convergents(parent);
    let track = SearchTrack::from_tail(&tail, len_low * &parent_len, len_high * &parent_len);
    let search = BlockSearch::new(vec![track], n, parent.len(), |_: &[u64]| true);
    Ok(search.map(|cand| CfWord::new(cand.digits).expect("digits are positive")))
}
