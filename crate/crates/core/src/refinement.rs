//! Brick pairs and the verified refinement search.
//!
//! A brick couples one cf-ary cylinder with one enclosing b-ary cylinder per
//! base `b = 2..t`, with the two lengths within a configurable factor. The
//! construction keeps two bricks in lockstep: the x brick, whose cf word
//! starts with digit 1, and the y brick carrying the same word without that
//! leading digit. Refinement appends one shared digit block to both words,
//! certifying on the concrete candidate every condition the constructed
//! numbers need: relative-length window membership on both sides, pattern
//! discrepancy of the block, nesting of the new enclosures, and simple
//! discrepancy of every newly determined base-b digit word.

use crate::certified::exp_rat;
use crate::cylinder::{
    cf_cylinder, digits_of_index, enclosing_bary, BaryCylinder, BlockSearch, CfCylinder,
    CylinderError, Interval, SearchTrack,
};
use crate::discrepancy::{bary_discrepancy, count_occurrences, DiscrepancyError};
use crate::measures::{
    gauss_measure_word, relative_length_window, BoundConstants, MeasureError,
};
use crate::rational::{prepend_one, CfWord, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error("target t must be {current} or {next}, got {requested}", next = current + 1)]
    InvalidTargetT { current: u32, requested: u32 },
    #[error("epsilon {epsilon} must lie in (0, 1/{t}]")]
    InvalidEpsilon { epsilon: String, t: u32 },
    #[error("discrepancy threshold epsilon - (t-1)/n stays nonpositive up to n = {ceiling}")]
    UnsatisfiableEpsilon { ceiling: u64 },
    #[error("no valid block for n in [{n_first}, {n_last}]; rejections: {stats}")]
    NoValidBlock {
        n_first: u64,
        n_last: u64,
        stats: SearchStats,
    },
    #[error("no valid block of scheduled length {n}; rejections: {stats}")]
    NoValidBlockAtScheduledN { n: u64, stats: SearchStats },
    #[error("brick pair is malformed: {0}")]
    MalformedPair(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
}

/// One cf cylinder plus an enclosing b-ary cylinder per base `2..=t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Brick {
    t: u32,
    cf: CfCylinder,
    bary: BTreeMap<u32, BaryCylinder>,
}

impl Brick {
    pub fn new(t: u32, cf: CfCylinder, bary: BTreeMap<u32, BaryCylinder>) -> Result<Self, RefineError> {
        if t < 2 {
            return Err(RefineError::MalformedPair(format!("t = {t} is below 2")));
        }
        let expected: Vec<u32> = (2..=t).collect();
        let got: Vec<u32> = bary.keys().copied().collect();
        if expected != got {
            return Err(RefineError::MalformedPair(format!(
                "bases {got:?} do not cover 2..={t}"
            )));
        }
        Ok(Brick { t, cf, bary })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn cf(&self) -> &CfCylinder {
        &self.cf
    }

    pub fn bary(&self) -> &BTreeMap<u32, BaryCylinder> {
        &self.bary
    }

    pub fn base(&self, b: u32) -> Option<&BaryCylinder> {
        self.bary.get(&b)
    }
}

/// The paired bricks for x and y = 1/x - 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrickPair {
    x: Brick,
    y: Brick,
}

impl BrickPair {
    pub fn new(x: Brick, y: Brick) -> Result<Self, RefineError> {
        if x.t != y.t {
            return Err(RefineError::MalformedPair(format!(
                "x has t = {}, y has t = {}",
                x.t, y.t
            )));
        }
        Ok(BrickPair { x, y })
    }

    /// The starting pair: x confined to (1/2, 1), y to the whole unit
    /// interval, base 2 enclosed by those same intervals.
    pub fn initial() -> BrickPair {
        let x_word = CfWord::new(vec![1]).expect("digit 1 is valid");
        let x_cf = cf_cylinder(&x_word);
        let y_cf = cf_cylinder(&CfWord::empty());
        let x_bary = BaryCylinder::new(2, 1, BigUint::one(), 1).expect("(1/2, 1)");
        let y_bary = BaryCylinder::new(2, 0, BigUint::zero(), 1).expect("(0, 1)");
        BrickPair {
            x: Brick {
                t: 2,
                cf: x_cf,
                bary: BTreeMap::from([(2, x_bary)]),
            },
            y: Brick {
                t: 2,
                cf: y_cf,
                bary: BTreeMap::from([(2, y_bary)]),
            },
        }
    }

    pub fn t(&self) -> u32 {
        self.x.t
    }

    pub fn x(&self) -> &Brick {
        &self.x
    }

    pub fn y(&self) -> &Brick {
        &self.y
    }
}

/// One named validation check with an exact margin where meaningful.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub margin: Option<Rational>,
}

/// Validation report; margins are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub checks: Vec<CheckResult>,
}

impl Diagnostics {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, margin: Option<Rational>) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            margin,
        });
    }
}

/// Counters for why candidates were rejected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub candidates_seen: u64,
    pub pattern_rejections: u64,
    pub enclosing_rejections: u64,
    pub nesting_rejections: u64,
    pub bary_discrepancy_rejections: u64,
    pub validation_rejections: u64,
    pub infeasible_thresholds: u64,
    pub infeasible_pattern_counts: u64,
    pub shallow_orders: u64,
}

impl std::fmt::Display for SearchStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "candidates {}, pattern {}, enclosing {}, nesting {}, bary {}, validation {}",
            self.candidates_seen,
            self.pattern_rejections,
            self.enclosing_rejections,
            self.nesting_rejections,
            self.bary_discrepancy_rejections,
            self.validation_rejections
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Try the hinted block length, then longer ones up to the ceiling.
    Search,
    /// Use exactly the hinted block length; failing is an error.
    Schedule,
}

/// Knobs shared by refinement and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineConfig {
    pub constants: BoundConstants,
    pub slack: Rational,
    pub precision_bits: u32,
    pub n_ceiling: u64,
}

impl RefineConfig {
    pub fn new(constants: BoundConstants, precision_bits: u32, n_ceiling: u64) -> Self {
        RefineConfig {
            slack: default_slack(constants.c),
            constants,
            precision_bits,
            n_ceiling,
        }
    }
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig::new(BoundConstants::default(), 96, 64)
    }
}

/// Upper rational bound for `4 * 16 * e^{4C}`, the brick length slack.
pub fn default_slack(c: u32) -> Rational {
    let e4c = exp_rat(&Rational::from_integer(BigInt::from(4 * c as i64)), 32);
    e4c.hi * Rational::from_integer(64.into())
}

/// The newly determined base-b words of one refinement, per side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerBaseExtension {
    pub order: u64,
    pub new_digits_x: u64,
    pub new_digits_y: u64,
    pub x_suffixes: Vec<Vec<u32>>,
    pub y_suffixes: Vec<Vec<u32>>,
}

/// A verified refinement: the shared block, the refined pair, and evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementOutcome {
    pub block: CfWord,
    pub new_pair: BrickPair,
    pub n_used: u64,
    pub per_base_extensions: BTreeMap<u32, PerBaseExtension>,
    pub diagnostics: Diagnostics,
}

/// Checks every brick and pair invariant with exact arithmetic.
pub fn validate_brick_pair(pair: &BrickPair, slack: &Rational) -> Diagnostics {
    let mut diag = Diagnostics::default();
    for (label, brick) in [("x", &pair.x), ("y", &pair.y)] {
        let recomputed = cf_cylinder(brick.cf.word());
        diag.push(
            format!("{label}.cf.consistent"),
            recomputed == brick.cf,
            None,
        );
        let cf_iv = brick.cf.interval();
        let cf_len = brick.cf.length();
        for (b, bary) in &brick.bary {
            let b_iv = bary.interval();
            let contain = b_iv.contains_interval(cf_iv);
            let margin = std::cmp::min(cf_iv.left() - b_iv.left(), b_iv.right() - cf_iv.right());
            diag.push(
                format!("{label}.base{b}.containment"),
                contain,
                Some(margin),
            );
            let floor = bary.length() / (slack * Rational::from_integer(BigInt::from(*b)));
            diag.push(
                format!("{label}.base{b}.length"),
                cf_len >= floor,
                Some(&cf_len - &floor),
            );
        }
    }
    diag.push("pair.t_equal", pair.x.t == pair.y.t, None);
    diag.push(
        "pair.word_shift",
        pair.x.cf.word() == &prepend_one(pair.y.cf.word()),
        None,
    );
    let x_len = pair.x.cf.length();
    let y_len = pair.y.cf.length();
    let quarter = &y_len / Rational::from_integer(4.into());
    diag.push(
        "pair.length_lower",
        x_len >= quarter,
        Some(&x_len - &quarter),
    );
    diag.push("pair.length_upper", x_len <= y_len, Some(&y_len - &x_len));
    for (b, x_bary) in &pair.x.bary {
        match pair.y.bary.get(b) {
            None => diag.push(format!("pair.base{b}.equal_length"), false, None),
            Some(y_bary) => {
                // the starting pair legitimately has the y side still at the
                // whole unit interval; equal lengths apply once both sides
                // have been refined to positive order
                let waived = y_bary.order() == 0;
                let equal = x_bary.length() == y_bary.length();
                diag.push(format!("pair.base{b}.equal_length"), waived || equal, None);
            }
        }
    }
    let x_iv = pair.x.cf.interval();
    let y_iv = pair.y.cf.interval();
    let image_ok = if x_iv.left().is_zero() {
        false
    } else {
        let img_left = x_iv.right().recip() - Rational::one();
        let img_right = x_iv.left().recip() - Rational::one();
        &img_left == y_iv.left() && &img_right == y_iv.right()
    };
    diag.push("pair.reciprocal_image", image_ok, None);
    diag
}

struct Pattern {
    digits: Vec<u64>,
    mu_lo: Rational,
    mu_hi: Rational,
}

/// Feasible occurrence-count range of one pattern at block length n.
struct PatternBound<'a> {
    digits: &'a [u64],
    min_count: usize,
    max_count: usize,
}

impl Pattern {
    /// Certified upper bound on `|c/n - mu|` for count c.
    fn deviation_upper(&self, c: usize, n: u64) -> Rational {
        let freq = Rational::new(BigInt::from(c), BigInt::from(n));
        std::cmp::max((&freq - &self.mu_lo).abs(), (&freq - &self.mu_hi).abs())
    }

    /// Counts whose certified deviation stays below `thr`, if any exist.
    fn feasible_counts(&self, n: u64, thr: &Rational) -> Option<(usize, usize)> {
        let cap = (n as usize).saturating_sub(self.digits.len() - 1);
        let mut range: Option<(usize, usize)> = None;
        for c in 0..=cap {
            if &self.deviation_upper(c, n) < thr {
                range = Some(match range {
                    None => (c, c),
                    Some((lo, _)) => (lo, c),
                });
            }
        }
        range
    }
}

/// All cf words of length 1..=t over digits 1..=t, with measure enclosures.
fn build_patterns(t: u32, precision_bits: u32) -> Result<Vec<Pattern>, RefineError> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..t {
        let mut next = Vec::new();
        for w in &frontier {
            for d in 1..=t as u64 {
                let mut ext = w.clone();
                ext.push(d);
                let word = CfWord::new(ext.clone()).expect("positive digits");
                let mu = gauss_measure_word(&word, precision_bits)?;
                out.push(Pattern {
                    digits: ext.clone(),
                    mu_lo: mu.lower().clone(),
                    mu_hi: mu.upper().clone(),
                });
                next.push(ext);
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// Widens a one-unit cylinder to two units, staying inside `parent`.
fn widen_to_two(cyl: &BaryCylinder, parent: &Interval) -> Option<BaryCylinder> {
    let right = BaryCylinder::new(
        cyl.base(),
        cyl.order(),
        cyl.start_index().clone(),
        2,
    )
    .ok()
    .filter(|c| parent.contains_interval(&c.interval()));
    if right.is_some() {
        return right;
    }
    if cyl.start_index().is_zero() {
        return None;
    }
    BaryCylinder::new(
        cyl.base(),
        cyl.order(),
        cyl.start_index() - BigUint::one(),
        2,
    )
    .ok()
    .filter(|c| parent.contains_interval(&c.interval()))
}

/// Largest `m >= 0` with `upper <= b^-m`.
fn deepest_order(upper: &Rational, base: u32) -> u64 {
    debug_assert!(upper.is_positive());
    let b = Rational::from_integer(BigInt::from(base));
    let mut m = 0u64;
    let mut power = b.clone().recip();
    while upper <= &power {
        m += 1;
        power /= &b;
    }
    m
}

struct FoundBlock {
    block: CfWord,
    new_pair: BrickPair,
    per_base: BTreeMap<u32, PerBaseExtension>,
    diagnostics: Diagnostics,
}

enum TryOutcome {
    Found(Box<FoundBlock>),
    NoBlock,
    ThresholdInfeasible,
    CountInfeasible,
    OrderTooShallow,
}

/// Refines both bricks with one shared digit block.
///
/// The selected block is the first fully certified candidate in ascending
/// order of the left endpoint of the new x-side cylinder, so identical
/// inputs always yield identical outcomes. With `t_new = t + 1` the refined
/// pair is extended with base `t + 1` cylinders afterwards.
pub fn refine_pair(
    pair: &BrickPair,
    t_new: u32,
    epsilon: &Rational,
    mode: SearchMode,
    n_hint: u64,
    cfg: &RefineConfig,
) -> Result<RefinementOutcome, RefineError> {
    let t = pair.t();
    if t_new != t && t_new != t + 1 {
        return Err(RefineError::InvalidTargetT {
            current: t,
            requested: t_new,
        });
    }
    if !epsilon.is_positive() {
        return Err(RefineError::UnsatisfiableEpsilon {
            ceiling: cfg.n_ceiling,
        });
    }
    if epsilon > &Rational::new(BigInt::one(), BigInt::from(t)) {
        return Err(RefineError::InvalidEpsilon {
            epsilon: epsilon.to_string(),
            t,
        });
    }
    let input_diag = validate_brick_pair(pair, &cfg.slack);
    if !input_diag.all_passed() {
        let names: Vec<String> = input_diag
            .failures()
            .iter()
            .map(|c| c.name.clone())
            .collect();
        return Err(RefineError::MalformedPair(names.join(", ")));
    }

    let patterns = build_patterns(t, cfg.precision_bits)?;
    let mut stats = SearchStats::default();
    let n_first = n_hint.max(1);
    let mut all_thresholds_infeasible = true;

    let mut n = n_first;
    loop {
        if n > cfg.n_ceiling {
            return Err(if all_thresholds_infeasible {
                RefineError::UnsatisfiableEpsilon {
                    ceiling: cfg.n_ceiling,
                }
            } else {
                RefineError::NoValidBlock {
                    n_first,
                    n_last: cfg.n_ceiling,
                    stats,
                }
            });
        }
        match try_block_at(pair, n, epsilon, &patterns, cfg, &mut stats)? {
            TryOutcome::Found(found) => {
                let FoundBlock {
                    block,
                    new_pair,
                    per_base,
                    diagnostics,
                } = *found;
                let new_pair = if t_new == t + 1 {
                    extend_base(&new_pair)?
                } else {
                    new_pair
                };
                return Ok(RefinementOutcome {
                    block,
                    new_pair,
                    n_used: n,
                    per_base_extensions: per_base,
                    diagnostics,
                });
            }
            TryOutcome::ThresholdInfeasible => {
                stats.infeasible_thresholds += 1;
                if mode == SearchMode::Schedule {
                    return Err(RefineError::UnsatisfiableEpsilon { ceiling: n });
                }
            }
            TryOutcome::CountInfeasible => {
                stats.infeasible_pattern_counts += 1;
                all_thresholds_infeasible = false;
                if mode == SearchMode::Schedule {
                    return Err(RefineError::NoValidBlockAtScheduledN { n, stats });
                }
            }
            TryOutcome::OrderTooShallow => {
                stats.shallow_orders += 1;
                all_thresholds_infeasible = false;
                if mode == SearchMode::Schedule {
                    return Err(RefineError::NoValidBlockAtScheduledN { n, stats });
                }
            }
            TryOutcome::NoBlock => {
                all_thresholds_infeasible = false;
                if mode == SearchMode::Schedule {
                    return Err(RefineError::NoValidBlockAtScheduledN { n, stats });
                }
            }
        }
        n += 1;
    }
}

fn try_block_at(
    pair: &BrickPair,
    n: u64,
    epsilon: &Rational,
    patterns: &[Pattern],
    cfg: &RefineConfig,
    stats: &mut SearchStats,
) -> Result<TryOutcome, RefineError> {
    let t = pair.t();
    let thr_cf = epsilon - Rational::new(BigInt::from(t as i64 - 1), BigInt::from(n));
    if !thr_cf.is_positive() {
        return Ok(TryOutcome::ThresholdInfeasible);
    }
    let (lo_enc, hi_enc) = relative_length_window(n, cfg.constants.c, cfg.precision_bits)?;
    // collapse enclosures conservatively: accepted relative lengths are
    // certainly inside the true window
    let rel_lo = lo_enc.upper().clone();
    let rel_hi = hi_enc.lower().clone();
    if rel_lo >= rel_hi {
        return Ok(TryOutcome::NoBlock);
    }
    let x_len = pair.x.cf.length();
    let y_len = pair.y.cf.length();
    // target order per base from the collapsed upper window on the y side
    let upper_len = &rel_hi * &y_len;
    let mut orders = BTreeMap::new();
    for b in 2..=t {
        let m = deepest_order(&upper_len, b);
        let x_old = pair.x.bary[&b].order();
        let y_old = pair.y.bary[&b].order();
        if m <= x_old.max(y_old) {
            return Ok(TryOutcome::OrderTooShallow);
        }
        orders.insert(b, m);
    }

    // every pattern must admit at least one occurrence count under the
    // threshold, else no block of this length can qualify
    let mut bounds = Vec::with_capacity(patterns.len());
    for pat in patterns {
        match pat.feasible_counts(n, &thr_cf) {
            None => return Ok(TryOutcome::CountInfeasible),
            Some((min_count, max_count)) => bounds.push(PatternBound {
                digits: &pat.digits,
                min_count,
                max_count,
            }),
        }
    }

    let tracks = vec![
        SearchTrack::from_tail(pair.x.cf.tail(), &rel_lo * &x_len, &rel_hi * &x_len),
        SearchTrack::from_tail(pair.y.cf.tail(), &rel_lo * &y_len, &rel_hi * &y_len),
    ];
    // occurrence counts only grow along a prefix, and each remaining digit
    // can finish at most one new occurrence, so both bounds prune subtrees
    let prefix_ok = |prefix: &[u64]| {
        let remaining = n as usize - prefix.len();
        bounds.iter().all(|pb| {
            let c = count_occurrences(prefix, pb.digits);
            c <= pb.max_count && c + remaining >= pb.min_count
        })
    };
    let search = BlockSearch::new(tracks, n as usize, pair.x.cf.word().len(), prefix_ok);

    'candidates: for cand in search {
        stats.candidates_seen += 1;
        // block pattern discrepancy, certified against the cached enclosures
        let mut min_pattern_margin: Option<Rational> = None;
        for pat in patterns {
            let count = count_occurrences(&cand.digits, &pat.digits);
            let dev_hi = pat.deviation_upper(count, n);
            if dev_hi >= thr_cf {
                stats.pattern_rejections += 1;
                continue 'candidates;
            }
            let margin = &thr_cf - &dev_hi;
            if min_pattern_margin.as_ref().is_none_or(|m| &margin < m) {
                min_pattern_margin = Some(margin);
            }
        }

        let block = CfWord::new(cand.digits.clone()).expect("positive digits");
        let x_word = pair.x.cf.word().concat(&block);
        let y_word = pair.y.cf.word().concat(&block);
        let x_cyl = cf_cylinder(&x_word);
        let y_cyl = cf_cylinder(&y_word);

        let mut x_bary = BTreeMap::new();
        let mut y_bary = BTreeMap::new();
        let mut per_base = BTreeMap::new();
        let mut min_bary_margin: Option<Rational> = None;
        for b in 2..=t {
            let m = orders[&b];
            let Ok(tau) = enclosing_bary(x_cyl.interval(), b, m) else {
                stats.enclosing_rejections += 1;
                continue 'candidates;
            };
            let Ok(tee) = enclosing_bary(y_cyl.interval(), b, m) else {
                stats.enclosing_rejections += 1;
                continue 'candidates;
            };
            let x_parent = pair.x.bary[&b].interval();
            let y_parent = pair.y.bary[&b].interval();
            let width = tau.width_units().max(tee.width_units());
            let tau = if tau.width_units() < width {
                match widen_to_two(&tau, &x_parent) {
                    Some(w) => w,
                    None => {
                        stats.nesting_rejections += 1;
                        continue 'candidates;
                    }
                }
            } else {
                tau
            };
            let tee = if tee.width_units() < width {
                match widen_to_two(&tee, &y_parent) {
                    Some(w) => w,
                    None => {
                        stats.nesting_rejections += 1;
                        continue 'candidates;
                    }
                }
            } else {
                tee
            };
            if !x_parent.contains_interval(&tau.interval())
                || !y_parent.contains_interval(&tee.interval())
            {
                stats.nesting_rejections += 1;
                continue 'candidates;
            }
            // newly determined digits: the unit-word suffixes past the old order
            let n_b_x = m - pair.x.bary[&b].order();
            let n_b_y = m - pair.y.bary[&b].order();
            let mut x_suffixes = Vec::new();
            let mut y_suffixes = Vec::new();
            for (cyl, n_b, sink) in [
                (&tau, n_b_x, &mut x_suffixes),
                (&tee, n_b_y, &mut y_suffixes),
            ] {
                let modulus = BigUint::from(cyl.base()).pow(n_b as u32);
                for i in 0..cyl.width_units() {
                    let idx = cyl.start_index() + BigUint::from(i);
                    let suffix = digits_of_index(cyl.base(), n_b, &(idx % &modulus));
                    sink.push(suffix);
                }
            }
            for suffix in x_suffixes.iter().chain(y_suffixes.iter()) {
                let d = bary_discrepancy(suffix, b)?;
                if &d.value >= epsilon {
                    stats.bary_discrepancy_rejections += 1;
                    continue 'candidates;
                }
                let margin = epsilon - &d.value;
                if min_bary_margin.as_ref().is_none_or(|m| &margin < m) {
                    min_bary_margin = Some(margin);
                }
            }
            per_base.insert(
                b,
                PerBaseExtension {
                    order: m,
                    new_digits_x: n_b_x,
                    new_digits_y: n_b_y,
                    x_suffixes,
                    y_suffixes,
                },
            );
            x_bary.insert(b, tau);
            y_bary.insert(b, tee);
        }

        let new_pair = BrickPair::new(
            Brick::new(t, x_cyl.clone(), x_bary)?,
            Brick::new(t, y_cyl.clone(), y_bary)?,
        )?;
        let mut diagnostics = validate_brick_pair(&new_pair, &cfg.slack);
        if !diagnostics.all_passed() {
            stats.validation_rejections += 1;
            continue 'candidates;
        }
        // window margins, exact relative lengths against collapsed bounds
        let x_rel = x_cyl.length() / &x_len;
        let y_rel = y_cyl.length() / &y_len;
        for (side, rel) in [("x", &x_rel), ("y", &y_rel)] {
            diagnostics.push(
                format!("window.{side}.low_margin"),
                rel >= &rel_lo,
                Some(rel - &rel_lo),
            );
            diagnostics.push(
                format!("window.{side}.high_margin"),
                rel <= &rel_hi,
                Some(&rel_hi - rel),
            );
        }
        diagnostics.push(
            "discrepancy.cf.threshold",
            true,
            Some(thr_cf.clone()),
        );
        if let Some(m) = min_pattern_margin {
            diagnostics.push("discrepancy.cf.min_margin", true, Some(m));
        }
        if let Some(m) = min_bary_margin {
            diagnostics.push("discrepancy.bary.min_margin", true, Some(m));
        }
        // strictness of the cf nesting (the block is nonempty)
        let strict = pair.x.cf.interval().contains_interval(x_cyl.interval())
            && x_cyl.length() < x_len
            && pair.y.cf.interval().contains_interval(y_cyl.interval())
            && y_cyl.length() < y_len;
        diagnostics.push("nesting.cf.strict", strict, None);
        if !diagnostics.all_passed() {
            stats.validation_rejections += 1;
            continue 'candidates;
        }
        return Ok(TryOutcome::Found(Box::new(FoundBlock {
            block,
            new_pair,
            per_base,
            diagnostics,
        })));
    }
    Ok(TryOutcome::NoBlock)
}

/// Adds base `t + 1` cylinders to both bricks.
///
/// The order is the largest `m` with `|y.cf| <= (t+1)^-m`; both sides get
/// the same width, and the new base carries no discrepancy condition.
pub fn extend_base(pair: &BrickPair) -> Result<BrickPair, RefineError> {
    let t = pair.t();
    let b = t + 1;
    let y_len = pair.y.cf.length();
    // largest m with y_len <= b^-m
    let mut m = 0u64;
    {
        let b_rat = Rational::from_integer(BigInt::from(b));
        let mut next = b_rat.clone().recip();
        while y_len <= next {
            m += 1;
            next /= &b_rat;
        }
    }
    let tau = enclosing_bary(pair.x.cf.interval(), b, m)?;
    let tee = enclosing_bary(pair.y.cf.interval(), b, m)?;
    let unit = Interval::unit();
    let width = tau.width_units().max(tee.width_units());
    let widen = |c: BaryCylinder| -> Result<BaryCylinder, RefineError> {
        if c.width_units() == width {
            return Ok(c);
        }
        widen_to_two(&c, &unit).ok_or_else(|| {
            RefineError::MalformedPair("cannot widen new-base cylinder inside [0, 1]".into())
        })
    };
    let tau = widen(tau)?;
    let tee = widen(tee)?;
    let mut x_bary = pair.x.bary.clone();
    let mut y_bary = pair.y.bary.clone();
    x_bary.insert(b, tau);
    y_bary.insert(b, tee);
    BrickPair::new(
        Brick::new(b, pair.x.cf.clone(), x_bary)?,
        Brick::new(b, pair.y.cf.clone(), y_bary)?,
    )
}
