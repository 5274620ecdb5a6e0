//! The iterative driver: advance the brick pair step by step, emit the
//! digits of x and 1/x as they become determined, and keep a per-step
//! evidence record.
//!
//! Step s of a run computes the schedule (t, epsilon, n0), refines the pair
//! with one shared cf digit block, and then extends every emitted stream to
//! the digits now forced by the shrunken intervals. The cf stream of x is
//! the digit 1 followed by the shared block history; the cf stream of y is
//! the block history itself. Base-b digits of 1/x are presented as integer
//! part 1 followed by the fractional digits of y.

use crate::cylinder::bary_digits_common_prefix;
use crate::measures::{self, BoundConstants, MeasureError, Schedule};
use crate::rational::{CfWord, Rational};
use crate::refinement::{
    default_slack, refine_pair, validate_brick_pair, BrickPair, Diagnostics, RefineConfig,
    RefineError, SearchMode,
};
use crate::certified::{certified_floor, exp_rat};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionError {
    #[error("step {step} failed: {source}")]
    StepFailed { step: u64, source: RefineError },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("schedule moves t from {from} to {to} at step {step}; t may grow by at most 1")]
    ScheduleJump { step: u64, from: u32, to: u32 },
    #[error("base {base} is not active yet; it activates at step {activates}")]
    BaseNotActive { base: u32, activates: String },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("requested {requested} digits but only {available} are determined")]
    NotEnoughDigits { requested: u64, available: u64 },
    #[error("emitted stream for base {base} failed to extend monotonically")]
    NonMonotonicStream { base: u32 },
    #[error("a run must make at least one step")]
    ZeroSteps,
}

/// Which of the two constructed numbers a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    X,
    OneOverX,
}

/// Which digit system to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Cf,
    Base(u32),
}

/// One row of an explicit (t, epsilon) override table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverrideEntry {
    pub from_step: u64,
    pub t: u32,
    pub epsilon: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionConfig {
    pub mode: SearchMode,
    pub n_start: u32,
    pub constants: BoundConstants,
    pub slack: Rational,
    pub precision_bits: u32,
    pub n_ceiling: u64,
    pub schedule_override: Option<Vec<OverrideEntry>>,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        let constants = BoundConstants::default();
        ConstructionConfig {
            mode: SearchMode::Search,
            n_start: 5,
            slack: default_slack(constants.c),
            constants,
            precision_bits: 96,
            n_ceiling: 64,
            schedule_override: None,
        }
    }
}

impl ConstructionConfig {
    pub fn validate(&self) -> Result<(), ConstructionError> {
        if self.precision_bits < 32 {
            return Err(ConstructionError::BadConfig(
                "precision_bits must be at least 32".into(),
            ));
        }
        if self.n_ceiling < self.n_start as u64 {
            return Err(ConstructionError::BadConfig(
                "n_ceiling must be at least n_start".into(),
            ));
        }
        if !self.slack.is_positive() {
            return Err(ConstructionError::BadConfig("slack must be positive".into()));
        }
        if let Some(table) = &self.schedule_override {
            let mut prev_step = 0u64;
            let mut prev_t = 2u32;
            for entry in table {
                if entry.from_step <= prev_step {
                    return Err(ConstructionError::BadConfig(
                        "override steps must be strictly increasing".into(),
                    ));
                }
                if entry.t < prev_t {
                    return Err(ConstructionError::BadConfig(
                        "override t values must be non-decreasing".into(),
                    ));
                }
                let cap = Rational::new(BigInt::one(), BigInt::from(entry.t));
                if !entry.epsilon.is_positive() || entry.epsilon > cap {
                    return Err(ConstructionError::BadConfig(format!(
                        "override epsilon {} must lie in (0, 1/{}]",
                        entry.epsilon, entry.t
                    )));
                }
                prev_step = entry.from_step;
                prev_t = entry.t;
            }
        }
        Ok(())
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            constants: self.constants,
            slack: self.slack.clone(),
            precision_bits: self.precision_bits,
            n_ceiling: self.n_ceiling,
        }
    }

    /// Schedule for step s, with the override table applied to (t, epsilon).
    pub fn effective_schedule(&self, s: u64) -> Result<Schedule, ConstructionError> {
        let mut sched = measures::schedule(&BigInt::from(s), self.n_start)?;
        if let Some(table) = &self.schedule_override {
            for entry in table {
                if entry.from_step <= s {
                    sched.t = entry.t;
                    sched.epsilon = entry.epsilon.clone();
                }
            }
        }
        Ok(sched)
    }

    /// First step at which base b becomes active, as a printable value.
    fn activation_step(&self, base: u32) -> String {
        if base <= 2 {
            return "1".to_string();
        }
        if let Some(table) = &self.schedule_override {
            for entry in table {
                if entry.t >= base {
                    return entry.from_step.to_string();
                }
            }
            return "never under the configured override schedule".to_string();
        }
        // default schedule: t(s) >= b first holds at s = ceil(e^(b^5))
        let power = (base as u64).pow(5);
        if power <= 1024 {
            let exponent = Rational::from_integer(BigInt::from(power));
            match certified_floor(|w| Ok(exp_rat(&exponent, w))) {
                Ok(floor) => (floor + BigInt::one()).to_string(),
                Err(_) => format!("ceil(exp({base}^5))"),
            }
        } else {
            format!("ceil(exp({base}^5))")
        }
    }
}

/// Emitted digit streams for one base: x and y fractional digits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BaseStreams {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
}

/// Evidence record of one refinement step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: u32,
    pub epsilon: Rational,
    pub n_used: u64,
    pub block: CfWord,
    /// Per base: how many digits the x and y streams were scheduled to gain.
    pub per_base_new_digits: BTreeMap<u32, (u64, u64)>,
    pub margins: Vec<(String, Rational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionState {
    pub step: u64,
    pub pair: BrickPair,
    pub emitted_cf: Vec<u64>,
    pub emitted_bary: BTreeMap<u32, BaseStreams>,
    pub config: ConstructionConfig,
    pub history: Vec<StepRecord>,
}

impl ConstructionState {
    /// The starting state: step 1, initial pair, nothing emitted.
    pub fn init(config: ConstructionConfig) -> Result<ConstructionState, ConstructionError> {
        config.validate()?;
        Ok(ConstructionState {
            step: 1,
            pair: BrickPair::initial(),
            emitted_cf: Vec::new(),
            emitted_bary: BTreeMap::from([(2, BaseStreams::default())]),
            config,
            history: Vec::new(),
        })
    }

    pub fn steps_completed(&self) -> u64 {
        self.history.len() as u64
    }

    pub fn validate(&self) -> Diagnostics {
        validate_brick_pair(&self.pair, &self.config.slack)
    }
}

/// Advances the construction by one step; the input state is untouched.
pub fn step(state: &ConstructionState) -> Result<ConstructionState, ConstructionError> {
    let s_next = state.step + 1;
    let sched = state.config.effective_schedule(s_next)?;
    let t_cur = state.pair.t();
    if sched.t < t_cur || sched.t > t_cur + 1 {
        return Err(ConstructionError::ScheduleJump {
            step: s_next,
            from: t_cur,
            to: sched.t,
        });
    }
    let outcome = refine_pair(
        &state.pair,
        sched.t,
        &sched.epsilon,
        state.config.mode,
        sched.n0,
        &state.config.refine_config(),
    )
    .map_err(|source| ConstructionError::StepFailed {
        step: s_next,
        source,
    })?;

    let mut emitted_cf = state.emitted_cf.clone();
    emitted_cf.extend_from_slice(outcome.block.digits());

    let mut emitted_bary = state.emitted_bary.clone();
    for b in 2..=outcome.new_pair.t() {
        let entry = emitted_bary.entry(b).or_default();
        let x_prefix = bary_digits_common_prefix(outcome.new_pair.x().cf().interval(), b);
        let y_prefix = bary_digits_common_prefix(outcome.new_pair.y().cf().interval(), b);
        if !x_prefix.starts_with(&entry.x) || !y_prefix.starts_with(&entry.y) {
            return Err(ConstructionError::NonMonotonicStream { base: b });
        }
        entry.x = x_prefix;
        entry.y = y_prefix;
    }

    let margins = outcome
        .diagnostics
        .checks
        .iter()
        .filter_map(|c| c.margin.as_ref().map(|m| (c.name.clone(), m.clone())))
        .collect();
    let per_base_new_digits = outcome
        .per_base_extensions
        .iter()
        .map(|(b, ext)| (*b, (ext.new_digits_x, ext.new_digits_y)))
        .collect();
    let mut history = state.history.clone();
    history.push(StepRecord {
        step: s_next,
        t: sched.t,
        epsilon: sched.epsilon.clone(),
        n_used: outcome.n_used,
        block: outcome.block.clone(),
        per_base_new_digits,
        margins,
    });

    Ok(ConstructionState {
        step: s_next,
        pair: outcome.new_pair,
        emitted_cf,
        emitted_bary,
        config: state.config.clone(),
        history,
    })
}

/// Runs `steps` refinement steps from the initial state.
pub fn run(config: ConstructionConfig, steps: u64) -> Result<ConstructionState, ConstructionError> {
    if steps == 0 {
        return Err(ConstructionError::ZeroSteps);
    }
    let mut state = ConstructionState::init(config)?;
    for _ in 0..steps {
        state = step(&state)?;
    }
    Ok(state)
}

/// A digit stream with its integer part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigitStream {
    Cf { integer_part: u64, digits: Vec<u64> },
    Bary { base: u32, integer_part: u64, digits: Vec<u32> },
}

/// Digits of x or 1/x determined so far.
///
/// The cf stream of x is `1` followed by the shared block history; for 1/x
/// the integer part is 1 and the partial quotients are the shared history.
/// Base-b streams return the fractional digits forced by the current
/// intervals; asking for an inactive base reports the step at which that
/// base activates.
pub fn emit_digits(
    state: &ConstructionState,
    target: Target,
    kind: StreamKind,
) -> Result<DigitStream, ConstructionError> {
    match kind {
        StreamKind::Cf => {
            let digits = match target {
                Target::X => {
                    let mut d = vec![1u64];
                    d.extend_from_slice(&state.emitted_cf);
                    d
                }
                Target::OneOverX => state.emitted_cf.clone(),
            };
            let integer_part = match target {
                Target::X => 0,
                Target::OneOverX => 1,
            };
            Ok(DigitStream::Cf {
                integer_part,
                digits,
            })
        }
        StreamKind::Base(base) => {
            if base < 2 {
                return Err(ConstructionError::BadConfig(
                    "base must be at least 2".into(),
                ));
            }
            if base > state.pair.t() {
                return Err(ConstructionError::BaseNotActive {
                    base,
                    activates: state.config.activation_step(base),
                });
            }
            let streams = state
                .emitted_bary
                .get(&base)
                .cloned()
                .unwrap_or_default();
            let (integer_part, digits) = match target {
                Target::X => (0, streams.x),
                Target::OneOverX => (1, streams.y),
            };
            Ok(DigitStream::Bary {
                base,
                integer_part,
                digits,
            })
        }
    }
}
