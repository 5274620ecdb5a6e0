//! Lossless persistence of a construction state as a JSON document.
//!
//! All integers are decimal strings so arbitrary-precision values survive
//! any JSON reader. The document stores the configuration with its hash, the
//! shared cf digit array, the per-base cylinder descriptors of both bricks,
//! the emitted digit streams, and the per-step history. Restoring rebuilds
//! the cf cylinders from the digit array, reattaches the stored b-ary
//! descriptors, and re-runs every pair invariant; a tampered document fails
//! either the hash comparison or an invariant.

use crate::construction::{
    BaseStreams, ConstructionConfig, ConstructionState, OverrideEntry, StepRecord,
};
use crate::cylinder::{bary_digits_common_prefix, cf_cylinder, BaryCylinder};
use crate::rational::{prepend_one, rational_from_str, CfWord, Rational};
use crate::refinement::{validate_brick_pair, Brick, BrickPair, SearchMode};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const FORMAT: &str = "cfnorm-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot parse checkpoint: {0}")]
    Parse(String),
    #[error("unsupported checkpoint format {0:?}")]
    Format(String),
    #[error("config hash mismatch: stored {stored}, computed {computed}")]
    HashMismatch { stored: String, computed: String },
    #[error("invariant failure on load: {0}")]
    InvariantFailure(String),
    #[error("invalid field {field}: {value:?}")]
    BadField { field: &'static str, value: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointDocument {
    pub format: String,
    pub config: ConfigDoc,
    pub config_hash: String,
    pub step: String,
    pub cf_digits: Vec<String>,
    pub x_bary: Vec<BaryDoc>,
    pub y_bary: Vec<BaryDoc>,
    pub emitted_bary: BTreeMap<String, StreamsDoc>,
    pub history: Vec<HistoryDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub mode: String,
    pub n_start: String,
    pub constant_k: String,
    pub constant_c: String,
    pub constant_n1: String,
    pub slack: String,
    pub precision_bits: String,
    pub n_ceiling: String,
    pub schedule_override: Option<Vec<OverrideDoc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverrideDoc {
    pub from_step: String,
    pub t: String,
    pub epsilon: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaryDoc {
    pub base: String,
    pub order: String,
    pub start_index: String,
    pub width: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamsDoc {
    pub x: Vec<String>,
    pub y: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryDoc {
    pub step: String,
    pub t: String,
    pub epsilon: String,
    pub n_used: String,
    pub block: Vec<String>,
    pub per_base_new_digits: BTreeMap<String, (String, String)>,
    pub margins: Vec<(String, String)>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn config_doc(config: &ConstructionConfig) -> ConfigDoc {
    ConfigDoc {
        mode: match config.mode {
            SearchMode::Search => "search".to_string(),
            SearchMode::Schedule => "schedule".to_string(),
        },
        n_start: config.n_start.to_string(),
        constant_k: config.constants.k.to_string(),
        constant_c: config.constants.c.to_string(),
        constant_n1: config.constants.n1.to_string(),
        slack: config.slack.to_string(),
        precision_bits: config.precision_bits.to_string(),
        n_ceiling: config.n_ceiling.to_string(),
        schedule_override: config.schedule_override.as_ref().map(|table| {
            table
                .iter()
                .map(|e| OverrideDoc {
                    from_step: e.from_step.to_string(),
                    t: e.t.to_string(),
                    epsilon: e.epsilon.to_string(),
                })
                .collect()
        }),
    }
}

/// Hash of the canonical JSON encoding of the configuration.
pub fn config_hash(config: &ConstructionConfig) -> String {
    let doc = config_doc(config);
    let encoded = serde_json::to_string(&doc).expect("config serializes");
    format!("{:016x}", fnv1a64(encoded.as_bytes()))
}

fn parse_field<T: std::str::FromStr>(
    field: &'static str,
    value: &str,
) -> Result<T, CheckpointError> {
    value.parse().map_err(|_| CheckpointError::BadField {
        field,
        value: value.to_string(),
    })
}

fn parse_rational(field: &'static str, value: &str) -> Result<Rational, CheckpointError> {
    rational_from_str(value).map_err(|_| CheckpointError::BadField {
        field,
        value: value.to_string(),
    })
}

/// Serializes a state into a checkpoint document.
pub fn checkpoint(state: &ConstructionState) -> CheckpointDocument {
    let bary_docs = |brick: &Brick| -> Vec<BaryDoc> {
        brick
            .bary()
            .iter()
            .map(|(b, cyl)| BaryDoc {
                base: b.to_string(),
                order: cyl.order().to_string(),
                start_index: cyl.start_index().to_string(),
                width: cyl.width_units().to_string(),
            })
            .collect()
    };
    CheckpointDocument {
        format: FORMAT.to_string(),
        config: config_doc(&state.config),
        config_hash: config_hash(&state.config),
        step: state.step.to_string(),
        cf_digits: state.emitted_cf.iter().map(|d| d.to_string()).collect(),
        x_bary: bary_docs(state.pair.x()),
        y_bary: bary_docs(state.pair.y()),
        emitted_bary: state
            .emitted_bary
            .iter()
            .map(|(b, streams)| {
                (
                    b.to_string(),
                    StreamsDoc {
                        x: streams.x.iter().map(|d| d.to_string()).collect(),
                        y: streams.y.iter().map(|d| d.to_string()).collect(),
                    },
                )
            })
            .collect(),
        history: state
            .history
            .iter()
            .map(|rec| HistoryDoc {
                step: rec.step.to_string(),
                t: rec.t.to_string(),
                epsilon: rec.epsilon.to_string(),
                n_used: rec.n_used.to_string(),
                block: rec.block.digits().iter().map(|d| d.to_string()).collect(),
                per_base_new_digits: rec
                    .per_base_new_digits
                    .iter()
                    .map(|(b, (x, y))| (b.to_string(), (x.to_string(), y.to_string())))
                    .collect(),
                margins: rec
                    .margins
                    .iter()
                    .map(|(name, value)| (name.clone(), value.to_string()))
                    .collect(),
            })
            .collect(),
    }
}

pub fn to_json(state: &ConstructionState) -> String {
    serde_json::to_string_pretty(&checkpoint(state)).expect("checkpoint serializes")
}

fn parse_config(doc: &ConfigDoc) -> Result<ConstructionConfig, CheckpointError> {
    let mode = match doc.mode.as_str() {
        "search" => SearchMode::Search,
        "schedule" => SearchMode::Schedule,
        other => {
            return Err(CheckpointError::BadField {
                field: "mode",
                value: other.to_string(),
            })
        }
    };
    let schedule_override = match &doc.schedule_override {
        None => None,
        Some(table) => Some(
            table
                .iter()
                .map(|e| {
                    Ok(OverrideEntry {
                        from_step: parse_field("override.from_step", &e.from_step)?,
                        t: parse_field("override.t", &e.t)?,
                        epsilon: parse_rational("override.epsilon", &e.epsilon)?,
                    })
                })
                .collect::<Result<Vec<_>, CheckpointError>>()?,
        ),
    };
    Ok(ConstructionConfig {
        mode,
        n_start: parse_field("n_start", &doc.n_start)?,
        constants: crate::measures::BoundConstants {
            k: parse_field("constant_k", &doc.constant_k)?,
            c: parse_field("constant_c", &doc.constant_c)?,
            n1: parse_field("constant_n1", &doc.constant_n1)?,
        },
        slack: parse_rational("slack", &doc.slack)?,
        precision_bits: parse_field("precision_bits", &doc.precision_bits)?,
        n_ceiling: parse_field("n_ceiling", &doc.n_ceiling)?,
        schedule_override,
    })
}

fn parse_bary(docs: &[BaryDoc]) -> Result<BTreeMap<u32, BaryCylinder>, CheckpointError> {
    let mut out = BTreeMap::new();
    for doc in docs {
        let base: u32 = parse_field("bary.base", &doc.base)?;
        let order: u64 = parse_field("bary.order", &doc.order)?;
        let start: BigUint = doc.start_index.parse().map_err(|_| CheckpointError::BadField {
            field: "bary.start_index",
            value: doc.start_index.clone(),
        })?;
        let width: u8 = parse_field("bary.width", &doc.width)?;
        let cyl = BaryCylinder::new(base, order, start, width).map_err(|e| {
            CheckpointError::InvariantFailure(format!("base {base} descriptor: {e}"))
        })?;
        out.insert(base, cyl);
    }
    Ok(out)
}

fn parse_digit_stream(field: &'static str, digits: &[String], base: u32) -> Result<Vec<u32>, CheckpointError> {
    digits
        .iter()
        .map(|d| {
            let v: u32 = parse_field(field, d)?;
            if v >= base {
                return Err(CheckpointError::BadField {
                    field,
                    value: d.clone(),
                });
            }
            Ok(v)
        })
        .collect()
}

/// Rebuilds a state from a document and re-verifies every invariant.
pub fn restore(doc: &CheckpointDocument) -> Result<ConstructionState, CheckpointError> {
    if doc.format != FORMAT {
        return Err(CheckpointError::Format(doc.format.clone()));
    }
    let config = parse_config(&doc.config)?;
    config
        .validate()
        .map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?;
    let computed = config_hash(&config);
    if computed != doc.config_hash {
        return Err(CheckpointError::HashMismatch {
            stored: doc.config_hash.clone(),
            computed,
        });
    }
    let step: u64 = parse_field("step", &doc.step)?;
    let emitted_cf: Vec<u64> = doc
        .cf_digits
        .iter()
        .map(|d| parse_field("cf_digits", d))
        .collect::<Result<_, _>>()?;
    let shared = CfWord::new(emitted_cf.clone())
        .map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?;
    let x_word = prepend_one(&shared);
    let x_cyl = cf_cylinder(&x_word);
    let y_cyl = cf_cylinder(&shared);
    let x_bary = parse_bary(&doc.x_bary)?;
    let y_bary = parse_bary(&doc.y_bary)?;
    let t = x_bary.keys().max().copied().unwrap_or(1);
    let pair = BrickPair::new(
        Brick::new(t, x_cyl, x_bary).map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?,
        Brick::new(t, y_cyl, y_bary).map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?,
    )
    .map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?;
    let diag = validate_brick_pair(&pair, &config.slack);
    if !diag.all_passed() {
        let names: Vec<String> = diag.failures().iter().map(|c| c.name.clone()).collect();
        return Err(CheckpointError::InvariantFailure(names.join(", ")));
    }
    let mut emitted_bary = BTreeMap::new();
    for (base_str, streams) in &doc.emitted_bary {
        let base: u32 = parse_field("emitted_bary.base", base_str)?;
        let x = parse_digit_stream("emitted_bary.x", &streams.x, base)?;
        let y = parse_digit_stream("emitted_bary.y", &streams.y, base)?;
        // stored streams must still be prefixes of what the intervals force
        let x_prefix = bary_digits_common_prefix(pair.x().cf().interval(), base);
        let y_prefix = bary_digits_common_prefix(pair.y().cf().interval(), base);
        if !x_prefix.starts_with(&x) || !y_prefix.starts_with(&y) {
            return Err(CheckpointError::InvariantFailure(format!(
                "emitted base-{base} digits are not prefixes of the current intervals"
            )));
        }
        emitted_bary.insert(base, BaseStreams { x, y });
    }
    let history = doc
        .history
        .iter()
        .map(|rec| {
            Ok(StepRecord {
                step: parse_field("history.step", &rec.step)?,
                t: parse_field("history.t", &rec.t)?,
                epsilon: parse_rational("history.epsilon", &rec.epsilon)?,
                n_used: parse_field("history.n_used", &rec.n_used)?,
                block: CfWord::new(
                    rec.block
                        .iter()
                        .map(|d| parse_field("history.block", d))
                        .collect::<Result<Vec<u64>, _>>()?,
                )
                .map_err(|e| CheckpointError::InvariantFailure(e.to_string()))?,
                per_base_new_digits: rec
                    .per_base_new_digits
                    .iter()
                    .map(|(b, (x, y))| {
                        Ok((
                            parse_field::<u32>("history.base", b)?,
                            (
                                parse_field::<u64>("history.new_x", x)?,
                                parse_field::<u64>("history.new_y", y)?,
                            ),
                        ))
                    })
                    .collect::<Result<BTreeMap<_, _>, CheckpointError>>()?,
                margins: rec
                    .margins
                    .iter()
                    .map(|(name, value)| Ok((name.clone(), parse_rational("history.margin", value)?)))
                    .collect::<Result<Vec<_>, CheckpointError>>()?,
            })
        })
        .collect::<Result<Vec<_>, CheckpointError>>()?;
    // the emitted block history must match the step records
    let from_history: usize = history.iter().map(|r| r.block.len()).sum();
    if from_history != emitted_cf.len() {
        return Err(CheckpointError::InvariantFailure(
            "cf digit array does not match the block history".into(),
        ));
    }
    Ok(ConstructionState {
        step,
        pair,
        emitted_cf,
        emitted_bary,
        config,
        history,
    })
}

pub fn from_json(text: &str) -> Result<ConstructionState, CheckpointError> {
    let doc: CheckpointDocument =
        serde_json::from_str(text).map_err(|e| CheckpointError::Parse(e.to_string()))?;
    restore(&doc)
}
