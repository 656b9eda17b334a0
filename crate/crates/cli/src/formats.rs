//! File formats: instance JSON, result JSON, ratio and histogram CSV,
//! and the solver problem dump.
//!
//! Instance files look like
//! `{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0],[0.0,1.0]]}`
//! with `"Q"` and `"P"` added for the multi-slot model. Real channels are
//! arrays of numbers; complex channels are arrays of `[re, im]` pairs.
//! All floats are written in shortest round-trip form, so persisted
//! numbers reparse to the exact bit pattern that produced them.

use groupcast_core::instance::{
    validate_instance, Channel, Field, InstanceP1, InstanceP2, InstanceRef, Violation,
};
use groupcast_core::linalg::{CMat, Cplx};
use groupcast_core::sdp::SdpProblem;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::experiment::{ExperimentReport, RealizationRecord};

/// An instance file that could not be understood.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct InstanceParseError {
    /// What was wrong with the file.
    pub message: String,
}

fn parse_err(message: impl Into<String>) -> InstanceParseError {
    InstanceParseError { message: message.into() }
}

/// Either instance shape, as read from a file.
#[derive(Clone, Debug)]
pub enum ParsedInstance {
    /// Two-slot instance.
    P1(InstanceP1),
    /// Multi-slot instance.
    P2(InstanceP2),
}

impl ParsedInstance {
    /// Structural validation findings for the parsed instance.
    pub fn violations(&self) -> Vec<Violation> {
        match self {
            ParsedInstance::P1(i) => validate_instance(InstanceRef::P1(i)),
            ParsedInstance::P2(i) => validate_instance(InstanceRef::P2(i)),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryJson {
    Real(f64),
    Pair([f64; 2]),
}

#[derive(Deserialize)]
struct InstanceJson {
    model: String,
    field: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "Q", default)]
    q: Option<usize>,
    #[serde(rename = "P", default)]
    p: Option<Vec<usize>>,
    channels: Vec<Vec<EntryJson>>,
}

/// Parse an instance file.
pub fn parse_instance(text: &str) -> Result<ParsedInstance, InstanceParseError> {
    let raw: InstanceJson =
        serde_json::from_str(text).map_err(|e| parse_err(format!("not valid instance JSON: {e}")))?;
    let field = match raw.field.as_str() {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(parse_err(format!("unknown field {other:?}"))),
    };
    if raw.channels.len() != raw.m {
        return Err(parse_err(format!(
            "M is {} but {} channels are listed",
            raw.m,
            raw.channels.len()
        )));
    }
    let mut channels = Vec::with_capacity(raw.m);
    for (i, entries) in raw.channels.iter().enumerate() {
        if entries.len() != raw.n {
            return Err(parse_err(format!(
                "channel {i} has {} entries, expected N = {}",
                entries.len(),
                raw.n
            )));
        }
        let parsed: Vec<Cplx> = entries
            .iter()
            .map(|e| match *e {
                EntryJson::Real(re) => Ok(Cplx::new(re, 0.0)),
                EntryJson::Pair([re, im]) => {
                    if field == Field::Real && im != 0.0 {
                        Err(parse_err(format!(
                            "channel {i} has a nonzero imaginary part in a real instance"
                        )))
                    } else {
                        Ok(Cplx::new(re, im))
                    }
                }
            })
            .collect::<Result<_, _>>()?;
        channels.push(Channel::new(parsed));
    }
    match raw.model.as_str() {
        "p1" => Ok(ParsedInstance::P1(InstanceP1 { field, channels })),
        "p2" => {
            let q = raw.q.ok_or_else(|| parse_err("p2 instance is missing \"Q\""))?;
            let priorities = raw.p.ok_or_else(|| parse_err("p2 instance is missing \"P\""))?;
            if priorities.len() != raw.m {
                return Err(parse_err(format!(
                    "P lists {} quotas for M = {} users",
                    priorities.len(),
                    raw.m
                )));
            }
            Ok(ParsedInstance::P2(InstanceP2 { field, channels, q, priorities }))
        }
        other => Err(parse_err(format!("unknown model {other:?}"))),
    }
}

fn entry_value(field: Field, v: Cplx) -> Value {
    match field {
        Field::Real => json!(v.re),
        Field::Complex => json!([v.re, v.im]),
    }
}

fn vector_value(field: Field, v: &[Cplx]) -> Value {
    Value::Array(v.iter().map(|&x| entry_value(field, x)).collect())
}

/// Serialize an instance in the instance file format.
pub fn instance_json(inst: &ParsedInstance) -> String {
    let value = match inst {
        ParsedInstance::P1(i) => json!({
            "model": "p1",
            "field": i.field.to_string(),
            "N": i.n(),
            "M": i.m(),
            "channels": i.channels.iter().map(|c| vector_value(i.field, c.entries())).collect::<Vec<_>>(),
        }),
        ParsedInstance::P2(i) => json!({
            "model": "p2",
            "field": i.field.to_string(),
            "N": i.n(),
            "M": i.m(),
            "Q": i.q,
            "P": i.priorities,
            "channels": i.channels.iter().map(|c| vector_value(i.field, c.entries())).collect::<Vec<_>>(),
        }),
    };
    pretty(&value)
}

/// Violations rendered as machine-readable JSON.
pub fn violations_json(violations: &[Violation]) -> Value {
    Value::Array(
        violations
            .iter()
            .map(|v| {
                json!({
                    "code": v.code.as_str(),
                    "index": v.index,
                    "message": v.message,
                })
            })
            .collect(),
    )
}

/// Stable pretty-printing (sorted keys, two-space indent, trailing
/// newline) shared by every JSON artifact.
pub fn pretty(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable");
    out.push('\n');
    out
}

/// Per-realization CSV: `realization,seed,v_sdp,v_ubqp,ratio,success_freq`.
pub fn ratios_csv(records: &[RealizationRecord]) -> String {
    let mut out = String::from("realization,seed,v_sdp,v_ubqp,ratio,success_freq\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.realization, r.seed, r.v_sdp, r.v_ubqp, r.ratio, r.success_freq
        ));
    }
    out
}

/// Histogram CSV: `bin_lo,bin_hi,count`.
pub fn histogram_csv(bins: &[(f64, f64, u64)]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for &(lo, hi, count) in bins {
        out.push_str(&format!("{lo},{hi},{count}\n"));
    }
    out
}

/// Experiment report JSON: config echo, aggregate statistics, failure
/// accounting, and companion file names.
pub fn report_json(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let mut config = Map::new();
    config.insert("model".into(), json!(cfg.model_tag().to_string()));
    config.insert("field".into(), json!(cfg.field.to_string()));
    config.insert("M".into(), json!(cfg.m));
    config.insert("N".into(), json!(cfg.n));
    if let Some((q, p)) = cfg.slots() {
        config.insert("Q".into(), json!(q));
        config.insert("P".into(), json!(p));
    }
    config.insert("realizations".into(), json!(cfg.realizations));
    config.insert("trials_per_realization".into(), json!(cfg.trials));
    config.insert("seed".into(), json!(cfg.seed));
    let value = json!({
        "config": Value::Object(config),
        "stats": {
            "min": report.stats.min,
            "max": report.stats.max,
            "mean": report.stats.mean,
            "std": report.stats.std,
            "std_convention": "sample (N-1)",
        },
        "realizations_used": report.records.len(),
        "failed_realizations": report.failures.len(),
        "failures": report.failures.iter().map(|f| json!({
            "realization": f.realization,
            "reason": f.reason,
        })).collect::<Vec<_>>(),
        "files": { "ratios": "ratios.csv", "histogram": "histogram.csv" },
    });
    pretty(&value)
}

fn matrix_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.n())
            .map(|i| {
                Value::Array(
                    (0..m.n()).map(|j| json!([m.get(i, j).re, m.get(i, j).im])).collect(),
                )
            })
            .collect(),
    )
}

/// Debug dump of a solver problem. Matrix entries are always `[re, im]`
/// pairs regardless of field.
pub fn sdp_dump_json(p: &SdpProblem) -> String {
    let value = json!({
        "field": match p.field { Field::Real => "real", Field::Complex => "complex" },
        "block_dims": p.block_dims,
        "block_trace_cost": p.block_trace_cost,
        "scalar_bounds": p.scalar_bounds.iter().map(|&(lo, hi)| json!([lo, hi])).collect::<Vec<_>>(),
        "scalar_cost": p.scalar_cost,
        "constraints": p.constraints.iter().map(|c| json!({
            "block_terms": c.block_terms.iter().map(|(b, m)| json!({
                "block": b,
                "matrix": matrix_value(m),
            })).collect::<Vec<_>>(),
            "scalar_terms": c.scalar_terms.iter().map(|&(i, v)| json!({
                "index": i,
                "coeff": v,
            })).collect::<Vec<_>>(),
            "rhs": c.rhs,
        })).collect::<Vec<_>>(),
    });
    pretty(&value)
}

/// Beamformer vectors rendered in the instance entry convention.
pub fn w_blocks_value(field: Field, w_blocks: &[Vec<Cplx>]) -> Value {
    Value::Array(w_blocks.iter().map(|w| vector_value(field, w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_real_p1_round_trip() {
        let text = r#"{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0],[0.5,-2.0]]}"#;
        let inst = parse_instance(text).unwrap();
        let ParsedInstance::P1(p1) = &inst else { panic!("expected p1") };
        assert_eq!(p1.m(), 2);
        assert_eq!(p1.n(), 2);
        assert_eq!(p1.field, Field::Real);
        assert_eq!(p1.channels[1].entries()[1], Cplx::new(-2.0, 0.0));
        let serialized = instance_json(&inst);
        let reparsed = parse_instance(&serialized).unwrap();
        let ParsedInstance::P1(back) = reparsed else { panic!("expected p1") };
        assert_eq!(back.channels[1].entries(), p1.channels[1].entries());
    }

    #[test]
    fn parse_complex_p2() {
        let text = r#"{
            "model": "p2", "field": "complex", "N": 2, "M": 1, "Q": 3, "P": [2],
            "channels": [[[1.0, 0.5], [0.0, -1.0]]]
        }"#;
        let inst = parse_instance(text).unwrap();
        let ParsedInstance::P2(p2) = &inst else { panic!("expected p2") };
        assert_eq!(p2.q, 3);
        assert_eq!(p2.priorities, vec![2]);
        assert_eq!(p2.channels[0].entries()[0], Cplx::new(1.0, 0.5));
        // M = 1 draws an advisory flag only; the instance stays usable.
        assert!(groupcast_core::instance::is_structurally_sound(&inst.violations()));
    }

    #[test]
    fn parse_rejects_malformed_files() {
        assert!(parse_instance("not json").is_err());
        // Channel count mismatch.
        let text = r#"{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0]]}"#;
        assert!(parse_instance(text).is_err());
        // Entry count mismatch.
        let text = r#"{"model":"p1","field":"real","N":3,"M":1,"channels":[[1.0,0.0]]}"#;
        assert!(parse_instance(text).is_err());
        // Complex entry in a real instance.
        let text = r#"{"model":"p1","field":"real","N":2,"M":1,"channels":[[[1.0,2.0],0.0]]}"#;
        assert!(parse_instance(text).is_err());
        // Missing quota data for p2.
        let text = r#"{"model":"p2","field":"real","N":2,"M":1,"channels":[[1.0,0.0]]}"#;
        assert!(parse_instance(text).is_err());
        // Unknown model.
        let text = r#"{"model":"p3","field":"real","N":2,"M":1,"channels":[[1.0,0.0]]}"#;
        assert!(parse_instance(text).is_err());
    }

    #[test]
    fn csv_floats_round_trip() {
        let records = vec![RealizationRecord {
            realization: 0,
            seed: 12345,
            v_sdp: 1.0 / 3.0,
            v_ubqp: 0.5000000000000001,
            ratio: 1.5000000000000002,
            success_freq: 0.077,
        }];
        let csv = ratios_csv(&records);
        let line = csv.lines().nth(1).unwrap();
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2].parse::<f64>().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(
            cols[4].parse::<f64>().unwrap().to_bits(),
            1.5000000000000002f64.to_bits()
        );
    }
}
