//! JSON Lines trajectory records.
//!
//! The first line is a header object; every following line is one sample
//! `{"t", "loss", "gnorm", "x"?, "m"?, "v"?}`. Non-finite numbers are written
//! as the strings `"inf"`, `"-inf"` and `"nan"`; finite ones use the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::CliError;
use crate::trajectory::{StateSample, Trajectory, TrajectoryKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub kind: TrajectoryKind,
    pub step: f64,
    pub meta: String,
    #[serde(default)]
    pub clip_count: usize,
    /// The resolved configuration that produced the run.
    #[serde(default)]
    pub config: Value,
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

fn parse_num(v: &Value, line: usize) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad(line, "number out of range")),
        Value::String(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            _ => Err(bad(line, &format!("unexpected string {s:?}"))),
        },
        _ => Err(bad(line, "expected a number")),
    }
}

fn parse_nums(v: Option<&Value>, line: usize) -> Result<Vec<f64>, CliError> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items.iter().map(|x| parse_num(x, line)).collect(),
        Some(_) => Err(bad(line, "expected an array")),
    }
}

fn bad(line: usize, msg: &str) -> CliError {
    CliError::Config(format!("trajectory record line {line}: {msg}"))
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, config: Value, mut out: W) -> std::io::Result<()> {
    let header = RecordHeader {
        kind: traj.kind,
        step: traj.step,
        meta: traj.meta.clone(),
        clip_count: traj.clip_count,
        config,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for k in 0..traj.len() {
        let mut line = serde_json::Map::new();
        line.insert("t".into(), num(traj.times[k]));
        line.insert("loss".into(), num(traj.losses[k]));
        line.insert("gnorm".into(), num(traj.grad_norms[k]));
        if let Some(s) = traj.states.as_ref().map(|s| &s[k]) {
            for (key, vals) in [("x", &s.x), ("m", &s.m), ("v", &s.v)] {
                if !vals.is_empty() {
                    line.insert(key.into(), nums(vals));
                }
            }
        }
        serde_json::to_writer(&mut out, &Value::Object(line))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Parses a record. A trajectory whose last loss is non-finite is marked diverged.
pub fn read_trajectory<R: BufRead>(input: R) -> Result<(RecordHeader, Trajectory), CliError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| CliError::Config("empty trajectory record".into()))?;
    let first = first?;
    let header: RecordHeader = serde_json::from_str(&first).map_err(|e| bad(1, &e.to_string()))?;
    let mut traj = Trajectory::new(header.kind, header.step, false, header.meta.clone());
    traj.clip_count = header.clip_count;
    let mut states = Vec::new();
    let mut any_state = false;
    for (idx, line) in lines {
        let n = idx + 1;
        let value: Value = serde_json::from_str(&line?).map_err(|e| bad(n, &e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| bad(n, "expected an object"))?;
        let field = |k: &str| obj.get(k).ok_or_else(|| bad(n, &format!("missing `{k}`")));
        let t = parse_num(field("t")?, n)?;
        if let Some(&prev) = traj.times.last() {
            if !(t > prev) {
                return Err(bad(n, "times must be strictly increasing"));
            }
        }
        if traj.diverged {
            return Err(bad(n, "samples after a non-finite loss"));
        }
        let loss = parse_num(field("loss")?, n)?;
        traj.times.push(t);
        traj.losses.push(loss);
        traj.grad_norms.push(parse_num(field("gnorm")?, n)?);
        let x = parse_nums(obj.get("x"), n)?;
        any_state |= !x.is_empty();
        states.push(StateSample { x, m: parse_nums(obj.get("m"), n)?, v: parse_nums(obj.get("v"), n)? });
        if !loss.is_finite() {
            traj.diverged = true;
        }
    }
    if traj.is_empty() {
        return Err(CliError::Config("trajectory record has no samples".into()));
    }
    if any_state {
        traj.states = Some(states);
    }
    Ok((header, traj))
}
