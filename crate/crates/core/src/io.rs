//! JSON forms of tokens and outputs, and the JSONL line writers.
//!
//! Vertex labels are 1-based on the wire. Subset-keyed maps use the compact
//! JSON text of the sorted label list as the key, e.g. `"[1,2]"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{normalize_subset, Hyperedge, MeasurementRecord, Outcome, OutcomeDistribution, Token};

/// Floats are written with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn outcome_json(o: &Outcome) -> String {
    match o {
        Outcome::Phase(x) => fmt_float(*x),
        Outcome::Residue(r) => r.to_string(),
    }
}

fn outcomes_json(r: &MeasurementRecord) -> String {
    let mut s = String::from("[");
    for (i, o) in r.outcomes.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&outcome_json(o));
    }
    s.push(']');
    s
}

/// `{"y":[...],"p":...}`
pub fn distribution_line(record: &MeasurementRecord, p: f64) -> String {
    format!("{{\"y\":{},\"p\":{}}}", outcomes_json(record), fmt_float(p))
}

pub fn distribution_jsonl(dist: &OutcomeDistribution) -> String {
    let mut out = String::new();
    for (r, p) in dist.entries() {
        writeln!(out, "{}", distribution_line(r, *p)).expect("writing to a String");
    }
    out
}

/// `{"trajectory":t,"y":[...]}`
pub fn trajectory_line(trajectory: u64, record: &MeasurementRecord) -> String {
    format!("{{\"trajectory\":{trajectory},\"y\":{}}}", outcomes_json(record))
}

/// Parses one line written by [`distribution_line`]. Integers become
/// residues and everything else a phase.
pub fn parse_distribution_line(line: &str) -> Result<(MeasurementRecord, f64)> {
    let v: serde_json::Value = serde_json::from_str(line)?;
    let bad = || Error::InvalidArgument(format!("not a distribution line: {line}"));
    let ys = v.get("y").and_then(|y| y.as_array()).ok_or_else(bad)?;
    let p = v.get("p").and_then(|p| p.as_f64()).ok_or_else(bad)?;
    let outcomes = ys
        .iter()
        .map(|y| match (y.as_i64(), y.as_f64()) {
            (Some(r), _) if y.is_i64() => Ok(Outcome::Residue(r)),
            (_, Some(x)) => Ok(Outcome::Phase(x)),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((MeasurementRecord::from(outcomes), p))
}

pub fn subset_key(s: &[usize]) -> String {
    let labels: Vec<usize> = s.iter().map(|v| v + 1).collect();
    serde_json::to_string(&labels).expect("integer list serializes")
}

pub fn parse_subset_key(key: &str) -> Result<Vec<usize>> {
    let labels: Vec<usize> = serde_json::from_str(key)
        .map_err(|_| Error::InvalidArgument(format!("bad subset key {key:?}")))?;
    if labels.contains(&0) {
        return Err(Error::InvalidArgument(format!("subset key {key:?} has label 0")));
    }
    normalize_subset(labels.into_iter().map(|v| v - 1).collect())
}

pub fn theta_to_json(theta: &BTreeMap<Vec<usize>, f64>) -> BTreeMap<String, f64> {
    theta.iter().map(|(k, v)| (subset_key(k), *v)).collect()
}

pub fn theta_from_json(raw: &BTreeMap<String, f64>) -> Result<BTreeMap<Vec<usize>, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        if out.insert(parse_subset_key(k)?, *v).is_some() {
            return Err(Error::InvalidArgument(format!("repeated theta key {k:?}")));
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawToken {
    alpha: Option<Vec<usize>>,
    beta: Option<Vec<usize>>,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    phi: Vec<f64>,
    #[serde(default)]
    theta: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    exact_q: bool,
}

impl From<Token> for RawToken {
    fn from(t: Token) -> Self {
        RawToken {
            alpha: t.alpha.map(|e| e.one_based()),
            beta: t.beta.map(|e| e.one_based()),
            gamma: t.gamma,
            phi: t.phi,
            theta: theta_to_json(&t.theta),
            exact_q: t.exact_q,
        }
    }
}

impl TryFrom<RawToken> for Token {
    type Error = Error;

    fn try_from(r: RawToken) -> Result<Self> {
        let edge = |v: Option<Vec<usize>>| v.map(|l| Hyperedge::from_one_based(&l)).transpose();
        Ok(Token {
            alpha: edge(r.alpha)?,
            beta: edge(r.beta)?,
            gamma: r.gamma,
            phi: r.phi,
            theta: theta_from_json(&r.theta)?,
            exact_q: r.exact_q,
        })
    }
}

pub fn tokens_to_jsonl(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        let line = serde_json::to_string(&RawToken::from(t.clone())).expect("token serializes");
        writeln!(out, "{line}").expect("writing to a String");
    }
    out
}

pub fn tokens_from_jsonl(text: &str) -> Result<Vec<Token>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Token::try_from(serde_json::from_str::<RawToken>(l)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        let back: f64 = fmt_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn token_wire_form() {
        let t = Token::measure(
            Hyperedge::new([0, 1]).unwrap(),
            vec![0.0, 0.5],
            [(vec![0, 1], 1.5), (vec![], 0.25)].into_iter().collect(),
        );
        let s = tokens_to_jsonl(std::slice::from_ref(&t));
        assert_eq!(
            s.trim(),
            r#"{"alpha":null,"beta":[1,2],"gamma":0.0,"phi":[0.0,0.5],"theta":{"[1,2]":1.5,"[]":0.25}}"#
        );
        assert_eq!(tokens_from_jsonl(&s).unwrap(), vec![t]);
        let q = Token::exact_q(2);
        assert_eq!(tokens_from_jsonl(&tokens_to_jsonl(std::slice::from_ref(&q))).unwrap(), vec![q]);
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(tokens_from_jsonl(r#"{"alpha":null,"beta":[1],"phi":[0],"theta":{"[0]":1}}"#).is_err());
        assert!(tokens_from_jsonl(r#"{"alpha":[1,1],"beta":null}"#).is_err());
    }

    #[test]
    fn distribution_lines_round_trip() {
        let r = MeasurementRecord::from(vec![Outcome::Phase(-0.5), Outcome::Residue(3)]);
        let line = distribution_line(&r, 0.25);
        let (back, p) = parse_distribution_line(&line).unwrap();
        assert_eq!(back, r);
        assert_eq!(p, 0.25);
    }
}
