use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::Value;

use crate::error::{Error, Result};

/// One matched numeric metric; deltas are `a - b`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricDelta {
    pub key: String,
    pub a: f64,
    pub b: f64,
    pub absolute: f64,
    /// `(a - b) / |b|`; `None` when `b` is zero and `a` is not.
    pub relative: Option<f64>,
}

/// A matched non-numeric metric whose values differ.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueChange {
    pub key: String,
    pub a: String,
    pub b: String,
}

/// Key-sorted differences between two reports.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    pub deltas: Vec<MetricDelta>,
    pub changed: Vec<ValueChange>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

impl Comparison {
    pub fn delta(&self, key: &str) -> Option<&MetricDelta> {
        self.deltas.iter().find(|d| d.key == key)
    }

    /// `metric,a,b,abs_delta,rel_delta` rows followed by changed and
    /// unmatched keys.
    pub fn to_text(&self) -> String {
        let mut out = String::from("metric,a,b,abs_delta,rel_delta\n");
        for d in &self.deltas {
            let rel = d.relative.map_or_else(String::new, |r| r.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", d.key, d.a, d.b, d.absolute, rel);
        }
        for c in &self.changed {
            let _ = writeln!(out, "changed,{},{},{}", c.key, c.a, c.b);
        }
        for k in &self.only_in_a {
            let _ = writeln!(out, "only_in_a,{k}");
        }
        for k in &self.only_in_b {
            let _ = writeln!(out, "only_in_b,{k}");
        }
        out
    }
}

/// Keys skipped by [`compare`]: the schema tag and the echoed inputs.
const SKIPPED: [&str; 2] = ["schema_version", "config"];

fn flatten(v: &Value, prefix: &str, out: &mut BTreeMap<String, Value>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                if prefix.is_empty() && SKIPPED.contains(&k.as_str()) {
                    continue;
                }
                flatten(v, &join(k), out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, &join(&i.to_string()), out);
            }
        }
        leaf => {
            out.insert(prefix.to_string(), leaf.clone());
        }
    }
}

fn schema(v: &Value) -> Option<u64> {
    v.get("schema_version").and_then(Value::as_u64)
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Per-metric differences between two JSON reports of the same schema.
pub fn compare(report_a: &Value, report_b: &Value) -> Result<Comparison> {
    match (schema(report_a), schema(report_b)) {
        (Some(x), Some(y)) if x == y => {}
        (x, y) => {
            let show = |s: Option<u64>| s.map_or_else(|| "missing".to_string(), |v| v.to_string());
            return Err(Error::Version(format!(
                "schema_version {} vs {}",
                show(x),
                show(y)
            )));
        }
    }
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    flatten(report_a, "", &mut fa);
    flatten(report_b, "", &mut fb);
    let mut cmp = Comparison::default();
    for (key, va) in &fa {
        let Some(vb) = fb.get(key) else {
            cmp.only_in_a.push(key.clone());
            continue;
        };
        match (va.as_f64(), vb.as_f64()) {
            (Some(a), Some(b)) => {
                let absolute = a - b;
                let relative = if absolute == 0.0 {
                    Some(0.0)
                } else if b == 0.0 {
                    None
                } else {
                    Some(absolute / b.abs())
                };
                cmp.deltas.push(MetricDelta {
                    key: key.clone(),
                    a,
                    b,
                    absolute,
                    relative,
                });
            }
            _ if va != vb => cmp.changed.push(ValueChange {
                key: key.clone(),
                a: render(va),
                b: render(vb),
            }),
            _ => {}
        }
    }
    cmp.only_in_b = fb.keys().filter(|k| !fa.contains_key(*k)).cloned().collect();
    Ok(cmp)
}

/// [`compare`] on report text.
pub fn compare_str(a: &str, b: &str) -> Result<Comparison> {
    let parse = |s: &str, which: &str| {
        serde_json::from_str::<Value>(s).map_err(|e| Error::Parse {
            key: which.to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    };
    compare(&parse(a, "report_a")?, &parse(b, "report_b")?)
}
