//! JSON rendering of query results. Rationals appear both exactly and
//! rounded to 8 decimals; maps are key-sorted so output is reproducible.

use serde_json::{json, Value};

use crate::formula::Interval;
use crate::partition::PartitionedRange;
use crate::rational::{to_decimal, to_exact_string, Rational};

pub const DIGITS: usize = 8;

pub fn rational(r: &Rational) -> Value {
    json!({ "exact": to_exact_string(r), "decimal": to_decimal(r, DIGITS) })
}

pub fn interval(iv: &Interval) -> Value {
    let end = |v: Option<&Rational>| v.map_or(Value::Null, rational);
    let mut out = json!({ "lower": end(iv.lo()), "upper": end(iv.hi()) });
    if !iv.is_closed() && iv.is_bounded() {
        out["open"] = json!(true);
    }
    out
}

pub fn labelled_intervals(labels: &[String], ivs: &[Interval]) -> Value {
    Value::Array(
        labels
            .iter()
            .zip(ivs)
            .map(|(l, iv)| {
                let mut v = interval(iv);
                v["output"] = json!(l);
                v
            })
            .collect(),
    )
}

pub fn partitioned(labels: &[String], r: &PartitionedRange, timings: bool) -> Value {
    let subspaces: Vec<Value> = r
        .subspaces
        .iter()
        .map(|s| {
            let mut v = json!({
                "index": s.index,
                "box": s.input_box.bounds().iter().map(|(l, h)| json!([rational(l), rational(h)])).collect::<Vec<_>>(),
                "outputs": labelled_intervals(labels, &s.result.outputs),
                "precise": s.result.precise,
                "layers": s.result.layers,
                "events": s.result.events.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            });
            if timings {
                v["elapsed_seconds"] = json!(s.result.elapsed.as_secs_f64());
            }
            v
        })
        .collect();
    json!({
        "outputs": labelled_intervals(labels, &r.outputs),
        "precise": r.precise,
        "subspaces": subspaces,
    })
}

/// Human rendering of an interval: exact, then rounded.
pub fn interval_text(iv: &Interval) -> String {
    format!("{}  ~ {}", iv, iv.render_decimal(DIGITS))
}
