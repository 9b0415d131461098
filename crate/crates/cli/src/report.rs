//! Deterministic JSON rendering.
//!
//! Objects are emitted with sorted keys and every float is rounded to 15
//! significant digits before printing, so repeated runs produce identical
//! bytes.

use serde_json::{Map, Value};

/// `x` rounded to 15 significant digits, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
        serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Re-rounds every float in `v`.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => {
            let sorted: Map<String, Value> = o.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted)
        }
        other => other,
    }
}

/// Pretty JSON text with a trailing newline.
pub fn render(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&canonical(v)).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_and_rounded() {
        let v = json!({"b": 0.1 + 0.2, "a": [1, 2.5], "c": {"z": 1, "y": f64::MAX}});
        let s = render(v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("0.3"));
        assert!(!s.contains("0.30000000000000004"));
        assert!(s.find("\"y\"").unwrap() < s.find("\"z\"").unwrap());
    }

    #[test]
    fn non_finite() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NAN), json!("nan"));
        assert_eq!(num(-0.0), json!(-0.0));
    }
}
