//! CSV and JSON emission. Numbers carry at most 9 significant digits and are
//! formatted without locale.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use sharedlink_core::simulator::PathSample;
use sharedlink_core::stability::SweepCell;

pub const TRAJECTORY_HEADER: &str = "t,mode,q1,q2,q31,q32,f13,f23,f34,f35";
pub const SWEEP_HEADER: &str = "F3,phi1,in_phi0,in_phi1,in_phi2,verdict";

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of [`round9`]`(x)`.
pub fn fmt9(x: f64) -> String {
    let r = round9(x);
    if r == 0.0 {
        // Avoid "-0".
        "0".into()
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round9(n.as_f64().expect("f64 number"));
            *v = if x.fract() == 0.0 && x.abs() < 1e15 {
                // Same text as the CSV writer: 3000 rather than 3000.0.
                Value::from(x as i64)
            } else {
                serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
            };
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Single-line variant of [`to_json`].
pub fn to_json_line<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    serde_json::to_string(&v)
}

pub fn trajectory_csv(path: &[PathSample]) -> String {
    let mut out = String::with_capacity(64 * (path.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for p in path {
        let s = &p.state;
        let f = &p.flows;
        let _ = write!(out, "{},{}", fmt9(p.time), s.mode.label());
        for x in [
            s.upstream[0],
            s.upstream[1],
            s.link3[0],
            s.link3[1],
            f.f13,
            f.f23,
            f.f34,
            f.f35,
        ] {
            let _ = write!(out, ",{}", fmt9(x));
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::with_capacity(48 * (cells.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt9(c.common_capacity),
            fmt9(c.phi1),
            u8::from(c.in_phi0),
            u8::from(c.in_phi1),
            u8::from(c.in_phi2),
            c.verdict.label()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(1200.0), "1200");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(2.0 / 3.0 * 1e6), "666666.667");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(0.53), "0.53");
    }

    #[test]
    fn json_floats_are_rounded_and_reparse() {
        let v = serde_json::json!({"a": 1.0 / 3.0, "b": [2.0, 0.1 + 0.2], "c": true});
        let s = to_json_line(&v).unwrap();
        assert_eq!(s, r#"{"a":0.333333333,"b":[2,0.3],"c":true}"#);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(to_json_line(&back).unwrap(), s);
    }
}
