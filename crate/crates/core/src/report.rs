//! CSV and JSON emission with fixed formatting.

use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

/// 17 significant digits, round-trippable.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Comma-separated table with a header row and LF line ends.
pub struct Csv {
    out: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut out = header.join(",");
        out.push('\n');
        Csv {
            out,
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width");
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with `"schema": 1` and a `"kind"` tag. `body` must
/// serialize to an object.
pub fn json_report<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Tagged {
        schema: SCHEMA,
        kind,
        body,
    })
    .map_err(|e| Error::Numeric(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_f64(4.0), "4.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_and_json() {
        let mut c = Csv::new(&["n", "H"]);
        c.row(&["1".into(), fmt_f64(2.5)]);
        assert_eq!(c.finish(), "n,H\n1,2.5000000000000000e0\n");
        #[derive(Serialize)]
        struct B {
            x: u32,
        }
        let j = json_report("demo", &B { x: 3 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["x"], 3);
    }
}
