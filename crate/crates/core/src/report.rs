//! Uniform check reports: `{check, params, margin_list, pass}` with a CSV
//! flattening.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One inequality `lhs ≤ rhs`; `margin = rhs − lhs` (or a log-space gap for
/// tower comparisons) and `pass` is decided by the producing check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    #[serde(with = "crate::serde_ext")]
    pub lhs: f64,
    #[serde(with = "crate::serde_ext")]
    pub rhs: f64,
    #[serde(with = "crate::serde_ext")]
    pub margin: f64,
    pub pass: bool,
}

impl Margin {
    /// `lhs ≤ rhs + slack`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = rhs - lhs;
        let pass = lhs <= rhs + slack;
        Margin { name: name.into(), lhs, rhs, margin, pass }
    }

    /// Margin with an externally decided verdict.
    pub fn custom(name: impl Into<String>, lhs: f64, rhs: f64, margin: f64, pass: bool) -> Self {
        Margin { name: name.into(), lhs, rhs, margin, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub params: Map<String, Value>,
    pub margin_list: Vec<Margin>,
    pub pass: bool,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Report { check: check.into(), params: Map::new(), margin_list: Vec::new(), pass: true }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.set_param(key, value);
        self
    }

    pub fn set_param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.params.insert(key.to_string(), v);
    }

    pub fn push(&mut self, m: Margin) {
        self.pass &= m.pass;
        self.margin_list.push(m);
    }

    pub fn extend(&mut self, other: Report) {
        for m in other.margin_list {
            self.push(m);
        }
        self.pass &= other.pass;
    }

    pub fn failures(&self) -> impl Iterator<Item = &Margin> {
        self.margin_list.iter().filter(|m| !m.pass)
    }

    pub const CSV_HEADER: &'static str = "check,name,lhs,rhs,margin,pass";

    /// One CSV line per margin, without the header.
    pub fn csv_rows(&self) -> Vec<String> {
        self.margin_list
            .iter()
            .map(|m| {
                format!(
                    "{},{},{},{},{},{}",
                    csv_field(&self.check),
                    csv_field(&m.name),
                    fmt_num(m.lhs),
                    fmt_num(m.rhs),
                    fmt_num(m.margin),
                    m.pass
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in self.csv_rows() {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }
}

/// Number formatting shared by all CSV outputs: shortest round-trip form,
/// with `inf`, `-inf` and `nan` spelled out.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_conjunction() {
        let mut r = Report::new("demo").param("level", 2);
        r.push(Margin::le("a", 1.0, 2.0, 0.0));
        assert!(r.pass);
        r.push(Margin::le("b", 3.0, 2.0, 0.5));
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn json_and_csv_shapes() {
        let mut r = Report::new("x,y");
        r.push(Margin::le("inf side", 1.0, f64::INFINITY, 0.0));
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["margin_list"][0]["rhs"], "inf");
        assert_eq!(j["pass"], true);
        let csv = r.to_csv();
        assert!(csv.starts_with(Report::CSV_HEADER));
        assert!(csv.contains("\"x,y\",inf side,1,inf,inf,true"));
    }
}
