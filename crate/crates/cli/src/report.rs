//! JSON-lines reports. Floats are rounded to 10 significant digits, or
//! written as `"0x…"` bit patterns in hex mode.

use diffspace::carrier::Point;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

/// Longest trace written out; the full length goes to `trace_total`.
pub const TRACE_LIMIT: usize = 256;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub line: usize,
    pub command: String,
    pub seed: u64,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "nonfinite")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_prefix: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms_evaluated: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_total: Option<usize>,
    /// Named values, e.g. prolongation limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<(String, f64)>>,
    /// Witness values along a probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    pub fn new(line: usize, command: String, seed: u64, outcome: &str) -> Record {
        Record { line, command, seed, outcome: outcome.to_string(), ..Record::default() }
    }

    pub fn is_error(&self) -> bool {
        self.outcome == "error"
    }
}

/// Non-finite values are written as the strings `inf`, `-inf` and `nan`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            Some(x) if x.is_nan() => s.serialize_str("nan"),
            Some(x) if *x > 0.0 => s.serialize_str("inf"),
            Some(_) => s.serialize_str("-inf"),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Option::<Repr>::deserialize(d)? {
            None => None,
            Some(Repr::Num(x)) => Some(x),
            Some(Repr::Text(t)) => Some(match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                _ => return Err(serde::de::Error::custom(format!("bad number `{t}`"))),
            }),
        })
    }
}

/// How floats are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloatFormat {
    #[default]
    Decimal,
    Hex,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<Record>,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.records.iter().any(Record::is_error)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self, format: FloatFormat) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mut v = serde_json::to_value(r).expect("records serialize");
            encode_floats(&mut v, format);
            out.push_str(&serde_json::to_string(&v).expect("values serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str, format: FloatFormat) -> Result<Report, serde_json::Error> {
        let mut records = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut v: Value = serde_json::from_str(line)?;
            if format == FloatFormat::Hex {
                decode_hex(&mut v);
            }
            records.push(serde_json::from_value(v)?);
        }
        Ok(Report { records })
    }

    /// The report as it reads back after printing in `format`.
    pub fn normalized(&self, format: FloatFormat) -> Report {
        Report::from_json_lines(&self.to_json_lines(format), format).expect("printed reports parse")
    }
}

/// Rounds to 10 significant digits.
pub fn round10(x: f64) -> f64 {
    format!("{x:.9e}").parse().expect("formatted float parses")
}

fn encode_floats(v: &mut Value, format: FloatFormat) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = match format {
                FloatFormat::Decimal => Number::from_f64(round10(x)).map(Value::Number).unwrap_or(Value::Null),
                FloatFormat::Hex => Value::String(format!("0x{:016x}", x.to_bits())),
            };
        }
        Value::Array(items) => items.iter_mut().for_each(|i| encode_floats(i, format)),
        Value::Object(map) => map.values_mut().for_each(|i| encode_floats(i, format)),
        _ => {}
    }
}

fn decode_hex(v: &mut Value) {
    match v {
        Value::String(s) => {
            if let Some(hex) = s.strip_prefix("0x").filter(|h| h.len() == 16) {
                if let Ok(bits) = u64::from_str_radix(hex, 16) {
                    let x = f64::from_bits(bits);
                    if let Some(n) = Number::from_f64(x) {
                        *v = Value::Number(n);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(decode_hex),
        Value::Object(map) => map.values_mut().for_each(decode_hex),
        _ => {}
    }
}
