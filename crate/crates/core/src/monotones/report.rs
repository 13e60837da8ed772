use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
    Exact,
    Heuristic,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lower => "lower",
            Self::Upper => "upper",
            Self::Exact => "exact",
            Self::Heuristic => "heuristic",
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A computed quantity (bits unless noted) together with how much it can be trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub name: String,
    #[serde(with = "extended_f64")]
    pub value: f64,
    pub kind: BoundKind,
    pub method: String,
    pub tol: f64,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, value: f64, kind: BoundKind, method: impl Into<String>, tol: f64) -> Self {
        Self { name: name.into(), value, kind, method: method.into(), tol }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub const CSV_HEADER: &'static str = "name,value,kind,method,tol";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:e}", csv_field(&self.name), format_value(self.value), self.kind, csv_field(&self.method), self.tol)
    }
}

/// Combines kinds when quantities are added: any heuristic term makes the sum heuristic.
pub fn combine_kinds(target: BoundKind, parts: &[BoundKind]) -> BoundKind {
    if parts.iter().all(|k| *k == target || *k == BoundKind::Exact) {
        if parts.iter().all(|k| *k == BoundKind::Exact) {
            BoundKind::Exact
        } else {
            target
        }
    } else {
        BoundKind::Heuristic
    }
}

pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// JSON has no infinities; they are written as the strings `"inf"` and `"-inf"`.
pub mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&format_value(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("invalid number {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_values_round_trip() {
        let r = BoundReport::new("p", f64::INFINITY, BoundKind::Upper, "cp", 1e-9);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"inf\""));
        let back: BoundReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value, f64::INFINITY);
        let f = BoundReport::new("q", 1.5, BoundKind::Lower, "x,y", 0.0);
        assert_eq!(serde_json::from_str::<BoundReport>(&serde_json::to_string(&f).unwrap()).unwrap(), f);
        assert_eq!(f.csv_row(), "q,1.500000000000,lower,\"x,y\",0e0");
    }

    #[test]
    fn kind_combination() {
        use BoundKind::*;
        assert_eq!(combine_kinds(Upper, &[Upper, Exact]), Upper);
        assert_eq!(combine_kinds(Upper, &[Exact, Exact]), Exact);
        assert_eq!(combine_kinds(Upper, &[Upper, Heuristic]), Heuristic);
        assert_eq!(combine_kinds(Upper, &[Upper, Lower]), Heuristic);
    }
}
