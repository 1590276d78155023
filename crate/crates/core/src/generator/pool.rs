use serde::{Deserialize, Serialize};

use super::ctype::{CType, DataModel};
use super::GenError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i128),
    Float(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(v) => v as f64,
            Value::Float(v) => v,
        }
    }
}

/// A literal with its type and the value it denotes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    /// Position in the pool; used in case labels.
    pub index: usize,
    pub ctype: CType,
    pub spelling: String,
    pub value: Value,
}

impl Constant {
    pub fn int_value(&self) -> Option<i128> {
        match self.value {
            Value::Int(v) => Some(v),
            Value::Float(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantPool {
    pub model: DataModel,
    pub constants: Vec<Constant>,
}

fn limit_macro(t: CType) -> &'static str {
    match t {
        CType::SChar => "SCHAR",
        CType::Short => "SHRT",
        CType::Int => "INT",
        CType::Long => "LONG",
        CType::LongLong => "LLONG",
        CType::UChar => "UCHAR",
        CType::UShort => "USHRT",
        CType::UInt => "UINT",
        CType::ULong => "ULONG",
        CType::ULongLong => "ULLONG",
        _ => unreachable!("no limits.h macro for {t:?}"),
    }
}

/// Name of the `<limits.h>` minimum for a signed type, e.g. `INT_MIN`.
pub fn min_macro(t: CType) -> String {
    format!("{}_MIN", limit_macro(t))
}

/// Default literals for one type: boundary values plus a few small ones.
pub fn default_literals(t: CType, model: DataModel) -> Vec<(String, Value)> {
    let int = |s: &str, v: i128| (s.to_string(), Value::Int(v));
    match t {
        CType::Bool => vec![int("false", 0), int("true", 1)],
        CType::Char => vec![int("'a'", 97), int("'\\0'", 0)],
        CType::Float => [
            ("0.0f", 0.0f32),
            ("1.0f", 1.0),
            ("-1.0f", -1.0),
            ("0.5f", 0.5),
            ("1.0e30f", 1.0e30),
            ("1.0e-30f", 1.0e-30),
        ]
        .iter()
        .map(|(s, v)| (s.to_string(), Value::Float(*v as f64)))
        .collect(),
        CType::Double => [
            ("0.0", 0.0f64),
            ("1.0", 1.0),
            ("-1.0", -1.0),
            ("0.5", 0.5),
            ("1.0e300", 1.0e300),
            ("1.0e-300", 1.0e-300),
        ]
        .iter()
        .map(|(s, v)| (s.to_string(), Value::Float(*v)))
        .collect(),
        t if t.is_signed() => {
            let m = limit_macro(t);
            let (min, max) = (t.min_value(model), t.max_value(model));
            vec![
                int("0", 0),
                int("1", 1),
                int("-1", -1),
                int("2", 2),
                int(&format!("{m}_MIN"), min),
                int(&format!("{m}_MAX"), max),
                int(&format!("({m}_MIN + 1)"), min + 1),
                int(&format!("({m}_MAX - 1)"), max - 1),
            ]
        }
        t => {
            // -1 and min+1 coincide with max and 1 for unsigned types
            let m = limit_macro(t);
            let max = t.max_value(model);
            vec![
                int("0", 0),
                int("1", 1),
                int("2", 2),
                int(&format!("{m}_MAX"), max),
                int(&format!("({m}_MAX - 1)"), max - 1),
            ]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolPreset {
    /// Every arithmetic type.
    Default,
    /// Integer types only (including bool and char).
    Integer,
    /// int, unsigned int, bool, char.
    Small,
}

impl PoolPreset {
    pub fn types(self) -> Vec<CType> {
        match self {
            PoolPreset::Default => CType::ALL.to_vec(),
            PoolPreset::Integer => CType::ALL.into_iter().filter(|t| t.is_integer()).collect(),
            PoolPreset::Small => vec![CType::Bool, CType::Char, CType::Int, CType::UInt],
        }
    }
}

impl std::str::FromStr for PoolPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(PoolPreset::Default),
            "integer" => Ok(PoolPreset::Integer),
            "small" => Ok(PoolPreset::Small),
            other => Err(format!("unknown pool preset `{other}`")),
        }
    }
}

impl ConstantPool {
    pub fn preset(preset: PoolPreset, model: DataModel) -> Self {
        Self::for_types(&preset.types(), model)
    }

    pub fn for_types(types: &[CType], model: DataModel) -> Self {
        let mut pool = ConstantPool {
            model,
            constants: Vec::new(),
        };
        for &t in types {
            for (spelling, value) in default_literals(t, model) {
                pool.push(t, &spelling, value);
            }
        }
        pool
    }

    /// Builds a pool from explicit `(type, spelling, value)` triples.
    pub fn from_literals(model: DataModel, literals: &[(CType, &str, Value)]) -> Result<Self, GenError> {
        let mut pool = ConstantPool {
            model,
            constants: Vec::new(),
        };
        for (t, s, v) in literals {
            match (t.is_floating(), v) {
                (true, Value::Float(_)) => {}
                (false, Value::Int(x)) if (t.min_value(model)..=t.max_value(model)).contains(x) => {}
                _ => return Err(GenError::BadLiteral(format!("{s} as {}", t.spelling()))),
            }
            pool.push(*t, s, *v);
        }
        Ok(pool)
    }

    fn push(&mut self, ctype: CType, spelling: &str, value: Value) {
        self.constants.push(Constant {
            index: self.constants.len(),
            ctype,
            spelling: spelling.to_string(),
            value,
        });
    }

    pub fn len(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }

    /// Constants of one type, in pool order.
    pub fn of_type(&self, t: CType) -> impl Iterator<Item = &Constant> {
        self.constants.iter().filter(move |c| c.ctype == t)
    }
}
