use serde::{Deserialize, Serialize};

/// Width assumptions for the target ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataModel {
    /// 32-bit int, 64-bit long (x86-64 and AArch64 Linux).
    #[default]
    Lp64,
    /// 32-bit int and long (32-bit ARM).
    Ilp32,
}

impl DataModel {
    pub fn long_bits(self) -> u32 {
        match self {
            DataModel::Lp64 => 64,
            DataModel::Ilp32 => 32,
        }
    }
}

impl std::str::FromStr for DataModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lp64" => Ok(DataModel::Lp64),
            "ilp32" => Ok(DataModel::Ilp32),
            other => Err(format!("unknown data model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CType {
    Bool,
    Char,
    SChar,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Long,
    ULong,
    LongLong,
    ULongLong,
    Float,
    Double,
}

impl CType {
    pub const ALL: [CType; 14] = [
        CType::Bool,
        CType::Char,
        CType::SChar,
        CType::UChar,
        CType::Short,
        CType::UShort,
        CType::Int,
        CType::UInt,
        CType::Long,
        CType::ULong,
        CType::LongLong,
        CType::ULongLong,
        CType::Float,
        CType::Double,
    ];

    pub fn spelling(self) -> &'static str {
        match self {
            CType::Bool => "bool",
            CType::Char => "char",
            CType::SChar => "signed char",
            CType::UChar => "unsigned char",
            CType::Short => "short",
            CType::UShort => "unsigned short",
            CType::Int => "int",
            CType::UInt => "unsigned int",
            CType::Long => "long",
            CType::ULong => "unsigned long",
            CType::LongLong => "long long",
            CType::ULongLong => "unsigned long long",
            CType::Float => "float",
            CType::Double => "double",
        }
    }

    /// Identifier-safe short name.
    pub fn tag(self) -> &'static str {
        match self {
            CType::Bool => "bool",
            CType::Char => "char",
            CType::SChar => "schar",
            CType::UChar => "uchar",
            CType::Short => "short",
            CType::UShort => "ushort",
            CType::Int => "int",
            CType::UInt => "uint",
            CType::Long => "long",
            CType::ULong => "ulong",
            CType::LongLong => "llong",
            CType::ULongLong => "ullong",
            CType::Float => "float",
            CType::Double => "double",
        }
    }

    pub fn from_tag(tag: &str) -> Option<CType> {
        CType::ALL.into_iter().find(|t| t.tag() == tag)
    }

    pub fn is_floating(self) -> bool {
        matches!(self, CType::Float | CType::Double)
    }

    pub fn is_integer(self) -> bool {
        !self.is_floating()
    }

    /// Plain `char` is treated as signed; pools only hold non-negative chars,
    /// so nothing depends on that choice.
    pub fn is_signed(self) -> bool {
        matches!(
            self,
            CType::Char | CType::SChar | CType::Short | CType::Int | CType::Long | CType::LongLong
        )
    }

    pub fn bits(self, model: DataModel) -> u32 {
        match self {
            CType::Bool => 1,
            CType::Char | CType::SChar | CType::UChar => 8,
            CType::Short | CType::UShort => 16,
            CType::Int | CType::UInt | CType::Float => 32,
            CType::Long | CType::ULong => model.long_bits(),
            CType::LongLong | CType::ULongLong | CType::Double => 64,
        }
    }

    fn rank(self) -> u8 {
        match self {
            CType::Bool => 0,
            CType::Char | CType::SChar | CType::UChar => 1,
            CType::Short | CType::UShort => 2,
            CType::Int | CType::UInt => 3,
            CType::Long | CType::ULong => 4,
            CType::LongLong | CType::ULongLong => 5,
            CType::Float | CType::Double => 6,
        }
    }

    pub fn min_value(self, model: DataModel) -> i128 {
        if self == CType::Bool || !self.is_signed() {
            0
        } else {
            -(1i128 << (self.bits(model) - 1))
        }
    }

    pub fn max_value(self, model: DataModel) -> i128 {
        match self {
            CType::Bool => 1,
            t if t.is_signed() => (1i128 << (t.bits(model) - 1)) - 1,
            t => (1i128 << t.bits(model)) - 1,
        }
    }

    fn to_unsigned(self) -> CType {
        match self {
            CType::Int => CType::UInt,
            CType::Long => CType::ULong,
            CType::LongLong => CType::ULongLong,
            t => t,
        }
    }

    /// Integer promotion. Every type narrower than `int` fits in `int` under
    /// both data models.
    pub fn promoted(self) -> CType {
        if self.is_integer() && self.rank() < CType::Int.rank() {
            CType::Int
        } else {
            self
        }
    }

    /// Usual arithmetic conversions.
    pub fn common(self, other: CType, model: DataModel) -> CType {
        if self == CType::Double || other == CType::Double {
            return CType::Double;
        }
        if self == CType::Float || other == CType::Float {
            return CType::Float;
        }
        let (a, b) = (self.promoted(), other.promoted());
        if a == b {
            return a;
        }
        if a.is_signed() == b.is_signed() {
            return if a.rank() >= b.rank() { a } else { b };
        }
        let (s, u) = if a.is_signed() { (a, b) } else { (b, a) };
        if u.rank() >= s.rank() {
            u
        } else if s.bits(model) > u.bits(model) {
            s
        } else {
            s.to_unsigned()
        }
    }

    /// `printf` conversion for a value of this (already promoted) type.
    pub fn printf_format(self) -> &'static str {
        match self.promoted() {
            CType::Int => "%d",
            CType::UInt => "%u",
            CType::Long => "%ld",
            CType::ULong => "%lu",
            CType::LongLong => "%lld",
            CType::ULongLong => "%llu",
            CType::Float | CType::Double => "%a",
            _ => unreachable!("promoted type"),
        }
    }

    /// Converts an in-range or wrapping integer value to this type.
    pub fn convert_integer(self, value: i128, model: DataModel) -> i128 {
        debug_assert!(self.is_integer());
        if self == CType::Bool {
            return (value != 0) as i128;
        }
        if self.is_signed() {
            value
        } else {
            value.rem_euclid(1i128 << self.bits(model))
        }
    }
}
