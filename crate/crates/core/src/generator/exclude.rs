use serde::{Deserialize, Serialize};

use super::ctype::{CType, DataModel};
use super::pool::{min_macro, Constant, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitOr,
    BitXor,
    LogAnd,
    LogOr,
}

impl Operator {
    pub const ALL: [Operator; 18] = [
        Operator::Add,
        Operator::Sub,
        Operator::Mul,
        Operator::Div,
        Operator::Mod,
        Operator::Shl,
        Operator::Shr,
        Operator::Lt,
        Operator::Le,
        Operator::Gt,
        Operator::Ge,
        Operator::Eq,
        Operator::Ne,
        Operator::BitAnd,
        Operator::BitOr,
        Operator::BitXor,
        Operator::LogAnd,
        Operator::LogOr,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Operator::Add => "+",
            Operator::Sub => "-",
            Operator::Mul => "*",
            Operator::Div => "/",
            Operator::Mod => "%",
            Operator::Shl => "<<",
            Operator::Shr => ">>",
            Operator::Lt => "<",
            Operator::Le => "<=",
            Operator::Gt => ">",
            Operator::Ge => ">=",
            Operator::Eq => "==",
            Operator::Ne => "!=",
            Operator::BitAnd => "&",
            Operator::BitOr => "|",
            Operator::BitXor => "^",
            Operator::LogAnd => "&&",
            Operator::LogOr => "||",
        }
    }

    /// Label prefix used in generated output lines.
    pub fn name(self) -> &'static str {
        match self {
            Operator::Add => "add",
            Operator::Sub => "sub",
            Operator::Mul => "mul",
            Operator::Div => "div",
            Operator::Mod => "mod",
            Operator::Shl => "shl",
            Operator::Shr => "shr",
            Operator::Lt => "lt",
            Operator::Le => "le",
            Operator::Gt => "gt",
            Operator::Ge => "ge",
            Operator::Eq => "eq",
            Operator::Ne => "ne",
            Operator::BitAnd => "band",
            Operator::BitOr => "bor",
            Operator::BitXor => "bxor",
            Operator::LogAnd => "land",
            Operator::LogOr => "lor",
        }
    }

    /// Accepts either the token (`<<`) or the label name (`shl`).
    pub fn parse(s: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|o| o.token() == s || o.name() == s)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            Operator::Lt | Operator::Le | Operator::Gt | Operator::Ge | Operator::Eq | Operator::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, Operator::LogAnd | Operator::LogOr)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, Operator::Shl | Operator::Shr)
    }

    fn integer_only(self) -> bool {
        matches!(
            self,
            Operator::Mod | Operator::Shl | Operator::Shr | Operator::BitAnd | Operator::BitOr | Operator::BitXor
        )
    }

    /// Type of `lhs OP rhs`.
    pub fn result_type(self, lhs: CType, rhs: CType, model: DataModel) -> CType {
        if self.is_comparison() || self.is_logical() {
            CType::Int
        } else if self.is_shift() {
            lhs.promoted()
        } else {
            lhs.common(rhs, model)
        }
    }
}

/// Why a case was dropped. The list is deliberately conservative: it also
/// drops implementation-defined results (negative right shifts, for one),
/// not just undefined behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionRule {
    IntegerOperandsRequired,
    DivisionByZero,
    SignedOverflow,
    ShiftCountOutOfRange,
    NegativeLeftShift,
    SignedLeftShiftOverflow,
    NegativeRightShift,
    FloatDivisionByZero,
    FloatOverflow,
    UnrepresentableConversion,
}

impl ExclusionRule {
    pub fn id(self) -> &'static str {
        match self {
            ExclusionRule::IntegerOperandsRequired => "integer-operands-required",
            ExclusionRule::DivisionByZero => "division-by-zero",
            ExclusionRule::SignedOverflow => "signed-overflow",
            ExclusionRule::ShiftCountOutOfRange => "shift-count-out-of-range",
            ExclusionRule::NegativeLeftShift => "negative-left-shift",
            ExclusionRule::SignedLeftShiftOverflow => "signed-left-shift-overflow",
            ExclusionRule::NegativeRightShift => "negative-right-shift",
            ExclusionRule::FloatDivisionByZero => "float-division-by-zero",
            ExclusionRule::FloatOverflow => "float-overflow",
            ExclusionRule::UnrepresentableConversion => "unrepresentable-conversion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub rule: ExclusionRule,
    pub reason: String,
}

fn excluded(rule: ExclusionRule, reason: impl Into<String>) -> Option<Exclusion> {
    Some(Exclusion {
        rule,
        reason: reason.into(),
    })
}

/// Decides whether `lhs OP rhs` has undefined or implementation-defined
/// behavior (or is ill-formed) and so must not be generated.
pub fn is_excluded(op: Operator, lhs: &Constant, rhs: &Constant, model: DataModel) -> Option<Exclusion> {
    if op.is_logical() || (op.is_comparison() && !(lhs.ctype.is_floating() || rhs.ctype.is_floating())) {
        return None;
    }
    if lhs.ctype.is_floating() || rhs.ctype.is_floating() {
        if op.integer_only() {
            return excluded(
                ExclusionRule::IntegerOperandsRequired,
                format!("`{}` requires integer operands", op.token()),
            );
        }
        if op.is_comparison() {
            return None;
        }
        return floating(op, lhs, rhs, model);
    }
    let (a, b) = (lhs.int_value().unwrap(), rhs.int_value().unwrap());
    if op.is_shift() {
        return shift(op, lhs.ctype, a, b, model);
    }
    let t = lhs.ctype.common(rhs.ctype, model);
    let (x, y) = (t.convert_integer(a, model), t.convert_integer(b, model));
    if matches!(op, Operator::Div | Operator::Mod) && y == 0 {
        return excluded(ExclusionRule::DivisionByZero, format!("{} by zero", op.name()));
    }
    if !t.is_signed() {
        // unsigned arithmetic wraps
        return None;
    }
    let exact = match op {
        Operator::Add => x + y,
        Operator::Sub => x - y,
        Operator::Mul => x * y,
        Operator::Div | Operator::Mod => x / y,
        _ => return None,
    };
    if exact > t.max_value(model) || exact < t.min_value(model) {
        let reason = if matches!(op, Operator::Div | Operator::Mod) {
            format!("signed overflow on {} {} -1", min_macro(t), op.token())
        } else {
            format!(
                "signed overflow in {} {} {} ({})",
                lhs.spelling,
                op.token(),
                rhs.spelling,
                t.spelling()
            )
        };
        return excluded(ExclusionRule::SignedOverflow, reason);
    }
    None
}

fn shift(op: Operator, lhs_type: CType, a: i128, count: i128, model: DataModel) -> Option<Exclusion> {
    let t = lhs_type.promoted();
    let width = t.bits(model) as i128;
    if count < 0 || count >= width {
        return excluded(
            ExclusionRule::ShiftCountOutOfRange,
            format!("shift count {count} outside [0, {width}) for {}", t.spelling()),
        );
    }
    if !t.is_signed() {
        return None;
    }
    if a < 0 {
        return match op {
            Operator::Shl => excluded(ExclusionRule::NegativeLeftShift, "left shift of a negative value"),
            _ => excluded(
                ExclusionRule::NegativeRightShift,
                "right shift of a negative value is implementation-defined",
            ),
        };
    }
    if op == Operator::Shl && (a << count) > t.max_value(model) {
        return excluded(
            ExclusionRule::SignedLeftShiftOverflow,
            format!("{a} << {count} does not fit in {} (sign-bit shift)", t.spelling()),
        );
    }
    None
}

fn floating(op: Operator, lhs: &Constant, rhs: &Constant, model: DataModel) -> Option<Exclusion> {
    let t = lhs.ctype.common(rhs.ctype, model);
    let as_float = |c: &Constant| -> f64 {
        match (t, c.value) {
            (CType::Float, Value::Int(v)) => v as f32 as f64,
            (_, v) => v.as_f64(),
        }
    };
    let (x, y) = (as_float(lhs), as_float(rhs));
    if op == Operator::Div && y == 0.0 {
        return excluded(ExclusionRule::FloatDivisionByZero, "floating division by zero");
    }
    let result = match (t, op) {
        (CType::Float, Operator::Add) => (x as f32 + y as f32) as f64,
        (CType::Float, Operator::Sub) => (x as f32 - y as f32) as f64,
        (CType::Float, Operator::Mul) => (x as f32 * y as f32) as f64,
        (CType::Float, Operator::Div) => (x as f32 / y as f32) as f64,
        (_, Operator::Add) => x + y,
        (_, Operator::Sub) => x - y,
        (_, Operator::Mul) => x * y,
        (_, Operator::Div) => x / y,
        _ => return None,
    };
    if !result.is_finite() {
        return excluded(
            ExclusionRule::FloatOverflow,
            format!(
                "{} {} {} overflows {}",
                lhs.spelling,
                op.token(),
                rhs.spelling,
                t.spelling()
            ),
        );
    }
    None
}

/// Floating-to-integer conversion is undefined when the truncated value does
/// not fit the target type.
pub fn conversion_excluded(value: f64, target: CType, model: DataModel) -> Option<Exclusion> {
    if target.is_floating() || target == CType::Bool {
        return None;
    }
    let truncated = value.trunc();
    let fits = truncated.is_finite()
        && truncated >= target.min_value(model) as f64
        && truncated < (target.max_value(model) as f64) + 1.0;
    if fits {
        None
    } else {
        excluded(
            ExclusionRule::UnrepresentableConversion,
            format!("{value} is not representable in {}", target.spelling()),
        )
    }
}
