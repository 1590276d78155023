use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::exclude::{is_excluded, Operator};
use super::pool::{Constant, ConstantPool};
use super::GenError;

/// Embedded in every generated file; bump when emitted text changes.
pub const GENERATOR_VERSION: &str = "diffharness-gen 1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedCase {
    /// `<op>_<lhs index>_<rhs index>`.
    pub label: String,
    pub op: Operator,
    pub lhs: usize,
    pub rhs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedProgram {
    pub file_name: String,
    pub source: String,
    pub cases: Vec<GeneratedCase>,
}

pub fn case_label(op: Operator, lhs: usize, rhs: usize) -> String {
    format!("{}_{lhs}_{rhs}", op.name())
}

/// Left and right operands live in distinct variables so `x OP x` is never
/// a visible self-comparison.
pub fn lhs_name(c: &Constant) -> String {
    format!("a{}_{}", c.index, c.ctype.tag())
}

pub fn rhs_name(c: &Constant) -> String {
    format!("b{}_{}", c.index, c.ctype.tag())
}

// Mixed-signedness comparisons and bitwise operators on bool are deliberate
// test cases.
const PRAGMAS: &str = "\
#pragma GCC diagnostic ignored \"-Wsign-compare\"
#ifdef __clang__
#pragma clang diagnostic ignored \"-Wunknown-warning-option\"
#pragma clang diagnostic ignored \"-Wbitwise-instead-of-logical\"
#endif

";

/// Crosses the pool with itself for every operator, drops excluded pairs,
/// and packs the surviving cases into files of at most `chunk` cases. Each
/// file covers a single operator.
pub fn gen_programs(pool: &ConstantPool, ops: &[Operator], chunk: usize) -> Result<Vec<GeneratedProgram>, GenError> {
    if pool.is_empty() {
        return Err(GenError::EmptyPool);
    }
    if ops.is_empty() {
        return Err(GenError::NoOperators);
    }
    if chunk == 0 {
        return Err(GenError::ZeroChunk);
    }
    let mut programs = Vec::new();
    for &op in ops {
        let cases: Vec<(&Constant, &Constant)> = pool
            .constants
            .iter()
            .flat_map(|l| pool.constants.iter().map(move |r| (l, r)))
            .filter(|(l, r)| is_excluded(op, l, r, pool.model).is_none())
            .collect();
        for (n, group) in cases.chunks(chunk).enumerate() {
            programs.push(render(pool, op, n, group));
        }
    }
    Ok(programs)
}

fn render(pool: &ConstantPool, op: Operator, n: usize, group: &[(&Constant, &Constant)]) -> GeneratedProgram {
    let file_name = format!("gen_{}_{n:04}.c", op.name());
    let lhs: BTreeSet<usize> = group.iter().map(|(l, _)| l.index).collect();
    let rhs: BTreeSet<usize> = group.iter().map(|(_, r)| r.index).collect();
    let mut src = String::new();
    let _ = writeln!(src, "/* {GENERATOR_VERSION}: operator {} part {n} */", op.token());
    src.push_str("#include <limits.h>\n#include <stdbool.h>\n#include <stdio.h>\n\n");
    src.push_str(PRAGMAS);
    for (names, name) in [(&lhs, lhs_name as fn(&Constant) -> String), (&rhs, rhs_name)] {
        for &i in names {
            let c = &pool.constants[i];
            let _ = writeln!(
                src,
                "static volatile {} {} = {};",
                c.ctype.spelling(),
                name(c),
                c.spelling
            );
        }
    }
    src.push_str("\nint main(void)\n{\n");
    let mut cases = Vec::with_capacity(group.len());
    for (l, r) in group {
        let label = case_label(op, l.index, r.index);
        let fmt = op.result_type(l.ctype, r.ctype, pool.model).printf_format();
        let _ = writeln!(
            src,
            "    printf(\"{label}={fmt}\\n\", {} {} {});",
            lhs_name(l),
            op.token(),
            rhs_name(r)
        );
        cases.push(GeneratedCase {
            label,
            op,
            lhs: l.index,
            rhs: r.index,
        });
    }
    src.push_str("    return 0;\n}\n");
    GeneratedProgram {
        file_name,
        source: src,
        cases,
    }
}
