//! Property files.
//!
//! ```text
//! # comments start with '#'
//! rule argmin
//! [input raw]          # or [input]: normalized units
//! 55947.691, 60760
//! -3.141593, 3.141593
//! [output raw]         # or [output]: network units
//! COC <= 1500
//! [or]
//! COC - WL >= 2
//! ```
//!
//! Input lines give one `lo, hi` pair per dimension. Output lines are
//! linear constraints over output names (COC/WL/WR/SL/SR or y0..yk),
//! conjoined within a block; `[or]` starts another disjunct.

use thiserror::Error;

use crate::formula::{AffineExpr, Atom, Clause, DnfFormula, InputBox, VarId};
use crate::network::{ClampPolicy, Direction, Network, SelectionRule};
use crate::rational::{parse_decimal, Rational};
use crate::robustness::{OutputSpace, PropertySpec};

#[derive(Debug, Error)]
#[error("property file line {line}: {message}")]
pub struct PropertyError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> PropertyError {
    PropertyError {
        line,
        message: message.into(),
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Input,
    Output,
}

/// Parses a property file against `network`, converting a raw input box
/// to normalized units.
pub fn parse_property(text: &str, network: &Network) -> Result<PropertySpec, PropertyError> {
    let mut section = Section::None;
    let mut raw_input = false;
    let mut output_space = OutputSpace::Network;
    let mut rule = SelectionRule::default();
    let mut bounds: Vec<(Rational, Rational)> = Vec::new();
    let mut clauses: Vec<Vec<Atom>> = vec![Vec::new()];
    let mut saw_output = false;

    for (idx, full) in text.lines().enumerate() {
        let n = idx + 1;
        let line = full.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let words: Vec<&str> = header.split_whitespace().collect();
            match words.as_slice() {
                ["input"] => section = Section::Input,
                ["input", "raw"] => {
                    section = Section::Input;
                    raw_input = true;
                }
                ["output"] => {
                    section = Section::Output;
                    saw_output = true;
                }
                ["output", "raw"] => {
                    section = Section::Output;
                    saw_output = true;
                    output_space = OutputSpace::Raw;
                }
                ["or"] if section == Section::Output => clauses.push(Vec::new()),
                _ => return Err(err(n, format!("unknown section [{header}]"))),
            }
            continue;
        }
        match section {
            Section::None => {
                let rest = line
                    .strip_prefix("rule")
                    .ok_or_else(|| err(n, "expected `rule` or a section header"))?;
                rule = rest.trim().parse().map_err(|e: String| err(n, e))?;
            }
            Section::Input => {
                let parts: Vec<&str> = line.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
                let [lo, hi] = parts.as_slice() else {
                    return Err(err(n, "expected `lo, hi`"));
                };
                let lo = parse_decimal(lo).map_err(|e| err(n, e.to_string()))?;
                let hi = parse_decimal(hi).map_err(|e| err(n, e.to_string()))?;
                if lo > hi {
                    return Err(err(n, "lower bound exceeds upper bound"));
                }
                bounds.push((lo, hi));
            }
            Section::Output => {
                let atom = parse_constraint(line, network).map_err(|m| err(n, m))?;
                clauses.last_mut().expect("one block").push(atom);
            }
        }
    }
    if bounds.len() != network.input_dim() {
        return Err(err(
            0,
            format!("{} input bounds for a network with {} inputs", bounds.len(), network.input_dim()),
        ));
    }
    if !saw_output {
        return Err(err(0, "missing [output] section"));
    }
    if raw_input {
        let lo: Vec<Rational> = bounds.iter().map(|b| b.0.clone()).collect();
        let hi: Vec<Rational> = bounds.iter().map(|b| b.1.clone()).collect();
        let lo = network
            .normalize_point(&lo, Direction::RawToNormalized, ClampPolicy::Clamp)
            .map_err(|e| err(0, e.to_string()))?;
        let hi = network
            .normalize_point(&hi, Direction::RawToNormalized, ClampPolicy::Clamp)
            .map_err(|e| err(0, e.to_string()))?;
        bounds = lo.into_iter().zip(hi).collect();
    }
    let input_box = InputBox::new(bounds).map_err(|e| err(0, e.to_string()))?;
    let predicate = if clauses.iter().any(|c| c.is_empty()) {
        DnfFormula::truth()
    } else {
        DnfFormula::new(clauses.into_iter().map(Clause::new))
    };
    let mut spec = PropertySpec::new(input_box, predicate).map_err(|e| err(0, e.to_string()))?;
    spec.rule = rule;
    spec.output_space = output_space;
    Ok(spec)
}

/// Parses `lhs OP rhs` with `OP` one of `<=`, `<`, `>=`, `>`, `=`.
pub fn parse_constraint(text: &str, network: &Network) -> Result<Atom, String> {
    for (op, build) in [
        ("<=", Atom::le as fn(&AffineExpr, &AffineExpr) -> Atom),
        (">=", Atom::ge),
        ("<", Atom::lt),
        (">", Atom::gt),
        ("=", Atom::eq),
    ] {
        if let Some((lhs, rhs)) = text.split_once(op) {
            if rhs.contains(['<', '>', '=']) {
                return Err(format!("more than one comparison in `{text}`"));
            }
            return Ok(build(&parse_expr(lhs, network)?, &parse_expr(rhs, network)?));
        }
    }
    Err(format!("no comparison in `{text}`"))
}

fn output_var(name: &str, network: &Network) -> Result<VarId, String> {
    network
        .output_index(name)
        .map(|i| VarId::Output(i as u32))
        .ok_or_else(|| format!("unknown output `{name}`"))
}

/// A sum of terms `[coef][*]name` or constants, separated by `+`/`-`.
fn parse_expr(text: &str, network: &Network) -> Result<AffineExpr, String> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err("empty side of a constraint".into());
    }
    let mut expr = AffineExpr::zero();
    let mut i = 0;
    while i < chars.len() {
        let mut negative = false;
        if i > 0 || matches!(chars[i], '+' | '-') {
            match chars[i] {
                '+' => {}
                '-' => negative = true,
                c => return Err(format!("expected `+` or `-`, found `{c}`")),
            }
            i += 1;
        }
        let num_start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            i += 1;
        }
        // exponent only when digits follow
        if i > num_start && i < chars.len() && matches!(chars[i], 'e' | 'E') {
            let mut j = i + 1;
            if j < chars.len() && matches!(chars[j], '+' | '-') {
                j += 1;
            }
            if j < chars.len() && chars[j].is_ascii_digit() {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let number: String = chars[num_start..i].iter().collect();
        if i < chars.len() && chars[i] == '*' {
            if number.is_empty() {
                return Err("`*` without a coefficient".into());
            }
            i += 1;
        }
        let name_start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        let name: String = chars[name_start..i].iter().collect();
        if number.is_empty() && name.is_empty() {
            return Err(format!("malformed term in `{text}`"));
        }
        let mut coef = if number.is_empty() {
            Rational::from_integer(1.into())
        } else {
            parse_decimal(&number).map_err(|e| e.to_string())?
        };
        if negative {
            coef = -coef;
        }
        if name.is_empty() {
            expr.add_constant(&coef);
        } else {
            expr.add_term(output_var(&name, network)?, coef);
        }
    }
    Ok(expr)
}
