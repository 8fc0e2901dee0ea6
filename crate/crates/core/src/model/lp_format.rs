//! CPLEX LP text export.
//!
//! Numbers are written in fixed-point notation with 12 significant digits.
//! Square brackets in names are mapped to parentheses, which every LP reader
//! accepts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ConstraintSense, ModelIR, VarKind};
use crate::error::{Error, Result};

const SIGNIFICANT_DIGITS: i32 = 12;
const LINE_WIDTH: usize = 100;

/// Formats `x` with 12 significant digits, fixed point, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    // Scientific formatting does the rounding (including carries) for us.
    let sci = format!("{:.*e}", (SIGNIFICANT_DIGITS - 1) as usize, x.abs());
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let n = digits.len() as i32;
    let mut fixed = if exponent >= n - 1 {
        format!("{digits}{}", "0".repeat((exponent - n + 1) as usize))
    } else if exponent >= 0 {
        let split = (exponent + 1) as usize;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exponent - 1) as usize))
    };
    if fixed.contains('.') {
        fixed = fixed.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if x < 0.0 {
        fixed.insert(0, '-');
    }
    fixed
}

pub fn lp_name(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '[' => '(',
            ']' => ')',
            ' ' => '_',
            c => c,
        })
        .collect()
}

struct LineWriter {
    out: String,
    line_len: usize,
}

impl LineWriter {
    fn push(&mut self, token: &str) {
        if self.line_len + token.len() + 1 > LINE_WIDTH && self.line_len > 0 {
            self.out.push_str("\n   ");
            self.line_len = 3;
        }
        self.out.push(' ');
        self.out.push_str(token);
        self.line_len += token.len() + 1;
    }

    fn end_line(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }
}

fn push_terms(w: &mut LineWriter, model: &ModelIR, terms: &[(super::VarId, f64)]) {
    if terms.is_empty() {
        // An empty row still needs a left-hand side.
        if let Some(first) = model.variables().first() {
            w.push(&format!("0 {}", lp_name(&first.name)));
        }
        return;
    }
    for (i, &(v, c)) in terms.iter().enumerate() {
        let name = lp_name(&model.var(v).name);
        let sign = if c < 0.0 { "-" } else { "+" };
        let token = if i == 0 && c >= 0.0 {
            format!("{} {}", format_number(c), name)
        } else {
            format!("{sign} {} {}", format_number(c.abs()), name)
        };
        w.push(&token);
    }
}

/// Renders `model` as an LP-format document.
pub fn write_lp(model: &ModelIR) -> String {
    let mut w = LineWriter {
        out: String::new(),
        line_len: 0,
    };
    w.out.push_str("\\ written by hybrid-bid\n");
    w.out.push_str("Maximize\n");
    w.push("obj:");
    push_terms(&mut w, model, &model.objective().terms);
    let constant = model.objective().constant;
    if constant != 0.0 {
        let sign = if constant < 0.0 { "-" } else { "+" };
        w.push(&format!("{sign} {}", format_number(constant.abs())));
    }
    w.end_line();

    w.out.push_str("Subject To\n");
    for c in model.constraints() {
        w.push(&format!("{}:", lp_name(&c.name)));
        push_terms(&mut w, model, &c.terms);
        let op = match c.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        };
        w.push(&format!("{op} {}", format_number(c.rhs)));
        w.end_line();
    }

    w.out.push_str("Bounds\n");
    for v in model.variables() {
        let name = lp_name(&v.name);
        let line = if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            format!(" 0 <= {name} <= 1")
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            format!(" {name} free")
        } else if v.lower == v.upper {
            format!(" {name} = {}", format_number(v.lower))
        } else {
            format!(
                " {} <= {name} <= {}",
                format_number(v.lower),
                format_number(v.upper)
            )
        };
        w.out.push_str(&line);
        w.out.push('\n');
    }

    let binaries: Vec<_> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .collect();
    if !binaries.is_empty() {
        w.out.push_str("Binaries\n");
        for v in binaries {
            w.push(&lp_name(&v.name));
        }
        w.end_line();
    }
    w.out.push_str("End\n");
    w.out
}

pub fn write_lp_file(model: &ModelIR, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = write_lp(model);
    if !text.ends_with('\n') {
        let _ = writeln!(text);
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
