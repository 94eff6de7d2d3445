//! lp_solve text format.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::lp::{LpModel, Relation, Row};
use crate::position::Position;
use crate::scalar::{decimal_string, parse_rational, rational_string, Rational};

fn var_name(p: &Position<u32>) -> String {
    let [a, b, c, d] = p.abcd();
    format!("s_{a}_{b}_{c}_{d}")
}

fn parse_var(name: &str) -> Result<Position<u32>> {
    let body = name.strip_prefix("s_").ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
    body.replace('_', ",").parse().map_err(|_| Error::Parse(format!("unknown variable {name:?}")))
}

/// Twelve significant digits; integers are written exactly.
fn significant(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        decimal_string(r, 12)
    }
}

fn render(terms: &[(usize, Rational)], vars: &[Position<u32>], exact: bool) -> String {
    let mut out = String::new();
    for (v, a) in terms {
        let sign = if a.is_negative() { '-' } else { '+' };
        let mag = a.abs();
        if !out.is_empty() {
            out.push(' ');
        }
        out.push(sign);
        if !mag.is_one() {
            out.push_str(&if exact { rational_string(&mag) } else { significant(&mag) });
            out.push(' ');
        }
        out.push_str(&var_name(&vars[*v]));
    }
    out
}

fn render_row(row: &Row, vars: &[Position<u32>], exact: bool) -> String {
    let op = match row.relation {
        Relation::Ge => ">=",
        Relation::Eq => "=",
    };
    let rhs = if exact { rational_string(&row.rhs) } else { significant(&row.rhs) };
    format!("{} {op} {rhs}", render(&row.terms, vars, exact))
}

/// Objective line, then one line per row. Rows with a non-integer number
/// carry the exact row in a trailing comment.
pub fn emit_lp(model: &LpModel) -> String {
    let mut out = format!("min: {};\n", var_name(&model.variables[model.objective]));
    for (i, row) in model.rows.iter().enumerate() {
        let integral = row.rhs.is_integer() && row.terms.iter().all(|(_, a)| a.is_integer());
        let _ = write!(out, "R{}: {};", i + 1, render_row(row, &model.variables, false));
        if !integral {
            let _ = write!(out, " /* exact: {} */", render_row(row, &model.variables, true));
        }
        out.push('\n');
    }
    out
}

struct RawRow {
    terms: Vec<(String, Rational)>,
    relation: Relation,
    rhs: Rational,
}

fn parse_expr(text: &str) -> Result<Vec<(String, Rational)>> {
    let mut terms = Vec::new();
    let mut sign = Rational::one();
    let mut coef: Option<Rational> = None;
    for token in text.split_whitespace().flat_map(split_signs) {
        match token.as_str() {
            "+" => {}
            "-" => sign = -sign,
            t if t.starts_with("s_") => {
                let c = coef.take().unwrap_or_else(Rational::one);
                terms.push((t.to_string(), &sign * c));
                sign = Rational::one();
            }
            t => {
                let v = parse_rational(t).ok_or_else(|| Error::Parse(format!("bad number {t:?}")))?;
                coef = Some(coef.map_or(v.clone(), |c| c * v));
            }
        }
    }
    if coef.is_some() {
        return Err(Error::Parse(format!("dangling constant in {text:?}")));
    }
    Ok(terms)
}

fn split_signs(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = word;
    while let Some(first) = rest.chars().next() {
        if first == '+' || first == '-' {
            out.push(first.to_string());
            rest = &rest[1..];
        } else {
            out.push(rest.to_string());
            break;
        }
    }
    out
}

fn parse_row(text: &str) -> Result<RawRow> {
    let (lhs, relation, rhs) = if let Some((l, r)) = text.split_once(">=") {
        (l, Relation::Ge, r)
    } else if let Some((l, r)) = text.split_once('=') {
        (l, Relation::Eq, r)
    } else {
        return Err(Error::Parse(format!("row without relation: {text:?}")));
    };
    let rhs = parse_rational(rhs.trim()).ok_or_else(|| Error::Parse(format!("bad right-hand side {rhs:?}")))?;
    Ok(RawRow { terms: parse_expr(lhs)?, relation, rhs })
}

/// Reads the dialect written by [`emit_lp`]; exact comments override decimals.
pub fn parse_lp(text: &str) -> Result<LpModel> {
    let mut objective: Option<String> = None;
    let mut raw_rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (body, exact) = match line.find("/*") {
            Some(start) => {
                let end = line.rfind("*/").ok_or_else(|| Error::Parse(format!("unterminated comment: {line:?}")))?;
                let comment = line[start + 2..end].trim();
                (line[..start].trim(), comment.strip_prefix("exact:").map(str::trim))
            }
            None => (line, None),
        };
        let body = body.strip_suffix(';').ok_or_else(|| Error::Parse(format!("missing ';': {line:?}")))?;
        if let Some(obj) = body.strip_prefix("min:") {
            let terms = parse_expr(obj)?;
            match terms.as_slice() {
                [(name, c)] if c.is_one() => objective = Some(name.clone()),
                _ => return Err(Error::Parse("objective must be a single variable".into())),
            }
            continue;
        }
        let (_, row_text) = body.split_once(':').ok_or_else(|| Error::Parse(format!("unnamed row: {line:?}")))?;
        raw_rows.push(parse_row(exact.unwrap_or(row_text))?);
    }
    let objective = objective.ok_or_else(|| Error::Parse("missing objective".into()))?;
    let mut names: BTreeSet<Position<u32>> = BTreeSet::new();
    names.insert(parse_var(&objective)?);
    for r in &raw_rows {
        for (name, _) in &r.terms {
            names.insert(parse_var(name)?);
        }
    }
    let variables: Vec<Position<u32>> = names.into_iter().collect();
    let index = |name: &str| -> Result<usize> { Ok(variables.binary_search(&parse_var(name)?).expect("collected above")) };
    let mut rows = Vec::with_capacity(raw_rows.len());
    for r in raw_rows {
        let terms = r.terms.iter().map(|(n, a)| Ok((index(n)?, a.clone()))).collect::<Result<Vec<_>>>()?;
        rows.push(Row::new(terms, r.relation, r.rhs));
    }
    let objective = index(&objective)?;
    Ok(LpModel { variables, objective, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position::lattice;
    use crate::scalar::ratio;

    #[test]
    fn single_variable_model_is_two_lines() {
        let model = LpModel {
            variables: vec![lattice(1, 1, 1, 0)],
            objective: 0,
            rows: vec![Row::new([(0, ratio(1, 1))], Relation::Ge, ratio(1, 1))],
        };
        let text = emit_lp(&model);
        assert_eq!(text, "min: s_1_1_1_0;\nR1: +s_1_1_1_0 >= 1;\n");
        assert_eq!(parse_lp(&text).unwrap(), model);
    }

    #[test]
    fn fractions_round_trip_through_exact_comments() {
        let model = LpModel {
            variables: vec![lattice(1, 0, 0, 0), lattice(2, 1, 1, 0)],
            objective: 1,
            rows: vec![
                Row::new([(1, ratio(1, 3)), (0, ratio(-2, 1))], Relation::Ge, ratio(2, 7)),
                Row::new([(0, ratio(2, 1)), (1, ratio(-1, 1))], Relation::Eq, ratio(0, 1)),
            ],
        };
        let text = emit_lp(&model);
        assert!(text.contains("0.333333333333 s_2_1_1_0"), "{text}");
        assert!(text.contains("/* exact:"));
        assert_eq!(parse_lp(&text).unwrap(), model);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(significant(&ratio(449, 28)), "16.0357142857");
        assert_eq!(significant(&ratio(1, 3)), "0.333333333333");
        assert_eq!(significant(&ratio(5, 1)), "5");
    }
}
