//! Reading and writing the CPLEX LP text format (the subset used by this
//! crate: minimization, linear rows, bounds and binaries).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::model::{is_identifier, LinearProgram, MixedIntegerProgram, Relation};
use crate::LpError;

/// Renders the model. Every variable is listed in the `Bounds` section so
/// that column order survives a round trip.
pub fn to_lp_string(mip: &MixedIntegerProgram) -> String {
    let lp = mip.lp();
    let names = lp.names();
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    out.push_str(&expression(lp.objective(), names));
    out.push_str("\nSubject To\n");
    for c in lp.constraints() {
        let _ = writeln!(out, " {}:{} {} {}", c.name, expression(&c.coeffs, names), c.relation.symbol(), number(c.rhs));
    }
    out.push_str("Bounds\n");
    for (name, &(lo, hi)) in names.iter().zip(lp.bounds()) {
        let line = match (lo.is_finite(), hi.is_finite()) {
            _ if lo == hi => format!("{name} = {}", number(lo)),
            (true, false) => format!("{name} >= {}", number(lo)),
            (false, false) => format!("{name} free"),
            (false, true) => format!("-inf <= {name} <= {}", number(hi)),
            (true, true) => format!("{} <= {name} <= {}", number(lo), number(hi)),
        };
        let _ = writeln!(out, " {line}");
    }
    let binaries: Vec<usize> = mip.binaries().collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for j in binaries {
            let _ = writeln!(out, " {}", names[j]);
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp_file(mip: &MixedIntegerProgram, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, to_lp_string(mip))
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn expression(coeffs: &[f64], names: &[String]) -> String {
    let mut s = String::new();
    for (a, name) in coeffs.iter().zip(names) {
        if *a == 0.0 {
            continue;
        }
        let sign = if *a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        if s.is_empty() && sign == "+" {
            s.push(' ');
        } else {
            let _ = write!(s, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(s, "{} ", number(mag));
        }
        s.push_str(name);
    }
    if s.is_empty() {
        // keep the line well-formed when every coefficient is zero
        if let Some(first) = names.first() {
            let _ = write!(s, " 0 {first}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>, LpError> {
    let err = |message: String| LpError::Parse { line: lineno, message };
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            ':' => {
                tokens.push(Token::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let rel = match c {
                    '<' => Relation::Le,
                    '>' => Relation::Ge,
                    _ => Relation::Eq,
                };
                i += 1;
                if i < chars.len() && chars[i] == '=' {
                    i += 1;
                } else if c == '=' && i < chars.len() && matches!(chars[i], '<' | '>') {
                    // "=<" and "=>" spellings
                    let rel = if chars[i] == '<' { Relation::Le } else { Relation::Ge };
                    i += 1;
                    tokens.push(Token::Rel(rel));
                    continue;
                }
                tokens.push(Token::Rel(rel));
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut k = i + 1;
                    if k < chars.len() && matches!(chars[k], '+' | '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        i = k;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse().map_err(|_| err(format!("bad number {text:?}")))?;
                tokens.push(Token::Num(v));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '.' | '[' | ']'))
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" => tokens.push(Token::Num(f64::INFINITY)),
                    _ => tokens.push(Token::Ident(word)),
                }
            }
            _ => return Err(err(format!("unexpected character {c:?}"))),
        }
    }
    Ok(tokens)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binary,
    End,
}

fn section_keyword(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    let compact: String = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match compact.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Section::Objective,
        "subject to" | "such that" | "st" | "s.t." => Section::Constraints,
        "bounds" | "bound" => Section::Bounds,
        "binary" | "binaries" | "bin" => Section::Binary,
        "end" => Section::End,
        _ => return None,
    })
}

struct Builder {
    order: Vec<String>,
    index: HashMap<String, usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        self.order.push(name.to_string());
        self.index.insert(name.to_string(), self.order.len() - 1);
        self.order.len() - 1
    }
}

type Terms = Vec<(String, f64)>;

/// Parses `sign? number? name` terms, returning the linear terms and any
/// constant term.
fn parse_terms(tokens: &[Token], lineno: usize) -> Result<(Terms, f64), LpError> {
    let err = |message: &str| LpError::Parse { line: lineno, message: message.into() };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut i = 0;
    while i < tokens.len() {
        let mut sign = 1.0;
        while let Some(t @ (Token::Plus | Token::Minus)) = tokens.get(i) {
            if *t == Token::Minus {
                sign = -sign;
            }
            i += 1;
        }
        let mut coef = None;
        if let Some(Token::Num(v)) = tokens.get(i) {
            coef = Some(*v);
            i += 1;
        }
        match tokens.get(i) {
            Some(Token::Ident(name)) => {
                terms.push((name.clone(), sign * coef.unwrap_or(1.0)));
                i += 1;
            }
            _ => match coef {
                Some(v) => constant += sign * v,
                None => return Err(err("expected a term")),
            },
        }
    }
    Ok((terms, constant))
}

fn strip_label(tokens: &[Token]) -> (Option<String>, &[Token]) {
    match tokens {
        [Token::Ident(name), Token::Colon, rest @ ..] => (Some(name.clone()), rest),
        _ => (None, tokens),
    }
}

fn signed_number(tokens: &[Token]) -> Option<f64> {
    match tokens {
        [Token::Num(v)] => Some(*v),
        [Token::Plus, Token::Num(v)] => Some(*v),
        [Token::Minus, Token::Num(v)] => Some(-*v),
        _ => None,
    }
}

/// Parses LP text produced by [`to_lp_string`] (and common hand-written
/// variants of the same subset).
pub fn parse_lp(text: &str) -> Result<MixedIntegerProgram, LpError> {
    let mut section = Section::None;
    let mut builder = Builder { order: Vec::new(), index: HashMap::new() };
    let mut objective: Terms = Vec::new();
    let mut rows: Vec<(Option<String>, Terms, Relation, f64)> = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut pending: Option<(usize, Vec<Token>)> = None;

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(next) = section_keyword(line) {
            if let Some((l, _)) = pending.take() {
                return Err(LpError::Parse { line: l, message: "incomplete constraint".into() });
            }
            section = next;
            continue;
        }
        let tokens = tokenize(line, lineno)?;
        match section {
            Section::None => return Err(LpError::Parse { line: lineno, message: "content before Minimize".into() }),
            Section::End => return Err(LpError::Parse { line: lineno, message: "content after End".into() }),
            Section::Objective => {
                let (_, rest) = strip_label(&tokens);
                let (terms, _) = parse_terms(rest, lineno)?;
                objective.extend(terms);
            }
            Section::Constraints => {
                let (start, mut acc) = pending.take().unwrap_or((lineno, Vec::new()));
                acc.extend(tokens);
                let rel_pos = acc.iter().position(|t| matches!(t, Token::Rel(_)));
                match rel_pos {
                    Some(p) if p + 1 < acc.len() => {
                        let Token::Rel(rel) = acc[p] else { unreachable!() };
                        let (label, lhs) = strip_label(&acc[..p]);
                        // terms may appear on either side; move them all left
                        let (mut terms, lconst) = parse_terms(lhs, start)?;
                        let (rterms, rconst) = parse_terms(&acc[p + 1..], lineno)?;
                        terms.extend(rterms.into_iter().map(|(n, a)| (n, -a)));
                        rows.push((label, terms, rel, rconst - lconst));
                    }
                    _ => pending = Some((start, acc)),
                }
            }
            Section::Bounds => bounds.push(parse_bound(&tokens, lineno)?),
            Section::Binary => {
                for t in tokens {
                    match t {
                        Token::Ident(name) => binaries.push(name),
                        _ => return Err(LpError::Parse { line: lineno, message: "expected variable names".into() }),
                    }
                }
            }
        }
    }
    if let Some((l, _)) = pending {
        return Err(LpError::Parse { line: l, message: "incomplete constraint".into() });
    }
    if section != Section::End {
        return Err(LpError::Parse { line: text.lines().count(), message: "missing End".into() });
    }

    for (name, _, _) in &bounds {
        builder.var(name);
    }
    for (name, _) in objective.iter().chain(rows.iter().flat_map(|r| r.1.iter())) {
        builder.var(name);
    }
    for name in &binaries {
        builder.var(name);
    }

    let mut lp = LinearProgram::new();
    for name in &builder.order {
        lp.add_var(name, 0.0, f64::INFINITY, 0.0);
    }
    for (name, a) in &objective {
        let j = builder.index[name];
        lp.set_cost(j, lp.objective()[j] + a);
    }
    for (name, lo, hi) in &bounds {
        lp.set_bounds(builder.index[name], *lo, *hi);
    }
    for (label, terms, rel, rhs) in rows {
        let sparse: Vec<(usize, f64)> = terms.iter().map(|(n, a)| (builder.index[n], *a)).collect();
        let row = lp.add_sparse(&sparse, rel, rhs)?;
        if let Some(label) = label {
            lp.set_constraint_name(row, &label);
        }
    }
    lp.validate()?;
    let bin_idx: Vec<usize> = binaries.iter().map(|n| builder.index[n]).collect();
    MixedIntegerProgram::new(lp, bin_idx)
}

fn parse_bound(tokens: &[Token], lineno: usize) -> Result<(String, f64, f64), LpError> {
    let err = || LpError::Parse { line: lineno, message: "unrecognized bound".into() };
    // Split into pieces separated by relations.
    let mut pieces: Vec<&[Token]> = Vec::new();
    let mut rels = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if let Token::Rel(r) = t {
            pieces.push(&tokens[start..i]);
            rels.push(*r);
            start = i + 1;
        }
    }
    pieces.push(&tokens[start..]);
    let ident = |p: &[Token]| match p {
        [Token::Ident(n)] if is_identifier(n) => Some(n.clone()),
        _ => None,
    };
    match (pieces.as_slice(), rels.as_slice()) {
        ([[Token::Ident(n), Token::Ident(kw)]], []) if kw.eq_ignore_ascii_case("free") => {
            Ok((n.clone(), f64::NEG_INFINITY, f64::INFINITY))
        }
        ([a, b], [r]) => {
            if let (Some(n), Some(v)) = (ident(a), signed_number(b)) {
                match r {
                    Relation::Ge => Ok((n, v, f64::INFINITY)),
                    // a lone negative upper bound implies a lower bound of -inf
                    Relation::Le if v < 0.0 => Ok((n, f64::NEG_INFINITY, v)),
                    Relation::Le => Ok((n, 0.0, v)),
                    Relation::Eq => Ok((n, v, v)),
                }
            } else if let (Some(v), Some(n)) = (signed_number(a), ident(b)) {
                match r {
                    Relation::Le => Ok((n, v, f64::INFINITY)),
                    Relation::Ge => Ok((n, 0.0, v)),
                    Relation::Eq => Ok((n, v, v)),
                }
            } else {
                Err(err())
            }
        }
        ([a, b, c], [Relation::Le, Relation::Le]) => {
            let (lo, n, hi) =
                (signed_number(a).ok_or_else(err)?, ident(b).ok_or_else(err)?, signed_number(c).ok_or_else(err)?);
            Ok((n, lo, hi))
        }
        _ => Err(err()),
    }
}
