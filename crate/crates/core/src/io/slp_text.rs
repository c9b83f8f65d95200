//! Text form of straight-line programs, one definition per line:
//!
//! ```text
//! t0 = A3 + A6
//! M2 = (A8 + t6) * B8
//! C8 = v5 - M7
//! ```
//!
//! A combination is `term (("+" | "-") term)*` with an optional leading
//! sign; a term is an optional integer or `p/q` coefficient (optionally
//! followed by `*`) and a variable. A product is `operand * operand` where an
//! operand is a single term or a parenthesized combination. Blank lines and
//! lines starting with `#` or `//` are ignored, except for a `# dims n m p`
//! header which fixes the dimensions.

use thiserror::Error;

use crate::coeff::Coefficient;
use crate::io::scheme_file::infer_dims;
use crate::scheme::Dims;
use crate::slp::{Line, LineRhs, SlpError, StraightLineProgram, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlpTextError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot infer dimensions from the variables used; add a `# dims n m p` header")]
    UnknownDims,
    #[error(transparent)]
    Program(#[from] SlpError),
}

/// A line whose every term is negative: it cannot start with a positive
/// term, so evaluating it needs one extra negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitDiagnostic {
    pub dst: Var,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(Var),
    Num(String),
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    LParen,
    RParen,
}

fn parse_var(word: &str) -> Option<Var> {
    let mut chars = word.chars();
    let head = chars.next()?;
    let digits = chars.as_str().strip_prefix('_').unwrap_or(chars.as_str());
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let index: usize = digits.parse().ok()?;
    Some(match head {
        'A' => Var::A(index),
        'B' => Var::B(index),
        't' => Var::T(index),
        'u' => Var::U(index),
        'v' => Var::V(index),
        'M' => Var::M(index),
        'C' => Var::C(index),
        _ => return None,
    })
}

fn tokenize(line_no: usize, text: &str) -> Result<Vec<Tok>, SlpTextError> {
    let err = |message: String| SlpTextError::Syntax {
        line: line_no,
        message,
    };
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        match ch {
            c if c.is_whitespace() => i += 1,
            '+' | '-' | '*' | '/' | '=' | '(' | ')' => {
                toks.push(match ch {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '=' => Tok::Eq,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                });
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                toks.push(Tok::Num(text[start..i].to_string()));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let var = parse_var(word).ok_or_else(|| err(format!("unknown name `{word}`")))?;
                toks.push(Tok::Ident(var));
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

struct LineParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> SlpTextError {
        SlpTextError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SlpTextError> {
        match self.bump() {
            Some(t) if *t == want => Ok(()),
            Some(t) => {
                let t = format!("{t:?}");
                Err(self.err(format!("expected {what}, found {t}")))
            }
            None => Err(self.err(format!("expected {what} at end of line"))),
        }
    }

    fn coefficient(&mut self) -> Result<Option<Coefficient>, SlpTextError> {
        let Some(Tok::Num(num)) = self.peek().cloned() else {
            return Ok(None);
        };
        self.pos += 1;
        let mut text = num;
        if self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            match self.bump() {
                Some(Tok::Num(den)) => {
                    text.push('/');
                    text.push_str(den);
                }
                _ => return Err(self.err("expected denominator after `/`")),
            }
        }
        let c = text
            .parse::<Coefficient>()
            .map_err(|e| self.err(e.to_string()))?;
        if self.peek() == Some(&Tok::Star)
            && matches!(self.toks.get(self.pos + 1), Some(Tok::Ident(_)))
        {
            self.pos += 1;
        }
        Ok(Some(c))
    }

    fn term(&mut self, sign: Coefficient) -> Result<Term, SlpTextError> {
        let coeff = self.coefficient()?.unwrap_or_else(Coefficient::one);
        match self.bump() {
            Some(Tok::Ident(v)) => Ok(Term::new(&sign * &coeff, *v)),
            _ => Err(self.err("expected a variable")),
        }
    }

    fn combination(&mut self) -> Result<Vec<Term>, SlpTextError> {
        let mut sign = Coefficient::one();
        match self.peek() {
            Some(Tok::Minus) => {
                sign = Coefficient::minus_one();
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let mut terms = vec![self.term(sign)?];
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => Coefficient::one(),
                Some(Tok::Minus) => Coefficient::minus_one(),
                _ => break,
            };
            self.pos += 1;
            terms.push(self.term(sign)?);
        }
        Ok(terms)
    }

    fn operand(&mut self) -> Result<Vec<Term>, SlpTextError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let terms = self.combination()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(terms)
        } else {
            let terms = self.combination()?;
            if terms.len() != 1 {
                return Err(self.err("multi-term product operand needs parentheses"));
            }
            Ok(terms)
        }
    }

    fn line(&mut self) -> Result<Line, SlpTextError> {
        let dst = match self.bump() {
            Some(Tok::Ident(v)) => *v,
            _ => return Err(self.err("expected a destination name")),
        };
        if dst.is_input() {
            return Err(self.err(format!("cannot assign to input `{dst}`")));
        }
        self.expect(Tok::Eq, "`=`")?;
        let start = self.pos;
        let rhs = if self.peek() == Some(&Tok::LParen) {
            let a = self.operand()?;
            self.expect(Tok::Star, "`*` after parenthesized operand")?;
            LineRhs::Product(a, self.operand()?)
        } else {
            let terms = self.combination()?;
            if self.peek() == Some(&Tok::Star) {
                self.pos = start;
                let a = self.operand()?;
                self.expect(Tok::Star, "`*`")?;
                LineRhs::Product(a, self.operand()?)
            } else {
                LineRhs::Combination(terms)
            }
        };
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(Line { dst, rhs })
    }
}

fn dims_header(line: &str) -> Option<Option<Dims>> {
    let rest = line.trim_start_matches('#').trim();
    let rest = rest.strip_prefix("dims")?;
    let nums: Vec<usize> = rest
        .split(|c: char| c.is_whitespace() || c == ',' || c == 'x' || c == ':')
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .ok()?;
    Some(match nums[..] {
        [n, m, p] if n > 0 && m > 0 && p > 0 => Some(Dims::new(n, m, p)),
        _ => None,
    })
}

/// Parses the line-level structure without building a program.
pub fn parse_lines(text: &str) -> Result<(Option<Dims>, Vec<Line>), SlpTextError> {
    let mut header = None;
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(parsed) = dims_header(trimmed) {
                header = Some(parsed.ok_or(SlpTextError::Syntax {
                    line: line_no,
                    message: "malformed dims header".into(),
                })?);
            }
            continue;
        }
        let toks = tokenize(line_no, trimmed)?;
        let mut parser = LineParser {
            toks: &toks,
            pos: 0,
            line: line_no,
        };
        lines.push(parser.line()?);
    }
    Ok((header, lines))
}

fn infer_from_lines(lines: &[Line]) -> Option<Dims> {
    let (mut a, mut b, mut c) = (0, 0, 0);
    let mut visit = |v: &Var| match *v {
        Var::A(i) => a = a.max(i + 1),
        Var::B(i) => b = b.max(i + 1),
        Var::C(i) => c = c.max(i + 1),
        _ => {}
    };
    for line in lines {
        visit(&line.dst);
        match &line.rhs {
            LineRhs::Combination(t) => t.iter().for_each(|t| visit(&t.var)),
            LineRhs::Product(x, y) => x.iter().chain(y).for_each(|t| visit(&t.var)),
        }
    }
    infer_dims(a, b, c)
}

/// Parses a program. Dimensions come from `dims`, else a `# dims` header,
/// else the largest `A`, `B` and `C` indices used.
pub fn parse_slp(text: &str, dims: Option<Dims>) -> Result<StraightLineProgram, SlpTextError> {
    let (header, lines) = parse_lines(text)?;
    let dims = dims
        .or(header)
        .or_else(|| infer_from_lines(&lines))
        .ok_or(SlpTextError::UnknownDims)?;
    Ok(StraightLineProgram::from_lines(dims, &lines)?)
}

/// Rotates `terms` so the first positive term leads, keeping the cyclic
/// order. Returns `false` for a chain of two or more terms none of which is
/// positive; a lone term is a scaling, not a chain, and always passes.
pub fn lead_with_positive(terms: &mut [Term]) -> bool {
    match terms.iter().position(|t| t.coeff.is_positive()) {
        Some(k) => {
            terms.rotate_left(k);
            true
        }
        None => terms.len() < 2,
    }
}

fn render_terms(terms: &[Term]) -> String {
    let mut out = String::new();
    for (k, term) in terms.iter().enumerate() {
        let magnitude = term.coeff.abs();
        let negative = term.coeff.is_negative();
        match (k, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        if !magnitude.is_one() {
            out.push_str(&format!("{magnitude}*"));
        }
        out.push_str(&term.var.to_string());
    }
    out
}

fn render_operand(terms: &[Term]) -> String {
    match terms {
        [only] if only.coeff.is_one() => only.var.to_string(),
        _ => format!("({})", render_terms(terms)),
    }
}

/// Renders a line, leading with a positive term where one exists.
pub fn render_line(line: &Line) -> (String, bool) {
    let mut all_negative = false;
    let rhs = match &line.rhs {
        LineRhs::Combination(terms) => {
            let mut terms = terms.clone();
            all_negative |= !lead_with_positive(&mut terms);
            render_terms(&terms)
        }
        LineRhs::Product(a, b) => {
            let (mut a, mut b) = (a.clone(), b.clone());
            all_negative |= !lead_with_positive(&mut a);
            all_negative |= !lead_with_positive(&mut b);
            format!("{} * {}", render_operand(&a), render_operand(&b))
        }
    };
    (format!("{} = {}", line.dst, rhs), all_negative)
}

/// Emits the program text together with one diagnostic per line that has no
/// positive term (and so needs a leading negation).
pub fn emit_slp_with_diagnostics(slp: &StraightLineProgram) -> (String, Vec<EmitDiagnostic>) {
    let d = slp.dims();
    let mut out = format!("# dims {} {} {}\n", d.n, d.m, d.p);
    let mut diagnostics = Vec::new();
    for line in slp.lines() {
        let (text, all_negative) = render_line(&line);
        if all_negative {
            diagnostics.push(EmitDiagnostic {
                dst: line.dst,
                message: format!(
                    "`{}` has no positive term; costs one extra negation",
                    line.dst
                ),
            });
        }
        out.push_str(&text);
        out.push('\n');
    }
    (out, diagnostics)
}

pub fn emit_slp(slp: &StraightLineProgram) -> String {
    emit_slp_with_diagnostics(slp).0
}
