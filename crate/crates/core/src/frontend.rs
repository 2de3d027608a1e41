//! Loop language parser and variable reordering into lower-triangular form.
//!
//! ```text
//! vars: w x y z
//! guard: y + z > 0
//! update:
//! w := 2
//! x := x + 1
//! y := -w - 2*y
//! z := x
//! ```
//!
//! Guard atoms may use `>` or `>=`; each atom is scaled to integer
//! coefficients, and `α >= β` becomes `α - β + 1 > 0` (valid over ℤ).
//! Updates are simultaneous and must have integer coefficients. `#` starts a
//! comment.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::affine::{AffineExpr, Rational, VarId};
use crate::program::{Guard, IntMatrix, Loop};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownVariable(String),
    Nonlinear,
    NonIntegerUpdate(String),
    DuplicateVariable(String),
    DuplicateAssignment(String),
    MissingAssignment(String),
    ZeroDenominator,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            ParseErrorKind::Nonlinear => write!(f, "nonlinear expression"),
            ParseErrorKind::NonIntegerUpdate(v) => {
                write!(f, "update of `{v}` has a non-integer coefficient")
            }
            ParseErrorKind::DuplicateVariable(v) => write!(f, "variable `{v}` declared twice"),
            ParseErrorKind::DuplicateAssignment(v) => write!(f, "variable `{v}` assigned twice"),
            ParseErrorKind::MissingAssignment(v) => write!(f, "variable `{v}` is never assigned"),
            ParseErrorKind::ZeroDenominator => write!(f, "division by zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Gt,
    Ge,
    Colon,
    Assign,
    And,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Assign => write!(f, "`:=`"),
            Tok::And => write!(f, "`&&`"),
            Tok::Newline => write!(f, "end of line"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line_no, col) = (li + 1, i + 1);
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: line_no, col });
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let digits: String = chars[start..i].iter().collect();
                    push(&mut out, Tok::Int(digits.parse().expect("digits")));
                }
                '+' => {
                    push(&mut out, Tok::Plus);
                    i += 1;
                }
                '-' => {
                    push(&mut out, Tok::Minus);
                    i += 1;
                }
                '*' => {
                    push(&mut out, Tok::Star);
                    i += 1;
                }
                '/' => {
                    push(&mut out, Tok::Slash);
                    i += 1;
                }
                '>' if chars.get(i + 1) == Some(&'=') => {
                    push(&mut out, Tok::Ge);
                    i += 2;
                }
                '>' => {
                    push(&mut out, Tok::Gt);
                    i += 1;
                }
                ':' if chars.get(i + 1) == Some(&'=') => {
                    push(&mut out, Tok::Assign);
                    i += 2;
                }
                ':' => {
                    push(&mut out, Tok::Colon);
                    i += 1;
                }
                '&' if chars.get(i + 1) == Some(&'&') => {
                    push(&mut out, Tok::And);
                    i += 2;
                }
                other => {
                    return Err(ParseError {
                        line: line_no,
                        col,
                        kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                    })
                }
            }
        }
        out.push(Spanned {
            tok: Tok::Newline,
            line: li + 1,
            col: chars.len() + 1,
        });
    }
    let last_line = text.lines().count().max(1);
    out.push(Spanned {
        tok: Tok::Eof,
        line: last_line,
        col: 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    vars: HashMap<String, VarId>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn unexpected(t: &Spanned, wanted: &str) -> ParseError {
        Self::err_at(
            t,
            ParseErrorKind::Syntax(format!("expected {wanted}, found {}", t.tok)),
        )
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Spanned, ParseError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(Self::unexpected(&t, wanted))
        }
    }

    fn header(&mut self, name: &str) -> Result<(), ParseError> {
        self.skip_newlines();
        let t = self.bump();
        if t.tok != Tok::Ident(name.to_string()) {
            return Err(Self::unexpected(&t, &format!("`{name}:`")));
        }
        self.expect(Tok::Colon, "`:`")?;
        Ok(())
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => Err(Self::unexpected(&t, "end of line")),
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Int(i) => Ok(i),
            _ => Err(Self::unexpected(&t, "an integer")),
        }
    }

    /// `factor (('*' factor) | ('/' integer))*` with at most one variable.
    fn term(&mut self) -> Result<AffineExpr, ParseError> {
        let mut coeff = Rational::one();
        let mut var: Option<VarId> = None;
        let mut want_factor = true;
        loop {
            if want_factor {
                let t = self.bump();
                match t.tok {
                    Tok::Int(i) => coeff *= Rational::from_integer(i),
                    Tok::Ident(ref name) => {
                        let id = *self
                            .vars
                            .get(name)
                            .ok_or_else(|| Self::err_at(&t, ParseErrorKind::UnknownVariable(name.clone())))?;
                        if var.is_some() {
                            return Err(Self::err_at(&t, ParseErrorKind::Nonlinear));
                        }
                        var = Some(id);
                    }
                    _ => return Err(Self::unexpected(&t, "a number or variable")),
                }
                want_factor = false;
                continue;
            }
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    want_factor = true;
                }
                Tok::Slash => {
                    let slash = self.bump();
                    let d = self.integer()?;
                    if d.is_zero() {
                        return Err(Self::err_at(&slash, ParseErrorKind::ZeroDenominator));
                    }
                    coeff /= Rational::from_integer(d);
                }
                _ => break,
            }
        }
        Ok(match var {
            Some(v) => AffineExpr::term(v, coeff),
            None => AffineExpr::constant(coeff),
        })
    }

    fn linexpr(&mut self) -> Result<AffineExpr, ParseError> {
        let mut negate = false;
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                negate = true;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = -acc;
        }
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn atom(&mut self) -> Result<AffineExpr, ParseError> {
        let lhs = self.linexpr()?;
        let op = self.bump();
        let rhs = self.linexpr()?;
        let diff = (lhs - rhs).clear_denominators();
        match op.tok {
            Tok::Gt => Ok(diff),
            Tok::Ge => Ok(diff + AffineExpr::constant(Rational::one())),
            _ => Err(Self::unexpected(&op, "`>` or `>=`")),
        }
    }
}

/// Parses a loop from the textual input language.
pub fn parse_loop(text: &str) -> Result<Loop, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        vars: HashMap::new(),
    };

    p.header("vars")?;
    let mut names: Vec<String> = Vec::new();
    loop {
        let t = p.bump();
        match t.tok {
            Tok::Ident(ref name) => {
                if name == "true" {
                    return Err(Parser::err_at(
                        &t,
                        ParseErrorKind::Syntax("`true` is reserved".into()),
                    ));
                }
                if p.vars.contains_key(name) {
                    return Err(Parser::err_at(&t, ParseErrorKind::DuplicateVariable(name.clone())));
                }
                p.vars.insert(name.clone(), VarId(names.len()));
                names.push(name.clone());
            }
            Tok::Newline | Tok::Eof if !names.is_empty() => break,
            _ => return Err(Parser::unexpected(&t, "a variable name")),
        }
    }

    p.header("guard")?;
    let mut atoms = Vec::new();
    if p.peek().tok == Tok::Ident("true".into()) {
        p.bump();
    } else {
        atoms.push(p.atom()?);
        while p.peek().tok == Tok::And {
            p.bump();
            atoms.push(p.atom()?);
        }
    }
    p.end_of_line()?;

    p.header("update")?;
    let d = names.len();
    let mut rows: Vec<Option<AffineExpr>> = vec![None; d];
    loop {
        p.skip_newlines();
        let t = p.bump();
        let name = match t.tok {
            Tok::Eof => break,
            Tok::Ident(ref name) => name.clone(),
            _ => return Err(Parser::unexpected(&t, "an assignment")),
        };
        let id = *p
            .vars
            .get(&name)
            .ok_or_else(|| Parser::err_at(&t, ParseErrorKind::UnknownVariable(name.clone())))?;
        p.expect(Tok::Assign, "`:=`")?;
        let rhs = p.linexpr()?;
        p.end_of_line()?;
        if rhs.integer_coeffs().is_none() {
            return Err(Parser::err_at(&t, ParseErrorKind::NonIntegerUpdate(name)));
        }
        if rows[id.index()].is_some() {
            return Err(Parser::err_at(&t, ParseErrorKind::DuplicateAssignment(name)));
        }
        rows[id.index()] = Some(rhs);
    }

    let mut matrix = Vec::with_capacity(d);
    let mut offset = Vec::with_capacity(d);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| {
            let eof = p.peek();
            Parser::err_at(eof, ParseErrorKind::MissingAssignment(names[i].clone()))
        })?;
        let (coeffs, constant) = row.integer_coeffs().expect("checked above");
        matrix.push(
            (0..d)
                .map(|j| coeffs.get(&VarId(j)).cloned().unwrap_or_default())
                .collect(),
        );
        offset.push(constant);
    }
    Ok(Loop::new(names, Guard::new(atoms), IntMatrix::new(matrix), offset))
}

/// A dependency cycle prevents a triangular variable order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("update matrix is not triangularizable: cyclic dependency {}", .cycle.join(" -> "))]
pub struct NotTriangularizable {
    /// Variable names along the cycle; the first name is repeated at the end.
    pub cycle: Vec<String>,
}

/// A loop rewritten so its update matrix is lower triangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLoop {
    /// The loop over the internal (triangular) variable order.
    pub internal: Loop,
    /// `permutation[i]` is the internal position of declared variable `i`.
    pub permutation: Vec<usize>,
}

impl ParsedLoop {
    /// Maps an internal-order vector back to declaration order.
    pub fn to_declared<T: Clone>(&self, internal: &[T]) -> Vec<T> {
        self.permutation.iter().map(|&k| internal[k].clone()).collect()
    }

    /// Maps a declaration-order vector to internal order.
    pub fn to_internal<T: Clone>(&self, declared: &[T]) -> Vec<T> {
        let mut out: Vec<Option<T>> = vec![None; declared.len()];
        for (i, &k) in self.permutation.iter().enumerate() {
            out[k] = Some(declared[i].clone());
        }
        out.into_iter().map(|v| v.expect("bijection")).collect()
    }
}

/// Reorders variables topologically (ties broken by declaration index) so
/// that every variable's update depends only on itself and earlier ones.
pub fn triangularize(lp: &Loop) -> Result<ParsedLoop, NotTriangularizable> {
    let d = lp.dim();
    // deps[i]: variables j != i that the update of i reads.
    let deps: Vec<BTreeSet<usize>> = (0..d)
        .map(|i| {
            (0..d)
                .filter(|&j| j != i && !lp.matrix.get(i, j).is_zero())
                .collect()
        })
        .collect();
    let mut placed = vec![false; d];
    let mut order = Vec::with_capacity(d);
    while order.len() < d {
        let next = (0..d).find(|&i| !placed[i] && deps[i].iter().all(|&j| placed[j]));
        match next {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                return Err(NotTriangularizable {
                    cycle: find_cycle(&deps, &placed)
                        .into_iter()
                        .map(|i| lp.var_names[i].clone())
                        .collect(),
                })
            }
        }
    }
    let mut permutation = vec![0; d];
    for (k, &i) in order.iter().enumerate() {
        permutation[i] = k;
    }
    let remap = |v: VarId| VarId(permutation[v.index()]);
    let internal = Loop::new(
        order.iter().map(|&i| lp.var_names[i].clone()).collect(),
        Guard::new(lp.guard.atoms.iter().map(|a| a.rename(remap)).collect()),
        IntMatrix::new(
            order
                .iter()
                .map(|&i| order.iter().map(|&j| lp.matrix.get(i, j).clone()).collect())
                .collect(),
        ),
        order.iter().map(|&i| lp.offset[i].clone()).collect(),
    );
    Ok(ParsedLoop {
        internal,
        permutation,
    })
}

/// Walks unplaced dependencies until a node repeats.
fn find_cycle(deps: &[BTreeSet<usize>], placed: &[bool]) -> Vec<usize> {
    let start = (0..deps.len()).find(|&i| !placed[i]).expect("an unplaced node");
    let mut path = vec![start];
    let mut cur = start;
    loop {
        cur = *deps[cur]
            .iter()
            .find(|&&j| !placed[j])
            .expect("every unplaced node has an unplaced dependency");
        if let Some(pos) = path.iter().position(|&v| v == cur) {
            let mut cycle: Vec<usize> = path[pos..].to_vec();
            cycle.push(cycle[0]);
            return cycle;
        }
        path.push(cur);
    }
}

/// Parses and triangularizes in one go.
pub fn parse_triangular(text: &str) -> Result<ParsedLoop, crate::Error> {
    let lp = parse_loop(text)?;
    Ok(triangularize(&lp)?)
}
