use std::fmt;

use thiserror::Error;

use super::{Atom, CmpOp, Constant, Literal, Program, Rule, Term, RESERVED_PREFIX};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Not,
    Op(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Var(s) => write!(f, "variable `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Not => f.write_str("`not`"),
            Tok::Op(op) => write!(f, "`{op}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let start = i;
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => advance(1, &mut i, &mut col),
            ')' => advance(1, &mut i, &mut col),
            ',' => advance(1, &mut i, &mut col),
            '.' => advance(1, &mut i, &mut col),
            ':' if chars.get(i + 1) == Some(&'-') => advance(2, &mut i, &mut col),
            '<' => advance(1, &mut i, &mut col),
            '>' if chars.get(i + 1) == Some(&'=') => advance(2, &mut i, &mut col),
            '>' => advance(1, &mut i, &mut col),
            '=' if chars.get(i + 1) == Some(&'<') => advance(2, &mut i, &mut col),
            '=' => advance(1, &mut i, &mut col),
            '!' if chars.get(i + 1) == Some(&'=') => advance(2, &mut i, &mut col),
            '-' if chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                advance(1, &mut i, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut col);
                }
            }
            c if c.is_ascii_digit() => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut col);
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance(1, &mut i, &mut col);
                }
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
        let lexeme: String = chars[start..i].iter().collect();
        let tok = match lexeme.as_str() {
            "(" => Tok::LParen,
            ")" => Tok::RParen,
            "," => Tok::Comma,
            "." => Tok::Dot,
            ":-" => Tok::If,
            "<" => Tok::Op(CmpOp::Lt),
            ">" => Tok::Op(CmpOp::Gt),
            "=<" => Tok::Op(CmpOp::Le),
            ">=" => Tok::Op(CmpOp::Ge),
            "=" => Tok::Op(CmpOp::Eq),
            "!=" => Tok::Op(CmpOp::Ne),
            "not" => Tok::Not,
            s if s.starts_with(RESERVED_PREFIX) => {
                return Err(err(
                    tl,
                    tc,
                    format!("identifier `{s}` uses the reserved prefix `{RESERVED_PREFIX}`"),
                ))
            }
            s if s.starts_with('_') => {
                return Err(err(
                    tl,
                    tc,
                    format!("anonymous variable `{s}` is not supported; name every variable"),
                ))
            }
            s if s.starts_with(|c: char| c.is_ascii_uppercase()) => Tok::Var(s.to_string()),
            s if s.starts_with(|c: char| c.is_ascii_lowercase()) => Tok::Ident(s.to_string()),
            s => match s.parse::<i64>() {
                Ok(v) => Tok::Int(v),
                Err(_) => return Err(err(tl, tc, format!("integer `{s}` out of range"))),
            },
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let s = self.here();
        Err(ParseError {
            line: s.line,
            column: s.column,
            message: message.into(),
        })
    }

    fn expected<T>(&self, what: &str) -> Result<T, ParseError> {
        self.error(format!("expected {what}, found {}", self.peek()))
    }

    fn eat(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.expected(what)
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut rules = Vec::new();
        let mut lines = Vec::new();
        while self.peek() != &Tok::Eof {
            lines.push(self.here().line);
            rules.push(self.rule()?);
        }
        Ok(Program { rules, lines })
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = match self.peek() {
            Tok::If => None,
            Tok::Ident(_) => Some(self.atom()?),
            _ => return self.expected("an atom or `:-` at the start of a rule"),
        };
        let body = match self.peek() {
            Tok::Dot if head.is_some() => Vec::new(),
            Tok::If => {
                self.bump();
                self.body()?
            }
            _ => return self.expected("`:-` or `.` after the rule head"),
        };
        self.eat(&Tok::Dot, "`.` at the end of the rule")?;
        Ok(Rule { head, body })
    }

    fn body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut lits = vec![self.literal()?];
        while self.peek() == &Tok::Comma {
            self.bump();
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                match self.peek() {
                    Tok::Ident(_) => Ok(Literal::Neg(self.atom()?)),
                    _ => self.expected("an atom after `not`"),
                }
            }
            Tok::Ident(name) => {
                if let Tok::Op(_) = self.peek2() {
                    self.bump();
                    return self.comparison(Term::Const(Constant::Sym(name)));
                }
                let atom = self.atom()?;
                if let Tok::Op(_) = self.peek() {
                    if !atom.args.is_empty() {
                        return self.error(format!(
                            "datalog violation: `{}` is used as a function symbol in a comparison",
                            atom.predicate
                        ));
                    }
                }
                Ok(Literal::Pos(atom))
            }
            Tok::Var(_) | Tok::Int(_) => {
                let left = self.term()?;
                self.comparison(left)
            }
            _ => self.expected("a literal"),
        }
    }

    fn comparison(&mut self, left: Term) -> Result<Literal, ParseError> {
        let op = match self.peek() {
            Tok::Op(op) => *op,
            _ => return self.expected("a comparison operator"),
        };
        self.bump();
        let right = self.term()?;
        Ok(Literal::Cmp { left, op, right })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => unreachable!("callers check for an identifier"),
        };
        let mut args = Vec::new();
        if self.peek() == &Tok::LParen {
            self.bump();
            args.push(self.term()?);
            while self.peek() == &Tok::Comma {
                self.bump();
                args.push(self.term()?);
            }
            self.eat(&Tok::RParen, "`,` or `)` in the argument list")?;
        }
        Ok(Atom {
            predicate: name,
            args,
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Term::Const(Constant::Int(i)))
            }
            Tok::Ident(s) => {
                if self.peek2() == &Tok::LParen {
                    return self.error(format!(
                        "datalog violation: function symbol `{s}` in argument position"
                    ));
                }
                self.bump();
                Ok(Term::Const(Constant::Sym(s)))
            }
            _ => self.expected("a term"),
        }
    }
}

/// Parses program text. Comments run from `%` to the end of the line.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    p.program()
}

/// Parses a single query literal, optionally negated and optionally
/// terminated by `.`. Comparisons are not valid queries.
pub fn parse_query(text: &str) -> Result<Literal, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let lit = p.literal()?;
    if let Literal::Cmp { .. } = lit {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "a comparison is not a valid query".into(),
        });
    }
    if p.peek() == &Tok::Dot {
        p.bump();
    }
    if p.peek() != &Tok::Eof {
        return p.expected("end of query");
    }
    Ok(lit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(p: &str, args: Vec<Term>) -> Atom {
        Atom::new(p, args)
    }

    #[test]
    fn parses_max_rule() {
        let p = parse_program("max(X) :- num(X), not smaller(X).").unwrap();
        let expected = Rule::new(
            Some(a("max", vec![Term::var("X")])),
            vec![
                Literal::Pos(a("num", vec![Term::var("X")])),
                Literal::Neg(a("smaller", vec![Term::var("X")])),
            ],
        );
        assert_eq!(p.rules, vec![expected]);
    }

    #[test]
    fn parses_fact_and_constraint() {
        let p = parse_program("p.\n\n:- color(X,C), color(Y,C), edge(X,Y).").unwrap();
        assert_eq!(p.rules[0], Rule::fact(a("p", vec![])));
        assert!(p.rules[1].head.is_none());
        assert_eq!(p.rules[1].body.len(), 3);
        assert_eq!(p.lines, vec![1, 3]);
    }

    #[test]
    fn comments_and_comparisons() {
        let p = parse_program("% header\nr(X) :- d(X), X != a, -3 =< X. % tail\n").unwrap();
        assert_eq!(p.lines, vec![2]);
        assert_eq!(
            p.rules[0].body[1],
            Literal::cmp(Term::var("X"), CmpOp::Ne, Term::sym("a"))
        );
        assert_eq!(
            p.rules[0].body[2],
            Literal::cmp(Term::int(-3), CmpOp::Le, Term::var("X"))
        );
    }

    #[test]
    fn function_symbols_are_datalog_violations() {
        let e = parse_program("p(f(X)) :- q(X).").unwrap_err();
        assert!(e.message.contains("datalog violation"), "{e}");
        assert_eq!((e.line, e.column), (1, 3));
        let e = parse_program("p :- f(X) < 3.").unwrap_err();
        assert!(e.message.contains("datalog violation"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_position_and_expectation() {
        let e = parse_program("p :- q\nr.").unwrap_err();
        assert_eq!((e.line, e.column), (2, 1));
        assert!(e.message.contains("expected"), "{e}");
        let e = parse_program("p(X :- q.").unwrap_err();
        assert!(e.message.contains("`)`"), "{e}");
    }

    #[test]
    fn reserved_and_anonymous_names_rejected() {
        assert!(parse_program("__not_p :- q.").unwrap_err().message.contains("reserved"));
        assert!(parse_program("p :- q(_).").unwrap_err().message.contains("anonymous"));
    }

    #[test]
    fn queries() {
        assert_eq!(
            parse_query("max(7)").unwrap(),
            Literal::Pos(a("max", vec![Term::int(7)]))
        );
        assert_eq!(
            parse_query("not smaller(7)").unwrap(),
            Literal::Neg(a("smaller", vec![Term::int(7)]))
        );
        assert!(parse_query("X < Y").unwrap_err().message.contains("comparison"));
        assert!(parse_query("p(X) q").is_err());
        assert!(parse_query("p.").is_ok());
    }
}
