//! Validator for plain-style emitted text.
//!
//! ```text
//! program := { table | proc }
//! table   := "table" ident ":" "[" [ tuple { "," tuple } ] "]"
//! proc    := "proc" ident "(" [ ident { "," ident } ] "):" block
//! stmt    := "for" pattern "in" ident ":" block
//!          | "if" cond ":" block [ "else:" block ]
//!          | "return" cond
//!          | "let" ident "=" call | call
//!          | "search" pred { "," pred } "prune" ident "accept" ident ":" block
//!          | "emit"
//! cond    := unary { "and" unary }
//! unary   := "not" unary | "(" cond ")" | "true" | "false"
//!          | ("decided" | "known") atom | call | args "in" ident
//!          | term relop term | ident
//! ```

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int,
    Str,
    Punct(&'static str),
}

fn lex(line: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c == ' ' {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[s..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && cs.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Int);
            continue;
        }
        if c == '"' {
            i += 1;
            while i < cs.len() && cs[i] != '"' {
                i += 1;
            }
            if i == cs.len() {
                return Err("unterminated string".into());
            }
            i += 1;
            out.push(Tok::Str);
            continue;
        }
        let two: String = cs[i..(i + 2).min(cs.len())].iter().collect();
        let p = match two.as_str() {
            "=<" => Some("=<"),
            ">=" => Some(">="),
            "!=" => Some("!="),
            _ => None,
        };
        if let Some(p) = p {
            out.push(Tok::Punct(p));
            i += 2;
            continue;
        }
        let p = match c {
            '(' => "(",
            ')' => ")",
            '[' => "[",
            ']' => "]",
            ',' => ",",
            ':' => ":",
            '<' => "<",
            '>' => ">",
            '=' => "=",
            '/' => "/",
            _ => return Err(format!("unexpected character `{c}`")),
        };
        out.push(Tok::Punct(p));
        i += 1;
    }
    Ok(out)
}

const KEYWORDS: [&str; 15] = [
    "table", "proc", "for", "in", "if", "else", "return", "let", "search", "prune", "accept", "emit", "not", "and",
    "decided",
];

struct P {
    toks: Vec<Tok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn punct(&mut self, p: &str) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            t => Err(format!("expected `{p}`, found {t:?}")),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn keyword(&mut self, k: &str) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == k => {
                self.pos += 1;
                Ok(())
            }
            t => Err(format!("expected `{k}`, found {t:?}")),
        }
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == k)
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) && s != "known" => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            t => Err(format!("expected identifier, found {t:?}")),
        }
    }

    /// Procedure, table and predicate names may be any identifier.
    fn name(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            t => Err(format!("expected name, found {t:?}")),
        }
    }

    fn term(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Int | Tok::Str) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.ident().map(|_| ()),
        }
    }

    fn list<F: FnMut(&mut P) -> Result<(), String>>(&mut self, mut item: F) -> Result<(), String> {
        self.punct("(")?;
        if self.is_punct(")") {
            self.pos += 1;
            return Ok(());
        }
        item(self)?;
        while self.is_punct(",") {
            self.pos += 1;
            item(self)?;
        }
        self.punct(")")
    }

    fn call(&mut self) -> Result<(), String> {
        self.name()?;
        self.list(|p| p.term())
    }

    fn atom(&mut self) -> Result<(), String> {
        self.name()?;
        if self.is_punct("(") {
            self.list(|p| p.term())?;
        }
        Ok(())
    }

    fn relop(&self) -> bool {
        matches!(self.peek(), Some(Tok::Punct("<" | ">" | "=<" | ">=" | "=" | "!=")))
    }

    fn cond(&mut self) -> Result<(), String> {
        self.unary()?;
        while self.is_keyword("and") {
            self.pos += 1;
            self.unary()?;
        }
        Ok(())
    }

    fn unary(&mut self) -> Result<(), String> {
        if self.is_keyword("not") {
            self.pos += 1;
            return self.unary();
        }
        if self.is_keyword("true") || self.is_keyword("false") {
            self.pos += 1;
            return Ok(());
        }
        if self.is_keyword("decided") || self.is_keyword("known") {
            self.pos += 1;
            return self.atom();
        }
        if self.is_punct("(") {
            // A tuple membership, or a parenthesized condition.
            let save = self.pos;
            if self.list(|p| p.term()).is_ok() && self.is_keyword("in") {
                self.pos += 1;
                return self.name().map(|_| ());
            }
            self.pos = save + 1;
            self.cond()?;
            return self.punct(")");
        }
        if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::Punct("(")))
            && !self.is_keyword("not")
        {
            return self.call();
        }
        self.term()?;
        if self.is_keyword("in") {
            self.pos += 1;
            return self.name().map(|_| ());
        }
        if self.relop() {
            self.pos += 1;
            return self.term();
        }
        // A local boolean.
        Ok(())
    }

    fn end(&self) -> Result<(), String> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(format!("trailing {t:?}")),
        }
    }
}

/// Kind of a parsed line, for block structure checks.
#[derive(PartialEq)]
enum Line {
    Opener,
    Else,
    Simple,
}

fn statement(toks: Vec<Tok>) -> Result<Line, String> {
    let mut p = P { toks, pos: 0 };
    let kind = if p.is_keyword("for") {
        p.pos += 1;
        if p.is_punct("(") {
            p.list(|p| p.ident().map(|_| ()))?;
        } else {
            p.ident()?;
        }
        p.keyword("in")?;
        p.name()?;
        p.punct(":")?;
        Line::Opener
    } else if p.is_keyword("if") {
        p.pos += 1;
        p.cond()?;
        p.punct(":")?;
        Line::Opener
    } else if p.is_keyword("else") {
        p.pos += 1;
        p.punct(":")?;
        Line::Else
    } else if p.is_keyword("return") {
        p.pos += 1;
        p.cond()?;
        Line::Simple
    } else if p.is_keyword("let") {
        p.pos += 1;
        p.ident()?;
        p.punct("=")?;
        p.call()?;
        Line::Simple
    } else if p.is_keyword("search") {
        p.pos += 1;
        loop {
            p.name()?;
            p.punct("/")?;
            match p.peek() {
                Some(Tok::Int) => p.pos += 1,
                t => return Err(format!("expected arity, found {t:?}")),
            }
            if !p.is_punct(",") {
                break;
            }
            p.pos += 1;
        }
        p.keyword("prune")?;
        p.name()?;
        p.keyword("accept")?;
        p.name()?;
        p.punct(":")?;
        Line::Opener
    } else if p.is_keyword("emit") {
        p.pos += 1;
        Line::Simple
    } else {
        p.call()?;
        Line::Simple
    };
    p.end()?;
    Ok(kind)
}

fn top_level(toks: Vec<Tok>) -> Result<Line, String> {
    let mut p = P { toks, pos: 0 };
    if p.is_keyword("table") {
        p.pos += 1;
        p.name()?;
        p.punct(":")?;
        p.punct("[")?;
        if !p.is_punct("]") {
            p.list(|p| p.term())?;
            while p.is_punct(",") {
                p.pos += 1;
                p.list(|p| p.term())?;
            }
        }
        p.punct("]")?;
        p.end()?;
        Ok(Line::Simple)
    } else {
        p.keyword("proc")?;
        p.name()?;
        p.list(|p| p.ident().map(|_| ()))?;
        p.punct(":")?;
        p.end()?;
        Ok(Line::Opener)
    }
}

/// Checks `text` against the plain-style grammar; errors name the line.
pub fn validate(text: &str) -> Result<(), String> {
    // Indentation depth of the block each open line expects.
    let mut expect_deeper = false;
    let mut depth = 0usize;
    let mut opened: Vec<bool> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let n = n + 1;
        if raw.trim().is_empty() {
            if expect_deeper {
                return Err(format!("line {n}: empty block"));
            }
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        if indent % 4 != 0 || raw.starts_with('\t') {
            return Err(format!("line {n}: indentation is not a multiple of four spaces"));
        }
        let level = indent / 4;
        if expect_deeper && level != depth + 1 {
            return Err(format!("line {n}: expected an indented block"));
        }
        if !expect_deeper && level > depth {
            return Err(format!("line {n}: unexpected indent"));
        }
        let toks = lex(raw.trim()).map_err(|e| format!("line {n}: {e}"))?;
        let kind = if level == 0 {
            top_level(toks)
        } else {
            statement(toks)
        }
        .map_err(|e| format!("line {n}: {e}: `{}`", raw.trim()))?;
        let prev = opened.get(level).copied();
        opened.truncate(level);
        if kind == Line::Else && prev != Some(true) {
            return Err(format!("line {n}: else without if"));
        }
        let is_if = raw.trim_start().starts_with("if ");
        opened.push(is_if);
        depth = level;
        expect_deeper = kind != Line::Simple;
    }
    if expect_deeper {
        return Err("unterminated block at end of text".into());
    }
    Ok(())
}
