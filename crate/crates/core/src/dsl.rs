//! The workbench file format: one file holds a signature, output algebra,
//! alphabet, theory, rule table, corecursive system and grammar, each optional.
//!
//! ```text
//! signature { op X/0; op +/2 infix 1; op */2 infix 2; family scalar {0, 1, 2}; }
//! outputs rational;
//! alphabet { t };
//! theory commutative-semiring;
//! rules simple-sos {
//!   rule [q] => out = q; next(a) = [0];
//!   rule +(x: o=ox, d=dx; y: o=oy, d=dy) => out = ox + oy; next(a) = dx(a) + dy(a);
//! }
//! system { ones: out = 1; next = ones; }
//! grammar { S: empty=1; S -a-> S B; B -b-> eps; start S; }
//! ```
//!
//! Infix operations are right-associative.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::behaviour::{Alphabet, OutExpr, Output, OutputAlgebra, OutputKind, Step};
use crate::cfg::GnfGrammar;
use crate::error::{Error, Result, SyntaxKind};
use crate::gsos::{ArgBinding, DistLaw, Format, GsosSpec, NextExpr, Pattern, Rule, RuleHead};
use crate::poly::{fmt_rational, Rational, Scalar};
use crate::solver::CorecSystem;
use crate::sym::Sym;
use crate::terms::{FamilyDecl, OpDecl, Signature, Term, DEFAULT_FAMILY};
use crate::theories::{EquationScheme, FiniteModel, SemiringRoles, Theory, TheoryKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Punct(char),
    Arrow,
    FatArrow,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
    start: usize,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        let span = Span { line, column: col };
        let mut j = i + 1;
        let tok = if c.is_alphabetic() || c == '_' {
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_' || chars[j].1 == '\'') {
                j += 1;
            }
            Tok::Ident(chars[i..j].iter().map(|p| p.1).collect())
        } else if c.is_ascii_digit() {
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            Tok::Num(chars[i..j].iter().map(|p| p.1).collect())
        } else if (c == '-' || c == '=') && chars.get(j).map(|p| p.1) == Some('>') {
            j += 1;
            if c == '-' {
                Tok::Arrow
            } else {
                Tok::FatArrow
            }
        } else {
            Tok::Punct(c)
        };
        for k in i..j {
            advance(chars[k].1, &mut line, &mut col);
        }
        let end = chars.get(j).map_or(src.len(), |p| p.0);
        out.push(Token { tok, span, start: off, end });
        i = j;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, column: col },
        start: src.len(),
        end: src.len(),
    });
    Ok(out)
}

fn diag(kind: SyntaxKind, span: Span, message: impl Into<String>) -> Error {
    Error::Syntax {
        kind,
        message: message.into(),
        line: span.line,
        column: span.column,
    }
}

fn locate(span: Span, e: Error) -> Error {
    match e {
        Error::Syntax { .. } => e,
        other => diag(SyntaxKind::Invalid, span, other.to_string()),
    }
}

/// Term syntax before symbols are resolved.
#[derive(Clone, Debug)]
enum Raw {
    Name(Sym, Span),
    Call(Sym, Vec<Raw>, Span),
    Bracket(Sym, OutExpr, Span),
    Infix(Sym, Box<Raw>, Box<Raw>, Span),
}

/// Source positions of the sections; ignored by equality.
#[derive(Clone, Debug, Default)]
pub struct Spans(pub BTreeMap<String, Span>);

impl PartialEq for Spans {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Spans {}

/// A loaded workbench file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workbench {
    pub signature: Option<Signature>,
    pub outputs: Option<OutputKind>,
    pub alphabet: Option<Alphabet>,
    pub theory: Option<Theory>,
    pub law: Option<DistLaw>,
    pub system: Option<CorecSystem>,
    pub grammar: Option<GnfGrammar>,
    pub spans: Spans,
}

impl Workbench {
    pub fn parse(src: &str) -> Result<Self> {
        Parser::new(src)?.workbench()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| {
            diag(
                SyntaxKind::Parse,
                Span { line: 0, column: 0 },
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        Workbench::parse(&src)
    }

    fn missing(&self, what: &str) -> Error {
        diag(SyntaxKind::MissingSection, Span { line: 0, column: 0 }, format!("no {what} section"))
    }

    pub fn require_signature(&self) -> Result<&Signature> {
        self.signature.as_ref().ok_or_else(|| self.missing("signature"))
    }

    pub fn require_law(&self) -> Result<&DistLaw> {
        self.law.as_ref().ok_or_else(|| self.missing("rules"))
    }

    pub fn require_system(&self) -> Result<&CorecSystem> {
        self.system.as_ref().ok_or_else(|| self.missing("system"))
    }

    pub fn require_grammar(&self) -> Result<&GnfGrammar> {
        self.grammar.as_ref().ok_or_else(|| self.missing("grammar"))
    }

    /// The declared theory, or the free theory over the signature.
    pub fn theory_or_free(&self) -> Result<Theory> {
        match &self.theory {
            Some(t) => Ok(t.clone()),
            None => Ok(Theory::free(self.require_signature()?.clone())),
        }
    }

    /// Pretty-prints the workbench in its own file format.
    pub fn print(&self) -> String {
        print(self)
    }
}

/// Parses a term over `sig`; names that are not nullary operations are variables.
pub fn parse_term(sig: &Signature, src: &str) -> Result<Term> {
    let mut p = Parser::new(src)?;
    p.signature = Some(sig.clone());
    let raw = p.raw_term(0)?;
    p.expect_eof()?;
    p.resolve_term(&raw)
}

/// Splits a word into letters: character by character when every letter is
/// one character, otherwise on whitespace and commas. `ε` is the empty word.
pub fn parse_word(alphabet: &Alphabet, s: &str) -> Result<Vec<Sym>> {
    let s = s.trim();
    if s.is_empty() || s == "ε" || s == "eps" {
        return Ok(Vec::new());
    }
    let single = alphabet.letters().iter().all(|a| a.chars().count() == 1);
    let parts: Vec<String> = if single {
        s.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
    } else {
        s.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|p| !p.is_empty())
            .map(String::from)
            .collect()
    };
    parts
        .into_iter()
        .map(|p| {
            if alphabet.contains(&p) {
                Ok(Sym::new(p))
            } else {
                Err(Error::AlphabetMismatch(format!("`{p}` is not a letter")))
            }
        })
        .collect()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    signature: Option<Signature>,
    outputs: Option<OutputKind>,
    alphabet: Option<Alphabet>,
    theory: Option<Theory>,
    law: Option<DistLaw>,
    system: Option<(Vec<(Sym, Step<Term>)>, Span)>,
    grammar: Option<GrammarDraft>,
    spans: BTreeMap<String, Span>,
}

struct GrammarDraft {
    span: Span,
    nonterminals: Vec<Sym>,
    empty: BTreeMap<Sym, bool>,
    prods: Vec<(Sym, Sym, Vec<Sym>)>,
    start: Option<Raw>,
}

const KEYWORDS: &[&str] = &["out", "next", "case", "rule", "start", "eps", "empty"];

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            signature: None,
            outputs: None,
            alphabet: None,
            theory: None,
            law: None,
            system: None,
            grammar: None,
            spans: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn adjacent(&self) -> bool {
        self.pos > 0 && self.toks[self.pos - 1].end == self.toks[self.pos].start
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        diag(SyntaxKind::Parse, self.span(), msg)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) | Tok::Num(s) => format!("`{s}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_tok(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", Self::describe(&t), Self::describe(self.peek()))))
        }
    }

    fn expect_eof(&self) -> Result<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(self.err(format!("unexpected {}", Self::describe(t)))),
        }
    }

    fn ident(&mut self) -> Result<Sym> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Sym::new(s))
            }
            t => Err(self.err(format!("expected a name, found {}", Self::describe(&t)))),
        }
    }

    fn number(&mut self) -> Result<u64> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let sp = self.span();
                self.bump();
                s.parse().map_err(|_| diag(SyntaxKind::Parse, sp, "number too large"))
            }
            t => Err(self.err(format!("expected a number, found {}", Self::describe(&t)))),
        }
    }

    /// Names joined by adjacent dashes, e.g. `plus-assoc`.
    fn dashed(&mut self) -> Result<String> {
        let mut s = match self.peek().clone() {
            Tok::Ident(s) | Tok::Num(s) => {
                self.bump();
                s
            }
            t => return Err(self.err(format!("expected a name, found {}", Self::describe(&t)))),
        };
        while self.is_punct('-') && self.adjacent() && matches!(self.peek_at(1), Tok::Ident(_) | Tok::Num(_)) {
            self.bump();
            match self.bump().tok {
                Tok::Ident(p) | Tok::Num(p) => {
                    s.push('-');
                    s.push_str(&p);
                }
                _ => unreachable!(),
            }
        }
        Ok(s)
    }

    /// An operation symbol: a name, a numeral or one punctuation character.
    fn symbol(&mut self) -> Result<Sym> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Num(s) => {
                self.bump();
                Ok(Sym::new(s))
            }
            Tok::Punct(c) if !"{}()[];,:=#".contains(c) => {
                self.bump();
                Ok(Sym::new(c.to_string()))
            }
            t => Err(self.err(format!("expected a symbol, found {}", Self::describe(&t)))),
        }
    }

    /// A letter of the alphabet: a name, a numeral or any bracket or operator character.
    fn letter(&mut self) -> Result<Sym> {
        match self.peek().clone() {
            Tok::Punct(c) if !"{};,:=".contains(c) => {
                self.bump();
                Ok(Sym::new(c.to_string()))
            }
            _ => self.symbol(),
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        let neg = self.eat_punct('-');
        let n = self.number()?;
        let mut q = Rational::from_integer(n.into());
        if self.is_punct('/') {
            self.bump();
            let d = self.number()?;
            if d == 0 {
                return Err(self.err("zero denominator"));
            }
            q /= Rational::from_integer(d.into());
        }
        Ok(if neg { -q } else { q })
    }

    fn section(&mut self, name: &str) -> Result<Span> {
        let sp = self.span();
        if self.spans.insert(name.to_string(), sp).is_some() {
            return Err(diag(SyntaxKind::Parse, sp, format!("second {name} section")));
        }
        self.bump();
        Ok(sp)
    }

    fn end_block(&mut self) -> Result<()> {
        self.expect_punct('}')?;
        self.eat_punct(';');
        Ok(())
    }

    fn workbench(mut self) -> Result<Workbench> {
        loop {
            let kw = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                t => return Err(self.err(format!("expected a section, found {}", Self::describe(t)))),
            };
            match kw.as_str() {
                "signature" => self.signature_block()?,
                "outputs" => self.outputs_block()?,
                "alphabet" => self.alphabet_block()?,
                "theory" => self.theory_block()?,
                "rules" => self.rules_block()?,
                "system" => self.system_block()?,
                "grammar" => self.grammar_block()?,
                other => return Err(self.err(format!("unknown section `{other}`"))),
            }
        }
        let system = match self.system.take() {
            Some((phi, sp)) => {
                let law = self
                    .law
                    .clone()
                    .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "a system needs a rules section"))?;
                Some(CorecSystem::new(law, phi, self.theory.clone()).map_err(|e| locate(sp, e))?)
            }
            None => None,
        };
        let grammar = match self.grammar.take() {
            Some(g) => Some(self.finish_grammar(g)?),
            None => None,
        };
        Ok(Workbench {
            signature: self.signature,
            outputs: self.outputs,
            alphabet: self.alphabet,
            theory: self.theory,
            law: self.law,
            system,
            grammar,
            spans: Spans(self.spans),
        })
    }

    fn need_signature(&self, sp: Span) -> Result<&Signature> {
        self.signature
            .as_ref()
            .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "declare the signature first"))
    }

    fn signature_block(&mut self) -> Result<()> {
        let sp = self.section("signature")?;
        self.expect_punct('{')?;
        let (mut ops, mut families) = (Vec::new(), Vec::new());
        while !self.is_punct('}') {
            if self.is_kw("op") {
                self.bump();
                let symbol = self.symbol()?;
                self.expect_punct('/')?;
                let arity = self.number()? as usize;
                let infix = if self.is_kw("infix") {
                    self.bump();
                    Some(self.number()?.min(255) as u8)
                } else {
                    None
                };
                ops.push(OpDecl { symbol, arity, infix });
            } else if self.is_kw("family") {
                self.bump();
                let name = self.ident()?;
                let mut samples = Vec::new();
                self.expect_punct('{')?;
                while !self.is_punct('}') {
                    samples.push(self.rational()?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct('}')?;
                families.push(FamilyDecl { name, samples });
            } else {
                return Err(self.err(format!("expected `op` or `family`, found {}", Self::describe(self.peek()))));
            }
            self.expect_punct(';')?;
        }
        self.end_block()?;
        let sig = Signature::new(ops, families).map_err(|e| locate(sp, e))?;
        self.signature = Some(sig);
        Ok(())
    }

    fn outputs_block(&mut self) -> Result<()> {
        self.section("outputs")?;
        let sp = self.span();
        self.outputs = Some(match self.ident()?.as_str() {
            "bool" => OutputKind::Bool,
            "rational" => OutputKind::Rational,
            other => return Err(diag(SyntaxKind::Parse, sp, format!("unknown output algebra `{other}`"))),
        });
        self.expect_punct(';')
    }

    fn alphabet_block(&mut self) -> Result<()> {
        let sp = self.section("alphabet")?;
        self.expect_punct('{')?;
        let mut letters = Vec::new();
        while !self.is_punct('}') {
            letters.push(self.letter()?);
            if !self.eat_punct(',') {
                break;
            }
        }
        self.end_block()?;
        self.alphabet = Some(Alphabet::new(letters).map_err(|e| locate(sp, e))?);
        Ok(())
    }

    fn theory_block(&mut self) -> Result<()> {
        let sp = self.section("theory")?;
        let sig = self.need_signature(sp)?.clone();
        let kind_span = self.span();
        let kind = self.dashed()?;
        let theory = match kind.as_str() {
            "commutative-semiring" | "idempotent-semiring" => {
                self.expect_punct(';')?;
                let roles = SemiringRoles::infer(&sig).map_err(|e| locate(kind_span, e))?;
                if kind == "commutative-semiring" {
                    Theory::commutative_semiring(sig, roles)
                } else {
                    Theory::idempotent_semiring(sig, roles)
                }
                .map_err(|e| locate(kind_span, e))?
            }
            "free" => {
                self.expect_punct(';')?;
                Theory::free(sig)
            }
            "generic" => {
                self.expect_punct('{')?;
                let mut schemes = Vec::new();
                let mut model = None;
                while !self.is_punct('}') {
                    if self.is_kw("eq") {
                        self.bump();
                        let name = self.dashed()?;
                        self.expect_punct(':')?;
                        let lhs = self.raw_term(0)?;
                        self.expect_punct('=')?;
                        let rhs = self.raw_term(0)?;
                        self.expect_punct(';')?;
                        let (lhs, rhs) = (self.resolve_term(&lhs)?, self.resolve_term(&rhs)?);
                        schemes.push(EquationScheme::from_sides(name, lhs, rhs));
                    } else if self.is_kw("model") {
                        self.bump();
                        model = Some(self.model()?);
                    } else {
                        return Err(self.err(format!("expected `eq` or `model`, found {}", Self::describe(self.peek()))));
                    }
                }
                self.end_block()?;
                Theory::generic(sig, schemes, model).map_err(|e| locate(kind_span, e))?
            }
            other => return Err(diag(SyntaxKind::Parse, kind_span, format!("unknown theory `{other}`"))),
        };
        self.theory = Some(theory);
        Ok(())
    }

    fn model(&mut self) -> Result<FiniteModel> {
        let carrier = self.number()? as usize;
        self.expect_punct('{')?;
        let mut tables: BTreeMap<Sym, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
        while !self.is_punct('}') {
            let f = self.symbol()?;
            let mut args = Vec::new();
            if self.eat_punct('(') {
                while !self.is_punct(')') {
                    args.push(self.number()? as usize);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(')')?;
            }
            self.expect_punct('=')?;
            let v = self.number()? as usize;
            self.expect_punct(';')?;
            tables.entry(f).or_default().insert(args, v);
        }
        self.end_block()?;
        Ok(FiniteModel::new(carrier, tables))
    }

    fn rules_block(&mut self) -> Result<()> {
        let sp = self.section("rules")?;
        let fmt_span = self.span();
        let format = match self.dashed()?.as_str() {
            "simple-sos" => Format::SimpleSos,
            "gsos" => Format::Gsos,
            other => return Err(diag(SyntaxKind::Parse, fmt_span, format!("unknown rule format `{other}`"))),
        };
        let sig = self.need_signature(sp)?.clone();
        let alphabet = self
            .alphabet
            .clone()
            .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "declare the alphabet before the rules"))?;
        let kind = self
            .outputs
            .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "declare the outputs before the rules"))?;
        self.expect_punct('{')?;
        let mut rules = Vec::new();
        while !self.is_punct('}') {
            rules.push(self.rule(&sig)?);
        }
        self.end_block()?;
        let spec = GsosSpec::new(format, rules).map_err(|e| locate(sp, e))?;
        self.law = Some(DistLaw::new(sig, alphabet, OutputAlgebra::new(kind), spec).map_err(|e| locate(sp, e))?);
        Ok(())
    }

    fn rule(&mut self, sig: &Signature) -> Result<Rule> {
        self.expect_kw("rule")?;
        let head_span = self.span();
        let head = if self.eat_punct('[') {
            let index = self.ident()?;
            self.expect_punct(']')?;
            RuleHead::Family {
                family: Sym::new(DEFAULT_FAMILY),
                index,
            }
        } else {
            let s = self.symbol()?;
            if self.is_punct('[') && self.adjacent() {
                self.bump();
                let index = self.ident()?;
                self.expect_punct(']')?;
                RuleHead::Family { family: s, index }
            } else {
                RuleHead::Op(s)
            }
        };
        if let RuleHead::Op(s) = &head {
            if sig.op(s).is_none() {
                return Err(diag(SyntaxKind::UnknownSymbol, head_span, format!("rule for undeclared `{s}`")));
            }
        }
        let mut args = Vec::new();
        if self.eat_punct('(') {
            while !self.is_punct(')') {
                let arg = self.ident()?;
                self.expect_punct(':')?;
                self.expect_kw("o")?;
                self.expect_punct('=')?;
                let out = self.ident()?;
                self.expect_punct(',')?;
                self.expect_kw("d")?;
                self.expect_punct('=')?;
                let deriv = self.ident()?;
                args.push(ArgBinding { arg, out, deriv });
                if !self.eat_punct(';') {
                    break;
                }
            }
            self.expect_punct(')')?;
        }
        if let RuleHead::Op(s) = &head {
            let arity = sig.arity(s).expect("checked");
            if arity != args.len() {
                return Err(diag(
                    SyntaxKind::ArityMismatch,
                    head_span,
                    format!("`{s}` has arity {arity} but its rule binds {} arguments", args.len()),
                ));
            }
        }
        self.expect_tok(Tok::FatArrow)?;
        self.expect_kw("out")?;
        self.expect_punct('=')?;
        let out = self.out_expr()?;
        self.expect_punct(';')?;
        self.expect_kw("next")?;
        self.expect_punct('(')?;
        let binder = self.ident()?;
        self.expect_punct(')')?;
        self.expect_punct('=')?;
        let placeholders = Placeholders {
            args: args.iter().map(|a| a.arg.clone()).collect(),
            derivs: args.iter().map(|a| a.deriv.clone()).collect(),
        };
        let next = self.next_expr(sig, &placeholders)?;
        self.expect_punct(';')?;
        Ok(Rule {
            head,
            args,
            out,
            binder,
            next,
        })
    }

    fn next_expr(&mut self, sig: &Signature, ph: &Placeholders) -> Result<NextExpr> {
        if self.is_kw("case") {
            self.bump();
            let token = self.ident()?;
            self.expect_punct('{')?;
            let (mut zero, mut one) = (None, None);
            while !self.is_punct('}') {
                let sp = self.span();
                let b = self.number()?;
                self.expect_tok(Tok::FatArrow)?;
                let body = self.next_expr(sig, ph)?;
                let slot = match b {
                    0 => &mut zero,
                    1 => &mut one,
                    _ => return Err(diag(SyntaxKind::Parse, sp, "case branches are 0 and 1")),
                };
                if slot.replace(body).is_some() {
                    return Err(diag(SyntaxKind::Parse, sp, "branch given twice"));
                }
                if !self.eat_punct(';') {
                    break;
                }
            }
            let sp = self.span();
            self.expect_punct('}')?;
            match (zero, one) {
                (Some(zero), Some(one)) => Ok(NextExpr::Case {
                    token,
                    zero: Box::new(zero),
                    one: Box::new(one),
                }),
                _ => Err(diag(SyntaxKind::Parse, sp, "case needs both a 0 and a 1 branch")),
            }
        } else {
            let raw = self.raw_term(0)?;
            Ok(NextExpr::Term(self.resolve_pattern(sig, ph, &raw)?))
        }
    }

    fn system_block(&mut self) -> Result<()> {
        let sp = self.section("system")?;
        let sig = self.need_signature(sp)?.clone();
        let alphabet = self
            .alphabet
            .clone()
            .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "declare the alphabet before the system"))?;
        let kind = self
            .outputs
            .ok_or_else(|| diag(SyntaxKind::MissingSection, sp, "declare the outputs before the system"))?;
        let algebra = OutputAlgebra::new(kind);
        self.expect_punct('{')?;
        let mut phi = Vec::new();
        while !self.is_punct('}') {
            let var_span = self.span();
            let x = self.ident()?;
            if sig.op(&x).is_some() || KEYWORDS.contains(&x.as_str()) {
                return Err(diag(SyntaxKind::Parse, var_span, format!("`{x}` cannot name a variable")));
            }
            self.expect_punct(':')?;
            self.expect_kw("out")?;
            self.expect_punct('=')?;
            let out_span = self.span();
            let e = self.out_expr()?;
            let output = algebra
                .eval(&e, &|_: &Sym| None)
                .map_err(|err| locate(out_span, err))?;
            self.expect_punct(';')?;
            let mut next = BTreeMap::new();
            while self.is_kw("next") {
                let sp = self.span();
                self.bump();
                let letters: Vec<Sym> = if self.eat_punct('(') {
                    let a = self.letter()?;
                    self.expect_punct(')')?;
                    if !alphabet.contains(&a) {
                        return Err(diag(SyntaxKind::UnknownSymbol, sp, format!("`{a}` is not a letter")));
                    }
                    vec![a]
                } else {
                    alphabet.letters().to_vec()
                };
                self.expect_punct('=')?;
                let raw = self.raw_term(0)?;
                self.expect_punct(';')?;
                let t = self.resolve_term(&raw)?;
                for a in letters {
                    if next.insert(a.clone(), t.clone()).is_some() {
                        return Err(diag(SyntaxKind::Parse, sp, format!("successor at `{a}` given twice")));
                    }
                }
            }
            phi.push((x, Step::new(output, next)));
        }
        self.end_block()?;
        self.system = Some((phi, sp));
        Ok(())
    }

    fn grammar_block(&mut self) -> Result<()> {
        let sp = self.section("grammar")?;
        self.expect_punct('{')?;
        let mut g = GrammarDraft {
            span: sp,
            nonterminals: Vec::new(),
            empty: BTreeMap::new(),
            prods: Vec::new(),
            start: None,
        };
        let note = |g: &mut GrammarDraft, x: &Sym| {
            if !g.nonterminals.contains(x) {
                g.nonterminals.push(x.clone());
            }
        };
        while !self.is_punct('}') {
            if self.is_kw("start") {
                self.bump();
                g.start = Some(self.raw_term(0)?);
                self.expect_punct(';')?;
                continue;
            }
            let x = self.ident()?;
            note(&mut g, &x);
            if self.eat_punct(':') {
                self.expect_kw("empty")?;
                self.expect_punct('=')?;
                let sp = self.span();
                let b = self.number()?;
                if b > 1 {
                    return Err(diag(SyntaxKind::Parse, sp, "empty is 0 or 1"));
                }
                g.empty.insert(x, b == 1);
            } else {
                self.expect_punct('-')?;
                let a = self.letter()?;
                self.expect_tok(Tok::Arrow)?;
                let mut w = Vec::new();
                if self.is_kw("eps") {
                    self.bump();
                } else {
                    while !self.is_punct(';') {
                        let y = self.ident()?;
                        note(&mut g, &y);
                        w.push(y);
                    }
                }
                g.prods.push((x, a, w));
            }
            self.expect_punct(';')?;
        }
        self.end_block()?;
        self.grammar = Some(g);
        Ok(())
    }

    fn finish_grammar(&mut self, mut g: GrammarDraft) -> Result<GnfGrammar> {
        for x in &g.nonterminals {
            g.empty.entry(x.clone()).or_insert(false);
        }
        let alphabet = self
            .alphabet
            .clone()
            .ok_or_else(|| diag(SyntaxKind::MissingSection, g.span, "a grammar needs an alphabet"))?;
        if self.signature.is_none() {
            self.signature = Some(crate::cfg::standard_law(&alphabet).0.signature().clone());
        }
        let start = match &g.start {
            Some(raw) => self.resolve_term(raw)?,
            None => Term::Var(
                g.nonterminals
                    .first()
                    .cloned()
                    .ok_or_else(|| diag(SyntaxKind::Invalid, g.span, "empty grammar"))?,
            ),
        };
        GnfGrammar::new(g.nonterminals, alphabet, g.empty, g.prods, start).map_err(|e| locate(g.span, e))
    }

    // ---- terms -------------------------------------------------------

    fn infix_prec(&self) -> Option<(Sym, u8)> {
        let sig = self.signature.as_ref()?;
        let name = match self.peek() {
            Tok::Punct(c) => c.to_string(),
            Tok::Ident(s) => s.clone(),
            _ => return None,
        };
        sig.op(&name).and_then(|o| o.infix.map(|p| (o.symbol.clone(), p)))
    }

    fn raw_term(&mut self, min: u8) -> Result<Raw> {
        let mut lhs = self.raw_primary()?;
        while let Some((op, prec)) = self.infix_prec() {
            if prec < min {
                break;
            }
            let sp = self.span();
            self.bump();
            let rhs = self.raw_term(prec)?;
            lhs = Raw::Infix(op, Box::new(lhs), Box::new(rhs), sp);
        }
        Ok(lhs)
    }

    fn raw_primary(&mut self) -> Result<Raw> {
        let sp = self.span();
        if self.eat_punct('(') {
            let t = self.raw_term(0)?;
            self.expect_punct(')')?;
            return Ok(t);
        }
        if self.eat_punct('[') {
            let e = self.out_expr()?;
            self.expect_punct(']')?;
            return Ok(Raw::Bracket(Sym::new(DEFAULT_FAMILY), e, sp));
        }
        let name = match self.peek().clone() {
            Tok::Ident(s) | Tok::Num(s) => {
                self.bump();
                Sym::new(s)
            }
            t => return Err(self.err(format!("expected a term, found {}", Self::describe(&t)))),
        };
        if self.is_punct('[') && self.adjacent() {
            self.bump();
            let e = self.out_expr()?;
            self.expect_punct(']')?;
            return Ok(Raw::Bracket(name, e, sp));
        }
        if self.is_punct('(') && self.adjacent() {
            self.bump();
            let mut args = Vec::new();
            while !self.is_punct(')') {
                args.push(self.raw_term(0)?);
                if !self.eat_punct(',') {
                    break;
                }
            }
            self.expect_punct(')')?;
            return Ok(Raw::Call(name, args, sp));
        }
        Ok(Raw::Name(name, sp))
    }

    fn resolve_term(&self, raw: &Raw) -> Result<Term> {
        let sig = self
            .signature
            .as_ref()
            .ok_or_else(|| diag(SyntaxKind::MissingSection, raw_span(raw), "declare the signature first"))?;
        resolve(sig, raw, &mut |name, sp| match sig.arity(name) {
            Some(0) => Ok(Term::constant(name.clone())),
            Some(n) => Err(diag(
                SyntaxKind::ArityMismatch,
                sp,
                format!("`{name}` has arity {n} but is applied to 0 arguments"),
            )),
            None if name.chars().all(|c| c.is_ascii_digit()) => {
                Err(diag(SyntaxKind::UnknownSymbol, sp, format!("`{name}` is not declared")))
            }
            None => Ok(Term::Var(name.clone())),
        })
    }

    fn resolve_pattern(&self, sig: &Signature, ph: &Placeholders, raw: &Raw) -> Result<Pattern> {
        Ok(match raw {
            Raw::Name(n, sp) => {
                if ph.args.contains(n) {
                    Pattern::Arg(n.clone())
                } else {
                    match sig.arity(n) {
                        Some(0) => Pattern::App(n.clone(), Vec::new()),
                        Some(k) => {
                            return Err(diag(
                                SyntaxKind::ArityMismatch,
                                *sp,
                                format!("`{n}` has arity {k} but is applied to 0 arguments"),
                            ))
                        }
                        None => return Err(diag(SyntaxKind::UnknownSymbol, *sp, format!("unknown placeholder `{n}`"))),
                    }
                }
            }
            Raw::Call(n, args, sp) if ph.derivs.contains(n) => match args.as_slice() {
                [Raw::Name(l, _)] => Pattern::Deriv(n.clone(), l.clone()),
                _ => return Err(diag(SyntaxKind::Parse, *sp, format!("`{n}` takes one letter"))),
            },
            Raw::Call(n, args, sp) => {
                check_arity(sig, n, args.len(), *sp)?;
                Pattern::App(
                    n.clone(),
                    args.iter().map(|a| self.resolve_pattern(sig, ph, a)).collect::<Result<_>>()?,
                )
            }
            Raw::Infix(op, l, r, _) => Pattern::App(
                op.clone(),
                vec![self.resolve_pattern(sig, ph, l)?, self.resolve_pattern(sig, ph, r)?],
            ),
            Raw::Bracket(fam, e, sp) => {
                if sig.family(fam).is_none() {
                    return Err(diag(SyntaxKind::UnknownSymbol, *sp, format!("unknown family `{fam}`")));
                }
                Pattern::Indexed(fam.clone(), e.clone())
            }
        })
    }

    // ---- output expressions -----------------------------------------

    fn out_expr(&mut self) -> Result<OutExpr> {
        let mut lhs = self.out_product()?;
        loop {
            if self.eat_punct('+') {
                lhs = OutExpr::Add(Box::new(lhs), Box::new(self.out_product()?));
            } else if self.eat_punct('-') {
                lhs = OutExpr::Sub(Box::new(lhs), Box::new(self.out_product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn out_product(&mut self) -> Result<OutExpr> {
        let mut lhs = self.out_unary()?;
        while self.eat_punct('*') {
            lhs = OutExpr::Mul(Box::new(lhs), Box::new(self.out_unary()?));
        }
        Ok(lhs)
    }

    fn out_unary(&mut self) -> Result<OutExpr> {
        if self.eat_punct('-') {
            return Ok(OutExpr::Neg(Box::new(self.out_unary()?)));
        }
        let base = self.out_atom()?;
        if self.eat_punct('^') {
            let e = self.number()?;
            return Ok(OutExpr::Pow(Box::new(base), e.min(u32::MAX as u64) as u32));
        }
        Ok(base)
    }

    fn out_atom(&mut self) -> Result<OutExpr> {
        match self.peek().clone() {
            Tok::Num(_) => {
                let n = self.number()?;
                let mut q = Rational::from_integer(n.into());
                if self.is_punct('/') && matches!(self.peek_at(1), Tok::Num(_)) {
                    self.bump();
                    let d = self.number()?;
                    if d == 0 {
                        return Err(self.err("zero denominator"));
                    }
                    q /= Rational::from_integer(d.into());
                }
                Ok(OutExpr::Num(q))
            }
            Tok::Ident(s) => {
                self.bump();
                if self.is_punct('(') && self.adjacent() {
                    self.bump();
                    let mut args = Vec::new();
                    while !self.is_punct(')') {
                        args.push(self.out_expr()?);
                        if !self.eat_punct(',') {
                            break;
                        }
                    }
                    self.expect_punct(')')?;
                    Ok(OutExpr::Call(Sym::new(s), args))
                } else {
                    Ok(OutExpr::Token(Sym::new(s)))
                }
            }
            Tok::Punct('(') => {
                self.bump();
                let e = self.out_expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            t => Err(self.err(format!("expected an output expression, found {}", Self::describe(&t)))),
        }
    }
}

struct Placeholders {
    args: BTreeSet<Sym>,
    derivs: BTreeSet<Sym>,
}

fn raw_span(r: &Raw) -> Span {
    match r {
        Raw::Name(_, s) | Raw::Call(_, _, s) | Raw::Bracket(_, _, s) | Raw::Infix(_, _, _, s) => *s,
    }
}

fn check_arity(sig: &Signature, f: &Sym, n: usize, sp: Span) -> Result<()> {
    match sig.arity(f) {
        Some(k) if k == n => Ok(()),
        Some(k) => Err(diag(
            SyntaxKind::ArityMismatch,
            sp,
            format!("`{f}` has arity {k} but is applied to {n} arguments"),
        )),
        None => Err(diag(SyntaxKind::UnknownSymbol, sp, format!("`{f}` is not declared"))),
    }
}

/// Scalar value of an index expression, every token kept symbolic.
fn symbolic_scalar(e: &OutExpr, sp: Span) -> Result<Scalar> {
    let tokens = e.tokens();
    let out = OutputAlgebra::new(OutputKind::Rational)
        .eval(e, &|t: &Sym| tokens.contains(t).then(|| Output::Rat(Scalar::token(t.clone()))))
        .map_err(|err| locate(sp, err))?;
    match out {
        Output::Rat(q) => Ok(q),
        Output::Bool(_) => unreachable!(),
    }
}

fn resolve(sig: &Signature, raw: &Raw, name: &mut impl FnMut(&Sym, Span) -> Result<Term>) -> Result<Term> {
    match raw {
        Raw::Name(n, sp) => name(n, *sp),
        Raw::Call(f, args, sp) => {
            check_arity(sig, f, args.len(), *sp)?;
            Ok(Term::App(
                f.clone(),
                args.iter().map(|a| resolve(sig, a, name)).collect::<Result<_>>()?,
            ))
        }
        Raw::Infix(op, l, r, _) => Ok(Term::bin(op.clone(), resolve(sig, l, name)?, resolve(sig, r, name)?)),
        Raw::Bracket(fam, e, sp) => {
            if sig.family(fam).is_none() {
                return Err(diag(SyntaxKind::UnknownSymbol, *sp, format!("unknown family `{fam}`")));
            }
            Ok(Term::Indexed(fam.clone(), symbolic_scalar(e, *sp)?))
        }
    }
}

// ---- printing --------------------------------------------------------

fn print_symbol(s: &Sym) -> String {
    s.to_string()
}

fn show_pattern(sig: &Signature, p: &Pattern) -> String {
    fn go(sig: &Signature, p: &Pattern, out: &mut String) {
        match p {
            Pattern::Arg(x) => out.push_str(x),
            Pattern::Deriv(d, l) => {
                let _ = write!(out, "{d}({l})");
            }
            Pattern::Indexed(fam, e) => {
                if &**fam != DEFAULT_FAMILY {
                    out.push_str(fam);
                }
                let _ = write!(out, "[{e}]");
            }
            Pattern::App(f, args) if args.is_empty() => out.push_str(f),
            Pattern::App(f, args) => match sig.op(f).and_then(|o| o.infix) {
                Some(prec) if args.len() == 2 => {
                    operand(sig, &args[0], prec, false, out);
                    let _ = write!(out, " {f} ");
                    operand(sig, &args[1], prec, true, out);
                }
                _ => {
                    let _ = write!(out, "{f}(");
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        go(sig, a, out);
                    }
                    out.push(')');
                }
            },
        }
    }
    fn operand(sig: &Signature, p: &Pattern, outer: u8, right: bool, out: &mut String) {
        let inner = match p {
            Pattern::App(g, args) if args.len() == 2 => sig.op(g).and_then(|o| o.infix),
            _ => None,
        };
        if matches!(inner, Some(q) if q < outer || (!right && q == outer)) {
            out.push('(');
            go(sig, p, out);
            out.push(')');
        } else {
            go(sig, p, out);
        }
    }
    let mut s = String::new();
    go(sig, p, &mut s);
    s
}

fn show_next(sig: &Signature, e: &NextExpr) -> String {
    match e {
        NextExpr::Term(p) => show_pattern(sig, p),
        NextExpr::Case { token, zero, one } => format!(
            "case {token} {{ 0 => {} ; 1 => {} }}",
            show_next(sig, zero),
            show_next(sig, one)
        ),
    }
}

/// Renders a rule in the file format.
pub fn show_rule(sig: &Signature, r: &Rule) -> String {
    let head = match &r.head {
        RuleHead::Op(s) => print_symbol(s),
        RuleHead::Family { family, index } if &**family == DEFAULT_FAMILY => format!("[{index}]"),
        RuleHead::Family { family, index } => format!("{family}[{index}]"),
    };
    let args = if r.args.is_empty() {
        String::new()
    } else {
        let bs: Vec<String> = r
            .args
            .iter()
            .map(|b| format!("{}: o={}, d={}", b.arg, b.out, b.deriv))
            .collect();
        format!("({})", bs.join("; "))
    };
    format!(
        "rule {head}{args} => out = {}; next({}) = {};",
        r.out,
        r.binder,
        show_next(sig, &r.next)
    )
}

fn print(wb: &Workbench) -> String {
    let mut s = String::new();
    if let Some(sig) = &wb.signature {
        s.push_str("signature {\n");
        for op in sig.ops() {
            let _ = write!(s, "  op {}/{}", print_symbol(&op.symbol), op.arity);
            if let Some(p) = op.infix {
                let _ = write!(s, " infix {p}");
            }
            s.push_str(";\n");
        }
        for fam in sig.families() {
            let samples: Vec<String> = fam.samples.iter().map(fmt_rational).collect();
            let _ = writeln!(s, "  family {} {{{}}};", fam.name, samples.join(", "));
        }
        s.push_str("}\n");
    }
    if let Some(k) = wb.outputs {
        let _ = writeln!(
            s,
            "outputs {};",
            match k {
                OutputKind::Bool => "bool",
                OutputKind::Rational => "rational",
            }
        );
    }
    if let Some(a) = &wb.alphabet {
        let letters: Vec<&str> = a.letters().iter().map(Sym::as_str).collect();
        let _ = writeln!(s, "alphabet {{{}}};", letters.join(", "));
    }
    if let Some(th) = &wb.theory {
        let sig = th.signature();
        match th.kind() {
            TheoryKind::CommutativeSemiring(_) => s.push_str("theory commutative-semiring;\n"),
            TheoryKind::IdempotentSemiring(_) => s.push_str("theory idempotent-semiring;\n"),
            TheoryKind::Generic => {
                s.push_str("theory generic {\n");
                for e in th.schemes() {
                    let _ = writeln!(s, "  eq {}: {} = {};", e.name, sig.show(&e.lhs), sig.show(&e.rhs));
                }
                if let Some(m) = th.model() {
                    let _ = writeln!(s, "  model {} {{", m.carrier());
                    for (f, table) in m.tables() {
                        for (args, v) in table {
                            if args.is_empty() {
                                let _ = writeln!(s, "    {f} = {v};");
                            } else {
                                let a: Vec<String> = args.iter().map(ToString::to_string).collect();
                                let _ = writeln!(s, "    {f}({}) = {v};", a.join(", "));
                            }
                        }
                    }
                    s.push_str("  }\n");
                }
                s.push_str("}\n");
            }
        }
    }
    if let Some(law) = &wb.law {
        let _ = writeln!(s, "rules {} {{", law.spec().format().keyword());
        for r in law.spec().rules() {
            let _ = writeln!(s, "  {}", show_rule(law.signature(), r));
        }
        s.push_str("}\n");
    }
    if let Some(sys) = &wb.system {
        let sig = sys.law().signature();
        s.push_str("system {\n");
        for x in sys.variables() {
            let step = sys.phi(x).expect("variable of the system");
            let _ = write!(s, "  {x}: out = {};", show_output(&step.output));
            for (a, t) in &step.next {
                let _ = write!(s, " next({a}) = {};", sig.show(t));
            }
            s.push('\n');
        }
        s.push_str("}\n");
    }
    if let Some(g) = &wb.grammar {
        s.push_str("grammar {\n");
        for x in g.nonterminals() {
            let _ = writeln!(s, "  {x}: empty={};", u8::from(g.nullable(x)));
            for a in g.alphabet().letters() {
                for w in g.productions(x, a) {
                    if w.is_empty() {
                        let _ = writeln!(s, "  {x} -{a}-> eps;");
                    } else {
                        let ys: Vec<&str> = w.iter().map(Sym::as_str).collect();
                        let _ = writeln!(s, "  {x} -{a}-> {};", ys.join(" "));
                    }
                }
            }
        }
        let sig = wb.signature.clone().unwrap_or_default();
        let _ = writeln!(s, "  start {};", sig.show(g.start()));
        s.push_str("}\n");
    }
    s
}

fn show_output(o: &Output) -> String {
    match o {
        Output::Bool(b) => match b.as_constant() {
            Some(v) => u8::from(v).to_string(),
            None => b.to_string(),
        },
        Output::Rat(q) => q.to_string(),
    }
}
