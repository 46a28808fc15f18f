//! Free-monad terms over a first-order signature.
//!
//! `Term::Var` is the unit of the free monad and [`substitute`] its Kleisli
//! extension; flattening a term of terms is substitution with the inner terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::poly::{Rational, Scalar};
use crate::sym::Sym;

/// Indexed-constant family written `[q]` without a family prefix.
pub const DEFAULT_FAMILY: &str = "scalar";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDecl {
    pub symbol: Sym,
    pub arity: usize,
    /// Binding strength when written infix (binary operations only).
    pub infix: Option<u8>,
}

/// A family of constants `f[q]` indexed by rationals (or symbolic scalars).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyDecl {
    pub name: Sym,
    /// Finite index set used when enumerating terms.
    pub samples: Vec<Rational>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<OpDecl>,
    families: Vec<FamilyDecl>,
}

impl Signature {
    pub fn new(ops: Vec<OpDecl>, families: Vec<FamilyDecl>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in ops.iter().map(|o| &o.symbol).chain(families.iter().map(|f| &f.name)) {
            if !seen.insert(name.clone()) {
                return Err(Error::SignatureMismatch(format!("symbol `{name}` declared twice")));
            }
        }
        for op in &ops {
            if op.infix.is_some() && op.arity != 2 {
                return Err(Error::SignatureMismatch(format!(
                    "infix symbol `{}` must be binary",
                    op.symbol
                )));
            }
        }
        Ok(Signature { ops, families })
    }

    /// Shorthand for tests and built-in signatures: `(symbol, arity)` pairs, binary
    /// symbols made of punctuation become infix with increasing precedence.
    pub fn simple(ops: &[(&str, usize)], families: &[(&str, &[i64])]) -> Self {
        let mut prec = 0;
        let ops = ops
            .iter()
            .map(|&(s, arity)| {
                let infix = (arity == 2 && !s.chars().any(char::is_alphanumeric)).then(|| {
                    prec += 1;
                    prec
                });
                OpDecl {
                    symbol: Sym::new(s),
                    arity,
                    infix,
                }
            })
            .collect();
        let families = families
            .iter()
            .map(|&(name, samples)| FamilyDecl {
                name: Sym::new(name),
                samples: samples.iter().map(|&n| crate::poly::rat(n)).collect(),
            })
            .collect();
        Signature::new(ops, families).expect("well-formed built-in signature")
    }

    pub fn ops(&self) -> &[OpDecl] {
        &self.ops
    }

    pub fn families(&self) -> &[FamilyDecl] {
        &self.families
    }

    pub fn op(&self, symbol: &str) -> Option<&OpDecl> {
        self.ops.iter().find(|o| &*o.symbol == symbol)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyDecl> {
        self.families.iter().find(|f| &*f.name == name)
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.op(symbol).map(|o| o.arity)
    }

    /// Checks arities and that every symbol is declared.
    pub fn check(&self, t: &Term) -> Result<()> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let arity = self
                    .arity(f)
                    .ok_or_else(|| Error::SignatureMismatch(format!("undeclared symbol `{f}`")))?;
                if arity != args.len() {
                    return Err(Error::SignatureMismatch(format!(
                        "`{f}` has arity {arity} but is applied to {} arguments",
                        args.len()
                    )));
                }
                args.iter().try_for_each(|a| self.check(a))
            }
            Term::Indexed(fam, _) => match self.family(fam) {
                Some(_) => Ok(()),
                None => Err(Error::SignatureMismatch(format!("undeclared family `{fam}`"))),
            },
        }
    }

    /// Renders a term using the declared infix notation.
    pub fn show<'a>(&'a self, t: &'a Term) -> Shown<'a> {
        Shown { sig: Some(self), term: t }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Sym),
    App(Sym, Vec<Term>),
    Indexed(Sym, Scalar),
}

impl Term {
    pub fn var(name: impl Into<Sym>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<Sym>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(name: impl Into<Sym>, args: Vec<Term>) -> Self {
        Term::App(name.into(), args)
    }

    pub fn bin(name: impl Into<Sym>, l: Term, r: Term) -> Self {
        Term::App(name.into(), vec![l, r])
    }

    /// `[q]` in the default family.
    pub fn scalar(q: Scalar) -> Self {
        Term::Indexed(Sym::new(DEFAULT_FAMILY), q)
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Indexed(..) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Sym>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Term::Indexed(..) => {}
        }
    }

    /// Renames variables; total, never fails.
    pub fn rename(&self, f: &impl Fn(&Sym) -> Sym) -> Term {
        match self {
            Term::Var(x) => Term::Var(f(x)),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| a.rename(f)).collect()),
            Term::Indexed(..) => self.clone(),
        }
    }

    /// Substitutes only the variables present in `s`, leaving the rest in place.
    pub fn replace_vars(&self, s: &BTreeMap<Sym, Term>) -> Term {
        match self {
            Term::Var(x) => s.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::App(g, args) => {
                Term::App(g.clone(), args.iter().map(|a| a.replace_vars(s)).collect())
            }
            Term::Indexed(..) => self.clone(),
        }
    }
}

/// Replaces every variable leaf by its image under `s` (the monad multiplication
/// when `s` maps tokens to terms).
pub fn substitute(t: &Term, s: &BTreeMap<Sym, Term>) -> Result<Term> {
    substitute_with(t, &mut |x| s.get(x).cloned())
}

pub fn substitute_with(t: &Term, s: &mut impl FnMut(&Sym) -> Option<Term>) -> Result<Term> {
    match t {
        Term::Var(x) => s(x).ok_or_else(|| Error::UnboundVariable(x.clone())),
        Term::App(f, args) => Ok(Term::App(
            f.clone(),
            args.iter()
                .map(|a| substitute_with(a, s))
                .collect::<Result<_>>()?,
        )),
        Term::Indexed(..) => Ok(t.clone()),
    }
}

/// Substitution that additionally checks the input and every image against `sig`.
pub fn substitute_checked(sig: &Signature, t: &Term, s: &BTreeMap<Sym, Term>) -> Result<Term> {
    sig.check(t)?;
    for image in s.values() {
        sig.check(image)?;
    }
    substitute(t, s)
}

/// All terms with at most `max_size` nodes over `vars`, each once, ordered by
/// size and then by declaration order of the symbols.
pub fn enumerate_terms(sig: &Signature, vars: &[Sym], max_size: usize) -> impl Iterator<Item = Term> {
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new()];
    for n in 1..=max_size {
        let mut level = Vec::new();
        if n == 1 {
            level.extend(vars.iter().cloned().map(Term::Var));
            for op in sig.ops.iter().filter(|o| o.arity == 0) {
                level.push(Term::App(op.symbol.clone(), Vec::new()));
            }
            for fam in &sig.families {
                for q in &fam.samples {
                    level.push(Term::Indexed(fam.name.clone(), Scalar::from_rational(q.clone())));
                }
            }
        } else {
            for op in sig.ops.iter().filter(|o| o.arity > 0) {
                for parts in compositions(n - 1, op.arity) {
                    let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
                    for &k in &parts {
                        let mut next = Vec::new();
                        for prefix in &acc {
                            for t in &by_size[k] {
                                let mut p = prefix.clone();
                                p.push(t.clone());
                                next.push(p);
                            }
                        }
                        acc = next;
                    }
                    level.extend(acc.into_iter().map(|args| Term::App(op.symbol.clone(), args)));
                }
            }
        }
        by_size.push(level);
    }
    by_size.into_iter().flatten()
}

/// Ordered ways of writing `total` as `parts` positive summands, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub struct Shown<'a> {
    sig: Option<&'a Signature>,
    term: &'a Term,
}

impl Shown<'_> {
    fn infix_of(&self, f: &str) -> Option<u8> {
        self.sig.and_then(|s| s.op(f)).and_then(|o| o.infix)
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
        match t {
            Term::Var(x) => write!(f, "{x}"),
            Term::Indexed(fam, q) => {
                if &**fam != DEFAULT_FAMILY {
                    write!(f, "{fam}")?;
                }
                write!(f, "[{q}]")
            }
            Term::App(g, args) if args.is_empty() => write!(f, "{g}"),
            Term::App(g, args) => match self.infix_of(g) {
                Some(prec) => {
                    self.operand(f, &args[0], prec, false)?;
                    write!(f, " {g} ")?;
                    self.operand(f, &args[1], prec, true)
                }
                None => {
                    write!(f, "{g}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        self.write(f, a)?;
                    }
                    f.write_str(")")
                }
            },
        }
    }

    fn operand(&self, f: &mut fmt::Formatter<'_>, t: &Term, outer: u8, right: bool) -> fmt::Result {
        let inner = match t {
            Term::App(g, args) if args.len() == 2 => self.infix_of(g),
            _ => None,
        };
        let parens = matches!(inner, Some(p) if p < outer || (!right && p == outer));
        if parens {
            f.write_str("(")?;
            self.write(f, t)?;
            f.write_str(")")
        } else {
            self.write(f, t)
        }
    }
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.term)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Shown { sig: None, term: self }.fmt(f)
    }
}
