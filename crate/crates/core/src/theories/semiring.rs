use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed};

use super::{EquationScheme, SemiringRoles};
use crate::error::{Error, Result};
use crate::poly::{Poly, Scalar};
use crate::sym::Sym;
use crate::terms::Term;

/// Indeterminates of the builtin normal forms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// A nullary symbol with no semiring role, e.g. the stream `X`.
    Const(Sym),
    Var(Sym),
    /// A symbolic scalar inside an indexed constant.
    Param(Sym),
}

impl Atom {
    fn to_term(&self) -> Term {
        match self {
            Atom::Const(c) => Term::constant(c.clone()),
            Atom::Var(x) => Term::Var(x.clone()),
            Atom::Param(p) => panic!("scalar token `{p}` outside a coefficient"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Const(s) | Atom::Var(s) | Atom::Param(s) => write!(f, "{s}"),
        }
    }
}

/// A word over atoms, ordered by length and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Atom>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Word(v)
    }

    pub fn vars(letters: &[&str]) -> Self {
        Word(letters.iter().map(|l| Atom::Var(Sym::new(*l))).collect())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let short = self.0.iter().all(|a| a.to_string().chars().count() == 1);
        let sep = if short { "" } else { " " };
        let parts: Vec<String> = self.0.iter().map(Atom::to_string).collect();
        f.write_str(&parts.join(sep))
    }
}

fn not_in_theory(f: &Sym) -> Error {
    Error::NotInTheorySignature(f.clone())
}

pub(super) fn to_poly(r: &SemiringRoles, t: &Term) -> Result<Poly<Atom>> {
    Ok(match t {
        Term::Var(x) => Poly::atom(Atom::Var(x.clone())),
        Term::App(f, args) if args.len() == 2 && *f == r.plus => {
            &to_poly(r, &args[0])? + &to_poly(r, &args[1])?
        }
        Term::App(f, args) if args.len() == 2 && *f == r.times => {
            &to_poly(r, &args[0])? * &to_poly(r, &args[1])?
        }
        Term::App(f, args) if args.is_empty() => {
            if Some(f) == r.zero.as_ref() {
                Poly::zero()
            } else if Some(f) == r.one.as_ref() {
                Poly::one()
            } else {
                Poly::atom(Atom::Const(f.clone()))
            }
        }
        Term::App(f, _) => return Err(not_in_theory(f)),
        Term::Indexed(fam, q) if Some(fam) == r.scalar.as_ref() => {
            q.map_atoms(|s| Atom::Param(s.clone()))
        }
        Term::Indexed(fam, _) => return Err(not_in_theory(fam)),
    })
}

fn product(r: &SemiringRoles, mut factors: Vec<Term>) -> Term {
    let last = factors.pop().expect("non-empty product");
    factors
        .into_iter()
        .rev()
        .fold(last, |acc, f| Term::bin(r.times.clone(), f, acc))
}

fn sum(r: &SemiringRoles, mut summands: Vec<Term>) -> Term {
    match summands.pop() {
        None => r.zero_term(),
        Some(last) => summands
            .into_iter()
            .rev()
            .fold(last, |acc, s| Term::bin(r.plus.clone(), s, acc)),
    }
}

/// Sum of monomials with right-nested sums and products. With `reversed`, the
/// summand and factor orders are flipped (another member of the same class).
pub(super) fn poly_term(r: &SemiringRoles, p: &Poly<Atom>, reversed: bool) -> Term {
    let mut groups: std::collections::BTreeMap<_, Scalar> = std::collections::BTreeMap::new();
    for (m, c) in p.terms() {
        let (params, rest) = m.partition(|a| matches!(a, Atom::Param(_)));
        let coeff = Poly::from_terms([(params, c.clone())]).map_atoms(|a| match a {
            Atom::Param(s) => s.clone(),
            _ => unreachable!(),
        });
        let slot = groups.entry(rest).or_insert_with(Scalar::zero);
        *slot = &*slot + &coeff;
    }
    let mut summands = Vec::new();
    for (mono, coeff) in groups {
        let mut factors: Vec<Term> = mono.atoms().map(Atom::to_term).collect();
        if reversed {
            factors.reverse();
        }
        match &r.scalar {
            Some(fam) => {
                if !(coeff == Scalar::one() && !factors.is_empty()) {
                    factors.insert(0, Term::Indexed(fam.clone(), coeff));
                }
                summands.push(product(r, factors));
            }
            None => {
                let n = coeff
                    .as_constant()
                    .filter(|q| q.is_integer() && q.is_positive())
                    .expect("coefficients without a scalar family are positive integers");
                if factors.is_empty() {
                    factors.push(r.one_term());
                }
                let mut k = num_bigint::BigInt::one();
                while k <= *n.numer() {
                    summands.push(product(r, factors.clone()));
                    k += 1;
                }
            }
        }
    }
    if reversed {
        summands.reverse();
    }
    sum(r, summands)
}

pub(super) fn to_words(r: &SemiringRoles, t: &Term) -> Result<BTreeSet<Word>> {
    Ok(match t {
        Term::Var(x) => [Word(vec![Atom::Var(x.clone())])].into(),
        Term::App(f, args) if args.len() == 2 && *f == r.plus => {
            let mut a = to_words(r, &args[0])?;
            a.extend(to_words(r, &args[1])?);
            a
        }
        Term::App(f, args) if args.len() == 2 && *f == r.times => {
            let a = to_words(r, &args[0])?;
            let b = to_words(r, &args[1])?;
            a.iter().flat_map(|u| b.iter().map(move |v| u.concat(v))).collect()
        }
        Term::App(f, args) if args.is_empty() => {
            if Some(f) == r.zero.as_ref() {
                BTreeSet::new()
            } else if Some(f) == r.one.as_ref() {
                [Word::empty()].into()
            } else {
                [Word(vec![Atom::Const(f.clone())])].into()
            }
        }
        Term::App(f, _) => return Err(not_in_theory(f)),
        Term::Indexed(fam, _) => return Err(not_in_theory(fam)),
    })
}

pub(super) fn words_term(r: &SemiringRoles, ws: &BTreeSet<Word>, reversed: bool) -> Term {
    let mut summands: Vec<Term> = ws
        .iter()
        .map(|w| {
            if w.0.is_empty() {
                r.one_term()
            } else {
                product(r, w.0.iter().map(Atom::to_term).collect())
            }
        })
        .collect();
    if reversed {
        summands.reverse();
    }
    sum(r, summands)
}

fn v(name: &str) -> Term {
    Term::var(name)
}

pub(super) fn commutative_schemes(r: &SemiringRoles) -> Vec<EquationScheme> {
    let plus = |a, b| Term::bin(r.plus.clone(), a, b);
    let times = |a, b| Term::bin(r.times.clone(), a, b);
    let zero = r.zero_term();
    let one = r.one_term();
    let mut out = vec![
        EquationScheme::from_sides("plus-assoc", plus(plus(v("v"), v("u")), v("w")), plus(v("v"), plus(v("u"), v("w")))),
        EquationScheme::from_sides("plus-zero", plus(zero.clone(), v("v")), v("v")),
        EquationScheme::from_sides("plus-comm", plus(v("v"), v("u")), plus(v("u"), v("v"))),
        EquationScheme::from_sides("times-assoc", times(times(v("v"), v("u")), v("w")), times(v("v"), times(v("u"), v("w")))),
        EquationScheme::from_sides("times-one", times(one, v("v")), v("v")),
        EquationScheme::from_sides("times-comm", times(v("v"), v("u")), times(v("u"), v("v"))),
        EquationScheme::from_sides(
            "distrib",
            times(v("v"), plus(v("u"), v("w"))),
            plus(times(v("v"), v("u")), times(v("v"), v("w"))),
        ),
        EquationScheme::from_sides("times-zero", times(zero.clone(), v("v")), zero),
    ];
    if let Some(fam) = &r.scalar {
        let c = |s: Scalar| Term::Indexed(fam.clone(), s);
        let a = Scalar::token("a");
        let b = Scalar::token("b");
        out.push(EquationScheme::from_sides(
            "scalar-plus",
            c(&a + &b),
            plus(c(a.clone()), c(b.clone())),
        ));
        out.push(EquationScheme::from_sides("scalar-times", c(&a * &b), times(c(a), c(b))));
    }
    out
}

pub(super) fn idempotent_schemes(r: &SemiringRoles) -> Vec<EquationScheme> {
    let plus = |a, b| Term::bin(r.plus.clone(), a, b);
    let times = |a, b| Term::bin(r.times.clone(), a, b);
    let zero = r.zero_term();
    let one = r.one_term();
    vec![
        EquationScheme::from_sides("plus-assoc", plus(plus(v("v"), v("u")), v("w")), plus(v("v"), plus(v("u"), v("w")))),
        EquationScheme::from_sides("plus-comm", plus(v("v"), v("u")), plus(v("u"), v("v"))),
        EquationScheme::from_sides("plus-zero", plus(v("v"), zero.clone()), v("v")),
        EquationScheme::from_sides("plus-idem", plus(v("v"), v("v")), v("v")),
        EquationScheme::from_sides("times-assoc", times(times(v("v"), v("u")), v("w")), times(v("v"), times(v("u"), v("w")))),
        EquationScheme::from_sides("one-times", times(one.clone(), v("v")), v("v")),
        EquationScheme::from_sides("times-one", times(v("v"), one), v("v")),
        EquationScheme::from_sides(
            "distrib-left",
            times(v("u"), plus(v("v"), v("w"))),
            plus(times(v("u"), v("v")), times(v("u"), v("w"))),
        ),
        EquationScheme::from_sides(
            "distrib-right",
            times(plus(v("v"), v("w")), v("u")),
            plus(times(v("v"), v("u")), times(v("w"), v("u"))),
        ),
        EquationScheme::from_sides("zero-times", times(zero.clone(), v("v")), zero.clone()),
        EquationScheme::from_sides("times-zero", times(v("v"), zero.clone()), zero),
    ]
}
