//! Moore behaviour `B × S^A`: output values, one-step observations, and the
//! relation lifting used to compare two steps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{fmt_rational, Rational, Scalar};
use crate::sym::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputKind {
    Bool,
    Rational,
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputKind::Bool => "bool",
            OutputKind::Rational => "rational",
        })
    }
}

/// A monotone Boolean function in canonical form: the antichain of minimal
/// sets of tokens that make it true. `{}` is 0 and `{{}}` is 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoolNf(BTreeSet<BTreeSet<Sym>>);

impl BoolNf {
    pub fn constant(b: bool) -> Self {
        let mut s = BTreeSet::new();
        if b {
            s.insert(BTreeSet::new());
        }
        BoolNf(s)
    }

    pub fn token(t: impl Into<Sym>) -> Self {
        BoolNf([[t.into()].into()].into())
    }

    pub fn as_constant(&self) -> Option<bool> {
        if self.0.is_empty() {
            Some(false)
        } else if self.0.contains(&BTreeSet::new()) {
            Some(true)
        } else {
            None
        }
    }

    fn minimise(sets: BTreeSet<BTreeSet<Sym>>) -> Self {
        let keep = sets
            .iter()
            .filter(|s| !sets.iter().any(|t| t != *s && t.is_subset(s)))
            .cloned()
            .collect();
        BoolNf(keep)
    }

    pub fn join(&self, other: &Self) -> Self {
        Self::minimise(self.0.union(&other.0).cloned().collect())
    }

    pub fn meet(&self, other: &Self) -> Self {
        let mut out = BTreeSet::new();
        for a in &self.0 {
            for b in &other.0 {
                out.insert(a.union(b).cloned().collect());
            }
        }
        Self::minimise(out)
    }

    pub fn tokens(&self) -> BTreeSet<Sym> {
        self.0.iter().flatten().cloned().collect()
    }

    pub fn eval(&self, env: &impl Fn(&Sym) -> bool) -> bool {
        self.0.iter().any(|clause| clause.iter().all(env))
    }

    pub fn substitute(&self, f: &impl Fn(&Sym) -> BoolNf) -> BoolNf {
        let mut acc = BoolNf::constant(false);
        for clause in &self.0 {
            let mut c = BoolNf::constant(true);
            for t in clause {
                c = c.meet(&f(t));
            }
            acc = acc.join(&c);
        }
        acc
    }
}

impl fmt::Display for BoolNf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = self.as_constant() {
            return f.write_str(if b { "1" } else { "0" });
        }
        let clause = |c: &BTreeSet<Sym>| {
            if c.len() == 1 {
                c.iter().next().unwrap().to_string()
            } else {
                format!("min({})", c.iter().map(Sym::as_str).collect::<Vec<_>>().join(", "))
            }
        };
        if self.0.len() == 1 {
            f.write_str(&clause(self.0.iter().next().unwrap()))
        } else {
            write!(f, "max({})", self.0.iter().map(clause).collect::<Vec<_>>().join(", "))
        }
    }
}

/// An output value, possibly symbolic in output tokens.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Bool(BoolNf),
    Rat(Scalar),
}

impl Output {
    pub fn kind(&self) -> OutputKind {
        match self {
            Output::Bool(_) => OutputKind::Bool,
            Output::Rat(_) => OutputKind::Rational,
        }
    }

    pub fn bool(b: bool) -> Self {
        Output::Bool(BoolNf::constant(b))
    }

    pub fn rational(q: Rational) -> Self {
        Output::Rat(Scalar::from_rational(q))
    }

    pub fn token(kind: OutputKind, t: impl Into<Sym>) -> Self {
        match kind {
            OutputKind::Bool => Output::Bool(BoolNf::token(t)),
            OutputKind::Rational => Output::Rat(Scalar::token(t)),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Output::Bool(b) => b.as_constant(),
            Output::Rat(_) => None,
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Output::Rat(p) => p.as_constant(),
            Output::Bool(_) => None,
        }
    }

    pub fn is_concrete(&self) -> bool {
        match self {
            Output::Bool(b) => b.as_constant().is_some(),
            Output::Rat(p) => p.as_constant().is_some(),
        }
    }

    /// Replaces Boolean tokens by constants; tokens missing from `assign` stay symbolic.
    pub fn assign_bools(&self, assign: &BTreeMap<Sym, bool>) -> Output {
        match self {
            Output::Bool(b) => Output::Bool(b.substitute(&|t| match assign.get(t) {
                Some(&v) => BoolNf::constant(v),
                None => BoolNf::token(t.clone()),
            })),
            Output::Rat(_) => self.clone(),
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Bool(b) => b.fmt(f),
            Output::Rat(p) => p.fmt(f),
        }
    }
}

/// Output expressions as written in rules and systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutExpr {
    Num(Rational),
    Token(Sym),
    Neg(Box<OutExpr>),
    Add(Box<OutExpr>, Box<OutExpr>),
    Sub(Box<OutExpr>, Box<OutExpr>),
    Mul(Box<OutExpr>, Box<OutExpr>),
    Pow(Box<OutExpr>, u32),
    Call(Sym, Vec<OutExpr>),
}

impl OutExpr {
    pub fn token(t: impl Into<Sym>) -> Self {
        OutExpr::Token(t.into())
    }

    pub fn tokens(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<Sym>) {
        match self {
            OutExpr::Num(_) => {}
            OutExpr::Token(t) => {
                out.insert(t.clone());
            }
            OutExpr::Neg(a) | OutExpr::Pow(a, _) => a.collect(out),
            OutExpr::Add(a, b) | OutExpr::Sub(a, b) | OutExpr::Mul(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            OutExpr::Call(_, args) => args.iter().for_each(|a| a.collect(out)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            OutExpr::Add(..) | OutExpr::Sub(..) => 1,
            OutExpr::Mul(..) => 2,
            OutExpr::Neg(_) => 3,
            OutExpr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for OutExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutExpr::Num(q) if q < &Rational::zero() => write!(f, "({})", fmt_rational(q)),
            OutExpr::Num(q) => f.write_str(&fmt_rational(q)),
            OutExpr::Token(t) => write!(f, "{t}"),
            OutExpr::Neg(a) => {
                f.write_str("-")?;
                a.write_operand(f, 4)
            }
            OutExpr::Add(a, b) => {
                a.write_operand(f, 1)?;
                f.write_str(" + ")?;
                b.write_operand(f, 2)
            }
            OutExpr::Sub(a, b) => {
                a.write_operand(f, 1)?;
                f.write_str(" - ")?;
                b.write_operand(f, 2)
            }
            OutExpr::Mul(a, b) => {
                a.write_operand(f, 2)?;
                f.write_str(" * ")?;
                b.write_operand(f, 3)
            }
            OutExpr::Pow(a, e) => {
                a.write_operand(f, 5)?;
                write!(f, "^{e}")
            }
            OutExpr::Call(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// The output object `B` with its operation table and symbolic normaliser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputAlgebra {
    pub kind: OutputKind,
}

impl OutputAlgebra {
    pub fn new(kind: OutputKind) -> Self {
        OutputAlgebra { kind }
    }

    /// Names usable in output expressions.
    pub fn operations(&self) -> &'static [&'static str] {
        match self.kind {
            OutputKind::Bool => &["max", "min", "0", "1"],
            OutputKind::Rational => &["+", "-", "*", "^"],
        }
    }

    /// Finite carrier sample used for pointwise sanity checks.
    pub fn samples(&self) -> Vec<Output> {
        match self.kind {
            OutputKind::Bool => vec![Output::bool(false), Output::bool(true)],
            OutputKind::Rational => [-2, -1, 0, 1, 2, 3]
                .iter()
                .map(|&n| Output::rational(crate::poly::rat(n)))
                .chain(std::iter::once(Output::rational(Rational::new(1.into(), 2.into()))))
                .collect(),
        }
    }

    /// Evaluates `e` to its canonical form. Unbound tokens are an error.
    pub fn eval(&self, e: &OutExpr, env: &impl Fn(&Sym) -> Option<Output>) -> Result<Output> {
        match self.kind {
            OutputKind::Rational => Ok(Output::Rat(self.eval_rat(e, env)?)),
            OutputKind::Bool => Ok(Output::Bool(self.eval_bool(e, env)?)),
        }
    }

    fn lookup(&self, t: &Sym, env: &impl Fn(&Sym) -> Option<Output>) -> Result<Output> {
        let v = env(t).ok_or_else(|| Error::Output(format!("unbound output token `{t}`")))?;
        if v.kind() != self.kind {
            return Err(Error::Output(format!("token `{t}` has {} output", v.kind())));
        }
        Ok(v)
    }

    fn eval_rat(&self, e: &OutExpr, env: &impl Fn(&Sym) -> Option<Output>) -> Result<Scalar> {
        Ok(match e {
            OutExpr::Num(q) => Scalar::from_rational(q.clone()),
            OutExpr::Token(t) => match self.lookup(t, env)? {
                Output::Rat(p) => p,
                Output::Bool(_) => unreachable!(),
            },
            OutExpr::Neg(a) => -&self.eval_rat(a, env)?,
            OutExpr::Add(a, b) => &self.eval_rat(a, env)? + &self.eval_rat(b, env)?,
            OutExpr::Sub(a, b) => &self.eval_rat(a, env)? - &self.eval_rat(b, env)?,
            OutExpr::Mul(a, b) => &self.eval_rat(a, env)? * &self.eval_rat(b, env)?,
            OutExpr::Pow(a, n) => self.eval_rat(a, env)?.pow(*n),
            OutExpr::Call(g, _) => {
                return Err(Error::Output(format!("`{g}` is not a rational output operation")))
            }
        })
    }

    fn eval_bool(&self, e: &OutExpr, env: &impl Fn(&Sym) -> Option<Output>) -> Result<BoolNf> {
        match e {
            OutExpr::Num(q) if q.is_zero() => Ok(BoolNf::constant(false)),
            OutExpr::Num(q) if q.is_one() => Ok(BoolNf::constant(true)),
            OutExpr::Num(q) => Err(Error::Output(format!(
                "`{}` is not a Boolean constant",
                fmt_rational(q)
            ))),
            OutExpr::Token(t) => match self.lookup(t, env)? {
                Output::Bool(b) => Ok(b),
                Output::Rat(_) => unreachable!(),
            },
            OutExpr::Call(g, args) if &**g == "max" || &**g == "min" => {
                let is_max = &**g == "max";
                let mut acc = BoolNf::constant(!is_max);
                for a in args {
                    let v = self.eval_bool(a, env)?;
                    acc = if is_max { acc.join(&v) } else { acc.meet(&v) };
                }
                Ok(acc)
            }
            other => Err(Error::Output(format!(
                "`{other}` uses an operation outside max/min on Boolean outputs"
            ))),
        }
    }
}

/// One observation: an output and an `A`-indexed successor map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step<S> {
    pub output: Output,
    pub next: BTreeMap<Sym, S>,
}

impl<S> Step<S> {
    pub fn new(output: Output, next: BTreeMap<Sym, S>) -> Self {
        Step { output, next }
    }

    pub fn map<T>(&self, mut f: impl FnMut(&S) -> T) -> Step<T> {
        Step {
            output: self.output.clone(),
            next: self.next.iter().map(|(a, s)| (a.clone(), f(s))).collect(),
        }
    }

    pub fn try_map<T, E>(&self, mut f: impl FnMut(&S) -> std::result::Result<T, E>) -> std::result::Result<Step<T>, E> {
        Ok(Step {
            output: self.output.clone(),
            next: self
                .next
                .iter()
                .map(|(a, s)| Ok((a.clone(), f(s)?)))
                .collect::<std::result::Result<_, E>>()?,
        })
    }

    pub fn letters(&self) -> impl Iterator<Item = &Sym> {
        self.next.keys()
    }

    /// `⟨o, a ↦ s, ..⟩`, states rendered by `show`.
    pub fn render(&self, show: impl Fn(&S) -> String) -> String {
        let next: Vec<String> = self
            .next
            .iter()
            .map(|(a, s)| format!("{a} ↦ {}", show(s)))
            .collect();
        format!("⟨{}, {}⟩", self.output, next.join(", "))
    }
}

/// The fixed input alphabet `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet(Vec<Sym>);

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = impl Into<Sym>>) -> Result<Self> {
        let letters: Vec<Sym> = letters.into_iter().map(Into::into).collect();
        let unique: BTreeSet<_> = letters.iter().collect();
        if letters.is_empty() || unique.len() != letters.len() {
            return Err(Error::AlphabetMismatch(
                "alphabet must be non-empty and duplicate-free".into(),
            ));
        }
        Ok(Alphabet(letters))
    }

    pub fn letters(&self) -> &[Sym] {
        &self.0
    }

    pub fn contains(&self, a: &str) -> bool {
        self.0.iter().any(|l| &**l == a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that a step is defined on exactly this alphabet.
    pub fn check<S>(&self, step: &Step<S>) -> Result<()> {
        if step.next.len() != self.0.len() || !self.0.iter().all(|a| step.next.contains_key(a)) {
            return Err(Error::AlphabetMismatch(format!(
                "step defined on {{{}}} but alphabet is {{{}}}",
                step.next.keys().map(Sym::as_str).collect::<Vec<_>>().join(", "),
                self.0.iter().map(Sym::as_str).collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(())
    }
}

/// `Rel F(rel)`: equal outputs and pointwise `rel`-related successors.
pub fn relation_lift<S>(rel: impl Fn(&S, &S) -> bool, s1: &Step<S>, s2: &Step<S>) -> Result<bool> {
    if !s1.next.keys().eq(s2.next.keys()) {
        return Err(Error::AlphabetMismatch("steps observe different letters".into()));
    }
    if s1.output.kind() != s2.output.kind() {
        return Err(Error::Output("steps have different output kinds".into()));
    }
    Ok(s1.output == s2.output && s1.next.values().zip(s2.next.values()).all(|(a, b)| rel(a, b)))
}

/// Pairs a state with its observation: the cofree copointed functor `Id × F`.
pub fn copair<S, T>(x: S, step: Step<T>) -> (S, Step<T>) {
    (x, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn step(out: Output, nexts: &[(&str, &str)]) -> Step<String> {
        Step::new(out, nexts.iter().map(|(a, s)| (Sym::new(a), s.to_string())).collect())
    }

    #[test]
    fn diagonal_is_related() {
        let s = step(Output::rational(rat(0)), &[("a", "t")]);
        assert!(relation_lift(|a, b| a == b, &s, &s).unwrap());
    }

    #[test]
    fn unrelated_successors() {
        let s1 = step(Output::rational(rat(0)), &[("d", "n1")]);
        let s2 = step(Output::rational(rat(0)), &[("d", "n3")]);
        assert!(!relation_lift(|a, b| a == b, &s1, &s2).unwrap());
    }

    #[test]
    fn symbolic_product_commutes() {
        let alg = OutputAlgebra::new(OutputKind::Rational);
        let env = |t: &Sym| Some(Output::token(OutputKind::Rational, t.clone()));
        let uv = OutExpr::Mul(Box::new(OutExpr::token("b_u")), Box::new(OutExpr::token("b_v")));
        let vu = OutExpr::Mul(Box::new(OutExpr::token("b_v")), Box::new(OutExpr::token("b_u")));
        let s1 = step(alg.eval(&uv, &env).unwrap(), &[("a", "s")]);
        let s2 = step(alg.eval(&vu, &env).unwrap(), &[("a", "s")]);
        assert!(relation_lift(|a, b| a == b, &s1, &s2).unwrap());
    }

    #[test]
    fn alphabet_mismatch() {
        let s1 = step(Output::bool(true), &[("a", "x")]);
        let s2 = step(Output::bool(true), &[("b", "x")]);
        assert!(matches!(
            relation_lift(|a, b| a == b, &s1, &s2),
            Err(Error::AlphabetMismatch(_))
        ));
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        assert!(alphabet.check(&s1).is_err());
    }

    #[test]
    fn copair_projects_back() {
        let s = step(Output::bool(true), &[("a", "y")]);
        let (x, st) = copair("x", s.clone());
        assert_eq!(x, "x");
        assert_eq!(st, s);
    }

    #[test]
    fn boolean_normal_form_absorbs() {
        let a = BoolNf::token("a");
        let b = BoolNf::token("b");
        // a max (a min b) = a
        assert_eq!(a.join(&a.meet(&b)), a);
        assert_eq!(a.meet(&BoolNf::constant(false)), BoolNf::constant(false));
        assert_eq!(a.join(&BoolNf::constant(true)), BoolNf::constant(true));
        assert_eq!(a.join(&b).to_string(), "max(a, b)");
    }

    #[test]
    fn boolean_rejects_ring_operations() {
        let alg = OutputAlgebra::new(OutputKind::Bool);
        let e = OutExpr::Add(Box::new(OutExpr::Num(rat(0))), Box::new(OutExpr::Num(rat(1))));
        assert!(alg.eval(&e, &|_| None).is_err());
    }
}
