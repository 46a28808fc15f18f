//! Rule specifications and their inductive extension to distributive laws
//! `λ: T(Id × F) ⇒ (Id × F)T`, plus the induced law on normal forms.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::behaviour::{relation_lift, Alphabet, OutExpr, Output, OutputAlgebra, OutputKind, Step};
use crate::error::{Error, Result};
use crate::poly::Scalar;
use crate::sym::Sym;
use crate::terms::{Signature, Term};
use crate::theories::{Equiv, NormalForm, Theory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Format {
    /// Rules see only the observations of their arguments.
    SimpleSos,
    /// Rules may also mention the arguments themselves.
    Gsos,
}

impl Format {
    pub fn keyword(self) -> &'static str {
        match self {
            Format::SimpleSos => "simple-sos",
            Format::Gsos => "gsos",
        }
    }
}

/// Placeholders for one argument: the argument itself, its output and its derivative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgBinding {
    pub arg: Sym,
    pub out: Sym,
    pub deriv: Sym,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleHead {
    Op(Sym),
    /// `f[q]`: one rule for every constant of the family, `q` bound to its index.
    Family { family: Sym, index: Sym },
}

impl RuleHead {
    pub fn symbol(&self) -> &Sym {
        match self {
            RuleHead::Op(s) => s,
            RuleHead::Family { family, .. } => family,
        }
    }
}

/// Successor template over the placeholders of a rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Arg(Sym),
    /// `d(a)`: derivative placeholder `d` at a letter; the rule's letter binder
    /// stands for the letter being computed.
    Deriv(Sym, Sym),
    App(Sym, Vec<Pattern>),
    /// Indexed constant whose index is an output expression, e.g. `[ox]`.
    Indexed(Sym, OutExpr),
}

impl Pattern {
    fn visit(&self, f: &mut impl FnMut(&Pattern)) {
        f(self);
        if let Pattern::App(_, args) = self {
            args.iter().for_each(|a| a.visit(f));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextExpr {
    Term(Pattern),
    /// Branch on a Boolean output token.
    Case {
        token: Sym,
        zero: Box<NextExpr>,
        one: Box<NextExpr>,
    },
}

impl NextExpr {
    fn patterns(&self) -> Vec<&Pattern> {
        match self {
            NextExpr::Term(p) => vec![p],
            NextExpr::Case { zero, one, .. } => {
                let mut v = zero.patterns();
                v.extend(one.patterns());
                v
            }
        }
    }

    fn case_tokens(&self, out: &mut Vec<Sym>) {
        if let NextExpr::Case { token, zero, one } = self {
            out.push(token.clone());
            zero.case_tokens(out);
            one.case_tokens(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: RuleHead,
    pub args: Vec<ArgBinding>,
    pub out: OutExpr,
    /// Letter variable of the `next(..)` clause.
    pub binder: Sym,
    pub next: NextExpr,
}

impl Rule {
    pub fn symbol(&self) -> &Sym {
        self.head.symbol()
    }

    fn output_tokens(&self) -> BTreeSet<Sym> {
        let mut s: BTreeSet<Sym> = self.args.iter().map(|a| a.out.clone()).collect();
        if let RuleHead::Family { index, .. } = &self.head {
            s.insert(index.clone());
        }
        s
    }

    fn violation(&self, detail: String) -> Error {
        Error::PlaceholderViolation {
            op: self.symbol().clone(),
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsosSpec {
    format: Format,
    rules: Vec<Rule>,
}

impl GsosSpec {
    /// Checks that placeholders are distinct and that simple-SOS rules never
    /// mention argument placeholders.
    pub fn new(format: Format, rules: Vec<Rule>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.symbol().clone()) {
                return Err(r.violation("more than one rule".into()));
            }
            let mut names = BTreeSet::new();
            let all = r.args.iter().flat_map(|a| [&a.arg, &a.out, &a.deriv]);
            let index = match &r.head {
                RuleHead::Family { index, .. } => Some(index),
                RuleHead::Op(_) => None,
            };
            for n in all.chain(index).chain([&r.binder]) {
                if !names.insert(n.clone()) {
                    return Err(r.violation(format!("placeholder `{n}` bound twice")));
                }
            }
            if format == Format::SimpleSos {
                for p in r.next.patterns() {
                    let mut used = None;
                    p.visit(&mut |q| {
                        if let Pattern::Arg(x) = q {
                            used.get_or_insert_with(|| x.clone());
                        }
                    });
                    if let Some(x) = used {
                        return Err(r.violation(format!(
                            "argument `{x}` used in a simple-sos rule"
                        )));
                    }
                }
            }
        }
        Ok(GsosSpec { format, rules })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, symbol: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &**r.symbol() == symbol)
    }

    /// The same rules with one replaced, re-validated.
    pub fn with_rule(&self, rule: Rule) -> Result<Self> {
        let rules = self
            .rules
            .iter()
            .map(|r| if r.symbol() == rule.symbol() { rule.clone() } else { r.clone() })
            .collect();
        GsosSpec::new(self.format, rules)
    }
}

/// A rule specification over a signature, alphabet and output algebra; the
/// distributive law it induces is computed on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistLaw {
    signature: Signature,
    alphabet: Alphabet,
    algebra: OutputAlgebra,
    spec: GsosSpec,
}

/// A state paired with its observation, as consumed by rules.
pub type Observed = (Term, Step<Term>);

impl DistLaw {
    pub fn new(signature: Signature, alphabet: Alphabet, algebra: OutputAlgebra, spec: GsosSpec) -> Result<Self> {
        let law = DistLaw {
            signature,
            alphabet,
            algebra,
            spec,
        };
        for r in law.spec.rules() {
            law.validate_rule(r)?;
        }
        Ok(law)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn algebra(&self) -> &OutputAlgebra {
        &self.algebra
    }

    pub fn spec(&self) -> &GsosSpec {
        &self.spec
    }

    pub fn with_spec(&self, spec: GsosSpec) -> Result<Self> {
        DistLaw::new(self.signature.clone(), self.alphabet.clone(), self.algebra.clone(), spec)
    }

    fn validate_rule(&self, r: &Rule) -> Result<()> {
        match &r.head {
            RuleHead::Op(op) => {
                let arity = self
                    .signature
                    .arity(op)
                    .ok_or_else(|| Error::SignatureMismatch(format!("rule for undeclared symbol `{op}`")))?;
                if arity != r.args.len() {
                    return Err(Error::SignatureMismatch(format!(
                        "`{op}` has arity {arity} but its rule binds {} arguments",
                        r.args.len()
                    )));
                }
            }
            RuleHead::Family { family, .. } => {
                if self.signature.family(family).is_none() {
                    return Err(Error::SignatureMismatch(format!("rule for undeclared family `{family}`")));
                }
                if self.algebra.kind != OutputKind::Rational {
                    return Err(r.violation("indexed constants need rational outputs".into()));
                }
            }
        }
        let outs = r.output_tokens();
        if let Some(t) = r.out.tokens().iter().find(|t| !outs.contains(*t)) {
            return Err(r.violation(format!("output expression mentions unknown token `{t}`")));
        }
        let mut cases = Vec::new();
        r.next.case_tokens(&mut cases);
        for t in &cases {
            if !outs.contains(t) {
                return Err(r.violation(format!("case on unknown token `{t}`")));
            }
            if self.algebra.kind != OutputKind::Bool {
                return Err(r.violation("case splits need Boolean outputs".into()));
            }
        }
        let args: BTreeSet<&Sym> = r.args.iter().map(|a| &a.arg).collect();
        let derivs: BTreeSet<&Sym> = r.args.iter().map(|a| &a.deriv).collect();
        let mut err = None;
        for p in r.next.patterns() {
            p.visit(&mut |q| {
                if err.is_some() {
                    return;
                }
                err = match q {
                    Pattern::Arg(x) if !args.contains(x) => Some(r.violation(format!("unknown placeholder `{x}`"))),
                    Pattern::Deriv(d, _) if !derivs.contains(d) => {
                        Some(r.violation(format!("unknown derivative `{d}`")))
                    }
                    Pattern::Deriv(_, l) if *l != r.binder && !self.alphabet.contains(l) => {
                        Some(r.violation(format!("`{l}` is neither the letter binder nor a letter")))
                    }
                    Pattern::App(f, xs) => match self.signature.arity(f) {
                        Some(n) if n == xs.len() => None,
                        Some(n) => Some(Error::SignatureMismatch(format!(
                            "`{f}` has arity {n} but is applied to {} arguments",
                            xs.len()
                        ))),
                        None => Some(Error::SignatureMismatch(format!("undeclared symbol `{f}`"))),
                    },
                    Pattern::Indexed(fam, e) => {
                        if self.signature.family(fam).is_none() {
                            Some(Error::SignatureMismatch(format!("undeclared family `{fam}`")))
                        } else if self.algebra.kind != OutputKind::Rational {
                            Some(r.violation("indexed constants need rational outputs".into()))
                        } else {
                            e.tokens()
                                .into_iter()
                                .find(|t| !outs.contains(t))
                                .map(|t| r.violation(format!("index mentions unknown token `{t}`")))
                        }
                    }
                    _ => None,
                };
            });
        }
        err.map_or(Ok(()), Err)
    }

    /// The inductive extension of the rules: structural recursion over `t`,
    /// with `leaf` supplying the state and observation of every variable.
    pub fn extend_with(&self, t: &Term, leaf: &mut impl FnMut(&Sym) -> Result<Observed>) -> Result<Observed> {
        match t {
            Term::Var(x) => {
                let (s, step) = leaf(x)?;
                self.alphabet.check(&step)?;
                Ok((s, step))
            }
            Term::App(op, args) => {
                let rule = self.spec.rule(op).ok_or_else(|| Error::MissingRule(op.clone()))?;
                let subs = args
                    .iter()
                    .map(|a| self.extend_with(a, leaf))
                    .collect::<Result<Vec<_>>>()?;
                if rule.args.len() != subs.len() {
                    return Err(Error::SignatureMismatch(format!(
                        "`{op}` applied to {} arguments",
                        subs.len()
                    )));
                }
                let step = self.apply(rule, &subs, None)?;
                let state = Term::App(op.clone(), subs.into_iter().map(|(s, _)| s).collect());
                Ok((state, step))
            }
            Term::Indexed(fam, q) => {
                let rule = self.spec.rule(fam).ok_or_else(|| Error::MissingRule(fam.clone()))?;
                Ok((t.clone(), self.apply(rule, &[], Some(q))?))
            }
        }
    }

    /// The output component of [`DistLaw::extend_with`] alone.
    pub fn output_with(&self, t: &Term, leaf: &mut impl FnMut(&Sym) -> Result<Output>) -> Result<Output> {
        let (rule, outs, index) = match t {
            Term::Var(x) => return leaf(x),
            Term::App(op, args) => {
                let rule = self.spec.rule(op).ok_or_else(|| Error::MissingRule(op.clone()))?;
                let outs = args
                    .iter()
                    .map(|a| self.output_with(a, leaf))
                    .collect::<Result<Vec<_>>>()?;
                (rule, outs, None)
            }
            Term::Indexed(fam, q) => {
                let rule = self.spec.rule(fam).ok_or_else(|| Error::MissingRule(fam.clone()))?;
                (rule, Vec::new(), Some(q))
            }
        };
        let mut env: BTreeMap<Sym, Output> = rule.args.iter().map(|b| b.out.clone()).zip(outs).collect();
        if let (RuleHead::Family { index: name, .. }, Some(q)) = (&rule.head, index) {
            env.insert(name.clone(), Output::Rat(q.clone()));
        }
        self.algebra.eval(&rule.out, &|t: &Sym| env.get(t).cloned())
    }

    /// Instantiates one rule at concrete argument observations.
    pub fn apply(&self, rule: &Rule, subs: &[Observed], index: Option<&Scalar>) -> Result<Step<Term>> {
        let mut env: BTreeMap<Sym, Output> = rule
            .args
            .iter()
            .zip(subs)
            .map(|(b, (_, step))| (b.out.clone(), step.output.clone()))
            .collect();
        if let (RuleHead::Family { index: name, .. }, Some(q)) = (&rule.head, index) {
            env.insert(name.clone(), Output::Rat(q.clone()));
        }
        let lookup = |t: &Sym| env.get(t).cloned();
        let output = self.algebra.eval(&rule.out, &lookup)?;
        let mut next = BTreeMap::new();
        for a in self.alphabet.letters() {
            let pattern = self.select(rule, &rule.next, &env)?;
            next.insert(a.clone(), self.instantiate(rule, pattern, a, subs, &env)?);
        }
        Ok(Step::new(output, next))
    }

    fn select<'r>(&self, rule: &Rule, e: &'r NextExpr, env: &BTreeMap<Sym, Output>) -> Result<&'r Pattern> {
        match e {
            NextExpr::Term(p) => Ok(p),
            NextExpr::Case { token, zero, one } => {
                let v = &env[token];
                match v.as_bool() {
                    Some(false) => self.select(rule, zero, env),
                    Some(true) => self.select(rule, one, env),
                    None => Err(Error::UndecidedCase(format!(
                        "rule `{}` branches on `{token}` = {v}",
                        rule.symbol()
                    ))),
                }
            }
        }
    }

    fn instantiate(
        &self,
        rule: &Rule,
        p: &Pattern,
        letter: &Sym,
        subs: &[Observed],
        env: &BTreeMap<Sym, Output>,
    ) -> Result<Term> {
        Ok(match p {
            Pattern::Arg(x) => {
                let i = rule.args.iter().position(|b| &b.arg == x).expect("validated");
                subs[i].0.clone()
            }
            Pattern::Deriv(d, l) => {
                let i = rule.args.iter().position(|b| &b.deriv == d).expect("validated");
                let at = if *l == rule.binder { letter } else { l };
                subs[i].1.next.get(at).cloned().ok_or_else(|| {
                    Error::AlphabetMismatch(format!("no successor at letter `{at}`"))
                })?
            }
            Pattern::App(f, args) => Term::App(
                f.clone(),
                args.iter()
                    .map(|a| self.instantiate(rule, a, letter, subs, env))
                    .collect::<Result<_>>()?,
            ),
            Pattern::Indexed(fam, e) => {
                let q = OutputAlgebra::new(OutputKind::Rational).eval(e, &|t: &Sym| env.get(t).cloned())?;
                match q {
                    Output::Rat(q) => Term::Indexed(fam.clone(), q),
                    Output::Bool(_) => unreachable!(),
                }
            }
        })
    }
}

/// `λ` on a term whose leaves carry observations over leaf ids. The first
/// component is the input term itself.
pub fn extend_lambda(law: &DistLaw, t: &Term, leaves: &BTreeMap<Sym, Step<Sym>>) -> Result<Observed> {
    law.extend_with(t, &mut |x| {
        let step = leaves.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
        Ok((Term::Var(x.clone()), step.map(|y| Term::Var(y.clone()))))
    })
}

/// How `λ′` treats the choice of representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certification {
    /// Preservation was established; any representative will do.
    Certified,
    /// Not established; every variant of the representative is compared.
    SpotCheck,
    /// Not established and not allowed to proceed.
    Required,
}

/// Normalises every successor of a step.
pub fn normalize_step(th: &Theory, step: &Step<Term>) -> Result<Step<NormalForm>> {
    step.try_map(|t| th.normalize(t))
}

/// Relation lifting of the theory's equivalence to normal-form steps.
pub fn steps_equal(th: &Theory, a: &Step<NormalForm>, b: &Step<NormalForm>) -> Result<bool> {
    relation_lift(|x, y| th.equiv_nf(x, y) == Ok(Equiv::Equal), a, b)
}

/// `λ′` at a normal form whose variables carry observations.
pub fn quotient_lambda(
    th: &Theory,
    law: &DistLaw,
    nf: &NormalForm,
    leaves: &BTreeMap<Sym, Step<Term>>,
    mode: Certification,
) -> Result<Step<NormalForm>> {
    if mode == Certification::Required {
        return Err(Error::PreservationNotCertified);
    }
    let via = |t: &Term| -> Result<Step<NormalForm>> {
        let (_, step) = law.extend_with(t, &mut |x| {
            let step = leaves.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
            Ok((Term::Var(x.clone()), step.clone()))
        })?;
        normalize_step(th, &step)
    };
    let rep = th.representative(nf);
    let step = via(&rep)?;
    if mode == Certification::SpotCheck {
        for alt in th.variants(nf) {
            let other = via(&alt)?;
            if !steps_equal(th, &step, &other)? {
                let show = |s: &Step<NormalForm>| s.render(|n| n.to_string());
                return Err(Error::RepresentativeDependence(format!(
                    "{} gives {} but {} gives {}",
                    th.signature().show(&rep),
                    show(&step),
                    th.signature().show(&alt),
                    show(&other)
                )));
            }
        }
    }
    Ok(step)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SquareFailure {
    pub sample: String,
    /// Normalise after `λ`.
    pub direct: String,
    /// `λ′` after normalising.
    pub quotient: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SquareReport {
    pub checked: usize,
    pub failures: Vec<SquareFailure>,
}

impl SquareReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares both legs of the morphism square `Fq ∘ λ = λ′ ∘ q` on each sample.
pub fn morphism_square_check(
    th: &Theory,
    law: &DistLaw,
    samples: &[(Term, BTreeMap<Sym, Step<Term>>)],
) -> Result<SquareReport> {
    let mut report = SquareReport::default();
    let show = |s: &Step<NormalForm>| s.render(|n| n.to_string());
    for (t, leaves) in samples {
        report.checked += 1;
        let (_, raw) = law.extend_with(t, &mut |x| {
            let step = leaves.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
            Ok((Term::Var(x.clone()), step.clone()))
        })?;
        let direct = normalize_step(th, &raw)?;
        let nf = th.normalize(t)?;
        let failure = match quotient_lambda(th, law, &nf, leaves, Certification::SpotCheck) {
            Ok(q) if steps_equal(th, &direct, &q)? => None,
            Ok(q) => Some(show(&q)),
            Err(Error::RepresentativeDependence(d)) => Some(d),
            Err(e) => return Err(e),
        };
        if let Some(quotient) = failure {
            report.failures.push(SquareFailure {
                sample: th.signature().show(t).to_string(),
                direct: show(&direct),
                quotient,
            });
        }
    }
    Ok(report)
}
