//! λ-coinduction: operational models of corecursive equations `φ: X → FTX`,
//! finite observations of their solutions, and the checks that solving
//! commutes with passing to the quotient.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::behaviour::{Output, Step};
use crate::error::{Error, Result};
use crate::gsos::DistLaw;
use crate::poly::{fmt_rational, Rational};
use crate::sym::Sym;
use crate::terms::{enumerate_terms, substitute, Term};
use crate::theories::{Atom, Equiv, NormalForm, Theory, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorecSystem {
    variables: Vec<Sym>,
    phi: BTreeMap<Sym, Step<Term>>,
    law: DistLaw,
    theory: Option<Theory>,
}

impl CorecSystem {
    /// `phi` must give every variable a concrete output and a successor on
    /// every letter, built from the signature and the variables.
    pub fn new(law: DistLaw, phi: Vec<(Sym, Step<Term>)>, theory: Option<Theory>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut variables = Vec::new();
        for (x, step) in phi {
            if map.contains_key(&x) {
                return Err(Error::InvalidSystem(format!("`{x}` defined twice")));
            }
            variables.push(x.clone());
            map.insert(x, step);
        }
        for (x, step) in &map {
            law.alphabet().check(step)?;
            if step.output.kind() != law.algebra().kind || !step.output.is_concrete() {
                return Err(Error::InvalidSystem(format!(
                    "`{x}` needs a concrete {} output",
                    law.algebra().kind
                )));
            }
            for t in step.next.values() {
                law.signature().check(t)?;
                if let Some(y) = t.vars().into_iter().find(|y| !map.contains_key(y)) {
                    return Err(Error::UnboundVariable(y));
                }
            }
        }
        if let Some(th) = &theory {
            if th.signature() != law.signature() {
                return Err(Error::SignatureMismatch(
                    "theory and rules are over different signatures".into(),
                ));
            }
        }
        Ok(CorecSystem {
            variables,
            phi: map,
            law,
            theory,
        })
    }

    pub fn variables(&self) -> &[Sym] {
        &self.variables
    }

    pub fn phi(&self, x: &str) -> Option<&Step<Term>> {
        self.phi.get(x)
    }

    pub fn law(&self) -> &DistLaw {
        &self.law
    }

    pub fn theory(&self) -> Option<&Theory> {
        self.theory.as_ref()
    }

    pub fn with_law(&self, law: DistLaw) -> Result<Self> {
        CorecSystem::new(
            law,
            self.variables.iter().map(|x| (x.clone(), self.phi[x].clone())).collect(),
            self.theory.clone(),
        )
    }

    pub fn with_theory(&self, theory: Option<Theory>) -> Result<Self> {
        CorecSystem::new(
            self.law.clone(),
            self.variables.iter().map(|x| (x.clone(), self.phi[x].clone())).collect(),
            theory,
        )
    }
}

/// One step of the operational model on `TX`: variables read `φ`, operations
/// apply their rule to the steps of their arguments.
pub fn operational_model(sys: &CorecSystem, t: &Term) -> Result<Step<Term>> {
    let (_, step) = sys.law.extend_with(t, &mut |x| {
        let step = sys.phi.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
        Ok((Term::Var(x.clone()), step.clone()))
    })?;
    Ok(step)
}

/// The output of [`operational_model`] without building successors.
pub fn observe(sys: &CorecSystem, t: &Term) -> Result<Output> {
    sys.law.output_with(t, &mut |x| {
        let step = sys.phi.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
        Ok(step.output.clone())
    })
}

fn canonical(th: &Theory, t: &Term) -> Result<Term> {
    Ok(th.representative(&th.normalize(t)?))
}

/// Output after reading `word` from `t`, and the state reached. With a theory
/// the state is normalised after every step.
pub fn unfold(sys: &CorecSystem, t: &Term, word: &[Sym]) -> Result<(Output, Term)> {
    unfold_with(sys, t, word, sys.theory.is_some())
}

pub fn unfold_with(sys: &CorecSystem, t: &Term, word: &[Sym], normalise: bool) -> Result<(Output, Term)> {
    let mut state = t.clone();
    for a in word {
        if !sys.law.alphabet().contains(a) {
            return Err(Error::AlphabetMismatch(format!("`{a}` is not a letter")));
        }
        let step = operational_model(sys, &state)?;
        state = step.next[a].clone();
        if normalise {
            if let Some(th) = &sys.theory {
                state = canonical(th, &state)?;
            }
        }
    }
    Ok((observe(sys, &state)?, state))
}

/// The first `n` outputs of a stream state (one-letter alphabet).
pub fn stream_prefix(sys: &CorecSystem, t: &Term, n: usize) -> Result<Vec<Output>> {
    let letters = sys.law.alphabet().letters();
    if letters.len() != 1 {
        return Err(Error::AlphabetMismatch("streams need a one-letter alphabet".into()));
    }
    let mut state = t.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let step = operational_model(sys, &state)?;
        out.push(step.output);
        state = step.next[&letters[0]].clone();
        if let Some(th) = &sys.theory {
            state = canonical(th, &state)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommuteViolation {
    pub term: String,
    pub word: String,
    pub raw_output: String,
    pub quotient_output: String,
    pub raw_state: String,
    pub quotient_state: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CommuteReport {
    pub terms: usize,
    pub probes: usize,
    pub violations: Vec<CommuteViolation>,
}

fn word_string(w: &[Sym]) -> String {
    if w.is_empty() {
        "ε".into()
    } else {
        w.iter().map(Sym::as_str).collect::<Vec<_>>().join("")
    }
}

/// Runs every term of size ≤ `max_term_size` along every word of length
/// ≤ `depth` twice: once on raw terms, once normalising after each step.
pub fn quotient_commute_check(sys: &CorecSystem, max_term_size: usize, depth: usize) -> Result<CommuteReport> {
    let th = sys
        .theory
        .as_ref()
        .ok_or_else(|| Error::InvalidSystem("quotient check needs a theory".into()))?;
    let mut report = CommuteReport::default();
    for t in enumerate_terms(sys.law.signature(), &sys.variables, max_term_size) {
        report.terms += 1;
        let nf = th.normalize(&t)?;
        probe(sys, th, &t, &t, nf, &mut Vec::new(), depth, &mut report)?;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn probe(
    sys: &CorecSystem,
    th: &Theory,
    origin: &Term,
    raw: &Term,
    nf: NormalForm,
    word: &mut Vec<Sym>,
    depth: usize,
    report: &mut CommuteReport,
) -> Result<()> {
    report.probes += 1;
    let rep = th.representative(&nf);
    let (raw_out, q_out) = (observe(sys, raw)?, observe(sys, &rep)?);
    if raw_out != q_out || th.equiv(raw, &rep)? != Equiv::Equal {
        let show = |t: &Term| th.signature().show(t).to_string();
        report.violations.push(CommuteViolation {
            term: show(origin),
            word: word_string(word),
            raw_output: raw_out.to_string(),
            quotient_output: q_out.to_string(),
            raw_state: show(raw),
            quotient_state: nf.to_string(),
        });
        return Ok(());
    }
    if word.len() == depth {
        return Ok(());
    }
    let raw_step = operational_model(sys, raw)?;
    let q_step = operational_model(sys, &rep)?;
    for a in sys.law.alphabet().letters() {
        word.push(a.clone());
        let next_nf = th.normalize(&q_step.next[a])?;
        probe(sys, th, origin, &raw_step.next[a], next_nf, word, depth, report)?;
        word.pop();
    }
    Ok(())
}

/// A finite observation of a final-coalgebra element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Behaviour {
    /// Accepted words of length ≤ horizon.
    Language(BTreeSet<Vec<Sym>>),
    /// The first `horizon` outputs.
    Stream(Vec<Rational>),
}

impl fmt::Display for Behaviour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behaviour::Language(ws) => {
                let mut ws: Vec<&Vec<Sym>> = ws.iter().collect();
                ws.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                let items: Vec<String> = ws.iter().map(|w| word_string(w)).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            Behaviour::Stream(xs) => {
                let items: Vec<String> = xs.iter().map(fmt_rational).collect();
                write!(f, "({})", items.join(", "))
            }
        }
    }
}

/// The observation of `t` at the given horizon.
pub fn behaviour(sys: &CorecSystem, t: &Term, horizon: usize) -> Result<Behaviour> {
    match sys.law.algebra().kind {
        crate::behaviour::OutputKind::Rational => stream_prefix(sys, t, horizon)?
            .into_iter()
            .map(|o| o.as_rational().ok_or_else(|| Error::Output(format!("symbolic output {o}"))))
            .collect::<Result<Vec<_>>>()
            .map(Behaviour::Stream),
        crate::behaviour::OutputKind::Bool => {
            let mut words = BTreeSet::new();
            collect_language(sys, t.clone(), &mut Vec::new(), horizon, &mut words)?;
            Ok(Behaviour::Language(words))
        }
    }
}

fn collect_language(
    sys: &CorecSystem,
    state: Term,
    word: &mut Vec<Sym>,
    horizon: usize,
    out: &mut BTreeSet<Vec<Sym>>,
) -> Result<()> {
    let state = match &sys.theory {
        Some(th) => canonical(th, &state)?,
        None => state,
    };
    let step = operational_model(sys, &state)?;
    if step.output.as_bool() == Some(true) {
        out.insert(word.clone());
    }
    if word.len() == horizon {
        return Ok(());
    }
    for (a, next) in step.next {
        word.push(a);
        collect_language(sys, next, word, horizon, out)?;
        word.pop();
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraReport {
    pub horizon: usize,
    /// Behaviour of the flattened term.
    pub direct: String,
    /// Behaviours of the leaves combined along the normal form.
    pub via_normal_form: String,
    pub equal: bool,
}

/// Compares the algebra on behaviours induced by `T` (observe the flattened
/// term) with the one induced by the quotient (combine the leaves'
/// observations along the normal form of `outer`).
pub fn induced_algebra_check(
    sys: &CorecSystem,
    outer: &Term,
    leaves: &BTreeMap<Sym, Term>,
    horizon: usize,
) -> Result<AlgebraReport> {
    let th = sys
        .theory
        .as_ref()
        .ok_or_else(|| Error::InvalidSystem("algebra check needs a theory".into()))?;
    let direct = behaviour(sys, &substitute(outer, leaves)?, horizon)?;
    let atom_behaviour = |a: &Atom| -> Result<Behaviour> {
        match a {
            Atom::Var(x) => behaviour(sys, leaves.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?, horizon),
            Atom::Const(c) => behaviour(sys, &Term::constant(c.clone()), horizon),
            Atom::Param(p) => Err(Error::Output(format!("symbolic scalar `{p}` has no behaviour"))),
        }
    };
    let combined = match th.normalize(outer)? {
        NormalForm::Words(ws) => Behaviour::Language(combine_words(&ws, &atom_behaviour, horizon)?),
        NormalForm::Poly(p) => {
            let mut acc = vec![Rational::from_integer(0.into()); horizon];
            for (m, c) in p.terms() {
                let mut prod = unit_stream(horizon);
                for (atom, e) in m.factors() {
                    let Behaviour::Stream(s) = atom_behaviour(atom)? else {
                        return Err(Error::Output("expected a stream".into()));
                    };
                    for _ in 0..*e {
                        prod = convolve(&prod, &s);
                    }
                }
                for (a, x) in acc.iter_mut().zip(prod) {
                    *a += c * x;
                }
            }
            Behaviour::Stream(acc)
        }
        NormalForm::Term(_) => {
            return Err(Error::InvalidTheory(
                "the induced algebra needs a builtin theory".into(),
            ))
        }
    };
    Ok(AlgebraReport {
        horizon,
        direct: direct.to_string(),
        via_normal_form: combined.to_string(),
        equal: direct == combined,
    })
}

fn unit_stream(n: usize) -> Vec<Rational> {
    (0..n)
        .map(|i| Rational::from_integer(i64::from(i == 0).into()))
        .collect()
}

/// Convolution product of two prefixes of the same length.
pub fn convolve(s: &[Rational], t: &[Rational]) -> Vec<Rational> {
    (0..s.len().min(t.len()))
        .map(|n| (0..=n).map(|i| &s[i] * &t[n - i]).sum())
        .collect()
}

fn combine_words(
    ws: &BTreeSet<Word>,
    atom: &impl Fn(&Atom) -> Result<Behaviour>,
    horizon: usize,
) -> Result<BTreeSet<Vec<Sym>>> {
    let mut out = BTreeSet::new();
    for w in ws {
        let mut acc: BTreeSet<Vec<Sym>> = [Vec::new()].into();
        for a in &w.0 {
            let Behaviour::Language(l) = atom(a)? else {
                return Err(Error::Output("expected a language".into()));
            };
            let mut next = BTreeSet::new();
            for u in &acc {
                for v in &l {
                    if u.len() + v.len() <= horizon {
                        next.insert(u.iter().chain(v).cloned().collect());
                    }
                }
            }
            acc = next;
        }
        out.extend(acc);
    }
    Ok(out)
}
