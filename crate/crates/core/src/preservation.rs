//! Decides whether `λ` preserves the equations of a theory: both sides of
//! every scheme, instantiated at a generic instance, must yield steps related
//! by the lifting of the theory's congruence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::behaviour::{Alphabet, Output, OutputKind, Step};
use crate::error::{Error, Result};
use crate::gsos::{extend_lambda, DistLaw, Observed};
use crate::sym::Sym;
use crate::terms::Term;
use crate::theories::{instantiate_scheme, EquationScheme, Equiv, Theory};

/// Fresh tokens standing for one metavariable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericLeaf {
    pub leaf: Sym,
    pub output: Sym,
    pub step: Step<Sym>,
}

/// Every metavariable `v` becomes a leaf `x_v` observed as `⟨o_v, a ↦ d_v_a⟩`
/// (`d_v` over a one-letter alphabet). Tokens are pairwise distinct and
/// avoid every name in the scheme.
pub fn generic_instance(scheme: &EquationScheme, alphabet: &Alphabet, kind: OutputKind) -> BTreeMap<Sym, GenericLeaf> {
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for t in [&scheme.lhs, &scheme.rhs] {
        collect_names(t, &mut taken);
    }
    taken.extend(scheme.metavars.iter().map(|m| m.to_string()));
    let mut fresh = |base: String| {
        let mut name = base;
        while !taken.insert(name.clone()) {
            name.push('\'');
        }
        Sym::new(name)
    };
    let mut out = BTreeMap::new();
    for v in &scheme.metavars {
        let leaf = fresh(format!("x_{v}"));
        let output = fresh(format!("o_{v}"));
        let next = alphabet
            .letters()
            .iter()
            .map(|a| {
                let d = if alphabet.len() == 1 { format!("d_{v}") } else { format!("d_{v}_{a}") };
                (a.clone(), fresh(d))
            })
            .collect();
        let step = Step::new(Output::token(kind, output.clone()), next);
        out.insert(v.clone(), GenericLeaf { leaf, output, step });
    }
    out
}

fn collect_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            out.insert(x.to_string());
        }
        Term::App(f, args) => {
            out.insert(f.to_string());
            args.iter().for_each(|a| collect_names(a, out));
        }
        Term::Indexed(f, q) => {
            out.insert(f.to_string());
            out.extend(q.atoms().into_iter().map(|s| s.to_string()));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl Verdict {
    fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Unknown, _) | (_, Verdict::Unknown) => Verdict::Unknown,
            _ => Verdict::Holds,
        }
    }
}

/// Where relation lifting broke.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// `None` when the outputs differ.
    pub letter: Option<String>,
    pub lhs: String,
    pub rhs: String,
    pub equiv: Option<Equiv>,
}

/// One scheme under one assignment of Boolean output tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub scheme: String,
    pub branch: String,
    pub verdict: Verdict,
    pub lhs: String,
    pub rhs: String,
    pub lhs_step: String,
    pub rhs_step: String,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreservationReport {
    pub verdict: Verdict,
    pub cases: Vec<CaseReport>,
}

impl PreservationReport {
    /// Cases of one scheme, in branch order.
    pub fn scheme(&self, name: &str) -> Vec<&CaseReport> {
        self.cases.iter().filter(|c| c.scheme == name).collect()
    }

    /// Combined verdict per scheme, in declaration order.
    pub fn by_scheme(&self) -> Vec<(String, Verdict)> {
        let mut out: Vec<(String, Verdict)> = Vec::new();
        for c in &self.cases {
            match out.last_mut() {
                Some((name, v)) if *name == c.scheme => *v = v.combine(c.verdict),
                _ => out.push((c.scheme.clone(), c.verdict)),
            }
        }
        out
    }
}

/// Both sides of a scheme at the generic instance under one branch.
#[derive(Clone, Debug)]
pub struct Instance {
    pub branch: BTreeMap<Sym, bool>,
    /// Output tokens in metavariable order.
    pub tokens: Vec<Sym>,
    pub lhs: Term,
    pub rhs: Term,
    pub leaves: BTreeMap<Sym, Step<Sym>>,
}

impl Instance {
    pub fn label(&self) -> String {
        if self.branch.is_empty() {
            return "generic".into();
        }
        self.tokens
            .iter()
            .map(|t| format!("{t}={}", u8::from(self.branch[t])))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn run(&self, law: &DistLaw) -> Result<(Observed, Observed)> {
        Ok((extend_lambda(law, &self.lhs, &self.leaves)?, extend_lambda(law, &self.rhs, &self.leaves)?))
    }
}

/// The generic instances of a scheme: one per Boolean branch (in binary
/// order over the output tokens), or one symbolic instance for rationals.
pub fn instances(law: &DistLaw, scheme: &EquationScheme) -> Result<Vec<Instance>> {
    let kind = law.algebra().kind;
    let generic = generic_instance(scheme, law.alphabet(), kind);
    let assignment: BTreeMap<Sym, Term> = generic
        .iter()
        .map(|(v, g)| (v.clone(), Term::Var(g.leaf.clone())))
        .collect();
    let (lhs, rhs) = instantiate_scheme(scheme, &assignment)?;
    let tokens: Vec<Sym> = scheme.metavars.iter().map(|v| generic[v].output.clone()).collect();
    let branches: Vec<BTreeMap<Sym, bool>> = match kind {
        OutputKind::Rational => vec![BTreeMap::new()],
        OutputKind::Bool => (0..1u64 << tokens.len())
            .map(|bits| {
                tokens
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.clone(), bits >> (tokens.len() - 1 - i) & 1 == 1))
                    .collect()
            })
            .collect(),
    };
    Ok(branches
        .into_iter()
        .map(|branch| {
            let leaves = generic
                .values()
                .map(|g| {
                    let mut step = g.step.clone();
                    step.output = step.output.assign_bools(&branch);
                    (g.leaf.clone(), step)
                })
                .collect();
            Instance {
                branch,
                tokens: tokens.clone(),
                lhs: lhs.clone(),
                rhs: rhs.clone(),
                leaves,
            }
        })
        .collect())
}

/// Compares the two λ-results of an instance by relation lifting.
pub fn judge(th: &Theory, l: &Step<Term>, r: &Step<Term>) -> Result<(Verdict, Option<Witness>)> {
    let show = |t: &Term| th.signature().show(t).to_string();
    if l.output != r.output {
        let witness = Witness {
            letter: None,
            lhs: l.output.to_string(),
            rhs: r.output.to_string(),
            equiv: None,
        };
        return Ok((Verdict::Fails, Some(witness)));
    }
    let mut verdict = Verdict::Holds;
    let mut witness = None;
    for (a, lt) in &l.next {
        let rt = r
            .next
            .get(a)
            .ok_or_else(|| Error::AlphabetMismatch(format!("no successor at `{a}`")))?;
        let e = th.equiv(lt, rt)?;
        let here = match e {
            Equiv::Equal => Verdict::Holds,
            Equiv::Distinct => Verdict::Fails,
            Equiv::Unknown => Verdict::Unknown,
        };
        if here != Verdict::Holds && verdict != Verdict::Fails && here != verdict {
            verdict = here;
            witness = Some(Witness {
                letter: Some(a.to_string()),
                lhs: show(lt),
                rhs: show(rt),
                equiv: Some(e),
            });
        }
    }
    Ok((verdict, witness))
}

pub fn check_scheme(th: &Theory, law: &DistLaw, scheme: &EquationScheme) -> Result<Vec<CaseReport>> {
    let show = |t: &Term| th.signature().show(t).to_string();
    let show_step = |s: &Step<Term>| s.render(|t| show(t));
    let mut out = Vec::new();
    for inst in instances(law, scheme)? {
        let ((_, ls), (_, rs)) = inst.run(law)?;
        let (verdict, witness) = judge(th, &ls, &rs)?;
        out.push(CaseReport {
            scheme: scheme.name.to_string(),
            branch: inst.label(),
            verdict,
            lhs: show(&inst.lhs),
            rhs: show(&inst.rhs),
            lhs_step: show_step(&ls),
            rhs_step: show_step(&rs),
            witness,
        });
    }
    Ok(out)
}

/// Checks every scheme of the theory, in declaration order.
pub fn check_preservation(th: &Theory, law: &DistLaw) -> Result<PreservationReport> {
    if th.signature() != law.signature() {
        return Err(Error::SignatureMismatch(
            "theory and rules are over different signatures".into(),
        ));
    }
    let mut cases = Vec::new();
    for s in th.schemes() {
        cases.extend(check_scheme(th, law, s)?);
    }
    let verdict = cases.iter().fold(Verdict::Holds, |v, c| v.combine(c.verdict));
    Ok(PreservationReport { verdict, cases })
}
