//! Context-free grammars in Greibach normal form as coalgebras
//! `X → 2 × P_ω(X*)^A`, solved through the idempotent-semiring quotient.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::behaviour::{Alphabet, OutExpr, Output, OutputAlgebra, OutputKind, Step};
use crate::error::{Error, Result};
use crate::gsos::{ArgBinding, DistLaw, Format, GsosSpec, NextExpr, Pattern, Rule, RuleHead};
use crate::solver::{operational_model, unfold, CorecSystem};
use crate::sym::Sym;
use crate::terms::{Signature, Term};
use crate::theories::{NormalForm, SemiringRoles, Theory, TheoryKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnfGrammar {
    nonterminals: Vec<Sym>,
    alphabet: Alphabet,
    empty: BTreeMap<Sym, bool>,
    prods: BTreeMap<(Sym, Sym), BTreeSet<Vec<Sym>>>,
    start: Term,
}

impl GnfGrammar {
    /// `prods` lists `x -a-> w`; pairs without productions get the empty set.
    pub fn new(
        nonterminals: Vec<Sym>,
        alphabet: Alphabet,
        empty: BTreeMap<Sym, bool>,
        prods: Vec<(Sym, Sym, Vec<Sym>)>,
        start: Term,
    ) -> Result<Self> {
        let known: BTreeSet<&Sym> = nonterminals.iter().collect();
        if known.len() != nonterminals.len() {
            return Err(Error::InvalidGrammar("nonterminal declared twice".into()));
        }
        if let Some(x) = empty.keys().find(|x| !known.contains(x)) {
            return Err(Error::InvalidGrammar(format!("`{x}` is not a nonterminal")));
        }
        let mut table: BTreeMap<(Sym, Sym), BTreeSet<Vec<Sym>>> = nonterminals
            .iter()
            .flat_map(|x| alphabet.letters().iter().map(move |a| ((x.clone(), a.clone()), BTreeSet::new())))
            .collect();
        for (x, a, w) in prods {
            if !known.contains(&x) {
                return Err(Error::InvalidGrammar(format!("`{x}` is not a nonterminal")));
            }
            if !alphabet.contains(&a) {
                return Err(Error::InvalidGrammar(format!("`{a}` is not a letter")));
            }
            if let Some(y) = w.iter().find(|y| !known.contains(y)) {
                return Err(Error::InvalidGrammar(format!("`{y}` is not a nonterminal")));
            }
            table.get_mut(&(x, a)).expect("total").insert(w);
        }
        if let Some(y) = start.vars().into_iter().find(|y| !known.contains(y)) {
            return Err(Error::InvalidGrammar(format!("start mentions unknown `{y}`")));
        }
        Ok(GnfGrammar {
            nonterminals,
            alphabet,
            empty,
            prods: table,
            start,
        })
    }

    pub fn nonterminals(&self) -> &[Sym] {
        &self.nonterminals
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn start(&self) -> &Term {
        &self.start
    }

    /// `o(x)`: whether `x` derives the empty word.
    pub fn nullable(&self, x: &str) -> bool {
        self.empty.get(x).copied().unwrap_or(false)
    }

    /// `t(x)(a)`.
    pub fn productions(&self, x: &str, a: &str) -> &BTreeSet<Vec<Sym>> {
        &self.prods[&(Sym::new(x), Sym::new(a))]
    }

    pub fn with_start(&self, start: Term) -> Result<Self> {
        if let Some(y) = start.vars().into_iter().find(|y| !self.nonterminals.contains(y)) {
            return Err(Error::InvalidGrammar(format!("start mentions unknown `{y}`")));
        }
        Ok(GnfGrammar { start, ..self.clone() })
    }

    /// The standard rule table and theory over `0, 1, +, .`.
    pub fn system(&self) -> Result<CorecSystem> {
        let (law, th) = standard_law(&self.alphabet);
        to_corec(self, &law, &th)
    }

    pub fn member(&self, w: &[Sym]) -> Result<bool> {
        member(&self.system()?, &self.start, w)
    }
}

/// The signature `0, 1, +, .` with the idempotent-semiring theory and the
/// language rules: `+` is union, `.` is concatenation consulting the first
/// argument's output.
pub fn standard_law(alphabet: &Alphabet) -> (DistLaw, Theory) {
    let sig = Signature::simple(&[("0", 0), ("1", 0), ("+", 2), (".", 2)], &[]);
    let roles = SemiringRoles::infer(&sig).expect("semiring signature");
    let th = Theory::idempotent_semiring(sig.clone(), roles).expect("semiring signature");
    let binding = |x: &str| ArgBinding {
        arg: Sym::new(x),
        out: Sym::new(format!("o{x}")),
        deriv: Sym::new(format!("d{x}")),
    };
    let d = |x: &str| Pattern::Deriv(Sym::new(format!("d{x}")), Sym::new("a"));
    let call = |g: &str, xs: &[&str]| OutExpr::Call(Sym::new(g), xs.iter().map(|x| OutExpr::token(*x)).collect());
    let konst = |op: &str, out: i64| Rule {
        head: RuleHead::Op(Sym::new(op)),
        args: Vec::new(),
        out: OutExpr::Num(crate::poly::rat(out)),
        binder: Sym::new("a"),
        next: NextExpr::Term(Pattern::App(Sym::new("0"), Vec::new())),
    };
    let dot = |l: Pattern, r: Pattern| Pattern::App(Sym::new("."), vec![l, r]);
    let plus = |l: Pattern, r: Pattern| Pattern::App(Sym::new("+"), vec![l, r]);
    let rules = vec![
        konst("0", 0),
        konst("1", 1),
        Rule {
            head: RuleHead::Op(Sym::new("+")),
            args: vec![binding("x"), binding("y")],
            out: call("max", &["ox", "oy"]),
            binder: Sym::new("a"),
            next: NextExpr::Term(plus(d("x"), d("y"))),
        },
        Rule {
            head: RuleHead::Op(Sym::new(".")),
            args: vec![binding("x"), binding("y")],
            out: call("min", &["ox", "oy"]),
            binder: Sym::new("a"),
            next: NextExpr::Case {
                token: Sym::new("ox"),
                zero: Box::new(NextExpr::Term(dot(d("x"), Pattern::Arg(Sym::new("y"))))),
                one: Box::new(NextExpr::Term(plus(dot(d("x"), Pattern::Arg(Sym::new("y"))), d("y")))),
            },
        },
    ];
    let spec = GsosSpec::new(Format::Gsos, rules).expect("well-formed rules");
    let law = DistLaw::new(sig, alphabet.clone(), OutputAlgebra::new(OutputKind::Bool), spec).expect("well-formed law");
    (law, th)
}

fn roles(th: &Theory) -> Result<&SemiringRoles> {
    match th.kind() {
        TheoryKind::IdempotentSemiring(r) => Ok(r),
        _ => Err(Error::InvalidGrammar("grammars need an idempotent-semiring theory".into())),
    }
}

fn length_lex(a: &Vec<Sym>, b: &Vec<Sym>) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// `φ(x) = ⟨o(x), a ↦ Σ_{w ∈ t(x)(a)} w⟩` with right-nested sums and products
/// and summands in length-lexicographic order.
pub fn to_corec(g: &GnfGrammar, law: &DistLaw, th: &Theory) -> Result<CorecSystem> {
    let r = roles(th)?;
    if law.alphabet() != &g.alphabet {
        return Err(Error::AlphabetMismatch("grammar and rules use different alphabets".into()));
    }
    if let Some(x) = g.nonterminals.iter().find(|x| law.signature().op(x).is_some()) {
        return Err(Error::InvalidGrammar(format!("nonterminal `{x}` clashes with an operation")));
    }
    let product = |w: &[Sym]| -> Term {
        match w.split_last() {
            None => r.one_term(),
            Some((last, init)) => init
                .iter()
                .rev()
                .fold(Term::Var(last.clone()), |acc, y| Term::bin(r.times.clone(), Term::Var(y.clone()), acc)),
        }
    };
    let mut phi = Vec::new();
    for x in &g.nonterminals {
        let mut next = BTreeMap::new();
        for a in g.alphabet.letters() {
            let mut ws: Vec<&Vec<Sym>> = g.prods[&(x.clone(), a.clone())].iter().collect();
            ws.sort_by(|u, v| length_lex(u, v));
            let sum = match ws.split_last() {
                None => r.zero_term(),
                Some((last, init)) => init
                    .iter()
                    .rev()
                    .fold(product(last), |acc, w| Term::bin(r.plus.clone(), product(w), acc)),
            };
            next.insert(a.clone(), sum);
        }
        phi.push((x.clone(), Step::new(Output::bool(g.nullable(x)), next)));
    }
    CorecSystem::new(law.clone(), phi, Some(th.clone()))
}

/// Whether the language of `start` contains `w`.
pub fn member(sys: &CorecSystem, start: &Term, w: &[Sym]) -> Result<bool> {
    let (out, _) = unfold(sys, start, w)?;
    out.as_bool()
        .ok_or_else(|| Error::Output(format!("membership output {out} is not a bit")))
}

/// Membership by derivatives of finite languages over the nonterminals,
/// without rules or normal forms.
pub fn member_direct(g: &GnfGrammar, w: &[Sym]) -> Result<bool> {
    let mut state = start_language(&g.start)?;
    for a in w {
        let mut next = BTreeSet::new();
        for u in &state {
            derive(g, u, a, &mut next);
        }
        state = next;
    }
    Ok(state.iter().any(|u| u.iter().all(|y| g.nullable(y))))
}

fn derive(g: &GnfGrammar, u: &[Sym], a: &Sym, out: &mut BTreeSet<Vec<Sym>>) {
    let Some((head, rest)) = u.split_first() else {
        return;
    };
    if let Some(ws) = g.prods.get(&(head.clone(), a.clone())) {
        for w in ws {
            out.insert(w.iter().chain(rest).cloned().collect());
        }
    }
    if g.nullable(head) {
        derive(g, rest, a, out);
    }
}

fn start_language(t: &Term) -> Result<BTreeSet<Vec<Sym>>> {
    Ok(match t {
        Term::Var(x) => [vec![x.clone()]].into(),
        Term::App(f, args) => match (&**f, args.as_slice()) {
            ("0", []) => BTreeSet::new(),
            ("1", []) => [Vec::new()].into(),
            ("+", [l, r]) => start_language(l)?.union(&start_language(r)?).cloned().collect(),
            (".", [l, r]) => {
                let (l, r) = (start_language(l)?, start_language(r)?);
                l.iter()
                    .flat_map(|u| r.iter().map(move |v| u.iter().chain(v).cloned().collect()))
                    .collect()
            }
            _ => return Err(Error::InvalidGrammar(format!("`{f}` is not a language operation"))),
        },
        Term::Indexed(f, _) => return Err(Error::InvalidGrammar(format!("`{f}` is not a language operation"))),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CfgEquiv {
    Equivalent,
    Counterexample(String),
}

/// Joint breadth-first unfolding of two states over normal-form pairs, up to
/// words of length `maxlen`. Returns the length-lexicographically least word
/// on which the outputs differ.
pub fn equiv_upto(sys: &CorecSystem, t1: &Term, t2: &Term, maxlen: usize) -> Result<CfgEquiv> {
    let th = sys
        .theory()
        .ok_or_else(|| Error::InvalidSystem("bounded equivalence needs a theory".into()))?;
    let start = (th.normalize(t1)?, th.normalize(t2)?);
    let mut seen: BTreeSet<(NormalForm, NormalForm)> = [start.clone()].into();
    let mut queue = VecDeque::from([(start, Vec::<Sym>::new())]);
    while let Some(((n1, n2), word)) = queue.pop_front() {
        let s1 = operational_model(sys, &th.representative(&n1))?;
        let s2 = operational_model(sys, &th.representative(&n2))?;
        if s1.output != s2.output {
            return Ok(CfgEquiv::Counterexample(word.iter().map(Sym::as_str).collect()));
        }
        if word.len() == maxlen {
            continue;
        }
        for a in sys.law().alphabet().letters() {
            let pair = (th.normalize(&s1.next[a])?, th.normalize(&s2.next[a])?);
            if seen.insert(pair.clone()) {
                let mut w = word.clone();
                w.push(a.clone());
                queue.push_back((pair, w));
            }
        }
    }
    Ok(CfgEquiv::Equivalent)
}
