//! Bounded equational search for theories without a builtin normaliser.

use std::collections::{BTreeMap, HashSet};

use super::{EquationScheme, Equiv};
use crate::error::{Error, Result};
use crate::sym::Sym;
use crate::terms::{Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Rewrite steps explored from each side.
    pub depth: usize,
    /// Cap on distinct terms visited from each side.
    pub max_visited: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            depth: 5,
            max_visited: 10_000,
        }
    }
}

/// Interpretation of every operation on `{0, .., carrier-1}`. Used only to
/// prove two terms distinct, so it must satisfy every equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteModel {
    carrier: usize,
    tables: BTreeMap<Sym, BTreeMap<Vec<usize>, usize>>,
}

const MAX_ASSIGNMENTS: usize = 100_000;

impl FiniteModel {
    pub fn new(carrier: usize, tables: BTreeMap<Sym, BTreeMap<Vec<usize>, usize>>) -> Self {
        FiniteModel { carrier, tables }
    }

    pub fn carrier(&self) -> usize {
        self.carrier
    }

    pub fn tables(&self) -> &BTreeMap<Sym, BTreeMap<Vec<usize>, usize>> {
        &self.tables
    }

    pub fn eval(&self, t: &Term, env: &BTreeMap<Sym, usize>) -> Option<usize> {
        match t {
            Term::Var(x) => env.get(x).copied(),
            Term::App(f, args) => {
                let vals = args.iter().map(|a| self.eval(a, env)).collect::<Option<Vec<_>>>()?;
                self.tables.get(f)?.get(&vals).copied()
            }
            Term::Indexed(..) => None,
        }
    }

    fn assignments(&self, vars: &[Sym]) -> Option<Vec<BTreeMap<Sym, usize>>> {
        let total = (self.carrier as u128).checked_pow(vars.len() as u32)?;
        if total > MAX_ASSIGNMENTS as u128 {
            return None;
        }
        let mut out = vec![BTreeMap::new()];
        for v in vars {
            out = out
                .into_iter()
                .flat_map(|env| {
                    (0..self.carrier).map(move |c| {
                        let mut e = env.clone();
                        e.insert(v.clone(), c);
                        e
                    })
                })
                .collect();
        }
        Some(out)
    }

    pub(crate) fn validate(&self, sig: &Signature, schemes: &[EquationScheme]) -> Result<()> {
        if self.carrier == 0 {
            return Err(Error::InvalidTheory("model carrier must be non-empty".into()));
        }
        for op in sig.ops() {
            let table = self.tables.get(&op.symbol).ok_or_else(|| {
                Error::InvalidTheory(format!("model does not interpret `{}`", op.symbol))
            })?;
            let expected = self.carrier.pow(op.arity as u32);
            let in_range = table
                .iter()
                .all(|(k, v)| k.len() == op.arity && k.iter().all(|&c| c < self.carrier) && *v < self.carrier);
            if table.len() != expected || !in_range {
                return Err(Error::InvalidTheory(format!(
                    "model table for `{}` is not a total function on the carrier",
                    op.symbol
                )));
            }
        }
        for s in schemes {
            let envs = self.assignments(&s.metavars).ok_or_else(|| {
                Error::InvalidTheory(format!("too many assignments to validate `{}`", s.name))
            })?;
            for env in envs {
                let (l, r) = (self.eval(&s.lhs, &env), self.eval(&s.rhs, &env));
                if l.is_none() || l != r {
                    return Err(Error::InvalidTheory(format!(
                        "model does not satisfy equation `{}`",
                        s.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// True if some assignment evaluates the terms differently.
    pub fn separates(&self, t1: &Term, t2: &Term) -> bool {
        let vars: Vec<Sym> = t1.vars().union(&t2.vars()).cloned().collect();
        let Some(envs) = self.assignments(&vars) else {
            return false;
        };
        envs.iter().any(|env| match (self.eval(t1, env), self.eval(t2, env)) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        })
    }
}

fn matches(pattern: &Term, t: &Term, meta: &[Sym], binding: &mut BTreeMap<Sym, Term>) -> bool {
    match (pattern, t) {
        (Term::Var(v), _) if meta.contains(v) => match binding.get(v) {
            Some(bound) => bound == t,
            None => {
                binding.insert(v.clone(), t.clone());
                true
            }
        },
        (Term::App(f, ps), Term::App(g, ts)) => {
            f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, u)| matches(p, u, meta, binding))
        }
        _ => pattern == t,
    }
}

/// Every term one equation application away from `t`, in either direction.
fn neighbours(schemes: &[EquationScheme], t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    for s in schemes {
        for (from, to) in [(&s.lhs, &s.rhs), (&s.rhs, &s.lhs)] {
            let mut binding = BTreeMap::new();
            if matches(from, t, &s.metavars, &mut binding) && to.vars().iter().all(|v| binding.contains_key(v)) {
                out.push(to.replace_vars(&binding));
            }
        }
    }
    if let Term::App(f, args) = t {
        for (i, a) in args.iter().enumerate() {
            for r in neighbours(schemes, a) {
                let mut new_args = args.clone();
                new_args[i] = r;
                out.push(Term::App(f.clone(), new_args));
            }
        }
    }
    out
}

struct Closure {
    order: Vec<Term>,
    seen: HashSet<Term>,
    complete: bool,
}

fn explore(schemes: &[EquationScheme], t: &Term, limits: SearchLimits) -> Closure {
    let mut c = Closure {
        order: vec![t.clone()],
        seen: HashSet::from([t.clone()]),
        complete: false,
    };
    let mut frontier = vec![t.clone()];
    for _ in 0..limits.depth {
        let mut next = Vec::new();
        for u in &frontier {
            for r in neighbours(schemes, u) {
                if c.seen.insert(r.clone()) {
                    if c.seen.len() > limits.max_visited {
                        return c;
                    }
                    c.order.push(r.clone());
                    next.push(r);
                }
            }
        }
        if next.is_empty() {
            c.complete = true;
            return c;
        }
        frontier = next;
    }
    c.complete = frontier
        .iter()
        .all(|u| neighbours(schemes, u).iter().all(|r| c.seen.contains(r)));
    c
}

pub(super) fn least_in_class(schemes: &[EquationScheme], t: &Term, limits: SearchLimits) -> Term {
    if schemes.is_empty() {
        return t.clone();
    }
    explore(schemes, t, limits)
        .order
        .into_iter()
        .min_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)))
        .expect("closure contains the start term")
}

pub(super) fn class_members(schemes: &[EquationScheme], t: &Term, limits: SearchLimits, k: usize) -> Vec<Term> {
    let mut c = explore(schemes, t, limits).order;
    c.truncate(k);
    c
}

pub(super) fn search_equiv(
    schemes: &[EquationScheme],
    model: Option<&FiniteModel>,
    t1: &Term,
    t2: &Term,
    limits: SearchLimits,
) -> Equiv {
    if t1 == t2 {
        return Equiv::Equal;
    }
    let c1 = explore(schemes, t1, limits);
    if c1.seen.contains(t2) {
        return Equiv::Equal;
    }
    let c2 = explore(schemes, t2, limits);
    if c2.seen.iter().any(|u| c1.seen.contains(u)) {
        return Equiv::Equal;
    }
    // A fully enumerated class that misses the other term is a proof of distinctness.
    if c1.complete || c2.complete {
        return Equiv::Distinct;
    }
    match model {
        Some(m) if m.separates(t1, t2) => Equiv::Distinct,
        _ => Equiv::Unknown,
    }
}
