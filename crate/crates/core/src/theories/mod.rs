//! Equational theories over a signature and the quotient monad they induce,
//! realised by canonical normal forms.
//!
//! `normalize` plays the role of the quotient map `q: T ⇒ T'` and
//! `representative` picks a term for each class. Two theories are built in
//! (commutative semirings with rational scalars, idempotent semirings) and
//! decide their congruence exactly; generic theories fall back to a bounded
//! rewrite search that answers `Unknown` rather than guess.

mod generic;
mod semiring;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::sym::Sym;
use crate::terms::{substitute, Signature, Term};

pub use generic::{FiniteModel, SearchLimits};
pub use semiring::{Atom, Word};

/// A pair of terms over metavariables, read as `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationScheme {
    pub name: Sym,
    pub metavars: Vec<Sym>,
    pub lhs: Term,
    pub rhs: Term,
}

impl EquationScheme {
    pub fn new(name: impl Into<Sym>, metavars: &[&str], lhs: Term, rhs: Term) -> Result<Self> {
        let scheme = EquationScheme {
            name: name.into(),
            metavars: metavars.iter().map(|&m| Sym::new(m)).collect(),
            lhs,
            rhs,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Metavariables are the variables of both sides, in order of first occurrence.
    pub fn from_sides(name: impl Into<Sym>, lhs: Term, rhs: Term) -> Self {
        let mut metavars: Vec<Sym> = Vec::new();
        for side in [&lhs, &rhs] {
            collect_in_order(side, &mut metavars);
        }
        EquationScheme {
            name: name.into(),
            metavars,
            lhs,
            rhs,
        }
    }

    fn validate(&self) -> Result<()> {
        for v in self.lhs.vars().iter().chain(self.rhs.vars().iter()) {
            if !self.metavars.contains(v) {
                return Err(Error::UnboundVariable(v.clone()));
            }
        }
        Ok(())
    }
}

fn collect_in_order(t: &Term, out: &mut Vec<Sym>) {
    match t {
        Term::Var(x) => {
            if !out.contains(x) {
                out.push(x.clone());
            }
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_in_order(a, out)),
        Term::Indexed(..) => {}
    }
}

/// The instance of a scheme at an assignment of its metavariables.
pub fn instantiate_scheme(scheme: &EquationScheme, assignment: &BTreeMap<Sym, Term>) -> Result<(Term, Term)> {
    if let Some(v) = scheme.metavars.iter().find(|v| !assignment.contains_key(*v)) {
        return Err(Error::UnboundVariable(v.clone()));
    }
    Ok((substitute(&scheme.lhs, assignment)?, substitute(&scheme.rhs, assignment)?))
}

/// Which symbols play the semiring roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemiringRoles {
    pub plus: Sym,
    pub times: Sym,
    pub zero: Option<Sym>,
    pub one: Option<Sym>,
    /// Indexed family embedding the rationals (commutative semirings only).
    pub scalar: Option<Sym>,
}

impl SemiringRoles {
    /// Defaults: `+`, then `*` or `.`, nullary `0`/`1` if declared, the only family if unique.
    pub fn infer(sig: &Signature) -> Result<Self> {
        let plus = Sym::new("+");
        let times = ["*", ".", "×", "·"]
            .iter()
            .find(|s| sig.arity(s) == Some(2))
            .map(|s| Sym::new(*s))
            .unwrap_or_else(|| Sym::new("*"));
        let nullary = |s: &str| (sig.arity(s) == Some(0)).then(|| Sym::new(s));
        let scalar = match sig.families() {
            [only] => Some(only.name.clone()),
            _ => None,
        };
        Ok(SemiringRoles {
            plus,
            times,
            zero: nullary("0"),
            one: nullary("1"),
            scalar,
        })
    }

    fn validate(&self, sig: &Signature, idempotent: bool) -> Result<()> {
        for s in [&self.plus, &self.times] {
            if sig.arity(s) != Some(2) {
                return Err(Error::InvalidTheory(format!("`{s}` must be a binary symbol")));
            }
        }
        for s in [&self.zero, &self.one].into_iter().flatten() {
            if sig.arity(s) != Some(0) {
                return Err(Error::InvalidTheory(format!("`{s}` must be a constant")));
            }
        }
        if let Some(f) = &self.scalar {
            if idempotent {
                return Err(Error::InvalidTheory("idempotent semirings have no scalar family".into()));
            }
            if sig.family(f).is_none() {
                return Err(Error::InvalidTheory(format!("`{f}` is not a declared family")));
            }
        }
        let has_units = self.scalar.is_some() || (self.zero.is_some() && self.one.is_some());
        if !has_units {
            return Err(Error::InvalidTheory(
                "a semiring theory needs 0 and 1 (or a scalar family)".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn zero_term(&self) -> Term {
        match (&self.scalar, &self.zero) {
            (Some(f), _) => Term::Indexed(f.clone(), Poly::zero()),
            (None, Some(z)) => Term::constant(z.clone()),
            (None, None) => unreachable!("validated"),
        }
    }

    pub(crate) fn one_term(&self) -> Term {
        match (&self.scalar, &self.one) {
            (Some(f), _) => Term::Indexed(f.clone(), Poly::one()),
            (None, Some(o)) => Term::constant(o.clone()),
            (None, None) => unreachable!("validated"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryKind {
    CommutativeSemiring(SemiringRoles),
    IdempotentSemiring(SemiringRoles),
    Generic,
}

impl TheoryKind {
    pub fn is_builtin(&self) -> bool {
        !matches!(self, TheoryKind::Generic)
    }
}

/// A canonical (builtin) or chosen (generic) representative of a congruence class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormalForm {
    /// Polynomial over variables, free constants and scalar tokens.
    Poly(Poly<Atom>),
    /// Finite language over variables and free constants.
    Words(std::collections::BTreeSet<Word>),
    Term(Term),
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalForm::Poly(p) => write!(f, "{p}"),
            NormalForm::Words(ws) => {
                f.write_str("{")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("}")
            }
            NormalForm::Term(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Equiv {
    Equal,
    Distinct,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    signature: Signature,
    schemes: Vec<EquationScheme>,
    kind: TheoryKind,
    model: Option<FiniteModel>,
    limits: SearchLimits,
}

impl Theory {
    pub fn commutative_semiring(signature: Signature, roles: SemiringRoles) -> Result<Self> {
        roles.validate(&signature, false)?;
        let schemes = semiring::commutative_schemes(&roles);
        Ok(Theory {
            signature,
            schemes,
            kind: TheoryKind::CommutativeSemiring(roles),
            model: None,
            limits: SearchLimits::default(),
        })
    }

    pub fn idempotent_semiring(signature: Signature, roles: SemiringRoles) -> Result<Self> {
        roles.validate(&signature, true)?;
        let schemes = semiring::idempotent_schemes(&roles);
        Ok(Theory {
            signature,
            schemes,
            kind: TheoryKind::IdempotentSemiring(roles),
            model: None,
            limits: SearchLimits::default(),
        })
    }

    pub fn generic(signature: Signature, schemes: Vec<EquationScheme>, model: Option<FiniteModel>) -> Result<Self> {
        for s in &schemes {
            s.validate()?;
            signature.check(&s.lhs).and(signature.check(&s.rhs)).map_err(|e| {
                Error::InvalidTheory(format!("equation `{}`: {e}", s.name))
            })?;
        }
        if let Some(m) = &model {
            m.validate(&signature, &schemes)?;
        }
        Ok(Theory {
            signature,
            schemes,
            kind: TheoryKind::Generic,
            model,
            limits: SearchLimits::default(),
        })
    }

    /// No equations: `q` is the identity.
    pub fn free(signature: Signature) -> Self {
        Theory {
            signature,
            schemes: Vec::new(),
            kind: TheoryKind::Generic,
            model: None,
            limits: SearchLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: SearchLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn schemes(&self) -> &[EquationScheme] {
        &self.schemes
    }

    pub fn kind(&self) -> &TheoryKind {
        &self.kind
    }

    pub fn model(&self) -> Option<&FiniteModel> {
        self.model.as_ref()
    }

    pub fn limits(&self) -> SearchLimits {
        self.limits
    }

    /// The quotient map `q` on a single term.
    pub fn normalize(&self, t: &Term) -> Result<NormalForm> {
        self.signature
            .check(t)
            .map_err(|_| Error::NotInTheorySignature(first_foreign(&self.signature, t)))?;
        match &self.kind {
            TheoryKind::CommutativeSemiring(r) => semiring::to_poly(r, t).map(NormalForm::Poly),
            TheoryKind::IdempotentSemiring(r) => semiring::to_words(r, t).map(NormalForm::Words),
            TheoryKind::Generic => Ok(NormalForm::Term(generic::least_in_class(&self.schemes, t, self.limits))),
        }
    }

    /// A term whose normal form is `nf`.
    pub fn representative(&self, nf: &NormalForm) -> Term {
        match (&self.kind, nf) {
            (TheoryKind::CommutativeSemiring(r), NormalForm::Poly(p)) => semiring::poly_term(r, p, false),
            (TheoryKind::IdempotentSemiring(r), NormalForm::Words(ws)) => semiring::words_term(r, ws, false),
            (_, NormalForm::Term(t)) => t.clone(),
            (kind, nf) => panic!("normal form {nf} does not belong to a {kind:?} theory"),
        }
    }

    /// Further terms in the class of `nf`, used to spot-check independence of
    /// the chosen representative.
    pub fn variants(&self, nf: &NormalForm) -> Vec<Term> {
        let rep = self.representative(nf);
        match (&self.kind, nf) {
            (TheoryKind::CommutativeSemiring(r), NormalForm::Poly(p)) => vec![
                semiring::poly_term(r, p, true),
                Term::bin(r.plus.clone(), rep, r.zero_term()),
            ],
            (TheoryKind::IdempotentSemiring(r), NormalForm::Words(ws)) => vec![
                semiring::words_term(r, ws, true),
                Term::bin(r.plus.clone(), rep.clone(), rep),
            ],
            _ => generic::class_members(&self.schemes, &rep, self.limits, 8)
                .into_iter()
                .filter(|t| t != &rep)
                .collect(),
        }
    }

    pub fn equiv(&self, t1: &Term, t2: &Term) -> Result<Equiv> {
        if self.kind.is_builtin() {
            return Ok(if self.normalize(t1)? == self.normalize(t2)? {
                Equiv::Equal
            } else {
                Equiv::Distinct
            });
        }
        for t in [t1, t2] {
            self.signature
                .check(t)
                .map_err(|_| Error::NotInTheorySignature(first_foreign(&self.signature, t)))?;
        }
        Ok(generic::search_equiv(&self.schemes, self.model.as_ref(), t1, t2, self.limits))
    }

    /// Equivalence of normal forms, exact for builtins.
    pub fn equiv_nf(&self, a: &NormalForm, b: &NormalForm) -> Result<Equiv> {
        if a == b {
            return Ok(Equiv::Equal);
        }
        if self.kind.is_builtin() {
            return Ok(Equiv::Distinct);
        }
        self.equiv(&self.representative(a), &self.representative(b))
    }

    /// Multiplication of the quotient monad on a term whose leaves are normal forms.
    pub fn quotient_mu(&self, outer: &Term, leaves: &BTreeMap<Sym, NormalForm>) -> Result<NormalForm> {
        let reps: BTreeMap<Sym, Term> = leaves
            .iter()
            .map(|(x, nf)| (x.clone(), self.representative(nf)))
            .collect();
        self.normalize(&substitute(outer, &reps)?)
    }

    /// The unit of the quotient monad.
    pub fn unit(&self, x: &Sym) -> NormalForm {
        self.normalize(&Term::Var(x.clone())).expect("variables are always in the theory")
    }
}

fn first_foreign(sig: &Signature, t: &Term) -> Sym {
    match t {
        Term::Var(x) => x.clone(),
        Term::App(f, args) => {
            if sig.arity(f) != Some(args.len()) {
                f.clone()
            } else {
                args.iter()
                    .find(|a| sig.check(a).is_err())
                    .map(|a| first_foreign(sig, a))
                    .unwrap_or_else(|| f.clone())
            }
        }
        Term::Indexed(f, _) => f.clone(),
    }
}
