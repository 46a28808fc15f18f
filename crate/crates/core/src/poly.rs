//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Monomials are kept in graded lexicographic order and zero coefficients are
//! never stored, so structural equality of two `Poly` values is equality of
//! the polynomials they denote.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::sym::Sym;

pub type Rational = BigRational;

/// Parses `n`, `-n` or `n/d`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let q = match body.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Rational::new(n.trim().parse().ok()?, d)
        }
        None => Rational::from_integer(body.parse().ok()?),
    };
    Some(if neg { -q } else { q })
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A power product `a1^e1 * ... * an^en`, atoms strictly increasing, exponents > 0.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial<A>(Vec<(A, u32)>);

impl<A: Ord + Clone> Monomial<A> {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: A) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(A, u32)] {
        &self.0
    }

    /// Atoms with multiplicity, in order.
    pub fn atoms(&self) -> impl Iterator<Item = &A> {
        self.0
            .iter()
            .flat_map(|(a, e)| std::iter::repeat(a).take(*e as usize))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Splits into (factors satisfying `keep`, the rest).
    pub fn partition(&self, keep: impl Fn(&A) -> bool) -> (Self, Self) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().cloned().partition(|(x, _)| keep(x));
        (Monomial(a), Monomial(b))
    }
}

impl<A: Ord> PartialOrd for Monomial<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A: Ord> Ord for Monomial<A> {
    // graded lexicographic
    fn cmp(&self, other: &Self) -> Ordering {
        let d1: u32 = self.0.iter().map(|(_, e)| e).sum();
        let d2: u32 = other.0.iter().map(|(_, e)| e).sum();
        d1.cmp(&d2).then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly<A: Ord> {
    terms: BTreeMap<Monomial<A>, Rational>,
}

impl<A: Ord> PartialOrd for Poly<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A: Ord> Ord for Poly<A> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.terms.iter().cmp(other.terms.iter())
    }
}

impl<A: Ord + Clone> Poly<A> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        let mut p = Self::zero();
        if !q.is_zero() {
            p.terms.insert(Monomial::one(), q);
        }
        p
    }

    pub fn atom(a: A) -> Self {
        let mut p = Self::zero();
        p.terms.insert(Monomial::atom(a), Rational::one());
        p
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial<A>, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if this polynomial has no atoms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<A>, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn atoms(&self) -> std::collections::BTreeSet<A> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    fn add_term(&mut self, m: Monomial<A>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * q))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Replaces every atom by a polynomial over a (possibly different) atom type.
    pub fn substitute<B: Ord + Clone>(&self, f: &mut impl FnMut(&A) -> Poly<B>) -> Poly<B> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut prod = Poly::constant(c.clone());
            for (a, e) in &m.0 {
                prod = &prod * &f(a).pow(*e);
            }
            out = &out + &prod;
        }
        out
    }

    pub fn map_atoms<B: Ord + Clone>(&self, mut f: impl FnMut(&A) -> B) -> Poly<B> {
        self.substitute(&mut |a| Poly::atom(f(a)))
    }

    /// Evaluates with every atom bound to a rational; `None` if an atom is unbound.
    pub fn eval(&self, env: &impl Fn(&A) -> Option<Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (a, e) in &m.0 {
                let x = env(a)?;
                for _ in 0..*e {
                    v *= &x;
                }
            }
            total += v;
        }
        Some(total)
    }
}

impl<A: Ord + Clone> Add for &Poly<A> {
    type Output = Poly<A>;
    fn add(self, rhs: &Poly<A>) -> Poly<A> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<A: Ord + Clone> Sub for &Poly<A> {
    type Output = Poly<A>;
    fn sub(self, rhs: &Poly<A>) -> Poly<A> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<A: Ord + Clone> Neg for &Poly<A> {
    type Output = Poly<A>;
    fn neg(self) -> Poly<A> {
        self.scale(&-Rational::one())
    }
}

impl<A: Ord + Clone> Mul for &Poly<A> {
    type Output = Poly<A>;
    fn mul(self, rhs: &Poly<A>) -> Poly<A> {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl<A: Ord + Clone> Add for Poly<A> {
    type Output = Poly<A>;
    fn add(self, rhs: Poly<A>) -> Poly<A> {
        &self + &rhs
    }
}

impl<A: Ord + Clone> Mul for Poly<A> {
    type Output = Poly<A>;
    fn mul(self, rhs: Poly<A>) -> Poly<A> {
        &self * &rhs
    }
}

impl<A: Ord + Clone + fmt::Display> fmt::Display for Monomial<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, e) in &self.0 {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}^{e}")?;
            }
        }
        Ok(())
    }
}

impl<A: Ord + Clone + fmt::Display> fmt::Display for Poly<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&abs))?;
            }
        }
        Ok(())
    }
}

/// Polynomial over symbolic scalar tokens: the index of an indexed constant
/// and the symbolic value of a rational output.
pub type Scalar = Poly<Sym>;

impl Scalar {
    pub fn from_rational(q: Rational) -> Self {
        Poly::constant(q)
    }

    pub fn from_int(n: i64) -> Self {
        Poly::constant(rat(n))
    }

    pub fn token(s: impl Into<Sym>) -> Self {
        Poly::atom(s.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Scalar {
        Scalar::token(s)
    }

    #[test]
    fn canonical_after_cancellation() {
        let a = &t("a") + &t("b");
        let b = &a - &t("b");
        assert_eq!(b, t("a"));
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn product_commutes() {
        let p = &(&t("a") + &Scalar::from_int(2)) * &t("b");
        let q = &t("b") * &(&Scalar::from_int(2) + &t("a"));
        assert_eq!(p, q);
        assert_eq!(p.to_string(), "2*b + a*b");
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("1/2"), Some(Rational::new(1.into(), 2.into())));
        assert_eq!(parse_rational("-3"), Some(rat(-3)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn graded_order_prints_low_degree_first() {
        let p = &(&t("x") * &t("x")) + &(&t("y") + &Scalar::from_int(1));
        assert_eq!(p.to_string(), "1 + y + x^2");
    }

    #[test]
    fn substitution_evaluates() {
        let p = &(&t("x") * &t("y")) + &t("x");
        let v = p.eval(&|s: &Sym| match s.as_str() {
            "x" => Some(rat(3)),
            "y" => Some(rat(2)),
            _ => None,
        });
        assert_eq!(v, Some(rat(9)));
    }
}
