#![allow(dead_code)]

use std::collections::BTreeMap;

use distlaw::behaviour::{Output, OutputKind, Step};
use distlaw::dsl::{parse_term, Workbench};
use distlaw::poly::rat;
use distlaw::sym::Sym;
use distlaw::terms::Term;

pub fn load(name: &str) -> Workbench {
    Workbench::load(format!("{}/dsl/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn term(wb: &Workbench, src: &str) -> Term {
    parse_term(wb.signature.as_ref().unwrap(), src).unwrap()
}

pub fn word(s: &str) -> Vec<Sym> {
    s.chars().map(|c| Sym::new(c.to_string())).collect()
}

pub fn words_upto(letters: &[&str], n: usize) -> Vec<Vec<Sym>> {
    let mut all = vec![Vec::new()];
    let mut layer: Vec<Vec<Sym>> = vec![Vec::new()];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |a| {
                    let mut w = w.clone();
                    w.push(Sym::new(*a));
                    w
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

/// A leaf observed with output `out` and successors named by letter.
pub fn leaf(out: Output, next: &[(&str, &str)]) -> Step<Sym> {
    Step::new(out, next.iter().map(|(a, s)| (Sym::new(*a), Sym::new(*s))).collect())
}

pub fn bit(b: bool) -> Output {
    Output::bool(b)
}

pub fn num(n: i64) -> Output {
    Output::rational(rat(n))
}

pub fn token(kind: OutputKind, t: &str) -> Output {
    Output::token(kind, t)
}

pub fn leaves(items: Vec<(&str, Step<Sym>)>) -> BTreeMap<Sym, Step<Sym>> {
    items.into_iter().map(|(x, s)| (Sym::new(x), s)).collect()
}

pub fn term_leaves(items: Vec<(&str, Step<Term>)>) -> BTreeMap<Sym, Step<Term>> {
    items.into_iter().map(|(x, s)| (Sym::new(x), s)).collect()
}
