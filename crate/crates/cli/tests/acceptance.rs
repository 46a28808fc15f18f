use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use distlaw::behaviour::{OutExpr, Output, OutputKind};
use distlaw::dsl::{parse_term, Workbench};
use distlaw::theories::Equiv;
use distlaw::{enumerate_terms, extend_lambda, substitute, GnfGrammar, Rational, Step, Sym, Term};
use distlaw_cli::{run_command, Command, Flags};
use serde_json::Value;

type Outcome = Result<String, String>;

fn load(name: &str) -> Workbench {
    Workbench::load(format!("{}/../core/dsl/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn term(wb: &Workbench, src: &str) -> Term {
    parse_term(wb.signature.as_ref().unwrap(), src).unwrap()
}

fn show(wb: &Workbench, t: &Term) -> String {
    wb.signature.as_ref().unwrap().show(t).to_string()
}

fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() || c == '_' || c == '/' {
            cur.push(c);
            continue;
        }
        if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn without_parens(s: &str) -> Vec<String> {
    tokens(s).into_iter().filter(|t| t != "(" && t != ")").collect()
}

/// Transcribes a displayed derivation into workbench notation.
fn transcribe(s: &str, names: &[(&str, &str)]) -> String {
    let s = s.replace('×', "*").replace('·', "*");
    tokens(&s)
        .into_iter()
        .map(|t| names.iter().find(|(p, _)| *p == t).map_or(t.clone(), |(_, o)| o.to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `⟨out, t ↦ next⟩` split into its output and its single successor.
fn split_step(s: &str) -> (String, String) {
    let inner = s.trim_start_matches('⟨').trim_end_matches('⟩');
    let (out, next) = inner.split_once(", ").unwrap();
    let next = next.split_once(" ↦ ").unwrap().1;
    (out.to_string(), next.to_string())
}

fn case<'a>(report: &'a Value, scheme: &str) -> Vec<&'a Value> {
    report["cases"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["scheme"] == scheme)
        .collect()
}

fn json_flags() -> Flags {
    Flags { json: true, ..Flags::default() }
}

fn stream_preservation() -> Outcome {
    let wb = load("stream.dsl");
    let t = Instant::now();
    let out = run_command(&wb, Command::CheckPreservation, &Flags { json: true, trace: true, ..Flags::default() });
    let elapsed = t.elapsed();
    let report: Value = serde_json::from_str(&out.render(true)).unwrap();
    ensure(out.status == 0, || format!("exit {}", out.status))?;
    let schemes = report["schemes"].as_array().unwrap();
    ensure(schemes.len() == 10, || format!("{} schemes", schemes.len()))?;
    ensure(schemes.iter().all(|s| s["verdict"] == "Holds"), || format!("{schemes:?}"))?;

    // λ([a]×[b]) = ⟨a·b, [0]×[b] + [0]×X×[0] + [a]×[0]⟩ and λ([a·b]) = ⟨a·b, [0]⟩
    let c = case(&report, "scalar-times")[0];
    let (out_l, next_l) = split_step(c["lhs_step"].as_str().unwrap());
    let (out_r, next_r) = split_step(c["rhs_step"].as_str().unwrap());
    ensure(tokens(&out_r) == tokens(&transcribe("a·b", &[])) && out_l == out_r, || out_r.clone())?;
    let displayed = transcribe("[0] × [b] + [0] × X × [0] + [a] × [0]", &[]);
    ensure(tokens(&next_r) == tokens(&displayed), || format!("{next_r} vs {displayed}"))?;
    ensure(tokens(&next_l) == tokens("[0]"), || next_l.clone())?;

    // λ(⟨a,x⟩ × (⟨b,y⟩ + ⟨c,z⟩)) and λ(⟨a,x⟩ × ⟨b,y⟩ + ⟨a,x⟩ × ⟨c,z⟩)
    let names = [
        ("a", "o_v"),
        ("x", "d_v"),
        ("b", "o_u"),
        ("y", "d_u"),
        ("c", "o_w"),
        ("z", "d_w"),
    ];
    let c = case(&report, "distrib")[0];
    let (out_l, next_l) = split_step(c["lhs_step"].as_str().unwrap());
    let (out_r, next_r) = split_step(c["rhs_step"].as_str().unwrap());
    let lhs_displayed = transcribe("(x × [b+c]) + (x × X × (y+z)) + [a]×(y+z)", &names);
    ensure(without_parens(&next_l) == without_parens(&lhs_displayed), || format!("{next_l} vs {lhs_displayed}"))?;
    ensure(term(&wb, &next_l) == term(&wb, &lhs_displayed), || format!("{next_l} parses apart from {lhs_displayed}"))?;
    let rhs_displayed = transcribe(
        "(x × [b]) + (x × X × y) + ([a]×y) + (x × [c]) + (x × X × z) + ([a]×z)",
        &names,
    );
    ensure(without_parens(&next_r) == without_parens(&rhs_displayed), || format!("{next_r} vs {rhs_displayed}"))?;
    let th = wb.theory.as_ref().unwrap();
    let middle = transcribe(
        "(x × [b+c]) + (x × X × y) + (x × X × z) + ([a]×y) + ([a]×z)",
        &names,
    );
    for (a, b) in [(&next_l, &middle), (&middle, &next_r)] {
        ensure(th.equiv(&term(&wb, a), &term(&wb, b)).unwrap() == Equiv::Equal, || format!("{a} ≁ {b}"))?;
    }
    let out_displayed = show(&wb, &term(&wb, &format!("[{}]", transcribe("a · (b+c)", &names))));
    let out_sum = show(&wb, &term(&wb, &format!("[{}]", transcribe("(a·b) + (a·c)", &names))));
    ensure(format!("[{out_l}]") == out_displayed && out_displayed == out_sum && out_l == out_r, || out_l.clone())?;

    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("10/10 schemes hold, both derivations reproduced, {elapsed:.2?}"))
}

fn non_preservation() -> Outcome {
    let wb = load("three-zeros.dsl");
    let out = run_command(&wb, Command::CheckPreservation, &Flags { json: true, trace: true, ..Flags::default() });
    ensure(out.status == 1, || format!("exit {}", out.status))?;
    let c = case(&out.report, "n1-n2")[0];
    ensure(c["verdict"] == "Fails", || c.to_string())?;
    let w = &c["witness"];
    ensure(w["lhs"] == "n1" && w["rhs"] == "n3" && w["equiv"] == "Distinct", || w.to_string())?;
    ensure(c["lhs_step"] == "⟨0, t ↦ n1⟩" && c["rhs_step"] == "⟨0, t ↦ n3⟩", || c.to_string())?;
    ensure(out.render(false).contains("n1 vs n3"), || "witness not printed".into())?;
    Ok("Fails, witness (n1, n3) Distinct".into())
}

fn convolution_variant() -> Outcome {
    let wb = load("conv-gsos.dsl");
    let out = run_command(&wb, Command::CheckPreservation, &json_flags());
    ensure(out.status == 1, || format!("exit {}", out.status))?;
    let schemes = out.report["schemes"].as_array().unwrap();
    ensure(schemes.len() == 10, || format!("{} schemes", schemes.len()))?;
    for s in schemes {
        let expected = if s["scheme"] == "times-comm" { "Fails" } else { "Holds" };
        ensure(s["verdict"] == expected, || s.to_string())?;
    }
    let c = case(&out.report, "times-comm");
    ensure(c.len() == 1 && c[0]["branch"] == "generic", || format!("{c:?}"))?;
    Ok("9 hold, times-comm fails on the generic instance".into())
}

fn cfg_preservation() -> Outcome {
    let wb = load("cfg.dsl");
    let out = run_command(&wb, Command::CheckPreservation, &Flags { json: true, trace: true, ..Flags::default() });
    ensure(out.status == 0, || format!("exit {}", out.status))?;
    let th = wb.theory.as_ref().unwrap();
    for s in th.schemes() {
        let n = case(&out.report, s.name.as_str()).len();
        ensure(n == 1 << s.metavars.len(), || format!("{}: {n} branches", s.name))?;
    }
    let cases = out.report["cases"].as_array().unwrap();
    ensure(cases.iter().all(|c| c["verdict"] == "Holds"), || "a case fails".into())?;

    // u·(v + w) with ⟨x,o,d⟩, ⟨y,p,e⟩, ⟨z,q,f⟩, split on o
    let names = [
        ("x", "x_u"),
        ("y", "x_v"),
        ("z", "x_w"),
        ("d", "d_u_a"),
        ("e", "d_v_a"),
        ("f", "d_w_a"),
    ];
    let displayed = |s: &str| show(&wb, &term(&wb, &transcribe(&s.replace("(a)", "").replace('·', "."), &names)));
    let successor = |step: &str| -> String {
        let inner = step.trim_start_matches('⟨').trim_end_matches('⟩');
        let a = inner.split(", a ↦ ").nth(1).unwrap();
        a.split(", b ↦ ").next().unwrap().to_string()
    };
    let mut seen = [0, 0];
    for c in case(&out.report, "distrib-left") {
        let branch = c["branch"].as_str().unwrap();
        let o = branch.starts_with("o_u=1");
        let (lhs_next, rhs_next) = if o {
            (
                displayed("d(a) · (y + z) + (e(a) + f(a))"),
                displayed("(d(a) · y + e(a)) + (d(a) · z + f(a))"),
            )
        } else {
            (displayed("d(a) · (y + z)"), displayed("d(a) · y + d(a) · z"))
        };
        let l = successor(c["lhs_step"].as_str().unwrap());
        let r = successor(c["rhs_step"].as_str().unwrap());
        ensure(tokens(&l) == tokens(&lhs_next), || format!("{branch}: {l} vs {lhs_next}"))?;
        if o {
            let ok = th.equiv(&term(&wb, &r), &term(&wb, &rhs_next)).unwrap() == Equiv::Equal;
            ensure(ok && without_parens(&r) == without_parens(&rhs_next), || format!("{branch}: {r} vs {rhs_next}"))?;
        } else {
            ensure(tokens(&r) == tokens(&rhs_next), || format!("{branch}: {r} vs {rhs_next}"))?;
        }
        seen[usize::from(o)] += 1;
    }
    ensure(seen == [4, 4], || format!("{seen:?}"))?;
    let text = run_command(&wb, Command::CheckPreservation, &Flags::default()).text;
    ensure(
        text.contains("distrib-left [o_u=0, o_v=0, o_w=0]: Holds") && text.contains("distrib-left [o_u=1, o_v=0, o_w=0]: Holds"),
        || "branch split not visible".into(),
    )?;
    Ok(format!("{} cases hold, o=0/o=1 split matches", cases.len()))
}

fn convolution(s: &[Rational], t: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::new();
    for n in 0..s.len() {
        let mut acc = Rational::from_integer(0.into());
        for i in 0..=n {
            acc += &s[i] * &t[n - i];
        }
        out.push(acc);
    }
    out
}

fn prefix(wb: &Workbench, state: &str, n: usize) -> Result<Vec<Rational>, String> {
    let out = run_command(wb, Command::Stream, &Flags { json: true, state: Some(state.into()), n: Some(n), ..Flags::default() });
    ensure(out.status == 0, || out.text.clone())?;
    Ok(out.report["prefix"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().parse::<Rational>().unwrap())
        .collect())
}

fn stream_values() -> Outcome {
    let wb = load("stream.dsl");
    let t = Instant::now();
    let int = |k: i64| Rational::from_integer(k.into());
    ensure(prefix(&wb, "X", 4)? == [0, 1, 0, 0].map(int), || "X".into())?;
    for q in ["0", "1", "2", "3", "-1", "1/2"] {
        let a: Rational = q.parse().unwrap();
        let mut expected = vec![int(0); 6];
        expected[0] = a;
        ensure(prefix(&wb, &format!("[{q}]"), 6)? == expected, || format!("[{q}]"))?;
    }
    let ones = vec![int(1); 10];
    let got = prefix(&wb, "ones * ones", 10)?;
    ensure(got == convolution(&ones, &ones), || format!("{got:?}"))?;
    ensure(got[..5] == [1, 2, 3, 4, 5].map(int), || format!("{got:?}"))?;
    let two: Vec<Rational> = (0..10).map(|i| int(if i == 0 { 2 } else { 0 })).collect();
    let sigma = prefix(&wb, "sigma", 10)?;
    let doubled = prefix(&wb, "[2] * sigma", 10)?;
    ensure(doubled == convolution(&two, &sigma), || format!("{doubled:?}"))?;
    ensure(doubled == sigma.iter().map(|x| x * int(2)).collect::<Vec<_>>(), || "not doubled".into())?;
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("prefixes exact, {elapsed:.2?}"))
}

/// Chart recogniser reading the productions of the grammar directly.
fn cyk(g: &GnfGrammar, w: &[Sym]) -> bool {
    fn derives(g: &GnfGrammar, w: &[Sym], x: &Sym, i: usize, j: usize, memo: &mut HashMap<(Sym, usize, usize), bool>) -> bool {
        if let Some(&b) = memo.get(&(x.clone(), i, j)) {
            return b;
        }
        memo.insert((x.clone(), i, j), false);
        let mut ok = i == j && g.nullable(x);
        if !ok && i < j {
            let prods: Vec<Vec<Sym>> = g.productions(x, &w[i]).iter().cloned().collect();
            ok = prods.iter().any(|ys| seq(g, w, ys, i + 1, j, memo));
        }
        memo.insert((x.clone(), i, j), ok);
        ok
    }
    fn seq(g: &GnfGrammar, w: &[Sym], ys: &[Sym], i: usize, j: usize, memo: &mut HashMap<(Sym, usize, usize), bool>) -> bool {
        match ys.split_first() {
            None => i == j,
            Some((y, rest)) => (i..=j).any(|k| derives(g, w, y, i, k, memo) && seq(g, w, rest, k, j, memo)),
        }
    }
    let Term::Var(s) = g.start() else { return false };
    derives(g, w, s, 0, w.len(), &mut HashMap::new())
}

fn words(letters: &[&str], n: usize) -> Vec<Vec<Sym>> {
    let mut all = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<Sym>| {
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

fn cfg_membership() -> Outcome {
    let t = Instant::now();
    let mut total = 0;
    for (name, letters) in [("cfg.dsl", ["a", "b"]), ("parens.dsl", ["(", ")"])] {
        let wb = load(name);
        let g = wb.grammar.as_ref().unwrap();
        let ws = words(&letters, 8);
        ensure(ws.len() == (1 << 9) - 1, || format!("{} words", ws.len()))?;
        for w in &ws {
            let word: String = w.iter().map(Sym::as_str).collect();
            let word = if word.is_empty() { "ε".to_string() } else { word };
            let out = run_command(&wb, Command::CfgMember, &Flags { word: Some(word.clone()), ..Flags::default() });
            let expected = cyk(g, w);
            ensure(out.status == if expected { 0 } else { 1 }, || format!("{name} {word}: exit {}", out.status))?;
            ensure(out.text.trim() == if expected { "1" } else { "0" }, || format!("{name} {word}: {}", out.text))?;
            total += 1;
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("{total} words agree with the chart recogniser, {elapsed:.2?}"))
}

fn mutate_plus(wb: &Workbench) -> Workbench {
    let law = wb.law.as_ref().unwrap();
    let mut rule = law.spec().rule("+").unwrap().clone();
    rule.out = OutExpr::token("ox");
    let law = law.with_spec(law.spec().with_rule(rule).unwrap()).unwrap();
    let mut out = wb.clone();
    out.system = wb.system.as_ref().map(|s| s.with_law(law.clone()).unwrap());
    out.law = Some(law);
    out
}

fn quotient_commutation() -> Outcome {
    let flags = Flags { json: true, max_size: Some(4), depth: Some(4), ..Flags::default() };
    let mut summary = Vec::new();
    for name in ["stream.dsl", "cfg.dsl"] {
        let wb = load(name);
        let out = run_command(&wb, Command::QuotientCommute, &flags);
        let q = &out.report["quotient"];
        let s = &out.report["square"];
        ensure(out.status == 0, || format!("{name}: {}", out.text))?;
        ensure(q["violations"].as_array().unwrap().is_empty() && s["failures"].as_array().unwrap().is_empty(), || name.into())?;
        summary.push(format!("{name}: {} terms/{} probes", q["terms"], q["probes"]));
        let mutated = run_command(&mutate_plus(&wb), Command::QuotientCommute, &flags);
        let v = mutated.report["quotient"]["violations"].as_array().unwrap().len();
        ensure(mutated.status == 1 && v >= 1, || format!("{name}: mutation not caught"))?;
    }
    Ok(format!("zero violations ({}), mutations caught", summary.join(", ")))
}

fn language(ws: impl IntoIterator<Item = String>) -> String {
    let mut ws: Vec<String> = ws.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    ws.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let items: Vec<String> = ws.into_iter().map(|w| if w.is_empty() { "ε".into() } else { w }).collect();
    format!("{{{}}}", items.join(", "))
}

fn algebra_factorisation() -> Outcome {
    let h = 5;
    let wb = load("cfg.dsl");
    let anbn = |from: usize| (from..=h / 2).map(|n| "a".repeat(n) + &"b".repeat(n)).collect::<Vec<_>>();
    let (s, a) = (anbn(0), anbn(1));
    let union = language(s.iter().chain(&a).cloned());
    let concat = language(s.iter().flat_map(|u| a.iter().map(move |v| format!("{u}{v}"))).filter(|w| w.len() <= h));
    for (outer, expected) in [("L + M", union), ("L . M", concat)] {
        let flags = Flags {
            json: true,
            state: Some(outer.into()),
            n: Some(h),
            leaves: vec!["L=S".into(), "M=A".into()],
            ..Flags::default()
        };
        let out = run_command(&wb, Command::AlgebraCheck, &flags);
        ensure(out.status == 0 && out.report["equal"] == true, || out.text.clone())?;
        ensure(out.report["direct"] == expected.as_str(), || format!("{outer}: {} vs {expected}", out.report["direct"]))?;
    }
    let wb = load("stream.dsl");
    let flags = Flags {
        json: true,
        state: Some("[2] * L".into()),
        n: Some(h),
        leaves: vec!["L=sigma".into()],
        ..Flags::default()
    };
    let out = run_command(&wb, Command::AlgebraCheck, &flags);
    ensure(out.status == 0 && out.report["equal"] == true, || out.text.clone())?;
    ensure(out.report["via_normal_form"] == "(2, 2, 2, 2, 2)", || out.text.clone())?;
    Ok(format!("union, concatenation and scalar product agree at horizon {h}"))
}

fn leaves_for(kind: OutputKind, letters: &[Sym], vars: &[Sym]) -> BTreeMap<Sym, Step<Sym>> {
    vars.iter()
        .enumerate()
        .map(|(i, x)| {
            let out = match kind {
                OutputKind::Bool => Output::bool(i % 2 == 0),
                OutputKind::Rational => Output::rational(Rational::from_integer((i as i64 + 2).into())),
            };
            let next = letters.iter().map(|a| (a.clone(), Sym::new(format!("d{x}{a}")))).collect();
            (x.clone(), Step::new(out, next))
        })
        .collect()
}

fn syms(names: &[&str]) -> Vec<Sym> {
    names.iter().map(|s| Sym::new(*s)).collect()
}

fn assignments(vars: &[Sym], terms: &[Term]) -> Vec<BTreeMap<Sym, Term>> {
    let mut out = vec![BTreeMap::new()];
    for y in vars {
        out = out
            .into_iter()
            .flat_map(|m| {
                terms.iter().map(move |s| {
                    let mut m = m.clone();
                    m.insert(y.clone(), s.clone());
                    m
                })
            })
            .collect();
    }
    out
}

fn law_axioms() -> Outcome {
    let mut checked = 0usize;
    for (name, outer_vars) in [("stream.dsl", &["y"][..]), ("conv-gsos.dsl", &["y"][..]), ("cfg.dsl", &["y1", "y2"][..])] {
        let wb = load(name);
        let law = wb.law.as_ref().unwrap();
        let sig = law.signature();
        let kind = law.algebra().kind;
        let xs = syms(&["x1", "x2"]);
        let base = leaves_for(kind, law.alphabet().letters(), &xs);
        for (x, step) in &base {
            let got = extend_lambda(law, &Term::Var(x.clone()), &base).map_err(|e| e.to_string())?;
            ensure(got == (Term::Var(x.clone()), step.map(|s| Term::Var(s.clone()))), || format!("{name}: unit at {x}"))?;
            checked += 1;
        }
        for t in enumerate_terms(sig, &xs, 4) {
            let (first, _) = extend_lambda(law, &t, &base).map_err(|e| e.to_string())?;
            ensure(first == t, || format!("{name}: counit at {}", sig.show(&t)))?;
            checked += 1;
        }
        let ys = syms(outer_vars);
        let outer: Vec<Term> = enumerate_terms(sig, &ys, 3).collect();
        let inner: Vec<Term> = enumerate_terms(sig, &xs, 3).collect();
        for o in &outer {
            for a in assignments(&ys, &inner) {
                let flat = extend_lambda(law, &substitute(o, &a).unwrap(), &base).map_err(|e| e.to_string())?;
                let staged = law
                    .extend_with(o, &mut |y| extend_lambda(law, &a[y], &base))
                    .map_err(|e| e.to_string())?;
                ensure(flat == staged, || format!("{name}: multiplication at {}", sig.show(o)))?;
                checked += 1;
            }
        }
    }
    let mut monad = 0usize;
    for name in ["stream.dsl", "cfg.dsl"] {
        let wb = load(name);
        let th = wb.theory.as_ref().unwrap();
        let sig = th.signature();
        let xy = syms(&["x", "y"]);
        let ab = syms(&["a", "b"]);
        let terms: Vec<Term> = enumerate_terms(sig, &xy, 4).collect();
        let inner: Vec<Term> = enumerate_terms(sig, &ab, 3).step_by(7).take(6).collect();
        let innermost: Vec<Term> = enumerate_terms(sig, &syms(&["c"]), 3).step_by(5).take(4).collect();
        let e = |e: distlaw::Error| e.to_string();
        for t in &terms {
            let nf = th.normalize(t).map_err(e)?;
            let units: BTreeMap<Sym, _> = xy.iter().map(|v| (v.clone(), th.unit(v))).collect();
            ensure(th.quotient_mu(t, &units).map_err(e)? == nf, || format!("{name}: right unit"))?;
            let left: BTreeMap<Sym, _> = [(Sym::new("z"), nf.clone())].into();
            ensure(th.quotient_mu(&Term::var("z"), &left).map_err(e)? == nf, || format!("{name}: left unit"))?;
            monad += 2;
        }
        for t in terms.iter().step_by(3) {
            for s1 in assignments(&xy, &inner).iter().step_by(5) {
                for s2 in assignments(&ab, &innermost) {
                    let s2_nf: BTreeMap<Sym, _> = s2.iter().map(|(k, v)| (k.clone(), th.normalize(v).unwrap())).collect();
                    let inner_first: BTreeMap<Sym, _> = s1
                        .iter()
                        .map(|(k, v)| (k.clone(), th.quotient_mu(v, &s2_nf).unwrap()))
                        .collect();
                    let l = th.quotient_mu(t, &inner_first).map_err(e)?;
                    let r = th.quotient_mu(&substitute(t, s1).unwrap(), &s2_nf).map_err(e)?;
                    ensure(l == r, || format!("{name}: associativity at {}", sig.show(t)))?;
                    monad += 1;
                }
            }
        }
    }
    Ok(format!("{checked} law instances, {monad} monad-law instances"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("stream preservation", stream_preservation),
        ("non-preservation counterexample", non_preservation),
        ("convolution variant", convolution_variant),
        ("context-free preservation", cfg_preservation),
        ("stream values", stream_values),
        ("context-free membership", cfg_membership),
        ("quotient commutation", quotient_commutation),
        ("algebra factorisation", algebra_factorisation),
        ("law axioms", law_axioms),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = t.elapsed();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail} ({elapsed:.2?})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
