//! Command dispatch over a loaded [`Workbench`]: every command yields an exit
//! status together with a text report and a JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use distlaw::cfg::{self, CfgEquiv};
use distlaw::dsl::{parse_term, parse_word, Workbench};
use distlaw::gsos::morphism_square_check;
use distlaw::preservation::{check_preservation, Verdict};
use distlaw::solver::{induced_algebra_check, quotient_commute_check, stream_prefix, unfold};
use distlaw::{enumerate_terms, CorecSystem, Error, Step, Sym, Term};
use serde_json::{json, Value};

pub const PASS: i32 = 0;
pub const FAIL: i32 = 1;
pub const UNKNOWN: i32 = 2;
pub const USAGE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckPreservation,
    Run,
    Stream,
    CfgMember,
    CfgEquiv,
    QuotientCommute,
    AlgebraCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::CheckPreservation,
        Command::Run,
        Command::Stream,
        Command::CfgMember,
        Command::CfgEquiv,
        Command::QuotientCommute,
        Command::AlgebraCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckPreservation => "check-preservation",
            Command::Run => "run",
            Command::Stream => "stream",
            Command::CfgMember => "cfg-member",
            Command::CfgEquiv => "cfg-equiv",
            Command::QuotientCommute => "quotient-commute",
            Command::AlgebraCheck => "algebra-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub json: bool,
    /// Include the λ-steps of both sides of every case.
    pub trace: bool,
    pub max_size: Option<usize>,
    pub depth: Option<usize>,
    pub maxlen: Option<usize>,
    pub word: Option<String>,
    pub n: Option<usize>,
    pub state: Option<String>,
    /// Right-hand term of `cfg-equiv`.
    pub against: Option<String>,
    /// `NAME=TERM` leaves of `algebra-check`.
    pub leaves: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: i32,
    pub text: String,
    pub report: Value,
}

impl Outcome {
    /// The report in the format selected by `--json`.
    pub fn render(&self, json: bool) -> String {
        if json {
            serde_json::to_string_pretty(&self.report).expect("reports are plain JSON")
        } else {
            self.text.clone()
        }
    }
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Res<T> = Result<T, Failure>;

pub fn run_command(wb: &Workbench, cmd: Command, flags: &Flags) -> Outcome {
    let result = match cmd {
        Command::CheckPreservation => preservation(wb, flags),
        Command::Run => run(wb, flags),
        Command::Stream => stream(wb, flags),
        Command::CfgMember => cfg_member(wb, flags),
        Command::CfgEquiv => cfg_equiv(wb, flags),
        Command::QuotientCommute => commute(wb, flags),
        Command::AlgebraCheck => algebra(wb, flags),
    };
    match result {
        Ok((status, text, mut report)) => {
            report["command"] = json!(cmd.name());
            report["status"] = json!(status);
            Outcome { status, text, report }
        }
        Err(f) => {
            let msg = match f {
                Failure::Usage(m) => m,
                Failure::Core(e) => e.to_string(),
            };
            Outcome {
                status: USAGE,
                text: format!("error: {msg}\n"),
                report: json!({ "command": cmd.name(), "status": USAGE, "error": msg }),
            }
        }
    }
}

/// Exit status for a preservation verdict.
pub fn verdict_status(v: Verdict) -> i32 {
    match v {
        Verdict::Holds => PASS,
        Verdict::Fails => FAIL,
        Verdict::Unknown => UNKNOWN,
    }
}

fn required<'a, T>(v: &'a Option<T>, flag: &str, cmd: Command) -> Res<&'a T> {
    v.as_ref()
        .ok_or_else(|| Failure::Usage(format!("{} needs --{flag}", cmd.name())))
}

fn term(wb: &Workbench, src: &str) -> Res<Term> {
    Ok(parse_term(wb.require_signature()?, src)?)
}

fn show(wb: &Workbench, t: &Term) -> String {
    match &wb.signature {
        Some(sig) => sig.show(t).to_string(),
        None => t.to_string(),
    }
}

/// The declared system, or the grammar's equations under the file's rules
/// (the standard language rules when the file declares none).
fn system(wb: &Workbench) -> Res<CorecSystem> {
    if let Some(s) = &wb.system {
        return Ok(s.clone());
    }
    let Some(g) = &wb.grammar else {
        return Err(wb.require_system().unwrap_err().into());
    };
    Ok(match (&wb.law, &wb.theory) {
        (Some(law), Some(th)) => cfg::to_corec(g, law, th)?,
        _ => g.system()?,
    })
}

fn preservation(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let law = wb.require_law()?;
    let th = wb.theory_or_free()?;
    let report = check_preservation(&th, law)?;
    let mut text = String::new();
    let mut cases = Vec::new();
    for c in &report.cases {
        let _ = writeln!(text, "{} [{}]: {:?}", c.scheme, c.branch, c.verdict);
        if flags.trace {
            let _ = writeln!(text, "  λ({}) = {}", c.lhs, c.lhs_step);
            let _ = writeln!(text, "  λ({}) = {}", c.rhs, c.rhs_step);
        }
        if let Some(w) = &c.witness {
            match &w.letter {
                Some(a) => {
                    let e = w.equiv.map(|e| format!(" ({e:?})")).unwrap_or_default();
                    let _ = writeln!(text, "  witness at {a}: {} vs {}{e}", w.lhs, w.rhs);
                }
                None => {
                    let _ = writeln!(text, "  witness at output: {} vs {}", w.lhs, w.rhs);
                }
            }
        }
        let mut v = serde_json::to_value(c).expect("case reports serialise");
        if !flags.trace {
            let obj = v.as_object_mut().expect("case reports are objects");
            obj.remove("lhs_step");
            obj.remove("rhs_step");
        }
        cases.push(v);
    }
    let _ = writeln!(text, "verdict: {:?}", report.verdict);
    let by_scheme: Vec<Value> = report
        .by_scheme()
        .into_iter()
        .map(|(s, v)| json!({ "scheme": s, "verdict": v }))
        .collect();
    let value = json!({ "verdict": report.verdict, "schemes": by_scheme, "cases": cases });
    Ok((verdict_status(report.verdict), text, value))
}

fn run(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let t = term(wb, required(&flags.state, "state", Command::Run)?)?;
    let w = parse_word(sys.law().alphabet(), flags.word.as_deref().unwrap_or(""))?;
    let (out, next) = unfold(&sys, &t, &w)?;
    let word: String = w.iter().map(Sym::as_str).collect();
    let next = show(wb, &next);
    let text = format!("output: {out}\nstate: {next}\n");
    Ok((PASS, text, json!({ "state": show(wb, &t), "word": word, "output": out.to_string(), "next": next })))
}

fn stream(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let t = term(wb, required(&flags.state, "state", Command::Stream)?)?;
    let n = flags.n.unwrap_or(10);
    let prefix: Vec<String> = stream_prefix(&sys, &t, n)?.iter().map(ToString::to_string).collect();
    let text = format!("({})\n", prefix.join(", "));
    Ok((PASS, text, json!({ "state": show(wb, &t), "n": n, "prefix": prefix })))
}

fn start(wb: &Workbench, flags: &Flags) -> Res<Term> {
    match &flags.state {
        Some(s) => term(wb, s),
        None => Ok(wb.require_grammar()?.start().clone()),
    }
}

fn cfg_member(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let t = start(wb, flags)?;
    let src = required(&flags.word, "word", Command::CfgMember)?;
    let w = parse_word(sys.law().alphabet(), src)?;
    let accepted = cfg::member(&sys, &t, &w)?;
    let text = format!("{}\n", u8::from(accepted));
    let status = if accepted { PASS } else { FAIL };
    Ok((status, text, json!({ "state": show(wb, &t), "word": src, "member": accepted })))
}

fn cfg_equiv(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let lhs = start(wb, flags)?;
    let rhs = term(wb, required(&flags.against, "against", Command::CfgEquiv)?)?;
    let maxlen = *required(&flags.maxlen, "maxlen", Command::CfgEquiv)?;
    let (status, text, cex) = match cfg::equiv_upto(&sys, &lhs, &rhs, maxlen)? {
        CfgEquiv::Equivalent => (PASS, format!("equivalent up to length {maxlen}\n"), Value::Null),
        CfgEquiv::Counterexample(w) => {
            let shown = if w.is_empty() { "ε".to_string() } else { w.clone() };
            (FAIL, format!("counterexample: {shown}\n"), json!(w))
        }
    };
    let value = json!({
        "lhs": show(wb, &lhs),
        "rhs": show(wb, &rhs),
        "maxlen": maxlen,
        "equivalent": status == PASS,
        "counterexample": cex,
    });
    Ok((status, text, value))
}

fn commute(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let max_size = flags.max_size.unwrap_or(4);
    let depth = flags.depth.unwrap_or(4);
    let report = quotient_commute_check(&sys, max_size, depth)?;
    let th = sys
        .theory()
        .ok_or_else(|| Failure::Core(Error::InvalidSystem("no theory to quotient by".into())))?;
    let leaves: BTreeMap<Sym, Step<Term>> = sys
        .variables()
        .iter()
        .map(|x| (x.clone(), sys.phi(x).expect("declared variable").clone()))
        .collect();
    let samples: Vec<(Term, BTreeMap<Sym, Step<Term>>)> =
        enumerate_terms(sys.law().signature(), sys.variables(), max_size)
            .map(|t| (t, leaves.clone()))
            .collect();
    let square = morphism_square_check(th, sys.law(), &samples)?;
    let mut text = format!(
        "quotient: {} terms, {} probes, {} violations\nsquare: {} samples, {} failures\n",
        report.terms,
        report.probes,
        report.violations.len(),
        square.checked,
        square.failures.len()
    );
    for v in report.violations.iter().take(10) {
        let _ = writeln!(
            text,
            "  {} after {}: {} / {} vs {} / {}",
            v.term, v.word, v.raw_output, v.raw_state, v.quotient_output, v.quotient_state
        );
    }
    for f in square.failures.iter().take(10) {
        let _ = writeln!(text, "  {}: {} vs {}", f.sample, f.direct, f.quotient);
    }
    let status = if report.violations.is_empty() && square.passed() { PASS } else { FAIL };
    let value = json!({ "max_size": max_size, "depth": depth, "quotient": report, "square": square });
    Ok((status, text, value))
}

fn algebra(wb: &Workbench, flags: &Flags) -> Res<(i32, String, Value)> {
    let sys = system(wb)?;
    let outer = term(wb, required(&flags.state, "state", Command::AlgebraCheck)?)?;
    let horizon = *required(&flags.n, "n", Command::AlgebraCheck)?;
    let mut leaves = BTreeMap::new();
    for l in &flags.leaves {
        let (name, src) = l
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("leaf `{l}` is not NAME=TERM")))?;
        leaves.insert(Sym::new(name.trim()), term(wb, src)?);
    }
    let r = induced_algebra_check(&sys, &outer, &leaves, horizon)?;
    let text = format!(
        "direct: {}\nvia normal form: {}\n{}\n",
        r.direct,
        r.via_normal_form,
        if r.equal { "equal" } else { "different" }
    );
    let status = if r.equal { PASS } else { FAIL };
    let mut value = serde_json::to_value(&r).expect("algebra reports serialise");
    value["outer"] = json!(show(wb, &outer));
    Ok((status, text, value))
}
