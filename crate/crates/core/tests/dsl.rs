use distlaw::dsl::{parse_term, parse_word, Workbench};
use distlaw::error::{Error, SyntaxKind};

fn bundled(name: &str) -> Workbench {
    let path = format!("{}/dsl/{name}", env!("CARGO_MANIFEST_DIR"));
    Workbench::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const ALL: &[&str] = &["stream.dsl", "conv-gsos.dsl", "three-zeros.dsl", "cfg.dsl", "parens.dsl"];

#[test]
fn bundled_files_load() {
    for name in ALL {
        bundled(name);
    }
}

#[test]
fn stream_file_contents() {
    let wb = bundled("stream.dsl");
    assert_eq!(wb.theory.as_ref().unwrap().schemes().len(), 10);
    assert_eq!(wb.law.as_ref().unwrap().spec().rules().len(), 4);
    let sys = wb.system.as_ref().unwrap();
    assert_eq!(sys.variables().len(), 3);
}

#[test]
fn cfg_file_contents() {
    let wb = bundled("cfg.dsl");
    assert_eq!(wb.theory.as_ref().unwrap().schemes().len(), 11);
    let g = wb.grammar.as_ref().unwrap();
    assert_eq!(g.nonterminals().len(), 3);
    assert!(g.nullable("S"));
}

#[test]
fn printing_round_trips() {
    for name in ALL {
        let wb = bundled(name);
        let text = wb.print();
        let again = Workbench::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(wb, again, "{name}");
        assert_eq!(text, again.print());
    }
}

fn syntax_kind(e: Error) -> (SyntaxKind, usize, usize) {
    match e {
        Error::Syntax { kind, line, column, .. } => (kind, line, column),
        other => panic!("expected a syntax error, got {other}"),
    }
}

#[test]
fn arity_mismatch_points_at_the_call() {
    let src = "signature { op plus/2; }\noutputs bool;\nalphabet {a};\ntheory generic {\n  eq bad: plus(x, y, z) = x;\n}\n";
    let (kind, line, column) = syntax_kind(Workbench::parse(src).unwrap_err());
    assert_eq!(kind, SyntaxKind::ArityMismatch);
    assert_eq!((line, column), (5, 11));
}

#[test]
fn unknown_symbol_in_rule() {
    let src = "signature { op f/1; }\noutputs bool;\nalphabet {a};\nrules simple-sos {\n  rule g => out = 0; next(a) = g;\n}\n";
    let (kind, line, _) = syntax_kind(Workbench::parse(src).unwrap_err());
    assert_eq!(kind, SyntaxKind::UnknownSymbol);
    assert_eq!(line, 5);
}

#[test]
fn parse_errors_carry_positions() {
    let (kind, line, column) = syntax_kind(Workbench::parse("signature { op f 1; }").unwrap_err());
    assert_eq!(kind, SyntaxKind::Parse);
    assert_eq!((line, column), (1, 18));
    let (kind, ..) = syntax_kind(Workbench::parse("rules gsos { }").unwrap_err());
    assert_eq!(kind, SyntaxKind::MissingSection);
}

#[test]
fn terms_parse_right_associatively() {
    let wb = bundled("stream.dsl");
    let sig = wb.signature.as_ref().unwrap();
    let t = parse_term(sig, "[0] * [2] + [0] * X * [0] + [1/2] * [-1]").unwrap();
    assert_eq!(sig.show(&t).to_string(), "[0] * [2] + [0] * X * [0] + [1/2] * [-1]");
    let u = parse_term(sig, "(a + b) + c").unwrap();
    assert_eq!(sig.show(&u).to_string(), "(a + b) + c");
    assert_ne!(u, parse_term(sig, "a + b + c").unwrap());
}

#[test]
fn words_split_by_letter() {
    let wb = bundled("parens.dsl");
    let a = wb.alphabet.as_ref().unwrap();
    assert_eq!(parse_word(a, "()()").unwrap().len(), 4);
    assert!(parse_word(a, "").unwrap().is_empty());
    assert!(parse_word(a, "(x").is_err());
}
