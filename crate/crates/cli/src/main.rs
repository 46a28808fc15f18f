use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use distlaw::dsl::Workbench;
use distlaw_cli::{run_command, Command, Flags, USAGE};

#[derive(Parser)]
#[command(name = "distlaw", version, about = "Distributive laws, quotient monads and GSOS rule engines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that the rules preserve every equation of the theory.
    CheckPreservation(Common),
    /// Run a state along a word.
    Run(Common),
    /// Print a prefix of a stream.
    Stream(Common),
    /// Decide membership of --word in the language of the start symbol.
    CfgMember(Common),
    /// Compare two languages on all words up to --maxlen.
    CfgEquiv(Common),
    /// Compare raw and normalised runs, and the morphism square, on small terms.
    QuotientCommute(Common),
    /// Compare the two algebras on truncated behaviours.
    AlgebraCheck(Common),
    /// Grammar commands.
    #[command(subcommand)]
    Cfg(CfgCmd),
}

#[derive(Subcommand)]
enum CfgCmd {
    Member(Common),
    Equiv(Common),
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    maxlen: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    word: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    against: Option<String>,
    /// NAME=TERM, repeatable.
    #[arg(long = "leaf")]
    leaves: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE as u8),
            };
        }
    };
    let (cmd, args) = match cli.cmd {
        Cmd::CheckPreservation(a) => (Command::CheckPreservation, a),
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Stream(a) => (Command::Stream, a),
        Cmd::CfgMember(a) | Cmd::Cfg(CfgCmd::Member(a)) => (Command::CfgMember, a),
        Cmd::CfgEquiv(a) | Cmd::Cfg(CfgCmd::Equiv(a)) => (Command::CfgEquiv, a),
        Cmd::QuotientCommute(a) => (Command::QuotientCommute, a),
        Cmd::AlgebraCheck(a) => (Command::AlgebraCheck, a),
    };
    let wb = match Workbench::load(&args.file) {
        Ok(wb) => wb,
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            return ExitCode::from(USAGE as u8);
        }
    };
    let flags = Flags {
        json: args.json,
        trace: args.trace,
        max_size: args.max_size,
        depth: args.depth,
        maxlen: args.maxlen,
        word: args.word,
        n: args.n,
        state: args.state,
        against: args.against,
        leaves: args.leaves,
    };
    let out = run_command(&wb, cmd, &flags);
    if out.status == USAGE && !flags.json {
        eprint!("{}", out.text);
    } else {
        print!("{}", out.render(flags.json));
        if flags.json {
            println!();
        }
    }
    ExitCode::from(out.status as u8)
}
