//! The `eqmat` command.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::dictionary::DEFAULT_BASE;
use crate::engine::{EngineConfig, Mode, Outcome};
use crate::error::Result;
use crate::session::{RunReport, Session};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONTRADICTION: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ax,
    Rew,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportArg {
    /// The stored facts.
    Plain,
    /// Every fact the stored facts stand for.
    Expanded,
}

/// Materialise datalog rules over N-Triples data with owl:sameAs reasoning.
///
/// Data is read before rules, so resource ids follow the data file's line
/// order and then the order of constants in the rules.
#[derive(Debug, Parser)]
#[command(name = "eqmat", version)]
pub struct Args {
    /// Rule file.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// N-Triples data file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rew")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,
    /// Print the run report as JSON on standard output.
    #[arg(long)]
    pub stats: bool,
    /// Write the result as N-Triples.
    #[arg(long, value_enum)]
    pub export: Option<ExportArg>,
    /// Destination for --export (standard output by default).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Query file; answers are printed as TSV, one row per occurrence.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Check the rewriting run against the reference materialisation.
    #[arg(long)]
    pub verify: bool,
    /// Base for bare names in rules and queries; STR strips it from IRIs.
    #[arg(long, default_value = DEFAULT_BASE)]
    pub base_iri: String,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn print_table(report: &RunReport, err: &mut dyn Write) -> std::io::Result<()> {
    let s = &report.stats;
    writeln!(err, "mode                {}", report.mode)?;
    writeln!(err, "threads             {}", report.thread_count)?;
    writeln!(err, "seconds             {:.6}", report.wall_time_seconds)?;
    writeln!(err, "rule applications   {}", s.rule_applications)?;
    writeln!(err, "derivations         {}", s.derivations)?;
    writeln!(err, "reflexive adds      {}", s.reflexive_derivations)?;
    writeln!(err, "merged resources    {}", s.merged_resources)?;
    writeln!(err, "marked facts        {}", s.marked_facts)?;
    writeln!(err, "triples (unmarked)  {}", report.triples_after_unmarked)?;
    writeln!(err, "triples (total)     {}", report.triples_after_total)?;
    writeln!(err, "outcome             {:?}", report.outcome)
}

fn execute(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut session = Session::new(&args.base_iri);
    if let Some(path) = &args.data {
        session.load_data(&read(path)?)?;
    }
    if let Some(path) = &args.rules {
        session.load_rules(&read(path)?)?;
    }
    let query = args.query.as_ref().map(read).transpose()?;

    // verification always checks a rewriting run
    let mode = if args.verify {
        Mode::Rew
    } else {
        match args.mode {
            ModeArg::Ax => Mode::Ax,
            ModeArg::Rew => Mode::Rew,
        }
    };
    let report = session
        .materialise(&EngineConfig::new(mode, args.threads as usize))?
        .clone();
    if args.stats {
        writeln!(out, "{}", serde_json::to_string(&report).expect("report serialises"))?;
    } else {
        print_table(&report, err)?;
    }

    if let Some(kind) = args.export {
        let text = match kind {
            ExportArg::Plain => session.export_plain()?,
            ExportArg::Expanded => session.export_expanded()?,
        };
        match &args.out {
            Some(path) => fs::write(path, text)?,
            None => out.write_all(text.as_bytes())?,
        }
    }

    if let Some(text) = query {
        out.write_all(session.query(&text)?.to_tsv().as_bytes())?;
    }

    if args.verify {
        let r = session.verify()?;
        writeln!(err, "all sameAs facts reflexive   {}", r.captures_equalities())?;
        writeln!(err, "all facts normal             {}", r.is_minimal())?;
        writeln!(err, "expansion matches reference  {}", r.represents_materialisation())?;
        for t in r.missing.iter().take(10) {
            writeln!(err, "  missing {t:?}")?;
        }
        for t in r.unexpected.iter().take(10) {
            writeln!(err, "  unexpected {t:?}")?;
        }
        if !r.holds() {
            return Ok(EXIT_ERROR);
        }
    }

    Ok(match report.outcome {
        Outcome::Consistent => EXIT_OK,
        Outcome::Contradiction => {
            writeln!(err, "contradiction: some resource is different from itself")?;
            EXIT_CONTRADICTION
        }
    })
}

/// Runs the tool with parsed arguments, returning the exit code.
pub fn run(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(args, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Parses `argv` (program name first) and runs the tool.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => run(&args, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                // --help and --version
                EXIT_OK
            }
        }
    }
}
