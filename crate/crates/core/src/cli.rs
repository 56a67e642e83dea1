//! Command-line front end: `index`, `enum`, `check` and `bench`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::enumeration::{DelayStats, PrepareOptions, PreparedQuery};
use crate::error::{Error, FormulaError};
use crate::evaluator::{brute_enumerate, Evaluator};
use crate::formula::{parse_formula, Formula};
use crate::generate::{generate, Family};
use crate::structure::{load_structure, Structure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fo-enum", version, about = "Enumerate answers of first-order queries over bounded-degree structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build all indices and the plan, print the plan and preprocessing counts.
    Index {
        #[command(flatten)]
        input: Input,
        /// Also print the neighborhood types, pointers and buckets.
        #[arg(long)]
        dump_types: bool,
    },
    /// Stream the answers, one tab-separated tuple per line.
    Enum {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        limit: Option<u64>,
        #[arg(long)]
        stats: bool,
        /// Compare against brute-force evaluation.
        #[arg(long)]
        oracle_check: bool,
    },
    /// Decide a sentence, or the existential closure of a query.
    Check {
        #[command(flatten)]
        input: Input,
    },
    /// Run the enumeration on generated structures of increasing size.
    Bench {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "ladder")]
        family: Family,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        limit: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long, conflicts_with = "query_file", required_unless_present = "query_file")]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Maximum degree; refuse structures that exceed it.
    #[arg(long)]
    degree: Option<usize>,
    /// Locality radius to use instead of 2^|phi|.
    #[arg(long)]
    radius: Option<u64>,
    /// Answer order of the free variables.
    #[arg(long, value_delimiter = ',')]
    head: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long)]
    structure: PathBuf,
    #[command(flatten)]
    query: QueryArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Index,
    Enum,
    Check,
    Bench,
}

/// A parsed invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub structure_path: Option<PathBuf>,
    pub query_text: Option<String>,
    pub query_path: Option<PathBuf>,
    pub degree_bound: Option<usize>,
    pub radius_override: Option<u64>,
    pub head: Option<Vec<String>>,
    pub limit: Option<u64>,
    pub oracle_check: bool,
    pub stats: bool,
    pub dump_types: bool,
    pub family: Family,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Self {
        let mut cfg = RunConfig {
            command: CommandKind::Check,
            structure_path: None,
            query_text: None,
            query_path: None,
            degree_bound: None,
            radius_override: None,
            head: None,
            limit: None,
            oracle_check: false,
            stats: false,
            dump_types: false,
            family: Family::Ladder,
            sizes: Vec::new(),
            seed: 0,
        };
        let set_query = |cfg: &mut RunConfig, q: QueryArgs| {
            cfg.query_text = q.query;
            cfg.query_path = q.query_file;
            cfg.degree_bound = q.degree;
            cfg.radius_override = q.radius;
            cfg.head = q.head;
        };
        match cli.command {
            Command::Index { input, dump_types } => {
                cfg.command = CommandKind::Index;
                cfg.structure_path = Some(input.structure);
                cfg.dump_types = dump_types;
                set_query(&mut cfg, input.query);
            }
            Command::Enum { input, limit, stats, oracle_check } => {
                cfg.command = CommandKind::Enum;
                cfg.structure_path = Some(input.structure);
                cfg.limit = limit;
                cfg.stats = stats;
                cfg.oracle_check = oracle_check;
                set_query(&mut cfg, input.query);
            }
            Command::Check { input } => {
                cfg.structure_path = Some(input.structure);
                set_query(&mut cfg, input.query);
            }
            Command::Bench { query, family, sizes, seed, limit } => {
                cfg.command = CommandKind::Bench;
                cfg.family = family;
                cfg.sizes = sizes;
                cfg.seed = seed;
                cfg.limit = limit;
                set_query(&mut cfg, query);
            }
        }
        cfg
    }
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DegreeBound { .. }
            | Error::Formula(FormulaError::RadiusOverflow { .. })
            | Error::Formula(FormulaError::InvalidOverride) => EXIT_PRECONDITION,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: EXIT_USAGE, message }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute_command(&RunConfig::from_cli(cli), out, err)
}

pub fn execute_command(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cfg, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_query(cfg: &RunConfig) -> Result<String, Failure> {
    match (&cfg.query_text, &cfg.query_path) {
        (Some(q), _) => Ok(q.clone()),
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
        (None, None) => Err(usage("a query is required (--query or --query-file)".into())),
    }
}

fn load(cfg: &RunConfig) -> Result<Structure, Failure> {
    let path = cfg.structure_path.as_ref().ok_or_else(|| usage("--structure is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(load_structure(&text).map_err(Error::from)?)
}

fn formula(cfg: &RunConfig, s: &Structure) -> Result<Formula, Failure> {
    let f = parse_formula(&read_query(cfg)?, s.signature()).map_err(Error::from)?;
    match &cfg.head {
        Some(h) => {
            let names: Vec<&str> = h.iter().map(String::as_str).collect();
            Ok(f.with_head(&names).map_err(Error::from)?)
        }
        None => Ok(f),
    }
}

fn warn_override(cfg: &RunConfig, err: &mut dyn Write) {
    if let Some(r) = cfg.radius_override {
        let _ = writeln!(
            err,
            "warning: radius override {r} replaces 2^|phi|; answers are exact only if the query is local at this radius"
        );
    }
}

fn prepare(cfg: &RunConfig, s: Arc<Structure>, f: Formula) -> Result<PreparedQuery, Failure> {
    let opts = PrepareOptions { radius: cfg.radius_override, degree_bound: cfg.degree_bound };
    Ok(PreparedQuery::new(s, f, opts)?)
}

fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cfg.command {
        CommandKind::Index => index(cfg, out, err),
        CommandKind::Enum => enumerate(cfg, out, err),
        CommandKind::Check => check(cfg, out),
        CommandKind::Bench => bench(cfg, out, err),
    }
}

fn index(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let s = Arc::new(load(cfg)?);
    let f = formula(cfg, &s)?;
    warn_override(cfg, err);
    let p = prepare(cfg, s.clone(), f)?;
    match (p.plan(), p.context()) {
        (Some(plan), Some(ctx)) => {
            writeln!(out, "elements {} facts {} max_degree {}", s.len(), s.fact_count(), ctx.graph.max_degree())?;
            writeln!(out, "types {}", ctx.types.num_types())?;
            write!(out, "{}", plan.dump())?;
            writeln!(out, "streams {}", p.stream_count())?;
            if cfg.dump_types {
                write!(out, "{}", ctx.types.dump(&s))?;
            }
        }
        _ => writeln!(out, "sentence: no plan")?,
    }
    let c = p.preprocess_counts();
    writeln!(out, "preprocess_steps {}", c.total())?;
    for (name, v) in [
        ("graph", c.graph),
        ("bfs", c.bfs),
        ("canonical", c.canonical),
        ("ball_profile", c.ball_profile),
        ("relevance", c.relevance),
        ("evaluation", c.evaluation),
        ("pinning", c.pinning),
    ] {
        writeln!(out, "  {name} {v}")?;
    }
    Ok(EXIT_OK)
}

fn write_stats(out: &mut dyn Write, st: &DelayStats) -> std::io::Result<()> {
    writeln!(out, "{{")?;
    writeln!(out, "  \"emitted\": {},", st.emitted)?;
    writeln!(out, "  \"max_steps\": {},", st.max_steps)?;
    writeln!(out, "  \"mean_steps\": {:.3},", st.mean_steps)?;
    writeln!(out, "  \"tail_steps\": {},", st.tail_steps)?;
    writeln!(out, "  \"delay_bound\": {},", st.delay_bound)?;
    writeln!(out, "  \"preprocess_steps\": {}", st.preprocess_steps)?;
    writeln!(out, "}}")
}

fn enumerate(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let s = Arc::new(load(cfg)?);
    let f = formula(cfg, &s)?;
    warn_override(cfg, err);
    let p = prepare(cfg, s.clone(), f.clone())?;
    let mut cursor = p.open_cursor();
    let limit = cfg.limit.unwrap_or(u64::MAX);
    let mut emitted = 0u64;
    let mut got = Vec::new();
    let mut line = String::new();
    while emitted < limit {
        let Some(t) = cursor.next_answer().map_err(Error::from)? else { break };
        emitted += 1;
        line.clear();
        for (i, &e) in t.iter().enumerate() {
            if i > 0 {
                line.push('\t');
            }
            line.push_str(s.name(e));
        }
        writeln!(out, "{line}")?;
        if cfg.oracle_check {
            got.push(t.to_vec());
        }
    }
    if cfg.stats {
        write_stats(out, &cursor.delay_stats().map_err(Error::from)?)?;
    }
    if cfg.oracle_check {
        let mut expected = brute_enumerate(&s, &f);
        if let Some(l) = cfg.limit {
            expected.truncate(l as usize);
        }
        if expected == got {
            writeln!(out, "oracle: match")?;
        } else {
            let at = expected.iter().zip(&got).position(|(a, b)| a != b).unwrap_or(expected.len().min(got.len()));
            writeln!(out, "oracle: mismatch ({} expected, {} emitted, first difference at answer {at})", expected.len(), got.len())?;
            return Ok(EXIT_ORACLE);
        }
    }
    Ok(EXIT_OK)
}

fn check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(cfg)?;
    let f = formula(cfg, &s)?;
    if let Some(d) = cfg.degree_bound {
        let g = crate::structure::gaifman_graph(&s);
        if !crate::structure::check_degree_bound(&g, d) {
            return Err(Error::DegreeBound { bound: d, found: g.max_degree() }.into());
        }
    }
    let closed = f.existential_closure();
    let holds = Evaluator::new(&s, &closed).holds(&[]);
    writeln!(out, "{holds}")?;
    Ok(EXIT_OK)
}

fn bench(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let text = read_query(cfg)?;
    warn_override(cfg, err);
    let d = cfg.degree_bound.unwrap_or(3);
    writeln!(out, "n\tpreprocess_steps\tmax_delay_steps\tmean_delay_steps\temitted\tstreams")?;
    for &n in &cfg.sizes {
        let s = Arc::new(generate(cfg.family, n, d, cfg.seed));
        let f = formula(&RunConfig { query_text: Some(text.clone()), ..cfg.clone() }, &s)?;
        let p = prepare(cfg, s, f)?;
        let mut c = p.open_cursor();
        let mut emitted = 0u64;
        while emitted < cfg.limit.unwrap_or(u64::MAX) && c.next_answer().map_err(Error::from)?.is_some() {
            emitted += 1;
        }
        let st = c.delay_stats().map_err(Error::from)?;
        writeln!(
            out,
            "{n}\t{}\t{}\t{:.3}\t{}\t{}",
            st.preprocess_steps,
            st.max_steps,
            st.mean_steps,
            st.emitted,
            p.stream_count()
        )?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("fo-enum").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["enum", "--query", "E(x,y)"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
        assert_eq!(run_args(&["enum", "--structure", "x", "--query", "E(x,y)", "--limit", "0"]).0, EXIT_USAGE);
        let (code, _, err) = run_args(&["enum", "--structure", "/nonexistent/file", "--query", "E(x,y)"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.starts_with("error: "));
    }

    #[test]
    fn bench_table() {
        let (code, out, _) =
            run_args(&["bench", "--query", "E(x,y)", "--family", "cycle", "--sizes", "10,20", "--radius", "1"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("10\t"));
        assert!(lines[2].starts_with("20\t"));
    }
}
