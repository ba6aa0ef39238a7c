//! `focl`: precompute an index over a database, learn a counting-term hypothesis from
//! labelled tuples, and evaluate terms and hypotheses.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

const GRAMMAR: &str = "\
Expression grammar (formulas and counting terms):

  formula := formula '|' conj | conj
  conj    := conj '&' unary | unary
  unary   := '!' unary | '(' formula ')'
           | 'exists' v {',' v} '.' unary | 'forall' v {',' v} '.' unary
           | 'true' | 'false'
           | R '(' v, ... ')'              relation atom, R from the database
           | v '=' v
           | 'dist' '(' v ',' v ')' '<=' n   (or '>' n)
           | P '(' term, ... ')'           numerical predicate
  term    := term '+' prod | term '-' prod | prod
  prod    := prod '*' atom | atom
  atom    := integer | '-' integer | '(' term ')'
           | '#' '(' v, ... ')' '.' unary  number of tuples satisfying the body

Numerical predicates: Peq(a,b), Pleq(a,b), Pprime(a), Pdivides(a,b).
Example: #(z1,z2).(Author(x,z1) & Citation(z2,z1))

Database files are JSON lines: a {\"signature\":[{\"name\":..,\"arity\":..}]} header,
optional {\"universe\":[names]} lines and {\"rel\":R,\"tuple\":[names]} facts.
Training files are JSON lines {\"tuple\":[names],\"label\":integer}.

Exit status: 0 success, 2 usage, 3 bad input, 4 reject, 5 internal invariant violation.";

#[derive(Parser)]
#[command(name = "focl", version, about = "Learn counting-logic aggregate queries from labelled tuples", after_long_help = GRAMMAR)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Hypothesis-class settings, from a JSON file or from flags.
#[derive(Args, Clone, Debug)]
pub struct ClassArgs {
    /// JSON configuration file; the flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Arity of the classified tuples.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Number of parameters.
    #[arg(long, default_value_t = 0)]
    pub ell: usize,
    /// Bound variables per counting term.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Locality radius of the patterns.
    #[arg(long, default_value_t = 0)]
    pub radius: u32,
    /// Extra integer coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ints: Vec<i128>,
    /// Relation symbols allowed in patterns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub symbols: Vec<String>,
    /// Counting summands per hypothesis.
    #[arg(long, default_value_t = 2)]
    pub max_summands: usize,
    /// Literals per pattern body.
    #[arg(long, default_value_t = 3)]
    pub max_atoms: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Build the index (colour expansion plus lookup table) for a database.
    Precompute {
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        class: ClassArgs,
        /// Where to write the index.
        #[arg(long)]
        index: PathBuf,
        /// Also write the build statistics here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Learn a hypothesis consistent with a training file.
    Learn {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        train: PathBuf,
        /// Where to write the hypothesis.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate an expression on a database.
    Eval {
        #[arg(long)]
        db: PathBuf,
        /// Expression text; see the grammar in --help.
        #[arg(long)]
        term: String,
        /// Variable binding `var=element`, repeatable.
        #[arg(long = "at", value_name = "VAR=ELEM")]
        at: Vec<String>,
    },
    /// Evaluate a stored hypothesis on tuples, using local access only.
    Evalh {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        hypothesis: PathBuf,
        /// Comma-separated tuple of element names, repeatable.
        #[arg(long = "tuple", value_name = "A,B,..")]
        tuples: Vec<String>,
        /// JSON-lines file of {"tuple": [...]} records.
        #[arg(long)]
        tuples_file: Option<PathBuf>,
    },
    /// Cross-check the pipeline against the brute-force oracles on generated instances.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random (expression, structure, assignment) triples.
        #[arg(long, default_value_t = 2000)]
        eval_samples: usize,
        /// Planted-target learning runs.
        #[arg(long, default_value_t = 30)]
        learn_runs: usize,
    },
    /// Time precomputation and learning on synthetic graphs; prints CSV.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
        sizes: Vec<usize>,
        /// Degree bound of the generated graphs.
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Training examples per run.
        #[arg(long, default_value_t = 8)]
        examples: usize,
        /// Term that labels the training examples, with free variable x1.
        #[arg(long, default_value = commands::BENCH_TARGET)]
        target: String,
        /// Configuration file; defaults to one parameter, two bound variables over E and Blue.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("internal: {e}");
            return ExitCode::from(error::EXIT_INTERNAL);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Precompute { db, class, index, stats } => commands::precompute(&db, &class, &index, stats.as_deref()),
        Command::Learn { index, train, out } => commands::learn(&index, &train, &out),
        Command::Eval { db, term, at } => commands::eval(&db, &term, &at),
        Command::Evalh { index, hypothesis, tuples, tuples_file } => {
            commands::evalh(&index, &hypothesis, &tuples, tuples_file.as_deref())
        }
        Command::Check { seed, eval_samples, learn_runs } => commands::check(seed, eval_samples, learn_runs),
        Command::Bench { seed, sizes, degree, examples, target, config } => {
            commands::bench(seed, &sizes, degree, examples, &target, config.as_deref())
        }
    }
}
