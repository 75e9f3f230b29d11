use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exkit::formats::{self, ConditionalFile, DistributionFile, GameFile, KernelFile, StrategyFile, TypeFile};
use exkit::{commands, parse_relation, render, resolve_alphabet, CliError, Format, Report, Settings};
use exkit_core::games::Repetition;
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "exkit", version, about = "Exact class combinatorics and certified de Finetti reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Interval precision in bits.
    #[arg(long, global = true, env = "EXKIT_PRECISION_BITS", default_value_t = 128,
          value_parser = clap::value_parser!(u32).range(64..))]
    precision: u32,
    /// Largest enumeration (words, tables, classes) a command may visit.
    #[arg(long, global = true, default_value_t = exkit_core::DEFAULT_ENUMERATION_CAP,
          value_parser = clap::value_parser!(u64).range(1..))]
    cap: u64,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RelationArgs {
    /// exchangeable, markov, lmarkov, lmarkov(l) or product(r1,r2,...).
    #[arg(long)]
    relation: String,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Product alphabet sizes, first factor most significant.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<usize>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Parallel,
    Sequential,
}

#[derive(Subcommand)]
enum Command {
    /// Every nonempty class with its size, tight ratio and comparison law.
    Classes {
        #[command(flatten)]
        rel: RelationArgs,
        #[arg(long)]
        n: usize,
        /// Keep only the class of this word (1-indexed letters).
        #[arg(long)]
        filter_word: Option<String>,
    },
    /// Size of one class, given by a word or a type descriptor.
    Size {
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        relation: Option<String>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<usize>>,
        /// Type descriptor JSON, inline or as a file path.
        #[arg(long = "type")]
        type_json: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// List the members by enumeration.
        #[arg(long)]
        members: bool,
    },
    /// Certify the reduction for a distribution file, or re-check a certificate.
    Certify {
        file: PathBuf,
        #[arg(long)]
        relation: Option<String>,
        #[arg(long)]
        ell: Option<usize>,
        /// Treat the input as a joint distribution on (A x X)^n.
        #[arg(long)]
        conditional: bool,
        /// The file is a certificate: recompute and compare.
        #[arg(long)]
        verify: bool,
    },
    /// Closed-form alpha(n) against the exact tight maximum.
    Alpha {
        #[command(flatten)]
        rel: RelationArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Measure-and-prepare lambda matrix, or MP(Q_t) for one type.
    Mp {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "type", value_delimiter = ',')]
        t: Option<Vec<u64>>,
    },
    /// beta(n) exactly and from the flat type.
    Beta {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Conditional reduction for a conditional distribution file.
    Conditional { file: PathBuf },
    /// Markov marginal counterexample and the exchangeable marginal sweep.
    Counterexample {
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
    /// Classical values and the de Finetti bound for a repeated game.
    Game {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Parallel)]
        mode: Mode,
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Strategy for the n-round game; defaults to an optimal one-round
        /// strategy repeated.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long)]
        emit_strategy: bool,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let s = Settings { bits: cli.precision, cap: cli.cap };
    match &cli.command {
        Command::Classes { rel, n, filter_word } => {
            let relation = parse_relation(&rel.relation, rel.ell)?;
            let alphabet = resolve_alphabet(rel.d, rel.factors.as_deref())?;
            let filter = filter_word.as_deref().map(formats::parse_word).transpose()?;
            commands::classes(&relation, &alphabet, *n, filter.as_ref(), &s)
        }
        Command::Size { word, relation, ell, d, factors, type_json, n, members } => {
            let (t, n) = match (word, type_json) {
                (Some(w), None) => {
                    let relation = relation.as_deref().ok_or_else(|| CliError::Input("--word needs --relation".into()))?;
                    let relation = parse_relation(relation, *ell)?;
                    let alphabet = resolve_alphabet(*d, factors.as_deref())?;
                    let w = formats::parse_word(w)?;
                    (exkit_core::relations::type_of(&w, &relation, &alphabet)?, w.len())
                }
                (None, Some(text)) => {
                    let file: TypeFile = if text.trim_start().starts_with('{') {
                        serde_json::from_str(text)?
                    } else {
                        read_json(Path::new(text))?
                    };
                    let t = file.to_descriptor()?;
                    let n = n.unwrap_or_else(|| t.length());
                    (t, n)
                }
                _ => return Err(CliError::Input("give exactly one of --word and --type".into())),
            };
            commands::size(&t, n, *members, &s)
        }
        Command::Certify { file, relation, ell, conditional, verify } => {
            if *verify {
                return commands::verify(&read_json(file)?, &s);
            }
            let p = read_json::<DistributionFile>(file)?.to_distribution()?;
            if *conditional {
                commands::certify_conditional(&p, &s)
            } else {
                let relation = relation.as_deref().ok_or_else(|| CliError::Input("certify needs --relation".into()))?;
                commands::certify(&p, &parse_relation(relation, *ell)?, &s)
            }
        }
        Command::Alpha { rel, n, n_max } => {
            let relation = parse_relation(&rel.relation, rel.ell)?;
            let alphabet = resolve_alphabet(rel.d, rel.factors.as_deref())?;
            commands::alpha(&relation, &alphabet, *n..=n_max.unwrap_or(*n), &s)
        }
        Command::Mp { d, n, t } => commands::mp(*d, *n, t.as_deref(), &s),
        Command::Beta { d, n, n_max } => commands::beta(*d, *n..=n_max.unwrap_or(*n), &s),
        Command::Conditional { file } => {
            commands::conditional(&read_json::<ConditionalFile>(file)?.to_conditional()?, &s)
        }
        Command::Counterexample { max_n } => commands::counterexample(*max_n, &s),
        Command::Game { file, n, mode, kernel, strategy, emit_strategy } => {
            let base = read_json::<GameFile>(file)?.to_game()?;
            let repetition = match (mode, kernel) {
                (Mode::Parallel, None) => Repetition::Parallel,
                (Mode::Parallel, Some(_)) => {
                    return Err(CliError::Input("--kernel only applies to --mode sequential".into()))
                }
                (Mode::Sequential, Some(path)) => Repetition::Sequential(read_json::<KernelFile>(path)?.to_kernel(&base)?),
                (Mode::Sequential, None) => Repetition::Sequential(exkit_core::games::SequentialKernel::iid(&base)),
            };
            let strategy = strategy.as_deref().map(|p| read_json::<StrategyFile>(p)?.to_strategy(&base, *n)).transpose()?;
            commands::game(&base, *n, repetition, strategy, *emit_strategy, &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 5 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("{e}");
            return ExitCode::from(5);
        }
    }
    match run(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = render(&report, cli.format, &mut out) {
                eprintln!("{e}");
                return ExitCode::from(5);
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
