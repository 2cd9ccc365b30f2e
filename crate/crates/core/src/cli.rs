//! The `hfsmdec` command line.
//!
//! Exit codes: 0 success or true, 1 property false, 2 bad input, 3 internal
//! invariant violated.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::DecompTree;
use crate::error::Error;
use crate::hfsm::Hfsm;
use crate::hierarchy::{core, maximize};
use crate::io::{fsm_dot, parse_any, tree_dot, tree_json, write_fsm, write_hfsm};
use crate::modules::{analyze, enumerate_indecomposable_thin, DEFAULT_ORACLE_BOUND};
use crate::random::{mixed_fsm, thin_hfsm};
use crate::verify::VerifyReport;

#[derive(Debug, Parser)]
#[command(
    name = "hfsmdec",
    version,
    about = "Modular decomposition of finite state machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TreeFormat {
    Text,
    Dot,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HfsmFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FsmFormat {
    Fsm,
    Dot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the decomposition tree of the (flattened) machine.
    Decompose {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TreeFormat::Text)]
        format: TreeFormat,
        /// Label internal nodes with their members.
        #[arg(long)]
        annotate: bool,
    },
    /// Nest thin modules until every machine is prime.
    Maximize {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = HfsmFormat::Json)]
        format: HfsmFormat,
        /// Draw nested machines as clusters (dot only).
        #[arg(long)]
        show_modules: bool,
    },
    /// Print the flat machine equivalent to a hierarchy.
    Flatten {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FsmFormat::Fsm)]
        format: FsmFormat,
        /// Draw nested machines as clusters (dot only).
        #[arg(long)]
        show_modules: bool,
    },
    /// Test whether a set of states is a module.
    CheckModule {
        input: PathBuf,
        /// Comma-separated state names.
        #[arg(long, value_delimiter = ',', required = true)]
        states: Vec<String>,
    },
    /// Print the core of a thin hierarchy.
    Core { input: PathBuf },
    /// Run a word and print the final state.
    Eval {
        input: PathBuf,
        /// Input symbols, in order.
        symbols: Vec<String>,
    },
    /// Test whether two machines or hierarchies are equivalent.
    Equiv { left: PathBuf, right: PathBuf },
    /// Print size and decomposition statistics.
    Stats { input: PathBuf },
    /// Check the module and decomposition properties against brute force.
    Verify {
        input: Option<PathBuf>,
        /// Check randomly generated machines instead of a file.
        #[arg(long, conflicts_with = "input")]
        random: bool,
        #[arg(long, env = "HFSMDEC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 7)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        /// Largest machine the brute-force oracles accept.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BOUND)]
        bound: usize,
        /// Where failing inputs are written.
        #[arg(long, default_value = "counterexamples")]
        dump_dir: PathBuf,
    },
}

enum Failure {
    Input(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<i32, Failure>;

fn load(path: &Path) -> std::result::Result<Hfsm, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_any(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let mut buf = String::new();
    let result = dispatch(cli.command, &mut buf, err);
    let _ = out.write_all(buf.as_bytes());
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Invariant(_)) {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command, out: &mut String, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Decompose {
            input,
            format,
            annotate,
        } => {
            let z = load(&input)?.flatten();
            let tree = DecompTree::build(&z)?;
            match format {
                TreeFormat::Dot => out.push_str(&tree_dot(&z, &tree, annotate)),
                TreeFormat::Json => out.push_str(&tree_json(&z, &tree)),
                TreeFormat::Text => {
                    writeln!(out, "states {}", z.num_states()).unwrap();
                    writeln!(out, "dimension {}", tree.dimension()).unwrap();
                    for t in tree.internal_nodes() {
                        let members: Vec<String> = z
                            .names_of(&tree.down_set(t))
                            .iter()
                            .map(|s| s.to_string())
                            .collect();
                        let kids: Vec<String> = tree
                            .children(t)
                            .map(|c| match tree.state_of(c) {
                                Some(q) => z.state(q).to_string(),
                                None => c.to_string(),
                            })
                            .collect();
                        writeln!(out, "{t} {{{}}} <- {}", members.join(","), kids.join(" "))
                            .unwrap();
                    }
                }
            }
            Ok(0)
        }
        Command::Maximize {
            input,
            format,
            show_modules,
        } => {
            let m = maximize(&load(&input)?)?;
            match format {
                HfsmFormat::Json => out.push_str(&write_hfsm(&m)),
                HfsmFormat::Dot => {
                    out.push_str(&fsm_dot(m.root(), &m.flatten(), show_modules.then_some(&m)))
                }
            }
            Ok(0)
        }
        Command::Flatten {
            input,
            format,
            show_modules,
        } => {
            let h = load(&input)?;
            let z = h.flatten();
            match format {
                FsmFormat::Fsm => out.push_str(&write_fsm(h.root(), &z)),
                FsmFormat::Dot => out.push_str(&fsm_dot(h.root(), &z, show_modules.then_some(&h))),
            }
            Ok(0)
        }
        Command::CheckModule { input, states } => {
            let z = load(&input)?.flatten();
            let m = z.set_of(&states)?;
            let a = analyze(&z, &m)?;
            let thin = crate::modules::is_thin_module(&z, &m);
            let entrances: Vec<String> = z
                .names_of(&a.effective_entrances())
                .iter()
                .map(|s| s.to_string())
                .collect();
            let entrance = if entrances.is_empty() {
                "none".to_string()
            } else {
                entrances.join(",")
            };
            writeln!(
                out,
                "module: {}, thin: {}, entrance: {entrance}",
                yes(a.is_module()),
                yes(thin)
            )
            .unwrap();
            Ok(if a.is_module() { 0 } else { 1 })
        }
        Command::Core { input } => {
            write!(out, "{}", core(&load(&input)?)?).unwrap();
            Ok(0)
        }
        Command::Eval { input, symbols } => {
            let h = load(&input)?;
            match h.eval(&symbols)? {
                Some(q) => writeln!(out, "{q}").unwrap(),
                None => writeln!(out, "undefined").unwrap(),
            }
            Ok(0)
        }
        Command::Equiv { left, right } => {
            let same = load(&left)?.equivalent(&load(&right)?);
            writeln!(
                out,
                "{}",
                if same { "equivalent" } else { "not equivalent" }
            )
            .unwrap();
            Ok(if same { 0 } else { 1 })
        }
        Command::Stats { input } => {
            let h = load(&input)?;
            let z = h.flatten();
            let depth = h.machines().map(|(n, _)| h.depth(n)).max().unwrap_or(0);
            writeln!(out, "machines {}", h.order()).unwrap();
            writeln!(out, "depth {depth}").unwrap();
            writeln!(out, "states {}", z.num_states()).unwrap();
            writeln!(out, "symbols {}", z.num_symbols()).unwrap();
            writeln!(out, "arcs {}", z.arc_count()).unwrap();
            writeln!(out, "thin {}", yes(h.is_thin())).unwrap();
            if z.is_accessible() {
                let tree = DecompTree::build(&z)?;
                writeln!(out, "dimension {}", tree.dimension()).unwrap();
                writeln!(out, "indecomposable {}", z.num_states() + tree.dimension()).unwrap();
                writeln!(out, "tree-arcs {}", tree.arc_count()).unwrap();
            } else {
                writeln!(out, "accessible no").unwrap();
            }
            Ok(0)
        }
        Command::Verify {
            input,
            random,
            seed,
            count,
            max_n,
            max_k,
            bound,
            dump_dir,
        } => {
            let mut report = if random {
                VerifyReport::quiet()
            } else {
                VerifyReport::default()
            };
            match (input, random) {
                (Some(path), _) => {
                    let h = load(&path)?;
                    let z = h.flatten();
                    // Checked here so the brute-force count is not misreported.
                    enumerate_indecomposable_thin(&z, bound)?;
                    report.verify_fsm(h.root(), &z, bound)?;
                    report.verify_hfsm(&h, &mut ChaCha8Rng::seed_from_u64(seed))?;
                }
                (None, true) => {
                    if max_n == 0 || max_n > bound || !(1..=26).contains(&max_k) {
                        return Err(Failure::Input(format!(
                            "need 1 <= max-n <= {bound} and 1 <= max-k <= 26"
                        )));
                    }
                    for i in 0..count {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                        let n = rng.gen_range(1..=max_n);
                        let k = rng.gen_range(1..=max_k);
                        let z = mixed_fsm(&mut rng, n, k);
                        report.verify_fsm(&format!("r{i}"), &z, bound)?;
                        let h = thin_hfsm(&mut rng, max_n.max(4), k);
                        report.verify_hfsm(&h, &mut rng)?;
                    }
                }
                (None, false) => {
                    return Err(Failure::Input("give an input file or --random".into()))
                }
            }
            write!(out, "{report}").unwrap();
            if report.passed() {
                return Ok(0);
            }
            std::fs::create_dir_all(&dump_dir)
                .map_err(|e| Failure::Input(format!("{}: {e}", dump_dir.display())))?;
            for (i, c) in report.counterexamples().iter().enumerate() {
                let ext = if c.json { "json" } else { "fsm" };
                let path = dump_dir.join(format!("{i:04}-{}.{ext}", c.property));
                let body = if c.json {
                    c.input.clone()
                } else {
                    format!("# {}: {}\n{}", c.property, c.detail, c.input)
                };
                std::fs::write(&path, body)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                let _ = writeln!(err, "{}: {} ({})", c.property, c.detail, path.display());
            }
            Ok(1)
        }
    }
}
