//! `hsmt`: generate, simulate and check translation-task instances.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success |
//! | 1  | I/O or parse failure |
//! | 2  | the instance or arguments fail validation |
//! | 3  | exact enumeration exceeds `--max-leaves` |
//! | 4  | the engine failed while simulating |
//! | 5  | a verification command ran and its check failed |
//! | 64 | command-line usage error |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use hrnn_core::bench::bench_memory;
use hrnn_core::contextuality::{verify_magic_square, MagicSquare};
use hrnn_core::engine::{EngineConfig, EngineRegistry};
use hrnn_core::hsmt::{build_contextual_triple, build_sequence, min_len, random_instance, GenConfig, HsmtInstance};
use hrnn_core::io::{distribution_jsonl, outcome_json, trajectory_line};
use hrnn_core::lie::{closure_dimension_formula, lie_closure, structure_constants, structure_json};
use hrnn_core::statevector::ProjectorConvention;
use hrnn_core::types::Setting;
use hrnn_core::Error;
use rayon::prelude::*;

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_ENGINE: u8 = 4;
const EXIT_CHECK: u8 = 5;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "hsmt", version, about = "Hypergraph state measurement translation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SettingArg {
    Qubit,
    Qumode,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::Qubit => Setting::Qubit,
            SettingArg::Qumode => Setting::Qumode,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Ones,
    Zeros,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random instance as JSON.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Sequence length; defaults to the shortest legal one.
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "qubit")]
        setting: SettingArg,
        #[arg(long, default_value_t = 1)]
        denominator: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample trajectories of an instance, or enumerate its exact distribution.
    Run {
        #[arg(long)]
        instance: PathBuf,
        /// Engine name from the registry; defaults by setting.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long, default_value_t = 1)]
        denominator: i64,
        #[arg(long, value_enum, default_value = "ones")]
        convention: ConventionArg,
        #[arg(long)]
        enumerate: bool,
        #[arg(long, default_value_t = 1 << 20)]
        max_leaves: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trajectories: u64,
        /// Worker threads for sampling.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the commutation and product pattern of the 3x3 Pauli square.
    VerifyMagicSquare {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and certify a contextual triple of instances.
    Antidistinguish {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "qubit")]
        setting: SettingArg,
        #[arg(long)]
        engine: Option<String>,
        #[arg(long, default_value_t = 1 << 20)]
        max_leaves: usize,
        /// Directory that receives the three instance files and their
        /// conditioning prefixes.
        #[arg(long)]
        emit_dir: Option<PathBuf>,
    },
    /// Dimension of the Lie closure of the k-local generators.
    LieDim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dump_structure: Option<PathBuf>,
    },
    /// Peak weight-map size of the hypergraph engine over a sweep of n.
    BenchMemory {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn new(code: u8, err: impl Into<anyhow::Error>) -> Self {
        Failure { code, err: err.into() }
    }
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_IO, e)
}

fn validation(e: Error) -> Failure {
    Failure::new(EXIT_VALIDATION, e)
}

fn engine_err(e: Error) -> Failure {
    let code = if matches!(e, Error::Infeasible(_)) { EXIT_INFEASIBLE } else { EXIT_ENGINE };
    Failure::new(code, e)
}

type CmdResult = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(io_err),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // a closed pipe (`| head`) is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(io_err),
        },
    }
}

fn default_engine(setting: Setting) -> &'static str {
    match setting {
        Setting::Qubit => "hypergraph",
        Setting::Qumode => "qumode",
    }
}

fn load_instance(path: &Path) -> Result<HsmtInstance, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(io_err)?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(io_err)?;
    // well-formed JSON that is not a valid instance is a validation failure
    let inst: HsmtInstance = serde_json::from_value(raw)
        .with_context(|| format!("invalid instance in {}", path.display()))
        .map_err(|e| Failure::new(EXIT_VALIDATION, e))?;
    inst.validate().map_err(validation)?;
    Ok(inst)
}

fn cmd_gen(
    n: usize,
    k: usize,
    ell: Option<usize>,
    seed: u64,
    setting: Setting,
    denominator: i64,
    out: Option<&Path>,
) -> CmdResult {
    if k == 0 || k > n {
        return Err(validation(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}"))));
    }
    let mut cfg = GenConfig::new(n, k, ell.unwrap_or_else(|| min_len(n, k)));
    cfg.setting = setting;
    cfg.denominator = denominator;
    let inst = random_instance(&cfg, seed).map_err(validation)?;
    let mut text = serde_json::to_string(&inst).map_err(io_err)?;
    text.push('\n');
    emit(out, &text)
}

struct RunArgs {
    engine: Option<String>,
    denominator: i64,
    convention: ProjectorConvention,
    enumerate: bool,
    max_leaves: usize,
    seed: u64,
    trajectories: u64,
    jobs: usize,
}

fn cmd_run(instance: &Path, a: RunArgs, out: Option<&Path>) -> CmdResult {
    let inst = load_instance(instance)?;
    if a.denominator < 1 {
        return Err(validation(Error::InvalidArgument("--denominator must be at least 1".into())));
    }
    let tokens = build_sequence(&inst).map_err(validation)?;
    let registry = EngineRegistry::default();
    let name = a.engine.as_deref().unwrap_or(default_engine(inst.setting));
    let cfg = EngineConfig::new(inst.n, inst.k).with_convention(a.convention).with_denominator(a.denominator);
    let engine = registry.build(name, &cfg).map_err(validation)?;
    log::info!("running {} tokens on engine {}", tokens.len(), engine.name());
    if a.enumerate {
        let dist = engine.enumerate(&tokens, a.max_leaves).map_err(engine_err)?;
        log::info!("{} outcome strings", dist.len());
        return emit(out, &distribution_jsonl(&dist));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Failure::new(EXIT_ENGINE, e))?;
    let lines: Vec<String> = pool
        .install(|| {
            (0..a.trajectories)
                .into_par_iter()
                .map(|t| engine.sample(&tokens, a.seed, t).map(|y| trajectory_line(t, &y)))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(engine_err)?;
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    emit(out, &text)
}

fn cmd_verify_magic_square(out: Option<&Path>) -> CmdResult {
    let report = verify_magic_square(&MagicSquare::mermin_peres());
    let ok = report.is_contextual_pattern();
    let mut v = serde_json::to_value(&report).map_err(io_err)?;
    v["contextual"] = ok.into();
    emit(out, &format!("{v}\n"))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, anyhow::anyhow!("the square does not show the contextual parity pattern")))
    }
}

fn cmd_antidistinguish(
    n: usize,
    k: usize,
    setting: Setting,
    engine: Option<&str>,
    max_leaves: usize,
    emit_dir: Option<&Path>,
) -> CmdResult {
    let triple = build_contextual_triple(n, k, setting).map_err(validation)?;
    if let Some(dir) = emit_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(io_err)?;
        let mut given = String::new();
        for (i, (inst, g)) in triple.instances.iter().zip(&triple.given).enumerate() {
            let path = dir.join(format!("instance-{}.json", i + 1));
            let text = serde_json::to_string(inst).map_err(io_err)? + "\n";
            fs::write(&path, text).with_context(|| format!("writing {}", path.display())).map_err(io_err)?;
            let y: Vec<String> = g.outcomes.iter().map(outcome_json).collect();
            given.push_str(&format!("{{\"instance\":{},\"y\":[{}]}}\n", i + 1, y.join(",")));
        }
        let path = dir.join("given.jsonl");
        fs::write(&path, given).with_context(|| format!("writing {}", path.display())).map_err(io_err)?;
    }
    let name = engine.unwrap_or(default_engine(setting));
    let eng = EngineRegistry::default().build(name, &EngineConfig::new(n, k)).map_err(validation)?;
    let cert = triple.certify(eng.as_ref(), max_leaves).map_err(engine_err)?;
    let mut v = serde_json::to_value(&cert).map_err(io_err)?;
    v["edge"] = triple.edge.one_based().into();
    v["prefix_len"] = triple.prefix_len().into();
    emit(None, &format!("{v}\n"))?;
    if cert.pass {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, anyhow::anyhow!("the three candidates are not antidistinguished")))
    }
}

fn cmd_lie_dim(n: usize, k: usize, dump: Option<&Path>) -> CmdResult {
    let cl = lie_closure(n, k).map_err(validation)?;
    let formula = closure_dimension_formula(n, k);
    if let Some(path) = dump {
        let sc = structure_constants(&cl).map_err(engine_err)?;
        fs::write(path, structure_json(&cl, &sc) + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(io_err)?;
    }
    let v = serde_json::json!({ "n": n, "k": k, "dim": cl.dim(), "formula": formula });
    emit(None, &format!("{v}\n"))?;
    if cl.dim() == formula {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, anyhow::anyhow!("closure has dimension {} but the formula gives {formula}", cl.dim())))
    }
}

fn cmd_bench_memory(k: usize, ns: &[usize], seed: u64) -> CmdResult {
    if ns.iter().any(|&n| n < k) {
        return Err(validation(Error::InvalidArgument(format!("every n must be at least k = {k}"))));
    }
    let report = bench_memory(k, ns, seed).map_err(|e| match e {
        Error::InvalidArgument(_) => validation(e),
        e => engine_err(e),
    })?;
    let text = serde_json::to_string(&report).map_err(io_err)?;
    emit(None, &(text + "\n"))
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen { n, k, ell, seed, setting, denominator, out } => {
            cmd_gen(n, k, ell, seed, setting.into(), denominator, out.as_deref())
        }
        Command::Run {
            instance,
            engine,
            denominator,
            convention,
            enumerate,
            max_leaves,
            seed,
            trajectories,
            jobs,
            out,
        } => {
            let convention = match convention {
                ConventionArg::Ones => ProjectorConvention::Ones,
                ConventionArg::Zeros => ProjectorConvention::Zeros,
            };
            let args = RunArgs { engine, denominator, convention, enumerate, max_leaves, seed, trajectories, jobs };
            cmd_run(&instance, args, out.as_deref())
        }
        Command::VerifyMagicSquare { out } => cmd_verify_magic_square(out.as_deref()),
        Command::Antidistinguish { n, k, setting, engine, max_leaves, emit_dir } => {
            cmd_antidistinguish(n, k, setting.into(), engine.as_deref(), max_leaves, emit_dir.as_deref())
        }
        Command::LieDim { n, k, dump_structure } => cmd_lie_dim(n, k, dump_structure.as_deref()),
        Command::BenchMemory { k, ns, seed } => cmd_bench_memory(k, &ns, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HSMT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
