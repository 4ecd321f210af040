mod commands;
mod opts;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use cayleylab::numerics::PrecisionMode;
use cayleylab::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use opts::{BarrierOpts, BoundsOpts, Common, CpOpts, PermanentOpts, RationalOpts, ReduceOpts, TvOpts};

#[derive(Parser)]
#[command(name = "cayleylab", version, about = "Seeded experiments on worst-to-average-case reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags of one subcommand: shared keys, the subcommand's own keys and an optional config file.
#[derive(Args)]
struct Invocation<T: Args> {
    /// JSON config; its keys are the flag names with dashes replaced by underscores.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: T,
}

#[derive(Subcommand)]
enum Command {
    /// Recover Pr[0^n] of a target circuit from a corrupted average-case oracle.
    Reduce(Invocation<ReduceOpts>),
    /// The same under depolarizing noise.
    ReduceNoisy(Invocation<ReduceOpts>),
    /// Recover |Per X0|^2 of a 0/1 matrix from a corrupted permanent oracle.
    PermanentReduce(Invocation<PermanentOpts>),
    /// Collision-probability decay: closed form against Monte Carlo.
    CpDecay(Invocation<CpOpts>),
    /// Extrapolation-bound witnesses.
    Bounds(Invocation<BoundsOpts>),
    /// Held-out degree check of the perturbed family's numerator.
    RationalCheck(Invocation<RationalOpts>),
    /// Eigenphase total-variation estimates along the Cayley path.
    TvScan(Invocation<TvOpts>),
    /// Deviation of the barrier polynomial from the squared permanent.
    BarrierDemo(Invocation<BarrierOpts>),
}

fn load<T: Args + DeserializeOwned + Default>(inv: Invocation<T>, merge: fn(T, T) -> T) -> Result<(Common, T)> {
    let Some(path) = &inv.config else {
        return Ok((inv.common, inv.opts));
    };
    let text = commands::read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
    let obj = value.as_object().ok_or_else(|| Error::InvalidInput("config must be a JSON object".into()))?;
    let mut shared = serde_json::Map::new();
    let mut own = serde_json::Map::new();
    for (k, v) in obj {
        if ["seed", "precision", "threads", "output"].contains(&k.as_str()) {
            shared.insert(k.clone(), v.clone());
        } else {
            own.insert(k.clone(), v.clone());
        }
    }
    let file_common: Common =
        serde_json::from_value(shared.into()).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
    let file_opts: T = serde_json::from_value(own.into()).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
    Ok((inv.common.over(file_common), merge(inv.opts, file_opts)))
}

fn seed(common: &Common) -> Result<u64> {
    if let Some(s) = common.seed {
        return Ok(s);
    }
    match std::env::var("CAYLEYLAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidInput(format!("CAYLEYLAB_SEED '{v}' is not an integer"))),
        Err(_) => Ok(0),
    }
}

/// Writes through a temporary file in the destination directory, renamed on success.
fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("output: {e}"));
    match output {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    macro_rules! prepare {
        ($inv:expr, $ty:ty) => {{
            let (common, opts) = load::<$ty>($inv, <$ty>::over)?;
            if let Some(t) = common.threads {
                if t == 0 {
                    return Err(Error::InvalidInput("threads must be at least 1".into()));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| Error::InvalidInput(e.to_string()))?;
            }
            let seed = seed(&common)?;
            (common, opts, seed)
        }};
    }
    let precision = |c: &Common, default| commands::parse_precision(c.precision.as_deref(), default);
    let (common, text) = match cli.command {
        Command::Reduce(inv) => {
            let (common, opts, seed) = prepare!(inv, ReduceOpts);
            let p = precision(&common, PrecisionMode::DoubleDouble)?;
            commands::check_reduce(&opts, p, false)?;
            let text = commands::reduce_cmd(&opts, seed, p, false)?;
            (common, text)
        }
        Command::ReduceNoisy(inv) => {
            let (common, opts, seed) = prepare!(inv, ReduceOpts);
            let p = precision(&common, PrecisionMode::DoubleDouble)?;
            commands::check_reduce(&opts, p, true)?;
            let text = commands::reduce_cmd(&opts, seed, p, true)?;
            (common, text)
        }
        Command::PermanentReduce(inv) => {
            let (common, opts, seed) = prepare!(inv, PermanentOpts);
            let p = precision(&common, PrecisionMode::DoubleDouble)?;
            commands::check_permanent(&opts)?;
            let text = commands::permanent_cmd(&opts, seed, p)?;
            (common, text)
        }
        Command::CpDecay(inv) => {
            let (common, opts, seed) = prepare!(inv, CpOpts);
            precision(&common, PrecisionMode::Native)?;
            commands::check_cp(&opts)?;
            let text = commands::cp_cmd(&opts, seed)?;
            (common, text)
        }
        Command::Bounds(inv) => {
            let (common, opts, seed) = prepare!(inv, BoundsOpts);
            precision(&common, PrecisionMode::Native)?;
            let text = commands::bounds_cmd(&opts, seed)?;
            (common, text)
        }
        Command::RationalCheck(inv) => {
            let (common, opts, seed) = prepare!(inv, RationalOpts);
            let p = precision(&common, PrecisionMode::DoubleDouble)?;
            commands::check_rational(&opts)?;
            let text = commands::rational_cmd(&opts, seed, p)?;
            (common, text)
        }
        Command::TvScan(inv) => {
            let (common, opts, seed) = prepare!(inv, TvOpts);
            precision(&common, PrecisionMode::Native)?;
            let text = commands::tv_cmd(&opts, seed)?;
            (common, text)
        }
        Command::BarrierDemo(inv) => {
            let (common, opts, seed) = prepare!(inv, BarrierOpts);
            precision(&common, PrecisionMode::Native)?;
            let text = commands::barrier_cmd(&opts, seed)?;
            (common, text)
        }
    };
    emit(common.output.as_deref(), &text)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SearchExhausted { .. } => 3,
        e if e.is_numerical() => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", commands::error_json(&e, code as i32));
            ExitCode::from(code)
        }
    }
}
