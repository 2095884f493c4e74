//! `eh-opt` command-line front end. All results go out as CSV with `#`
//! metadata lines ahead of a fixed header.

pub mod args;
pub mod commands;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::decoder_energy::DecoderEnergyModel;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use args::{parse_g_list, GridDims, SweepSpec};
use commands::VerifyConfig;

/// Environment variable capping worker threads (0 or unset = all cores).
pub const THREADS_ENV: &str = "EH_OPT_THREADS";

#[derive(Parser, Debug, Clone)]
#[command(
    name = "eh-opt",
    version,
    about = "Transmit power, harvest time-split and code rate optimization for energy-harvesting receivers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct LinkArgs {
    /// RF-to-DC conversion efficiency in (0, 1]
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub eta: f64,
    /// Receiver overhead energy per channel use, net of ambient harvesting
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub g: f64,
    /// Average transmit energy per channel use
    #[arg(long = "e-avg", default_value_t = 0.5, allow_negative_numbers = true)]
    pub e_avg: f64,
    /// Peak transmit energy per channel use
    #[arg(long = "e-lim", default_value_t = 3.0, allow_negative_numbers = true)]
    pub e_lim: f64,
    /// Channel uses per block (scales reported bit totals only)
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Decoder energy model: theta-log-theta or power-law:c=<c>,p=<p>
    #[arg(long = "ed-model", default_value = "theta-log-theta")]
    pub ed_model: DecoderEnergyModel,
}

impl LinkArgs {
    /// Parameters without validation; commands decide how to treat bad values.
    pub fn raw(&self) -> SystemParams {
        SystemParams {
            eta: self.eta,
            g: self.g,
            e_avg: self.e_avg,
            e_lim: self.e_lim,
            n: self.n,
        }
    }

    pub fn params(&self) -> Result<SystemParams> {
        let p = self.raw();
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Write CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BlockArgs {
    /// Number of blocks, each with overhead --g (ignored when --g-list is given unless it disagrees)
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Per-block overheads, comma separated
    #[arg(long = "g-list", value_parser = parse_g_list_arg)]
    pub g_list: Option<GList>,
}

/// Parsed `--g-list` value.
#[derive(Debug, Clone, PartialEq)]
pub struct GList(pub Vec<f64>);

fn parse_g_list_arg(s: &str) -> Result<GList> {
    parse_g_list(s).map(GList)
}

impl BlockArgs {
    fn resolve(&self, g: f64, default_blocks: usize) -> Result<Vec<f64>> {
        match (&self.g_list, self.blocks) {
            (Some(list), Some(n)) if list.0.len() != n => Err(Error::InvalidParams(format!(
                "--blocks {n} disagrees with --g-list of length {}",
                list.0.len()
            ))),
            (Some(list), _) => Ok(list.0.clone()),
            (None, n) => {
                let n = n.unwrap_or(default_blocks);
                if n == 0 {
                    return Err(Error::InvalidParams("--blocks must be at least 1".into()));
                }
                Ok(vec![g; n])
            }
        }
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Optimal operating point for one block
    SolveSingle {
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Transfer schedule and per-block operating points for several blocks
    SolveMulti {
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        blocks: BlockArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimized versus constant-power bits along one parameter
    SweepSingle {
        #[command(flatten)]
        link: LinkArgs,
        /// var:start:stop:step with var one of eta, g, e_avg, e_lim
        #[arg(long, default_value = "e_avg:0.1:2.9:0.1")]
        sweep: SweepSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Winning case over an (e_lim, e_avg) grid of cell centres
    RegionMap {
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        eta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        g: f64,
        /// Upper end of both axes
        #[arg(long = "e-lim", default_value_t = 4.0, allow_negative_numbers = true)]
        e_lim: f64,
        /// Rows (e_lim) x columns (e_avg)
        #[arg(long, default_value = "40x40")]
        grid: GridDims,
        #[arg(long = "ed-model", default_value = "theta-log-theta")]
        ed_model: DecoderEnergyModel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Upper bound versus iterative solver along e_avg
    SweepMulti {
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        blocks: BlockArgs,
        #[arg(long, default_value = "e_avg:0.1:2.9:0.1")]
        sweep: SweepSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare solvers against brute-force oracles on random instances
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Oracle grid, theta points x e_i points
        #[arg(long, default_value = "400x400")]
        grid: GridDims,
        #[arg(long = "tol-scale", default_value_t = 1.0, hide = true)]
        tol_scale: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidParams(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker threads: {e}")))
}

/// Output text, destination and whether the command succeeded.
struct Outcome {
    text: String,
    out: Option<PathBuf>,
    ok: bool,
    diagnostics: Vec<String>,
}

fn execute(cmd: &Command) -> Result<Outcome> {
    let done = |text: String, out: &OutArgs| Outcome {
        text,
        out: out.out.clone(),
        ok: true,
        diagnostics: Vec::new(),
    };
    Ok(match cmd {
        Command::SolveSingle { link, out } => done(commands::solve_single(&link.params()?, &link.ed_model)?, out),
        Command::SolveMulti { link, blocks, out } => {
            let g_list = blocks.resolve(link.g, 1)?;
            done(commands::solve_multi(&link.raw(), g_list, &link.ed_model)?, out)
        }
        Command::SweepSingle { link, sweep, out } => {
            done(commands::sweep_single(&link.raw(), &link.ed_model, sweep)?, out)
        }
        Command::RegionMap {
            eta,
            g,
            e_lim,
            grid,
            ed_model,
            out,
        } => done(commands::region_map_csv(*eta, *g, *e_lim, *grid, ed_model)?, out),
        Command::SweepMulti {
            link,
            blocks,
            sweep,
            out,
        } => {
            let g_list = blocks.resolve(link.g, 4)?;
            done(commands::sweep_multi(&link.raw(), g_list, &link.ed_model, sweep)?, out)
        }
        Command::Verify {
            seed,
            instances,
            grid,
            tol_scale,
            out,
        } => {
            let report = commands::verify(&VerifyConfig {
                seed: *seed,
                instances: *instances,
                grid: *grid,
                tol_scale: *tol_scale,
            })?;
            Outcome {
                ok: report.passed(),
                diagnostics: report.failures.iter().map(|f| format!("FAIL {f}")).collect(),
                text: report.csv,
                out: out.out.clone(),
            }
        }
    })
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// failed command or verification, 2 on a usage error.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| execute(&cli.command)));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let written = match &outcome.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout
            .write_all(outcome.text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return 1;
    }
    for d in &outcome.diagnostics {
        let _ = writeln!(stderr, "{d}");
    }
    if outcome.ok {
        0
    } else {
        1
    }
}
