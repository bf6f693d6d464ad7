//! Command-line front end.
//!
//! Every subcommand shares one flag set; [`RunConfig::from_cli`] checks the
//! combination for the chosen command before any work starts. Worker threads
//! follow `RAYON_NUM_THREADS`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::ErasureRate;
use crate::codec::MessageLayout;
use crate::error::{Error, Result};
use crate::interval::certify_inequality;
use crate::sim::{self, SimReport, SweepRow, SweepTiming, DEFAULT_SEED};
use crate::tree::{epsilon_for_depth, CodeSpec, LeafClass};

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SUBDIVISIONS: usize = 100_000;
pub const DEFAULT_LO: f64 = 0.9;
pub const DEFAULT_HI: f64 = 1.0;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVALID_CONFIG: u8 = 1;
    pub const INCONCLUSIVE: u8 = 2;
}

#[derive(Debug, Parser)]
#[command(name = "pruned-polar", version, about = "Pruned polar codes over binary erasure channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    /// Grow a tree, print its metrics and write it as JSON
    Construct,
    /// Monte Carlo block-error and timing run
    Simulate,
    /// Exact metrics for eps = 2^(-n/5) over a range of n, as CSV
    Sweep,
    /// Sample mean of the stopping depth
    SampleTau,
    /// Certify the scaling inequality with interval arithmetic
    Verify,
    /// Write the per-position frozen/information pattern
    Export,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Construct => "construct",
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::SampleTau => "sample-tau",
            CommandKind::Verify => "verify",
            CommandKind::Export => "export",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Erasure probability of the channel
    #[arg(long, global = true)]
    pub z0: Option<f64>,
    /// Target error probability; defaults to 2^(-n/5) when only --n is given
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Depth cap; defaults to ceil(-5 log2 eps). For `sweep`, the last n
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// First n of a sweep
    #[arg(long, global = true)]
    pub n_min: Option<u32>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Channel uses per sweep row for the timing column (e.g. 1048576)
    #[arg(long, global = true)]
    pub channel_uses: Option<u64>,
    #[arg(long, global = true)]
    pub subdivisions: Option<usize>,
    #[arg(long, global = true)]
    pub lo: Option<f64>,
    #[arg(long, global = true)]
    pub hi: Option<f64>,
    /// Tree JSON to export instead of growing one
    #[arg(long, global = true)]
    pub tree: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

/// Validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub z0: Option<ErasureRate<f64>>,
    pub epsilon: Option<f64>,
    pub n: Option<u32>,
    pub n_min: u32,
    pub trials: u64,
    pub seed: u64,
    pub channel_uses: Option<u64>,
    pub subdivisions: usize,
    pub lo: f64,
    pub hi: f64,
    pub tree: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        use CommandKind::*;
        let f = cli.flags;
        let cmd = cli.command;

        let allowed: &[&str] = match cmd {
            Construct => &["z0", "epsilon", "n", "out", "format"],
            Simulate => &["z0", "epsilon", "n", "trials", "seed", "out", "format"],
            Sweep => &["z0", "n", "n-min", "channel-uses", "seed", "out", "format"],
            SampleTau => &["z0", "epsilon", "n", "trials", "seed", "out", "format"],
            Verify => &["lo", "hi", "subdivisions", "out", "format"],
            Export => &["z0", "epsilon", "n", "tree", "out"],
        };
        let given = [
            ("z0", f.z0.is_some()),
            ("epsilon", f.epsilon.is_some()),
            ("n", f.n.is_some()),
            ("n-min", f.n_min.is_some()),
            ("trials", f.trials.is_some()),
            ("seed", f.seed.is_some()),
            ("channel-uses", f.channel_uses.is_some()),
            ("subdivisions", f.subdivisions.is_some()),
            ("lo", f.lo.is_some()),
            ("hi", f.hi.is_some()),
            ("tree", f.tree.is_some()),
            ("out", f.out.is_some()),
            ("format", f.format.is_some()),
        ];
        for (flag, present) in given {
            if present && !allowed.contains(&flag) {
                return Err(invalid(format!("--{flag} has no effect on `{}`", cmd.name())));
            }
        }

        let z0 = f.z0.map(ErasureRate::new).transpose()?;
        let needs_code = matches!(cmd, Construct | Simulate | SampleTau) || (cmd == Export && f.tree.is_none());
        if needs_code {
            if z0.is_none() {
                return Err(invalid(format!("`{}` needs --z0", cmd.name())));
            }
            if f.epsilon.is_none() && f.n.is_none() {
                return Err(invalid(format!("`{}` needs --epsilon, --n or both", cmd.name())));
            }
        }
        if cmd == Export && f.tree.is_some() && (f.z0.is_some() || f.epsilon.is_some() || f.n.is_some()) {
            return Err(invalid("`export --tree` takes the code from the file; drop --z0/--epsilon/--n"));
        }
        if let Some(eps) = f.epsilon {
            if !eps.is_finite() || eps <= 0.0 {
                return Err(invalid(format!("--epsilon must be positive and finite, got {eps}")));
            }
            if eps >= 1.0 && f.n.is_none() {
                return Err(invalid("--epsilon >= 1 needs an explicit --n"));
            }
        }
        if cmd == Sweep {
            if z0.is_none() {
                return Err(invalid("`sweep` needs --z0"));
            }
            let last = f.n.ok_or_else(|| invalid("`sweep` needs --n (last depth of the range)"))?;
            if f.n_min.unwrap_or(0) > last {
                return Err(invalid("--n-min must not exceed --n"));
            }
        }
        if f.trials == Some(0) {
            return Err(invalid("--trials must be at least 1"));
        }
        if f.subdivisions == Some(0) {
            return Err(invalid("--subdivisions must be at least 1"));
        }
        let lo = f.lo.unwrap_or(DEFAULT_LO);
        let hi = f.hi.unwrap_or(DEFAULT_HI);
        if cmd == Verify && !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid(format!("need 0 <= --lo < --hi <= 1, got {lo} and {hi}")));
        }
        if cmd == Construct && f.format == Some(Format::Csv) {
            return Err(invalid("`construct` writes JSON only"));
        }

        let default_format = match cmd {
            Sweep => Format::Csv,
            _ => Format::Json,
        };
        Ok(Self {
            command: cmd,
            z0,
            epsilon: f.epsilon,
            n: f.n,
            n_min: f.n_min.unwrap_or(0),
            trials: f.trials.unwrap_or(DEFAULT_TRIALS),
            seed: f.seed.unwrap_or(DEFAULT_SEED),
            channel_uses: f.channel_uses,
            subdivisions: f.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS),
            lo,
            hi,
            tree: f.tree,
            out: f.out,
            format: f.format.unwrap_or(default_format),
        })
    }

    /// Epsilon and depth override for a code, with `eps = 2^(-n/5)` when only
    /// `n` was given.
    fn code_params(&self) -> Result<(ErasureRate<f64>, f64, Option<u32>)> {
        let z0 = self.z0.clone().ok_or_else(|| invalid("missing --z0"))?;
        match (self.epsilon, self.n) {
            (Some(eps), n) => Ok((z0, eps, n)),
            (None, Some(n)) => Ok((z0, epsilon_for_depth(n), Some(n))),
            (None, None) => Err(invalid("missing --epsilon/--n")),
        }
    }

    fn build_spec(&self) -> Result<CodeSpec<f64>> {
        let (z0, eps, n) = self.code_params()?;
        CodeSpec::grow(z0, eps, n)
    }
}

/// What a command produced: the main payload and an optional summary that
/// goes to the terminal when the payload is written to a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub payload: String,
    pub summary: Option<String>,
    pub exit_code: u8,
}

impl CommandOutput {
    fn payload(payload: String) -> Self {
        Self {
            payload,
            summary: None,
            exit_code: exit::OK,
        }
    }
}

pub fn construct_summary(spec: &CodeSpec<f64>) -> String {
    format!(
        "n = {}\nepsilon = {}\nthreshold = {}\nnodes = {}\ninfo_leaves = {}\nN = {}\nR = {}\np_bound = {}\nE[tau] = {}\n",
        spec.n(),
        spec.epsilon(),
        spec.threshold(),
        spec.tree().len(),
        spec.info_set().len(),
        spec.block_length(),
        spec.rate(),
        spec.p_bound(),
        spec.expected_tau()
    )
}

pub fn cmd_construct(cfg: &RunConfig) -> Result<CommandOutput> {
    let spec = cfg.build_spec()?;
    Ok(CommandOutput {
        payload: spec.to_json()? + "\n",
        summary: Some(construct_summary(&spec)),
        exit_code: exit::OK,
    })
}

fn render<T: Serialize>(format: Format, header: &str, rows: &[T], line: impl Fn(&T) -> String) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = if rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])?
            } else {
                serde_json::to_string_pretty(rows)?
            };
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from(header);
            s.push('\n');
            for r in rows {
                s.push_str(&line(r));
                s.push('\n');
            }
            s
        }
    })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let spec = cfg.build_spec()?;
    let report = sim::monte_carlo(&spec, cfg.trials, cfg.seed)?;
    let text = render(cfg.format, SimReport::CSV_HEADER, std::slice::from_ref(&report), |r| r.csv_line())?;
    Ok(CommandOutput::payload(text))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput> {
    let z0 = cfg.z0.clone().ok_or_else(|| invalid("missing --z0"))?;
    let last = cfg.n.ok_or_else(|| invalid("missing --n"))?;
    let timing = cfg.channel_uses.map(|channel_uses| SweepTiming {
        channel_uses,
        seed: cfg.seed,
    });
    let rows = sim::sweep(&z0, cfg.n_min..=last, timing)?;
    let text = render(cfg.format, SweepRow::CSV_HEADER, &rows, SweepRow::csv_line)?;
    Ok(CommandOutput::payload(text))
}

#[derive(Debug, Serialize)]
struct TauReport {
    z0: f64,
    epsilon: f64,
    n: u32,
    trials: u64,
    seed: u64,
    mean: f64,
    variance: f64,
}

pub fn cmd_sample_tau(cfg: &RunConfig) -> Result<CommandOutput> {
    let (z0, epsilon, n) = cfg.code_params()?;
    let n = match n {
        Some(n) => n,
        None => crate::tree::default_depth(epsilon)?,
    };
    let s = sim::sample_tau(&z0, epsilon, n, cfg.trials, cfg.seed)?;
    let report = TauReport {
        z0: z0.to_f64(),
        epsilon,
        n,
        trials: s.trials,
        seed: cfg.seed,
        mean: s.mean,
        variance: s.variance,
    };
    let text = render(cfg.format, "z0,epsilon,n,trials,seed,mean,variance", &[report], |r| {
        format!(
            "{},{},{},{},{},{},{}",
            r.z0, r.epsilon, r.n, r.trials, r.seed, r.mean, r.variance
        )
    })?;
    Ok(CommandOutput::payload(text))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    let cert = certify_inequality(cfg.lo, cfg.hi, cfg.subdivisions)?;
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&cert)? + "\n",
        Format::Csv => format!(
            "lo,hi,subdivisions,verified,max_upper,inconclusive\n{},{},{},{},{},{}\n",
            cert.lo, cert.hi, cert.subdivisions, cert.verified, cert.max_upper, cert.inconclusive
        ),
    };
    Ok(CommandOutput {
        payload: text,
        summary: Some(format!(
            "verified = {}\nmax_upper = {}\nsubdivisions = {}\n",
            cert.verified, cert.max_upper, cert.subdivisions
        )),
        exit_code: if cert.verified { exit::OK } else { exit::INCONCLUSIVE },
    })
}

/// `index,leaf_depth,z,class` for every position in layout order.
pub fn positions_file(spec: &CodeSpec<f64>) -> Result<String> {
    let layout = MessageLayout::new(spec)?;
    let mut out = String::new();
    for block in layout.blocks() {
        let node = spec.tree().node(block.leaf);
        let class = match block.class {
            LeafClass::Information => "info",
            LeafClass::Frozen => "frozen",
        };
        for index in block.range() {
            out.push_str(&format!("{index},{},{},{class}\n", node.depth(), node.z()));
        }
    }
    Ok(out)
}

pub fn cmd_export(cfg: &RunConfig) -> Result<CommandOutput> {
    let spec = match &cfg.tree {
        Some(path) => CodeSpec::from_json(&fs::read_to_string(path)?)?,
        None => cfg.build_spec()?,
    };
    Ok(CommandOutput::payload(positions_file(&spec)?))
}

pub fn execute(cfg: &RunConfig) -> Result<CommandOutput> {
    match cfg.command {
        CommandKind::Construct => cmd_construct(cfg),
        CommandKind::Simulate => cmd_simulate(cfg),
        CommandKind::Sweep => cmd_sweep(cfg),
        CommandKind::SampleTau => cmd_sample_tau(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Export => cmd_export(cfg),
    }
}

/// Runs a parsed command line, writing to the given streams. Returns the
/// process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let result = RunConfig::from_cli(cli).and_then(|cfg| {
        let output = execute(&cfg)?;
        match &cfg.out {
            Some(path) => {
                fs::write(path, &output.payload)?;
                if let Some(summary) = &output.summary {
                    stdout.write_all(summary.as_bytes())?;
                }
            }
            None => {
                stdout.write_all(output.payload.as_bytes())?;
                if let Some(summary) = &output.summary {
                    stderr.write_all(summary.as_bytes())?;
                }
            }
        }
        Ok(output.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit::INVALID_CONFIG
        }
    }
}
