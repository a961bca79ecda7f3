//! Command-line front end: `simulate`, `fit`, `summarize` and `check`.

pub mod io;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{init_thread_pool_from_env, Parallelism};
use crate::gibbs::{run_chains, ChainConfig, ModelVariant, PriorSpec, RunMetadata, RunOptions};
use crate::inference::{diagnose_columns, summarize, SummaryOptions};
use crate::model::{check_identification, PanelDataset, ParameterDraw};
use crate::simulator::{simulate, SimConfig};
use svg::PlotOptions;

#[derive(Debug, Parser)]
#[command(name = "fatreat", version, about = "Factor-augmented Bayesian treatment-effect models for panel data")]
pub struct Cli {
    /// Seed overriding the one in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Number of chains to run (`fit`).
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Suppress progress and report output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a panel from a scenario config; writes data.csv, truth.csv, meta.json.
    Simulate,
    /// Run the sampler; writes draws_chain<k>.csv and draws_chain<k>.json per chain.
    Fit(FitArgs),
    /// Summarize draws files; writes summary.csv, ate.csv, diagnostics.csv, summary.txt, ate.svg.
    Summarize(SummarizeArgs),
    /// Report the identification condition and per-arm, per-period counts.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Fa,
    Sf,
}

impl From<ModelArg> for ModelVariant {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Fa => ModelVariant::Fa,
            ModelArg::Sf => ModelVariant::Sf,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset (overrides `data` in the config).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model variant (overrides `model` in the config).
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Fit even if the panel is too short for identification.
    #[arg(long)]
    pub allow_unidentified: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Draws files, one per chain (overrides `draws` in the config).
    #[arg(long, num_args = 1..)]
    pub draws: Vec<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Ground truth; defaults to truth.csv next to the data file when present.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// HPD probability mass.
    #[arg(long)]
    pub level: Option<f64>,
    /// Report selection coefficients unstandardized.
    #[arg(long)]
    pub raw_alpha: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Number of outcome-specific factors.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    /// Panel length when it exceeds the last period present in the data.
    pub periods: Option<usize>,
    pub model: ModelVariant,
    pub allow_unidentified: bool,
    pub chains: usize,
    pub prior: PriorSpec,
    pub chain: ChainConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            periods: None,
            model: ModelVariant::Fa,
            allow_unidentified: false,
            chains: 1,
            prior: PriorSpec::default(),
            chain: ChainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizeConfig {
    pub draws: Vec<PathBuf>,
    pub data: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub level: f64,
    pub raw_alpha: bool,
    pub plot: PlotOptions,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        Self {
            draws: Vec::new(),
            data: None,
            truth: None,
            level: 0.95,
            raw_alpha: false,
            plot: PlotOptions::default(),
        }
    }
}

#[derive(Serialize)]
struct SimulationMeta<'a> {
    n: usize,
    periods: usize,
    p_v: usize,
    p_w: usize,
    treated: usize,
    observed_cells: usize,
    ate_true: &'a [f64],
    config: &'a SimConfig,
}

/// Exit status for a failed command: 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool_from_env();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Fit(args) => cmd_fit(cli, args),
        Command::Summarize(args) => cmd_summarize(cli, args),
        Command::Check(args) => cmd_check(cli, args),
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    Ok(&cli.out_dir)
}

fn note(cli: &Cli, msg: &str) {
    if !cli.quiet {
        eprintln!("{msg}");
    }
}

pub fn cmd_simulate(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("simulate needs --config <scenario.json>".into()))?;
    let mut config: SimConfig = io::read_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let (data, truth) = simulate(&config)?;
    let dir = out_dir(cli)?;
    io::write_data(&dir.join("data.csv"), &data)?;
    io::write_truth(&dir.join("truth.csv"), &data, &truth)?;
    let meta = SimulationMeta {
        n: data.n(),
        periods: data.periods(),
        p_v: data.p_v(),
        p_w: data.p_w(),
        treated: data.treatments().iter().map(|&x| x as usize).sum(),
        observed_cells: data.n_cells(),
        ate_true: &truth.ate,
        config: &config,
    };
    io::write_json(&dir.join("meta.json"), &meta)?;
    note(cli, &format!("simulated n={} T={} into {}", data.n(), data.periods(), dir.display()));
    Ok(())
}

pub fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let mut config: FitConfig = match &cli.config {
        Some(p) => io::read_config(p)?,
        None => FitConfig::default(),
    };
    if let Some(d) = &args.data {
        config.data = Some(d.clone());
    }
    if let Some(m) = args.model {
        config.model = m.into();
    }
    if let Some(s) = cli.seed {
        config.chain.seed = s;
    }
    if let Some(c) = cli.chains {
        config.chains = c;
    }
    config.allow_unidentified |= args.allow_unidentified;
    if config.chains == 0 {
        return Err(Error::InvalidConfig("chains must be at least 1".into()));
    }
    config.chain.validate()?;
    let data_path = config
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("fit needs a dataset (--data or `data` in the config)".into()))?;
    let data = io::read_data(data_path, config.periods)?;
    config.prior.validate(data.p_v(), 2 * data.periods() + 2 * data.p_w())?;

    let options = RunOptions {
        variant: config.model,
        allow_unidentified: config.allow_unidentified,
        mode: Parallelism::default(),
    };
    let chains = run_chains(&data, &config.prior, &config.chain, options, config.chains)?;
    let dir = out_dir(cli)?;
    for (k, chain) in chains.iter().enumerate() {
        let stem = format!("draws_chain{}", k + 1);
        io::write_draws(&dir.join(format!("{stem}.csv")), chain)?;
        io::write_json(&dir.join(format!("{stem}.json")), &chain.metadata)?;
        note(
            cli,
            &format!(
                "chain {}: {} draws, seed {}, {:.1} s",
                k + 1,
                chain.draws.len(),
                chain.metadata.seed,
                chain.wall_time.as_secs_f64()
            ),
        );
    }
    Ok(())
}

fn sidecar(draws: &Path) -> Option<RunMetadata> {
    let text = std::fs::read_to_string(draws.with_extension("json")).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn cmd_summarize(cli: &Cli, args: &SummarizeArgs) -> Result<()> {
    let mut config: SummarizeConfig = match &cli.config {
        Some(p) => io::read_config(p)?,
        None => SummarizeConfig::default(),
    };
    if !args.draws.is_empty() {
        config.draws = args.draws.clone();
    }
    if let Some(d) = &args.data {
        config.data = Some(d.clone());
    }
    if let Some(t) = &args.truth {
        config.truth = Some(t.clone());
    }
    if let Some(l) = args.level {
        config.level = l;
    }
    config.raw_alpha |= args.raw_alpha;
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0, 1), got {}", config.level)));
    }
    if config.draws.is_empty() {
        return Err(Error::InvalidConfig("summarize needs at least one draws file".into()));
    }
    let data_path = config
        .data
        .clone()
        .ok_or_else(|| Error::InvalidConfig("summarize needs the dataset (--data)".into()))?;

    let files = config.draws.iter().map(|p| io::read_draws(p)).collect::<Result<Vec<_>>>()?;
    let layout = files[0].columns;
    if files.iter().any(|f| f.columns != layout) {
        return Err(Error::Schema("draws files have different column layouts".into()));
    }
    let data: PanelDataset = io::read_data(&data_path, Some(layout.periods))?;
    if (data.p_v(), data.p_w()) != (layout.p_v, layout.p_w) {
        return Err(Error::Schema(format!(
            "draws are for p_v={}, T={}, p_w={} but the data have p_v={}, T={}, p_w={}",
            layout.p_v,
            layout.periods,
            layout.p_w,
            data.p_v(),
            data.periods(),
            data.p_w()
        )));
    }
    let prior = sidecar(&config.draws[0]).map(|m| m.prior).unwrap_or_default();
    let draws: Vec<ParameterDraw> = files.iter().flat_map(|f| f.draws.iter().cloned()).collect();
    let opts = SummaryOptions {
        level: config.level,
        raw_alpha: config.raw_alpha,
    };
    let (table, ate) = summarize(&draws, &data, &prior, &opts)?;

    let truth_path = config.truth.clone().or_else(|| {
        let p = data_path.with_file_name("truth.csv");
        p.exists().then_some(p)
    });
    let truth = truth_path.as_deref().map(io::read_true_ate).transpose()?;
    if let Some(tr) = &truth {
        if tr.len() != layout.periods {
            return Err(Error::Schema(format!("truth has {} periods, draws have {}", tr.len(), layout.periods)));
        }
    }

    let dir = out_dir(cli)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["parameter", "mean", "sd", "inclusion"])?;
    for r in &table.rows {
        let inc = r.inclusion.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([r.name.clone(), r.mean.to_string(), r.sd.to_string(), inc])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("summary.csv"), e))?;

    let mut w = csv::Writer::from_path(dir.join("ate.csv"))?;
    let mut header = vec!["period", "plug_in", "mean", "lower", "upper"];
    if truth.is_some() {
        header.extend(["truth", "covered"]);
    }
    w.write_record(&header)?;
    let mut coverage = String::new();
    for (t, p) in ate.periods.iter().enumerate() {
        let mut rec = vec![p.period.to_string(), p.plug_in.to_string(), p.mean.to_string(), p.lower.to_string(), p.upper.to_string()];
        if let Some(tr) = &truth {
            let covered = p.lower <= tr[t] && tr[t] <= p.upper;
            rec.push(tr[t].to_string());
            rec.push(covered.to_string());
            let _ = writeln!(coverage, "period {}: true ATE {:.4} {}", p.period, tr[t], if covered { "inside" } else { "OUTSIDE" });
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("ate.csv"), e))?;

    let mut diag_text = String::new();
    let mut w = csv::Writer::from_path(dir.join("diagnostics.csv"))?;
    w.write_record(["chain", "parameter", "ess", "split_z"])?;
    let names = layout.names();
    for (k, f) in files.iter().enumerate() {
        match diagnose_columns(&names, &f.rows) {
            Ok(diag) => {
                let mut worst: Option<(f64, &str)> = None;
                for d in &diag {
                    let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "degenerate".into());
                    w.write_record([(k + 1).to_string(), d.name.clone(), fmt(d.ess), fmt(d.split_z)])?;
                    if let Some(z) = d.split_z {
                        if worst.is_none_or(|(b, _)| z.abs() > b) {
                            worst = Some((z.abs(), &d.name));
                        }
                    }
                }
                if let Some((z, name)) = worst {
                    let _ = writeln!(diag_text, "chain {}: largest |split-half z| {z:.2} ({name})", k + 1);
                }
            }
            Err(e) => {
                let _ = writeln!(diag_text, "chain {}: diagnostics skipped ({e})", k + 1);
            }
        }
    }
    w.flush().map_err(|e| Error::io(dir.join("diagnostics.csv"), e))?;

    let report = format!(
        "{} draws from {} chain(s)\n\n{}\n{}{}\n{}",
        draws.len(),
        files.len(),
        table.to_text(),
        ate.to_text(),
        coverage,
        diag_text
    );
    std::fs::write(dir.join("summary.txt"), &report).map_err(|e| Error::io(dir.join("summary.txt"), e))?;
    let figure = svg::ate_figure(&ate, truth.as_deref(), &config.plot);
    std::fs::write(dir.join("ate.svg"), figure).map_err(|e| Error::io(dir.join("ate.svg"), e))?;
    if !cli.quiet {
        print!("{report}");
    }
    Ok(())
}

pub fn cmd_check(cli: &Cli, args: &CheckArgs) -> Result<()> {
    let data = io::read_data(&args.data, None)?;
    let (t, r) = (data.periods(), args.r);
    let lhs = t * (t + 1);
    let rhs = 2 * (r + 1) * t + 1;
    let ok = check_identification(t, r);
    let counts = data.arm_period_counts();
    if !cli.quiet {
        println!("T = {t}, r = {r}");
        println!(
            "identification: T(T+1) = {lhs} {} 2(r+1)T + 1 = {rhs}: {}",
            if ok { ">=" } else { "<" },
            if ok { "pass" } else { "fail" }
        );
        println!("{:>6}  {:>8}  {:>8}", "period", "n_0t", "n_1t");
        for s in 0..t {
            println!("{:>6}  {:>8}  {:>8}", s + 1, counts[0][s], counts[1][s]);
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Error::NotIdentified { t, r, lhs, rhs })
    }
}
