//! Command-line front end.
//!
//! Every subcommand reads a `RunConfig`, runs one computation and writes a
//! table as CSV (17 significant digits) or JSON. Exit codes: 0 ok, 1 runtime
//! failure, 2 configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::conditioning;
use crate::config::{parse_override, read_table, ConfigError, Format, RunConfig};
use crate::error::Error;
use crate::fock;
use crate::illumination::{self, Branch, ErrorMode, Outcome, ProbeKind, Scenario, ShotLikelihoods};
use crate::sequential::{self, EnsembleSummary, Execution};

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "QILLUM_OUTPUT_DIR";

pub const SINGLE_SHOT_HEADER: &[&str] = &[
    "probe",
    "branch",
    "nbar_probe",
    "herald_prob",
    "p_h0",
    "p_h1",
    "posterior_click",
    "posterior_no_click",
    "error_click",
];
pub const SWEEP_HEADER: &[&str] = &[
    "nbar",
    "p_h0",
    "p_h1_coherent",
    "p_h1_pnst",
    "p_h1_vst",
    "p_h1_vst_matched",
    "posterior_click_coherent",
    "posterior_click_vst",
    "posterior_click_matched",
    "err_click_vst",
];
pub const SWEEP_BOUNDS_HEADER: &[&str] = &["helstrom_coherent", "chernoff_coherent"];
pub const BOUNDS_HEADER: &[&str] = &[
    "nbar",
    "helstrom_coherent",
    "chernoff_coherent",
    "chernoff_s",
    "err_click_coherent",
    "err_click_vst",
    "err_click_tmsv_averaged",
];
pub const WIGNER_HEADER: &[&str] = &["eta_i", "x", "w_pnst", "w_vst"];
pub const MATCH_HEADER: &[&str] = &["nbar_alpha", "eta", "nbar_s"];
pub const TRIALS_HEADER: &[&str] = &[
    "probe",
    "trial",
    "final_posterior",
    "first_passage",
    "first_passage_below",
    "sent_shots",
    "herald_clicks",
    "detector_clicks",
];
pub const TRACES_HEADER: &[&str] = &[
    "probe",
    "trial",
    "sent_shot",
    "counted_shot",
    "branch",
    "outcome",
    "posterior",
];

#[derive(Parser, Debug)]
#[command(name = "qillum", version, about = "Quantum illumination with click detectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Click probabilities, posteriors and errors for one scenario.
    SingleShot(CommonArgs),
    /// Click probabilities over a grid of probe brightness.
    Sweep(CommonArgs),
    /// Wigner-function slices of the heralded signal states.
    Wigner(CommonArgs),
    /// Monte-Carlo ensembles of sequential detection, one per probe kind.
    Trajectories(CommonArgs),
    /// TMSV brightness click-matched to a coherent probe.
    Match(CommonArgs),
    /// Fock-basis validation of every closed form for one scenario.
    Oracle(CommonArgs),
    /// Helstrom and Chernoff bounds against single-shot click errors.
    Bounds(CommonArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// TOML or JSON config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set kappa=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for ensembles and bound sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Add Helstrom and Chernoff columns to a sweep.
    #[arg(long)]
    bounds: bool,
    /// Also write per-trial statistics for trajectories.
    #[arg(long)]
    per_trial: bool,
    /// Fock truncation override for the oracle.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run ensembles on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Entry point used by the binary.
pub fn main_entry() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::SingleShot(a) => cmd_single_shot(&load(&a)?),
        Command::Sweep(a) => cmd_sweep(&load(&a)?),
        Command::Wigner(a) => cmd_wigner(&load(&a)?),
        Command::Trajectories(a) => {
            let exec = if a.sequential { Some(Execution::Sequential) } else { None };
            cmd_trajectories(&load(&a)?, exec)
        }
        Command::Match(a) => cmd_match(&load(&a)?),
        Command::Oracle(a) => cmd_oracle(&load(&a)?),
        Command::Bounds(a) => cmd_bounds(&load(&a)?),
    }
}

/// File < `--set` overrides < dedicated flags.
fn load(args: &CommonArgs) -> CliResult<RunConfig> {
    let mut table = match &args.config {
        Some(p) => read_table(p)?,
        None => Map::new(),
    };
    for pair in &args.set {
        let (k, v) = parse_override(pair)?;
        table.insert(k, v);
    }
    let flags: [(&str, Option<Value>); 6] = [
        ("output", args.output.as_ref().map(|p| json!(p))),
        ("format", args.format.map(|f| json!(f))),
        ("threads", args.threads.map(|t| json!(t))),
        ("oracle_dim", args.dim.map(|d| json!(d))),
        ("seed", args.seed.map(|s| json!(s))),
        ("bounds", args.bounds.then_some(json!(true))),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            table.insert(k.into(), v);
        }
    }
    if args.per_trial {
        table.insert("per_trial".into(), json!(true));
    }
    Ok(RunConfig::from_table(table)?)
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<Option<usize>> for Cell {
    fn from(x: Option<usize>) -> Self {
        x.map_or(Cell::Empty, |v| Cell::Int(v as u64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect()))
                .collect(),
        )
    }
}

/// Resolves an output path against `QILLUM_OUTPUT_DIR` when relative.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            let p = resolve_output(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&p, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit(cfg: &RunConfig, table: &Table) -> CliResult<()> {
    let text = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let doc = json!({ "config": cfg, "rows": table.to_json() });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    };
    write_text(cfg.output.as_deref(), &text)
}

/// Sibling of the main output path with a suffix on the stem.
fn sibling_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    let base = cfg.output.clone().unwrap_or_else(|| PathBuf::from("trajectories.csv"));
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectories");
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn map_rows<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let go = || items.par_iter().map(&f).collect();
        match threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool construction")
                .install(go),
            None => go(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        items.iter().map(f).collect()
    }
}

fn posterior(lik: &ShotLikelihoods, outcome: Outcome) -> f64 {
    illumination::posterior_update(0.5, lik, outcome).unwrap_or(f64::NAN)
}

fn click_error(p_h1: f64, p_h0: f64) -> f64 {
    0.5 * (1.0 - p_h1) + 0.5 * p_h0
}

fn single_shot_rows(scenario: &Scenario) -> CliResult<Table> {
    let mut table = Table::new(SINGLE_SHOT_HEADER);
    let p0 = illumination::p_click_h0(scenario);
    let mut push = |probe: ProbeKind, branch: &str, nbar: f64, herald: Cell, p1: f64| {
        let lik = ShotLikelihoods {
            p_click_h0: p0,
            p_click_h1: p1,
            probe_label: Branch::Coherent,
        };
        table.push(vec![
            probe.label().into(),
            branch.into(),
            nbar.into(),
            herald,
            p0.into(),
            p1.into(),
            posterior(&lik, Outcome::Click).into(),
            posterior(&lik, Outcome::NoClick).into(),
            click_error(p1, p0).into(),
        ]);
    };

    let coh = scenario.with_probe(ProbeKind::Coherent);
    push(
        ProbeKind::Coherent,
        "coherent",
        coh.nbar,
        Cell::Empty,
        illumination::p_click_h1_coherent(&coh),
    );

    for kind in [ProbeKind::Tmsv, ProbeKind::TmsvMatched] {
        let s = scenario.with_probe(kind);
        let n = match s.tmsv_nbar() {
            Ok(n) => n,
            Err(e) => {
                warn(format!("{}: {e}", kind.label()));
                for b in ["pnst", "vst", "herald_averaged"] {
                    push(kind, b, f64::NAN, Cell::Num(f64::NAN), f64::NAN);
                }
                continue;
            }
        };
        let no_click = illumination::herald_no_click_prob(&s)?;
        let pnst = illumination::p_click_h1_pnst(&s)?;
        push(kind, "pnst", n, Cell::Num(no_click), pnst);
        match illumination::p_click_h1_vst(&s) {
            Ok(vst) => {
                push(kind, "vst", n, Cell::Num(1.0 - no_click), vst);
                push(
                    kind,
                    "herald_averaged",
                    n,
                    Cell::Num(1.0),
                    no_click * pnst + (1.0 - no_click) * vst,
                );
            }
            Err(Error::DegenerateHeralding(p)) => {
                warn(format!("{}: VST undefined, heralding probability {p:e}", kind.label()));
                push(kind, "vst", n, Cell::Num(1.0 - no_click), f64::NAN);
                push(kind, "herald_averaged", n, Cell::Num(1.0), pnst);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(table)
}

pub fn cmd_single_shot(cfg: &RunConfig) -> CliResult<()> {
    let table = single_shot_rows(&cfg.scenario()?)?;
    emit(cfg, &table)
}

fn bounds_at(scenario: &Scenario, nbar: f64) -> Result<(f64, fock::ChernoffBound), Error> {
    let (rho0, rho1) = fock::coherent_vs_background(nbar, scenario.kappa, scenario.nbar_b)?;
    Ok((fock::helstrom_error(&rho0, &rho1, 0.5)?, fock::chernoff_bound(&rho0, &rho1)?))
}

fn sweep_row(scenario: &Scenario, nbar: f64, with_bounds: bool) -> Vec<Cell> {
    let s = scenario.with_nbar(nbar);
    let tm = s.with_probe(ProbeKind::Tmsv);
    let mm = s.with_probe(ProbeKind::TmsvMatched);
    let p0 = illumination::p_click_h0(&s);
    let nan_on_err = |r: crate::Result<f64>, what: &str| {
        r.unwrap_or_else(|e| {
            warn(format!("nbar = {nbar}: {what}: {e}"));
            f64::NAN
        })
    };
    let coh = illumination::p_click_h1_coherent(&s);
    let pnst = nan_on_err(illumination::p_click_h1_pnst(&tm), "p_h1_pnst");
    let vst = nan_on_err(illumination::p_click_h1_vst(&tm), "p_h1_vst");
    let vst_m = nan_on_err(illumination::p_click_h1_vst(&mm), "p_h1_vst_matched");
    let post = |p1: f64| {
        if p1.is_nan() {
            return f64::NAN;
        }
        let lik = ShotLikelihoods {
            p_click_h0: p0,
            p_click_h1: p1,
            probe_label: Branch::Coherent,
        };
        posterior(&lik, Outcome::Click)
    };
    let mut row: Vec<Cell> = vec![
        nbar.into(),
        p0.into(),
        coh.into(),
        pnst.into(),
        vst.into(),
        vst_m.into(),
        post(coh).into(),
        post(vst).into(),
        post(vst_m).into(),
        click_error(vst, p0).into(),
    ];
    if with_bounds {
        match bounds_at(&s, nbar) {
            Ok((h, c)) => row.extend([h.into(), c.value.into()]),
            Err(e) => {
                warn(format!("nbar = {nbar}: bounds: {e}"));
                row.extend([Cell::Num(f64::NAN), Cell::Num(f64::NAN)]);
            }
        }
    }
    row
}

pub fn sweep_table(cfg: &RunConfig) -> CliResult<Table> {
    let scenario = cfg.scenario()?;
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if cfg.bounds {
        header.extend_from_slice(SWEEP_BOUNDS_HEADER);
    }
    let mut table = Table::new(&header);
    for row in map_rows(&cfg.nbar_grid(), cfg.threads, |&n| sweep_row(&scenario, n, cfg.bounds)) {
        table.push(row);
    }
    Ok(table)
}

pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    emit(cfg, &sweep_table(cfg)?)
}

pub fn bounds_table(cfg: &RunConfig) -> CliResult<Table> {
    let scenario = cfg.scenario()?;
    let mut table = Table::new(BOUNDS_HEADER);
    let rows = map_rows(&cfg.nbar_grid(), cfg.threads, |&nbar| {
        let s = scenario.with_nbar(nbar);
        let tm = s.with_probe(ProbeKind::Tmsv);
        let p0 = illumination::p_click_h0(&s);
        let err = |mode: ErrorMode| {
            illumination::single_shot_error(&tm, mode).unwrap_or_else(|e| {
                warn(format!("nbar = {nbar}: {e}"));
                f64::NAN
            })
        };
        let (h, c, s_opt) = match bounds_at(&s, nbar) {
            Ok((h, c)) => (h, c.value, c.s_opt),
            Err(e) => {
                warn(format!("nbar = {nbar}: bounds: {e}"));
                (f64::NAN, f64::NAN, f64::NAN)
            }
        };
        vec![
            nbar.into(),
            h.into(),
            c.into(),
            s_opt.into(),
            click_error(illumination::p_click_h1_coherent(&s), p0).into(),
            err(ErrorMode::VstBranch).into(),
            err(ErrorMode::HeraldAveraged).into(),
        ]
    });
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

pub fn cmd_bounds(cfg: &RunConfig) -> CliResult<()> {
    emit(cfg, &bounds_table(cfg)?)
}

pub fn wigner_table(cfg: &RunConfig) -> CliResult<Table> {
    let xs = cfg.x_grid();
    let etas = if cfg.eta_i_values.is_empty() {
        vec![cfg.eta_i()]
    } else {
        cfg.eta_i_values.clone()
    };
    let mut table = Table::new(WIGNER_HEADER);
    for eta_i in etas {
        let det = crate::DetectorModel::new(eta_i, cfg.nbar_d_i).map_err(|e| CliError::Config(e.to_string()))?;
        let slice = conditioning::wigner_slice(cfg.nbar, &det, &xs)?;
        if slice.w_vst.iter().any(|w| w.is_nan()) {
            warn(format!("eta_i = {eta_i}: heralding degenerate, w_vst is NaN"));
        }
        for i in 0..xs.len() {
            table.push(vec![
                eta_i.into(),
                slice.x[i].into(),
                slice.w_pnst[i].into(),
                slice.w_vst[i].into(),
            ]);
        }
    }
    Ok(table)
}

pub fn cmd_wigner(cfg: &RunConfig) -> CliResult<()> {
    emit(cfg, &wigner_table(cfg)?)
}

pub fn cmd_match(cfg: &RunConfig) -> CliResult<()> {
    let eta = cfg.intercept_eta.unwrap_or(cfg.eta);
    let n_s = illumination::match_click_probability(cfg.nbar, eta)?;
    let mut table = Table::new(MATCH_HEADER);
    table.push(vec![cfg.nbar.into(), eta.into(), n_s.into()]);
    emit(cfg, &table)
}

pub fn cmd_oracle(cfg: &RunConfig) -> CliResult<()> {
    let report = fock::validate_scenario(&cfg.scenario()?, cfg.oracle_dim)?;
    let text = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_text(cfg.output.as_deref(), &text)?;
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    eprintln!(
        "{verdict}, max deviation {:.3e} (tolerance {:.0e}, dim {})",
        report.max_deviation, report.tolerance, report.dim
    );
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Runtime("oracle validation failed".into()))
    }
}

/// Paired ensembles for every probe kind in the config.
pub fn run_trajectories(cfg: &RunConfig, exec: Option<Execution>) -> CliResult<Vec<EnsembleSummary>> {
    let exec = exec.unwrap_or(match cfg.threads {
        Some(n) => Execution::Parallel { threads: Some(n) },
        None => Execution::default(),
    });
    let configs: Vec<_> = cfg.probes.iter().map(|&p| cfg.trajectory_config(p)).collect();
    Ok(sequential::paired_comparison(&configs, exec)?)
}

pub fn trajectory_summary_table(summaries: &[EnsembleSummary]) -> Table {
    let mut header = vec!["shot".to_string()];
    for s in summaries {
        header.push(format!("mean_{}", s.probe_kind.label()));
        header.push(format!("std_{}", s.probe_kind.label()));
    }
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    if let Some(first) = summaries.first() {
        for (i, &shot) in first.shot_index.iter().enumerate() {
            let mut row = vec![Cell::Int(shot as u64)];
            for s in summaries {
                row.push(s.mean_posterior[i].into());
                row.push(s.std_posterior[i].into());
            }
            table.rows.push(row);
        }
    }
    table
}

pub fn trials_table(summaries: &[EnsembleSummary]) -> Table {
    let mut table = Table::new(TRIALS_HEADER);
    for s in summaries {
        for t in &s.trial_stats {
            table.push(vec![
                s.probe_kind.label().into(),
                Cell::Int(t.trial as u64),
                t.final_posterior.into(),
                t.first_passage.into(),
                t.first_passage_below.into(),
                Cell::Int(t.branches.sent()),
                Cell::Int(t.branches.vst.shots),
                Cell::Int(t.branches.detector_clicks()),
            ]);
        }
    }
    table
}

fn traces_table(summaries: &[EnsembleSummary]) -> Table {
    let mut table = Table::new(TRACES_HEADER);
    for s in summaries {
        for tr in &s.traces {
            for k in 0..tr.detector_outcomes.len() {
                let branch = tr.herald_outcomes[k].map_or("n/a", |b| b.label());
                let outcome = match tr.detector_outcomes[k] {
                    Outcome::Click => "click",
                    Outcome::NoClick => "no_click",
                };
                let counted = tr.counted_index[k];
                table.push(vec![
                    s.probe_kind.label().into(),
                    Cell::Int(tr.trial as u64),
                    Cell::Int(k as u64 + 1),
                    Cell::Int(counted as u64),
                    branch.into(),
                    outcome.into(),
                    tr.posteriors[counted].into(),
                ]);
            }
        }
    }
    table
}

#[derive(Serialize)]
struct CrossingReport<'a> {
    probe: &'a str,
    crossing_above: Option<usize>,
    crossing_below: Option<usize>,
}

pub fn cmd_trajectories(cfg: &RunConfig, exec: Option<Execution>) -> CliResult<()> {
    let skipped: Vec<usize> = cfg.trace_trials.iter().copied().filter(|&t| t >= cfg.trials).collect();
    if !skipped.is_empty() {
        warn(format!(
            "trace_trials {skipped:?} not below trials = {}; no trace written for them",
            cfg.trials
        ));
    }
    let summaries = run_trajectories(cfg, exec)?;
    // Rounded so that 1 - 0.8 prints as 0.2.
    let lower = ((1.0 - cfg.threshold) * 1e12).round() / 1e12;
    for s in &summaries {
        let r = CrossingReport {
            probe: s.probe_kind.label(),
            crossing_above: s.mean_crossing_above(cfg.threshold),
            crossing_below: s.mean_crossing_below(1.0 - cfg.threshold),
        };
        eprintln!(
            "{}: mean Pr(H1) above {} at shot {:?}, below {} at shot {:?}",
            r.probe, cfg.threshold, r.crossing_above, lower, r.crossing_below
        );
    }
    match cfg.format {
        Format::Json => {
            let doc = json!({ "config": cfg, "ensembles": summaries });
            write_text(
                cfg.output.as_deref(),
                &(serde_json::to_string(&doc).expect("serializable") + "\n"),
            )
        }
        Format::Csv => {
            write_text(cfg.output.as_deref(), &trajectory_summary_table(&summaries).to_csv())?;
            if cfg.per_trial {
                write_text(Some(&sibling_path(cfg, "trials")), &trials_table(&summaries).to_csv())?;
            }
            if summaries.iter().any(|s| !s.traces.is_empty()) {
                write_text(Some(&sibling_path(cfg, "traces")), &traces_table(&summaries).to_csv())?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_precision() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Num(0.1), Cell::Num(f64::NAN)]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b\n1.0000000000000001e-1,NaN\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn json_nan_is_null() {
        let mut t = Table::new(&["a"]);
        t.push(vec![Cell::Num(f64::NAN)]);
        assert_eq!(t.to_json(), json!([{ "a": null }]));
    }
}
