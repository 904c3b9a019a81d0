//! Command-line front end. Handlers return their report as text so tests can
//! drive them without a subprocess.

pub mod presets;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::chsh::{NullConvention, SettingPair, TSIRELSON_BOUND};
use crate::engine::{
    event_ready_filter, read_csv_path, run, run_replications, write_csv, write_csv_path, ExperimentConfig, Physics,
    TrialLog,
};
use crate::error::{Error, Result};
use crate::quantum::{correlations, make_bell_state, tsirelson_settings, BellSign, SettingsQuad};
use crate::spacetime::{
    check_event_set, foc_exclusion_time, interval_table, ArrangementReport, FocExclusion, IntervalKind, SpacetimeEvent,
};
use crate::stats::{
    efficiency_bound, estimate_s, gaussian_significance, martingale_pvalue, renormalized_correlation, setting_balance,
    ChshEstimate, EfficiencyBound, RenormalizedCorrelation, SettingBalance, SignificanceReport, WinRule,
};
use crate::synthesize::{
    max_chsh_given_efficiency, min_mutual_information, verify_adversary, AdversaryReport, MiOptions, Verification,
};

use presets::{preset, ScenarioPreset, METERS_PER_LIGHT_YEAR, PRESET_NAMES};

const DEFAULT_SCENARIO_TRIALS: u64 = 200_000;

#[derive(Debug, Parser)]
#[command(name = "bellkit", version, about = "Bell-CHSH simulation, loophole adversaries and audits")]
pub struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a preset modeled on a historical experiment.
    Scenario(ScenarioArgs),
    /// Run an experiment config and write the trial log as CSV.
    Simulate(SimulateArgs),
    /// Estimate S and significance from a trial-log CSV.
    Analyze(AnalyzeArgs),
    /// Check the spacetime arrangement of an event set.
    Audit(AuditArgs),
    /// Construct a local model exploiting a loophole.
    Synthesize(SynthesizeArgs),
    /// Local-realist ceiling on S at detector efficiency eta.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Preset name; `list` prints the available presets.
    pub name: String,
    #[arg(long, default_value_t = DEFAULT_SCENARIO_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the preset's config as JSON and exit.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Analyzer angles `a,a',b,b'` in degrees, replacing those of a quantum config.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub angles: Option<Vec<f64>>,
    /// Trial-log CSV path; the log goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Independent replications (seeds split from the base seed); each log is
    /// written to `<out stem>_<k>.csv`.
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    /// Worker threads for replications.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trial-log CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// `discard` (drop runs with a null) or `minus` (null counts as -1).
    #[arg(long, default_value = "discard")]
    pub convention: NullConvention,
    /// Detector efficiency, for the renormalized-correlation check.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Keep only heralded trials.
    #[arg(long)]
    pub heralded_only: bool,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// JSON array of `{label, t, x, y, z}`, or an object with `events` and
    /// optional `setting_sources_a` / `setting_sources_b`.
    #[arg(long, required_unless_present = "log")]
    pub events: Option<PathBuf>,
    /// Audit the first trial of a log that carries event coordinates.
    #[arg(long, conflicts_with = "events")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(subcommand)]
    pub kind: SynthesizeKind,
}

#[derive(Debug, Subcommand)]
pub enum SynthesizeKind {
    /// Best local model under detector efficiency eta.
    Detection {
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value = "discard")]
        convention: NullConvention,
        /// Replay the model for this many trials and compare.
        #[arg(long)]
        verify: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Setting-dependent local model with least mutual information.
    Foc {
        /// Four target correlations E(a,b),E(a,b'),E(a',b),E(a',b'); defaults
        /// to the ideal Bell state at the Tsirelson settings.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        targets: Option<Vec<f64>>,
        #[arg(long, default_value_t = MiOptions::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = MiOptions::default().seed)]
        seed: u64,
        #[arg(long)]
        verify: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub eta: f64,
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: {e}");
                    3
                }
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command and return what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Scenario(a) => cmd_scenario(a, cli.json),
        Command::Simulate(a) => cmd_simulate(a, cli.json),
        Command::Analyze(a) => cmd_analyze(a, cli.json),
        Command::Audit(a) => cmd_audit(a, cli.json),
        Command::Synthesize(a) => cmd_synthesize(a, cli.json),
        Command::Bound(a) => cmd_bound(a, cli.json),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn preset_list() -> String {
    PRESET_NAMES.join(", ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub preset: ScenarioPreset,
    pub chsh: ChshEstimate,
    /// Trials analyzed (heralded ones under event-ready heralding).
    pub trials_analyzed: u64,
    pub significance: SignificanceReport,
    pub balance: SettingBalance,
    /// `|S - 2√2| / se`.
    pub tsirelson_deviation_se: f64,
    pub tsirelson_consistent: bool,
    pub audit: ArrangementReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub foc_exclusion_years: Option<FocExclusion>,
    pub difference_note: String,
}

pub fn run_scenario(name: &str, trials: u64, seed: u64) -> Result<ScenarioReport> {
    let preset = preset(name, trials, seed)
        .ok_or_else(|| Error::usage(format!("unknown preset '{name}'; available: {}", preset_list())))?;
    let config = &preset.config;
    let log = run(config)?;
    let log = if config.heralding_probability < 1.0 { event_ready_filter(&log) } else { log };
    let chsh = estimate_s(&log, NullConvention::DiscardNulls)?;
    let significance = martingale_pvalue(&log, &WinRule::bell_plus(), NullConvention::DiscardNulls)?;
    let balance = setting_balance(&log)?;
    let geometry = config.geometry.as_ref().expect("presets carry geometry");
    let audit = check_event_set(&geometry.spacetime_events(0))?;
    let foc = if geometry.setting_sources_a.is_empty() {
        None
    } else {
        let f = foc_exclusion_time(&geometry.setting_sources_a, &geometry.setting_sources_b)?;
        Some(FocExclusion {
            exclusion_time: f.exclusion_time / METERS_PER_LIGHT_YEAR,
            latest_common_cause: f.latest_common_cause / METERS_PER_LIGHT_YEAR,
        })
    };
    let deviation = (chsh.s - TSIRELSON_BOUND).abs() / chsh.std_error;
    Ok(ScenarioReport {
        trials_analyzed: log.len() as u64,
        tsirelson_deviation_se: deviation,
        tsirelson_consistent: deviation <= 3.0,
        preset,
        chsh,
        significance,
        balance,
        audit,
        foc_exclusion_years: foc,
        difference_note: "apparatus fidelity, unmodeled".to_string(),
    })
}

fn audit_lines(out: &mut String, audit: &ArrangementReport) {
    let _ = writeln!(out, "audit: {}", if audit.pass { "PASS" } else { "FAIL" });
    for c in &audit.conditions {
        let _ = writeln!(out, "  ({}) {} {}", c.id, if c.pass { "ok  " } else { "FAIL" }, c.description);
        for v in c.violations() {
            let _ = writeln!(
                out,
                "       {} vs {}: s2 = {:.6e} ({:?}), needs {}",
                v.first, v.second, v.s2, v.kind, v.requirement
            );
        }
    }
}

fn cmd_scenario(a: &ScenarioArgs, json: bool) -> Result<String> {
    if a.name == "list" {
        let mut out = String::new();
        for name in PRESET_NAMES {
            let p = preset(name, 1, 0).expect("listed preset");
            let _ = writeln!(out, "{name:<17} {}", p.description);
        }
        return Ok(out);
    }
    if let Some(path) = &a.dump_config {
        let p = preset(&a.name, a.trials, a.seed)
            .ok_or_else(|| Error::usage(format!("unknown preset '{}'; available: {}", a.name, preset_list())))?;
        std::fs::write(path, to_json(&p.config)?)?;
        return Ok(format!("wrote {}\n", path.display()));
    }
    let r = run_scenario(&a.name, a.trials, a.seed)?;
    if json {
        return to_json(&r);
    }
    let p = &r.preset;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", p.name);
    let _ = writeln!(out, "  {}", p.description);
    let _ = writeln!(
        out,
        "simulated: S = {:.4} ± {:.4} ({} coincidences, {} trials analyzed, seed {})",
        r.chsh.s,
        r.chsh.std_error,
        r.chsh.correlations.iter().map(|c| c.used).sum::<u64>(),
        r.trials_analyzed,
        p.config.seed
    );
    let _ = writeln!(out, "paper: {}", p.reference_text);
    let _ = writeln!(out, "difference: {}", r.difference_note);
    let _ = writeln!(
        out,
        "ideal check: |S - 2√2| = {:.2} se ({})",
        r.tsirelson_deviation_se,
        if r.tsirelson_consistent { "within 3 se" } else { "OUTSIDE 3 se" }
    );
    let _ = writeln!(
        out,
        "CHSH game: {} wins of {} ({:.4}), martingale p = {:.3e}{}",
        r.significance.wins,
        r.significance.trials_used,
        r.significance.win_fraction,
        r.significance.martingale_p,
        if r.significance.underflow { " (clamped)" } else { "" }
    );
    let _ = writeln!(
        out,
        "setting source: {} (epsilon {:.4}){}",
        p.config.setting_source.label(),
        r.balance.epsilon,
        if r.balance.predictable { ", flagged PREDICTABLE" } else { "" }
    );
    audit_lines(&mut out, &r.audit);
    if let Some(f) = &r.foc_exclusion_years {
        let _ = writeln!(
            out,
            "FOC exclusion time: {} yr (latest common cause of the setting sources {} yr)",
            fmt_years(f.exclusion_time),
            fmt_years(f.latest_common_cause)
        );
    }
    for n in &p.notes {
        let _ = writeln!(out, "note: {n}");
    }
    Ok(out)
}

/// Whole years for small lookbacks, three significant digits in exponent
/// form for cosmological ones.
fn fmt_years(v: f64) -> String {
    if v.abs() < 1e6 {
        format!("{:.0}", v)
    } else {
        format!("{:.3e}", v)
    }
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    trials: u64,
    seed: u64,
    source: String,
    outputs: Vec<String>,
    #[serde(rename = "S")]
    s: Option<f64>,
    se: Option<f64>,
}

fn cmd_simulate(a: &SimulateArgs, json: bool) -> Result<String> {
    let mut config: ExperimentConfig = read_json(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(trials) = a.trials {
        config.trials = trials;
    }
    if let Some(angles) = &a.angles {
        let [x, xp, y, yp]: [f64; 4] = angles
            .as_slice()
            .try_into()
            .map_err(|_| Error::usage("--angles takes four comma-separated values in degrees"))?;
        match &mut config.physics {
            Physics::Quantum { settings, .. } => *settings = SettingsQuad::from_degrees(x, xp, y, yp),
            _ => return Err(Error::usage("--angles applies only to quantum physics")),
        }
    }
    config.validate()?;
    if a.replications == 0 {
        return Err(Error::usage("--replications must be at least 1"));
    }
    let logs = if a.replications == 1 {
        vec![run(&config)?]
    } else {
        if a.out.is_none() {
            return Err(Error::usage("--replications needs --out"));
        }
        match a.jobs {
            Some(jobs) => rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::usage(format!("cannot start {jobs} workers: {e}")))?
                .install(|| run_replications(&config, a.replications))?,
            None => run_replications(&config, a.replications)?,
        }
    };

    let Some(out) = &a.out else {
        let mut buf = Vec::new();
        write_csv(&logs[0], &mut buf)?;
        return String::from_utf8(buf).map_err(|e| Error::domain(e.to_string()));
    };
    let mut outputs = Vec::new();
    if logs.len() == 1 {
        write_csv_path(&logs[0], out)?;
        outputs.push(out.display().to_string());
    } else {
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        for (k, log) in logs.iter().enumerate() {
            let path = out.with_file_name(format!("{stem}_{k}.csv"));
            write_csv_path(log, &path)?;
            outputs.push(path.display().to_string());
        }
    }
    let est = estimate_s(&logs[0], NullConvention::DiscardNulls).ok();
    let summary = SimulateSummary {
        trials: config.trials,
        seed: config.seed,
        source: config.setting_source.label().to_string(),
        outputs,
        s: est.as_ref().map(|e| e.s),
        se: est.as_ref().map(|e| e.std_error),
    };
    if json {
        return to_json(&summary);
    }
    let mut text = format!(
        "simulated {} trials (seed {}, source {})\n",
        summary.trials, summary.seed, summary.source
    );
    if let (Some(s), Some(se)) = (summary.s, summary.se) {
        let _ = writeln!(text, "S = {s:.4} ± {se:.4}");
    }
    for o in &summary.outputs {
        let _ = writeln!(text, "wrote {o}");
    }
    Ok(text)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    #[serde(rename = "S")]
    pub s: f64,
    pub se: f64,
    /// `(S - 2)/se`; null when `se` is zero.
    pub sigma: Option<f64>,
    /// Martingale p-value of the CHSH game.
    pub p: f64,
    /// Largest deviation of a joint-setting frequency from 1/4.
    pub epsilon: f64,
    pub convention: NullConvention,
    pub trials: u64,
    pub chsh: ChshEstimate,
    pub significance: SignificanceReport,
    pub balance: SettingBalance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub renormalized: Option<Vec<RenormalizedCorrelation>>,
}

pub fn analyze_log(log: &TrialLog, convention: NullConvention, eta: Option<f64>) -> Result<AnalyzeReport> {
    log.check_order()?;
    let chsh = estimate_s(log, convention)?;
    let sigma = if chsh.std_error > 0.0 {
        Some(gaussian_significance(chsh.s, chsh.std_error)?)
    } else {
        None
    };
    let significance = martingale_pvalue(log, &WinRule::bell_plus(), convention)?;
    let balance = setting_balance(log)?;
    let renormalized = match eta {
        Some(eta) => Some(
            SettingPair::ALL
                .iter()
                .map(|&p| renormalized_correlation(log, p, Some(eta)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(AnalyzeReport {
        s: chsh.s,
        se: chsh.std_error,
        sigma,
        p: significance.martingale_p,
        epsilon: balance.epsilon,
        convention,
        trials: log.len() as u64,
        chsh,
        significance,
        balance,
        renormalized,
    })
}

fn cmd_analyze(a: &AnalyzeArgs, json: bool) -> Result<String> {
    let mut log = read_csv_path(&a.log)?;
    if a.heralded_only {
        log = event_ready_filter(&log);
    }
    let r = analyze_log(&log, a.convention, a.eta)?;
    if json {
        return to_json(&r);
    }
    let mut out = String::new();
    let _ = writeln!(out, "trials: {} ({})", r.trials, r.convention.name());
    for c in &r.chsh.correlations {
        let _ = writeln!(out, "E{} = {:+.4} ± {:.4} ({} runs)", c.pair, c.value, c.std_error, c.used);
    }
    match r.sigma {
        Some(sigma) => {
            let _ = writeln!(out, "S = {:.4} ± {:.4}, {sigma:.2} sigma above 2", r.s, r.se);
        }
        None => {
            let _ = writeln!(out, "S = {:.4} with zero standard error", r.s);
        }
    }
    let _ = writeln!(
        out,
        "martingale p = {:.3e}{} ({} wins of {})",
        r.p,
        if r.significance.underflow { " (clamped)" } else { "" },
        r.significance.wins,
        r.significance.trials_used
    );
    let _ = writeln!(out, "setting imbalance epsilon = {:.4}", r.epsilon);
    if let Some(rs) = &r.renormalized {
        for c in rs {
            let _ = writeln!(
                out,
                "E'{}/E = {:.4} ± {:.4} (expected {:.4}){}",
                c.pair,
                c.ratio,
                c.ratio_std_error,
                c.expected_ratio.unwrap_or(f64::NAN),
                if c.consistent == Some(false) { " INCONSISTENT" } else { "" }
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EventFile {
    Events(Vec<SpacetimeEvent>),
    WithSources {
        events: Vec<SpacetimeEvent>,
        #[serde(default)]
        setting_sources_a: Vec<SpacetimeEvent>,
        #[serde(default)]
        setting_sources_b: Vec<SpacetimeEvent>,
    },
}

#[derive(Debug, Serialize)]
struct IntervalRow {
    first: String,
    second: String,
    s2: f64,
    kind: IntervalKind,
}

#[derive(Debug, Serialize)]
struct AuditReport {
    arrangement: ArrangementReport,
    intervals: Vec<IntervalRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    foc_exclusion: Option<FocExclusion>,
}

fn cmd_audit(a: &AuditArgs, json: bool) -> Result<String> {
    let (events, sources) = if let Some(path) = &a.events {
        match read_json::<EventFile>(path)? {
            EventFile::Events(ev) => (ev, None),
            EventFile::WithSources {
                events,
                setting_sources_a,
                setting_sources_b,
            } => {
                let sources = (!setting_sources_a.is_empty() || !setting_sources_b.is_empty())
                    .then_some((setting_sources_a, setting_sources_b));
                (events, sources)
            }
        }
    } else {
        let path = a.log.as_ref().expect("clap requires --events or --log");
        let log = read_csv_path(path)?;
        let first = log.records.first().ok_or_else(|| Error::insufficient("empty trial log"))?;
        let ev = first
            .spacetime_events()
            .ok_or_else(|| Error::domain("trial log has no event-coordinate columns"))?;
        (ev.to_vec(), None)
    };
    for e in &events {
        SpacetimeEvent::new(e.label.clone(), e.t, e.x)?;
    }
    let arrangement = check_event_set(&events)?;
    let foc_exclusion = match &sources {
        Some((sa, sb)) => Some(foc_exclusion_time(sa, sb)?),
        None => None,
    };
    let report = AuditReport {
        intervals: interval_table(&events)
            .into_iter()
            .map(|(first, second, i)| IntervalRow {
                first,
                second,
                s2: i.s2,
                kind: i.kind,
            })
            .collect(),
        arrangement,
        foc_exclusion,
    };
    if json {
        return to_json(&report);
    }
    let mut out = String::new();
    audit_lines(&mut out, &report.arrangement);
    let _ = writeln!(out, "intervals:");
    for row in &report.intervals {
        let _ = writeln!(out, "  {} - {}: s2 = {:.6e} {:?}", row.first, row.second, row.s2, row.kind);
    }
    if let Some(f) = &report.foc_exclusion {
        let _ = writeln!(
            out,
            "FOC exclusion time: {} (latest common cause {})",
            f.exclusion_time, f.latest_common_cause
        );
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SynthesizeOutput<'a> {
    #[serde(flatten)]
    report: &'a AdversaryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<Verification>,
}

fn cmd_synthesize(a: &SynthesizeArgs, json: bool) -> Result<String> {
    let (report, verify, seed, out) = match &a.kind {
        SynthesizeKind::Detection {
            eta,
            convention,
            verify,
            seed,
            out,
        } => (max_chsh_given_efficiency(*eta, *convention)?, *verify, *seed, out),
        SynthesizeKind::Foc {
            targets,
            restarts,
            seed,
            verify,
            out,
        } => {
            let targets: [f64; 4] = match targets {
                Some(t) => t
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::usage("--targets takes four comma-separated values"))?,
                None => correlations(&make_bell_state(BellSign::Plus), &tsirelson_settings())?,
            };
            let opts = MiOptions {
                restarts: *restarts,
                seed: *seed,
                ..MiOptions::default()
            };
            (min_mutual_information(&targets, &[0.25; 4], &opts)?, *verify, *seed, out)
        }
    };
    let verification = match verify {
        Some(n) => Some(verify_adversary(&report, n, seed)?),
        None => None,
    };
    let body = to_json(&SynthesizeOutput {
        report: &report,
        verification,
    })?;
    if let Some(path) = out {
        std::fs::write(path, &body)?;
    }
    if json {
        return Ok(body);
    }
    let mut text = String::new();
    let _ = writeln!(text, "adversary: {:?} ({})", report.kind, report.status);
    let _ = writeln!(text, "achieved S = {:.6} ({})", report.achieved_s, report.convention.name());
    if let Some(eta) = report.efficiency {
        let bound = efficiency_bound(eta)?;
        let _ = writeln!(text, "efficiency {eta}, bound 4/η - 2 = {:.6}", bound.bound);
    }
    if let Some(r) = report.renormalized_s {
        let _ = writeln!(text, "renormalized S = {r:.6}");
    }
    if let Some(i) = report.achieved_i {
        let _ = writeln!(text, "mutual information I = {i:.7} bits");
    }
    let _ = writeln!(
        text,
        "strategies in support: {}, max residual {:.2e}",
        report.model.lambda_support().len(),
        report.max_residual
    );
    if let Some(v) = &verification {
        let _ = writeln!(
            text,
            "replay: S = {:.4} ± {:.4} over {} trials, {:.2} se from the model ({})",
            v.s,
            v.se,
            v.trials,
            v.deviation_se,
            if v.consistent { "consistent" } else { "INCONSISTENT" }
        );
    }
    if let Some(path) = out {
        let _ = writeln!(text, "wrote {}", path.display());
    }
    Ok(text)
}

fn cmd_bound(a: &BoundArgs, json: bool) -> Result<String> {
    let b: EfficiencyBound = efficiency_bound(a.eta)?;
    if json {
        return to_json(&b);
    }
    Ok(format!(
        "4/{} - 2 = {:.6}, loophole {} (critical efficiency {:.6})\n",
        b.eta,
        b.bound,
        if b.loophole_open { "OPEN" } else { "CLOSED" },
        b.critical_efficiency
    ))
}
