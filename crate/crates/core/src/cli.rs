//! The `calibkit` command line.
//!
//! Exit status: 0 on success, 2 on bad input (with a one-line diagnostic on
//! stderr), 1 on I/O failure. Every run that gets past argument parsing
//! writes `manifest.json` into the output directory, which is `--out`, else
//! `$CALIBKIT_OUT_DIR`, else `calibkit-out`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calibration::{calibration_curve, CalibrationCurve, CurveMethod, CurveSource};
use crate::conditions::{audit_only, AuditConfig, ConditionId, ConditionReport};
use crate::conversion::{convert_calibrated, convert_dominating, convert_mtnc, zhang_constant, RiskBoundInput};
use crate::experiments::{
    default_erm_curve, kink_counterexample, logistic_equivalence, reproduce_table2, simulate_erm, ExperimentResult,
    SyntheticProblem,
};
use crate::losses::{LossSpec, PhiKind, Transform};
use crate::optimize::OptimizerSettings;
use crate::spec_io::{read_loss, read_problem};
use crate::{Error, Result};

pub const OUT_DIR_ENV: &str = "CALIBKIT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "calibkit-out";

#[derive(Parser, Debug)]
#[command(name = "calibkit", version, about = "Calibration functions for multiclass surrogate losses")]
struct Cli {
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Optimizer restarts (default 16, or 4 for audit).
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BinaryMethod {
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentName {
    Table2,
    Kink,
    LogisticEq,
    Erm,
}

#[derive(clap::Args, Debug)]
struct PhiArgs {
    /// Transformation kind, e.g. hinge, squared, kink.
    #[arg(long)]
    phi: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

impl PhiArgs {
    fn transform(&self) -> Result<Transform> {
        let mut t = Transform::new(self.phi.parse::<PhiKind>()?);
        if let Some(v) = self.tau {
            t.tau = v;
        }
        if let Some(v) = self.a {
            t.a = v;
        }
        if let Some(v) = self.b {
            t.b = v;
        }
        t.validate()?;
        Ok(t)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Binary calibration function of a transformation on an ε grid.
    DeltaBinary {
        #[command(flatten)]
        phi: PhiArgs,
        /// `a:b:step` or a comma-separated list.
        #[arg(long)]
        eps_grid: String,
        #[arg(long, value_enum, default_value_t = BinaryMethod::Closed)]
        method: BinaryMethod,
    },
    /// Grid oracle for the maximum calibration function of a loss.
    DeltaMax {
        #[arg(long)]
        loss: PathBuf,
        #[arg(long)]
        eps_grid: String,
        #[arg(long, default_value_t = 20)]
        resolution: usize,
    },
    /// Checks the reduction conditions and structural assumptions of a loss.
    Audit {
        #[arg(long)]
        loss: PathBuf,
        /// Comma-separated condition names; all applicable ones by default.
        #[arg(long, value_delimiter = ',')]
        conditions: Option<Vec<String>>,
    },
    /// Converts a surrogate excess risk into a 0-1 excess risk bound.
    Convert {
        /// Calibration curve CSV with at least `eps` and `delta` columns.
        #[arg(long, required_unless_present = "dominating")]
        curve: Option<PathBuf>,
        #[arg(long)]
        excess: f64,
        /// Noise condition constants as `c,alpha`.
        #[arg(long, conflicts_with = "dominating")]
        mtnc: Option<String>,
        /// Infimum of the surrogate risk, for losses dominating the 0-1 loss.
        #[arg(long)]
        dominating: Option<f64>,
    },
    /// Curvature constant of the binary conditional risk of a transformation.
    ZhangConstant {
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Runs a reproduction and records pass/fail per assertion.
    Experiment {
        #[arg(long, value_enum)]
        name: ExperimentName,
        /// ERM problem JSON (erm only).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Loss spec JSON (erm only; defaults to LR).
        #[arg(long)]
        loss: Option<PathBuf>,
        /// Class count (logistic-eq only).
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Simplex resolution (logistic-eq only).
        #[arg(long, default_value_t = 10)]
        resolution: usize,
        /// Comma-separated sample sizes (erm only).
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DeltaBinary { .. } => "delta-binary",
            Command::DeltaMax { .. } => "delta-max",
            Command::Audit { .. } => "audit",
            Command::Convert { .. } => "convert",
            Command::ZhangConstant { .. } => "zhang-constant",
            Command::Experiment { .. } => "experiment",
        }
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub format: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Overall verdict of an experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    /// File names inside the output directory.
    pub artifacts: Vec<String>,
}

/// One line of the audit report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition_id: String,
    pub verdict: String,
    pub margin: f64,
    pub witness_json: String,
    pub samples: usize,
    pub failures: usize,
    pub tolerance: f64,
    pub notes: String,
}

impl From<&ConditionReport> for ReportRow {
    fn from(r: &ConditionReport) -> Self {
        ReportRow {
            condition_id: r.condition_id.name().to_string(),
            verdict: r.verdict.to_string(),
            margin: r.margin,
            witness_json: r.witness.as_ref().map_or(String::new(), |w| serde_json::to_string(w).expect("witness is plain data")),
            samples: r.samples,
            failures: r.failures,
            tolerance: r.tolerance,
            notes: r.notes.join("; "),
        }
    }
}

/// Parses `a:b:step` (inclusive of b up to rounding) or `x,y,z`.
pub fn parse_eps_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::field("eps-grid", format!("{msg}: `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:step"));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || !(b >= a) {
            return Err(bad("need step > 0 and b ≥ a"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        (0..=n).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(bad("ε values must lie in (0, 1]"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("ε values must increase"));
    }
    Ok(grid)
}

/// Up to 12 decimals, trailing zeros removed.
fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

struct Run {
    dir: PathBuf,
    format: Format,
    verbose: u8,
    settings: OptimizerSettings,
    seed: u64,
    artifacts: Vec<String>,
    pass: Option<bool>,
}

impl Run {
    fn write(&mut self, name: &str, body: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn curve(&mut self, stem: &str, curve: &CalibrationCurve) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut buf = Vec::new();
                curve.write_csv(&mut buf)?;
                self.write(&format!("{stem}.csv"), &buf)?;
            }
            Format::Json => self.write(&format!("{stem}.json"), curve.to_json()?.as_bytes())?,
        }
        for p in &curve.points {
            println!("eps = {}  delta = {}", fmt_num(p.eps), fmt_num(p.delta));
        }
        Ok(())
    }

    fn experiment(&mut self, res: &ExperimentResult) -> Result<()> {
        self.write(&format!("{}.json", res.name), serde_json::to_string_pretty(res)?.as_bytes())?;
        if self.format == Format::Csv {
            for (t, body) in &res.tables {
                self.write(&format!("{}_{t}.csv", res.name), body.as_bytes())?;
            }
        }
        for d in &res.details {
            if self.verbose > 0 || !d.pass {
                let note = d.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
                println!("{} {}: margin {:.3e}{note}", if d.pass { "pass" } else { "FAIL" }, d.name, d.margin);
            }
        }
        println!("{}: {}", res.name, if res.pass { "pass" } else { "fail" });
        self.pass = Some(res.pass);
        Ok(())
    }
}

fn execute(cmd: &Command, run: &mut Run) -> Result<()> {
    let st = run.settings;
    match cmd {
        Command::DeltaBinary { phi, eps_grid, method } => {
            let phi = phi.transform()?;
            let grid = parse_eps_grid(eps_grid)?;
            let m = match method {
                BinaryMethod::Closed => CurveMethod::ClosedForm,
                BinaryMethod::Numeric => CurveMethod::NumericBinary,
            };
            let curve = calibration_curve(CurveSource::Phi(&phi), &grid, m, 0, &st)?;
            run.curve("delta_binary", &curve)
        }
        Command::DeltaMax { loss, eps_grid, resolution } => {
            let loss = read_loss(loss)?;
            let grid = parse_eps_grid(eps_grid)?;
            let curve = calibration_curve(CurveSource::Loss(&loss), &grid, CurveMethod::NumericDeltamax, *resolution, &st)?;
            run.curve("delta_max", &curve)
        }
        Command::Audit { loss, conditions } => {
            let loss = read_loss(loss)?;
            let only: Vec<ConditionId> = match conditions {
                Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                None => ConditionId::ALL.to_vec(),
            };
            let cfg = AuditConfig { seed: run.seed, ..AuditConfig::default() };
            let reports = audit_only(&loss, &cfg, &st, &only)?;
            match run.format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in &reports {
                        w.serialize(ReportRow::from(r))?;
                    }
                    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
                    run.write("report.csv", &buf)?;
                }
                Format::Json => run.write("report.json", serde_json::to_string_pretty(&reports)?.as_bytes())?,
            }
            for r in &reports {
                println!("{:<24} {:<17} margin {:.3e}", r.condition_id.name(), r.verdict.to_string(), r.margin);
            }
            Ok(())
        }
        Command::Convert { curve, excess, mtnc, dominating } => {
            let mut input = RiskBoundInput::excess(*excess);
            #[derive(Serialize)]
            struct Converted {
                mode: &'static str,
                surrogate_excess: f64,
                bound: f64,
                beyond_curve: bool,
            }
            let out = if let Some(inf) = dominating {
                input.inf_surrogate_risk = Some(*inf);
                Converted { mode: "dominating", surrogate_excess: *excess, bound: convert_dominating(&input)?, beyond_curve: false }
            } else {
                let path = curve.as_deref().ok_or_else(|| Error::field("curve", "required"))?;
                let c = CalibrationCurve::load_csv(CurveMethod::NumericBinary, path)?;
                let (mode, inv) = match mtnc {
                    Some(s) => {
                        let parts: Vec<&str> = s.split(',').collect();
                        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::field("mtnc", format!("expected c,alpha, got `{s}`")));
                        if parts.len() != 2 {
                            return Err(Error::field("mtnc", format!("expected c,alpha, got `{s}`")));
                        }
                        input.c = Some(num(parts[0])?);
                        input.alpha = Some(num(parts[1])?);
                        if c.valid().any(|p| p.delta <= 0.0) {
                            return Err(Error::NotCalibrated);
                        }
                        ("noise-condition", convert_mtnc(&c, &input)?)
                    }
                    None => ("calibrated", convert_calibrated(&c, &input)?),
                };
                if inv.beyond_curve {
                    eprintln!("warning: excess {excess} lies beyond the curve; reporting its largest ε");
                }
                Converted { mode, surrogate_excess: *excess, bound: inv.eps, beyond_curve: inv.beyond_curve }
            };
            println!("{}", fmt_num(out.bound));
            run.write("convert.json", serde_json::to_string_pretty(&out)?.as_bytes())
        }
        Command::ZhangConstant { phi, grid_step } => {
            let phi = phi.transform()?;
            let z = zhang_constant(&phi, *grid_step, &st)?;
            match run.format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["p", "v"])?;
                    for (p, v) in &z.v {
                        w.write_record([fmt_num(*p), fmt_num(*v)])?;
                    }
                    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
                    run.write("zhang_constant.csv", &buf)?;
                }
                Format::Json => run.write("zhang_constant.json", serde_json::to_string_pretty(&z)?.as_bytes())?,
            }
            match z.c {
                Some(c) => {
                    println!("{}", fmt_num(c));
                    Ok(())
                }
                None => Err(Error::Domain(format!("{phi}: no positive curvature constant on the grid (c' = {:.3e})", z.c_prime))),
            }
        }
        Command::Experiment { name, problem, loss, k, resolution, n_grid, trials } => {
            if *name != ExperimentName::Erm && (problem.is_some() || loss.is_some()) {
                return Err(Error::Domain("--problem and --loss only apply to the erm experiment".into()));
            }
            let res = match name {
                ExperimentName::Table2 => reproduce_table2(&crate::calibration::default_eps_grid(), &st)?,
                ExperimentName::Kink => kink_counterexample(&st)?,
                ExperimentName::LogisticEq => logistic_equivalence(*k, *resolution, &st)?,
                ExperimentName::Erm => {
                    let prob = match problem {
                        Some(p) => read_problem(p)?,
                        None => default_problem(run.seed),
                    };
                    let loss = match loss {
                        Some(l) => read_loss(l)?,
                        None => LossSpec::lr(prob.k),
                    };
                    let curve = default_erm_curve(&loss, &st)?;
                    if curve.valid().all(|p| p.delta <= 0.0) {
                        return Err(Error::NotCalibrated);
                    }
                    simulate_erm(&prob, &loss, n_grid, *trials, &curve, &st)?
                }
            };
            run.experiment(&res)
        }
    }
}

/// The ERM problem used when no `--problem` file is given.
pub fn default_problem(seed: u64) -> SyntheticProblem {
    SyntheticProblem {
        x_size: 3,
        k: 3,
        conditional_table: vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.4, 0.35, 0.25]],
        marginal: vec![0.5, 0.3, 0.2],
        seed,
    }
}

fn out_dir(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let restarts = cli.restarts.unwrap_or(if matches!(cli.cmd, Command::Audit { .. }) { 4 } else { 16 });
    let mut run = Run {
        dir: out_dir(cli.out.as_deref()),
        format: cli.format,
        verbose: cli.verbose,
        settings: OptimizerSettings::default().with_restarts(restarts).with_seed(cli.seed),
        seed: cli.seed,
        artifacts: Vec::new(),
        pass: None,
    };
    let result = run
        .settings
        .validate()
        .and_then(|_| fs::create_dir_all(&run.dir).map_err(Error::from))
        .and_then(|_| execute(&cli.cmd, &mut run));
    let (code, error) = match &result {
        Ok(()) => (0, None),
        Err(e) => {
            eprintln!("error: {e}");
            (if e.is_domain() { 2 } else { 1 }, Some(e.to_string()))
        }
    };
    let manifest = Manifest {
        tool: "calibkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cli.cmd.name().into(),
        args: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: cli.seed,
        format: match cli.format {
            Format::Csv => "csv".into(),
            Format::Json => "json".into(),
        },
        exit_code: code,
        error,
        pass: run.pass,
        artifacts: run.artifacts.clone(),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
    if let Err(e) = fs::write(run.dir.join("manifest.json"), body) {
        eprintln!("error: writing manifest: {e}");
        return if code == 0 { 1 } else { code };
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_grid_forms() {
        assert_eq!(parse_eps_grid("0.1:0.5:0.1").unwrap(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(parse_eps_grid("0.25,0.5").unwrap(), vec![0.25, 0.5]);
        assert_eq!(parse_eps_grid("0.1:0.9:0.1").unwrap().len(), 9);
        for bad in ["0:0.5:0.1", "0.5:0.1:0.1", "0.1:0.5", "a,b", "0.5,0.2", "0.1:1.5:0.5"] {
            assert!(parse_eps_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.09999999999999999), "0.1");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-1e-15), "0");
    }

    #[test]
    fn condition_names_parse() {
        assert_eq!("C1".parse::<ConditionId>().unwrap(), ConditionId::C1);
        assert_eq!("c5".parse::<ConditionId>().unwrap(), ConditionId::Symmetry);
        assert_eq!("order-preservation".parse::<ConditionId>().unwrap(), ConditionId::OrderPreservation);
        assert_eq!("ZhangInf".parse::<ConditionId>().unwrap(), ConditionId::ZhangInf);
        assert!("C9".parse::<ConditionId>().is_err());
    }

    #[test]
    fn default_problem_is_valid() {
        default_problem(3).validate().unwrap();
    }
}
