//! Command implementations behind the `secondorder` binary.
//!
//! | exit code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | failed consistency check, output I/O |
//! | 2 | validation or domain error (including unreadable or malformed input and usage) |
//! | 3 | solver did not converge |
//! | 4 | simulation exceeds the enumeration bound |

mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use output::{fmt_flag, fmt_num, write_json, RunManifest, Table};

use crate::bounds::{binary_wz_dispersions, comparison_suite, evaluate_instance, instance_digest, open_grid};
use crate::error::{Error, Result};
use crate::probkit::{variance, ProbVec};
use crate::rdsolver::{blahut_arimoto_rd, tilted_information, CodingInstance};
use crate::simlab::{self_info_residual, simulate, type_deviation_stats, ResidualSource, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "secondorder", version, about = "Second-order bounds and small-blocklength simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate-distortion sweep of a lossy source coding instance: rd.csv.
    Rd(RdArgs),
    /// Binary-Hamming Wyner-Ziv dispersion curves: fig3_p<p>.csv, fig3.gp.
    Figure3(Figure3Args),
    /// Every bound that applies to an instance: bounds.csv, bounds.json.
    Bound(BoundArgs),
    /// Monte-Carlo run of a coding scheme: sim.csv, sim.json, trace.csv.
    Simulate(SimulateArgs),
    /// Type-deviation and self-information diagnostics: typedev.csv,
    /// residual.csv.
    Typedev(TypedevArgs),
    /// Error-probability bounds over a grid of W: compare.csv.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RdArgs {
    /// LossySC instance JSON.
    #[arg(long)]
    pub instance: PathBuf,
    /// Distortion levels: `a:b:count` or a comma list; defaults to the
    /// instance's level.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Figure3Args {
    /// Crossover probabilities of the side channel.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.4])]
    pub p: Vec<f64>,
    /// Number of interior distortion points per curve.
    #[arg(long, default_value = "40")]
    pub grid: String,
    /// Erasure-probability step of the time-sharing search; 0 disables it.
    #[arg(long, default_value_t = 0.01)]
    pub sharing_step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Evaluate error-probability bounds at this backoff `W`.
    #[arg(long)]
    pub w: Option<f64>,
    /// With `--n`, the second-order rate at this error probability.
    #[arg(long, requires = "n")]
    pub epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    pub n: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Instance JSON (LossySC, WynerZiv, ChannelCost or GelfandPinsker),
    /// or a full simulation config with an `instance` field.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Rate in bits per symbol.
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Write the per-trial log to trace.csv.
    #[arg(long)]
    pub trace: bool,
    /// Test against the level itself instead of level + 1/n.
    #[arg(long)]
    pub no_slack: bool,
    /// Lossy source coding: reproduce the last ceil(log2 n) symbols greedily.
    #[arg(long)]
    pub tail_repair: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TypedevArgs {
    /// Source pmf JSON (`{"alphabet": [...], "values": [...]}`).
    #[arg(long)]
    pub instance: PathBuf,
    /// Blocklengths, comma separated.
    #[arg(long, default_value = "100,1000,10000")]
    pub grid: String,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Radius (in units of 1/sqrt(n)) of the type ball of the exchangeable
    /// source used for the self-information residual.
    #[arg(long, default_value_t = 1.0)]
    pub ball_radius: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// WynerZiv or IndirectWZ instance JSON.
    #[arg(long)]
    pub instance: PathBuf,
    /// Backoff values `W`.
    #[arg(long, default_value = "0.2,0.5,1.0")]
    pub grid: String,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `a:b:count` (inclusive linear grid) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("grid spec `{spec}`"));
    if let Some((a, rest)) = spec.split_once(':') {
        let (b, count) = rest.split_once(':').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        return match count {
            0 => Err(bad()),
            1 => Ok(vec![a]),
            _ => Ok((0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()),
        };
    }
    spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<CodingInstance> {
    CodingInstance::from_json(&read_text(path)?)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_rd(a: &RdArgs, argv: &[String]) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let CodingInstance::LossySC(l) = &inst else {
        return Err(Error::InvalidInput(format!("rd needs a LossySC instance, got {}", inst.variant_name())));
    };
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => vec![l.level],
    };
    let manifest = RunManifest::new("rd", argv, Some(instance_digest(&inst)?), a.common.seed);
    let mut table = Table::new(&manifest, &["D", "R", "lambda", "V"]);
    for d in grid {
        let sol = blahut_arimoto_rd(&l.source, &l.distortion, d)?;
        let tilted = tilted_information(&sol, &l.source, &l.distortion)?;
        let v = variance(&l.source.as_func(), &tilted.j)?;
        table.push(vec![fmt_num(d), fmt_num(sol.rate), fmt_num(sol.lambda), fmt_num(v)]);
    }
    prepare_out(&a.common.out)?;
    table.write(&a.common.out.join("rd.csv"))
}

/// File name of the curve for crossover `p`.
pub fn figure3_file(p: f64) -> String {
    format!("fig3_p{p}.csv")
}

fn cmd_figure3(a: &Figure3Args, argv: &[String]) -> Result<()> {
    let manifest = RunManifest::new("figure3", argv, None, a.common.seed);
    let sharing = (a.sharing_step > 0.0).then_some(a.sharing_step);
    prepare_out(&a.common.out)?;
    let mut violations = Vec::new();
    let mut script = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    script.push_str("set xlabel 'D'\nset ylabel 'dispersion'\n");
    for &p in &a.p {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Domain(format!("crossover {p} outside (0, 1/2)")));
        }
        let grid = if a.grid.contains(',') || a.grid.contains(':') {
            parse_grid(&a.grid)?
        } else {
            let count: usize = a.grid.trim().parse().map_err(|_| Error::InvalidInput(format!("grid spec `{}`", a.grid)))?;
            open_grid(p, count)
        };
        let mut table = Table::new(&manifest, &["D", "V_GCC", "V_VYAG", "V_WKT", "V_LA", "flagged"]);
        for d in grid {
            match binary_wz_dispersions(p, d, sharing) {
                Ok(r) => {
                    let holds = r.v_gcc <= r.v_la + 1e-9 && r.v_la <= r.v_vyag + 1e-9 && r.v_wkt <= r.v_vyag + 1e-9;
                    if !holds && !r.flagged {
                        violations.push(format!("p = {p}, D = {d}"));
                    }
                    table.push(vec![
                        fmt_num(d),
                        fmt_num(r.v_gcc),
                        fmt_num(r.v_vyag),
                        fmt_num(r.v_wkt),
                        fmt_num(r.v_la),
                        fmt_flag(r.flagged),
                    ]);
                }
                Err(e) => {
                    eprintln!("warning: p = {p}, D = {d}: {e}");
                    let nan = fmt_num(f64::NAN);
                    table.push(vec![fmt_num(d), nan.clone(), nan.clone(), nan.clone(), nan, fmt_flag(true)]);
                }
            }
        }
        let file = figure3_file(p);
        table.write(&a.common.out.join(&file))?;
        script.push_str(&format!(
            "set title 'p = {p}'\nplot '{file}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, '' using 1:5 with lines\npause -1\n"
        ));
    }
    let header: String = manifest.lines().iter().map(|l| format!("# {l}\n")).collect();
    fs::write(a.common.out.join("fig3.gp"), header + &script)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Check(format!("dispersion ordering fails at {}", violations.join("; "))))
    }
}

fn cmd_bound(a: &BoundArgs, argv: &[String]) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let reports = evaluate_instance(&inst, a.w, a.epsilon.zip(a.n))?;
    let manifest = RunManifest::new("bound", argv, Some(instance_digest(&inst)?), a.common.seed);
    let mut table = Table::new(&manifest, &["bound_name", "quantity", "value"]);
    for r in &reports {
        table.push(vec![r.bound_name.clone(), "value".into(), fmt_num(r.value)]);
        for (k, v) in &r.intermediates {
            table.push(vec![r.bound_name.clone(), k.clone(), fmt_num(*v)]);
        }
    }
    prepare_out(&a.common.out)?;
    table.write(&a.common.out.join("bounds.csv"))?;
    write_json(&a.common.out.join("bounds.json"), &manifest, serde_json::to_value(&reports)?)
}

fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> Result<()> {
    let text = read_text(&a.instance)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("instance JSON: {e}")))?;
    let mut cfg = if value.get("instance").is_some() {
        serde_json::from_value::<SimConfig>(value).map_err(|e| Error::InvalidInput(format!("simulation config: {e}")))?
    } else {
        SimConfig::new(CodingInstance::from_json(&text)?, a.n, a.rate, a.trials, a.common.seed)?
    };
    cfg.trace |= a.trace;
    cfg.delta_slack &= !a.no_slack;
    cfg.tail_repair |= a.tail_repair;
    let result = simulate(&cfg)?;
    let manifest = RunManifest::new("simulate", argv, Some(instance_digest(&cfg.instance)?), cfg.seed);
    let mut table = Table::new(
        &manifest,
        &[
            "scheme",
            "n",
            "rate",
            "messages",
            "trials",
            "excess_or_error_count",
            "infeasible_count",
            "error_rate",
            "wilson_low",
            "wilson_high",
            "empirical_rate_used",
            "threshold",
            "gcc_deviation_constant",
        ],
    );
    table.push(vec![
        format!("{:?}", result.scheme),
        result.n.to_string(),
        fmt_num(result.rate),
        result.messages.to_string(),
        result.trials.to_string(),
        result.excess_or_error_count.to_string(),
        result.infeasible_count.to_string(),
        fmt_num(result.error_rate),
        fmt_num(result.wilson_interval.0),
        fmt_num(result.wilson_interval.1),
        fmt_num(result.empirical_rate_used),
        fmt_num(result.threshold),
        fmt_num(result.gcc_deviation_constant),
    ]);
    prepare_out(&a.common.out)?;
    table.write(&a.common.out.join("sim.csv"))?;
    if let Some(trace) = &result.trace {
        let mut t = Table::new(&manifest, &["trial", "iota", "distortion", "error", "infeasible"]);
        for r in trace {
            t.push(vec![r.trial.to_string(), fmt_num(r.iota), fmt_num(r.distortion), fmt_flag(r.error), fmt_flag(r.infeasible)]);
        }
        t.write(&a.common.out.join("trace.csv"))?;
    }
    let summary = crate::simlab::SimResult { trace: None, ..result };
    write_json(&a.common.out.join("sim.json"), &manifest, serde_json::to_value(&summary)?)
}

fn cmd_typedev(a: &TypedevArgs, argv: &[String]) -> Result<()> {
    let source: ProbVec =
        serde_json::from_str(&read_text(&a.instance)?).map_err(|e| Error::InvalidInput(format!("source JSON: {e}")))?;
    let ns: Vec<usize> = parse_grid(&a.grid)?
        .into_iter()
        .map(|v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(Error::InvalidInput(format!("blocklength {v}"))) })
        .collect::<Result<_>>()?;
    let manifest = RunManifest::new("typedev", argv, None, a.common.seed);
    let rows = type_deviation_stats(&source, &ns, a.trials, a.common.seed)?;
    let mut t = Table::new(&manifest, &["n", "lp_estimate", "noise_floor", "bootstrap_radius", "scaled", "excess_scaled"]);
    for r in &rows {
        t.push(vec![r.n.to_string(), fmt_num(r.lp_estimate), fmt_num(r.noise_floor), fmt_num(r.bootstrap_radius), fmt_num(r.scaled), fmt_num(r.excess_scaled)]);
    }
    let mut res = Table::new(&manifest, &["n", "ratio_q95", "residual_mean", "residual_max_abs"]);
    for &n in &ns {
        let r = self_info_residual(&source, n, a.trials, a.common.seed, ResidualSource::TypeBall { radius: a.ball_radius })?;
        let mean = r.residuals.iter().sum::<f64>() / r.residuals.len().max(1) as f64;
        let max = r.residuals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        res.push(vec![n.to_string(), fmt_num(r.ratio_q95), fmt_num(mean), fmt_num(max)]);
    }
    prepare_out(&a.common.out)?;
    t.write(&a.common.out.join("typedev.csv"))?;
    res.write(&a.common.out.join("residual.csv"))
}

fn cmd_compare(a: &CompareArgs, argv: &[String]) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let report = comparison_suite(&inst, &parse_grid(&a.grid)?)?;
    let manifest = RunManifest::new("compare", argv, Some(instance_digest(&inst)?), a.common.seed);
    let mut t = Table::new(
        &manifest,
        &["W", "second_order", "second_order_radius", "LA", "VYAG", "VYAG_radius", "WKT", "ordering_holds"],
    );
    for r in &report.rows {
        t.push(vec![
            fmt_num(r.w),
            fmt_num(r.second_order),
            fmt_num(r.second_order_radius),
            fmt_num(r.la),
            fmt_num(r.vyag),
            fmt_num(r.vyag_radius),
            fmt_num(r.wkt),
            fmt_flag(r.ordering_holds),
        ]);
    }
    prepare_out(&a.common.out)?;
    t.write(&a.common.out.join("compare.csv"))
}

pub fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    match &cli.command {
        Command::Rd(a) => cmd_rd(a, argv),
        Command::Figure3(a) => cmd_figure3(a, argv),
        Command::Bound(a) => cmd_bound(a, argv),
        Command::Simulate(a) => cmd_simulate(a, argv),
        Command::Typedev(a) => cmd_typedev(a, argv),
        Command::Compare(a) => cmd_compare(a, argv),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code, reporting errors on stderr.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli, &args[1.min(args.len())..]) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(vec!["secondorder".into(), "nonsense".into()]), 2);
    }
}
