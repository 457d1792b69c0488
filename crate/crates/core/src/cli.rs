//! The `ia-workbench` command line.
//!
//! Every run prints one JSON report whose `invocation` field echoes the
//! full effective configuration; `--replay report.json` re-runs exactly
//! that invocation. Per-seed and per-iteration series go to CSV files via
//! `--csv` / `--trace` (pass `-` for stdout). Exit codes: 0 on success,
//! 1 when a verification failed or the solver was inconclusive, 2 on
//! usage or configuration errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::feasibility::{self, DofDemand, SolveOptions, Verdict};
use crate::network::{ExtendedChannels, NetworkConfig};
use crate::separability::{self, DEFAULT_RANK_TOL};
use crate::{cj, dof, Error, Result};

/// Thread-cap environment variable for seed campaigns.
pub const THREADS_ENV: &str = "IA_WORKBENCH_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "ia-workbench",
    version,
    about = "Interference-alignment workbench for MIMO X networks",
    long_about = "Calculators and seed-reproducible verifiers for interference alignment \
                  in X networks: exact DoF bounds, monomial beamforming bases with exact \
                  alignment checks, signal-space rank certificates, properness counting \
                  and an alternating spatial-IA solver."
)]
struct Cli {
    /// Re-run the invocation echoed in a previous JSON report.
    #[arg(long, value_name = "REPORT.json", global = true)]
    replay: Option<PathBuf>,

    /// Write the JSON report to this file instead of stdout.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact rational DoF bounds for one network.
    Dof(DofArgs),
    /// Equation/variable counts and the properness verdict.
    Properness(InstanceArgs),
    /// Build the monomial bases and verify exact alignment containment.
    CjVerify(CjVerifyArgs),
    /// Monte-Carlo rank certificates of the signal-space matrix.
    Separability(SeparabilityArgs),
    /// Alternating-minimization feasibility evidence.
    IaSolve(IaSolveArgs),
    /// Tabulate scaled DoF bounds over parameter ranges.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct DofArgs {
    /// Transmitter count.
    #[arg(long = "M")]
    num_tx: u64,
    /// Receiver count.
    #[arg(long = "N")]
    num_rx: u64,
    /// Antennas at every node (symmetric MIMO network).
    #[arg(long = "A", conflicts_with = "rx_antennas")]
    antennas: Option<u64>,
    /// Antennas per receiver (SIMO network, single-antenna transmitters).
    #[arg(long = "R")]
    rx_antennas: Option<u64>,
    /// Also evaluate the finite-degree achieved fraction at this cap.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Transmitter count (symmetric instance).
    #[arg(long = "M", requires = "tx_antennas")]
    num_tx: Option<usize>,
    /// Receiver count (symmetric instance).
    #[arg(long = "N")]
    num_rx: Option<usize>,
    /// Antennas per transmitter (symmetric instance).
    #[arg(long = "A")]
    tx_antennas: Option<usize>,
    /// Antennas per receiver (symmetric instance).
    #[arg(long = "B")]
    rx_antennas: Option<usize>,
    /// Uniform streams per message (symmetric instance).
    #[arg(long = "d")]
    streams: Option<usize>,
    /// Network configuration JSON file ({"M":…,"N":…,"tx_antennas":…,"rx_antennas":…}).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["num_tx", "num_rx", "tx_antennas", "rx_antennas"])]
    config: Option<PathBuf>,
    /// Demand matrix JSON file (N×M array of stream counts).
    #[arg(long, value_name = "FILE", conflicts_with = "streams")]
    demand: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CjVerifyArgs {
    /// Transmitter count.
    #[arg(long = "M")]
    num_tx: usize,
    /// Receiver count.
    #[arg(long = "N")]
    num_rx: usize,
    /// Antennas per receiver.
    #[arg(long = "R", default_value_t = 1)]
    rx_antennas: usize,
    /// Degree cap of the signal bases.
    #[arg(long)]
    m: usize,
    /// Channel seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also dump the drawn channel coefficients to this JSON file.
    #[arg(long, value_name = "FILE")]
    dump_channels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SeparabilityArgs {
    /// Transmitter count.
    #[arg(long = "M")]
    num_tx: usize,
    /// Receiver count.
    #[arg(long = "N")]
    num_rx: usize,
    /// Antennas per receiver.
    #[arg(long = "R", default_value_t = 1)]
    rx_antennas: usize,
    /// Degree cap of the signal bases.
    #[arg(long)]
    m: usize,
    /// Number of seeds in the campaign (seed, seed+1, …).
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative singular-value tolerance.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
    /// Also run the block-diagonal specialization check per seed.
    #[arg(long)]
    step1: bool,
    /// Also run the row/column induction trace per seed.
    #[arg(long)]
    step2: bool,
    /// Write one CSV row per seed to this file (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IaSolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Iteration budget per restart.
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Independent random restarts.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Normalized-leakage convergence tolerance.
    #[arg(long, default_value_t = 1e-9)]
    leak_tol: f64,
    /// Root seed (channels use it directly; restart r uses stream r).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the leakage series to this CSV file (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Transmitter-count range, inclusive (`lo:hi`).
    #[arg(long = "M", default_value = "2:4", value_parser = parse_range)]
    num_tx: (u64, u64),
    /// Receiver-count range.
    #[arg(long = "N", default_value = "2:4", value_parser = parse_range)]
    num_rx: (u64, u64),
    /// Receive-antenna range.
    #[arg(long = "R", default_value = "1:2", value_parser = parse_range)]
    rx_antennas: (u64, u64),
    /// Antenna-scale range.
    #[arg(long = "A", default_value = "1:2", value_parser = parse_range)]
    scale: (u64, u64),
    /// Write the table to this CSV file (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

fn parse_range(raw: &str) -> std::result::Result<(u64, u64), String> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {raw}"))?;
    let lo: u64 = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: u64 = hi
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("range {raw} must satisfy 1 ≤ lo ≤ hi"));
    }
    Ok((lo, hi))
}

/// One fully resolved invocation — what a report echoes and `--replay`
/// consumes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum RunSpec {
    /// DoF calculators.
    Dof {
        #[serde(rename = "M")]
        num_tx: u64,
        #[serde(rename = "N")]
        num_rx: u64,
        #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
        antennas: Option<u64>,
        #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
        rx_antennas: Option<u64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
    /// Properness counting on a resolved instance.
    Properness {
        config: NetworkConfig,
        demand: DofDemand,
    },
    /// Alignment verification.
    CjVerify {
        #[serde(rename = "M")]
        num_tx: usize,
        #[serde(rename = "N")]
        num_rx: usize,
        #[serde(rename = "R")]
        rx_antennas: usize,
        m: usize,
        seed: u64,
    },
    /// Rank-certificate campaign.
    Separability {
        #[serde(rename = "M")]
        num_tx: usize,
        #[serde(rename = "N")]
        num_rx: usize,
        #[serde(rename = "R")]
        rx_antennas: usize,
        m: usize,
        seeds: u64,
        seed: u64,
        tol_rel: f64,
        step1: bool,
        step2: bool,
    },
    /// Spatial-IA solve on a resolved instance.
    IaSolve {
        config: NetworkConfig,
        demand: DofDemand,
        options: SolveOptions,
    },
    /// Scaled-bound table.
    Sweep {
        #[serde(rename = "M")]
        num_tx: (u64, u64),
        #[serde(rename = "N")]
        num_rx: (u64, u64),
        #[serde(rename = "R")]
        rx_antennas: (u64, u64),
        #[serde(rename = "A")]
        scale: (u64, u64),
    },
}

/// A finished run: the JSON report (with the invocation echoed), an
/// optional CSV series, and the exit code the run earned.
#[derive(Clone, Debug)]
pub struct RunReport {
    /// The JSON payload, `invocation` included.
    pub json: serde_json::Value,
    /// Per-seed or per-iteration series, when the subcommand produces one.
    pub csv: Option<String>,
    /// 0 success, 1 verification failure / inconclusive.
    pub exit_code: i32,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

impl InstanceArgs {
    fn resolve(&self) -> Result<(NetworkConfig, DofDemand)> {
        let config = match (&self.config, self.num_tx) {
            (Some(path), _) => read_json::<NetworkConfig>(path)?,
            (None, Some(num_tx)) => {
                let (num_rx, a, b) = match (self.num_rx, self.tx_antennas, self.rx_antennas) {
                    (Some(n), Some(a), Some(b)) => (n, a, b),
                    _ => {
                        return Err(Error::InvalidConfig(
                            "symmetric instances need --M, --N, --A and --B".into(),
                        ))
                    }
                };
                NetworkConfig::new(vec![a; num_tx], vec![b; num_rx])?
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "give either --config FILE or the symmetric flags --M/--N/--A/--B".into(),
                ))
            }
        };
        let demand = match (&self.demand, self.streams) {
            (Some(path), _) => DofDemand::new(&config, read_json(path)?)?,
            (None, Some(d)) => DofDemand::uniform(&config, d)?,
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "give either --demand FILE or a uniform --d".into(),
                ))
            }
        };
        Ok((config, demand))
    }
}

impl Command {
    fn into_spec(self) -> Result<(RunSpec, OutputRouting)> {
        let mut routing = OutputRouting::default();
        let spec = match self {
            Command::Dof(args) => {
                if args.antennas.is_none() && args.rx_antennas.is_none() {
                    return Err(Error::InvalidConfig(
                        "dof needs --A (symmetric MIMO) or --R (SIMO)".into(),
                    ));
                }
                RunSpec::Dof {
                    num_tx: args.num_tx,
                    num_rx: args.num_rx,
                    antennas: args.antennas,
                    rx_antennas: args.rx_antennas,
                    m: args.m,
                }
            }
            Command::Properness(args) => {
                let (config, demand) = args.resolve()?;
                RunSpec::Properness { config, demand }
            }
            Command::CjVerify(args) => {
                routing.dump_channels = args.dump_channels;
                RunSpec::CjVerify {
                    num_tx: args.num_tx,
                    num_rx: args.num_rx,
                    rx_antennas: args.rx_antennas,
                    m: args.m,
                    seed: args.seed,
                }
            }
            Command::Separability(args) => {
                routing.csv = args.csv;
                RunSpec::Separability {
                    num_tx: args.num_tx,
                    num_rx: args.num_rx,
                    rx_antennas: args.rx_antennas,
                    m: args.m,
                    seeds: args.seeds,
                    seed: args.seed,
                    tol_rel: args.tol,
                    step1: args.step1,
                    step2: args.step2,
                }
            }
            Command::IaSolve(args) => {
                routing.csv = args.trace;
                let (config, demand) = args.instance.resolve()?;
                RunSpec::IaSolve {
                    config,
                    demand,
                    options: SolveOptions {
                        max_iters: args.max_iters,
                        restarts: args.restarts,
                        leak_tol: args.leak_tol,
                        seed: args.seed,
                        ..SolveOptions::default()
                    },
                }
            }
            Command::Sweep(args) => {
                routing.csv = args.csv;
                RunSpec::Sweep {
                    num_tx: args.num_tx,
                    num_rx: args.num_rx,
                    rx_antennas: args.rx_antennas,
                    scale: args.scale,
                }
            }
        };
        Ok((spec, routing))
    }
}

#[derive(Default, Debug)]
struct OutputRouting {
    csv: Option<PathBuf>,
    dump_channels: Option<PathBuf>,
}

fn merge_invocation(spec: &RunSpec, mut payload: serde_json::Value) -> serde_json::Value {
    let object = payload
        .as_object_mut()
        .expect("report payloads are JSON objects");
    object.insert(
        "invocation".into(),
        serde_json::to_value(spec).expect("RunSpec serializes"),
    );
    payload
}

fn execute_dof(
    num_tx: u64,
    num_rx: u64,
    antennas: Option<u64>,
    rx_antennas: Option<u64>,
    m: Option<usize>,
) -> Result<RunReport> {
    let report = match (antennas, rx_antennas) {
        (Some(a), None) => dof::dof_report_mimo(num_tx, num_rx, a, m)?,
        (None, Some(r)) => dof::dof_report_simo(num_tx, num_rx, r, m)?,
        _ => {
            return Err(Error::InvalidConfig(
                "dof needs exactly one of --A and --R".into(),
            ))
        }
    };
    Ok(RunReport {
        json: serde_json::to_value(&report)?,
        csv: None,
        exit_code: 0,
    })
}

fn execute_properness(config: &NetworkConfig, demand: &DofDemand) -> Result<RunReport> {
    let report = feasibility::properness_report(config, demand);
    let mut json = serde_json::to_value(&report)?;
    json.as_object_mut()
        .expect("object")
        .insert("config".into(), serde_json::to_value(config)?);
    Ok(RunReport {
        json,
        csv: None,
        exit_code: 0,
    })
}

fn execute_cj_verify(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    m: usize,
    seed: u64,
) -> Result<(RunReport, ExtendedChannels)> {
    let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas)?;
    let plan = separability::choose_extension_length(num_tx, num_rx, rx_antennas, m)?;
    let channels = ExtendedChannels::draw(&config, plan.n, seed)?;

    let mut receivers = Vec::with_capacity(num_rx);
    let mut total_checks = 0usize;
    let mut total_misses = 0usize;
    for served in 0..num_rx {
        let signal = cj::build_beam_basis(&channels, served, m)?;
        let interference = cj::build_interference_basis(&channels, served, m)?;
        let report = cj::verify_alignment(&signal, &interference)?;
        total_checks += report.checks;
        total_misses += report.misses.len();
        receivers.push(json!({
            "receiver": served,
            "checks": report.checks,
            "misses": report.misses,
        }));
    }
    let pass = total_misses == 0;
    let report = RunReport {
        json: json!({
            "config": config,
            "m": m,
            "counts": plan,
            "n": plan.n,
            "receivers": receivers,
            "checks": total_checks,
            "misses": total_misses,
            "pass": pass,
        }),
        csv: None,
        exit_code: i32::from(!pass),
    };
    Ok((report, channels))
}

#[allow(clippy::too_many_arguments)]
fn execute_separability(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    m: usize,
    seeds: u64,
    seed0: u64,
    tol_rel: f64,
    step1: bool,
    step2: bool,
) -> Result<RunReport> {
    use rayon::prelude::*;

    let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas)?;
    let plan = separability::choose_extension_length(num_tx, num_rx, rx_antennas, m)?;

    struct Trial {
        seed: u64,
        sigma_min: f64,
        sigma_max: f64,
        full_rank: bool,
        step1_pass: Option<bool>,
        step2_pass: Option<bool>,
    }

    let trials: Vec<Result<Trial>> = (0..seeds)
        .into_par_iter()
        .map(|offset| {
            let seed = seed0 + offset;
            let report = separability::verify(&config, m, seed, tol_rel)?;
            let step1_pass = if step1 {
                let channels = ExtendedChannels::draw(&config, plan.n, seed)?;
                Some(separability::step1_specialization_check(&channels, m, tol_rel)?.pass())
            } else {
                None
            };
            let step2_pass = if step2 {
                let channels = ExtendedChannels::draw(&config, plan.n, seed)?;
                let bases = separability::build_bases(&channels, m)?;
                Some(separability::step2_induction_trace(&channels, &bases, tol_rel)?.pass())
            } else {
                None
            };
            Ok(Trial {
                seed,
                sigma_min: report.sigma_min,
                sigma_max: report.sigma_max,
                full_rank: report.pass,
                step1_pass,
                step2_pass,
            })
        })
        .collect();
    let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;

    let passes = trials.iter().filter(|t| t.full_rank).count();
    let worst = trials
        .iter()
        .min_by(|a, b| {
            let (ra, rb) = (a.sigma_min / a.sigma_max, b.sigma_min / b.sigma_max);
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one trial");
    let step_pass =
        |choose: fn(&Trial) -> Option<bool>| trials.iter().all(|t| choose(t).unwrap_or(true));
    let pass = passes == trials.len() && step_pass(|t| t.step1_pass) && step_pass(|t| t.step2_pass);

    let mut csv = String::from("seed,sigma_min,sigma_max,ratio,full_rank");
    if step1 {
        csv.push_str(",step1_pass");
    }
    if step2 {
        csv.push_str(",step2_pass");
    }
    csv.push('\n');
    for t in &trials {
        let _ = write!(
            csv,
            "{},{:e},{:e},{:e},{}",
            t.seed,
            t.sigma_min,
            t.sigma_max,
            t.sigma_min / t.sigma_max,
            t.full_rank
        );
        if let Some(p) = t.step1_pass {
            let _ = write!(csv, ",{p}");
        }
        if let Some(p) = t.step2_pass {
            let _ = write!(csv, ",{p}");
        }
        csv.push('\n');
    }

    let mut json = json!({
        "config": config,
        "m": m,
        "n": plan.n,
        "counts": plan,
        "trials": trials.len(),
        "passes": passes,
        "pass": pass,
        "sigma_min": worst.sigma_min,
        "sigma_max": worst.sigma_max,
        "worst_seed": worst.seed,
        "seed": seed0,
        "tol_rel": tol_rel,
    });
    if step1 {
        let passed = trials.iter().filter(|t| t.step1_pass == Some(true)).count();
        json.as_object_mut()
            .expect("object")
            .insert("step1_passes".into(), json!(passed));
    }
    if step2 {
        let passed = trials.iter().filter(|t| t.step2_pass == Some(true)).count();
        json.as_object_mut()
            .expect("object")
            .insert("step2_passes".into(), json!(passed));
    }

    Ok(RunReport {
        json,
        csv: Some(csv),
        exit_code: i32::from(!pass),
    })
}

fn execute_ia_solve(
    config: &NetworkConfig,
    demand: &DofDemand,
    options: &SolveOptions,
) -> Result<RunReport> {
    let channels = crate::network::SpatialChannels::draw(config, options.seed);
    let outcome = feasibility::solve_spatial_ia(&channels, demand, options)?;
    let properness = feasibility::properness_report(config, demand);

    let mut csv = String::from("restart,iteration,leakage\n");
    for restart in &outcome.trace.restarts {
        for (iteration, value) in restart.normalized.iter().enumerate() {
            let _ = writeln!(csv, "{},{iteration},{value:e}", restart.restart);
        }
    }

    let best = &outcome.trace.restarts[outcome.best_restart];
    let json = json!({
        "config": config,
        "demand": demand,
        "properness": properness,
        "options": options,
        "verdict": outcome.verdict,
        "best_restart": outcome.best_restart,
        "final_leakage": outcome.final_leakage,
        "iterations": best.normalized.len() - 1,
        "desired_rank_ok": outcome.trace.desired_rank_ok,
        "restarts": outcome
            .trace
            .restarts
            .iter()
            .map(|r| {
                json!({
                    "restart": r.restart,
                    "outcome": r.outcome,
                    "final_leakage": r.final_normalized(),
                })
            })
            .collect::<Vec<_>>(),
    });
    Ok(RunReport {
        json,
        csv: Some(csv),
        exit_code: i32::from(outcome.verdict == Verdict::Inconclusive),
    })
}

fn execute_sweep(
    num_tx: (u64, u64),
    num_rx: (u64, u64),
    rx_antennas: (u64, u64),
    scale: (u64, u64),
) -> Result<RunReport> {
    let mut csv = String::from("M,N,R,A,outer,achievable\n");
    let mut rows = Vec::new();
    for m in num_tx.0..=num_tx.1 {
        for n in num_rx.0..=num_rx.1 {
            for r in rx_antennas.0..=rx_antennas.1 {
                for a in scale.0..=scale.1 {
                    let check = dof::scale_invariance_check(m, n, r, a);
                    let _ = writeln!(
                        csv,
                        "{m},{n},{r},{a},{},{}",
                        check.decomposed, check.scaled_base
                    );
                    rows.push(json!({
                        "M": m,
                        "N": n,
                        "R": r,
                        "A": a,
                        "outer": check.decomposed.to_string(),
                        "achievable": check.scaled_base.to_string(),
                        "scale_invariant": check.equal,
                    }));
                }
            }
        }
    }
    Ok(RunReport {
        json: json!({ "rows": rows }),
        csv: Some(csv),
        exit_code: 0,
    })
}

/// Executes one resolved invocation and returns its report.
pub fn execute(spec: &RunSpec) -> Result<RunReport> {
    let mut report = match spec {
        RunSpec::Dof {
            num_tx,
            num_rx,
            antennas,
            rx_antennas,
            m,
        } => execute_dof(*num_tx, *num_rx, *antennas, *rx_antennas, *m)?,
        RunSpec::Properness { config, demand } => execute_properness(config, demand)?,
        RunSpec::CjVerify {
            num_tx,
            num_rx,
            rx_antennas,
            m,
            seed,
        } => execute_cj_verify(*num_tx, *num_rx, *rx_antennas, *m, *seed)?.0,
        RunSpec::Separability {
            num_tx,
            num_rx,
            rx_antennas,
            m,
            seeds,
            seed,
            tol_rel,
            step1,
            step2,
        } => execute_separability(
            *num_tx,
            *num_rx,
            *rx_antennas,
            *m,
            *seeds,
            *seed,
            *tol_rel,
            *step1,
            *step2,
        )?,
        RunSpec::IaSolve {
            config,
            demand,
            options,
        } => execute_ia_solve(config, demand, options)?,
        RunSpec::Sweep {
            num_tx,
            num_rx,
            rx_antennas,
            scale,
        } => execute_sweep(*num_tx, *num_rx, *rx_antennas, *scale)?,
    };
    report.json = merge_invocation(spec, report.json);
    Ok(report)
}

fn emit(report: &RunReport, out: Option<&PathBuf>, csv_path: Option<&PathBuf>) -> Result<()> {
    let rendered = format!("{:#}", report.json);
    match out {
        Some(path) => std::fs::write(path, rendered + "\n")?,
        None => println!("{rendered}"),
    }
    if let (Some(csv), Some(path)) = (&report.csv, csv_path) {
        if path.as_os_str() == "-" {
            print!("{csv}");
        } else {
            std::fs::write(path, csv)?;
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    // Every library error at this level is a configuration/usage problem;
    // verification failures are encoded in reports, not errors.
    let _ = err;
    2
}

fn run_inner(cli: Cli) -> Result<i32> {
    if let Ok(threads) = std::env::var(THREADS_ENV) {
        let threads: usize = threads
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be an integer")))?;
        // Ignore the error if a pool already exists (tests, repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    if let Some(report_path) = &cli.replay {
        if cli.command.is_some() {
            return Err(Error::InvalidConfig(
                "--replay replaces the subcommand; give one or the other".into(),
            ));
        }
        let previous: serde_json::Value = read_json(report_path)?;
        let spec: RunSpec = serde_json::from_value(
            previous
                .get("invocation")
                .cloned()
                .ok_or_else(|| Error::InvalidConfig("report has no invocation field".into()))?,
        )?;
        let report = execute(&spec)?;
        emit(&report, cli.out.as_ref(), None)?;
        return Ok(report.exit_code);
    }

    let Some(command) = cli.command else {
        return Err(Error::InvalidConfig(
            "missing subcommand; try --help".into(),
        ));
    };

    // cj-verify may dump channels; re-draw them here so execute() stays a
    // pure function of the spec.
    let (spec, routing) = command.into_spec()?;
    let report = execute(&spec)?;
    if let (Some(path), RunSpec::CjVerify { .. }) = (&routing.dump_channels, &spec) {
        if let RunSpec::CjVerify {
            num_tx,
            num_rx,
            rx_antennas,
            m,
            seed,
        } = spec
        {
            let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas)?;
            let plan = separability::choose_extension_length(num_tx, num_rx, rx_antennas, m)?;
            let channels = ExtendedChannels::draw(&config, plan.n, seed)?;
            std::fs::write(path, format!("{:#}\n", channels.dump_json()))?;
        }
    }
    emit(&report, cli.out.as_ref(), routing.csv.as_ref())?;
    Ok(report.exit_code)
}

/// Entry point: parses `args` (without the program name), runs the
/// invocation, prints reports, and returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let argv = std::iter::once("ia-workbench".to_string()).chain(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own help/version/usage output.
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match run_inner(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
