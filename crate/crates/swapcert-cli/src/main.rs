//! Command-line front end: scenario configuration, sweeps and report
//! emission for the swap-network certification library.
//!
//! Verbs: `verify` (run one scenario, JSON report), `curve` (robust-bound
//! curve as CSV), `noise-threshold` (Werner threshold by bisection) and
//! `suite` (the batch of certificate checks). Exit codes: 0 on success,
//! 1 on a verdict mismatch or failed verification, 2 on usage or
//! configuration errors.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use swapcert::certify::{self, suite, CertReport, Verdict};
use swapcert::network::{misaligned_scenario, StarScenario, SwapScenario};
use swapcert::qobjects::noisy_measurement;

use config::{ConfigMap, NoiseKind, ScenarioKind};
use output::{fmt_sig, write_atomic};

#[derive(Parser)]
#[command(
    name = "swapcert",
    version,
    about = "Certification of entangled measurements in swap networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and certify the central measurement.
    Verify(VerifyArgs),
    /// Emit the robust-bound curve as CSV.
    Curve(CurveArgs),
    /// Bisect the Werner visibility where the bound crosses 1/2.
    #[command(name = "noise-threshold")]
    NoiseThreshold(ThresholdArgs),
    /// Run the certificate suites (swap lemma, dual grid, operator
    /// inequality, separability witnesses, tensor proposition).
    Suite(SuiteArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Flat key=value configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bsm | tilted | ghz
    #[arg(long)]
    scenario: Option<String>,
    /// none | werner | povm-noise | misalign
    #[arg(long)]
    noise: Option<String>,
    /// Werner source visibility.
    #[arg(long)]
    v: Option<f64>,
    /// White-noise weight on the central measurement.
    #[arg(long)]
    p: Option<f64>,
    /// Misalignment angle (radians) on Charlie's observables.
    #[arg(long)]
    angle: Option<f64>,
    /// Tilt angle for the tilted scenario (radians).
    #[arg(long)]
    theta: Option<f64>,
    /// Seed for randomized suites (accepted everywhere for uniformity).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the JSON report (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Expected verdict: entangled-certified | inconclusive.
    #[arg(long)]
    expect: Option<String>,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start of the beta_ave sweep (must exceed 2).
    #[arg(long)]
    from: Option<f64>,
    /// End of the sweep (at most 2 sqrt(2); default 2 sqrt(2)).
    #[arg(long)]
    to: Option<f64>,
    /// Sweep step.
    #[arg(long)]
    step: Option<f64>,
    /// Output path for the CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Curve(args) => cmd_curve(args),
        Cmd::NoiseThreshold(args) => cmd_noise_threshold(args),
        Cmd::Suite(args) => cmd_suite(args),
    };
    match code {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Build and run the configured scenario; config errors are Err (exit 2),
/// verification failures map to exit 1 inside.
fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    cfg.override_str("scenario", args.scenario);
    cfg.override_str("noise", args.noise);
    cfg.override_f64("v", args.v);
    cfg.override_f64("p", args.p);
    cfg.override_f64("angle", args.angle);
    cfg.override_f64("theta", args.theta);
    cfg.override_u64("seed", args.seed);
    cfg.override_str("expect", args.expect);

    let scenario = cfg.scenario()?;
    let noise = cfg.noise()?;
    let expect = cfg.expect()?;
    let plan = resolve_plan(scenario, noise, &cfg)?;

    let report = match execute_plan(&plan) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("verification failed: {e}");
            return Ok(ExitCode::from(1));
        }
    };

    if let Some(cq) = report.constructive_q {
        eprintln!("constructive Q at the built Choi pair: {}", fmt_sig(cq, 9));
    }
    let json = report_json(&report);
    match &args.out {
        Some(path) => write_atomic(path, json.as_bytes()).map_err(|e| e.to_string())?,
        None => println!("{json}"),
    }

    if report.verdict == expect {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "verdict {} does not match expected {}",
            report.verdict, expect
        );
        Ok(ExitCode::from(1))
    }
}

/// A fully resolved run: every required parameter present and in range.
enum RunPlan {
    BsmExact,
    BsmWerner(f64),
    BsmPovm(f64),
    BsmMisalign(f64),
    Tilted { theta: f64, noise: NoiseKind, v: f64, p: f64, angle: f64 },
    GhzExact,
    GhzWerner(f64),
    GhzPovm(f64),
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<f64, String> {
    if (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(format!("{name}={value} outside [{lo}, {hi}]"))
    }
}

/// Turn scenario, noise and parameters into a run plan; all failures here
/// are configuration errors (exit 2).
fn resolve_plan(
    scenario: ScenarioKind,
    noise: NoiseKind,
    cfg: &ConfigMap,
) -> Result<RunPlan, String> {
    match scenario {
        ScenarioKind::Bsm => match noise {
            NoiseKind::None => Ok(RunPlan::BsmExact),
            NoiseKind::Werner => Ok(RunPlan::BsmWerner(check_range(
                "v",
                cfg.require_f64("v")?,
                0.0,
                1.0,
            )?)),
            NoiseKind::PovmNoise => Ok(RunPlan::BsmPovm(check_range(
                "p",
                cfg.require_f64("p")?,
                0.0,
                1.0,
            )?)),
            NoiseKind::Misalign => Ok(RunPlan::BsmMisalign(cfg.require_f64("angle")?)),
        },
        ScenarioKind::Tilted => {
            let theta = cfg.require_f64("theta")?;
            if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4 + 1e-12) {
                return Err(format!("theta={theta} outside (0, pi/4]"));
            }
            let v = match noise {
                NoiseKind::Werner => check_range("v", cfg.require_f64("v")?, 0.0, 1.0)?,
                _ => 1.0,
            };
            let p = match noise {
                NoiseKind::PovmNoise => check_range("p", cfg.require_f64("p")?, 0.0, 1.0)?,
                _ => 0.0,
            };
            let angle = match noise {
                NoiseKind::Misalign => cfg.require_f64("angle")?,
                _ => 0.0,
            };
            Ok(RunPlan::Tilted {
                theta,
                noise,
                v,
                p,
                angle,
            })
        }
        ScenarioKind::Ghz => match noise {
            NoiseKind::None => Ok(RunPlan::GhzExact),
            NoiseKind::Werner => Ok(RunPlan::GhzWerner(check_range(
                "v",
                cfg.require_f64("v")?,
                0.0,
                1.0,
            )?)),
            NoiseKind::PovmNoise => Ok(RunPlan::GhzPovm(check_range(
                "p",
                cfg.require_f64("p")?,
                0.0,
                1.0,
            )?)),
            NoiseKind::Misalign => {
                Err("misalign noise is defined for the swap scenarios only".into())
            }
        },
    }
}

fn execute_plan(plan: &RunPlan) -> Result<CertReport, swapcert::Error> {
    match plan {
        RunPlan::BsmExact => certify::theorem1_verify(&SwapScenario::ideal_bsm()),
        RunPlan::BsmWerner(v) => certify::theorem2_certify(&SwapScenario::werner_bsm(*v)?),
        RunPlan::BsmPovm(p) => {
            certify::theorem2_certify(&SwapScenario::ideal_bsm().with_noisy_bob(*p)?)
        }
        RunPlan::BsmMisalign(angle) => {
            certify::theorem2_certify(&misaligned_scenario(&SwapScenario::ideal_bsm(), *angle))
        }
        RunPlan::Tilted {
            theta,
            noise,
            v,
            p,
            angle,
        } => {
            // theta = pi/4 is the plain-CHSH limit.
            if (*theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12 {
                return certify::tilted_verify(*theta, &SwapScenario::ideal_bsm());
            }
            let base = SwapScenario::tilted_ideal(*theta)?;
            let s = match noise {
                NoiseKind::None => base,
                NoiseKind::Werner => {
                    let w = swapcert::qobjects::werner_source(*v)?;
                    let mut s = base;
                    s.tau_ab1 = w.clone();
                    s.tau_b2c = w;
                    s
                }
                NoiseKind::PovmNoise => base.with_noisy_bob(*p)?,
                NoiseKind::Misalign => misaligned_scenario(&base, *angle),
            };
            certify::tilted_verify(*theta, &s)
        }
        RunPlan::GhzExact => certify::ghz_verify(&StarScenario::ideal_ghz()),
        RunPlan::GhzWerner(v) => certify::ghz_verify(&StarScenario::werner_ghz(*v)?),
        RunPlan::GhzPovm(p) => {
            let mut s = StarScenario::ideal_ghz();
            s.rob = noisy_measurement(&s.rob, *p)?;
            certify::ghz_verify(&s)
        }
    }
}

/// JSON report with exactly the documented keys, floats rounded to
/// 9 significant digits.
fn report_json(report: &CertReport) -> String {
    let round = |x: f64| -> serde_json::Value {
        serde_json::Value::from(fmt_sig(x, 9).parse::<f64>().unwrap_or(x))
    };
    let fidelities: Vec<serde_json::Value> =
        report.fidelities.iter().map(|&f| round(f)).collect();
    let value = serde_json::json!({
        "scenario": report.scenario,
        "beta_ave": round(report.beta_ave),
        "q": round(report.q),
        "eta_star": round(report.eta_star),
        "bound": round(report.bound),
        "qsep": round(report.qsep),
        "verdict": report.verdict.to_string(),
        "fidelities": fidelities,
    });
    serde_json::to_string_pretty(&value).expect("static schema")
}

fn cmd_curve(args: CurveArgs) -> Result<ExitCode, String> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    cfg.override_f64("from", args.from);
    cfg.override_f64("to", args.to);
    cfg.override_f64("step", args.step);

    let from = cfg.f64_or("from", 2.6)?;
    let to = cfg.f64_or("to", certify::BETA_MAX)?;
    let step = cfg.f64_or("step", 0.001)?;
    if !step.is_finite() || step <= 0.0 {
        return Err(format!("step {step} must be positive"));
    }

    let rows = certify::bound_curve_steps(from, to, step).map_err(|e| e.to_string())?;
    let mut csv = String::from("beta_ave,q,eta_star,bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.beta_ave, 9),
            fmt_sig(r.q, 9),
            fmt_sig(r.eta_star, 9),
            fmt_sig(r.bound, 9)
        ));
    }
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes()).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_noise_threshold(args: ThresholdArgs) -> Result<ExitCode, String> {
    let _cfg = ConfigMap::load(args.config.as_deref())?;
    let t = certify::noise_threshold().map_err(|e| e.to_string())?;
    let round = |x: f64| -> serde_json::Value {
        serde_json::Value::from(fmt_sig(x, 9).parse::<f64>().unwrap_or(x))
    };
    let value = serde_json::json!({
        "v_star": round(t.v_star),
        "noise": round(t.noise),
        "beta_ave": round(t.beta_ave),
    });
    let json = serde_json::to_string_pretty(&value).expect("static schema");
    match &args.out {
        Some(path) => write_atomic(path, json.as_bytes()).map_err(|e| e.to_string())?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_suite(args: SuiteArgs) -> Result<ExitCode, String> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    cfg.override_u64("seed", args.seed);
    let seed = cfg.u64_or("seed", 2024)?;

    let outcomes = suite::run_all(&suite::SuiteConfig { seed, fault: None });
    let mut all_passed = true;
    for o in &outcomes {
        println!(
            "suite {}: {} ({})",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        all_passed &= o.passed;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Parse the expected verdict string.
pub(crate) fn parse_verdict(s: &str) -> Result<Verdict, String> {
    match s {
        "entangled-certified" => Ok(Verdict::EntangledCertified),
        "inconclusive" => Ok(Verdict::Inconclusive),
        other => Err(format!(
            "unknown verdict '{other}' (expected entangled-certified | inconclusive)"
        )),
    }
}
