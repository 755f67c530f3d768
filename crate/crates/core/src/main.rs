use std::path::{Path, PathBuf};
use std::process::ExitCode;

use accr::conformal::{ScalarField, TransformParams};
use accr::corpus::{builtin, default_params, Params, BUILTIN_NAMES};
use accr::models::{ConeMetric, DEFAULT_FD_STEP};
use accr::sampling::{DEFAULT_POINTS, DEFAULT_SEED};
use accr::verify::{default_suite, run_all, ModelSpec, RunConfig, Subject};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "accr",
    version,
    about = "Verify identities of almost contact complex Riemannian manifolds numerically"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in models.
    List {
        /// Print the listing as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run every applicable check.
    Verify(RunArgs),
    /// Apply a contact complex conformal transformation, then verify.
    Transform {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        u: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        w: f64,
        /// Transformation parameters as JSON (constants or affine functions); overrides --u/--v/--w.
        #[arg(long, value_name = "PATH")]
        transform: Option<PathBuf>,
    },
    /// Check that the cone over the model is holomorphic.
    Cone {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = CliConeMetric::AntiIsometric)]
        cone_metric: CliConeMetric,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CliConeMetric {
    AntiIsometric,
    Displayed,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in model name or path to a JSON model spec; repeatable. Defaults to the full corpus.
    #[arg(short, long)]
    model: Vec<String>,
    /// Model parameter `key=value`; repeatable.
    #[arg(long = "params", value_name = "K=V", value_parser = parse_param, allow_hyphen_values = true)]
    params: Vec<(String, f64)>,
    /// Number of sample points for chart and extension models.
    #[arg(long)]
    points: Option<usize>,
    /// Sampler seed; falls back to ACCR_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for identity checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Write the JSON report to this path (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// A built-in model name or a check-ID prefix; repeatable.
    #[arg(long)]
    only: Vec<String>,
    /// A check-ID prefix; repeatable.
    #[arg(long)]
    check: Vec<String>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad value for `{k}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn seed_from_env() -> Result<u64, String> {
    match std::env::var("ACCR_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|e| format!("ACCR_SEED=`{s}` is not a seed: {e}")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_spec(path: &Path) -> Result<ModelSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn subjects(args: &RunArgs, only_models: &[String]) -> Result<Vec<Subject>, String> {
    let params: Params = args.params.iter().cloned().collect();
    if args.model.is_empty() {
        if !params.is_empty() {
            return Err("--params needs --model".into());
        }
        let suite = default_suite();
        if only_models.is_empty() {
            return Ok(suite);
        }
        return Ok(suite
            .into_iter()
            .filter(|s| matches!(s, Subject::Builtin { name, .. } if only_models.contains(name)))
            .collect());
    }
    args.model
        .iter()
        .map(|m| {
            if BUILTIN_NAMES.contains(&m.as_str()) {
                let defaults = default_params(m).map_err(|e| e.to_string())?;
                if let Some(k) = params.keys().find(|k| !defaults.contains_key(*k)) {
                    return Err(format!("model `{m}` has no parameter `{k}`"));
                }
                Ok(Subject::Builtin {
                    name: m.clone(),
                    params: params.clone(),
                })
            } else if Path::new(m).exists() {
                let mut spec = load_spec(Path::new(m))?;
                spec.params.extend(params.clone());
                Ok(Subject::from_spec(spec))
            } else {
                Err(format!(
                    "`{m}` is neither a built-in model ({}) nor a readable file",
                    BUILTIN_NAMES.join(", ")
                ))
            }
        })
        .collect()
}

fn config(args: &RunArgs) -> Result<(RunConfig, Vec<String>), String> {
    let seed = match args.seed {
        Some(s) => s,
        None => seed_from_env()?,
    };
    let points = args.points.unwrap_or(DEFAULT_POINTS);
    if points == 0 {
        return Err("--points must be positive".into());
    }
    let fd_step = args.fd_step.unwrap_or(DEFAULT_FD_STEP);
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err("--fd-step must be a positive number".into());
    }
    if let Some(t) = args.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err("--tol must be a non-negative number".into());
        }
    }
    let (models, prefixes): (Vec<String>, Vec<String>) = args
        .only
        .iter()
        .cloned()
        .partition(|o| BUILTIN_NAMES.contains(&o.as_str()));
    let mut checks = prefixes;
    checks.extend(args.check.iter().cloned());
    Ok((
        RunConfig {
            seed,
            points,
            fd_step,
            tolerance: args.tol,
            checks,
            ..RunConfig::default()
        },
        models,
    ))
}

fn run(args: &RunArgs, cfg: RunConfig, subjects: Vec<Subject>) -> ExitCode {
    if subjects.is_empty() {
        return usage_error("no models selected");
    }
    let report = run_all(&subjects, &cfg);
    let json = report.to_json();
    match &args.json {
        Some(p) if p.as_os_str() == "-" => println!("{json}"),
        Some(p) => {
            if let Err(e) = std::fs::write(p, json + "\n") {
                return usage_error(format!("{}: {e}", p.display()));
            }
            print!("{}", report.to_text());
        }
        None => print!("{}", report.to_text()),
    }
    if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn list(json: bool) -> ExitCode {
    let mut rows = Vec::new();
    for name in BUILTIN_NAMES {
        let params = default_params(name).unwrap_or_default();
        match builtin(name, &params) {
            Ok(b) => rows.push(serde_json::json!({
                "name": name,
                "kind": b.model.kind(),
                "dimension": b.model.dim(),
                "params": params,
                "role": format!("{:?}", b.role),
                "notes": b.notes,
            })),
            Err(e) => return usage_error(e),
        }
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).unwrap_or_default()
        );
    } else {
        for r in &rows {
            println!(
                "{:<22} {:<18} dim {:<3} {:<11} {}",
                r["name"].as_str().unwrap_or_default(),
                r["kind"].as_str().unwrap_or_default(),
                r["dimension"],
                r["role"].as_str().unwrap_or_default(),
                r["params"]
            );
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::List { json } => list(json),
        Command::Verify(args) => {
            let prepared =
                config(&args).and_then(|(cfg, models)| Ok((cfg, subjects(&args, &models)?)));
            match prepared {
                Ok((cfg, subjects)) => run(&args, cfg, subjects),
                Err(e) => usage_error(e),
            }
        }
        Command::Transform {
            run: args,
            u,
            v,
            w,
            transform,
        } => {
            let params = match transform {
                Some(p) => std::fs::read_to_string(&p)
                    .map_err(|e| format!("{}: {e}", p.display()))
                    .and_then(|t| {
                        serde_json::from_str::<TransformParams>(&t)
                            .map_err(|e| format!("{}: {e}", p.display()))
                    }),
                None => Ok(TransformParams {
                    u: ScalarField::Constant(u),
                    v: ScalarField::Constant(v),
                    w: ScalarField::Constant(w),
                }),
            };
            let prepared = params.and_then(|params| {
                if args.model.is_empty() {
                    return Err("transform needs --model".into());
                }
                let (cfg, models) = config(&args)?;
                let subjects = subjects(&args, &models)?
                    .into_iter()
                    .map(|base| Subject::Transformed {
                        base: Box::new(base),
                        params: params.clone(),
                    })
                    .collect();
                Ok((cfg, subjects))
            });
            match prepared {
                Ok((cfg, subjects)) => run(&args, cfg, subjects),
                Err(e) => usage_error(e),
            }
        }
        Command::Cone {
            run: args,
            cone_metric,
        } => match config(&args).and_then(|(cfg, models)| Ok((cfg, subjects(&args, &models)?))) {
            Ok((mut cfg, subjects)) => {
                cfg.cone_metric = match cone_metric {
                    CliConeMetric::AntiIsometric => ConeMetric::AntiIsometric,
                    CliConeMetric::Displayed => ConeMetric::Displayed,
                };
                if cfg.checks.is_empty() {
                    cfg.checks.push("cone.".into());
                }
                run(&args, cfg, subjects)
            }
            Err(e) => usage_error(e),
        },
    }
}
