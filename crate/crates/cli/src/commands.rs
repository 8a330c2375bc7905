use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use tumorch_core::dynamics::{integrate_regularized, run_system, NullSaver, RunOutput, Saver, Scheme};
use tumorch_core::experiments::{self as exp, StudyReport, Table};
use tumorch_core::io::SnapshotSaver;
use tumorch_core::operators::verify_resolvent_identities;
use tumorch_core::potential::{check_conditions, epsilon_warning};
use tumorch_core::{Error, SpectralPlan};

use crate::config::Config;
use crate::{Cli, Command, SchemeArg};

/// Tag written into every output directory.
pub const OUTPUT_FORMAT: &str = "tumorch-output v1";

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_CRITERION: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }

    fn criterion(msg: String) -> Self {
        Failure::new(EXIT_CRITERION, anyhow!(msg))
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            EXIT_VALIDATION => "invalid configuration",
            EXIT_SOLVER => "solver aborted",
            EXIT_IO => "i/o error",
            EXIT_CRITERION => "criterion failed",
            _ => "error",
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_solver_abort() {
            EXIT_SOLVER
        } else if matches!(e, Error::Io(_)) {
            EXIT_IO
        } else {
            EXIT_VALIDATION
        };
        Failure::new(code, e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn io_err(e: std::io::Error, what: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_IO, anyhow::Error::new(e).context(what.to_string()))
}

struct Session {
    config: Config,
    /// Raw configuration text, echoed verbatim.
    raw: Option<String>,
    out: PathBuf,
}

fn load(cli: &Cli) -> std::result::Result<Session, Failure> {
    let raw = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| io_err(e, format!("reading {}", p.display())))?),
        None => None,
    };
    let mut config = match &raw {
        Some(text) => Config::parse(text)
            .with_context(|| format!("parsing {}", cli.config.as_ref().unwrap().display()))
            .map_err(|e| Failure::new(EXIT_VALIDATION, e))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("tumorch-out"));
    Ok(Session { config, raw, out })
}

fn prepare_output(cli: &Cli, ctx: &Session, notes: &[String]) -> Outcome {
    let out = &ctx.out;
    fs::create_dir_all(out).map_err(|e| io_err(e, format!("creating {}", out.display())))?;
    let echo = ctx.raw.clone().unwrap_or_else(|| "# no configuration file; built-in defaults\n".into());
    fs::write(out.join("config.toml"), echo).map_err(|e| io_err(e, "writing config echo"))?;
    let mut info = String::new();
    let _ = writeln!(info, "format {OUTPUT_FORMAT}");
    let _ = writeln!(info, "version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(info, "command {}", cli.command.name());
    let _ = writeln!(info, "seed {}", ctx.config.seed);
    let _ = writeln!(info, "threads {}", cli.threads.map_or("default".into(), |t| t.to_string()));
    for n in notes {
        let _ = writeln!(info, "warning {n}");
    }
    fs::write(out.join("run_info.txt"), info).map_err(|e| io_err(e, "writing run_info.txt"))
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| io_err(e, format!("writing {}", path.display())))
}

pub fn execute(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::new(EXIT_VALIDATION, anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(EXIT_VALIDATION, anyhow!("thread pool: {e}")))?;
    }
    let ctx = load(cli)?;
    match &cli.command {
        Command::Run { scheme } => cmd_run(cli, &ctx, *scheme),
        Command::VerifyOps { dims, trials, tol } => cmd_verify(cli, ctx, dims.clone(), *trials, *tol),
        Command::CheckPotential => cmd_check_potential(cli, &ctx),
        _ => cmd_study(cli, &ctx),
    }
}

fn warnings(config: &Config) -> Vec<String> {
    let mut w = Vec::new();
    if let (Some(pot), Some(params)) = (&config.potential, &config.params) {
        if params.alpha_warning(pot) {
            w.push(format!("alpha = {} is large for the Lipschitz constant of pi ({})", params.alpha, pot.pi_lip()));
        }
        if params.eps > 0.0 && epsilon_warning(pot, params.eps) {
            w.push(format!("eps = {} is large for the Lipschitz constant of pi ({})", params.eps, pot.pi_lip()));
        }
    }
    for n in &w {
        eprintln!("warning: {n}");
    }
    w
}

fn cmd_run(cli: &Cli, ctx: &Session, scheme: SchemeArg) -> Outcome {
    let sc = ctx.config.scenario()?;
    let notes = warnings(&ctx.config);
    prepare_output(cli, ctx, &notes)?;
    let grid = sc.build_grid()?;
    let plan = Arc::new(SpectralPlan::new(grid.clone()));
    let model = sc.build_model(plan)?;
    let init = sc.build_initial(&grid)?;
    let mut snaps;
    let mut null = NullSaver;
    let saver: &mut dyn Saver = if ctx.config.output.snapshots {
        snaps = SnapshotSaver::new(ctx.out.join("snapshots"), ctx.config.output.save_stride)?;
        &mut snaps
    } else {
        &mut null
    };
    let out: RunOutput = match scheme {
        SchemeArg::BackwardEuler => run_system(&model, &init, Scheme::BackwardEuler, saver)?,
        SchemeArg::Rk4 => integrate_regularized(&model, &init, saver)?,
    };
    let ledger = fs::File::create(ctx.out.join("ledger.csv")).map_err(|e| io_err(e, "creating ledger.csv"))?;
    out.report
        .write_csv(std::io::BufWriter::new(ledger))
        .map_err(|e| io_err(e, "writing ledger.csv"))?;
    let mut s = String::new();
    let _ = writeln!(s, "steps {}", out.steps);
    let _ = writeln!(s, "t_final {:e}", out.final_state.t);
    let _ = writeln!(s, "inner_iterations {}", out.inner_iterations);
    let _ = writeln!(s, "lyapunov_excess {:e}", out.report.lyapunov_excess());
    let _ = writeln!(s, "mass_drift {:e}", out.report.mass_drift());
    let _ = writeln!(s, "max_xi_residual {:e}", out.report.max_xi_residual());
    write_file(&ctx.out.join("summary.txt"), &s)?;
    print!("{s}");
    Ok(())
}

fn cmd_verify(cli: &Cli, mut ctx: Session, dims: Option<Vec<usize>>, trials: Option<usize>, tol: Option<f64>) -> Outcome {
    let v = &mut ctx.config.verify;
    if let Some(d) = dims {
        v.dims = d;
        v.lengths = None;
    }
    if let Some(t) = trials {
        v.trials = t;
    }
    if let Some(t) = tol {
        v.tol = t;
    }
    let spec = ctx.config.verify_grid()?;
    prepare_output(cli, &ctx, &[])?;
    let v = &ctx.config.verify;
    let rep = verify_resolvent_identities(Arc::new(spec.build()?), v.trials, v.tol, &v.lambdas, ctx.config.seed)?;
    let text = rep.to_string();
    write_file(&ctx.out.join("verify.txt"), &text)?;
    print!("{text}");
    if rep.all_pass() {
        Ok(())
    } else {
        let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::criterion(format!("identities above tolerance {:e}: {}", v.tol, failed.join(", "))))
    }
}

fn cmd_check_potential(cli: &Cli, ctx: &Session) -> Outcome {
    let pot = ctx.config.potential()?;
    let c = &ctx.config.check;
    let notes = warnings(&ctx.config);
    let rep = check_conditions(pot, (c.range[0], c.range[1]), c.samples)?;
    prepare_output(cli, ctx, &notes)?;
    let text = rep.to_kv_text();
    write_file(&ctx.out.join("conditions.txt"), &text)?;
    print!("{text}");
    if rep.all_pass() {
        Ok(())
    } else {
        Err(Failure::criterion(format!("{pot} fails {}", rep.failed_conditions().join(", "))))
    }
}

fn monitor_report(bundles: &[exp::EstimateBundle], spread: f64) -> StudyReport {
    let mut t = Table::new(&["beta", "m1", "m2", "m3", "m4", "m5", "m6", "total"]);
    for b in bundles {
        let mut row = vec![exp::num(b.beta)];
        row.extend(b.values.iter().map(|v| exp::num(*v)));
        row.push(exp::num(b.total));
        t.push(row);
    }
    let passed = spread < exp::MONITOR_SPREAD_MAX;
    StudyReport {
        name: "estimate-monitor",
        passed,
        verdict: format!("spread = {spread:.6} (max {})", exp::MONITOR_SPREAD_MAX),
        summary: t,
        series: vec![("beta_vs_bound".into(), bundles.iter().map(|b| (b.beta, b.total)).collect())],
        ledgers: Vec::new(),
    }
}

fn cmd_study(cli: &Cli, ctx: &Session) -> Outcome {
    let sc = ctx.config.scenario()?;
    let cfg = &ctx.config.study;
    cfg.validate()?;
    let notes = warnings(&ctx.config);
    prepare_output(cli, ctx, &notes)?;
    let mut reports = match &cli.command {
        Command::StudyBeta => {
            let res = exp::study_beta_rate(&sc, cfg)?;
            let (bundles, spread) = exp::estimate_monitor(&sc, cfg)?;
            vec![(None, res.report()), (Some("monitor"), monitor_report(&bundles, spread))]
        }
        Command::StudyCauchy => vec![(None, exp::study_beta_cauchy(&sc, cfg)?.report())],
        Command::StudyLambda => vec![(None, exp::study_lambda(&sc, cfg)?.report())],
        Command::StudyEpsilon => vec![(None, exp::study_epsilon(&sc, cfg)?.report())],
        Command::StudyDomain => vec![(None, exp::study_domain_truncation(&sc, cfg)?.report())],
        Command::StudyContraction => vec![(None, exp::study_contraction(&sc, cfg)?.report())],
        _ => unreachable!("not a study command"),
    };
    let mut failed = Vec::new();
    for (sub, rep) in reports.drain(..) {
        let dir = sub.map_or(ctx.out.clone(), |s| ctx.out.join(s));
        rep.write(&dir)?;
        println!("{} {}: {}", rep.name, if rep.passed { "pass" } else { "fail" }, rep.verdict);
        if !rep.passed {
            failed.push(format!("{}: {}", rep.name, rep.verdict));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::criterion(failed.join("; ")))
    }
}
