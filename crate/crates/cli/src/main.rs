//! `qobb`: sweeps, figures and the oracle suite for the optimal biased bounds.
//!
//! Exit status: 0 on success, 1 when a verification check or computation
//! fails, 2 on a usage error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::{pick, Config};
use qobb_core::bias::{bound_integral, solve_bias_bvp, BiasGrid, VariationalProblem};
use qobb_core::bounds::qobb_closed_form;
use qobb_core::scenarios::{
    emit_csv, emit_svg_groups, render_csv, run_sweep, verify, MmseMethod, PerturbTarget, Perturbation, PlotStyle,
    RowGroup, Scenario, ScenarioId, SweepRow, VerifyConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "qobb",
    version,
    about = "Optimal biased bounds, QCRB and MMSE for unitary phase estimation"
)]
struct Cli {
    /// key = value file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct Range {
    /// Prior window width
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Smallest sweep value
    #[arg(long, allow_negative_numbers = true)]
    min: Option<f64>,
    /// Largest sweep value
    #[arg(long, allow_negative_numbers = true)]
    max: Option<f64>,
    /// Number of sweep points
    #[arg(long)]
    points: Option<usize>,
    /// CSV output path
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// SVG output path
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Plot the y axis on a linear scale
    #[arg(long)]
    linear_y: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep one scenario and write CSV (stdout by default) and optionally SVG
    Sweep {
        #[command(flatten)]
        range: Range,
        /// phase-cs, phase-smsvs, su2-cs-ts or qubit-repeat
        #[arg(long)]
        scenario: Option<String>,
        /// |beta|^2 of the SU(2) coherent input
        #[arg(long, allow_negative_numbers = true)]
        beta_sq: Option<f64>,
        /// Evaluate the MMSE column by quadrature instead of the closed form
        #[arg(long)]
        mmse_quadrature: bool,
    },
    /// Solve the optimal bias for a constant rate and compare with the closed form
    Bias {
        /// Prior window width
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        /// Information rate K
        #[arg(long, allow_negative_numbers = true)]
        rate: Option<f64>,
        /// Grid nodes (odd)
        #[arg(long)]
        points: Option<usize>,
        /// CSV output path
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the oracle suite and print a JSON report
    Verify {
        /// Prior window width
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        /// Photon-number cap for every Fock-space oracle
        #[arg(long)]
        n_max: Option<usize>,
        /// JSON report path (stdout by default)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Corrupt a moment formula, e.g. cs-variance=1e-3
        #[arg(long, value_name = "TARGET=EPS")]
        perturb: Option<String>,
    },
    /// Coherent and squeezed-vacuum phase probes against the mean photon number
    Fig1 {
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        mmse_quadrature: bool,
    },
    /// SU(2) probe with a thermal second input against the thermal occupation
    Fig2 {
        #[command(flatten)]
        range: Range,
        #[arg(long, allow_negative_numbers = true)]
        beta_sq: Option<f64>,
        #[arg(long)]
        mmse_quadrature: bool,
    },
    /// Repeated qubit measurements against the number of measurements
    Fig3 {
        #[command(flatten)]
        range: Range,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    Verification,
}

impl From<qobb_core::Error> for Failure {
    fn from(e: qobb_core::Error) -> Self {
        use qobb_core::Error as E;
        let cause = match &e {
            E::AtSweepPoint { source, .. } => source.as_ref(),
            other => other,
        };
        let usage = matches!(cause, E::Domain { .. } | E::InvalidProblem(_) | E::InvalidQuadrature(_));
        if usage {
            Failure::Usage(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(r: anyhow::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Usage)
}

fn runtime<T>(r: anyhow::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Runtime)
}

struct Resolved {
    scenario: Scenario,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
    log_y: bool,
}

fn resolve(
    id: ScenarioId,
    range: Range,
    cfg: &Config,
    mmse_quadrature: bool,
    beta_sq: Option<f64>,
) -> Outcome<Resolved> {
    let mut s = Scenario::default_for(id);
    usage((|| {
        if let Some(a) = pick(range.a, cfg, "a")? {
            s.a = a;
        }
        if let Some(v) = pick(range.min, cfg, "min")? {
            s.range.min = v;
        }
        if let Some(v) = pick(range.max, cfg, "max")? {
            s.range.max = v;
        }
        if let Some(v) = pick(range.points, cfg, "points")? {
            s.range.points = v;
        }
        if let Some(v) = pick(beta_sq, cfg, "beta-sq")? {
            s.beta_sq = v;
        }
        if mmse_quadrature || cfg.flag("mmse-quadrature")? {
            s.mmse_method = MmseMethod::Quadrature;
        }
        Ok(())
    })())?;
    s.validate()?;
    Ok(Resolved {
        scenario: s,
        out: usage(pick(range.out, cfg, "out"))?,
        svg: usage(pick(range.svg, cfg, "svg"))?,
        log_y: !(range.linear_y || usage(cfg.flag("linear-y"))?),
    })
}

fn write_file(path: &Path, f: impl FnOnce(&Path) -> qobb_core::Result<()>) -> Outcome<()> {
    f(path).map_err(|e| Failure::Runtime(anyhow!(e).context(format!("writing {}", path.display()))))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_stdout(text: &str) -> Outcome<()> {
    runtime(std::io::stdout().write_all(text.as_bytes()).context("writing stdout"))
}

fn style(id: ScenarioId, log_y: bool, title: &str) -> PlotStyle {
    let x_label = match id {
        ScenarioId::PhaseCs | ScenarioId::PhaseSmsvs => "mean photon number N",
        ScenarioId::Su2CsTs => "thermal mean photon number",
        ScenarioId::QubitRepeat => "number of measurements v",
    };
    PlotStyle {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "error bound (rad^2)".into(),
        log_y,
    }
}

fn sweep(r: &Resolved) -> Outcome<Vec<SweepRow>> {
    Ok(run_sweep(&r.scenario)?)
}

/// `fig1.csv` with `phase-cs` becomes `fig1_phase-cs.csv`.
fn suffixed(path: &Path, id: ScenarioId) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{id}.{ext}"))
}

fn parse_perturb(s: &str) -> anyhow::Result<Perturbation> {
    let (t, eps) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected TARGET=EPS, got `{s}`"))?;
    let target = match t.trim() {
        "cs-variance" => PerturbTarget::CsVariance,
        "smsvs-variance" => PerturbTarget::SmsvsVariance,
        "su2-jy-square" => PerturbTarget::Su2JySquare,
        "su2-qfi" => PerturbTarget::Su2Qfi,
        other => {
            anyhow::bail!("unknown perturbation target `{other}` (cs-variance, smsvs-variance, su2-jy-square, su2-qfi)")
        }
    };
    let eps: f64 = eps
        .trim()
        .parse()
        .with_context(|| format!("perturbation size `{eps}`"))?;
    Ok(Perturbation { target, eps })
}

fn run(cli: Cli) -> Outcome<()> {
    let cfg = match &cli.config {
        Some(p) => usage(Config::load(p))?,
        None => Config::default(),
    };
    match cli.command {
        Command::Sweep {
            range,
            scenario,
            beta_sq,
            mmse_quadrature,
        } => {
            let id: String = usage(pick(scenario, &cfg, "scenario"))?
                .ok_or_else(|| Failure::Usage(anyhow!("--scenario is required")))?;
            let id: ScenarioId = id.parse().map_err(|e: String| Failure::Usage(anyhow!(e)))?;
            let r = resolve(id, range, &cfg, mmse_quadrature, beta_sq)?;
            let rows = sweep(&r)?;
            match &r.out {
                Some(p) => write_file(p, |p| emit_csv(&rows, p))?,
                None => write_stdout(&render_csv(&rows))?,
            }
            if let Some(p) = &r.svg {
                let groups = [RowGroup { name: "", rows: &rows }];
                write_file(p, |p| emit_svg_groups(&groups, p, &style(id, r.log_y, id.as_str())))?;
            }
        }
        Command::Bias { a, rate, points, out } => {
            let a = usage(pick(a, &cfg, "a"))?.unwrap_or(std::f64::consts::FRAC_PI_2);
            let k = usage(pick(rate, &cfg, "rate"))?.unwrap_or(4.0);
            let n = usage(pick(points, &cfg, "points"))?.unwrap_or(1025);
            let p = VariationalProblem::uniform(k, a, n)?;
            let b = solve_bias_bvp(&p)?;
            let exact = BiasGrid::analytic(k, a, n)?;
            let mut text = String::from("x,bias,analytic_bias\n");
            for ((x, v), e) in b.xs.iter().zip(&b.values).zip(&exact.values) {
                text.push_str(&format!("{x},{v},{e}\n"));
            }
            let err = b
                .values
                .iter()
                .zip(&exact.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            eprintln!(
                "bound functional {} | closed form {} | max bias error {err:e}",
                bound_integral(&b, &p)?,
                qobb_closed_form(k, a)?
            );
            match usage(pick(out, &cfg, "out"))? {
                Some(path) => {
                    runtime(std::fs::write(&path, text).with_context(|| format!("writing {}", path.display())))?;
                    eprintln!("wrote {}", path.display());
                }
                None => write_stdout(&text)?,
            }
        }
        Command::Verify { a, n_max, out, perturb } => {
            let mut vc = VerifyConfig::default();
            if let Some(a) = usage(pick(a, &cfg, "a"))? {
                vc.a = a;
            }
            vc.n_max = usage(pick(n_max, &cfg, "n-max"))?;
            let perturb: Option<String> = usage(pick(perturb, &cfg, "perturb"))?;
            vc.perturbation = perturb
                .as_deref()
                .map(parse_perturb)
                .transpose()
                .map_err(Failure::Usage)?;
            let report = verify(&vc);
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                eprintln!(
                    "{mark} {:<34} measured {:<12.4e} tolerance {:.1e}  {}",
                    c.name, c.measured, c.tolerance, c.detail
                );
            }
            eprintln!("saturation endpoint gap {:e}", report.saturation_endpoint_gap);
            let json = report.to_json() + "\n";
            match usage(pick(out, &cfg, "out"))? {
                Some(path) => {
                    runtime(std::fs::write(&path, json).with_context(|| format!("writing {}", path.display())))?;
                    eprintln!("wrote {}", path.display());
                }
                None => write_stdout(&json)?,
            }
            if !report.passed {
                return Err(Failure::Verification);
            }
        }
        Command::Fig1 { range, mmse_quadrature } => {
            let mut all = Vec::new();
            for id in [ScenarioId::PhaseCs, ScenarioId::PhaseSmsvs] {
                let r = resolve(id, range.clone(), &cfg, mmse_quadrature, None)?;
                all.push((id, sweep(&r)?, r));
            }
            let out = all[0].2.out.clone().unwrap_or_else(|| "fig1.csv".into());
            for (id, rows, _) in &all {
                write_file(&suffixed(&out, *id), |p| emit_csv(rows, p))?;
            }
            let svg = all[0].2.svg.clone().unwrap_or_else(|| "fig1.svg".into());
            let groups = [
                RowGroup {
                    name: "CS",
                    rows: &all[0].1,
                },
                RowGroup {
                    name: "SMSVS",
                    rows: &all[1].1,
                },
            ];
            let st = style(
                ScenarioId::PhaseCs,
                all[0].2.log_y,
                "Error bounds against mean photon number",
            );
            write_file(&svg, |p| emit_svg_groups(&groups, p, &st))?;
        }
        Command::Fig2 {
            range,
            beta_sq,
            mmse_quadrature,
        } => {
            let r = resolve(ScenarioId::Su2CsTs, range, &cfg, mmse_quadrature, beta_sq)?;
            let rows = sweep(&r)?;
            write_file(&r.out.clone().unwrap_or_else(|| "fig2.csv".into()), |p| {
                emit_csv(&rows, p)
            })?;
            let title = format!("SU(2) probe, |beta|^2 = {}", r.scenario.beta_sq);
            let groups = [RowGroup { name: "", rows: &rows }];
            let st = style(ScenarioId::Su2CsTs, r.log_y, &title);
            write_file(&r.svg.clone().unwrap_or_else(|| "fig2.svg".into()), |p| {
                emit_svg_groups(&groups, p, &st)
            })?;
        }
        Command::Fig3 { range } => {
            let r = resolve(ScenarioId::QubitRepeat, range, &cfg, false, None)?;
            let rows = sweep(&r)?;
            write_file(&r.out.clone().unwrap_or_else(|| "fig3.csv".into()), |p| {
                emit_csv(&rows, p)
            })?;
            let groups = [RowGroup { name: "", rows: &rows }];
            let st = style(ScenarioId::QubitRepeat, r.log_y, "Repeated qubit measurements");
            write_file(&r.svg.clone().unwrap_or_else(|| "fig3.svg".into()), |p| {
                emit_svg_groups(&groups, p, &st)
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
    }
}
