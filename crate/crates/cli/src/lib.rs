//! The `asymval` command line: build a plan, pick a target ray, tabulate
//! the function along it, check the growth budget and list Cantor sectors.
//!
//! Exit codes: 0 success, 2 bad input, 3 certification failure,
//! 4 insufficient plan depth, 5 unreachable tolerance.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use asymval_core::evaluate::{
    growth_check, infinity_ray_check, infinity_ray_plan, lemma1_radius, ray_plan, ray_table, GrowthRow, RayRow,
};
use asymval_core::files::{load_plan, load_ray, plan_digest, save_plan, save_ray};
use asymval_core::numerics::{format_rational, Float};
use asymval_core::sectors::{cantor_intervals, AddressBits};
use asymval_core::targets::{constrained_target, forced_from_prefix, select_target, select_target_approx};
use asymval_core::{build_plan, Error, FunctionPlan, GaussianRational, GrowthSpec, PrecisionContext, Radius};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CERT: i32 = 3;
pub const EXIT_DEPTH: i32 = 4;
pub const EXIT_EPSILON: i32 = 5;

pub const PRECISION_ENV: &str = "ASYMVAL_PRECISION";
pub const CSV_SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "asymval", version, about = "Certified asymptotic-value rays of a slowly growing entire function")]
struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, env = PRECISION_ENV)]
    precision: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify sector constants and build a plan.
    Build {
        /// `pow:k[,c]`, `afflog:c1,c0` or `table:FILE`.
        #[arg(long)]
        growth: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose the ray for a target value.
    Target {
        /// Target `x+iy` with decimal or `p/q` coordinates.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "infinity", required_unless_present = "infinity")]
        omega: Option<String>,
        /// Aim at infinity instead of a finite value.
        #[arg(long)]
        infinity: bool,
        /// Accept any sum within this distance of `omega`.
        #[arg(long, requires = "omega", conflicts_with = "in_sector")]
        tol: Option<f64>,
        #[arg(long = "fn")]
        plan: PathBuf,
        /// Force the first address bits.
        #[arg(long, requires = "omega")]
        in_sector: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the function along a ray.
    Ray {
        #[arg(long)]
        ray: PathBuf,
        #[arg(long = "fn")]
        plan: PathBuf,
        /// `A:B:STEPS`, log-radius endpoints and row count.
        #[arg(long, allow_hyphen_values = true)]
        logr: String,
        /// Also find a radius past which every error piece is below `eps / 5`.
        #[arg(long)]
        eps: Option<f64>,
        /// On the infinity ray, certify `Re phi > M`.
        #[arg(long)]
        infinity_m: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the maximum modulus with the growth budget.
    Growth {
        #[arg(long = "fn")]
        plan: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        logr: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the generation-`depth` sectors.
    Cantor {
        #[arg(long = "fn")]
        plan: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a run produced; nothing reaches stdout unless `code` is 0.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Range(_)
        | Error::Domain(_)
        | Error::Precondition(_)
        | Error::GrowthTooSlow(_)
        | Error::Invalid(_)
        | Error::Format(_)
        | Error::Io(_) => EXIT_INPUT,
        Error::PrecisionExhausted(_)
        | Error::Sector
        | Error::CertificationFailed(_)
        | Error::SearchExhausted(_)
        | Error::CertMissing(_)
        | Error::Construction(_)
        | Error::UncertifiedAngle(_) => EXIT_CERT,
        Error::TailUnavailable | Error::DepthInsufficient(_) => EXIT_DEPTH,
        Error::ToleranceUnreachable(_) => EXIT_EPSILON,
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let mut err = String::new();
    match dispatch(&cli, &mut err) {
        Ok(stdout) => Outcome { code: EXIT_OK, stdout, stderr: err },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            Outcome { code: f.code, stdout: String::new(), stderr: err }
        }
    }
}

fn context(bits: Option<u32>, fallback: u32) -> Result<PrecisionContext, Failure> {
    PrecisionContext::new(bits.unwrap_or(fallback)).map_err(Failure::from)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

/// Sends a table to `--out` or returns it for stdout.
fn emit(table: String, out: &Option<PathBuf>) -> Result<String, Failure> {
    match out {
        Some(p) => {
            write_out(p, &table)?;
            Ok(String::new())
        }
        None => Ok(table),
    }
}

fn load_plan_path(path: &Path) -> Result<FunctionPlan, Failure> {
    load_plan(&read(path)?).map_err(Failure::from)
}

pub fn parse_growth(spec: &str) -> Result<GrowthSpec, Error> {
    match spec.strip_prefix("table:") {
        Some(file) => {
            let text = fs::read_to_string(file).map_err(|e| Error::Invalid(format!("cannot read table {file}: {e}")))?;
            GrowthSpec::parse_table(&text)
        }
        None => GrowthSpec::parse(spec),
    }
}

pub fn parse_logr(s: &str) -> Result<Vec<Radius>, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Invalid(format!("--logr wants A:B:STEPS, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    asymval_core::evaluate::logr_grid(a, b, steps)
}

fn dispatch(cli: &Cli, err: &mut String) -> Result<String, Failure> {
    match &cli.command {
        Command::Build { growth, levels, out } => {
            let ctx = context(cli.precision, PrecisionContext::DEFAULT_BITS)?;
            let g = parse_growth(growth).map_err(|e| input(e.to_string()))?;
            if *levels < 2 {
                return Err(input("--levels must be at least 2"));
            }
            let plan = build_plan(&g, *levels, &ctx)?;
            write_out(out, &save_plan(&plan)?)?;
            Ok(plan_summary(&plan))
        }
        Command::Target { omega, infinity, tol, plan, in_sector, out } => {
            let plan = load_plan_path(plan)?;
            let ray = if *infinity {
                infinity_ray_plan(&plan)?
            } else {
                let text = omega.as_deref().unwrap_or_default();
                let w = GaussianRational::parse(text).map_err(|e| input(e.to_string()))?;
                let sel = match (tol, in_sector) {
                    (Some(t), _) => {
                        let (re, im) = w.to_f64();
                        select_target_approx(re, im, *t)?
                    }
                    (None, Some(bits)) => {
                        let prefix = AddressBits::parse(bits).map_err(|e| input(e.to_string()))?;
                        if prefix.len() > plan.levels {
                            return Err(Error::DepthInsufficient(format!(
                                "prefix of {} bits exceeds the plan's {} levels",
                                prefix.len(),
                                plan.levels
                            ))
                            .into());
                        }
                        let (fin, fout) = forced_from_prefix(&prefix);
                        constrained_target(&w, &fin, &fout)?
                    }
                    (None, None) => select_target(&w)?,
                };
                ray_plan(sel, &plan)?
            };
            write_out(out, &save_ray(&ray, &plan_digest(&plan)?)?)?;
            Ok(format!(
                "bits {}\ntheta {} pi\ntheta_width {} pi\n",
                ray.bits,
                format_rational(ray.theta.q()),
                format_rational(ray.theta_width.q())
            ))
        }
        Command::Ray { ray, plan, logr, eps, infinity_m, format, out } => {
            let plan = load_plan_path(plan)?;
            let ctx = context(cli.precision, plan.precision.bits)?;
            let ray = load_ray(&read(ray)?, Some(&plan))?;
            let grid = parse_logr(logr).map_err(|e| input(e.to_string()))?;
            let rows = ray_table(&ray, &plan, &grid, &ctx);
            let mut extra = String::new();
            if let Some(e) = eps {
                let b = lemma1_radius(&ray, &plan, *e, &ctx).map_err(|e| match e {
                    Error::DepthInsufficient(m) | Error::ToleranceUnreachable(m) => {
                        Failure { code: EXIT_EPSILON, message: format!("tolerance unreachable: {m}") }
                    }
                    e => e.into(),
                })?;
                let pieces: Vec<String> = b.pieces.iter().map(|p| num(p.to_f64_up())).collect();
                let _ = writeln!(extra, "lemma1 log_R {} pieces {}", num(b.log_r.to_f64()), pieces.join(","));
            }
            if let Some(m) = infinity_m {
                let r = infinity_ray_check(*m, &plan, &ctx)?;
                let _ = writeln!(
                    extra,
                    "infinity log_r {} n0 {} re_lower {} deduction {}",
                    num(r.log_r.to_f64()),
                    r.n0,
                    num(r.re_lower.to_f64_down()),
                    num(r.deduction.to_f64_up())
                );
            }
            err.push_str(&extra);
            emit(render_ray(&rows, *format), out)
        }
        Command::Growth { plan, logr, format, out } => {
            let plan = load_plan_path(plan)?;
            let ctx = context(cli.precision, plan.precision.bits)?;
            let grid: Vec<Float> = parse_logr(logr)
                .map_err(|e| input(e.to_string()))?
                .into_iter()
                .filter_map(|r| r.log_r().cloned())
                .collect();
            emit(render_growth(&growth_check(&plan, &grid, &ctx), *format), out)
        }
        Command::Cantor { plan, depth, format, out } => {
            let plan = load_plan_path(plan)?;
            let rows = cantor_intervals(&plan, *depth)?;
            emit(render_cantor(&rows, *format), out)
        }
    }
}

fn plan_summary(plan: &FunctionPlan) -> String {
    let mut s = String::from("n,alpha_pi,N,log_r,log_lambda\n");
    for n in 1..=plan.levels {
        let _ = writeln!(
            s,
            "{n},{},{},{},{}",
            format_rational(plan.alpha_at(n).q()),
            plan.n_at(n),
            num(plan.log_r_at(n).to_f64_up()),
            num(plan.log_lambda_at(n).to_f64_down())
        );
    }
    s
}

/// Shortest round-trip text, switching to exponent form for very small or large values.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn log_r_f64(r: &Radius) -> f64 {
    r.log_r().map(|l| l.to_f64()).unwrap_or(f64::NEG_INFINITY)
}

pub const RAY_COLUMNS: &str = "log_r,n_eval,phi_re,phi_im,phi_rad,evaluated_terms_radius,truncation_tail,theta_width_slack,distance,re_lower,status";

fn render_ray(rows: &[RayRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = format!("{RAY_COLUMNS}\n");
            for row in rows {
                let lr = num(log_r_f64(&row.radius));
                let _ = match &row.outcome {
                    Ok(p) => writeln!(
                        s,
                        "{lr},{},{},{},{},{},{},{},{},{},ok",
                        p.n_eval,
                        num(p.phi.re.to_f64()),
                        num(p.phi.im.to_f64()),
                        num(p.phi.rad.to_f64_up()),
                        num(p.budget.evaluated_terms_radius.to_f64_up()),
                        num(p.budget.truncation_tail.to_f64_up()),
                        num(p.budget.theta_width_slack.to_f64_up()),
                        opt_f64(p.distance_to_target.as_ref().map(Float::to_f64_up)),
                        num(p.re_lower.to_f64_down()),
                    ),
                    Err(e) => writeln!(s, "{lr},,,,,,,,,,{}", csv_text(&e.to_string())),
                };
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|row| {
                    let lr = row.radius.log_r().map(Float::to_f64);
                    match &row.outcome {
                        Ok(p) => json!({
                            "log_r": lr,
                            "n_eval": p.n_eval,
                            "phi": {"re": p.phi.re.to_f64(), "im": p.phi.im.to_f64(), "rad": p.phi.rad.to_f64_up()},
                            "budget": {
                                "evaluated_terms_radius": p.budget.evaluated_terms_radius.to_f64_up(),
                                "truncation_tail": p.budget.truncation_tail.to_f64_up(),
                                "theta_width_slack": p.budget.theta_width_slack.to_f64_up(),
                            },
                            "distance": p.distance_to_target.as_ref().map(Float::to_f64_up),
                            "re_lower": p.re_lower.to_f64_down(),
                            "status": "ok",
                        }),
                        Err(e) => json!({"log_r": lr, "status": e.to_string()}),
                    }
                })
                .collect();
            json_doc("ray-table", rows)
        }
    }
}

pub const GROWTH_COLUMNS: &str = "log_r,loglog_bound,budget,pass,status";

fn render_growth(rows: &[GrowthRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = format!("{GROWTH_COLUMNS}\n");
            for row in rows {
                let lr = num(row.log_r.to_f64());
                let _ = match &row.outcome {
                    Ok(p) => writeln!(
                        s,
                        "{lr},{},{},{},ok",
                        opt_f64(p.loglog_bound.as_ref().map(Float::to_f64_up)),
                        num(p.budget.to_f64_down()),
                        p.pass
                    ),
                    Err(e) => writeln!(s, "{lr},,,false,{}", csv_text(&e.to_string())),
                };
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|row| match &row.outcome {
                    Ok(p) => json!({
                        "log_r": row.log_r.to_f64(),
                        "loglog_bound": p.loglog_bound.as_ref().map(Float::to_f64_up),
                        "budget": p.budget.to_f64_down(),
                        "pass": p.pass,
                        "status": "ok",
                    }),
                    Err(e) => json!({"log_r": row.log_r.to_f64(), "pass": false, "status": e.to_string()}),
                })
                .collect();
            json_doc("growth-table", rows)
        }
    }
}

pub const CANTOR_COLUMNS: &str = "address,lo_pi,hi_pi,width_pi,lo,hi";

fn render_cantor(rows: &[(AddressBits, asymval_core::SectorInterval)], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = format!("{CANTOR_COLUMNS}\n");
            for (bits, iv) in rows {
                let _ = writeln!(
                    s,
                    "{bits},{},{},{},{},{}",
                    format_rational(iv.lo.q()),
                    format_rational(iv.hi.q()),
                    format_rational(iv.width().q()),
                    num(iv.lo.to_f64()),
                    num(iv.hi.to_f64())
                );
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(bits, iv)| {
                    json!({
                        "address": bits.to_string(),
                        "lo_pi": format_rational(iv.lo.q()),
                        "hi_pi": format_rational(iv.hi.q()),
                        "width_pi": format_rational(iv.width().q()),
                    })
                })
                .collect();
            json_doc("cantor", rows)
        }
    }
}

fn json_doc(kind: &str, rows: Vec<serde_json::Value>) -> String {
    let doc = json!({"schema_version": CSV_SCHEMA, "kind": kind, "rows": rows});
    serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
