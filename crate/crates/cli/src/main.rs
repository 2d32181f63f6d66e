//! `specreg`: batch front-end for regularised determinants, zeta values and
//! loop-group orbit curvature.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use specreg::heat_expansion::exact_expansion;
use specreg::orbit::{log_Vol_reg, log_vol_reg, minimality_report, SpectralPath, MINIMALITY_TOL};
use specreg::regdet::regdet_report;
use specreg::special::{euler_gamma_integral, euler_gamma_series};
use specreg::spectra::SpectrumDescription;
use specreg::zeta::{verify_bridge, zeta_prime0, zeta_prime0_closed_form, zeta_value};
use specreg::{Error, LoopGroupOrbitSpec, Spectrum};

#[derive(Parser, Debug)]
#[command(
    name = "specreg",
    version,
    about = "Regularised determinants, zeta functions and orbit curvature"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cutoff and regularised determinants of a spectrum.
    Detreg(Common),
    /// Spectral zeta values and ζ′(0).
    Zeta {
        #[command(flatten)]
        common: Common,
        /// Points at which ζ(s) is evaluated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Option<Vec<f64>>,
    },
    /// Compare -ζ′(0) with -γ b₀′ + log det_reg.
    Bridge(Common),
    /// Curvature report of a loop-group orbit.
    Orbit(Common),
    /// Euler's constant by two routes.
    Gamma(Output),
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Verification threshold.
    #[arg(long = "abs-tol")]
    abs_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
    /// Cutoff values, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    /// Bad input or usage: exit 2.
    Input(String),
    /// Computation failed or a check did not hold: exit 1.
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Pole { .. } | Error::Unsupported(_) => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Verification(e.to_string()),
        }
    }
}

type Run = Result<Report, Failure>;

/// Rendered report plus the outcome of its self-check.
struct Report {
    json: Value,
    csv: Vec<Vec<f64>>,
    csv_header: &'static str,
    summary: String,
    verified: Result<(), String>,
}

const DEFAULT_EPS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

fn default_s_grid() -> Vec<f64> {
    (0..=18).map(|k| -1.5 + 0.25 * k as f64).collect()
}

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Short form for the human summary.
fn human(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 {
        "0".to_string()
    } else if (1e-3..1e6).contains(&a) {
        format!("{x:.12}")
    } else {
        format!("{x:.12e}")
    }
}

/// Pretty JSON with every float printed to 17 significant digits.
fn render_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (_, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                render_json(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                render_json(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: cannot read: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Input(format!(
            "{}:{}:{}: {}",
            path.display(),
            e.line(),
            e.column(),
            e
        ))
    })
}

fn read_spectrum(path: &Path) -> Result<Spectrum, Failure> {
    let desc: SpectrumDescription = read_json(path)?;
    desc.build()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_orbit(path: &Path) -> Result<LoopGroupOrbitSpec, Failure> {
    let spec: LoopGroupOrbitSpec = read_json(path)?;
    spec.validate()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(spec)
}

fn check_eps(eps: &[f64]) -> Result<(), Failure> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Failure::Input(
            "--eps values must be positive and finite".into(),
        ));
    }
    Ok(())
}

fn check_tol(tol: Option<f64>, default: f64) -> Result<f64, Failure> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Failure::Input(format!(
            "--abs-tol must be positive, got {t}"
        ))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

fn detreg(c: &Common) -> Run {
    let spec = read_spectrum(&c.input)?;
    let tol = check_tol(c.out.abs_tol, 1e-6)?;
    let eps = c.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec());
    check_eps(&eps)?;
    let exp = exact_expansion(&spec, true)?;
    let report = regdet_report(&spec, &exp, &eps)?;
    let verified = if report.quadrature_error > tol {
        Err(format!(
            "quadrature error {:e} exceeds {tol:e}",
            report.quadrature_error
        ))
    } else if !report.limit_converging {
        Err("cutoff determinant does not approach its regularised limit".into())
    } else {
        Ok(())
    };
    let summary = format!(
        "log det_reg = {}\nlog Det_reg = {}\nb0' = {}\nkernel_dim = {}\n",
        human(report.log_det_reg),
        human(report.log_zeta_det_reg),
        human(report.b0_primed),
        report.kernel_dim
    );
    Ok(Report {
        json: json!({ "expansion": to_value(&exp), "report": to_value(&report) }),
        csv: eps
            .iter()
            .zip(&report.log_det_eps)
            .map(|(&e, &d)| vec![e, d])
            .collect(),
        csv_header: "eps,log_det_eps",
        summary,
        verified,
    })
}

fn zeta(c: &Common, s: &Option<Vec<f64>>) -> Run {
    let spec = read_spectrum(&c.input)?;
    let tol = check_tol(c.out.abs_tol, 1e-6)?;
    let exp = exact_expansion(&spec, true)?;
    let grid = s.clone().unwrap_or_else(default_s_grid);
    let mut values = Vec::new();
    let mut poles = Vec::new();
    for &x in &grid {
        match zeta_value(&spec, &exp, x) {
            Ok(v) => values.push(v),
            Err(Error::Pole { .. }) => poles.push(x),
            Err(e) => return Err(e.into()),
        }
    }
    let prime = zeta_prime0(&spec, &exp)?;
    let closed = match zeta_prime0_closed_form(&spec) {
        Ok(v) => Some(v),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let verified = match closed {
        Some(z) if (z - prime.value).abs() > tol => Err(format!(
            "ζ′(0) routes differ by {:e}, above {tol:e}",
            (z - prime.value).abs()
        )),
        _ => Ok(()),
    };
    let summary = format!(
        "zeta(0) = {}\nzeta'(0) = {} (error {:.2e})\nclosed form zeta'(0) = {}\n",
        human(exp.b0_primed()),
        human(prime.value),
        prime.error,
        closed.map_or("unavailable".into(), human)
    );
    Ok(Report {
        json: json!({
            "expansion": to_value(&exp),
            "zeta_at_zero": exp.b0_primed(),
            "zeta_prime0": prime.value,
            "zeta_prime0_error": prime.error,
            "zeta_prime0_closed_form": closed,
            "values": to_value(&values),
            "poles": poles,
        }),
        csv: values
            .iter()
            .map(|v| vec![v.s, v.value, v.error_estimate])
            .collect(),
        csv_header: "s,zeta,error",
        summary,
        verified,
    })
}

fn bridge(c: &Common) -> Run {
    let spec = read_spectrum(&c.input)?;
    let tol = check_tol(c.out.abs_tol, 1e-6)?;
    let exp = exact_expansion(&spec, true)?;
    let r = verify_bridge(&spec, &exp)?;
    let verified = if r.discrepancy > 2.0 * r.budget {
        Err(format!(
            "discrepancy {:e} exceeds twice the budget {:e}",
            r.discrepancy, r.budget
        ))
    } else if r.budget > tol {
        Err(format!("error budget {:e} exceeds {tol:e}", r.budget))
    } else {
        Ok(())
    };
    let summary = format!(
        "-zeta'(0) = {}\n-gamma b0' + log det_reg = {}\ndiscrepancy = {:.2e} (budget {:.2e})\n",
        human(r.zeta_route),
        human(r.heat_route),
        r.discrepancy,
        r.budget
    );
    Ok(Report {
        json: to_value(&r),
        csv: vec![vec![r.zeta_route, r.heat_route, r.discrepancy, r.budget]],
        csv_header: "zeta_route,heat_route,discrepancy,budget",
        summary,
        verified,
    })
}

fn orbit(c: &Common) -> Run {
    let spec = read_orbit(&c.input)?;
    let tol = check_tol(c.out.abs_tol, MINIMALITY_TOL)?;
    let report = minimality_report(&spec)?;
    let curve = match &c.eps {
        Some(eps) => {
            check_eps(eps)?;
            eps.iter()
                .map(|&e| Ok(vec![e, spec.shape_trace_eps(e)?]))
                .collect::<Result<Vec<_>, Error>>()?
        }
        None => report
            .eps_grid
            .iter()
            .zip(&report.tr_H_eps)
            .map(|(&e, &t)| vec![e, t])
            .collect(),
    };
    let verified = if report.zeta_heat_residual.abs() > tol {
        Err(format!(
            "Tr_reg H - tr_reg H - γ δb₀/2 = {:e} exceeds {tol:e}",
            report.zeta_heat_residual
        ))
    } else {
        Ok(())
    };
    let mut json = to_value(&report);
    json["log_vol_reg"] = json!(log_vol_reg(&spec)?.value);
    json["log_Vol_reg"] = json!(log_Vol_reg(&spec)?.value);
    let summary =
        format!(
        "tr_reg H = {}\nTr_reg H = {}\nstrongly minimal: {}\nheat minimal: {}\nzeta minimal: {}\n",
        human(report.tr_reg_H),
        human(report.Tr_reg_H),
        report.strongly_minimal, report.heat_minimal, report.zeta_minimal
    );
    Ok(Report {
        json,
        csv: curve,
        csv_header: "eps,tr_H_eps",
        summary,
        verified,
    })
}

fn gamma(o: &Output) -> Run {
    let tol = check_tol(o.abs_tol, 1e-10)?;
    let integral = euler_gamma_integral();
    let series = euler_gamma_series();
    let diff = integral - series;
    let verified = if diff.abs() > tol {
        Err(format!("routes differ by {diff:e}, above {tol:e}"))
    } else {
        Ok(())
    };
    Ok(Report {
        json: json!({ "integral": integral, "series": series, "difference": diff }),
        csv: vec![vec![integral, series, diff]],
        csv_header: "integral,series,difference",
        summary: format!(
            "gamma (integral) = {}\ngamma (series)   = {}\ndifference = {diff:.2e}\n",
            human(integral),
            human(series)
        ),
        verified,
    })
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = String::new();
            render_json(&report.json, 0, &mut s);
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!("{}\n", report.csv_header);
            for row in &report.csv {
                let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Detreg(c) => (detreg(c), &c.out),
        Command::Zeta { common, s } => (zeta(common, s), &common.out),
        Command::Bridge(c) => (bridge(c), &c.out),
        Command::Orbit(c) => (orbit(c), &c.out),
        Command::Gamma(o) => (gamma(o), o),
    };
    let report = match result {
        Ok(r) => r,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let text = render(&report, out.format);
    match &out.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("error: {}: cannot write: {e}", path.display());
                return ExitCode::from(2);
            }
            print!("{}", report.summary);
        }
        None => print!("{text}"),
    }
    match report.verified {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}
