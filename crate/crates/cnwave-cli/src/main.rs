use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cnwave::approx::{self, closeness_report};
use cnwave::elliptic::{self, Modulus};
use cnwave::evolve::{self, EvolveConfig};
use cnwave::linop::{self, OperatorKind};
use cnwave::modulation::{perturbed_initial, Tracker};
use cnwave::profiles::{self, build_profile};
use cnwave::torus::grid;
use cnwave::Sector;
use cnwave_cli::output::{fmt_f64, parse_records_csv, records_csv, row};
use cnwave_cli::suite::{summary_csv, trajectory_checks, RunResult};
use cnwave_cli::{run_stability_suite, CliError, ExperimentConfig, EXIT_ACCEPTANCE, EXIT_PASS};

#[derive(Parser)]
#[command(name = "cnwave", version, about = "Cnoidal waves of the damped cubic NLS on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete elliptic integrals and Jacobi functions.
    Elliptic {
        #[command(subcommand)]
        op: EllipticOp,
    },
    /// Samples of the cnoidal profile Q_m and ∂_mQ_m.
    Profile {
        /// Mass m.
        #[arg(long)]
        m: f64,
        /// Grid size.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lowest eigenvalues of L+ or L- with their closed forms.
    Spectrum {
        /// Mass m.
        #[arg(long)]
        m: f64,
        /// Operator: L+ or L-.
        #[arg(long, value_parser = ["L+", "L-"])]
        which: String,
        /// Sector: full, S, A, A+ or A-.
        #[arg(long, default_value = "full")]
        sector: String,
        /// Number of eigenvalues.
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Grid size.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corrected profile Q_{m,eps} and its closeness to Q_m.
    Approx {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a perturbed cnoidal wave and write modulation diagnostics.
    Evolve {
        /// Initial mass.
        #[arg(long)]
        m0: f64,
        /// Damping.
        #[arg(long)]
        eps: f64,
        /// Final time.
        #[arg(long = "T")]
        t_end: f64,
        /// Time step.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Perturbation amplitude (H¹ norm before mass rescaling).
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        /// Grid size.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Diagnostics cadence in steps.
        #[arg(long, default_value_t = 100)]
        every: usize,
        /// Perturbation seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize diagnostics CSVs written by `evolve` or `suite`.
    Report {
        /// Diagnostics CSV files.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Per-run summary CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the damped stability sweep over (m0, eps).
    Suite {
        /// Key-value config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated initial masses.
        #[arg(long)]
        m0: Option<String>,
        /// Comma-separated damping values.
        #[arg(long)]
        eps: Option<String>,
        /// Perturbation amplitude, or `eps`.
        #[arg(long)]
        perturb: Option<String>,
        /// Final-time rule: `c/eps` or `eps^-3/2`.
        #[arg(long)]
        t_end: Option<String>,
        /// Absolute cap on the final time.
        #[arg(long)]
        t_cap: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        /// Grid size.
        #[arg(long)]
        n: Option<String>,
        /// Diagnostics cadence in steps.
        #[arg(long)]
        every: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum EllipticOp {
    /// K(k), E(k) and Θ(k).
    Eval {
        #[arg(long)]
        k: f64,
    },
    /// sn, cn, dn and am at (u, k).
    Jacobi {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        u: f64,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&row(r));
        s.push('\n');
    }
    s
}

fn parse_sector(s: &str) -> Result<Sector, CliError> {
    Sector::parse(s).ok_or_else(|| CliError::Usage(format!("unknown sector '{s}' (full, S, A, A+, A-)")))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Elliptic { op: EllipticOp::Eval { k } } => {
            let v = elliptic::elliptic_values(Modulus::new(k)?);
            emit(&None, &table("k,K,E,Theta", &[vec![k, v.k, v.e, v.theta]]))?;
        }
        Command::Elliptic { op: EllipticOp::Jacobi { k, u } } => {
            let j = elliptic::jacobi(u, Modulus::new(k)?);
            emit(&None, &table("u,k,sn,cn,dn,am", &[vec![u, k, j.sn, j.cn, j.dn, j.am]]))?;
        }
        Command::Profile { m, n, out } => {
            let p = build_profile(m, n)?;
            let dq = profiles::dq_dm(&p);
            let rows: Vec<Vec<f64>> = grid(n)
                .into_iter()
                .zip(p.field.samples())
                .zip(dq.samples())
                .map(|((x, q), d)| vec![x, q.re, d.re])
                .collect();
            emit(&out, &table("x,q,dq_dm", &rows))?;
        }
        Command::Spectrum { m, which, sector, n, grid, out } => {
            let kind = if which == "L+" { OperatorKind::Lplus } else { OperatorKind::Lminus };
            let sector = parse_sector(&sector)?;
            let p = build_profile(m, grid)?;
            let op = linop::assemble(kind, &p, sector)?;
            let spec = linop::spectrum(&op, n)?;
            let closed = linop::closed_form_in_sector(kind, p.k.value(), p.values.k, sector)?;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let v = &spec.eigenvectors[i];
                    vec![
                        i as f64,
                        spec.eigenvalues[i],
                        closed.get(i).copied().unwrap_or(f64::NAN),
                        spec.residuals[i],
                        linop::sector_weight(v, Sector::S),
                        linop::sector_weight(v, Sector::Aplus),
                        linop::sector_weight(v, Sector::Aminus),
                    ]
                })
                .collect();
            emit(&out, &table("index,computed,closed_form,residual,weight_S,weight_Aplus,weight_Aminus", &rows))?;
        }
        Command::Approx { m, eps, grid, out } => {
            let a = approx::solve(m, eps, grid)?;
            let (zr, fr) = if eps > 0.0 { closeness_report(&a)? } else { (0.0, 0.0) };
            emit(
                &out,
                &table(
                    "m,eps,omega,lambda,nu,newton_residual,iterations,zeta_h1_ratio,frequency_ratio,transverse_defect",
                    &[vec![
                        m,
                        eps,
                        a.profile.omega,
                        a.lambda,
                        a.nu,
                        a.newton_residual,
                        a.iterations as f64,
                        zr,
                        fr,
                        a.transverse_defect(),
                    ]],
                ),
            )?;
        }
        Command::Evolve { m0, eps, t_end, dt, perturb, n, every, seed, out } => {
            let p = build_profile(m0, n)?;
            let psi0 = perturbed_initial(&p, perturb, seed)?;
            let cfg = EvolveConfig { eps, dt, t_end, n_grid: n, sample_every: every, sector_projection: false };
            let mut tracker = Tracker::new(m0, eps, n);
            evolve::run(&psi0, &cfg, |t, psi| tracker.observe(t, psi).map(|_| ()))?;
            emit(&Some(out), &records_csv(&tracker.finish()))?;
        }
        Command::Report { inputs, out } => {
            let mut runs = Vec::new();
            for path in &inputs {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                runs.push(RunResult::from_csv_records(parse_records_csv(&text)?)?);
            }
            let checks = trajectory_checks(&runs);
            for r in &runs {
                println!(
                    "m0={} eps={} samples={} sup_xi={} sup_xi/sqrt(eps)={} K={} dL/dt deviation={}",
                    fmt_f64(r.m0),
                    fmt_f64(r.eps),
                    r.report.samples,
                    fmt_f64(r.report.sup_xi),
                    fmt_f64(r.report.sup_xi_scaled),
                    fmt_f64(r.report.envelope_k),
                    fmt_f64(r.lyap_derivative_deviation)
                );
            }
            for c in &checks {
                println!("{}", c.line());
            }
            if let Some(p) = &out {
                emit(&Some(p.clone()), &summary_csv(&runs))?;
            }
            return Ok(if checks.iter().all(|c| c.pass) { EXIT_PASS } else { EXIT_ACCEPTANCE });
        }
        Command::Suite { config, m0, eps, perturb, t_end, t_cap, dt, n, every, seed, out } => {
            let mut cfg = match &config {
                Some(path) => {
                    let text =
                        fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                    ExperimentConfig::parse(&text)?
                }
                None => ExperimentConfig::default(),
            };
            let overrides = [
                ("m0", m0),
                ("eps", eps),
                ("perturb", perturb),
                ("t_end", t_end),
                ("t_cap", t_cap),
                ("dt", dt),
                ("n", n),
                ("sample_every", every),
                ("seed", seed),
                ("out", out),
            ];
            for (k, v) in overrides {
                if let Some(v) = v {
                    cfg.set(k, &v)?;
                }
            }
            let summary = run_stability_suite(&cfg)?;
            print!("{}", summary.text());
            return Ok(summary.exit_code());
        }
    }
    Ok(EXIT_PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
