//! The damped stability sweep: one trajectory per (m₀, ε), run in
//! parallel, then checked against the scaling laws.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use cnwave::approx::forcing_residual;
use cnwave::evolve::{self, EvolveConfig};
use cnwave::linop::{assemble_second_variation, coercivity_constant, Norm};
use cnwave::modulation::{
    decay_report, lyapunov_time_derivative_check, perturbed_initial, DiagnosticsRecord, StabilityReport, Tracker,
};
use cnwave::profiles::build_profile;
use cnwave::Sector;

use crate::config::ExperimentConfig;
use crate::output::{records_csv, row};
use crate::CliError;

/// Largest allowed max/min ratio of a constant across the ε-sweep.
pub const VARIATION_LIMIT: f64 = 2.0;
/// Tolerance of the exact orthogonality identities.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Largest allowed constant in |(η, iQ_{m,ε})| ≤ Cε√m‖η‖.
pub const ALMOST_ORTHOGONALITY_MAX: f64 = 10.0;
/// Relative agreement of the two evaluations of each Lyapunov functional.
pub const LYAPUNOV_FORM_TOL: f64 = 1e-9;
pub const FORCING_SLOPE: (f64, f64) = (2.0, 0.2);

/// One trajectory with its diagnostics.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub m0: f64,
    pub eps: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub report: StabilityReport,
    /// max |Δℒ/Δt - dℒ/dt|.
    pub lyap_derivative_deviation: f64,
    /// max relative gap between the two forms of ℒ and of ℒ_{m,ε}.
    pub lyap_form_gap: f64,
    pub lyap_eps_form_gap: f64,
    /// max |γ(t_{i+1}) - γ(t_i)|.
    pub max_gamma_jump: f64,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

impl RunResult {
    pub fn from_records(m0: f64, eps: f64, records: Vec<DiagnosticsRecord>) -> cnwave::Result<Self> {
        let report = decay_report(&records, eps, m0)?;
        let lyap_derivative_deviation = lyapunov_time_derivative_check(&records)?;
        let fold = |f: &dyn Fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
        let lyap_form_gap = fold(&|r| rel_gap(r.lyap, r.lyap_expanded));
        let lyap_eps_form_gap = fold(&|r| rel_gap(r.lyap_eps, r.lyap_eps_expanded));
        let max_gamma_jump = records.windows(2).map(|w| (w[1].gamma - w[0].gamma).abs()).fold(0.0, f64::max);
        Ok(Self {
            m0,
            eps,
            records,
            report,
            lyap_derivative_deviation,
            lyap_form_gap,
            lyap_eps_form_gap,
            max_gamma_jump,
        })
    }

    /// Recovers (m₀, ε) from the sampled mass law m(t) = e^{-2εt} m₀.
    pub fn from_csv_records(records: Vec<DiagnosticsRecord>) -> Result<Self, CliError> {
        let (first, last) = match (records.first(), records.last()) {
            (Some(f), Some(l)) if records.len() >= 3 && l.t > f.t => (f, l),
            _ => return Err(CliError::Usage("diagnostics CSV needs at least 3 rows spanning positive time".into())),
        };
        let eps = (first.m / last.m).ln() / (2.0 * (last.t - first.t));
        let eps = if eps.abs() < 1e-14 { 0.0 } else { eps };
        let m0 = first.m * (2.0 * eps * first.t).exp();
        Ok(Self::from_records(m0, eps, records)?)
    }
}

/// Runs one perturbed trajectory Q_{m₀} + amp·v and tracks it.
pub fn run_single(
    m0: f64,
    eps: f64,
    amp: f64,
    t_end: f64,
    cfg: &ExperimentConfig,
) -> cnwave::Result<RunResult> {
    let p = build_profile(m0, cfg.n_grid)?;
    let psi0 = perturbed_initial(&p, amp, cfg.seed)?;
    let ecfg = EvolveConfig {
        eps,
        dt: cfg.dt,
        t_end,
        n_grid: cfg.n_grid,
        sample_every: cfg.sample_every,
        sector_projection: false,
    };
    let mut tracker = Tracker::new(m0, eps, cfg.n_grid);
    evolve::run(&psi0, &ecfg, |t, psi| tracker.observe(t, psi).map(|_| ()))?;
    RunResult::from_records(m0, eps, tracker.finish())
}

/// A named pass/fail check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Check {
    fn new(name: String, value: f64, limit: impl Into<String>, pass: bool) -> Self {
        Self { name, value, limit: limit.into(), pass: pass && value.is_finite() }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} {} = {:.6e} (limit {})", self.name, self.value, self.limit)
    }
}

/// max/min of positive values; infinite if any is non-positive.
pub fn variation(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn masses(runs: &[RunResult]) -> Vec<f64> {
    let mut m: Vec<f64> = Vec::new();
    for r in runs {
        if !m.contains(&r.m0) {
            m.push(r.m0);
        }
    }
    m
}

/// Per-sample and across-sweep checks on a set of trajectories.
pub fn trajectory_checks(runs: &[RunResult]) -> Vec<Check> {
    let mut checks = Vec::new();
    for r in runs {
        let tag = format!("m0={} eps={}", r.m0, r.eps);
        let rep = &r.report;
        checks.push(Check::new(
            format!("{tag} sup e^(eps t)|xi|_H1"),
            rep.sup_xi,
            "finite",
            rep.sup_xi.is_finite(),
        ));
        checks.push(Check::new(
            format!("{tag} max |(xi,iQ)|/(|xi||Q|)"),
            rep.max_xi_orthogonality,
            format!("<= {ORTHOGONALITY_TOL:e}"),
            rep.max_xi_orthogonality <= ORTHOGONALITY_TOL,
        ));
        checks.push(Check::new(
            format!("{tag} max |(xi,Q)+M[xi]|"),
            rep.max_xi_mass_defect,
            format!("<= {ORTHOGONALITY_TOL:e}"),
            rep.max_xi_mass_defect <= ORTHOGONALITY_TOL,
        ));
        checks.push(Check::new(
            format!("{tag} max |(eta,Qe)+M[eta]|"),
            rep.max_eta_mass_defect,
            format!("<= {ORTHOGONALITY_TOL:e}"),
            rep.max_eta_mass_defect <= ORTHOGONALITY_TOL,
        ));
        checks.push(Check::new(
            format!("{tag} max |(eta,iQe)|/(eps sqrt(m)|eta|)"),
            rep.max_eta_orthogonality_constant,
            format!("<= {ALMOST_ORTHOGONALITY_MAX}"),
            rep.max_eta_orthogonality_constant <= ALMOST_ORTHOGONALITY_MAX,
        ));
        checks.push(Check::new(
            format!("{tag} max |xi|_L2/|Q|_L2"),
            rep.max_l2_ratio,
            "<= 2",
            rep.max_l2_ratio <= 2.0,
        ));
        checks.push(Check::new(
            format!("{tag} Lyapunov forms relative gap"),
            r.lyap_form_gap.max(r.lyap_eps_form_gap),
            format!("<= {LYAPUNOV_FORM_TOL:e}"),
            r.lyap_form_gap.max(r.lyap_eps_form_gap) <= LYAPUNOV_FORM_TOL,
        ));
        checks.push(Check::new(format!("{tag} max |gamma jump|"), r.max_gamma_jump, "< pi", r.max_gamma_jump < std::f64::consts::PI));
    }
    for m0 in masses(runs) {
        let group: Vec<&RunResult> = runs.iter().filter(|r| r.m0 == m0 && r.eps > 0.0).collect();
        if group.len() < 2 {
            continue;
        }
        let pick = |f: &dyn Fn(&RunResult) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
        let limit = format!("< {VARIATION_LIMIT}");
        let v = variation(&pick(&|r| r.report.sup_xi_scaled));
        checks.push(Check::new(format!("m0={m0} variation of sup e^(eps t)|xi|_H1/sqrt(eps)"), v, &limit, v < VARIATION_LIMIT));
        let v = variation(&pick(&|r| r.report.envelope_k));
        checks.push(Check::new(
            format!("m0={m0} variation of envelope K"),
            v,
            format!("<= {VARIATION_LIMIT}"),
            v <= VARIATION_LIMIT,
        ));
        let v = variation(&pick(&|r| r.report.omega_rate));
        checks.push(Check::new(format!("m0={m0} variation of max|omega-gamma'|/(eps+|xi|)"), v, &limit, v < VARIATION_LIMIT));
        let v = variation(&pick(&|r| r.report.lambda_rate));
        checks.push(Check::new(format!("m0={m0} variation of max|lambda-gamma'|/(eps+|eta|)"), v, &limit, v < VARIATION_LIMIT));
    }
    checks
}

/// Result of [`run_stability_suite`].
#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub runs: Vec<RunResult>,
    /// (m₀, slope of the corrected forcing residual in ε).
    pub forcing_slopes: Vec<(f64, f64)>,
    /// (m₀, H¹ coercivity constant of S″ on 𝒳 ⊂ A⁺).
    pub coercivity: Vec<(f64, f64)>,
    pub checks: Vec<Check>,
    pub output_dir: PathBuf,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            s.push_str(&format!(
                "m0={} eps={} T={} samples={} sup_xi/sqrt(eps)={:.6e} K={:.6e} rates=({:.6e}, {:.6e})\n",
                r.m0,
                r.eps,
                r.report.t_end,
                r.report.samples,
                r.report.sup_xi_scaled,
                r.report.envelope_k,
                r.report.omega_rate,
                r.report.lambda_rate
            ));
        }
        for c in &self.checks {
            s.push_str(&c.line());
            s.push('\n');
        }
        s.push_str(if self.passed() { "suite: PASS\n" } else { "suite: FAIL\n" });
        s
    }
}

/// Per-run summary CSV header.
pub const SUMMARY_HEADER: &str = "m0,eps,t_end,samples,sup_xi,sup_xi_scaled,sup_eta,eta0_h1,envelope_n0,envelope_k,\
min_coercivity_ratio,out_of_window,max_xi_orthogonality,max_xi_mass_defect,max_eta_mass_defect,\
max_eta_orthogonality_constant,omega_rate,lambda_rate,lyap_derivative_deviation";

pub fn summary_csv(runs: &[RunResult]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in runs {
        let p = &r.report;
        s.push_str(&row(&[
            r.m0,
            r.eps,
            p.t_end,
            p.samples as f64,
            p.sup_xi,
            p.sup_xi_scaled,
            p.sup_eta,
            p.eta0_h1,
            p.envelope_n0,
            p.envelope_k,
            p.min_coercivity_ratio,
            p.out_of_window as f64,
            p.max_xi_orthogonality,
            p.max_xi_mass_defect,
            p.max_eta_mass_defect,
            p.max_eta_orthogonality_constant,
            p.omega_rate,
            p.lambda_rate,
            r.lyap_derivative_deviation,
        ]));
        s.push('\n');
    }
    s
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from("name,value,limit,pass\n");
    for c in checks {
        s.push_str(&format!("\"{}\",{},\"{}\",{}\n", c.name, crate::output::fmt_f64(c.value), c.limit, c.pass as u8));
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Worker count from CNWAVE_THREADS, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("CNWAVE_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

pub fn run_file_name(m0: f64, eps: f64) -> String {
    format!("run_m0-{m0}_eps-{eps}.csv")
}

/// Runs every (m₀, ε) pair, writes per-run CSVs, `summary.csv`,
/// `checks.csv` and `summary.txt` into the output directory, and
/// evaluates the acceptance checks.
pub fn run_stability_suite(cfg: &ExperimentConfig) -> Result<SuiteSummary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Io { path: cfg.output_dir.clone(), source })?;
    let pairs: Vec<(f64, f64)> =
        cfg.m0_list.iter().flat_map(|&m| cfg.eps_list.iter().map(move |&e| (m, e))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(m0, eps)| {
                run_single(m0, eps, cfg.perturb.amplitude(eps), cfg.t_end(eps), cfg)
                    .map_err(|source| CliError::Run { m0, eps, source })
            })
            .collect::<Result<_, _>>()
    })?;
    for r in &runs {
        write(&cfg.output_dir.join(run_file_name(r.m0, r.eps)), &records_csv(&r.records))?;
    }

    let mut checks = trajectory_checks(&runs);
    let mut forcing_slopes = Vec::new();
    let mut coercivity = Vec::new();
    for &m0 in &cfg.m0_list {
        if cfg.eps_list.len() >= 2 {
            let res: Vec<f64> = cfg
                .eps_list
                .iter()
                .map(|&e| forcing_residual(m0, e, cfg.n_grid))
                .collect::<cnwave::Result<_>>()
                .map_err(|source| CliError::Run { m0, eps: cfg.eps_list[0], source })?;
            let slope = loglog_slope(&cfg.eps_list, &res);
            forcing_slopes.push((m0, slope));
            let (target, tol) = FORCING_SLOPE;
            checks.push(Check::new(
                format!("m0={m0} forcing residual slope in eps"),
                slope,
                format!("{target} +- {tol}"),
                (slope - target).abs() <= tol,
            ));
        }
        let c = build_profile(m0, cfg.n_grid)
            .and_then(|p| {
                let op = assemble_second_variation(&p, Sector::Aplus)?;
                coercivity_constant(&op, &[p.field.clone(), p.field.times_i()], Norm::H1)
            })
            .map_err(|source| CliError::Run { m0, eps: 0.0, source })?;
        coercivity.push((m0, c));
        checks.push(Check::new(format!("m0={m0} H1 coercivity constant on X"), c, "> 0", c > 0.0));
    }

    let summary = SuiteSummary { runs, forcing_slopes, coercivity, checks, output_dir: cfg.output_dir.clone() };
    write(&cfg.output_dir.join("summary.csv"), &summary_csv(&summary.runs))?;
    write(&cfg.output_dir.join("checks.csv"), &checks_csv(&summary.checks))?;
    write(&cfg.output_dir.join("summary.txt"), &summary.text())?;
    Ok(summary)
}
