//! CSV rows with fixed headers. Floats are written with 17 significant
//! digits.

use cnwave::modulation::DiagnosticsRecord;

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

pub const RECORD_HEADER: &str = "t,m,gamma,xi_l2,xi_h1,eta_h1,lyap,lyap_eps,eta_l2,lyap_expanded,lyap_rate,\
lyap_eps_expanded,gamma_dot,omega,lambda_eps,xi_iq,xi_q_defect,eta_iq,eta_q_defect,q_l2,qe_l2,in_window";

fn record_values(r: &DiagnosticsRecord) -> [f64; 22] {
    [
        r.t,
        r.m,
        r.gamma,
        r.xi_l2,
        r.xi_h1,
        r.eta_h1,
        r.lyap,
        r.lyap_eps,
        r.eta_l2,
        r.lyap_expanded,
        r.lyap_rate,
        r.lyap_eps_expanded,
        r.gamma_dot.unwrap_or(f64::NAN),
        r.omega,
        r.lambda_eps,
        r.xi_iq,
        r.xi_q_defect,
        r.eta_iq,
        r.eta_q_defect,
        r.q_l2,
        r.qe_l2,
        if r.in_window { 1.0 } else { 0.0 },
    ]
}

/// Diagnostics time series as CSV text, header included.
pub fn records_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 400);
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&row(&record_values(r)));
        out.push('\n');
    }
    out
}

/// Inverse of [`records_csv`].
pub fn parse_records_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == RECORD_HEADER => {}
        _ => return Err(CliError::Usage("not a diagnostics CSV: header mismatch".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("row {}: unparsable number", i + 2)))?;
        if v.len() != 22 {
            return Err(CliError::Usage(format!("row {}: expected 22 columns, got {}", i + 2, v.len())));
        }
        out.push(DiagnosticsRecord {
            t: v[0],
            m: v[1],
            gamma: v[2],
            xi_l2: v[3],
            xi_h1: v[4],
            eta_h1: v[5],
            lyap: v[6],
            lyap_eps: v[7],
            eta_l2: v[8],
            lyap_expanded: v[9],
            lyap_rate: v[10],
            lyap_eps_expanded: v[11],
            gamma_dot: if v[12].is_nan() { None } else { Some(v[12]) },
            omega: v[13],
            lambda_eps: v[14],
            xi_iq: v[15],
            xi_q_defect: v[16],
            eta_iq: v[17],
            eta_q_defect: v[18],
            q_l2: v[19],
            qe_l2: v[20],
            in_window: v[21] != 0.0,
        });
    }
    Ok(out)
}
