//! Spectrum tables, profile resampling, record checks and configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::magnetic;
use crate::model::{hermite, AnsatzKind, StepControl};
use crate::observables;
use crate::record::SolutionRecord;
use crate::shooting::ShootingProblem;
use crate::variational;

pub const SPECTRUM_HEADER: &str = "n,beta,delta,epsilon,W_n,W_var,Wn_n2,Wvar_n2,errors";
pub const PROFILE_HEADER: &str = "r,k,n,U,lambda";

/// Largest principal number attempted by shooting in `both` mode.
pub const SHOOTING_MAX_N: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Shooting,
    Variational,
    Both,
}

impl std::str::FromStr for SpectrumMethod {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shooting" => Ok(SpectrumMethod::Shooting),
            "variational" => Ok(SpectrumMethod::Variational),
            "both" => Ok(SpectrumMethod::Both),
            other => Err(SolverError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Knobs shared by every solve of a spectrum sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOverrides {
    pub self_field: bool,
    pub r_max: Option<f64>,
    pub tol_charge: Option<f64>,
    pub delta_guess: Option<f64>,
    pub beta_bracket: Option<(f64, f64)>,
    pub step: Option<StepControl>,
}

impl Default for SolveOverrides {
    fn default() -> Self {
        SolveOverrides {
            self_field: true,
            r_max: None,
            tol_charge: None,
            delta_guess: None,
            beta_bracket: None,
            step: None,
        }
    }
}

impl SolveOverrides {
    pub fn problem(&self, ansatz: AnsatzKind, nodes: u32) -> ShootingProblem {
        let mut p = if self.self_field {
            ShootingProblem::new(ansatz, nodes)
        } else {
            ShootingProblem::linear(ansatz, nodes)
        };
        if let Some(r) = self.r_max {
            p.grid.r_max = r;
        }
        if let Some(t) = self.tol_charge {
            p.tol_charge = t;
        }
        if let Some(s) = self.step {
            p.grid.step = s;
        }
        p.delta_guess = self.delta_guess;
        p.beta_bracket = self.beta_bracket;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub nodes: u32,
    pub n: u32,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub w_n: Option<f64>,
    pub w_var: Option<f64>,
    pub errors: Vec<String>,
    /// Full shooting record when available.
    pub record: Option<SolutionRecord>,
}

impl SpectrumRow {
    fn csv_line(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let n2 = (self.n as f64).powi(2);
        let errors = self.errors.join("; ").replace(['"', '\n'], "'");
        let errors = if errors.contains(',') {
            format!("\"{errors}\"")
        } else {
            errors
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            cell(self.beta),
            cell(self.delta),
            cell(self.epsilon),
            cell(self.w_n),
            cell(self.w_var),
            cell(self.w_n.map(|w| w * n2)),
            cell(self.w_var.map(|w| w * n2)),
            errors
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub ansatz: AnsatzKind,
    pub nodes_from: u32,
    pub nodes_to: u32,
    pub method: SpectrumMethod,
    pub overrides: SolveOverrides,
    /// Worker cap; `SELFIELD_THREADS` is consulted when unset.
    pub threads: Option<usize>,
}

pub fn solve_row(opts: &SpectrumOptions, nodes: u32) -> SpectrumRow {
    let ansatz = opts.ansatz;
    let n = ansatz.principal(nodes);
    let mut row = SpectrumRow {
        nodes,
        n,
        beta: None,
        delta: None,
        epsilon: None,
        w_n: None,
        w_var: None,
        errors: Vec::new(),
        record: None,
    };
    let shoot = match opts.method {
        SpectrumMethod::Shooting => true,
        SpectrumMethod::Variational => false,
        SpectrumMethod::Both => n <= SHOOTING_MAX_N,
    };
    if shoot {
        match crate::solve(&opts.overrides.problem(ansatz, nodes)) {
            Ok(rec) => {
                row.beta = Some(rec.beta0);
                row.delta = Some(rec.delta0);
                row.epsilon = Some(rec.epsilon);
                row.w_n = Some(rec.w_binding);
                row.record = Some(rec);
            }
            Err(e) => row.errors.push(format!("shooting: {e}")),
        }
    }
    if opts.method != SpectrumMethod::Shooting {
        match variational::optimize(ansatz, nodes, opts.overrides.self_field) {
            Ok(v) => row.w_var = Some(v.w_var),
            Err(e) => row.errors.push(format!("variational: {e}")),
        }
    }
    row
}

pub fn thread_cap(explicit: Option<usize>) -> Option<usize> {
    explicit
        .or_else(|| std::env::var("SELFIELD_THREADS").ok()?.trim().parse().ok())
        .filter(|&t| t > 0)
}

/// Solve every node count in the range; rows come back in node order.
pub fn spectrum(opts: &SpectrumOptions) -> Result<Vec<SpectrumRow>> {
    if opts.nodes_from > opts.nodes_to {
        return Err(SolverError::Config(format!(
            "empty node range {}..{}",
            opts.nodes_from, opts.nodes_to
        )));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_cap(opts.threads) {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| SolverError::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        (opts.nodes_from..=opts.nodes_to)
            .into_par_iter()
            .map(|nodes| solve_row(opts, nodes))
            .collect()
    });
    Ok(rows)
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

fn hermite_resample(r: &[f64], v: &[f64], d: Option<&[f64]>, x: f64, j: usize) -> f64 {
    let h = r[j + 1] - r[j];
    let t = (x - r[j]) / h;
    match d {
        Some(d) => hermite(t, h, v[j], v[j + 1], d[j], d[j + 1]),
        None => v[j] + t * (v[j + 1] - v[j]),
    }
}

/// Profiles on `points` uniformly spaced radii from the first sample to `r0`.
pub fn profiles_csv(record: &SolutionRecord, points: usize) -> Result<String> {
    let p = &record.profiles;
    if p.len() < 2 || points < 2 {
        return Err(SolverError::Config("record has no profile to resample".into()));
    }
    let variant = record.ansatz.variant;
    let dk = p.dk(variant);
    let dn = p.dn(variant);
    let has_lambda = p.lambda.len() == p.len();
    let dlambda = (p.dlambda.len() == p.len()).then_some(p.dlambda.as_slice());
    let r = &p.r;
    let (lo, hi) = (r[0], r[r.len() - 1]);
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    let mut j = 0;
    for i in 0..points {
        let x = if i + 1 == points {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (points - 1) as f64
        };
        while j + 2 < r.len() && r[j + 1] < x {
            j += 1;
        }
        let k = hermite_resample(r, &p.k, Some(&dk), x, j);
        let n = hermite_resample(r, &p.n, Some(&dn), x, j);
        let u = hermite_resample(r, &p.u, Some(&p.du), x, j);
        let lam = if has_lambda {
            format!("{}", hermite_resample(r, &p.lambda, dlambda, x, j))
        } else {
            String::new()
        };
        let _ = writeln!(out, "{x},{k},{n},{u},{lam}");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerances {
    pub identity: f64,
    pub charge: f64,
    pub moment: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            identity: 1e-3,
            charge: 1e-3,
            moment: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub label: String,
    pub value: f64,
    /// `None` for informational lines.
    pub limit: Option<f64>,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.limit.is_none_or(|l| self.value.abs() <= l)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let status = match l.limit {
                None => "info".to_string(),
                Some(lim) if l.passed() => format!("ok   (<= {lim:e})"),
                Some(lim) => format!("FAIL (> {lim:e})"),
            };
            let _ = writeln!(out, "{:<44} {:>14.6e}  {status}", l.label, l.value);
        }
        out
    }
}

/// Identity, charge and moment residuals per record, then the Bohr fit.
pub fn check_records(records: &[SolutionRecord], tol: &CheckTolerances) -> CheckReport {
    let mut lines = Vec::new();
    for rec in records {
        let tag = format!("{}{} N={}", rec.ansatz.label(), sign_tag(rec.ansatz), rec.nodes);
        let energy = observables::binding_energy(rec);
        lines.push(CheckLine {
            label: format!("{tag} identity residual"),
            value: energy.identity_residual,
            limit: Some(tol.identity),
        });
        if rec.self_field {
            lines.push(CheckLine {
                label: format!("{tag} charge |q_int - q_flux|"),
                value: (rec.q - rec.q_flux).abs(),
                limit: Some(tol.charge),
            });
        }
        if rec.has_magnetic() {
            lines.push(CheckLine {
                label: format!("{tag} moment identity |3mu - 3wq|"),
                value: magnetic::moment_identity_check(rec, rec.mu),
                limit: Some(tol.moment),
            });
        }
    }
    let groups: BTreeMap<String, Vec<SolutionRecord>> =
        records.iter().fold(BTreeMap::new(), |mut m, r| {
            m.entry(r.ansatz.label().to_string()).or_default().push(r.clone());
            m
        });
    for (label, recs) in groups {
        if recs.iter().any(|r| !r.self_field) {
            continue;
        }
        let fit = observables::bohr_law_fit(&recs);
        lines.push(CheckLine {
            label: format!("{label} Bohr fit W (mean W_n n^2)"),
            value: fit.w,
            limit: None,
        });
        lines.push(CheckLine {
            label: format!("{label} renormalization X^2"),
            value: observables::renormalization_from_w(fit.w).x2,
            limit: None,
        });
    }
    CheckReport { lines }
}

fn sign_tag(a: AnsatzKind) -> &'static str {
    if a.sign_factor() < 0.0 {
        "-"
    } else {
        ""
    }
}

/// Flat `key = value` configuration; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            SolverError::Config(format!("config line {}: expected key=value", i + 1))
        })?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| SolverError::Config(format!("expected lo,hi but got '{s}'")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| SolverError::Config(format!("not a number: '{t}'")))
    };
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = parse_config("# comment\nansatz = B\n tol_charge=1e-5 # trailing\n\n").unwrap();
        assert_eq!(cfg["ansatz"], "B");
        assert_eq!(cfg["tol-charge"], "1e-5");
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("0.4, 0.6").unwrap(), (0.4, 0.6));
        assert!(parse_pair("0.4").is_err());
    }

    #[test]
    fn csv_cells_and_header() {
        let row = SpectrumRow {
            nodes: 1,
            n: 2,
            beta: None,
            delta: None,
            epsilon: None,
            w_n: None,
            w_var: Some(0.03),
            errors: vec!["shooting: a, b".into()],
            record: None,
        };
        let csv = spectrum_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SPECTRUM_HEADER);
        assert_eq!(lines.next().unwrap(), "2,,,,,0.03,,0.12,\"shooting: a, b\"");
    }

    #[test]
    fn method_names() {
        assert_eq!("both".parse::<SpectrumMethod>().unwrap(), SpectrumMethod::Both);
        assert!("all".parse::<SpectrumMethod>().is_err());
    }
}
