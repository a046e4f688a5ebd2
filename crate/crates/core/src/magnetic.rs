//! The azimuthal magnetic potential driven by a converged spinor.
//!
//! `lambda'' + (2/r) lambda' - (2/r^2) lambda = f(r)` with `f = 2 k k'` for
//! ansatz A and `f = -2 k (k' + 2k/r) = 2 k n` for ansatz B. The regular
//! homogeneous solution is `r`; far out the field is `H r + mu / r^2` and the
//! slope `gamma0` of the regular solution is fixed by cancelling `H`.

use crate::error::{Result, SolverError};
use crate::integrator::hermite_integral;
use crate::model::{hermite, RadialProfile, Variant};
use crate::record::SolutionRecord;

/// Largest tolerated amplification `|H_p| r0^3 / |mu|` of the growing mode.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct MagneticSolution {
    /// `lambda` with `lambda'` as Hermite slopes.
    pub lambda: RadialProfile,
    pub gamma0: f64,
    /// `r0^2 lambda(r0)`.
    pub mu: f64,
    /// `-(1/3) int s^3 f ds`.
    pub mu_identity: f64,
    pub condition: f64,
}

/// Source `f` and `f'` on the record grid.
fn source(record: &SolutionRecord) -> (Vec<f64>, Vec<f64>) {
    let variant = record.ansatz.variant;
    let p = &record.profiles;
    let dk = p.dk(variant);
    let dn = p.dn(variant);
    let mut f = Vec::with_capacity(p.len());
    let mut df = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let (k, n) = (p.k[i], p.n[i]);
        match variant {
            Variant::A => {
                // k' = n, k'' = n'
                f.push(2.0 * k * n);
                df.push(2.0 * (n * n + k * dn[i]));
            }
            Variant::B => {
                f.push(2.0 * k * n);
                df.push(2.0 * (dk[i] * n + k * dn[i]));
            }
        }
    }
    (f, df)
}

fn lambda_rhs(r: f64, y: [f64; 2], f: f64) -> [f64; 2] {
    [y[1], f - 2.0 * y[1] / r + 2.0 * y[0] / (r * r)]
}

/// Particular solution started from the series `f0 r^2 / 4 + f1 r^3 / 10`,
/// advanced by RK4 on the record grid with Hermite-interpolated source.
fn particular(r: &[f64], f: &[f64], df: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = r.len();
    let mut lam = vec![0.0; m];
    let mut dlam = vec![0.0; m];
    let rs = r[0];
    let f1 = df[0];
    let f0 = f[0] - f1 * rs;
    lam[0] = f0 * rs * rs / 4.0 + f1 * rs.powi(3) / 10.0;
    dlam[0] = f0 * rs / 2.0 + 3.0 * f1 * rs * rs / 10.0;
    for i in 0..m - 1 {
        let (a, b) = (r[i], r[i + 1]);
        let h = b - a;
        let fm = hermite(0.5, h, f[i], f[i + 1], df[i], df[i + 1]);
        let y = [lam[i], dlam[i]];
        let k1 = lambda_rhs(a, y, f[i]);
        let k2 = lambda_rhs(a + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], fm);
        let k3 = lambda_rhs(a + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], fm);
        let k4 = lambda_rhs(b, [y[0] + h * k3[0], y[1] + h * k3[1]], f[i + 1]);
        lam[i + 1] = y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        dlam[i + 1] = y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    (lam, dlam)
}

pub fn solve_lambda(record: &SolutionRecord) -> Result<MagneticSolution> {
    let p = &record.profiles;
    if p.len() < 2 {
        return Err(SolverError::Config("record has no radial profile".into()));
    }
    let r = &p.r;
    let (f, df) = source(record);
    let sign = record.ansatz.sign_factor();

    let mu_identity = {
        let g: Vec<f64> = r.iter().zip(&f).map(|(s, v)| s.powi(3) * v).collect();
        let dg: Vec<f64> = (0..r.len())
            .map(|i| 3.0 * r[i] * r[i] * f[i] + r[i].powi(3) * df[i])
            .collect();
        -hermite_integral(r, &g, &dg) / 3.0
    };

    if f.iter().all(|v| *v == 0.0) {
        return Ok(MagneticSolution {
            lambda: RadialProfile {
                radii: r.clone(),
                values: vec![0.0; r.len()],
                derivs: Some(vec![0.0; r.len()]),
            },
            gamma0: 0.0,
            mu: 0.0,
            mu_identity: 0.0,
            condition: 0.0,
        });
    }

    let (lp, dlp) = particular(r, &f, &df);
    let m = r.len();
    let r0 = r[m - 1];
    let h_p = (2.0 * lp[m - 1] + r0 * dlp[m - 1]) / (3.0 * r0);
    let gamma0 = -h_p;
    let lam: Vec<f64> = lp.iter().zip(r).map(|(l, x)| l + gamma0 * x).collect();
    let dlam: Vec<f64> = dlp.iter().map(|d| d + gamma0).collect();
    let mu = r0 * r0 * lam[m - 1];
    let condition = h_p.abs() * r0.powi(3) / mu.abs();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(SolverError::IllConditionedTail { r0, condition });
    }
    Ok(MagneticSolution {
        lambda: RadialProfile {
            radii: r.clone(),
            values: lam.iter().map(|v| sign * v).collect(),
            derivs: Some(dlam.iter().map(|v| sign * v).collect()),
        },
        gamma0: sign * gamma0,
        mu: sign * mu,
        mu_identity: sign * mu_identity,
        condition,
    })
}

/// `|3 mu - 3 w q|` with `q` integrated from the record's own `k` and `w`
/// the ansatz weight (1 for A, 1/3 for B).
pub fn moment_identity_check(record: &SolutionRecord, mu: f64) -> f64 {
    let q = crate::observables::energy_integrals(record).charge;
    let w = record.ansatz.moment_weight();
    (3.0 * record.ansatz.sign_factor() * mu - 3.0 * w * q).abs()
}

/// Solve for `lambda` and store it with `gamma0` and `mu` in the record.
pub fn attach(record: &mut SolutionRecord) -> Result<MagneticSolution> {
    let sol = solve_lambda(record)?;
    record.profiles.lambda = sol.lambda.values.clone();
    record.profiles.dlambda = sol.lambda.derivs.clone().unwrap_or_default();
    record.gamma0 = sol.gamma0;
    record.mu = sol.mu;
    record.mu_identity = sol.mu_identity;
    Ok(sol)
}
