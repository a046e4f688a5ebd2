//! Energies, identities, angular momentum and dimensional restoration.

use serde::{Deserialize, Serialize};

use crate::integrator::hermite_integral;
use crate::model::DimensionalConstants;
use crate::record::SolutionRecord;

/// Records whose two binding forms disagree by more than this are unconverged.
pub const IDENTITY_FLAG: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub epsilon: f64,
    pub self_energy: f64,
    /// `epsilon + self_energy`.
    pub w_binding: f64,
    /// `int n^2 r^2 dr`.
    pub w_binding_alt: f64,
    /// `|w_binding - w_binding_alt| / w_binding`.
    pub identity_residual: f64,
    pub converged: bool,
}

/// Raw quadratures over a record, tails included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIntegrals {
    /// `int k^2 r^2 dr`
    pub charge: f64,
    /// `int n^2 r^2 dr`
    pub kinetic: f64,
    /// `int k^2 r dr`
    pub coulomb: f64,
    /// `1/2 int U'^2 r^2 dr`, zero without self-field.
    pub self_energy: f64,
}

/// `int_{r0}^inf k^2 r^p dr` for `k = k0 exp(-sqrt(eps) (r - r0))`.
pub fn exp_tail_moment(k0: f64, r0: f64, eps: f64, p: u32) -> f64 {
    if !(eps > 0.0) || k0 == 0.0 {
        return 0.0;
    }
    let b = 2.0 * eps.sqrt();
    // sum_j p!/(p-j)! r0^(p-j) / b^(j+1)
    let mut sum = 0.0;
    let mut coeff = 1.0;
    for j in 0..=p {
        sum += coeff * r0.powi((p - j) as i32) / b.powi(j as i32 + 1);
        coeff *= (p - j) as f64;
    }
    k0 * k0 * sum
}

/// `int_0^{r_s} g` for `g ~ c r^p` near the origin, with `p = r g' / g`.
fn below_first_sample(rs: f64, g: f64, dg: f64) -> f64 {
    if rs <= 0.0 || g == 0.0 {
        return 0.0;
    }
    let p = (rs * dg / g).max(0.0);
    g * rs / (p + 1.0)
}

pub fn energy_integrals(record: &SolutionRecord) -> EnergyIntegrals {
    let variant = record.ansatz.variant;
    let p = &record.profiles;
    if p.is_empty() {
        return EnergyIntegrals {
            charge: 0.0,
            kinetic: 0.0,
            coulomb: 0.0,
            self_energy: 0.0,
        };
    }
    let dk = p.dk(variant);
    let dn = p.dn(variant);
    let r = &p.r;
    let m = r.len();
    let r0 = r[m - 1];
    let k0 = p.k[m - 1];
    let eps = record.epsilon.max(0.0);

    let mut f = vec![0.0; m];
    let mut df = vec![0.0; m];
    let mut quad = |g: &dyn Fn(usize) -> (f64, f64)| {
        for i in 0..m {
            let (a, b) = g(i);
            f[i] = a;
            df[i] = b;
        }
        hermite_integral(r, &f, &df) + below_first_sample(r[0], f[0], df[0])
    };

    let charge = quad(&|i| {
        let (ri, k) = (r[i], p.k[i]);
        (k * k * ri * ri, 2.0 * k * dk[i] * ri * ri + 2.0 * k * k * ri)
    }) + exp_tail_moment(k0, r0, eps, 2);
    let coulomb = quad(&|i| {
        let (ri, k) = (r[i], p.k[i]);
        (k * k * ri, 2.0 * k * dk[i] * ri + k * k)
    }) + exp_tail_moment(k0, r0, eps, 1);
    // n ~ -+ sqrt(eps) k far out
    let kinetic = quad(&|i| {
        let (ri, n) = (r[i], p.n[i]);
        (n * n * ri * ri, 2.0 * n * dn[i] * ri * ri + 2.0 * n * n * ri)
    }) + eps * exp_tail_moment(k0, r0, eps, 2);
    let self_energy = if record.self_field {
        let inner = quad(&|i| {
            let (ri, du, k) = (r[i], p.du[i], p.k[i]);
            let d2u = -k * k - 2.0 * du / ri;
            (0.5 * du * du * ri * ri, du * d2u * ri * ri + du * du * ri)
        });
        // outside r0 the potential is Coulombic: Q = -r0^2 U'(r0)
        inner + 0.5 * r0.powi(3) * p.du[m - 1].powi(2)
    } else {
        0.0
    };
    EnergyIntegrals {
        charge,
        kinetic,
        coulomb,
        self_energy,
    }
}

pub fn binding_energy(record: &SolutionRecord) -> EnergyBreakdown {
    let ints = energy_integrals(record);
    let w_binding = record.epsilon + ints.self_energy;
    let w_binding_alt = ints.kinetic;
    let identity_residual = (w_binding - w_binding_alt).abs() / w_binding.abs();
    EnergyBreakdown {
        epsilon: record.epsilon,
        self_energy: ints.self_energy,
        w_binding,
        w_binding_alt,
        identity_residual,
        converged: identity_residual <= IDENTITY_FLAG && w_binding > 0.0,
    }
}

/// `|int k^2 r dr - 2 int n^2 r^2 dr - S|`, which vanishes for exact solutions.
pub fn virial_residual(record: &SolutionRecord) -> f64 {
    let e = energy_integrals(record);
    (e.coulomb - 2.0 * e.kinetic - e.self_energy).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohrEntry {
    pub n: u32,
    pub w_n: f64,
    pub scaled: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrFit {
    /// Mean of `W_n n^2`.
    pub w: f64,
    pub entries: Vec<BohrEntry>,
}

pub fn bohr_law_fit_values(values: &[(u32, f64)]) -> BohrFit {
    if values.is_empty() {
        return BohrFit {
            w: f64::NAN,
            entries: Vec::new(),
        };
    }
    let scaled: Vec<f64> = values.iter().map(|&(n, w)| w * (n as f64).powi(2)).collect();
    let w = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let entries = values
        .iter()
        .zip(&scaled)
        .map(|(&(n, w_n), &s)| BohrEntry {
            n,
            w_n,
            scaled: s,
            deviation: s - w,
        })
        .collect();
    BohrFit { w, entries }
}

pub fn bohr_law_fit(records: &[SolutionRecord]) -> BohrFit {
    let values: Vec<(u32, f64)> = records.iter().map(|r| (r.n, r.w_binding)).collect();
    bohr_law_fit_values(&values)
}

/// Projection of the angular momentum in units of hbar.
pub fn angular_momentum(record: &SolutionRecord) -> f64 {
    record.ansatz.sign_factor() * 0.5 * record.q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalReport {
    /// `4 W` in Rydbergs.
    pub binding_rydberg: f64,
    pub binding_ev: f64,
    /// `4 W n^2`, the effective Rydberg relative to the observed one.
    pub effective_rydberg_ratio: f64,
    /// Binding from the untruncated prefactors `(1 - eps a^2) / (1 + eps a^2)`.
    pub binding_exact_rydberg: f64,
    pub omega: f64,
    /// Moment in units of `e hbar / 2 m c`.
    pub mu_phys: f64,
    pub j_hbar: f64,
}

pub fn dimensional_report(record: &SolutionRecord, consts: &DimensionalConstants) -> DimensionalReport {
    let a2 = consts.alpha * consts.alpha;
    let ea = record.epsilon * a2;
    let binding_rydberg = 4.0 * record.w_binding;
    let n2 = (record.n as f64).powi(2);
    let rest = (1.0 - ea) / (1.0 + ea) - a2 / (1.0 + ea) * 2.0 * record.self_energy;
    DimensionalReport {
        binding_rydberg,
        binding_ev: binding_rydberg * consts.rydberg_ev,
        effective_rydberg_ratio: binding_rydberg * n2,
        binding_exact_rydberg: 2.0 * (1.0 - rest) / a2,
        omega: 2.0 / (1.0 + ea) - 1.0,
        mu_phys: record.mu * (1.0 + ea),
        j_hbar: record.j,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Renormalization {
    pub w: f64,
    /// `1 / (4 W)`.
    pub x2: f64,
    pub x: f64,
    /// Rescaled angular momentum `X / 2` in hbar.
    pub j_scaled: f64,
    /// Rescaled moment `X` in units of the unscaled moment.
    pub m_scaled: f64,
}

pub fn renormalization_from_w(w: f64) -> Renormalization {
    let x2 = 1.0 / (4.0 * w);
    let x = x2.sqrt();
    Renormalization {
        w,
        x2,
        x,
        j_scaled: 0.5 * x,
        m_scaled: x,
    }
}

pub fn renormalization_factor(records: &[SolutionRecord]) -> Renormalization {
    renormalization_from_w(bohr_law_fit(records).w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AnsatzKind;
    use crate::record::{Profiles, Provenance};

    /// Exact linear ground state k = e^{-r/2} / sqrt(2), eps = 1/4.
    fn hydrogen_record() -> SolutionRecord {
        let r: Vec<f64> = (1..=6000).map(|i| i as f64 * 0.01).collect();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let k: Vec<f64> = r.iter().map(|x| c * (-x / 2.0).exp()).collect();
        let n: Vec<f64> = k.iter().map(|v| -0.5 * v).collect();
        let m = r.len();
        SolutionRecord {
            ansatz: AnsatzKind::A,
            nodes: 0,
            n: 1,
            self_field: false,
            beta0: c,
            delta0: 0.25,
            gamma0: 0.0,
            epsilon: 0.25,
            q: 1.0,
            q_flux: 1.0,
            r0: 60.0,
            self_energy: 0.0,
            w_binding: 0.25,
            w_binding_alt: 0.25,
            identity_residual: 0.0,
            mu: 1.0,
            mu_identity: 1.0,
            j: 0.5,
            profiles: Profiles {
                r,
                k,
                n,
                u: vec![0.25; m],
                du: vec![0.0; m],
                ..Default::default()
            },
            config: None,
            provenance: Provenance::current(),
        }
    }

    #[test]
    fn linear_hydrogen_energies() {
        let rec = hydrogen_record();
        let e = energy_integrals(&rec);
        assert!((e.charge - 1.0).abs() < 1e-6, "{}", e.charge);
        assert!((e.coulomb - 0.5).abs() < 1e-6);
        assert!((e.kinetic - 0.25).abs() < 1e-6);
        let b = binding_energy(&rec);
        assert_eq!(b.self_energy, 0.0);
        assert_eq!(b.w_binding, 0.25);
        assert!(b.identity_residual < 1e-5 && b.converged);
        assert!(virial_residual(&rec) < 1e-5);
    }

    #[test]
    fn tail_moments_match_closed_forms() {
        // int_1^inf e^{-2(r-1)} r dr = 1/2 + 1/4
        assert!((exp_tail_moment(1.0, 1.0, 1.0, 1) - 0.75).abs() < 1e-15);
        // p = 2: 1/2 + 2/4 + 2/8
        assert!((exp_tail_moment(1.0, 1.0, 1.0, 2) - 1.25).abs() < 1e-15);
        assert_eq!(exp_tail_moment(1.0, 1.0, 0.0, 2), 0.0);
    }

    #[test]
    fn angular_momentum_sign_and_scale() {
        let mut rec = hydrogen_record();
        assert_eq!(angular_momentum(&rec), 0.5);
        rec.q = 0.98;
        assert!((angular_momentum(&rec) - 0.49).abs() < 1e-15);
        rec.ansatz = rec.ansatz.conjugate();
        rec.q = 1.0;
        assert_eq!(angular_momentum(&rec), -0.5);
    }

    #[test]
    fn bohr_fit_single_and_many() {
        let one = bohr_law_fit_values(&[(1, 0.1218)]);
        assert_eq!(one.w, 0.1218);
        assert_eq!(one.entries[0].deviation, 0.0);
        let two = bohr_law_fit_values(&[(1, 0.12), (2, 0.03)]);
        assert!((two.w - 0.12).abs() < 1e-15);
    }

    #[test]
    fn renormalization_examples() {
        assert!((renormalization_from_w(0.120).x2 - 2.083).abs() < 1e-3);
        assert!((renormalization_from_w(0.1218).x2 - 2.053).abs() < 1e-3);
        let r = renormalization_from_w(0.120);
        assert!((r.j_scaled - 0.5 * r.x).abs() < 1e-15);
    }

    #[test]
    fn dimensional_examples() {
        let consts = DimensionalConstants {
            alpha: 1.0 / 137.036,
            ..Default::default()
        };
        let mut rec = hydrogen_record();
        rec.epsilon = 0.02311;
        rec.w_binding = 0.1218;
        rec.self_energy = 0.1218 - 0.02311;
        let d = dimensional_report(&rec, &consts);
        assert!((d.binding_rydberg - 0.4872).abs() < 1e-12);
        assert!((d.mu_phys - (1.0 + 1.23e-6)).abs() < 1e-8);
        // truncated and exact forms agree to O(alpha^2)
        assert!((d.binding_exact_rydberg - d.binding_rydberg).abs() < 1e-4);

        rec.epsilon = 0.0;
        rec.w_binding = rec.self_energy;
        let d0 = dimensional_report(&rec, &consts);
        assert_eq!(d0.omega, 1.0);
        assert_eq!(d0.binding_rydberg, 4.0 * rec.self_energy);
    }
}
