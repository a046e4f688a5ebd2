//! Domain types and the dimensionless radial equations.
//!
//! Lengths are measured on the reduced Bohr scale in which the linear
//! (self-field free) problem has eigenvalues `1 / (4 n^2)`. The state vector
//! carried by every propagation is `[k, n, U, U']`: the principal radial
//! function, its companion, the reduced potential `U = eps - phi`, and the
//! potential slope.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// Which closed angular substitution is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// s-like, orbital label l = 0.
    A,
    /// p-like, orbital label l = 1.
    B,
}

/// Conjugate ansatz selector. Only flips the reported signs of `j` and `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzKind {
    #[serde(rename = "ansatz")]
    pub variant: Variant,
    #[serde(default)]
    pub sign: Sign,
}

impl AnsatzKind {
    pub const A: AnsatzKind = AnsatzKind {
        variant: Variant::A,
        sign: Sign::Plus,
    };
    pub const B: AnsatzKind = AnsatzKind {
        variant: Variant::B,
        sign: Sign::Plus,
    };

    pub fn conjugate(self) -> Self {
        let sign = match self.sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        AnsatzKind { sign, ..self }
    }

    pub fn orbital(self) -> u32 {
        match self.variant {
            Variant::A => 0,
            Variant::B => 1,
        }
    }

    /// Principal number `n = N + l + 1`.
    pub fn principal(self, nodes: u32) -> u32 {
        nodes + self.orbital() + 1
    }

    pub fn sign_factor(self) -> f64 {
        match self.sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Eigenvalue of the linear problem (self-field switched off).
    pub fn linear_epsilon(self, nodes: u32) -> f64 {
        let n = self.principal(nodes) as f64;
        1.0 / (4.0 * n * n)
    }

    /// Ratio `mu / q` fixed by the moment identity.
    pub fn moment_weight(self) -> f64 {
        match self.variant {
            Variant::A => 1.0,
            Variant::B => 1.0 / 3.0,
        }
    }

    /// Slope `k'` recovered from the `(k, n)` pair.
    #[inline]
    pub fn k_slope(self, r: f64, k: f64, n: f64) -> f64 {
        match self.variant {
            Variant::A => n,
            Variant::B => -n - 2.0 * k / r,
        }
    }

    pub fn label(self) -> &'static str {
        match self.variant {
            Variant::A => "A",
            Variant::B => "B",
        }
    }
}

impl std::str::FromStr for AnsatzKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(AnsatzKind::A),
            "B" | "b" => Ok(AnsatzKind::B),
            "A-" | "a-" => Ok(AnsatzKind::A.conjugate()),
            "B-" | "b-" => Ok(AnsatzKind::B.conjugate()),
            other => Err(SolverError::Config(format!("unknown ansatz '{other}'"))),
        }
    }
}

/// Step control shared by the radial grid and the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum StepControl {
    Rk4Fixed { h: f64 },
    Rk45Adaptive { abs_tol: f64, rel_tol: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Rk45Adaptive {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_start: f64,
    pub r_max: f64,
    pub step: StepControl,
}

impl RadialGrid {
    pub fn new(r_start: f64, r_max: f64, step: StepControl) -> Result<Self> {
        let grid = RadialGrid {
            r_start,
            r_max,
            step,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_start > 0.0 && self.r_start < self.r_max && self.r_max.is_finite()) {
            return Err(SolverError::Config(format!(
                "grid needs 0 < r_start < r_max, got [{}, {}]",
                self.r_start, self.r_max
            )));
        }
        match self.step {
            StepControl::Rk4Fixed { h } if !(h > 0.0) => {
                Err(SolverError::Config(format!("fixed step must be positive, got {h}")))
            }
            StepControl::Rk45Adaptive { abs_tol, rel_tol } if !(abs_tol > 0.0 && rel_tol > 0.0) => {
                Err(SolverError::Config("tolerances must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A sampled radial function with optional first derivative.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivs: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, derivs: Option<Vec<f64>>) -> Result<Self> {
        let p = RadialProfile {
            radii,
            values,
            derivs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.len() != self.values.len() {
            return Err(SolverError::Config("profile radii/values length mismatch".into()));
        }
        if let Some(d) = &self.derivs {
            if d.len() != self.radii.len() {
                return Err(SolverError::Config("profile derivative length mismatch".into()));
            }
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::Config("profile radii must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Config("profile contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Cubic Hermite interpolation when derivatives are present, linear otherwise.
    /// Outside the sampled range the end value is returned.
    pub fn eval(&self, r: f64) -> f64 {
        let xs = &self.radii;
        if xs.is_empty() {
            return 0.0;
        }
        if r <= xs[0] {
            return self.values[0];
        }
        if r >= xs[xs.len() - 1] {
            return self.values[xs.len() - 1];
        }
        let i = xs.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        match &self.derivs {
            Some(d) => hermite(t, h, y0, y1, d[i], d[i + 1]),
            None => y0 + t * (y1 - y0),
        }
    }

    /// Number of sign changes of the values for samples with `lo < r <= hi`.
    pub fn sign_changes(&self, lo: f64, hi: f64) -> usize {
        count_sign_changes(
            self.radii
                .iter()
                .zip(&self.values)
                .filter(|(r, _)| **r > lo && **r <= hi)
                .map(|(_, v)| *v),
        )
    }
}

#[inline]
pub(crate) fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Sign changes in a sequence, skipping exact zeros.
pub fn count_sign_changes<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Derivatives of the radial state: `(k', n', U'')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDerivs {
    pub dk: f64,
    pub dn: f64,
    pub d2u: f64,
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(SolverError::Domain { r })
    }
}

/// Ansatz A: `k' = n`, `n' = (U - 1/r) k - (2/r) n`, `U'' = -k^2 - (2/r) U'`.
pub fn rhs_ansatz_a(r: f64, k: f64, n: f64, u: f64, du: f64) -> Result<RadialDerivs> {
    check_radius(r)?;
    Ok(RadialDerivs {
        dk: n,
        dn: (u - 1.0 / r) * k - 2.0 * n / r,
        d2u: -k * k - 2.0 * du / r,
    })
}

/// Ansatz B: `k' = -n - (2/r) k`, `n' = -(U - 1/r) k`, `U'' = -k^2 - (2/r) U'`.
pub fn rhs_ansatz_b(r: f64, k: f64, n: f64, u: f64, du: f64) -> Result<RadialDerivs> {
    check_radius(r)?;
    Ok(RadialDerivs {
        dk: -n - 2.0 * k / r,
        dn: -(u - 1.0 / r) * k,
        d2u: -k * k - 2.0 * du / r,
    })
}

/// State-vector form used by the propagator. With `self_field` off the
/// potential is frozen (`U' = 0`, no source).
#[inline]
pub fn radial_rhs(variant: Variant, self_field: bool, r: f64, y: &[f64; 4]) -> [f64; 4] {
    let [k, n, u, du] = *y;
    let inv = 1.0 / r;
    let (dk, dn) = match variant {
        Variant::A => (n, (u - inv) * k - 2.0 * n * inv),
        Variant::B => (-n - 2.0 * k * inv, -(u - inv) * k),
    };
    if self_field {
        [dk, dn, du, -k * k - 2.0 * du * inv]
    } else {
        [dk, dn, 0.0, 0.0]
    }
}

/// Default truncation order of the origin power series.
pub const SERIES_ORDER: usize = 8;

/// Power-series coefficients of `k` and `U` about the origin, up to `r^order`.
///
/// Both equations reduce to two-term recurrences: for ansatz A
/// `a[m+2] (m+2)(m+3) = (U k)[m] - a[m+1]`, for ansatz B
/// `a[m+2] (m+1)(m+4) = (U k)[m] - a[m+1]`, and in both cases
/// `u[m+2] (m+2)(m+3) = -(k^2)[m]`.
pub fn series_coefficients(
    variant: Variant,
    self_field: bool,
    beta: f64,
    delta: f64,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let len = order.max(2) + 1;
    let mut a = vec![0.0; len];
    let mut u = vec![0.0; len];
    u[0] = delta;
    match variant {
        Variant::A => a[0] = beta,
        Variant::B => a[1] = beta,
    }
    if let Variant::A = variant {
        // r^-1 row: 2 a1 = -a0
        a[1] = -a[0] / 2.0;
    }
    for j in 2..len {
        let m = j - 2;
        let mf = m as f64;
        let uk: f64 = (0..=m).map(|i| u[i] * a[m - i]).sum();
        let denom = match variant {
            Variant::A => (mf + 2.0) * (mf + 3.0),
            Variant::B => (mf + 1.0) * (mf + 4.0),
        };
        a[j] = (uk - a[m + 1]) / denom;
        if self_field {
            let kk: f64 = (0..=m).map(|i| a[i] * a[m - i]).sum();
            u[j] = -kk / ((mf + 2.0) * (mf + 3.0));
        }
    }
    (a, u)
}

fn poly_eval(c: &[f64], r: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &cj in c.iter().rev() {
        d = d * r + v;
        v = v * r + cj;
    }
    (v, d)
}

/// State `[k, n, U, U']` at `r_start` from the origin series.
pub fn series_start(
    ansatz: AnsatzKind,
    beta: f64,
    delta: f64,
    r_start: f64,
) -> [f64; 4] {
    series_start_with(ansatz.variant, true, beta, delta, r_start, SERIES_ORDER)
}

pub fn series_start_with(
    variant: Variant,
    self_field: bool,
    beta: f64,
    delta: f64,
    r_start: f64,
    order: usize,
) -> [f64; 4] {
    let (a, u) = series_coefficients(variant, self_field, beta, delta, order);
    let (k, dk) = poly_eval(&a, r_start);
    let (uu, du) = poly_eval(&u, r_start);
    let n = match variant {
        Variant::A => dk,
        Variant::B => -dk - 2.0 * k / r_start,
    };
    [k, n, uu, du]
}

/// Conversion constants for restoring physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalConstants {
    pub alpha: f64,
    pub rydberg_ev: f64,
    /// Report magnetic moments in Bohr magnetons (`e hbar / 2 m c`).
    pub bohr_magneton: bool,
}

impl Default for DimensionalConstants {
    fn default() -> Self {
        DimensionalConstants {
            alpha: 7.2973525693e-3,
            rydberg_ev: 13.605693122994,
            bohr_magneton: true,
        }
    }
}

impl DimensionalConstants {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.rydberg_ev > 0.0 {
            Ok(())
        } else {
            Err(SolverError::Config("alpha and Rydberg must be positive".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rhs_a_examples() {
        let d = rhs_ansatz_a(1.0, 0.0, 0.0, 0.5, 0.0).unwrap();
        assert_eq!((d.dk, d.dn, d.d2u), (0.0, 0.0, 0.0));

        let d = rhs_ansatz_a(2.0, 1.0, 0.0, 0.5, 0.0).unwrap();
        assert_eq!((d.dk, d.dn, d.d2u), (0.0, 0.0, -1.0));

        let d = rhs_ansatz_a(1.0, 0.1, -0.05, 0.023, -0.01).unwrap();
        // (0.023 - 1)(0.1) - 2(-0.05) = 0.0023; -0.01 + 0.02 = 0.01
        assert!(close(d.dk, -0.05, 1e-15));
        assert!(close(d.dn, 0.0023, 1e-15));
        assert!(close(d.d2u, 0.01, 1e-15));
    }

    #[test]
    fn rhs_b_examples() {
        let d = rhs_ansatz_b(1.0, 0.0, 0.0, 0.1, 0.0).unwrap();
        assert_eq!((d.dk, d.dn, d.d2u), (0.0, 0.0, 0.0));
        let d = rhs_ansatz_b(1.0, 1.0, -3.0, 1.0, 0.0).unwrap();
        assert_eq!((d.dk, d.dn, d.d2u), (1.0, 0.0, -1.0));
    }

    #[test]
    fn rhs_rejects_origin() {
        assert!(matches!(
            rhs_ansatz_a(0.0, 1.0, 0.0, 0.0, 0.0),
            Err(SolverError::Domain { .. })
        ));
        assert!(rhs_ansatz_b(-1.0, 1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn series_leading_terms() {
        let [k, n, u, _] = series_start(AnsatzKind::A, 1.0, 0.0, 1e-12);
        assert!(close(k, 1.0, 1e-11) && close(n, -0.5, 1e-11) && close(u, 0.0, 1e-11));
        let [k, n, u, _] = series_start(AnsatzKind::B, 1.0, 0.0, 1e-12);
        assert!(close(k, 0.0, 1e-11) && close(n, -3.0, 1e-11) && close(u, 0.0, 1e-11));
    }

    #[test]
    fn series_low_order_coefficients() {
        let (beta, delta) = (0.492787, 0.365947);
        let (a, u) = series_coefficients(Variant::A, true, beta, delta, 4);
        assert!(close(a[1], -beta / 2.0, 1e-15));
        assert!(close(a[2], beta * (delta + 0.5) / 6.0, 1e-15));
        assert!(close(u[2], -beta * beta / 6.0, 1e-15));
        assert!(close(u[3], beta * beta / 12.0, 1e-15));

        let (a, u) = series_coefficients(Variant::B, true, beta, delta, 4);
        assert!(close(a[2], -beta / 4.0, 1e-15));
        assert_eq!(u[2], 0.0);
        assert_eq!(u[3], 0.0);
        // U ~ delta - beta^2 r^4 / 20
        assert!(close(u[4], -beta * beta / 20.0, 1e-15));
    }

    #[test]
    fn series_start_table_row() {
        let (beta, delta) = (0.492787, 0.365947);
        let [k, ..] = series_start(AnsatzKind::A, beta, delta, 1e-4);
        assert!(close(k, beta * (1.0 - 5e-5), 1e-9));
    }

    #[test]
    fn profile_interpolation_and_nodes() {
        let radii: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let values: Vec<f64> = radii.iter().map(|r| r.sin()).collect();
        let derivs: Vec<f64> = radii.iter().map(|r| r.cos()).collect();
        let p = RadialProfile::new(radii, values, Some(derivs)).unwrap();
        assert!(close(p.eval(1.234), 1.234f64.sin(), 1e-7));
        assert_eq!(p.sign_changes(0.01, 9.9), 3);
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::new(vec![1.0, 0.5], vec![0.0, 0.0], None).is_err());
        assert!(RadialProfile::new(vec![1.0, 2.0], vec![0.0, f64::NAN], None).is_err());
        assert!(RadialGrid::new(0.0, 1.0, StepControl::default()).is_err());
        assert!(RadialGrid::new(2.0, 1.0, StepControl::default()).is_err());
    }
}
