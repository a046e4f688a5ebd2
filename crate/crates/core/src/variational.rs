//! Variational estimate with single-mode Laguerre trial functions.
//!
//! The trial is `k(r) = A x^l L_N^(a)(x) exp(-x/2)` with `x = r / s`, where
//! `(l, a) = (0, 1)` for ansatz A and `(1, 3)` for ansatz B. The functional
//! `E = T - V + S` is minimized on the normalization manifold; the binding
//! value is `W = -E`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::integrator::{hermite_integral, poisson_particular};
use crate::model::{AnsatzKind, RadialProfile, Variant};
use crate::observables::EnergyBreakdown;

/// Generalized Laguerre polynomial `L_N^(a)(x)` by the three-term recurrence.
pub fn laguerre(n: u32, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Explicit sum `sum_m (-1)^m C(N + a, N - m) x^m / m!`.
pub fn laguerre_series(n: u32, a: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    for m in 0..=n {
        // C(N + a, N - m) = prod_{j=1}^{N-m} (m + a + j) / j
        let mut binom = 1.0;
        for j in 1..=(n - m) {
            binom *= (m as f64 + a + j as f64) / j as f64;
        }
        let mut term = binom;
        for j in 1..=m {
            term *= x / j as f64;
        }
        sum += if m % 2 == 0 { term } else { -term };
    }
    sum
}

/// `(L, L', L'')` using `d/dx L_N^(a) = -L_{N-1}^(a+1)`.
fn laguerre_derivs(n: u32, a: f64, x: f64) -> (f64, f64, f64) {
    let l0 = laguerre(n, a, x);
    let l1 = if n >= 1 { -laguerre(n - 1, a + 1.0, x) } else { 0.0 };
    let l2 = if n >= 2 { laguerre(n - 2, a + 2.0, x) } else { 0.0 };
    (l0, l1, l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialFamily {
    pub ansatz: AnsatzKind,
    pub nodes: u32,
    pub amplitude: f64,
    pub scale: f64,
}

impl TrialFamily {
    fn power(&self) -> i32 {
        self.ansatz.orbital() as i32
    }

    fn alpha(&self) -> f64 {
        match self.ansatz.variant {
            Variant::A => 1.0,
            Variant::B => 3.0,
        }
    }

    /// `(F, F', F'')` of the unit shape `x^l L(x) exp(-x/2)` in `x`.
    fn shape(&self, x: f64) -> (f64, f64, f64) {
        let (l0, l1, l2) = laguerre_derivs(self.nodes, self.alpha(), x);
        let (g, dg, d2g) = if self.power() == 0 {
            (l0, l1, l2)
        } else {
            (x * l0, l0 + x * l1, 2.0 * l1 + x * l2)
        };
        let e = (-0.5 * x).exp();
        (g * e, (dg - 0.5 * g) * e, (d2g - dg + 0.25 * g) * e)
    }

    /// `(k, k', k'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (f, df, d2f) = self.shape(r / self.scale);
        let a = self.amplitude;
        let s = self.scale;
        (a * f, a * df / s, a * d2f / (s * s))
    }

    /// Origin parameter of the trial: `k(0)` for A, the slope `k/r` for B.
    pub fn beta(&self) -> f64 {
        let l0 = laguerre(self.nodes, self.alpha(), 0.0);
        match self.ansatz.variant {
            Variant::A => self.amplitude * l0,
            Variant::B => self.amplitude * l0 / self.scale,
        }
    }

    /// Radii of the `N` positive zeros of `k`, located by sign change and bisection.
    pub fn zeros(&self) -> Vec<f64> {
        let x_max = 4.0 * (self.nodes as f64 + 2.0) + 10.0;
        let steps = 2000 * (self.nodes as usize + 1);
        let h = x_max / steps as f64;
        let f = |x: f64| laguerre(self.nodes, self.alpha(), x);
        let mut out = Vec::new();
        for i in 0..steps {
            let (mut a, mut b) = (i as f64 * h + 1e-12, (i + 1) as f64 * h);
            if f(a) * f(b) < 0.0 {
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if f(a) * f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push(0.5 * (a + b) * self.scale);
            }
        }
        out
    }
}

/// Energy pieces of a trial function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEnergy {
    /// `int k^2 r^2 dr`
    pub q: f64,
    /// `int k'^2 r^2 dr`, plus `2 int k^2 dr` for ansatz B.
    pub kinetic: f64,
    /// `int k^2 r dr`
    pub coulomb: f64,
    pub self_energy: f64,
    /// `T - V + S` (or `T - V` without self-field).
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
}

#[derive(Debug, Clone, Copy)]
struct UnitIntegrals {
    q: f64,
    t: f64,
    v: f64,
    s: f64,
}

/// Sampling of the trial on `[0, (4n + 60) s]`, refined on `x < 2` where the
/// endpoint term of the quadrature error lives.
fn trial_grid(trial: &TrialFamily) -> Vec<f64> {
    let n = trial.ansatz.principal(trial.nodes) as f64;
    let x_max = 4.0 * n + 60.0;
    let x_fine = 2.0;
    let m_fine = 1000;
    let h = 0.02 / (1.0 + n / 10.0);
    let m = ((x_max - x_fine) / h).ceil() as usize;
    let fine = (0..m_fine).map(|i| i as f64 * x_fine / m_fine as f64);
    let coarse = (0..=m).map(|i| x_fine + i as f64 * (x_max - x_fine) / m as f64);
    fine.chain(coarse).map(|x| x * trial.scale).collect()
}

fn unit_integrals(trial: &TrialFamily, self_field: bool) -> Result<UnitIntegrals> {
    let unit = TrialFamily {
        amplitude: 1.0,
        ..*trial
    };
    let r = trial_grid(&unit);
    let m = r.len();
    let b = unit.ansatz.variant == Variant::B;
    let mut k = vec![0.0; m];
    let mut dk = vec![0.0; m];
    let mut d2k = vec![0.0; m];
    for i in 0..m {
        let (a, b1, c) = unit.eval(r[i]);
        k[i] = a;
        dk[i] = b1;
        d2k[i] = c;
    }
    if k.iter().chain(&dk).any(|v| !v.is_finite()) {
        return Err(SolverError::NotNormalizable("trial overflowed on its grid".into()));
    }
    let quad = |g: &dyn Fn(usize) -> (f64, f64)| {
        let (f, df): (Vec<f64>, Vec<f64>) = (0..m).map(g).unzip();
        hermite_integral(&r, &f, &df)
    };
    let q = quad(&|i| {
        (k[i] * k[i] * r[i] * r[i], 2.0 * k[i] * dk[i] * r[i] * r[i] + 2.0 * k[i] * k[i] * r[i])
    });
    if !(q > 0.0 && q.is_finite()) {
        return Err(SolverError::NotNormalizable(format!("int k^2 r^2 dr = {q}")));
    }
    let mut t = quad(&|i| {
        (
            dk[i] * dk[i] * r[i] * r[i],
            2.0 * dk[i] * d2k[i] * r[i] * r[i] + 2.0 * dk[i] * dk[i] * r[i],
        )
    });
    if b {
        t += quad(&|i| (2.0 * k[i] * k[i], 4.0 * k[i] * dk[i]));
    }
    let v = quad(&|i| (k[i] * k[i] * r[i], 2.0 * k[i] * dk[i] * r[i] + k[i] * k[i]));
    let s = if self_field {
        let rho: Vec<f64> = k.iter().map(|v| v * v).collect();
        let drho: Vec<f64> = (0..m).map(|i| 2.0 * k[i] * dk[i]).collect();
        let pot = poisson_particular(&RadialProfile {
            radii: r.clone(),
            values: rho,
            derivs: Some(drho),
        })?;
        let dphi = pot.phi.derivs.as_ref().expect("poisson returns slopes");
        // 1/2 int phi'^2 r^2 with phi' = Q / r^2 and Q' = k^2 r^2
        let inner = quad(&|i| {
            let qr = dphi[i] * r[i] * r[i];
            if r[i] == 0.0 {
                (0.0, 0.0)
            } else {
                let dq = k[i] * k[i] * r[i] * r[i];
                (
                    0.5 * qr * qr / (r[i] * r[i]),
                    qr * dq / (r[i] * r[i]) - qr * qr / r[i].powi(3),
                )
            }
        });
        inner + 0.5 * pot.charge * pot.charge / r[m - 1]
    } else {
        0.0
    };
    Ok(UnitIntegrals { q, t, v, s })
}

fn assemble(u: UnitIntegrals, amplitude: f64, self_field: bool) -> TrialEnergy {
    let a2 = amplitude * amplitude;
    let q = a2 * u.q;
    let kinetic = a2 * u.t;
    let coulomb = a2 * u.v;
    let self_energy = if self_field { a2 * a2 * u.s } else { 0.0 };
    let energy = kinetic - coulomb + self_energy;
    let w = -energy;
    let epsilon = coulomb - kinetic - 2.0 * self_energy;
    let identity_residual = (w - kinetic).abs() / w.abs();
    TrialEnergy {
        q,
        kinetic,
        coulomb,
        self_energy,
        energy,
        breakdown: EnergyBreakdown {
            epsilon,
            self_energy,
            w_binding: w,
            w_binding_alt: kinetic,
            identity_residual,
            converged: w > 0.0,
        },
    }
}

/// `E = T - V + S` of a trial, with the binding value `W = -E` in the breakdown.
pub fn energy_functional(trial: &TrialFamily, self_field: bool) -> Result<TrialEnergy> {
    if !(trial.scale > 0.0 && trial.amplitude.is_finite()) {
        return Err(SolverError::NotNormalizable(format!(
            "scale {} / amplitude {}",
            trial.scale, trial.amplitude
        )));
    }
    Ok(assemble(unit_integrals(trial, self_field)?, trial.amplitude, self_field))
}

/// Trial of the given scale with amplitude fixed by `q = 1`.
pub fn normalized_trial(
    ansatz: AnsatzKind,
    nodes: u32,
    scale: f64,
    self_field: bool,
) -> Result<(TrialFamily, TrialEnergy)> {
    let trial = TrialFamily {
        ansatz,
        nodes,
        amplitude: 1.0,
        scale,
    };
    normalized_energy(&trial, self_field)
}

fn normalized_energy(trial: &TrialFamily, self_field: bool) -> Result<(TrialFamily, TrialEnergy)> {
    if !(trial.scale > 0.0) {
        return Err(SolverError::NotNormalizable(format!("scale {}", trial.scale)));
    }
    let u = unit_integrals(trial, self_field)?;
    let amplitude = 1.0 / u.q.sqrt();
    let t = TrialFamily {
        amplitude,
        ..*trial
    };
    Ok((t, assemble(u, amplitude, self_field)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMode {
    /// Golden-section/parabolic search in the scale on the `q = 1` manifold.
    Constrained,
    /// Nelder-Mead in (amplitude, scale) with a quadratic penalty on `q - 1`.
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub amplitude: f64,
    pub scale: f64,
    pub q: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub trial: TrialFamily,
    pub energy: TrialEnergy,
    pub w_var: f64,
    pub mode: OptimizerMode,
    pub iterations: usize,
    pub trace: Vec<Iterate>,
    /// Origin parameter of the optimal trial.
    pub beta_estimate: f64,
    /// `U(0) = eps + int s k^2 ds` of the optimal trial.
    pub delta_estimate: f64,
}

const SCALE_TOL: f64 = 1e-8;
const MAX_ITER: usize = 500;

/// Maximize `W` over the scale with the amplitude eliminated by normalization.
pub fn optimize(ansatz: AnsatzKind, nodes: u32, self_field: bool) -> Result<VariationalResult> {
    let n = ansatz.principal(nodes) as f64;
    let mut trace = Vec::new();
    let mut eval = |s: f64| -> Result<f64> {
        let base = TrialFamily {
            ansatz,
            nodes,
            amplitude: 1.0,
            scale: s,
        };
        let (t, e) = normalized_energy(&base, self_field)?;
        trace.push(Iterate {
            amplitude: t.amplitude,
            scale: s,
            q: e.q,
            w: -e.energy,
        });
        Ok(e.energy)
    };
    let (s_best, iterations) = minimize_scalar(&mut eval, n, SCALE_TOL)?;
    let base = TrialFamily {
        ansatz,
        nodes,
        amplitude: 1.0,
        scale: s_best,
    };
    let (trial, energy) = normalized_energy(&base, self_field)?;
    Ok(finish(trial, energy, OptimizerMode::Constrained, iterations, trace, self_field))
}

fn finish(
    trial: TrialFamily,
    energy: TrialEnergy,
    mode: OptimizerMode,
    iterations: usize,
    trace: Vec<Iterate>,
    self_field: bool,
) -> VariationalResult {
    let eps = energy.breakdown.epsilon;
    let delta_estimate = if self_field { eps + energy.coulomb } else { eps };
    VariationalResult {
        trial,
        energy,
        w_var: -energy.energy,
        mode,
        iterations,
        trace,
        beta_estimate: trial.beta(),
        delta_estimate,
    }
}

/// Penalty weight on `(q - 1)^2` in the two-parameter mode.
pub const PENALTY: f64 = 1e4;

/// Two-parameter search over `(ln A, ln s)` minimizing `E + P (q - 1)^2`.
pub fn optimize_two_parameter(
    ansatz: AnsatzKind,
    nodes: u32,
    self_field: bool,
) -> Result<VariationalResult> {
    let n = ansatz.principal(nodes) as f64;
    let (start, _) = normalized_energy(
        &TrialFamily {
            ansatz,
            nodes,
            amplitude: 1.0,
            scale: n,
        },
        self_field,
    )?;
    let mut trace = Vec::new();
    let mut objective = |p: [f64; 2]| -> Result<f64> {
        let trial = TrialFamily {
            ansatz,
            nodes,
            amplitude: p[0].exp(),
            scale: p[1].exp(),
        };
        let e = energy_functional(&trial, self_field)?;
        trace.push(Iterate {
            amplitude: trial.amplitude,
            scale: trial.scale,
            q: e.q,
            w: -e.energy,
        });
        Ok(e.energy + PENALTY * (e.q - 1.0).powi(2))
    };
    let (best, iterations) =
        nelder_mead(&mut objective, [start.amplitude.ln(), n.ln()], 0.1, 1e-10, 4000)?;
    let trial = TrialFamily {
        ansatz,
        nodes,
        amplitude: best[0].exp(),
        scale: best[1].exp(),
    };
    let energy = energy_functional(&trial, self_field)?;
    Ok(finish(trial, energy, OptimizerMode::Penalty, iterations, trace, self_field))
}

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105_1;

/// Minimize a positive-argument function near `x0`: downhill bracketing by
/// golden expansion, then Brent's golden-section/parabolic search.
pub fn minimize_scalar<F>(f: &mut F, x0: f64, tol: f64) -> Result<(f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut a = x0;
    let mut b = x0 * 1.2;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLD * (b - a);
    if c <= 0.0 {
        c = 0.5 * b;
    }
    let mut fc = f(c)?;
    let mut expansions = 0;
    while fc < fb {
        expansions += 1;
        if expansions > 100 {
            return Err(SolverError::NoConvergence {
                iterations: expansions,
                best: -fc,
            });
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + GOLD * (b - a);
        if c <= 0.0 {
            c = 0.5 * b;
        }
        fc = f(c)?;
    }
    let _ = fa;
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };

    // Brent
    let (mut x, mut w, mut v) = (b, b, b);
    let (mut fx, mut fw, mut fv) = (fb, fb, fb);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for iter in 0..MAX_ITER {
        let xm = 0.5 * (lo + hi);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (hi - lo) {
            return Ok((x, iter + expansions));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (lo - x) && p < q * (hi - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { lo - x } else { hi - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(SolverError::NoConvergence {
        iterations: MAX_ITER,
        best: -fx,
    })
}

/// Nelder-Mead in two dimensions with standard coefficients.
pub fn nelder_mead<F>(
    f: &mut F,
    start: [f64; 2],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<([f64; 2], usize)>
where
    F: FnMut([f64; 2]) -> Result<f64>,
{
    let mut pts = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = [f(pts[0])?, f(pts[1])?, f(pts[2])?];
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for iter in 0..max_iter {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let size = (1..3)
            .map(|i| (pts[i][0] - pts[0][0]).abs().max((pts[i][1] - pts[0][1]).abs()))
            .fold(0.0, f64::max);
        if size <= tol {
            return Ok((pts[0], iter));
        }
        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = lerp(centroid, pts[2], -1.0);
        let fr = f(reflected)?;
        if fr < vals[0] {
            let expanded = lerp(centroid, pts[2], -2.0);
            let fe = f(expanded)?;
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, pts[2], 0.5)
            };
            let fc = f(contracted)?;
            if fc < vals[2].min(fr) {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], 0.5);
                    vals[i] = f(pts[i])?;
                }
            }
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_iter,
        best: -vals[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_closed_forms() {
        assert_eq!(laguerre(0, 1.0, 3.7), 1.0);
        for x in [0.0, 0.5, 2.0, 7.5] {
            assert!((laguerre(1, 1.0, x) - (2.0 - x)).abs() < 1e-14);
            // L_2^(1) = (x^2 - 6x + 6) / 2
            assert!((laguerre(2, 1.0, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn laguerre_recurrence_matches_series() {
        // L_2^(3)(1.5) = 10 - 5 * 1.5 + 1.5^2 / 2
        let v = laguerre(2, 3.0, 1.5);
        assert!((v - 3.625).abs() < 1e-14);
        assert!((laguerre_series(2, 3.0, 1.5) - 3.625).abs() < 1e-14);
        for n in 0..12 {
            for x in [0.1, 1.0, 4.0, 9.0] {
                let a = laguerre(n, 1.0, x);
                let b = laguerre_series(n, 1.0, x);
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn trial_zeros_are_polynomial_zeros() {
        let t = TrialFamily {
            ansatz: AnsatzKind::A,
            nodes: 2,
            amplitude: 1.0,
            scale: 3.0,
        };
        let z = t.zeros();
        assert_eq!(z.len(), 2);
        // roots of x^2 - 6x + 6 scaled by s = 3
        let expect = [3.0 - 3f64.sqrt(), 3.0 + 3f64.sqrt()];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - 3.0 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_energy_at_exact_scale() {
        let t = TrialFamily {
            ansatz: AnsatzKind::A,
            nodes: 0,
            amplitude: std::f64::consts::FRAC_1_SQRT_2,
            scale: 1.0,
        };
        let e = energy_functional(&t, false).unwrap();
        assert!((e.q - 1.0).abs() < 1e-10, "{}", e.q);
        assert!((-e.energy - 0.25).abs() < 1e-10);
    }

    #[test]
    fn linear_optimum_is_hydrogen() {
        for (ans, nodes) in [(AnsatzKind::A, 0), (AnsatzKind::A, 2), (AnsatzKind::B, 0), (AnsatzKind::B, 1)] {
            let res = optimize(ans, nodes, false).unwrap();
            let n = ans.principal(nodes) as f64;
            assert!((res.w_var - 1.0 / (4.0 * n * n)).abs() < 1e-8, "{}", res.w_var);
            assert!((res.trial.scale - n).abs() < 1e-4 * n, "{}", res.trial.scale);
        }
    }

    #[test]
    fn ground_state_matches_closed_form_optimum() {
        // A, N = 0: T1 = 1/4, V1 = 1/2, S1 = 5/32 per unit charge at s = 1,
        // so W = (V1 - S1)^2 / (4 T1) = 121/1024 at s = 2 T1 / (V1 - S1).
        let res = optimize(AnsatzKind::A, 0, true).unwrap();
        assert!((res.w_var - 121.0 / 1024.0).abs() < 1e-9, "{}", res.w_var);
        assert!((res.trial.scale - 16.0 / 11.0).abs() < 1e-6);
        for it in &res.trace {
            assert!((it.q - 1.0).abs() < 1e-10);
        }
        // virial balance at the optimum
        assert!(res.energy.breakdown.identity_residual < 1e-7);
    }

    #[test]
    fn penalty_mode_agrees_with_constrained() {
        let a = optimize(AnsatzKind::A, 1, true).unwrap();
        let b = optimize_two_parameter(AnsatzKind::A, 1, true).unwrap();
        assert!((a.w_var - b.w_var).abs() < 1e-6 * a.w_var, "{} {}", a.w_var, b.w_var);
        assert!((b.energy.q - 1.0).abs() < 1e-4);
    }

    #[test]
    fn scalar_minimizer_on_parabola() {
        let mut f = |x: f64| Ok((x - 3.0).powi(2) + 1.0);
        let (x, _) = minimize_scalar(&mut f, 1.0, 1e-10).unwrap();
        assert!((x - 3.0).abs() < 1e-7);
    }

    #[test]
    fn nelder_mead_on_rosenbrock() {
        let mut f = |p: [f64; 2]| Ok((1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2));
        let (p, _) = nelder_mead(&mut f, [-1.2, 1.0], 0.1, 1e-10, 10_000).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn rejects_bad_scale() {
        let t = TrialFamily {
            ansatz: AnsatzKind::A,
            nodes: 0,
            amplitude: 1.0,
            scale: 0.0,
        };
        assert!(matches!(energy_functional(&t, true), Err(SolverError::NotNormalizable(_))));
    }
}
