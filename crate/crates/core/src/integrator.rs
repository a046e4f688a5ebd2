//! One-dimensional ODE propagation and radial quadrature.
//!
//! `propagate` advances an explicit system `y' = f(r, y)` with either classic
//! fixed-step RK4 or the Dormand-Prince 5(4) pair, handing every accepted
//! sample to a [`Monitor`] that may stop the run. Trajectories are a pure
//! function of the inputs: no clocks, no threads, no global state.

use crate::error::{Result, SolverError};
use crate::model::{hermite, RadialProfile, StepControl};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup {
    /// Index of the state component that is watched.
    pub component: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: StepControl,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub blowup: Option<Blowup>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: StepControl::default(),
            max_steps: 2_000_000,
            h_init: 1e-4,
            h_min: 1e-13,
            h_max: 5.0,
            blowup: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: StepControl) -> Self {
        IntegratorConfig {
            step,
            ..Default::default()
        }
    }
}

/// Why a propagation stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    Event { id: usize, r: f64 },
    BlowUp { r: f64 },
}

/// Decision returned by a monitor after each accepted sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop(usize),
}

/// Observer of accepted samples. Events are reported at the first sample at
/// which the monitor asks to stop.
pub trait Monitor<const D: usize> {
    fn observe(&mut self, r: f64, y: &[f64; D], dy: &[f64; D]) -> Control;
}

impl<const D: usize, F> Monitor<D> for F
where
    F: FnMut(f64, &[f64; D], &[f64; D]) -> Control,
{
    fn observe(&mut self, r: f64, y: &[f64; D], dy: &[f64; D]) -> Control {
        self(r, y, dy)
    }
}

/// Monitor that never stops.
pub struct NoEvents;

impl<const D: usize> Monitor<D> for NoEvents {
    fn observe(&mut self, _: f64, _: &[f64; D], _: &[f64; D]) -> Control {
        Control::Continue
    }
}

/// Sampled solution with derivatives at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub radii: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub derivs: Vec<[f64; D]>,
}

impl<const D: usize> Trajectory<D> {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            radii: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            derivs: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, r: f64, y: [f64; D], dy: [f64; D]) {
        self.radii.push(r);
        self.states.push(y);
        self.derivs.push(dy);
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn last_r(&self) -> f64 {
        *self.radii.last().unwrap_or(&f64::NAN)
    }

    /// Component `i` as a profile with its derivative.
    pub fn profile(&self, i: usize) -> RadialProfile {
        RadialProfile {
            radii: self.radii.clone(),
            values: self.states.iter().map(|y| y[i]).collect(),
            derivs: Some(self.derivs.iter().map(|d| d[i]).collect()),
        }
    }

    /// Drop every sample with `r > r_cut`.
    pub fn truncate_at(&mut self, r_cut: f64) {
        let keep = self.radii.partition_point(|&r| r <= r_cut);
        self.radii.truncate(keep);
        self.states.truncate(keep);
        self.derivs.truncate(keep);
    }
}

fn finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(&[f64; D], f64)]) -> [f64; D] {
    let mut out = *y;
    for (k, c) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Propagate `y' = rhs(r, y)` from `r_start` to `r_end`.
pub fn propagate<const D: usize, F, M>(
    mut rhs: F,
    y0: [f64; D],
    r_start: f64,
    r_end: f64,
    config: &IntegratorConfig,
    monitor: &mut M,
) -> Result<(Trajectory<D>, Termination)>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    M: Monitor<D> + ?Sized,
{
    if !(r_start < r_end) {
        return Err(SolverError::Config(format!(
            "propagation interval [{r_start}, {r_end}] is empty"
        )));
    }
    if !finite(&y0) {
        return Err(SolverError::NonFinite { r: r_start });
    }
    let dy0 = rhs(r_start, &y0);
    if !finite(&dy0) {
        return Err(SolverError::NonFinite { r: r_start });
    }
    let mut traj = Trajectory::with_capacity(1024);
    traj.push(r_start, y0, dy0);
    if let Control::Stop(id) = monitor.observe(r_start, &y0, &dy0) {
        return Ok((traj, Termination::Event { id, r: r_start }));
    }
    match config.step {
        StepControl::Rk4Fixed { h } => rk4_fixed(&mut rhs, traj, r_end, h, config, monitor),
        StepControl::Rk45Adaptive { abs_tol, rel_tol } => {
            dopri5(&mut rhs, traj, r_end, abs_tol, rel_tol, config, monitor)
        }
    }
}

fn after_step<const D: usize, M: Monitor<D> + ?Sized>(
    traj: &mut Trajectory<D>,
    r: f64,
    y: [f64; D],
    dy: [f64; D],
    config: &IntegratorConfig,
    monitor: &mut M,
) -> Result<Option<Termination>> {
    if !finite(&y) || !finite(&dy) {
        return Err(SolverError::NonFinite { r });
    }
    traj.push(r, y, dy);
    if let Some(b) = config.blowup {
        if y[b.component].abs() > b.threshold {
            return Ok(Some(Termination::BlowUp { r }));
        }
    }
    if let Control::Stop(id) = monitor.observe(r, &y, &dy) {
        return Ok(Some(Termination::Event { id, r }));
    }
    Ok(None)
}

fn rk4_fixed<const D: usize, F, M>(
    rhs: &mut F,
    mut traj: Trajectory<D>,
    r_end: f64,
    h: f64,
    config: &IntegratorConfig,
    monitor: &mut M,
) -> Result<(Trajectory<D>, Termination)>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    M: Monitor<D> + ?Sized,
{
    let r0 = traj.radii[0];
    let mut y = traj.states[0];
    let mut k1 = traj.derivs[0];
    let total = ((r_end - r0) / h).ceil() as usize;
    if total > config.max_steps {
        return Err(SolverError::StepBudget {
            r: r0,
            max_steps: config.max_steps,
        });
    }
    for i in 0..total {
        // r is recomputed from the step index so rounding does not accumulate
        let r = r0 + i as f64 * h;
        let r_next = if i + 1 == total { r_end } else { r0 + (i + 1) as f64 * h };
        let step = r_next - r;
        let k2 = rhs(r + 0.5 * step, &axpy(&y, step, &[(&k1, 0.5)]));
        let k3 = rhs(r + 0.5 * step, &axpy(&y, step, &[(&k2, 0.5)]));
        let k4 = rhs(r_next, &axpy(&y, step, &[(&k3, 1.0)]));
        y = axpy(
            &y,
            step,
            &[(&k1, 1.0 / 6.0), (&k2, 1.0 / 3.0), (&k3, 1.0 / 3.0), (&k4, 1.0 / 6.0)],
        );
        k1 = rhs(r_next, &y);
        if let Some(t) = after_step(&mut traj, r_next, y, k1, config, monitor)? {
            return Ok((traj, t));
        }
    }
    Ok((traj, Termination::ReachedEnd))
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri5<const D: usize, F, M>(
    rhs: &mut F,
    mut traj: Trajectory<D>,
    r_end: f64,
    abs_tol: f64,
    rel_tol: f64,
    config: &IntegratorConfig,
    monitor: &mut M,
) -> Result<(Trajectory<D>, Termination)>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    M: Monitor<D> + ?Sized,
{
    let mut r = traj.radii[0];
    let mut y = traj.states[0];
    let mut k1 = traj.derivs[0];
    let mut h = config.h_init.min(config.h_max).min(r_end - r);
    let mut steps = 0usize;

    while r < r_end {
        if steps >= config.max_steps {
            return Err(SolverError::StepBudget {
                r,
                max_steps: config.max_steps,
            });
        }
        steps += 1;
        let last = r + h >= r_end;
        if last {
            h = r_end - r;
        }
        let k2 = rhs(r + C2 * h, &axpy(&y, h, &[(&k1, A21)]));
        let k3 = rhs(r + C3 * h, &axpy(&y, h, &[(&k1, A31), (&k2, A32)]));
        let k4 = rhs(r + C4 * h, &axpy(&y, h, &[(&k1, A41), (&k2, A42), (&k3, A43)]));
        let k5 = rhs(
            r + C5 * h,
            &axpy(&y, h, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
        );
        let k6 = rhs(
            r + h,
            &axpy(&y, h, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]),
        );
        let y_new = axpy(&y, h, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
        let r_new = if last { r_end } else { r + h };
        let k7 = rhs(r_new, &y_new);

        let mut err = 0.0;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / D as f64).sqrt();

        if !err.is_finite() {
            // NaN from an overshooting trial step: shrink and retry
            if h <= config.h_min {
                return Err(SolverError::NonFinite { r });
            }
            h = (0.1 * h).max(config.h_min);
            continue;
        }

        if err <= 1.0 {
            r = r_new;
            y = y_new;
            k1 = k7;
            if let Some(t) = after_step(&mut traj, r, y, k1, config, monitor)? {
                return Ok((traj, t));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(config.h_max);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
            if h < config.h_min {
                return Err(SolverError::StepUnderflow { r, h });
            }
        }
    }
    Ok((traj, Termination::ReachedEnd))
}

/// Integral of a sampled function using its derivatives (cubic Hermite rule).
pub fn hermite_integral(xs: &[f64], f: &[f64], df: &[f64]) -> f64 {
    xs.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let h = w[1] - w[0];
            0.5 * h * (f[i] + f[i + 1]) + h * h / 12.0 * (df[i] - df[i + 1])
        })
        .sum()
}

/// Running integral `F(x_i) = int_{x_0}^{x_i} f` with the cubic Hermite rule.
pub fn hermite_cumulative(xs: &[f64], f: &[f64], df: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        acc += 0.5 * h * (f[i - 1] + f[i]) + h * h / 12.0 * (df[i - 1] - df[i]);
        out.push(acc);
    }
    out
}

/// Finite-difference slopes on a non-uniform grid (second order, one-sided at the ends).
pub fn fd_slopes(xs: &[f64], f: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let s = (f[1] - f[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let three_point = |i0: usize, at: usize| {
        let (x0, x1, x2) = (xs[i0], xs[i0 + 1], xs[i0 + 2]);
        let x = xs[at];
        f[i0] * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + f[i0 + 1] * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + f[i0 + 2] * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    let mut d = Vec::with_capacity(n);
    d.push(three_point(0, 0));
    for i in 1..n - 1 {
        d.push(three_point(i - 1, i));
    }
    d.push(three_point(n - 3, n - 1));
    d
}

/// Potential of a radial source with zero boundary value at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    /// `phi` with `phi'` stored as derivative.
    pub phi: RadialProfile,
    /// Total source charge `int rho r^2 dr`, tail included.
    pub charge: f64,
    /// Set when the source does not visibly decay at the last sample and the
    /// exponential tail extrapolation is unreliable.
    pub tail_warning: bool,
}

/// Solve `phi'' + (2/r) phi' = rho` for a sampled source with `phi(inf) = 0`:
/// `phi(r) = -(1/r) int_0^r s^2 rho - int_r^inf s rho`.
///
/// The charge below the first sample is added as a uniform ball, the region
/// beyond the last sample as an exponential fitted to the two last samples.
pub fn poisson_particular(source: &RadialProfile) -> Result<PoissonSolution> {
    source.validate()?;
    let xs = &source.radii;
    let rho = &source.values;
    let m = xs.len();
    if m < 3 {
        return Err(SolverError::Config("poisson source needs at least 3 samples".into()));
    }
    let drho = match &source.derivs {
        Some(d) => d.clone(),
        None => fd_slopes(xs, rho),
    };

    let g: Vec<f64> = xs.iter().zip(rho).map(|(r, p)| r * r * p).collect();
    let dg: Vec<f64> = (0..m)
        .map(|i| 2.0 * xs[i] * rho[i] + xs[i] * xs[i] * drho[i])
        .collect();
    let h: Vec<f64> = xs.iter().zip(rho).map(|(r, p)| r * p).collect();
    let dh: Vec<f64> = (0..m).map(|i| rho[i] + xs[i] * drho[i]).collect();

    let r_first = xs[0];
    let q_inner = rho[0] * r_first.powi(3) / 3.0;
    let p_inner = rho[0] * r_first * r_first / 2.0;
    let mut q_cum = hermite_cumulative(xs, &g, &dg);
    q_cum.iter_mut().for_each(|q| *q += q_inner);
    let p_cum = hermite_cumulative(xs, &h, &dh);

    let (tail_q, tail_p, tail_warning) = exponential_tail(xs, rho);
    let p_total = p_cum[m - 1] + tail_p;
    let charge = q_cum[m - 1] + tail_q;

    let mut phi = Vec::with_capacity(m);
    let mut dphi = Vec::with_capacity(m);
    for i in 0..m {
        let r = xs[i];
        let outer = p_total - p_cum[i];
        if r > 0.0 {
            phi.push(-q_cum[i] / r - outer);
            dphi.push(q_cum[i] / (r * r));
        } else {
            phi.push(-(p_total + p_inner));
            dphi.push(0.0);
        }
    }
    Ok(PoissonSolution {
        phi: RadialProfile {
            radii: xs.clone(),
            values: phi,
            derivs: Some(dphi),
        },
        charge,
        tail_warning,
    })
}

/// Moments `int_R^inf r^2 rho` and `int_R^inf r rho` of `rho ~ C exp(-a r)` fitted
/// to the two last samples.
fn exponential_tail(xs: &[f64], rho: &[f64]) -> (f64, f64, bool) {
    let m = xs.len();
    let (r1, r2) = (xs[m - 2], xs[m - 1]);
    let (p1, p2) = (rho[m - 2], rho[m - 1]);
    if p2 == 0.0 {
        return (0.0, 0.0, false);
    }
    if !(p1 * p2 > 0.0 && p2.abs() < p1.abs()) {
        return (0.0, 0.0, true);
    }
    let a = (p1 / p2).ln() / (r2 - r1);
    let c = p2;
    // int_R^inf r^2 e^{-a(r-R)} dr and int_R^inf r e^{-a(r-R)} dr
    let m2 = c * (r2 * r2 / a + 2.0 * r2 / (a * a) + 2.0 / (a * a * a));
    let m1 = c * (r2 / a + 1.0 / (a * a));
    (m2, m1, false)
}

/// Evaluate a sampled trajectory component by Hermite interpolation.
pub fn interpolate<const D: usize>(traj: &Trajectory<D>, i: usize, r: f64) -> f64 {
    let xs = &traj.radii;
    if r <= xs[0] {
        return traj.states[0][i];
    }
    let last = xs.len() - 1;
    if r >= xs[last] {
        return traj.states[last][i];
    }
    let j = xs.partition_point(|&x| x <= r) - 1;
    let h = xs[j + 1] - xs[j];
    hermite(
        (r - xs[j]) / h,
        h,
        traj.states[j][i],
        traj.states[j + 1][i],
        traj.derivs[j][i],
        traj.derivs[j + 1][i],
    )
}
