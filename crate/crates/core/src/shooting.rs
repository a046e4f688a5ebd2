//! Nested shooting for regular, normalized solutions.
//!
//! For a fixed potential value `delta = U(0)` the origin amplitude `beta` is
//! bisected between two behaviours of `k(r)` beyond its `N`-th node: running
//! away with the sign of the last lobe ("blew up") or crossing zero once more
//! ("extra node"). The outer loop then tunes `delta` until the charge
//! `q = int k^2 r^2 dr` equals one, and the reduced frequency is read off the
//! far field of `U`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::integrator::{
    hermite_integral, propagate, Blowup, Control, IntegratorConfig, Monitor, Termination,
    Trajectory,
};
use crate::model::{series_start_with, AnsatzKind, RadialGrid, StepControl, Variant, SERIES_ORDER};
use crate::observables;
use crate::record::{Profiles, Provenance, SolutionRecord};
use crate::variational;

/// Full configuration of one eigen-solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    #[serde(flatten)]
    pub ansatz: AnsatzKind,
    pub nodes: u32,
    pub grid: RadialGrid,
    /// `false` freezes `U = delta`: the linear hydrogen problem.
    pub self_field: bool,
    pub beta_bracket: Option<(f64, f64)>,
    pub delta_guess: Option<f64>,
    /// Relative width at which the beta bisection stops.
    pub tol_beta: f64,
    pub tol_charge: f64,
    /// `r0` is the last radius with `|k| > decay_floor * max|k|`.
    pub decay_floor: f64,
    /// Hard blow-up guard, in units of the origin amplitude scale.
    pub blowup_factor: f64,
    pub series_order: usize,
    pub max_outer_iterations: usize,
}

impl ShootingProblem {
    pub fn new(ansatz: AnsatzKind, nodes: u32) -> Self {
        ShootingProblem {
            ansatz,
            nodes,
            grid: RadialGrid {
                r_start: 1e-3,
                r_max: default_r_max(ansatz, nodes),
                step: StepControl::default(),
            },
            self_field: true,
            beta_bracket: None,
            delta_guess: None,
            tol_beta: 1e-12,
            tol_charge: 1e-4,
            decay_floor: 1e-8,
            blowup_factor: 1e3,
            series_order: SERIES_ORDER,
            max_outer_iterations: 60,
        }
    }

    pub fn linear(ansatz: AnsatzKind, nodes: u32) -> Self {
        ShootingProblem {
            self_field: false,
            ..Self::new(ansatz, nodes)
        }
    }

    pub fn principal(&self) -> u32 {
        self.ansatz.principal(self.nodes)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if let Some((lo, hi)) = self.beta_bracket {
            if !(lo > 0.0 && lo < hi) {
                return Err(SolverError::Config(format!(
                    "beta bracket needs 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.tol_beta > 0.0 && self.tol_charge > 0.0) {
            return Err(SolverError::Config("tolerances must be positive".into()));
        }
        if !(self.decay_floor > 0.0 && self.decay_floor < 1.0) {
            return Err(SolverError::Config("decay floor must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn integrator(&self, beta: f64) -> IntegratorConfig {
        let n = self.principal() as f64;
        let scale = match self.ansatz.variant {
            Variant::A => beta.abs(),
            // k ~ beta r peaks near r ~ n^2
            Variant::B => beta.abs() * 2.0 * n * n,
        };
        IntegratorConfig {
            blowup: Some(Blowup {
                component: 0,
                threshold: self.blowup_factor * scale.max(f64::MIN_POSITIVE),
            }),
            h_max: (0.05 * n * n).max(1.0),
            ..IntegratorConfig::with_step(self.grid.step)
        }
    }
}

/// Cut-off large enough that the eigen-solutions are always terminated by an
/// event, not by the end of the interval.
pub fn default_r_max(_ansatz: AnsatzKind, nodes: u32) -> f64 {
    let n = (nodes + 2) as f64;
    400.0 * n * n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotClass {
    /// `|r k|` started growing under the barrier with at most `N` nodes: beta too small.
    BlewUpPositive,
    /// `k` acquired node `N + 1`: beta too large.
    CrossedNegativeExtraNode,
    /// Reached `r_max` still decaying.
    Decayed,
}

impl ShotClass {
    fn same_side(self, other: ShotClass) -> bool {
        self == other
    }
}

#[derive(Debug, Clone)]
pub struct ShotOutcome {
    pub class: ShotClass,
    /// Sign changes of `k` before termination.
    pub nodes: u32,
    pub r0: f64,
    pub r_event: f64,
    pub trajectory: Trajectory<4>,
}

const EVENT_EXTRA_NODE: usize = 1;
const EVENT_RUNAWAY: usize = 2;

/// Counts nodes of `k` and stops at the first decisive event. With
/// `u = r k` the system reads `u'' = V u`, `V = U - 1/r + l(l+1)/r^2`; once the
/// trajectory has left the inner barrier, `|u|` growing where `V > 0` can
/// only end in a runaway. `V` falling back below zero past the outer turning
/// point means the tail holds more than the normalized charge with a negative
/// asymptotic energy; that is the same undershoot, caught before it oscillates.
struct NodeMonitor {
    centrifugal: f64,
    max_nodes: u32,
    nodes: u32,
    last_k: f64,
    seen_allowed: bool,
    seen_barrier: bool,
}

impl Monitor<4> for NodeMonitor {
    fn observe(&mut self, r: f64, y: &[f64; 4], dy: &[f64; 4]) -> Control {
        let k = y[0];
        let crossed = k != 0.0 && self.last_k != 0.0 && (k > 0.0) != (self.last_k > 0.0);
        if k != 0.0 {
            self.last_k = k;
        }
        if crossed {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Control::Stop(EVENT_EXTRA_NODE);
            }
            return Control::Continue;
        }
        let v = y[2] - 1.0 / r + self.centrifugal / (r * r);
        if v < 0.0 {
            if self.seen_barrier {
                return Control::Stop(EVENT_RUNAWAY);
            }
            self.seen_allowed = true;
        } else if self.seen_allowed {
            self.seen_barrier = true;
            // u u' = r k (k + r k')
            let growing = k * (k + r * dy[0]) > 0.0;
            if growing {
                return Control::Stop(EVENT_RUNAWAY);
            }
        }
        Control::Continue
    }
}

/// Last radius (not beyond the trajectory end) with `|k| > floor * max|k|`.
fn cutoff_radius(traj: &Trajectory<4>, floor: f64) -> f64 {
    let peak = traj.states.iter().fold(0.0f64, |m, y| m.max(y[0].abs()));
    let thr = floor * peak;
    let mut idx = 0;
    for (i, y) in traj.states.iter().enumerate() {
        if y[0].abs() > thr {
            idx = i;
        }
    }
    // first sample that falls below the floor after the last significant one
    let j = (idx + 1).min(traj.len() - 1);
    traj.radii[j]
}

/// Integrate once from the origin series and classify the behaviour of `k`.
pub fn shoot_once(problem: &ShootingProblem, beta: f64, delta: f64) -> Result<ShotOutcome> {
    let variant = problem.ansatz.variant;
    let self_field = problem.self_field;
    let y0 = series_start_with(
        variant,
        self_field,
        beta,
        delta,
        problem.grid.r_start,
        problem.series_order,
    );
    let l = problem.ansatz.orbital() as f64;
    let mut monitor = NodeMonitor {
        centrifugal: l * (l + 1.0),
        max_nodes: problem.nodes,
        nodes: 0,
        last_k: y0[0],
        seen_allowed: false,
        seen_barrier: false,
    };
    let rhs = |r: f64, y: &[f64; 4]| crate::model::radial_rhs(variant, self_field, r, y);
    let (trajectory, term) = propagate(
        rhs,
        y0,
        problem.grid.r_start,
        problem.grid.r_max,
        &problem.integrator(beta),
        &mut monitor,
    )
    .map_err(|e| e.at_shot(beta, delta))?;

    let (class, r_event) = match term {
        Termination::Event {
            id: EVENT_EXTRA_NODE,
            r,
        } => (ShotClass::CrossedNegativeExtraNode, r),
        Termination::Event { r, .. } | Termination::BlowUp { r } => (ShotClass::BlewUpPositive, r),
        Termination::ReachedEnd => (ShotClass::Decayed, problem.grid.r_max),
    };
    let r0 = cutoff_radius(&trajectory, problem.decay_floor);
    Ok(ShotOutcome {
        class,
        nodes: monitor.nodes,
        r0,
        r_event,
        trajectory,
    })
}

/// Converged inner solve.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub beta: f64,
    pub r0: f64,
    pub shot: ShotOutcome,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisect `beta` inside `problem.beta_bracket` (which must be set) at fixed `delta`.
///
/// In linear mode the amplitude does not change the shape of `k`; the
/// returned `beta` is then the amplitude that normalizes the solution.
pub fn solve_beta(problem: &ShootingProblem, delta: f64) -> Result<BetaSolution> {
    problem.validate()?;
    if !problem.self_field {
        return normalize_linear(problem, delta);
    }
    let (lo, hi) = problem.beta_bracket.ok_or_else(|| {
        SolverError::Config("solve_beta needs a beta bracket in nonlinear mode".into())
    })?;
    let shot_lo = shoot_once(problem, lo, delta)?;
    let shot_hi = shoot_once(problem, hi, delta)?;
    bisect_beta(problem, delta, (lo, shot_lo), (hi, shot_hi))
}

fn bisect_beta(
    problem: &ShootingProblem,
    delta: f64,
    lo: (f64, ShotOutcome),
    hi: (f64, ShotOutcome),
) -> Result<BetaSolution> {
    let (mut lo, mut shot_lo) = lo;
    let (mut hi, mut shot_hi) = hi;
    for (b, s) in [(lo, &shot_lo), (hi, &shot_hi)] {
        if s.class == ShotClass::Decayed {
            return finish_beta(problem, delta, b, s.clone(), (lo, hi), 0);
        }
    }
    if shot_lo.class.same_side(shot_hi.class) {
        return Err(SolverError::Bracket { lo, hi, delta });
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= problem.tol_beta * mid.abs() || mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let shot = shoot_once(problem, mid, delta)?;
        if shot.class == ShotClass::Decayed {
            return finish_beta(problem, delta, mid, shot, (lo, hi), iterations);
        }
        if shot.class == shot_lo.class {
            lo = mid;
            shot_lo = shot;
        } else {
            hi = mid;
            shot_hi = shot;
        }
    }
    // keep the endpoint whose trajectory stays regular the longest
    let (beta, shot) = if shot_lo.r_event >= shot_hi.r_event {
        (lo, shot_lo)
    } else {
        (hi, shot_hi)
    };
    finish_beta(problem, delta, beta, shot, (lo, hi), iterations)
}

fn finish_beta(
    problem: &ShootingProblem,
    delta: f64,
    beta: f64,
    mut shot: ShotOutcome,
    bracket: (f64, f64),
    iterations: usize,
) -> Result<BetaSolution> {
    let r0 = shot.r0;
    shot.trajectory.truncate_at(r0);
    let nodes = count_nodes(&shot.trajectory, 0.9 * r0);
    if nodes != problem.nodes as usize {
        return Err(SolverError::Degenerate { beta, delta });
    }
    Ok(BetaSolution {
        beta,
        r0,
        shot,
        bracket,
        iterations,
    })
}

fn count_nodes(traj: &Trajectory<4>, r_hi: f64) -> usize {
    crate::model::count_sign_changes(
        traj.radii
            .iter()
            .zip(&traj.states)
            .filter(|(r, _)| **r <= r_hi)
            .map(|(_, y)| y[0]),
    )
}

fn normalize_linear(problem: &ShootingProblem, delta: f64) -> Result<BetaSolution> {
    let unit = shoot_once(problem, 1.0, delta)?;
    let mut traj = unit.trajectory.clone();
    traj.truncate_at(unit.r0);
    let q = charge_integral(problem.ansatz, &traj, delta.max(0.0));
    if !(q > 0.0 && q.is_finite()) {
        return Err(SolverError::NotNormalizable(format!("q = {q} at delta = {delta}")));
    }
    let beta = 1.0 / q.sqrt();
    let shot = shoot_once(problem, beta, delta)?;
    finish_beta(problem, delta, beta, shot, (beta, beta), 0)
}

/// `int k^2 r^2 dr` over the trajectory plus the exponential tail.
pub(crate) fn charge_integral(ansatz: AnsatzKind, traj: &Trajectory<4>, epsilon: f64) -> f64 {
    let xs = &traj.radii;
    let f: Vec<f64> = traj.states.iter().zip(xs).map(|(y, r)| y[0] * y[0] * r * r).collect();
    let df: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.derivs)
        .zip(xs)
        .map(|((y, d), r)| 2.0 * y[0] * d[0] * r * r + 2.0 * y[0] * y[0] * r)
        .collect();
    let _ = ansatz;
    let last = traj.states.last().map(|y| y[0]).unwrap_or(0.0);
    hermite_integral(xs, &f, &df) + observables::exp_tail_moment(last, traj.last_r(), epsilon, 2)
}

/// One evaluation of the outer map `delta -> q`.
#[derive(Debug, Clone)]
pub struct ChargePoint {
    pub delta: f64,
    pub beta: f64,
    pub q: f64,
    pub q_flux: f64,
    pub epsilon: f64,
    pub solution: BetaSolution,
}

fn evaluate_charge(problem: &ShootingProblem, delta: f64, beta: BetaSolution) -> ChargePoint {
    let traj = &beta.shot.trajectory;
    let last = traj.states.last().copied().unwrap_or([0.0; 4]);
    let r0 = traj.last_r();
    let (u, du) = (last[2], last[3]);
    let q_flux = -r0 * r0 * du;
    let eps_raw = if problem.self_field { u + r0 * du } else { delta };
    let epsilon = if problem.self_field {
        eps_raw - observables::exp_tail_moment(last[0], r0, eps_raw.max(0.0), 1)
    } else {
        delta
    };
    let q = charge_integral(problem.ansatz, traj, epsilon.max(0.0));
    ChargePoint {
        delta,
        beta: beta.beta,
        q,
        q_flux,
        epsilon,
        solution: beta,
    }
}

/// Find a straddling beta bracket around `guess` at fixed `delta` and bisect it.
/// The bracket starts at relative half-width `spread` and widens geometrically,
/// so a good seed keeps the search on the branch it came from.
pub fn solve_beta_auto(
    problem: &ShootingProblem,
    delta: f64,
    guess: f64,
    spread: f64,
) -> Result<BetaSolution> {
    if let Some((lo, hi)) = problem.beta_bracket {
        let lo_shot = shoot_once(problem, lo, delta)?;
        let hi_shot = shoot_once(problem, hi, delta)?;
        if !lo_shot.class.same_side(hi_shot.class) || lo_shot.class == ShotClass::Decayed {
            return bisect_beta(problem, delta, (lo, lo_shot), (hi, hi_shot));
        }
    }
    // walk outward from the guess towards the nearest change of class
    let mut width = spread.max(1e-6);
    let seed = shoot_once(problem, guess, delta)?;
    let upward = match seed.class {
        ShotClass::Decayed => return finish_beta(problem, delta, guess, seed, (guess, guess), 0),
        ShotClass::BlewUpPositive => true,
        ShotClass::CrossedNegativeExtraNode => false,
    };
    let (mut lo, mut hi) = (guess, guess);
    let mut near = seed;
    for _ in 0..80 {
        let next = if upward { hi * (1.0 + width) } else { lo / (1.0 + width) };
        let shot = shoot_once(problem, next, delta)?;
        if shot.class != near.class {
            return if upward {
                bisect_beta(problem, delta, (hi, near), (next, shot))
            } else {
                bisect_beta(problem, delta, (next, shot), (lo, near))
            };
        }
        if upward {
            lo = hi;
            hi = next;
        } else {
            hi = lo;
            lo = next;
        }
        near = shot;
        width = (1.5 * width).min(1.0);
    }
    Err(SolverError::Bracket { lo, hi, delta })
}

/// Starting values for the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGuess {
    pub beta: f64,
    pub delta: f64,
}

/// Estimate `(beta, delta)` from the optimal trial function of the same state:
/// `beta` from its origin behaviour, `delta = eps + int s k^2 ds`.
pub fn initial_guess(problem: &ShootingProblem) -> Result<InitialGuess> {
    let var = variational::optimize(problem.ansatz, problem.nodes, problem.self_field)?;
    let delta = problem.delta_guess.unwrap_or(var.delta_estimate);
    Ok(InitialGuess {
        beta: var.beta_estimate,
        delta,
    })
}

/// Outer solve on `delta` enforcing `q = 1`; returns a record without the
/// magnetic fields filled in.
pub fn solve_delta(problem: &ShootingProblem) -> Result<SolutionRecord> {
    problem.validate()?;
    let point = if problem.self_field {
        solve_delta_nonlinear(problem)?
    } else {
        solve_delta_linear(problem)?
    };
    let agree_tol = 10.0 * problem.tol_charge;
    if problem.self_field && (point.q - point.q_flux).abs() > agree_tol {
        return Err(SolverError::CutoffTooSmall {
            integral: point.q,
            flux: point.q_flux,
            r0: point.solution.r0,
        });
    }
    if (point.q - 1.0).abs() > problem.tol_charge {
        return Err(SolverError::ChargeBracket {
            delta: point.delta,
            q: point.q,
        });
    }
    Ok(build_record(problem, &point))
}

/// First relative step of the beta search from the trial-function estimate.
const INITIAL_SPREAD: f64 = 0.02;
/// First relative step of the beta search when seeding from a neighbouring delta.
const CONTINUATION_SPREAD: f64 = 2e-3;

fn solve_delta_nonlinear(problem: &ShootingProblem) -> Result<ChargePoint> {
    let guess = initial_guess(problem)?;
    let mut beta_guess = problem
        .beta_bracket
        .map(|(lo, hi)| (lo * hi).sqrt())
        .unwrap_or(guess.beta);
    let target = 1e-2 * problem.tol_charge;

    let eval = |delta: f64, beta_guess: f64, spread: f64| -> Result<ChargePoint> {
        let sol = solve_beta_auto(problem, delta, beta_guess, spread)?;
        Ok(evaluate_charge(problem, delta, sol))
    };

    let mut p0 = eval(guess.delta, beta_guess, INITIAL_SPREAD)?;
    if (p0.q - 1.0).abs() <= target {
        return Ok(p0);
    }
    beta_guess = p0.beta;
    // q grows with delta near the physical branch
    let step = if p0.q < 1.0 { 1.05 } else { 1.0 / 1.05 };
    let mut p1 = eval(guess.delta * step, beta_guess, CONTINUATION_SPREAD)?;

    let mut lo: Option<(f64, f64)> = None; // (delta, q - 1) with q < 1
    let mut hi: Option<(f64, f64)> = None;
    let note = |p: &ChargePoint, lo: &mut Option<(f64, f64)>, hi: &mut Option<(f64, f64)>| {
        let g = p.q - 1.0;
        if g < 0.0 {
            *lo = Some((p.delta, g));
        } else {
            *hi = Some((p.delta, g));
        }
    };
    note(&p0, &mut lo, &mut hi);
    note(&p1, &mut lo, &mut hi);
    // bound states seen so far; a negative epsilon marks a shot that settled
    // on a non-normalizable branch and must not seed the next one
    let mut bound: Vec<(f64, f64)> = [&p0, &p1]
        .iter()
        .filter(|p| p.epsilon > 0.0)
        .map(|p| (p.delta, p.beta))
        .collect();

    for _ in 0..problem.max_outer_iterations {
        let g1 = p1.q - 1.0;
        if g1.abs() <= target {
            return Ok(p1);
        }
        let g0 = p0.q - 1.0;
        let mut next = if g1 != g0 {
            p1.delta - g1 * (p1.delta - p0.delta) / (g1 - g0)
        } else {
            f64::NAN
        };
        match (lo, hi) {
            (Some((dl, _)), Some((dh, _))) => {
                let (a, b) = if dl < dh { (dl, dh) } else { (dh, dl) };
                let inside = next.is_finite() && next > a && next < b;
                // bisect when the secant leaves the bracket or stalls at one end
                let shrink = inside && (next - a).min(b - next) > 1e-3 * (b - a);
                if !shrink {
                    next = 0.5 * (a + b);
                }
                if (b - a) <= 1e-15 * b {
                    return Ok(p1);
                }
            }
            _ => {
                let d = p1.delta;
                if !next.is_finite() || next <= 0.0 {
                    next = if g1 < 0.0 { d * 1.2 } else { d / 1.2 };
                }
                next = next.clamp(0.5 * d, 2.0 * d);
            }
        }
        let beta_seed = bound
            .iter()
            .min_by(|a, b| (a.0 - next).abs().total_cmp(&(b.0 - next).abs()))
            .map(|s| s.1)
            .unwrap_or(p1.beta);
        let p = eval(next, beta_seed, CONTINUATION_SPREAD)?;
        note(&p, &mut lo, &mut hi);
        if p.epsilon > 0.0 {
            bound.push((p.delta, p.beta));
        }
        p0 = p1;
        p1 = p;
    }
    if (p1.q - 1.0).abs() <= problem.tol_charge {
        Ok(p1)
    } else {
        Err(SolverError::ChargeBracket {
            delta: p1.delta,
            q: p1.q,
        })
    }
}

/// Linear mode: the eigenvalue is `delta` itself. Scan down from a large value
/// until the node count is exceeded, then bisect on the classification.
fn solve_delta_linear(problem: &ShootingProblem) -> Result<ChargePoint> {
    let classify = |delta: f64| shoot_once(problem, 1.0, delta).map(|s| s.class);
    let mut upper = problem.delta_guess.map(|d| 2.0 * d).unwrap_or(1.0);
    while classify(upper)? != ShotClass::BlewUpPositive {
        upper *= 2.0;
        if upper > 1e6 {
            return Err(SolverError::ChargeBracket { delta: upper, q: f64::NAN });
        }
    }
    let mut lower = upper;
    loop {
        lower *= 0.8;
        if lower < 1e-12 {
            return Err(SolverError::ChargeBracket { delta: lower, q: f64::NAN });
        }
        match classify(lower)? {
            ShotClass::BlewUpPositive => upper = lower,
            ShotClass::CrossedNegativeExtraNode => break,
            ShotClass::Decayed => {
                upper = lower;
                break;
            }
        }
    }
    let (mut lo, mut hi) = (lower, upper);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid)? {
            ShotClass::BlewUpPositive => hi = mid,
            ShotClass::CrossedNegativeExtraNode => lo = mid,
            ShotClass::Decayed => {
                lo = mid;
                hi = mid;
            }
        }
    }
    // the blown-up side keeps exactly N nodes
    let delta = hi;
    let sol = normalize_linear(problem, delta)?;
    Ok(evaluate_charge(problem, delta, sol))
}

fn build_record(problem: &ShootingProblem, point: &ChargePoint) -> SolutionRecord {
    let traj = &point.solution.shot.trajectory;
    let profiles = Profiles::from_trajectory(traj);
    let mut record = SolutionRecord {
        ansatz: problem.ansatz,
        nodes: problem.nodes,
        n: problem.principal(),
        self_field: problem.self_field,
        beta0: point.beta,
        delta0: point.delta,
        gamma0: 0.0,
        epsilon: point.epsilon,
        q: point.q,
        q_flux: if problem.self_field { point.q_flux } else { point.q },
        r0: traj.last_r(),
        self_energy: 0.0,
        w_binding: 0.0,
        w_binding_alt: 0.0,
        identity_residual: 0.0,
        mu: 0.0,
        mu_identity: 0.0,
        j: 0.0,
        profiles,
        config: Some(problem.clone()),
        provenance: Provenance::current(),
    };
    let energy = observables::binding_energy(&record);
    record.self_energy = energy.self_energy;
    record.w_binding = energy.w_binding;
    record.w_binding_alt = energy.w_binding_alt;
    record.identity_residual = energy.identity_residual;
    record.j = observables::angular_momentum(&record);
    record
}
