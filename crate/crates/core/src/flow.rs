//! Implicit gradient flow `u' = -p, p ∈ ∂J(u)` by proximal steps, with
//! extinction detection and extraction of eigenfunction candidates.
//!
//! Every step solves `u_k = prox_{δ J}(u_{k-1})` and records the subgradient
//! `p_k = (u_{k-1} - u_k) / δ ∈ ∂J(u_k)`. Two step policies are offered:
//!
//! * [`StepControl::Uniform`] takes fixed steps `δ`. When a merge event of the
//!   flow falls inside a step, `p_k` is a mixture of the subgradients before
//!   and after the event and need not be an eigenfunction.
//! * [`StepControl::EventAligned`] shortens a step so that it ends exactly at
//!   the next event. For polyhedral `J` the flow is piecewise linear, so every
//!   recorded `p_k` is then the exact (constant) flow subgradient on its
//!   interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Functional, ProxSettings};
use crate::signal::{dist, dot, norm, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    #[default]
    Uniform,
    EventAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Time step; `0.01 ||f|| / sqrt(n)` when unset.
    pub delta: Option<f64>,
    /// Extinction is declared once `||p_k||` drops below this value;
    /// `1e-6 max(1, ||p_1||)` when unset.
    pub extinction_threshold: Option<f64>,
    pub max_steps: usize,
    pub steps: StepControl,
    pub prox: ProxSettings,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            delta: None,
            extinction_threshold: None,
            max_steps: 100_000,
            steps: StepControl::Uniform,
            prox: ProxSettings::default(),
        }
    }
}

pub fn default_delta(f: &[f64]) -> f64 {
    0.01 * norm(f) / (f.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub k: usize,
    pub t: f64,
    /// Length of this step (equal to `delta` for uniform steps).
    pub dt: f64,
    pub u: Signal,
    pub p: Signal,
    pub p_norm: f64,
    /// `R(p̂_k)` with `p̂_k = (p_k + p_{k-1}) / 2`; unset for `k = 1` or when
    /// `J(p̂_k) = 0`.
    pub rayleigh: Option<f64>,
    /// `J(u_k)`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub delta: f64,
    pub extinction_threshold: f64,
    pub step_control: StepControl,
    /// Null-projected initial datum.
    pub initial: Signal,
    pub steps: Vec<FlowStep>,
    /// Index of the step at which `u` reached zero; `Some(0)` for zero data.
    pub extinct_at: Option<usize>,
    pub warnings: Vec<String>,
}

impl FlowTrace {
    pub fn extinction_time(&self) -> Option<f64> {
        self.extinct_at.map(|k| match k {
            0 => 0.0,
            k => self.steps[k - 1].t,
        })
    }

    /// `||f - Σ_k dt_k p_k||`, the discrete reconstruction residual.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut r = self.initial.to_vec();
        for s in &self.steps {
            for (ri, pi) in r.iter_mut().zip(s.p.iter()) {
                *ri -= s.dt * pi;
            }
        }
        norm(&r)
    }

    /// Averaged subgradients `p̂_k` for `k ≥ 2`, paired with their step index.
    pub fn averaged_subgradients(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        self.steps.windows(2).map(|w| {
            let avg = w[0].p.iter().zip(w[1].p.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
            (w[1].k, avg)
        })
    }

    /// Eigenfunction candidates paired with their step index. With uniform
    /// steps these are the averages `p̂_k`, leaving out the extinction step
    /// (its `p_k` is cut short when `u` reaches zero inside the step) unless
    /// nothing precedes it. Aligned steps never straddle an event, so every
    /// `p_k` is taken as is, the extinction step included.
    pub fn candidate_subgradients(&self) -> Vec<(usize, Vec<f64>)> {
        match self.step_control {
            StepControl::Uniform => {
                let end = match self.extinct_at {
                    Some(k) if k > 2 => k,
                    _ => usize::MAX,
                };
                self.averaged_subgradients().filter(|(k, _)| *k < end).collect()
            }
            StepControl::EventAligned => self.steps.iter().map(|s| (s.k, s.p.to_vec())).collect(),
        }
    }

    /// Checks the recorded trace against the structural invariants of the
    /// implicit flow.
    pub fn check(&self, fun: &dyn Functional) -> Result<TraceReport> {
        let mut report = TraceReport::default();
        let mut prev_u: &[f64] = &self.initial;
        let mut prev_norm = f64::INFINITY;
        let mut prev_energy = fun.eval(&self.initial)?;
        let mut prev_u_norm = norm(&self.initial);
        let p1 = self.steps.first().map_or(1.0, |s| s.p_norm.max(1.0));
        for s in &self.steps {
            let update: f64 = prev_u
                .iter()
                .zip(s.p.iter())
                .zip(s.u.iter())
                .map(|((a, p), b)| (a - s.dt * p - b).abs())
                .fold(0.0, f64::max);
            report.max_update_error = report.max_update_error.max(update);
            report.max_p_norm_increase = report.max_p_norm_increase.max((s.p_norm - prev_norm) / p1);
            let energy = fun.eval(&s.u)?;
            let scale = prev_energy.max(f64::MIN_POSITIVE);
            report.max_energy_increase = report.max_energy_increase.max((energy - prev_energy) / scale);
            let u_norm = norm(&s.u);
            report.max_u_norm_increase = report
                .max_u_norm_increase
                .max((u_norm - prev_u_norm) / prev_u_norm.max(f64::MIN_POSITIVE));
            if let Some(r) = s.rayleigh {
                report.max_rayleigh = report.max_rayleigh.max(r);
            }
            prev_u = &s.u;
            prev_norm = s.p_norm;
            prev_energy = energy;
            prev_u_norm = u_norm;
        }
        report.reconstruction_residual = self.reconstruction_residual();
        Ok(report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    /// `max |u_{k-1} - dt_k p_k - u_k|`.
    pub max_update_error: f64,
    /// Largest increase of `||p_k||`, relative to `max(1, ||p_1||)`.
    pub max_p_norm_increase: f64,
    pub max_energy_increase: f64,
    pub max_u_norm_increase: f64,
    pub max_rayleigh: f64,
    pub reconstruction_residual: f64,
}

/// `||p||² / J(p)`.
pub fn rayleigh(fun: &dyn Functional, p: &[f64]) -> Result<f64> {
    let j = fun.eval(p)?;
    if j <= 0.0 {
        return Err(Error::NullSpace);
    }
    Ok(dot(p, p) / j)
}

struct Stepper<'a> {
    fun: &'a dyn Functional,
    settings: ProxSettings,
    /// Last dual field divided by its step, i.e. the edge field `z`.
    dual_dir: Option<Vec<f64>>,
    /// Jumps below this size are rounding noise, not events.
    jump_floor: f64,
}

impl Stepper<'_> {
    fn implicit(&mut self, u: &[f64], step: f64) -> Result<Vec<f64>> {
        let warm: Option<Vec<f64>> = self.dual_dir.as_ref().map(|z| z.iter().map(|x| x * step).collect());
        let sol = match self.fun.prox_warm(u, step, &self.settings, warm.as_deref()) {
            Err(Error::NonConvergence { .. }) if warm.is_some() => self.fun.prox(u, step, &self.settings)?,
            other => other?,
        };
        self.dual_dir = Some(sol.dual.iter().map(|y| y / step).collect());
        Ok(u.iter().zip(sol.u.iter()).map(|(a, b)| (a - b) / step).collect())
    }

    /// Whether `p ∈ ∂J(u)`, given that `p ∈ ∂J(0)` holds by construction.
    fn consistent(&self, u: &[f64], p: &[f64]) -> bool {
        let j = self.fun.operator().total_variation(u);
        let pairing = dot(p, u);
        (j - pairing).abs() <= 1e-9 * (j + norm(p) * norm(u)) + f64::MIN_POSITIVE
    }

    /// First time at which a jump of `u - t p` closes.
    fn event_time(&self, u: &[f64], p: &[f64]) -> Option<f64> {
        let floor = self.jump_floor;
        self.fun
            .operator()
            .edges()
            .iter()
            .filter_map(|e| {
                let jump = u[e.j] - u[e.i];
                let rate = p[e.j] - p[e.i];
                (jump.abs() > floor && jump * rate > 0.0).then(|| jump / rate)
            })
            .min_by(f64::total_cmp)
    }

    /// Returns `(p, dt)`. A full step whose subgradient is already below
    /// `threshold` is returned as is: it signals extinction.
    fn aligned(
        &mut self,
        u: &[f64],
        delta: f64,
        threshold: f64,
        warnings: &mut Vec<String>,
    ) -> Result<(Vec<f64>, f64)> {
        let p = self.implicit(u, delta)?;
        if norm(&p) < threshold || self.consistent(u, &p) {
            return Ok((p, delta));
        }
        let mut s = self.event_time(u, &p).filter(|&t| t < delta).unwrap_or(0.5 * delta);
        for _ in 0..64 {
            let q = match self.implicit(u, s) {
                Ok(q) => q,
                Err(Error::NonConvergence { .. }) => break,
                Err(e) => return Err(e),
            };
            let next = self.event_time(u, &q);
            if self.consistent(u, &q) {
                let h = next.unwrap_or(f64::INFINITY).clamp(s, delta);
                return Ok((q, h));
            }
            s = match next {
                Some(t) if t < s => t,
                _ => 0.5 * s,
            };
        }
        warnings.push("event alignment failed; fell back to a uniform step".into());
        Ok((p, delta))
    }
}

/// Runs the implicit gradient flow from `f` (null-projected first).
pub fn run_flow(fun: &dyn Functional, f: &[f64], params: &FlowParams) -> Result<FlowTrace> {
    let initial = fun.null_project(f)?;
    let delta = params.delta.unwrap_or_else(|| default_delta(&initial));
    let mut trace = FlowTrace {
        delta,
        extinction_threshold: params.extinction_threshold.unwrap_or(0.0),
        step_control: params.steps,
        initial,
        steps: Vec::new(),
        extinct_at: None,
        warnings: Vec::new(),
    };
    if trace.initial.iter().all(|&x| x == 0.0) {
        trace.extinct_at = Some(0);
        return Ok(trace);
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {delta}"
        )));
    }
    if let Some(thr) = params.extinction_threshold {
        if !(thr > 0.0) {
            return Err(Error::InvalidParameter("extinction threshold must be positive".into()));
        }
    }
    params.prox.validate(fun.operator().norm_sq_bound())?;

    let mut stepper = Stepper {
        fun,
        settings: params.prox,
        dual_dir: None,
        jump_floor: 1e-11 * trace.initial.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
    };
    let mut u = trace.initial.to_vec();
    let mut t = 0.0;
    let mut prev_p: Option<Vec<f64>> = None;
    for k in 1..=params.max_steps {
        let (p, dt) = match params.steps {
            StepControl::Uniform => (stepper.implicit(&u, delta)?, delta),
            StepControl::EventAligned => stepper.aligned(&u, delta, trace.extinction_threshold, &mut trace.warnings)?,
        };
        let p_norm = norm(&p);
        if k == 1 && params.extinction_threshold.is_none() {
            trace.extinction_threshold = 1e-6 * p_norm.max(1.0);
        }
        if p_norm < trace.extinction_threshold {
            trace.extinct_at = Some(k - 1);
            return Ok(trace);
        }
        for (ui, pi) in u.iter_mut().zip(&p) {
            *ui -= dt * pi;
        }
        t += dt;
        let rayleigh = prev_p.as_ref().and_then(|q| {
            let avg: Vec<f64> = q.iter().zip(&p).map(|(a, b)| 0.5 * (a + b)).collect();
            rayleigh(fun, &avg).ok()
        });
        let energy = fun.operator().total_variation(&u);
        trace.steps.push(FlowStep {
            k,
            t,
            dt,
            u: Signal::from_raw(u.clone()),
            p: Signal::from_raw(p.clone()),
            p_norm,
            rayleigh,
            energy,
        });
        prev_p = Some(p);
    }
    trace.warnings.push(format!(
        "no extinction within {} steps (last ||p|| = {:.3e})",
        params.max_steps,
        trace.steps.last().map_or(0.0, |s| s.p_norm)
    ));
    Ok(trace)
}

/// Eigenfunction candidate selected from a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionProfile {
    pub p_star: Signal,
    /// `||p*||² / J(p*)`; equal to one for an eigenfunction in `∂J(0)`.
    pub rayleigh: f64,
    /// Step `k` whose candidate was selected.
    pub source_step: usize,
    /// `||p*||`, the eigenvalue under unit normalization.
    pub eigenvalue: f64,
}

/// The candidate of [`FlowTrace::candidate_subgradients`] with the largest
/// Rayleigh quotient. Quotients above one count as one, and quotients
/// within [`RAYLEIGH_SLACK`] of the best tie; ties go to the later step.
pub fn extract_profile(fun: &dyn Functional, trace: &FlowTrace) -> Result<ExtinctionProfile> {
    if trace.extinct_at.is_none() {
        return Err(Error::NotExtinct);
    }
    if trace.steps.len() < 2 {
        return Err(Error::TraceTooShort {
            steps: trace.steps.len(),
            required: 2,
        });
    }
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (k, avg) in trace.candidate_subgradients() {
        let Ok(r) = rayleigh(fun, &avg) else { continue };
        if best
            .as_ref()
            .is_none_or(|b| r.min(1.0) >= b.2.min(1.0) - RAYLEIGH_SLACK)
        {
            best = Some((k, avg, r));
        }
    }
    let (source_step, p, r) = best.ok_or(Error::NullSpace)?;
    let p_star = Signal::from_raw(p);
    Ok(ExtinctionProfile {
        eigenvalue: p_star.norm(),
        p_star,
        rayleigh: r,
        source_step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighRayleigh {
    pub step: usize,
    pub p: Signal,
    pub rayleigh: f64,
}

/// Consecutive candidates closer than this (relative) belong to one plateau.
pub const PLATEAU_TOL: f64 = 1e-3;
/// Numerical slack below the threshold that still qualifies.
pub const RAYLEIGH_SLACK: f64 = 1e-9;

/// One representative candidate per plateau of the flow whose Rayleigh quotient
/// reaches `threshold` (values above one are treated as one), ordered by
/// decreasing norm.
pub fn high_rayleigh_subgradients(
    fun: &dyn Functional,
    trace: &FlowTrace,
    threshold: f64,
) -> Result<Vec<HighRayleigh>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Rayleigh threshold must be positive, got {threshold}"
        )));
    }
    let threshold = threshold.min(1.0) - RAYLEIGH_SLACK;

    let mut plateaus: Vec<HighRayleigh> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for (k, avg) in trace.candidate_subgradients() {
        let same_plateau = prev.as_ref().is_some_and(|q| dist(q, &avg) <= PLATEAU_TOL * norm(q));
        let r = rayleigh(fun, &avg).unwrap_or(0.0);
        match plateaus.last_mut() {
            Some(last) if same_plateau => {
                if r.min(1.0) >= last.rayleigh.min(1.0) - RAYLEIGH_SLACK {
                    *last = HighRayleigh {
                        step: k,
                        p: Signal::from_raw(avg.clone()),
                        rayleigh: r,
                    };
                }
            }
            _ => plateaus.push(HighRayleigh {
                step: k,
                p: Signal::from_raw(avg.clone()),
                rayleigh: r,
            }),
        }
        prev = Some(avg);
    }
    plateaus.retain(|h| h.rayleigh >= threshold);
    plateaus.sort_by(|a, b| b.p.norm().total_cmp(&a.p.norm()));
    Ok(plateaus)
}
