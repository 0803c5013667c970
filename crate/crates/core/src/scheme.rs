//! Recursive extinction-profile subtraction: `f_{n+1} = f_n - c_n p_n*` with
//! `c_n = <f_n, p_n*> / ||p_n*||²`, where `p_n*` is the extinction profile of
//! the flow started at `f_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{extract_profile, run_flow, ExtinctionProfile, FlowParams, StepControl};
use crate::functional::Functional;
use crate::signal::{check_len, dot, norm, norm_sq, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub max_atoms: usize,
    /// Stop once `||f_n|| ≤ rel_residual_tol ||f||`.
    pub rel_residual_tol: f64,
    /// `|c_n| ||p_n*|| ≤ orthogonality_tol ||f||` counts as `<f_n, p_n*> = 0`.
    pub orthogonality_tol: f64,
    /// Parameters of each inner flow; an unset `delta` is chosen per `f_n`.
    /// Steps are event-aligned by default so that short final phases are
    /// resolved.
    pub flow: FlowParams,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            max_atoms: 200,
            rel_residual_tol: 1e-6,
            orthogonality_tol: 1e-8,
            flow: FlowParams {
                steps: StepControl::EventAligned,
                ..FlowParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroInput,
    Converged,
    /// The profile was orthogonal to the current residual.
    Orthogonal,
    MaxAtoms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub coefficient: f64,
    pub profile: ExtinctionProfile,
    /// `<f_n, p_n*>`.
    pub inner: f64,
    pub residual_norm_before: f64,
    pub residual_norm_after: f64,
    /// Extinction time of the flow started at `f_n`.
    pub extinction_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Null-projected input.
    pub input: Signal,
    pub input_norm: f64,
    pub atoms: Vec<Atom>,
    /// What is left after the last atom.
    pub residual: Signal,
    pub stop: StopReason,
}

pub fn coefficient(f_n: &[f64], p_star: &[f64]) -> Result<f64> {
    check_len(f_n.len(), p_star.len())?;
    let pp = norm_sq(p_star);
    if pp == 0.0 {
        return Err(Error::InvalidParameter("extinction profile is zero".into()));
    }
    Ok(dot(f_n, p_star) / pp)
}

pub fn run_scheme(fun: &dyn Functional, f: &[f64], params: &SchemeParams) -> Result<Decomposition> {
    if params.max_atoms == 0 || !(params.rel_residual_tol >= 0.0) {
        return Err(Error::InvalidParameter("invalid scheme parameters".into()));
    }
    let input = fun.null_project(f)?;
    let input_norm = input.norm();
    let mut dec = Decomposition {
        residual: input.clone(),
        input,
        input_norm,
        atoms: Vec::new(),
        stop: StopReason::ZeroInput,
    };
    if input_norm == 0.0 {
        return Ok(dec);
    }
    let mut current = dec.input.to_vec();
    dec.stop = StopReason::MaxAtoms;
    while dec.atoms.len() < params.max_atoms {
        let before = norm(&current);
        if before <= params.rel_residual_tol * input_norm {
            dec.stop = StopReason::Converged;
            break;
        }
        let (profile, extinction_time) = match inner_profile(fun, &current, &params.flow) {
            Ok(x) => x,
            Err(source) => {
                dec.residual = Signal::from_raw(current);
                return Err(Error::Scheme {
                    partial: Box::new(dec),
                    source: Box::new(source),
                });
            }
        };
        let c = coefficient(&current, &profile.p_star)?;
        if c.abs() * profile.eigenvalue <= params.orthogonality_tol * input_norm {
            dec.stop = StopReason::Orthogonal;
            break;
        }
        let inner = dot(&current, &profile.p_star);
        for (x, p) in current.iter_mut().zip(profile.p_star.iter()) {
            *x -= c * p;
        }
        dec.atoms.push(Atom {
            coefficient: c,
            profile,
            inner,
            residual_norm_before: before,
            residual_norm_after: norm(&current),
            extinction_time,
        });
    }
    if dec.stop == StopReason::MaxAtoms && norm(&current) <= params.rel_residual_tol * input_norm {
        dec.stop = StopReason::Converged;
    }
    dec.residual = Signal::from_raw(current);
    Ok(dec)
}

fn inner_profile(fun: &dyn Functional, f_n: &[f64], flow: &FlowParams) -> Result<(ExtinctionProfile, f64)> {
    let trace = run_flow(fun, f_n, flow)?;
    let profile = extract_profile(fun, &trace)?;
    Ok((profile, trace.extinction_time().unwrap_or(f64::NAN)))
}

impl Decomposition {
    /// `Σ_{i < upto} c_i p_i*`.
    pub fn reconstruct(&self, upto: usize) -> Result<Signal> {
        if upto > self.atoms.len() {
            return Err(Error::IndexOutOfRange {
                index: upto,
                len: self.atoms.len(),
            });
        }
        let mut out = vec![0.0; self.input.len()];
        for atom in &self.atoms[..upto] {
            for (o, p) in out.iter_mut().zip(atom.profile.p_star.iter()) {
                *o += atom.coefficient * p;
            }
        }
        Ok(Signal::from_raw(out))
    }

    /// Replays the subtraction and returns `f_0, f_1, ..., f_N`.
    pub fn residuals(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.atoms.len() + 1);
        let mut cur = self.input.to_vec();
        out.push(cur.clone());
        for atom in &self.atoms {
            for (x, p) in cur.iter_mut().zip(atom.profile.p_star.iter()) {
                *x -= atom.coefficient * p;
            }
            out.push(cur.clone());
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormIdentityReport {
    /// Per step `| ||f_{n+1}||² - (||f_n||² - <f_n,p>²/||p||²) | / ||f_n||²`.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Checks `||f_{n+1}||² = ||f_n||² - <f_n, p_n*>² / ||p_n*||²` step by step.
pub fn verify_norm_identity(dec: &Decomposition) -> NormIdentityReport {
    let residuals = dec.residuals();
    let errors: Vec<f64> = dec
        .atoms
        .iter()
        .enumerate()
        .map(|(n, atom)| {
            let (f_n, f_next) = (&residuals[n], &residuals[n + 1]);
            let p = &atom.profile.p_star;
            let before = norm_sq(f_n);
            let predicted = before - dot(f_n, p).powi(2) / norm_sq(p);
            (norm_sq(f_next) - predicted).abs() / before.max(f64::MIN_POSITIVE)
        })
        .collect();
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    NormIdentityReport { errors, max_error }
}

/// `r_n = Σ_{i ≤ n} c_i <p_i*, f> / ||f||²` for every `n`. Pass the
/// null-projected datum (`dec.input`).
pub fn parseval_report(f: &[f64], dec: &Decomposition) -> Result<Vec<f64>> {
    check_len(dec.input.len(), f.len())?;
    let ff = norm_sq(f);
    if ff == 0.0 {
        return Err(Error::NullSpace);
    }
    let mut acc = 0.0;
    Ok(dec
        .atoms
        .iter()
        .map(|a| {
            acc += a.coefficient * dot(&a.profile.p_star, f);
            acc / ff
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Partial sums of `<f_n, p_n*>² / ||p_n*||²`.
    pub removed: Vec<f64>,
    /// Partial sums of `||f_{n+1} - f_n||²`.
    pub increments: Vec<f64>,
    pub input_norm_sq: f64,
}

impl EnergyReport {
    /// Largest overshoot of the removed energy above `||f||²`, relative.
    pub fn max_excess(&self) -> f64 {
        self.removed
            .iter()
            .map(|s| (s - self.input_norm_sq) / self.input_norm_sq.max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Running sums behind the summability bound `Σ <f_n,p_n*>²/||p_n*||² ≤ ||f||²`.
pub fn energy_report(dec: &Decomposition) -> EnergyReport {
    let residuals = dec.residuals();
    let (mut removed, mut increments) = (Vec::new(), Vec::new());
    let (mut r, mut s) = (0.0, 0.0);
    for (n, atom) in dec.atoms.iter().enumerate() {
        let p = &atom.profile.p_star;
        r += dot(&residuals[n], p).powi(2) / norm_sq(p);
        s += residuals[n]
            .iter()
            .zip(&residuals[n + 1])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        removed.push(r);
        increments.push(s);
    }
    EnergyReport {
        removed,
        increments,
        input_norm_sq: norm_sq(&dec.input),
    }
}
