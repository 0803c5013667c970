//! Invariant checks on stored flow traces and decompositions.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::rayleigh;
use crate::functional::Functional;
use crate::io::{Artifact, DecompositionArtifact, TraceArtifact};
use crate::scheme::{energy_report, verify_norm_identity};
use crate::signal::{dist, norm};

/// Relative error allowed on identities that hold in exact arithmetic.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance of the eigenfunction membership test on profiles.
pub const PROFILE_MEMBERSHIP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn verify_artifact(a: &Artifact) -> Result<VerifyReport> {
    match a {
        Artifact::FlowTrace(t) => verify_trace(t),
        Artifact::Decomposition(d) => verify_decomposition(d),
    }
}

/// Structural invariants of the implicit flow. Monotonicity and Rayleigh
/// bounds get a slack of `10 gap_tol`.
pub fn verify_trace(a: &TraceArtifact) -> Result<VerifyReport> {
    let fun = a.domain.functional()?;
    let trace = &a.trace;
    let slack = 10.0 * a.params.prox.gap_tol;
    let amp = trace.initial.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let report = trace.check(fun.as_ref())?;
    let mut checks = vec![
        Check::at_most("update u_k = u_{k-1} - dt p_k", report.max_update_error, 1e-12 * amp),
        Check::at_most("||p_k|| non-increasing", report.max_p_norm_increase, slack),
        Check::at_most("J(u_k) non-increasing", report.max_energy_increase, slack),
        Check::at_most("||u_k|| non-increasing", report.max_u_norm_increase, slack),
        Check::at_most("R(p_hat_k) <= 1", report.max_rayleigh - 1.0, slack),
    ];
    if trace.extinct_at.is_some() {
        checks.push(Check::at_most(
            "telescoping residual",
            report.reconstruction_residual,
            2.0 * trace.extinction_threshold * trace.delta,
        ));
    }
    if let Some(profile) = &a.profile {
        checks.extend(profile_checks(fun.as_ref(), &profile.p_star, profile.rayleigh)?);
    }
    Ok(VerifyReport { checks })
}

fn profile_checks(fun: &dyn Functional, p: &[f64], stored_rayleigh: f64) -> Result<Vec<Check>> {
    let r = rayleigh(fun, p)?;
    let mut checks = vec![Check::at_most(
        "stored Rayleigh quotient",
        (r - stored_rayleigh).abs(),
        IDENTITY_TOL,
    )];
    if r >= 1.0 - PROFILE_MEMBERSHIP_TOL {
        let m = fun.membership(p, p, PROFILE_MEMBERSHIP_TOL)?;
        checks.push(Check {
            name: "profile p in dJ(p)".into(),
            value: m.pairing_error.max(m.dual_excess),
            tolerance: PROFILE_MEMBERSHIP_TOL,
            pass: m.member,
        });
    }
    Ok(checks)
}

/// Norm identity, summability bound, residual replay and atom profiles.
pub fn verify_decomposition(a: &DecompositionArtifact) -> Result<VerifyReport> {
    let fun = a.domain.functional()?;
    let dec = &a.decomposition;
    let ff = dec.input.norm().max(f64::MIN_POSITIVE);
    let mut checks = vec![Check::at_most(
        "norm identity per step",
        verify_norm_identity(dec).max_error,
        IDENTITY_TOL,
    )];
    let energy = energy_report(dec);
    if !dec.atoms.is_empty() {
        checks.push(Check::at_most(
            "sum of removed energy <= ||f||^2",
            energy.max_excess().max(0.0),
            IDENTITY_TOL,
        ));
        let recon = dec.reconstruct(dec.atoms.len())?;
        let split: Vec<f64> = recon.iter().zip(dec.residual.iter()).map(|(a, b)| a + b).collect();
        checks.push(Check::at_most(
            "sum of atoms plus residual equals input",
            dist(&split, &dec.input) / ff,
            IDENTITY_TOL,
        ));
    }
    let replayed = dec.residuals();
    let last = replayed.last().expect("residual list starts with the input");
    checks.push(Check::at_most(
        "stored residual matches replay",
        dist(last, &dec.residual) / ff,
        IDENTITY_TOL,
    ));
    let increase = replayed
        .windows(2)
        .map(|w| (norm(&w[1]) - norm(&w[0])) / ff)
        .fold(0.0, f64::max);
    checks.push(Check::at_most("||f_n|| non-increasing", increase, IDENTITY_TOL));
    for (i, atom) in dec.atoms.iter().enumerate() {
        for mut c in profile_checks(fun.as_ref(), &atom.profile.p_star, atom.profile.rayleigh)? {
            c.name = format!("atom {}: {}", i + 1, c.name);
            checks.push(c);
        }
    }
    Ok(VerifyReport { checks })
}
