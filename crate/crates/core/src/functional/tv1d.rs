use super::operator::DifferenceOperator;
use super::{pairing_error, pdhg, Certificate, Domain, Functional, MembershipReport, ProxSettings, ProxSolution};
use crate::error::{Error, Result};
use crate::signal::{check_len, Signal};

/// Anisotropic total variation `Σ_i |u[i+1] - u[i]|` on a 1D grid.
#[derive(Debug, Clone)]
pub struct TotalVariation1d {
    op: DifferenceOperator,
}

impl TotalVariation1d {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySignal);
        }
        Ok(TotalVariation1d {
            op: DifferenceOperator::path(n),
        })
    }

    /// Exact prox by the direct algorithm, bypassing the primal-dual solver.
    pub fn prox_exact(&self, v: &[f64], step: f64) -> Result<Signal> {
        check_len(self.dim(), v.len())?;
        if !(step > 0.0) {
            return Err(Error::InvalidParameter("prox step must be positive".into()));
        }
        Ok(Signal::from_raw(prox_tv_1d_exact(v, step)))
    }

    /// Dual field `z` with `p = Dᵀ z` (i.e. `p = -div z`), plus the
    /// leftover `Σ p` that a mean-free `p` must not have.
    pub fn dual_field(p: &[f64]) -> (Vec<f64>, f64) {
        let mut z = Vec::with_capacity(p.len().saturating_sub(1));
        let mut acc = 0.0;
        for &x in &p[..p.len().saturating_sub(1)] {
            acc -= x;
            z.push(acc);
        }
        let total: f64 = p.iter().sum();
        (z, total)
    }
}

impl Functional for TotalVariation1d {
    fn operator(&self) -> &DifferenceOperator {
        &self.op
    }

    fn domain(&self) -> Domain {
        Domain::Grid1d { n: self.op.n() }
    }

    fn prox_warm(
        &self,
        v: &[f64],
        step: f64,
        settings: &ProxSettings,
        warm_dual: Option<&[f64]>,
    ) -> Result<ProxSolution> {
        check_len(self.dim(), v.len())?;
        if !settings.direct_1d {
            return pdhg::solve(&self.op, v, step, settings, warm_dual);
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "prox step must be positive, got {step}"
            )));
        }
        let u = prox_tv_1d_exact(v, step);
        // dual field from the optimality condition v - u = Kᵀ y
        let (z, _) = Self::dual_field(&v.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dual: Vec<f64> = z.iter().map(|x| x.clamp(-step, step)).collect();
        Ok(ProxSolution {
            rel_gap: pdhg::relative_gap(&self.op, v, step, &u, &dual),
            u: Signal::from_raw(u),
            dual,
            iterations: 0,
            polished: false,
        })
    }

    fn membership(&self, u: &[f64], p: &[f64], tol: f64) -> Result<MembershipReport> {
        check_len(self.dim(), u.len())?;
        check_len(self.dim(), p.len())?;
        let pairing = pairing_error(&self.op, u, p);
        let (z, total) = Self::dual_field(p);
        let zmax = z.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let l1: f64 = p.iter().map(|x| x.abs()).sum();
        let excess = (zmax - 1.0).max(0.0).max(total.abs() / l1.max(1.0));
        Ok(MembershipReport {
            member: pairing <= tol && excess <= tol,
            pairing_error: pairing,
            dual_excess: excess,
            certificate: Certificate::DualField,
        })
    }
}

/// Exact minimizer of `½||u - v||² + lambda Σ|u[i+1] - u[i]|`.
///
/// Direct (taut-string type) algorithm of Condat: a single forward sweep that
/// tracks the admissible range of the current segment value and backtracks
/// to the last feasible position when a jump becomes necessary.
pub fn prox_tv_1d_exact(v: &[f64], lambda: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let last = n - 1;
    let (mut k, mut k0) = (0usize, 0usize);
    let (mut kplus, mut kminus) = (0usize, 0usize);
    let (mut umin, mut umax) = (lambda, -lambda);
    let (mut vmin, mut vmax) = (v[0] - lambda, v[0] + lambda);
    let twolambda = 2.0 * lambda;
    loop {
        while k == last {
            if umin < 0.0 {
                // segment value too high: negative jump
                while k0 <= kminus {
                    out[k0] = vmin;
                    k0 += 1;
                }
                k = k0;
                kminus = k0;
                vmin = v[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                // too low: positive jump
                while k0 <= kplus {
                    out[k0] = vmax;
                    k0 += 1;
                }
                k = k0;
                kplus = k0;
                vmax = v[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return out;
            }
        }
        umin += v[k + 1] - vmin;
        if umin < -lambda {
            while k0 <= kminus {
                out[k0] = vmin;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = v[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += v[k + 1] - vmax;
        if umax > lambda {
            while k0 <= kplus {
                out[k0] = vmax;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = v[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (k - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= -lambda {
            kplus = k;
            vmax += (umax + lambda) / (k - k0 + 1) as f64;
            umax = -lambda;
        }
    }
}
