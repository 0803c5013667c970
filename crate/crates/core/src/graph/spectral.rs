use nalgebra::{DMatrix, SymmetricEigen};

use super::{connected_components, WeightedGraph};
use crate::error::{Error, Result};
use crate::signal::{check_len, Signal};

/// Dense `L = D - W`.
pub fn laplacian_matrix(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n(), g.n());
    for e in g.edges() {
        l[(e.i, e.j)] -= e.w;
        l[(e.j, e.i)] -= e.w;
        l[(e.i, e.i)] += e.w;
        l[(e.j, e.j)] += e.w;
    }
    l
}

#[derive(Debug, Clone)]
pub struct FiedlerVector {
    /// Unit norm, mean zero, first clearly nonzero entry positive.
    pub vector: Signal,
    /// Second-smallest eigenvalue of `L`.
    pub eigenvalue: f64,
    /// Number of eigenvalues (counting `λ₂`) within rounding of `λ₂`; the
    /// vector is one arbitrary member of the eigenspace when this exceeds 1.
    pub multiplicity: usize,
}

/// Eigenvector of `L` for its second-smallest eigenvalue (dense solve).
pub fn fiedler_vector(g: &WeightedGraph) -> Result<FiedlerVector> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "Fiedler vector needs at least two vertices".into(),
        ));
    }
    let (_, components) = connected_components(g);
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let eig = SymmetricEigen::new(laplacian_matrix(g));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda2 = eig.eigenvalues[order[1]];
    let spread = eig.eigenvalues[order[n - 1]].abs().max(1.0);
    let multiplicity = order[1..]
        .iter()
        .filter(|&&k| (eig.eigenvalues[k] - lambda2).abs() <= 1e-9 * spread)
        .count();

    let mut v: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
    // remove the rounding-level component along the constant vector
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(FiedlerVector {
        vector: Signal::from_raw(v),
        eigenvalue: lambda2,
        multiplicity,
    })
}

/// Graph p-Laplacian `Σ_{y~x} w^{p/2} |f(y)-f(x)|^{p-2} (f(y)-f(x))`; terms
/// with `f(y) = f(x)` contribute zero.
pub fn p_laplacian_apply(g: &WeightedGraph, f: &[f64], p: f64) -> Result<Signal> {
    check_len(g.n(), f.len())?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let out = (0..g.n())
        .map(|x| {
            g.neighbors(x)
                .iter()
                .map(|&(y, w)| {
                    let d = f[y] - f[x];
                    if d == 0.0 {
                        0.0
                    } else {
                        w.powf(p / 2.0) * d.abs().powf(p - 2.0) * d
                    }
                })
                .sum()
        })
        .collect();
    Ok(Signal::from_raw(out))
}
