//! The two proximal solvers for 1D total variation side by side: the direct
//! taut-string solver and the polished primal-dual iteration.

use eigenflow::functional::{prox_tv_1d_exact, Functional, ProxSettings};
use eigenflow::signal::dist;
use eigenflow::{Result, TotalVariation1d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..64)
        .map(|i| (i as f64 / 10.0).sin() + rng.random_range(-0.3..0.3))
        .collect();
    let tv = TotalVariation1d::new(v.len())?;
    let pd = ProxSettings {
        direct_1d: false,
        ..ProxSettings::default()
    };
    for step in [0.05, 0.2, 1.0] {
        let exact = prox_tv_1d_exact(&v, step);
        let sol = tv.prox(&v, step, &pd)?;
        let p: Vec<f64> = v.iter().zip(sol.u.iter()).map(|(a, b)| (a - b) / step).collect();
        let member = tv.membership(&sol.u, &p, 1e-7)?.member;
        println!(
            "step {step:<5} iterations {:>5} polished {:<5} gap {:.1e}  |pd - exact| {:.1e}  (v-u)/step in dJ(u): {member}",
            sol.iterations,
            sol.polished,
            sol.rel_gap,
            dist(&sol.u, &exact)
        );
    }
    Ok(())
}
