//! Three Moons: every flow subgradient with a Rayleigh quotient above 0.9 is
//! tried as a three-way clustering function.

use eigenflow::cli::{run_clustering, ClusterConfig, Method};
use eigenflow::data::three_moons;
use eigenflow::Result;

fn main() -> Result<()> {
    let ps = three_moons(250, 0.015, 2)?;
    let cfg = ClusterConfig {
        method: Method::HighRayleigh,
        ..ClusterConfig::default()
    };
    let out = run_clustering(&cfg, &ps.points, Some(&ps.labels), 2)?;
    for c in &out.candidates {
        println!("step {:>5}  R = {:.6}  accuracy {:?}", c.step, c.rayleigh, c.accuracy);
    }
    println!("chosen accuracy {:.3}", out.accuracy.unwrap());
    if let Some(d) = out.last_candidate_to_profile {
        println!("last candidate vs extinction profile: {d:.2e}");
    }
    Ok(())
}
