//! Two Moons clustered with the extinction profile of graph total variation,
//! from a random and from a 5% labeled initialization.

use eigenflow::cli::{run_clustering, ClusterConfig, Method};
use eigenflow::data::two_moons;
use eigenflow::Result;

fn main() -> Result<()> {
    let ps = two_moons(300, 0.015, 1)?;
    for method in [Method::ProfileRandom, Method::ProfileSemisup, Method::Fiedler] {
        let cfg = ClusterConfig {
            method,
            ..ClusterConfig::default()
        };
        let out = run_clustering(&cfg, &ps.points, Some(&ps.labels), 1)?;
        println!(
            "{method:?}: accuracy {:.3}  rayleigh {:?}  spread {:?}",
            out.accuracy.unwrap(),
            out.rayleigh,
            out.spread
        );
    }
    Ok(())
}
