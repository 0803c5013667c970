//! Decomposition of a small two-blob image on a 4-neighbor grid graph.

use eigenflow::scheme::{run_scheme, SchemeParams};
use eigenflow::{GraphTotalVariation, Result, WeightedGraph};

fn main() -> Result<()> {
    let (rows, cols) = (16, 16);
    let img: Vec<f64> = (0..rows * cols)
        .map(|i| {
            let (y, x) = ((i / cols) as f64, (i % cols) as f64);
            if (x - 5.0).powi(2) + (y - 5.0).powi(2) <= 9.0 {
                1.0
            } else if (10.0..14.0).contains(&x) && (9.0..14.0).contains(&y) {
                -0.6
            } else {
                0.0
            }
        })
        .collect();
    let gtv = GraphTotalVariation::new(WeightedGraph::grid(rows, cols)?);
    let params = SchemeParams {
        max_atoms: 6,
        ..SchemeParams::default()
    };
    let dec = run_scheme(&gtv, &img, &params)?;
    for (i, atom) in dec.atoms.iter().enumerate() {
        println!(
            "atom {}: c = {:.4}  R = {:.6}  ||f_n+1|| / ||f|| = {:.4}",
            i + 1,
            atom.coefficient,
            atom.profile.rayleigh,
            atom.residual_norm_after / dec.input_norm
        );
    }
    Ok(())
}
