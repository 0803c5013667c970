//! Linear baseline on Two Moons: threshold the Fiedler vector of the k-NN
//! graph Laplacian at zero.

use eigenflow::data::{clustering_accuracy, two_moons};
use eigenflow::graph::{build_knn_graph, fiedler_vector, KernelScale};
use eigenflow::Result;

fn main() -> Result<()> {
    for noise_var in [0.015, 0.02] {
        let ps = two_moons(300, noise_var, 0)?;
        let g = build_knn_graph(&ps.points, 10, KernelScale::Auto)?;
        let fv = fiedler_vector(&g)?;
        let labels: Vec<usize> = fv.vector.iter().map(|&x| usize::from(x < 0.0)).collect();
        println!(
            "noise {noise_var}: lambda_2 = {:.4e}  accuracy {:.3}",
            fv.eigenvalue,
            clustering_accuracy(&labels, &ps.labels)?
        );
    }
    Ok(())
}
