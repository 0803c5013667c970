//! Greedy decomposition of a 1D signal into total-variation eigenfunctions.

use eigenflow::scheme::{parseval_report, run_scheme, verify_norm_identity, SchemeParams};
use eigenflow::{Result, TotalVariation1d};

fn main() -> Result<()> {
    let f: Vec<f64> = (0..48)
        .map(|i| match i {
            0..=11 => 2.0,
            12..=19 => -1.0,
            20..=35 => 0.5,
            _ => -1.5,
        })
        .collect();
    let tv = TotalVariation1d::new(f.len())?;
    let params = SchemeParams {
        max_atoms: 20,
        ..SchemeParams::default()
    };
    let dec = run_scheme(&tv, &f, &params)?;
    let ratios = parseval_report(&dec.input, &dec)?;
    println!(
        "{:>3} {:>12} {:>12} {:>12} {:>9}",
        "n", "c_n", "||p_n||", "||f_n+1||", "parseval"
    );
    for (i, (atom, r)) in dec.atoms.iter().zip(&ratios).enumerate() {
        println!(
            "{:>3} {:>12.6} {:>12.6} {:>12.3e} {:>9.6}",
            i + 1,
            atom.coefficient,
            atom.profile.eigenvalue,
            atom.residual_norm_after,
            r
        );
    }
    println!("stop: {:?}", dec.stop);
    println!("max norm-identity error {:.2e}", verify_norm_identity(&dec).max_error);
    Ok(())
}
