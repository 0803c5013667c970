//! Flow of the step signal (1, 1, -1, -1) under 1D total variation. The
//! signal is itself an eigenfunction, so it shrinks linearly and vanishes at
//! t = 2 with profile (1/2, 1/2, -1/2, -1/2).

use eigenflow::flow::{extract_profile, run_flow, FlowParams};
use eigenflow::{Result, TotalVariation1d};

fn main() -> Result<()> {
    let f = [1.0, 1.0, -1.0, -1.0];
    let tv = TotalVariation1d::new(f.len())?;
    let params = FlowParams {
        delta: Some(0.25),
        ..FlowParams::default()
    };
    let trace = run_flow(&tv, &f, &params)?;
    for s in &trace.steps {
        println!("t = {:.2}  u = {:?}", s.t, s.u.values());
    }
    let profile = extract_profile(&tv, &trace)?;
    println!("extinction time {}", trace.extinction_time().unwrap());
    println!("profile {:?}  R = {:.12}", profile.p_star.values(), profile.rayleigh);
    Ok(())
}
