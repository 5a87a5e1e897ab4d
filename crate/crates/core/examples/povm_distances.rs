//! ρ, δ and total variation for a few measures on a qubit.

use qprob::linalg::{real_diagonal, real_matrix};
use qprob::qpm::metrics::{delta_distance, rho_distance, total_variation};
use qprob::qpm::{Qpm, TestFunction};
use qprob::random::random_qpm;

fn main() -> qprob::error::Result<()> {
    let z = Qpm::from_effects(vec![real_diagonal(&[1.0, 0.0]), real_diagonal(&[0.0, 1.0])])?;
    let x = Qpm::from_effects(vec![
        real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        real_matrix(2, 2, &[0.5, -0.5, -0.5, 0.5]),
    ])?;

    let rho = rho_distance(&z, &x)?;
    let delta = delta_distance(&z, &x)?;
    println!("Z vs X: rho = {:.8} (signs {:?}), delta = {:.8} (set {:?})", rho.value, rho.signs, delta.value, delta.subset);
    println!("        2 delta - rho = {:.1e}", 2.0 * delta.value - rho.value);

    let flip = TestFunction::real(z.space().clone(), &[1.0, -1.0])?;
    println!("phi_Z(1, -1) = {}", z.apply_ucp(&flip)?);

    for seed in 0..3 {
        let e = random_qpm(3, 4, seed)?;
        let f = random_qpm(3, 4, seed + 100)?;
        let report = e.validate();
        println!(
            "seed {seed}: valid = {}, sum residual {:.1e}, ||E||_TV = {:.12}, rho = {:.6}, 2 delta = {:.6}",
            report.ok,
            report.sum_residual,
            total_variation(&e)?,
            rho_distance(&e, &f)?.value,
            2.0 * delta_distance(&e, &f)?.value,
        );
    }
    Ok(())
}
