//! The Bures-type distance bracketed by ρ/2 and √ρ.

use qprob::dilation::{bures_distance, classical_bures, naimark_continuity_check, BuresConfig};
use qprob::linalg::{real_diagonal, real_matrix};
use qprob::qpm::metrics::rho_distance;
use qprob::qpm::Qpm;
use qprob::random::random_qpm;

fn report(name: &str, e1: &Qpm, e2: &Qpm, config: &BuresConfig) -> qprob::error::Result<()> {
    let rho = rho_distance(e1, e2)?.value;
    let b = bures_distance(e1, e2, config)?;
    println!(
        "{name:>14}: rho/2 = {:.6}  upper = {:.6}  sqrt(rho) = {:.6}  dual gap = {:.1e}  converged = {}  bracket = {}",
        b.lower,
        b.upper,
        rho.sqrt(),
        b.upper - b.dual_lower,
        b.converged,
        naimark_continuity_check(e1, e2, &b)?
    );
    Ok(())
}

fn main() -> qprob::error::Result<()> {
    let config = BuresConfig::default();

    let p = [0.5, 0.5];
    let q = [1.0, 0.0];
    report("classical", &Qpm::classical(&p)?, &Qpm::classical(&q)?, &config)?;
    println!("{:>14}  closed form {:.8}", "", classical_bures(&p, &q));

    let z = Qpm::from_effects(vec![real_diagonal(&[1.0, 0.0]), real_diagonal(&[0.0, 1.0])])?;
    let x = Qpm::from_effects(vec![
        real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        real_matrix(2, 2, &[0.5, -0.5, -0.5, 0.5]),
    ])?;
    report("Z vs X", &z, &x, &config)?;
    report("point masses", &Qpm::classical(&[1.0, 0.0])?, &Qpm::classical(&[0.0, 1.0])?, &config)?;

    for seed in 0..3 {
        let e1 = random_qpm(3, 3, seed)?;
        let e2 = random_qpm(3, 3, seed + 50)?;
        report(&format!("random {seed}"), &e1, &e2, &config)?;
    }

    let e1 = random_qpm(2, 3, 1)?;
    let e2 = random_qpm(2, 3, 2)?;
    for r in [1, 2] {
        let b = bures_distance(&e1, &e2, &BuresConfig { env_multiplicity: r, ..config.clone() })?;
        println!("env multiplicity {r}: upper = {:.12}", b.upper);
    }
    Ok(())
}
