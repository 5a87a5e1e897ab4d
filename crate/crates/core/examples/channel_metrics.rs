//! ρ̃ between channels, by the per-input sup and by the operator-norm path.

use qprob::channels::{apply_channel_ucp, channel_opnorm_gap, psw_gap, rho_tilde, Channel, InputSpace};
use qprob::linalg::{basis_projector, real_diagonal, real_matrix};
use qprob::qpm::{Qpm, TestFunction};
use qprob::random::random_channel;

fn main() -> qprob::error::Result<()> {
    let z = Qpm::from_effects(vec![real_diagonal(&[1.0, 0.0]), real_diagonal(&[0.0, 1.0])])?;
    let x = Qpm::from_effects(vec![
        real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        real_matrix(2, 2, &[0.5, -0.5, -0.5, 0.5]),
    ])?;
    let inputs = InputSpace::new(vec!["x1".into(), "x2".into(), "x3".into()])?;
    let e = Channel::constant(inputs.clone(), z.clone());
    let f = Channel::new(inputs, vec![z.clone(), x, z.clone()])?;

    let r = rho_tilde(&e, &f)?;
    println!(
        "differs at one input: rho~ = {:.8} at {}, opnorm path = {:.8}",
        r.value,
        e.inputs().points()[r.argmax],
        channel_opnorm_gap(&e, &f)?
    );
    println!("psw gap against |0><0|: {:.3}", psw_gap(&e, &f, &[basis_projector(2, 0)])?);

    let one = TestFunction::constant(z.space().clone(), qprob::linalg::ONE);
    let unital = apply_channel_ucp(&f, &one)?
        .iter()
        .all(|m| (m - qprob::linalg::CMatrix::identity(2, 2)).norm() < 1e-12);
    println!("Phi_F(1) = I at every input: {unital}");

    for seed in 0..4 {
        let a = random_channel(2, 3, 4, seed)?;
        let b = random_channel(2, 3, 4, seed + 1000)?;
        let r = rho_tilde(&a, &b)?;
        let dual = channel_opnorm_gap(&a, &b)?;
        println!("seed {seed}: rho~ = {:.12}, opnorm = {:.12}, |diff| = {:.1e}", r.value, dual, (r.value - dual).abs());
    }
    Ok(())
}
