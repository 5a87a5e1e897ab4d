//! Channels modulo an input measure: equivalence, canonical forms, the BW
//! pairing and the fixed-isometry dilation.

use qprob::channels::{Channel, InputSpace};
use qprob::linalg::{basis_vector, ONE};
use qprob::modmu::{
    bw_gap_mod_mu, bw_pairing, canonical_family, canonicalize_mod_mu, equiv_mod_mu, naimark_mod_mu, ucp_equiv_mod_mu,
    InputMeasure, WeightFunction,
};
use qprob::qpm::TestFunction;
use qprob::random::{random_channel, random_qpm};

fn main() -> qprob::error::Result<()> {
    let inputs = InputSpace::finite(3)?;
    let mu = InputMeasure::new(inputs.clone(), vec![0.5, 0.5, 0.0])?;
    let e = random_channel(2, 3, 3, 1)?;
    let mut family = e.family().to_vec();
    family[2] = random_qpm(2, 3, 99)?;
    let f = Channel::new(inputs.clone(), family)?;

    let eq = equiv_mod_mu(&e, &f, &mu, 1e-9)?;
    println!("differ only at the null input: equivalent = {}, ucp path = {}", eq.equivalent, ucp_equiv_mod_mu(&e, &f, &mu, 1e-9)?);
    let uniform = InputMeasure::uniform(inputs.clone());
    let eq = equiv_mod_mu(&e, &f, &uniform, 1e-9)?;
    println!("under the uniform measure: equivalent = {}, witness (atom, input) = {:?}", eq.equivalent, eq.witness);

    let ce = canonicalize_mod_mu(&e, &mu)?;
    let cf = canonicalize_mod_mu(&f, &mu)?;
    println!("canonical forms differ by {:.1e}", ce.max_entry_difference(&cf)?);
    println!("BW gap over the canonical family: {:.1e}", bw_gap_mod_mu(&ce, &cf, &canonical_family(&ce))?);

    let one = TestFunction::constant(e.space().clone(), ONE);
    let omega = WeightFunction::constant(inputs, ONE);
    let xi = basis_vector(2, 0);
    println!("<Phi(1), 1 (x) xi xi*> = {}", bw_pairing(&ce, &one, &omega, &xi, &xi)?);

    let dil = naimark_mod_mu(&ce)?;
    println!(
        "mod-mu dilation: V is {}x{}, residual on support {:.1e}, all spectral = {}",
        dil.isometry.nrows(),
        dil.isometry.ncols(),
        dil.residual(&ce)?,
        dil.all_spectral()
    );
    Ok(())
}
