//! Block and minimal Naimark dilations of the qubit trine.

use std::f64::consts::PI;

use qprob::dilation::{dilation_residual, is_spectral, naimark_dilate};
use qprob::linalg::{c, CVector, Hermitian};
use qprob::qpm::Qpm;
use qprob::random::random_qpm;

fn trine() -> qprob::error::Result<Qpm> {
    let effects = (0..3)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / 3.0;
            let v = CVector::from_vec(vec![c((t / 2.0).cos(), 0.0), c((t / 2.0).sin(), 0.0)]);
            Hermitian::projector(&v).map(|p| p.scale(2.0 / 3.0).into_matrix())
        })
        .collect::<qprob::error::Result<Vec<_>>>()?;
    Qpm::from_effects(effects)
}

fn main() -> qprob::error::Result<()> {
    let e = trine()?;
    for minimal in [false, true] {
        let t = naimark_dilate(&e, minimal)?;
        let report = is_spectral(t.spectral.as_qpm());
        println!(
            "trine, minimal = {minimal}: env_dim = {}, spectral = {}, residual = {:.1e}",
            t.env_dim,
            report.spectral,
            dilation_residual(&e, &t.spectral, &t.isometry)?
        );
    }

    let mut t = naimark_dilate(&e, true)?;
    t.isometry[(0, 0)] += c(0.1, 0.0);
    println!("perturbed isometry: residual = {:.3}", t.residual(&e)?);

    let r = random_qpm(2, 4, 9)?;
    let full = naimark_dilate(&r, false)?;
    let small = naimark_dilate(&r, true)?;
    println!(
        "random d=2, m=4: block env_dim = {}, minimal env_dim = {}, residuals {:.1e} / {:.1e}",
        full.env_dim,
        small.env_dim,
        full.residual(&r)?,
        small.residual(&r)?
    );
    Ok(())
}
