//! Densities on cells, coarsening, and the instance file format.

use qprob::discretize::{coarsen, discretize_scalar_density, pairing_map, Density, SpaceSpec};
use qprob::io::{parse_instance, serialize_instance, Instance, InstanceFile};
use qprob::qpm::metrics::rho_distance;
use qprob::qpm::OutcomeSpace;
use qprob::random::random_qpm_on;

fn weights(e: &qprob::qpm::Qpm) -> Vec<f64> {
    e.effects().iter().map(|p| p.matrix()[(0, 0)].re).collect()
}

fn main() -> qprob::error::Result<()> {
    let step = Density::Piecewise {
        breaks: vec![0.0, 0.5, 1.0],
        values: vec![2.0, 0.0],
    };
    let fine = discretize_scalar_density(&step, SpaceSpec::Interval(8))?;
    let coarse = coarsen(&fine, &pairing_map(8))?;
    println!("8 cells: {:?}", weights(&fine));
    println!("merged:  {:?}", weights(&coarse));
    println!("circle, 3 arcs: {:?}", weights(&discretize_scalar_density(&Density::Uniform, SpaceSpec::Circle(3))?));

    let space = OutcomeSpace::interval(8)?;
    let e = random_qpm_on(space.clone(), 2, 1)?;
    let f = random_qpm_on(space, 2, 2)?;
    let map = pairing_map(8);
    println!(
        "rho on 8 cells {:.6} >= rho on 4 cells {:.6}",
        rho_distance(&e, &f)?.value,
        rho_distance(&coarsen(&e, &map)?, &coarsen(&f, &map)?)?.value
    );

    let text = serialize_instance(&InstanceFile::with_seed(Instance::Qpm(coarse), 0))?;
    println!("{text}");
    let back = parse_instance(&text)?;
    println!("round trip exact: {}", serialize_instance(&back)? == text);
    match parse_instance(&text.replace("\"dim\"", "\"dimension\"")) {
        Err(err) => println!("renamed field rejected: {err}"),
        Ok(_) => println!("renamed field accepted"),
    }
    Ok(())
}
