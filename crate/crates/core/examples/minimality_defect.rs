//! Orbit spaces, stationary minimality, the defect witness and openness.

use statdisc::disc::{DiscParameters, StationaryDisc};
use statdisc::linalg::c;
use statdisc::minimality;
use statdisc::quadric::real_vector;
use statdisc::{PencilFactorization, Quadric};

fn main() -> statdisc::Result<()> {
    let split = Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]])?;
    let a = [c(0.1, 0.0), c(0.0, 0.0)];
    let b0 = [1.0, 0.0];
    let f = PencilFactorization::new(&split, &a, &b0)?;

    for v in [[1.0, 0.0], [1.0, 1.0]] {
        let v = real_vector(&v);
        let orbit = minimality::orbit_basis(&f.x, &v);
        let cert = minimality::is_stationary_minimal(&split, &f.x, &v)?;
        println!(
            "V = {:?}: orbit dimension {}, Gram eigenvalue {:.3e}, minimal {}",
            v.iter().map(|z| z.re).collect::<Vec<_>>(),
            orbit.real_dimension,
            cert.gram_min_eigenvalue,
            cert.minimal
        );
    }

    let disc = StationaryDisc::new(&split, DiscParameters::new(a.to_vec(), b0.to_vec(), real_vector(&[1.0, 0.0])))?;
    let report = minimality::is_defective(&disc)?;
    if let Some(w) = &report.witness {
        println!(
            "defective: lambda {:?}, boundary residual {:.2e}, verified {}",
            w.lambda, w.boundary_residual, w.verified
        );
    }

    let eq = minimality::minimality_equivalences(&split, &a, &b0, &real_vector(&[1.0, 1.0]))?;
    println!("equivalent statements agree: {}", eq.all_agree());

    let probe = minimality::openness_probe(&split, &a, &b0, &real_vector(&[1.0, 1.0]), 1e-3, 50, 11)?;
    println!("openness: {}/{} probes minimal", probe.minimal, probe.probes);
    Ok(())
}
