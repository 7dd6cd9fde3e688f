//! Levi direction search and the two nondegeneracy certificates.

use statdisc::linalg::{c, CMat};
use statdisc::quadric::real_vector;
use statdisc::Quadric;

fn main() -> statdisc::Result<()> {
    // A_1 = I, A_2 = diag(1, -1)
    let split = Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]])?;
    let dir = split.find_levi_direction(64, 0)?;
    println!("levi direction {:?} (sigma_min {:.3})", dir.b0, dir.smallest_singular_value);

    for v in [[1.0, 0.0], [1.0, 1.0]] {
        let v = real_vector(&v);
        let d = split.d_nondegeneracy(&dir.b0, &v)?;
        let full = split.full_nondegeneracy(&dir.b0, &v)?;
        println!(
            "V = {:?}: D-nondegenerate {} (sigma_min {:.3e}), fully nondegenerate {} (sigma_min {:.3e})",
            v.iter().map(|z| z.re).collect::<Vec<_>>(),
            d.invertible,
            d.sigma_min(),
            full.invertible,
            full.sigma_min()
        );
    }

    // A complex quadric: both forms are needed to see the imaginary parts
    let a1 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.5, 0.0)]);
    let a2 = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -0.7), c(0.0, 0.7), c(-1.0, 0.0)]);
    let q = Quadric::new(vec![a1, a2])?;
    let v = real_vector(&[1.0, -0.5]);
    let full = q.full_nondegeneracy(&[1.0, 0.0], &v)?;
    println!("complex quadric, full certificate singular values {:?}", full.singular_values);

    // rho vanishes on points of the quadric
    let z = statdisc::linalg::CVec::from_vec(vec![c(0.4, -0.1), c(0.2, 0.3)]);
    let w: Vec<_> = q.matrices().iter().map(|a| c(statdisc::linalg::sesquilinear(&z, a, &z).re, 1.5)).collect();
    println!("rho on the quadric: {:?}", q.evaluate_rho(&z, &w)?);
    Ok(())
}
