//! The center evaluation map `(a, V) -> f(0)` and its Jacobian.

use statdisc::disc::{DiscParameters, StationaryDisc};
use statdisc::jets;
use statdisc::linalg::c;
use statdisc::quadric::real_vector;
use statdisc::Quadric;

fn main() -> statdisc::Result<()> {
    let scalar = Quadric::from_real(1, &[&[1.0]])?;
    let f = StationaryDisc::new(&scalar, DiscParameters::new(vec![c(0.1, 0.0)], vec![1.0], real_vector(&[1.0])))?;
    let (h0, g0) = jets::center_map(&f);
    println!("n = d = 1, a = 0.1: f(0) = ({}, {:.7})", h0[0], g0[0]);

    let split = Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]])?;
    let zero = [c(0.0, 0.0); 2];
    for v in [[1.0, 0.0], [1.0, 1.0]] {
        let v = real_vector(&v);
        let analytic = jets::center_jacobian(&split, &zero, &[1.0, 0.0], &v)?;
        let full = jets::center_full_jacobian_fd(&split, &zero, &[1.0, 0.0], &v)?;
        println!(
            "V = {:?}: complex block sigma_min {:.3e} ({}), full real Jacobian sigma_min {:.3e}",
            v.iter().map(|z| z.re).collect::<Vec<_>>(),
            analytic.sigma_min(),
            if analytic.invertible { "invertible" } else { "singular" },
            full.sigma_min()
        );
    }

    let a = [c(0.04, -0.02), c(0.01, 0.03)];
    let v = real_vector(&[0.8, 0.6]);
    let analytic = jets::center_jacobian(&split, &a, &[1.0, 0.0], &v)?;
    let fd = jets::center_jacobian_fd(&split, &a, &[1.0, 0.0], &v)?;
    println!("a != 0: singular values {:?} vs finite differences {:?}", analytic.singular_values, fd.singular_values);
    Ok(())
}
