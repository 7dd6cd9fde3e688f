//! The 1-jet of the lift at `z = 1` and the Jacobian of the normalized jet map.

use statdisc::disc::{DiscParameters, StationaryDisc};
use statdisc::jets;
use statdisc::linalg::{c, CMat, CVec};
use statdisc::quadric::real_vector;
use statdisc::{Complex64, Quadric};

fn show(zs: &[Complex64]) -> String {
    let parts: Vec<String> = zs.iter().map(|z| format!("{z:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> statdisc::Result<()> {
    let a1 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.5, 0.0)]);
    let a2 = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -0.7), c(0.0, 0.7), c(-1.0, 0.0)]);
    let q = Quadric::new(vec![a1, a2])?;
    let a = vec![c(0.05, 0.02), c(-0.03, 0.01)];
    let v = CVec::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2)]);
    let f = StationaryDisc::new(&q, DiscParameters::new(a.clone(), vec![1.0, 0.0], v.clone()))?;

    let exact = jets::jet1(&f);
    let numeric = jets::jet1_numeric(&f, 1e-4)?;
    println!("h'(1) = {}", show(exact.h.as_slice()));
    println!("g'(1) = {}", show(&exact.g));
    println!("closed form vs radial differences: {:.2e}", exact.relative_distance(&numeric));

    let analytic = jets::jet_map_jacobian(&q, &a, &[1.0, 0.0], &v)?;
    let fd = jets::jet_map_jacobian_fd(&q, &a, &[1.0, 0.0], &v)?;
    println!("jet Jacobian singular values {:?} (finite differences {:?})", analytic.singular_values, fd.singular_values);

    // the curated degenerate point and a generic one
    let split = Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]])?;
    for v in [[1.0, 0.0], [1.0, 1.0]] {
        let r = jets::jet_map_jacobian(&split, &[c(0.0, 0.0); 2], &[1.0, 0.0], &real_vector(&v))?;
        println!("split quadric, V = {v:?}: sigma_min {:.3e}, invertible {}", r.sigma_min(), r.invertible);
    }
    Ok(())
}
