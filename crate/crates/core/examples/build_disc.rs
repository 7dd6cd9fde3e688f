//! Build a stationary disc with its lift and run the boundary checks.

use statdisc::disc::{self, DiscParameters, StationaryDisc};
use statdisc::linalg::{c, CMat, CVec};
use statdisc::{Complex64, Quadric};

fn show(zs: &[Complex64]) -> String {
    let parts: Vec<String> = zs.iter().map(|z| format!("{z:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> statdisc::Result<()> {
    let a1 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.5, 0.0)]);
    let a2 = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -0.7), c(0.0, 0.7), c(-1.0, 0.0)]);
    let q = Quadric::new(vec![a1, a2])?;
    let v = CVec::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2)]);
    let params = DiscParameters::new(vec![c(0.05, 0.02), c(-0.03, 0.01)], vec![1.0, 0.0], v.clone());
    let f = StationaryDisc::new(&q, params)?;

    let (h, g) = f.eval(c(0.0, 0.0))?;
    println!("f(0): h = {}, g = {}", show(h.as_slice()), show(&g));
    let (ht, gt) = f.eval_lift(c(1.0, 0.0))?;
    println!("lift at 1: |h~| = {:.2e}, g~ = {}", ht.norm(), show(&gt));
    println!("pinning residual {:.2e}", f.pinning_residual());

    let att = f.verify_attachment(256)?;
    println!("attachment over {} points: {:.2e} (pass {})", att.samples, att.max_residual, att.pass);
    let hol = f.verify_lift_holomorphic(512)?;
    println!(
        "largest negative Fourier mode {:.2e} vs largest mode {:.3} (pass {})",
        hol.max_negative, hol.max_coefficient, hol.pass
    );

    // at a = 0 the disc is the explicit special family
    let f0 = StationaryDisc::new(&q, DiscParameters::new(vec![c(0.0, 0.0); 2], vec![1.0, 0.0], v.clone()))?;
    let zeta = c(0.6, 0.3);
    let [h_s, g_s, _, _] = disc::special_family(&q, &[1.0, 0.0], &v, zeta);
    let (h0, g0) = f0.eval(zeta)?;
    let gap = h0.iter().zip(&h_s).chain(g0.iter().zip(&g_s)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("a = 0 disc vs special family at {zeta}: {gap:.2e}");
    Ok(())
}
