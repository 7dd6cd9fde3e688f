//! Solve `P X^2 + A X + P^H = 0`, factor the Hermitian pencil and use the
//! Stein operator built on `X`.

use statdisc::linalg::{self, c, CMat};
use statdisc::pencil::{self, PencilFactorization};
use statdisc::Quadric;

fn main() -> statdisc::Result<()> {
    let scalar = Quadric::from_real(1, &[&[1.0]])?;
    let f = PencilFactorization::new(&scalar, &[c(0.1, 0.0)], &[1.0])?;
    println!(
        "n = 1, a = 0.1: X = {:.10} (closed form {:.10}), B = {:.10}",
        f.x[(0, 0)].re,
        -4.0 + 15f64.sqrt(),
        f.factor[(0, 0)].re
    );

    let a1 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.5, 0.0)]);
    let a2 = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -0.7), c(0.0, 0.7), c(-1.0, 0.0)]);
    let q = Quadric::new(vec![a1, a2])?;
    let a = [c(0.05, 0.02), c(-0.03, 0.01)];
    let f = PencilFactorization::new(&q, &a, &[1.0, 0.0])?;
    println!(
        "n = 2: {} fixed-point steps + {} Newton steps, residual {:.2e}, |X|_2 = {:.4}",
        f.solution.iterations, f.solution.newton_steps, f.solution.residual, f.solution.spectral_norm
    );
    println!(
        "boundary identity error {:.2e}, B Hermitian to {:.2e}",
        f.boundary_identity_residual(&q, 64),
        f.factor_hermitian_deviation()
    );

    let m = q.matrix(0) * q.matrix(1);
    let direct = pencil::stein_solve(&m, &f.x)?;
    let series = pencil::stein_solve_series(&m, &f.x)?;
    let back = pencil::stein_apply(&direct, &f.x)?;
    println!(
        "Stein inverse: direct vs series {:.2e}, psi(psi^-1 M) - M {:.2e}",
        linalg::max_norm(&(&direct - &series)),
        linalg::max_norm(&(&back - &m))
    );

    let dx = f.dx_re(&q, 0)?;
    println!("dX/dRe a_1 =\n{dx:.6}");
    Ok(())
}
