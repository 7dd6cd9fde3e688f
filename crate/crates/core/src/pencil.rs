//! The quadratic matrix equation `P X^2 + A X + P^H = 0`, the Hermitian
//! factorization of the boundary pencil
//!
//! ```text
//! sum_j (a_j conj(z) + b_j + conj(a_j) z) A_j = (I - conj(z) X^H) B (I - z X),   |z| = 1,
//! ```
//!
//! and the Stein operator `psi(M) = M - X^H M X` with its inverse.
//!
//! Here `P = sum a_j A_j`, `A = sum b_j A_j` and `B = A + P X`. Lifts in the
//! pinned family use `b = b0 - a - conj(a) = b0 - 2 Re a`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::quadric::Quadric;
use crate::report::INVERTIBILITY_TOL;

/// Stop the fixed-point iteration once `|X_{k+1} - X_k|_F <= STEP_TOL * scale`.
pub const STEP_TOL: f64 = 1e-14;
pub const MAX_ITERATIONS: usize = 10_000;
/// Accepted solutions satisfy `|X|_2 <= 1 - NORM_MARGIN`.
pub const NORM_MARGIN: f64 = 1e-6;
/// `|P X^2 + A X + P^H|_F <= RESIDUAL_TOL * scale`.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Residual bound for the `n^2 x n^2` Stein and Sylvester solves.
pub const LINEAR_TOL: f64 = 1e-11;
/// Max-entry error of the boundary factorization identity.
pub const BOUNDARY_TOL: f64 = 1e-10;
pub const BOUNDARY_SAMPLES: usize = 64;
/// Series terms below `SERIES_TOL * scale` end the truncated Stein series.
pub const SERIES_TOL: f64 = 1e-16;

const NEWTON_STEPS: usize = 3;
const DIVERGENCE_BOUND: f64 = 1e8;

/// Contractive solution of the quadratic matrix equation with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSolution {
    pub x: CMat,
    pub iterations: usize,
    pub newton_steps: usize,
    pub residual: f64,
    pub spectral_norm: f64,
}

/// Everything derived from `(a, b0)` that the disc formulas need.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilFactorization {
    /// Complex pencil coefficients.
    pub a: Vec<Complex64>,
    /// Real direction fixing the lift at `z = 1`.
    pub b0: Vec<f64>,
    /// `b0 - 2 Re a`.
    pub b: Vec<f64>,
    /// Contractive solution, `|X|_2 < 1`.
    pub x: CMat,
    /// Hermitian factor `B = A + P X`.
    pub factor: CMat,
    /// `K_j = psi^{-1}(A_j)`.
    pub k: Vec<CMat>,
    /// `P = sum a_j A_j`.
    pub p: CMat,
    /// `A = sum b_j A_j`.
    pub levi: CMat,
    pub solution: QuadraticSolution,
}

/// `b0 - a - conj(a)`.
pub fn pinned_b(a: &[Complex64], b0: &[f64]) -> Vec<f64> {
    a.iter().zip(b0).map(|(aj, b0j)| b0j - 2.0 * aj.re).collect()
}

/// Operator `E -> B E + P E X` on column-stacked `n x n` matrices:
/// `I kron B + X^T kron P`. This is the derivative of `P X^2 + A X` at `X`.
pub fn sylvester_operator(factor: &CMat, p: &CMat, x: &CMat) -> CMat {
    let n = x.nrows();
    linalg::kron(&linalg::identity(n), factor) + linalg::kron(&x.transpose(), p)
}

fn quadratic_residual(p: &CMat, levi: &CMat, x: &CMat) -> CMat {
    p * x * x + levi * x + p.adjoint()
}

/// Solve `P X^2 + A X + P^H = 0` for `P = sum a_j A_j`, `A = sum b_j A_j`
/// with the coefficients given directly.
///
/// Fixed-point iteration `X <- -A^{-1}(P X^2 + P^H)` from `X = 0`, followed by
/// up to three Newton corrections.
pub fn solve_quadratic(q: &Quadric, a: &[Complex64], b: &[f64]) -> Result<QuadraticSolution> {
    q.check_d("a", a.len())?;
    let (levi, _) = q.levi_matrix(b)?;
    let p = q.complex_combination(a);
    let n = q.n();
    let scale = linalg::scale([linalg::max_norm(&levi), linalg::max_norm(&p)]);
    let lu = levi.clone().lu();
    let p_adj = p.adjoint();

    let mut x = CMat::zeros(n, n);
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    while iterations < MAX_ITERATIONS {
        let rhs = -(&p * &x * &x + &p_adj);
        let next = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularLinearSystem("fixed-point step".into()))?;
        last_step = linalg::frobenius(&(&next - &x));
        x = next;
        iterations += 1;
        if !last_step.is_finite() || linalg::max_norm(&x) > DIVERGENCE_BOUND {
            return Err(Error::NotConverged {
                iterations,
                last_step,
            });
        }
        if last_step <= STEP_TOL * scale {
            break;
        }
    }
    if last_step > STEP_TOL * scale {
        return Err(Error::NotConverged {
            iterations,
            last_step,
        });
    }

    let mut residual = linalg::frobenius(&quadratic_residual(&p, &levi, &x));
    let mut newton_steps = 0;
    for _ in 0..NEWTON_STEPS {
        if residual == 0.0 {
            break;
        }
        let factor = &levi + &p * &x;
        let jac = sylvester_operator(&factor, &p, &x);
        let rhs = -linalg::vectorize(&quadratic_residual(&p, &levi, &x));
        let Ok(delta) = linalg::solve_vec(&jac, &rhs) else {
            break;
        };
        let candidate = &x + linalg::unvectorize(&delta, n);
        let r = linalg::frobenius(&quadratic_residual(&p, &levi, &candidate));
        if r < residual {
            x = candidate;
            residual = r;
            newton_steps += 1;
        } else {
            break;
        }
    }
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NotConverged {
            iterations,
            last_step: residual,
        });
    }

    let spectral_norm = linalg::spectral_norm(&x);
    if spectral_norm > 1.0 - NORM_MARGIN {
        return Err(Error::NormTooLarge {
            norm: spectral_norm,
            limit: 1.0 - NORM_MARGIN,
        });
    }
    log::debug!(
        "quadratic equation solved: {iterations} fixed-point steps, {newton_steps} Newton steps, residual {residual:.3e}"
    );
    Ok(QuadraticSolution {
        x,
        iterations,
        newton_steps,
        residual,
        spectral_norm,
    })
}

/// Contractive solution for the pinned family, `b = b0 - a - conj(a)`.
pub fn solve_x(q: &Quadric, a: &[Complex64], b0: &[f64]) -> Result<QuadraticSolution> {
    q.check_d("a", a.len())?;
    q.check_d("b0", b0.len())?;
    solve_quadratic(q, a, &pinned_b(a, b0))
}

fn check_square_pair(m: &CMat, x: &CMat) -> Result<()> {
    if m.is_square() && x.is_square() && m.nrows() == x.nrows() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "Stein operator needs square matrices of equal size, got {}x{} and {}x{}",
            m.nrows(),
            m.ncols(),
            x.nrows(),
            x.ncols()
        )))
    }
}

fn check_contractive(x: &CMat) -> Result<()> {
    let radius = linalg::spectral_radius(x);
    if radius < 1.0 {
        Ok(())
    } else {
        Err(Error::SpectralRadiusTooLarge { radius })
    }
}

/// `psi(M) = M - X^H M X`.
pub fn stein_apply(m: &CMat, x: &CMat) -> Result<CMat> {
    check_square_pair(m, x)?;
    Ok(m - x.adjoint() * m * x)
}

/// `psi^{-1}(M)` from the dense `n^2 x n^2` system `(I - X^T kron X^H) vec S = vec M`.
pub fn stein_solve(m: &CMat, x: &CMat) -> Result<CMat> {
    check_square_pair(m, x)?;
    check_contractive(x)?;
    let n = x.nrows();
    let op = linalg::identity(n * n) - linalg::kron(&x.transpose(), &x.adjoint());
    let s = linalg::unvectorize(&linalg::solve_vec(&op, &linalg::vectorize(m))?, n);
    let residual = linalg::max_norm(&(stein_apply(&s, x)? - m));
    let scale = linalg::scale([linalg::max_norm(m), linalg::max_norm(x)]);
    if residual > LINEAR_TOL * scale {
        return Err(Error::SingularLinearSystem(format!("Stein residual {residual:.3e}")));
    }
    Ok(s)
}

/// `psi^{-1}(M) = sum_r (X^H)^r M X^r`, truncated once two consecutive terms
/// fall below `SERIES_TOL * scale`. Independent of [`stein_solve`]; used as
/// its oracle.
pub fn stein_solve_series(m: &CMat, x: &CMat) -> Result<CMat> {
    check_square_pair(m, x)?;
    check_contractive(x)?;
    let scale = linalg::scale([linalg::max_norm(m), linalg::max_norm(x)]);
    let x_adj = x.adjoint();
    let mut term = m.clone();
    let mut sum = m.clone();
    let mut small = 0;
    for iterations in 1..=10_000_000usize {
        term = &x_adj * term * x;
        sum += &term;
        if linalg::max_norm(&term) < SERIES_TOL * scale {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        if iterations % 1_000_000 == 0 {
            log::debug!("Stein series still running after {iterations} terms");
        }
    }
    Err(Error::NotConverged {
        iterations: 10_000_000,
        last_step: linalg::max_norm(&term),
    })
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    linalg::hermitian_part(m)
}

impl PencilFactorization {
    /// Solve for `X`, assemble `B = A + P X` and `K_j = psi^{-1}(A_j)`, and
    /// check the boundary identity at 64 roots of unity.
    pub fn new(q: &Quadric, a: &[Complex64], b0: &[f64]) -> Result<Self> {
        let solution = solve_x(q, a, b0)?;
        let b = pinned_b(a, b0);
        let p = q.complex_combination(a);
        let levi = q.real_combination(&b);
        let x = solution.x.clone();
        let factor = &levi + &p * &x;

        let sigma_min = linalg::smallest_singular_value(&factor);
        if sigma_min <= INVERTIBILITY_TOL * linalg::scale([linalg::max_norm(&factor)]) {
            return Err(Error::SingularFactor { sigma_min });
        }
        let k = q
            .matrices()
            .iter()
            .map(|aj| stein_solve(aj, &x))
            .collect::<Result<Vec<_>>>()?;

        let fact = Self {
            a: a.to_vec(),
            b0: b0.to_vec(),
            b,
            x,
            factor,
            k,
            p,
            levi,
            solution,
        };
        let residual = fact.boundary_identity_residual(q, BOUNDARY_SAMPLES);
        let tolerance = BOUNDARY_TOL * fact.scale();
        if residual > tolerance {
            return Err(Error::FactorizationResidual { residual, tolerance });
        }
        Ok(fact)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// `1 + max` of the max-norms of `A`, `P`, `B` and `X`.
    pub fn scale(&self) -> f64 {
        linalg::scale([
            linalg::max_norm(&self.levi),
            linalg::max_norm(&self.p),
            linalg::max_norm(&self.factor),
            linalg::max_norm(&self.x),
        ])
    }

    /// Real coefficient `c_j(z) = a_j conj(z) + b_j + conj(a_j) z` at `z`.
    pub fn coefficient(&self, j: usize, zeta: Complex64) -> Complex64 {
        self.a[j] * zeta.conj() + self.b[j] + self.a[j].conj() * zeta
    }

    /// `sum_j c_j(z) A_j`.
    pub fn pencil(&self, q: &Quadric, zeta: Complex64) -> CMat {
        let coeffs: Vec<Complex64> = (0..q.d()).map(|j| self.coefficient(j, zeta)).collect();
        q.complex_combination(&coeffs)
    }

    /// `(I - conj(z) X^H) B (I - z X)`.
    pub fn factored_pencil(&self, zeta: Complex64) -> CMat {
        let id = linalg::identity(self.n());
        let right = &id - &self.x * zeta;
        let left = &id - self.x.adjoint() * zeta.conj();
        left * &self.factor * right
    }

    /// Max-entry mismatch of the two sides of the factorization over
    /// `samples` roots of unity.
    pub fn boundary_identity_residual(&self, q: &Quadric, samples: usize) -> f64 {
        linalg::roots_of_unity(samples)
            .into_iter()
            .map(|z| linalg::max_norm(&(self.pencil(q, z) - self.factored_pencil(z))))
            .fold(0.0, f64::max)
    }

    pub fn factor_hermitian_deviation(&self) -> f64 {
        linalg::hermitian_deviation(&self.factor)
    }

    /// Frobenius residual of the quadratic equation at the stored `X`.
    pub fn quadratic_residual(&self) -> f64 {
        linalg::frobenius(&quadratic_residual(&self.p, &self.levi, &self.x))
    }

    /// `dX / d Re a_s` from the linear equation `B dX + P dX X = -A_s (I - X)^2`.
    pub fn dx_re(&self, q: &Quadric, s: usize) -> Result<CMat> {
        if s >= q.d() {
            return Err(Error::DimensionMismatch(format!("index {s} out of range for d = {}", q.d())));
        }
        let n = self.n();
        let id = linalg::identity(n);
        let one_minus_x = &id - &self.x;
        let rhs = -(q.matrix(s) * &one_minus_x * &one_minus_x);
        let op = sylvester_operator(&self.factor, &self.p, &self.x);
        let dx = linalg::unvectorize(&linalg::solve_vec(&op, &linalg::vectorize(&rhs))?, n);
        let residual = linalg::max_norm(&(&self.factor * &dx + &self.p * &dx * &self.x - &rhs));
        let scale = linalg::scale([self.scale(), linalg::max_norm(&rhs)]);
        if residual > LINEAR_TOL * scale {
            return Err(Error::SingularLinearSystem(format!("dX residual {residual:.3e}")));
        }
        Ok(dx)
    }

    /// `(I - X)^{-1} v`.
    pub fn resolvent_at_one(&self, v: &CVec) -> Result<CVec> {
        linalg::solve_vec(&(linalg::identity(self.n()) - &self.x), v)
    }
}

/// Convenience wrapper for [`PencilFactorization::new`].
pub fn factorize(q: &Quadric, a: &[Complex64], b0: &[f64]) -> Result<PencilFactorization> {
    PencilFactorization::new(q, a, b0)
}

/// Convenience wrapper for [`PencilFactorization::dx_re`].
pub fn solve_dx(q: &Quadric, a: &[Complex64], b0: &[f64], s: usize) -> Result<CMat> {
    PencilFactorization::new(q, a, b0)?.dx_re(q, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    /// Root of `a x^2 + (b0 - 2a) x + a = 0` (real a) inside the unit disc,
    /// from the quadratic formula.
    fn scalar_root(a: f64, b0: f64) -> f64 {
        let b = b0 - 2.0 * a;
        if a == 0.0 {
            return 0.0;
        }
        let disc = (b * b - 4.0 * a * a).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        if r1.abs() < 1.0 {
            r1
        } else {
            r2
        }
    }

    fn scalar() -> Quadric {
        Quadric::from_real(1, &[&[1.0]]).unwrap()
    }

    fn split() -> Quadric {
        Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]]).unwrap()
    }

    #[test]
    fn scalar_solutions() {
        let q = scalar();
        let sol = solve_x(&q, &[c(0.0, 0.0)], &[1.0]).unwrap();
        assert_eq!(sol.x[(0, 0)], c(0.0, 0.0));

        let sol = solve_x(&q, &[c(0.1, 0.0)], &[1.0]).unwrap();
        let expected = -4.0 + 15f64.sqrt();
        assert!((scalar_root(0.1, 1.0) - expected).abs() < 1e-15);
        assert!((sol.x[(0, 0)].re - expected).abs() < 1e-13);
        assert!(sol.x[(0, 0)].im.abs() < 1e-15);
        assert!((expected - (-0.1270166)).abs() < 1e-7);
    }

    #[test]
    fn decoupled_diagonal_solution() {
        let q = split();
        let sol = solve_x(&q, &[c(0.1, 0.0), c(0.0, 0.0)], &[1.0, 0.0]).unwrap();
        let x = -4.0 + 15f64.sqrt();
        let expected = CMat::identity(2, 2) * c(x, 0.0);
        assert!(linalg::max_norm(&(sol.x - expected)) < 1e-13);
    }

    #[test]
    fn rejects_large_coefficients() {
        let q = scalar();
        // a = 0.3 gives b = 0.4 < 2|a|: no contractive real root.
        let err = solve_x(&q, &[c(0.3, 0.0)], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. } | Error::NormTooLarge { .. }));
        let err = solve_x(&q, &[c(0.0, 0.0)], &[0.0]).unwrap_err();
        assert!(matches!(err, Error::SingularLeviDirection { .. }));
    }

    #[test]
    fn stein_examples() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 2.0), c(0.0, 1.0), c(3.0, 0.0), c(-1.0, 0.5)]);
        assert_eq!(stein_apply(&m, &CMat::zeros(2, 2)).unwrap(), m);

        let x = CMat::from_element(1, 1, c(0.3, 0.4));
        let one = CMat::from_element(1, 1, c(1.0, 0.0));
        let applied = stein_apply(&one, &x).unwrap();
        assert!((applied[(0, 0)] - c(1.0 - 0.25, 0.0)).norm() < 1e-15);

        assert_eq!(stein_solve(&one, &CMat::zeros(1, 1)).unwrap(), one);
        let xr = -4.0 + 15f64.sqrt();
        let s = stein_solve(&one, &CMat::from_element(1, 1, c(xr, 0.0))).unwrap();
        assert!((s[(0, 0)].re - 1.0 / (1.0 - xr * xr)).abs() < 1e-14);
        assert!((s[(0, 0)].re - 1.0163977).abs() < 1e-7);

        let err = stein_solve(&one, &CMat::from_element(1, 1, c(1.0, 0.0))).unwrap_err();
        assert!(matches!(err, Error::SpectralRadiusTooLarge { .. }));
        let err = stein_apply(&one, &CMat::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn stein_preserves_hermitian() {
        let h = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, -1.0), c(1.0, 1.0), c(-3.0, 0.0)]);
        let x = CMat::from_row_slice(2, 2, &[c(0.2, 0.1), c(-0.3, 0.0), c(0.05, 0.2), c(0.1, -0.1)]);
        assert!(linalg::hermitian_deviation(&stein_apply(&h, &x).unwrap()) < 1e-15);
        assert!(linalg::hermitian_deviation(&stein_solve(&h, &x).unwrap()) < 1e-14);
        let series = stein_solve_series(&h, &x).unwrap();
        assert!(linalg::max_norm(&(series - stein_solve(&h, &x).unwrap())) < 1e-13);
    }

    #[test]
    fn factorization_examples() {
        let q = scalar();
        let f = factorize(&q, &[c(0.0, 0.0)], &[1.0]).unwrap();
        assert_eq!(f.x[(0, 0)], c(0.0, 0.0));
        assert_eq!(f.factor[(0, 0)], c(1.0, 0.0));
        assert_eq!(f.k[0][(0, 0)], c(1.0, 0.0));

        let f = factorize(&q, &[c(0.1, 0.0)], &[1.0]).unwrap();
        let x = -4.0 + 15f64.sqrt();
        assert!((f.factor[(0, 0)].re - (0.8 + 0.1 * x)).abs() < 1e-14);
        assert!((f.factor[(0, 0)].re - 0.7872983).abs() < 1e-7);
        // at z = 1 the pencil is a + b + conj(a) = b0 = 1 = (1 - x)^2 B
        assert!(((1.0 - x).powi(2) * f.factor[(0, 0)].re - 1.0).abs() < 1e-14);

        let at_i = c(0.0, 1.0);
        assert!((f.pencil(&q, at_i)[(0, 0)] - c(0.8, 0.0)).norm() < 1e-15);
        assert!((f.factored_pencil(at_i)[(0, 0)] - c(0.8, 0.0)).norm() < 1e-14);
        assert!((f.factor[(0, 0)].re * (1.0 + x * x) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn derivative_at_origin() {
        let q = scalar();
        let dx = solve_dx(&q, &[c(0.0, 0.0)], &[1.0], 0).unwrap();
        assert_eq!(dx[(0, 0)], c(-1.0, 0.0));

        let q = split();
        let dx = solve_dx(&q, &[c(0.0, 0.0), c(0.0, 0.0)], &[1.0, 0.0], 1).unwrap();
        let expected = -q.matrix(1).clone();
        assert!(linalg::max_norm(&(dx - expected)) < 1e-15);
        assert!(solve_dx(&q, &[c(0.0, 0.0), c(0.0, 0.0)], &[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let q = scalar();
        let h = 1e-5;
        let dx = solve_dx(&q, &[c(0.1, 0.0)], &[1.0], 0).unwrap()[(0, 0)].re;
        let fd = (scalar_root(0.1 + h, 1.0) - scalar_root(0.1 - h, 1.0)) / (2.0 * h);
        assert!((dx - fd).abs() < 1e-6, "{dx} vs {fd}");
    }

    #[test]
    fn hermitian_part_examples() {
        let anti = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, -2.0)]);
        assert_eq!(hermitian_part(&anti), CMat::zeros(2, 2));
        let h = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert_eq!(hermitian_part(&h), h);
    }
}
