//! Explicit stationary discs `f = (h, g)` attached to a quadric, together
//! with their lifts `(h~, g~)` pinned to `(0, 0, 0, b0/2)` at `z = 1`.
//!
//! With `u = (I - X) V` and `w(z) = (I - z X)^{-1} u`:
//!
//! ```text
//! h(z)   = V - z w(z)
//! g_j(z) = V^H A_j V - 2 z V^H A_j w(z) + u^H K_j (u + 2 z X w(z)) + i y_j
//! h~(z)  = -z h(z)^H sum_j c_j(z) A_j           (on |z| = 1)
//! g~(z)  = (a + b z + conj(a) z^2) / 2
//! ```
//!
//! where `i y_j = V^H (X^H K_j - K_j X) V` makes `g(1) = 0`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::pencil::PencilFactorization;
use crate::quadric::Quadric;

/// Tolerance on `f(1) = 0` and `g~(1) = b0/2`, relative to the disc scale.
pub const PINNING_TOL: f64 = 1e-12;
/// Tolerance on `Re g_j - h^H A_j h` along the boundary.
pub const ATTACHMENT_TOL: f64 = 1e-10;
/// Negative Fourier modes of the lift must stay below this fraction of the
/// largest coefficient.
pub const FOURIER_REL_TOL: f64 = 1e-8;

const BOUNDARY_SLACK: f64 = 1e-12;

/// Parameters `(a, b0, V)` of a lift in the pinned family.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscParameters {
    pub a: Vec<Complex64>,
    pub b0: Vec<f64>,
    pub v: CVec,
}

impl DiscParameters {
    pub fn new(a: Vec<Complex64>, b0: Vec<f64>, v: CVec) -> Self {
        Self { a, b0, v }
    }
}

/// A stationary disc with its pencil data. Immutable after construction.
#[derive(Debug, Clone)]
pub struct StationaryDisc {
    quadric: Quadric,
    params: DiscParameters,
    fact: PencilFactorization,
    /// `i y_j`, purely imaginary.
    iy: Vec<Complex64>,
    /// `(I - X) V`.
    u: CVec,
}

/// Result of a boundary attachment scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttachmentCheck {
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Result of the Fourier test for holomorphic extension of the lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphyCheck {
    pub samples: usize,
    pub max_negative: f64,
    pub max_coefficient: f64,
    pub relative_tolerance: f64,
    pub pass: bool,
}

/// Discrete Fourier coefficients `c_k = (1/N) sum_m f(z_m) z_m^{-k}` with
/// `z_m = exp(2 pi i m / N)`. Entry `k` of the result holds index `k` for
/// `k < N/2` and index `k - N` otherwise.
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buffer = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let inv = 1.0 / n as f64;
    buffer.iter_mut().for_each(|z| *z *= inv);
    buffer
}

/// Signed mode index for position `k` of [`fourier_coefficients`].
pub fn mode_index(k: usize, n: usize) -> isize {
    if k < n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Coefficients per component, reordered to run from mode `-N/2` to `N/2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    pub samples: usize,
    pub modes: Vec<isize>,
    pub components: Vec<Vec<Complex64>>,
}

impl FourierTable {
    pub fn from_boundary_values(values: &[Vec<Complex64>]) -> Self {
        let samples = values.first().map_or(0, Vec::len);
        let half = samples / 2;
        let modes: Vec<isize> = (0..samples).map(|k| k as isize - half as isize).collect();
        let components = values
            .iter()
            .map(|comp| {
                let coeffs = fourier_coefficients(comp);
                (0..samples).map(|k| coeffs[(k + half) % samples]).collect()
            })
            .collect();
        Self {
            samples,
            modes,
            components,
        }
    }

    pub fn coefficient(&self, component: usize, mode: isize) -> Complex64 {
        let pos = (mode + (self.samples / 2) as isize) as usize;
        self.components[component][pos]
    }
}

fn check_power_of_two(samples: usize) -> Result<()> {
    if samples >= 128 && samples.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::PreconditionViolated(format!(
            "Fourier checks need a power of two >= 128 samples, got {samples}"
        )))
    }
}

/// Maximum modulus over strictly negative modes and over all modes, for the
/// given per-component boundary samples.
pub fn negative_mode_extent(values: &[Vec<Complex64>]) -> (f64, f64) {
    let mut max_negative: f64 = 0.0;
    let mut max_coefficient: f64 = 0.0;
    for comp in values {
        let n = comp.len();
        for (k, z) in fourier_coefficients(comp).iter().enumerate() {
            max_coefficient = max_coefficient.max(z.norm());
            if mode_index(k, n) < 0 {
                max_negative = max_negative.max(z.norm());
            }
        }
    }
    (max_negative, max_coefficient)
}

impl StationaryDisc {
    /// Factorize the pencil for `(a, b0)` and assemble the disc.
    pub fn new(q: &Quadric, params: DiscParameters) -> Result<Self> {
        q.check_n("V", params.v.len())?;
        let fact = PencilFactorization::new(q, &params.a, &params.b0)?;
        Self::from_factorization(q, params, fact)
    }

    pub(crate) fn from_factorization(
        q: &Quadric,
        params: DiscParameters,
        fact: PencilFactorization,
    ) -> Result<Self> {
        let v = &params.v;
        let x_adj = fact.x.adjoint();
        let iy: Vec<Complex64> = fact
            .k
            .iter()
            .map(|k| linalg::sesquilinear(v, &(&x_adj * k - k * &fact.x), v))
            .collect();
        let scale = linalg::scale([fact.scale(), linalg::max_norm_vec(v).powi(2)]);
        for (j, z) in iy.iter().enumerate() {
            if z.re.abs() > PINNING_TOL * scale {
                return Err(Error::InternalInconsistency(format!(
                    "i y_{j} = {z} is not purely imaginary"
                )));
            }
        }
        let iy = iy.into_iter().map(|z| Complex64::new(0.0, z.im)).collect();
        let u = (linalg::identity(q.n()) - &fact.x) * v;
        Ok(Self {
            quadric: q.clone(),
            params,
            fact,
            iy,
            u,
        })
    }

    pub fn quadric(&self) -> &Quadric {
        &self.quadric
    }

    pub fn params(&self) -> &DiscParameters {
        &self.params
    }

    pub fn factorization(&self) -> &PencilFactorization {
        &self.fact
    }

    /// The purely imaginary constants `i y_j`.
    pub fn imaginary_constants(&self) -> &[Complex64] {
        &self.iy
    }

    /// Scale used for relative tolerances: pencil scale and `|V|^2`.
    pub fn scale(&self) -> f64 {
        let v = linalg::max_norm_vec(&self.params.v);
        linalg::scale([self.fact.scale(), v, v * v])
    }

    fn resolvent_u(&self, zeta: Complex64) -> CVec {
        let m = linalg::identity(self.quadric.n()) - &self.fact.x * zeta;
        linalg::solve_vec(&m, &self.u).expect("I - zX is invertible for |z| <= 1 and |X| < 1")
    }

    fn eval_unchecked(&self, zeta: Complex64) -> (CVec, Vec<Complex64>) {
        let v = &self.params.v;
        let w = self.resolvent_u(zeta);
        let h = v - &w * zeta;
        let tail = &self.u + (&self.fact.x * &w) * (zeta * 2.0);
        let g = self
            .quadric
            .matrices()
            .iter()
            .zip(&self.fact.k)
            .zip(&self.iy)
            .map(|((a, k), iy)| {
                linalg::sesquilinear(v, a, v) - linalg::sesquilinear(v, a, &w) * zeta * 2.0
                    + linalg::sesquilinear(&self.u, k, &tail)
                    + iy
            })
            .collect();
        (h, g)
    }

    /// `(h(z), g(z))` for `|z| <= 1`.
    pub fn eval(&self, zeta: Complex64) -> Result<(CVec, Vec<Complex64>)> {
        let modulus = zeta.norm();
        if modulus > 1.0 + BOUNDARY_SLACK {
            return Err(Error::OutsideClosedDisc { modulus });
        }
        Ok(self.eval_unchecked(zeta))
    }

    /// `h` alone, for `|z| <= 1`.
    pub fn eval_h(&self, zeta: Complex64) -> Result<CVec> {
        let modulus = zeta.norm();
        if modulus > 1.0 + BOUNDARY_SLACK {
            return Err(Error::OutsideClosedDisc { modulus });
        }
        Ok(&self.params.v - self.resolvent_u(zeta) * zeta)
    }

    /// `g~(z) = (a + b z + conj(a) z^2) / 2`, a polynomial valid for any `z`.
    pub fn lift_g(&self, zeta: Complex64) -> Vec<Complex64> {
        self.fact
            .a
            .iter()
            .zip(&self.fact.b)
            .map(|(a, b)| (a + zeta * *b + a.conj() * zeta * zeta) * 0.5)
            .collect()
    }

    /// Lift components `(h~(z), g~(z))` on the unit circle; `h~` is returned
    /// as a column vector (the transpose of the row covector).
    pub fn eval_lift(&self, zeta: Complex64) -> Result<(CVec, Vec<Complex64>)> {
        let modulus = zeta.norm();
        if (modulus - 1.0).abs() > BOUNDARY_SLACK {
            return Err(Error::NotOnBoundary { modulus });
        }
        let h = self.eval_h(zeta)?;
        let pencil = self.fact.pencil(&self.quadric, zeta);
        let h_tilde = (pencil.transpose() * h.conjugate()) * (-zeta);
        Ok((h_tilde, self.lift_g(zeta)))
    }

    /// Largest deviation from the pinned value `(0, 0, 0, b0/2)` at `z = 1`.
    pub fn pinning_residual(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let (h, g) = self.eval_unchecked(one);
        let (h_tilde, g_tilde) = self.eval_lift(one).expect("z = 1 is on the boundary");
        let lift_err = g_tilde
            .iter()
            .zip(&self.params.b0)
            .map(|(gt, b0)| (gt - b0 * 0.5).norm())
            .fold(0.0, f64::max);
        [
            linalg::max_norm_vec(&h),
            g.iter().map(|z| z.norm()).fold(0.0, f64::max),
            linalg::max_norm_vec(&h_tilde),
            lift_err,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn is_pinned(&self) -> bool {
        self.pinning_residual() <= PINNING_TOL * self.scale()
    }

    /// Max over `samples` roots of unity and over `j` of `|Re g_j - h^H A_j h|`.
    pub fn verify_attachment(&self, samples: usize) -> Result<AttachmentCheck> {
        if samples < 8 {
            return Err(Error::PreconditionViolated(format!(
                "attachment check needs at least 8 samples, got {samples}"
            )));
        }
        let mut max_residual: f64 = 0.0;
        for zeta in linalg::roots_of_unity(samples) {
            let (h, g) = self.eval_unchecked(zeta);
            for (a, gj) in self.quadric.matrices().iter().zip(&g) {
                let r = (gj.re - linalg::sesquilinear(&h, a, &h).re).abs();
                max_residual = max_residual.max(r);
            }
        }
        let tolerance = ATTACHMENT_TOL * self.scale();
        Ok(AttachmentCheck {
            samples,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        })
    }

    /// Boundary samples of every lift component: `n` components of `h~`
    /// followed by `d` components of `g~`.
    pub fn lift_boundary_values(&self, samples: usize) -> Vec<Vec<Complex64>> {
        let (n, d) = (self.quadric.n(), self.quadric.d());
        let mut out = vec![Vec::with_capacity(samples); n + d];
        for zeta in linalg::roots_of_unity(samples) {
            let (ht, gt) = self.eval_lift(zeta).expect("roots of unity lie on the circle");
            for (k, z) in ht.iter().chain(gt.iter()).enumerate() {
                out[k].push(*z);
            }
        }
        out
    }

    /// Boundary samples of `h` (`n` components) followed by `g` (`d` components).
    pub fn disc_boundary_values(&self, samples: usize) -> Vec<Vec<Complex64>> {
        let (n, d) = (self.quadric.n(), self.quadric.d());
        let mut out = vec![Vec::with_capacity(samples); n + d];
        for zeta in linalg::roots_of_unity(samples) {
            let (h, g) = self.eval_unchecked(zeta);
            for (k, z) in h.iter().chain(g.iter()).enumerate() {
                out[k].push(*z);
            }
        }
        out
    }

    /// Fourier test that the lift extends holomorphically into the disc:
    /// all strictly negative modes of `(h~, g~)` must vanish relative to the
    /// largest coefficient.
    pub fn verify_lift_holomorphic(&self, samples: usize) -> Result<HolomorphyCheck> {
        check_power_of_two(samples)?;
        let (max_negative, max_coefficient) = negative_mode_extent(&self.lift_boundary_values(samples));
        Ok(HolomorphyCheck {
            samples,
            max_negative,
            max_coefficient,
            relative_tolerance: FOURIER_REL_TOL,
            pass: max_negative <= FOURIER_REL_TOL * max_coefficient,
        })
    }

    /// Fourier table of the lift on `samples` boundary points.
    pub fn lift_fourier_table(&self, samples: usize) -> Result<FourierTable> {
        check_power_of_two(samples)?;
        Ok(FourierTable::from_boundary_values(&self.lift_boundary_values(samples)))
    }

    /// `h'(z) = -(I - zX)^{-2} (I - X) V`.
    pub fn h_derivative(&self, zeta: Complex64) -> CVec {
        let m = linalg::identity(self.quadric.n()) - &self.fact.x * zeta;
        let w = linalg::solve_vec(&m, &self.u).expect("I - zX invertible");
        -linalg::solve_vec(&m, &w).expect("I - zX invertible")
    }
}

/// Convenience wrapper for [`StationaryDisc::new`].
pub fn build_disc(q: &Quadric, params: DiscParameters) -> Result<StationaryDisc> {
    StationaryDisc::new(q, params)
}

/// The `a = 0` family `((1 - z) V, 2 (1 - z) V^H A_j V)` with lift
/// `((1 - z) (sum b_j A_j)^T conj(V), z b / 2)`, evaluated directly.
pub fn special_family(q: &Quadric, b0: &[f64], v: &CVec, zeta: Complex64) -> [Vec<Complex64>; 4] {
    let one_minus = Complex64::new(1.0, 0.0) - zeta;
    let h: Vec<Complex64> = v.iter().map(|z| z * one_minus).collect();
    let g: Vec<Complex64> = q
        .matrices()
        .iter()
        .map(|a| linalg::sesquilinear(v, a, v) * one_minus * 2.0)
        .collect();
    let levi: CMat = q.real_combination(b0);
    let ht: Vec<Complex64> = (levi.transpose() * v.conjugate()).iter().map(|z| z * one_minus).collect();
    let gt: Vec<Complex64> = b0.iter().map(|b| zeta * *b * 0.5).collect();
    [h, g, ht, gt]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::quadric::real_vector;

    fn scalar() -> Quadric {
        Quadric::from_real(1, &[&[1.0]]).unwrap()
    }

    fn complex_quadric() -> Quadric {
        Quadric::new(vec![
            CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.5, 0.0)]),
            CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -0.7), c(0.0, 0.7), c(-1.0, 0.0)]),
        ])
        .unwrap()
    }

    fn disc(q: &Quadric, a: &[Complex64], b0: &[f64], v: CVec) -> StationaryDisc {
        StationaryDisc::new(q, DiscParameters::new(a.to_vec(), b0.to_vec(), v)).unwrap()
    }

    #[test]
    fn special_family_scalar() {
        let q = scalar();
        let f = disc(&q, &[c(0.0, 0.0)], &[1.0], real_vector(&[1.0]));
        for zeta in [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 1.0), c(-1.0, 0.0)] {
            let (h, g) = f.eval(zeta).unwrap();
            let one_minus = c(1.0, 0.0) - zeta;
            assert!((h[0] - one_minus).norm() < 1e-15);
            assert!((g[0] - one_minus * 2.0).norm() < 1e-15);
        }
        let (h, g) = f.eval(c(0.0, 1.0)).unwrap();
        assert!((h[0] - c(1.0, -1.0)).norm() < 1e-15);
        assert!((g[0] - c(2.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_disc_with_nonzero_a() {
        let q = scalar();
        let f = disc(&q, &[c(0.1, 0.0)], &[1.0], real_vector(&[1.0]));
        let x = -4.0 + 15f64.sqrt();
        let h0 = f.eval(c(0.0, 0.0)).unwrap().0[0];
        assert!((h0 - c(1.0, 0.0)).norm() < 1e-15);
        let hm1 = f.eval(c(-1.0, 0.0)).unwrap().0[0];
        let expected = 1.0 + (1.0 - x) / (1.0 + x);
        assert!((hm1.re - expected).abs() < 1e-13);
        assert!((expected - 2.2909944).abs() < 1e-7);
    }

    #[test]
    fn zero_vector_gives_zero_disc() {
        let q = complex_quadric();
        let f = disc(&q, &[c(0.05, 0.02), c(-0.03, 0.0)], &[1.0, 0.0], CVec::zeros(2));
        for zeta in linalg::roots_of_unity(8) {
            let (h, g) = f.eval(zeta).unwrap();
            assert_eq!(linalg::max_norm_vec(&h), 0.0);
            assert!(g.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn pinning_and_center() {
        let q = complex_quadric();
        let v = CVec::from_vec(vec![c(0.7, -0.2), c(0.1, 0.9)]);
        let f = disc(&q, &[c(0.05, 0.02), c(-0.03, 0.01)], &[1.0, 0.0], v.clone());
        assert!(f.is_pinned(), "pinning residual {}", f.pinning_residual());
        let (h0, g0) = f.eval(c(0.0, 0.0)).unwrap();
        assert!(linalg::max_norm_vec(&(h0 - &v)) < 1e-15);
        let one_minus_x = linalg::identity(2) - &f.factorization().x;
        for (j, k) in f.factorization().k.iter().enumerate() {
            let expected = linalg::sesquilinear(&v, &(k * &one_minus_x), &v) * 2.0;
            assert!((g0[j] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn domain_checks() {
        let q = scalar();
        let f = disc(&q, &[c(0.1, 0.0)], &[1.0], real_vector(&[1.0]));
        assert!(matches!(f.eval(c(1.5, 0.0)), Err(Error::OutsideClosedDisc { .. })));
        assert!(matches!(f.eval_lift(c(0.5, 0.0)), Err(Error::NotOnBoundary { .. })));
        assert!(f.verify_attachment(4).is_err());
        assert!(f.verify_lift_holomorphic(100).is_err());
        assert!(f.verify_lift_holomorphic(64).is_err());
    }

    #[test]
    fn lift_examples() {
        let q = scalar();
        let f = disc(&q, &[c(0.0, 0.0)], &[1.0], real_vector(&[1.0]));
        let (ht, gt) = f.eval_lift(c(1.0, 0.0)).unwrap();
        assert_eq!(ht[0].norm(), 0.0);
        assert_eq!(gt[0], c(0.5, 0.0));
        let (ht, _) = f.eval_lift(c(-1.0, 0.0)).unwrap();
        assert!((ht[0] - c(2.0, 0.0)).norm() < 1e-15);

        let f = disc(&q, &[c(0.1, 0.0)], &[1.0], real_vector(&[1.0]));
        let (_, gt) = f.eval_lift(c(0.0, 1.0)).unwrap();
        assert!((gt[0] - c(0.0, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn attachment_and_holomorphy() {
        let q = scalar();
        let f = disc(&q, &[c(0.0, 0.0)], &[1.0], real_vector(&[1.0]));
        assert!(f.verify_attachment(64).unwrap().max_residual <= 1e-14);
        assert!(f.verify_lift_holomorphic(128).unwrap().pass);

        let f = disc(&q, &[c(0.1, 0.0)], &[1.0], real_vector(&[1.0]));
        assert!(f.verify_attachment(256).unwrap().pass);
        assert!(f.verify_lift_holomorphic(512).unwrap().pass);

        let q = complex_quadric();
        let f = disc(
            &q,
            &[c(0.05, 0.02), c(-0.03, 0.01)],
            &[1.0, 0.0],
            CVec::from_vec(vec![c(0.7, -0.2), c(0.1, 0.9)]),
        );
        assert!(f.verify_attachment(256).unwrap().pass);
        assert!(f.verify_lift_holomorphic(512).unwrap().pass);
    }

    #[test]
    fn corrupted_constant_breaks_pinning_only() {
        let q = scalar();
        let mut f = disc(&q, &[c(0.1, 0.0)], &[1.0], real_vector(&[1.0]));
        f.iy[0] += c(0.0, 0.1);
        assert!(f.verify_attachment(64).unwrap().pass);
        assert!(!f.is_pinned());
    }

    #[test]
    fn wrong_transpose_is_detected() {
        let q = complex_quadric();
        let mut f = disc(
            &q,
            &[c(0.08, 0.05), c(-0.05, 0.04)],
            &[1.0, 0.0],
            CVec::from_vec(vec![c(0.7, -0.2), c(0.1, 0.9)]),
        );
        let x = f.fact.x.clone();
        assert!(linalg::max_norm(&(&x - x.transpose())) > 1e-3);
        f.fact.x = x.transpose();
        f.u = (linalg::identity(2) - &f.fact.x) * &f.params.v;
        let check = f.verify_lift_holomorphic(512).unwrap();
        assert!(!check.pass, "{check:?}");
    }

    #[test]
    fn fourier_table_layout() {
        let samples: Vec<Complex64> = linalg::roots_of_unity(8)
            .into_iter()
            .map(|z| z * 3.0 + z.conj() * 2.0 + 1.0)
            .collect();
        let table = FourierTable::from_boundary_values(&[samples]);
        assert_eq!(table.modes, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((table.coefficient(0, 1) - c(3.0, 0.0)).norm() < 1e-14);
        assert!((table.coefficient(0, -1) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((table.coefficient(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
    }
}
