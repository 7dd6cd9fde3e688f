//! Orbit spaces `O_{X,V} = span_R {V, XV, X^2 V, ...}`, stationary
//! minimality certificates and the defect test.
//!
//! The orbit is truncated at `X^{2n-1} V`: its real dimension is at most
//! `2n`, and once `X^{m+1} V` lies in the real span of the lower powers every
//! higher power does too, so the first `2n` powers already span it.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::disc::{self, StationaryDisc};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, RMat};
use crate::pencil::{self, PencilFactorization};
use crate::quadric::Quadric;
use crate::report::INVERTIBILITY_TOL;

/// Relative threshold for the Gram eigenvalue and for the orbit rank.
pub const MINIMALITY_TOL: f64 = 1e-10;
/// Bound on `|sum lambda_j A_j X^r V|` and on the witness lift.
pub const WITNESS_TOL: f64 = 1e-9;
pub const WITNESS_SAMPLES: usize = 64;
/// When the orbit singular value exceeds `sqrt(GRAY_FACTOR * threshold)`
/// the Gram matrix cannot legitimately be singular.
const GRAY_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBasis {
    /// `X^r V` for `r = 0 .. 2n - 1`.
    pub vectors: Vec<CVec>,
    pub real_dimension: usize,
}

/// `X^r V` for `r = 0 .. 2n - 1` and the real rank of their `[Re; Im]` stack.
pub fn orbit_basis(x: &CMat, v: &CVec) -> OrbitBasis {
    let n = v.len();
    let mut vectors = Vec::with_capacity(2 * n);
    let mut cur = v.clone();
    for _ in 0..2 * n {
        let next = x * &cur;
        vectors.push(cur);
        cur = next;
    }
    let stacked = linalg::realify_columns(&vectors);
    let threshold = MINIMALITY_TOL * linalg::scale([linalg::max_norm_real(&stacked)]);
    OrbitBasis {
        real_dimension: linalg::rank_real(&stacked, threshold),
        vectors,
    }
}

/// Both forms of the minimality test with a kernel witness when it fails.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityCertificate {
    /// Gram verdict: `gram` is positive definite.
    pub minimal: bool,
    /// `Re(V^H psi^{-1}(A_j A_s) V)_{j,s}`, symmetrized.
    pub gram: RMat,
    pub gram_min_eigenvalue: f64,
    pub gram_threshold: f64,
    /// Smallest singular value of the stacked real matrix with blocks
    /// `[Re; Im](A_s X^r V)`, `r < 2n`.
    pub rank_sigma_min: f64,
    pub rank_threshold: f64,
    /// Rank verdict: no real `lambda != 0` with `sum lambda_j A_j X^r V = 0`.
    pub rank_minimal: bool,
    /// The two verdicts differ only because the Gram eigenvalue scales like
    /// the square of the orbit singular value.
    pub borderline: bool,
    /// Unit real `lambda` spanning the near-kernel, present iff not minimal.
    pub kernel_witness: Option<Vec<f64>>,
    /// `max_r |sum lambda_j A_j X^r V|` for the witness.
    pub witness_residual: Option<f64>,
}

fn stacked_orbit_matrix(q: &Quadric, x: &CMat, v: &CVec) -> RMat {
    let orbit = orbit_basis(x, v);
    let d = q.d();
    let n = q.n();
    let rows = (2 * n * orbit.vectors.len()).max(d);
    let mut out = RMat::zeros(rows, d);
    for (r, xv) in orbit.vectors.iter().enumerate() {
        for (s, a) in q.matrices().iter().enumerate() {
            let col = a * xv;
            for k in 0..n {
                out[(2 * n * r + k, s)] = col[k].re;
                out[(2 * n * r + n + k, s)] = col[k].im;
            }
        }
    }
    out
}

/// Smallest singular value and its right singular vector, sign-normalized so
/// the first entry of magnitude above `1e-8` is positive.
fn smallest_right_singular(m: &RMat) -> (f64, Vec<f64>) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let mut w: Vec<f64> = vt.row(idx).iter().copied().collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = w.iter().find(|x| x.abs() > 1e-8) {
        if *first < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
    }
    (sigma, w)
}

/// Decide stationary minimality at `(X, V)` by the Gram criterion and, on
/// the stacked orbit matrix, by the rank criterion.
pub fn is_stationary_minimal(q: &Quadric, x: &CMat, v: &CVec) -> Result<MinimalityCertificate> {
    q.check_n("V", v.len())?;
    if x.nrows() != q.n() || x.ncols() != q.n() {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, expected {n}x{n}",
            x.nrows(),
            x.ncols(),
            n = q.n()
        )));
    }
    let d = q.d();
    let mut gram = RMat::zeros(d, d);
    for j in 0..d {
        for s in 0..d {
            let series = pencil::stein_solve(&(q.matrix(j) * q.matrix(s)), x)?;
            gram[(j, s)] = linalg::sesquilinear(v, &series, v).re;
        }
    }
    let gram = (&gram + gram.transpose()) * 0.5;
    let gram_min_eigenvalue = SymmetricEigen::new(gram.clone()).eigenvalues.min();
    let gram_threshold = MINIMALITY_TOL * linalg::scale([linalg::max_norm_real(&gram)]);
    let minimal = gram_min_eigenvalue > gram_threshold;

    let stacked = stacked_orbit_matrix(q, x, v);
    let (rank_sigma_min, witness) = smallest_right_singular(&stacked);
    let rank_threshold = INVERTIBILITY_TOL * linalg::scale([linalg::max_norm_real(&stacked)]);
    let rank_minimal = rank_sigma_min > rank_threshold;

    if minimal && !rank_minimal {
        return Err(Error::InternalInconsistency(format!(
            "Gram eigenvalue {gram_min_eigenvalue:.3e} is positive but the orbit matrix has \
             singular value {rank_sigma_min:.3e}"
        )));
    }
    if !minimal && rank_sigma_min * rank_sigma_min > GRAY_FACTOR * gram_threshold {
        return Err(Error::InternalInconsistency(format!(
            "Gram eigenvalue {gram_min_eigenvalue:.3e} is not positive but the orbit matrix has \
             singular value {rank_sigma_min:.3e}"
        )));
    }
    let borderline = minimal != rank_minimal;

    let (kernel_witness, witness_residual) = if minimal {
        (None, None)
    } else {
        let l = linalg::real_combination(&witness, q.matrices());
        let residual = orbit_basis(x, v)
            .vectors
            .iter()
            .map(|xv| linalg::max_norm_vec(&(&l * xv)))
            .fold(0.0, f64::max);
        (Some(witness), Some(residual))
    };

    Ok(MinimalityCertificate {
        minimal,
        gram,
        gram_min_eigenvalue,
        gram_threshold,
        rank_sigma_min,
        rank_threshold,
        rank_minimal,
        borderline,
        kernel_witness,
        witness_residual,
    })
}

/// Witness of a defect: the lift `(h, g, 0, z lambda / 2)`, which stays
/// holomorphic after division by `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectWitness {
    pub lambda: Vec<f64>,
    /// Max of `|h(z)^H sum lambda_j A_j|` over the boundary samples.
    pub boundary_residual: f64,
    /// Largest Fourier coefficient of `h^H sum lambda_j A_j` on the boundary.
    pub max_fourier_coefficient: f64,
    pub tolerance: f64,
    pub verified: bool,
}

impl DefectWitness {
    /// Cotangent components `(h~, g~)` of the witness lift at `z`.
    pub fn lift_at(&self, n: usize, zeta: Complex64) -> (CVec, Vec<Complex64>) {
        (CVec::zeros(n), self.lambda.iter().map(|l| zeta * *l * 0.5).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub defective: bool,
    pub certificate: MinimalityCertificate,
    pub witness: Option<DefectWitness>,
}

/// A disc is defective exactly when the quadric is not stationary minimal
/// at `(a, b0 - a - conj(a), h(0))`.
pub fn is_defective(disc: &StationaryDisc) -> Result<DefectReport> {
    let q = disc.quadric();
    let v = &disc.params().v;
    let certificate = is_stationary_minimal(q, &disc.factorization().x, v)?;
    let witness = match &certificate.kernel_witness {
        None => None,
        Some(lambda) => {
            let l = linalg::real_combination(lambda, q.matrices());
            let mut components = vec![Vec::with_capacity(2 * WITNESS_SAMPLES); q.n()];
            for zeta in linalg::roots_of_unity(2 * WITNESS_SAMPLES) {
                let h = disc.eval_h(zeta)?;
                let row = l.transpose() * h.conjugate();
                for (k, z) in row.iter().enumerate() {
                    components[k].push(*z);
                }
            }
            // every other sample of the 128-point grid is the 64-point grid
            let boundary_residual = components
                .iter()
                .flat_map(|c| c.iter().step_by(2))
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let max_fourier_coefficient = components
                .iter()
                .flat_map(|c| disc::fourier_coefficients(c))
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let tolerance = WITNESS_TOL * disc.scale();
            Some(DefectWitness {
                lambda: lambda.clone(),
                boundary_residual,
                max_fourier_coefficient,
                tolerance,
                verified: boundary_residual <= tolerance && max_fourier_coefficient <= tolerance,
            })
        }
    };
    Ok(DefectReport {
        defective: !certificate.minimal,
        certificate,
        witness,
    })
}

/// The four equivalent statements about a disc in the pinned family.
#[derive(Debug, Clone, PartialEq)]
pub struct Equivalences {
    pub nondefective: bool,
    /// Minimal at `h'(0) = -(I - X) V`.
    pub minimal_at_dh0: bool,
    /// Minimal at `h'(1) = -(I - X)^{-1} V`.
    pub minimal_at_dh1: bool,
    /// Minimal at `h(0) = V`.
    pub minimal_at_h0: bool,
    pub borderline: bool,
}

impl Equivalences {
    pub fn all_agree(&self) -> bool {
        let v = self.minimal_at_h0;
        self.nondefective == v && self.minimal_at_dh0 == v && self.minimal_at_dh1 == v
    }
}

pub fn minimality_equivalences(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<Equivalences> {
    let disc = StationaryDisc::new(q, disc::DiscParameters::new(a.to_vec(), b0.to_vec(), v.clone()))?;
    let x = &disc.factorization().x;
    let defect = is_defective(&disc)?;
    let dh0 = -(linalg::identity(q.n()) - x) * v;
    let dh1 = -disc.factorization().resolvent_at_one(v)?;
    let at_dh0 = is_stationary_minimal(q, x, &dh0)?;
    let at_dh1 = is_stationary_minimal(q, x, &dh1)?;
    let at_h0 = &defect.certificate;
    let borderline = at_dh0.borderline || at_dh1.borderline || at_h0.borderline;
    let eq = Equivalences {
        nondefective: !defect.defective,
        minimal_at_dh0: at_dh0.minimal,
        minimal_at_dh1: at_dh1.minimal,
        minimal_at_h0: at_h0.minimal,
        borderline,
    };
    if !eq.all_agree() && !borderline {
        return Err(Error::InternalInconsistency(format!("minimality equivalences disagree: {eq:?}")));
    }
    Ok(eq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpennessReport {
    pub probes: usize,
    pub minimal: usize,
    pub solver_failures: usize,
    /// `minimal / (probes - solver_failures)`, or 1 when nothing was solved.
    pub fraction: f64,
}

fn ball_sample(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let u: f64 = rand::Rng::random(rng);
    let r = radius * u.powf(1.0 / dim as f64);
    g.into_iter().map(|x| x * r / norm).collect()
}

/// Perturb `(a, b0)` uniformly in a ball of the given radius (in the `3d`
/// real coordinates `Re a, Im a, b0`) and count how many probes stay
/// minimal at the same `V`. Probe `i` draws from ChaCha stream `i` of `seed`.
pub fn openness_probe(
    q: &Quadric,
    a: &[Complex64],
    b0: &[f64],
    v: &CVec,
    radius: f64,
    probes: usize,
    seed: u64,
) -> Result<OpennessReport> {
    let start = PencilFactorization::new(q, a, b0)?;
    if !is_stationary_minimal(q, &start.x, v)?.minimal {
        return Err(Error::PreconditionViolated(
            "openness probe needs a stationary minimal starting point".into(),
        ));
    }
    let d = q.d();
    let outcomes: Vec<Option<bool>> = (0..probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let delta = ball_sample(&mut rng, 3 * d, radius);
            let a2: Vec<Complex64> = (0..d)
                .map(|j| a[j] + Complex64::new(delta[2 * j], delta[2 * j + 1]))
                .collect();
            let b2: Vec<f64> = (0..d).map(|j| b0[j] + delta[2 * d + j]).collect();
            let fact = PencilFactorization::new(q, &a2, &b2).ok()?;
            is_stationary_minimal(q, &fact.x, v).ok().map(|c| c.minimal)
        })
        .collect();
    let solver_failures = outcomes.iter().filter(|o| o.is_none()).count();
    let minimal = outcomes.iter().filter(|o| **o == Some(true)).count();
    let solved = probes - solver_failures;
    Ok(OpennessReport {
        probes,
        minimal,
        solver_failures,
        fraction: if solved == 0 { 1.0 } else { minimal as f64 / solved as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::DiscParameters;
    use crate::linalg::c;
    use crate::quadric::real_vector;

    fn scalar() -> Quadric {
        Quadric::from_real(1, &[&[1.0]]).unwrap()
    }

    fn split() -> Quadric {
        Quadric::from_real(2, &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, -1.0]]).unwrap()
    }

    #[test]
    fn orbit_examples() {
        let v = CVec::from_vec(vec![c(0.3, 1.0), c(-2.0, 0.5)]);
        assert_eq!(orbit_basis(&CMat::zeros(2, 2), &v).real_dimension, 1);
        let x = CMat::from_element(1, 1, c(-0.4, 0.0));
        assert_eq!(orbit_basis(&x, &real_vector(&[1.0])).real_dimension, 1);
        let mut nil = CMat::zeros(2, 2);
        nil[(0, 1)] = c(0.5, 0.0);
        let orbit = orbit_basis(&nil, &real_vector(&[0.0, 1.0]));
        assert_eq!(orbit.real_dimension, 2);
        assert_eq!(orbit.vectors[1], real_vector(&[0.5, 0.0]));
        assert_eq!(orbit.vectors[2], real_vector(&[0.0, 0.0]));
        // a complex scalar rotates the orbit off the real line
        let x = CMat::from_element(1, 1, c(0.0, 0.5));
        assert_eq!(orbit_basis(&x, &real_vector(&[1.0])).real_dimension, 2);
    }

    #[test]
    fn minimality_examples() {
        let cert = is_stationary_minimal(&scalar(), &CMat::zeros(1, 1), &real_vector(&[1.0])).unwrap();
        assert!(cert.minimal && cert.rank_minimal && !cert.borderline);
        assert_eq!(cert.gram[(0, 0)], 1.0);
        assert!(cert.kernel_witness.is_none());

        let q = split();
        let cert = is_stationary_minimal(&q, &CMat::zeros(2, 2), &real_vector(&[1.0, 0.0])).unwrap();
        assert!(!cert.minimal && !cert.rank_minimal);
        assert_eq!(cert.gram, RMat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let w = cert.kernel_witness.unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w[0] - h).abs() < 1e-12 && (w[1] + h).abs() < 1e-12, "{w:?}");
        assert!(cert.witness_residual.unwrap() < 1e-12);

        let cert = is_stationary_minimal(&q, &CMat::zeros(2, 2), &real_vector(&[1.0, 1.0])).unwrap();
        assert!(cert.minimal);
        assert_eq!(cert.gram, RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    fn disc(q: &Quadric, a: &[Complex64], b0: &[f64], v: CVec) -> StationaryDisc {
        StationaryDisc::new(q, DiscParameters::new(a.to_vec(), b0.to_vec(), v)).unwrap()
    }

    #[test]
    fn defect_examples() {
        let q = split();
        let f = disc(&q, &[c(0.0, 0.0); 2], &[1.0, 0.0], real_vector(&[1.0, 0.0]));
        let r = is_defective(&f).unwrap();
        assert!(r.defective);
        let w = r.witness.unwrap();
        assert!(w.verified && w.boundary_residual <= 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.lambda[0] - h).abs() < 1e-12 && (w.lambda[1] + h).abs() < 1e-12);
        let (ht, gt) = w.lift_at(2, c(0.0, 1.0));
        assert_eq!(ht, CVec::zeros(2));
        assert!((gt[0] - c(0.0, h / 2.0)).norm() < 1e-12);

        let f = disc(&scalar(), &[c(0.0, 0.0)], &[1.0], real_vector(&[1.0]));
        let r = is_defective(&f).unwrap();
        assert!(!r.defective && r.witness.is_none());

        let f = disc(&q, &[c(0.1, 0.0), c(0.0, 0.0)], &[1.0, 0.0], real_vector(&[1.0, 0.0]));
        let r = is_defective(&f).unwrap();
        assert!(r.defective && r.witness.unwrap().verified);
    }

    #[test]
    fn equivalence_examples() {
        let q = split();
        let eq = minimality_equivalences(&q, &[c(0.0, 0.0); 2], &[1.0, 0.0], &real_vector(&[1.0, 1.0])).unwrap();
        assert!(eq.all_agree() && eq.minimal_at_h0);

        let eq = minimality_equivalences(&scalar(), &[c(0.1, 0.0)], &[1.0], &real_vector(&[1.0])).unwrap();
        assert!(eq.all_agree() && eq.minimal_at_h0 && eq.nondefective);

        let eq = minimality_equivalences(&q, &[c(0.1, 0.0), c(0.0, 0.0)], &[1.0, 0.0], &real_vector(&[1.0, 0.0]))
            .unwrap();
        assert!(eq.all_agree() && !eq.minimal_at_h0 && !eq.nondefective);
    }

    #[test]
    fn openness_examples() {
        let q = scalar();
        let r = openness_probe(&q, &[c(0.0, 0.0)], &[1.0], &real_vector(&[1.0]), 1e-3, 50, 5).unwrap();
        assert_eq!((r.fraction, r.solver_failures, r.probes), (1.0, 0, 50));
        let r = openness_probe(&q, &[c(0.0, 0.0)], &[1.0], &real_vector(&[1.0]), 0.0, 10, 5).unwrap();
        assert_eq!(r.fraction, 1.0);
        let q = split();
        let err = openness_probe(&q, &[c(0.0, 0.0); 2], &[1.0, 0.0], &real_vector(&[1.0, 0.0]), 1e-3, 5, 1);
        assert!(matches!(err, Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn openness_is_deterministic() {
        let q = split();
        let run = || openness_probe(&q, &[c(0.02, 0.01); 2], &[1.0, 0.0], &real_vector(&[1.0, 0.5]), 1e-2, 20, 9);
        assert_eq!(run().unwrap(), run().unwrap());
    }
}
