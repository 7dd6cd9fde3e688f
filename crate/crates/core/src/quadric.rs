//! Quadric models `Re w_j = z^H A_j z` and their pointwise nondegeneracy
//! certificates.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, RMat};
use crate::report::{JacobianReport, INVERTIBILITY_TOL};

/// Relative tolerance on `max |A - A^H|` accepted by [`Quadric::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A quadric submanifold of `C^{n+d}` given by `d` Hermitian `n x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    n: usize,
    matrices: Vec<CMat>,
}

/// A real direction `b0` with `sum b0_j A_j` invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviDirection {
    pub b0: Vec<f64>,
    pub smallest_singular_value: f64,
}

impl Quadric {
    /// Validate and symmetrize the Levi-form matrices.
    ///
    /// Matrices within `HERMITIAN_TOL * (1 + |A_j|_max)` of Hermitian are
    /// replaced by their Hermitian part; anything further off is rejected.
    pub fn new(matrices: Vec<CMat>) -> Result<Self> {
        let n = match matrices.first() {
            Some(m) => m.nrows(),
            None => return Err(Error::DimensionMismatch("quadric needs at least one matrix".into())),
        };
        if n == 0 {
            return Err(Error::DimensionMismatch("matrices must be at least 1x1".into()));
        }
        let mut out = Vec::with_capacity(matrices.len());
        for (index, m) in matrices.into_iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {index} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::ensure_finite(m.iter().flat_map(|z| [z.re, z.im]), "matrix")?;
            let deviation = linalg::hermitian_deviation(&m);
            let tolerance = HERMITIAN_TOL * linalg::scale([linalg::max_norm(&m)]);
            if deviation > tolerance {
                return Err(Error::NonHermitianInput {
                    index,
                    deviation,
                    tolerance,
                });
            }
            out.push(linalg::hermitian_part(&m));
        }
        Ok(Self { n, matrices: out })
    }

    /// Convenience constructor from real symmetric matrices given row-major.
    pub fn from_real(n: usize, rows: &[&[f64]]) -> Result<Self> {
        let matrices = rows
            .iter()
            .map(|r| {
                if r.len() != n * n {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {} entries, got {}",
                        n * n,
                        r.len()
                    )));
                }
                Ok(RMat::from_row_slice(n, n, r).map(|x| Complex64::new(x, 0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(matrices)
    }

    /// CR dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Codimension.
    pub fn d(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn matrix(&self, j: usize) -> &CMat {
        &self.matrices[j]
    }

    /// `1 + max_j |A_j|_max`.
    pub fn scale(&self) -> f64 {
        linalg::scale(self.matrices.iter().map(linalg::max_norm))
    }

    /// `sum_j b_j A_j`.
    pub fn real_combination(&self, b: &[f64]) -> CMat {
        linalg::real_combination(b, &self.matrices)
    }

    /// `sum_j a_j A_j`.
    pub fn complex_combination(&self, a: &[Complex64]) -> CMat {
        linalg::combination(a, &self.matrices)
    }

    pub(crate) fn check_len(&self, what: &str, got: usize, expected: usize) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {expected}")))
        }
    }

    pub(crate) fn check_d(&self, what: &str, got: usize) -> Result<()> {
        self.check_len(what, got, self.d())
    }

    pub(crate) fn check_n(&self, what: &str, got: usize) -> Result<()> {
        self.check_len(what, got, self.n())
    }

    /// `sum_j b0_j A_j` together with its smallest singular value, or
    /// [`Error::SingularLeviDirection`] when it fails the invertibility test.
    pub fn levi_matrix(&self, b0: &[f64]) -> Result<(CMat, f64)> {
        self.check_d("b0", b0.len())?;
        let a = self.real_combination(b0);
        let sigma_min = linalg::smallest_singular_value(&a);
        let tolerance = INVERTIBILITY_TOL * linalg::scale([linalg::max_norm(&a)]);
        if sigma_min > tolerance {
            Ok((a, sigma_min))
        } else {
            Err(Error::SingularLeviDirection { sigma_min, tolerance })
        }
    }

    /// Randomized search for a direction `b0` (unit norm) with `sum b0_j A_j`
    /// invertible. Candidates are the `2d` signed axis directions followed by
    /// `trials` Gaussian directions; the candidate with the largest smallest
    /// singular value wins, earlier candidates winning ties.
    pub fn find_levi_direction(&self, trials: usize, seed: u64) -> Result<LeviDirection> {
        let d = self.d();
        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(2 * d + trials);
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[j] = sign;
                candidates.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while candidates.len() < 2 * d + trials {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                candidates.push(v.into_iter().map(|x| x / norm).collect());
            }
        }

        let mut best: Option<(Vec<f64>, f64)> = None;
        for b in &candidates {
            let sigma = linalg::smallest_singular_value(&self.real_combination(b));
            if best.as_ref().is_none_or(|(_, s)| sigma > *s) {
                best = Some((b.clone(), sigma));
            }
        }
        let (b0, sigma_min) = best.expect("at least 2d >= 2 candidates");
        let tolerance = INVERTIBILITY_TOL * self.scale();
        if sigma_min > tolerance {
            log::debug!("levi direction {b0:?} with sigma_min {sigma_min:.3e}");
            Ok(LeviDirection {
                b0,
                smallest_singular_value: sigma_min,
            })
        } else {
            Err(Error::NoDirectionFound {
                candidates: candidates.len(),
                best: b0,
                best_sigma_min: sigma_min,
            })
        }
    }

    /// The `n x d` matrix whose `j`-th column is `A_j V`.
    pub fn column_matrix(&self, v: &CVec) -> CMat {
        let cols: Vec<CVec> = self.matrices.iter().map(|a| a * v).collect();
        CMat::from_columns(&cols)
    }

    fn nondegeneracy_matrix(&self, b0: &[f64], v: &CVec) -> Result<CMat> {
        self.check_n("V", v.len())?;
        let (a, _) = self.levi_matrix(b0)?;
        let d0 = self.column_matrix(v);
        let solved = linalg::solve(&a, &d0)?;
        Ok(d0.adjoint() * solved)
    }

    /// D-nondegeneracy criterion: the real `d x d` matrix `Re(D0^H A^{-1} D0)`.
    pub fn d_nondegeneracy(&self, b0: &[f64], v: &CVec) -> Result<JacobianReport> {
        let m = self.nondegeneracy_matrix(b0, v)?;
        Ok(JacobianReport::from_real(m.map(|z| z.re), "real d x d"))
    }

    /// Full nondegeneracy criterion: the complex `d x d` matrix `D0^H A^{-1} D0`.
    pub fn full_nondegeneracy(&self, b0: &[f64], v: &CVec) -> Result<JacobianReport> {
        let m = self.nondegeneracy_matrix(b0, v)?;
        Ok(JacobianReport::from_complex(m, "complex d x d"))
    }

    /// Defining functions `rho_j = Re w_j - z^H A_j z`.
    pub fn evaluate_rho(&self, z: &CVec, w: &[Complex64]) -> Result<Vec<f64>> {
        self.check_n("z", z.len())?;
        self.check_d("w", w.len())?;
        Ok(self
            .matrices
            .iter()
            .zip(w)
            .map(|(a, wj)| wj.re - linalg::sesquilinear(z, a, z).re)
            .collect())
    }
}

/// Build a complex vector from real components.
pub fn real_vector(values: &[f64]) -> CVec {
    DVector::from_iterator(values.len(), values.iter().map(|x| Complex64::new(*x, 0.0)))
}
