use crate::linalg::{self, CMat, RMat};

/// Default relative threshold for "invertible": `sigma_min > INVERTIBILITY_TOL * scale`.
pub const INVERTIBILITY_TOL: f64 = 1e-10;
/// Threshold for matrices assembled from central differences, whose entries
/// carry errors around `1e-9` relative.
pub const FD_INVERTIBILITY_TOL: f64 = 1e-6;

/// Singular-value summary of a square criterion matrix.
///
/// Real criteria (the D-nondegeneracy matrix, the jet-map Jacobian) fill
/// `matrix` only. Complex criteria (full nondegeneracy, the center map) keep
/// the complex matrix in `complex_matrix`, put its real part in `matrix`, and
/// take singular values from the complex matrix.
///
/// `layout` records how complex coordinates were realified, when they were.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub matrix: RMat,
    pub complex_matrix: Option<CMat>,
    pub singular_values: Vec<f64>,
    pub invertible: bool,
    pub condition_number: f64,
    pub relative_tolerance: f64,
    pub threshold: f64,
    pub layout: &'static str,
    /// Entries come from central differences rather than closed forms.
    pub from_differences: bool,
}

impl JacobianReport {
    pub fn from_real(matrix: RMat, layout: &'static str) -> Self {
        let singular_values = linalg::singular_values_real(&matrix);
        let scale = linalg::scale([linalg::max_norm_real(&matrix)]);
        Self::assemble(matrix, None, singular_values, scale, layout)
    }

    pub fn from_complex(matrix: CMat, layout: &'static str) -> Self {
        let singular_values = linalg::singular_values(&matrix);
        let scale = linalg::scale([linalg::max_norm(&matrix)]);
        let real = matrix.map(|z| z.re);
        Self::assemble(real, Some(matrix), singular_values, scale, layout)
    }

    fn assemble(
        matrix: RMat,
        complex_matrix: Option<CMat>,
        singular_values: Vec<f64>,
        scale: f64,
        layout: &'static str,
    ) -> Self {
        let threshold = INVERTIBILITY_TOL * scale;
        let sigma_min = singular_values.last().copied().unwrap_or(0.0);
        Self {
            condition_number: linalg::condition_number(&singular_values),
            invertible: !singular_values.is_empty() && sigma_min > threshold,
            matrix,
            complex_matrix,
            singular_values,
            relative_tolerance: INVERTIBILITY_TOL,
            threshold,
            layout,
            from_differences: false,
        }
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Mark the entries as difference quotients and judge them against
    /// [`FD_INVERTIBILITY_TOL`].
    pub fn differenced(mut self) -> Self {
        self.from_differences = true;
        self.with_tolerance(FD_INVERTIBILITY_TOL)
    }

    /// Re-decide the verdict against a different relative tolerance.
    pub fn with_tolerance(mut self, relative: f64) -> Self {
        let scale = self.threshold / self.relative_tolerance;
        self.relative_tolerance = relative;
        self.threshold = relative * scale;
        self.invertible = !self.singular_values.is_empty() && self.sigma_min() > self.threshold;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn verdict_tracks_sigma_min() {
        let r = JacobianReport::from_real(RMat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), "real");
        assert!(!r.invertible);
        assert!((r.sigma_max() - 2.0).abs() < 1e-14);
        assert!(r.sigma_min() < 1e-15);
        assert!(r.condition_number > 1e15);

        let r = JacobianReport::from_real(RMat::identity(3, 3).scale(2.0), "real");
        assert!(r.invertible);
        assert_eq!(r.condition_number, 1.0);
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn complex_report_keeps_real_part() {
        let m = CMat::from_row_slice(1, 1, &[c(0.0, 2.0)]);
        let r = JacobianReport::from_complex(m, "complex");
        assert!(r.invertible);
        assert_eq!(r.matrix[(0, 0)], 0.0);
        assert_eq!(r.sigma_min(), 2.0);
    }

    #[test]
    fn stricter_tolerance_can_flip_verdict() {
        let r = JacobianReport::from_real(RMat::from_row_slice(1, 1, &[1e-6]), "real");
        assert!(r.invertible);
        assert!(!r.with_tolerance(1e-3).invertible);
    }
}
