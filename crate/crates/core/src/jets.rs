//! The 1-jet map at `z = 1`, the center evaluation map at `z = 0`, and the
//! Jacobian criteria deciding when each is a local diffeomorphism in `(a, V)`.
//!
//! The 1-jet map is used in its normalized chart
//!
//! ```text
//! (a, V) -> (V, V^H (I - X^H) K_j (I - X) V, Im a)
//! ```
//!
//! so its differential is block triangular and invertibility reduces to the
//! real `d x d` block `d/d Re a_s` of the middle component.
//!
//! Complex coordinates are realified as interleaved `(Re, Im)` pairs per
//! component wherever a real Jacobian over complex variables is formed.

use num_complex::Complex64;

use crate::disc::StationaryDisc;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, RMat};
use crate::minimality::{self, MinimalityCertificate};
use crate::pencil::{self, PencilFactorization};
use crate::quadric::Quadric;
use crate::report::JacobianReport;

/// Relative step for central differences: `h = FD_STEP * (1 + |parameter|)`.
pub const FD_STEP: f64 = 1e-5;
/// Agreement expected between analytic and finite-difference jets.
pub const JET_REL_TOL: f64 = 1e-6;

pub const REAL_LAYOUT: &str = "real d x d: rows j (component), columns s (Re a_s)";
pub const COMPLEX_LAYOUT: &str = "complex d x d: rows j (component), columns s (Re a_s)";
pub const FULL_LAYOUT: &str =
    "real 2N x 2N: inputs (Re a_1, Im a_1, .., Re V_1, Im V_1, ..), outputs interleaved per component";

/// Derivative data of a lift at `z = 1`: `(h'(1), g'(1), g~'(1))`.
/// `h~'(1)` is not part of the jet; it equals `h'(1)^H sum_j b0_j A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    pub h: CVec,
    pub g: Vec<Complex64>,
    pub g_tilde: Vec<Complex64>,
}

impl Jet1 {
    fn flatten(&self) -> Vec<Complex64> {
        self.h.iter().chain(&self.g).chain(&self.g_tilde).copied().collect()
    }

    /// Max componentwise distance divided by `1 + max |component|` of `self`.
    pub fn relative_distance(&self, other: &Jet1) -> f64 {
        let a = self.flatten();
        let b = other.flatten();
        let scale = linalg::scale(a.iter().map(|z| z.norm()));
        a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }
}

/// Closed-form 1-jet: `(-(I - X)^{-1} V, -2 V^H K_j V, (b0 - 2i Im a) / 2)`.
pub fn jet1(disc: &StationaryDisc) -> Jet1 {
    let fact = disc.factorization();
    let v = &disc.params().v;
    let h = -fact.resolvent_at_one(v).expect("I - X invertible for |X| < 1");
    let g = fact.k.iter().map(|k| linalg::sesquilinear(v, k, v) * -2.0).collect();
    let g_tilde = fact
        .b0
        .iter()
        .zip(&fact.a)
        .map(|(b0, a)| Complex64::new(0.5 * b0, -a.im))
        .collect();
    Jet1 { h, g, g_tilde }
}

/// Radial one-sided differences of `(h, g, g~)` along `z = 1 - t` for
/// `t in {step, 2 step}`, combined by Richardson extrapolation.
///
/// Agreement with [`jet1`] to `JET_REL_TOL` is expected for
/// `1e-8 <= step <= 1e-3`; larger steps are accepted (up to 0.25) to study the
/// truncation error.
pub fn jet1_numeric(disc: &StationaryDisc, step: f64) -> Result<Jet1> {
    if !(step > 0.0 && step <= 0.25) {
        return Err(Error::PreconditionViolated(format!("step {step} outside (0, 0.25]")));
    }
    let sample = |t: f64| -> Result<Jet1> {
        let zeta = Complex64::new(1.0 - t, 0.0);
        let (h, g) = disc.eval(zeta)?;
        Ok(Jet1 {
            h,
            g,
            g_tilde: disc.lift_g(zeta),
        })
    };
    let at_one = sample(0.0)?;
    let near = sample(step)?;
    let far = sample(2.0 * step)?;
    let diff = |f0: &Complex64, f1: &Complex64, f2: &Complex64| {
        let d1 = (f0 - f1) / step;
        let d2 = (f0 - f2) / (2.0 * step);
        d1 * 2.0 - d2
    };
    let combine = |a: &[Complex64], b: &[Complex64], c: &[Complex64]| -> Vec<Complex64> {
        a.iter().zip(b).zip(c).map(|((x, y), z)| diff(x, y, z)).collect()
    };
    Ok(Jet1 {
        h: CVec::from_vec(combine(at_one.h.as_slice(), near.h.as_slice(), far.h.as_slice())),
        g: combine(&at_one.g, &near.g, &far.g),
        g_tilde: combine(&at_one.g_tilde, &near.g_tilde, &far.g_tilde),
    })
}

/// Middle block of the normalized 1-jet map, `V^H (I - X^H) K_j (I - X) V` (real).
pub fn quadratic_block(fact: &PencilFactorization, v: &CVec) -> Vec<f64> {
    let u = (linalg::identity(fact.n()) - &fact.x) * v;
    fact.k.iter().map(|k| linalg::sesquilinear(&u, k, &u).re).collect()
}

/// The normalized 1-jet map `(V, V^H (I - X^H) K_j (I - X) V, Im a)`.
pub fn normalized_jet(
    q: &Quadric,
    a: &[Complex64],
    b0: &[f64],
    v: &CVec,
) -> Result<(CVec, Vec<f64>, Vec<f64>)> {
    q.check_n("V", v.len())?;
    let fact = PencilFactorization::new(q, a, b0)?;
    Ok((v.clone(), quadratic_block(&fact, v), a.iter().map(|z| z.im).collect()))
}

/// `(I - X^H)^2 psi^{-1}(K_j dX_s)` for a given `dX_s = dX / d Re a_s`.
fn derivative_core(fact: &PencilFactorization, j: usize, dx: &CMat) -> Result<CMat> {
    let one_minus_adj = linalg::identity(fact.n()) - fact.x.adjoint();
    let inner = pencil::stein_solve(&(&fact.k[j] * dx), &fact.x)?;
    Ok(&one_minus_adj * &one_minus_adj * inner)
}

/// `(I - X^H)^2 psi^{-1}(K_j X_{Re a_s})`, whose value at `a = 0` is
/// `-A_j (sum b0_k A_k)^{-1} A_s`.
pub fn quadratic_block_derivative_core(
    q: &Quadric,
    fact: &PencilFactorization,
    j: usize,
    s: usize,
) -> Result<CMat> {
    if j >= q.d() {
        return Err(Error::DimensionMismatch(format!("index {j} out of range for d = {}", q.d())));
    }
    derivative_core(fact, j, &fact.dx_re(q, s)?)
}

/// `d/d Re a_s [(I - X^H) K_j (I - X)] = -2 ((I - X^H)^2 psi^{-1}(K_j X_{Re a_s}))_H`.
pub fn quadratic_block_derivative(
    q: &Quadric,
    fact: &PencilFactorization,
    j: usize,
    s: usize,
) -> Result<CMat> {
    let core = quadratic_block_derivative_core(q, fact, j, s)?;
    Ok(linalg::hermitian_part(&core) * Complex64::new(-2.0, 0.0))
}

fn is_origin(a: &[Complex64]) -> bool {
    a.iter().all(|z| *z == Complex64::new(0.0, 0.0))
}

/// Real `d x d` matrix `(d/d Re a_s V^H (I - X^H) K_j (I - X) V)_{j,s}`.
///
/// At `a = 0` it is `2 Re(V^H A_j (sum b0_k A_k)^{-1} A_s V)`; elsewhere it
/// is assembled from [`quadratic_block_derivative`].
pub fn jet_map_jacobian(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    let d = q.d();
    if is_origin(a) {
        let (levi, _) = q.levi_matrix(b0)?;
        let solved: Vec<CVec> = q
            .matrices()
            .iter()
            .map(|aj| linalg::solve_vec(&levi, &(aj * v)))
            .collect::<Result<_>>()?;
        let m = RMat::from_fn(d, d, |j, s| 2.0 * linalg::sesquilinear(v, q.matrix(j), &solved[s]).re);
        return Ok(JacobianReport::from_real(m, REAL_LAYOUT));
    }
    let fact = PencilFactorization::new(q, a, b0)?;
    let dxs: Vec<CMat> = (0..d).map(|s| fact.dx_re(q, s)).collect::<Result<_>>()?;
    let mut m = RMat::zeros(d, d);
    for j in 0..d {
        for (s, dx) in dxs.iter().enumerate() {
            let core = derivative_core(&fact, j, dx)?;
            let t = linalg::hermitian_part(&core) * Complex64::new(-2.0, 0.0);
            m[(j, s)] = linalg::sesquilinear(v, &t, v).re;
        }
    }
    Ok(JacobianReport::from_real(m, REAL_LAYOUT))
}

fn fd_step(x: f64) -> f64 {
    FD_STEP * (1.0 + x.abs())
}

fn shifted(a: &[Complex64], s: usize, delta: Complex64) -> Vec<Complex64> {
    let mut out = a.to_vec();
    out[s] += delta;
    out
}

/// Central-difference version of [`jet_map_jacobian`].
pub fn jet_map_jacobian_fd(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    let d = q.d();
    let mut m = RMat::zeros(d, d);
    for s in 0..d {
        let h = fd_step(a[s].re);
        let plus = PencilFactorization::new(q, &shifted(a, s, Complex64::new(h, 0.0)), b0)?;
        let minus = PencilFactorization::new(q, &shifted(a, s, Complex64::new(-h, 0.0)), b0)?;
        let qp = quadratic_block(&plus, v);
        let qm = quadratic_block(&minus, v);
        for j in 0..d {
            m[(j, s)] = (qp[j] - qm[j]) / (2.0 * h);
        }
    }
    Ok(JacobianReport::from_real(m, REAL_LAYOUT).differenced())
}

fn pack_params(a: &[Complex64], v: &CVec) -> Vec<f64> {
    a.iter().chain(v.iter()).flat_map(|z| [z.re, z.im]).collect()
}

fn unpack_params(x: &[f64], d: usize, n: usize) -> (Vec<Complex64>, CVec) {
    let z: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    (z[..d].to_vec(), CVec::from_vec(z[d..d + n].to_vec()))
}

fn full_jacobian_fd<F>(q: &Quadric, a: &[Complex64], v: &CVec, map: F) -> Result<JacobianReport>
where
    F: Fn(&[Complex64], &CVec) -> Result<Vec<f64>>,
{
    let (n, d) = (q.n(), q.d());
    let x0 = pack_params(a, v);
    let dim = x0.len();
    let mut m = RMat::zeros(dim, dim);
    for col in 0..dim {
        let h = fd_step(x0[col]);
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[col] += h;
        xm[col] -= h;
        let (ap, vp) = unpack_params(&xp, d, n);
        let (am, vm) = unpack_params(&xm, d, n);
        let fp = map(&ap, &vp)?;
        let fm = map(&am, &vm)?;
        if fp.len() != dim {
            return Err(Error::InternalInconsistency(format!(
                "map has {} real outputs for {dim} inputs",
                fp.len()
            )));
        }
        for row in 0..dim {
            m[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(JacobianReport::from_real(m, FULL_LAYOUT).differenced())
}

/// Full realified Jacobian of the normalized 1-jet map by central
/// differences. Its verdict must agree with [`jet_map_jacobian`].
pub fn jet_map_full_jacobian_fd(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    full_jacobian_fd(q, a, v, |a, v| {
        let (v, block, im) = normalized_jet(q, a, b0, v)?;
        let mut out: Vec<f64> = v.iter().flat_map(|z| [z.re, z.im]).collect();
        out.extend(block);
        out.extend(im);
        Ok(out)
    })
}

/// The center evaluation map `(a, V) -> f(0) = (V, 2 V^H K_j (I - X) V)`.
pub fn center_map(disc: &StationaryDisc) -> (CVec, Vec<Complex64>) {
    let v = &disc.params().v;
    (v.clone(), center_block(disc.factorization(), v).into_iter().map(|z| z * 2.0).collect())
}

/// `V^H K_j (I - X) V`.
pub fn center_block(fact: &PencilFactorization, v: &CVec) -> Vec<Complex64> {
    let u = (linalg::identity(fact.n()) - &fact.x) * v;
    fact.k.iter().map(|k| linalg::sesquilinear(v, k, &u)).collect()
}

/// Complex `d x d` matrix `(d/d Re a_s V^H K_j (I - X) V)_{j,s}`.
///
/// At `a = 0` this is `V^H A_j^H (sum b0_k A_k)^{-1} A_s V` in closed form;
/// elsewhere central differences are used.
pub fn center_jacobian(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    if is_origin(a) {
        let d = q.d();
        let (levi, _) = q.levi_matrix(b0)?;
        let solved: Vec<CVec> = q
            .matrices()
            .iter()
            .map(|aj| linalg::solve_vec(&levi, &(aj * v)))
            .collect::<Result<_>>()?;
        let m = CMat::from_fn(d, d, |j, s| linalg::sesquilinear(v, &q.matrix(j).adjoint(), &solved[s]));
        return Ok(JacobianReport::from_complex(m, COMPLEX_LAYOUT));
    }
    center_jacobian_fd(q, a, b0, v)
}

/// Central-difference version of [`center_jacobian`].
pub fn center_jacobian_fd(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    let d = q.d();
    let mut m = CMat::zeros(d, d);
    for s in 0..d {
        let h = fd_step(a[s].re);
        let plus = PencilFactorization::new(q, &shifted(a, s, Complex64::new(h, 0.0)), b0)?;
        let minus = PencilFactorization::new(q, &shifted(a, s, Complex64::new(-h, 0.0)), b0)?;
        let cp = center_block(&plus, v);
        let cm = center_block(&minus, v);
        for j in 0..d {
            m[(j, s)] = (cp[j] - cm[j]) / (2.0 * h);
        }
    }
    Ok(JacobianReport::from_complex(m, COMPLEX_LAYOUT).differenced())
}

/// Full realified Jacobian of the center map by central differences.
pub fn center_full_jacobian_fd(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<JacobianReport> {
    q.check_n("V", v.len())?;
    q.check_d("a", a.len())?;
    full_jacobian_fd(q, a, v, |a, v| {
        let fact = PencilFactorization::new(q, a, b0)?;
        let mut out: Vec<f64> = v.iter().flat_map(|z| [z.re, z.im]).collect();
        out.extend(center_block(&fact, v).into_iter().flat_map(|z| [2.0 * z.re, 2.0 * z.im]));
        Ok(out)
    })
}

/// Cross-check of the necessity statement: an invertible 1-jet Jacobian at
/// `(a, V)` forces stationary minimality at `(a, b0 - a - conj(a), V)`.
#[derive(Debug, Clone)]
pub struct NecessityVerdict {
    pub jet: JacobianReport,
    pub minimality: MinimalityCertificate,
    /// Set when the jet Jacobian is invertible while the orbit data carries
    /// a real kernel. Both sides are compared on the same linear scale
    /// (singular values), see [`MinimalityCertificate::rank_minimal`].
    pub contradiction: bool,
}

impl NecessityVerdict {
    pub fn consistent(&self) -> bool {
        !self.contradiction
    }
}

pub fn necessity_check(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec) -> Result<NecessityVerdict> {
    let jet = jet_map_jacobian(q, a, b0, v)?;
    let fact = PencilFactorization::new(q, a, b0)?;
    let minimality = minimality::is_stationary_minimal(q, &fact.x, v)?;
    let contradiction = jet.invertible && !minimality.rank_minimal;
    if contradiction {
        log::error!(
            "necessity violated: jet sigma_min {:.3e} but orbit rank sigma_min {:.3e}",
            jet.sigma_min(),
            minimality.rank_sigma_min
        );
    }
    Ok(NecessityVerdict {
        jet,
        minimality,
        contradiction,
    })
}
