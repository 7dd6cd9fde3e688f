//! Seeded random instances and oracles computed without the library's
//! solvers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statdisc::linalg::{self, c, CMat, CVec};
use statdisc::{Complex64, Quadric};

/// Smallest Levi singular value, relative to the largest matrix entry, that a
/// generated quadric must reach.
pub const MIN_LEVI_RATIO: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Instance {
    pub q: Quadric,
    pub a: Vec<Complex64>,
    pub b0: Vec<f64>,
    pub v: CVec,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| c(gauss(rng), gauss(rng)))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(gauss(rng), gauss(rng)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let m = random_matrix(rng, n);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

fn well_posed(q: &Quadric, seed: u64) -> Option<Vec<f64>> {
    let dir = q.find_levi_direction(16, seed).ok()?;
    let largest = q.matrices().iter().map(linalg::max_norm).fold(0.0, f64::max);
    (dir.smallest_singular_value >= MIN_LEVI_RATIO * largest).then_some(dir.b0)
}

/// Random Hermitian quadric with a well-conditioned Levi direction.
pub fn random_quadric(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Quadric, Vec<f64>) {
    loop {
        let q = Quadric::new((0..d).map(|_| random_hermitian(rng, n)).collect()).unwrap();
        if let Some(b0) = well_posed(&q, rng.random()) {
            return (q, b0);
        }
    }
}

/// `a` scaled so that `sum |a_j| |A_j|_2 <= 0.1 * sigma_min(sum b0_j A_j)`,
/// which keeps the contractive solution well inside the unit ball.
pub fn admissible_a(rng: &mut ChaCha8Rng, q: &Quadric, b0: &[f64]) -> Vec<Complex64> {
    let dir: Vec<Complex64> = (0..q.d()).map(|_| c(gauss(rng), gauss(rng))).collect();
    let sigma = linalg::smallest_singular_value(&q.real_combination(b0));
    let size: f64 = dir
        .iter()
        .zip(q.matrices())
        .map(|(a, m)| a.norm() * linalg::spectral_norm(m))
        .sum();
    let t = 0.1 * sigma / size * rng.random_range(0.2..1.0);
    dir.into_iter().map(|z| z * t).collect()
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(1..=4);
    let d = rng.random_range(1..=3);
    let (q, b0) = random_quadric(rng, n, d);
    let a = admissible_a(rng, &q, &b0);
    let v = random_vector(rng, n);
    Instance { q, a, b0, v }
}

pub fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count).map(|_| random_instance(&mut r)).collect()
}

/// Instances that fail stationary minimality while `X` is not a multiple of
/// the identity: either `A_d` is a real combination of the other matrices,
/// or the matrices commute and `V` is a common eigenvector.
pub fn degenerate_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(1..=4);
    let d = rng.random_range(2..=3);
    loop {
        let matrices: Vec<CMat> = if rng.random_bool(0.5) {
            let mut ms: Vec<CMat> = (0..d - 1).map(|_| random_hermitian(rng, n)).collect();
            let mu: Vec<f64> = (0..d - 1).map(|_| gauss(rng)).collect();
            ms.push(linalg::real_combination(&mu, &ms));
            ms
        } else {
            let u = random_matrix(rng, n).qr().q();
            (0..d)
                .map(|_| {
                    let diag = CMat::from_diagonal(&CVec::from_fn(n, |_, _| c(gauss(rng), 0.0)));
                    &u * diag * u.adjoint()
                })
                .collect()
        };
        let q = Quadric::new(matrices).unwrap();
        let Some(b0) = well_posed(&q, rng.random()) else { continue };
        let a = admissible_a(rng, &q, &b0);
        let commuting = q
            .matrices()
            .iter()
            .all(|m| linalg::max_norm(&(m * q.matrix(0) - q.matrix(0) * m)) < 1e-12);
        let v = if commuting && n > 1 {
            common_eigenvector(&q, rng)
        } else {
            random_vector(rng, n)
        };
        return Instance { q, a, b0, v };
    }
}

/// A column of the unitary that diagonalizes every matrix of a commuting
/// family: it is an eigenvector of a generic real combination.
fn common_eigenvector(q: &Quadric, rng: &mut ChaCha8Rng) -> CVec {
    let mu: Vec<f64> = (0..q.d()).map(|_| gauss(rng)).collect();
    let m = q.real_combination(&mu);
    let eig = m.symmetric_eigen();
    let k = rng.random_range(0..q.n());
    eig.eigenvectors.column(k).into_owned() * c(gauss(rng), gauss(rng))
}

/// `P X^2 + A X + P^H` recomputed from `(a, b0)`.
pub fn quadratic_residual(q: &Quadric, a: &[Complex64], b0: &[f64], x: &CMat) -> (CMat, f64) {
    let p = q.complex_combination(a);
    let b: Vec<f64> = b0.iter().zip(a).map(|(b, a)| b - 2.0 * a.re).collect();
    let levi = q.real_combination(&b);
    let r = &p * x * x + &levi * x + p.adjoint();
    let scale = linalg::scale([linalg::max_norm(&p), linalg::max_norm(&levi), linalg::max_norm(x)]);
    (r, scale)
}

/// Root of `p x^2 + A x + conj(p) = 0` of smaller modulus.
pub fn scalar_root(p: Complex64, a: f64) -> Complex64 {
    if p.norm() == 0.0 {
        return c(0.0, 0.0);
    }
    let disc = (c(a * a, 0.0) - p * p.conj() * 4.0).sqrt();
    let r1 = (-a + disc) / (p * 2.0);
    let r2 = (-a - disc) / (p * 2.0);
    if r1.norm() < r2.norm() {
        r1
    } else {
        r2
    }
}

/// Truncated Stein series `sum_r (X^H)^r M X^r`, stopped after the term
/// size falls below `1e-18` relative.
pub fn stein_series(m: &CMat, x: &CMat) -> CMat {
    let mut total = m.clone();
    let mut term = m.clone();
    for _ in 0..100_000 {
        term = x.adjoint() * term * x;
        total += &term;
        if linalg::max_norm(&term) <= 1e-18 * (1.0 + linalg::max_norm(&total)) {
            break;
        }
    }
    total
}

/// Naive DFT coefficient of mode `k` for samples at `exp(2 pi i m / N)`.
pub fn dft_mode(samples: &[Complex64], k: isize) -> Complex64 {
    let n = samples.len();
    let mut acc = c(0.0, 0.0);
    for (m, s) in samples.iter().enumerate() {
        let angle = -2.0 * std::f64::consts::PI * (k as f64) * (m as f64) / n as f64;
        acc += s * Complex64::from_polar(1.0, angle);
    }
    acc / n as f64
}

pub fn unit_circle(samples: usize) -> Vec<Complex64> {
    (0..samples)
        .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / samples as f64))
        .collect()
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
