mod common;

use common::*;
use proptest::prelude::*;
use statdisc::cli;
use statdisc::disc::{DiscParameters, StationaryDisc};
use statdisc::linalg::{self, c, CMat};
use statdisc::pencil::{self, PencilFactorization};
use statdisc::{json, minimality, Complex64, Error, Quadric};

fn contraction(entries: Vec<(f64, f64)>, n: usize, radius: f64) -> CMat {
    let m = CMat::from_fn(n, n, |i, k| {
        let (re, im) = entries[i * n + k];
        c(re, im)
    });
    let norm = linalg::spectral_norm(&m);
    if norm == 0.0 {
        m
    } else {
        m * c(radius / norm, 0.0)
    }
}

type Entries = Vec<(f64, f64)>;

fn small_matrix() -> impl Strategy<Value = (usize, Entries, Entries)> {
    (1usize..=4).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n),
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stein_inverse_round_trip((n, xs, ms) in small_matrix(), radius in 0.0..0.95f64) {
        let x = contraction(xs, n, radius);
        let m = CMat::from_fn(n, n, |i, k| c(ms[i * n + k].0, ms[i * n + k].1));
        let s = pencil::stein_solve(&m, &x).unwrap();
        let back = pencil::stein_apply(&s, &x).unwrap();
        let scale = linalg::scale([linalg::max_norm(&m), linalg::max_norm(&s)]);
        prop_assert!(linalg::max_norm(&(back - &m)) <= 1e-11 * scale);
        let series = pencil::stein_solve_series(&m, &x).unwrap();
        prop_assert!(linalg::max_norm(&(series - &s)) <= 1e-10 * scale);
    }

    #[test]
    fn stein_preserves_adjoints((n, xs, ms) in small_matrix(), radius in 0.0..0.9f64) {
        let x = contraction(xs, n, radius);
        let m = CMat::from_fn(n, n, |i, k| c(ms[i * n + k].0, ms[i * n + k].1));
        let s = pencil::stein_solve(&m, &x).unwrap();
        let s_adj = pencil::stein_solve(&m.adjoint(), &x).unwrap();
        prop_assert!(linalg::max_norm(&(s.adjoint() - s_adj)) <= 1e-11 * linalg::scale([linalg::max_norm(&s)]));
    }

    #[test]
    fn quadratic_solution_is_homogeneous(seed in any::<u64>(), lambda in prop::sample::select(vec![0.5, 2.0, -1.0, 3.0, -0.25])) {
        let inst = random_instance(&mut rng(seed));
        let b = pencil::pinned_b(&inst.a, &inst.b0);
        let x = pencil::solve_quadratic(&inst.q, &inst.a, &b).unwrap().x;
        let a: Vec<Complex64> = inst.a.iter().map(|z| z * lambda).collect();
        let bl: Vec<f64> = b.iter().map(|v| v * lambda).collect();
        let y = pencil::solve_quadratic(&inst.q, &a, &bl).unwrap().x;
        prop_assert!(linalg::max_norm(&(x - y)) <= 1e-12);
    }

    #[test]
    fn orbit_dimension_ignores_one_minus_x(seed in any::<u64>(), degenerate in any::<bool>()) {
        let mut r = rng(seed);
        let inst = if degenerate { degenerate_instance(&mut r) } else { random_instance(&mut r) };
        let f = PencilFactorization::new(&inst.q, &inst.a, &inst.b0).unwrap();
        let u = (linalg::identity(inst.q.n()) - &f.x) * &inst.v;
        let inv = f.resolvent_at_one(&inst.v).unwrap();
        let dim = minimality::orbit_basis(&f.x, &inst.v).real_dimension;
        prop_assert_eq!(dim, minimality::orbit_basis(&f.x, &u).real_dimension);
        prop_assert_eq!(dim, minimality::orbit_basis(&f.x, &inv).real_dimension);
        prop_assert!(dim <= 2 * inst.q.n());
    }

    #[test]
    fn defect_dichotomy(seed in any::<u64>(), degenerate in any::<bool>()) {
        let mut r = rng(seed);
        let inst = if degenerate { degenerate_instance(&mut r) } else { random_instance(&mut r) };
        let f = StationaryDisc::new(&inst.q, DiscParameters::new(inst.a.clone(), inst.b0.clone(), inst.v.clone())).unwrap();
        let report = minimality::is_defective(&f).unwrap();
        prop_assert_eq!(report.defective, !report.certificate.minimal);
        prop_assert_eq!(report.witness.is_some(), report.defective);
        if let Some(w) = report.witness {
            prop_assert!(w.verified);
        }
        if degenerate {
            prop_assert!(report.defective);
        }
    }

    #[test]
    fn disc_is_attached_and_pinned(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let f = StationaryDisc::new(&inst.q, DiscParameters::new(inst.a.clone(), inst.b0.clone(), inst.v.clone())).unwrap();
        prop_assert!(f.verify_attachment(64).unwrap().pass);
        prop_assert!(f.verify_lift_holomorphic(128).unwrap().pass);
        prop_assert!(f.is_pinned());
    }

    #[test]
    fn disc_is_linear_in_v_for_h(seed in any::<u64>(), t in -3.0..3.0f64) {
        let inst = random_instance(&mut rng(seed));
        let params = |v| DiscParameters::new(inst.a.clone(), inst.b0.clone(), v);
        let f = StationaryDisc::new(&inst.q, params(inst.v.clone())).unwrap();
        let g = StationaryDisc::new(&inst.q, params(&inst.v * c(t, 0.0))).unwrap();
        let z = c(0.3, -0.5);
        let (h1, g1) = f.eval(z).unwrap();
        let (h2, g2) = g.eval(z).unwrap();
        let scale = linalg::scale([linalg::max_norm_vec(&h1), max_abs(&g1)]);
        prop_assert!(linalg::max_norm_vec(&(h1 * c(t, 0.0) - h2)) <= 1e-12 * scale * (1.0 + t.abs()));
        for (a, b) in g1.iter().zip(&g2) {
            prop_assert!((a * (t * t) - b).norm() <= 1e-11 * scale * (1.0 + t * t));
        }
    }

    #[test]
    fn quadric_json_round_trip(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let text = serde_json::to_string(&json::quadric(&inst.q)).unwrap();
        prop_assert_eq!(json::parse_quadric(&text).unwrap(), inst.q);
    }

    #[test]
    fn non_hermitian_input_is_rejected(seed in any::<u64>(), skew in 1e-6..1.0f64) {
        let mut r = rng(seed);
        let n = 2 + (seed % 3) as usize;
        let mut m = random_hermitian(&mut r, n);
        m[(0, 1)] += c(skew, 0.0);
        let err = Quadric::new(vec![m]).unwrap_err();
        let rejected = matches!(err, Error::NonHermitianInput { .. });
        prop_assert!(rejected);
    }

    #[test]
    fn complex_vector_flags_round_trip(values in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..5)) {
        let text: Vec<String> = values.iter().map(|(re, im)| format!("{re},{im}")).collect();
        let parsed = cli::parse_complex_vector(&text.join(";"), values.len(), "V").unwrap();
        for (z, (re, im)) in parsed.iter().zip(&values) {
            prop_assert_eq!((z.re, z.im), (*re, *im));
        }
    }
}
