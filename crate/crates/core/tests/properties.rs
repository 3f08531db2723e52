use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use nearfield_core::array::exact_steering;
use nearfield_core::basis::{atom, build_basis, pairing};
use nearfield_core::bessel::bessel_j;
use nearfield_core::harmonics::j_pow;
use nearfield_core::localization::DualPolynomial;
use nearfield_core::measurement::{lifted_matrix, observe_lifted, LiftedAtom};
use nearfield_core::sdp::{t2d, t2d_adjoint, LagArray};
use nearfield_core::{ArrayConfig, Complex64, InverseRangeMap, LiftedBasis, MeasurementEnsemble};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn small_basis() -> &'static (ArrayConfig, LiftedBasis) {
    static B: OnceLock<(ArrayConfig, LiftedBasis)> = OnceLock::new();
    B.get_or_init(|| {
        let cfg = ArrayConfig { n_antennas: 10, i1: 5, ..ArrayConfig::default() };
        let b = build_basis(&cfg).unwrap();
        (cfg, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t2d_adjoint_pairing(n_u in 1usize..4, n_b in 1usize..5, seed in any::<u64>()) {
        let mut s = seed | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let data = DMatrix::from_fn(2 * n_u - 1, 2 * n_b - 1, |_, _| Complex64::new(next(), next()));
        let v = LagArray::from_data(n_u, n_b, data).unwrap();
        let n = n_u * n_b;
        let w = DMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let lhs: Complex64 = t2d(&v).iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
        let rhs = v.inner(&t2d_adjoint(&w, n_u, n_b).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn hermitian_lags_give_hermitian_toeplitz(n_u in 1usize..4, n_b in 1usize..6, a in complex(), b in complex()) {
        let v = LagArray::hermitian(n_u, n_b, |p, q| a * p as f64 + b * (q * q) as f64 + Complex64::new(2.0, 0.0));
        let t = t2d(&v);
        prop_assert!((&t - t.adjoint()).norm() <= 1e-14 * (1.0 + t.norm()));
        prop_assert!((t.trace() - v.center() * (n_u * n_b) as f64).norm() < 1e-12);
    }

    #[test]
    fn atom_lag_sums_are_rank_one(u in 0.0..TAU, theta in 0.0..PI) {
        // t2d of the atom autocorrelation is the outer product of the atom vector.
        let (n_u, n_b) = (3usize, 5usize);
        let v = LagArray::hermitian(n_u, n_b, |p, q| Complex64::cis(p as f64 * u + q as f64 * theta));
        let a = DVector::from_fn(n_u * n_b, |r, _| Complex64::cis((r % n_u) as f64 * u + (r / n_u) as f64 * theta));
        prop_assert!((t2d(&v) - &a * a.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn inverse_range_round_trip(r_min in 0.01..1.0f64, span in 0.5..50.0f64, t in 0.0..1.0f64) {
        let map = InverseRangeMap::new(r_min, r_min + span).unwrap();
        let r = r_min + span * t;
        let u = map.u_of_r(r).unwrap();
        prop_assert!((0.0..=TAU).contains(&u));
        prop_assert!((map.r_of_u(u).unwrap() - r).abs() <= 1e-12 * r);
        let r2 = map.r_of_u(TAU * t).unwrap();
        prop_assert!((map.u_of_r(r2).unwrap() - TAU * t).abs() <= 1e-12);
    }

    #[test]
    fn inverse_range_is_decreasing(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let map = InverseRangeMap::new(0.1, 6.0).unwrap();
        let (ra, rb) = (0.1 + 5.9 * a, 0.1 + 5.9 * b);
        prop_assume!(ra < rb);
        prop_assert!(map.u_of_r(ra).unwrap() >= map.u_of_r(rb).unwrap());
    }

    #[test]
    fn bessel_recurrence_and_symmetry(n in 1i64..60, x in 0.05..200.0f64) {
        let (jm, j, jp) = (bessel_j(n - 1, x).unwrap(), bessel_j(n, x).unwrap(), bessel_j(n + 1, x).unwrap());
        let scale = jm.abs().max(jp.abs()).max(j.abs()).max(1e-300);
        prop_assert!((jm + jp - 2.0 * n as f64 / x * j).abs() <= 1e-10 * scale * (1.0 + n as f64 / x));
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(bessel_j(-n, x).unwrap(), sign * j);
        prop_assert!(j.abs() <= 1.0);
    }

    #[test]
    fn unit_roots_have_period_four(m in -1000i64..1000) {
        prop_assert_eq!(j_pow(m), j_pow(m + 4));
        prop_assert_eq!(j_pow(m) * j_pow(1), j_pow(m + 1));
    }

    #[test]
    fn steering_entries_are_unimodular(r in 0.1..6.0f64, theta in 0.0..PI) {
        let h = exact_steering(&ArrayConfig::default(), r, theta).unwrap();
        prop_assert!((h[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for z in h.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sensing_matches_psi_and_adjoint(seed in 0u64..1000, atoms in prop::collection::vec((0.0..TAU, 0.0..PI, complex()), 1..4), q in prop::collection::vec(complex(), 6)) {
        let (_, basis) = small_basis();
        let ens = MeasurementEnsemble::generate(basis, 6, seed, 0.0).unwrap();
        let atoms: Vec<LiftedAtom> = atoms.into_iter().map(|(u, theta, gain)| LiftedAtom { u, theta, gain }).collect();
        let x = lifted_matrix(ens.n_u(), ens.n_b(), &atoms).unwrap();
        let y = observe_lifted(&ens, &atoms).unwrap().y;
        let via_b = &ens.sensing * DVector::from_column_slice(x.as_slice());
        prop_assert!((&y - &via_b).norm() <= 1e-12 * (1.0 + y.norm()));
        for (m, psi) in ens.psi.iter().enumerate() {
            let direct: Complex64 = (0..basis.n_antennas()).map(|n| ens.combiner[(m, n)] * pairing(basis.phi(n), &x)).sum();
            prop_assert!((direct - y[m]).norm() <= 1e-12 * (1.0 + y.norm()));
            prop_assert!((pairing(psi, &x) - y[m]).norm() <= 1e-12 * (1.0 + y.norm()));
        }
        let q = DVector::from_vec(q);
        let lhs = q.dotc(&via_b);
        let rhs = ens.adjoint(&q).dotc(&DVector::from_column_slice(x.as_slice()));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn lifted_channel_is_atom_pairing(u in 0.0..TAU, theta in 0.0..PI) {
        let (cfg, basis) = small_basis();
        let h = basis.lifted_channel(u, theta).unwrap();
        let a = atom(cfg.k_u, cfg.i_off(), u, theta);
        for n in 0..cfg.n_antennas {
            prop_assert_eq!(h[n], pairing(basis.phi(n), &a));
        }
    }

    #[test]
    fn dual_polynomial_is_bounded_by_coefficients(u in 0.0..TAU, theta in 0.0..PI, seed in 0u64..100) {
        let (_, basis) = small_basis();
        let ens = MeasurementEnsemble::generate(basis, 6, seed, 0.0).unwrap();
        let q = DVector::from_fn(6, |i, _| Complex64::cis(i as f64 + seed as f64));
        let dp = DualPolynomial::from_dual(&ens, &q).unwrap();
        let l1: f64 = dp.coeffs().iter().map(|c| c.norm()).sum();
        prop_assert!(dp.eval(u, theta).norm() <= l1 + 1e-12);
    }
}
