//! Invariants over random inputs.

mod common;

use nalgebra::{DMatrix, DVector};
use normdeflate::io::{decomposition_from_json, decomposition_to_json};
use normdeflate::{
    annihilator_basis, duality_select, min_norm_affine, op_norm_power, reconstruct, run_deflation, DeflationConfig,
    DenseOperator, Functional, NormSpec, PowerConfig, SubspaceBasis, Vector,
};
use proptest::prelude::*;

fn spec(d: usize) -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        (1.0f64..6.0).prop_map(move |p| NormSpec::lp(p, d).unwrap()),
        Just(NormSpec::lp(1.0, d).unwrap()),
        Just(NormSpec::lp(2.0, d).unwrap()),
        Just(NormSpec::lp(f64::INFINITY, d).unwrap()),
        (1..d).prop_map(move |k| NormSpec::mixed_k1(k, d).unwrap()),
        (1..d).prop_map(move |k| NormSpec::mixed_kinf(k, d).unwrap()),
    ]
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

fn spaced_vector() -> impl Strategy<Value = (NormSpec, Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|d| (spec(d), entries(d), entries(d)))
}

fn operator() -> impl Strategy<Value = DenseOperator> {
    (1usize..=4, 2usize..=4)
        .prop_flat_map(|(r, c)| (spec(c), spec(r.max(2)), entries(r.max(2) * c)))
        .prop_map(|(src, tgt, e)| {
            let a = DMatrix::from_row_slice(tgt.dim(), src.dim(), &e);
            DenseOperator::new(a, src, tgt).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_axioms((s, x, y) in spaced_vector(), c in -4.0f64..4.0) {
        let n = |v: &[f64]| Vector::from_slice(v, s).unwrap().norm();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
        prop_assert!(n(&sum) <= n(&x) + n(&y) + 1e-12);
        prop_assert!((n(&scaled) - c.abs() * n(&x)).abs() <= 1e-12 * (1.0 + n(&scaled)));
        prop_assert!((n(&x) - common::norm(&s, &x)).abs() <= 1e-12 * (1.0 + n(&x)));
    }

    #[test]
    fn dual_pairing_is_bounded((s, x, f) in spaced_vector()) {
        let fx: f64 = x.iter().zip(&f).map(|(a, b)| a * b).sum();
        let fd = Functional::from_slice(&f, s).unwrap().dual_norm();
        prop_assert!(fx.abs() <= fd * common::norm(&s, &x) + 1e-12);
        prop_assert!((fd - common::dual_norm(&s, &f)).abs() <= 1e-12 * (1.0 + fd));
    }

    #[test]
    fn duality_selection_is_a_norming_functional((s, x, _) in spaced_vector()) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let v = Vector::from_slice(&x, s).unwrap();
        let f = duality_select(&v, &Default::default()).unwrap();
        let again = duality_select(&v, &Default::default()).unwrap();
        prop_assert_eq!(&f, &again);
        prop_assert!((f.apply(&v).unwrap() - v.norm()).abs() <= 1e-12 * v.norm());
        prop_assert!((f.dual_norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn annihilators_annihilate(
        (s, rows) in (3usize..=6).prop_flat_map(|d| (spec(d), prop::collection::vec(entries(d), 1..d)))
    ) {
        let fs: Vec<Functional> = rows.iter().map(|r| Functional::from_slice(r, s).unwrap()).collect();
        let m = DMatrix::from_fn(rows.len(), s.dim(), |i, j| rows[i][j]);
        let rank = common::elimination_rank(&m, 1e-9);
        prop_assume!(rank == rows.len());
        let b = annihilator_basis(&fs, s).unwrap();
        prop_assert_eq!(b.dim(), s.dim() - rows.len());
        for z in b.columns().column_iter() {
            for f in &fs {
                prop_assert!(f.entries().dot(&z).abs() <= 1e-10 * f.entries().norm());
            }
        }
    }

    #[test]
    fn min_norm_points_are_feasible_and_no_worse_than_least_squares(
        (s, a, b) in (2usize..=5).prop_flat_map(|d| (spec(d), entries(d), -2.0f64..2.0))
    ) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
        let am = DMatrix::from_row_slice(1, s.dim(), &a);
        let z = min_norm_affine(&s, &am, &DVector::from_element(1, b), 1e-6).unwrap();
        prop_assert!(((&am * z.entries())[0] - b).abs() <= 1e-8 * (1.0 + b.abs()));
        let ls = am.transpose() * (b / am.norm_squared());
        prop_assert!(z.norm() <= common::norm(&s, ls.as_slice()) * (1.0 + 1e-7) + 1e-12);
    }

    #[test]
    fn power_value_dominates_sampled_ratios(t in operator(), seed in 0u64..1000) {
        prop_assume!(!t.is_zero());
        let r = op_norm_power(&t, &SubspaceBasis::full(*t.source()), &PowerConfig::default()).unwrap();
        prop_assert!((r.maximizer.norm() - 1.0).abs() <= 1e-10);
        let attained = common::norm(t.target(), (t.entries() * r.maximizer.entries()).as_slice());
        prop_assert!((attained - r.value).abs() <= 1e-10 * r.value);
        let mut rng = common::rng(seed);
        for _ in 0..50 {
            let x = common::gaussian_vec(&mut rng, t.source().dim());
            let ratio = common::ratio(t.entries(), t.source(), t.target(), x.as_slice());
            prop_assert!(ratio <= r.value * (1.0 + 1e-9), "{} > {}", ratio, r.value);
        }
    }

    #[test]
    fn deflation_invariants(t in operator()) {
        prop_assume!(!t.is_zero());
        let dec = run_deflation(&t, &DeflationConfig::default()).unwrap();
        let r = dec.rank();
        prop_assert_eq!(r, common::elimination_rank(t.entries(), 1e-9));
        prop_assert_eq!(r + dec.kernel_basis.dim(), t.source().dim());
        let norms = dec.norms();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
        for i in 0..r {
            for j in 0..r {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dec.xi[i].entries().dot(dec.steps[j].x.entries()) - delta).abs() <= 1e-7);
                if i < j {
                    prop_assert!(dec.steps[i].f.entries().dot(dec.steps[j].x.entries()).abs() <= 1e-7);
                }
            }
        }
        for st in &dec.steps {
            prop_assert!((st.x.norm() - 1.0).abs() <= 1e-9);
            prop_assert!(st.f.dual_norm() <= 1.0 + 1e-7);
            prop_assert!((st.f.entries().dot(st.x.entries()) - 1.0).abs() <= 1e-7);
        }
        let x = Vector::new(DVector::from_fn(t.source().dim(), |i, _| 1.0 - 0.3 * i as f64), *t.source()).unwrap();
        let y = reconstruct(&dec, &t, r, &x).unwrap();
        let tx = t.entries() * x.entries();
        prop_assert!((y.entries() - &tx).amax() <= 1e-7 * (1.0 + tx.amax()));
    }

    #[test]
    fn json_round_trip_is_byte_stable(t in operator()) {
        prop_assume!(!t.is_zero());
        let dec = run_deflation(&t, &DeflationConfig::default()).unwrap();
        let json = decomposition_to_json(&dec).unwrap();
        let back = decomposition_from_json(&json).unwrap();
        prop_assert_eq!(&back.steps, &dec.steps);
        prop_assert_eq!(decomposition_to_json(&back).unwrap(), json);
    }
}
