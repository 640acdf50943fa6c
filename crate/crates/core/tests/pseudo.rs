mod common;
mod oracle;

use oracle::micro;
use proptest::prelude::*;
use sparse_pinv::bench::metrics;
use sparse_pinv::densela::mp_pinv;
use sparse_pinv::lp::PropertySet;
use sparse_pinv::pseudo::{BlockSpec, SolverKind};
use sparse_pinv::{compute, verify, ComputeOptions, DenseMatrix, PinvStatus, Variant};

fn j2() -> DenseMatrix {
    DenseMatrix::filled(2, 2, 1.0)
}

fn run(a: &DenseMatrix, v: &str) -> sparse_pinv::PinvResult {
    compute(a, &v.parse().unwrap(), &ComputeOptions::default()).unwrap()
}

#[test]
fn all_ones_micro_oracles() {
    let j = j2();
    for (p3, p4, v) in [(false, false, "p1"), (true, false, "p1+p3"), (false, true, "p1+p4"), (true, true, "p1+p3+p4")] {
        let (rows, rhs) = micro::j_rows(p3, p4);
        let (best, _) = micro::min_one_norm(&rows, &rhs);
        let r = run(&j, v);
        assert_eq!(r.status, PinvStatus::Optimal);
        assert!((r.objective - best).abs() < 1e-12, "{v}: {} vs {best}", r.objective);
        assert!((best - 1.0).abs() < 1e-12);
    }

    let r = run(&j, "p1");
    assert_eq!(r.h.nnz(1e-9), 1);

    let r = run(&j, "p1+p3");
    let ah = j.matmul(&r.h).unwrap();
    let ajp = j.matmul(&mp_pinv(&j, None).unwrap()).unwrap();
    for k in 0..4 {
        assert!((ah.as_slice()[k] - micro::J_PROJECTOR_ENTRY).abs() < 1e-12);
        assert!((ajp.as_slice()[k] - micro::J_PROJECTOR_ENTRY).abs() < 1e-12);
    }
    let m = metrics(&j, &mp_pinv(&j, None).unwrap(), &r.h, 1e-9).unwrap();
    let expect = micro::j_two_norm_ratio(r.h.as_slice());
    assert!((m.two_norm_ratio - expect).abs() < 1e-12);
}

#[test]
fn all_ones_two_norm_ratio_over_optimal_vertices() {
    // The P1+P3 optimum is not unique: row-supported vertices give √2,
    // diagonal ones give 1.
    let (rows, rhs) = micro::j_rows(true, false);
    let (_, points) = micro::min_one_norm(&rows, &rhs);
    let mut ratios: Vec<f64> = points.iter().map(|x| micro::j_two_norm_ratio(x)).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    assert_eq!(ratios.len(), 2);
    assert!((ratios[0] - 1.0).abs() < 1e-12 && (ratios[1] - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn full_column_rank_p1_p3_recovers_pinv() {
    let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]]).unwrap();
    let r = run(&a, "p1+p3");
    let ap = mp_pinv(&a, None).unwrap();
    assert!(r.h.sub(&ap).unwrap().frobenius_norm() <= 1e-9);
}

#[test]
fn left_and_right_inverses() {
    let mut rng = common::rng(31);
    let tall = common::random_matrix(&mut rng, 6, 3);
    let r = run(&tall, "left");
    assert_eq!(r.status, PinvStatus::Optimal);
    let rep = verify(&tall, &r.h, 1e-8).unwrap();
    assert!(rep.left_inverse && rep.p1);
    // each row of H is a basic solution of n equations
    for i in 0..3 {
        assert!(r.h.row(i).iter().filter(|v| v.abs() > 1e-9).count() <= 3);
    }

    let wide = tall.transpose();
    let r = run(&wide, "right");
    let rep = verify(&wide, &r.h, 1e-8).unwrap();
    assert!(rep.right_inverse);
    assert_eq!(run(&wide, "left").status, PinvStatus::Infeasible);
}

#[test]
fn projector_identities_follow_from_symmetry() {
    let mut rng = common::rng(32);
    for _ in 0..4 {
        let a = common::random_low_rank(&mut rng, 7, 6, 3, 1.0);
        let ap = mp_pinv(&a, None).unwrap();
        let tol = 1e-6 * a.frobenius_norm().max(ap.frobenius_norm());

        let h3 = run(&a, "p1+p3").h;
        let rep = verify(&a, &h3, 1e-6).unwrap();
        assert!(rep.ah_is_projector, "ah gap {}", rep.ah_gap);
        // AH = AA⁺ makes Hb a least-squares solution for every b
        let b: Vec<f64> = (0..7).map(|k| (k as f64).sin()).collect();
        let rh = norm_resid(&a, &h3, &b);
        let rp = norm_resid(&a, &ap, &b);
        assert!((rh - rp).abs() <= tol);

        let h4 = run(&a, "p1+p4").h;
        let rep = verify(&a, &h4, 1e-6).unwrap();
        assert!(rep.ha_is_projector, "ha gap {}", rep.ha_gap);

        let h34 = run(&a, "p1+p3+p4").h;
        let rep = verify(&a, &h34, 1e-6).unwrap();
        assert!(rep.ah_is_projector && rep.ha_is_projector);
    }
}

fn norm_resid(a: &DenseMatrix, h: &DenseMatrix, b: &[f64]) -> f64 {
    let x = h.mul_vec(b).unwrap();
    let ax = a.mul_vec(&x).unwrap();
    ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[test]
fn objectives_are_monotone_in_constraints() {
    let mut rng = common::rng(33);
    for _ in 0..5 {
        let a = common::random_low_rank(&mut rng, 6, 6, 2, 1.0);
        let o: Vec<f64> = ["p1", "p1+p3", "p1+p4", "p1+p3+p4", "mp"].iter().map(|v| run(&a, v).objective).collect();
        let eps = 1e-9 * o[4];
        assert!(o[0] <= o[1] + eps && o[0] <= o[2] + eps);
        assert!(o[1] <= o[3] + eps && o[2] <= o[3] + eps);
        assert!(o[3] <= o[4] + eps);
    }
}

#[test]
fn sdp_variant_reports_diagnostics() {
    let a = DenseMatrix::from_diag(&[2.0, 4.0]);
    let r = run(&a, "p1+p2sdp:all");
    assert_eq!(r.solver, SolverKind::Sdp);
    assert_eq!(r.status, PinvStatus::Optimal);
    let d = r.sdp.unwrap();
    assert_eq!(d.blocks, 4);
    assert!(d.min_block_eig >= -1e-6);
    assert!(r.h.sub(&DenseMatrix::from_diag(&[0.5, 0.25])).unwrap().max_abs() < 1e-8);

    let r = run(&a, "p1+p2sdp:none");
    assert_eq!(r.solver, SolverKind::Lp);

    let mut opts = ComputeOptions::default();
    opts.sdp.max_iterations = 2;
    let v = Variant::relaxed_sdp(PropertySet::P1, BlockSpec::All);
    let mut rng = common::rng(34);
    let b = common::random_low_rank(&mut rng, 3, 3, 2, 1.0);
    assert_eq!(compute(&b, &v, &opts).unwrap().status, PinvStatus::NotConverged);
}

#[test]
fn verify_reports() {
    let j = j2();
    let rep = verify(&j, &j.scale(0.25), 1e-8).unwrap();
    assert!(rep.all_properties() && rep.ah_is_projector && rep.ha_is_projector);
    assert!(!rep.left_inverse && !rep.right_inverse);
    let rep = verify(&j, &DenseMatrix::zeros(2, 2), 1e-8).unwrap();
    assert!(!rep.p1 && rep.p2 && rep.p3 && rep.p4);
    assert!(verify(&j, &DenseMatrix::zeros(3, 2), 1e-8).is_err());
}

#[test]
fn variant_grammar() {
    for bad in ["", "p3", "p1+p1", "p1+p5", "p3+p1", "p1+p2sdp:bogus", "left+p3"] {
        assert!(bad.parse::<Variant>().is_err(), "{bad:?}");
    }
    let v: Variant = "p1+p2sdp:0.1/1.0".parse().unwrap();
    assert_eq!(v.blocks, BlockSpec::List(vec![(0, 1), (1, 0)]));
    assert_eq!(Variant::relaxed_family().len(), 8);
}

fn variant_strategy() -> impl Strategy<Value = Variant> {
    let blocks = prop_oneof![
        Just(BlockSpec::Default),
        Just(BlockSpec::All),
        Just(BlockSpec::Diagonal),
        Just(BlockSpec::None),
        proptest::collection::vec((0usize..5, 0usize..5), 1..4).prop_map(|mut l| {
            l.sort();
            l.dedup();
            BlockSpec::List(l)
        }),
    ];
    prop_oneof![
        Just(Variant::left()),
        Just(Variant::right()),
        Just(Variant::mp()),
        (any::<bool>(), any::<bool>()).prop_map(|(p3, p4)| Variant::relaxed(PropertySet { p1: true, p3, p4, p2_sdp: false })),
        (any::<bool>(), any::<bool>(), blocks)
            .prop_map(|(p3, p4, b)| Variant::relaxed_sdp(PropertySet { p1: true, p3, p4, p2_sdp: false }, b)),
    ]
}

proptest! {
    #[test]
    fn variant_display_round_trips(v in variant_strategy()) {
        let s = v.to_string();
        let back: Variant = s.parse().unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(back.to_string(), s);
    }
}
