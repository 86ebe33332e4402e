mod common;

use common::{scalar_model, shapes, tol};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ratex_core::identcore::{pad_restriction, system_vec, AffineRestriction, Block, Dims};
use ratex_core::paramdsl::{
    eval_model, fd_jacobian, generic_ident, local_ident, parse_expr, parse_model, AffineResidualMap, BinOp, Expr,
    ExprResidualMap, FdConfig, GenericRestriction, GenericVerdict, LocalVerdict, ResidualMap, SamplerConfig, REGULARITY_CAVEAT,
};
use ratex_core::random_models::gaussian;
use ratex_core::RatexError;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..100.0f64).prop_map(Expr::Num),
        (1e-9..1e-3f64).prop_map(Expr::Num),
        prop_oneof![Just("x"), Just("theta1"), Just("y_2")].prop_map(Expr::var),
        (-3..3i64, 1..3i64).prop_map(|(l, r)| Expr::Var("B".into(), vec![l, r, 1])),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), 0..4u32).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
            (prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)], inner.clone(), inner)
                .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
        ]
    })
}

const HS: &str = "\
params theta1 theta2 theta3
domain theta1 0.5 1
domain theta2 -3 -0.5
domain theta3 -3 -0.2
dims 1 1 1 1
B -1 1 1 = theta1
B 0 1 1 = -((theta3/theta2)+1+theta1)
B 1 1 1 = 1
A 0 1 1 = 1/theta2
";

#[test]
fn hansen_sargent_evaluates() {
    let map = parse_model(HS).unwrap();
    assert_eq!(map.params, vec!["theta1", "theta2", "theta3"]);
    let model = eval_model(&map, &[1.0, -2.0, -1.0]).unwrap();
    let b: Vec<f64> = model.b().coeffs().iter().map(|c| c[(0, 0)]).collect();
    assert_eq!(b, vec![1.0, -2.5, 1.0]);
    assert_eq!(model.a().coeff(0)[(0, 0)], -0.5);
    assert_eq!(model.a().coeff(1)[(0, 0)], 0.0);
}

#[test]
fn model_errors_carry_positions() {
    let bad = HS.replace("B 0 1 1 = -((theta3/theta2)+1+theta1)", "B 0 1 1 = theta3 +* 2");
    match parse_model(&bad) {
        Err(RatexError::Parse { line, column, .. }) => assert_eq!((line, column), (7, 19)),
        other => panic!("{other:?}"),
    }
    let bad = HS.replace("B 1 1 1 = 1", "B 1 2 1 = 1");
    assert!(matches!(parse_model(&bad), Err(RatexError::Parse { line: 8, .. })));
    let bad = HS.replace("A 0 1 1 = 1/theta2", "A 0 1 1 = 1/theta4");
    assert!(matches!(parse_model(&bad), Err(RatexError::Parse { line: 9, .. })));
}

#[test]
fn division_by_zero_is_an_error() {
    let map = parse_model(HS).unwrap();
    assert!(matches!(eval_model(&map, &[1.0, 0.0, -1.0]), Err(RatexError::DivisionByZero(..))));
}

#[test]
fn generic_ident_is_deterministic_across_thread_counts() {
    let map = parse_model(HS).unwrap();
    let d = Dims { n: 1, m: 1, kappa: 1, lambda: 1 };
    let pins = [(d.system_index(Block::B, 1, 0, 0).unwrap(), 1.0), (d.system_index(Block::A, 1, 0, 0).unwrap(), 0.0)];
    let r = GenericRestriction::System(AffineRestriction::pins(d.system_len(), &pins).unwrap());
    let cfg = SamplerConfig { num_samples: 24, seed: 99, min_valid: 8 };
    let a = generic_ident(&map, &r, &cfg, &tol());
    let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| generic_ident(&map, &r, &cfg, &tol()));
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.samples_valid, b.samples_valid);
    assert_eq!(a.deficient_count, b.deficient_count);
    assert_eq!(a.rejected, b.rejected);
    assert_eq!(a.verdict, GenericVerdict::EvidenceNotIdentified);
}

#[test]
fn generic_ident_with_too_few_samples_is_inconclusive() {
    let map = parse_model(HS).unwrap();
    let d = Dims { n: 1, m: 1, kappa: 1, lambda: 1 };
    let pins = [(d.system_index(Block::B, 1, 0, 0).unwrap(), 1.0), (d.system_index(Block::A, 1, 0, 0).unwrap(), 0.0)];
    let r = GenericRestriction::System(AffineRestriction::pins(d.system_len(), &pins).unwrap());
    let rep = generic_ident(&map, &r, &SamplerConfig { num_samples: 4, seed: 0, min_valid: 16 }, &tol());
    assert_eq!(rep.verdict, GenericVerdict::Inconclusive);
}

#[test]
fn local_ident_rejects_points_off_the_restriction() {
    let model = scalar_model(0, &[1.0], &[1.0], 0, 0);
    let map = ExprResidualMap::parse(&["A[0][1][1] - 2".into()], Dims::of(&model), None).unwrap();
    assert!(matches!(local_ident(&model, &map, &tol(), &FdConfig::default()), Err(RatexError::RestrictionNotSatisfied { .. })));
}

#[test]
fn nonlinear_restriction_identifies_locally() {
    // B_0 A_0 = 1 with B_0 = 1 pinned: the class {(c, c)} meets it at c = 1 only.
    let model = scalar_model(0, &[1.0], &[1.0], 0, 0);
    let map =
        ExprResidualMap::parse(&["B[0][1][1]*A[0][1][1] - 1".into(), "B[0][1][1] - 1".into()], Dims::of(&model), None).unwrap();
    let rep = local_ident(&model, &map, &tol(), &FdConfig::default()).unwrap();
    assert_eq!(rep.verdict, LocalVerdict::LocallyIdentified);
    assert!(!rep.notes.iter().any(|n| n == REGULARITY_CAVEAT));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn printer_and_parser_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        prop_assert_eq!(&back, &e, "printed as {}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fd_jacobian_of_affine_map_is_r(s in shapes(2), rows in 1..5usize) {
        let model = s.model();
        let d = Dims::of(&model);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(s.seed);
        let r = gaussian(&mut rng, rows, d.system_len());
        let x = system_vec(&model);
        let map = AffineResidualMap { u: &r * &x, r: r.clone(), equation: None, dims: d };
        let j = fd_jacobian(|y| map.eval(y), &x, &FdConfig::default()).unwrap();
        let rbar = pad_restriction(&j, &d, d.n);
        let want = pad_restriction(&r, &d, d.n);
        prop_assert!((rbar - want).amax() <= 1e-6 * (1.0 + r.amax()));
        prop_assert_eq!(map.output_dim(), rows);
    }

    #[test]
    fn local_and_affine_verdicts_agree_for_pins(s in shapes(2), k in 1..6usize) {
        let model = s.model();
        let d = Dims::of(&model);
        let x = system_vec(&model);
        let idx: Vec<usize> = (0..k).map(|i| (s.seed as usize).wrapping_add(i * 7919) % d.system_len()).collect();
        let r = DMatrix::from_fn(k, d.system_len(), |i, j| if idx[i] == j { 1.0 } else { 0.0 });
        let u: DVector<f64> = &r * &x;
        prop_assume!(u.amax() > 0.0);
        let sol = ratex_core::solve(&model, ratex_core::resolve::required_horizon(d.n, d.kappa, d.lambda), &tol()).unwrap();
        let sys = ratex_core::identcore::IdentSystem::from_bundle(&sol, &tol()).unwrap();
        let affine = ratex_core::identcore::ident_test_affine(&sys, &AffineRestriction::new(r.clone(), u.clone()).unwrap(), &tol()).unwrap();
        let local = local_ident(&model, &AffineResidualMap { r, u, equation: None, dims: d }, &tol(), &FdConfig::default()).unwrap();
        prop_assert_eq!(local.verdict == LocalVerdict::LocallyIdentified, affine.identified());
    }
}
