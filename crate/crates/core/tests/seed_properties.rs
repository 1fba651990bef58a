use dlw_core::seedlab::{
    BinOp, CoeffExpr, Expr, Func, HeatPolynomial, Kernel, ParseError, SeedField, SeedSpec,
};
use dlw_core::{Branch, Point};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn expr(s: &str) -> CoeffExpr {
    CoeffExpr::parse(s).unwrap()
}

fn mixed_seed(branch: Branch) -> SeedSpec {
    SeedSpec {
        branch,
        constant_term: 2.0,
        kernels: vec![
            Kernel::new(1.0, expr("1 + 0.5*tanh(y)"), expr("0.2*y")),
            Kernel::new(0.7, expr("1.2*cos(0.3*y)"), expr("sin(y) - 0.4")),
        ],
        poly: Some(HeatPolynomial {
            c2: expr("0.3"),
            c1: expr("0.1*y"),
            c0: expr("sech(y)"),
        }),
    }
}

fn random_point(rng: &mut StdRng) -> Point {
    Point::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(0.0..1.0),
    )
}

#[test]
fn seeds_solve_the_heat_equation() {
    let mut rng = StdRng::seed_from_u64(7);
    for br in Branch::BOTH {
        let f = SeedField::new(mixed_seed(br)).unwrap();
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let d = f.partials(p).unwrap();
            let r = f.heat_residual(p).unwrap();
            assert!(r.abs() <= 1e-12 * (1.0 + d.t.abs()), "{br} {p:?}: {r:e}");
        }
    }
}

#[test]
fn analytic_partials_match_central_differences() {
    let step = 1e-6;
    let mut rng = StdRng::seed_from_u64(11);
    let f = SeedField::new(mixed_seed(Branch::Minus)).unwrap();
    let fd = |g: &dyn Fn(Point) -> f64, p: Point, dx: f64, dy: f64, dt: f64| {
        (g(p.shifted(dx * step, dy * step, dt * step))
            - g(p.shifted(-dx * step, -dy * step, -dt * step)))
            / (2.0 * step)
    };
    for _ in 0..50 {
        let p = random_point(&mut rng);
        let d = f.partials(p).unwrap();
        let phi = |q: Point| f.partials(q).unwrap().phi;
        let px = |q: Point| f.partials(q).unwrap().x;
        let pxx = |q: Point| f.partials(q).unwrap().xx;
        let checks = [
            ("x", d.x, fd(&phi, p, 1.0, 0.0, 0.0)),
            ("y", d.y, fd(&phi, p, 0.0, 1.0, 0.0)),
            ("t", d.t, fd(&phi, p, 0.0, 0.0, 1.0)),
            ("xx", d.xx, fd(&px, p, 1.0, 0.0, 0.0)),
            ("xy", d.xy, fd(&px, p, 0.0, 1.0, 0.0)),
            ("xxx", d.xxx, fd(&pxx, p, 1.0, 0.0, 0.0)),
            ("xxy", d.xxy, fd(&pxx, p, 0.0, 1.0, 0.0)),
        ];
        for (name, exact, approx) in checks {
            assert!(
                (exact - approx).abs() <= 1e-6 * (1.0 + exact.abs()),
                "{name} at {p:?}: {exact} vs {approx}"
            );
        }
    }
}

#[test]
fn superposition_is_linear() {
    let mut rng = StdRng::seed_from_u64(3);
    let full = mixed_seed(Branch::Plus);
    let mut first = full.clone();
    first.kernels.truncate(1);
    first.poly = None;
    let mut rest = full.clone();
    rest.constant_term = 0.0;
    rest.kernels.remove(0);
    let (full, first, rest) = (
        SeedField::new(full).unwrap(),
        SeedField::new(first).unwrap(),
        SeedField::new(rest).unwrap(),
    );
    for _ in 0..50 {
        let p = random_point(&mut rng);
        let (a, b, c) = (
            full.partials(p).unwrap(),
            first.partials(p).unwrap(),
            rest.partials(p).unwrap(),
        );
        for (s, l, r) in [
            (a.phi, b.phi, c.phi),
            (a.x, b.x, c.x),
            (a.y, b.y, c.y),
            (a.xy, b.xy, c.xy),
            (a.t, b.t, c.t),
        ] {
            assert!((s - (l + r)).abs() <= 1e-12 * (1.0 + s.abs()));
        }
    }
}

#[test]
fn wrong_time_rate_breaks_the_heat_equation() {
    let mut spec = SeedSpec::single_kernel(Branch::Plus, expr("1"), expr("y"));
    spec.kernels[0].time_factor = 1.3;
    let f = SeedField::new(spec).unwrap();
    let p = Point::new(0.2, 0.1, 0.3);
    let d = f.partials(p).unwrap();
    let r = f.heat_residual(p).unwrap();
    assert!(r.abs() >= 0.1 * d.t.abs(), "{r:e}");
}

#[test]
fn zero_seed_is_rejected_and_constants_accepted() {
    assert!(SeedField::new(SeedSpec::constant(Branch::Plus, 0.0)).is_err());
    assert!(SeedField::new(SeedSpec::constant(Branch::Plus, 1.0)).is_ok());
}

#[test]
fn parse_errors_carry_offsets() {
    match CoeffExpr::parse("tanj(y)").unwrap_err() {
        ParseError::UnknownFunction { name, offset } => {
            assert_eq!((name.as_str(), offset), ("tanj", 0))
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(CoeffExpr::parse("1 + z").unwrap_err().offset(), 4);
    assert_eq!(CoeffExpr::parse("y^1.5").unwrap_err().offset(), 2);
    assert!(CoeffExpr::parse("(1 + y").is_err());
}

fn ast() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..4000).prop_map(|n| Expr::Num(f64::from(n) / 8.0)),
        Just(Expr::Var)
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div)
        ];
        let func = prop::sample::select(Func::ALL.to_vec());
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::binary(o, l, r)),
            (inner.clone(), -3i32..=3).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
            (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

proptest! {
    #[test]
    fn rendering_round_trips(e in ast()) {
        let c = CoeffExpr::from_ast(e.clone());
        let text = c.to_string();
        let back = CoeffExpr::parse(&text).unwrap();
        prop_assert_eq!(back.ast(), &e, "{}", text);
    }
}
