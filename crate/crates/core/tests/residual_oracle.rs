use dlw_core::field::PerturbedH;
use dlw_core::residual::{
    convergence_order, fd_residual_1d, fd_residual_dlw, grid_report, grid_report_serial,
    ratio_survey, ConvergenceOrder, SECOND_ORDER_BAND,
};
use dlw_core::seedlab::{HeatPolynomial, Kernel};
use dlw_core::transform::{ReducedWave, TransformSampler};
use dlw_core::{Branch, CoeffExpr, GridSpec, Point, SeedField, SeedSpec, StencilConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn expr(s: &str) -> CoeffExpr {
    CoeffExpr::parse(s).unwrap()
}

fn sampler(spec: SeedSpec) -> TransformSampler {
    TransformSampler::new(SeedField::new(spec).unwrap())
}

fn single(branch: Branch) -> TransformSampler {
    sampler(SeedSpec::single_kernel(branch, expr("1"), expr("1*y")))
}

fn two_kernel(branch: Branch) -> TransformSampler {
    let mut spec = SeedSpec::single_kernel(branch, expr("1"), expr("0.3*y"));
    spec.kernels
        .push(Kernel::new(1.0, expr("1.6"), expr("-0.4*y")));
    sampler(spec)
}

fn unit_grid(n: usize, nt: usize) -> GridSpec {
    GridSpec {
        x0: -3.0,
        x1: 3.0,
        nx: n,
        y0: -3.0,
        y1: 3.0,
        ny: n,
        t0: 0.0,
        t1: 1.0,
        nt,
    }
}

#[test]
fn single_kernel_point_residual_is_leading_truncation() {
    // Leading error of the r1 stencil at this point is -h^2 / 8, from the
    // fourth derivatives of the closed-form fields.
    let cfg = StencilConfig::default();
    let (r1, r2) =
        fd_residual_dlw(&single(Branch::Plus), Point::new(0.3, -0.2, 0.1), &cfg).unwrap();
    let predicted = -cfg.step * cfg.step / 8.0;
    assert!((r1 - predicted).abs() <= 1e-8, "{r1:e} vs {predicted:e}");
    assert!(r2.abs() <= 1e-5, "{r2:e}");
}

#[test]
fn perturbed_depth_is_detected_and_does_not_converge() {
    let bad = PerturbedH {
        inner: single(Branch::Plus),
        amount: 0.01,
    };
    let p = Point::new(0.3, -0.2, 0.1);
    let (r1, _) = fd_residual_dlw(&bad, p, &StencilConfig::default()).unwrap();
    assert!((r1 - 0.02).abs() < 1e-4, "{r1}");
    let est = convergence_order(&bad, p, (0.1, 0.05)).unwrap();
    let order = est.orders[0].order().unwrap();
    assert!(order.abs() < 0.1, "{order}");
}

#[test]
fn single_kernel_converges_at_second_order() {
    for br in Branch::BOTH {
        let est = convergence_order(&single(br), Point::new(0.3, -0.2, 0.1), (0.1, 0.05)).unwrap();
        for o in est.orders {
            let p = o.order().unwrap();
            assert!((1.5..=2.5).contains(&p), "{br}: {p}");
        }
    }
}

#[test]
fn grid_reports_for_kernel_seeds() {
    let grid = unit_grid(21, 5);
    let cfg = StencilConfig::default();
    for br in Branch::BOTH {
        for (name, s) in [("single", single(br)), ("two", two_kernel(br))] {
            let r = grid_report(&s, &grid, &cfg);
            assert_eq!(r.skipped, 0, "{name} {br}");
            assert_eq!(r.evaluated, grid.len());
            assert!(r.max_abs() <= 1e-5, "{name} {br}: {:e}", r.max_abs());
        }
    }
}

#[test]
fn unit_scale_parameters_meet_the_default_bound() {
    let mut rng = StdRng::seed_from_u64(42);
    let grid = unit_grid(11, 3);
    for _ in 0..6 {
        let (a, c) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let br = if rng.gen() {
            Branch::Plus
        } else {
            Branch::Minus
        };
        let s = sampler(SeedSpec::single_kernel(
            br,
            CoeffExpr::constant(a),
            CoeffExpr::linear(c, 0.2),
        ));
        let r = grid_report(&s, &grid, &StencilConfig::default());
        assert!(r.max_abs() <= 1e-5, "a={a} c={c}: {:e}", r.max_abs());
    }
}

#[test]
fn large_amplitude_residual_is_truncation_error() {
    let s = sampler(SeedSpec::single_kernel(
        Branch::Plus,
        expr("2"),
        expr("2*y"),
    ));
    let grid = unit_grid(11, 3);
    let coarse = grid_report(&s, &grid, &StencilConfig::new(5e-3).unwrap()).max_abs();
    let fine = grid_report(&s, &grid, &StencilConfig::new(2.5e-3).unwrap()).max_abs();
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "{coarse:e} / {fine:e} = {ratio}"
    );
}

#[test]
fn heat_polynomial_poles_are_skipped() {
    let spec = SeedSpec {
        branch: Branch::Plus,
        constant_term: 0.0,
        kernels: vec![],
        poly: Some(HeatPolynomial {
            c2: expr("1"),
            c1: expr("0"),
            c0: expr("0"),
        }),
    };
    let grid = GridSpec {
        x0: -2.0,
        x1: 2.0,
        nx: 21,
        y0: -1.0,
        y1: 1.0,
        ny: 5,
        t0: 0.18,
        t1: 0.98,
        nt: 3,
    };
    let r = grid_report(&sampler(spec), &grid, &StencilConfig::default());
    assert!(r.skipped > 0);
    assert!(r.evaluated > 0);
    assert!(r.max_abs() <= 1e-5, "{:e} at {:?}", r.max_abs(), r.worst);
}

#[test]
fn reduced_wave_residuals() {
    let cfg = StencilConfig::default();
    for br in Branch::BOTH {
        let wave = ReducedWave {
            a: 1.0,
            d: 0.0,
            branch: br,
        };
        for i in 0..41 {
            let z = -4.0 + 0.2 * f64::from(i);
            let (r1, r2) = fd_residual_1d(&wave, z, 0.5, &cfg).unwrap();
            assert!(
                r1.abs() <= 1e-5 && r2.abs() <= 1e-5,
                "{br} z={z}: {r1:e} {r2:e}"
            );
        }
    }
    let mut rng = StdRng::seed_from_u64(50);
    let wave = ReducedWave {
        a: 0.5,
        d: 0.0,
        branch: Branch::Plus,
    };
    for _ in 0..50 {
        let (z, t) = (rng.gen_range(-6.0..6.0), rng.gen_range(0.0..2.0));
        let (r1, r2) = fd_residual_1d(&wave, z, t, &cfg).unwrap();
        assert!(
            r1.abs() <= 1e-6 && r2.abs() <= 1e-6,
            "z={z} t={t}: {r1:e} {r2:e}"
        );
    }
}

#[test]
fn parallel_and_serial_reports_agree() {
    let grid = unit_grid(9, 3);
    let cfg = StencilConfig::default();
    let s = two_kernel(Branch::Minus);
    assert_eq!(
        grid_report(&s, &grid, &cfg),
        grid_report_serial(&s, &grid, &cfg)
    );
}

#[test]
fn vacuum_survey_has_nothing_to_measure() {
    let s = sampler(SeedSpec::constant(Branch::Plus, 1.0));
    let survey = ratio_survey(&s, &unit_grid(5, 2), (0.1, 0.05), SECOND_ORDER_BAND);
    assert_eq!(survey.measured, 0);
    let est = convergence_order(&s, Point::ORIGIN, (0.1, 0.05)).unwrap();
    assert_eq!(est.orders, [ConvergenceOrder::ExactToRoundoff; 2]);
}

#[test]
fn step_halving_ratios_cluster_at_four() {
    let survey = ratio_survey(
        &single(Branch::Plus),
        &unit_grid(21, 5),
        (0.1, 0.05),
        SECOND_ORDER_BAND,
    );
    assert!(survey.measured > 0);
    // Outliers sit where the leading truncation coefficient changes sign, so
    // they carry only a small fraction of the largest residual.
    let frac = survey.outliers.len() as f64 / survey.measured as f64;
    assert!(frac < 0.05, "{frac}");
}
