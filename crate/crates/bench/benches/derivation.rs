use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dlw_core::balance::{build_residuals, solve_balance_exponents, verify_factorization};
use dlw_core::{Branch, JetPoly};
use num_rational::BigRational;

fn derivation(c: &mut Criterion) {
    c.bench_function("solve_balance_exponents", |b| {
        b.iter(solve_balance_exponents)
    });
    let minus_one = BigRational::from_integer((-1).into());
    c.bench_function("build_residuals", |b| {
        b.iter(|| build_residuals(black_box(&minus_one)))
    });
    c.bench_function("verify_factorization/plus", |b| {
        b.iter(|| verify_factorization(black_box(Branch::Plus)))
    });
    let e2 = build_residuals(&minus_one).unwrap().e2;
    c.bench_function("specialize_and_reduce/e2", |b| {
        b.iter(|| -> JetPoly {
            black_box(&e2)
                .specialize_log(Branch::Minus)
                .unwrap()
                .reduce_heat(Branch::Minus)
                .unwrap()
        })
    });
    c.bench_function("derive", |b| b.iter(dlw_core::derive));
}

criterion_group!(benches, derivation);
criterion_main!(benches);
