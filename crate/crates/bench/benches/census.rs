use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use striplab_core::expr::{eval_jet, NoSymbols};
use striplab_core::singular::{enumerate_non_ce, xi_zero_components};
use striplab_core::{parse, CensusOptions, CurveR3, Expr, RuledStrip, RulingField};

fn exprs(a: &str, b: &str, c: &str) -> [Expr; 3] {
    [parse(a).unwrap(), parse(b).unwrap(), parse(c).unwrap()]
}

fn example1() -> RuledStrip {
    let c = CurveR3::periodic("example-1", exprs("sin(2*s)", "cos(2*s)", "sin(s)/sqrt(2)"), 2.0 * PI).unwrap();
    let r = RulingField::FrenetCombination {
        p: parse("(1/kappa)*(1/(2*speed) + tau)/sin(s/2)").unwrap(),
        q: parse("cos(s/2)").unwrap(),
        r: parse("sin(s/2)").unwrap(),
    };
    RuledStrip::new(c, r, 0.3).unwrap()
}

fn jets(c: &mut Criterion) {
    let e = parse("(0.4*s+s^3+s^5)/(1+(s+s^3)^2)").unwrap();
    c.bench_function("jet order 8", |b| b.iter(|| eval_jet(&e, black_box(0.3), 8, &NoSymbols).unwrap()));
    let st = example1();
    c.bench_function("frenet frame", |b| b.iter(|| st.curve().frenet(black_box(1.1)).unwrap()));
    c.bench_function("ruling jet order 2", |b| b.iter(|| st.xi_jet(black_box(1.1), 2).unwrap()));
}

fn scans(c: &mut Criterion) {
    let st = example1();
    let mut g = c.benchmark_group("scans");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    g.bench_function("xi' zero scan, 4096 samples", |b| {
        b.iter(|| xi_zero_components(&st, 4096, 0.0).unwrap())
    });
    g.bench_function("census example-1", |b| {
        b.iter(|| enumerate_non_ce(&st, &CensusOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, jets, scans);
criterion_main!(benches);
