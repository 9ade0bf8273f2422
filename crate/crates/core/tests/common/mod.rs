#![allow(dead_code)]

use striplab_core::expr::parse;
use striplab_core::{CurveR3, Expr, RuledStrip, RulingField};

pub fn exprs(a: &str, b: &str, c: &str) -> [Expr; 3] {
    [parse(a).unwrap(), parse(b).unwrap(), parse(c).unwrap()]
}

pub fn example1_curve() -> CurveR3 {
    CurveR3::periodic(
        "example-1",
        exprs("sin(2*s)", "cos(2*s)", "sin(s)/sqrt(2)"),
        2.0 * std::f64::consts::PI,
    )
    .unwrap()
}

pub fn example1() -> RuledStrip {
    let r = RulingField::FrenetCombination {
        p: parse("(1/kappa)*(1/(2*speed) + tau)/sin(s/2)").unwrap(),
        q: parse("cos(s/2)").unwrap(),
        r: parse("sin(s/2)").unwrap(),
    };
    RuledStrip::new(example1_curve(), r, 0.3).unwrap()
}

pub fn example2_curve() -> CurveR3 {
    CurveR3::atlas(
        "example-2",
        exprs(
            "(0.4*s+s^3+s^5)/(1+(s+s^3)^2)",
            "(s+s^3)/(1+(s+s^3)^2)",
            "-1.6/(1+(s+s^3)^2)",
        ),
        exprs(
            "s*(0.4*s^4+s^2+1)/(s^6+(1+s^2)^2)",
            "s^3*(1+s^2)/(s^6+(1+s^2)^2)",
            "-1.6*s^6/(s^6+(1+s^2)^2)",
        ),
    )
}

pub fn example2() -> RuledStrip {
    RuledStrip::new(example2_curve(), RulingField::Darboux, 0.3).unwrap()
}
