use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use striplab_core::expr::{eval_jet, BinOp, Func, NoSymbols};
use striplab_core::{parse, Expr, Jet};

/// Random expression text that stays finite for s in [-1, 1].
fn random_expr(rng: &mut StdRng, depth: u32) -> String {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return if rng.random_range(0..3) == 0 {
            format!("{:.3}", rng.random_range(0.5..2.0))
        } else {
            "s".to_string()
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.random_range(0..9) {
        0 => format!("sin({a})"),
        1 => format!("cos({a})"),
        2 => format!("atan({a})"),
        3 => format!("sqrt(1 + ({a})^2)"),
        4 => format!("({a})^{}", rng.random_range(2..4)),
        5 => format!("({a}) + ({})", random_expr(rng, depth - 1)),
        6 => format!("({a}) - ({})", random_expr(rng, depth - 1)),
        7 => format!("({a})*({})", random_expr(rng, depth - 1)),
        _ => format!("({a})/(2.5 + sin({}))", random_expr(rng, depth - 1)),
    }
}

/// Plain floating-point evaluation, independent of the jet code.
fn eval_f64(e: &Expr, s: f64) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var => s,
        Expr::Sym(_) => panic!("no symbols here"),
        Expr::Neg(a) => -eval_f64(a, s),
        Expr::Func(f, a) => {
            let x = eval_f64(a, s);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sqrt => x.sqrt(),
                Func::Atan => x.atan(),
            }
        }
        Expr::Bin(op, a, b) => {
            let (x, y) = (eval_f64(a, s), eval_f64(b, s));
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
        Expr::Pow(a, n) => eval_f64(a, s).powi(*n),
    }
}

/// Five-point central difference with one Richardson step.
fn fd(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    let d = |h: f64| (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h);
    (16.0 * d(h / 2.0) - d(h)) / 15.0
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn jet_derivatives_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..50 {
        let text = random_expr(&mut rng, 4);
        let e = parse(&text).unwrap();
        let s = rng.random_range(-1.0..1.0);
        let j = eval_jet(&e, s, 4, &NoSymbols).unwrap();
        assert!(close(j.value(), eval_f64(&e, s), 1e-12), "{text}");
        let d1 = fd(|t| eval_f64(&e, t), s, 1e-3);
        assert!(close(j.deriv(1), d1, 1e-6), "{text}: {} vs {d1}", j.deriv(1));
        for k in 2..=4 {
            let dk = fd(|t| eval_jet(&e, t, k - 1, &NoSymbols).unwrap().deriv(k - 1), s, 1e-3);
            assert!(close(j.deriv(k), dk, 1e-6), "{text} order {k}: {} vs {dk}", j.deriv(k));
        }
    }
}

#[test]
fn removable_singularity_is_smooth() {
    // sin(s)/s at 0: 1 - s²/6 + s⁴/120.
    let e = parse("sin(s)/s").unwrap();
    let j = eval_jet(&e, 0.0, 4, &NoSymbols).unwrap();
    let want = [1.0, 0.0, -1.0 / 3.0, 0.0, 1.0 / 5.0];
    for (k, w) in want.iter().enumerate() {
        assert!((j.deriv(k) - w).abs() < 1e-10, "k={k}: {}", j.deriv(k));
    }
    let near = eval_jet(&e, 1e-6, 2, &NoSymbols).unwrap();
    assert!((near.value() - (1e-6f64).sin() / 1e-6).abs() < 1e-15);
    assert!((near.deriv(2) + 1.0 / 3.0).abs() < 1e-8);
}

proptest! {
    #[test]
    fn monomial_jets(n in 0i32..7, s0 in -2.0f64..2.0) {
        let j = Jet::variable(s0, 6).powi(n).unwrap();
        let mut fall = 1.0;
        for k in 0..=6usize {
            let want = if (k as i32) <= n { fall * s0.powi(n - k as i32) } else { 0.0 };
            prop_assert!((j.deriv(k) - want).abs() <= 1e-9 * want.abs().max(1.0));
            fall *= (n - k as i32) as f64;
        }
    }

    #[test]
    fn leibniz_rule(s0 in -1.5f64..1.5) {
        let x = Jet::variable(s0, 5);
        let f = x.sin();
        let g = x.add_const(2.0).sqrt().unwrap();
        let p = &f * &g;
        // (fg)^(k) = Σ C(k, i) f^(i) g^(k-i)
        for k in 0..=5usize {
            let mut acc = 0.0;
            let mut c = 1.0;
            for i in 0..=k {
                acc += c * f.deriv(i) * g.deriv(k - i);
                c = c * (k - i) as f64 / (i + 1) as f64;
            }
            prop_assert!((p.deriv(k) - acc).abs() <= 1e-10 * acc.abs().max(1.0));
        }
    }

    #[test]
    fn pythagoras_and_division(s0 in -3.0f64..3.0) {
        let x = Jet::variable(s0, 6);
        let (sn, cs) = x.sin_cos();
        let one = &(&sn * &sn) + &(&cs * &cs);
        prop_assert!((one.value() - 1.0).abs() < 1e-14);
        for k in 1..=6 {
            prop_assert!(one.deriv(k).abs() < 1e-10);
        }
        let d = x.add_const(4.0);
        let q = (&sn * &d).checked_div(&d).unwrap();
        for k in 0..=6 {
            prop_assert!((q.deriv(k) - sn.deriv(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_matches_direct_evaluation(s0 in -1.0f64..1.0, dt in -0.2f64..0.2) {
        let f = |s: f64| Jet::variable(s, 30).sin().scale(3.0);
        let shifted = f(s0).shift_to(s0 + dt, 4);
        let direct = f(s0 + dt);
        for k in 0..=4 {
            prop_assert!((shifted.deriv(k) - direct.deriv(k)).abs() < 1e-10);
        }
    }
}
