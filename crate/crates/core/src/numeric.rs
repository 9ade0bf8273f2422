//! Scalar numerics shared by the geometry modules: adaptive quadrature,
//! bracketed root refinement, and zero-set scanning on a circle.

/// 15-point Kronrod nodes on [0, 1] (symmetric) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
/// 7-point Gauss weights for the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<E>(f: &mut impl FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<(f64, f64), E> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, E> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (v, err) = gk15(&mut f, lo, hi)?;
        if err <= t || depth >= 40 || (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t, depth + 1));
            stack.push((mid, hi, 0.5 * t, depth + 1));
        }
    }
    Ok(total)
}

/// Bisection on a bracket with `f(a)` and `f(b)` of opposite sign (or one
/// of them zero). Stops once the bracket is narrower than `xtol`.
pub fn bisect<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<f64, E> {
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for a local minimum of `f` in `[a, b]`.
pub fn golden_min<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<(f64, f64), E> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// A maximal connected piece of a zero set on a circle of length `period`.
/// Isolated zeros have `start == end`. `start` lies in the scanned
/// fundamental domain; `end` may exceed it by less than one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroComponent {
    pub start: f64,
    pub end: f64,
}

impl ZeroComponent {
    pub fn is_point(&self) -> bool {
        self.start == self.end
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Finds the connected components of `{ |f| <= tol }` over one period
/// `[origin, origin + period)`.
///
/// `f` is sampled at `samples` points. Stretches where `|f|` stays small
/// are tracked with hysteresis (enter at `tol / 2`, leave at `2 tol`);
/// isolated zeros are found from sign changes and from sampled local minima
/// of `|f|`, and refined to `xtol`. When `odd` is set the function flips sign
/// after one period, which matters for the wrap-around sample.
pub fn zero_components<E>(
    f: &(dyn Fn(f64) -> Result<f64, E> + Sync),
    origin: f64,
    period: f64,
    samples: usize,
    tol: f64,
    odd: bool,
    xtol: f64,
) -> Result<Vec<ZeroComponent>, E>
where
    E: Send,
{
    use rayon::prelude::*;
    let n = samples.max(8);
    let h = period / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| origin + i as f64 * h).collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect::<Result<_, E>>()?;
    let wrap_sign = if odd { -1.0 } else { 1.0 };
    // Value at sample i, with i allowed to run one period ahead.
    let at = |i: usize| -> f64 {
        if i < n {
            vals[i]
        } else {
            wrap_sign * vals[i - n]
        }
    };

    // Stretches under hysteresis.
    let mut inside = vec![false; n];
    {
        let start = (0..n).find(|&i| vals[i].abs() >= 2.0 * tol);
        match start {
            None => {
                if vals.iter().all(|v| v.abs() <= tol) {
                    return Ok(vec![ZeroComponent {
                        start: origin,
                        end: origin + period,
                    }]);
                }
            }
            Some(s0) => {
                let mut state = false;
                for k in 0..n {
                    let i = (s0 + k) % n;
                    let a = vals[i].abs();
                    if !state && a <= 0.5 * tol {
                        state = true;
                    } else if state && a >= 2.0 * tol {
                        state = false;
                    }
                    inside[i] = state;
                }
            }
        }
    }

    let mut comps: Vec<ZeroComponent> = Vec::new();
    // Runs of `inside` samples (cyclic), each at least two samples long.
    let mut visited = vec![false; n];
    for i in 0..n {
        if !inside[i] || visited[i] || inside[(i + n - 1) % n] {
            continue;
        }
        let mut j = i;
        while inside[(j + 1) % n] && j + 1 < i + n {
            j += 1;
        }
        for k in i..=j {
            visited[k % n] = true;
        }
        if j > i {
            comps.push(ZeroComponent {
                start: origin + i as f64 * h,
                end: origin + j as f64 * h,
            });
        }
    }
    let in_run = |x: f64, comps: &[ZeroComponent]| {
        comps.iter().filter(|c| !c.is_point()).any(|c| {
            let y = origin + (x - origin).rem_euclid(period);
            (y >= c.start - h && y <= c.end + h) || (y + period >= c.start - h && y + period <= c.end + h)
        })
    };

    let vmax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut points = Vec::new();
    for i in 0..n {
        let (a, b) = (at(i), at(i + 1));
        let (xa, xb) = (origin + i as f64 * h, origin + (i + 1) as f64 * h);
        if a == 0.0 {
            points.push(xa);
        } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
            points.push(bisect(f, xa, xb, xtol)?);
        } else {
            // Touching zeros show up as local minima of |f|.
            let prev = at((i + n - 1) % n).abs();
            if a.abs() < prev && a.abs() <= b.abs() && a.abs() < 1e-2 * vmax {
                let (xm, fm) = golden_min(|x| f(x).map(f64::abs), xa - h, xb, xtol)?;
                if fm <= tol {
                    points.push(xm);
                }
            }
        }
    }
    for x in points {
        let x = origin + (x - origin).rem_euclid(period);
        if in_run(x, &comps) {
            continue;
        }
        if comps
            .iter()
            .any(|c| c.is_point() && ((c.start - x).abs() < 4.0 * xtol.max(1e-12) || (c.start - x).abs() > period - 4.0 * xtol.max(1e-12)))
        {
            continue;
        }
        comps.push(ZeroComponent { start: x, end: x });
    }
    comps.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok(comps)
}

/// Shortest round-trip is not required: numbers are printed with nine
/// significant digits, like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        let m = trim_zeros(mant);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;
    use std::f64::consts::PI;

    fn ok(x: f64) -> Result<f64, Infallible> {
        Ok(x)
    }

    #[test]
    fn quadrature_of_smooth_and_peaked() {
        let v = integrate(|x| ok(x.sin()), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| ok(1.0 / (1e-4 + x * x)), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-8, "{v} {exact}");
    }

    #[test]
    fn bisection_to_tolerance() {
        let r = bisect(|x| ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sine_zero_components() {
        let f = |x: f64| ok(x.sin());
        let c = zero_components(&f, 0.1, 2.0 * PI, 1000, 1e-9, false, 1e-13).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c[0].start - PI).abs() < 1e-12);
        assert!((c[1].start - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn odd_periodic_wraps_with_sign_flip() {
        // sin(x/2) is 2π-odd-periodic with a single zero per period.
        let f = |x: f64| ok((0.5 * x).sin());
        let c = zero_components(&f, -1.0, 2.0 * PI, 501, 1e-9, true, 1e-13).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].start.abs() < 1e-12);
    }

    #[test]
    fn touching_zero_and_flat_interval() {
        let f = |x: f64| ok((x.sin() - 1.0).powi(2));
        let c = zero_components(&f, 0.0, 2.0 * PI, 997, 1e-9, false, 1e-12).unwrap();
        assert_eq!(c.len(), 1);
        let h = 2.0 * PI / 997.0;
        assert!(c[0].start - h <= PI / 2.0 && PI / 2.0 <= c[0].end + h, "{c:?}");

        let flat = |x: f64| ok(if (1.0..2.0).contains(&x) { 0.0 } else { (x - 1.5).abs() - 0.5 });
        let c = zero_components(&flat, 0.0, 4.0, 400, 1e-9, false, 1e-12).unwrap();
        assert_eq!(c.len(), 1, "{c:?}");
        assert!(!c[0].is_point());
        assert!((c[0].start - 1.0).abs() < 0.02 && (c[0].end - 2.0).abs() < 0.02);
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(-0.5), "-0.5");
        assert_eq!(fmt_sig9(PI), "3.14159265");
        assert_eq!(fmt_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig9(0.000123456789123), "0.000123456789");
    }
}
