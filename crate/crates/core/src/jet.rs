//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] carries the value and the first `K` derivatives of a scalar
//! function at a base point. Coefficients are raw derivative values
//! (`d[k] = f^(k)(s0)`), not Taylor coefficients; the recurrences below work
//! on Taylor coefficients internally and convert at the boundary.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Relative threshold under which a leading coefficient counts as zero when
/// dividing.
pub const CANCEL_TOL: f64 = 1e-9;

/// Largest number of leading zeros a division may cancel.
pub const MAX_CANCEL_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("pole at s = {s0}: denominator vanishes to order {den_order} but numerator does not")]
    Pole { s0: f64, den_order: usize },
    #[error("division at s = {s0} needs more than {MAX_CANCEL_ORDER} orders of cancellation")]
    CancellationTooDeep { s0: f64 },
    #[error("sqrt of non-positive value {value} at s = {s0}")]
    NegativeSqrt { s0: f64, value: f64 },
    #[error("non-finite jet coefficient at s = {s0}")]
    NonFinite { s0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    s0: f64,
    d: Vec<f64>,
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    f.push(acc);
    for k in 1..=n {
        acc *= k as f64;
        f.push(acc);
    }
    f
}

impl Jet {
    pub fn constant(s0: f64, value: f64, order: usize) -> Self {
        let mut d = vec![0.0; order + 1];
        d[0] = value;
        Jet { s0, d }
    }

    /// The identity function `s ↦ s` expanded at `s0`.
    pub fn variable(s0: f64, order: usize) -> Self {
        let mut d = vec![0.0; order + 1];
        d[0] = s0;
        if order >= 1 {
            d[1] = 1.0;
        }
        Jet { s0, d }
    }

    /// Builds a jet from raw derivative values `f(s0), f'(s0), ...`.
    pub fn from_derivs(s0: f64, d: Vec<f64>) -> Self {
        assert!(!d.is_empty(), "a jet needs at least the value");
        Jet { s0, d }
    }

    fn from_taylor(s0: f64, c: &[f64]) -> Self {
        let f = factorials(c.len());
        Jet {
            s0,
            d: c.iter().zip(&f).map(|(c, f)| c * f).collect(),
        }
    }

    fn taylor(&self) -> Vec<f64> {
        let f = factorials(self.d.len());
        self.d.iter().zip(&f).map(|(d, f)| d / f).collect()
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    /// k-th derivative at the base point. Panics past the order.
    pub fn deriv(&self, k: usize) -> f64 {
        self.d[k]
    }

    pub fn derivs(&self) -> &[f64] {
        &self.d
    }

    pub fn is_finite(&self) -> bool {
        self.d.iter().all(|x| x.is_finite())
    }

    pub fn check_finite(self) -> Result<Self, JetError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(JetError::NonFinite { s0: self.s0 })
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let n = (order + 1).min(self.d.len());
        Jet {
            s0: self.s0,
            d: self.d[..n].to_vec(),
        }
    }

    /// Derivative as a jet of one order less.
    pub fn differentiate(&self) -> Jet {
        if self.d.len() == 1 {
            return Jet::constant(self.s0, 0.0, 0);
        }
        Jet {
            s0: self.s0,
            d: self.d[1..].to_vec(),
        }
    }

    /// Largest magnitude among the leading Taylor coefficients (those a
    /// division may cancel, plus one), used to scale zero tests.
    pub fn magnitude(&self) -> f64 {
        lead_magnitude(&self.taylor())
    }

    /// Re-expands the jet about `s1` by summing its Taylor polynomial.
    /// Accuracy depends on `|s1 - s0|` being well inside the radius of
    /// convergence; the caller supplies enough extra orders.
    pub fn shift_to(&self, s1: f64, order: usize) -> Jet {
        let c = self.taylor();
        let h = s1 - self.s0;
        let n = c.len();
        let order = order.min(n - 1);
        let mut out = Vec::with_capacity(order + 1);
        // Taylor coefficients about s1: b_j = sum_k C(k, j) c_k h^(k-j).
        for j in 0..=order {
            let mut acc = 0.0;
            let mut binom = 1.0;
            let mut hp = 1.0;
            for k in j..n {
                acc += binom * c[k] * hp;
                hp *= h;
                binom = binom * (k + 1) as f64 / (k + 1 - j) as f64;
            }
            out.push(acc);
        }
        Jet::from_taylor(s1, &out)
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            s0: self.s0,
            d: self.d.iter().map(|x| x * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Jet {
        let mut out = self.clone();
        out.d[0] += k;
        out
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(
            (self.s0 - other.s0).abs() <= 1e-12 * (1.0 + self.s0.abs()),
            "jets expanded at different points"
        );
        let n = self.d.len().min(other.d.len());
        Jet {
            s0: self.s0,
            d: (0..n).map(|k| f(self.d[k], other.d[k])).collect(),
        }
    }

    fn mul_taylor(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().min(b.len());
        (0..n)
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect()
    }

    /// Plain series division; `b[0]` must be nonzero.
    fn div_taylor(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().min(b.len());
        let mut q: Vec<f64> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = a[k];
            for j in 0..k {
                acc -= q[j] * b[k - j];
            }
            q.push(acc / b[0]);
        }
        q
    }

    /// Leading zero count of a Taylor series under the cancellation tolerance.
    fn leading_zeros(c: &[f64], mag: f64) -> usize {
        let tol = CANCEL_TOL * (1.0 + mag);
        c.iter()
            .take(MAX_CANCEL_ORDER + 1)
            .take_while(|x| x.abs() <= tol)
            .count()
    }

    /// Number of leading coefficients of `self` that count as zero.
    pub fn zero_order(&self) -> usize {
        let c = self.taylor();
        Self::leading_zeros(&c, lead_magnitude(&c))
    }

    /// Division with leading-zero cancellation.
    ///
    /// If the denominator vanishes to order `m` at the base point the
    /// numerator must vanish to at least the same order; both series are
    /// shifted by `m` before dividing and the result loses `m` orders.
    pub fn checked_div(&self, den: &Jet) -> Result<Jet, JetError> {
        let a = self.taylor();
        let b = den.taylor();
        let n = a.len().min(b.len());
        let bmag = lead_magnitude(&b);
        let m = Self::leading_zeros(&b[..n], bmag);
        if m == 0 {
            return Jet::from_taylor(self.s0, &Self::div_taylor(&a[..n], &b[..n])).check_finite();
        }
        if m >= n {
            return Err(JetError::Pole {
                s0: self.s0,
                den_order: m,
            });
        }
        if m > MAX_CANCEL_ORDER {
            return Err(JetError::CancellationTooDeep { s0: self.s0 });
        }
        let amag = lead_magnitude(&a);
        let tol = CANCEL_TOL * (1.0 + amag.max(bmag));
        if a[..m].iter().any(|x| x.abs() > tol) {
            return Err(JetError::Pole {
                s0: self.s0,
                den_order: m,
            });
        }
        Jet::from_taylor(self.s0, &Self::div_taylor(&a[m..n], &b[m..n])).check_finite()
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        Jet::constant(self.s0, 1.0, self.order()).checked_div(self)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = self.taylor();
        if !(a[0] > 0.0) {
            return Err(JetError::NegativeSqrt {
                s0: self.s0,
                value: a[0],
            });
        }
        let n = a.len();
        let mut r = vec![0.0; n];
        r[0] = a[0].sqrt();
        for k in 1..n {
            let mut acc = a[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r[k] = acc / (2.0 * r[0]);
        }
        Jet::from_taylor(self.s0, &r).check_finite()
    }

    /// Sine and cosine in one pass.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let a = self.taylor();
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let w = j as f64 * a[j];
                ss += w * c[k - j];
                cc -= w * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet::from_taylor(self.s0, &s), Jet::from_taylor(self.s0, &c))
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }

    pub fn atan(&self) -> Jet {
        let a = self.taylor();
        let n = a.len();
        // g' = a' / (1 + a^2)
        let mut one_plus_sq = Self::mul_taylor(&a, &a);
        one_plus_sq[0] += 1.0;
        let h = Self::div_taylor(&vec_unit(n), &one_plus_sq);
        let mut g = vec![0.0; n];
        g[0] = a[0].atan();
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * h[k - j];
            }
            g[k] = acc / k as f64;
        }
        Jet::from_taylor(self.s0, &g)
    }

    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(self.s0, 1.0, self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }
}

fn lead_magnitude(c: &[f64]) -> f64 {
    c.iter()
        .take(MAX_CANCEL_ORDER + 2)
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn vec_unit(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert!((self.s0 - rhs.s0).abs() <= 1e-12 * (1.0 + self.s0.abs()));
        Jet::from_taylor(self.s0, &Jet::mul_taylor(&self.taylor(), &rhs.taylor()))
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
