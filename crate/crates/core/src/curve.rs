//! Closed space curves with derivative access, the Frenet apparatus,
//! conical curvature, and arc length.
//!
//! A curve is either `l`-periodic in its parameter, or given by two charts
//! covering `ℝ ∪ {∞}` with transition `s = 1/t`. Atlas curves are evaluated
//! in a global circle parameter `θ ∈ [-π, π)` of period `2π`: chart 1 uses
//! `s = tan(θ/2)` and chart 2 uses `t = cot(θ/2)`, so both charts agree to
//! all orders and `θ = π` is the chart-2 origin (`s = ∞`).

use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::Vector3;
use thiserror::Error;

use crate::expr::{eval_jet, EvalError, Expr, NoSymbols, Resolver, Symbol};
use crate::expr::{REMOVABLE_EXTRA_ORDERS, REMOVABLE_WINDOW};
use crate::jet::{Jet, JetError};
use crate::numeric::{bisect, integrate};
use crate::vjet::VJet;

/// Default jet order used by the analysis code.
pub const JET_ORDER: usize = 6;

/// Samples used when scanning for inflection points.
const INFLECTION_SCAN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("evaluation failed at parameter {s}: {source}")]
    Eval { s: f64, source: EvalError },
    #[error("curvature vanishes at parameter {s}; the Frenet frame is undefined there")]
    InflectionPoint { s: f64 },
    #[error("curve is not regular at parameter {s}")]
    NotRegular { s: f64 },
    #[error("curve does not close up: |γ(s + l) − γ(s)| = {gap:e} at s = {s}")]
    NotClosed { s: f64, gap: f64 },
    #[error("charts disagree by {gap:e} at s = {s}")]
    ChartMismatch { s: f64, gap: f64 },
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("inflection at parameter {s} is not eligible: {reason}")]
    IneligibleInflection { s: f64, reason: String },
}

impl CurveError {
    fn at(s: f64) -> impl Fn(EvalError) -> CurveError {
        move |source| CurveError::Eval { s, source }
    }

    fn jet(s: f64) -> impl Fn(JetError) -> CurveError {
        move |e| CurveError::Eval {
            s,
            source: EvalError::Jet(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    Periodic { comps: [Expr; 3], period: f64 },
    Atlas { chart1: [Expr; 3], chart2: [Expr; 3] },
}

/// Where a global parameter value lands in the user's coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    /// 1 for the periodic parameter or the first chart, 2 for the second.
    pub chart: u8,
    /// Chart coordinate; infinite never occurs since each chart is used on
    /// `|coord| <= 1` for atlas curves.
    pub coord: f64,
}

#[derive(Debug, Clone)]
pub struct CurveR3 {
    name: String,
    kind: CurveKind,
    inflections: OnceLock<Result<Vec<f64>, CurveError>>,
    /// Wide expansions at inflections, keyed by (parameter bits, order).
    expansions: Arc<Mutex<HashMap<(u64, usize), Arc<Regularized>>>>,
    /// Wide symbol jets requested by removable divisions.
    symbols: Arc<Mutex<HashMap<(Symbol, u64, usize), Jet>>>,
}

impl PartialEq for CurveR3 {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub s: f64,
    pub e: Vector3<f64>,
    pub n: Vector3<f64>,
    pub b: Vector3<f64>,
    pub kappa: f64,
    pub tau: f64,
}

/// Smooth replacements for `γ′ × γ″` and `det(γ′, γ″, γ‴)` that stay
/// nonzero (resp. finite) across simple inflection points.
#[derive(Debug, Clone)]
struct Regularized {
    cross: VJet,
    det: Jet,
}

impl CurveR3 {
    pub fn periodic(name: impl Into<String>, comps: [Expr; 3], period: f64) -> Result<Self, CurveError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(CurveError::BadPeriod(period));
        }
        Ok(CurveR3 {
            name: name.into(),
            kind: CurveKind::Periodic { comps, period },
            inflections: OnceLock::new(),
            expansions: Arc::default(),
            symbols: Arc::default(),
        })
    }

    pub fn atlas(name: impl Into<String>, chart1: [Expr; 3], chart2: [Expr; 3]) -> Self {
        CurveR3 {
            name: name.into(),
            kind: CurveKind::Atlas { chart1, chart2 },
            inflections: OnceLock::new(),
            expansions: Arc::default(),
            symbols: Arc::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        match &self.kind {
            CurveKind::Periodic { period, .. } => *period,
            CurveKind::Atlas { .. } => 2.0 * PI,
        }
    }

    pub fn is_atlas(&self) -> bool {
        matches!(self.kind, CurveKind::Atlas { .. })
    }

    /// Maps a global parameter to the chart the user wrote the curve in.
    pub fn chart_point(&self, theta: f64) -> ChartPoint {
        match &self.kind {
            CurveKind::Periodic { .. } => ChartPoint { chart: 1, coord: theta },
            CurveKind::Atlas { .. } => {
                let w = wrap_pi(theta);
                if w.abs() <= 0.5 * PI {
                    ChartPoint {
                        chart: 1,
                        coord: (0.5 * w).tan(),
                    }
                } else {
                    let half = 0.5 * w;
                    ChartPoint {
                        chart: 2,
                        coord: half.cos() / half.sin(),
                    }
                }
            }
        }
    }

    /// Inverse of [`chart_point`](Self::chart_point).
    pub fn theta_of(&self, chart: u8, coord: f64) -> f64 {
        match (&self.kind, chart) {
            (CurveKind::Periodic { .. }, _) => coord,
            (CurveKind::Atlas { .. }, 1) => 2.0 * coord.atan(),
            (CurveKind::Atlas { .. }, _) => {
                // t = cot(θ/2), θ ∈ (0, 2π) mapped back to [-π, π).
                let th = 2.0 * (0.5 * PI - coord.atan());
                wrap_pi(th)
            }
        }
    }

    /// Jet of γ in the global parameter.
    pub fn position_jet(&self, theta: f64, order: usize) -> Result<VJet, CurveError> {
        let (comps, var) = match &self.kind {
            CurveKind::Periodic { comps, .. } => (comps, None),
            CurveKind::Atlas { chart1, chart2 } => {
                let w = wrap_pi(theta);
                let half = Jet::variable(w, order).scale(0.5);
                let (sn, cs) = half.sin_cos();
                if w.abs() <= 0.5 * PI {
                    (chart1, Some(sn.checked_div(&cs).map_err(CurveError::jet(theta))?))
                } else {
                    (chart2, Some(cs.checked_div(&sn).map_err(CurveError::jet(theta))?))
                }
            }
        };
        let eval = |e: &Expr| -> Result<Jet, CurveError> {
            match &var {
                None => eval_jet(e, theta, order, &NoSymbols).map_err(CurveError::at(theta)),
                Some(v) => {
                    // Evaluate in the chart coordinate, then compose with the
                    // chart map by re-evaluating the expression with the chart
                    // jet as its variable.
                    compose(e, v).map_err(CurveError::at(theta))
                }
            }
        };
        let [x, y, z] = comps;
        let j = VJet::new(eval(x)?, eval(y)?, eval(z)?);
        // Rebase onto θ so arithmetic with other θ-jets lines up.
        Ok(VJet(j.0.map(|c| Jet::from_derivs(theta, c.derivs().to_vec()))))
    }

    /// γ, γ′, …, γ^(order) at `theta`.
    pub fn derivatives(&self, theta: f64, order: usize) -> Result<Vec<Vector3<f64>>, CurveError> {
        let j = self.position_jet(theta, order)?;
        Ok((0..=order).map(|k| j.deriv(k)).collect())
    }

    pub fn point(&self, theta: f64) -> Result<Vector3<f64>, CurveError> {
        Ok(self.position_jet(theta, 0)?.value())
    }

    /// Jet of γ′ (order `order`).
    pub fn velocity_jet(&self, theta: f64, order: usize) -> Result<VJet, CurveError> {
        Ok(self.position_jet(theta, order + 1)?.differentiate())
    }

    pub fn speed_jet(&self, theta: f64, order: usize) -> Result<Jet, CurveError> {
        self.velocity_jet(theta, order)?
            .norm()
            .map_err(|_| CurveError::NotRegular { s: theta })
    }

    /// κ_tol scaled by |γ″|.
    fn kappa_tol(d2: &Vector3<f64>) -> f64 {
        1e-8 * d2.norm().max(1.0)
    }

    pub fn frenet(&self, theta: f64) -> Result<FrameSample, CurveError> {
        let d = self.derivatives(theta, 3)?;
        let (d1, d2, d3) = (d[1], d[2], d[3]);
        let q = d1.norm();
        if q == 0.0 {
            return Err(CurveError::NotRegular { s: theta });
        }
        let c = d1.cross(&d2);
        let cn = c.norm();
        if cn <= Self::kappa_tol(&d2) * q.powi(3) {
            return Err(CurveError::InflectionPoint { s: theta });
        }
        let e = d1 / q;
        let b = c / cn;
        let n = b.cross(&e);
        Ok(FrameSample {
            s: theta,
            e,
            n,
            b,
            kappa: cn / q.powi(3),
            tau: c.dot(&d3) / (cn * cn),
        })
    }

    /// Jets of the Frenet frame (e, n, b). Refused at inflection points.
    pub fn frenet_jets(&self, theta: f64, order: usize) -> Result<[VJet; 3], CurveError> {
        let g = self.position_jet(theta, order + 2)?;
        let d1 = g.differentiate();
        let d2 = d1.differentiate();
        let d1 = d1.truncate(order);
        let c = d1.cross(&d2);
        let q = d1.norm().map_err(|_| CurveError::NotRegular { s: theta })?;
        if c.value().norm() <= Self::kappa_tol(&d2.value()) * q.value().powi(3) {
            return Err(CurveError::InflectionPoint { s: theta });
        }
        let e = d1.div(&q).map_err(CurveError::jet(theta))?;
        let b = c.normalize().map_err(CurveError::jet(theta))?;
        let n = b.cross(&e);
        Ok([e, n, b])
    }

    pub fn kappa_jet(&self, theta: f64, order: usize) -> Result<Jet, CurveError> {
        let g = self.position_jet(theta, order + 2)?;
        let d1 = g.differentiate();
        let d2 = d1.differentiate();
        let c = d1.truncate(order).cross(&d2);
        let cn = c.norm().map_err(|_| CurveError::InflectionPoint { s: theta })?;
        let q = d1.truncate(order).norm().map_err(|_| CurveError::NotRegular { s: theta })?;
        let q3 = q.powi(3).map_err(CurveError::jet(theta))?;
        cn.checked_div(&q3).map_err(CurveError::jet(theta))
    }

    /// Torsion as the quotient det(γ′, γ″, γ‴) / |γ′ × γ″|².
    pub fn tau_jet(&self, theta: f64, order: usize) -> Result<Jet, CurveError> {
        let g = self.position_jet(theta, order + 3)?;
        let d1 = g.differentiate();
        let d2 = d1.differentiate();
        let d3 = d2.differentiate();
        let c = d1.truncate(order).cross(&d2);
        let det = c.dot(&d3);
        det.checked_div(&c.norm_sq())
            .map_err(|_| CurveError::InflectionPoint { s: theta })
    }

    /// Inflection points in `[0, l)`, sorted. Cached after the first call.
    pub fn inflections(&self) -> Result<&[f64], CurveError> {
        self.inflections
            .get_or_init(|| self.scan_inflections())
            .as_deref()
            .map_err(Clone::clone)
    }

    fn scan_inflections(&self) -> Result<Vec<f64>, CurveError> {
        use rayon::prelude::*;
        let l = self.period();
        let n = INFLECTION_SCAN;
        let h = l / n as f64;
        let kappa2: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let d = self.derivatives(i as f64 * h, 2)?;
                Ok(d[1].cross(&d[2]).norm_squared() / d[1].norm_squared().powi(3))
            })
            .collect::<Result<_, CurveError>>()?;
        let kmax = kappa2.iter().cloned().fold(0.0, f64::max);
        // d/dθ |γ′ × γ″|² / 2 = (γ′ × γ″)·(γ′ × γ‴)
        let slope = |th: f64| -> Result<f64, CurveError> {
            let d = self.derivatives(th, 3)?;
            Ok(d[1].cross(&d[2]).dot(&d[1].cross(&d[3])))
        };
        let mut out: Vec<f64> = Vec::new();
        for i in 0..n {
            let prev = kappa2[(i + n - 1) % n];
            let next = kappa2[(i + 1) % n];
            let k = kappa2[i];
            if !(k <= prev && k <= next && k < 1e-2 * kmax) {
                continue;
            }
            let (a, b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
            let (sa, sb) = (slope(a)?, slope(b)?);
            if !(sa <= 0.0 && sb >= 0.0) {
                continue;
            }
            let th = bisect(slope, a, b, 1e-15)?;
            let d = self.derivatives(th, 2)?;
            if d[1].cross(&d[2]).norm() <= Self::kappa_tol(&d[2]) * d[1].norm().powi(3) {
                let th = th.rem_euclid(l);
                let th = if th >= l { 0.0 } else { th };
                if !out.iter().any(|&o| (o - th).abs() < 1e-9 || (o - th).abs() > l - 1e-9) {
                    out.push(th);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// Smooth gauge vanishing simply at every inflection: the product of
    /// `sin(π(θ − θ_j)/l)`. It flips sign once per inflection, so it is
    /// odd-periodic exactly when the inflection count is odd.
    fn gauge(&self, theta: f64, order: usize, infl: &[f64]) -> Jet {
        let l = self.period();
        infl.iter().fold(Jet::constant(theta, 1.0, order), |acc, &tj| {
            let f = Jet::variable(theta, order).add_const(-tj).scale(PI / l).sin();
            &acc * &f
        })
    }

    fn regularized_direct(&self, theta: f64, order: usize, infl: &[f64]) -> Result<Regularized, CurveError> {
        let g = self.position_jet(theta, order + 3)?;
        let d1 = g.differentiate();
        let d2 = d1.differentiate();
        let d3 = d2.differentiate();
        let c = d1.truncate(order + 1).cross(&d2);
        let det = c.dot(&d3);
        let w = self.gauge(theta, order + 1, infl);
        let w3 = w.powi(3).map_err(CurveError::jet(theta))?;
        let cross = c.div(&w).map_err(|e| self.ineligible(theta, "γ′ × γ″", e))?;
        let det = det
            .checked_div(&w3)
            .map_err(|e| self.ineligible(theta, "det(γ′, γ″, γ‴)", e))?;
        Ok(Regularized { cross, det })
    }

    fn ineligible(&self, s: f64, what: &str, e: JetError) -> CurveError {
        match e {
            JetError::Pole { den_order, .. } => CurveError::IneligibleInflection {
                s,
                reason: format!("{what} does not vanish to order {den_order}"),
            },
            other => CurveError::Eval {
                s,
                source: EvalError::Jet(other),
            },
        }
    }

    /// Regularized cross product and determinant at `theta` (order `order`).
    /// Within [`REMOVABLE_WINDOW`] of an inflection they are expanded at the
    /// inflection itself and re-expanded at `theta`.
    fn regularized(&self, theta: f64, order: usize) -> Result<Regularized, CurveError> {
        let infl = self.inflections()?;
        let l = self.period();
        let nearest = infl
            .iter()
            .map(|&tj| tj + l * ((theta - tj) / l).round())
            .min_by(|a, b| (a - theta).abs().total_cmp(&(b - theta).abs()));
        match nearest {
            Some(tj) if (tj - theta).abs() < REMOVABLE_WINDOW => {
                let wide = order + REMOVABLE_EXTRA_ORDERS;
                let key = (tj.to_bits(), wide);
                let cached = self.expansions.lock().ok().and_then(|m| m.get(&key).cloned());
                let r = match cached {
                    Some(r) => r,
                    None => {
                        let r = Arc::new(self.regularized_direct(tj, wide, infl)?);
                        if let Ok(mut m) = self.expansions.lock() {
                            m.insert(key, r.clone());
                        }
                        r
                    }
                };
                if r.cross.value().norm() <= 1e-12 {
                    return Err(CurveError::IneligibleInflection {
                        s: tj,
                        reason: "γ′ × γ‴ vanishes".into(),
                    });
                }
                if tj == theta {
                    return Ok(Regularized {
                        cross: r.cross.truncate(order),
                        det: r.det.truncate(order),
                    });
                }
                Ok(Regularized {
                    cross: r.cross.shift_to(theta, order),
                    det: r.det.shift_to(theta, order),
                })
            }
            _ => {
                let r = self.regularized_direct(theta, order, infl)?;
                Ok(Regularized {
                    cross: r.cross.truncate(order),
                    det: r.det.truncate(order),
                })
            }
        }
    }

    /// Checks the conditions under which the rectifying ruling extends
    /// across each inflection: γ′ × γ‴ ≠ 0 and det(γ′, γ‴, γ⁽⁴⁾) = 0.
    pub fn check_inflections_eligible(&self) -> Result<(), CurveError> {
        let infl = self.inflections()?.to_vec();
        for tj in infl {
            let d = self.derivatives(tj, 4)?;
            let scale = d[1].norm() * d[3].norm().max(1.0);
            if d[1].cross(&d[3]).norm() <= 1e-8 * scale {
                return Err(CurveError::IneligibleInflection {
                    s: tj,
                    reason: "γ′ × γ‴ vanishes".into(),
                });
            }
            let det = d[1].cross(&d[3]).dot(&d[4]);
            let dscale = d[1].norm() * d[3].norm() * d[4].norm();
            if det.abs() > 1e-7 * dscale.max(1.0) {
                return Err(CurveError::IneligibleInflection {
                    s: tj,
                    reason: format!("det(γ′, γ‴, γ⁽⁴⁾) = {det:e} is not zero"),
                });
            }
            self.regularized(tj, 2)?;
        }
        Ok(())
    }

    /// Smoothly extended binormal and conical curvature `(b̂, σ̂)`.
    ///
    /// Away from inflections `b̂ = ±b` and `σ̂ = ±τ/κ`, with the sign flipping
    /// at each inflection so that both extend smoothly across it.
    pub fn extended_binormal(&self, theta: f64, order: usize) -> Result<(VJet, Jet), CurveError> {
        let r = self.regularized(theta, order)?;
        let q = self.speed_jet(theta, order)?;
        let cn = r.cross.norm().map_err(CurveError::jet(theta))?;
        let b = r.cross.div(&cn).map_err(CurveError::jet(theta))?;
        let q3 = q.powi(3).map_err(CurveError::jet(theta))?;
        let c3 = cn.powi(3).map_err(CurveError::jet(theta))?;
        let sigma = (&r.det * &q3).checked_div(&c3).map_err(CurveError::jet(theta))?;
        Ok((b, sigma))
    }

    /// Conical curvature σ = τ/κ, extended smoothly across inflections.
    pub fn conical_curvature(&self, theta: f64, order: usize) -> Result<Jet, CurveError> {
        Ok(self.extended_binormal(theta, order)?.1)
    }

    /// Arc length from `a` to `b` (signed).
    pub fn arclength(&self, a: f64, b: f64) -> Result<f64, CurveError> {
        integrate(|t| Ok(self.derivatives(t, 1)?[1].norm()), a, b, 1e-12)
    }

    /// Parameter at which the arc length measured from `a` equals `len`.
    pub fn param_of_arclength(&self, a: f64, len: f64) -> Result<f64, CurveError> {
        if len == 0.0 {
            return Ok(a);
        }
        let dir = len.signum();
        let target = len.abs();
        let speed = |t: f64| -> Result<f64, CurveError> { Ok(self.derivatives(t, 1)?[1].norm()) };
        // Bracket [lo, hi] in the direction of travel.
        let (mut lo, mut hi) = (0.0_f64, target / speed(a)?.max(1e-300));
        let mut grow = 0;
        while self.arclength(a, a + dir * hi)?.abs() < target {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(CurveError::NotRegular { s: a });
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let r = self.arclength(a, a + dir * x)?.abs() - target;
            if r.abs() < 1e-12 * (1.0 + target) {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = r / speed(a + dir * x)?;
            let nx = x - step;
            x = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
        }
        Ok(a + dir * x)
    }

    /// Checks regularity, closure (periodic) or chart agreement (atlas).
    pub fn validate(&self, samples: usize) -> Result<(), CurveError> {
        let l = self.period();
        let n = samples.max(16);
        for i in 0..n {
            let th = l * (i as f64 + 0.37) / n as f64 - if self.is_atlas() { PI } else { 0.0 };
            let d = self.derivatives(th, 1)?;
            if !(d[1].norm() > 1e-12) {
                return Err(CurveError::NotRegular { s: th });
            }
            match &self.kind {
                CurveKind::Periodic { .. } => {
                    let gap = (self.point(th + l)? - d[0]).norm();
                    if !(gap < 1e-9) {
                        return Err(CurveError::NotClosed { s: th, gap });
                    }
                }
                CurveKind::Atlas { chart1, chart2 } => {
                    // Overlap 0.5 <= |s| <= 1 compared in raw chart form.
                    let s = (0.5 + 0.5 * (i as f64 + 0.5) / n as f64) * if i % 2 == 0 { 1.0 } else { -1.0 };
                    let p1 = eval_components(chart1, s).map_err(CurveError::at(s))?;
                    let p2 = eval_components(chart2, 1.0 / s).map_err(CurveError::at(s))?;
                    let gap = (p1 - p2).norm();
                    if !(gap < 1e-9) {
                        return Err(CurveError::ChartMismatch { s, gap });
                    }
                }
            }
        }
        Ok(())
    }
}

fn eval_components(c: &[Expr; 3], s: f64) -> Result<Vector3<f64>, EvalError> {
    Ok(Vector3::new(
        eval_jet(&c[0], s, 0, &NoSymbols)?.value(),
        eval_jet(&c[1], s, 0, &NoSymbols)?.value(),
        eval_jet(&c[2], s, 0, &NoSymbols)?.value(),
    ))
}

/// Wraps into `[-π, π)`.
pub fn wrap_pi(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

/// Evaluates `e` along the chart map whose jet is `v`: the result is the
/// jet of `θ ↦ e(v(θ))`.
fn compose(e: &Expr, v: &Jet) -> Result<Jet, EvalError> {
    // Expand e at v(θ0) to full order, then apply Faà di Bruno through the
    // Taylor series of v - v0.
    let order = v.order();
    let outer = eval_jet(e, v.value(), order, &NoSymbols)?;
    let dv = Jet::from_derivs(v.s0(), {
        let mut d = v.derivs().to_vec();
        d[0] = 0.0;
        d
    });
    // Σ_k outer^(k)/k! · (v − v0)^k, evaluated by Horner in the jet algebra.
    let mut acc = Jet::constant(v.s0(), 0.0, order);
    let mut fact = (1..=order).map(|k| k as f64).product::<f64>();
    for k in (0..=order).rev() {
        acc = (&acc * &dv).add_const(outer.deriv(k) / fact);
        if k > 0 {
            fact /= k as f64;
        }
    }
    Ok(acc)
}

/// Symbol jets at or above this order are memoized.
const WIDE_ORDER: usize = 16;

impl Resolver for CurveR3 {
    fn resolve(&self, symbol: Symbol, s0: f64, order: usize) -> Result<Jet, EvalError> {
        let key = (symbol, s0.to_bits(), order);
        if order >= WIDE_ORDER {
            if let Some(j) = self.symbols.lock().ok().and_then(|m| m.get(&key).cloned()) {
                return Ok(j);
            }
        }
        let r = match symbol {
            Symbol::Kappa => self.kappa_jet(s0, order),
            Symbol::Tau => self.tau_jet(s0, order),
            Symbol::Speed => self.speed_jet(s0, order),
            Symbol::Sigma => self.conical_curvature(s0, order),
        };
        let j = r.map_err(|e| EvalError::Symbol {
            symbol,
            s0,
            reason: e.to_string(),
        })?;
        if order >= WIDE_ORDER {
            if let Ok(mut m) = self.symbols.lock() {
                m.insert(key, j.clone());
            }
        }
        Ok(j)
    }
}
