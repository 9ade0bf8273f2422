//! Singular curve of the asymptotic completion `u ∈ ℝ` of a flat strip:
//! its components, null directions, the invariant ρ, classification of
//! singular points, and the census of non-cuspidal-edge points on the
//! quotient `M = ℝ² / ((s, u) ~ (s + l, −u))`.
//!
//! Locations use the strip's own parameter and the raw ruling, so `u` is
//! the coordinate in `F(s, u) = γ(s) + u ξ(s)`. ρ, ρ′ and P are computed in
//! the arc-length, unit-ruling gauge.

use std::fmt;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::jet::Jet;
use crate::numeric::{bisect, golden_min, integrate, zero_components, ZeroComponent};
use crate::strip::{RuledStrip, StripError};
use crate::vjet::det3;

/// Points whose ruling coordinate exceeds this are treated as lying at
/// infinity along the ruling and left out of the census.
pub const U_CUTOFF: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PointClass {
    CuspidalEdge,
    Swallowtail,
    NonFrontPoint,
    DegenerateUnresolved,
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointClass::CuspidalEdge => "CuspidalEdge",
            PointClass::Swallowtail => "Swallowtail",
            PointClass::NonFrontPoint => "NonFrontPoint",
            PointClass::DegenerateUnresolved => "DegenerateUnresolved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoint {
    pub s: f64,
    pub u: f64,
    pub class: PointClass,
    pub rho: f64,
    pub rho_prime: f64,
    pub nu_prime_norm: f64,
}

/// An arc of the singular curve between two consecutive components of the
/// zero set of ξ′.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularComponent {
    pub start: f64,
    pub end: f64,
    /// Non-cuspidal-edge points on this arc, sorted by `s`.
    pub points: Vec<SingularPoint>,
    pub rho_tol: f64,
    /// +1 when u → −∞ at both ends (γ′·ξ′ > 0 inside), −1 otherwise.
    pub orientation: f64,
}

/// Everything known about a singular point of the completion at `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointData {
    pub s: f64,
    /// Raw ruling coordinate of the singular point.
    pub u: f64,
    /// Same point in the unit-ruling gauge.
    pub u_bar: f64,
    pub rho: f64,
    /// dρ/da with `a` the arc length.
    pub rho_prime: f64,
    /// Integrand of the P quadrature in `s`: (γ′·ξ)/|ξ|.
    pub p_integrand: f64,
    pub nu_prime_norm: f64,
    /// Non-degeneracy γ′·ξ′/|γ′×ξ| in the unit gauge.
    pub lambda_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub s: f64,
    pub u: f64,
    pub rho: f64,
    pub rho_prime: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    /// Samples for the ξ′ and ν′ scans over one period.
    pub scan_samples: usize,
    /// Samples per singular component for the ρ scan.
    pub rho_samples: usize,
    /// Start of the fundamental domain; `None` uses the strip's origin.
    pub origin: Option<f64>,
    pub xtol: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            scan_samples: 4096,
            rho_samples: 10_000,
            origin: None,
            xtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub origin: f64,
    pub period: f64,
    pub xi_zero_components: Vec<(f64, f64)>,
    pub components: Vec<SingularComponent>,
    /// Deduplicated non-cuspidal-edge points, representatives in
    /// `[origin, origin + l)`, sorted by `s`.
    pub points: Vec<SingularPoint>,
    pub front_tol: f64,
    pub nu_prime_max: f64,
    /// Scan samples on the singular curve (finite part).
    pub sampled: usize,
    /// Scan samples away from detected points that were not cuspidal edges.
    pub sampled_non_ce: usize,
    /// Candidates dropped because |u| exceeded [`U_CUTOFF`].
    pub excluded_at_infinity: usize,
}

impl Census {
    pub fn non_ce_count(&self) -> usize {
        self.points.len()
    }

    pub fn count(&self, class: PointClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub pass: bool,
    pub non_ce_count: usize,
    pub per_component: Vec<usize>,
}

fn internal(s: f64, what: &str) -> StripError {
    StripError::Unsupported(format!("internal inconsistency at s = {s}: {what}"))
}

/// Signed unit-gauge turning rate of the ruling, det(ξ̄′, ξ̄, ν)/|γ′|. It
/// vanishes exactly where ξ̄′ does on a flat strip and flips sign under
/// s ↦ s + l on a Möbius strip.
pub fn xi_turning(st: &RuledStrip, s: f64) -> Result<f64, StripError> {
    let j = st.jets(s, 1)?;
    let (g1, x, x1) = (j.d1.value(), j.xi.value(), j.xi.deriv(1));
    let c = g1.cross(&x);
    let nu = c / c.norm();
    Ok(x1.cross(&x).dot(&nu) / (x.norm_squared() * g1.norm()))
}

/// |ξ̄′|/|γ′|: the arc-length derivative of the unit ruling.
pub fn xi_prime_norm(st: &RuledStrip, s: f64) -> Result<f64, StripError> {
    let j = st.jets(s, 1)?;
    let (g1, x, x1) = (j.d1.value(), j.xi.value(), j.xi.deriv(1));
    let xb = x / x.norm();
    Ok((x1 - xb * xb.dot(&x1)).norm() / (x.norm() * g1.norm()))
}

/// Components of the zero set of ξ′ over one period starting at `origin`.
pub fn xi_zero_components(st: &RuledStrip, samples: usize, origin: f64) -> Result<Vec<ZeroComponent>, StripError> {
    let l = st.period();
    let n = samples.max(64);
    let vmax = (0..n)
        .into_par_iter()
        .map(|i| xi_turning(st, origin + l * (i as f64 + 0.5) / n as f64).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let tol = 1e-9 * vmax.max(1e-300);
    let f = |s: f64| xi_turning(st, s);
    let mobius = st.validate_mobius(64)?.is_mobius;
    zero_components(&f, origin, l, n, tol, mobius, 1e-12)
}

/// Arcs of the singular curve: open intervals between consecutive
/// ξ′-zero components, the last one wrapping past `origin + l`.
pub fn singular_arcs(zeros: &[ZeroComponent], period: f64) -> Vec<(f64, f64)> {
    let m = zeros.len();
    (0..m)
        .map(|i| {
            let a = zeros[i].end;
            let b = if i + 1 < m { zeros[i + 1].start } else { zeros[0].start + period };
            (a, b)
        })
        .filter(|(a, b)| b > a)
        .collect()
}

/// `u(s) = −λ0/λ1` on the singular curve.
pub fn singular_u(st: &RuledStrip, s: f64) -> Result<f64, StripError> {
    let (l0, l1) = st.lambda(s)?;
    if l1 == 0.0 {
        return Err(internal(s, "λ1 vanishes inside a singular component"));
    }
    Ok(-l0 / l1)
}

/// Null vector `(1, −k)` at the singular point over `s`.
pub fn null_vector(st: &RuledStrip, s: f64, u: f64) -> Result<(f64, f64), StripError> {
    let p = st.eval_f(s, u)?;
    let scale = p.fs.norm() + p.fu.norm();
    if p.fs.cross(&p.fu).norm() > 1e-6 * scale * scale {
        return Err(StripError::Unsupported(format!("(s, u) = ({s}, {u}) is a regular point")));
    }
    let k = p.fs.dot(&p.fu) / p.fu.norm_squared();
    Ok((1.0, -k))
}

/// dF applied to the null vector at the singular point over `s`.
pub fn null_residual(st: &RuledStrip, s: f64) -> Result<Vector3<f64>, StripError> {
    let u = singular_u(st, s)?;
    let (a, b) = null_vector(st, s, u)?;
    let p = st.eval_f(s, u)?;
    Ok(a * p.fs + b * p.fu)
}

/// Evaluates u, ρ, ρ′ and the quantities the census needs at `s`.
pub fn point_data(st: &RuledStrip, s: f64) -> Result<PointData, StripError> {
    let jet_err = StripError::jet(s);
    let j = st.jets(s, 3)?;
    let d1 = j.d1.truncate(2);
    let x = j.xi.truncate(2);
    let x1 = j.xi.differentiate().truncate(2);
    let c = d1.cross(&x);
    let lam0 = c.norm().map_err(|_| StripError::Degenerate { s })?;
    let nu = c.div(&lam0).map_err(&jet_err)?;
    let lam1 = det3(&x1, &x, &nu);
    if lam1.value() == 0.0 {
        return Err(internal(s, "λ1 vanishes inside a singular component"));
    }
    let u = -lam0.checked_div(&lam1).map_err(&jet_err)?;
    let xn = x.norm().map_err(&jet_err)?;
    let ub = &u * &xn;
    let q = d1.norm().map_err(|_| StripError::Degenerate { s })?;
    let dot = d1.dot(&x).checked_div(&xn).map_err(&jet_err)?;
    let q1 = q.truncate(1);
    // ρ = −dū/da − e·ξ̄ with d/da = (1/|γ′|) d/ds.
    let rho: Jet = (-&(&ub.differentiate() + &dot.truncate(1)))
        .checked_div(&q1)
        .map_err(&jet_err)?;
    let q0 = q.value();
    let nu1 = nu.deriv(1);
    let (g1, x0, xd) = (d1.value(), x.value(), x1.value());
    Ok(PointData {
        s,
        u: u.value(),
        u_bar: ub.value(),
        rho: rho.value(),
        rho_prime: rho.deriv(1) / q0,
        p_integrand: dot.value(),
        nu_prime_norm: nu1.norm(),
        lambda_u: {
            let xb = x0 / x0.norm();
            let xa = (xd - xb * xb.dot(&xd)) / (x0.norm() * q0);
            let e = g1 / q0;
            e.dot(&xa) / e.cross(&xb).norm()
        },
    })
}

/// Signed ν′ along ν × ξ̄. On a flat strip ν′ is parallel to ν × ξ, so
/// this vanishes exactly where ν′ does, and it flips sign across a period
/// of a Möbius strip.
pub fn nu_prime_signed(st: &RuledStrip, s: f64) -> Result<f64, StripError> {
    let nu = st.nu_jet(s, 1)?;
    let x = st.xi(s)?;
    Ok(nu.deriv(1).dot(&nu.value().cross(&x)) / x.norm())
}

/// Per-component ρ tolerance: 1e−7 times the median |ρ| over the samples.
fn rho_tol_of(samples: &[PointData]) -> f64 {
    let mut v: Vec<f64> = samples.iter().map(|p| p.rho.abs()).filter(|r| r.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    1e-7 * v[v.len() / 2]
}

/// Classification of a singular point from its data.
pub fn classify_data(p: &PointData, rho_tol: f64, front_tol: f64) -> PointClass {
    if p.nu_prime_norm <= front_tol {
        PointClass::NonFrontPoint
    } else if p.rho.abs() > rho_tol {
        PointClass::CuspidalEdge
    } else if p.rho_prime.abs() > rho_tol {
        PointClass::Swallowtail
    } else {
        PointClass::DegenerateUnresolved
    }
}

/// Classifies the singular point `(s, u)`, using the tolerances of the
/// singular component containing `s`.
pub fn classify(st: &RuledStrip, s: f64, u: f64) -> Result<PointClass, StripError> {
    let p = point_data(st, s)?;
    if (p.u - u).abs() > 1e-6 * (1.0 + u.abs()) {
        return Err(StripError::Unsupported(format!(
            "(s, u) = ({s}, {u}) is not singular; the singular point over s is at u = {}",
            p.u
        )));
    }
    if p.lambda_u.abs() <= 1e-8 {
        return Err(StripError::Unsupported(format!("degenerate singular point at s = {s}: ξ′ ≈ 0")));
    }
    let ctx = Context::new(st, &CensusOptions::default())?;
    let arc = ctx.arc_containing(s).ok_or_else(|| internal(s, "no singular component contains s"))?;
    let samples = ctx.sample_arc(arc, 2000)?;
    Ok(classify_data(&p, rho_tol_of(&samples), ctx.front_tol))
}

/// Classifies `(s, u)` with the tolerances of an existing census.
pub fn classify_in(st: &RuledStrip, census: &Census, s: f64, u: f64) -> Result<PointClass, StripError> {
    let p = point_data(st, s)?;
    if (p.u - u).abs() > 1e-6 * (1.0 + u.abs()) {
        return Err(StripError::Unsupported(format!(
            "(s, u) = ({s}, {u}) is not singular; the singular point over s is at u = {}",
            p.u
        )));
    }
    let l = census.period;
    let comp = census
        .components
        .iter()
        .find(|c| {
            let k = ((s - c.start) / l).floor();
            let t = s - k * l;
            t > c.start && t < c.end
        })
        .ok_or_else(|| internal(s, "no singular component contains s"))?;
    Ok(classify_data(&p, comp.rho_tol, census.front_tol))
}

/// Samples u, ρ, ρ′ and P on a singular component at `samples` interior
/// points. P is measured from the first sample.
pub fn rho_series(st: &RuledStrip, arc: (f64, f64), samples: usize) -> Result<Vec<SeriesRow>, StripError> {
    let (a, b) = arc;
    let n = samples.max(2);
    let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect();
    let data: Vec<PointData> = xs.par_iter().map(|&s| point_data(st, s)).collect::<Result<_, _>>()?;
    let steps: Vec<f64> = xs
        .par_windows(2)
        .map(|w| p_integral(st, w[0], w[1]))
        .collect::<Result<_, _>>()?;
    let mut acc = 0.0;
    let mut rows = Vec::with_capacity(n);
    for (i, d) in data.iter().enumerate() {
        if i > 0 {
            acc += steps[i - 1];
        }
        rows.push(SeriesRow {
            s: d.s,
            u: d.u,
            rho: d.rho,
            rho_prime: d.rho_prime,
            p: -d.u_bar - acc,
        });
    }
    Ok(rows)
}

/// P(s) = −ū(s) − ∫_{s_ref}^{s} (γ′·ξ)/|ξ|.
pub fn p_value(st: &RuledStrip, s_ref: f64, s: f64) -> Result<f64, StripError> {
    Ok(-point_data(st, s)?.u_bar - p_integral(st, s_ref, s)?)
}

/// ∫_a^b (γ′·ξ)/|ξ| ds.
pub fn p_integral(st: &RuledStrip, a: f64, b: f64) -> Result<f64, StripError> {
    integrate(
        |t| {
            let j = st.jets(t, 0)?;
            let x = j.xi.value();
            Ok(j.d1.value().dot(&x) / x.norm())
        },
        a,
        b,
        1e-13,
    )
}

/// Shared state for one census run.
struct Context<'a> {
    st: &'a RuledStrip,
    origin: f64,
    period: f64,
    zeros: Vec<ZeroComponent>,
    arcs: Vec<(f64, f64)>,
    front_tol: f64,
    nu_max: f64,
    nu_zeros: Vec<f64>,
}

impl<'a> Context<'a> {
    fn new(st: &'a RuledStrip, opts: &CensusOptions) -> Result<Self, StripError> {
        let origin = opts.origin.unwrap_or_else(|| st.origin());
        let period = st.period();
        let zeros = xi_zero_components(st, opts.scan_samples, origin)?;
        let arcs = singular_arcs(&zeros, period);
        let n = opts.scan_samples.max(64);
        let nu_max = (0..n)
            .into_par_iter()
            .map(|i| st.nu_prime_norm(origin + period * (i as f64 + 0.5) / n as f64))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let front_tol = 1e-7 * nu_max;
        let g = |s: f64| nu_prime_signed(st, s);
        let odd = st.validate_mobius(64)?.is_mobius;
        let nu_zeros = zero_components(&g, origin, period, n, front_tol, odd, opts.xtol)?
            .into_iter()
            .flat_map(|c| if c.is_point() { vec![c.start] } else { vec![c.start, c.mid(), c.end] })
            .collect();
        Ok(Context {
            st,
            origin,
            period,
            zeros,
            arcs,
            front_tol,
            nu_max,
            nu_zeros,
        })
    }

    /// Arc containing `s` (mod the period), shifted so that it does.
    fn arc_containing(&self, s: f64) -> Option<(f64, f64)> {
        self.arcs.iter().find_map(|&(a, b)| {
            let k = ((s - a) / self.period).floor();
            let t = s - k * self.period;
            (t > a && t < b).then_some((a + k * self.period, b + k * self.period))
        })
    }

    fn sample_arc(&self, arc: (f64, f64), n: usize) -> Result<Vec<PointData>, StripError> {
        let (a, b) = arc;
        (0..n)
            .into_par_iter()
            .map(|i| point_data(self.st, a + (b - a) * (i as f64 + 0.5) / n as f64))
            .collect()
    }

    /// Maps `(s, u)` to its representative with `s ∈ [origin, origin + l)`.
    fn canonical(&self, mut p: SingularPoint) -> SingularPoint {
        let k = ((p.s - self.origin) / self.period).floor();
        if k != 0.0 {
            p.s -= k * self.period;
            if (k as i64) % 2 != 0 && self.is_mobius() {
                p.u = -p.u;
            }
        }
        // Snap points sitting on the far end of the domain to its start.
        if p.s >= self.origin + self.period - 1e-9 {
            p.s -= self.period;
            if self.is_mobius() {
                p.u = -p.u;
            }
        }
        p
    }

    fn is_mobius(&self) -> bool {
        self.st.validate_mobius(64).map(|r| r.is_mobius).unwrap_or(false)
    }
}

/// Census of non-cuspidal-edge singular points on M.
pub fn enumerate_non_ce(st: &RuledStrip, opts: &CensusOptions) -> Result<Census, StripError> {
    let ctx = Context::new(st, opts)?;
    let xtol = opts.xtol;
    let mut components = Vec::new();
    let mut sampled = 0;
    let mut sampled_non_ce = 0;
    let mut excluded = 0;
    let mut all_points: Vec<SingularPoint> = Vec::new();

    for &(a, b) in &ctx.arcs {
        let n = opts.rho_samples.max(10_000);
        let h = (b - a) / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| a + h * (i as f64 + 0.5)).collect();
        let data: Vec<PointData> = xs.par_iter().map(|&s| point_data(st, s)).collect::<Result<_, _>>()?;
        let finite: Vec<bool> = data.iter().map(|d| d.u.abs() <= U_CUTOFF && d.rho.is_finite()).collect();
        let rho_tol = rho_tol_of(&data.iter().zip(&finite).filter(|(_, &f)| f).map(|(d, _)| *d).collect::<Vec<_>>());
        let mid = data[n / 2];
        let orientation = if mid.u < 0.0 { 1.0 } else { -1.0 };
        let rho = |s: f64| point_data(st, s).map(|d| d.rho);

        let mut cands: Vec<f64> = Vec::new();
        // Sign changes and touching zeros of ρ.
        for i in 0..n - 1 {
            if !(finite[i] && finite[i + 1]) {
                continue;
            }
            let (r0, r1) = (data[i].rho, data[i + 1].rho);
            if r0 == 0.0 {
                cands.push(xs[i]);
            } else if (r0 < 0.0) != (r1 < 0.0) {
                cands.push(bisect(rho, xs[i], xs[i + 1], xtol)?);
            } else if i > 0 && finite[i - 1] {
                let rp = data[i - 1].rho.abs();
                if r0.abs() < rp && r0.abs() <= r1.abs() && r0.abs() < 1e3 * rho_tol {
                    let (xm, fm) = golden_min(|s| rho(s).map(f64::abs), xs[i - 1], xs[i + 1], xtol)?;
                    if fm <= rho_tol {
                        cands.push(xm);
                    }
                }
            }
        }
        // Interior extrema of P are zeros of ρ; make sure each one was found.
        let steps: Vec<f64> = data.par_windows(2).map(|w| 0.5 * h * (w[0].p_integrand + w[1].p_integrand)).collect();
        let mut acc = 0.0;
        let mut pv = Vec::with_capacity(n);
        for (i, d) in data.iter().enumerate() {
            if i > 0 {
                acc += steps[i - 1];
            }
            pv.push(orientation * (-d.u_bar - acc));
        }
        for i in 1..n - 1 {
            if finite[i - 1] && finite[i + 1] && pv[i] < pv[i - 1] && pv[i] <= pv[i + 1] {
                if !cands.iter().any(|&c| (c - xs[i]).abs() <= 2.0 * h) {
                    let (xm, _) = golden_min(|s| rho(s).map(f64::abs), xs[i - 1], xs[i + 1], xtol)?;
                    cands.push(xm);
                }
            }
        }
        // Zeros of ν′ on this arc.
        for &z in &ctx.nu_zeros {
            let k = ((z - a) / ctx.period).floor();
            let t = z - k * ctx.period;
            if t > a && t < b {
                cands.push(t);
            }
        }
        cands.sort_by(f64::total_cmp);
        cands.dedup_by(|x, y| (*x - *y).abs() < 1e-7);

        let mut points = Vec::new();
        for s in cands {
            let d = point_data(st, s)?;
            if d.u.abs() > U_CUTOFF {
                excluded += 1;
                continue;
            }
            let class = classify_data(&d, rho_tol, ctx.front_tol);
            if class != PointClass::CuspidalEdge {
                points.push(SingularPoint {
                    s,
                    u: d.u,
                    class,
                    rho: d.rho,
                    rho_prime: d.rho_prime,
                    nu_prime_norm: d.nu_prime_norm,
                });
            }
        }
        for (i, d) in data.iter().enumerate() {
            if !finite[i] {
                continue;
            }
            sampled += 1;
            let near = points.iter().any(|p| (p.s - xs[i]).abs() < 1e-4 * (b - a));
            if !near && classify_data(d, rho_tol, ctx.front_tol) != PointClass::CuspidalEdge {
                sampled_non_ce += 1;
            }
        }
        all_points.extend(points.iter().copied());
        components.push(SingularComponent {
            start: a,
            end: b,
            points,
            rho_tol,
            orientation,
        });
    }

    let mut reps: Vec<SingularPoint> = all_points.into_iter().map(|p| ctx.canonical(p)).collect();
    reps.sort_by(|p, q| p.s.total_cmp(&q.s));
    let mut points: Vec<SingularPoint> = Vec::new();
    for p in reps {
        let dup = points.iter().any(|q| {
            let d = (q.s - p.s).abs();
            d < 1e-7 || d > ctx.period - 1e-7
        });
        if !dup {
            points.push(p);
        }
    }
    Ok(Census {
        origin: ctx.origin,
        period: ctx.period,
        xi_zero_components: ctx.zeros.iter().map(|z| (z.start, z.end)).collect(),
        components,
        points,
        front_tol: ctx.front_tol,
        nu_prime_max: ctx.nu_max,
        sampled,
        sampled_non_ce,
        excluded_at_infinity: excluded,
    })
}

/// Checks that every singular component carries a non-cuspidal-edge point
/// and that there is at least one overall.
pub fn check_proposition(st: &RuledStrip, census: Option<&Census>) -> Result<PropositionReport, StripError> {
    let v = st.validate_mobius(256)?;
    if !v.is_mobius || !v.is_flat {
        let why = if !v.is_mobius { "not a Möbius strip" } else { "not a flat strip" };
        return Ok(PropositionReport {
            applicable: false,
            reason: Some(format!("not applicable: {why}")),
            pass: false,
            non_ce_count: 0,
            per_component: vec![],
        });
    }
    let owned;
    let census = match census {
        Some(c) => c,
        None => {
            owned = enumerate_non_ce(st, &CensusOptions::default())?;
            &owned
        }
    };
    let per_component: Vec<usize> = census.components.iter().map(|c| c.points.len()).collect();
    let n = census.non_ce_count();
    Ok(PropositionReport {
        applicable: true,
        reason: None,
        pass: n >= 1 && per_component.iter().all(|&k| k >= 1),
        non_ce_count: n,
        per_component,
    })
}

/// The criterion for rectifying strips: with σ the conical curvature in an
/// arc-length parameter, a singular point `(s0, u0)` is not a cuspidal
/// edge iff `u0 = −1/σ′(s0)`, `σ′(s0) ≠ 0` and `σ″(s0) = 0`.
pub fn remark_criterion(sigma1: f64, sigma2: f64, u0: f64, tol: f64) -> Result<bool, StripError> {
    if sigma1.abs() <= tol {
        return Err(StripError::Unsupported("σ′ vanishes: the point is not on the singular set".into()));
    }
    let on_curve = (u0 + 1.0 / sigma1).abs() <= tol * (1.0 + u0.abs());
    Ok(on_curve && sigma2.abs() <= tol)
}

/// Arc-length derivatives σ′ and σ″ of the conical curvature at `s`.
pub fn sigma_arclength_derivs(st: &RuledStrip, s: f64) -> Result<(f64, f64), StripError> {
    let sigma = st.curve().conical_curvature(s, 2)?;
    let q = st.curve().speed_jet(s, 1)?;
    let (q0, q1) = (q.value(), q.deriv(1));
    let s1 = sigma.deriv(1) / q0;
    let s2 = (sigma.deriv(2) * q0 - sigma.deriv(1) * q1) / q0.powi(3);
    Ok((s1, s2))
}

/// The criterion above applied to a Darboux strip in any parametrization;
/// `tol` is relative to `max(1, max |σ″|)` for the second derivative.
pub fn rectifying_remark_check(st: &RuledStrip, s0: f64, u0: f64, tol: f64) -> Result<bool, StripError> {
    if !matches!(st.ruling(), crate::strip::RulingField::Darboux) {
        return Err(StripError::Unsupported("not a rectifying strip".into()));
    }
    let (s1, s2) = sigma_arclength_derivs(st, s0)?;
    let l = st.period();
    let n = 512;
    let scale = (0..n)
        .into_par_iter()
        .map(|i| sigma_arclength_derivs(st, st.origin() + l * (i as f64 + 0.5) / n as f64).map(|d| d.1.abs()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(1.0, f64::max);
    if s1.abs() <= tol {
        return Err(StripError::Unsupported("σ′ vanishes: the point is not on the singular set".into()));
    }
    let on_curve = (u0 + 1.0 / s1).abs() <= tol * (1.0 + u0.abs());
    Ok(on_curve && s2.abs() <= tol * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveR3;
    use crate::expr::parse;
    use crate::strip::RulingField;
    use std::f64::consts::PI;

    fn exprs(a: &str, b: &str, c: &str) -> [crate::Expr; 3] {
        [parse(a).unwrap(), parse(b).unwrap(), parse(c).unwrap()]
    }

    #[test]
    fn remark_on_synthetic_sine() {
        // σ = sin s at s0 = 0.
        assert!(remark_criterion(0f64.cos(), -0f64.sin(), -1.0, 1e-9).unwrap());
        assert!(!remark_criterion(0.5f64.cos(), -0.5f64.sin(), -1.0 / 0.5f64.cos(), 1e-9).unwrap());
        assert!(remark_criterion(0.0, 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn arcs_wrap_around_the_period() {
        let z = [
            ZeroComponent { start: 1.0, end: 1.0 },
            ZeroComponent { start: 2.0, end: 2.5 },
        ];
        assert_eq!(singular_arcs(&z, 10.0), vec![(1.0, 2.0), (2.5, 11.0)]);
    }

    #[test]
    fn cylinder_proposition_not_applicable() {
        let c = CurveR3::periodic("circle", exprs("cos(s)", "sin(s)", "0"), 2.0 * PI).unwrap();
        let st = RuledStrip::new(c, RulingField::Explicit(exprs("0", "0", "1")), 0.5).unwrap();
        let r = check_proposition(&st, None).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.reason.as_deref(), Some("not applicable: not a Möbius strip"));
    }

    #[test]
    fn classification_order() {
        let base = PointData {
            s: 0.0,
            u: 0.0,
            u_bar: 0.0,
            rho: 1.0,
            rho_prime: 1.0,
            p_integrand: 0.0,
            nu_prime_norm: 1.0,
            lambda_u: 1.0,
        };
        assert_eq!(classify_data(&base, 1e-7, 1e-7), PointClass::CuspidalEdge);
        let sw = PointData { rho: 0.0, ..base };
        assert_eq!(classify_data(&sw, 1e-7, 1e-7), PointClass::Swallowtail);
        let nf = PointData { nu_prime_norm: 0.0, ..base };
        assert_eq!(classify_data(&nf, 1e-7, 1e-7), PointClass::NonFrontPoint);
        let dg = PointData { rho: 0.0, rho_prime: 0.0, ..base };
        assert_eq!(classify_data(&dg, 1e-7, 1e-7), PointClass::DegenerateUnresolved);
    }
}
