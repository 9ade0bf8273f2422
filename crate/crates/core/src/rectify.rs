//! Rectifying Möbius strips: the normalized Darboux ruling, the extended
//! frame `(e, n̂, b̂, κ̂, τ̂, σ̂)`, osculating circles of the tangent
//! indicatrix on S², their nesting along σ̂-monotone arcs, and the count of
//! σ̂-extrema.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curve::CurveR3;
use crate::jet::Jet;
use crate::numeric::{zero_components, ZeroComponent};
use crate::singular::Census;
use crate::strip::{MobiusReport, RuledStrip, RulingField, StripError};
use crate::vjet::VJet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RectifyError {
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error("not a Möbius strip (odd-periodicity defect {defect:e})")]
    NotMobius { defect: f64 },
    #[error("rectifying ruling is not flat (defect {defect:e})")]
    NotFlat { defect: f64 },
    #[error("γ is not a geodesic of the strip: |γ″·ξ| = {residual:e} at s = {s}")]
    NotGeodesic { s: f64, residual: f64 },
    #[error("not a rectifying strip")]
    NotRectifying,
    #[error("σ̂ is not monotone on [{a}, {b}]")]
    NotMonotone { a: f64, b: f64 },
    #[error("e and ξ are parallel at s = {s}")]
    Parallel { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedFrame {
    pub s: f64,
    pub e: Vector3<f64>,
    pub n_hat: Vector3<f64>,
    pub b_hat: Vector3<f64>,
    pub kappa_hat: f64,
    pub tau_hat: f64,
    pub sigma_hat: f64,
}

/// Jets of the extended frame; derivatives are in the strip's parameter.
#[derive(Debug, Clone)]
pub struct ExtendedFrameJets {
    pub e: VJet,
    pub n_hat: VJet,
    pub b_hat: VJet,
    pub kappa_hat: Jet,
    pub tau_hat: Jet,
    pub sigma_hat: Jet,
    pub speed: Jet,
}

/// Oriented circle on S². The left-hand disk is the geodesic ball
/// `B(center, radius)` for orientation +1 and its complement for −1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsculatingCircle {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub orientation: f64,
}

impl OsculatingCircle {
    /// The left-hand disk as a ball `(center, radius)`.
    pub fn left_disk(&self) -> (Vector3<f64>, f64) {
        if self.orientation >= 0.0 {
            (self.center, self.radius)
        } else {
            (-self.center, PI - self.radius)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestingReport {
    pub pass: bool,
    /// Smallest `r1 − r2 − d(p1, p2)` over the pairs, oriented so the
    /// expected inner disk comes second.
    pub worst_margin: f64,
    pub increasing: bool,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub extrema_components: usize,
    pub non_ce_count: usize,
    pub pass: bool,
}

/// Containment slack for disk comparisons.
pub const DISK_TOL: f64 = 1e-9;

/// Builds the rectifying strip of `c` and checks that it is a flat Möbius
/// strip with γ as a geodesic.
pub fn build_rectifying(c: CurveR3, half_width: f64) -> Result<RuledStrip, RectifyError> {
    let st = RuledStrip::new(c, RulingField::Darboux, half_width)?;
    let r: MobiusReport = st.validate_mobius(256)?;
    if !r.is_mobius {
        return Err(RectifyError::NotMobius {
            defect: r.max_odd_periodicity_defect,
        });
    }
    if r.max_flatness_defect >= 1e-8 {
        return Err(RectifyError::NotFlat {
            defect: r.max_flatness_defect,
        });
    }
    let (s, residual) = geodesic_residual(&st, 200)?;
    if residual >= 1e-8 {
        return Err(RectifyError::NotGeodesic { s, residual });
    }
    Ok(st)
}

/// Largest `|a·ξ| / (|a||ξ|)` over `samples` points, with its location, where `a` is the
/// part of `γ″` normal to `γ′`.
pub fn geodesic_residual(st: &RuledStrip, samples: usize) -> Result<(f64, f64), StripError> {
    let l = st.period();
    let o = st.origin();
    let rows = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let s = o + l * (i as f64 + 0.5) / samples as f64;
            let j = st.jets(s, 0)?;
            let d = st.curve().derivatives(s, 2)?;
            let e = d[1].normalize();
            let a = d[2] - e * d[2].dot(&e);
            let x = j.xi.value();
            if a.norm() <= 1e-12 * d[2].norm().max(1.0) {
                return Ok((s, 0.0));
            }
            Ok((s, a.dot(&x).abs() / (a.norm() * x.norm())))
        })
        .collect::<Result<Vec<_>, StripError>>()?;
    Ok(rows.into_iter().fold((o, 0.0), |a, b| if b.1 > a.1 { b } else { a }))
}

fn require_darboux(st: &RuledStrip) -> Result<(), RectifyError> {
    match st.ruling() {
        RulingField::Darboux => Ok(()),
        _ => Err(RectifyError::NotRectifying),
    }
}

pub fn extended_frame_jets(st: &RuledStrip, s: f64, order: usize) -> Result<ExtendedFrameJets, RectifyError> {
    let jerr = StripError::jet(s);
    let v = st.curve().velocity_jet(s, order + 1).map_err(StripError::from)?;
    let q = v.norm().map_err(&jerr)?;
    let e = v.div(&q).map_err(&jerr)?;
    let xi = st.xi_jet(s, order + 1)?;
    let c = e.cross(&xi);
    if c.value().norm() <= 1e-14 {
        return Err(RectifyError::Parallel { s });
    }
    let n = c.normalize().map_err(&jerr)?.neg();
    let b = e.cross(&n);
    let qo = q.truncate(order);
    let kappa = e.differentiate().dot(&n.truncate(order)).checked_div(&qo).map_err(&jerr)?;
    let tau = (-&b.differentiate().dot(&n.truncate(order)))
        .checked_div(&qo)
        .map_err(&jerr)?;
    let sigma = e.dot(&xi);
    Ok(ExtendedFrameJets {
        e,
        n_hat: n,
        b_hat: b,
        kappa_hat: kappa,
        tau_hat: tau,
        sigma_hat: sigma,
        speed: q,
    })
}

pub fn extended_frame(st: &RuledStrip, s: f64) -> Result<ExtendedFrame, RectifyError> {
    let j = extended_frame_jets(st, s, 0)?;
    Ok(ExtendedFrame {
        s,
        e: j.e.value(),
        n_hat: j.n_hat.value(),
        b_hat: j.b_hat.value(),
        kappa_hat: j.kappa_hat.value(),
        tau_hat: j.tau_hat.value(),
        sigma_hat: j.sigma_hat.value(),
    })
}

/// Geodesic radius of a circle with geodesic curvature `sigma`.
pub fn radius_of(sigma: f64) -> f64 {
    1f64.atan2(sigma)
}

/// Great-circle distance, via atan2 for accuracy near 0 and π.
pub fn sphere_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

pub fn circle_from_frame(f: &ExtendedFrame) -> OsculatingCircle {
    let r = radius_of(f.sigma_hat);
    OsculatingCircle {
        center: r.cos() * f.e + r.sin() * f.b_hat,
        radius: r,
        orientation: 1.0,
    }
}

/// Osculating circle of the tangent indicatrix `e(·)` at `s`.
pub fn osculating_circle(st: &RuledStrip, s: f64) -> Result<OsculatingCircle, RectifyError> {
    Ok(circle_from_frame(&extended_frame(st, s)?))
}

/// Distance on S² from `e(s + h)` to the osculating circle at `s`.
pub fn contact_residual(st: &RuledStrip, s: f64, h: f64) -> Result<f64, RectifyError> {
    let c = osculating_circle(st, s)?;
    let e = st.curve().velocity_jet(s + h, 0).map_err(StripError::from)?.value().normalize();
    Ok((sphere_distance(&c.center, &e) - c.radius).abs())
}

/// Whether the left-hand disk of `c2` lies inside that of `c1`.
pub fn disk_contains(c1: &OsculatingCircle, c2: &OsculatingCircle) -> bool {
    containment_margin(c1, c2) >= -DISK_TOL
}

/// `r1 − r2 − d(p1, p2)` for the left-hand disks.
pub fn containment_margin(c1: &OsculatingCircle, c2: &OsculatingCircle) -> f64 {
    let (p1, r1) = c1.left_disk();
    let (p2, r2) = c2.left_disk();
    r1 - r2 - sphere_distance(&p1, &p2)
}

/// σ̂′ in the strip parameter.
pub fn sigma_hat_prime(st: &RuledStrip, s: f64) -> Result<f64, RectifyError> {
    Ok(extended_frame_jets(st, s, 1)?.sigma_hat.deriv(1))
}

/// Checks disk nesting for the given parameter pairs on `interval`, where σ̂
/// must be monotone. Each pair is reordered so that `s1 < s2`.
pub fn nesting_check(
    st: &RuledStrip,
    interval: (f64, f64),
    pairs: &[(f64, f64)],
) -> Result<NestingReport, RectifyError> {
    require_darboux(st)?;
    let (a, b) = interval;
    let n = 400;
    let d: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| sigma_hat_prime(st, a + (b - a) * i as f64 / n as f64))
        .collect::<Result<_, _>>()?;
    let scale = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale + 1e-12;
    let increasing = d.iter().all(|&v| v >= -tol);
    let decreasing = d.iter().all(|&v| v <= tol);
    if !increasing && !decreasing {
        return Err(RectifyError::NotMonotone { a, b });
    }
    let margins: Vec<f64> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let (s1, s2) = if x <= y { (x, y) } else { (y, x) };
            let c1 = osculating_circle(st, s1)?;
            let c2 = osculating_circle(st, s2)?;
            // Larger geodesic curvature means a smaller disk.
            Ok(if increasing {
                containment_margin(&c1, &c2)
            } else {
                containment_margin(&c2, &c1)
            })
        })
        .collect::<Result<_, RectifyError>>()?;
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(NestingReport {
        pass: worst >= -DISK_TOL,
        worst_margin: worst,
        increasing,
        pairs: pairs.len(),
    })
}

/// Components of the zero set of an odd-periodic σ′ over one period.
pub fn extrema_components_of<E: Send>(
    sigma_prime: &(dyn Fn(f64) -> Result<f64, E> + Sync),
    origin: f64,
    period: f64,
    samples: usize,
) -> Result<Vec<ZeroComponent>, E> {
    let n = samples.max(64);
    let mut vmax = 0.0_f64;
    for i in 0..n {
        vmax = vmax.max(sigma_prime(origin + period * (i as f64 + 0.5) / n as f64)?.abs());
    }
    zero_components(sigma_prime, origin, period, n, 1e-9 * vmax.max(1e-300), true, 1e-12)
}

/// Components of the zero set of σ̂′, counted on the circle.
pub fn sigma_extrema_components(st: &RuledStrip, samples: usize) -> Result<Vec<ZeroComponent>, RectifyError> {
    require_darboux(st)?;
    let f = |s: f64| sigma_hat_prime(st, s);
    extrema_components_of(&f, st.origin(), st.period(), samples)
}

/// At least three σ̂-extremum components and at least three
/// non-cuspidal-edge points.
pub fn check_theorem(st: &RuledStrip, census: &Census, samples: usize) -> Result<TheoremReport, RectifyError> {
    let k = sigma_extrema_components(st, samples)?.len();
    let n = census.non_ce_count();
    Ok(TheoremReport {
        extrema_components: k,
        non_ce_count: n,
        pass: k >= 3 && n >= 3,
    })
}
