//! Ruled strips `F(s, u) = γ(s) + u ξ(s)`: ruling fields, Möbius and
//! flatness validation, the area element, the unit normal, and meshes.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::curve::{CurveError, CurveR3};
use crate::expr::{eval_jet, EvalError, Expr};
use crate::jet::{Jet, JetError};
use crate::numeric::fmt_sig9;
use crate::vjet::{det3, VJet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StripError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("ruling evaluation failed at s = {s}: {source}")]
    Eval { s: f64, source: EvalError },
    #[error("jet arithmetic failed at s = {s}: {source}")]
    Jet { s: f64, source: JetError },
    #[error("γ′ and ξ are parallel at s = {s}")]
    Degenerate { s: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("half-width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("surface point is not finite at (s, u) = ({s}, {u})")]
    NonFinite { s: f64, u: f64 },
}

impl StripError {
    pub(crate) fn jet(s: f64) -> impl Fn(JetError) -> StripError {
        move |source| StripError::Jet { s, source }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RulingField {
    Explicit([Expr; 3]),
    /// ξ = p e + q n + r b in the Frenet frame of the curve.
    FrenetCombination { p: Expr, q: Expr, r: Expr },
    /// ξ = σ̂ ê + b̂, the normalized Darboux field extended across inflections.
    Darboux,
}

impl RulingField {
    pub fn mode(&self) -> &'static str {
        match self {
            RulingField::Explicit(_) => "explicit",
            RulingField::FrenetCombination { .. } => "frenet",
            RulingField::Darboux => "darboux",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuledStrip {
    curve: CurveR3,
    ruling: RulingField,
    half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusReport {
    pub is_mobius: bool,
    pub is_flat: bool,
    /// max |det(γ′, ξ, ξ′)| / (1 + |γ′||ξ||ξ′|)
    pub max_flatness_defect: f64,
    /// max |det(γ′, ξ, ξ′)| without normalization.
    pub max_raw_det: f64,
    /// max |ξ(s + l) + ξ(s)| / |ξ(s)|
    pub max_odd_periodicity_defect: f64,
    /// max |ξ(s + l) − ξ(s)| / |ξ(s)|
    pub max_periodicity_defect: f64,
    /// min |γ′ × ξ| / (|γ′||ξ|)
    pub min_independence: f64,
}

/// F together with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub f: Vector3<f64>,
    pub fs: Vector3<f64>,
    pub fu: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaElement {
    pub direct: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    pub params: Vec<(f64, f64)>,
    /// Quads, 0-based, counter-clockwise in (s, u).
    pub faces: Vec<[usize; 4]>,
}

/// Jets of γ′ and ξ at one parameter, both of the same order.
#[derive(Debug, Clone)]
pub struct StripJets {
    pub gamma: VJet,
    pub d1: VJet,
    pub xi: VJet,
}

/// Branch threshold for the area-element closed form in the unit gauge.
const BRANCH_TOL: f64 = 2e-8;

impl RuledStrip {
    pub fn new(curve: CurveR3, ruling: RulingField, half_width: f64) -> Result<Self, StripError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(StripError::BadHalfWidth(half_width));
        }
        if curve.is_atlas() && !matches!(ruling, RulingField::Darboux) {
            return Err(StripError::Unsupported(format!(
                "{} rulings need a periodic curve; two-chart curves support only darboux",
                ruling.mode()
            )));
        }
        if matches!(ruling, RulingField::Darboux) {
            curve.check_inflections_eligible()?;
        }
        Ok(RuledStrip {
            curve,
            ruling,
            half_width,
        })
    }

    pub fn curve(&self) -> &CurveR3 {
        &self.curve
    }

    pub fn ruling(&self) -> &RulingField {
        &self.ruling
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn period(&self) -> f64 {
        self.curve.period()
    }

    /// Parameter where scans over one period start.
    pub fn origin(&self) -> f64 {
        if self.curve.is_atlas() {
            -std::f64::consts::PI
        } else {
            0.0
        }
    }

    pub fn xi_jet(&self, s: f64, order: usize) -> Result<VJet, StripError> {
        let c = &self.curve;
        match &self.ruling {
            RulingField::Explicit(comps) => {
                let ev = |e: &Expr| eval_jet(e, s, order, c).map_err(|source| StripError::Eval { s, source });
                Ok(VJet::new(ev(&comps[0])?, ev(&comps[1])?, ev(&comps[2])?))
            }
            RulingField::FrenetCombination { p, q, r } => {
                let [e, n, b] = c.frenet_jets(s, order)?;
                let ev = |x: &Expr| eval_jet(x, s, order, c).map_err(|source| StripError::Eval { s, source });
                let (p, q, r) = (ev(p)?, ev(q)?, ev(r)?);
                Ok(e.scale(&p).add(&n.scale(&q)).add(&b.scale(&r)))
            }
            RulingField::Darboux => {
                let (b, sigma) = c.extended_binormal(s, order)?;
                let e = c.velocity_jet(s, order)?.normalize().map_err(StripError::jet(s))?;
                Ok(e.scale(&sigma).add(&b))
            }
        }
    }

    pub fn xi(&self, s: f64) -> Result<Vector3<f64>, StripError> {
        Ok(self.xi_jet(s, 0)?.value())
    }

    pub fn jets(&self, s: f64, order: usize) -> Result<StripJets, StripError> {
        let gamma = self.curve.position_jet(s, order + 1)?;
        let d1 = gamma.differentiate();
        Ok(StripJets {
            gamma: gamma.truncate(order),
            d1,
            xi: self.xi_jet(s, order)?,
        })
    }

    pub fn validate_mobius(&self, samples: usize) -> Result<MobiusReport, StripError> {
        let n = samples.max(16);
        let l = self.period();
        let o = self.origin();
        let rows: Vec<[f64; 6]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = o + l * i as f64 / n as f64;
                let j = self.jets(s, 1)?;
                let (g1, x, x1) = (j.d1.value(), j.xi.value(), j.xi.deriv(1));
                let det = g1.cross(&x).dot(&x1);
                let xl = self.xi(s + l)?;
                let xn = x.norm();
                Ok([
                    det.abs() / (1.0 + g1.norm() * xn * x1.norm()),
                    det.abs(),
                    (xl + x).norm() / xn,
                    (xl - x).norm() / xn,
                    g1.cross(&x).norm() / (g1.norm() * xn),
                    xn,
                ])
            })
            .collect::<Result<_, StripError>>()?;
        let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        let min = |k: usize| rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        let independent = min(4) > 1e-8 && min(5) > 0.0;
        let odd = max(2) < 1e-8;
        Ok(MobiusReport {
            is_mobius: odd && independent,
            is_flat: max(0) < 1e-8,
            max_flatness_defect: max(0),
            max_raw_det: max(1),
            max_odd_periodicity_defect: max(2),
            max_periodicity_defect: max(3),
            min_independence: min(4),
        })
    }

    pub fn eval_f(&self, s: f64, u: f64) -> Result<SurfacePoint, StripError> {
        let j = self.jets(s, 1)?;
        let x = j.xi.value();
        Ok(SurfacePoint {
            f: j.gamma.value() + u * x,
            fs: j.d1.value() + u * j.xi.deriv(1),
            fu: x,
        })
    }

    /// `|F_s × F_u|²` in the arc-length, unit-ruling gauge, computed directly
    /// and through the closed form split on whether the ruling turns.
    pub fn area_element_sq(&self, s: f64, u: f64) -> Result<AreaElement, StripError> {
        let j = self.jets(s, 1)?;
        let (g1, x, x1) = (j.d1.value(), j.xi.value(), j.xi.deriv(1));
        let q = g1.norm();
        let xn = x.norm();
        let fs = g1 + u * x1;
        let direct = fs.cross(&x).norm_squared() / (q * q * xn * xn);

        // Unit gauge: e = γ′/|γ′|, ξ̄ = ξ/|ξ|, ξ̄_a = ξ̄′/|γ′|, ū = u|ξ|.
        let e = g1 / q;
        let xb = x / xn;
        let xa = (x1 - xb * xb.dot(&x1)) / (xn * q);
        let ub = u * xn;
        let a = xa.norm();
        let closed_form = if a > BRANCH_TOL {
            let det = e.cross(&xb).dot(&xa);
            (a * ub + e.dot(&xa) / a).powi(2) + (det / a).powi(2)
        } else {
            e.cross(&xb).norm_squared()
        };
        Ok(AreaElement { direct, closed_form })
    }

    /// Jet of the unit normal ν = γ′ × ξ / |γ′ × ξ|.
    pub fn nu_jet(&self, s: f64, order: usize) -> Result<VJet, StripError> {
        let j = self.jets(s, order)?;
        let c = j.d1.truncate(order).cross(&j.xi);
        if !(c.value().norm() > 1e-14) {
            return Err(StripError::Degenerate { s });
        }
        c.normalize().map_err(StripError::jet(s))
    }

    pub fn normal_nu(&self, s: f64) -> Result<Vector3<f64>, StripError> {
        Ok(self.nu_jet(s, 0)?.value())
    }

    pub fn nu_prime(&self, s: f64) -> Result<Vector3<f64>, StripError> {
        Ok(self.nu_jet(s, 1)?.deriv(1))
    }

    pub fn nu_prime_norm(&self, s: f64) -> Result<f64, StripError> {
        Ok(self.nu_prime(s)?.norm())
    }

    /// Coefficients of the affine function λ(s, u) = λ0 + u λ1 whose zero
    /// set is the singular set: λ0 = det(γ′, ξ, ν), λ1 = det(ξ′, ξ, ν).
    pub fn lambda(&self, s: f64) -> Result<(f64, f64), StripError> {
        let j = self.jets(s, 1)?;
        Ok(lambda_from(&j.d1.value(), &j.xi.value(), &j.xi.deriv(1)))
    }

    /// Jets of λ0 and λ1 in `s`.
    pub fn lambda_jets(&self, s: f64, order: usize) -> Result<(Jet, Jet), StripError> {
        let j = self.jets(s, order + 1)?;
        let g1 = j.d1.truncate(order);
        let x = j.xi.truncate(order);
        let x1 = j.xi.differentiate();
        let c = g1.cross(&x);
        let cn = c.norm().map_err(|_| StripError::Degenerate { s })?;
        let nu = c.div(&cn).map_err(StripError::jet(s))?;
        Ok((cn, det3(&x1, &x, &nu)))
    }

    /// Grid mesh over one period. For Möbius strips with a symmetric
    /// `u_range` the seam is closed by the identification (s + l, u) ~ (s, −u).
    pub fn make_mesh(&self, s_steps: usize, u_steps: usize, u_range: (f64, f64)) -> Result<Mesh, StripError> {
        self.mesh_with(s_steps, u_steps, |_| Ok(u_range))
    }

    /// Like [`make_mesh`](Self::make_mesh), but each ruling segment is
    /// stretched to reach slightly past the singular curve when it lies
    /// within `|u| < 10`.
    pub fn make_mesh_adaptive(&self, s_steps: usize, u_steps: usize, u_range: (f64, f64)) -> Result<Mesh, StripError> {
        let (a, b) = u_range;
        let margin = 0.1 * (b - a).abs().max(1e-3);
        self.mesh_with(s_steps, u_steps, |s| {
            let (l0, l1) = self.lambda(s)?;
            let us = -l0 / l1;
            if us.is_finite() && us.abs() < 10.0 {
                Ok((a.min(us - margin), b.max(us + margin)))
            } else {
                Ok((a, b))
            }
        })
    }

    fn mesh_with(
        &self,
        s_steps: usize,
        u_steps: usize,
        range: impl Fn(f64) -> Result<(f64, f64), StripError> + Sync,
    ) -> Result<Mesh, StripError> {
        if s_steps < 2 || u_steps < 2 {
            return Err(StripError::Unsupported("mesh needs at least 2 steps in each direction".into()));
        }
        let l = self.period();
        let o = self.origin();
        let columns: Vec<Vec<(Vector3<f64>, (f64, f64))>> = (0..s_steps)
            .into_par_iter()
            .map(|i| {
                let s = o + l * i as f64 / s_steps as f64;
                let (a, b) = range(s)?;
                let j = self.jets(s, 0)?;
                let (g, x) = (j.gamma.value(), j.xi.value());
                (0..u_steps)
                    .map(|k| {
                        let u = a + (b - a) * k as f64 / (u_steps - 1) as f64;
                        let p = g + u * x;
                        if p.iter().all(|c| c.is_finite()) {
                            Ok((p, (s, u)))
                        } else {
                            Err(StripError::NonFinite { s, u })
                        }
                    })
                    .collect()
            })
            .collect::<Result<_, StripError>>()?;

        let mut mesh = Mesh::default();
        for col in columns {
            for (p, su) in col {
                mesh.vertices.push(p);
                mesh.params.push(su);
            }
        }
        let idx = |i: usize, k: usize| i * u_steps + k;
        for i in 0..s_steps - 1 {
            for k in 0..u_steps - 1 {
                mesh.faces.push([idx(i, k), idx(i + 1, k), idx(i + 1, k + 1), idx(i, k + 1)]);
            }
        }
        // Seam between the last column and the first.
        let report = self.validate_mobius(64)?;
        let last = s_steps - 1;
        if report.is_mobius {
            let (a0, b0) = (mesh.params[idx(0, 0)].1, mesh.params[idx(0, u_steps - 1)].1);
            if (a0 + b0).abs() <= 1e-12 * (1.0 + a0.abs()) {
                let flip = |k: usize| u_steps - 1 - k;
                for k in 0..u_steps - 1 {
                    mesh.faces
                        .push([idx(last, k), idx(0, flip(k)), idx(0, flip(k + 1)), idx(last, k + 1)]);
                }
            }
        } else if report.max_periodicity_defect < 1e-8 {
            for k in 0..u_steps - 1 {
                mesh.faces.push([idx(last, k), idx(0, k), idx(0, k + 1), idx(last, k + 1)]);
            }
        }
        Ok(mesh)
    }
}

pub(crate) fn lambda_from(g1: &Vector3<f64>, x: &Vector3<f64>, x1: &Vector3<f64>) -> (f64, f64) {
    let c = g1.cross(x);
    let cn = c.norm();
    let nu = c / cn;
    (cn, x1.cross(x).dot(&nu))
}

impl Mesh {
    /// ASCII OBJ: `v x y z` lines, then 1-based `f` quads.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z));
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::PI;

    fn exprs(a: &str, b: &str, c: &str) -> [Expr; 3] {
        [parse(a).unwrap(), parse(b).unwrap(), parse(c).unwrap()]
    }

    fn cylinder() -> RuledStrip {
        let c = CurveR3::periodic("circle", exprs("cos(s)", "sin(s)", "0"), 2.0 * PI).unwrap();
        RuledStrip::new(c, RulingField::Explicit(exprs("0", "0", "1")), 0.5).unwrap()
    }

    fn helicoid() -> RuledStrip {
        let c = CurveR3::periodic("axis", exprs("0", "0", "s"), 2.0 * PI).unwrap();
        RuledStrip::new(c, RulingField::Explicit(exprs("cos(s)", "sin(s)", "0")), 0.5).unwrap()
    }

    fn band() -> RuledStrip {
        // Flat Möbius band over the circle: ξ = cos(s/2) n + sin(s/2) b.
        let c = CurveR3::periodic("circle", exprs("cos(s)", "sin(s)", "0"), 2.0 * PI).unwrap();
        let r = RulingField::FrenetCombination {
            p: parse("0").unwrap(),
            q: parse("cos(s/2)").unwrap(),
            r: parse("sin(s/2)").unwrap(),
        };
        RuledStrip::new(c, r, 0.3).unwrap()
    }

    #[test]
    fn cylinder_is_flat_but_not_mobius() {
        let r = cylinder().validate_mobius(64).unwrap();
        assert!(!r.is_mobius && r.is_flat);
        assert!(r.max_flatness_defect < 1e-15);
        assert!(r.max_periodicity_defect < 1e-12);
    }

    #[test]
    fn helicoid_is_not_flat() {
        let r = helicoid().validate_mobius(64).unwrap();
        assert!(!r.is_flat);
        assert!((r.max_raw_det - 1.0).abs() < 1e-12);
        assert!((r.max_flatness_defect - 0.5).abs() < 1e-12);
    }

    #[test]
    fn band_is_mobius() {
        let r = band().validate_mobius(64).unwrap();
        assert!(r.is_mobius, "{r:?}");
    }

    #[test]
    fn surface_point_and_partials() {
        let st = cylinder();
        let p = st.eval_f(0.0, 2.0).unwrap();
        assert!((p.f - Vector3::new(1.0, 0.0, 2.0)).norm() < 1e-15);
        let q = st.eval_f(1.3, 0.0).unwrap();
        assert!((q.f - st.curve().point(1.3).unwrap()).norm() < 1e-15);
        let b = band();
        let (s, u, h) = (0.7, 0.2, 1e-5);
        let fd = (b.eval_f(s + h, u).unwrap().f - b.eval_f(s - h, u).unwrap().f) / (2.0 * h);
        assert!((fd - b.eval_f(s, u).unwrap().fs).norm() < 1e-6);
    }

    #[test]
    fn cylinder_area_element_is_one() {
        let st = cylinder();
        for &(s, u) in &[(0.0, 0.0), (1.0, -3.0), (4.0, 7.5)] {
            let a = st.area_element_sq(s, u).unwrap();
            assert!((a.direct - 1.0).abs() < 1e-12 && (a.closed_form - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn area_element_closed_form_on_nonflat_strip() {
        let st = helicoid();
        for i in 0..20 {
            let (s, u) = (0.3 * i as f64, -1.0 + 0.1 * i as f64);
            let a = st.area_element_sq(s, u).unwrap();
            assert!((a.direct - a.closed_form).abs() <= 1e-10 * a.direct.max(1e-300), "{a:?}");
        }
    }

    #[test]
    fn cylinder_normal_is_radial() {
        let st = cylinder();
        let s = 0.9;
        let nu = st.normal_nu(s).unwrap();
        let radial = Vector3::new(s.cos(), s.sin(), 0.0);
        assert!((nu.dot(&radial).abs() - 1.0).abs() < 1e-14);
        assert!(st.nu_prime(s).unwrap().dot(&nu).abs() < 1e-14);
        assert!((st.nu_prime_norm(s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_counts_and_seams() {
        let st = band();
        let m = st.make_mesh(4, 2, (-0.3, 0.3)).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.faces.len(), 4);
        let m = st.make_mesh(40, 5, (-0.3, 0.3)).unwrap();
        // Seam vertex pairs coincide with the next period's flipped column.
        let l = st.period();
        for k in 0..5 {
            let (s, u) = m.params[k];
            let p = st.eval_f(s + l, -u).unwrap().f;
            assert!((p - m.vertices[k]).norm() < 1e-9);
        }
        let cyl = cylinder().make_mesh(10, 3, (-1.0, 1.0)).unwrap();
        assert_eq!(cyl.faces.len(), 10 * 2);
        assert!(cyl.faces.iter().any(|f| f[0] == 27 && f[1] == 0));
    }

    #[test]
    fn obj_format() {
        let m = cylinder().make_mesh(2, 2, (0.0, 1.0)).unwrap();
        let obj = m.to_obj();
        let lines: Vec<&str> = obj.lines().collect();
        assert_eq!(lines[0], "v 1 0 0");
        assert_eq!(lines.iter().filter(|l| l.starts_with("v ")).count(), 4);
        assert!(lines.iter().filter(|l| l.starts_with("f ")).all(|l| l.split(' ').count() == 5));
    }

    #[test]
    fn frenet_rulings_need_a_periodic_curve() {
        let c = CurveR3::atlas("a", exprs("s", "s^2", "s^3"), exprs("1/s", "1/s^2", "1/s^3"));
        let e = RuledStrip::new(c, RulingField::Explicit(exprs("1", "0", "0")), 1.0);
        assert!(matches!(e, Err(StripError::Unsupported(_))));
    }
}
