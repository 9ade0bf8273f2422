//! Jets of ℝ³-valued functions, one [`Jet`] per component.

use nalgebra::Vector3;

use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, PartialEq)]
pub struct VJet(pub [Jet; 3]);

impl VJet {
    pub fn new(x: Jet, y: Jet, z: Jet) -> Self {
        VJet([x, y, z])
    }

    pub fn constant(s0: f64, v: Vector3<f64>, order: usize) -> Self {
        VJet([
            Jet::constant(s0, v.x, order),
            Jet::constant(s0, v.y, order),
            Jet::constant(s0, v.z, order),
        ])
    }

    pub fn s0(&self) -> f64 {
        self.0[0].s0()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// k-th derivative vector.
    pub fn deriv(&self, k: usize) -> Vector3<f64> {
        Vector3::new(self.0[0].deriv(k), self.0[1].deriv(k), self.0[2].deriv(k))
    }

    pub fn value(&self) -> Vector3<f64> {
        self.deriv(0)
    }

    pub fn differentiate(&self) -> VJet {
        VJet(self.0.clone().map(|j| j.differentiate()))
    }

    pub fn truncate(&self, order: usize) -> VJet {
        VJet(self.0.clone().map(|j| j.truncate(order)))
    }

    pub fn shift_to(&self, s1: f64, order: usize) -> VJet {
        VJet(self.0.clone().map(|j| j.shift_to(s1, order)))
    }

    pub fn dot(&self, o: &VJet) -> Jet {
        &(&self.0[0] * &o.0[0]) + &(&self.0[1] * &o.0[1]) + &self.0[2] * &o.0[2]
    }

    pub fn cross(&self, o: &VJet) -> VJet {
        let [a0, a1, a2] = &self.0;
        let [b0, b1, b2] = &o.0;
        VJet([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    pub fn norm_sq(&self) -> Jet {
        self.dot(self)
    }

    pub fn norm(&self) -> Result<Jet, JetError> {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, k: &Jet) -> VJet {
        VJet(self.0.clone().map(|j| &j * k))
    }

    pub fn scale_f(&self, k: f64) -> VJet {
        VJet(self.0.clone().map(|j| j.scale(k)))
    }

    pub fn div(&self, k: &Jet) -> Result<VJet, JetError> {
        let [x, y, z] = &self.0;
        Ok(VJet([x.checked_div(k)?, y.checked_div(k)?, z.checked_div(k)?]))
    }

    pub fn normalize(&self) -> Result<VJet, JetError> {
        self.div(&self.norm()?)
    }

    pub fn add(&self, o: &VJet) -> VJet {
        VJet([&self.0[0] + &o.0[0], &self.0[1] + &o.0[1], &self.0[2] + &o.0[2]])
    }

    pub fn sub(&self, o: &VJet) -> VJet {
        VJet([&self.0[0] - &o.0[0], &self.0[1] - &o.0[1], &self.0[2] - &o.0[2]])
    }

    pub fn neg(&self) -> VJet {
        self.scale_f(-1.0)
    }
}

pub fn det3(a: &VJet, b: &VJet, c: &VJet) -> Jet {
    a.cross(b).dot(c)
}
