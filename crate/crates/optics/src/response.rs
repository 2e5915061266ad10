//! Sampled angular transmittance curves.
//!
//! `AngularResponse` is the exchange type between the ray tracer, the
//! frontend composer, and the imaging pipeline. Curves are defined on a
//! strictly increasing grid of incidence angles in degrees and interpolated
//! linearly in between. Measured curves (e.g. digitized from a power-meter
//! sweep) can be substituted anywhere a simulated one is expected.

use crate::error::{OpticsError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseMeta {
    pub wavelength_nm: f64,
    pub samples_per_angle: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularResponse {
    theta_deg: Vec<f64>,
    transmittance: Vec<f64>,
    pub meta: ResponseMeta,
}

impl AngularResponse {
    pub fn new(theta_deg: Vec<f64>, transmittance: Vec<f64>, meta: ResponseMeta) -> Result<Self> {
        if theta_deg.len() != transmittance.len() {
            return Err(OpticsError::InvalidParameter(format!(
                "grid length {} does not match transmittance length {}",
                theta_deg.len(),
                transmittance.len()
            )));
        }
        if theta_deg.is_empty() {
            return Err(OpticsError::InvalidParameter("empty response".into()));
        }
        if theta_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OpticsError::InvalidParameter(
                "theta grid must be strictly increasing".into(),
            ));
        }
        if theta_deg[0] < 0.0 || *theta_deg.last().unwrap() > 90.0 {
            return Err(OpticsError::InvalidParameter(
                "theta grid must lie within [0°, 90°]".into(),
            ));
        }
        if transmittance
            .iter()
            .any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0)
        {
            return Err(OpticsError::InvalidParameter(
                "transmittance values must be finite and within [0, 1]".into(),
            ));
        }
        Ok(Self {
            theta_deg,
            transmittance,
            meta,
        })
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn transmittance(&self) -> &[f64] {
        &self.transmittance
    }

    pub fn len(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_deg.is_empty()
    }

    pub fn max_theta_deg(&self) -> f64 {
        *self.theta_deg.last().unwrap()
    }

    pub fn max_transmittance(&self) -> f64 {
        self.transmittance.iter().cloned().fold(0.0, f64::max)
    }

    /// Linear interpolation at `theta_deg`. Errors outside the grid span.
    pub fn interpolate(&self, theta_deg: f64) -> Result<f64> {
        let lo = self.theta_deg[0];
        let hi = self.max_theta_deg();
        if !(lo..=hi).contains(&theta_deg) {
            return Err(OpticsError::OutOfRange {
                theta_deg,
                min_deg: lo,
                max_deg: hi,
            });
        }
        let idx = match self
            .theta_deg
            .binary_search_by(|t| t.partial_cmp(&theta_deg).unwrap())
        {
            Ok(i) => return Ok(self.transmittance[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.theta_deg[idx - 1], self.theta_deg[idx]);
        let (v0, v1) = (self.transmittance[idx - 1], self.transmittance[idx]);
        let f = (theta_deg - t0) / (t1 - t0);
        Ok(v0 + f * (v1 - v0))
    }

    /// Uniform grid from 0° up to `max_deg` inclusive with the given step.
    pub fn uniform_grid(max_deg: f64, step_deg: f64) -> Vec<f64> {
        let n = (max_deg / step_deg).round() as usize;
        (0..=n).map(|i| i as f64 * step_deg).collect()
    }

    /// Constant transmittance on a uniform [0°, 90°] grid with `n` points.
    pub fn constant(t: f64, n: usize) -> Result<Self> {
        let theta: Vec<f64> = (0..n).map(|i| 90.0 * i as f64 / (n - 1) as f64).collect();
        Self::new(theta, vec![t; n], ResponseMeta::default())
    }

    /// Ideal rectangular angle filter: T = 1 for θ ≤ θ_C, 0 beyond.
    ///
    /// The cutoff is represented by a near-coincident grid pair so quadrature
    /// over the curve sees the discontinuity at the exact cutoff angle.
    pub fn rectangular(theta_c_deg: f64, n: usize) -> Result<Self> {
        if !(theta_c_deg > 0.0 && theta_c_deg <= 90.0) {
            return Err(OpticsError::Domain(format!(
                "cutoff angle {theta_c_deg}° must lie in (0°, 90°]"
            )));
        }
        let eps = 1e-9;
        let mut theta = Vec::with_capacity(n + 2);
        let mut trans = Vec::with_capacity(n + 2);
        for i in 0..n {
            let t = 90.0 * i as f64 / (n - 1) as f64;
            if (t - theta_c_deg).abs() < eps {
                continue;
            }
            if t > theta_c_deg && theta.last().map_or(true, |&l| l < theta_c_deg) {
                theta.push(theta_c_deg);
                trans.push(1.0);
                theta.push(theta_c_deg + eps);
                trans.push(0.0);
            }
            theta.push(t);
            trans.push(if t <= theta_c_deg { 1.0 } else { 0.0 });
        }
        // A cutoff at the hemisphere edge has no beyond-cutoff sample to
        // trigger the insertion above; restore the endpoint explicitly.
        if theta.last().is_some_and(|&l| l < theta_c_deg) {
            theta.push(theta_c_deg);
            trans.push(1.0);
        }
        Self::new(theta, trans, ResponseMeta::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_midpoint() {
        let r = AngularResponse::new(
            vec![0.0, 10.0, 20.0],
            vec![1.0, 0.5, 0.0],
            ResponseMeta::default(),
        )
        .unwrap();
        assert_relative_eq!(r.interpolate(5.0).unwrap(), 0.75);
        assert_relative_eq!(r.interpolate(10.0).unwrap(), 0.5);
        assert!(r.interpolate(25.0).is_err());
    }

    #[test]
    fn rejects_unsorted_grid() {
        let r = AngularResponse::new(
            vec![0.0, 10.0, 10.0],
            vec![1.0, 0.5, 0.0],
            ResponseMeta::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn rectangular_has_sharp_edge() {
        let r = AngularResponse::rectangular(10.0, 1024).unwrap();
        assert_relative_eq!(r.interpolate(9.99).unwrap(), 1.0);
        assert_relative_eq!(r.interpolate(10.01).unwrap(), 0.0);
    }
}
