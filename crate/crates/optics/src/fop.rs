//! Geometric ray tracer for fiber optic plates.
//!
//! A plate is a hexagonal array of transparent fiber cores in black
//! absorptive cladding. Rays within the acceptance cone that enter a core
//! are guided by total internal reflection; everything else marches in a
//! straight line through the lattice, picking up Beer-Lambert absorption
//! along the cladding path. Lattice traversal is analytic
//! cylinder-intersection in a wrapped hex cell, so segment lengths are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OpticsError, Result};
use crate::response::{AngularResponse, ResponseMeta};

pub const HEX_PACKING_DENSITY: f64 = std::f64::consts::PI / (2.0 * 1.732_050_807_568_877_2);

/// Geometry and materials of one fiber optic plate. Lengths in µm,
/// absorption coefficients in µm⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct FopDesign {
    pub n_core: f64,
    pub n_clad: f64,
    pub n_incident: f64,
    pub core_diameter_um: f64,
    pub pitch_um: f64,
    pub thickness_um: f64,
    pub k_clad: f64,
    pub k_core: f64,
}

impl FopDesign {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_core: f64,
        n_clad: f64,
        n_incident: f64,
        core_diameter_um: f64,
        pitch_um: f64,
        thickness_um: f64,
        k_clad: f64,
        k_core: f64,
    ) -> Result<Self> {
        if n_clad > n_core {
            return Err(OpticsError::InvalidDesign(format!(
                "cladding index {n_clad} exceeds core index {n_core}"
            )));
        }
        if n_clad < 1.0 || n_incident < 1.0 {
            return Err(OpticsError::InvalidDesign(
                "refractive indices must be at least 1".into(),
            ));
        }
        if !(core_diameter_um > 0.0 && core_diameter_um < pitch_um) {
            return Err(OpticsError::InvalidDesign(format!(
                "core diameter {core_diameter_um} µm must satisfy 0 < d < pitch ({pitch_um} µm)"
            )));
        }
        if thickness_um <= 0.0 {
            return Err(OpticsError::InvalidDesign(format!(
                "thickness {thickness_um} µm must be positive"
            )));
        }
        if k_clad < 0.0 || k_core < 0.0 {
            return Err(OpticsError::InvalidDesign(
                "absorption coefficients must be non-negative".into(),
            ));
        }
        Ok(Self {
            n_core,
            n_clad,
            n_incident,
            core_diameter_um,
            pitch_um,
            thickness_um,
            k_clad,
            k_core,
        })
    }

    pub fn with_thickness(&self, thickness_um: f64) -> Result<Self> {
        let mut d = self.clone();
        if thickness_um <= 0.0 {
            return Err(OpticsError::InvalidDesign(format!(
                "thickness {thickness_um} µm must be positive"
            )));
        }
        d.thickness_um = thickness_um;
        Ok(d)
    }

    pub fn fill_factor(&self) -> f64 {
        fill_factor_hex(self.core_diameter_um, self.pitch_um).expect("validated geometry")
    }

    /// NA = sqrt(n_co² - n_cl²)/n0, clamped to 1.
    pub fn numerical_aperture(&self) -> f64 {
        ((self.n_core * self.n_core - self.n_clad * self.n_clad).sqrt() / self.n_incident).min(1.0)
    }

    pub fn acceptance_angle_deg(&self) -> f64 {
        self.numerical_aperture().asin().to_degrees()
    }

    /// Analytic normal-incidence transmittance: FF · Fresnel² · e^(-k_core·h),
    /// neglecting the residual cladding path (fully absorbed for opaque
    /// cladding).
    pub fn normal_transmittance(&self) -> f64 {
        let fr = fresnel_transmittance(self.n_incident, self.n_core, 1.0);
        let clad = fresnel_transmittance(self.n_incident, self.n_clad, 1.0);
        self.fill_factor() * fr * fr * (-self.k_core * self.thickness_um).exp()
            + (1.0 - self.fill_factor())
                * clad
                * clad
                * (-self.k_clad * self.thickness_um).exp()
    }
}

/// Acceptance half-angle in degrees from the fiber indices.
pub fn acceptance_angle(n_core: f64, n_clad: f64, n_incident: f64) -> Result<f64> {
    if n_clad > n_core {
        return Err(OpticsError::InvalidDesign(format!(
            "cladding index {n_clad} exceeds core index {n_core}"
        )));
    }
    if n_clad < 1.0 || n_incident < 1.0 {
        return Err(OpticsError::InvalidDesign(
            "refractive indices must be at least 1".into(),
        ));
    }
    let na = ((n_core * n_core - n_clad * n_clad).sqrt() / n_incident).min(1.0);
    Ok(na.asin().to_degrees())
}

/// Area fraction of cores in a hexagonal lattice: (π/(2√3))·(d/p)².
pub fn fill_factor_hex(core_diameter_um: f64, pitch_um: f64) -> Result<f64> {
    if !(core_diameter_um > 0.0 && core_diameter_um <= pitch_um) {
        return Err(OpticsError::InvalidDesign(format!(
            "core diameter {core_diameter_um} µm must satisfy 0 < d ≤ pitch ({pitch_um} µm)"
        )));
    }
    Ok(HEX_PACKING_DENSITY * (core_diameter_um / pitch_um).powi(2))
}

/// A ray about to enter the top plane of the plate (z = 0, travelling +z).
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub wavelength_nm: f64,
    pub weight: f64,
}

impl Ray {
    pub fn new(origin: [f64; 3], direction: [f64; 3], wavelength_nm: f64, weight: f64) -> Result<Self> {
        let norm = (direction[0] * direction[0]
            + direction[1] * direction[1]
            + direction[2] * direction[2])
            .sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(OpticsError::InvalidParameter(format!(
                "ray direction norm {norm} deviates from 1 beyond 1e-9"
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(OpticsError::InvalidParameter(format!(
                "ray weight {weight} must lie in [0, 1]"
            )));
        }
        Ok(Self {
            origin,
            direction,
            wavelength_nm,
            weight,
        })
    }

    /// Ray at inclination `theta_deg` from normal with azimuth `phi_deg`,
    /// entering at (x, y) on the top plane.
    pub fn incident(x_um: f64, y_um: f64, theta_deg: f64, phi_deg: f64, wavelength_nm: f64) -> Self {
        let th = theta_deg.to_radians();
        let ph = phi_deg.to_radians();
        Self {
            origin: [x_um, y_um, 0.0],
            direction: [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()],
            wavelength_nm,
            weight: 1.0,
        }
    }
}

/// Unpolarized Fresnel power transmittance across a planar interface.
/// `cos_i` is the cosine of the incidence angle in medium `n1`.
/// Returns 0 beyond the critical angle.
pub fn fresnel_transmittance(n1: f64, n2: f64, cos_i: f64) -> f64 {
    let sin_i = (1.0 - cos_i * cos_i).max(0.0).sqrt();
    let sin_t = n1 * sin_i / n2;
    if sin_t >= 1.0 {
        return 0.0;
    }
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    let rs = ((n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)).powi(2);
    let rp = ((n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i)).powi(2);
    1.0 - 0.5 * (rs + rp)
}

pub mod hex {
    //! Hexagonal lattice of circles: point classification and exact
    //! line-segment/circle intersection lengths.
    //!
    //! Lattice vectors a1 = (p, 0), a2 = (p/2, √3p/2); circle radius d/2.

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    /// Map a point to fractional lattice coordinates (u, v).
    fn to_lattice(x: f64, y: f64, pitch: f64) -> (f64, f64) {
        let v = 2.0 * y / (SQRT3 * pitch);
        let u = x / pitch - 0.5 * v;
        (u, v)
    }

    /// Position of lattice site (i, j).
    fn site(i: i64, j: i64, pitch: f64) -> (f64, f64) {
        (
            i as f64 * pitch + 0.5 * j as f64 * pitch,
            j as f64 * SQRT3 * 0.5 * pitch,
        )
    }

    /// True when (x, y) lies inside a fiber core.
    pub fn in_core(x: f64, y: f64, core_diameter: f64, pitch: f64) -> bool {
        let r2 = (core_diameter * 0.5).powi(2);
        let (u, v) = to_lattice(x, y, pitch);
        let (iu, iv) = (u.round() as i64, v.round() as i64);
        for di in -1..=1 {
            for dj in -1..=1 {
                let (cx, cy) = site(iu + di, iv + dj, pitch);
                let (dx, dy) = (x - cx, y - cy);
                if dx * dx + dy * dy <= r2 {
                    return true;
                }
            }
        }
        false
    }

    /// Total length of the 2D segment from `p0` to `p1` that lies inside
    /// fiber cores. Cores are disjoint (d < p), so per-circle chords can be
    /// summed directly.
    pub fn core_length(p0: (f64, f64), p1: (f64, f64), core_diameter: f64, pitch: f64) -> f64 {
        let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            return 0.0;
        }
        let (ux, uy) = (dx / len, dy / len);
        let r = core_diameter * 0.5;

        // Lattice-coordinate bounding box of the segment, padded by one
        // pitch so every circle touching the segment is enumerated.
        let corners = [to_lattice(p0.0, p0.1, pitch), to_lattice(p1.0, p1.1, pitch)];
        let pad = 2.0;
        let u_min = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min) - pad;
        let u_max = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max) + pad;
        let v_min = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min) - pad;
        let v_max = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) + pad;

        let mut total = 0.0;
        for j in (v_min.floor() as i64)..=(v_max.ceil() as i64) {
            for i in (u_min.floor() as i64)..=(u_max.ceil() as i64) {
                let (cx, cy) = site(i, j, pitch);
                // Perpendicular distance from circle center to the line.
                let (px, py) = (cx - p0.0, cy - p0.1);
                let t_closest = px * ux + py * uy;
                let (qx, qy) = (px - t_closest * ux, py - t_closest * uy);
                let d2 = qx * qx + qy * qy;
                if d2 >= r * r {
                    continue;
                }
                let half = (r * r - d2).sqrt();
                let t_in = (t_closest - half).max(0.0);
                let t_out = (t_closest + half).min(len);
                if t_out > t_in {
                    total += t_out - t_in;
                }
            }
        }
        total.min(len)
    }
}

/// Transmitted weight of one ray through the plate, deterministic.
pub fn trace_ray(design: &FopDesign, ray: &Ray) -> Result<f64> {
    let dz = ray.direction[2];
    if dz <= 0.0 {
        return Err(OpticsError::InvalidParameter(
            "ray must travel into the plate (direction·ẑ > 0)".into(),
        ));
    }
    let sin_in = (ray.direction[0] * ray.direction[0] + ray.direction[1] * ray.direction[1])
        .sqrt()
        .min(1.0);
    let cos_in = dz.min(1.0);
    let (x, y) = (ray.origin[0], ray.origin[1]);
    let h = design.thickness_um;
    let d = design.core_diameter_um;
    let p = design.pitch_um;

    let entered_core = hex::in_core(x, y, d, p);
    let n_in = if entered_core {
        design.n_core
    } else {
        design.n_clad
    };
    let sin_t = design.n_incident * sin_in / n_in;
    if sin_t >= 1.0 {
        return Ok(0.0);
    }
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    let t_surface = fresnel_transmittance(design.n_incident, n_in, cos_in);

    // TIR guiding: the internal inclination must stay within the fiber NA.
    let na_num = (design.n_core * design.n_core - design.n_clad * design.n_clad).sqrt();
    if entered_core && design.n_incident * sin_in <= na_num + 1e-12 {
        let path = h / cos_t;
        let t_exit = fresnel_transmittance(n_in, design.n_incident, cos_t);
        return Ok(ray.weight * t_surface * (-design.k_core * path).exp() * t_exit);
    }

    // Straight-line march through the lattice.
    let path3 = h / cos_t;
    if path3 > 10.0 * h / dz {
        return Err(OpticsError::Internal(format!(
            "marching path {path3} µm exceeds the 10·h/|dir_z| guard"
        )));
    }
    // 2D chord length through the cores divided by sin(θ_t) gives the 3D
    // core path; near-vertical rays stay in their entry medium throughout.
    let core3 = if sin_t < 1e-12 {
        if entered_core {
            path3
        } else {
            0.0
        }
    } else {
        let len2 = h * sin_t / cos_t;
        let inv = 1.0 / sin_in.max(1e-300);
        let (ux, uy) = (ray.direction[0] * inv, ray.direction[1] * inv);
        let p1 = (x + ux * len2, y + uy * len2);
        hex::core_length((x, y), p1, d, p) / sin_t
    };
    let core3 = core3.min(path3);
    let clad3 = path3 - core3;
    let t_exit = fresnel_transmittance(n_in, design.n_incident, cos_t);
    Ok(ray.weight
        * t_surface
        * (-design.k_clad * clad3 - design.k_core * core3).exp()
        * t_exit)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based per-sample seed so results are independent of execution
/// order and thread count.
pub(crate) fn sample_seed(seed: u64, angle_index: u64, sample_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ angle_index) ^ sample_index)
}

fn transmittance_at_angle(
    design: &FopDesign,
    theta_deg: f64,
    samples: usize,
    seed: u64,
    angle_index: u64,
    wavelength_nm: f64,
) -> Result<f64> {
    if theta_deg >= 90.0 {
        // Grazing limit: the ray never enters the plate.
        return Ok(0.0);
    }
    let p = design.pitch_um;
    let m = (samples as f64).sqrt().floor() as usize;
    let one_sample = |k: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, angle_index, k as u64));
        // Jittered √N×√N strata over the unit cell, remainder samples uniform.
        let (u, v) = if m >= 1 && k < m * m {
            let (i, j) = (k / m, k % m);
            (
                (i as f64 + rng.gen::<f64>()) / m as f64,
                (j as f64 + rng.gen::<f64>()) / m as f64,
            )
        } else {
            (rng.gen::<f64>(), rng.gen::<f64>())
        };
        // Unit cell spanned by a1 = (p, 0), a2 = (p/2, √3p/2).
        let x = u * p + v * 0.5 * p;
        let y = v * 0.75_f64.sqrt() * p;
        let phi = rng.gen::<f64>() * 60.0;
        let ray = Ray::incident(x, y, theta_deg, phi, wavelength_nm);
        trace_ray(design, &ray)
    };

    #[cfg(feature = "parallel")]
    let weights: Result<Vec<f64>> = {
        use rayon::prelude::*;
        (0..samples).into_par_iter().map(one_sample).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let weights: Result<Vec<f64>> = (0..samples).map(one_sample).collect();

    // Fixed-order reduction keeps the sum bit-stable across thread counts.
    Ok(weights?.iter().sum::<f64>() / samples as f64)
}

fn check_sweep_args(theta_grid: &[f64], samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(OpticsError::InvalidParameter(
            "samples_per_angle must be at least 1".into(),
        ));
    }
    if theta_grid.is_empty() {
        return Err(OpticsError::InvalidParameter("empty theta grid".into()));
    }
    if theta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OpticsError::InvalidParameter(
            "theta grid must be strictly increasing".into(),
        ));
    }
    if theta_grid[0] < 0.0 || *theta_grid.last().unwrap() > 90.0 {
        return Err(OpticsError::InvalidParameter(
            "theta grid must lie within [0°, 90°]".into(),
        ));
    }
    Ok(())
}

/// Monte Carlo angular transmittance sweep of a plate at 660 nm-style
/// pencil-beam illumination. Entry positions are stratified over one hex
/// unit cell, azimuth over one 60° lattice period. Deterministic for a
/// fixed seed regardless of thread count.
pub fn angular_transmittance(
    design: &FopDesign,
    theta_grid: &[f64],
    samples_per_angle: usize,
    seed: u64,
) -> Result<AngularResponse> {
    angular_transmittance_impl(design, theta_grid, samples_per_angle, seed, 660.0)
}

fn angular_transmittance_impl(
    design: &FopDesign,
    theta_grid: &[f64],
    samples_per_angle: usize,
    seed: u64,
    wavelength_nm: f64,
) -> Result<AngularResponse> {
    check_sweep_args(theta_grid, samples_per_angle)?;
    let eval = |(i, &t): (usize, &f64)| {
        transmittance_at_angle(design, t, samples_per_angle, seed, i as u64, wavelength_nm)
    };

    #[cfg(feature = "parallel")]
    let values: Result<Vec<f64>> = {
        use rayon::prelude::*;
        theta_grid.par_iter().enumerate().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Result<Vec<f64>> = theta_grid.iter().enumerate().map(eval).collect();

    AngularResponse::new(
        theta_grid.to_vec(),
        values?,
        ResponseMeta {
            wavelength_nm,
            samples_per_angle,
            seed,
        },
    )
}

/// Sequential reference sweep. Produces bit-identical results to
/// [`angular_transmittance`]; exists for benchmarking the data-parallel path
/// against a single-threaded baseline.
pub fn angular_transmittance_seq(
    design: &FopDesign,
    theta_grid: &[f64],
    samples_per_angle: usize,
    seed: u64,
) -> Result<AngularResponse> {
    check_sweep_args(theta_grid, samples_per_angle)?;
    let mut values = Vec::with_capacity(theta_grid.len());
    for (i, &t) in theta_grid.iter().enumerate() {
        if t >= 90.0 {
            values.push(0.0);
            continue;
        }
        let p = design.pitch_um;
        let m = (samples_per_angle as f64).sqrt().floor() as usize;
        let mut sum = 0.0;
        for k in 0..samples_per_angle {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, i as u64, k as u64));
            let (u, v) = if m >= 1 && k < m * m {
                let (a, b) = (k / m, k % m);
                (
                    (a as f64 + rng.gen::<f64>()) / m as f64,
                    (b as f64 + rng.gen::<f64>()) / m as f64,
                )
            } else {
                (rng.gen::<f64>(), rng.gen::<f64>())
            };
            let x = u * p + v * 0.5 * p;
            let y = v * 0.75_f64.sqrt() * p;
            let phi = rng.gen::<f64>() * 60.0;
            let ray = Ray::incident(x, y, t, phi, 660.0);
            sum += trace_ray(design, &ray)?;
        }
        values.push(sum / samples_per_angle as f64);
    }
    AngularResponse::new(
        theta_grid.to_vec(),
        values,
        ResponseMeta {
            wavelength_nm: 660.0,
            samples_per_angle,
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn acceptance_angle_paper_design() {
        assert_relative_eq!(acceptance_angle(1.57, 1.56, 1.0).unwrap(), 10.19, epsilon = 0.01);
        assert_relative_eq!(acceptance_angle(1.50, 1.50, 1.0).unwrap(), 0.0);
        // NA 0.15 from core 1.51 / cladding 1.5025.
        let alpha = acceptance_angle(1.51, 1.5025, 1.0).unwrap();
        assert_relative_eq!(alpha.to_radians().sin(), 0.150, epsilon = 0.001);
        assert!(acceptance_angle(1.50, 1.51, 1.0).is_err());
    }

    #[test]
    fn acceptance_angle_clamps_to_90() {
        assert_relative_eq!(acceptance_angle(2.0, 1.0, 1.0).unwrap(), 90.0);
    }

    #[test]
    fn fill_factor_values() {
        assert_relative_eq!(fill_factor_hex(20.0, 27.0).unwrap(), 0.498, epsilon = 0.001);
        assert_relative_eq!(fill_factor_hex(27.0, 27.0).unwrap(), 0.9069, epsilon = 0.0001);
        assert_relative_eq!(fill_factor_hex(9.0, 11.0).unwrap(), 0.607, epsilon = 0.001);
        assert!(fill_factor_hex(12.0, 11.0).is_err());
    }

    #[test]
    fn trace_normal_core_center_is_fresnel_squared() {
        let mut d = presets::default_fop();
        d.k_core = 0.0;
        let ray = Ray::incident(0.0, 0.0, 0.0, 0.0, 660.0);
        let fr = fresnel_transmittance(1.0, 1.57, 1.0);
        assert_relative_eq!(trace_ray(&d, &ray).unwrap(), fr * fr, epsilon = 1e-12);
        // Standard unpolarized Fresnel for n = 1.57: T² ≈ 0.904.
        assert_relative_eq!(fr * fr, 0.9040, epsilon = 5e-4);
    }

    #[test]
    fn trace_normal_cladding_is_beer_lambert() {
        let d = presets::default_fop();
        // Mid-web between two cores: (p/2, 0) is outside both circles.
        let x = d.pitch_um / 2.0;
        assert!(!hex::in_core(x, 0.0, d.core_diameter_um, d.pitch_um));
        let ray = Ray::incident(x, 0.0, 0.0, 0.0, 660.0);
        let fr = fresnel_transmittance(1.0, d.n_clad, 1.0);
        let expect = fr * fr * (-d.k_clad * d.thickness_um).exp();
        assert_relative_eq!(trace_ray(&d, &ray).unwrap(), expect, max_relative = 1e-9);
    }

    #[test]
    fn trace_oblique_two_fiber_crossing_matches_hand_geometry() {
        // One-ray oracle: 30° ray in the lattice x-direction starting at a
        // core center, steep enough to escape the NA ≈ 0.17 guidance cone.
        // Chord lengths through the circles along the 2D track are computed
        // by hand from circle/line intersections.
        let d = FopDesign::new(1.5, 1.49, 1.0, 20.0, 27.0, 100.0, 0.01, 0.0).unwrap();
        let ray = Ray::incident(0.0, 0.0, 30.0, 0.0, 660.0);
        let sin_t: f64 = 0.5 / 1.5;
        let cos_t = (1.0 - sin_t * sin_t).sqrt();
        let path3 = 100.0 / cos_t;
        let len2 = 100.0 * sin_t / cos_t; // 35.355 µm along +x
        // Track y = 0 crosses circle 0 (center 0,0) for x in [-10, 10] and
        // circle 1 (center 27,0) for x in [17, 35.355].
        let core2 = 10.0 + (len2 - 17.0);
        let core3 = core2 / sin_t;
        let fr_in = fresnel_transmittance(1.0, 1.5, (30.0f64).to_radians().cos());
        let fr_out = fresnel_transmittance(1.5, 1.0, cos_t);
        let expect = fr_in * fr_out * (-0.01 * (path3 - core3)).exp();
        assert_relative_eq!(trace_ray(&d, &ray).unwrap(), expect, max_relative = 1e-9);
    }

    #[test]
    fn trace_60_degree_high_na_plate_is_dark() {
        let mut d = presets::high_na_fop();
        d.thickness_um = 500.0;
        d.k_core = 0.0;
        let resp = angular_transmittance(&d, &[60.0], 512, 7).unwrap();
        assert!(resp.transmittance()[0] <= 1e-4);
    }

    #[test]
    fn normal_incidence_matches_fill_factor_law() {
        let d = presets::default_fop();
        let resp = angular_transmittance(&d, &[0.0], 4096, 1).unwrap();
        let fr = fresnel_transmittance(1.0, d.n_core, 1.0);
        let expect = d.fill_factor() * fr * fr;
        assert_relative_eq!(resp.transmittance()[0], expect, max_relative = 0.01);
    }

    #[test]
    fn guided_plateau_within_acceptance_cone() {
        let d = presets::default_fop();
        let t0 = angular_transmittance(&d, &[0.0], 4096, 1).unwrap().transmittance()[0];
        let alpha = d.acceptance_angle_deg();
        let resp = angular_transmittance(&d, &[0.8 * alpha - 0.5], 4096, 1).unwrap();
        assert!(resp.transmittance()[0] >= 0.5 * t0);
    }

    #[test]
    fn determinism_and_seq_parity() {
        let d = presets::default_fop();
        let grid = [0.0, 15.0, 30.0];
        let a = angular_transmittance(&d, &grid, 256, 42).unwrap();
        let b = angular_transmittance(&d, &grid, 256, 42).unwrap();
        assert_eq!(a, b);
        let c = angular_transmittance_seq(&d, &grid, 256, 42).unwrap();
        assert_eq!(a.transmittance(), c.transmittance());
        let e = angular_transmittance(&d, &grid, 256, 43).unwrap();
        assert_ne!(a.transmittance(), e.transmittance());
    }

    #[test]
    fn azimuthal_symmetry_of_hex_lattice() {
        // Rotating the sampled azimuth window by 60° must reproduce the
        // same curve up to Monte Carlo noise; the sampler already wraps at
        // 60°, so compare two independent seeds as the noise scale and a
        // shifted-azimuth evaluation against the base.
        let d = presets::default_fop();
        let theta = 20.0;
        let n = 4096;
        let base = angular_transmittance(&d, &[theta], n, 5).unwrap().transmittance()[0];
        // Shifted azimuth window evaluated manually.
        let p = d.pitch_um;
        let m = (n as f64).sqrt() as usize;
        let mut sum = 0.0;
        for k in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(super::sample_seed(5, 0, k as u64));
            let (u, v) = if k < m * m {
                let (a, b) = (k / m, k % m);
                ((a as f64 + rng.gen::<f64>()) / m as f64, (b as f64 + rng.gen::<f64>()) / m as f64)
            } else {
                (rng.gen::<f64>(), rng.gen::<f64>())
            };
            let x = u * p + v * 0.5 * p;
            let y = v * 0.75_f64.sqrt() * p;
            let phi = rng.gen::<f64>() * 60.0 + 60.0;
            let ray = Ray::incident(x, y, theta, phi, 660.0);
            sum += trace_ray(&d, &ray).unwrap();
        }
        let shifted = sum / n as f64;
        // Deep-stopband transmittances (~1e-5) carry sizeable Monte Carlo
        // variance at this sample count.
        assert_relative_eq!(base, shifted, max_relative = 0.15);
    }

    #[test]
    fn thickness_doubling_squares_off_axis_floor() {
        // Moderate absorption, independent of the preset fit, so the band
        // below stays tied to the Monte Carlo physics alone.
        let d = FopDesign::new(1.57, 1.56, 1.0, 20.0, 27.0, 250.0, 0.12, 0.0).unwrap();
        let theta = d.acceptance_angle_deg() + 15.0;
        let t1 = angular_transmittance(&d, &[theta], 4096, 9).unwrap().transmittance()[0];
        let d2 = d.with_thickness(2.0 * d.thickness_um).unwrap();
        let t2 = angular_transmittance(&d2, &[theta], 4096, 9).unwrap().transmittance()[0];
        let ratio = t2 / (t1 * t1);
        // Doubling the plate roughly squares the off-axis floor. The ratio
        // sits above 1: the squared value double-counts the interface
        // Fresnel losses (1/Fr² ≈ 1.11) and survivors of the first half are
        // biased toward core-rich tracks, which correlates the two halves.
        assert!((1.0..=2.0).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn trace_weight_in_unit_interval(
            theta in 0.0..89.0f64,
            phi in 0.0..360.0f64,
            u in 0.0..1.0f64,
            v in 0.0..1.0f64,
        ) {
            let d = presets::default_fop();
            let p = d.pitch_um;
            let x = u * p + v * 0.5 * p;
            let y = v * 0.75_f64.sqrt() * p;
            let w = trace_ray(&d, &Ray::incident(x, y, theta, phi, 660.0)).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
        }

        #[test]
        fn core_length_bounded_by_segment(
            x0 in -50.0..50.0f64, y0 in -50.0..50.0f64,
            x1 in -50.0..50.0f64, y1 in -50.0..50.0f64,
        ) {
            let l = hex::core_length((x0, y0), (x1, y1), 20.0, 27.0);
            let seg = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
            prop_assert!(l >= 0.0 && l <= seg + 1e-9);
        }
    }
}
