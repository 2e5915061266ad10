//! From angular transmittance to images: PSFs, collection efficiency,
//! sensor rendering and contrast-transfer analysis.

mod ctf;
mod render;

pub use ctf::{ctf, pixel_fiber_modulation, resolution_at, usaf_scene, CtfResolution, UsafPattern};
pub use render::{render, NoiseModel};

use crate::error::{OpticsError, Result};
use crate::response::{AngularResponse, ResponseMeta};

/// Sensor and sample geometry. Lengths in µm.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalGeometry {
    pub working_distance_um: f64,
    pub medium_index: f64,
    pub pixel_pitch_um: f64,
    pub pixel_rows: usize,
    pub pixel_cols: usize,
    /// Fiber lattice alignment offset relative to the pixel grid.
    pub offset_um: (f64, f64),
}

impl OpticalGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.working_distance_um <= 0.0 {
            return Err(OpticsError::InvalidParameter(
                "working distance must be positive".into(),
            ));
        }
        if self.medium_index < 1.0 {
            return Err(OpticsError::InvalidParameter(
                "medium index must be at least 1".into(),
            ));
        }
        if self.pixel_pitch_um <= 0.0 || self.pixel_rows == 0 || self.pixel_cols == 0 {
            return Err(OpticsError::InvalidParameter(
                "pixel grid must be non-degenerate".into(),
            ));
        }
        Ok(())
    }

    /// Nyquist-limited resolution of the pixel grid: two pixel pitches.
    pub fn nyquist_um(&self) -> f64 {
        2.0 * self.pixel_pitch_um
    }
}

/// Rectangular intensity grid with physical texel pitch. Used for scenes,
/// rendered sensor images, kernels and masks alike.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneImage {
    pub pitch_um: f64,
    pub rows: usize,
    pub cols: usize,
    /// Physical coordinate of the center of texel (0, 0), µm.
    pub origin_um: (f64, f64),
    data: Vec<f64>,
}

impl SceneImage {
    pub fn new(pitch_um: f64, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if pitch_um <= 0.0 || rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(OpticsError::InvalidParameter(
                "scene dimensions inconsistent with data length".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(OpticsError::InvalidParameter(
                "scene values must be finite and non-negative".into(),
            ));
        }
        // Default origin centers the grid on (0, 0).
        let origin = (
            -0.5 * (cols as f64 - 1.0) * pitch_um,
            -0.5 * (rows as f64 - 1.0) * pitch_um,
        );
        Ok(Self {
            pitch_um,
            rows,
            cols,
            origin_um: (origin.0, origin.1),
            data,
        })
    }

    pub fn zeros(pitch_um: f64, rows: usize, cols: usize) -> Self {
        Self::new(pitch_um, rows, cols, vec![0.0; rows * cols]).expect("valid zero image")
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Physical (x, y) of a texel center.
    pub fn texel_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_um.0 + col as f64 * self.pitch_um,
            self.origin_um.1 + row as f64 * self.pitch_um,
        )
    }
}

/// Region of interest in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Angular PSF: T(θ)·cos³θ, normalized to unit peak.
pub fn psf_angular(t: &AngularResponse) -> Result<AngularResponse> {
    let values: Vec<f64> = t
        .theta_deg()
        .iter()
        .zip(t.transmittance())
        .map(|(&th, &tr)| tr * th.to_radians().cos().powi(3))
        .collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(OpticsError::DegenerateResponse(
            "transmittance is identically zero".into(),
        ));
    }
    AngularResponse::new(
        t.theta_deg().to_vec(),
        values.iter().map(|v| v / peak).collect(),
        ResponseMeta { ..t.meta.clone() },
    )
}

/// Full width at half maximum of a peak-normalized angular curve, assuming
/// the peak sits at (or near) 0° and the curve is symmetric about the axis.
pub fn fwhm_deg(psf: &AngularResponse) -> Result<f64> {
    let theta = psf.theta_deg();
    let v = psf.transmittance();
    let peak = v.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(OpticsError::DegenerateResponse("flat zero curve".into()));
    }
    let half = 0.5 * peak;
    let peak_idx = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    for i in peak_idx..v.len() - 1 {
        if v[i] >= half && v[i + 1] < half {
            let f = (v[i] - half) / (v[i] - v[i + 1]);
            let cross = theta[i] + f * (theta[i + 1] - theta[i]);
            return Ok(2.0 * cross);
        }
    }
    Err(OpticsError::DegenerateResponse(
        "curve never falls below half maximum".into(),
    ))
}

/// Map an in-medium inclination to the equivalent air angle the plate was
/// characterized at. Angles past the total-internal-reflection limit return
/// `None`.
pub fn medium_to_air_deg(theta_medium_deg: f64, medium_index: f64) -> Option<f64> {
    let s = medium_index * theta_medium_deg.to_radians().sin();
    if s > 1.0 {
        None
    } else {
        Some(s.asin().to_degrees())
    }
}

/// Radial PSF kernel on a square texel grid, normalized to unit sum.
///
/// Takes the air-characterized angular transmittance `t`, looked up at the
/// Snell-mapped air angle of each texel radius, times the cos³ obliquity of
/// the in-medium propagation angle; radii beyond the in-medium TIR limit
/// get zero weight. In air this reduces to the familiar T(θ)·cos³θ profile.
pub fn psf_spatial(
    t: &AngularResponse,
    geom: &OpticalGeometry,
    texel_pitch_um: f64,
    max_radius_um: f64,
) -> Result<SceneImage> {
    geom.validate()?;
    if texel_pitch_um <= 0.0 || max_radius_um < 0.0 {
        return Err(OpticsError::InvalidParameter(
            "kernel pitch and radius must be positive".into(),
        ));
    }
    let l = geom.working_distance_um;
    let grid_max = t.max_theta_deg();
    // Kernel support: the largest air angle with nonzero weight, mapped
    // back into the medium. Texels beyond it carry exactly zero.
    let support_deg = t
        .theta_deg()
        .iter()
        .zip(t.transmittance())
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, _)| *t)
        .fold(0.0, f64::max);
    let theta_m_cap = (support_deg.to_radians().sin() / geom.medium_index)
        .min(1.0)
        .asin();
    let r_cap = (l * theta_m_cap.tan()).min(max_radius_um);
    // One guard ring of zeros so a sharp cutoff is visible in the kernel.
    let half = (r_cap / texel_pitch_um).floor() as usize + 1;
    let n = 2 * half + 1;
    let mut data = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            let x = (col as f64 - half as f64) * texel_pitch_um;
            let y = (row as f64 - half as f64) * texel_pitch_um;
            let r = (x * x + y * y).sqrt();
            let theta_m = (r / l).atan();
            // Obliquity belongs to the source-side geometry (the medium);
            // the air angle only indexes the air-characterized response.
            let value = match medium_to_air_deg(theta_m.to_degrees(), geom.medium_index) {
                Some(theta_air) if theta_air <= grid_max => {
                    t.interpolate(theta_air)? * theta_m.cos().powi(3)
                }
                _ => 0.0,
            };
            data[row * n + col] = value;
        }
    }
    let sum: f64 = data.iter().sum();
    if sum <= 0.0 {
        return Err(OpticsError::DegenerateResponse(
            "spatial kernel sums to zero".into(),
        ));
    }
    for v in &mut data {
        *v /= sum;
    }
    SceneImage::new(texel_pitch_um, n, n, data)
}

/// Collection efficiency ½∫T(θ)sinθ dθ by trapezoid quadrature.
pub fn collection_efficiency(t: &AngularResponse) -> Result<f64> {
    if t.len() < 64 {
        return Err(OpticsError::InvalidParameter(format!(
            "collection efficiency needs at least 64 samples, got {}",
            t.len()
        )));
    }
    if t.max_theta_deg() < 85.0 {
        return Err(OpticsError::Coverage {
            max_deg: t.max_theta_deg(),
        });
    }
    let theta = t.theta_deg();
    let tr = t.transmittance();
    let mut acc = 0.0;
    for i in 1..theta.len() {
        let (a, b) = (theta[i - 1].to_radians(), theta[i].to_radians());
        let fa = tr[i - 1] * a.sin();
        let fb = tr[i] * b.sin();
        acc += 0.5 * (fa + fb) * (b - a);
    }
    Ok(0.5 * acc)
}

/// Closed-form collection efficiency of a rectangular angle filter with
/// cutoff `theta_c_deg`: sin²(θ_C/2).
pub fn collection_efficiency_rect(theta_c_deg: f64) -> Result<f64> {
    if !(theta_c_deg > 0.0 && theta_c_deg <= 90.0) {
        return Err(OpticsError::Domain(format!(
            "cutoff angle {theta_c_deg}° must lie in (0°, 90°]"
        )));
    }
    Ok((theta_c_deg.to_radians() / 2.0).sin().powi(2))
}

/// Michelson contrast (max - min)/(max + min) over a pixel region.
pub fn michelson_contrast(image: &SceneImage, roi: &Roi) -> Result<f64> {
    if roi.rows == 0
        || roi.cols == 0
        || roi.row0 + roi.rows > image.rows
        || roi.col0 + roi.cols > image.cols
    {
        return Err(OpticsError::InvalidParameter(format!(
            "ROI {roi:?} does not fit a {}×{} image",
            image.rows, image.cols
        )));
    }
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for r in roi.row0..roi.row0 + roi.rows {
        for c in roi.col0..roi.col0 + roi.cols {
            let v = image.at(r, c);
            max = max.max(v);
            min = min.min(v);
        }
    }
    if max + min <= 0.0 {
        return Err(OpticsError::UndefinedContrast(
            "ROI intensities sum to zero".into(),
        ));
    }
    Ok((max - min) / (max + min))
}
