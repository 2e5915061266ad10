//! Forward sensor model: blur a fluorophore scene with the frontend PSF,
//! apply the fiber-lattice occupancy mask and integrate onto pixels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{OpticsError, Result};
use crate::fop::{hex, sample_seed, FopDesign};
use crate::imaging::{psf_spatial, OpticalGeometry, SceneImage};
use crate::response::AngularResponse;

/// Additive read noise and signal-dependent shot noise, applied per pixel
/// after integration. Standard deviations are in the same arbitrary
/// intensity units as the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub read_sigma: f64,
    /// Shot-noise scale: the per-pixel variance contribution is
    /// `shot_gain * signal`.
    pub shot_gain: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.read_sigma < 0.0 || self.shot_gain < 0.0 {
            return Err(OpticsError::InvalidParameter(
                "noise parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// 2-D linear convolution via zero-padded FFT, cropped back to the scene
/// footprint with the kernel center aligned.
fn convolve(scene: &SceneImage, kernel: &SceneImage) -> SceneImage {
    let out_rows = scene.rows + kernel.rows - 1;
    let out_cols = scene.cols + kernel.cols - 1;
    let pr = out_rows.next_power_of_two();
    let pc = out_cols.next_power_of_two();

    let embed = |img: &SceneImage| -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); pr * pc];
        for r in 0..img.rows {
            for c in 0..img.cols {
                buf[r * pc + c] = Complex::new(img.at(r, c), 0.0);
            }
        }
        buf
    };

    let mut planner = FftPlanner::new();
    let mut a = embed(scene);
    let mut b = embed(kernel);
    fft2(&mut planner, &mut a, pr, pc, false);
    fft2(&mut planner, &mut b, pr, pc, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    fft2(&mut planner, &mut a, pr, pc, true);

    let scale = 1.0 / (pr * pc) as f64;
    let (off_r, off_c) = (kernel.rows / 2, kernel.cols / 2);
    let mut out = SceneImage::zeros(scene.pitch_um, scene.rows, scene.cols);
    out.origin_um = scene.origin_um;
    for r in 0..scene.rows {
        for c in 0..scene.cols {
            let v = a[(r + off_r) * pc + (c + off_c)].re * scale;
            out.set(r, c, v.max(0.0));
        }
    }
    out
}

fn fft2(planner: &mut FftPlanner<f64>, buf: &mut [Complex<f64>], rows: usize, cols: usize, inverse: bool) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(cols)
    } else {
        planner.plan_fft_forward(cols)
    };
    for r in 0..rows {
        row_fft.process(&mut buf[r * cols..(r + 1) * cols]);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(rows)
    } else {
        planner.plan_fft_forward(rows)
    };
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
}

/// Fractional open-core area of each texel for the given fiber lattice,
/// estimated on a 4×4 sub-grid per texel.
fn occupancy_mask(template: &SceneImage, fop: &FopDesign, offset_um: (f64, f64)) -> SceneImage {
    let mut mask = SceneImage::zeros(template.pitch_um, template.rows, template.cols);
    mask.origin_um = template.origin_um;
    let sub = 4usize;
    let step = template.pitch_um / sub as f64;
    for r in 0..template.rows {
        for c in 0..template.cols {
            let (cx, cy) = template.texel_center(r, c);
            let mut hit = 0usize;
            for i in 0..sub {
                for j in 0..sub {
                    let x = cx - template.pitch_um / 2.0 + (j as f64 + 0.5) * step - offset_um.0;
                    let y = cy - template.pitch_um / 2.0 + (i as f64 + 0.5) * step - offset_um.1;
                    if hex::in_core(x, y, fop.core_diameter_um, fop.pitch_um) {
                        hit += 1;
                    }
                }
            }
            mask.set(r, c, hit as f64 / (sub * sub) as f64);
        }
    }
    mask
}

/// Integrate a texel-resolution image onto the sensor pixel grid. The pixel
/// grid is centered on the optical axis; texels falling outside it are
/// discarded.
fn integrate_pixels(image: &SceneImage, geom: &OpticalGeometry) -> SceneImage {
    let mut pixels = SceneImage::zeros(geom.pixel_pitch_um, geom.pixel_rows, geom.pixel_cols);
    let x0 = -0.5 * geom.pixel_cols as f64 * geom.pixel_pitch_um;
    let y0 = -0.5 * geom.pixel_rows as f64 * geom.pixel_pitch_um;
    for r in 0..image.rows {
        for c in 0..image.cols {
            let (x, y) = image.texel_center(r, c);
            let pc = ((x - x0) / geom.pixel_pitch_um).floor();
            let pr = ((y - y0) / geom.pixel_pitch_um).floor();
            if pc >= 0.0
                && pr >= 0.0
                && (pc as usize) < geom.pixel_cols
                && (pr as usize) < geom.pixel_rows
            {
                let idx = (pr as usize, pc as usize);
                let v = pixels.at(idx.0, idx.1) + image.at(r, c);
                pixels.set(idx.0, idx.1, v);
            }
        }
    }
    pixels
}

/// Render a scene through the frontend onto the sensor.
///
/// * `frontend_t` — composed angular transmittance of the full stack.
/// * `fop` — when present, the fiber lattice imprints its occupancy mask on
///   the blurred field before pixel integration.
/// * `noise` with `seed` — optional per-pixel read + shot noise; rendering
///   is deterministic in `(seed, pixel index)`.
pub fn render(
    scene: &SceneImage,
    frontend_t: &AngularResponse,
    geom: &OpticalGeometry,
    fop: Option<&FopDesign>,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<SceneImage> {
    geom.validate()?;
    if scene.pitch_um > geom.pixel_pitch_um / 4.0 + 1e-12 {
        return Err(OpticsError::Oversampling {
            scene_pitch: scene.pitch_um,
            limit: geom.pixel_pitch_um / 4.0,
        });
    }
    // Truncate the kernel support at the sensor diagonal: anything farther
    // out cannot land on a pixel anyway.
    let diag = f64::hypot(
        geom.pixel_rows as f64 * geom.pixel_pitch_um,
        geom.pixel_cols as f64 * geom.pixel_pitch_um,
    );
    let scene_diag = f64::hypot(
        scene.rows as f64 * scene.pitch_um,
        scene.cols as f64 * scene.pitch_um,
    );
    let kernel = psf_spatial(frontend_t, geom, scene.pitch_um, diag.max(scene_diag))?;
    let mut blurred = convolve(scene, &kernel);

    if let Some(design) = fop {
        let mask = occupancy_mask(&blurred, design, geom.offset_um);
        for (v, m) in blurred.data_mut().iter_mut().zip(mask.data()) {
            *v *= m;
        }
    }

    let mut pixels = integrate_pixels(&blurred, geom);
    if let Some(model) = noise {
        model.validate()?;
        for (i, v) in pixels.data_mut().iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, 0x6e6f, i as u64));
            let sigma = (model.read_sigma * model.read_sigma + model.shot_gain * *v).sqrt();
            // Box-Muller keeps the draw count per pixel fixed at two.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            *v = (*v + sigma * g).max(0.0);
        }
    }
    Ok(pixels)
}
