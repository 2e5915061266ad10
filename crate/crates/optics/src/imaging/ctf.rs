//! Contrast-transfer analysis on rendered 3-bar resolution targets, plus
//! the pixel/fiber-lattice sampling-noise study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OpticsError, Result};
use crate::fop::{hex, sample_seed, FopDesign};
use crate::imaging::{render, OpticalGeometry, SceneImage};
use crate::response::AngularResponse;

/// A single 3-bar element of a resolution target: three bright bars of
/// width `line_width_um`, separated by equal gaps, bars running vertically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsafPattern {
    pub line_width_um: f64,
    /// Lateral shift of the whole element along the bar-to-bar axis.
    pub phase_um: f64,
}

/// Rasterize a 3-bar element onto a texel grid of the given physical
/// extent, centered on the optical axis.
pub fn usaf_scene(pattern: &UsafPattern, texel_pitch_um: f64, extent_um: f64) -> Result<SceneImage> {
    let w = pattern.line_width_um;
    if w <= 0.0 {
        return Err(OpticsError::InvalidParameter(
            "line width must be positive".into(),
        ));
    }
    if texel_pitch_um <= 0.0 || extent_um < 5.0 * w {
        return Err(OpticsError::InvalidParameter(format!(
            "scene extent {extent_um} µm too small for a {w} µm 3-bar element"
        )));
    }
    let n = ((extent_um / texel_pitch_um).ceil() as usize) | 1;
    let mut scene = SceneImage::zeros(texel_pitch_um, n, n);
    let half_len = 2.5 * w;
    for r in 0..n {
        for c in 0..n {
            let (x, y) = scene.texel_center(r, c);
            if y.abs() > half_len {
                continue;
            }
            let xp = x - pattern.phase_um;
            // Bars centered at -2w, 0, +2w.
            let in_bar = (xp.abs() <= 0.5 * w)
                || ((xp.abs() - 2.0 * w).abs() <= 0.5 * w);
            if in_bar {
                scene.set(r, c, 1.0);
            }
        }
    }
    Ok(scene)
}

/// Pixel index containing the physical point `(x_um, y_um)` on the centered
/// sensor grid, or `None` when it falls off the array.
fn pixel_index(geom: &OpticalGeometry, x_um: f64, y_um: f64) -> Option<(usize, usize)> {
    let pp = geom.pixel_pitch_um;
    let col = ((x_um + 0.5 * geom.pixel_cols as f64 * pp) / pp).floor();
    let row = ((y_um + 0.5 * geom.pixel_rows as f64 * pp) / pp).floor();
    if col >= 0.0 && row >= 0.0 && (col as usize) < geom.pixel_cols && (row as usize) < geom.pixel_rows
    {
        Some((row as usize, col as usize))
    } else {
        None
    }
}

/// Line-scan contrast of a rendered 3-bar element: mean intensity sampled at
/// the bar centers against the mean at the gap centers, averaged along the
/// central section of the bars. Mirrors how contrast is read off a measured
/// line scan, so the slowly varying envelope of the blurred element does not
/// masquerade as bar modulation.
fn bar_gap_contrast(image: &SceneImage, geom: &OpticalGeometry, pattern: &UsafPattern) -> f64 {
    let w = pattern.line_width_um;
    let pp = geom.pixel_pitch_um;
    // Sample rows covering the middle of the bars (length 5w), at least one.
    let mut rows: Vec<usize> = Vec::new();
    for r in 0..geom.pixel_rows {
        let y = (r as f64 + 0.5) * pp - 0.5 * geom.pixel_rows as f64 * pp;
        if y.abs() <= (2.0 * w).max(0.5 * pp) {
            rows.push(r);
        }
    }
    let sample = |x_offsets: &[f64]| -> (f64, usize) {
        let mut acc = 0.0;
        let mut n = 0;
        for &xp in x_offsets {
            let x = xp + pattern.phase_um;
            for &r in &rows {
                let y = (r as f64 + 0.5) * pp - 0.5 * geom.pixel_rows as f64 * pp;
                if let Some((pr, pc)) = pixel_index(geom, x, y) {
                    acc += image.at(pr, pc);
                    n += 1;
                }
            }
        }
        (acc, n)
    };
    let (bar_sum, bar_n) = sample(&[-2.0 * w, 0.0, 2.0 * w]);
    let (gap_sum, gap_n) = sample(&[-w, w]);
    if bar_n == 0 || gap_n == 0 {
        return 0.0;
    }
    let bar = bar_sum / bar_n as f64;
    let gap = gap_sum / gap_n as f64;
    if bar + gap <= 0.0 {
        return 0.0;
    }
    ((bar - gap) / (bar + gap)).max(0.0)
}

/// Contrast transfer: render a 3-bar element at each line width through the
/// frontend and report the phase-averaged Michelson contrast of the central
/// line scan. Returns `(line_width_um, contrast)` pairs in input order.
pub fn ctf(
    frontend_t: &AngularResponse,
    geom: &OpticalGeometry,
    fop: Option<&FopDesign>,
    line_widths_um: &[f64],
    texel_pitch_um: f64,
    phases: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    geom.validate()?;
    if line_widths_um.is_empty() || phases == 0 {
        return Err(OpticsError::InvalidParameter(
            "need at least one line width and one phase".into(),
        ));
    }
    if line_widths_um.iter().any(|w| *w <= 0.0) {
        return Err(OpticsError::InvalidParameter(
            "line widths must be positive".into(),
        ));
    }
    let eval = |&w: &f64| -> Result<(f64, f64)> {
        let extent = (5.0 * w + 4.0 * geom.pixel_pitch_um)
            .min(geom.pixel_cols.max(geom.pixel_rows) as f64 * geom.pixel_pitch_um)
            .max(5.0 * w);
        let mut acc = 0.0;
        for k in 0..phases {
            // Sweep one full bar period so pixel-sampling phase averages out.
            let phase = (k as f64 / phases as f64) * 2.0 * w;
            let pattern = UsafPattern {
                line_width_um: w,
                phase_um: phase,
            };
            let scene = usaf_scene(&pattern, texel_pitch_um, extent)?;
            let image = render(&scene, frontend_t, geom, fop, None, seed)?;
            acc += bar_gap_contrast(&image, geom, &pattern);
        }
        Ok((w, acc / phases as f64))
    };

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<(f64, f64)>> = {
        use rayon::prelude::*;
        line_widths_um.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<(f64, f64)>> = line_widths_um.iter().map(eval).collect();

    rows
}

/// Outcome of thresholding a contrast-transfer curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CtfResolution {
    /// Contrast is still above the level at the two-pixel Nyquist width.
    PixelLimited { nyquist_um: f64 },
    /// Smallest line width whose contrast reaches the level.
    Resolved { width_um: f64 },
    /// No tested width reaches the level.
    Unresolved,
}

/// Smallest resolvable line width at the given contrast level, interpolated
/// on the measured curve. `points` are `(line_width_um, contrast)` pairs.
pub fn resolution_at(
    points: &[(f64, f64)],
    level: f64,
    nyquist_um: f64,
) -> Result<CtfResolution> {
    if points.len() < 2 {
        return Err(OpticsError::InvalidParameter(
            "need at least two contrast points".into(),
        ));
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(OpticsError::InvalidParameter(format!(
            "contrast level {level} must lie in (0, 1)"
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let contrast_at = |w: f64| -> f64 {
        if w <= pts[0].0 {
            return pts[0].1;
        }
        if w >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        for win in pts.windows(2) {
            if w >= win[0].0 && w <= win[1].0 {
                let f = (w - win[0].0) / (win[1].0 - win[0].0);
                return win[0].1 + f * (win[1].1 - win[0].1);
            }
        }
        unreachable!()
    };

    if contrast_at(nyquist_um) >= level {
        return Ok(CtfResolution::PixelLimited { nyquist_um });
    }
    for i in 0..pts.len() {
        if pts[i].1 >= level {
            if i == 0 {
                return Ok(CtfResolution::Resolved { width_um: pts[0].0 });
            }
            let (w0, c0) = pts[i - 1];
            let (w1, c1) = pts[i];
            let f = (level - c0) / (c1 - c0);
            return Ok(CtfResolution::Resolved {
                width_um: w0 + f * (w1 - w0),
            });
        }
    }
    Ok(CtfResolution::Unresolved)
}

/// Linear fraction of the pixel pitch occupied by the active photodiode
/// aperture. Responsivity modulation is felt by the active area, not the
/// full pixel cell.
pub const PIXEL_APERTURE_FRACTION: f64 = 0.7;

/// Relative pixel-to-pixel responsivity spread caused by the fiber lattice
/// beating against the pixel grid, as a function of the pixel/fiber pitch
/// ratio. For each ratio the open-core fraction seen by every pixel's
/// active aperture in a 12×12 patch is computed and its relative standard
/// deviation averaged over random lattice alignments — both translation
/// and in-plane rotation, since a real plate sits at an arbitrary
/// orientation on the sensor. Returns `(ratio, relative_std)` pairs.
pub fn pixel_fiber_modulation(
    fop: &FopDesign,
    pitch_ratios: &[f64],
    offsets: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if pitch_ratios.is_empty() || offsets == 0 {
        return Err(OpticsError::InvalidParameter(
            "need at least one pitch ratio and one offset".into(),
        ));
    }
    if pitch_ratios.iter().any(|r| *r < 0.5) {
        return Err(OpticsError::InvalidParameter(
            "pitch ratios below 0.5 are not meaningful".into(),
        ));
    }
    let p = fop.pitch_um;
    let d = fop.core_diameter_um;
    let grid = 12usize;
    let sub = 64usize;
    let mut out = Vec::with_capacity(pitch_ratios.len());
    for (ri, &ratio) in pitch_ratios.iter().enumerate() {
        let pixel = ratio * p;
        let mut acc = 0.0;
        for o in 0..offsets {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, ri as u64, o as u64));
            let ox: f64 = rng.gen::<f64>() * p;
            let oy: f64 = rng.gen::<f64>() * p * 3f64.sqrt();
            // Hex lattice symmetry makes [0°, 60°) the full orientation range.
            let phi: f64 = rng.gen::<f64>() * 60f64.to_radians();
            let (sin_phi, cos_phi) = phi.sin_cos();
            let mut occupancy = Vec::with_capacity(grid * grid);
            for gr in 0..grid {
                for gc in 0..grid {
                    let mut hit = 0usize;
                    for i in 0..sub {
                        for j in 0..sub {
                            let fx = 0.5 + ((j as f64 + 0.5) / sub as f64 - 0.5) * PIXEL_APERTURE_FRACTION;
                            let fy = 0.5 + ((i as f64 + 0.5) / sub as f64 - 0.5) * PIXEL_APERTURE_FRACTION;
                            let px = (gc as f64 + fx) * pixel;
                            let py = (gr as f64 + fy) * pixel;
                            let x = ox + px * cos_phi - py * sin_phi;
                            let y = oy + px * sin_phi + py * cos_phi;
                            if hex::in_core(x, y, d, p) {
                                hit += 1;
                            }
                        }
                    }
                    occupancy.push(hit as f64 / (sub * sub) as f64);
                }
            }
            let n = occupancy.len() as f64;
            let mean: f64 = occupancy.iter().sum::<f64>() / n;
            let var: f64 = occupancy.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if mean > 0.0 {
                acc += var.sqrt() / mean;
            }
        }
        out.push((ratio, acc / offsets as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn usaf_scene_duty_cycle() {
        // Three bars of width w over a 5w-wide, 5w-tall element: bright area
        // is 3·w·5w = 15w² out of the extent².
        let pattern = UsafPattern {
            line_width_um: 100.0,
            phase_um: 0.0,
        };
        let scene = usaf_scene(&pattern, 2.0, 700.0).unwrap();
        let bright = scene.data().iter().filter(|v| **v > 0.0).count() as f64;
        let area = bright * scene.pitch_um * scene.pitch_um;
        // Inclusive texel edges overcount by about half a texel per border.
        assert_relative_eq!(area, 15.0 * 100.0 * 100.0, max_relative = 0.04);
    }

    #[test]
    fn usaf_scene_rejects_tiny_extent() {
        let pattern = UsafPattern {
            line_width_um: 100.0,
            phase_um: 0.0,
        };
        assert!(usaf_scene(&pattern, 2.0, 400.0).is_err());
    }

    #[test]
    fn narrow_cone_resolves_finer_than_wide_cone() {
        let geom = OpticalGeometry {
            working_distance_um: 500.0,
            medium_index: 1.0,
            pixel_pitch_um: 55.0,
            pixel_rows: 36,
            pixel_cols: 40,
            offset_um: (0.0, 0.0),
        };
        let narrow = AngularResponse::rectangular(4.15, 2048).unwrap();
        let wide = AngularResponse::rectangular(22.85, 2048).unwrap();
        let widths = [110.0, 165.0, 220.0, 330.0, 440.0];
        let a = ctf(&narrow, &geom, None, &widths, 13.75, 4, 1).unwrap();
        let b = ctf(&wide, &geom, None, &widths, 13.75, 4, 1).unwrap();
        for ((_, ca), (_, cb)) in a.iter().zip(&b) {
            assert!(
                ca >= cb,
                "narrow cone should transfer at least as much contrast"
            );
        }
        // The wide cone blurs the finest bars well below the coarsest.
        assert!(b[0].1 < b[4].1);
    }

    #[test]
    fn contrast_grows_with_line_width() {
        let geom = OpticalGeometry {
            working_distance_um: 500.0,
            medium_index: 1.0,
            pixel_pitch_um: 55.0,
            pixel_rows: 36,
            pixel_cols: 40,
            offset_um: (0.0, 0.0),
        };
        let t = AngularResponse::rectangular(22.85, 2048).unwrap();
        let widths = [110.0, 220.0, 440.0];
        let rows = ctf(&t, &geom, None, &widths, 13.75, 4, 1).unwrap();
        assert!(rows[0].1 <= rows[1].1 + 0.02);
        assert!(rows[1].1 <= rows[2].1 + 0.02);
    }

    #[test]
    fn resolution_threshold_variants() {
        let points = vec![(110.0, 0.1), (220.0, 0.3), (330.0, 0.5), (440.0, 0.7)];
        match resolution_at(&points, 0.4, 110.0).unwrap() {
            CtfResolution::Resolved { width_um } => {
                assert_relative_eq!(width_um, 275.0, epsilon = 1e-9)
            }
            other => panic!("expected Resolved, got {other:?}"),
        }
        let points = vec![(110.0, 0.6), (220.0, 0.8)];
        assert_eq!(
            resolution_at(&points, 0.4, 110.0).unwrap(),
            CtfResolution::PixelLimited { nyquist_um: 110.0 }
        );
        let points = vec![(110.0, 0.05), (220.0, 0.1)];
        assert_eq!(
            resolution_at(&points, 0.4, 110.0).unwrap(),
            CtfResolution::Unresolved
        );
    }

    #[test]
    fn lattice_beating_fades_with_coarser_pixels() {
        let fop = crate::presets::default_fop();
        let rows = pixel_fiber_modulation(&fop, &[1.0, 2.0, 4.0], 48, 11).unwrap();
        assert!(rows[1].1 < 0.5 * rows[0].1, "rows: {rows:?}");
        assert!(rows[2].1 < rows[1].1);
    }

    #[test]
    fn lattice_modulation_is_deterministic() {
        let fop = crate::presets::default_fop();
        let a = pixel_fiber_modulation(&fop, &[1.5], 16, 3).unwrap();
        let b = pixel_fiber_modulation(&fop, &[1.5], 16, 3).unwrap();
        assert_eq!(a, b);
    }
}
