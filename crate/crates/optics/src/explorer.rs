//! Design-space exploration: fluorophore excitation, minimum plate
//! thickness for a blocking target, and the NA × fill-factor sweep.

use crate::error::{OpticsError, Result};
use crate::filter::{od_of, FilterSpec};
use crate::fop::{angular_transmittance, FopDesign};
use crate::frontend::{frontend_transmittance, min_passband_insertion, FrontendConfig, StackOrder};
use crate::imaging::{collection_efficiency, fwhm_deg, psf_angular};
use crate::response::AngularResponse;

/// Relative excitation spectrum of a fluorophore, normalized to a unit
/// peak. Points are `(wavelength_nm, relative_excitation)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluorophoreSpec {
    pub name: String,
    points: Vec<(f64, f64)>,
}

impl FluorophoreSpec {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(OpticsError::InvalidParameter(
                "excitation spectrum needs at least two points".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(OpticsError::InvalidParameter(
                "excitation wavelengths must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|(_, e)| !(0.0..=1.0).contains(e)) {
            return Err(OpticsError::InvalidParameter(
                "relative excitation must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            points,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// IRDye 680LT red-edge excitation profile; peak at 677 nm, 65% at 660 nm
/// and 33% at 635 nm.
pub fn irdye_680lt() -> FluorophoreSpec {
    FluorophoreSpec::new(
        "IRDye 680LT",
        vec![
            (600.0, 0.13),
            (620.0, 0.22),
            (635.0, 0.33),
            (650.0, 0.50),
            (660.0, 0.65),
            (670.0, 0.88),
            (677.0, 1.00),
            (685.0, 0.92),
            (694.0, 0.60),
            (700.0, 0.35),
            (710.0, 0.12),
            (720.0, 0.04),
        ],
    )
    .expect("built-in spectrum is valid")
}

/// Relative excitation at a laser line, linearly interpolated; zero
/// outside the tabulated range.
pub fn excitation_efficiency(fluor: &FluorophoreSpec, wavelength_nm: f64) -> f64 {
    let pts = &fluor.points;
    if wavelength_nm < pts[0].0 || wavelength_nm > pts[pts.len() - 1].0 {
        return 0.0;
    }
    for w in pts.windows(2) {
        if wavelength_nm >= w[0].0 && wavelength_nm <= w[1].0 {
            let f = (wavelength_nm - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + f * (w[1].1 - w[0].1);
        }
    }
    0.0
}

/// Worst-case (minimum) blocking of the frontend at `lambda_nm` over
/// incidence angles up to `theta_max_deg`, in OD.
pub fn worst_case_od(
    config: &FrontendConfig,
    lambda_nm: f64,
    theta_max_deg: f64,
    theta_step_deg: f64,
    samples_per_angle: usize,
    seed: u64,
) -> Result<f64> {
    if !(theta_max_deg > 0.0 && theta_max_deg < 90.0) || theta_step_deg <= 0.0 {
        return Err(OpticsError::InvalidParameter(
            "angle range must satisfy 0 < θmax < 90 with a positive step".into(),
        ));
    }
    let steps = (theta_max_deg / theta_step_deg).ceil() as usize;
    let mut grid: Vec<f64> = (0..steps)
        .map(|i| i as f64 * theta_step_deg)
        .filter(|t| *t < theta_max_deg - 1e-9)
        .collect();
    grid.push(theta_max_deg);
    let fop_t = angular_transmittance(&config.fop, &grid, samples_per_angle, seed)?;
    let mut min_od = f64::INFINITY;
    for &theta in &grid {
        let t = frontend_transmittance(config, lambda_nm, theta, &fop_t)?;
        min_od = min_od.min(od_of(t));
    }
    Ok(min_od)
}

/// Certificate attached to a thinning result: blocking at the returned
/// thickness and at 2 µm below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinThickness {
    pub thickness_um: f64,
    pub od_at_thickness: f64,
    pub od_below: f64,
}

/// Thinnest plate for which the frontend holds `target_od` of laser
/// blocking at every incidence angle up to `theta_max_deg`.
///
/// Blocking grows monotonically with thickness only when the lumped
/// scatter paths are off, so configurations with nonzero scatter are
/// rejected unless `allow_scatter` acknowledges that the bisection is then
/// heuristic. Returns `Infeasible` when even `h_max_um` falls short.
#[allow(clippy::too_many_arguments)]
pub fn min_thickness(
    config: &FrontendConfig,
    lambda_nm: f64,
    target_od: f64,
    theta_max_deg: f64,
    samples_per_angle: usize,
    seed: u64,
    h_max_um: f64,
    allow_scatter: bool,
) -> Result<MinThickness> {
    if target_od <= 0.0 || h_max_um <= 1.0 {
        return Err(OpticsError::InvalidParameter(
            "target OD and maximum thickness must be positive".into(),
        ));
    }
    if !allow_scatter && (config.s_capture > 0.0 || config.s_exit > 0.0) {
        return Err(OpticsError::InvalidParameter(
            "min_thickness requires a scatter-free stack (or allow_scatter)".into(),
        ));
    }
    let theta_step = (theta_max_deg / 10.0).min(2.0);
    let od_at = |h: f64| -> Result<f64> {
        let mut cfg = config.clone();
        cfg.fop = config.fop.with_thickness(h)?;
        worst_case_od(&cfg, lambda_nm, theta_max_deg, theta_step, samples_per_angle, seed)
    };

    let od_max = od_at(h_max_um)?;
    if od_max < target_od {
        return Err(OpticsError::Infeasible(format!(
            "target OD {target_od} not reached even at {h_max_um} µm (OD {od_max:.2})"
        )));
    }
    let mut lo = 1.0;
    let mut hi = h_max_um;
    if od_at(lo)? >= target_od {
        hi = lo;
    }
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        if od_at(mid)? >= target_od {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let od_here = od_at(hi)?;
    let od_below = if hi > 3.0 { od_at(hi - 2.0)? } else { od_here };
    Ok(MinThickness {
        thickness_um: hi,
        od_at_thickness: od_here,
        od_below,
    })
}

/// One evaluated candidate of the NA × fill-factor sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReportRow {
    pub na: f64,
    pub fill_factor: f64,
    pub core_diameter_um: f64,
    pub pitch_um: f64,
    pub n_clad: f64,
    pub acceptance_angle_deg: f64,
    pub fwhm_deg: f64,
    pub collection_efficiency: f64,
    pub normal_transmittance: f64,
    pub passband_insertion: f64,
    pub excitation_efficiency: f64,
    pub figure_of_merit: f64,
}

/// Candidate axes for `design_sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub nas: Vec<f64>,
    pub fill_factors: Vec<f64>,
}

/// Photometric figure of merit: emission collection × excitation
/// efficiency × passband insertion.
pub fn system_figure_of_merit(ce: f64, exc_eff: f64, insertion: f64) -> f64 {
    ce * exc_eff * insertion
}

/// Margin (in OD) of the worst-case laser blocking over a target.
pub fn laser_margin(worst_case_od: f64, target_od: f64) -> f64 {
    worst_case_od - target_od
}

/// Evaluate every (NA, fill factor) pair on the grid. Each candidate keeps
/// the base plate's pitch, thickness, core index and absorption; the
/// cladding index realizes the NA and the core diameter realizes the fill
/// factor. Rows come back in grid order (fill factor fastest) regardless
/// of scheduling.
#[allow(clippy::too_many_arguments)]
pub fn design_sweep(
    grid: &SweepGrid,
    base: &FopDesign,
    filter: &FilterSpec,
    order: StackOrder,
    emission_nm: f64,
    excitation_nm: f64,
    fluor: &FluorophoreSpec,
    samples_per_angle: usize,
    seed: u64,
) -> Result<Vec<DesignReportRow>> {
    if grid.nas.is_empty() || grid.fill_factors.is_empty() {
        return Err(OpticsError::InvalidParameter(
            "sweep grid must be non-empty".into(),
        ));
    }
    let mut candidates = Vec::new();
    for &na in &grid.nas {
        for &ff in &grid.fill_factors {
            candidates.push((na, ff));
        }
    }
    let theta_grid = AngularResponse::uniform_grid(90.0, 1.0);
    let exc = excitation_efficiency(fluor, excitation_nm);

    let eval = |&(na, ff): &(f64, f64)| -> Result<DesignReportRow> {
        let sin_a = na * base.n_incident;
        if !(0.0 < sin_a && sin_a < 1.0) || sin_a >= base.n_core {
            return Err(OpticsError::InvalidDesign(format!(
                "NA {na} not realizable with core index {}",
                base.n_core
            )));
        }
        let n_clad = (base.n_core * base.n_core - sin_a * sin_a).sqrt();
        if !(0.0..=1.0).contains(&ff) || ff <= 0.0 {
            return Err(OpticsError::InvalidDesign(format!(
                "fill factor {ff} outside (0, 1]"
            )));
        }
        let d = base.pitch_um * (ff / crate::fop::HEX_PACKING_DENSITY).sqrt();
        if d > base.pitch_um {
            return Err(OpticsError::InvalidDesign(format!(
                "fill factor {ff} needs cores wider than the {} µm pitch",
                base.pitch_um
            )));
        }
        let design = FopDesign::new(
            base.n_core,
            n_clad,
            base.n_incident,
            d,
            base.pitch_um,
            base.thickness_um,
            base.k_clad,
            base.k_core,
        )?;
        let config = FrontendConfig::new(order, design.clone(), filter.clone());
        let fop_t = angular_transmittance(&design, &theta_grid, samples_per_angle, seed)?;
        let emission = crate::frontend::sweep_frontend(&config, emission_nm, &theta_grid, &fop_t)?;
        let ce = collection_efficiency(&emission)?;
        let t0 = emission.interpolate(0.0)?;
        let width = fwhm_deg(&psf_angular(&emission)?)?;
        let insertion = min_passband_insertion(&config, fop_t.interpolate(0.0)?);
        Ok(DesignReportRow {
            na,
            fill_factor: ff,
            core_diameter_um: d,
            pitch_um: base.pitch_um,
            n_clad,
            acceptance_angle_deg: design.acceptance_angle_deg(),
            fwhm_deg: width,
            collection_efficiency: ce,
            normal_transmittance: t0,
            passband_insertion: insertion,
            excitation_efficiency: exc,
            figure_of_merit: system_figure_of_merit(ce, exc, insertion),
        })
    };

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<DesignReportRow>> = {
        use rayon::prelude::*;
        candidates.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<DesignReportRow>> = candidates.iter().map(eval).collect();

    rows
}
