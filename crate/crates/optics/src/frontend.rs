//! Composition of an interference filter and a FOP into a full frontend.
//!
//! Three stack orders are supported: filter before the plate, filter after
//! the plate, and coatings on both faces. Scattering inside the plate is
//! lumped into two scalar channels: `s_capture` routes light that should
//! have died in the cladding into guided modes exiting near the axis, and
//! `s_exit` spills a fraction of the guided light into a Lambertian lobe at
//! the exit face. Both are calibrated against the measured rejection floors
//! of the three configurations.

use crate::error::{OpticsError, Result};
use crate::filter::FilterSpec;
use crate::fop::FopDesign;
use crate::response::{AngularResponse, ResponseMeta};

/// Captured-scatter light exits clustered near the axis; its filter pass is
/// evaluated at this angle.
pub const NEAR_NORMAL_DEG: f64 = 5.0;

/// Default scatter fractions, calibrated to the measured single-sided
/// rejection floors (filter-first ≈ OD 5 oblique, filter-last ≈ OD 3.7 at
/// normal incidence).
pub const S_CAPTURE_DEFAULT: f64 = 1.0e-5;
pub const S_EXIT_DEFAULT: f64 = 5.0e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackOrder {
    FilterFirst,
    FilterLast,
    DualSided,
}

impl StackOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            StackOrder::FilterFirst => "filter-first",
            StackOrder::FilterLast => "filter-last",
            StackOrder::DualSided => "dual-sided",
        }
    }
}

impl std::str::FromStr for StackOrder {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filter-first" | "first" => Ok(StackOrder::FilterFirst),
            "filter-last" | "last" => Ok(StackOrder::FilterLast),
            "dual-sided" | "dual" => Ok(StackOrder::DualSided),
            other => Err(OpticsError::InvalidParameter(format!(
                "unknown stack order '{other}' (expected filter-first, filter-last or dual-sided)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontendConfig {
    pub order: StackOrder,
    pub fop: FopDesign,
    pub filter: FilterSpec,
    pub s_capture: f64,
    pub s_exit: f64,
    /// Extra passband insertion loss of the second coating in the
    /// dual-sided stack. 1.0 models ideal coatings; the measured loss is 2%.
    pub dual_insertion: f64,
}

impl FrontendConfig {
    pub fn new(order: StackOrder, fop: FopDesign, filter: FilterSpec) -> Self {
        Self {
            order,
            fop,
            filter,
            s_capture: S_CAPTURE_DEFAULT,
            s_exit: S_EXIT_DEFAULT,
            dual_insertion: 1.0,
        }
    }

    pub fn with_scatter(mut self, s_capture: f64, s_exit: f64) -> Result<Self> {
        for (name, v) in [("s_capture", s_capture), ("s_exit", s_exit)] {
            if !(0.0..=0.1).contains(&v) {
                return Err(OpticsError::InvalidParameter(format!(
                    "{name} = {v} outside the lumped-scatter range [0, 0.1]"
                )));
            }
        }
        self.s_capture = s_capture;
        self.s_exit = s_exit;
        Ok(self)
    }

    pub fn with_order(mut self, order: StackOrder) -> Self {
        self.order = order;
        self
    }
}

/// Cosine-weighted average of the filter transmittance over the exit
/// hemisphere; the filter seen by the diffuse exit-scatter lobe.
pub fn lambertian_filter_average(filter: &FilterSpec, lambda_nm: f64) -> Result<f64> {
    let step = 0.25f64;
    let n = (90.0 / step) as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let theta = (i as f64 + 0.5) * step;
        let rad = theta.to_radians();
        let w = rad.cos() * rad.sin();
        num += filter.transmittance(lambda_nm, theta)? * w;
        den += w;
    }
    Ok(num / den)
}

/// System transmittance of one frontend at (λ, θ) given the plate's bare
/// angular response `fop_t`.
pub fn frontend_transmittance(
    config: &FrontendConfig,
    lambda_nm: f64,
    theta_deg: f64,
    fop_t: &AngularResponse,
) -> Result<f64> {
    let paths = ScatterPaths::prepare(config, lambda_nm)?;
    compose(config, lambda_nm, theta_deg, fop_t, &paths)
}

/// Filter factors that do not depend on θ, precomputed once per sweep.
struct ScatterPaths {
    diffuse_avg: f64,
    near_normal: f64,
}

impl ScatterPaths {
    fn prepare(config: &FrontendConfig, lambda_nm: f64) -> Result<Self> {
        Ok(Self {
            diffuse_avg: lambertian_filter_average(&config.filter, lambda_nm)?,
            near_normal: config.filter.transmittance(lambda_nm, NEAR_NORMAL_DEG)?,
        })
    }
}

fn compose(
    config: &FrontendConfig,
    lambda_nm: f64,
    theta_deg: f64,
    fop_t: &AngularResponse,
    paths: &ScatterPaths,
) -> Result<f64> {
    let direct = fop_t.interpolate(theta_deg)?;
    let d_max = fop_t.max_transmittance();
    let captured = if d_max > 0.0 {
        config.s_capture * (1.0 - direct / d_max)
    } else {
        0.0
    };
    let tf = config.filter.transmittance(lambda_nm, theta_deg)?;
    let exit_mix = (1.0 - config.s_exit) * tf + config.s_exit * paths.diffuse_avg;
    let t = match config.order {
        StackOrder::FilterFirst => tf * (direct + captured),
        StackOrder::FilterLast => direct * exit_mix + captured * paths.near_normal,
        StackOrder::DualSided => {
            config.dual_insertion * tf * (direct * exit_mix + captured * paths.near_normal)
        }
    };
    Ok(t.clamp(0.0, 1.0))
}

/// Frontend transmittance mapped over a θ grid.
pub fn sweep_frontend(
    config: &FrontendConfig,
    lambda_nm: f64,
    theta_grid: &[f64],
    fop_t: &AngularResponse,
) -> Result<AngularResponse> {
    let paths = ScatterPaths::prepare(config, lambda_nm)?;
    let mut values = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        values.push(compose(config, lambda_nm, theta, fop_t, &paths)?);
    }
    AngularResponse::new(
        theta_grid.to_vec(),
        values,
        ResponseMeta {
            wavelength_nm: lambda_nm,
            samples_per_angle: fop_t.meta.samples_per_angle,
            seed: fop_t.meta.seed,
        },
    )
}

/// Emission-band system transmittance at normal incidence: the passband
/// insertion of the coating(s) applied to the plate's 0° transmittance.
pub fn min_passband_insertion(config: &FrontendConfig, fop_t0: f64) -> f64 {
    let tp = config.filter.pass_transmittance();
    match config.order {
        StackOrder::FilterFirst | StackOrder::FilterLast => tp * fop_t0,
        StackOrder::DualSided => tp * tp * config.dual_insertion * fop_t0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter;
    use crate::presets;
    use crate::response::ResponseMeta;
    use approx::assert_relative_eq;

    fn synthetic_fop_t() -> AngularResponse {
        // Plateau to 10°, then a steep exponential floor.
        let theta: Vec<f64> = (0..=90).map(|i| i as f64).collect();
        let t: Vec<f64> = theta
            .iter()
            .map(|&th| {
                if th <= 10.0 {
                    0.45
                } else {
                    (0.45 * (-(th - 10.0) / 2.0).exp()).max(1e-10)
                }
            })
            .collect();
        AngularResponse::new(theta, t, ResponseMeta::default()).unwrap()
    }

    fn cfg(order: StackOrder) -> FrontendConfig {
        FrontendConfig::new(order, presets::low_na_fop(), presets::paper_filter())
    }

    #[test]
    fn scatter_free_orders_coincide() {
        let fop_t = synthetic_fop_t();
        for theta in [0.0, 15.0, 40.0, 70.0] {
            let first = frontend_transmittance(
                &cfg(StackOrder::FilterFirst).with_scatter(0.0, 0.0).unwrap(),
                660.0,
                theta,
                &fop_t,
            )
            .unwrap();
            let last = frontend_transmittance(
                &cfg(StackOrder::FilterLast).with_scatter(0.0, 0.0).unwrap(),
                660.0,
                theta,
                &fop_t,
            )
            .unwrap();
            let dual = frontend_transmittance(
                &cfg(StackOrder::DualSided).with_scatter(0.0, 0.0).unwrap(),
                660.0,
                theta,
                &fop_t,
            )
            .unwrap();
            let tf = presets::paper_filter().transmittance(660.0, theta).unwrap();
            let d = fop_t.interpolate(theta).unwrap();
            assert_relative_eq!(first, tf * d, max_relative = 1e-12);
            assert_relative_eq!(last, tf * d, max_relative = 1e-12);
            assert_relative_eq!(dual, tf * tf * d, max_relative = 1e-12);
        }
    }

    #[test]
    fn dual_sided_is_pointwise_minimum() {
        let fop_t = synthetic_fop_t();
        let grid: Vec<f64> = (0..=90).map(|i| i as f64).collect();
        let first = sweep_frontend(&cfg(StackOrder::FilterFirst), 660.0, &grid, &fop_t).unwrap();
        let last = sweep_frontend(&cfg(StackOrder::FilterLast), 660.0, &grid, &fop_t).unwrap();
        let dual = sweep_frontend(&cfg(StackOrder::DualSided), 660.0, &grid, &fop_t).unwrap();
        for i in 0..grid.len() {
            assert!(dual.transmittance()[i] <= first.transmittance()[i] + 1e-15);
            assert!(dual.transmittance()[i] <= last.transmittance()[i] + 1e-15);
        }
    }

    #[test]
    fn emission_passthrough_band() {
        let fop_t = synthetic_fop_t();
        let t0 = fop_t.interpolate(0.0).unwrap();
        let tp = 0.95;
        for order in [StackOrder::FilterFirst, StackOrder::FilterLast, StackOrder::DualSided] {
            let t = frontend_transmittance(&cfg(order), 700.0, 0.0, &fop_t).unwrap();
            assert!(t <= t0 * tp + 1e-9, "order {order:?}: {t}");
            // Exit scatter diverts a sliver of the dual-sided passband onto
            // the weaker Lambertian-averaged filter path.
            assert!(t >= t0 * tp * tp * 0.995, "order {order:?}: {t}");
        }
    }

    #[test]
    fn scatter_monotonicity() {
        let fop_t = synthetic_fop_t();
        // s_exit raises the filter-last normal-incidence excitation floor...
        let lo = frontend_transmittance(
            &cfg(StackOrder::FilterLast).with_scatter(0.0, 1e-4).unwrap(),
            660.0,
            0.0,
            &fop_t,
        )
        .unwrap();
        let hi = frontend_transmittance(
            &cfg(StackOrder::FilterLast).with_scatter(0.0, 1e-3).unwrap(),
            660.0,
            0.0,
            &fop_t,
        )
        .unwrap();
        assert!(hi > lo);
        // ...and leaves filter-first unchanged.
        let a = frontend_transmittance(
            &cfg(StackOrder::FilterFirst).with_scatter(1e-5, 1e-4).unwrap(),
            660.0,
            0.0,
            &fop_t,
        )
        .unwrap();
        let b = frontend_transmittance(
            &cfg(StackOrder::FilterFirst).with_scatter(1e-5, 1e-3).unwrap(),
            660.0,
            0.0,
            &fop_t,
        )
        .unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        // s_capture raises the filter-first oblique floor.
        let c = frontend_transmittance(
            &cfg(StackOrder::FilterFirst).with_scatter(1e-6, 0.0).unwrap(),
            660.0,
            45.0,
            &fop_t,
        )
        .unwrap();
        let d = frontend_transmittance(
            &cfg(StackOrder::FilterFirst).with_scatter(1e-4, 0.0).unwrap(),
            660.0,
            45.0,
            &fop_t,
        )
        .unwrap();
        assert!(d > c);
    }

    #[test]
    fn calibrated_floors() {
        let fop_t = synthetic_fop_t();
        // Filter-last excitation floor at 0° sits in the OD 3.7-4.5 decade
        // with the calibrated exit-scatter fraction.
        let last = frontend_transmittance(&cfg(StackOrder::FilterLast), 660.0, 0.0, &fop_t).unwrap();
        let od_last = filter::od_of(last);
        assert!((3.0..=4.5).contains(&od_last), "filter-last floor OD {od_last}");
        // Filter-first oblique floor near OD 5; dual-sided well below both.
        let first = frontend_transmittance(&cfg(StackOrder::FilterFirst), 660.0, 45.0, &fop_t).unwrap();
        let od_first = filter::od_of(first);
        assert!((4.3..=5.7).contains(&od_first), "filter-first floor OD {od_first}");
        let dual0 = frontend_transmittance(&cfg(StackOrder::DualSided), 660.0, 0.0, &fop_t).unwrap();
        assert!(filter::od_of(dual0) >= 6.0);
    }

    #[test]
    fn passband_insertion() {
        let config = cfg(StackOrder::FilterFirst);
        assert_relative_eq!(min_passband_insertion(&config, 0.27), 0.2565, epsilon = 1e-9);
        let dual = cfg(StackOrder::DualSided);
        let single = min_passband_insertion(&config, 0.27);
        let double = min_passband_insertion(&dual, 0.27);
        // Per-coating insertion ratio equals the pass transmittance itself.
        assert_relative_eq!(double / single, 0.95, epsilon = 1e-9);
        // With a 0.98 pass transmittance the measured 2% loss is reproduced.
        let f98 = crate::filter::FilterSpec::new(
            vec![(505.0, 612.0), (677.0, 763.0), (807.0, 1000.0)],
            0.98,
            6.0,
            17.0,
            1.826,
        )
        .unwrap();
        let c98 = FrontendConfig::new(StackOrder::FilterFirst, presets::low_na_fop(), f98.clone());
        let d98 = FrontendConfig::new(StackOrder::DualSided, presets::low_na_fop(), f98);
        let ratio = min_passband_insertion(&d98, 0.27) / min_passband_insertion(&c98, 0.27);
        assert_relative_eq!(ratio, 0.98, epsilon = 1e-9);
        // Unit pass transmittance passes T(0) through unchanged.
        let f1 = crate::filter::FilterSpec::new(vec![(505.0, 612.0)], 1.0, 6.0, 17.0, 1.826).unwrap();
        let c1 = FrontendConfig::new(StackOrder::FilterFirst, presets::low_na_fop(), f1);
        assert_relative_eq!(min_passband_insertion(&c1, 0.27), 0.27);
    }
}
