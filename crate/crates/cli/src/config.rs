//! Run configuration: a sectioned key-value file with strict unknown-key
//! rejection. Every section mirrors a library type and is re-validated on
//! load so a bad file fails before any simulation starts.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use fop_optics::filter::FilterSpec;
use fop_optics::fop::FopDesign;
use fop_optics::frontend::{FrontendConfig, StackOrder};
use fop_optics::imaging::OpticalGeometry;
use fop_optics::presets;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub fop: FopSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub frontend: FrontendSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FopSection {
    pub n_core: f64,
    pub n_clad: f64,
    pub n_incident: f64,
    pub core_diameter_um: f64,
    pub pitch_um: f64,
    pub thickness_um: f64,
    pub k_clad: f64,
    pub k_core: f64,
}

impl Default for FopSection {
    fn default() -> Self {
        let d = presets::default_fop();
        Self {
            n_core: d.n_core,
            n_clad: d.n_clad,
            n_incident: d.n_incident,
            core_diameter_um: d.core_diameter_um,
            pitch_um: d.pitch_um,
            thickness_um: d.thickness_um,
            k_clad: d.k_clad,
            k_core: d.k_core,
        }
    }
}

impl FopSection {
    pub fn build(&self) -> fop_optics::Result<FopDesign> {
        FopDesign::new(
            self.n_core,
            self.n_clad,
            self.n_incident,
            self.core_diameter_um,
            self.pitch_um,
            self.thickness_um,
            self.k_clad,
            self.k_core,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub passbands: Vec<(f64, f64)>,
    pub pass_transmittance: f64,
    pub stop_od: f64,
    pub rolloff_width_nm: f64,
    pub n_eff: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = presets::paper_filter();
        Self {
            passbands: f.passbands().to_vec(),
            pass_transmittance: f.pass_transmittance(),
            stop_od: f.stop_od(),
            rolloff_width_nm: f.rolloff_width_nm(),
            n_eff: f.n_eff(),
        }
    }
}

impl FilterSection {
    pub fn build(&self) -> fop_optics::Result<FilterSpec> {
        FilterSpec::new(
            self.passbands.clone(),
            self.pass_transmittance,
            self.stop_od,
            self.rolloff_width_nm,
            self.n_eff,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontendSection {
    pub order: String,
    pub s_capture: f64,
    pub s_exit: f64,
    pub dual_insertion: f64,
}

impl Default for FrontendSection {
    fn default() -> Self {
        Self {
            order: "filter-last".into(),
            s_capture: fop_optics::frontend::S_CAPTURE_DEFAULT,
            s_exit: fop_optics::frontend::S_EXIT_DEFAULT,
            dual_insertion: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub working_distance_um: f64,
    pub medium_index: f64,
    pub pixel_pitch_um: f64,
    pub pixel_rows: usize,
    pub pixel_cols: usize,
    pub offset_x_um: f64,
    pub offset_y_um: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            working_distance_um: 150.0,
            medium_index: 1.5,
            pixel_pitch_um: 55.0,
            pixel_rows: 36,
            pixel_cols: 40,
            offset_x_um: 0.0,
            offset_y_um: 0.0,
        }
    }
}

impl GeometrySection {
    pub fn build(&self) -> fop_optics::Result<OpticalGeometry> {
        let geom = OpticalGeometry {
            working_distance_um: self.working_distance_um,
            medium_index: self.medium_index,
            pixel_pitch_um: self.pixel_pitch_um,
            pixel_rows: self.pixel_rows,
            pixel_cols: self.pixel_cols,
            offset_um: (self.offset_x_um, self.offset_y_um),
        };
        geom.validate()?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub nas: Vec<f64>,
    pub fill_factors: Vec<f64>,
    pub emission_nm: f64,
    pub excitation_nm: f64,
    pub samples_per_angle: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            nas: vec![0.05, 0.1, 0.2, 0.3, 0.4],
            fill_factors: vec![0.5],
            emission_nm: 700.0,
            excitation_nm: 660.0,
            samples_per_angle: 2048,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub scene_pitch_um: f64,
    pub noise_read_sigma: f64,
    pub noise_shot_gain: f64,
}

impl Default for RenderSection {
    fn default() -> Self {
        Self {
            scene_pitch_um: 13.75,
            noise_read_sigma: 0.0,
            noise_shot_gain: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub target_od: f64,
    pub lambda_nm: f64,
    pub theta_max_deg: f64,
    pub h_max_um: f64,
    pub samples_per_angle: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            target_od: 6.0,
            lambda_nm: 660.0,
            theta_max_deg: 22.0,
            h_max_um: 5000.0,
            samples_per_angle: 1024,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    /// Parse and re-validate every section. The toml error already carries
    /// a line/column anchor for unknown keys and type mismatches.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.fop.build().map_err(|e| anyhow::anyhow!("[fop] {e}"))?;
        cfg.filter
            .build()
            .map_err(|e| anyhow::anyhow!("[filter] {e}"))?;
        cfg.frontend(&cfg.fop.build().expect("validated above"))
            .map_err(|e| anyhow::anyhow!("[frontend] {e}"))?;
        cfg.geometry
            .build()
            .map_err(|e| anyhow::anyhow!("[geometry] {e}"))?;
        if cfg.render.scene_pitch_um <= 0.0 {
            bail!("[render] scene_pitch_um must be positive");
        }
        Ok(cfg)
    }

    pub fn frontend(&self, fop: &FopDesign) -> fop_optics::Result<FrontendConfig> {
        let order: StackOrder = self.frontend.order.parse()?;
        let mut cfg = FrontendConfig::new(order, fop.clone(), self.filter.build()?)
            .with_scatter(self.frontend.s_capture, self.frontend.s_exit)?;
        if !(0.0..=1.0).contains(&self.frontend.dual_insertion) {
            return Err(fop_optics::OpticsError::InvalidParameter(format!(
                "dual_insertion {} outside [0, 1]",
                self.frontend.dual_insertion
            )));
        }
        cfg.dual_insertion = self.frontend.dual_insertion;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.out_dir, "out");
        assert!((cfg.fop.pitch_um - 27.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = RunConfig::parse("[fop]\nn_core = 1.5\nbogus_key = 1\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bogus_key"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn invalid_physics_is_rejected() {
        let text = "[fop]\nn_core = 1.5\nn_clad = 1.6\nn_incident = 1.0\ncore_diameter_um = 20.0\npitch_um = 27.0\nthickness_um = 250.0\nk_clad = 0.1\nk_core = 0.0\n";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn partial_section_override_fails_clean() {
        // Sections are whole-sale: a partial [fop] is a schema error, not a
        // silent merge with defaults.
        assert!(RunConfig::parse("[fop]\nn_core = 1.6\n").is_err());
    }
}
