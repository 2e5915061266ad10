//! Phenomenological multi-bandpass interference filter model.
//!
//! The filter is described by its normal-incidence passbands, a stopband
//! optical density, a log-linear roll-off width, and a single effective
//! cavity index. Tilting the filter blue-shifts every band edge by
//! `sqrt(1 - (sin θ / n_eff)²)`; no attempt is made to synthesize the
//! proprietary multilayer stack.

use crate::error::{OpticsError, Result};

/// Optical densities are reported no deeper than this to avoid log-of-zero
/// plumbing downstream.
pub const OD_CAP: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    passbands: Vec<(f64, f64)>,
    pass_transmittance: f64,
    stop_od: f64,
    rolloff_width_nm: f64,
    n_eff: f64,
}

impl FilterSpec {
    pub fn new(
        passbands: Vec<(f64, f64)>,
        pass_transmittance: f64,
        stop_od: f64,
        rolloff_width_nm: f64,
        n_eff: f64,
    ) -> Result<Self> {
        if passbands.is_empty() {
            return Err(OpticsError::InvalidParameter(
                "filter needs at least one passband".into(),
            ));
        }
        for &(lo, hi) in &passbands {
            if !(lo > 0.0 && lo < hi) {
                return Err(OpticsError::InvalidParameter(format!(
                    "passband ({lo}, {hi}) nm must satisfy 0 < lo < hi"
                )));
            }
        }
        if passbands.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(OpticsError::InvalidParameter(
                "passbands must be sorted ascending and pairwise disjoint".into(),
            ));
        }
        if !(pass_transmittance > 0.0 && pass_transmittance <= 1.0) {
            return Err(OpticsError::InvalidParameter(format!(
                "pass transmittance {pass_transmittance} must lie in (0, 1]"
            )));
        }
        if stop_od < 0.0 {
            return Err(OpticsError::InvalidParameter(format!(
                "stop OD {stop_od} must be non-negative"
            )));
        }
        if rolloff_width_nm <= 0.0 {
            return Err(OpticsError::InvalidParameter(format!(
                "roll-off width {rolloff_width_nm} nm must be positive"
            )));
        }
        if n_eff <= 1.0 {
            return Err(OpticsError::InvalidParameter(format!(
                "effective index {n_eff} must exceed 1"
            )));
        }
        Ok(Self {
            passbands,
            pass_transmittance,
            stop_od,
            rolloff_width_nm,
            n_eff,
        })
    }

    pub fn passbands(&self) -> &[(f64, f64)] {
        &self.passbands
    }

    pub fn pass_transmittance(&self) -> f64 {
        self.pass_transmittance
    }

    pub fn stop_od(&self) -> f64 {
        self.stop_od
    }

    pub fn rolloff_width_nm(&self) -> f64 {
        self.rolloff_width_nm
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn with_n_eff(mut self, n_eff: f64) -> Result<Self> {
        if n_eff <= 1.0 {
            return Err(OpticsError::InvalidParameter(format!(
                "effective index {n_eff} must exceed 1"
            )));
        }
        self.n_eff = n_eff;
        Ok(self)
    }

    /// Transmittance at `lambda_nm` for light incident at `theta_deg`.
    ///
    /// Each band edge is blue-shifted by the angle factor; log10(T)
    /// interpolates linearly over the roll-off width outside each shifted
    /// edge. The result always lies in [10^-stop_od, pass_transmittance].
    pub fn transmittance(&self, lambda_nm: f64, theta_deg: f64) -> Result<f64> {
        if lambda_nm <= 0.0 {
            return Err(OpticsError::Domain(format!(
                "wavelength {lambda_nm} nm must be positive"
            )));
        }
        let shift = shift_factor(theta_deg, self.n_eff)?;
        let log_pass = self.pass_transmittance.log10();
        let log_stop = -self.stop_od;
        let w = self.rolloff_width_nm;
        let mut log_t = log_stop;
        for &(lo, hi) in &self.passbands {
            let (lo_s, hi_s) = (lo * shift, hi * shift);
            let band_log = if lambda_nm >= lo_s && lambda_nm <= hi_s {
                log_pass
            } else if lambda_nm >= lo_s - w && lambda_nm < lo_s {
                let x = (lambda_nm - (lo_s - w)) / w;
                log_stop + x * (log_pass - log_stop)
            } else if lambda_nm > hi_s && lambda_nm <= hi_s + w {
                let x = (hi_s + w - lambda_nm) / w;
                log_stop + x * (log_pass - log_stop)
            } else {
                log_stop
            };
            log_t = log_t.max(band_log);
        }
        Ok(10f64.powf(log_t.clamp(log_stop, log_pass)))
    }
}

fn check_theta(theta_deg: f64) -> Result<()> {
    if !(0.0..=90.0).contains(&theta_deg) {
        return Err(OpticsError::Domain(format!(
            "incidence angle {theta_deg}° must lie in [0°, 90°]"
        )));
    }
    Ok(())
}

/// Blue-shift factor sqrt(1 - (sin θ / n)²) applied to every band edge.
pub fn shift_factor(theta_deg: f64, n_eff: f64) -> Result<f64> {
    check_theta(theta_deg)?;
    let s = theta_deg.to_radians().sin() / n_eff;
    Ok((1.0 - s * s).sqrt())
}

/// Center (or edge) wavelength of a tilted single-cavity filter.
pub fn shifted_wavelength(lambda0_nm: f64, theta_deg: f64, n_eff: f64) -> Result<f64> {
    if lambda0_nm <= 0.0 {
        return Err(OpticsError::Domain(format!(
            "wavelength {lambda0_nm} nm must be positive"
        )));
    }
    Ok(lambda0_nm * shift_factor(theta_deg, n_eff)?)
}

/// Fit the effective cavity index from observed (angle, shifted edge) pairs.
///
/// Each anchor states that the band edge originally at `lambda_edge0_nm`
/// was observed at `edge_wavelength` when tilted to `theta`. A single anchor
/// inverts the shift formula in closed form; several anchors are combined by
/// least squares over the predicted edge positions.
pub fn calibrate_n_eff(anchors: &[(f64, f64)], lambda_edge0_nm: f64) -> Result<f64> {
    if anchors.is_empty() {
        return Err(OpticsError::InvalidParameter("no anchors supplied".into()));
    }
    if lambda_edge0_nm <= 0.0 {
        return Err(OpticsError::Domain(format!(
            "edge wavelength {lambda_edge0_nm} nm must be positive"
        )));
    }
    let mut candidates = Vec::with_capacity(anchors.len());
    for &(theta, edge) in anchors {
        check_theta(theta)?;
        if theta == 0.0 {
            return Err(OpticsError::DegenerateAnchor(format!(
                "anchor at 0° carries no shift information (edge {edge} nm)"
            )));
        }
        if edge >= lambda_edge0_nm || edge <= 0.0 {
            return Err(OpticsError::NoSolution(format!(
                "anchor edge {edge} nm must lie strictly below the unshifted edge {lambda_edge0_nm} nm"
            )));
        }
        let ratio = edge / lambda_edge0_nm;
        let denom = (1.0 - ratio * ratio).sqrt();
        candidates.push(theta.to_radians().sin() / denom);
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let sse = |n: f64| -> f64 {
        anchors
            .iter()
            .map(|&(theta, edge)| {
                let s = theta.to_radians().sin() / n;
                let pred = lambda_edge0_nm * (1.0 - s * s).sqrt();
                (pred - edge) * (pred - edge)
            })
            .sum()
    };
    // Golden-section search; the SSE is unimodal in n over the bracket.
    let mut lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min) * 0.5;
    let hi = candidates.iter().cloned().fold(0.0, f64::max) * 2.0;
    lo = lo.max(1.0 + 1e-9);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (sse(c), sse(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sse(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Optical density of a transmittance, capped at [`OD_CAP`].
///
/// Values at or below the cap floor (including non-positive values) report
/// the cap itself, which downstream code treats as "below floor".
pub fn od_of(t: f64) -> f64 {
    od_of_capped(t, OD_CAP)
}

pub fn od_of_capped(t: f64, cap: f64) -> f64 {
    if t <= 10f64.powf(-cap) {
        cap
    } else if t >= 1.0 {
        0.0
    } else {
        -t.log10()
    }
}

/// Strict variant: errors on non-positive transmittance instead of capping.
pub fn od_of_strict(t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(OpticsError::Domain(format!(
            "transmittance {t} is below floor; capped reporting uses OD {OD_CAP}"
        )));
    }
    Ok(od_of(t))
}
