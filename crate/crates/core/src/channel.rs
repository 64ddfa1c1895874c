//! Geometry, channel coefficients, received power and SNR.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ChannelMode, PathModel, SystemConfig};

/// Relative gap between the reflected and direct path below which the
/// reflected path is treated as equal to the direct one.
const FAR_FIELD_GAP: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("noise power must be positive")]
    NonPositiveNoise,
}

/// Distances for one user. Every element sees the same placement, so the
/// per-element vectors are constant; they are kept per element because the
/// received-power expression sums over elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub direct_m: f64,
    pub user_ris_m: Vec<f64>,
    pub ris_ap_m: Vec<f64>,
    /// Phase lag of each reflected path relative to the direct one, in [0, 2pi).
    pub phase_offset: Vec<f64>,
    /// Reflected and direct path lengths agree to within a few percent.
    pub far_field: bool,
}

pub fn geometry(config: &SystemConfig) -> Result<Geometry, ChannelError> {
    let d = config.distance_m;
    let (dh, dv) = (config.ris_offset_h_m, config.ris_offset_v_m);
    if !(d > 0.0) {
        return Err(ChannelError::Degenerate("user-AP distance must be positive"));
    }
    if dv >= d || dv < 0.0 || dh < 0.0 {
        return Err(ChannelError::Degenerate("RIS offsets must satisfy d > d_v >= 0"));
    }
    let (d1, d2) = match config.path_model {
        PathModel::Placement => ((dh * dh + (d - dv) * (d - dv)).sqrt(), dh),
        PathModel::EqualPaths => (d - dh, dh),
    };
    if !(d1 > 0.0) || d2 < 0.0 {
        return Err(ChannelError::Degenerate("user and RIS are co-located"));
    }
    let lambda = config.wavelength();
    let offset = wrap(TAU * (d1 + d2 - d) / lambda);
    let n = config.elements;
    Ok(Geometry {
        direct_m: d,
        user_ris_m: vec![d1; n],
        ris_ap_m: vec![d2; n],
        phase_offset: vec![offset; n],
        far_field: ((d1 + d2 - d) / d).abs() <= FAR_FIELD_GAP,
    })
}

/// Wraps an angle into [0, 2pi).
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub direct: Complex64,
    /// User to element, one entry per element.
    pub to_ris: Vec<Complex64>,
    /// Element to AP.
    pub from_ris: Vec<Complex64>,
    pub geometry: Geometry,
}

impl UserChannel {
    /// Per-element cascaded gain H_n * G_n.
    pub fn cascade(&self) -> Vec<Complex64> {
        self.from_ris
            .iter()
            .zip(&self.to_ris)
            .map(|(h, g)| h * g)
            .collect()
    }

    /// The element-to-AP and user-to-element gains of a subset of elements.
    pub fn subset(&self, elements: &[usize]) -> (Vec<Complex64>, Vec<Complex64>) {
        (
            elements.iter().map(|&n| self.from_ris[n]).collect(),
            elements.iter().map(|&n| self.to_ris[n]).collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "d1", "d2", "dphase", "abs_g", "arg_g", "abs_h", "arg_h"])?;
        for n in 0..self.to_ris.len() {
            let (g, h) = (self.to_ris[n], self.from_ris[n]);
            w.write_record(&[
                n.to_string(),
                self.geometry.user_ris_m[n].to_string(),
                self.geometry.ris_ap_m[n].to_string(),
                self.geometry.phase_offset[n].to_string(),
                g.norm().to_string(),
                g.arg().to_string(),
                h.norm().to_string(),
                h.arg().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub wavelength: f64,
    pub users: Vec<UserChannel>,
}

/// Builds every user's channel. Amplitudes follow free-space factors
/// lambda/(4 pi distance); the reflected amplitude is split evenly between
/// the two hops so that |H_n G_n| = lambda/(4 pi (d1 + d2)).
pub fn realize_channels(config: &SystemConfig, seed: u64) -> Result<ChannelRealization, ChannelError> {
    let geo = geometry(config)?;
    let lambda = config.wavelength();
    let direct_amp = lambda / (4.0 * PI * geo.direct_m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let users = (0..config.users)
        .map(|_| {
            let n = config.elements;
            let mut phase = |len: f64| -> f64 {
                match config.channel_mode {
                    ChannelMode::GeometricLos => -TAU * len / lambda,
                    ChannelMode::RandomPhase => rng.gen_range(0.0..TAU),
                }
            };
            let direct = Complex64::from_polar(direct_amp, phase(geo.direct_m));
            let mut to_ris = Vec::with_capacity(n);
            let mut from_ris = Vec::with_capacity(n);
            for i in 0..n {
                let (d1, d2) = (geo.user_ris_m[i], geo.ris_ap_m[i]);
                let amp = (lambda / (4.0 * PI * (d1 + d2))).sqrt();
                to_ris.push(Complex64::from_polar(amp, phase(d1)));
                from_ris.push(Complex64::from_polar(amp, phase(d2)));
            }
            UserChannel {
                direct,
                to_ris,
                from_ris,
                geometry: geo.clone(),
            }
        })
        .collect();
    Ok(ChannelRealization {
        wavelength: lambda,
        users,
    })
}

/// Reflection state of the whole surface for one transmission.
#[derive(Debug, Clone, PartialEq)]
pub enum RisSetting {
    /// Not reflecting toward the AP.
    Neutral,
    /// One phase per element, unit amplitude.
    Phases(Vec<f64>),
}

/// Composite gain h + sum_n H_n e^{j theta_n} G_n.
pub fn composite(h: Complex64, from_ris: &[Complex64], setting: &RisSetting, to_ris: &[Complex64]) -> Complex64 {
    match setting {
        RisSetting::Neutral => h,
        RisSetting::Phases(theta) => {
            h + from_ris
                .iter()
                .zip(to_ris)
                .zip(theta)
                .map(|((hr, g), &t)| hr * Complex64::from_polar(1.0, t) * g)
                .sum::<Complex64>()
        }
    }
}

pub fn snr_scmu(
    h: Complex64,
    from_ris: &[Complex64],
    setting: &RisSetting,
    to_ris: &[Complex64],
    rho: Complex64,
    noise_w: f64,
) -> Result<f64, ChannelError> {
    if !(noise_w > 0.0) {
        return Err(ChannelError::NonPositiveNoise);
    }
    Ok((composite(h, from_ris, setting, to_ris) * rho).norm_sqr() / noise_w)
}

/// SNR when every element of a group shares one phase; `None` means the
/// group is not reflecting.
pub fn snr_mcmu(
    h: Complex64,
    from_ris: &[Complex64],
    group_phase: Option<f64>,
    to_ris: &[Complex64],
    rho: Complex64,
    noise_w: f64,
) -> Result<f64, ChannelError> {
    let setting = match group_phase {
        Some(t) => RisSetting::Phases(vec![t; from_ris.len()]),
        None => RisSetting::Neutral,
    };
    snr_scmu(h, from_ris, &setting, to_ris, rho, noise_w)
}

/// Received power computed from path lengths, in watts.
pub fn received_power(wavelength: f64, geo: &Geometry, setting: &RisSetting, rho2: f64) -> Result<f64, ChannelError> {
    if !(geo.direct_m > 0.0) {
        return Err(ChannelError::Degenerate("zero direct distance"));
    }
    let theta = match setting {
        RisSetting::Phases(t) if !t.is_empty() => t,
        _ => return Ok(rho2 * friis_gain(wavelength, geo.direct_m)),
    };
    let mut sum = Complex64::new(1.0 / geo.direct_m, 0.0);
    for (n, &t) in theta.iter().enumerate() {
        let path = geo.user_ris_m[n] + geo.ris_ap_m[n];
        if !(path > 0.0) {
            return Err(ChannelError::Degenerate("zero reflected distance"));
        }
        sum += Complex64::from_polar(1.0 / path, t - geo.phase_offset[n]);
    }
    let k = wavelength / (4.0 * PI);
    Ok(rho2 * k * k * sum.norm_sqr())
}

/// Free-space power gain (lambda / (4 pi d))^2.
pub fn friis_gain(wavelength: f64, distance_m: f64) -> f64 {
    (wavelength / (4.0 * PI * distance_m)).powi(2)
}

/// Power consumed by an RIS-assisted link.
pub fn total_link_power(rho2: f64, ris_power_w: f64, received_w: f64) -> f64 {
    rho2 + ris_power_w + received_w
}

/// Power consumed when only the direct link is used.
pub fn direct_link_power(tx_power_w: f64, received_w: f64) -> f64 {
    tx_power_w + received_w
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
