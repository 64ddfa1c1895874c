//! RIS phase and transmit power optimization for one user.

use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{wrap, RisSetting};
use crate::config::PhaseResolution;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum PhaseError {
    #[error("transmit amplitude is zero")]
    ZeroAmplitude,
    #[error("power budget {0} W is not positive")]
    InfeasibleBudget(f64),
    #[error("phase resolution must have at least one bit")]
    NoBits,
}

/// Transmit power available once the surface's static power is charged:
/// `tx - ris / groups`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub tx_w: f64,
    pub ris_w: f64,
    pub groups: usize,
}

impl PowerBudget {
    pub fn available(&self) -> Result<f64, PhaseError> {
        let b = self.tx_w - self.ris_w / self.groups.max(1) as f64;
        if b > 0.0 {
            Ok(b)
        } else {
            Err(PhaseError::InfeasibleBudget(b))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub phases: Vec<f64>,
    /// Elements with a zero channel coefficient; their phase is set to 0.
    pub undefined: Vec<usize>,
}

/// Continuous per-element phases that co-phase every reflected path with
/// the direct one.
pub fn optimal_phase_scmu(
    h: Complex64,
    from_ris: &[Complex64],
    to_ris: &[Complex64],
    rho: Complex64,
) -> Result<PhaseSolution, PhaseError> {
    if rho == Complex64::new(0.0, 0.0) {
        return Err(PhaseError::ZeroAmplitude);
    }
    let target = (h * rho.conj()).arg();
    let mut undefined = Vec::new();
    let phases = from_ris
        .iter()
        .zip(to_ris)
        .enumerate()
        .map(|(n, (hr, g))| {
            if hr.norm() == 0.0 || g.norm() == 0.0 {
                undefined.push(n);
                0.0
            } else {
                wrap(target - hr.arg() - (g * rho.conj()).arg())
            }
        })
        .collect();
    Ok(PhaseSolution { phases, undefined })
}

/// Continuous phase shared by all elements of a group. Returns the phase
/// and whether it is undefined (zero group gain).
pub fn optimal_phase_group(
    h: Complex64,
    from_ris: &[Complex64],
    to_ris: &[Complex64],
    rho: Complex64,
) -> Result<(f64, bool), PhaseError> {
    if rho == Complex64::new(0.0, 0.0) {
        return Err(PhaseError::ZeroAmplitude);
    }
    let group: Complex64 = from_ris.iter().zip(to_ris).map(|(a, b)| a * b).sum();
    if group.norm() == 0.0 {
        return Ok((0.0, true));
    }
    Ok((wrap((h * rho.conj()).arg() - (group * rho.conj()).arg()), false))
}

/// Full budget, phase matched to the composite channel.
pub fn optimal_power(
    h: Complex64,
    from_ris: &[Complex64],
    setting: &RisSetting,
    to_ris: &[Complex64],
    budget: PowerBudget,
) -> Result<Complex64, PhaseError> {
    let p = budget.available()?;
    let c = crate::channel::composite(h, from_ris, setting, to_ris);
    let mag = c.norm();
    Ok(if mag > 0.0 {
        c / mag * p.sqrt()
    } else {
        Complex64::new(p.sqrt(), 0.0)
    })
}

/// Index of the nearest codebook point in circular distance; ties go to
/// the smaller index.
pub fn codebook_index(theta: f64, bits: u32) -> u32 {
    let n = 1u32 << bits;
    let step = TAU / f64::from(n);
    let x = wrap(theta) / step;
    let below = x.floor();
    let frac = x - below;
    let lo = (below as u32) % n;
    let hi = (lo + 1) % n;
    if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    }
}

pub fn codebook_phase(index: u32, bits: u32) -> f64 {
    f64::from(index) * TAU / f64::from(1u32 << bits)
}

pub fn quantize_phase(theta: f64, bits: u32) -> f64 {
    codebook_phase(codebook_index(theta, bits), bits)
}

/// Exact maximizer of |h + sum_v c_v e^{j theta_v}| with every theta_v
/// drawn from the 2^bits codebook.
///
/// For the optimal sum direction psi each term must be the codebook point
/// closest to psi - arg(c_v), so the optimum is among the configurations
/// obtained while psi sweeps once around the circle. Those change one
/// index at a time at known breakpoints.
pub fn best_codebook_indices(h: Complex64, coeffs: &[Complex64], bits: u32) -> Vec<u32> {
    let n = 1u32 << bits;
    let step = TAU / f64::from(n);
    let active: Vec<usize> = (0..coeffs.len()).filter(|&v| coeffs[v].norm() > 0.0).collect();
    let mut idx = vec![0u32; coeffs.len()];
    if active.is_empty() {
        return idx;
    }

    let mut breaks: Vec<(f64, usize)> = Vec::with_capacity(active.len() * n as usize);
    for &v in &active {
        let phi = coeffs[v].arg();
        for i in 0..n {
            breaks.push((wrap(phi + (f64::from(i) + 0.5) * step), v));
        }
    }
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let first = breaks[0].0;
    let last = breaks[breaks.len() - 1].0;
    let start = wrap(0.5 * (last + first + TAU));
    for &v in &active {
        idx[v] = codebook_index(start - coeffs[v].arg(), bits);
    }
    let term = |v: usize, i: u32| coeffs[v] * Complex64::from_polar(1.0, codebook_phase(i, bits));
    let mut sum = h + active.iter().map(|&v| term(v, idx[v])).sum::<Complex64>();
    let mut best = idx.clone();
    let mut best_val = sum.norm_sqr();

    for &(_, v) in &breaks {
        let next = (idx[v] + 1) % n;
        sum += term(v, next) - term(v, idx[v]);
        idx[v] = next;
        let val = sum.norm_sqr();
        if val > best_val {
            best_val = val;
            best.clone_from(&idx);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingOutcome {
    /// One phase per optimization variable (element or group).
    pub phases: Vec<f64>,
    pub rho: Complex64,
    pub snr: f64,
    /// Round at which the returned iterate was reached.
    pub iterations: usize,
    pub converged: bool,
    /// SNR after each round.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingOptions {
    pub resolution: PhaseResolution,
    pub tol: f64,
    pub max_iter: usize,
}

impl AlternatingOptions {
    pub fn new(resolution: PhaseResolution) -> Self {
        Self {
            resolution,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Alternates the phase step (with the power fixed) and the power step
/// (with the phases fixed), starting from a non-reflecting surface at full
/// power. `coeffs` holds the cascaded gain of each optimization variable.
fn alternate(
    h: Complex64,
    coeffs: &[Complex64],
    budget: PowerBudget,
    noise_w: f64,
    opts: AlternatingOptions,
) -> Result<AlternatingOutcome, PhaseError> {
    let avail = budget.available()?;
    if let PhaseResolution::Bits(0) = opts.resolution {
        return Err(PhaseError::NoBits);
    }
    let ones = vec![Complex64::new(1.0, 0.0); coeffs.len()];
    let mut rho = Complex64::new(avail.sqrt(), 0.0);
    let mut phases = vec![0.0; coeffs.len()];
    let mut snr = (h * rho).norm_sqr() / noise_w;
    let mut history = Vec::new();
    let mut iterations = 1;
    let mut converged = false;

    for round in 1..=opts.max_iter.max(1) {
        let next_phases: Vec<f64> = match opts.resolution {
            PhaseResolution::Continuous => optimal_phase_scmu(h, coeffs, &ones, rho)?.phases,
            PhaseResolution::Bits(b) => best_codebook_indices(h * rho, &coeffs.iter().map(|c| c * rho).collect::<Vec<_>>(), b)
                .into_iter()
                .map(|i| codebook_phase(i, b))
                .collect(),
        };
        let setting = RisSetting::Phases(next_phases);
        let next_rho = optimal_power(h, coeffs, &setting, &ones, budget)?;
        let next_snr = (crate::channel::composite(h, coeffs, &setting, &ones) * next_rho).norm_sqr() / noise_w;
        history.push(next_snr);

        if next_snr < snr * (1.0 - 1e-12) {
            // a round may never lose SNR; keep the previous iterate
            converged = true;
            break;
        }
        let gain = next_snr - snr;
        let RisSetting::Phases(p) = setting else {
            unreachable!()
        };
        phases = p;
        rho = next_rho;
        snr = next_snr;
        if gain <= opts.tol * snr {
            converged = true;
            break;
        }
        iterations = round;
    }
    Ok(AlternatingOutcome {
        phases,
        rho,
        snr,
        iterations,
        converged,
        history,
    })
}

/// Per-element optimization over the whole surface.
pub fn alternating_optimize(
    h: Complex64,
    from_ris: &[Complex64],
    to_ris: &[Complex64],
    budget: PowerBudget,
    noise_w: f64,
    opts: AlternatingOptions,
) -> Result<AlternatingOutcome, PhaseError> {
    let coeffs: Vec<Complex64> = from_ris.iter().zip(to_ris).map(|(a, b)| a * b).collect();
    alternate(h, &coeffs, budget, noise_w, opts)
}

/// One shared phase for all elements of a group.
pub fn alternating_optimize_group(
    h: Complex64,
    from_ris: &[Complex64],
    to_ris: &[Complex64],
    budget: PowerBudget,
    noise_w: f64,
    opts: AlternatingOptions,
) -> Result<AlternatingOutcome, PhaseError> {
    let group: Complex64 = from_ris.iter().zip(to_ris).map(|(a, b)| a * b).sum();
    alternate(h, &[group], budget, noise_w, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, t)
    }

    #[test]
    fn aligned_channels_need_no_shift() {
        let one = c(1.0, 0.0);
        let sol = optimal_phase_scmu(one, &[c(0.5, 0.0); 3], &[c(2.0, 0.0); 3], one).unwrap();
        assert_eq!(sol.phases, vec![0.0; 3]);
        let sol = optimal_phase_scmu(unit(PI / 4.0), &[unit(PI / 8.0)], &[unit(PI / 8.0)], one).unwrap();
        assert!(sol.phases[0] < 1e-12 || (TAU - sol.phases[0]) < 1e-12);
    }

    #[test]
    fn zero_coefficients_are_flagged() {
        let one = c(1.0, 0.0);
        let sol = optimal_phase_scmu(one, &[c(0.0, 0.0), unit(1.0)], &[one, one], one).unwrap();
        assert_eq!(sol.undefined, vec![0]);
        assert_eq!(sol.phases[0], 0.0);
        assert_eq!(optimal_phase_scmu(one, &[], &[], c(0.0, 0.0)), Err(PhaseError::ZeroAmplitude));
    }

    #[test]
    fn group_phase_wraps() {
        let one = c(1.0, 0.0);
        let (t, undef) = optimal_phase_group(one, &[unit(PI)], &[one], one).unwrap();
        assert!(!undef);
        assert!((t - PI).abs() < 1e-12);
        let (t, _) = optimal_phase_group(one, &[c(0.3, 0.0); 4], &[c(0.2, 0.0); 4], one).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn single_element_groups_match_per_element() {
        let h = unit(0.3);
        let hr = [unit(1.0), unit(-2.0), unit(0.7)];
        let g = [unit(0.2), unit(2.5), unit(-1.1)];
        let rho = c(0.1, 0.0);
        let per = optimal_phase_scmu(h, &hr, &g, rho).unwrap().phases;
        for n in 0..3 {
            let (t, _) = optimal_phase_group(h, &hr[n..=n], &g[n..=n], rho).unwrap();
            assert!((t - per[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn power_budget_arithmetic() {
        let five_dbm = crate::config::dbm_to_w(5.0);
        let b = PowerBudget { tx_w: five_dbm, ris_w: 0.0, groups: 1 };
        assert!((b.available().unwrap() - 3.162e-3).abs() < 1e-6);
        let b = PowerBudget { tx_w: 5e-3, ris_w: 4e-3, groups: 4 };
        assert!((b.available().unwrap() - 4e-3).abs() < 1e-15);
        let b = PowerBudget { tx_w: 5e-3, ris_w: 5e-3, groups: 1 };
        assert!(matches!(b.available(), Err(PhaseError::InfeasibleBudget(_))));
    }

    #[test]
    fn optimal_power_matches_composite_phase() {
        let h = unit(0.4);
        let b = PowerBudget { tx_w: 2.0, ris_w: 0.0, groups: 1 };
        let rho = optimal_power(h, &[], &RisSetting::Neutral, &[], b).unwrap();
        assert!((rho.norm_sqr() - 2.0).abs() < 1e-12);
        assert!((rho.arg() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn quantization_examples() {
        assert_eq!(quantize_phase(2.0, 1), PI);
        assert_eq!(quantize_phase(PI / 4.0 + 1e-9, 2), PI / 2.0);
        assert_eq!(quantize_phase(PI / 4.0 - 1e-9, 2), 0.0);
        for i in 0..8 {
            let t = codebook_phase(i, 3);
            assert_eq!(quantize_phase(t, 3), t);
        }
        // exactly halfway between the last point and zero
        assert_eq!(codebook_index(TAU - PI / 4.0, 2), 0);
        assert_eq!(quantize_phase(-0.1, 2), 0.0);
    }

    #[test]
    fn continuous_optimum_is_coherent_sum() {
        let h = c(0.3, -0.2);
        let hr = [unit(1.0) * 0.5, unit(2.0) * 0.1];
        let g = [unit(-0.4) * 0.7, unit(0.9) * 0.2];
        let b = PowerBudget { tx_w: 1e-3, ris_w: 0.0, groups: 1 };
        let out = alternating_optimize(h, &hr, &g, b, 1e-9, AlternatingOptions::new(PhaseResolution::Continuous)).unwrap();
        let closed = ((h.norm() + 0.5 * 0.7 + 0.1 * 0.2) * 1e-3f64.sqrt()).powi(2) / 1e-9;
        assert!((out.snr / closed - 1.0).abs() < 1e-10);
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
    }

    #[test]
    fn discrete_sweep_beats_plain_projection() {
        // Projection of the continuous phases is not optimal here.
        let h = c(0.0, 0.0);
        let coeffs = [unit(0.0), unit(2.0 * PI / 3.0), unit(4.0 * PI / 3.0 + 0.1)];
        let best = best_codebook_indices(h, &coeffs, 1);
        let val = |idx: &[u32]| {
            (h + coeffs.iter().zip(idx).map(|(c, &i)| c * unit(codebook_phase(i, 1))).sum::<Complex64>()).norm_sqr()
        };
        let mut brute = 0.0f64;
        for mask in 0..8u32 {
            let idx: Vec<u32> = (0..3).map(|k| (mask >> k) & 1).collect();
            brute = brute.max(val(&idx));
        }
        assert!((val(&best) - brute).abs() < 1e-12);
    }

    #[test]
    fn empty_surface_keeps_direct_link() {
        let h = c(1e-4, 0.0);
        let b = PowerBudget { tx_w: 1e-3, ris_w: 0.0, groups: 1 };
        let out = alternating_optimize(h, &[], &[], b, 1e-12, AlternatingOptions::new(PhaseResolution::Bits(2))).unwrap();
        assert!((out.snr - 1e-8 * 1e-3 / 1e-12).abs() / out.snr < 1e-12);
    }
}
