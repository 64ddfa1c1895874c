mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use ris_mac::config::PhaseResolution;
use ris_mac::phase::{
    alternating_optimize, alternating_optimize_group, best_codebook_indices, codebook_index, codebook_phase,
    quantize_phase, AlternatingOptions, PowerBudget,
};

const NOISE: f64 = 1e-11;

fn budget() -> PowerBudget {
    PowerBudget {
        tx_w: 3e-3,
        ris_w: 1e-3,
        groups: 1,
    }
}

fn complex() -> impl Strategy<Value = Complex64> {
    (1e-6f64..1e-3, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn discrete_optimum_is_exhaustive_optimum(
        h in complex(),
        pairs in prop::collection::vec((complex(), complex()), 1..=4),
        bits in 1u32..=3,
    ) {
        let (from, to): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let out = alternating_optimize(h, &from, &to, budget(), NOISE, AlternatingOptions::new(PhaseResolution::Bits(bits))).unwrap();
        let coeffs: Vec<Complex64> = from.iter().zip(&to).map(|(a, b)| a * b).collect();
        let (want, best) = common::exhaustive_codebook(h, &coeffs, bits, 2e-3, NOISE);
        let got: Vec<u32> = out.phases.iter().map(|&t| codebook_index(t, bits)).collect();
        prop_assert_eq!(got, want);
        prop_assert!((out.snr - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn sweep_never_loses_to_exhaustive(
        h in complex(),
        coeffs in prop::collection::vec(complex(), 1..=5),
        bits in 1u32..=3,
    ) {
        let idx = best_codebook_indices(h, &coeffs, bits);
        let value = |idx: &[u32]| {
            (h + coeffs.iter().zip(idx).map(|(c, &i)| c * Complex64::from_polar(1.0, codebook_phase(i, bits))).sum::<Complex64>()).norm_sqr()
        };
        let (best, _) = common::exhaustive_codebook(h, &coeffs, bits, 1.0, 1.0);
        prop_assert!(value(&idx) >= value(&best) * (1.0 - 1e-12));
    }

    #[test]
    fn continuous_optimum_is_coherent_sum(
        h in complex(),
        pairs in prop::collection::vec((complex(), complex()), 1..=16),
    ) {
        let (from, to): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let out = alternating_optimize(h, &from, &to, budget(), NOISE, AlternatingOptions::new(PhaseResolution::Continuous)).unwrap();
        let coeffs: Vec<Complex64> = from.iter().zip(&to).map(|(a, b)| a * b).collect();
        let want = common::coherent_snr(h, &coeffs, 2e-3, NOISE);
        prop_assert!((out.snr - want).abs() <= 1e-10 * want);
        prop_assert!((out.rho.norm_sqr() - 2e-3).abs() <= 1e-15);
        prop_assert!(out.history.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }

    #[test]
    fn quantization_is_nearest(theta in -20.0f64..20.0, bits in 1u32..=6) {
        let q = quantize_phase(theta, bits);
        let step = std::f64::consts::TAU / f64::from(1u32 << bits);
        let d = (theta - q).rem_euclid(std::f64::consts::TAU);
        let d = d.min(std::f64::consts::TAU - d);
        prop_assert!(d <= step / 2.0 + 1e-12);
    }

    #[test]
    fn group_phase_beats_any_single_shared_phase(
        h in complex(),
        pairs in prop::collection::vec((complex(), complex()), 1..=8),
        probe in 0.0f64..std::f64::consts::TAU,
    ) {
        let (from, to): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let out = alternating_optimize_group(h, &from, &to, budget(), NOISE, AlternatingOptions::new(PhaseResolution::Continuous)).unwrap();
        let g: Complex64 = from.iter().zip(&to).map(|(a, b)| a * b).sum();
        let other = 2e-3 * (h + g * Complex64::from_polar(1.0, probe)).norm_sqr() / NOISE;
        prop_assert!(out.snr >= other * (1.0 - 1e-12));
    }
}

#[test]
fn infeasible_budget_is_an_error() {
    let b = PowerBudget {
        tx_w: 1e-3,
        ris_w: 2e-3,
        groups: 1,
    };
    let one = Complex64::new(1.0, 0.0);
    assert!(alternating_optimize(one, &[one], &[one], b, NOISE, AlternatingOptions::new(PhaseResolution::Continuous)).is_err());
}
