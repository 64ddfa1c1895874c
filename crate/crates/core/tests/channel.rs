use num_complex::Complex64;
use proptest::prelude::*;
use ris_mac::channel::{
    composite, friis_gain, geometry, realize_channels, received_power, snr_scmu, RisSetting,
};
use ris_mac::config::{ChannelMode, PathModel, SystemConfig};
use ris_mac::phase::optimal_phase_scmu;

fn los(elements: usize, path_model: PathModel) -> SystemConfig {
    SystemConfig {
        elements,
        users: 3,
        channel_mode: ChannelMode::GeometricLos,
        path_model,
        ..SystemConfig::default()
    }
}

#[test]
fn direct_gain_is_friis() {
    let cfg = los(16, PathModel::Placement);
    let ch = realize_channels(&cfg, 1).unwrap();
    let g = friis_gain(ch.wavelength, cfg.distance_m);
    for u in &ch.users {
        assert!((u.direct.norm_sqr() - g).abs() <= 1e-12 * g);
        let neutral = composite(u.direct, &u.from_ris, &RisSetting::Neutral, &u.to_ris);
        assert_eq!(neutral, u.direct);
    }
}

#[test]
fn aligned_composite_matches_path_length_power() {
    for model in [PathModel::Placement, PathModel::EqualPaths] {
        let cfg = los(32, model);
        let ch = realize_channels(&cfg, 3).unwrap();
        let geo = geometry(&cfg).unwrap();
        let u = &ch.users[0];
        let rho = Complex64::new(cfg.tx_power_w.sqrt(), 0.0);
        let sol = optimal_phase_scmu(u.direct, &u.from_ris, &u.to_ris, rho).unwrap();
        let setting = RisSetting::Phases(sol.phases.clone());
        let from_gains = composite(u.direct, &u.from_ris, &setting, &u.to_ris).norm_sqr() * cfg.tx_power_w;
        // aligned phases in the path-length formula are the offsets themselves
        let by_length = received_power(
            ch.wavelength,
            &geo,
            &RisSetting::Phases(geo.phase_offset.clone()),
            cfg.tx_power_w,
        )
        .unwrap();
        assert!((from_gains - by_length).abs() <= 1e-9 * by_length, "{model:?}");
    }
}

#[test]
fn received_power_grows_with_square_of_elements() {
    let base = los(1, PathModel::EqualPaths);
    let lambda = base.wavelength();
    let power = |n: usize| {
        let cfg = los(n, PathModel::EqualPaths);
        let geo = geometry(&cfg).unwrap();
        received_power(lambda, &geo, &RisSetting::Phases(geo.phase_offset.clone()), 1.0).unwrap()
    };
    // equal paths: amplitude sum (N + 1)/d, so power scales with (N + 1)^2
    let p1 = power(1);
    for n in [8usize, 64, 512] {
        let ratio = power(n) / p1;
        let expect = ((n + 1) as f64 / 2.0).powi(2);
        assert!((ratio / expect - 1.0).abs() < 1e-9, "n={n} ratio={ratio}");
    }
}

#[test]
fn random_phase_realization_is_seeded() {
    let cfg = SystemConfig {
        channel_mode: ChannelMode::RandomPhase,
        ..los(8, PathModel::Placement)
    };
    let a = realize_channels(&cfg, 9).unwrap();
    let b = realize_channels(&cfg, 9).unwrap();
    let c = realize_channels(&cfg, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

proptest! {
    #[test]
    fn optimal_phases_beat_any_setting(seed in 0u64..1000, thetas in prop::collection::vec(0.0f64..6.3, 6)) {
        let cfg = SystemConfig { channel_mode: ChannelMode::RandomPhase, ..los(6, PathModel::Placement) };
        let ch = realize_channels(&cfg, seed).unwrap();
        let u = &ch.users[0];
        let rho = Complex64::new(1e-2, 0.0);
        let best = optimal_phase_scmu(u.direct, &u.from_ris, &u.to_ris, rho).unwrap();
        let snr = |s: &RisSetting| snr_scmu(u.direct, &u.from_ris, s, &u.to_ris, rho, 1e-13).unwrap();
        let opt = snr(&RisSetting::Phases(best.phases));
        prop_assert!(opt >= snr(&RisSetting::Phases(thetas)) * (1.0 - 1e-12));
        prop_assert!(opt >= snr(&RisSetting::Neutral) * (1.0 - 1e-12));
    }
}
