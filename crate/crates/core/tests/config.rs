use proptest::prelude::*;
use ris_mac::config::{dbm_to_w, w_to_dbm, ConfigError, PhaseResolution, Rule, SystemConfig, Traffic};

fn arbitrary_config() -> impl Strategy<Value = SystemConfig> {
    (
        1usize..500,
        prop::sample::select(vec![1usize, 2, 4, 8, 16]),
        1e-4f64..1.0,
        0.0f64..1e-3,
        prop::option::of(1u32..=8),
        10.0f64..200.0,
        1u32..40,
        prop::option::of(1u32..50),
        0.01f64..=1.0,
    )
        .prop_map(|(users, groups, p, pr, bits, d, r, traffic, q)| SystemConfig {
            users,
            groups,
            subchannels: groups,
            tx_power_w: p,
            ris_power_w: pr,
            phase: bits.map_or(PhaseResolution::Continuous, PhaseResolution::Bits),
            distance_m: d,
            r_max: r,
            traffic: traffic.map_or(Traffic::Saturated, Traffic::PerFrame),
            initial_q: q,
            ..SystemConfig::default()
        })
}

proptest! {
    #[test]
    fn text_round_trip(c in arbitrary_config()) {
        let back = SystemConfig::parse(&c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn dbm_round_trip(x in -120.0f64..60.0) {
        prop_assert!((w_to_dbm(dbm_to_w(x)) - x).abs() < 1e-9);
    }

    #[test]
    fn mismatched_groups_always_flagged(l in 1usize..9, c in 1usize..9) {
        prop_assume!(l != c);
        let cfg = SystemConfig { groups: l, subchannels: c, ..SystemConfig::default() };
        prop_assert!(cfg.validate().has(Rule::Structural));
    }
}

#[test]
fn defaults_are_valid() {
    let c = SystemConfig::default();
    assert!(c.validate().is_ok(), "{}", c.validate());
    assert_eq!(c.cycle_slots(), 18);
    assert_eq!(c.transmission_slots(), 360);
    assert!((c.tx_power_w - dbm_to_w(5.0)).abs() < 1e-18);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let err = SystemConfig::parse("users = 4\n# note\nbogus = 1\n").unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey { line: 3, .. }), "{err}");
    let err = SystemConfig::parse("users = four\n").unwrap_err();
    assert!(matches!(err, ConfigError::BadValue { line: 1, .. }), "{err}");
    let err = SystemConfig::parse("users 4\n").unwrap_err();
    assert!(matches!(err, ConfigError::MissingEquals { line: 1 }), "{err}");
}

#[test]
fn budget_violation_is_reported() {
    let c = SystemConfig {
        tx_power_w: 1e-3,
        ris_power_w: 2e-3,
        ..SystemConfig::default()
    };
    let r = c.validate();
    assert!(r.has(Rule::Constraint(1)));
    let multi = SystemConfig {
        groups: 4,
        subchannels: 4,
        tx_power_w: 1e-3,
        ris_power_w: 2e-3,
        ..SystemConfig::default()
    };
    // P - P_RIS/L = 0.5 mW stays positive with four groups
    assert!(multi.validate().is_ok());
}

#[test]
fn frame_split_must_add_up() {
    let c = SystemConfig {
        negotiation_s: 0.03,
        ..SystemConfig::default()
    };
    assert!(c.validate().has(Rule::Constraint(4)));
}
