use super::*;
use crate::magnetostatics::rf_phasor;
use proptest::prelude::*;

#[test]
fn presets_parse_and_normalize() {
    for (name, _) in PRESETS {
        let n = RunConfig::preset(name).unwrap().normalize().unwrap();
        assert_eq!(n.rf.frequency, 600e3);
        assert!((n.rf.phase - PI).abs() < 1e-15);
        assert_eq!(n.solver.dn_max, 12);
        assert_eq!(n.hash().len(), 64);
    }
    assert!(RunConfig::preset("nope").is_err());
}

#[test]
fn preset_rf_amplitude_is_in_quoted_range() {
    let n = RunConfig::preset("paper_fig1b").unwrap().normalize().unwrap();
    let model = n.field_model().unwrap();
    let b = rf_phasor(&Vec3::new(0.0, -110e-6, 0.0), &model.rf).unwrap();
    let gauss = b.norm() / GAUSS;
    assert!((gauss - 0.70).abs() < 0.005, "{gauss}");
    if let StaticModel::Ioffe(t) = &model.static_model {
        assert!((t.b_min - 9.29e-5).abs() < 0.01e-5);
        assert!((t.gradient - 22.7).abs() < 0.1);
    } else {
        panic!("expected Ioffe model");
    }
}

#[test]
fn normalized_json_round_trips_exactly() {
    let n = RunConfig::preset("paper_fig4").unwrap().normalize().unwrap();
    let back = Normalized::from_json(&n.to_json()).unwrap();
    assert_eq!(n, back);
    assert_eq!(n.hash(), back.hash());
}

#[test]
fn raw_json_round_trips() {
    let c = RunConfig::preset("paper_fig1b").unwrap();
    let text = serde_json::to_string_pretty(&c).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), c);
}

#[test]
fn unknown_fields_and_bad_values_are_config_errors() {
    let text = RunConfig::preset("paper_fig4").unwrap();
    let mut v = serde_json::to_value(&text).unwrap();
    v["rf"]["bogus"] = serde_json::json!(1);
    assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::InvalidConfig(_))));

    let mut c = text.clone();
    c.rf.frequency_khz = 0.0;
    assert!(matches!(c.normalize(), Err(Error::InvalidConfig(_))));
    let mut c = text.clone();
    c.scan.as_mut().unwrap().window_khz = [10.0, 5.0];
    assert!(matches!(c.normalize(), Err(Error::InvalidConfig(_))));
    let mut c = text.clone();
    c.fit.as_mut().unwrap().initial = vec![1.0, 1.0];
    assert!(matches!(c.normalize(), Err(Error::InvalidConfig(_))));
    let mut c = text;
    c.atom.f = 0.7;
    assert!(c.normalize().is_err());
}

#[test]
fn hash_tracks_content() {
    let a = RunConfig::preset("paper_fig4").unwrap();
    let mut b = a.clone();
    b.rf.current_a_ma = 59.0;
    assert_ne!(a.normalize().unwrap().hash(), b.normalize().unwrap().hash());
    assert_eq!(a.normalize().unwrap().hash(), a.clone().normalize().unwrap().hash());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parse_normalize_serialize_parse_is_identity(
        larmor in 100.0..2000.0f64,
        i_a in 0.0..100.0f64,
        i_b in 0.0..100.0f64,
        phase in -360.0..360.0f64,
        nu in 100.0..2000.0f64,
        x in -200.0..200.0f64,
        floor in 0.0..1e-2f64,
    ) {
        let mut c = RunConfig::preset("paper_fig4").unwrap();
        if let StaticConfig::Ioffe { larmor_khz, .. } = &mut c.static_field {
            *larmor_khz = larmor;
        }
        c.rf.current_a_ma = i_a;
        c.rf.current_b_ma = i_b;
        c.rf.phase_deg = phase;
        c.rf.frequency_khz = nu;
        c.rf.wire_a.position_um[0] = x;
        c.solver.weight_floor = floor;
        let text = serde_json::to_string(&c).unwrap();
        let n = RunConfig::from_json(&text).unwrap().normalize().unwrap();
        let again = Normalized::from_json(&n.to_json()).unwrap();
        prop_assert_eq!(&n, &again);
        prop_assert_eq!(n.to_json(), again.to_json());
    }
}
