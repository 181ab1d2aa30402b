use super::*;
use crate::local_frame::Atom;
use crate::magnetostatics::*;
use crate::spectroscopy::trapped_label;
use std::f64::consts::PI;

const LOSS: [(u32, Branch); 3] = [(0, Branch::Plus), (1, Branch::Minus), (1, Branch::Plus)];

fn problem(wire_b_x: f64, scales: FreeScales) -> FitProblem {
    let atom = Atom::rb87_f2();
    let center = Vec3::new(0.0, -110e-6, 0.0);
    let trap =
        IoffeTrapModel::from_trap_frequencies(650e3, 2.0 * PI * 3e3, 2.0 * PI * 20.0, &atom, center, Vec3::z(), Vec3::x())
            .unwrap();
    let wa = WireSpec::thin(Vec3::new(-115e-6, 0.0, 0.0), Vec3::z(), 0.0, WireRole::RfA).unwrap();
    let wb = WireSpec::thin(Vec3::new(wire_b_x, 0.0, 0.0), Vec3::z(), 0.0, WireRole::RfB).unwrap();
    let probe = WireSpec::thin(Vec3::new(0.0, 1.2e-3, 0.0), Vec3::new(1.0, 0.0, 1.0).normalize(), 1e-4, WireRole::Spectroscopy)
        .unwrap();
    let model = FieldModel {
        static_model: StaticModel::Ioffe(trap),
        rf: RfSource::new(wa, wb, PI, 600e3).with_scales(0.6422, 0.6422),
        spectroscopy: SpectroscopySource::Wire(probe),
    };
    FitProblem {
        setup: DressingSetup::new(model, atom.clone()),
        search: LineGrid::uniform(center, Vec3::x(), -4e-6, 4e-6, 41).unwrap(),
        from: trapped_label(&atom),
        model: LineModel::Rwa,
        scales,
    }
}

fn currents() -> Vec<f64> {
    (1..=6).map(|k| 10e-3 * k as f64).collect()
}

#[test]
fn rwa_round_trip_recovers_common_scale() {
    let p = problem(115e-6, FreeScales::Common);
    let opts = FitOptions::default();
    let data = synthetic_dataset(&p, &[1.15], &currents(), &LOSS, 1e3, &opts).unwrap();
    assert_eq!(data.len(), 18);
    for start in [0.8 * 1.15, 1.3 * 1.15] {
        let fit = fit_model(&p, &data, &[start], &opts).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 1.15).abs() < 1e-6, "{:?}", fit.params);
        assert!(fit.rss < 1e-8, "{}", fit.rss);
        assert!(fit.flagged.is_empty());
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn per_wire_round_trip_on_asymmetric_wires() {
    let p = problem(140e-6, FreeScales::PerWire);
    let opts = FitOptions::default();
    let truth = [1.1, 0.9];
    let data = synthetic_dataset(&p, &truth, &currents(), &LOSS, 1e3, &opts).unwrap();
    let fit = fit_model(&p, &data, &[1.3, 0.7], &opts).unwrap();
    assert!(fit.converged);
    for (a, b) in fit.params.iter().zip(truth) {
        assert!((a - b).abs() < 1e-5 * b, "{:?}", fit.params);
    }
}

#[test]
fn mirror_symmetric_wires_are_degenerate_per_wire() {
    let p = problem(115e-6, FreeScales::PerWire);
    let opts = FitOptions::default();
    let data = synthetic_dataset(&p, &[1.0, 1.0], &currents(), &LOSS, 1e3, &opts).unwrap();
    let r = fit_model(&p, &data, &[1.1, 1.1], &opts);
    assert!(matches!(r, Err(Error::DegenerateFit(_))), "{r:?}");
}

#[test]
fn single_datum_is_interpolated_exactly() {
    let p = problem(115e-6, FreeScales::Common);
    let opts = FitOptions::default();
    let full = synthetic_dataset(&p, &[0.9], &[30e-3], &[(0, Branch::Plus)], 1e3, &opts).unwrap();
    let fit = fit_model(&p, &full, &[1.0], &opts).unwrap();
    assert!(fit.rss < 1e-12, "{}", fit.rss);
    assert!(fit.residuals[0].abs() < 1e-3);
}

#[test]
fn reweighting_scales_rss_but_not_argmin() {
    let p = problem(115e-6, FreeScales::Common);
    let opts = FitOptions::default();
    let mut data = synthetic_dataset(&p, &[1.05], &currents(), &LOSS, 1e3, &opts).unwrap();
    for (i, r) in data.rows.iter_mut().enumerate() {
        r.frequency += if i % 2 == 0 { 700.0 } else { -400.0 };
    }
    let a = fit_model(&p, &data, &[1.0], &opts).unwrap();
    let b = fit_model(&p, &data.with_sigma_scaled(3.0), &[1.0], &opts).unwrap();
    assert!((a.params[0] - b.params[0]).abs() < 1e-8 * a.params[0], "{:?} {:?}", a.params, b.params);
    assert!((b.rss * 9.0 - a.rss).abs() < 1e-6 * a.rss);
    assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn dataset_validation_and_tags() {
    let row = |sigma: f64, f: f64| ResonanceDatum { current: 0.01, frequency: f, sigma, branch: None };
    assert!(ResonanceDataset::new(vec![row(0.0, 1.0)]).is_err());
    assert!(ResonanceDataset::new(vec![row(1.0, -1.0)]).is_err());
    assert!(ResonanceDataset::new(vec![row(1.0, 1.0)]).is_ok());
    assert_eq!(parse_branch_tag("2+"), Some(Some((2, Branch::Plus))));
    assert_eq!(parse_branch_tag(" 1- "), Some(Some((1, Branch::Minus))));
    assert_eq!(parse_branch_tag(""), Some(None));
    assert_eq!(parse_branch_tag("x+"), None);
    assert_eq!(parse_branch_tag("3"), None);
    assert_eq!(format_branch_tag(Some((3, Branch::Minus))), "3-");
}

#[test]
fn too_few_points_is_rejected() {
    let p = problem(140e-6, FreeScales::PerWire);
    let data = ResonanceDataset::new(vec![ResonanceDatum { current: 0.03, frequency: 1e5, sigma: 1e3, branch: None }]).unwrap();
    assert!(matches!(fit_model(&p, &data, &[1.0, 1.0], &FitOptions::default()), Err(Error::InvalidArgument(_))));
}

#[test]
fn missing_rwa_orders_fall_on_the_chain() {
    let p = problem(115e-6, FreeScales::Common);
    let opts = FitOptions::default();
    let datum = |tag| ResonanceDatum { current: 0.04, frequency: 1e6, sigma: 1e3, branch: Some(tag) };
    let data = ResonanceDataset::new(vec![datum((1, Branch::Plus)), datum((2, Branch::Plus)), datum((3, Branch::Minus))]).unwrap();
    let pred = p.predict(&[1.0], &data, &opts).unwrap();
    let w = pred[0].0 - 600e3;
    assert!((pred[1].0 - (1200e3 + w)).abs() < 1e-6);
    assert!((pred[2].0 - (1800e3 - w)).abs() < 1e-6);
    assert_eq!(pred[2].1, (3, Branch::Minus));
}
