#![allow(clippy::excessive_precision)]

use chainreg::metrics::rotating_frame;
use chainreg::scenario::{catalog, catalog_sources, Scenario};
use chainreg::state::{center_of_mass_moment, linear_momentum, TOL_C};
use chainreg::Frame;

/// (mass, qx, qy, px, py) per body, typed a second time from the printed tables.
type Body = (f64, f64, f64, f64, f64);

fn reference_tables() -> Vec<(&'static str, f64, f64, Frame, Vec<Body>)> {
    vec![
        (
            "caledonian",
            0.1,
            1e4,
            Frame::Inertial,
            vec![
                (0.25, -10.0, 0.0, 0.0, 0.1),
                (0.25, -12.0, 0.0, 0.0, -0.05),
                (0.25, 10.0, 0.0, 0.0, -0.1),
                (0.25, 12.0, 0.0, 0.0, 0.05),
            ],
        ),
        (
            "figure-eight",
            0.1,
            1e4,
            Frame::Inertial,
            vec![
                (1.0, 0.97000436, -0.24308753, 0.46620369, 0.43236573),
                (1.0, 0.0, 0.0, -0.93240737, -0.86473146),
                (1.0, -0.97000436, 0.24308753, 0.46620369, 0.43236573),
            ],
        ),
        (
            "g4bp-equilibrium",
            0.1,
            1e6,
            Frame::RotatingBody1,
            vec![
                (0.01, 0.97966882159151279741, 6.3263871598479246128e-13, -6.3263361598479256638e-15, 0.97966882159151619201e-2),
                (0.021, 0.46367812263428759741, 0.85659418547566503871, -0.17988477894964014249e-1, 0.97372405753200600321e-2),
                (0.969, -0.20158853242517002593e-1, -0.18563960675296861284e-1, 0.17988477894362678026e-1, -0.19533928791999029945e-1),
                (1e-12, 0.76380799288046499741, -0.63263361598479246128, 6.3263361598479256638e-13, 7.6380799288046759201e-13),
            ],
        ),
        (
            "one-plus-four",
            0.01,
            1e4,
            Frame::RotatingBody1,
            vec![
                (1.0, -0.0000000143699690, 0.0000000250666972, -0.0000000250666972, -0.0000000143699690),
                (1.0e-8, -0.5053012275872134, -0.8629430112463499, 0.0000000086294301, -0.0000000050530123),
                (1.0e-8, 0.1933160775788700, -0.9811365039615660, 0.0000000098113650, 0.0000000019331608),
                (1.0e-8, 0.7489820652276899, -0.6625902287414661, 0.0000000066259023, 0.0000000074898207),
                (1.0e-8, 0.9999999856300310, 0.0000000250614611, -0.0000000000000003, 0.0000000099999999),
            ],
        ),
        (
            "f7-quasi-periodic",
            0.1,
            1e4,
            Frame::RotatingOmega1,
            vec![
                (0.97, 0.026457513110646, 0.0, 0.0, 0.0256637877173266),
                (0.02, -0.9184536694124222, 0.3273268353539883, -0.0065465367070798, -0.0183690733882485),
                (0.01, -0.7294714329078083, -0.6546536707079774, 0.0065465367070798, -0.0072947143290781),
                (2e-17, -1.55780271, 0.0, 3.292738e-19, -9.55592100000001e-18),
            ],
        ),
    ]
}

fn num(v: &toml::Value) -> f64 {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).expect("number")
}

#[test]
fn embedded_literals_match_an_independent_transcription() {
    let tables = reference_tables();
    assert_eq!(catalog_sources().len(), tables.len());
    for (src, (name, dt, tf, frame, bodies)) in catalog_sources().iter().zip(&tables) {
        let v: toml::Value = toml::from_str(src).unwrap();
        assert_eq!(v["name"].as_str(), Some(*name));
        let d = &v["defaults"];
        assert_eq!(num(&d["dt"]), *dt, "{name}");
        assert_eq!(num(&d["t_final"]), *tf, "{name}");
        assert_eq!(d["frame"].as_str().unwrap().parse::<Frame>().unwrap(), *frame, "{name}");
        let raw = v["body"].as_array().unwrap();
        assert_eq!(raw.len(), bodies.len(), "{name}");
        for (k, (b, want)) in raw.iter().zip(bodies).enumerate() {
            let got = (
                num(&b["mass"]),
                num(&b["q"][0]),
                num(&b["q"][1]),
                num(&b["p"][0]),
                num(&b["p"][1]),
            );
            assert_eq!(got, *want, "{name} body {}", k + 1);
        }
    }
}

#[test]
fn every_catalog_state_is_barycentric() {
    for sc in catalog() {
        assert!(linear_momentum(&sc.s0).max_abs() <= TOL_C, "{}", sc.name);
        assert!(center_of_mass_moment(&sc.sys, &sc.s0).max_abs() <= TOL_C, "{}", sc.name);
    }
}

#[test]
fn catalog_spot_values() {
    let c = catalog();
    let cal = c.iter().find(|s| s.name == "caledonian").unwrap();
    assert_eq!(cal.sys.masses(), &[0.25; 4]);
    assert_eq!((cal.s0.q[0].x1, cal.s0.q[0].x2), (-10.0, 0.0));
    let f8 = c.iter().find(|s| s.name == "figure-eight").unwrap();
    assert!((f8.s0.q[0].x1 - 0.97000436).abs() < 1e-8 && (f8.s0.q[0].x2 + 0.24308753).abs() < 1e-8);
}

#[test]
fn equilibrium_geometry_in_the_body1_frame() {
    let sc = catalog().into_iter().find(|s| s.name == "g4bp-equilibrium").unwrap();
    let x = rotating_frame(&sc.s0, Frame::RotatingBody1, &sc.s0).unwrap();
    assert!(x[0].x2.abs() < 1e-15 && x[0].x1 > 0.0);
    assert!((x[3].norm() - 0.991780188379501).abs() < 1e-14, "{:.13}", x[3].norm());
}

#[test]
fn scenario_files_round_trip_through_the_loader() {
    for (src, sc) in catalog_sources().iter().zip(catalog()) {
        assert_eq!(Scenario::from_toml_str(src).unwrap(), sc);
    }
    let bad = catalog_sources()[1].replace("mass = 1.0\nq = [0.0, 0.0]", "mass = -1.0\nq = [0.0, 0.0]");
    assert_ne!(bad, catalog_sources()[1]);
    assert!(Scenario::from_toml_str(&bad).is_err());
    let shifted = catalog_sources()[1].replace("q = [0.0, 0.0]", "q = [0.5, 0.0]");
    assert!(Scenario::from_toml_str(&shifted).is_err());
}
