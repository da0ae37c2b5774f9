//! Invariants of the public API over randomised inputs.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use fdlbm::experiments::shear_wave::{predicted_gamma, run_shear_wave};
use fdlbm::lattice::{from_moments, to_moments};
use fdlbm::schemes::step;
use fdlbm::vonneumann::{amplification_matrix, effective_viscosity_curve, CurveOptions};
use fdlbm::{FieldSet, MomentVector, PlaneWaveProbe, SchemeConfig, ShearWaveSpec, StencilKind, StepContext};
use proptest::prelude::*;

fn scheme(which: usize, nu: f64) -> SchemeConfig {
    match which {
        0 => SchemeConfig::mrt_for_viscosity(nu, Some(1.3)).unwrap(),
        1 => SchemeConfig::bgk(nu).unwrap(),
        2 => SchemeConfig::acm(nu).unwrap(),
        3 => SchemeConfig::fdlbm(nu, StencilKind::ThreePoint).unwrap(),
        _ => SchemeConfig::fdlbm(nu, StencilKind::FivePoint).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_step_conserves_mass_and_momentum(
        which in 0usize..5,
        nu in 0.01f64..0.15,
        amp in 1e-4f64..2e-2,
        a in 1i32..4,
        b in 0i32..4,
        u in -0.1f64..0.1,
    ) {
        let cfg = scheme(which, nu);
        let n = 20;
        let w = 2.0 * PI / n as f64;
        let fs = FieldSet::for_scheme(cfg.kind, n, n, |i, j| {
            let t = w * (a * i as i32 + b * j as i32) as f64;
            (1.0 + amp * t.sin(), u + amp * t.cos(), amp * (2.0 * t).sin())
        });
        let next = step(&fs, &cfg, &StepContext::default()).unwrap();
        prop_assert!((next.total_mass() - fs.total_mass()).abs() <= 1e-12);
        let (p, q) = (next.total_momentum(), fs.total_momentum());
        prop_assert!((p[0] - q[0]).abs() <= 1e-12 && (p[1] - q[1]).abs() <= 1e-12);
    }

    #[test]
    fn moments_round_trip(values in prop::array::uniform9(-2.0f64..2.0)) {
        let m = MomentVector::from_array(values);
        let back = to_moments(&from_moments(&m)).to_array();
        for (x, y) in back.iter().zip(values) {
            assert_relative_eq!(*x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn three_unit_eigenvalues_at_zero_wave_number(which in 0usize..5, nu in 0.01f64..0.15) {
        let z = amplification_matrix(&scheme(which, nu), &PlaneWaveProbe::new(0.0, 0.0)).unwrap().eigenvalues().unwrap();
        let unit = z.iter().filter(|z| (*z - 1.0).norm() < 1e-10).count();
        prop_assert_eq!(unit, 3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulated_decay_matches_dispersion(
        which in 0usize..5,
        nu in 0.02f64..0.1,
        a in 1i64..3,
        b in 0i64..3,
        speed in 0.0f64..0.08,
    ) {
        let spec = ShearWaveSpec { n: 24, wave: [a, b], speed, steps: 400, ..ShearWaveSpec::new(scheme(which, nu)) };
        let run = run_shear_wave(&spec).unwrap();
        let g = predicted_gamma(&spec).unwrap();
        prop_assert!((run.gamma() - g.re).abs() <= 1e-6, "{} vs {}", run.gamma(), g.re);
    }

    #[test]
    fn long_wave_viscosity_is_isotropic(which in 0usize..5, nu in 0.02f64..0.1) {
        let cfg = scheme(which, nu);
        let opts = CurveOptions { k_max: 0.5, table_samples: 0, ..Default::default() };
        let nu0: Vec<f64> = [0.0f64, 26.6, 45.0]
            .iter()
            .map(|deg| effective_viscosity_curve(&cfg, deg.to_radians(), &opts).unwrap().fit.nu0)
            .collect();
        for v in &nu0 {
            prop_assert!((v - nu0[0]).abs() <= 1e-6, "{nu0:?}");
        }
    }
}

#[test]
fn walls_keep_a_resting_disk_at_rest() {
    use fdlbm::boundaries::{classify, Geometry};
    use fdlbm::{Simulation, WallRule};
    for cfg in [scheme(0, 0.05), scheme(4, 0.05)] {
        let n = 24;
        let walls = classify(&Geometry::centered_disk(n, n, 9.5), n, n).unwrap();
        let state = FieldSet::for_scheme(cfg.kind, n, n, |_, _| (1.0, 0.0, 0.0));
        let mut sim = Simulation::new(cfg, state).unwrap().with_walls(walls.clone(), WallRule::Interpolated).unwrap();
        sim.run(50).unwrap();
        for k in 0..n * n {
            if walls.is_fluid_index(k) {
                let (rho, jx, jy) = sim.state.conserved(k);
                assert_relative_eq!(rho, 1.0, epsilon = 1e-13);
                assert!(jx.abs() < 1e-14 && jy.abs() < 1e-14);
            }
        }
    }
}
