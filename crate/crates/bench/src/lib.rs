//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use fdlbm::{FieldSet, SchemeConfig, StencilKind};

/// Scheme configurations benchmarked, with their labels.
pub fn schemes() -> Vec<(&'static str, SchemeConfig)> {
    let nu = 0.05;
    vec![
        ("mrt", SchemeConfig::mrt_for_viscosity(nu, None).expect("valid viscosity")),
        ("acm", SchemeConfig::acm(nu).expect("valid viscosity")),
        ("fd-lbm-3", SchemeConfig::fdlbm(nu, StencilKind::ThreePoint).expect("valid viscosity")),
        ("fd-lbm-5", SchemeConfig::fdlbm(nu, StencilKind::FivePoint).expect("valid viscosity")),
    ]
}

/// Periodic `n × n` state carrying a small shear wave on a mean flow.
pub fn wave_state(cfg: &SchemeConfig, n: usize) -> FieldSet {
    let k = 2.0 * PI / n as f64;
    FieldSet::for_scheme(cfg.kind, n, n, |i, j| {
        let c = (k * (3 * i + 2 * j) as f64).cos();
        (1.0, 0.05 - 2e-5 * c, 0.03 + 3e-5 * c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_finite() {
        for (_, cfg) in schemes() {
            let fs = wave_state(&cfg, 16);
            assert_eq!(fs.extents(), (16, 16));
            assert!(fs.is_finite());
        }
    }
}
