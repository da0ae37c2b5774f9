//! Quick invariant checks on small grids.

use std::f64::consts::PI;

use fdlbm::experiments::shear_wave::{predicted_gamma, run_shear_wave};
use fdlbm::lattice::{moment_matrix, Q};
use fdlbm::report::{num, Csv};
use fdlbm::schemes::step;
use fdlbm::stencil::{ddx, stencil_symbol};
use fdlbm::vonneumann::amplification_matrix;
use fdlbm::{FieldSet, PlaneWaveProbe, ScalarGrid, SchemeConfig, ShearWaveSpec, StencilKind, StepContext};

pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

fn schemes() -> fdlbm::Result<Vec<(&'static str, SchemeConfig)>> {
    Ok(vec![
        ("mrt", SchemeConfig::mrt_for_viscosity(0.02, Some(1.3))?),
        ("bgk", SchemeConfig::bgk(0.02)?),
        ("acm", SchemeConfig::acm(0.02)?),
        ("fd-lbm-3", SchemeConfig::fdlbm(0.02, StencilKind::ThreePoint)?),
        ("fd-lbm-5", SchemeConfig::fdlbm(0.02, StencilKind::FivePoint)?),
    ])
}

fn busy_state(cfg: &SchemeConfig, n: usize) -> FieldSet {
    let w = 2.0 * PI / n as f64;
    FieldSet::for_scheme(cfg.kind, n, n, |i, j| {
        let (x, y) = (w * i as f64, w * j as f64);
        (1.0 + 0.01 * (x + 2.0 * y).sin(), 0.02 * (2.0 * x).cos() + 0.01, 0.015 * (x - y).sin())
    })
}

pub fn run() -> fdlbm::Result<Vec<Check>> {
    let mut checks = Vec::new();

    let mm = moment_matrix();
    let mut id: f64 = 0.0;
    for r in 0..Q {
        for c in 0..Q {
            let s: f64 = (0..Q).map(|i| mm.m[r][i] as f64 * mm.m_inv[i][c]).sum();
            id = id.max((s - if r == c { 1.0 } else { 0.0 }).abs());
        }
    }
    checks.push(Check::new("moment matrix inverse", id, 1e-14));

    for (label, cfg) in schemes()? {
        let z = amplification_matrix(&cfg, &PlaneWaveProbe::new(0.0, 0.0))?.eigenvalues()?;
        let mut dist: Vec<f64> = z.iter().map(|z| (z - 1.0).norm()).collect();
        dist.sort_by(f64::total_cmp);
        // Exactly three conserved modes: the third is at 1, a fourth is not.
        let fourth_gap = dist.get(3).map_or(0.0, |d| (1e-6 - d).max(0.0));
        checks.push(Check::new(format!("{label} unit eigenvalues at k = 0"), dist[2].max(fourth_gap), 1e-10));

        let before = busy_state(&cfg, 24);
        let after = step(&before, &cfg, &StepContext::default())?;
        checks.push(Check::new(format!("{label} mass drift"), (after.total_mass() - before.total_mass()).abs(), 1e-12));
        let (a, b) = (after.total_momentum(), before.total_momentum());
        checks.push(Check::new(format!("{label} momentum drift"), (a[0] - b[0]).abs().max((a[1] - b[1]).abs()), 1e-12));

        let spec = ShearWaveSpec { n: 32, wave: [2, 1], speed: 0.05, steps: 600, ..ShearWaveSpec::new(cfg) };
        let sim = run_shear_wave(&spec)?;
        let disp = predicted_gamma(&spec)?;
        checks.push(Check::new(format!("{label} simulated vs dispersion decay"), (sim.gamma() - disp.re).abs(), 1e-6));

        let again = run_shear_wave(&spec)?;
        let same = sim.samples.len() == again.samples.len()
            && sim.samples.iter().zip(&again.samples).all(|(x, y)| x.modulus.to_bits() == y.modulus.to_bits());
        checks.push(Check::new(format!("{label} rerun differs"), if same { 0.0 } else { 1.0 }, 0.0));
    }

    let n = 16;
    for kind in StencilKind::ALL {
        let mut err: f64 = 0.0;
        for (a, b) in [(1, 0), (2, 3), (5, 1)] {
            let (kx, ky) = (2.0 * PI * a as f64 / n as f64, 2.0 * PI * b as f64 / n as f64);
            let re = ddx(&ScalarGrid::from_fn(n, n, |i, j| (kx * i as f64 + ky * j as f64).cos()), kind)?;
            let im = ddx(&ScalarGrid::from_fn(n, n, |i, j| (kx * i as f64 + ky * j as f64).sin()), kind)?;
            let sym = stencil_symbol(kind, kx, ky);
            for j in 0..n {
                for i in 0..n {
                    let arg = kx * i as f64 + ky * j as f64;
                    // D e^{iθ} = s e^{iθ} with s purely imaginary.
                    err = err.max((re.get(i, j) + sym.im * arg.sin()).abs());
                    err = err.max((im.get(i, j) - sym.im * arg.cos()).abs());
                }
            }
        }
        checks.push(Check::new(format!("{} stencil symbol", kind.label()), err, 1e-12));
    }
    Ok(checks)
}

pub fn to_csv(checks: &[Check]) -> Csv {
    let mut csv = Csv::new(["check", "value", "limit", "passed"]);
    for c in checks {
        csv.push([c.name.clone(), num(c.value), num(c.limit), c.passed().to_string()]);
    }
    csv
}
