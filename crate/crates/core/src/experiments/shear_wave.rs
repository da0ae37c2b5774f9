//! Decay of a small transverse wave carried by a uniform stream.

use std::f64::consts::PI;

use super::{fit_decay, DecayFit, FitWindow};
use crate::error::{Error, Result};
use crate::schemes::{FieldSet, SchemeConfig, Simulation};
use crate::vonneumann::{dispersion_modes, BranchLabel, C64};

/// Largest initial amplitude treated as linear.
pub const MAX_LINEAR_AMPLITUDE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearWaveSpec {
    /// Periodic grid of `n × n` nodes.
    pub n: usize,
    /// Wave vector in units of `2π/n`.
    pub wave: [i64; 2],
    pub amplitude: f64,
    /// Mean flow speed along the wave vector.
    pub speed: f64,
    pub scheme: SchemeConfig,
    /// Upper bound on the number of steps; the run stops earlier once the
    /// correlation drops below the fit floor.
    pub steps: usize,
    pub fit: FitWindow,
}

impl ShearWaveSpec {
    pub fn new(scheme: SchemeConfig) -> Self {
        Self { n: 191, wave: [3, 2], amplitude: 1e-5, speed: 0.0, scheme, steps: 3000, fit: FitWindow::default() }
    }

    pub fn wave_vector(&self) -> [f64; 2] {
        let k0 = 2.0 * PI / self.n as f64;
        [k0 * self.wave[0] as f64, k0 * self.wave[1] as f64]
    }

    pub fn wave_number(&self) -> f64 {
        let [kx, ky] = self.wave_vector();
        kx.hypot(ky)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::GridTooSmall { nx: self.n, ny: self.n, reason: "shear wave needs 8 nodes".into() });
        }
        if self.wave == [0, 0] {
            return Err(Error::InvalidParameter("wave vector must be non-zero".into()));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= MAX_LINEAR_AMPLITUDE) {
            return Err(Error::InvalidParameter(format!(
                "amplitude {} outside (0, {MAX_LINEAR_AMPLITUDE}]",
                self.amplitude
            )));
        }
        if !(self.speed.abs() < 0.5) {
            return Err(Error::InvalidParameter(format!("mean speed {} too large", self.speed)));
        }
        if self.steps <= self.fit.skip {
            return Err(Error::InvalidParameter("steps must exceed the fit skip".into()));
        }
        self.scheme.validate()
    }

    fn unit(&self) -> ([f64; 2], [f64; 2]) {
        let [kx, ky] = self.wave_vector();
        let k = kx.hypot(ky);
        let along = [kx / k, ky / k];
        (along, [-along[1], along[0]])
    }

    /// Mean-flow velocity vector.
    pub fn velocity(&self) -> [f64; 2] {
        let (along, _) = self.unit();
        [self.speed * along[0], self.speed * along[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSample {
    pub step: usize,
    /// Projection of the transverse velocity on the initial field.
    pub correlation: f64,
    /// Modulus of the complex Fourier amplitude relative to its start.
    pub modulus: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearWaveRun {
    pub k: f64,
    pub samples: Vec<CorrelationSample>,
    pub fit: DecayFit,
    /// Angular frequency in `A(t)/A(0) = e^{−Γt} cos(ωt)`.
    pub omega: f64,
}

impl ShearWaveRun {
    pub fn gamma(&self) -> f64 {
        self.fit.gamma
    }

    /// `Γ/k²`, the apparent viscosity.
    pub fn viscosity(&self) -> f64 {
        self.fit.gamma / (self.k * self.k)
    }
}

/// Complex amplitude of the transverse velocity at the wave vector.
fn fourier_amplitude(fs: &FieldSet, n: usize, k: [f64; 2], transverse: [f64; 2]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            let (rho, jx, jy) = fs.conserved(idx);
            let u = (jx * transverse[0] + jy * transverse[1]) / rho;
            let arg = k[0] * i as f64 + k[1] * j as f64;
            acc += C64::new(arg.cos(), -arg.sin()) * u;
        }
    }
    acc
}

pub fn run_shear_wave(spec: &ShearWaveSpec) -> Result<ShearWaveRun> {
    spec.validate()?;
    let n = spec.n;
    let k = spec.wave_vector();
    let (_, t) = spec.unit();
    let mean = spec.velocity();
    let a = spec.amplitude;
    let state = FieldSet::for_scheme(spec.scheme.kind, n, n, |i, j| {
        let c = (k[0] * i as f64 + k[1] * j as f64).cos();
        (1.0, mean[0] + a * c * t[0], mean[1] + a * c * t[1])
    });
    let mut sim = Simulation::new(spec.scheme.clone(), state)?;

    let c0 = fourier_amplitude(&sim.state, n, k, t);
    let mut samples = vec![CorrelationSample { step: 0, correlation: 1.0, modulus: 1.0, phase: 0.0 }];
    for step in 1..=spec.steps {
        sim.step()?;
        let c = fourier_amplitude(&sim.state, n, k, t) / c0;
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::Diverged { step });
        }
        let prev = samples.last().expect("initial sample").phase;
        let turn = (c.arg() - prev + PI).rem_euclid(2.0 * PI) - PI;
        samples.push(CorrelationSample { step, correlation: c.re, modulus: c.norm(), phase: prev + turn });
        if step > spec.fit.skip && c.norm() < spec.fit.floor {
            break;
        }
    }

    let times: Vec<usize> = samples.iter().map(|s| s.step).collect();
    let moduli: Vec<f64> = samples.iter().map(|s| s.modulus).collect();
    let fit = fit_decay(&times, &moduli, &spec.fit)?;
    let (x, y): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.step >= fit.window.0 && s.step <= fit.window.1)
        .map(|s| (s.step as f64, s.phase))
        .unzip();
    let (c, _) = crate::vonneumann::polyfit(&x, &y, &[0, 1])?;
    Ok(ShearWaveRun { k: spec.wave_number(), samples, fit, omega: -c[1] })
}

/// Shear-branch `γ = Γ + iω` of the analyzer at the wave vector and mean
/// flow of the spec.
pub fn predicted_gamma(spec: &ShearWaveSpec) -> Result<C64> {
    let k = spec.wave_vector();
    let phi = k[1].atan2(k[0]);
    let disp = dispersion_modes(&spec.scheme, spec.velocity(), phi, &[spec.wave_number()])?;
    disp.samples[0]
        .branch(BranchLabel::Shear)
        .map(|m| m.gamma)
        .ok_or_else(|| Error::FitFailure("no shear branch".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::RelaxationRates;

    fn small(scheme: SchemeConfig) -> ShearWaveSpec {
        ShearWaveSpec { n: 32, wave: [1, 0], steps: 600, ..ShearWaveSpec::new(scheme) }
    }

    #[test]
    fn validation() {
        let cfg = SchemeConfig::bgk(0.05).unwrap();
        assert!(ShearWaveSpec { amplitude: 1e-3, ..small(cfg.clone()) }.validate().is_err());
        assert!(ShearWaveSpec { wave: [0, 0], ..small(cfg.clone()) }.validate().is_err());
        assert!(ShearWaveSpec { n: 4, ..small(cfg.clone()) }.validate().is_err());
        assert!(small(cfg).validate().is_ok());
    }

    #[test]
    fn mrt_decay_matches_analyzer() {
        let cfg = SchemeConfig::mrt(RelaxationRates::new(1.4, 1.2, 1.1, 1.3).unwrap());
        let spec = small(cfg);
        let run = run_shear_wave(&spec).unwrap();
        let g = predicted_gamma(&spec).unwrap();
        assert!((run.gamma() - g.re).abs() < 1e-6, "{} vs {}", run.gamma(), g.re);
        assert!(run.omega.abs() < 1e-9);
    }

    #[test]
    fn advected_wave_rotates_at_k_v() {
        let cfg = SchemeConfig::fdlbm(0.05, crate::stencil::StencilKind::FivePoint).unwrap();
        let spec = ShearWaveSpec { speed: 0.1, wave: [2, 1], ..small(cfg) };
        let run = run_shear_wave(&spec).unwrap();
        let g = predicted_gamma(&spec).unwrap();
        assert!((run.gamma() - g.re).abs() < 1e-6);
        assert!((run.omega - g.im).abs() < 1e-6);
        assert!((run.omega - spec.wave_number() * 0.1).abs() < 1e-3);
    }
}
