//! Decay of creeping-flow eigenmodes inside a no-slip disk.

use std::f64::consts::PI;

use super::bessel::{bessel_j, bessel_j_prime, bessel_zero};
use super::{fit_decay, DecayFit, FitWindow};
use crate::boundaries::{classify, Geometry, NodeClassification, WallRule};
use crate::error::{Error, Result};
use crate::schemes::{FieldSet, SchemeConfig, Simulation};

/// Fewest nodes per radial oscillation of a resolvable mode.
const MIN_NODES_PER_WAVE: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StokesMode {
    /// Axisymmetric mode with radial index `l ≥ 1`.
    Singlet { l: u32 },
    /// Mode with azimuthal index `m ≥ 1` and the first radial zero.
    Doublet { m: u32 },
}

impl StokesMode {
    pub fn azimuthal(self) -> u32 {
        match self {
            StokesMode::Singlet { .. } => 0,
            StokesMode::Doublet { m } => m,
        }
    }

    /// `a` with `J_{m+1}(a) = 0`, which makes both the stream function
    /// and its radial derivative vanish on the wall.
    pub fn root(self) -> f64 {
        match self {
            StokesMode::Singlet { l } => bessel_zero(1, l),
            StokesMode::Doublet { m } => bessel_zero(m + 1, 1),
        }
    }

    pub fn label(self) -> String {
        match self {
            StokesMode::Singlet { l } => format!("singlet-{l}"),
            StokesMode::Doublet { m } => format!("doublet-{m}"),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            StokesMode::Singlet { l: 0 } | StokesMode::Doublet { m: 0 } => {
                Err(Error::InvalidParameter("mode indices start at 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StokesDiskSpec {
    pub nx: usize,
    pub ny: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub mode: StokesMode,
    pub scheme: SchemeConfig,
    /// Rule for the population schemes; the primitive schemes always
    /// extrapolate into the virtual nodes.
    pub wall_rule: WallRule,
    /// Peak of the stream function.
    pub amplitude: f64,
    pub steps: usize,
    pub fit: FitWindow,
    /// Largest tolerated fraction of kinetic energy outside the initial mode.
    pub contamination_limit: f64,
    /// Steps over which mode purity is checked.
    pub purity_steps: usize,
}

impl StokesDiskSpec {
    pub fn new(mode: StokesMode, scheme: SchemeConfig) -> Self {
        Self {
            nx: 64,
            ny: 64,
            center: [32.03, 32.07],
            radius: 29.9,
            mode,
            scheme,
            wall_rule: WallRule::Interpolated,
            amplitude: 1e-4,
            steps: 3000,
            fit: FitWindow::default(),
            contamination_limit: 0.1,
            purity_steps: 1000,
        }
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::Disk { cx: self.center[0], cy: self.center[1], radius: self.radius }
    }

    /// `Γ = ν a² / R²`.
    pub fn theory(&self) -> f64 {
        let a = self.mode.root();
        self.scheme.viscosity() * a * a / (self.radius * self.radius)
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        let a = self.mode.root();
        if 2.0 * PI * self.radius / a < MIN_NODES_PER_WAVE {
            return Err(Error::InvalidParameter(format!(
                "{} is under-resolved by a disk of radius {}",
                self.mode.label(),
                self.radius
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1e-3) {
            return Err(Error::InvalidParameter(format!("amplitude {} outside (0, 1e-3]", self.amplitude)));
        }
        if !(self.contamination_limit > 0.0 && self.contamination_limit < 1.0) {
            return Err(Error::InvalidParameter("contamination limit outside (0, 1)".into()));
        }
        if self.steps <= self.fit.skip {
            return Err(Error::InvalidParameter("steps must exceed the fit skip".into()));
        }
        self.scheme.validate()
    }

    /// `(vx, vy) = (∂ψ/∂y, −∂ψ/∂x)` of the eigen stream function
    /// `ψ = A [J_m(a r/R) − J_m(a) (r/R)^m] cos mθ`.
    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let r = dx.hypot(dy);
        if r > self.radius {
            return [0.0; 2];
        }
        let m = self.mode.azimuthal();
        let a = self.mode.root();
        let big_r = self.radius;
        let mf = m as f64;
        let jma = bessel_j(m, a);
        let s = r / big_r;
        let f = bessel_j(m, a * s) - jma * s.powi(m as i32);
        let fp = a / big_r * bessel_j_prime(m, a * s) - if m == 0 { 0.0 } else { jma * mf * s.powi(m as i32 - 1) / big_r };
        if r == 0.0 {
            return [0.0; 2];
        }
        let theta = dy.atan2(dx);
        let (c, sn) = (theta.cos(), theta.sin());
        let (cm, sm) = ((mf * theta).cos(), (mf * theta).sin());
        // ∂ψ/∂x = F' cos θ cos mθ + F m sin mθ sin θ / r, similarly for y.
        let psi_x = fp * c * cm + f * mf * sm * sn / r;
        let psi_y = fp * sn * cm - f * mf * sm * c / r;
        [self.amplitude * psi_y, -self.amplitude * psi_x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesRun {
    pub mode: StokesMode,
    /// Bessel root `a`.
    pub root: f64,
    pub theory: f64,
    pub measured: f64,
    /// `(Γ_measured − Γ_theory) / Γ_theory`.
    pub relative_error: f64,
    pub fit: DecayFit,
    /// Smallest energy fraction held by the initial mode over the purity
    /// steps.
    pub purity: f64,
    /// `(step, projection)`.
    pub projection: Vec<(usize, f64)>,
}

fn kinetic(fs: &FieldSet, walls: &NodeClassification, v0: &[[f64; 2]]) -> (f64, f64) {
    let mut dot = 0.0;
    let mut norm = 0.0;
    for (k, u0) in v0.iter().enumerate() {
        if !walls.is_fluid_index(k) {
            continue;
        }
        let (rho, jx, jy) = fs.conserved(k);
        let (u, v) = (jx / rho, jy / rho);
        dot += u * u0[0] + v * u0[1];
        norm += u * u + v * v;
    }
    (dot, norm)
}

pub fn run_stokes_disk(spec: &StokesDiskSpec) -> Result<StokesRun> {
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let walls = classify(&spec.geometry(), nx, ny)?;
    let v0: Vec<[f64; 2]> = (0..nx * ny)
        .map(|k| if walls.is_fluid_index(k) { spec.velocity((k % nx) as f64, (k / nx) as f64) } else { [0.0; 2] })
        .collect();
    let state = FieldSet::for_scheme(spec.scheme.kind, nx, ny, |i, j| {
        let [u, v] = v0[j * nx + i];
        (1.0, u, v)
    });
    let norm0: f64 = v0.iter().map(|u| u[0] * u[0] + u[1] * u[1]).sum();
    let mut sim = Simulation::new(spec.scheme.clone(), state)?.with_walls(walls.clone(), spec.wall_rule)?;

    let mut projection = vec![(0, 1.0)];
    let mut purity: f64 = 1.0;
    for step in 1..=spec.steps {
        sim.step()?;
        let (dot, norm) = kinetic(&sim.state, &walls, &v0);
        if !dot.is_finite() || !norm.is_finite() {
            return Err(Error::Diverged { step });
        }
        let p = dot / norm0;
        // Once the mode has decayed below the fit floor its share of the
        // remaining energy is no longer meaningful.
        if step <= spec.purity_steps && p >= spec.fit.floor && norm > 0.0 {
            purity = purity.min(dot * dot / (norm0 * norm));
        }
        projection.push((step, p));
        if step > spec.fit.skip && p < spec.fit.floor {
            break;
        }
    }
    if 1.0 - purity > spec.contamination_limit {
        return Err(Error::ModeContamination { residual: 1.0 - purity, limit: spec.contamination_limit });
    }
    let times: Vec<usize> = projection.iter().map(|p| p.0).collect();
    let values: Vec<f64> = projection.iter().map(|p| p.1).collect();
    let fit = fit_decay(&times, &values, &spec.fit)?;
    let theory = spec.theory();
    Ok(StokesRun {
        mode: spec.mode,
        root: spec.mode.root(),
        theory,
        measured: fit.gamma,
        relative_error: (fit.gamma - theory) / theory,
        fit,
        purity,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::StencilKind;

    fn spec(mode: StokesMode) -> StokesDiskSpec {
        StokesDiskSpec::new(mode, SchemeConfig::fdlbm(0.05, StencilKind::FivePoint).unwrap())
    }

    #[test]
    fn theory_value() {
        let s = spec(StokesMode::Singlet { l: 1 });
        assert!((s.theory() - 8.212e-4).abs() < 1e-7);
        assert!((StokesMode::Doublet { m: 2 }.root().powi(2) - 40.7065).abs() < 1e-3);
        assert!((StokesMode::Singlet { l: 6 }.root().powi(2) - 384.78189).abs() < 1e-3);
    }

    #[test]
    fn velocity_vanishes_on_the_wall_and_is_divergence_free() {
        for mode in [StokesMode::Singlet { l: 2 }, StokesMode::Doublet { m: 1 }, StokesMode::Doublet { m: 3 }] {
            let s = spec(mode);
            let [cx, cy] = s.center;
            let scale = s.velocity(cx + 10.0, cy + 3.0)[0].abs() + s.velocity(cx + 3.0, cy + 10.0)[1].abs();
            for t in 0..16 {
                let th = t as f64 * PI / 8.0 + 0.1;
                let r = s.radius * (1.0 - 1e-12);
                let v = s.velocity(cx + r * th.cos(), cy + r * th.sin());
                assert!(v[0].abs() + v[1].abs() < 1e-9 * scale, "{mode:?}");
            }
            let h = 1e-5;
            for (x, y) in [(cx + 7.3, cy - 4.1), (cx - 12.0, cy + 15.5)] {
                let div = (s.velocity(x + h, y)[0] - s.velocity(x - h, y)[0]
                    + s.velocity(x, y + h)[1]
                    - s.velocity(x, y - h)[1])
                    / (2.0 * h);
                assert!(div.abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn rejects_bad_modes() {
        assert!(spec(StokesMode::Singlet { l: 0 }).validate().is_err());
        let tiny = StokesDiskSpec { radius: 6.0, nx: 16, ny: 16, center: [8.03, 8.07], ..spec(StokesMode::Singlet { l: 6 }) };
        assert!(tiny.validate().is_err());
    }
}
